//! `shieldc`: synthesize, simulate and export admissible shields.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shield_core::bundle::{Provenance, ShieldBundle, SpecSource};
use shield_core::error::SynthError;
use shield_core::random::random_word;
use shield_core::sim::{self, Trace};
use shield_core::uav::{self, Property, PropertyParams, WaypointMap};
use shield_core::{dot, parse_spec, to_dsl, verilog, Exec, Mode, SynthOptions};

#[derive(Parser)]
#[command(name = "shieldc", version, about = "Admissible shield synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a shield from one or more safety specifications.
    Synth(SynthArgs),
    /// Run a shield on a trace and print the annotated run as JSON.
    Simulate(SimulateArgs),
    /// Generate a mission property specification from a waypoint map.
    GenProp(GenPropArgs),
    /// Convert a shield bundle to DOT, Verilog or normalized JSON.
    Export(ExportArgs),
    /// Summarize a shield bundle.
    Info(InfoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Artifact {
    U,
    T,
    Gs,
    Gb,
    Shield,
}

impl Artifact {
    fn stem(self) -> &'static str {
        match self {
            Artifact::U => "u",
            Artifact::T => "t",
            Artifact::Gs => "gs",
            Artifact::Gb => "gb",
            Artifact::Shield => "shield",
        }
    }
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Specification files; several are combined by product.
    #[arg(required = true)]
    specs: Vec<PathBuf>,
    /// Bundle output path.
    #[arg(short, long, default_value = "shield.json")]
    output: PathBuf,
    /// Print |Q|, |I|, |O|, l and wall time.
    #[arg(long)]
    stats: bool,
    /// Export a pipeline artifact as DOT (repeatable).
    #[arg(long, value_enum)]
    emit: Vec<Artifact>,
    /// Directory for emitted DOT files (default: next to the bundle; `-` prints).
    #[arg(long)]
    emit_dir: Option<PathBuf>,
    /// Keep the auxiliary z output in the shield.
    #[arg(long)]
    keep_z: bool,
    /// Waypoint map recorded in the bundle for display.
    #[arg(long)]
    map: Option<String>,
    /// Disable data-parallel solving.
    #[arg(long)]
    sequential: bool,
}

#[derive(clap::Args)]
struct SimulateArgs {
    bundle: PathBuf,
    /// Trace file (`inputs | outputs` lines) or session log JSON.
    trace: Option<PathBuf>,
    /// Generate a uniformly random trace from this seed instead.
    #[arg(long)]
    seed: Option<u64>,
    /// Length of generated traces.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GenPropArgs {
    /// Map JSON file or builtin name (map8, map15, map31).
    #[arg(long)]
    map: String,
    /// Properties: 1, 2, 3, 4, 5a, 5b, 5 (both UGS) or 6; comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    prop: Vec<String>,
    #[arg(long)]
    roz_limit: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    ugs_deadline: Option<usize>,
    #[arg(long)]
    home_deadline: Option<usize>,
    /// Do not restart a running UGS countdown on a repeated report.
    #[arg(long)]
    no_restart: bool,
    /// Restart a running return-home countdown on a repeated signal.
    #[arg(long)]
    home_restart: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Verilog,
    Json,
}

#[derive(clap::Args)]
struct ExportArgs {
    bundle: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    format: Format,
    /// Verilog module name.
    #[arg(long, default_value = "shield")]
    module: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct InfoArgs {
    bundle: PathBuf,
}

/// Failure with its exit status.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn input(msg: impl std::fmt::Display) -> Fail {
        Fail {
            code: 1,
            msg: msg.to_string(),
        }
    }
}

type Res<T> = Result<T, Fail>;

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Res<()> {
    fs::write(path, text).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Res<()> {
    match output {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_bundle(path: &Path) -> Res<shield_core::ShieldMachine> {
    let text = read(path)?;
    ShieldBundle::from_json(&text)
        .and_then(|b| b.decode())
        .map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn load_map(arg: &str) -> Res<WaypointMap> {
    if let Some(m) = uav::builtin_map(arg) {
        return Ok(m);
    }
    WaypointMap::from_json(&read(Path::new(arg))?).map_err(|e| Fail::input(format!("{arg}: {e}")))
}

fn synth(a: SynthArgs) -> Res<()> {
    let mut specs = Vec::new();
    let mut sources = Vec::new();
    for path in &a.specs {
        let text = read(path)?;
        let spec = parse_spec(&text).map_err(|e| Fail::input(format!("{}:{e}", path.display())))?;
        specs.push(spec);
        sources.push(SpecSource::new(path.display().to_string(), &text));
    }
    let spec = if specs.len() == 1 {
        specs.pop().unwrap()
    } else {
        uav::product_aligned(&specs).map_err(Fail::input)?
    };
    if let Some(m) = &a.map {
        load_map(m)?;
    }
    let opts = SynthOptions {
        exec: if a.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        },
        keep_z: a.keep_z,
    };
    let syn = shield_core::synthesize_with(&spec, &opts).map_err(|e| match e {
        SynthError::Unrealizable(_) => Fail {
            code: 2,
            msg: format!("{}: {e}", a.specs[0].display()),
        },
        e => Fail {
            code: 3,
            msg: e.to_string(),
        },
    })?;
    let provenance = Provenance {
        specs: sources,
        keep_z: a.keep_z,
        map: a.map.clone(),
    };
    write(&a.output, &ShieldBundle::encode(&syn.shield, provenance).to_json())?;

    let dir = a.emit_dir.clone().unwrap_or_else(|| {
        a.output
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    });
    for &art in &a.emit {
        let text = match art {
            Artifact::U => dot::monitor(&syn.monitor, &syn.spec),
            Artifact::T => dot::deviation(),
            Artifact::Gs => dot::game(&syn.safety_game.game, None, None),
            Artifact::Gb => dot::game(
                &syn.buchi_game.product.game,
                Some(&syn.buchi.ranks),
                Some(&syn.strategy),
            ),
            Artifact::Shield => dot::shield(&syn.shield),
        };
        if dir.as_os_str() == "-" {
            print!("{text}");
        } else {
            write(&dir.join(format!("{}.dot", art.stem())), &text)?;
        }
    }

    if a.stats {
        let s = &syn.stats;
        let l = s.l.map_or("-".to_string(), |l| l.to_string());
        println!("{:>6} {:>4} {:>4} {:>4} {:>10}", "|Q|", "|I|", "|O|", "l", "time[s]");
        println!(
            "{:>6} {:>4} {:>4} {:>4} {:>10.3}",
            s.spec_states,
            s.input_vars,
            s.output_vars,
            l,
            s.elapsed.as_secs_f64()
        );
        println!("monitor_subsets {}", s.monitor_subsets);
        println!("monitor_states {}", s.monitor_states);
        println!("safety_game_states {}", s.safety_game_states);
        println!("buchi_game_states {}", s.buchi_game_states);
        println!("buchi_winning_states {}", s.buchi_winning_states);
        println!("shield_states {}", s.shield_states);
        println!("state_bound {}", s.state_bound);
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Res<()> {
    let shield = load_bundle(&a.bundle)?;
    let (ins, outs) = (&shield.design_inputs, &shield.design_outputs);
    let trace = match (&a.trace, a.seed) {
        (Some(p), _) => sim::read_trace(&read(p)?, ins, outs)
            .map_err(|e| Fail::input(format!("{}: {e}", p.display())))?,
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let i = random_word(&mut rng, ins, a.steps);
            let o = random_word(&mut rng, outs, a.steps);
            Trace::new(i.into_iter().zip(o).collect())
        }
        (None, None) => return Err(Fail::input("give a trace file or --seed")),
    };
    emit(a.output.as_deref(), &sim::run(&shield, &trace).to_json())
}

fn gen_prop(a: GenPropArgs) -> Res<()> {
    let map = load_map(&a.map)?;
    let mut params = PropertyParams::default();
    if let Some(v) = a.roz_limit {
        params.roz_limit = v;
    }
    if let Some(v) = a.window {
        params.window = v;
    }
    if let Some(v) = a.ugs_deadline {
        params.ugs_deadline = v;
    }
    if let Some(v) = a.home_deadline {
        params.home_deadline = v;
    }
    params.ugs_restart = !a.no_restart;
    params.home_restart = a.home_restart;
    let mut props = Vec::new();
    for p in &a.prop {
        if p == "5" {
            props.extend([Property::Ugs1, Property::Ugs2]);
        } else {
            props.push(p.parse::<Property>().map_err(Fail::input)?);
        }
    }
    let spec = uav::mission_spec(&map, &props, &params).map_err(Fail::input)?;
    let labels: Vec<&str> = props.iter().map(|p| p.label()).collect();
    let text = format!(
        "# mission properties {} on {}\n{}",
        labels.join(","),
        map.name,
        to_dsl(&spec)
    );
    emit(a.output.as_deref(), &text)
}

fn export(a: ExportArgs) -> Res<()> {
    let text = read(&a.bundle)?;
    let bundle =
        ShieldBundle::from_json(&text).map_err(|e| Fail::input(format!("{}: {e}", a.bundle.display())))?;
    let shield = bundle
        .decode()
        .map_err(|e| Fail::input(format!("{}: {e}", a.bundle.display())))?;
    let out = match a.format {
        Format::Dot => dot::shield(&shield),
        Format::Verilog => verilog::export(&shield, &a.module),
        Format::Json => bundle.to_json(),
    };
    emit(a.output.as_deref(), &out)
}

fn info(a: InfoArgs) -> Res<()> {
    let text = read(&a.bundle)?;
    let bundle =
        ShieldBundle::from_json(&text).map_err(|e| Fail::input(format!("{}: {e}", a.bundle.display())))?;
    let shield = bundle
        .decode()
        .map_err(|e| Fail::input(format!("{}: {e}", a.bundle.display())))?;
    let adversarial = shield
        .states
        .iter()
        .filter(|s| s.mode == Mode::Adversarial)
        .count();
    println!("schema_version {}", bundle.schema_version);
    println!("tool_version {}", bundle.tool_version);
    println!("inputs {}", bundle.inputs.join(" "));
    println!("outputs {}", bundle.outputs.join(" "));
    println!("states {}", shield.num_states());
    println!("adversarial_states {adversarial}");
    println!("cooperative_states {}", shield.num_states() - adversarial);
    println!(
        "worst_entry_rank {}",
        shield
            .worst_entry_rank()
            .map_or("-".to_string(), |r| r.to_string())
    );
    for s in &bundle.provenance.specs {
        println!("spec {} {}", s.sha256, s.path);
    }
    if let Some(m) = &bundle.provenance.map {
        println!("map {m}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Simulate(a) => simulate(a),
        Command::GenProp(a) => gen_prop(a),
        Command::Export(a) => export(a),
        Command::Info(a) => info(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("shieldc: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
