//! Traces, serial composition and annotated shield runs.

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Letter, VarSet};
use crate::automaton::SafetyAutomaton;
use crate::error::VerifyError;
use crate::mealy::MealyMachine;
use crate::shield::{OutputClass, ShieldMachine};

/// A finite sequence of `(input, output)` letters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub steps: Vec<(Letter, Letter)>,
}

impl Trace {
    pub fn new(steps: Vec<(Letter, Letter)>) -> Self {
        Trace { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Parses `input-bits | output-bits` lines. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str, inputs: &VarSet, outputs: &VarSet) -> Result<Trace, VerifyError> {
        let mut steps = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| VerifyError::TraceFormat { line: n + 1, msg };
            let (i, o) = line
                .split_once('|')
                .ok_or_else(|| err("expected `input-bits | output-bits`".into()))?;
            let i = Letter::from_bits(i, inputs.len()).map_err(|e| err(format!("inputs: {e}")))?;
            let o = Letter::from_bits(o, outputs.len()).map_err(|e| err(format!("outputs: {e}")))?;
            steps.push((i, o));
        }
        Ok(Trace { steps })
    }

    pub fn to_text(&self, inputs: &VarSet, outputs: &VarSet) -> String {
        let mut s = format!(
            "# {} | {}\n",
            inputs.names().join(" "),
            outputs.names().join(" ")
        );
        for (i, o) in &self.steps {
            s.push_str(&format!(
                "{} | {}\n",
                i.to_bits(inputs.len()),
                o.to_bits(outputs.len())
            ));
        }
        s
    }
}

/// One commanded step of an operator session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStep {
    pub input: String,
    pub output: String,
}

/// Session log written by the operator console and read by `simulate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub schema_version: u32,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub steps: Vec<SessionStep>,
}

pub const SESSION_SCHEMA_VERSION: u32 = 1;

impl SessionLog {
    pub fn from_trace(trace: &Trace, inputs: &VarSet, outputs: &VarSet) -> SessionLog {
        SessionLog {
            schema_version: SESSION_SCHEMA_VERSION,
            inputs: inputs.names().to_vec(),
            outputs: outputs.names().to_vec(),
            steps: trace
                .steps
                .iter()
                .map(|(i, o)| SessionStep {
                    input: i.to_bits(inputs.len()),
                    output: o.to_bits(outputs.len()),
                })
                .collect(),
        }
    }

    pub fn to_trace(&self, inputs: &VarSet, outputs: &VarSet) -> Result<Trace, VerifyError> {
        if self.schema_version != SESSION_SCHEMA_VERSION {
            return Err(VerifyError::TraceFormat {
                line: 0,
                msg: format!("unsupported schema version {}", self.schema_version),
            });
        }
        if self.inputs != inputs.names() || self.outputs != outputs.names() {
            return Err(VerifyError::AlphabetMismatch(format!(
                "session uses {:?} | {:?}, shield expects {:?} | {:?}",
                self.inputs,
                self.outputs,
                inputs.names(),
                outputs.names()
            )));
        }
        let mut steps = Vec::with_capacity(self.steps.len());
        for (k, s) in self.steps.iter().enumerate() {
            let err = |e: crate::error::AlphabetError| VerifyError::TraceFormat {
                line: k + 1,
                msg: e.to_string(),
            };
            steps.push((
                Letter::from_bits(&s.input, inputs.len()).map_err(err)?,
                Letter::from_bits(&s.output, outputs.len()).map_err(err)?,
            ));
        }
        Ok(Trace { steps })
    }
}

/// Reads either a text trace or a JSON session log.
pub fn read_trace(text: &str, inputs: &VarSet, outputs: &VarSet) -> Result<Trace, VerifyError> {
    if text.trim_start().starts_with('{') {
        let log: SessionLog = serde_json::from_str(text).map_err(|e| VerifyError::TraceFormat {
            line: e.line(),
            msg: e.to_string(),
        })?;
        log.to_trace(inputs, outputs)
    } else {
        Trace::parse(text, inputs, outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Innocent,
    Misstep,
    Deviation,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub input: String,
    pub design: String,
    pub shield: String,
    pub deviation: bool,
    pub wrong: bool,
    /// Recovery counter after the step.
    pub d: u8,
    pub phase: Phase,
    /// Monitor subset after the step, by specification state name.
    pub subset: Vec<String>,
    /// Shield state after the step.
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedRun {
    pub steps: Vec<StepRecord>,
}

impl AnnotatedRun {
    pub fn deviations(&self) -> usize {
        self.steps.iter().filter(|s| s.deviation).count()
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.steps.iter().map(|s| s.phase).collect()
    }

    /// Pretty JSON; the format shared with the operator console.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// Runs a shield on a design trace, starting from the shield's initial state.
pub fn run(shield: &ShieldMachine, trace: &Trace) -> AnnotatedRun {
    run_from(shield, shield.initial(), trace)
}

pub fn run_from(shield: &ShieldMachine, start: usize, trace: &Trace) -> AnnotatedRun {
    let iw = shield.design_inputs.len();
    let ow = shield.design_outputs.len();
    let mut q = start;
    let mut seen_misstep = false;
    let mut steps = Vec::with_capacity(trace.len());
    for (k, &(i, o)) in trace.steps.iter().enumerate() {
        let wrong = shield.classify(q, i, o) == OutputClass::Wrong;
        let d_before = shield.states[q].d;
        let (next, out) = shield.step(q, i, o);
        let phase = if wrong {
            seen_misstep = true;
            Phase::Misstep
        } else if d_before > 0 {
            Phase::Deviation
        } else if seen_misstep {
            Phase::Final
        } else {
            Phase::Innocent
        };
        steps.push(StepRecord {
            step: k,
            input: i.to_bits(iw),
            design: o.to_bits(ow),
            shield: out.to_bits(ow),
            deviation: out != o,
            wrong,
            d: shield.states[next].d,
            phase,
            subset: shield.subset_names(next),
            state: next,
        });
        q = next;
    }
    AnnotatedRun { steps }
}

/// Checks `innocent* (misstep deviation* final*)*`.
pub fn phases_well_formed(phases: &[Phase]) -> bool {
    let mut allowed_innocent = true;
    let mut in_final = false;
    for &p in phases {
        match p {
            Phase::Innocent if allowed_innocent => {}
            Phase::Innocent => return false,
            Phase::Misstep => {
                allowed_innocent = false;
                in_final = false;
            }
            Phase::Deviation if !allowed_innocent && !in_final => {}
            Phase::Deviation => return false,
            Phase::Final if !allowed_innocent => in_final = true,
            Phase::Final => return false,
        }
    }
    true
}

/// Serial composition: the shield reads the design's input and output and
/// replaces the output.
#[derive(Debug, Clone, Copy)]
pub struct ComposedMachine<'a> {
    pub design: &'a MealyMachine,
    pub shield: &'a ShieldMachine,
}

impl<'a> ComposedMachine<'a> {
    pub fn initial(&self) -> (usize, usize) {
        (self.design.initial, self.shield.initial())
    }

    /// `((q, s), i) -> ((q', s'), design output, shield output)`.
    pub fn step(&self, (q, s): (usize, usize), input: Letter) -> ((usize, usize), Letter, Letter) {
        let (q2, o) = self.design.step(q, input);
        let (s2, out) = self.shield.step(s, input, o);
        ((q2, s2), o, out)
    }

    pub fn outputs_for(&self, word: &[Letter]) -> Vec<Letter> {
        let mut st = self.initial();
        word.iter()
            .map(|&i| {
                let (n, _, o) = self.step(st, i);
                st = n;
                o
            })
            .collect()
    }

    /// Number of reachable `(design, shield)` pairs.
    pub fn reachable_states(&self) -> usize {
        let ns = self.shield.num_states();
        let mut seen = FixedBitSet::with_capacity(self.design.num_states() * ns);
        let (q0, s0) = self.initial();
        seen.insert(q0 * ns + s0);
        let mut stack = vec![(q0, s0)];
        while let Some(st) = stack.pop() {
            for i in self.design.inputs.letters() {
                let ((q, s), _, _) = self.step(st, i);
                if !seen.put(q * ns + s) {
                    stack.push((q, s));
                }
            }
        }
        seen.count_ones(..)
    }
}

pub fn compose<'a>(
    design: &'a MealyMachine,
    shield: &'a ShieldMachine,
) -> Result<ComposedMachine<'a>, VerifyError> {
    if design.inputs != shield.design_inputs || design.outputs != shield.design_outputs {
        return Err(VerifyError::AlphabetMismatch(format!(
            "design {:?} | {:?} vs shield {:?} | {:?}",
            design.inputs.names(),
            design.outputs.names(),
            shield.design_inputs.names(),
            shield.design_outputs.names()
        )));
    }
    Ok(ComposedMachine { design, shield })
}

/// A uniformly random complete Mealy machine.
pub fn random_mealy<R: Rng>(
    rng: &mut R,
    inputs: &VarSet,
    outputs: &VarSet,
    states: usize,
) -> MealyMachine {
    let ni = inputs.alphabet_size();
    let no = outputs.alphabet_size() as u32;
    let n = states.max(1);
    MealyMachine {
        names: (0..n).map(|k| format!("d{k}")).collect(),
        initial: 0,
        inputs: inputs.clone(),
        outputs: outputs.clone(),
        next: (0..n * ni).map(|_| rng.gen_range(0..n as u32)).collect(),
        out: (0..n * ni).map(|_| rng.gen_range(0..no)).collect(),
    }
}

/// A design that follows the specification's winning region, except that
/// each table entry is, with probability `bias`, replaced by a uniformly
/// random output. States are (believed spec state, mode) pairs.
pub fn spec_tracking_design<R: Rng>(
    rng: &mut R,
    spec: &SafetyAutomaton,
    region: &FixedBitSet,
    modes: usize,
    bias: f64,
) -> MealyMachine {
    let winning: Vec<usize> = region.ones().collect();
    let modes = modes.max(1);
    let ni = spec.num_inputs();
    let no = spec.num_outputs() as u32;
    let mut pos = vec![usize::MAX; spec.num_states()];
    for (k, &q) in winning.iter().enumerate() {
        pos[q] = k;
    }
    let n = winning.len() * modes;
    let mut next = Vec::with_capacity(n * ni);
    let mut out = Vec::with_capacity(n * ni);
    let mut names = Vec::with_capacity(n);
    for &q in &winning {
        for m in 0..modes {
            names.push(format!("{}#{m}", spec.name(q)));
            for i in spec.inputs().letters() {
                let good: Vec<u32> = spec
                    .outputs()
                    .letters()
                    .filter(|&o| region.contains(spec.succ(q, i, o)))
                    .map(|o| o.0)
                    .collect();
                let o = if good.is_empty() || rng.gen_bool(bias) {
                    rng.gen_range(0..no)
                } else {
                    *good.choose(rng).expect("nonempty")
                };
                let t = spec.succ(q, i, Letter(o));
                let believed = if region.contains(t) {
                    pos[t]
                } else {
                    rng.gen_range(0..winning.len())
                };
                next.push((believed * modes + rng.gen_range(0..modes)) as u32);
                out.push(o);
            }
        }
    }
    MealyMachine {
        names,
        initial: pos[spec.initial()] * modes,
        inputs: spec.inputs().clone(),
        outputs: spec.outputs().clone(),
        next,
        out,
    }
}

/// A random trace that stays inside the winning region, so no output in it
/// is wrong.
pub fn correct_trace<R: Rng>(
    rng: &mut R,
    spec: &SafetyAutomaton,
    region: &FixedBitSet,
    len: usize,
) -> Trace {
    let mut q = spec.initial();
    let mut steps = Vec::with_capacity(len);
    let ni = spec.num_inputs() as u32;
    for _ in 0..len {
        let i = Letter(rng.gen_range(0..ni));
        let good: Vec<Letter> = spec
            .outputs()
            .letters()
            .filter(|&o| region.contains(spec.succ(q, i, o)))
            .collect();
        let Some(&o) = good.choose(rng) else { break };
        steps.push((i, o));
        q = spec.succ(q, i, o);
    }
    Trace { steps }
}
