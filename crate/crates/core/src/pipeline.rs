//! Admissible shield synthesis.
//!
//! 1. Violation monitor: subset construction over the specification's
//!    winning region, with recovery counter `d` and auxiliary output `z`.
//! 2. Deviation monitor: remembers whether the last step deviated.
//! 3. Safety game: product of both monitors and the specification; safe iff
//!    the specification is safe and no deviation happens while `d = 0`.
//! 4. Büchi game: the safety game restricted to its most permissive winning
//!    strategy; accepting iff `d <= 1`.
//! 5. Admissible strategy: Büchi winning strategy on its winning region,
//!    cooperative Büchi strategy of the restricted game elsewhere.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;

use crate::alphabet::{Letter, VarKind, VarSet};
use crate::automaton::SafetyAutomaton;
use crate::error::SynthError;
use crate::game::{
    DeterministicStrategy, GameGraph, Rank, WinCondition, NO_MOVE,
};
use crate::mealy::MealyMachine;
use crate::par::Exec;
use crate::shield::{Mode, OutputClass, ShieldMachine, ShieldState};
use crate::solve::{self, BuchiSolution, SafetySolution};

/// A state of the violation monitor: a subset id and the counter `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonitorState {
    pub subset: u32,
    pub d: u8,
}

/// `dec(d)` after a non-violating step.
pub fn dec(d: u8, z: bool) -> u8 {
    match d {
        0 | 1 => 0,
        _ if z => 1,
        _ => 2,
    }
}

/// The violation monitor restricted to states reachable from `({q0}, 0)`.
///
/// Joint design letters are indexed as in [`Letter::join`].
#[derive(Debug, Clone)]
pub struct ViolationMonitor {
    pub spec_region: FixedBitSet,
    pub subsets: Vec<Vec<u32>>,
    pub num_joint: usize,
    input_width: usize,
    /// `subset * num_joint + joint` -> (successor subset, violation).
    pub subset_step: Vec<(u32, bool)>,
    pub states: Vec<MonitorState>,
    /// `(state * num_joint + joint) * 2 + z` -> successor state.
    pub next: Vec<u32>,
}

impl ViolationMonitor {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn subset_id(&self, members: &[u32]) -> Option<usize> {
        let mut m = members.to_vec();
        m.sort_unstable();
        m.dedup();
        self.subsets.iter().position(|s| *s == m)
    }

    /// Successor subset and violation flag for a subset and a design letter.
    pub fn step_subset(&self, subset: usize, input: Letter, output: Letter) -> (usize, bool) {
        let j = Letter::join(input, output, self.input_width).index();
        let (s, v) = self.subset_step[subset * self.num_joint + j];
        (s as usize, v)
    }

    pub fn step(&self, state: usize, input: Letter, output: Letter, z: bool) -> usize {
        let j = Letter::join(input, output, self.input_width).index();
        self.next[(state * self.num_joint + j) * 2 + z as usize] as usize
    }

    pub fn state_id(&self, subset: usize, d: u8) -> Option<usize> {
        self.states
            .iter()
            .position(|s| s.subset as usize == subset && s.d == d)
    }

    /// An output is wrong iff it leaves the winning region from every tracked state.
    pub fn classify(&self, subset: usize, input: Letter, output: Letter) -> OutputClass {
        if self.step_subset(subset, input, output).1 {
            OutputClass::Wrong
        } else {
            OutputClass::Ok
        }
    }
}

fn intern(subsets: &mut Vec<Vec<u32>>, index: &mut HashMap<Vec<u32>, u32>, s: Vec<u32>) -> u32 {
    if let Some(&id) = index.get(&s) {
        return id;
    }
    let id = subsets.len() as u32;
    index.insert(s.clone(), id);
    subsets.push(s);
    id
}

/// Builds the violation monitor for `spec` over its winning region `region`.
pub fn build_violation_monitor(
    spec: &SafetyAutomaton,
    region: &FixedBitSet,
) -> Result<ViolationMonitor, SynthError> {
    if !region.contains(spec.initial()) {
        return Err(SynthError::Unrealizable(format!(
            "initial state `{}` is outside the winning region",
            spec.name(spec.initial())
        )));
    }
    let (ni, no) = (spec.num_inputs(), spec.num_outputs());
    let nj = ni * no;
    let iw = spec.inputs().len();
    let mut subsets = Vec::new();
    let mut index = HashMap::new();
    intern(&mut subsets, &mut index, vec![spec.initial() as u32]);
    let mut subset_step: Vec<(u32, bool)> = Vec::new();
    let mut k = 0;
    while k < subsets.len() {
        let members = subsets[k].clone();
        for j in 0..nj as u32 {
            let (i, o) = Letter(j).split(iw);
            let mut kept: Vec<u32> = members
                .iter()
                .map(|&q| spec.succ(q as usize, i, o) as u32)
                .filter(|&t| region.contains(t as usize))
                .collect();
            let violation = kept.is_empty();
            if violation {
                for &q in &members {
                    for alt in spec.outputs().letters() {
                        let t = spec.succ(q as usize, i, alt);
                        if region.contains(t) {
                            kept.push(t as u32);
                        }
                    }
                }
                if kept.is_empty() {
                    return Err(SynthError::Internal(format!(
                        "no winning successor from monitor subset {members:?}"
                    )));
                }
            }
            kept.sort_unstable();
            kept.dedup();
            let id = intern(&mut subsets, &mut index, kept);
            subset_step.push((id, violation));
        }
        k += 1;
    }

    let mut states = vec![MonitorState { subset: 0, d: 0 }];
    let mut state_index: HashMap<MonitorState, u32> = HashMap::new();
    state_index.insert(states[0], 0);
    let mut next = Vec::new();
    let mut k = 0;
    while k < states.len() {
        let MonitorState { subset, d } = states[k];
        for j in 0..nj {
            let (s2, violation) = subset_step[subset as usize * nj + j];
            for z in [false, true] {
                let d2 = if violation { 2 } else { dec(d, z) };
                let st = MonitorState { subset: s2, d: d2 };
                let id = *state_index.entry(st).or_insert_with(|| {
                    states.push(st);
                    (states.len() - 1) as u32
                });
                next.push(id);
            }
        }
        k += 1;
    }
    Ok(ViolationMonitor {
        spec_region: region.clone(),
        subsets,
        num_joint: nj,
        input_width: iw,
        subset_step,
        states,
        next,
    })
}

/// State of the deviation monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviationState {
    T0,
    T1,
}

/// Two-state automaton over (design output, shield output) pairs.
#[derive(Debug, Clone)]
pub struct DeviationMonitor {
    pub outputs: VarSet,
}

impl DeviationMonitor {
    pub fn initial(&self) -> DeviationState {
        DeviationState::T0
    }

    pub fn step(&self, _t: DeviationState, design: Letter, shield: Letter) -> DeviationState {
        if design == shield {
            DeviationState::T0
        } else {
            DeviationState::T1
        }
    }
}

pub fn build_deviation_monitor(outputs: &VarSet) -> DeviationMonitor {
    DeviationMonitor {
        outputs: outputs.clone(),
    }
}

/// What a product game state stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductLabel {
    pub monitor: u32,
    pub deviation: DeviationState,
    pub spec_state: u32,
}

/// A game over `U × T × Q` together with the meaning of each state.
#[derive(Debug, Clone)]
pub struct ProductGame {
    pub game: GameGraph,
    pub labels: Vec<ProductLabel>,
}

impl ProductGame {
    pub fn d(&self, monitor: &ViolationMonitor, g: usize) -> u8 {
        monitor.states[self.labels[g].monitor as usize].d
    }
}

/// Variable sets of the shield games: inputs are the design's inputs and
/// outputs, outputs are the corrected outputs plus `z`.
pub fn shield_alphabets(spec: &SafetyAutomaton) -> Result<(VarSet, VarSet), SynthError> {
    let inputs = spec
        .inputs()
        .concat(&spec.outputs().with_kind(VarKind::Input))?;
    let z = inputs.fresh_name("z");
    let z = spec.outputs().fresh_name(&z);
    let outputs = VarSet::new(
        VarKind::Output,
        spec.outputs().names().iter().cloned().chain([z]),
    )?;
    Ok((inputs, outputs))
}

fn label_name(spec: &SafetyAutomaton, u: &ViolationMonitor, l: ProductLabel) -> String {
    let ms = u.states[l.monitor as usize];
    let subset: Vec<&str> = u.subsets[ms.subset as usize]
        .iter()
        .map(|&q| spec.name(q as usize))
        .collect();
    let t = match l.deviation {
        DeviationState::T0 => "t0",
        DeviationState::T1 => "t1",
    };
    format!(
        "{{{}}}/{}/{}/{}",
        subset.join(","),
        ms.d,
        t,
        spec.name(l.spec_state as usize)
    )
}

/// Synchronous product `U × T × φ` as a safety game, restricted to states
/// reachable from `(u0, t0, q0)`.
pub fn build_safety_game(
    u: &ViolationMonitor,
    t: &DeviationMonitor,
    spec: &SafetyAutomaton,
    exec: Exec,
) -> Result<ProductGame, SynthError> {
    let (inputs, outputs) = shield_alphabets(spec)?;
    let nj = u.num_joint;
    let no = spec.num_outputs();
    let ns = outputs.alphabet_size();
    let iw = spec.inputs().len();
    let ow = spec.outputs().len();

    let initial = ProductLabel {
        monitor: u.initial() as u32,
        deviation: t.initial(),
        spec_state: spec.initial() as u32,
    };
    let mut labels = vec![initial];
    let mut index: HashMap<ProductLabel, u32> = HashMap::new();
    index.insert(initial, 0);
    let mut succ: Vec<u32> = Vec::new();
    let mut frontier = 0..1usize;
    while !frontier.is_empty() {
        let rows: Vec<Vec<ProductLabel>> = {
            let labels = &labels;
            exec.map_range(frontier.len(), |k| {
                let l = labels[frontier.start + k];
                let mut row = Vec::with_capacity(nj * ns);
                for j in 0..nj as u32 {
                    let (i, o) = Letter(j).split(iw);
                    for s in 0..ns as u32 {
                        let shield_out = Letter(s & ((1 << ow) - 1));
                        let z = Letter(s).bit(ow);
                        let monitor = u.step(l.monitor as usize, i, o, z) as u32;
                        let deviation = t.step(l.deviation, o, shield_out);
                        let spec_state = spec.succ(l.spec_state as usize, i, shield_out) as u32;
                        row.push(ProductLabel {
                            monitor,
                            deviation,
                            spec_state,
                        });
                    }
                }
                debug_assert!(no <= ns);
                row
            })
        };
        let end = labels.len();
        for row in rows {
            for l in row {
                let id = *index.entry(l).or_insert_with(|| {
                    labels.push(l);
                    (labels.len() - 1) as u32
                });
                succ.push(id);
            }
        }
        frontier = end..labels.len();
    }

    let mut safe = FixedBitSet::with_capacity(labels.len());
    for (g, l) in labels.iter().enumerate() {
        let d = u.states[l.monitor as usize].d;
        let ok = spec.is_safe(l.spec_state as usize)
            && (d != 0 || l.deviation == DeviationState::T0);
        safe.set(g, ok);
    }
    let names = labels.iter().map(|&l| label_name(spec, u, l)).collect();
    Ok(ProductGame {
        game: GameGraph {
            names,
            initial: 0,
            inputs,
            outputs,
            succ,
            condition: WinCondition::Safety(safe),
        },
        labels,
    })
}

/// A Büchi game derived from the safety game, plus the map back to it.
#[derive(Debug, Clone)]
pub struct BuchiProduct {
    pub product: ProductGame,
    /// Büchi state -> safety-game state.
    pub origin: Vec<u32>,
}

/// Restricts the safety game to its winning region and permissive strategy;
/// accepting states are those with `d <= 1`.
pub fn build_buchi_game(
    gs: &ProductGame,
    u: &ViolationMonitor,
    solution: &SafetySolution,
) -> Result<BuchiProduct, SynthError> {
    let game = &gs.game;
    if !solution.region.contains(game.initial) {
        return Err(SynthError::Unrealizable(
            "initial state of the safety game is losing".into(),
        ));
    }
    let origin: Vec<u32> = solution.region.ones().map(|g| g as u32).collect();
    let mut remap = vec![NO_MOVE; game.num_states()];
    for (new, &old) in origin.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    let (ni, no) = (game.num_inputs(), game.num_outputs());
    let mut succ = Vec::with_capacity(origin.len() * ni * no);
    let mut accepting = FixedBitSet::with_capacity(origin.len());
    for (new, &old) in origin.iter().enumerate() {
        let old = old as usize;
        for i in 0..ni {
            for o in 0..no {
                let idx = game.index(old, i, o);
                if solution.strategy.allowed.contains(idx) {
                    succ.push(remap[game.succ[idx] as usize]);
                } else {
                    succ.push(NO_MOVE);
                }
            }
        }
        accepting.set(new, gs.d(u, old) <= 1);
    }
    let labels = origin.iter().map(|&g| gs.labels[g as usize]).collect();
    let names = origin
        .iter()
        .map(|&g| game.names[g as usize].clone())
        .collect();
    Ok(BuchiProduct {
        product: ProductGame {
            game: GameGraph {
                names,
                initial: remap[game.initial] as usize,
                inputs: game.inputs.clone(),
                outputs: game.outputs.clone(),
                succ,
                condition: WinCondition::Buchi(accepting),
            },
            labels,
        },
        origin,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SynthOptions {
    pub exec: Exec,
    /// Keep the auxiliary `z` output in the shield machine.
    pub keep_z: bool,
}

#[derive(Debug, Clone)]
pub struct SynthStats {
    pub spec_states: usize,
    pub input_vars: usize,
    pub output_vars: usize,
    pub monitor_subsets: usize,
    pub monitor_states: usize,
    pub safety_game_states: usize,
    pub buchi_game_states: usize,
    pub buchi_winning_states: usize,
    pub shield_states: usize,
    /// `(2·2^|Q| + |Q|)·2·|Q|`, saturating.
    pub state_bound: u128,
    /// Worst finite recovery rank at states entered by a violation.
    pub l: Option<u32>,
    pub elapsed: Duration,
}

/// Every intermediate artifact of a synthesis run.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub spec: SafetyAutomaton,
    pub spec_region: FixedBitSet,
    pub monitor: ViolationMonitor,
    pub deviation: DeviationMonitor,
    pub safety_game: ProductGame,
    pub safety: SafetySolution,
    pub buchi_game: BuchiProduct,
    pub buchi: BuchiSolution,
    /// Büchi game with moves outside the winning strategy removed on its region.
    pub restricted: GameGraph,
    pub cooperative: BuchiSolution,
    /// The admissible strategy on the Büchi game.
    pub strategy: DeterministicStrategy,
    /// Büchi-game state of each shield state.
    pub shield_origin: Vec<u32>,
    pub shield: ShieldMachine,
    pub stats: SynthStats,
}

/// `(2·2^n + n)·2·n`, saturating at `u128::MAX`.
pub fn state_bound(n: usize) -> u128 {
    if n >= 120 {
        return u128::MAX;
    }
    let n = n as u128;
    (2 * (1u128 << n) + n)
        .saturating_mul(2)
        .saturating_mul(n)
}

pub fn synthesize(spec: &SafetyAutomaton) -> Result<Synthesis, SynthError> {
    synthesize_with(spec, &SynthOptions::default())
}

pub fn synthesize_with(spec: &SafetyAutomaton, opts: &SynthOptions) -> Result<Synthesis, SynthError> {
    let start = Instant::now();
    let exec = opts.exec;

    let spec_game = GameGraph::from_automaton(spec);
    let spec_region = solve::solve_safety_with(&spec_game, exec)?.region;
    let monitor = build_violation_monitor(spec, &spec_region)?;
    let deviation = build_deviation_monitor(spec.outputs());
    let safety_game = build_safety_game(&monitor, &deviation, spec, exec)?;

    let bound = state_bound(spec.num_states());
    if safety_game.game.num_states() as u128 > bound {
        return Err(SynthError::Internal(format!(
            "safety game has {} states, above the bound {bound}",
            safety_game.game.num_states()
        )));
    }

    let safety = solve::solve_safety_with(&safety_game.game, exec)?;
    let buchi_game = build_buchi_game(&safety_game, &monitor, &safety)?;
    let gb = &buchi_game.product.game;
    let buchi = solve::solve_buchi_with(gb, exec)?;
    let restricted = solve::restrict(gb, &buchi.strategy, &buchi.region)?;
    let cooperative = solve::solve_cooperative_with(&restricted, exec)?;

    let (ni, no) = (gb.num_inputs(), gb.num_outputs());
    let mut strategy = DeterministicStrategy::undefined(gb.num_states(), ni);
    for g in 0..gb.num_states() {
        for i in 0..ni {
            let choice = if buchi.region.contains(g) {
                buchi.strategy.get(g, i)
            } else {
                cooperative.strategy.get(g, i)
            };
            let o = match choice {
                Some(o) => o.index(),
                None => (0..no)
                    .find(|&o| restricted.step(g, i, o).is_some())
                    .ok_or_else(|| {
                        SynthError::Internal(format!(
                            "no permitted output at `{}` for input {i}",
                            gb.names[g]
                        ))
                    })?,
            };
            strategy.set(g, i, Some(o));
        }
    }

    let (shield, shield_origin) =
        extract_shield(spec, &monitor, &buchi_game, &buchi, &cooperative, &strategy, opts.keep_z)?;

    let stats = SynthStats {
        spec_states: spec.num_states(),
        input_vars: spec.inputs().len(),
        output_vars: spec.outputs().len(),
        monitor_subsets: monitor.subsets.len(),
        monitor_states: monitor.num_states(),
        safety_game_states: safety_game.game.num_states(),
        buchi_game_states: gb.num_states(),
        buchi_winning_states: buchi.region.count_ones(..),
        shield_states: shield.num_states(),
        state_bound: bound,
        l: shield.worst_entry_rank(),
        elapsed: start.elapsed(),
    };
    Ok(Synthesis {
        spec: spec.clone(),
        spec_region,
        monitor,
        deviation,
        safety_game,
        safety,
        buchi_game,
        buchi,
        restricted,
        cooperative,
        strategy,
        shield_origin,
        shield,
        stats,
    })
}

fn extract_shield(
    spec: &SafetyAutomaton,
    monitor: &ViolationMonitor,
    gb: &BuchiProduct,
    buchi: &BuchiSolution,
    coop: &BuchiSolution,
    strategy: &DeterministicStrategy,
    keep_z: bool,
) -> Result<(ShieldMachine, Vec<u32>), SynthError> {
    let game = &gb.product.game;
    let ni = game.num_inputs();
    let ow = spec.outputs().len();
    let out_mask = (1u32 << ow) - 1;

    let mut order = vec![game.initial as u32];
    let mut id = vec![NO_MOVE; game.num_states()];
    id[game.initial] = 0;
    let mut next = Vec::new();
    let mut out = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let g = order[k] as usize;
        for i in 0..ni {
            let o = strategy.get(g, i).expect("total strategy").index();
            let t = game.step(g, i, o).ok_or_else(|| {
                SynthError::Internal(format!("strategy picks a removed move at `{}`", game.names[g]))
            })?;
            if id[t] == NO_MOVE {
                id[t] = order.len() as u32;
                order.push(t as u32);
            }
            next.push(id[t]);
            out.push(if keep_z { o as u32 } else { o as u32 & out_mask });
        }
        k += 1;
    }

    let mut wrong = FixedBitSet::with_capacity(order.len() * ni);
    let mut states = Vec::with_capacity(order.len());
    for (s, &g) in order.iter().enumerate() {
        let g = g as usize;
        let label = gb.product.labels[g];
        let ms = monitor.states[label.monitor as usize];
        for j in 0..ni {
            let (_, violation) = monitor.subset_step[ms.subset as usize * monitor.num_joint + j];
            wrong.set(s * ni + j, violation);
        }
        let (rank, mode) = if buchi.region.contains(g) {
            (buchi.ranks.get(g), Mode::Adversarial)
        } else {
            (coop.ranks.get(g), Mode::CooperativeOnly)
        };
        states.push(ShieldState {
            name: game.names[g].clone(),
            rank,
            mode,
            d: ms.d,
            deviated: label.deviation == DeviationState::T1,
            spec_state: label.spec_state,
            subset: monitor.subsets[ms.subset as usize].clone(),
        });
    }
    let outputs = if keep_z {
        game.outputs.clone()
    } else {
        spec.outputs().clone()
    };
    let machine = MealyMachine {
        names: states.iter().map(|s| s.name.clone()).collect(),
        initial: 0,
        inputs: game.inputs.clone(),
        outputs,
        next,
        out,
    };
    let shield = ShieldMachine {
        design_inputs: spec.inputs().clone(),
        design_outputs: spec.outputs().clone(),
        spec_state_names: spec.names().to_vec(),
        machine,
        states,
        wrong,
        keeps_z: keep_z,
    };
    Ok((shield, order))
}

/// Rank of a Büchi-game state under the admissible strategy's annotation.
pub fn annotated_rank(s: &Synthesis, g: usize) -> (Rank, Mode) {
    if s.buchi.region.contains(g) {
        (s.buchi.ranks.get(g), Mode::Adversarial)
    } else {
        (s.cooperative.ranks.get(g), Mode::CooperativeOnly)
    }
}
