//! Property checkers for synthesized shields.
//!
//! Recovery bounds are computed by exact fixpoints over the finite shield
//! machine rather than by depth-bounded search, so no cap applies.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::alphabet::Letter;
use crate::automaton::SafetyAutomaton;
use crate::error::VerifyError;
use crate::game::{GameGraph, Rank};
use crate::mealy::MealyMachine;
use crate::par::Exec;
use crate::pipeline::Synthesis;
use crate::shield::{Mode, ShieldMachine};
use crate::sim::{self, Trace};
use crate::solve;

/// A composed run that reaches an unsafe specification state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub inputs: Vec<Letter>,
    pub design_outputs: Vec<Letter>,
    pub shield_outputs: Vec<Letter>,
}

impl Counterexample {
    /// The trace the composed system actually produced.
    pub fn shielded_trace(&self) -> Trace {
        Trace::new(self.inputs.iter().copied().zip(self.shield_outputs.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrectnessReport {
    pub designs: usize,
    pub failures: Vec<(usize, Counterexample)>,
}

impl CorrectnessReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Breadth-first search of `design × shield × spec` for an unsafe spec
/// state. The returned counterexample is a shortest one.
pub fn check_design(
    shield: &ShieldMachine,
    spec: &SafetyAutomaton,
    design: &MealyMachine,
) -> Result<Option<Counterexample>, VerifyError> {
    let c = sim::compose(design, shield)?;
    if spec.inputs() != &shield.design_inputs || spec.outputs() != &shield.design_outputs {
        return Err(VerifyError::AlphabetMismatch(
            "shield and specification alphabets differ".into(),
        ));
    }
    let (ns, nq) = (shield.num_states(), spec.num_states());
    let key = |d: usize, s: usize, q: usize| (d * ns + s) * nq + q;
    let total = design.num_states() * ns * nq;
    let mut parent: Vec<(u32, u32)> = vec![(u32::MAX, 0); total];
    let mut seen = FixedBitSet::with_capacity(total);
    let (d0, s0) = c.initial();
    let q0 = spec.initial();
    let start = key(d0, s0, q0);
    seen.insert(start);
    let mut queue = VecDeque::from([(d0, s0, q0)]);
    let mut bad = None;
    if !spec.is_safe(q0) {
        bad = Some(start);
    }
    'bfs: while let Some((d, s, q)) = queue.pop_front() {
        if bad.is_some() {
            break;
        }
        for i in design.inputs.letters() {
            let ((d2, s2), _, out) = c.step((d, s), i);
            let q2 = spec.succ(q, i, out);
            let k = key(d2, s2, q2);
            if !seen.put(k) {
                parent[k] = (key(d, s, q) as u32, i.0);
                if !spec.is_safe(q2) {
                    bad = Some(k);
                    break 'bfs;
                }
                queue.push_back((d2, s2, q2));
            }
        }
    }
    let Some(mut k) = bad else { return Ok(None) };
    let mut inputs = Vec::new();
    while k != start {
        let (p, i) = parent[k];
        inputs.push(Letter(i));
        k = p as usize;
    }
    inputs.reverse();
    let mut st = c.initial();
    let (mut design_outputs, mut shield_outputs) = (Vec::new(), Vec::new());
    for &i in &inputs {
        let (n, o, out) = c.step(st, i);
        design_outputs.push(o);
        shield_outputs.push(out);
        st = n;
    }
    Ok(Some(Counterexample {
        inputs,
        design_outputs,
        shield_outputs,
    }))
}

/// Model-checks the composition with every design, in parallel across designs.
pub fn check_correctness(
    shield: &ShieldMachine,
    spec: &SafetyAutomaton,
    designs: &[MealyMachine],
    exec: Exec,
) -> Result<CorrectnessReport, VerifyError> {
    let results = exec.map_slice(designs, |d| check_design(shield, spec, d));
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        if let Some(cex) = r? {
            failures.push((k, cex));
        }
    }
    Ok(CorrectnessReport {
        designs: designs.len(),
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinDeviationReport {
    pub traces: usize,
    pub steps: usize,
    /// `(trace, step)` of the first unnecessary deviation.
    pub first_failure: Option<(usize, usize)>,
}

impl MinDeviationReport {
    pub fn ok(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Returns the first step at which `trace` leaves the specification's
/// winning region.
fn first_wrong_step(spec: &SafetyAutomaton, region: &FixedBitSet, trace: &Trace) -> Option<usize> {
    let mut q = spec.initial();
    for (k, &(i, o)) in trace.steps.iter().enumerate() {
        q = spec.succ(q, i, o);
        if !region.contains(q) {
            return Some(k);
        }
    }
    None
}

/// On correct traces the shield must copy the design's outputs.
pub fn check_min_deviation(
    shield: &ShieldMachine,
    spec: &SafetyAutomaton,
    traces: &[Trace],
    exec: Exec,
) -> Result<MinDeviationReport, VerifyError> {
    let region = solve::solve_safety(&GameGraph::from_automaton(spec))
        .map_err(|e| VerifyError::AlphabetMismatch(e.to_string()))?
        .region;
    for t in traces {
        if let Some(step) = first_wrong_step(spec, &region, t) {
            return Err(VerifyError::WrongTrace { step });
        }
    }
    let firsts = exec.map_slice(traces, |t| {
        let mut q = shield.initial();
        for (k, &(i, o)) in t.steps.iter().enumerate() {
            let (n, out) = shield.step(q, i, o);
            if out != o {
                return Some(k);
            }
            q = n;
        }
        None
    });
    let first_failure = firsts
        .iter()
        .enumerate()
        .find_map(|(t, f)| f.map(|step| (t, step)));
    Ok(MinDeviationReport {
        traces: traces.len(),
        steps: traces.iter().map(Trace::len).sum(),
        first_failure,
    })
}

/// Which design letters the recovery analysis quantifies over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignBehavior {
    /// Every joint letter, including further wrong outputs.
    Any,
    /// Only letters that are not wrong at the current shield state.
    Correct,
}

/// A one-player graph: from each state the design picks an allowed letter.
struct Induced {
    n: usize,
    letters: usize,
    succ: Vec<u32>,
    allowed: FixedBitSet,
    accepting: FixedBitSet,
}

impl Induced {
    fn from_shield(shield: &ShieldMachine, behavior: DesignBehavior) -> Induced {
        let n = shield.num_states();
        let nj = shield.num_joint();
        let mut allowed = FixedBitSet::with_capacity(n * nj);
        allowed.insert_range(..);
        if behavior == DesignBehavior::Correct {
            allowed.difference_with(&shield.wrong);
        }
        let mut accepting = FixedBitSet::with_capacity(n);
        for (g, st) in shield.states.iter().enumerate() {
            accepting.set(g, st.d <= 1);
        }
        Induced {
            n,
            letters: nj,
            succ: shield.machine.next.clone(),
            allowed,
            accepting,
        }
    }

    fn from_game(game: &GameGraph, choice: &[u32]) -> Induced {
        let n = game.num_states();
        let ni = game.num_inputs();
        let succ = (0..n * ni)
            .map(|k| {
                let (g, i) = (k / ni, k % ni);
                game.step(g, i, choice[k] as usize).expect("choice is a present move") as u32
            })
            .collect();
        let mut allowed = FixedBitSet::with_capacity(n * ni);
        allowed.insert_range(..);
        Induced {
            n,
            letters: ni,
            succ,
            allowed,
            accepting: game.condition.set().clone(),
        }
    }

    fn moves(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.letters)
            .filter(move |&j| self.allowed.contains(g * self.letters + j))
            .map(move |j| self.succ[g * self.letters + j] as usize)
    }

    fn all_into(&self, g: usize, set: &FixedBitSet) -> bool {
        self.moves(g).all(|t| set.contains(t))
    }

    /// Layers of states from which every design choice reaches `target`.
    fn forced_ranks(&self, target: &FixedBitSet) -> Vec<Rank> {
        let mut rank = vec![Rank::INF; self.n];
        let mut attr = target.clone();
        for g in target.ones() {
            rank[g] = Rank::finite(0);
        }
        let mut layer = 0;
        loop {
            layer += 1;
            let add: Vec<usize> = (0..self.n)
                .filter(|&g| !attr.contains(g) && self.all_into(g, &attr))
                .collect();
            if add.is_empty() {
                return rank;
            }
            for g in add {
                attr.insert(g);
                rank[g] = Rank::finite(layer);
            }
        }
    }

    /// Steps until the design can no longer avoid the accepting states for
    /// good, whatever it does.
    fn adversarial(&self) -> Vec<Rank> {
        let mut core = self.accepting.clone();
        loop {
            let ranks = self.forced_ranks(&core);
            let mut attr = FixedBitSet::with_capacity(self.n);
            for (g, r) in ranks.iter().enumerate() {
                attr.set(g, r.is_finite());
            }
            let mut next = FixedBitSet::with_capacity(self.n);
            for g in core.ones().filter(|&g| self.all_into(g, &attr)) {
                next.insert(g);
            }
            if next == core {
                return ranks;
            }
            core = next;
        }
    }

    /// Shortest distance to an accepting state from which accepting states
    /// can be revisited forever with the design's help.
    fn cooperative(&self) -> Vec<Rank> {
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); self.n];
        for g in 0..self.n {
            for t in self.moves(g) {
                preds[t].push(g as u32);
            }
        }
        let mut core = self.accepting.clone();
        loop {
            // States with a path of length >= 1 into the core.
            let mut reach = FixedBitSet::with_capacity(self.n);
            let mut stack: Vec<usize> = core.ones().collect();
            while let Some(t) = stack.pop() {
                for &p in &preds[t] {
                    if !reach.put(p as usize) {
                        stack.push(p as usize);
                    }
                }
            }
            let mut next = core.clone();
            next.intersect_with(&reach);
            if next == core {
                break;
            }
            core = next;
        }
        let mut rank = vec![Rank::INF; self.n];
        let mut queue = VecDeque::new();
        for g in core.ones() {
            rank[g] = Rank::finite(0);
            queue.push_back(g);
        }
        while let Some(t) = queue.pop_front() {
            let r = rank[t].succ();
            for &p in &preds[t] {
                if !rank[p as usize].is_finite() {
                    rank[p as usize] = r;
                    queue.push_back(p as usize);
                }
            }
        }
        rank
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateRecovery {
    pub annotated: Rank,
    pub mode: Mode,
    /// Steps within which the deviation phase ends for every design behavior.
    pub adversarial: Rank,
    /// Steps within which the deviation phase can end with the design's help.
    pub cooperative: Rank,
    /// Annotation agrees with the bound its mode promises.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoveryReport {
    pub behavior: DesignBehavior,
    pub states: Vec<StateRecovery>,
}

impl RecoveryReport {
    pub fn ok(&self) -> bool {
        self.states.iter().all(|s| s.consistent)
    }
}

/// Recovery bounds of every shield state, cross-checked with the annotations.
///
/// With [`DesignBehavior::Any`] the annotation must match exactly: the
/// adversarial bound for adversarial states, the cooperative bound (and an
/// infinite adversarial one) for cooperative-only states. With
/// [`DesignBehavior::Correct`] the bounds can only improve, so the check is
/// that they do not exceed the annotation.
pub fn check_recovery(shield: &ShieldMachine, behavior: DesignBehavior) -> RecoveryReport {
    let g = Induced::from_shield(shield, behavior);
    let adv = g.adversarial();
    let coop = g.cooperative();
    let states = shield
        .states
        .iter()
        .enumerate()
        .map(|(k, st)| {
            let consistent = match (behavior, st.mode) {
                (DesignBehavior::Any, Mode::Adversarial) => adv[k] == st.rank,
                (DesignBehavior::Any, Mode::CooperativeOnly) => {
                    !adv[k].is_finite() && coop[k] == st.rank
                }
                (DesignBehavior::Correct, Mode::Adversarial) => adv[k] <= st.rank,
                (DesignBehavior::Correct, Mode::CooperativeOnly) => coop[k] <= st.rank,
            };
            StateRecovery {
                annotated: st.rank,
                mode: st.mode,
                adversarial: adv[k],
                cooperative: coop[k],
                consistent,
            }
        })
        .collect();
    RecoveryReport { behavior, states }
}

/// An output that would have recovered faster than the shield's choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Improvement {
    pub state: String,
    pub input: u32,
    pub chosen: u32,
    pub alternative: u32,
    pub mode: Mode,
    pub current: Rank,
    pub better: Rank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmissibilityReport {
    pub states: usize,
    pub alternatives: usize,
    pub improvements: Vec<Improvement>,
}

impl AdmissibilityReport {
    pub fn ok(&self) -> bool {
        self.improvements.is_empty()
    }
}

/// For every reachable shield state and input, tries every other output
/// the safety strategy permits and recomputes the recovery bound that the
/// state's mode promises. Any strict improvement is reported.
pub fn check_admissibility(s: &Synthesis, exec: Exec) -> AdmissibilityReport {
    let game = &s.buchi_game.product.game;
    let ni = game.num_inputs();
    let no = game.num_outputs();
    let base: Vec<u32> = s.strategy.choice.clone();
    let score = |choice: &[u32], g: usize, mode: Mode| -> Rank {
        let ind = Induced::from_game(game, choice);
        match mode {
            Mode::Adversarial => ind.adversarial()[g],
            Mode::CooperativeOnly => ind.cooperative()[g],
        }
    };
    let base_ind = Induced::from_game(game, &base);
    let (base_adv, base_coop) = (base_ind.adversarial(), base_ind.cooperative());

    let mut tasks = Vec::new();
    for &g in &s.shield_origin {
        let g = g as usize;
        for i in 0..ni {
            let chosen = base[g * ni + i];
            for o in 0..no as u32 {
                if o != chosen && game.step(g, i, o as usize).is_some() {
                    tasks.push((g, i, o));
                }
            }
        }
    }
    let found = exec.map_slice(&tasks, |&(g, i, o)| {
        let mode = if s.buchi.region.contains(g) {
            Mode::Adversarial
        } else {
            Mode::CooperativeOnly
        };
        let current = match mode {
            Mode::Adversarial => base_adv[g],
            Mode::CooperativeOnly => base_coop[g],
        };
        let mut choice = base.clone();
        choice[g * ni + i] = o;
        let better = score(&choice, g, mode);
        (better < current).then(|| Improvement {
            state: game.names[g].clone(),
            input: i as u32,
            chosen: base[g * ni + i],
            alternative: o,
            mode,
            current,
            better,
        })
    });
    AdmissibilityReport {
        states: s.shield_origin.len(),
        alternatives: tasks.len(),
        improvements: found.into_iter().flatten().collect(),
    }
}

/// Shortest sequence of design letters (joint input/output) that leads the
/// shield from `from` into a state satisfying `goal`.
pub fn find_path(
    shield: &ShieldMachine,
    from: usize,
    behavior: DesignBehavior,
    goal: impl Fn(usize) -> bool,
) -> Option<Vec<(Letter, Letter)>> {
    let nj = shield.num_joint();
    let iw = shield.design_inputs.len();
    let mut parent: Vec<Option<(usize, u32)>> = vec![None; shield.num_states()];
    let mut seen = FixedBitSet::with_capacity(shield.num_states());
    seen.insert(from);
    let mut queue = VecDeque::from([from]);
    let mut hit = if goal(from) { Some(from) } else { None };
    while let (None, Some(g)) = (hit, queue.pop_front()) {
        for j in 0..nj {
            if behavior == DesignBehavior::Correct && shield.wrong.contains(g * nj + j) {
                continue;
            }
            let t = shield.machine.next[g * nj + j] as usize;
            if !seen.put(t) {
                parent[t] = Some((g, j as u32));
                if goal(t) {
                    hit = Some(t);
                    break;
                }
                queue.push_back(t);
            }
        }
    }
    let mut k = hit?;
    let mut path = Vec::new();
    while let Some((p, j)) = parent[k] {
        path.push(Letter(j).split(iw));
        k = p;
    }
    path.reverse();
    Some(path)
}
