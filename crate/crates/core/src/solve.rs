//! Explicit-state solvers for safety, Büchi, and cooperative Büchi games.
//!
//! All fixpoints are computed layer by layer. Each layer only re-examines the
//! predecessors of states that changed in the previous layer, and the
//! per-candidate predicate evaluation is the data-parallel step.

use fixedbitset::FixedBitSet;

use crate::error::SolveError;
use crate::game::{
    AttractorMode, DeterministicStrategy, GameGraph, PermissiveStrategy, Rank, RankAnnotation,
    Strategy, WinCondition, NO_MOVE,
};
use crate::par::Exec;

#[derive(Debug, Clone)]
pub struct SafetySolution {
    pub region: FixedBitSet,
    pub strategy: PermissiveStrategy,
}

#[derive(Debug, Clone)]
pub struct BuchiSolution {
    pub region: FixedBitSet,
    /// The recurrent accepting core (rank-0 states).
    pub core: FixedBitSet,
    pub strategy: DeterministicStrategy,
    pub ranks: RankAnnotation,
}

/// System can force the next state into `set` whatever the input.
#[inline]
pub(crate) fn forces_into(game: &GameGraph, g: usize, set: &FixedBitSet) -> bool {
    (0..game.num_inputs()).all(|i| game.moves(g, i).any(|(_, t)| set.contains(t)))
}

/// Some input/output pair moves into `set`.
#[inline]
pub(crate) fn may_reach(game: &GameGraph, g: usize, set: &FixedBitSet) -> bool {
    (0..game.num_inputs()).any(|i| game.moves(g, i).any(|(_, t)| set.contains(t)))
}

fn pre(game: &GameGraph, mode: AttractorMode, g: usize, set: &FixedBitSet) -> bool {
    match mode {
        AttractorMode::Adversarial => forces_into(game, g, set),
        AttractorMode::Cooperative => may_reach(game, g, set),
    }
}

/// Distinct predecessors of `changed` that satisfy `keep`.
fn candidates(
    preds: &[Vec<u32>],
    changed: &[usize],
    keep: impl Fn(usize) -> bool,
    scratch: &mut FixedBitSet,
) -> Vec<usize> {
    let mut out = Vec::new();
    for &t in changed {
        for &p in &preds[t] {
            let p = p as usize;
            if keep(p) && !scratch.put(p) {
                out.push(p);
            }
        }
    }
    for &p in &out {
        scratch.set(p, false);
    }
    out.sort_unstable();
    out
}

pub fn solve_safety(game: &GameGraph) -> Result<SafetySolution, SolveError> {
    solve_safety_with(game, Exec::default())
}

/// Greatest fixpoint of `safe ∩ CPre(W)` plus the most permissive strategy.
pub fn solve_safety_with(game: &GameGraph, exec: Exec) -> Result<SafetySolution, SolveError> {
    let WinCondition::Safety(safe) = &game.condition else {
        return Err(SolveError::WrongCondition { expected: "safety" });
    };
    let n = game.num_states();
    let mut region = safe.clone();
    region.grow(n);
    let preds = game.predecessors();
    let mut scratch = FixedBitSet::with_capacity(n);
    let mut todo: Vec<usize> = region.ones().collect();
    while !todo.is_empty() {
        let removed: Vec<usize> = {
            let region = &region;
            exec.map_slice(&todo, |&g| (!forces_into(game, g, region)).then_some(g))
                .into_iter()
                .flatten()
                .collect()
        };
        for &g in &removed {
            region.set(g, false);
        }
        todo = candidates(&preds, &removed, |p| region.contains(p), &mut scratch);
    }

    let (ni, no) = (game.num_inputs(), game.num_outputs());
    let mut allowed = FixedBitSet::with_capacity(game.succ.len());
    for g in region.ones() {
        for i in 0..ni {
            for (o, t) in game.moves(g, i) {
                if region.contains(t) {
                    allowed.insert(game.index(g, i, o));
                }
            }
        }
    }
    Ok(SafetySolution {
        strategy: PermissiveStrategy {
            domain: region.clone(),
            allowed,
            num_inputs: ni,
            num_outputs: no,
        },
        region,
    })
}

pub fn attractor(game: &GameGraph, target: &FixedBitSet, mode: AttractorMode) -> RankAnnotation {
    attractor_with(game, target, mode, Exec::default())
}

/// Layered attractor; `rank(g)` is the layer in which `g` joins.
pub fn attractor_with(
    game: &GameGraph,
    target: &FixedBitSet,
    mode: AttractorMode,
    exec: Exec,
) -> RankAnnotation {
    let preds = game.predecessors();
    attractor_inner(game, &preds, target, mode, exec)
}

fn attractor_inner(
    game: &GameGraph,
    preds: &[Vec<u32>],
    target: &FixedBitSet,
    mode: AttractorMode,
    exec: Exec,
) -> RankAnnotation {
    let n = game.num_states();
    let mut rank = vec![Rank::INF; n];
    let mut attr = FixedBitSet::with_capacity(n);
    let mut frontier: Vec<usize> = target.ones().filter(|&g| g < n).collect();
    for &g in &frontier {
        rank[g] = Rank::finite(0);
        attr.insert(g);
    }
    let mut scratch = FixedBitSet::with_capacity(n);
    let mut layer = 0u32;
    while !frontier.is_empty() {
        layer += 1;
        let cands = candidates(preds, &frontier, |p| !attr.contains(p), &mut scratch);
        let added: Vec<usize> = {
            let attr = &attr;
            exec.map_slice(&cands, |&g| pre(game, mode, g, attr).then_some(g))
                .into_iter()
                .flatten()
                .collect()
        };
        for &g in &added {
            attr.insert(g);
            rank[g] = Rank::finite(layer);
        }
        frontier = added;
    }
    RankAnnotation { rank }
}

/// Output minimizing the successor rank under input `i`; ties go to the
/// smallest output letter. Only successors with finite rank qualify.
fn best_output(game: &GameGraph, ranks: &RankAnnotation, g: usize, i: usize) -> Option<usize> {
    game.moves(g, i)
        .filter(|&(_, t)| ranks.get(t).is_finite())
        .min_by_key(|&(o, t)| (ranks.get(t), o))
        .map(|(o, _)| o)
}

fn recurrence(
    game: &GameGraph,
    mode: AttractorMode,
    exec: Exec,
) -> Result<(FixedBitSet, RankAnnotation), SolveError> {
    let WinCondition::Buchi(accepting) = &game.condition else {
        return Err(SolveError::WrongCondition { expected: "Büchi" });
    };
    let n = game.num_states();
    let preds = game.predecessors();
    let mut core = accepting.clone();
    core.grow(n);
    loop {
        let ranks = attractor_inner(game, &preds, &core, mode, exec);
        let attr = ranks.finite_set();
        let members: Vec<usize> = core.ones().collect();
        let keep = exec.map_slice(&members, |&g| pre(game, mode, g, &attr));
        let mut next = FixedBitSet::with_capacity(n);
        for (&g, k) in members.iter().zip(keep) {
            next.set(g, k);
        }
        if next == core {
            return Ok((core, ranks));
        }
        core = next;
    }
}

pub fn solve_buchi(game: &GameGraph) -> Result<BuchiSolution, SolveError> {
    solve_buchi_with(game, Exec::default())
}

/// Classical recurrence construction: shrink the accepting set to the states
/// that can force a return into their own attractor, then take the attractor.
/// The strategy always moves to a successor of least rank.
pub fn solve_buchi_with(game: &GameGraph, exec: Exec) -> Result<BuchiSolution, SolveError> {
    let (core, ranks) = recurrence(game, AttractorMode::Adversarial, exec)?;
    let region = ranks.finite_set();
    let mut strategy = DeterministicStrategy::undefined(game.num_states(), game.num_inputs());
    for g in region.ones() {
        for i in 0..game.num_inputs() {
            strategy.set(g, i, best_output(game, &ranks, g, i));
        }
    }
    Ok(BuchiSolution {
        region,
        core,
        strategy,
        ranks,
    })
}

pub fn solve_cooperative(game: &GameGraph) -> Result<BuchiSolution, SolveError> {
    solve_cooperative_with(game, Exec::default())
}

/// Büchi solving with inputs treated as controllable. The strategy is
/// defined on region states for every input that admits a move back into
/// the region.
pub fn solve_cooperative_with(game: &GameGraph, exec: Exec) -> Result<BuchiSolution, SolveError> {
    let (core, ranks) = recurrence(game, AttractorMode::Cooperative, exec)?;
    let region = ranks.finite_set();
    let mut strategy = DeterministicStrategy::undefined(game.num_states(), game.num_inputs());
    for g in region.ones() {
        for i in 0..game.num_inputs() {
            strategy.set(g, i, best_output(game, &ranks, g, i));
        }
    }
    Ok(BuchiSolution {
        region,
        core,
        strategy,
        ranks,
    })
}

/// Removes every move out of `region` that `strategy` does not allow.
pub fn restrict<S: Strategy>(
    game: &GameGraph,
    strategy: &S,
    region: &FixedBitSet,
) -> Result<GameGraph, SolveError> {
    let mut out = game.clone();
    for g in region.ones() {
        for i in 0..game.num_inputs() {
            if !strategy.is_defined(g, i) {
                return Err(SolveError::StrategyUndefined {
                    state: game.names[g].clone(),
                    input: i as u32,
                });
            }
            for o in 0..game.num_outputs() {
                if !strategy.allows(g, i, o) {
                    let idx = game.index(g, i, o);
                    out.succ[idx] = NO_MOVE;
                }
            }
        }
    }
    Ok(out)
}
