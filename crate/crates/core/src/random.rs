//! Random games and specifications for property tests and benchmarks.

use fixedbitset::FixedBitSet;
use rand::Rng;

use crate::alphabet::{Letter, VarKind, VarSet};
use crate::automaton::SafetyAutomaton;
use crate::game::{GameGraph, WinCondition};
use crate::solve;

fn vars(kind: VarKind, prefix: &str, n: usize) -> VarSet {
    VarSet::new(kind, (0..n).map(|k| format!("{prefix}{k}"))).expect("fresh names")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    Safety,
    Buchi,
}

/// A complete game with uniformly random successors and a random target set
/// containing each state with probability `density`.
pub fn random_game<R: Rng>(
    rng: &mut R,
    states: usize,
    input_bits: usize,
    output_bits: usize,
    kind: ConditionKind,
    density: f64,
) -> GameGraph {
    let n = states.max(1);
    let inputs = vars(VarKind::Input, "i", input_bits);
    let outputs = vars(VarKind::Output, "o", output_bits);
    let moves = n * inputs.alphabet_size() * outputs.alphabet_size();
    let succ = (0..moves).map(|_| rng.gen_range(0..n as u32)).collect();
    let mut set = FixedBitSet::with_capacity(n);
    for g in 0..n {
        set.set(g, rng.gen_bool(density));
    }
    GameGraph {
        names: (0..n).map(|g| format!("g{g}")).collect(),
        initial: 0,
        inputs,
        outputs,
        succ,
        condition: match kind {
            ConditionKind::Safety => WinCondition::Safety(set),
            ConditionKind::Buchi => WinCondition::Buchi(set),
        },
    }
}

/// A random specification with `safe_states` safe states plus an error
/// sink. Each (state, input) keeps at least one safe output with
/// probability `keep`; other edges go to a random safe state with
/// probability `density` and to the sink otherwise. Retries until the
/// initial state is winning.
pub fn random_spec<R: Rng>(
    rng: &mut R,
    safe_states: usize,
    input_bits: usize,
    output_bits: usize,
    density: f64,
    keep: f64,
) -> SafetyAutomaton {
    let n = safe_states.max(1);
    let inputs = vars(VarKind::Input, "i", input_bits);
    let outputs = vars(VarKind::Output, "o", output_bits);
    let (ni, no) = (inputs.alphabet_size(), outputs.alphabet_size());
    let sink = n as u32;
    loop {
        let mut delta = Vec::with_capacity((n + 1) * ni * no);
        for _ in 0..n {
            for _ in 0..ni {
                let forced = rng.gen_bool(keep).then(|| rng.gen_range(0..no));
                for o in 0..no {
                    if Some(o) == forced || rng.gen_bool(density) {
                        delta.push(rng.gen_range(0..n as u32));
                    } else {
                        delta.push(sink);
                    }
                }
            }
        }
        delta.extend(std::iter::repeat_n(sink, ni * no));
        let mut safe = FixedBitSet::with_capacity(n + 1);
        safe.insert_range(..n);
        let names = (0..n)
            .map(|q| format!("q{q}"))
            .chain(["error".to_string()])
            .collect();
        let a = SafetyAutomaton::new(names, 0, inputs.clone(), outputs.clone(), delta, safe)
            .expect("well-formed by construction");
        let region = solve::solve_safety(&GameGraph::from_automaton(&a))
            .expect("safety condition")
            .region;
        if region.contains(0) {
            return a.prune();
        }
    }
}

/// A uniformly random word over `vars`.
pub fn random_word<R: Rng>(rng: &mut R, vars: &VarSet, len: usize) -> Vec<Letter> {
    let n = vars.alphabet_size() as u32;
    (0..len).map(|_| Letter(rng.gen_range(0..n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_specs_are_realizable_and_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let a = random_spec(&mut rng, 5, 1, 2, 0.4, 0.8);
            assert!(a.num_states() <= 6);
            let w = solve::solve_safety(&GameGraph::from_automaton(&a)).unwrap().region;
            assert!(w.contains(a.initial()));
        }
    }

    #[test]
    fn random_games_are_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = random_game(&mut rng, 8, 1, 1, ConditionKind::Buchi, 0.3);
        assert!(g.is_complete());
        assert_eq!(g.succ.len(), 8 * 2 * 2);
    }
}
