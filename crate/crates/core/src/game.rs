//! Explicit two-player alternating game graphs and strategy types.
//!
//! In every state the environment picks an input letter, then the system
//! picks an output letter. Moves are stored densely at
//! `(g * |Σ_I| + i) * |Σ_O| + o`; a removed move holds [`NO_MOVE`].

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::alphabet::{Letter, VarSet};
use crate::automaton::SafetyAutomaton;

/// Marker for a move that has been removed by a strategy restriction.
pub const NO_MOVE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WinCondition {
    /// Stay inside the set forever.
    Safety(FixedBitSet),
    /// Visit the set infinitely often.
    Buchi(FixedBitSet),
}

impl WinCondition {
    pub fn set(&self) -> &FixedBitSet {
        match self {
            WinCondition::Safety(s) | WinCondition::Buchi(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameGraph {
    pub names: Vec<String>,
    pub initial: usize,
    pub inputs: VarSet,
    pub outputs: VarSet,
    pub succ: Vec<u32>,
    pub condition: WinCondition,
}

impl GameGraph {
    /// The safety game of a specification automaton: the system must keep
    /// the run inside the safe states.
    pub fn from_automaton(spec: &SafetyAutomaton) -> GameGraph {
        GameGraph {
            names: spec.names().to_vec(),
            initial: spec.initial(),
            inputs: spec.inputs().clone(),
            outputs: spec.outputs().clone(),
            succ: spec.delta().to_vec(),
            condition: WinCondition::Safety(spec.safe().clone()),
        }
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.alphabet_size()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.alphabet_size()
    }

    #[inline]
    pub fn index(&self, g: usize, i: usize, o: usize) -> usize {
        (g * self.num_inputs() + i) * self.num_outputs() + o
    }

    /// Successor of a move, `None` if the move was removed.
    #[inline]
    pub fn step(&self, g: usize, i: usize, o: usize) -> Option<usize> {
        match self.succ[self.index(g, i, o)] {
            NO_MOVE => None,
            t => Some(t as usize),
        }
    }

    /// Available `(output, successor)` pairs for state `g` under input `i`.
    pub fn moves(&self, g: usize, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let base = self.index(g, i, 0);
        self.succ[base..base + self.num_outputs()]
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != NO_MOVE)
            .map(|(o, &t)| (o, t as usize))
    }

    pub fn num_moves(&self) -> usize {
        self.succ.iter().filter(|&&t| t != NO_MOVE).count()
    }

    /// True if every move is present.
    pub fn is_complete(&self) -> bool {
        self.succ.iter().all(|&t| t != NO_MOVE)
    }

    /// Reverse adjacency over all present moves: `preds[t]` lists every
    /// source state with some move into `t` (with repetitions removed).
    pub fn predecessors(&self) -> Vec<Vec<u32>> {
        let n = self.num_states();
        let row = self.num_inputs() * self.num_outputs();
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for g in 0..n {
            for &t in &self.succ[g * row..(g + 1) * row] {
                if t != NO_MOVE && preds[t as usize].last() != Some(&(g as u32)) {
                    preds[t as usize].push(g as u32);
                }
            }
        }
        preds
    }
}

/// A natural number or infinity; ordered with infinity largest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank(u32);

impl Rank {
    pub const INF: Rank = Rank(u32::MAX);

    pub fn finite(n: u32) -> Rank {
        assert!(n != u32::MAX, "rank overflow");
        Rank(n)
    }

    pub fn is_finite(self) -> bool {
        self.0 != u32::MAX
    }

    pub fn value(self) -> Option<u32> {
        self.is_finite().then_some(self.0)
    }

    /// `self + 1`, saturating at infinity.
    pub fn succ(self) -> Rank {
        if self.is_finite() {
            Rank(self.0 + 1)
        } else {
            self
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("inf"),
        }
    }
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.value() {
            Some(v) => s.serialize_u32(v),
            None => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u32),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) if v != u32::MAX => Ok(Rank(v)),
            Raw::S(s) if s == "inf" => Ok(Rank::INF),
            _ => Err(serde::de::Error::custom("expected a natural number or \"inf\"")),
        }
    }
}

/// Per-state attractor numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAnnotation {
    pub rank: Vec<Rank>,
}

impl RankAnnotation {
    pub fn get(&self, g: usize) -> Rank {
        self.rank[g]
    }

    /// States with a finite rank.
    pub fn finite_set(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.rank.len());
        for (g, r) in self.rank.iter().enumerate() {
            s.set(g, r.is_finite());
        }
        s
    }
}

/// Which player choices an attractor may rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorMode {
    /// The system forces the target for every environment input.
    Adversarial,
    /// Some joint input/output path reaches the target.
    Cooperative,
}

/// Marker for an undefined strategy entry.
pub const NO_CHOICE: u32 = u32::MAX;

/// A nondeterministic strategy: allowed outputs per `(state, input)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermissiveStrategy {
    pub domain: FixedBitSet,
    /// Indexed like [`GameGraph::succ`].
    pub allowed: FixedBitSet,
    pub num_inputs: usize,
    pub num_outputs: usize,
}

impl PermissiveStrategy {
    pub fn allows(&self, g: usize, i: usize, o: usize) -> bool {
        self.allowed
            .contains((g * self.num_inputs + i) * self.num_outputs + o)
    }

    pub fn allowed_outputs(&self, g: usize, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_outputs).filter(move |&o| self.allows(g, i, o))
    }
}

/// A memoryless deterministic strategy `(state, input) -> output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    /// Indexed by `state * |Σ_I| + input`; [`NO_CHOICE`] where undefined.
    pub choice: Vec<u32>,
    pub num_inputs: usize,
}

impl DeterministicStrategy {
    pub fn undefined(num_states: usize, num_inputs: usize) -> Self {
        DeterministicStrategy {
            choice: vec![NO_CHOICE; num_states * num_inputs],
            num_inputs,
        }
    }

    pub fn get(&self, g: usize, i: usize) -> Option<Letter> {
        match self.choice[g * self.num_inputs + i] {
            NO_CHOICE => None,
            o => Some(Letter(o)),
        }
    }

    pub fn set(&mut self, g: usize, i: usize, o: Option<usize>) {
        self.choice[g * self.num_inputs + i] = o.map_or(NO_CHOICE, |o| o as u32);
    }
}

/// Common view over strategy kinds for [`crate::solve::restrict`].
pub trait Strategy {
    fn is_defined(&self, g: usize, i: usize) -> bool;
    fn allows(&self, g: usize, i: usize, o: usize) -> bool;
}

impl Strategy for PermissiveStrategy {
    fn is_defined(&self, g: usize, i: usize) -> bool {
        self.domain.contains(g) && self.allowed_outputs(g, i).next().is_some()
    }

    fn allows(&self, g: usize, i: usize, o: usize) -> bool {
        PermissiveStrategy::allows(self, g, i, o)
    }
}

impl Strategy for DeterministicStrategy {
    fn is_defined(&self, g: usize, i: usize) -> bool {
        self.get(g, i).is_some()
    }

    fn allows(&self, g: usize, i: usize, o: usize) -> bool {
        self.get(g, i) == Some(Letter(o as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_ordering_and_json() {
        assert!(Rank::finite(3) < Rank::INF);
        assert_eq!(Rank::INF.succ(), Rank::INF);
        assert_eq!(serde_json::to_string(&Rank::INF).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Rank::finite(2)).unwrap(), "2");
        let r: Rank = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(r, Rank::INF);
        let r: Rank = serde_json::from_str("7").unwrap();
        assert_eq!(r, Rank::finite(7));
        assert!(serde_json::from_str::<Rank>("\"infinity\"").is_err());
    }
}
