//! The synthesized shield as a standalone Mealy machine.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Letter, VarSet};
use crate::game::Rank;
use crate::mealy::MealyMachine;

/// How a shield state recovers from a deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Recovery within `rank` steps is guaranteed for every design behavior.
    Adversarial,
    /// Recovery within `rank` steps needs the design's help.
    CooperativeOnly,
}

/// Classification of a design output relative to the monitor subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputClass {
    Ok,
    Wrong,
}

/// Bookkeeping carried by every shield state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShieldState {
    pub name: String,
    pub rank: Rank,
    pub mode: Mode,
    /// Recovery counter of the violation monitor.
    pub d: u8,
    /// Whether the previous step deviated from the design.
    pub deviated: bool,
    /// Specification state reached by the shield's own outputs.
    pub spec_state: u32,
    /// Specification states the design may be in (monitor subset).
    pub subset: Vec<u32>,
}

/// A deterministic shield reading `(σ_I, σ_O)` from the design and emitting
/// a corrected `σ_O`.
///
/// The underlying machine's input letters are joint letters over
/// `design_inputs ++ design_outputs` (see [`Letter::join`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShieldMachine {
    pub design_inputs: VarSet,
    pub design_outputs: VarSet,
    pub spec_state_names: Vec<String>,
    pub machine: MealyMachine,
    pub states: Vec<ShieldState>,
    /// `state * |joint| + joint` is set when that design letter is wrong.
    pub wrong: FixedBitSet,
    /// Whether machine outputs carry the auxiliary `z` bit as their top bit.
    pub keeps_z: bool,
}

impl ShieldMachine {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.machine.initial
    }

    pub fn num_joint(&self) -> usize {
        self.machine.num_inputs()
    }

    pub fn joint(&self, input: Letter, design_out: Letter) -> Letter {
        Letter::join(input, design_out, self.design_inputs.len())
    }

    /// One step; the returned output never includes `z`.
    pub fn step(&self, state: usize, input: Letter, design_out: Letter) -> (usize, Letter) {
        let (next, out) = self.machine.step(state, self.joint(input, design_out));
        (next, self.strip(out))
    }

    /// Removes the `z` bit from a machine output, if present.
    pub fn strip(&self, out: Letter) -> Letter {
        let mask = (1u32 << self.design_outputs.len()) - 1;
        Letter(out.0 & mask)
    }

    /// Raw machine output, including `z` when kept.
    pub fn z_of(&self, state: usize, input: Letter, design_out: Letter) -> Option<bool> {
        if !self.keeps_z {
            return None;
        }
        let (_, out) = self.machine.step(state, self.joint(input, design_out));
        Some(out.bit(self.design_outputs.len()))
    }

    pub fn classify(&self, state: usize, input: Letter, design_out: Letter) -> OutputClass {
        let j = self.joint(input, design_out).index();
        if self.wrong.contains(state * self.num_joint() + j) {
            OutputClass::Wrong
        } else {
            OutputClass::Ok
        }
    }

    /// States entered right after a wrong design output.
    pub fn violation_entries(&self) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.num_states());
        let nj = self.num_joint();
        for g in 0..self.num_states() {
            for j in 0..nj {
                if self.wrong.contains(g * nj + j) {
                    out.insert(self.machine.next[g * nj + j] as usize);
                }
            }
        }
        out
    }

    /// Worst finite recovery rank over states entered by a violation; the
    /// `l` column of the statistics report.
    pub fn worst_entry_rank(&self) -> Option<u32> {
        self.violation_entries()
            .ones()
            .filter_map(|g| self.states[g].rank.value())
            .max()
    }

    pub fn subset_names(&self, state: usize) -> Vec<String> {
        self.states[state]
            .subset
            .iter()
            .map(|&q| self.spec_state_names[q as usize].clone())
            .collect()
    }

    /// A pass-through shield that never corrects anything. Useful as a
    /// negative control for the checkers.
    pub fn identity(design_inputs: &VarSet, design_outputs: &VarSet) -> ShieldMachine {
        let joint = design_inputs
            .concat(&design_outputs.with_kind(design_inputs.kind()))
            .expect("disjoint design variables");
        let nj = joint.alphabet_size();
        let out = (0..nj as u32)
            .map(|j| Letter(j).split(design_inputs.len()).1 .0)
            .collect();
        ShieldMachine {
            design_inputs: design_inputs.clone(),
            design_outputs: design_outputs.clone(),
            spec_state_names: Vec::new(),
            machine: MealyMachine {
                names: vec!["pass".into()],
                initial: 0,
                inputs: joint,
                outputs: design_outputs.clone(),
                next: vec![0; nj],
                out,
            },
            states: vec![ShieldState {
                name: "pass".into(),
                rank: Rank::finite(0),
                mode: Mode::Adversarial,
                d: 0,
                deviated: false,
                spec_state: 0,
                subset: Vec::new(),
            }],
            wrong: FixedBitSet::with_capacity(nj),
            keeps_z: false,
        }
    }
}
