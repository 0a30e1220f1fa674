use serde::{Deserialize, Serialize};

use crate::alphabet::{Letter, VarSet};

/// A complete deterministic Mealy machine `(Q, q0, Σ_I, Σ_O, δ, λ)`.
///
/// `next` and `out` are indexed by `state * |Σ_I| + input`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MealyMachine {
    pub names: Vec<String>,
    pub initial: usize,
    pub inputs: VarSet,
    pub outputs: VarSet,
    pub next: Vec<u32>,
    pub out: Vec<u32>,
}

impl MealyMachine {
    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.alphabet_size()
    }

    #[inline]
    pub fn step(&self, state: usize, input: Letter) -> (usize, Letter) {
        let idx = state * self.num_inputs() + input.index();
        (self.next[idx] as usize, Letter(self.out[idx]))
    }

    /// Output sequence produced for an input word.
    pub fn outputs_for(&self, word: &[Letter]) -> Vec<Letter> {
        let mut q = self.initial;
        word.iter()
            .map(|&i| {
                let (n, o) = self.step(q, i);
                q = n;
                o
            })
            .collect()
    }

    /// Checks table sizes and ranges.
    pub fn is_well_formed(&self) -> bool {
        let n = self.num_states();
        let len = n * self.num_inputs();
        let max_out = self.outputs.alphabet_size() as u32;
        self.initial < n
            && self.next.len() == len
            && self.out.len() == len
            && self.next.iter().all(|&t| (t as usize) < n)
            && self.out.iter().all(|&o| o < max_out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::VarKind;

    #[test]
    fn toggle_machine_outputs() {
        let m = MealyMachine {
            names: vec!["a".into(), "b".into()],
            initial: 0,
            inputs: VarSet::new(VarKind::Input, ["go"]).unwrap(),
            outputs: VarSet::new(VarKind::Output, ["x"]).unwrap(),
            next: vec![0, 1, 1, 0],
            out: vec![0, 1, 1, 0],
        };
        assert!(m.is_well_formed());
        let outs = m.outputs_for(&[Letter(1), Letter(0), Letter(1)]);
        assert_eq!(outs, vec![Letter(1), Letter(1), Letter(0)]);
    }
}
