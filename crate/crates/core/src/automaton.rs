//! Safety automata over split input/output alphabets.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::alphabet::{Letter, VarSet};
use crate::error::AutomatonError;

/// Name given to the sink materialized by [`complete`].
pub const ERROR_SINK: &str = "error";

/// A deterministic, complete safety automaton `(Q, q0, Σ_I × Σ_O, δ, F)`.
///
/// Transitions are stored densely at index `(q * |Σ_I| + i) * |Σ_O| + o`.
/// Unsafe states are closed under successors, so acceptance is prefix-closed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyAutomaton {
    names: Vec<String>,
    initial: usize,
    inputs: VarSet,
    outputs: VarSet,
    delta: Vec<u32>,
    safe: FixedBitSet,
}

impl SafetyAutomaton {
    pub fn new(
        names: Vec<String>,
        initial: usize,
        inputs: VarSet,
        outputs: VarSet,
        delta: Vec<u32>,
        safe: FixedBitSet,
    ) -> Result<Self, AutomatonError> {
        let n = names.len();
        if n == 0 {
            return Err(AutomatonError::NoStates);
        }
        if initial >= n {
            return Err(AutomatonError::BadInitial(initial));
        }
        let expected = n * inputs.alphabet_size() * outputs.alphabet_size();
        if delta.len() != expected {
            return Err(AutomatonError::TableSize {
                expected,
                found: delta.len(),
            });
        }
        let mut safe = safe;
        safe.grow(n);
        if !safe.contains(initial) {
            return Err(AutomatonError::UnsafeInitial(names[initial].clone()));
        }
        let row = inputs.alphabet_size() * outputs.alphabet_size();
        for (idx, &t) in delta.iter().enumerate() {
            let q = idx / row;
            let t = t as usize;
            if t >= n {
                return Err(AutomatonError::BadTarget {
                    from: names[q].clone(),
                    target: t,
                });
            }
            if !safe.contains(q) && safe.contains(t) {
                return Err(AutomatonError::UnsafeEscape {
                    from: names[q].clone(),
                    to: names[t].clone(),
                });
            }
        }
        Ok(SafetyAutomaton {
            names,
            initial,
            inputs,
            outputs,
            delta,
            safe,
        })
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn inputs(&self) -> &VarSet {
        &self.inputs
    }

    pub fn outputs(&self) -> &VarSet {
        &self.outputs
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.alphabet_size()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.alphabet_size()
    }

    pub fn safe(&self) -> &FixedBitSet {
        &self.safe
    }

    pub fn is_safe(&self, q: usize) -> bool {
        self.safe.contains(q)
    }

    pub fn num_safe(&self) -> usize {
        self.safe.count_ones(..)
    }

    #[inline]
    pub fn succ(&self, q: usize, input: Letter, output: Letter) -> usize {
        let idx = (q * self.num_inputs() + input.index()) * self.num_outputs() + output.index();
        self.delta[idx] as usize
    }

    pub fn delta(&self) -> &[u32] {
        &self.delta
    }

    /// Runs a finite trace; returns the visited states including the initial one.
    pub fn run(&self, trace: &[(Letter, Letter)]) -> Vec<usize> {
        let mut q = self.initial;
        let mut out = Vec::with_capacity(trace.len() + 1);
        out.push(q);
        for &(i, o) in trace {
            q = self.succ(q, i, o);
            out.push(q);
        }
        out
    }

    pub fn accepts(&self, trace: &[(Letter, Letter)]) -> bool {
        self.run(trace).iter().all(|&q| self.is_safe(q))
    }

    /// Lifts the automaton to larger variable sets. New variables are
    /// don't-cares; every existing variable must appear in the new sets.
    pub fn widen(&self, inputs: &VarSet, outputs: &VarSet) -> Result<Self, AutomatonError> {
        let (ni, no) = (inputs.alphabet_size(), outputs.alphabet_size());
        let mut delta = Vec::with_capacity(self.num_states() * ni * no);
        let in_map = inputs
            .letters()
            .map(|l| inputs.project(&self.inputs, l))
            .collect::<Result<Vec<_>, _>>()?;
        let out_map = outputs
            .letters()
            .map(|l| outputs.project(&self.outputs, l))
            .collect::<Result<Vec<_>, _>>()?;
        for q in 0..self.num_states() {
            for &i in &in_map {
                for &o in &out_map {
                    delta.push(self.succ(q, i, o) as u32);
                }
            }
        }
        SafetyAutomaton::new(
            self.names.clone(),
            self.initial,
            inputs.clone(),
            outputs.clone(),
            delta,
            self.safe.clone(),
        )
    }

    /// Drops states unreachable from the initial state, preserving order.
    pub fn prune(&self) -> SafetyAutomaton {
        let row = self.num_inputs() * self.num_outputs();
        let mut seen = FixedBitSet::with_capacity(self.num_states());
        let mut stack = vec![self.initial];
        seen.insert(self.initial);
        while let Some(q) = stack.pop() {
            for &t in &self.delta[q * row..(q + 1) * row] {
                if !seen.put(t as usize) {
                    stack.push(t as usize);
                }
            }
        }
        let keep: Vec<usize> = seen.ones().collect();
        let mut remap = vec![u32::MAX; self.num_states()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new as u32;
        }
        let mut delta = Vec::with_capacity(keep.len() * row);
        let mut safe = FixedBitSet::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            delta.extend(self.delta[old * row..(old + 1) * row].iter().map(|&t| remap[t as usize]));
            safe.set(new, self.is_safe(old));
        }
        SafetyAutomaton {
            names: keep.iter().map(|&q| self.names[q].clone()).collect(),
            initial: remap[self.initial] as usize,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            delta,
            safe,
        }
    }
}

/// An automaton under construction; missing transitions are `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialAutomaton {
    pub names: Vec<String>,
    pub initial: usize,
    pub inputs: VarSet,
    pub outputs: VarSet,
    pub delta: Vec<Option<u32>>,
    pub safe: FixedBitSet,
}

impl PartialAutomaton {
    pub fn new(names: Vec<String>, initial: usize, inputs: VarSet, outputs: VarSet) -> Self {
        let n = names.len();
        let len = n * inputs.alphabet_size() * outputs.alphabet_size();
        let mut safe = FixedBitSet::with_capacity(n);
        safe.insert_range(..);
        PartialAutomaton {
            names,
            initial,
            inputs,
            outputs,
            delta: vec![None; len],
            safe,
        }
    }

    pub fn index(&self, q: usize, input: Letter, output: Letter) -> usize {
        (q * self.inputs.alphabet_size() + input.index()) * self.outputs.alphabet_size()
            + output.index()
    }

    pub fn missing(&self) -> usize {
        self.delta.iter().filter(|t| t.is_none()).count()
    }
}

impl From<&SafetyAutomaton> for PartialAutomaton {
    fn from(a: &SafetyAutomaton) -> Self {
        PartialAutomaton {
            names: a.names.clone(),
            initial: a.initial,
            inputs: a.inputs.clone(),
            outputs: a.outputs.clone(),
            delta: a.delta.iter().map(|&t| Some(t)).collect(),
            safe: a.safe.clone(),
        }
    }
}

/// Redirects every missing transition to an error sink.
///
/// If the automaton declares exactly one unsafe state it is used as the sink;
/// otherwise a fresh unsafe sink named [`ERROR_SINK`] is appended. Missing
/// transitions out of the sink become self-loops. Automata without missing
/// transitions are returned unchanged.
pub fn complete(partial: &PartialAutomaton) -> Result<SafetyAutomaton, AutomatonError> {
    let mut names = partial.names.clone();
    let mut safe = partial.safe.clone();
    safe.grow(names.len());
    let mut delta = partial.delta.clone();
    if partial.missing() > 0 {
        let unsafe_states: Vec<usize> = (0..names.len()).filter(|&q| !safe.contains(q)).collect();
        let sink = if unsafe_states.len() == 1 {
            unsafe_states[0]
        } else {
            let mut name = ERROR_SINK.to_string();
            while names.contains(&name) {
                name.push('_');
            }
            names.push(name);
            safe.grow(names.len());
            let row = partial.inputs.alphabet_size() * partial.outputs.alphabet_size();
            delta.extend(std::iter::repeat_n(None, row));
            names.len() - 1
        };
        for t in delta.iter_mut() {
            if t.is_none() {
                *t = Some(sink as u32);
            }
        }
    }
    SafetyAutomaton::new(
        names,
        partial.initial,
        partial.inputs.clone(),
        partial.outputs.clone(),
        delta.into_iter().map(|t| t.expect("completed")).collect(),
        safe,
    )
}

/// Synchronous product of automata over identical alphabets.
///
/// Only reachable tuples are materialized. All tuples with an unsafe component
/// are merged into a single error sink, which preserves the language because
/// unsafe states are absorbing.
pub fn product(specs: &[SafetyAutomaton]) -> Result<SafetyAutomaton, AutomatonError> {
    let first = specs.first().ok_or(AutomatonError::EmptyProduct)?;
    if specs
        .iter()
        .any(|s| s.inputs != first.inputs || s.outputs != first.outputs)
    {
        return Err(AutomatonError::AlphabetMismatch);
    }
    if specs.len() == 1 {
        return Ok(first.prune());
    }
    let (ni, no) = (first.num_inputs(), first.num_outputs());
    let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut tuples: Vec<Vec<u32>> = Vec::new();
    let mut delta: Vec<u32> = Vec::new();
    let init: Vec<u32> = specs.iter().map(|s| s.initial as u32).collect();
    index.insert(init.clone(), 0);
    tuples.push(init);
    // u32::MAX - 1 is a placeholder for the sink, assigned an id at the end.
    let mut sink = u32::MAX;
    let mut k = 0;
    while k < tuples.len() {
        let tuple = tuples[k].clone();
        let mut row = Vec::with_capacity(ni * no);
        for i in 0..ni as u32 {
            for o in 0..no as u32 {
                let next: Vec<u32> = specs
                    .iter()
                    .zip(&tuple)
                    .map(|(s, &q)| s.succ(q as usize, Letter(i), Letter(o)) as u32)
                    .collect();
                let is_safe = specs.iter().zip(&next).all(|(s, &q)| s.is_safe(q as usize));
                let id = if is_safe {
                    match index.get(&next) {
                        Some(&id) => id,
                        None => {
                            let id = tuples.len() as u32;
                            index.insert(next.clone(), id);
                            tuples.push(next);
                            id
                        }
                    }
                } else {
                    sink = u32::MAX - 1;
                    sink
                };
                row.push(id);
            }
        }
        delta.extend(row);
        k += 1;
    }
    let n_safe = tuples.len();
    let mut names: Vec<String> = tuples
        .iter()
        .map(|t| {
            specs
                .iter()
                .zip(t)
                .map(|(s, &q)| s.name(q as usize))
                .collect::<Vec<_>>()
                .join(".")
        })
        .collect();
    let mut safe = FixedBitSet::with_capacity(n_safe);
    safe.insert_range(..);
    if sink != u32::MAX {
        let sink_id = n_safe as u32;
        for t in delta.iter_mut() {
            if *t == u32::MAX - 1 {
                *t = sink_id;
            }
        }
        let mut name = ERROR_SINK.to_string();
        while names.contains(&name) {
            name.push('_');
        }
        names.push(name);
        delta.extend(std::iter::repeat_n(sink_id, ni * no));
        safe.grow(n_safe + 1);
    }
    SafetyAutomaton::new(names, 0, first.inputs.clone(), first.outputs.clone(), delta, safe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::VarKind;

    fn outs(names: &[&str]) -> VarSet {
        VarSet::new(VarKind::Output, names.iter().copied()).unwrap()
    }

    /// Two-state toggle that forbids output `a` twice in a row.
    fn no_double_a() -> SafetyAutomaton {
        let ins = VarSet::empty(VarKind::Input);
        let mut p = PartialAutomaton::new(vec!["idle".into(), "seen".into()], 0, ins, outs(&["a"]));
        let i0 = Letter(0);
        let (a0, a1) = (Letter(0), Letter(1));
        let idx = p.index(0, i0, a0);
        p.delta[idx] = Some(0);
        let idx = p.index(0, i0, a1);
        p.delta[idx] = Some(1);
        let idx = p.index(1, i0, a0);
        p.delta[idx] = Some(0);
        complete(&p).unwrap()
    }

    #[test]
    fn completion_adds_single_sink() {
        let a = no_double_a();
        assert_eq!(a.num_states(), 3);
        assert_eq!(a.name(2), ERROR_SINK);
        assert!(!a.is_safe(2));
        assert_eq!(a.succ(1, Letter(0), Letter(1)), 2);
        assert_eq!(a.succ(2, Letter(0), Letter(0)), 2);
    }

    #[test]
    fn completion_is_idempotent() {
        let a = no_double_a();
        let again = complete(&PartialAutomaton::from(&a)).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn unsafe_escape_rejected() {
        let ins = VarSet::empty(VarKind::Input);
        let mut safe = FixedBitSet::with_capacity(2);
        safe.insert(0);
        let err = SafetyAutomaton::new(
            vec!["ok".into(), "bad".into()],
            0,
            ins,
            VarSet::empty(VarKind::Output),
            vec![1, 0],
            safe,
        )
        .unwrap_err();
        assert!(matches!(err, AutomatonError::UnsafeEscape { .. }));
    }

    #[test]
    fn product_of_one_is_identity() {
        let a = no_double_a();
        assert_eq!(product(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn self_product_is_isomorphic() {
        let a = no_double_a();
        let p = product(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(p.num_states(), a.num_states());
        assert_eq!(p.num_safe(), a.num_safe());
    }

    #[test]
    fn product_rejects_mismatch() {
        let a = no_double_a();
        let b = a.widen(a.inputs(), &outs(&["a", "b"])).unwrap();
        assert_eq!(product(&[a, b]).unwrap_err(), AutomatonError::AlphabetMismatch);
        assert_eq!(product(&[]).unwrap_err(), AutomatonError::EmptyProduct);
    }

    #[test]
    fn widen_ignores_new_variables() {
        let a = no_double_a();
        let w = a.widen(a.inputs(), &outs(&["b", "a"])).unwrap();
        for b in 0..2 {
            assert_eq!(w.succ(0, Letter(0), Letter(b | 2)), 1);
            assert_eq!(w.succ(1, Letter(0), Letter(b | 2)), 2);
        }
    }
}
