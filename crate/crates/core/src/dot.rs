//! Graphviz export of automata, monitors, games and shields.
//!
//! Output is deterministic: nodes in index order, edges sorted by
//! endpoints.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::alphabet::{Letter, VarKind, VarSet};
use crate::automaton::SafetyAutomaton;
use crate::dsl::guard_label;
use crate::game::{DeterministicStrategy, GameGraph, RankAnnotation};
use crate::pipeline::ViolationMonitor;
use crate::shield::{Mode, ShieldMachine};

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

struct Dot {
    out: String,
}

impl Dot {
    fn new(name: &str) -> Dot {
        let mut out = String::new();
        writeln!(out, "digraph \"{}\" {{", esc(name)).unwrap();
        out.push_str("\trankdir=LR;\n\tnode [shape=circle];\n");
        out.push_str("\t__start [shape=none,label=\"\",width=0,height=0];\n");
        Dot { out }
    }

    fn node(&mut self, id: usize, label: &str, double: bool, extra: &str) {
        let shape = if double { "doublecircle" } else { "circle" };
        write!(self.out, "\tn{id} [label=\"{}\",shape={shape}", esc(label)).unwrap();
        if !extra.is_empty() {
            write!(self.out, ",{extra}").unwrap();
        }
        self.out.push_str("];\n");
    }

    fn start(&mut self, id: usize) {
        writeln!(self.out, "\t__start -> n{id};").unwrap();
    }

    fn edge(&mut self, a: usize, b: usize, label: &str, extra: &str) {
        write!(self.out, "\tn{a} -> n{b} [label=\"{}\"", esc(label)).unwrap();
        if !extra.is_empty() {
            write!(self.out, ",{extra}").unwrap();
        }
        self.out.push_str("];\n");
    }

    fn finish(mut self) -> String {
        self.out.push_str("}\n");
        self.out
    }
}

/// Safety automaton; safe states are double-circled.
pub fn automaton(a: &SafetyAutomaton) -> String {
    let mut d = Dot::new("spec");
    for q in 0..a.num_states() {
        d.node(q, a.name(q), a.is_safe(q), "");
    }
    d.start(a.initial());
    let mut groups: BTreeMap<(usize, usize), Vec<u32>> = BTreeMap::new();
    let iw = a.inputs().len();
    for q in 0..a.num_states() {
        for i in a.inputs().letters() {
            for o in a.outputs().letters() {
                let t = a.succ(q, i, o);
                groups.entry((q, t)).or_default().push(Letter::join(i, o, iw).0);
            }
        }
    }
    for ((q, t), letters) in groups {
        d.edge(q, t, &guard_label(a.inputs(), a.outputs(), &letters), "");
    }
    d.finish()
}

/// Subset graph of the violation monitor. Violating edges are red and
/// dashed; the counter `d` is not drawn.
pub fn monitor(u: &ViolationMonitor, spec: &SafetyAutomaton) -> String {
    let mut d = Dot::new("violation_monitor");
    for (k, s) in u.subsets.iter().enumerate() {
        let names: Vec<&str> = s.iter().map(|&q| spec.name(q as usize)).collect();
        d.node(k, &format!("{{{}}}", names.join(",")), false, "shape=box");
    }
    d.start(0);
    let mut groups: BTreeMap<(usize, usize, bool), Vec<u32>> = BTreeMap::new();
    for k in 0..u.subsets.len() {
        for j in 0..u.num_joint {
            let (t, v) = u.subset_step[k * u.num_joint + j];
            groups.entry((k, t as usize, v)).or_default().push(j as u32);
        }
    }
    for ((k, t, v), letters) in groups {
        let label = guard_label(spec.inputs(), spec.outputs(), &letters);
        if v {
            d.edge(k, t, &label, "color=red,style=dashed");
        } else {
            d.edge(k, t, &label, "");
        }
    }
    d.finish()
}

/// The two-state deviation monitor.
pub fn deviation() -> String {
    let mut d = Dot::new("deviation_monitor");
    d.node(0, "t0", true, "");
    d.node(1, "t1", false, "");
    d.start(0);
    d.edge(0, 0, "same", "");
    d.edge(0, 1, "differ", "");
    d.edge(1, 0, "same", "");
    d.edge(1, 1, "differ", "");
    d.finish()
}

/// Game graph with optional ranks and strategy. States of the winning
/// condition's set are double-circled, strategy moves are bold.
pub fn game(
    g: &GameGraph,
    ranks: Option<&RankAnnotation>,
    strategy: Option<&DeterministicStrategy>,
) -> String {
    let mut d = Dot::new("game");
    let set = g.condition.set();
    for s in 0..g.num_states() {
        let label = match ranks {
            Some(r) => format!("{}\nrank {}", g.names[s], r.get(s)),
            None => g.names[s].clone(),
        };
        d.node(s, &label, set.contains(s), "");
    }
    d.start(g.initial);
    let iw = g.inputs.len();
    let mut groups: BTreeMap<(usize, usize, bool), Vec<u32>> = BTreeMap::new();
    for s in 0..g.num_states() {
        for i in 0..g.num_inputs() {
            let chosen = strategy.and_then(|st| st.get(s, i));
            for (o, t) in g.moves(s, i) {
                let bold = chosen == Some(Letter(o as u32));
                let l = Letter::join(Letter(i as u32), Letter(o as u32), iw).0;
                groups.entry((s, t, bold)).or_default().push(l);
            }
        }
    }
    for ((s, t, bold), letters) in groups {
        let label = guard_label(&g.inputs, &g.outputs, &letters);
        d.edge(s, t, &label, if bold { "style=bold" } else { "" });
    }
    d.finish()
}

/// Shield machine; edges are labeled `guard / output`. Adversarial states
/// are double-circled.
pub fn shield(s: &ShieldMachine) -> String {
    let mut d = Dot::new("shield");
    for (k, st) in s.states.iter().enumerate() {
        let mode = match st.mode {
            Mode::Adversarial => "adv",
            Mode::CooperativeOnly => "coop",
        };
        let label = format!("{}\nd={} rank {} {mode}", st.name, st.d, st.rank);
        d.node(k, &label, st.mode == Mode::Adversarial, "");
    }
    d.start(s.initial());
    let joint = &s.machine.inputs;
    let empty = VarSet::empty(VarKind::Output);
    let ow = s.machine.outputs.len();
    let mut groups: BTreeMap<(usize, usize, u32), Vec<u32>> = BTreeMap::new();
    for k in 0..s.num_states() {
        for j in 0..s.num_joint() {
            let (t, o) = s.machine.step(k, Letter(j as u32));
            groups.entry((k, t, o.0)).or_default().push(j as u32);
        }
    }
    for ((k, t, o), letters) in groups {
        let label = format!("{} / {}", guard_label(joint, &empty, &letters), Letter(o).to_bits(ow));
        d.edge(k, t, &label, "");
    }
    d.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_spec;

    #[test]
    fn single_state_has_one_node() {
        let a = parse_spec("inputs ;\noutputs x;\ninit a;\nstate a;\na -> a on true;\n").unwrap();
        let dot = automaton(&a);
        assert_eq!(dot.matches("shape=doublecircle").count(), 1);
        assert!(dot.contains("n0 -> n0 [label=\"true\"]"));
    }

    #[test]
    fn deviation_monitor_shape() {
        let dot = deviation();
        assert_eq!(dot.matches(" -> n").count(), 5);
    }
}
