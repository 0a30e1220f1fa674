use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use shield_core::alphabet::{Letter, VarKind, VarSet};
use shield_core::bundle::{Provenance, ShieldBundle};
use shield_core::{dot, parse_spec, synthesize, verilog, ShieldMachine};

const TRIPLE: &str = include_str!("../specs/triple_pulse.spec");

#[test]
fn monitor_dot_has_one_node_per_subset() {
    let syn = synthesize(&parse_spec(TRIPLE).unwrap()).unwrap();
    let text = dot::monitor(&syn.monitor, &syn.spec);
    let nodes = Regex::new(r"(?m)^\tn\d+ \[").unwrap();
    assert_eq!(nodes.find_iter(&text).count(), 7);
    assert!(text.contains("color=red,style=dashed"));
}

#[test]
fn exports_are_byte_identical_across_runs() {
    let spec = parse_spec(TRIPLE).unwrap();
    let a = synthesize(&spec).unwrap();
    let b = synthesize(&spec).unwrap();
    assert_eq!(dot::shield(&a.shield), dot::shield(&b.shield));
    assert_eq!(
        dot::game(&a.buchi_game.product.game, Some(&a.buchi.ranks), Some(&a.strategy)),
        dot::game(&b.buchi_game.product.game, Some(&b.buchi.ranks), Some(&b.strategy))
    );
    assert_eq!(verilog::export(&a.shield, "s"), verilog::export(&b.shield, "s"));
    let pa = ShieldBundle::encode(&a.shield, Provenance::default()).to_json();
    let pb = ShieldBundle::encode(&b.shield, Provenance::default()).to_json();
    assert_eq!(pa, pb);
}

#[test]
fn bundle_round_trips_synthesized_shields() {
    let spec = parse_spec(TRIPLE).unwrap();
    for keep_z in [false, true] {
        let opts = shield_core::SynthOptions { keep_z, ..Default::default() };
        let syn = shield_core::synthesize_with(&spec, &opts).unwrap();
        let json = ShieldBundle::encode(&syn.shield, Provenance::default()).to_json();
        let back = ShieldBundle::from_json(&json).unwrap().decode().unwrap();
        assert_eq!(back, syn.shield);
    }
}

#[test]
fn malformed_bundle_names_the_field() {
    let syn = synthesize(&parse_spec(TRIPLE).unwrap()).unwrap();
    let mut v: serde_json::Value =
        serde_json::to_value(ShieldBundle::encode(&syn.shield, Provenance::default())).unwrap();
    v["states"][2]["next"][1] = serde_json::json!(999);
    let err = ShieldBundle::from_json(&v.to_string()).unwrap_err().to_string();
    assert!(err.contains("states[2].next[1]"), "{err}");
    v["states"][2]["d"] = serde_json::json!("two");
    let err = ShieldBundle::from_json(&v.to_string()).unwrap_err().to_string();
    assert!(err.contains("states[2].d"), "{err}");
}

/// Interprets the emitted case table and compares it with the machine.
fn cosimulate(shield: &ShieldMachine, steps: usize, seed: u64) {
    let text = verilog::export(shield, "shield");
    let item = Regex::new(
        r"(?m)^\s+(\d+)'d(\d+): begin (?:next_state = \d+'d(\d+); )?out_bus = \d+'d(\d+); end",
    )
    .unwrap();
    let table: HashMap<u64, (usize, u32)> = item
        .captures_iter(&text)
        .map(|c| {
            let next = c.get(3).map_or(0, |m| m.as_str().parse().unwrap());
            (c[2].parse().unwrap(), (next, c[4].parse().unwrap()))
        })
        .collect();
    assert_eq!(table.len(), shield.num_states() * shield.num_joint());
    let reset = Regex::new(r"if \(rst\) state <= \d+'d(\d+);").unwrap();
    let mut hw = reset
        .captures(&text)
        .map_or(0, |c| c[1].parse::<usize>().unwrap());
    let ni = shield.machine.inputs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sw = shield.initial();
    for _ in 0..steps {
        let j = rng.gen_range(0..shield.num_joint());
        let (t, o) = shield.machine.step(sw, Letter(j as u32));
        let (ht, ho) = table[&(((hw << ni) | j) as u64)];
        assert_eq!((ht, ho), (if shield.num_states() > 1 { t } else { 0 }, o.0));
        sw = t;
        hw = ht;
    }
}

#[test]
fn verilog_cosimulates_with_the_machine() {
    let syn = synthesize(&parse_spec(TRIPLE).unwrap()).unwrap();
    cosimulate(&syn.shield, 10_000, 1);
    let map = shield_core::uav::builtin_map("map8").unwrap();
    let spec = shield_core::uav::mission_spec(&map, &[shield_core::uav::Property::Connected], &Default::default()).unwrap();
    cosimulate(&synthesize(&spec).unwrap().shield, 10_000, 2);
}

#[test]
fn identity_shield_verilog_mirrors_design_outputs() {
    let i = VarSet::new(VarKind::Input, ["a"]).unwrap();
    let o = VarSet::new(VarKind::Output, ["x", "y"]).unwrap();
    let id = ShieldMachine::identity(&i, &o);
    let text = verilog::export(&id, "pass");
    assert!(!text.contains("reg [0:0] state") && !text.contains("next_state"));
    for j in 0..8u32 {
        assert!(text.contains(&format!("3'd{j}: begin out_bus = 2'd{}; end", j >> 1)));
    }
    cosimulate(&id, 1000, 3);
}

mod round_trip {
    use super::*;
    use proptest::prelude::{any, prop_assert_eq, proptest, ProptestConfig};
    use shield_core::random::random_spec;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn random_shields_round_trip(seed in any::<u64>(), keep_z in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inputs = rng.gen_range(0..=2);
            let a = random_spec(&mut rng, 4, inputs, 2, 0.4, 0.8);
            let opts = shield_core::SynthOptions { keep_z, ..Default::default() };
            let syn = shield_core::synthesize_with(&a, &opts).unwrap();
            let json = ShieldBundle::encode(&syn.shield, Provenance::default()).to_json();
            let back = ShieldBundle::from_json(&json).unwrap();
            prop_assert_eq!(back.to_json(), json);
            prop_assert_eq!(back.decode().unwrap(), syn.shield);
        }
    }
}
