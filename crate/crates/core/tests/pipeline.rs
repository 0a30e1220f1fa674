use shield_core::error::SynthError;
use shield_core::game::WinCondition;
use shield_core::pipeline::{state_bound, synthesize_with, DeviationState, SynthOptions};
use shield_core::{parse_spec, synthesize, Exec, Letter, Mode};

const SPEC: &str = include_str!("../specs/triple_pulse.spec");

#[test]
fn triple_pulse_synthesizes() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let st = &s.stats;
    eprintln!("{st:?}");
    assert_eq!((st.spec_states, st.input_vars, st.output_vars), (4, 0, 2));
    assert!(st.safety_game_states as u128 <= state_bound(4));
    assert!(s.shield.machine.is_well_formed());
    assert_eq!(s.shield.machine.num_inputs(), 4);
}

#[test]
fn accepting_states_have_small_counter() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let gb = &s.buchi_game.product;
    let WinCondition::Buchi(acc) = &gb.game.condition else { panic!() };
    for g in 0..gb.game.num_states() {
        let d = gb.d(&s.monitor, g);
        assert_eq!(acc.contains(g), d <= 1, "state {}", gb.game.names[g]);
    }
}

#[test]
fn safety_game_marks_deviation_without_recovery_unsafe() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let gs = &s.safety_game;
    let safe = gs.game.condition.set();
    for (g, l) in gs.labels.iter().enumerate() {
        let d = gs.d(&s.monitor, g);
        let spec_ok = a.is_safe(l.spec_state as usize);
        let expect = spec_ok && !(d == 0 && l.deviation == DeviationState::T1);
        assert_eq!(safe.contains(g), expect);
    }
}

#[test]
fn idle_design_is_never_corrected() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let mut q = s.shield.initial();
    for _ in 0..50 {
        let (n, out) = s.shield.step(q, Letter(0), Letter(0));
        assert_eq!(out, Letter(0));
        q = n;
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let a = parse_spec(SPEC).unwrap();
    let p = synthesize_with(&a, &SynthOptions { exec: Exec::Parallel, keep_z: false }).unwrap();
    let q = synthesize_with(&a, &SynthOptions { exec: Exec::Sequential, keep_z: false }).unwrap();
    assert_eq!(p.shield, q.shield);
    assert_eq!(p.safety_game.game, q.safety_game.game);
}

#[test]
fn keep_z_widens_outputs() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize_with(&a, &SynthOptions { keep_z: true, ..Default::default() }).unwrap();
    assert_eq!(s.shield.machine.outputs.len(), 3);
    assert!(s.shield.z_of(0, Letter(0), Letter(0)).is_some());
}

#[test]
fn unrealizable_spec_is_reported() {
    let text = "inputs ;\noutputs a;\ninit x;\nstate x;\n";
    let a = parse_spec(text).unwrap();
    assert!(matches!(synthesize(&a), Err(SynthError::Unrealizable(_))));
}

#[test]
fn modes_partition_by_buchi_region() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    for (k, &g) in s.shield_origin.iter().enumerate() {
        let want = if s.buchi.region.contains(g as usize) {
            Mode::Adversarial
        } else {
            Mode::CooperativeOnly
        };
        assert_eq!(s.shield.states[k].mode, want);
    }
}
