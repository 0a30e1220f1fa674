use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shield_core::error::VerifyError;
use shield_core::sim::{self, phases_well_formed, Phase, Trace};
use shield_core::verify::{self, DesignBehavior};
use shield_core::{parse_spec, synthesize, Exec, Letter, ShieldMachine};

const SPEC: &str = include_str!("../specs/triple_pulse.spec");

#[test]
fn random_designs_are_corrected() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let designs: Vec<_> = (0..50)
        .map(|_| sim::random_mealy(&mut rng, a.inputs(), a.outputs(), 4))
        .collect();
    let r = verify::check_correctness(&s.shield, &a, &designs, Exec::Parallel).unwrap();
    assert!(r.ok(), "{:?}", r.failures.first());
}

#[test]
fn identity_shield_lets_violations_through() {
    let a = parse_spec(SPEC).unwrap();
    let id = ShieldMachine::identity(a.inputs(), a.outputs());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = sim::random_mealy(&mut rng, a.inputs(), a.outputs(), 1);
    // A one-state design that always emits a mixed letter.
    let d = shield_core::MealyMachine { out: vec![1], ..d };
    let cex = verify::check_design(&id, &a, &d).unwrap().expect("violation");
    assert_eq!(cex.len(), 1);
    assert!(!a.accepts(&cex.shielded_trace().steps));
}

#[test]
fn correct_traces_are_never_touched() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let traces: Vec<Trace> = (0..1000)
        .map(|_| sim::correct_trace(&mut rng, &a, &s.spec_region, 50))
        .collect();
    let r = verify::check_min_deviation(&s.shield, &a, &traces, Exec::Parallel).unwrap();
    assert!(r.ok());
    assert_eq!(r.steps, 50_000);
}

#[test]
fn flipping_shield_deviates_at_step_zero() {
    let a = parse_spec(SPEC).unwrap();
    let mut s = synthesize(&a).unwrap().shield;
    let o1 = a.outputs().index_of("o1").unwrap();
    for o in s.machine.out.iter_mut() {
        *o ^= 1 << o1;
    }
    let t = Trace::new(vec![(Letter(0), Letter(0)); 3]);
    let r = verify::check_min_deviation(&s, &a, &[t], Exec::Sequential).unwrap();
    assert_eq!(r.first_failure, Some((0, 0)));
}

#[test]
fn wrong_generator_output_is_reported() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let t = Trace::new(vec![(Letter(0), Letter(0)), (Letter(0), Letter(1))]);
    let e = verify::check_min_deviation(&s.shield, &a, &[t], Exec::Sequential).unwrap_err();
    assert_eq!(e, VerifyError::WrongTrace { step: 1 });
}

#[test]
fn misstep_then_recovery() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let mut steps = vec![(Letter(0), Letter(0)); 3];
    steps.push((Letter(0), Letter(0b01)));
    steps.extend(vec![(Letter(0), Letter(0)); 10]);
    let run = sim::run(&s.shield, &Trace::new(steps));
    assert_eq!(run.steps[3].phase, Phase::Misstep);
    assert_eq!(run.steps[3].d, 2);
    assert!(run.steps[3].deviation);
    assert!(phases_well_formed(&run.phases()));
    let last = run.steps.last().unwrap();
    assert_eq!(last.phase, Phase::Final);
    assert_eq!(last.d, 0);
    assert!(run.steps.iter().skip_while(|s| s.d != 0 || s.step <= 3).all(|s| !s.deviation));
}

#[test]
fn random_runs_follow_phase_grammar() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let steps = (0..30).map(|_| (Letter(0), Letter(rng.gen_range(0..4)))).collect();
        let run = sim::run(&s.shield, &Trace::new(steps));
        assert!(phases_well_formed(&run.phases()));
        for st in &run.steps {
            if st.d == 0 && st.phase != Phase::Misstep {
                assert!(!st.deviation || st.phase == Phase::Deviation);
            }
        }
    }
}

#[test]
fn recovery_annotations_match_exact_bounds() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let any = verify::check_recovery(&s.shield, DesignBehavior::Any);
    assert!(any.ok(), "{:#?}", any.states);
    let correct = verify::check_recovery(&s.shield, DesignBehavior::Correct);
    assert!(correct.ok(), "{:#?}", correct.states);
    for st in &any.states {
        if st.annotated.value() == Some(0) {
            assert_eq!(st.cooperative.value(), Some(0));
        }
    }
}

#[test]
fn no_single_output_change_recovers_faster() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let r = verify::check_admissibility(&s, Exec::Parallel);
    assert!(r.alternatives > 0);
    assert!(r.ok(), "{:#?}", r.improvements);
}

#[test]
fn violating_design_is_overwritten_at_the_violation() {
    let a = parse_spec(SPEC).unwrap();
    let s = synthesize(&a).unwrap();
    let d = shield_core::MealyMachine {
        names: vec!["x".into()],
        initial: 0,
        inputs: a.inputs().clone(),
        outputs: a.outputs().clone(),
        next: vec![0],
        out: vec![0b10],
    };
    let c = sim::compose(&d, &s.shield).unwrap();
    let out = c.outputs_for(&[Letter(0); 5]);
    assert_ne!(out[0], Letter(0b10));
    assert!(a.accepts(&out.iter().map(|&o| (Letter(0), o)).collect::<Vec<_>>()));
}
