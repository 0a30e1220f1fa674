use shield_core::pipeline::state_bound;
use shield_core::uav::{self, Property, PropertyParams};
use shield_core::{synthesize, SafetyAutomaton};

fn spec(map: &uav::WaypointMap, props: &[Property]) -> SafetyAutomaton {
    uav::mission_spec(map, props, &PropertyParams::default()).unwrap()
}

#[test]
fn connectivity_counts() {
    for (m, q, o) in [(uav::map8(), 9, 3), (uav::map15(), 16, 4), (uav::map31(), 32, 5)] {
        let a = uav::gen_connected(&m).unwrap();
        assert_eq!((a.num_states(), a.inputs().len(), a.outputs().len()), (q, 0, o), "{}", m.name);
    }
}

#[test]
fn deadline_properties_add_one_input() {
    let m = uav::map8();
    for p in [Property::Ugs1, Property::Ugs2] {
        let a = spec(&m, &[Property::Connected, p]);
        assert_eq!((a.inputs().len(), a.outputs().len()), (1, 3));
    }
    let a = spec(&uav::map15(), &[Property::Connected, Property::Home]);
    assert_eq!(a.inputs().names(), ["battery_low"]);
}

#[test]
fn shipped_map_files_match_builtins() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/maps");
    for m in [uav::map8(), uav::map15(), uav::map31()] {
        let text = std::fs::read_to_string(format!("{dir}/{}.json", m.name)).unwrap();
        assert_eq!(uav::WaypointMap::from_json(&text).unwrap(), m);
    }
}

#[test]
fn map15_roz_stats() {
    let a = spec(&uav::map15(), &[Property::Connected, Property::Roz]);
    let s = synthesize(&a).unwrap();
    assert!(s.stats.safety_game_states as u128 <= state_bound(a.num_states()));
}

mod narrative {
    use super::*;
    use shield_core::shield::OutputClass;
    use shield_core::verify::{self, DesignBehavior};
    use shield_core::{Letter, Mode};

    const NONE: Letter = Letter(0);

    #[test]
    fn loiter_in_roz_and_resynchronize() {
        let m = uav::map15();
        let a = spec(&m, &[Property::Connected, Property::Roz]);
        let s = synthesize(&a).unwrap();
        let sh = &s.shield;
        let id = |name: &str| m.index_of(name).unwrap();
        let w = |name: &str| m.letter_of(id(name));

        let mut q = sh.initial();
        for cmd in ["loc11", "loc12"] {
            let (n, out) = sh.step(q, NONE, w(cmd));
            assert_eq!(out, w(cmd));
            q = n;
        }
        assert_eq!(sh.classify(q, NONE, w("loc12")), OutputClass::Wrong);
        let (n, out) = sh.step(q, NONE, w("loc12"));
        let fixed = out.index();
        assert!([id("loc13"), id("loc15")].contains(&fixed));
        q = n;
        assert_eq!(sh.states[q].d, 2);

        // The planner still believes the loiter happened and commands the
        // other escape waypoint.
        let other = if fixed == id("loc13") { "loc15" } else { "loc13" };
        assert_eq!(sh.classify(q, NONE, w(other)), OutputClass::Ok);
        let (n, out) = sh.step(q, NONE, w(other));
        assert_ne!(out, w(other));
        q = n;

        let any = verify::check_recovery(sh, DesignBehavior::Any);
        assert!(any.ok());
        assert_eq!(sh.states[q].mode, Mode::CooperativeOnly);
        assert!(!any.states[q].adversarial.is_finite());
        assert!(any.states[q].cooperative.is_finite());
        let correct = verify::check_recovery(sh, DesignBehavior::Correct);
        assert!(correct.ok());
        assert!(!correct.states[q].adversarial.is_finite());

        // Loitering at the assumed waypoint lets the shield catch up.
        let mut ended = None;
        for k in 0..10 {
            let (n, out) = sh.step(q, NONE, w(other));
            q = n;
            if out == w(other) && sh.states[q].d == 0 {
                ended = Some(k);
                break;
            }
        }
        assert!(ended.is_some(), "deviation never ended");
    }
}
