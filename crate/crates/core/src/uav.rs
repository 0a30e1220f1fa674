//! UAV mission case study: waypoint maps and generators for the six
//! mission properties.
//!
//! Waypoint `k` is commanded by the output letter `k` over `l1 .. lw`
//! (`l1` least significant). Letters at or beyond the waypoint count are
//! never valid destinations.
//!
//! The built-in maps are a plausible reconstruction of a 15-waypoint
//! mission map and two derivatives. Their adjacency is not canonical.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Letter, VarKind, VarSet, MAX_VARS};
use crate::automaton::{product, SafetyAutomaton, ERROR_SINK};
use crate::error::MapError;

pub const MAP_SCHEMA_VERSION: u32 = 1;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waypoint {
    pub id: usize,
    pub name: String,
    pub x: i32,
    pub y: i32,
    #[serde(default)]
    pub roz: bool,
    #[serde(default)]
    pub adversary_path: bool,
    #[serde(default = "yes")]
    pub comm_reliable: bool,
    #[serde(default = "yes")]
    pub loiter: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaypointMap {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub note: String,
    pub waypoints: Vec<Waypoint>,
    /// Directed flight connections `(from, to)`.
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub ugs: BTreeMap<String, Vec<usize>>,
    pub home: usize,
    pub start: usize,
}

impl WaypointMap {
    pub fn from_json(text: &str) -> Result<WaypointMap, MapError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == MAP_SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(MapError::SchemaVersion(v)),
            None => return Err(MapError::BadParameter("missing `schema_version`".into())),
        }
        let m: WaypointMap = serde_json::from_value(value)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let n = self.waypoints.len();
        if n == 0 {
            return Err(MapError::Empty);
        }
        if self.waypoints.iter().enumerate().any(|(k, w)| w.id != k) {
            return Err(MapError::SparseIds(n));
        }
        if n > 1 << MAX_VARS {
            return Err(MapError::TooManyWaypoints { count: n });
        }
        let ids = self
            .edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.ugs.values().flatten().copied())
            .chain([self.home, self.start]);
        for id in ids {
            if id >= n {
                return Err(MapError::UnknownWaypoint(id));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// `⌈log2 N⌉` bits, at least one.
    pub fn output_width(&self) -> usize {
        let n = self.len();
        (usize::BITS - (n - 1).leading_zeros()).max(1) as usize
    }

    pub fn outputs(&self) -> VarSet {
        VarSet::new(
            VarKind::Output,
            (1..=self.output_width()).map(|k| format!("l{k}")),
        )
        .expect("distinct names")
    }

    pub fn waypoint_of(&self, letter: Letter) -> Option<usize> {
        (letter.index() < self.len()).then_some(letter.index())
    }

    pub fn letter_of(&self, waypoint: usize) -> Letter {
        Letter(waypoint as u32)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.waypoints.iter().position(|w| w.name == name)
    }

    /// Whether a single step may go from `a` to `b`.
    pub fn can_fly(&self, a: usize, b: usize) -> bool {
        (a == b && self.waypoints[a].loiter) || self.edges.contains(&(a, b))
    }

    fn tagged(&self, f: impl Fn(&Waypoint) -> bool) -> Vec<usize> {
        self.waypoints.iter().filter(|w| f(w)).map(|w| w.id).collect()
    }

    pub fn roz(&self) -> Vec<usize> {
        self.tagged(|w| w.roz)
    }

    pub fn adversary_path(&self) -> Vec<usize> {
        self.tagged(|w| w.adversary_path)
    }

    pub fn unreliable(&self) -> Vec<usize> {
        self.tagged(|w| !w.comm_reliable)
    }

    pub fn ugs_targets(&self, ugs: &str) -> Result<&[usize], MapError> {
        self.ugs
            .get(ugs)
            .map(Vec::as_slice)
            .ok_or_else(|| MapError::UnknownUgs(ugs.to_string()))
    }
}

/// Builds an automaton by breadth-first exploration of abstract states.
/// `step` returns `None` for a violation. The error sink is only added
/// when some transition needs it.
fn explore<K, S, N>(
    inputs: VarSet,
    outputs: VarSet,
    initial: K,
    step: S,
    name: N,
) -> Result<SafetyAutomaton, MapError>
where
    K: Clone + Eq + std::hash::Hash,
    S: Fn(&K, Letter, Letter) -> Option<K>,
    N: Fn(&K) -> String,
{
    let mut keys = vec![initial.clone()];
    let mut index = HashMap::from([(initial, 0u32)]);
    let mut delta: Vec<Option<u32>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(k) = queue.pop_front() {
        let key = keys[k].clone();
        for i in inputs.letters() {
            for o in outputs.letters() {
                delta.push(step(&key, i, o).map(|next| {
                    *index.entry(next.clone()).or_insert_with(|| {
                        keys.push(next);
                        queue.push_back(keys.len() - 1);
                        (keys.len() - 1) as u32
                    })
                }));
            }
        }
    }
    // FIFO order: rows were pushed in state-number order.
    let n = keys.len();
    let needs_sink = delta.iter().any(Option::is_none);
    let mut names: Vec<String> = keys.iter().map(&name).collect();
    let sink = n as u32;
    let row = inputs.alphabet_size() * outputs.alphabet_size();
    let mut table: Vec<u32> = delta.into_iter().map(|t| t.unwrap_or(sink)).collect();
    let mut safe = FixedBitSet::with_capacity(n + needs_sink as usize);
    safe.insert_range(..n);
    if needs_sink {
        let mut sink_name = ERROR_SINK.to_string();
        while names.contains(&sink_name) {
            sink_name.push('_');
        }
        names.push(sink_name);
        table.extend(std::iter::repeat_n(sink, row));
    }
    Ok(SafetyAutomaton::new(names, 0, inputs, outputs, table, safe)?)
}

fn no_inputs() -> VarSet {
    VarSet::empty(VarKind::Input)
}

/// Property 1: only fly to directly connected waypoints.
pub fn gen_connected(map: &WaypointMap) -> Result<SafetyAutomaton, MapError> {
    map.validate()?;
    explore(
        no_inputs(),
        map.outputs(),
        map.start,
        |&v, _, o| map.waypoint_of(o).filter(|&w| map.can_fly(v, w)),
        |&v| map.waypoints[v].name.clone(),
    )
}

/// Property 3: at most `limit` consecutive steps inside `zone`.
pub fn gen_dwell_limit(
    map: &WaypointMap,
    zone: &[usize],
    limit: usize,
) -> Result<SafetyAutomaton, MapError> {
    map.validate()?;
    if limit < 1 {
        return Err(MapError::BadParameter("dwell limit must be at least 1".into()));
    }
    explore(
        no_inputs(),
        map.outputs(),
        0usize,
        |&c, _, o| match map.waypoint_of(o) {
            Some(w) if zone.contains(&w) => (c < limit).then_some(c + 1),
            _ => Some(0),
        },
        |c| format!("dwell{c}"),
    )
}

/// Property 4: at most one visit to a `marked` waypoint in any `window`
/// consecutive steps.
pub fn gen_window_revisit(
    map: &WaypointMap,
    marked: &[usize],
    window: usize,
) -> Result<SafetyAutomaton, MapError> {
    map.validate()?;
    if window < 2 {
        return Err(MapError::BadParameter("window must be at least 2".into()));
    }
    let keep = window - 1;
    let mask = (1u64 << keep) - 1;
    explore(
        no_inputs(),
        map.outputs(),
        0u64,
        |&h, _, o| {
            let hit = map.waypoint_of(o).is_some_and(|w| marked.contains(&w));
            if hit && h != 0 {
                None
            } else {
                Some(((h << 1) | hit as u64) & mask)
            }
        },
        |&h| {
            let bits: String = (0..keep).map(|k| if h >> k & 1 == 1 { '1' } else { '0' }).collect();
            format!("seen{bits}")
        },
    )
}

/// Properties 5 and 6: once `trigger` is raised, visit one of `goals`
/// within `deadline` further steps. With `restart`, raising the trigger
/// again during a countdown restarts it.
pub fn gen_deadline(
    map: &WaypointMap,
    trigger: &str,
    goals: &[usize],
    deadline: usize,
    restart: bool,
) -> Result<SafetyAutomaton, MapError> {
    map.validate()?;
    if deadline < 1 {
        return Err(MapError::BadParameter("deadline must be at least 1".into()));
    }
    let inputs = VarSet::new(VarKind::Input, [trigger])?;
    explore(
        inputs,
        map.outputs(),
        0usize,
        |&k, i, o| {
            let goal = map.waypoint_of(o).is_some_and(|w| goals.contains(&w));
            let raised = i.bit(0);
            if goal {
                Some(0)
            } else if raised && (k == 0 || restart) {
                Some(deadline)
            } else if k == 0 {
                Some(0)
            } else if k == 1 {
                None
            } else {
                Some(k - 1)
            }
        },
        |&k| if k == 0 { "idle".into() } else { format!("due{k}") },
    )
}

/// Property 2: never stay two consecutive steps at a waypoint with
/// unreliable communication.
pub fn gen_no_comm_dwell(map: &WaypointMap) -> Result<SafetyAutomaton, MapError> {
    map.validate()?;
    let bad = map.unreliable();
    explore(
        no_inputs(),
        map.outputs(),
        None::<usize>,
        |&at, _, o| match map.waypoint_of(o).filter(|w| bad.contains(w)) {
            Some(w) if at == Some(w) => None,
            Some(w) => Some(Some(w)),
            None => Some(None),
        },
        |at| match at {
            Some(w) => format!("at_{}", map.waypoints[*w].name),
            None => "clear".into(),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Connected,
    NoComm,
    Roz,
    Adversary,
    Ugs1,
    Ugs2,
    Home,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Connected,
        Property::NoComm,
        Property::Roz,
        Property::Adversary,
        Property::Ugs1,
        Property::Ugs2,
        Property::Home,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Property::Connected => "1",
            Property::NoComm => "2",
            Property::Roz => "3",
            Property::Adversary => "4",
            Property::Ugs1 => "5a",
            Property::Ugs2 => "5b",
            Property::Home => "6",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Property {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| MapError::BadParameter(format!("unknown property `{s}`")))
    }
}

/// Tunable constants of the property generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyParams {
    pub roz_limit: usize,
    pub window: usize,
    pub ugs_deadline: usize,
    pub home_deadline: usize,
    /// Restart a running UGS countdown when the sensor reports again.
    pub ugs_restart: bool,
    /// Restart a running return-home countdown when the signal repeats.
    pub home_restart: bool,
}

impl Default for PropertyParams {
    fn default() -> Self {
        PropertyParams {
            roz_limit: 2,
            window: 3,
            ugs_deadline: 7,
            home_deadline: 10,
            ugs_restart: true,
            home_restart: false,
        }
    }
}

pub fn generate(
    map: &WaypointMap,
    prop: Property,
    params: &PropertyParams,
) -> Result<SafetyAutomaton, MapError> {
    match prop {
        Property::Connected => gen_connected(map),
        Property::NoComm => gen_no_comm_dwell(map),
        Property::Roz => gen_dwell_limit(map, &map.roz(), params.roz_limit),
        Property::Adversary => gen_window_revisit(map, &map.adversary_path(), params.window),
        Property::Ugs1 => gen_deadline(
            map,
            "ugs1",
            map.ugs_targets("ugs1")?,
            params.ugs_deadline,
            params.ugs_restart,
        ),
        Property::Ugs2 => gen_deadline(
            map,
            "ugs2",
            map.ugs_targets("ugs2")?,
            params.ugs_deadline,
            params.ugs_restart,
        ),
        Property::Home => gen_deadline(
            map,
            "battery_low",
            &[map.home],
            params.home_deadline,
            params.home_restart,
        ),
    }
}

/// Union of variable sets in order of first appearance.
fn union(sets: &[&VarSet], kind: VarKind) -> Result<VarSet, MapError> {
    let mut names: Vec<String> = Vec::new();
    for s in sets {
        for n in s.names() {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    Ok(VarSet::new(kind, names)?)
}

/// Widens every automaton to the union of all variables, then takes the
/// synchronous product.
pub fn product_aligned(specs: &[SafetyAutomaton]) -> Result<SafetyAutomaton, MapError> {
    let inputs = union(&specs.iter().map(|a| a.inputs()).collect::<Vec<_>>(), VarKind::Input)?;
    let outputs = union(&specs.iter().map(|a| a.outputs()).collect::<Vec<_>>(), VarKind::Output)?;
    let widened = specs
        .iter()
        .map(|a| a.widen(&inputs, &outputs))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(product(&widened)?)
}

/// Product of the given properties over one map.
pub fn mission_spec(
    map: &WaypointMap,
    props: &[Property],
    params: &PropertyParams,
) -> Result<SafetyAutomaton, MapError> {
    let specs = props
        .iter()
        .map(|&p| generate(map, p, params))
        .collect::<Result<Vec<_>, _>>()?;
    product_aligned(&specs)
}

const MAP15_EDGES: [(usize, usize); 21] = [
    (1, 2),
    (1, 14),
    (2, 3),
    (2, 10),
    (3, 4),
    (3, 11),
    (4, 5),
    (4, 9),
    (5, 6),
    (5, 8),
    (6, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (10, 11),
    (10, 14),
    (11, 12),
    (12, 13),
    (12, 15),
    (13, 14),
    (14, 15),
];

const MAP15_POS: [(i32, i32); 15] = [
    (0, 0),
    (2, 0),
    (4, 0),
    (6, 0),
    (8, 0),
    (10, 1),
    (10, 3),
    (8, 3),
    (6, 2),
    (3, 2),
    (4, 3),
    (4, 5),
    (2, 6),
    (1, 4),
    (3, 7),
];

fn undirected(pairs: impl IntoIterator<Item = (usize, usize)>) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = pairs.into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
    edges.sort_unstable();
    edges
}

fn loc(id: usize, x: i32, y: i32) -> Waypoint {
    Waypoint {
        id,
        name: format!("loc{}", id + 1),
        x,
        y,
        roz: false,
        adversary_path: false,
        comm_reliable: true,
        loiter: true,
    }
}

/// Reconstructed 15-waypoint map. Ids are location numbers minus one.
pub fn map15() -> WaypointMap {
    let mut waypoints: Vec<Waypoint> = MAP15_POS
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| loc(k, x, y))
        .collect();
    for k in [11, 12] {
        waypoints[k - 1].roz = true;
    }
    for k in [4, 9, 10] {
        waypoints[k - 1].adversary_path = true;
    }
    for k in [6, 7, 9] {
        waypoints[k - 1].comm_reliable = false;
    }
    WaypointMap {
        schema_version: MAP_SCHEMA_VERSION,
        name: "map15".into(),
        note: "non-canonical reconstruction; adjacency chosen to match the mission narrative".into(),
        waypoints,
        edges: undirected(MAP15_EDGES.iter().map(|&(a, b)| (a - 1, b - 1))),
        ugs: BTreeMap::from([
            ("ugs1".to_string(), vec![0]),
            ("ugs2".to_string(), vec![4, 5, 6, 7]),
        ]),
        home: 13,
        start: 2,
    }
}

/// `loc1 .. loc8` of the 15-waypoint map with the induced connections.
pub fn map8() -> WaypointMap {
    let full = map15();
    WaypointMap {
        schema_version: MAP_SCHEMA_VERSION,
        name: "map8".into(),
        note: "non-canonical; loc1..loc8 of map15".into(),
        waypoints: full.waypoints[..8].to_vec(),
        edges: full.edges.iter().copied().filter(|&(a, b)| a < 8 && b < 8).collect(),
        ugs: full.ugs.clone(),
        home: 0,
        start: 0,
    }
}

/// Two copies of the 15-waypoint map joined through a hub waypoint.
pub fn map31() -> WaypointMap {
    let full = map15();
    let mut waypoints = full.waypoints.clone();
    for w in &full.waypoints {
        let mut c = w.clone();
        c.id += 15;
        c.name = format!("loc{}", c.id + 1);
        c.x += 12;
        waypoints.push(c);
    }
    waypoints.push(loc(30, 11, 8));
    let mut pairs: Vec<(usize, usize)> = MAP15_EDGES.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    pairs.extend(MAP15_EDGES.iter().map(|&(a, b)| (a + 14, b + 14)));
    pairs.extend([(14, 30), (29, 30)]);
    WaypointMap {
        schema_version: MAP_SCHEMA_VERSION,
        name: "map31".into(),
        note: "non-canonical; map15 plus a duplicate, joined at loc31".into(),
        waypoints,
        edges: undirected(pairs),
        ugs: full.ugs.clone(),
        home: full.home,
        start: full.start,
    }
}

pub fn builtin_map(name: &str) -> Option<WaypointMap> {
    match name {
        "map8" => Some(map8()),
        "map15" => Some(map15()),
        "map31" => Some(map31()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(a: &SafetyAutomaton, steps: &[(u32, usize)]) -> bool {
        let trace: Vec<(Letter, Letter)> = steps.iter().map(|&(i, w)| (Letter(i), Letter(w as u32))).collect();
        a.accepts(&trace)
    }

    #[test]
    fn builtin_maps_validate() {
        for m in [map8(), map15(), map31()] {
            m.validate().unwrap();
            assert_eq!(WaypointMap::from_json(&m.to_json()).unwrap(), m);
        }
        assert_eq!(map8().output_width(), 3);
        assert_eq!(map15().output_width(), 4);
        assert_eq!(map31().output_width(), 5);
    }

    #[test]
    fn map_errors() {
        let mut m = map8();
        m.edges.push((0, 99));
        assert!(matches!(m.validate(), Err(MapError::UnknownWaypoint(99))));
        let mut m = map8();
        m.waypoints[3].id = 7;
        assert!(matches!(m.validate(), Err(MapError::SparseIds(8))));
        assert!(matches!(map8().ugs_targets("ugs9"), Err(MapError::UnknownUgs(_))));
        assert!(matches!(
            WaypointMap::from_json(
                r#"{"schema_version":1,"name":"x","waypoints":[],"edges":[],"home":0,"start":0}"#
            ),
            Err(MapError::Empty)
        ));
        assert!(matches!(
            WaypointMap::from_json(r#"{"schema_version":2}"#),
            Err(MapError::SchemaVersion(2))
        ));
        assert!(WaypointMap::from_json(&map8().to_json()).is_ok());
    }

    #[test]
    fn dwell_limit_two() {
        let m = map15();
        let a = gen_dwell_limit(&m, &[10, 11], 2).unwrap();
        assert!(!run(&a, &[(0, 10), (0, 11), (0, 11)]));
        assert!(run(&a, &[(0, 10), (0, 11), (0, 12), (0, 11), (0, 11)]));
        assert!(run(&a, &[(0, 10), (0, 2), (0, 10)]));
        assert!(matches!(gen_dwell_limit(&m, &[1], 0), Err(MapError::BadParameter(_))));
        let empty = gen_dwell_limit(&m, &[], 2).unwrap();
        assert_eq!((empty.num_states(), empty.num_safe()), (1, 1));
    }

    #[test]
    fn window_revisit() {
        let m = map15();
        let a = gen_window_revisit(&m, &[3], 3).unwrap();
        assert!(!run(&a, &[(0, 3), (0, 4), (0, 3)]));
        assert!(run(&a, &[(0, 3), (0, 4), (0, 8), (0, 3)]));
        assert!(matches!(gen_window_revisit(&m, &[3], 1), Err(MapError::BadParameter(_))));
        let none = gen_window_revisit(&m, &[], 3).unwrap();
        assert_eq!(none.num_states(), 1);
    }

    #[test]
    fn deadline_seven() {
        let m = map15();
        let a = gen_deadline(&m, "ugs1", &[0], 7, true).unwrap();
        assert_eq!(a.inputs().len(), 1);
        let mut ok = vec![(1, 2)];
        ok.extend([(0, 2); 6]);
        ok.push((0, 0));
        assert_eq!(ok.len(), 8);
        assert!(run(&a, &ok));
        let mut late = vec![(1, 2)];
        late.extend([(0, 2); 7]);
        late.push((0, 0));
        assert!(!run(&a, &late));
        assert!(run(&a, &[(0, 2); 30]));
        assert!(matches!(gen_deadline(&m, "u", &[0], 0, true), Err(MapError::BadParameter(_))));
    }

    #[test]
    fn deadline_restart_flag() {
        let m = map15();
        // Triggered at 0 and again at 5; goal at step 10.
        let mut t = vec![(1, 2)];
        t.extend([(0, 2); 4]);
        t.push((1, 2));
        t.extend([(0, 2); 4]);
        t.push((0, 0));
        let restart = gen_deadline(&m, "ugs1", &[0], 7, true).unwrap();
        let latch = gen_deadline(&m, "ugs1", &[0], 7, false).unwrap();
        assert!(run(&restart, &t));
        assert!(!run(&latch, &t));
    }

    #[test]
    fn no_comm_dwell() {
        let m = map15();
        let a = gen_no_comm_dwell(&m).unwrap();
        assert!(!run(&a, &[(0, 5), (0, 5)]));
        assert!(run(&a, &[(0, 5), (0, 6), (0, 5), (0, 4)]));
        let mut reliable = map15();
        for w in reliable.waypoints.iter_mut() {
            w.comm_reliable = true;
        }
        assert_eq!(gen_no_comm_dwell(&reliable).unwrap().num_states(), 1);
    }

    #[test]
    fn property_labels_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.label().parse::<Property>().unwrap(), p);
        }
        assert!("7".parse::<Property>().is_err());
    }
}
