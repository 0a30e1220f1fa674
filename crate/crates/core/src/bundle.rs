//! The `ShieldBundle` JSON interchange format.
//!
//! A bundle carries the shield machine, its per-state bookkeeping and
//! enough provenance to tell which specifications produced it. It holds no
//! timings, so synthesizing twice yields byte-identical files.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alphabet::{VarKind, VarSet};
use crate::error::BundleError;
use crate::game::Rank;
use crate::mealy::MealyMachine;
use crate::shield::{Mode, ShieldMachine, ShieldState};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecSource {
    pub path: String,
    pub sha256: String,
}

impl SpecSource {
    pub fn new(path: impl Into<String>, text: &str) -> SpecSource {
        SpecSource {
            path: path.into(),
            sha256: sha256_hex(text.as_bytes()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub specs: Vec<SpecSource>,
    pub keep_z: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleState {
    pub name: String,
    pub rank: Rank,
    pub mode: Mode,
    pub d: u8,
    pub deviated: bool,
    pub spec_state: u32,
    pub subset: Vec<u32>,
    /// Successor per joint design letter.
    pub next: Vec<u32>,
    /// Shield output per joint design letter.
    pub out: Vec<u32>,
    /// Joint design letters classified as wrong in this state.
    pub wrong: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShieldBundle {
    pub schema_version: u32,
    pub tool_version: String,
    pub provenance: Provenance,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Name of the auxiliary output when the machine keeps it as top bit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    pub spec_states: Vec<String>,
    pub initial: usize,
    pub states: Vec<BundleState>,
}

fn field(path: impl Into<String>, msg: impl Into<String>) -> BundleError {
    BundleError::Field {
        field: path.into(),
        msg: msg.into(),
    }
}

impl ShieldBundle {
    pub fn encode(shield: &ShieldMachine, provenance: Provenance) -> ShieldBundle {
        let nj = shield.num_joint();
        let states = shield
            .states
            .iter()
            .enumerate()
            .map(|(s, st)| BundleState {
                name: st.name.clone(),
                rank: st.rank,
                mode: st.mode,
                d: st.d,
                deviated: st.deviated,
                spec_state: st.spec_state,
                subset: st.subset.clone(),
                next: shield.machine.next[s * nj..(s + 1) * nj].to_vec(),
                out: shield.machine.out[s * nj..(s + 1) * nj].to_vec(),
                wrong: (0..nj as u32)
                    .filter(|&j| shield.wrong.contains(s * nj + j as usize))
                    .collect(),
            })
            .collect();
        ShieldBundle {
            schema_version: BUNDLE_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            provenance,
            inputs: shield.design_inputs.names().to_vec(),
            outputs: shield.design_outputs.names().to_vec(),
            z: shield
                .keeps_z
                .then(|| shield.machine.outputs.names().last().cloned())
                .flatten(),
            spec_states: shield.spec_state_names.clone(),
            initial: shield.initial(),
            states,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    /// Parses and validates a bundle. The schema version is checked before
    /// anything else so that newer files fail with a clear message.
    pub fn from_json(text: &str) -> Result<ShieldBundle, BundleError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("schema_version")
            .ok_or_else(|| field("schema_version", "missing"))?;
        let version = version
            .as_u64()
            .ok_or_else(|| field("schema_version", "expected an unsigned integer"))?;
        if version != BUNDLE_SCHEMA_VERSION as u64 {
            return Err(BundleError::SchemaVersion(version.min(u32::MAX as u64) as u32));
        }
        let bundle: ShieldBundle = serde_path_to_error::deserialize(value)
            .map_err(|e| field(e.path().to_string(), e.inner().to_string()))?;
        bundle.validate()?;
        Ok(bundle)
    }

    fn validate(&self) -> Result<(), BundleError> {
        let n = self.states.len();
        if n == 0 {
            return Err(field("states", "no states"));
        }
        if self.initial >= n {
            return Err(field("initial", format!("{} out of range", self.initial)));
        }
        let width = self.inputs.len() + self.outputs.len();
        if width > crate::alphabet::MAX_VARS {
            return Err(field("inputs", "too many variables"));
        }
        let nj = 1usize << width;
        let out_width = self.outputs.len() + self.z.is_some() as usize;
        let no = 1u64 << out_width;
        for (s, st) in self.states.iter().enumerate() {
            let at = |f: &str| format!("states[{s}].{f}");
            if st.next.len() != nj {
                return Err(field(at("next"), format!("expected {nj} entries")));
            }
            if st.out.len() != nj {
                return Err(field(at("out"), format!("expected {nj} entries")));
            }
            if let Some(k) = st.next.iter().position(|&t| t as usize >= n) {
                return Err(field(format!("states[{s}].next[{k}]"), "unknown state"));
            }
            if let Some(k) = st.out.iter().position(|&o| o as u64 >= no) {
                return Err(field(format!("states[{s}].out[{k}]"), "output out of range"));
            }
            if let Some(k) = st.wrong.iter().position(|&j| j as usize >= nj) {
                return Err(field(format!("states[{s}].wrong[{k}]"), "letter out of range"));
            }
            if st.d > 2 {
                return Err(field(at("d"), "counter exceeds 2"));
            }
        }
        Ok(())
    }

    pub fn decode(&self) -> Result<ShieldMachine, BundleError> {
        self.validate()?;
        let design_inputs = VarSet::new(VarKind::Input, self.inputs.iter().cloned())
            .map_err(|e| field("inputs", e.to_string()))?;
        let design_outputs = VarSet::new(VarKind::Output, self.outputs.iter().cloned())
            .map_err(|e| field("outputs", e.to_string()))?;
        let joint = design_inputs
            .concat(&design_outputs.with_kind(VarKind::Input))
            .map_err(|e| field("outputs", e.to_string()))?;
        let machine_outputs = match &self.z {
            Some(z) => VarSet::new(
                VarKind::Output,
                self.outputs.iter().cloned().chain([z.clone()]),
            )
            .map_err(|e| field("z", e.to_string()))?,
            None => design_outputs.clone(),
        };
        let nj = joint.alphabet_size();
        let mut wrong = FixedBitSet::with_capacity(self.states.len() * nj);
        for (s, st) in self.states.iter().enumerate() {
            for &j in &st.wrong {
                wrong.insert(s * nj + j as usize);
            }
        }
        Ok(ShieldMachine {
            design_inputs,
            design_outputs,
            spec_state_names: self.spec_states.clone(),
            machine: MealyMachine {
                names: self.states.iter().map(|s| s.name.clone()).collect(),
                initial: self.initial,
                inputs: joint,
                outputs: machine_outputs,
                next: self.states.iter().flat_map(|s| s.next.iter().copied()).collect(),
                out: self.states.iter().flat_map(|s| s.out.iter().copied()).collect(),
            },
            states: self
                .states
                .iter()
                .map(|s| ShieldState {
                    name: s.name.clone(),
                    rank: s.rank,
                    mode: s.mode,
                    d: s.d,
                    deviated: s.deviated,
                    spec_state: s.spec_state,
                    subset: s.subset.clone(),
                })
                .collect(),
            wrong,
            keeps_z: self.z.is_some(),
        })
    }
}
