//! Synthesis of admissible shields for safety specifications over Mealy
//! designs, plus checkers, simulation and a UAV mission case study.

pub mod alphabet;
pub mod automaton;
pub mod bundle;
pub mod dot;
pub mod dsl;
pub mod error;
pub mod game;
pub mod mealy;
pub mod par;
pub mod pipeline;
pub mod random;
pub mod shield;
pub mod sim;
pub mod solve;
pub mod uav;
pub mod verilog;
pub mod verify;

pub use alphabet::{Letter, VarKind, VarSet};
pub use bundle::{Provenance, ShieldBundle, SpecSource};
pub use automaton::{complete, product, PartialAutomaton, SafetyAutomaton};
pub use dsl::{parse_spec, to_dsl};
pub use game::{GameGraph, Rank, WinCondition};
pub use mealy::MealyMachine;
pub use par::Exec;
pub use pipeline::{synthesize, synthesize_with, SynthOptions, Synthesis};
pub use shield::{Mode, ShieldMachine};
