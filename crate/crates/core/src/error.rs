use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("too many variables ({0}); at most {max} per set", max = crate::alphabet::MAX_VARS)]
    TooManyVariables(usize),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("empty variable name")]
    EmptyName,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("expected {expected} bits, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid bit character `{0}`")]
    BadBit(char),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("guard is unsatisfiable")]
    Unsatisfiable,
    #[error("nondeterministic edge from `{state}`: letter already leads to `{existing}`")]
    Nondeterministic { state: String, existing: String },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub kind: DslErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("automaton has no states")]
    NoStates,
    #[error("initial state {0} out of range")]
    BadInitial(usize),
    #[error("initial state `{0}` is unsafe")]
    UnsafeInitial(String),
    #[error("transition table has {found} entries, expected {expected}")]
    TableSize { expected: usize, found: usize },
    #[error("transition from `{from}` targets out-of-range state {target}")]
    BadTarget { from: String, target: usize },
    #[error("unsafe state `{from}` has a transition to safe state `{to}`")]
    UnsafeEscape { from: String, to: String },
    #[error("alphabet mismatch between automata")]
    AlphabetMismatch,
    #[error("product of an empty list")]
    EmptyProduct,
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("expected a {expected} condition")]
    WrongCondition { expected: &'static str },
    #[error("strategy undefined at state `{state}` for input {input}")]
    StrategyUndefined { state: String, input: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("unrealizable shield: {0}")]
    Unrealizable(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("trace generator produced a wrong trace at step {step}")]
    WrongTrace { step: usize },
    #[error("trace line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("invalid bundle JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
    #[error("malformed bundle field `{field}`: {msg}")]
    Field { field: String, msg: String },
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("invalid map JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported map schema version {0}")]
    SchemaVersion(u64),
    #[error("map has no waypoints")]
    Empty,
    #[error("waypoint ids must be dense in 0..{0}")]
    SparseIds(usize),
    #[error("edge references unknown waypoint {0}")]
    UnknownWaypoint(usize),
    #[error("{count} waypoints exceed the output capacity")]
    TooManyWaypoints { count: usize },
    #[error("invalid generator parameter: {0}")]
    BadParameter(String),
    #[error("unknown UGS `{0}`")]
    UnknownUgs(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}
