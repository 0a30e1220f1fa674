//! Boolean variable sets and the letters they induce.
//!
//! A letter over a [`VarSet`] is an assignment to its variables, packed into
//! a `u32` where bit `i` holds the value of the `i`-th declared variable.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::AlphabetError;

/// Upper bound on variables per set; keeps alphabets enumerable.
pub const MAX_VARS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Input,
    Output,
}

/// An ordered set of Boolean variable names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawVarSet", into = "RawVarSet")]
pub struct VarSet {
    kind: VarKind,
    names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawVarSet {
    kind: VarKind,
    names: Vec<String>,
}

impl TryFrom<RawVarSet> for VarSet {
    type Error = AlphabetError;
    fn try_from(raw: RawVarSet) -> Result<Self, Self::Error> {
        VarSet::new(raw.kind, raw.names)
    }
}

impl From<VarSet> for RawVarSet {
    fn from(v: VarSet) -> Self {
        RawVarSet {
            kind: v.kind,
            names: v.names,
        }
    }
}

impl VarSet {
    pub fn new<S: Into<String>>(
        kind: VarKind,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self, AlphabetError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_VARS {
            return Err(AlphabetError::TooManyVariables(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(AlphabetError::EmptyName);
            }
            if names[..i].contains(n) {
                return Err(AlphabetError::DuplicateVariable(n.clone()));
            }
        }
        Ok(VarSet { kind, names })
    }

    pub fn empty(kind: VarKind) -> Self {
        VarSet {
            kind,
            names: Vec::new(),
        }
    }

    pub fn kind(&self) -> VarKind {
        self.kind
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Number of letters, `2^|names|`.
    pub fn alphabet_size(&self) -> usize {
        1usize << self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.alphabet_size() as u32).map(Letter)
    }

    /// Concatenation `self ++ other`; the result has `self`'s kind.
    pub fn concat(&self, other: &VarSet) -> Result<VarSet, AlphabetError> {
        VarSet::new(
            self.kind,
            self.names.iter().chain(other.names.iter()).cloned(),
        )
    }

    /// Same names, different kind.
    pub fn with_kind(&self, kind: VarKind) -> VarSet {
        VarSet {
            kind,
            names: self.names.clone(),
        }
    }

    /// Returns a name not present in this set, starting from `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.index_of(&name).is_some() {
            name.push('_');
        }
        name
    }

    /// Maps a letter of `sub` into this set; variables absent from `sub` are
    /// left false. Fails if `sub` has a variable this set lacks.
    pub fn embed(&self, sub: &VarSet, letter: Letter) -> Result<Letter, AlphabetError> {
        let mut out = 0u32;
        for (i, n) in sub.names.iter().enumerate() {
            let j = self
                .index_of(n)
                .ok_or_else(|| AlphabetError::UnknownVariable(n.clone()))?;
            if letter.bit(i) {
                out |= 1 << j;
            }
        }
        Ok(Letter(out))
    }

    /// Restricts a letter of this set to the variables of `sub`.
    pub fn project(&self, sub: &VarSet, letter: Letter) -> Result<Letter, AlphabetError> {
        let mut out = 0u32;
        for (i, n) in sub.names.iter().enumerate() {
            let j = self
                .index_of(n)
                .ok_or_else(|| AlphabetError::UnknownVariable(n.clone()))?;
            if letter.bit(j) {
                out |= 1 << i;
            }
        }
        Ok(Letter(out))
    }

    /// Human readable rendering, e.g. `o1 & !o2`; `true` for the empty set.
    pub fn describe(&self, letter: Letter) -> String {
        if self.names.is_empty() {
            return "true".to_string();
        }
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if letter.bit(i) {
                    n.clone()
                } else {
                    format!("!{n}")
                }
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

/// An assignment to a [`VarSet`], bit `i` = value of variable `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(pub u32);

impl Letter {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn bit(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    /// `'0'`/`'1'` characters in declaration order (variable 0 first).
    pub fn to_bits(self, width: usize) -> String {
        (0..width)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bits(bits: &str, width: usize) -> Result<Letter, AlphabetError> {
        let bits = bits.trim();
        if bits.chars().count() != width {
            return Err(AlphabetError::WidthMismatch {
                expected: width,
                found: bits.chars().count(),
            });
        }
        let mut v = 0u32;
        for (i, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v |= 1 << i,
                other => return Err(AlphabetError::BadBit(other)),
            }
        }
        Ok(Letter(v))
    }

    /// Packs an (input, output) pair into a letter over `inputs ++ outputs`.
    pub fn join(input: Letter, output: Letter, input_width: usize) -> Letter {
        Letter(input.0 | (output.0 << input_width))
    }

    /// Inverse of [`Letter::join`].
    pub fn split(self, input_width: usize) -> (Letter, Letter) {
        let mask = (1u32 << input_width) - 1;
        (Letter(self.0 & mask), Letter(self.0 >> input_width))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let err = VarSet::new(VarKind::Output, ["a", "b", "a"]).unwrap_err();
        assert!(matches!(err, AlphabetError::DuplicateVariable(n) if n == "a"));
    }

    #[test]
    fn alphabet_size_is_power_of_two() {
        let v = VarSet::new(VarKind::Input, ["x", "y", "z"]).unwrap();
        assert_eq!(v.alphabet_size(), 8);
        assert_eq!(VarSet::empty(VarKind::Input).alphabet_size(), 1);
    }

    #[test]
    fn bits_follow_declaration_order() {
        let l = Letter::from_bits("100", 3).unwrap();
        assert_eq!(l, Letter(1));
        assert_eq!(Letter(6).to_bits(3), "011");
        assert!(Letter::from_bits("10", 3).is_err());
        assert!(Letter::from_bits("1x0", 3).is_err());
    }

    #[test]
    fn join_split_inverse() {
        for i in 0..4 {
            for o in 0..8 {
                let j = Letter::join(Letter(i), Letter(o), 2);
                assert_eq!(j.split(2), (Letter(i), Letter(o)));
            }
        }
    }

    #[test]
    fn embed_and_project() {
        let big = VarSet::new(VarKind::Input, ["a", "b", "c"]).unwrap();
        let small = VarSet::new(VarKind::Input, ["c", "a"]).unwrap();
        let l = big.embed(&small, Letter(0b01)).unwrap();
        assert_eq!(l, Letter(0b100));
        assert_eq!(big.project(&small, Letter(0b101)).unwrap(), Letter(0b11));
    }
}
