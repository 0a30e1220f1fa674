//! Line-based textual format for safety automata.
//!
//! ```text
//! # comment
//! inputs i1;
//! outputs o1 o2;
//! init F;
//! state F;
//! state S;
//! state bad unsafe;
//! F -> S on o1 & !o2;
//! S -> F on true;
//! ```
//!
//! Guards are conjunctions of literals over the declared inputs and outputs;
//! unmentioned variables are don't-cares. Letters not covered by any edge are
//! sent to the error sink (see [`crate::automaton::complete`]).

use std::collections::HashMap;
use std::fmt::Write;

use crate::alphabet::{Letter, VarKind, VarSet};
use crate::automaton::{complete, PartialAutomaton, SafetyAutomaton};
use crate::error::{DslError, DslErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Semi,
    Arrow,
    And,
    Not,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '\'' | '[' | ']')
}

fn lex(text: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, col) = (ln + 1, i + 1);
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col });
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                ';' => {
                    push(&mut out, Tok::Semi);
                    i += 1;
                }
                '&' => {
                    push(&mut out, Tok::And);
                    i += 1;
                }
                '!' | '~' => {
                    push(&mut out, Tok::Not);
                    i += 1;
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    push(&mut out, Tok::Arrow);
                    i += 2;
                }
                c if is_ident_char(c) => {
                    let start = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
                }
                other => {
                    return Err(DslError {
                        line,
                        col,
                        kind: DslErrorKind::Syntax(format!("unexpected character `{other}`")),
                    })
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.col)).unwrap_or(self.eof)
    }

    fn err<T>(&self, kind: DslErrorKind) -> Result<T, DslError> {
        let (line, col) = self.here();
        Err(DslError { line, col, kind })
    }

    fn err_at<T>(&self, tok: &Token, kind: DslErrorKind) -> Result<T, DslError> {
        Err(DslError {
            line: tok.line,
            col: tok.col,
            kind,
        })
    }

    fn syntax<T>(&self, msg: &str) -> Result<T, DslError> {
        let found = match self.peek() {
            Some(t) => format!("{:?}", t.tok),
            None => "end of input".to_string(),
        };
        self.err(DslErrorKind::Syntax(format!("{msg}, found {found}")))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, DslError> {
        match self.peek() {
            Some(t) if t.tok == want => Ok(self.next().unwrap()),
            _ => self.syntax(&format!("expected {what}")),
        }
    }

    fn ident(&mut self) -> Result<(String, Token), DslError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s), ..
            }) => {
                let s = s.clone();
                Ok((s, self.next().unwrap()))
            }
            _ => self.syntax("expected identifier"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s), ..
            }) if s == kw => {
                self.next();
                Ok(())
            }
            _ => self.syntax(&format!("expected `{kw}`")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == kw)
    }

    fn ident_list(&mut self) -> Result<Vec<(String, Token)>, DslError> {
        let mut v = Vec::new();
        while !matches!(self.peek(), Some(Token { tok: Tok::Semi, .. })) {
            v.push(self.ident()?);
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(v)
    }
}

/// A cube over the joint alphabet: `(care, value)` bit masks where bit `k`
/// addresses variable `k` of `inputs ++ outputs`.
type Cube = (u32, u32);

fn parse_guard(
    p: &mut Parser,
    inputs: &VarSet,
    outputs: &VarSet,
) -> Result<Cube, DslError> {
    if p.at_keyword("true") {
        p.next();
        return Ok((0, 0));
    }
    let start = p.peek().cloned();
    let (mut care, mut value) = (0u32, 0u32);
    let mut contradiction = false;
    loop {
        let neg = if matches!(p.peek(), Some(Token { tok: Tok::Not, .. })) {
            p.next();
            true
        } else {
            false
        };
        let (name, tok) = p.ident()?;
        let bit = match inputs.index_of(&name) {
            Some(k) => k,
            None => match outputs.index_of(&name) {
                Some(k) => inputs.len() + k,
                None => return p.err_at(&tok, DslErrorKind::UnknownVariable(name)),
            },
        };
        let v = if neg { 0 } else { 1u32 << bit };
        if care & (1 << bit) != 0 && value & (1 << bit) != v {
            contradiction = true;
        }
        care |= 1 << bit;
        value |= v;
        if matches!(p.peek(), Some(Token { tok: Tok::And, .. })) {
            p.next();
        } else {
            break;
        }
    }
    if contradiction {
        let t = start.expect("guard has a token");
        return p.err_at(&t, DslErrorKind::Unsatisfiable);
    }
    Ok((care, value))
}

/// Parses a DSL document into a complete [`SafetyAutomaton`].
pub fn parse_spec(text: &str) -> Result<SafetyAutomaton, DslError> {
    let toks = lex(text)?;
    let eof = (text.lines().count().max(1), 1);
    let mut p = Parser { toks, pos: 0, eof };

    p.keyword("inputs")?;
    let in_names = p.ident_list()?;
    p.keyword("outputs")?;
    let out_names = p.ident_list()?;
    let var_err = |tok: &Token, e| DslError {
        line: tok.line,
        col: tok.col,
        kind: DslErrorKind::Alphabet(e),
    };
    let inputs = VarSet::new(VarKind::Input, in_names.iter().map(|(n, _)| n.clone()))
        .map_err(|e| var_err(in_names.last().map(|x| &x.1).unwrap_or(&p.toks[0]), e))?;
    let outputs = VarSet::new(VarKind::Output, out_names.iter().map(|(n, _)| n.clone()))
        .map_err(|e| var_err(out_names.last().map(|x| &x.1).unwrap_or(&p.toks[0]), e))?;
    if let Some((n, t)) = out_names.iter().find(|(n, _)| inputs.index_of(n).is_some()) {
        return Err(var_err(t, crate::error::AlphabetError::DuplicateVariable(n.clone())));
    }
    p.keyword("init")?;
    let (init_name, init_tok) = p.ident()?;
    p.expect(Tok::Semi, "`;`")?;

    let mut names: Vec<String> = Vec::new();
    let mut unsafe_states: Vec<usize> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, Cube, Token)> = Vec::new();

    while let Some(tok) = p.peek().cloned() {
        if p.at_keyword("state") {
            p.next();
            let (name, ntok) = p.ident()?;
            if by_name.contains_key(&name) {
                return p.err_at(&ntok, DslErrorKind::DuplicateState(name));
            }
            let is_unsafe = if p.at_keyword("unsafe") {
                p.next();
                true
            } else {
                false
            };
            p.expect(Tok::Semi, "`;`")?;
            by_name.insert(name.clone(), names.len());
            if is_unsafe {
                unsafe_states.push(names.len());
            }
            names.push(name);
        } else {
            let (from, ftok) = p.ident()?;
            p.expect(Tok::Arrow, "`->`")?;
            let (to, ttok) = p.ident()?;
            p.keyword("on")?;
            let cube = parse_guard(&mut p, &inputs, &outputs)?;
            p.expect(Tok::Semi, "`;`")?;
            let f = *by_name
                .get(&from)
                .map(Ok)
                .unwrap_or_else(|| p.err_at(&ftok, DslErrorKind::UnknownState(from.clone())))?;
            let t = *by_name
                .get(&to)
                .map(Ok)
                .unwrap_or_else(|| p.err_at(&ttok, DslErrorKind::UnknownState(to.clone())))?;
            edges.push((f, t, cube, tok));
        }
    }

    let initial = match by_name.get(&init_name) {
        Some(&q) => q,
        None => return p.err_at(&init_tok, DslErrorKind::UnknownState(init_name)),
    };
    if names.is_empty() {
        return p.err(DslErrorKind::Syntax("no states declared".into()));
    }

    let width_in = inputs.len();
    let mut partial = PartialAutomaton::new(names.clone(), initial, inputs.clone(), outputs.clone());
    for &q in &unsafe_states {
        partial.safe.set(q, false);
    }
    let joint = inputs.alphabet_size() * outputs.alphabet_size();
    for (f, t, (care, value), tok) in &edges {
        for l in 0..joint as u32 {
            if l & care != *value {
                continue;
            }
            let (i, o) = Letter(l).split(width_in);
            let idx = partial.index(*f, i, o);
            match partial.delta[idx] {
                Some(existing) if existing as usize != *t => {
                    return p.err_at(
                        tok,
                        DslErrorKind::Nondeterministic {
                            state: names[*f].clone(),
                            existing: names[existing as usize].clone(),
                        },
                    )
                }
                _ => partial.delta[idx] = Some(*t as u32),
            }
        }
    }
    complete(&partial).map_err(|e| DslError {
        line: init_tok.line,
        col: init_tok.col,
        kind: DslErrorKind::Automaton(e),
    })
}

/// Greedy cube merging: repeatedly fuses cubes that differ in one cared bit.
fn merge_cubes(width: usize, letters: &[u32]) -> Vec<Cube> {
    let full = if width == 32 { u32::MAX } else { (1u32 << width) - 1 };
    let mut cubes: Vec<Cube> = letters.iter().map(|&l| (full, l)).collect();
    loop {
        let mut merged = false;
        'outer: for a in 0..cubes.len() {
            for b in a + 1..cubes.len() {
                let (ca, va) = cubes[a];
                let (cb, vb) = cubes[b];
                if ca != cb {
                    continue;
                }
                let diff = va ^ vb;
                if diff.count_ones() == 1 {
                    cubes[a] = (ca & !diff, va & !diff);
                    cubes.swap_remove(b);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    cubes.sort_by_key(|&(c, v)| (std::cmp::Reverse(c.count_ones()), v));
    cubes
}

fn render_cube(inputs: &VarSet, outputs: &VarSet, (care, value): Cube) -> String {
    if care == 0 {
        return "true".to_string();
    }
    let vars = inputs.names().iter().chain(outputs.names().iter());
    vars.enumerate()
        .filter(|(k, _)| care & (1 << k) != 0)
        .map(|(k, n)| {
            if value & (1 << k) != 0 {
                n.clone()
            } else {
                format!("!{n}")
            }
        })
        .collect::<Vec<_>>()
        .join(" & ")
}

/// Compact disjunction of cubes covering `letters` over `inputs ++ outputs`.
pub fn guard_label(inputs: &VarSet, outputs: &VarSet, letters: &[u32]) -> String {
    let width = inputs.len() + outputs.len();
    merge_cubes(width, letters)
        .into_iter()
        .map(|c| render_cube(inputs, outputs, c))
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Renders an automaton in the DSL. Edges into an unsafe sink are omitted
/// when the sink is the only unsafe state, since parsing re-completes them.
pub fn to_dsl(a: &SafetyAutomaton) -> String {
    let mut out = String::new();
    let (inputs, outputs) = (a.inputs(), a.outputs());
    writeln!(out, "inputs {};", inputs.names().join(" ")).unwrap();
    writeln!(out, "outputs {};", outputs.names().join(" ")).unwrap();
    writeln!(out, "init {};", a.name(a.initial())).unwrap();
    let unsafe_states: Vec<usize> = (0..a.num_states()).filter(|&q| !a.is_safe(q)).collect();
    let implicit_sink = if unsafe_states.len() == 1 {
        Some(unsafe_states[0])
    } else {
        None
    };
    for q in 0..a.num_states() {
        if a.is_safe(q) {
            writeln!(out, "state {};", a.name(q)).unwrap();
        } else {
            writeln!(out, "state {} unsafe;", a.name(q)).unwrap();
        }
    }
    let width = inputs.len() + outputs.len();
    for q in 0..a.num_states() {
        let mut targets: Vec<(usize, Vec<u32>)> = Vec::new();
        for l in 0..(1u32 << width) {
            let (i, o) = Letter(l).split(inputs.len());
            let t = a.succ(q, i, o);
            if Some(t) == implicit_sink {
                continue;
            }
            match targets.iter_mut().find(|(tt, _)| *tt == t) {
                Some((_, ls)) => ls.push(l),
                None => targets.push((t, vec![l])),
            }
        }
        for (t, letters) in targets {
            for cube in merge_cubes(width, &letters) {
                writeln!(
                    out,
                    "{} -> {} on {};",
                    a.name(q),
                    a.name(t),
                    render_cube(inputs, outputs, cube)
                )
                .unwrap();
            }
        }
    }
    out
}
