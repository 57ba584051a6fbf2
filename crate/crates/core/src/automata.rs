//! Multiplicity tree automata over a ranked skeletal alphabet.
//!
//! Every internal node of a skeletal tree carries the same label, so a
//! transition is one multilinear map per arity. Coefficients are stored
//! sparsely as `(target, tuple) → c` with 0-based indices; the text format
//! and the doc examples use 1-based indices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::rational::Rational;
use crate::trees::{RankedAlphabet, SkeletalTree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("expected vectors of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("unknown terminal `{0}`")]
    UnknownTerminal(String),
    #[error("no transition for arity {0}")]
    UnknownArity(usize),
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A multilinear map `(𝕂^d)^k → 𝕂^d`:
/// `y[i] = Σ c^i_{j₁..j_k} · x₁[j₁] ⋯ x_k[j_k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearMap {
    arity: usize,
    dim: usize,
    // Keyed by (tuple, target) so iteration walks columns in row-major
    // tuple order.
    entries: BTreeMap<(Vec<usize>, usize), Rational>,
}

impl MultilinearMap {
    pub fn new(arity: usize, dim: usize) -> Self {
        MultilinearMap { arity, dim, entries: BTreeMap::new() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sets `c^target_tuple`; a zero coefficient removes the entry.
    pub fn set(&mut self, target: usize, tuple: &[usize], c: Rational) -> Result<(), AutomatonError> {
        if tuple.len() != self.arity {
            return Err(AutomatonError::ArityMismatch { expected: self.arity, got: tuple.len() });
        }
        for &j in tuple.iter().chain([&target]) {
            if j >= self.dim {
                return Err(AutomatonError::IndexOutOfRange { index: j, dim: self.dim });
            }
        }
        let key = (tuple.to_vec(), target);
        if c.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, c);
        }
        Ok(())
    }

    pub fn get(&self, target: usize, tuple: &[usize]) -> Rational {
        self.entries.get(&(tuple.to_vec(), target)).cloned().unwrap_or_else(Rational::zero)
    }

    /// Nonzero `(target, tuple, coefficient)` triples in column order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &[usize], &Rational)> {
        self.entries.iter().map(|((tuple, i), c)| (*i, tuple.as_slice(), c))
    }

    /// Position of a column in the dense `d × d^k` layout.
    pub fn column_index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &j| acc * self.dim + j)
    }

    pub fn apply(&self, args: &[&[Rational]]) -> Result<Vec<Rational>, AutomatonError> {
        if args.len() != self.arity {
            return Err(AutomatonError::ArityMismatch { expected: self.arity, got: args.len() });
        }
        if let Some(bad) = args.iter().find(|a| a.len() != self.dim) {
            return Err(AutomatonError::DimensionMismatch { expected: self.dim, got: bad.len() });
        }
        let mut out = vec![Rational::zero(); self.dim];
        'entry: for ((tuple, i), c) in &self.entries {
            let mut product = c.clone();
            for (x, &j) in args.iter().zip(tuple) {
                if x[j].is_zero() {
                    continue 'entry;
                }
                product *= &x[j];
            }
            out[*i] += &product;
        }
        Ok(out)
    }
}

/// Where a co-linearity or sign violation was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Site {
    Lambda(usize),
    Leaf(String),
    /// Column `tuple` (0-based) of the arity-`arity` transition.
    Transition { arity: usize, tuple: Vec<usize> },
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Lambda(i) => write!(f, "lambda[{}]", i + 1),
            Site::Leaf(t) => write!(f, "leaf {t}"),
            Site::Transition { arity, tuple } => {
                write!(f, "arity {arity} column (")?;
                for (n, j) in tuple.iter().enumerate() {
                    if n > 0 {
                        f.write_char(' ')?;
                    }
                    write!(f, "{}", j + 1)?;
                }
                f.write_char(')')
            }
        }
    }
}

/// Result of [`Mta::check_colinear`]: the first negative coefficient and
/// the first column with two or more nonzeros, if any.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ColinearReport {
    pub negative: Option<Site>,
    pub crowded_column: Option<Site>,
}

impl ColinearReport {
    pub fn is_nonnegative(&self) -> bool {
        self.negative.is_none()
    }

    pub fn has_single_nonzero_columns(&self) -> bool {
        self.crowded_column.is_none()
    }

    pub fn is_cmta(&self) -> bool {
        self.is_nonnegative() && self.has_single_nonzero_columns()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mta {
    alphabet: RankedAlphabet,
    dim: usize,
    leaves: Vec<Vec<Rational>>,
    transitions: BTreeMap<usize, MultilinearMap>,
    lambda: Vec<Rational>,
}

impl Mta {
    /// The zero automaton of dimension `dim`.
    pub fn new(alphabet: RankedAlphabet, dim: usize) -> Self {
        let leaves = vec![vec![Rational::zero(); dim]; alphabet.terminals().len()];
        let transitions = alphabet.arities().iter().map(|&k| (k, MultilinearMap::new(k, dim))).collect();
        Mta { alphabet, dim, leaves, transitions, lambda: vec![Rational::zero(); dim] }
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn set_lambda(&mut self, i: usize, w: Rational) -> Result<(), AutomatonError> {
        self.check_index(i)?;
        self.lambda[i] = w;
        Ok(())
    }

    pub fn leaf(&self, terminal: &str) -> Option<&[Rational]> {
        self.alphabet.terminal_index(terminal).map(|t| self.leaves[t].as_slice())
    }

    pub fn set_leaf(&mut self, terminal: &str, i: usize, w: Rational) -> Result<(), AutomatonError> {
        let t = self
            .alphabet
            .terminal_index(terminal)
            .ok_or_else(|| AutomatonError::UnknownTerminal(terminal.to_string()))?;
        self.check_index(i)?;
        self.leaves[t][i] = w;
        Ok(())
    }

    pub fn transition(&self, arity: usize) -> Option<&MultilinearMap> {
        self.transitions.get(&arity)
    }

    pub fn transitions(&self) -> impl Iterator<Item = &MultilinearMap> {
        self.transitions.values()
    }

    pub fn set_entry(&mut self, target: usize, tuple: &[usize], c: Rational) -> Result<(), AutomatonError> {
        self.transitions
            .get_mut(&tuple.len())
            .ok_or(AutomatonError::UnknownArity(tuple.len()))?
            .set(target, tuple, c)
    }

    fn check_index(&self, i: usize) -> Result<(), AutomatonError> {
        if i < self.dim {
            Ok(())
        } else {
            Err(AutomatonError::IndexOutOfRange { index: i, dim: self.dim })
        }
    }

    /// `μ(t)`, evaluated bottom-up.
    pub fn mu(&self, t: &SkeletalTree) -> Result<Vec<Rational>, AutomatonError> {
        if let Some(label) = t.label() {
            return self
                .leaf(label)
                .map(<[Rational]>::to_vec)
                .ok_or_else(|| AutomatonError::UnknownTerminal(label.to_string()));
        }
        let map = self.transitions.get(&t.arity()).ok_or(AutomatonError::UnknownArity(t.arity()))?;
        let args = t.children().map(|c| self.mu(&c)).collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&[Rational]> = args.iter().map(Vec::as_slice).collect();
        map.apply(&refs)
    }

    /// `λ · μ(t)`.
    pub fn value(&self, t: &SkeletalTree) -> Result<Rational, AutomatonError> {
        let mu = self.mu(t)?;
        Ok(self.lambda.iter().zip(&mu).map(|(l, m)| l * m).sum())
    }

    /// Checks signs everywhere and the one-nonzero-per-column shape of
    /// leaf vectors and transition columns. Sites are scanned as λ, leaves
    /// in terminal order, then transitions by arity and column.
    pub fn check_colinear(&self) -> ColinearReport {
        let mut report = ColinearReport::default();
        let note_negative = |report: &mut ColinearReport, site: &dyn Fn() -> Site, w: &Rational| {
            if w.is_negative() && report.negative.is_none() {
                report.negative = Some(site());
            }
        };
        for (i, w) in self.lambda.iter().enumerate() {
            note_negative(&mut report, &|| Site::Lambda(i), w);
        }
        for (t, v) in self.leaves.iter().enumerate() {
            let site = || Site::Leaf(self.alphabet.terminals()[t].to_string());
            for w in v {
                note_negative(&mut report, &site, w);
            }
            if v.iter().filter(|w| !w.is_zero()).count() > 1 && report.crowded_column.is_none() {
                report.crowded_column = Some(site());
            }
        }
        for (&k, map) in &self.transitions {
            let mut previous: Option<&[usize]> = None;
            for (_, tuple, c) in map.entries() {
                let site = || Site::Transition { arity: k, tuple: tuple.to_vec() };
                note_negative(&mut report, &site, c);
                if previous == Some(tuple) && report.crowded_column.is_none() {
                    report.crowded_column = Some(site());
                }
                previous = Some(tuple);
            }
        }
        report
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> AutomatonError {
    AutomatonError::Syntax { line, column, message: message.into() }
}

/// Parses the line-based automaton format:
///
/// ```text
/// mta
/// dim 2
/// terminals a
/// arities 2
/// lambda 1 0
/// leaf a 1 1
/// entry 2 1 1 2 1
/// ```
///
/// `entry k i j₁ … j_k w` sets `c^i_{j₁..j_k} = w` (1-based). Omitted
/// leaves, λ entries and coefficients are zero. Without an `arities` line
/// the arities are those used by entries, or binary if there are none.
pub fn parse_mta(text: &str) -> Result<Mta, AutomatonError> {
    struct Tok<'a> {
        text: &'a str,
        column: usize,
    }
    let mut lines: Vec<(usize, Vec<Tok<'_>>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut toks = Vec::new();
        let mut col = 0;
        let mut start: Option<(usize, usize)> = None;
        for (byte, ch) in body.char_indices() {
            col += 1;
            if ch.is_whitespace() {
                if let Some((s, c)) = start.take() {
                    toks.push(Tok { text: &body[s..byte], column: c });
                }
            } else if start.is_none() {
                start = Some((byte, col));
            }
        }
        if let Some((s, c)) = start {
            toks.push(Tok { text: &body[s..], column: c });
        }
        if !toks.is_empty() {
            lines.push((idx + 1, toks));
        }
    }

    let mut iter = lines.iter();
    match iter.next() {
        Some((_, toks)) if toks.len() == 1 && toks[0].text == "mta" => {}
        Some((line, toks)) => return Err(syntax(*line, toks[0].column, "expected `mta` header")),
        None => return Err(syntax(1, 1, "expected `mta` header")),
    }

    let number = |line: usize, tok: &Tok<'_>| -> Result<usize, AutomatonError> {
        tok.text.parse().map_err(|_| syntax(line, tok.column, format!("expected a number, found `{}`", tok.text)))
    };
    let weight = |line: usize, tok: &Tok<'_>| -> Result<Rational, AutomatonError> {
        tok.text.parse().map_err(|_| syntax(line, tok.column, format!("bad weight `{}`", tok.text)))
    };
    let index = |line: usize, tok: &Tok<'_>, dim: usize| -> Result<usize, AutomatonError> {
        let n = number(line, tok)?;
        if n == 0 || n > dim {
            return Err(syntax(line, tok.column, format!("index {n} outside 1..{dim}")));
        }
        Ok(n - 1)
    };

    let mut dim: Option<usize> = None;
    let mut terminals: Option<Vec<String>> = None;
    let mut arities: Option<Vec<usize>> = None;
    let mut lambda: Option<Vec<Rational>> = None;
    let mut leaves: Vec<(usize, String, Vec<Rational>)> = Vec::new();
    let mut entries: Vec<(usize, usize, Vec<usize>, Rational)> = Vec::new();

    for (line, toks) in iter {
        let line = *line;
        let head = &toks[0];
        let args = &toks[1..];
        let once = |present: bool| {
            if present {
                Err(syntax(line, head.column, format!("duplicate `{}` line", head.text)))
            } else {
                Ok(())
            }
        };
        let need_dim = || dim.ok_or_else(|| syntax(line, head.column, "`dim` must come first"));
        match head.text {
            "dim" => {
                once(dim.is_some())?;
                if args.len() != 1 {
                    return Err(syntax(line, head.column, "expected `dim <d>`"));
                }
                dim = Some(number(line, &args[0])?);
            }
            "terminals" => {
                once(terminals.is_some())?;
                terminals = Some(args.iter().map(|t| t.text.to_string()).collect());
            }
            "arities" => {
                once(arities.is_some())?;
                arities = Some(args.iter().map(|t| number(line, t)).collect::<Result<_, _>>()?);
            }
            "lambda" => {
                once(lambda.is_some())?;
                let d = need_dim()?;
                if args.len() != d {
                    return Err(syntax(line, head.column, format!("expected {d} weights")));
                }
                lambda = Some(args.iter().map(|t| weight(line, t)).collect::<Result<_, _>>()?);
            }
            "leaf" => {
                let d = need_dim()?;
                if args.len() != d + 1 {
                    return Err(syntax(line, head.column, format!("expected `leaf <terminal>` and {d} weights")));
                }
                let w = args[1..].iter().map(|t| weight(line, t)).collect::<Result<_, _>>()?;
                leaves.push((line, args[0].text.to_string(), w));
            }
            "entry" => {
                let d = need_dim()?;
                let Some(k_tok) = args.first() else {
                    return Err(syntax(line, head.column, "expected `entry <k> <i> <j1..jk> <w>`"));
                };
                let k = number(line, k_tok)?;
                if k == 0 || args.len() != k + 3 {
                    return Err(syntax(line, head.column, format!("expected `entry {k}` followed by {} fields", k + 2)));
                }
                let target = index(line, &args[1], d)?;
                let tuple = args[2..2 + k].iter().map(|t| index(line, t, d)).collect::<Result<_, _>>()?;
                let w = weight(line, &args[k + 2])?;
                entries.push((line, target, tuple, w));
            }
            other => return Err(syntax(line, head.column, format!("unknown directive `{other}`"))),
        }
    }

    let end = lines.last().map_or(1, |(l, _)| *l);
    let dim = dim.ok_or_else(|| syntax(end, 1, "missing `dim` line"))?;
    let terminals = terminals.ok_or_else(|| syntax(end, 1, "missing `terminals` line"))?;
    let arities: BTreeSet<usize> = match arities {
        Some(a) => a.into_iter().collect(),
        None => {
            let used: BTreeSet<usize> = entries.iter().map(|e| e.2.len()).collect();
            if used.is_empty() {
                BTreeSet::from([2])
            } else {
                used
            }
        }
    };
    let alphabet = RankedAlphabet::new(&terminals, arities)?;
    let mut mta = Mta::new(alphabet, dim);
    if let Some(lambda) = lambda {
        mta.lambda = lambda;
    }
    let mut seen_leaves = BTreeSet::new();
    for (line, t, w) in leaves {
        let ti = mta
            .alphabet
            .terminal_index(&t)
            .ok_or_else(|| syntax(line, 6, format!("unknown terminal `{t}`")))?;
        if !seen_leaves.insert(ti) {
            return Err(syntax(line, 1, format!("duplicate `leaf {t}` line")));
        }
        mta.leaves[ti] = w;
    }
    let mut seen_entries = BTreeSet::new();
    for (line, target, tuple, w) in entries {
        if !seen_entries.insert((tuple.clone(), target)) {
            return Err(syntax(line, 1, "duplicate entry"));
        }
        mta.set_entry(target, &tuple, w).map_err(|e| syntax(line, 7, e.to_string()))?;
    }
    Ok(mta)
}

fn join<T: fmt::Display>(out: &mut String, items: impl IntoIterator<Item = T>) {
    for item in items {
        let _ = write!(out, " {item}");
    }
}

impl fmt::Display for Mta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::from("mta\n");
        writeln!(out, "dim {}", self.dim)?;
        out.push_str("terminals");
        join(&mut out, self.alphabet.terminals());
        out.push_str("\narities");
        join(&mut out, self.alphabet.arities());
        out.push_str("\nlambda");
        join(&mut out, &self.lambda);
        out.push('\n');
        for (t, v) in self.alphabet.terminals().iter().zip(&self.leaves) {
            write!(out, "leaf {t}")?;
            join(&mut out, v);
            out.push('\n');
        }
        for (&k, map) in &self.transitions {
            for (i, tuple, c) in map.entries() {
                write!(out, "entry {k} {}", i + 1)?;
                join(&mut out, tuple.iter().map(|j| j + 1));
                writeln!(out, " {c}")?;
            }
        }
        f.write_str(&out)
    }
}
