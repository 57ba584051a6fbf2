//! Learning co-linear tree automata from membership and equivalence queries.
//!
//! The observation table holds a subtree-closed set of trees `T`, a list of
//! contexts `C` starting with the hole, a basis `B ⊆ T` of pairwise
//! non-co-linear nonzero rows, and the values `H(t, c) = 𝒯(c⟦t⟧)` for every
//! row `t ∈ T ∪ Σ(T)`. Rows are compared only on the current columns.
//!
//! All iteration happens in canonical tree order, and contexts are added in
//! discovery order, so runs are reproducible.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::automata::Mta;
use crate::oracle::{Oracle, OracleError};
use crate::rational::Rational;
use crate::trees::{
    compose, compose_contexts, context_extensions, one_step_extensions, parse_tree, subtrees, Context,
    RankedAlphabet, SkeletalTree,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("rows {row} and {basis} are related by the negative ratio {ratio}; the target is not a positive series")]
    NegativeRatio { row: String, basis: String, ratio: Rational },
    #[error("table is not closed: row {0} is not spanned by the basis")]
    NotClosed(String),
    #[error("no hypothesis accepted after {} rounds", .0.rounds.len())]
    RoundLimit(Box<LearnTranscript>),
    #[error("observation table exceeded {limit} rows")]
    TableLimit { limit: usize, transcript: Box<LearnTranscript> },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// `H[t]` relative to the basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowDecomposition {
    Zero,
    /// `H[t] = coefficient · H[b_index]`.
    Spanned { index: usize, coefficient: Rational },
}

/// `Some(α)` when `a = α·b` with `α > 0`, or when both rows are zero
/// (`α = 1`). `None` when the rows are not co-linear.
///
/// An exact negative multiple is an error: it cannot occur for a series
/// with nonnegative values.
pub fn colinear_coefficient(a: &[Rational], b: &[Rational]) -> Result<Option<Rational>, NegativeRatio> {
    assert_eq!(a.len(), b.len(), "rows of different widths");
    let Some(pivot) = b.iter().position(|x| !x.is_zero()) else {
        return Ok(a.iter().all(Rational::is_zero).then(Rational::one));
    };
    let alpha = &a[pivot] / &b[pivot];
    if alpha.is_zero() || a.iter().zip(b).any(|(x, y)| x != &(&alpha * y)) {
        return Ok(None);
    }
    if alpha.is_negative() {
        return Err(NegativeRatio(alpha));
    }
    Ok(Some(alpha))
}

/// Ratio returned by [`colinear_coefficient`] for rows that are negative
/// multiples of each other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeRatio(pub Rational);

#[derive(Debug, Clone)]
pub struct ObservationTable {
    alphabet: RankedAlphabet,
    trees: BTreeSet<SkeletalTree>,
    // Σ(T), kept in sync with `trees`.
    extensions: BTreeSet<SkeletalTree>,
    contexts: Vec<Context>,
    context_set: HashSet<Context>,
    basis: BTreeSet<SkeletalTree>,
    rows: HashMap<SkeletalTree, Vec<Rational>>,
    answers: HashMap<SkeletalTree, Rational>,
    smq_count: usize,
    max_rows: usize,
}

impl ObservationTable {
    /// An empty table over `alphabet`, with `C = {◇}`.
    pub fn new(alphabet: RankedAlphabet) -> Self {
        let hole = Context::hole();
        ObservationTable {
            alphabet,
            trees: BTreeSet::new(),
            extensions: BTreeSet::new(),
            contexts: vec![hole.clone()],
            context_set: HashSet::from([hole]),
            basis: BTreeSet::new(),
            rows: HashMap::new(),
            answers: HashMap::new(),
            smq_count: 0,
            max_rows: usize::MAX,
        }
    }

    pub fn with_row_limit(mut self, max_rows: usize) -> Self {
        self.max_rows = max_rows;
        self
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn trees(&self) -> &BTreeSet<SkeletalTree> {
        &self.trees
    }

    /// `Σ(T)`: the auxiliary rows.
    pub fn extensions(&self) -> &BTreeSet<SkeletalTree> {
        &self.extensions
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    /// The basis in canonical order; position `j` is automaton state `j`.
    pub fn basis(&self) -> Vec<SkeletalTree> {
        self.basis.iter().cloned().collect()
    }

    pub fn row(&self, t: &SkeletalTree) -> Option<&[Rational]> {
        self.rows.get(t).map(Vec::as_slice)
    }

    /// `H(t, C[column])`.
    pub fn value(&self, t: &SkeletalTree, column: usize) -> Option<&Rational> {
        self.rows.get(t).and_then(|r| r.get(column))
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Distinct trees sent to the oracle so far.
    pub fn smq_count(&self) -> usize {
        self.smq_count
    }

    fn query(&mut self, oracle: &dyn Oracle, t: SkeletalTree) -> Result<Rational, OracleError> {
        if let Some(v) = self.answers.get(&t) {
            return Ok(v.clone());
        }
        let v = oracle.smq(&t)?;
        self.smq_count += 1;
        self.answers.insert(t, v.clone());
        Ok(v)
    }

    fn row_is_zero(&self, t: &SkeletalTree) -> bool {
        self.rows[t].iter().all(Rational::is_zero)
    }

    /// Fills every missing `H` entry for `(T ∪ Σ(T)) × C`.
    pub fn fill(&mut self, oracle: &dyn Oracle) -> Result<(), LearnError> {
        let width = self.contexts.len();
        let pending: Vec<SkeletalTree> = self
            .trees
            .iter()
            .chain(&self.extensions)
            .filter(|t| self.rows.get(*t).is_none_or(|r| r.len() < width))
            .cloned()
            .collect();
        for t in pending {
            let have = self.rows.get(&t).map_or(0, Vec::len);
            let mut values = Vec::with_capacity(width - have);
            for j in have..width {
                let composed = compose(&self.contexts[j], &t);
                values.push(self.query(oracle, composed)?);
            }
            self.rows.entry(t).or_default().extend(values);
        }
        Ok(())
    }

    fn extend_trees(&mut self, new: impl IntoIterator<Item = SkeletalTree>) -> Result<bool, usize> {
        let before = self.trees.len();
        self.trees.extend(new);
        if self.trees.len() == before {
            return Ok(false);
        }
        self.extensions = one_step_extensions(&self.trees, &self.alphabet);
        let rows = self.trees.union(&self.extensions).count();
        if rows > self.max_rows {
            return Err(self.max_rows);
        }
        Ok(true)
    }

    fn add_context(&mut self, c: Context) -> bool {
        if self.context_set.insert(c.clone()) {
            self.contexts.push(c);
            true
        } else {
            false
        }
    }

    /// `H[t]` in terms of the basis, or `None` when it is not spanned.
    pub fn decompose(&self, t: &SkeletalTree) -> Result<Option<RowDecomposition>, LearnError> {
        let row = &self.rows[t];
        if row.iter().all(Rational::is_zero) {
            return Ok(Some(RowDecomposition::Zero));
        }
        for (index, b) in self.basis.iter().enumerate() {
            match colinear_coefficient(row, &self.rows[b]) {
                Ok(Some(coefficient)) => return Ok(Some(RowDecomposition::Spanned { index, coefficient })),
                Ok(None) => {}
                Err(NegativeRatio(ratio)) => {
                    return Err(LearnError::NegativeRatio { row: t.to_string(), basis: b.to_string(), ratio })
                }
            }
        }
        Ok(None)
    }

    /// Promotes rows built from basis trees until every such row is zero or
    /// spanned. A nonzero unspanned row joins `T` and `B`; a zero row joins
    /// `T` alone, and only while `T` has no zero row. Returns whether the
    /// table changed.
    pub fn close(&mut self, oracle: &dyn Oracle) -> Result<bool, LearnError> {
        let mut changed = false;
        'restart: loop {
            let has_zero_tree = self.trees.iter().any(|t| self.row_is_zero(t));
            let candidates: Vec<SkeletalTree> = self
                .trees
                .union(&self.extensions)
                .filter(|t| !self.basis.contains(*t) && t.children().all(|c| self.basis.contains(&c)))
                .cloned()
                .collect();
            for t in candidates {
                let promote_to_basis = match self.decompose(&t)? {
                    None => true,
                    Some(RowDecomposition::Zero) if !has_zero_tree && !self.trees.contains(&t) => false,
                    Some(_) => continue,
                };
                if promote_to_basis {
                    self.basis.insert(t.clone());
                }
                self.grow(oracle, [t])?;
                changed = true;
                continue 'restart;
            }
            return Ok(changed);
        }
    }

    fn grow(&mut self, oracle: &dyn Oracle, new: impl IntoIterator<Item = SkeletalTree>) -> Result<bool, LearnError> {
        let grew = self.extend_trees(new).map_err(|limit| LearnError::TableLimit {
            limit,
            transcript: Box::default(),
        })?;
        self.fill(oracle)?;
        Ok(grew)
    }

    /// Adds contexts that separate rows the table currently treats alike:
    /// zero rows with a nonzero one-step extension, and co-linear pairs
    /// whose extensions are not co-linear with the same ratio. Returns
    /// whether any context was added.
    pub fn make_consistent(&mut self, oracle: &dyn Oracle) -> Result<bool, LearnError> {
        let mut changed = false;
        let steps: Vec<Context> = context_extensions(&self.trees, &self.alphabet).into_iter().collect();

        let zero_trees: Vec<SkeletalTree> = self.trees.iter().filter(|t| self.row_is_zero(t)).cloned().collect();
        for t in zero_trees {
            'search: for c in &steps {
                if !self.row_is_zero(&t) {
                    break;
                }
                let extended = compose(c, &t);
                for (j, outer) in self.contexts.clone().into_iter().enumerate() {
                    if !self.rows[&extended][j].is_zero() && self.add_context(compose_contexts(&outer, c)) {
                        self.fill(oracle)?;
                        changed = true;
                        break 'search;
                    }
                }
            }
        }

        let nonzero: Vec<SkeletalTree> = self.trees.iter().filter(|t| !self.row_is_zero(t)).cloned().collect();
        let mut pairs = Vec::new();
        for (i, t1) in nonzero.iter().enumerate() {
            for t2 in &nonzero[i + 1..] {
                if self.pair_ratio(t1, t2)?.is_some() {
                    pairs.push((t1.clone(), t2.clone()));
                }
            }
        }
        for (t1, t2) in pairs {
            let Some(alpha) = self.pair_ratio(&t1, &t2)? else {
                continue;
            };
            'search: for c in &steps {
                let (e1, e2) = (compose(c, &t1), compose(c, &t2));
                for (j, outer) in self.contexts.clone().into_iter().enumerate() {
                    if self.rows[&e1][j] != &alpha * &self.rows[&e2][j] && self.add_context(compose_contexts(&outer, c)) {
                        self.fill(oracle)?;
                        changed = true;
                        break 'search;
                    }
                }
            }
        }
        Ok(changed)
    }

    fn pair_ratio(&self, t1: &SkeletalTree, t2: &SkeletalTree) -> Result<Option<Rational>, LearnError> {
        colinear_coefficient(&self.rows[t1], &self.rows[t2]).map_err(|NegativeRatio(ratio)| LearnError::NegativeRatio {
            row: t1.to_string(),
            basis: t2.to_string(),
            ratio,
        })
    }

    /// Adds the subtrees of `new_trees` to `T`, then closes and restores
    /// consistency until neither step changes the table.
    pub fn complete<'a>(
        &mut self,
        oracle: &dyn Oracle,
        new_trees: impl IntoIterator<Item = &'a SkeletalTree>,
    ) -> Result<(), LearnError> {
        let closure: BTreeSet<SkeletalTree> = new_trees.into_iter().flat_map(subtrees).collect();
        self.grow(oracle, closure)?;
        loop {
            let closed = self.close(oracle)?;
            let consistent = self.make_consistent(oracle)?;
            if !closed && !consistent {
                return Ok(());
            }
        }
    }

    /// Reads off the hypothesis: state `j` is basis tree `b_j`, every
    /// transition column comes from decomposing the row of `σ(b_{j₁}..b_{j_k})`
    /// and `λ[j] = H(b_j, ◇)`.
    pub fn extract_cmta(&self) -> Result<Mta, LearnError> {
        let basis = self.basis();
        let d = basis.len();
        let mut a = Mta::new(self.alphabet.clone(), d);
        let decompose = |t: &SkeletalTree| -> Result<RowDecomposition, LearnError> {
            if !self.rows.contains_key(t) {
                return Err(LearnError::NotClosed(t.to_string()));
            }
            self.decompose(t)?.ok_or_else(|| LearnError::NotClosed(t.to_string()))
        };
        for leaf in self.alphabet.leaves() {
            if let RowDecomposition::Spanned { index, coefficient } = decompose(&leaf)? {
                a.set_leaf(leaf.label().expect("leaf"), index, coefficient).expect("basis index");
            }
        }
        for &k in self.alphabet.arities() {
            let mut tuple = vec![0; k];
            if d == 0 {
                continue;
            }
            loop {
                let t = SkeletalTree::internal(tuple.iter().map(|&j| basis[j].clone()).collect());
                if let RowDecomposition::Spanned { index, coefficient } = decompose(&t)? {
                    a.set_entry(index, &tuple, coefficient).expect("basis index");
                }
                // Next tuple in row-major order.
                let Some(pos) = tuple.iter().rposition(|&j| j + 1 < d) else {
                    break;
                };
                tuple[pos] += 1;
                tuple[pos + 1..].iter_mut().for_each(|j| *j = 0);
            }
        }
        for (j, b) in basis.iter().enumerate() {
            a.set_lambda(j, self.rows[b][0].clone()).expect("basis index");
        }
        Ok(a)
    }
}

/// Everything a learning run reports, and what the query bound needs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LearnTranscript {
    pub smq_count: usize,
    pub seq_count: usize,
    pub counterexamples: Vec<(SkeletalTree, Rational)>,
    /// Basis size after each round.
    pub rounds: Vec<usize>,
    pub final_dimension: usize,
    /// Largest tree added to the table from outside, in nodes: the initial
    /// leaves count as size 1, then each counterexample.
    pub max_input_size: usize,
    pub max_arity: usize,
    /// `|Σ₀|` plus one internal symbol per arity.
    pub symbol_count: usize,
}

impl LearnTranscript {
    /// `n(n + mn + s·(n + mn)^p)` for dimension `n`, largest input tree
    /// `m`, `s` symbols and maximal arity `p`.
    pub fn smq_bound(&self) -> u128 {
        let n = self.final_dimension as u128;
        let m = self.max_input_size as u128;
        let s = self.symbol_count as u128;
        let base = n + m * n;
        n * (base + s * base.pow(self.max_arity as u32))
    }
}

impl fmt::Display for LearnTranscript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "smq {}", self.smq_count)?;
        writeln!(f, "seq {}", self.seq_count)?;
        for (i, basis) in self.rounds.iter().enumerate() {
            writeln!(f, "round {} basis {basis}", i + 1)?;
            if let Some((tree, value)) = self.counterexamples.get(i) {
                writeln!(f, "cex {tree} {value}")?;
            }
        }
        writeln!(f, "dim {}", self.final_dimension)?;
        writeln!(f, "max-input-nodes {}", self.max_input_size)?;
        writeln!(f, "max-arity {}", self.max_arity)?;
        writeln!(f, "symbols {}", self.symbol_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transcript line {line}: {message}")]
pub struct TranscriptParseError {
    pub line: usize,
    pub message: String,
}

impl FromStr for LearnTranscript {
    type Err = TranscriptParseError;

    /// Counterexample trees are re-read over the alphabet implied by their
    /// leaves and node arities.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut t = LearnTranscript::default();
        for (idx, raw) in s.lines().enumerate() {
            let line = idx + 1;
            let err = |message: &str| TranscriptParseError { line, message: message.to_string() };
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let (key, rest) = raw.split_once(' ').ok_or_else(|| err("expected `<key> <value>`"))?;
            let number = |v: &str| v.trim().parse::<usize>().map_err(|_| err("expected a number"));
            match key {
                "smq" => t.smq_count = number(rest)?,
                "seq" => t.seq_count = number(rest)?,
                "dim" => t.final_dimension = number(rest)?,
                "max-input-nodes" => t.max_input_size = number(rest)?,
                "max-arity" => t.max_arity = number(rest)?,
                "symbols" => t.symbol_count = number(rest)?,
                "round" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    match parts.as_slice() {
                        [i, "basis", d] if number(i)? == t.rounds.len() + 1 => t.rounds.push(number(d)?),
                        _ => return Err(err("expected `round <i> basis <d>`")),
                    }
                }
                "cex" => {
                    let (tree, value) = rest.rsplit_once(' ').ok_or_else(|| err("expected `cex <tree> <value>`"))?;
                    let value: Rational = value.parse().map_err(|_| err("bad value"))?;
                    let tree = parse_loose_tree(tree).ok_or_else(|| err("bad tree"))?;
                    t.counterexamples.push((tree, value));
                }
                _ => return Err(err("unknown key")),
            }
        }
        Ok(t)
    }
}

fn parse_loose_tree(text: &str) -> Option<SkeletalTree> {
    let mut terminals = BTreeSet::new();
    let mut arities = BTreeSet::new();
    let mut stack: Vec<usize> = Vec::new();
    let cleaned = text.replace('(', " ( ").replace(')', " ) ");
    for tok in cleaned.split_whitespace() {
        match tok {
            "(" => {
                if let Some(top) = stack.last_mut() {
                    *top += 1;
                }
                stack.push(0);
            }
            ")" => {
                arities.insert(stack.pop()?);
            }
            name => {
                *stack.last_mut()? += 1;
                terminals.insert(name.to_string());
            }
        }
    }
    if terminals.is_empty() {
        return None;
    }
    let arities: Vec<usize> = if arities.is_empty() { vec![2] } else { arities.into_iter().collect() };
    let alphabet = RankedAlphabet::new(terminals, arities).ok()?;
    parse_tree(text, &alphabet).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_rounds: usize,
    pub max_table_rows: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_rounds: 100, max_table_rows: 200_000 }
    }
}

/// Runs the learner until the oracle accepts a hypothesis.
pub fn learn(oracle: &dyn Oracle, limits: Limits) -> Result<(Mta, LearnTranscript), LearnError> {
    learn_with_observer(oracle, limits, |_, _| {})
}

/// [`learn`], calling `observer` with the table and hypothesis after every
/// extraction.
pub fn learn_with_observer(
    oracle: &dyn Oracle,
    limits: Limits,
    mut observer: impl FnMut(&ObservationTable, &Mta),
) -> Result<(Mta, LearnTranscript), LearnError> {
    let alphabet = oracle.alphabet().clone();
    let mut transcript = LearnTranscript {
        max_arity: alphabet.max_arity(),
        max_input_size: 1,
        symbol_count: alphabet.symbol_count(),
        ..LearnTranscript::default()
    };
    let mut table = ObservationTable::new(alphabet.clone()).with_row_limit(limits.max_table_rows);
    let mut new_trees: BTreeSet<SkeletalTree> = alphabet.leaves().into_iter().collect();
    for _ in 0..limits.max_rounds {
        let step = table.complete(oracle, &new_trees).and_then(|()| table.extract_cmta());
        transcript.smq_count = table.smq_count();
        let hypothesis = match step {
            Ok(a) => a,
            Err(LearnError::TableLimit { limit, .. }) => {
                return Err(LearnError::TableLimit { limit, transcript: Box::new(transcript) })
            }
            Err(e) => return Err(e),
        };
        observer(&table, &hypothesis);
        transcript.rounds.push(hypothesis.dim());
        transcript.final_dimension = hypothesis.dim();
        transcript.seq_count += 1;
        match oracle.seq(&hypothesis)? {
            None => return Ok((hypothesis, transcript)),
            Some(cex) => {
                transcript.max_input_size = transcript.max_input_size.max(cex.tree.size());
                new_trees = subtrees(&cex.tree);
                transcript.counterexamples.push((cex.tree, cex.true_value));
            }
        }
    }
    Err(LearnError::RoundLimit(Box::new(transcript)))
}
