//! Weighted context-free grammars with exact rational weights.
//!
//! A [`Wcfg`] carries a root distribution instead of a single start symbol.
//! The weight of a skeletal tree `s` is `Σ_N root(N) · 𝒲_N(s)`, where
//! `𝒲_N(s)` is the total weight of derivation trees rooted at `N` whose
//! skeleton is `s`. A grammar file's `start S` line is the root
//! distribution `{S: 1}`.
//!
//! A rule whose right-hand side is a single terminal (`N -> a`) derives the
//! leaf `a` directly; every other rule `N -> X₁ … X_k` derives an internal
//! node with `k` children. Terminals may appear inside longer right-hand
//! sides, where they match a leaf with the same name.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::rational::Rational;
use crate::trees::{RankedAlphabet, SkeletalTree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: duplicate rule `{rule}`")]
    DuplicateRule { line: usize, rule: String },
    #[error("line {line}: negative weight in `{rule}`")]
    NegativeWeight { line: usize, rule: String },
    #[error("line {line}: rule for `{lhs}` has an empty right-hand side")]
    EmptyRhs { line: usize, lhs: String },
    #[error("no root: the grammar needs a `start` line or a positive `root` weight")]
    NoRoot,
    #[error("line {line}: duplicate root `{name}`")]
    DuplicateRoot { line: usize, name: String },
    #[error("`{0}` is not a valid symbol name")]
    BadName(String),
    #[error("`{0}` is declared both as a terminal and a nonterminal")]
    SymbolConflict(String),
    #[error("the grammar has no terminals")]
    NoTerminals,
    #[error("unknown terminal `{0}`")]
    UnknownTerminal(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A right-hand-side symbol, by index into the grammar's symbol tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    N(usize),
    T(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub lhs: usize,
    pub rhs: Vec<Sym>,
    pub weight: Rational,
}

impl Rule {
    /// `N -> a`: derives a leaf rather than an internal node.
    pub fn is_leaf_rule(&self) -> bool {
        matches!(self.rhs.as_slice(), [Sym::T(_)])
    }
}

/// Total weight of derivations per nonterminal, indexed like
/// [`Wcfg::nonterminals`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(pub Vec<Rational>);

impl WeightVector {
    pub fn get(&self, g: &Wcfg, name: &str) -> Option<&Rational> {
        g.nonterminal_index(name).map(|i| &self.0[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// Both rules have the same right-hand side and different left-hand
    /// sides.
    SharedRhs,
    /// `first` derives a leaf `σ` that `second` also matches as a terminal,
    /// so that leaf has two readings.
    LeafAlsoTerminal,
}

/// Pair of rules that makes a grammar structurally ambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvertibilityWitness {
    pub first: usize,
    pub second: usize,
    pub kind: WitnessKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbabilisticReport {
    /// Rule-weight sum per nonterminal.
    pub sums: Vec<Rational>,
    pub root_sum: Rational,
}

impl ProbabilisticReport {
    pub fn is_probabilistic(&self) -> bool {
        self.root_sum.is_one() && self.sums.iter().all(Rational::is_one)
    }

    /// Nonterminal indices whose rule weights do not sum to one.
    pub fn failing(&self) -> Vec<usize> {
        (0..self.sums.len()).filter(|&i| !self.sums[i].is_one()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lint {
    ZeroWeightRule(usize),
    Unreachable(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wcfg {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    rules: Vec<Rule>,
    roots: BTreeMap<usize, Rational>,
    alphabet: RankedAlphabet,
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

/// Collects rules by symbol name and classifies symbols on [`build`].
///
/// Names that appear on a left-hand side, in a root entry, or are declared
/// with [`nonterminal`] are nonterminals; everything else is a terminal.
///
/// [`build`]: WcfgBuilder::build
/// [`nonterminal`]: WcfgBuilder::nonterminal
#[derive(Debug, Default, Clone)]
pub struct WcfgBuilder {
    declared: Vec<String>,
    extra_terminals: Vec<String>,
    extra_arities: Vec<usize>,
    rules: Vec<(usize, String, Vec<String>, Rational)>,
    roots: Vec<(usize, String, Rational)>,
}

impl WcfgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nonterminal(&mut self, name: &str) -> &mut Self {
        if !self.declared.iter().any(|d| d == name) {
            self.declared.push(name.to_string());
        }
        self
    }

    /// Adds a terminal to the alphabet even if no rule mentions it.
    pub fn terminal(&mut self, name: &str) -> &mut Self {
        self.extra_terminals.push(name.to_string());
        self
    }

    /// Adds an arity to the alphabet even if no rule uses it.
    pub fn arity(&mut self, k: usize) -> &mut Self {
        self.extra_arities.push(k);
        self
    }

    pub fn rule(&mut self, lhs: &str, rhs: &[&str], weight: Rational) -> &mut Self {
        self.rule_at(0, lhs, rhs.iter().map(|s| s.to_string()).collect(), weight)
    }

    fn rule_at(&mut self, line: usize, lhs: &str, rhs: Vec<String>, weight: Rational) -> &mut Self {
        self.rules.push((line, lhs.to_string(), rhs, weight));
        self
    }

    pub fn root(&mut self, name: &str, weight: Rational) -> &mut Self {
        self.roots.push((0, name.to_string(), weight));
        self
    }

    pub fn build(&self) -> Result<Wcfg, GrammarError> {
        let mut nonterminals: Vec<String> = Vec::new();
        let mut nt_index: HashMap<String, usize> = HashMap::new();
        let mut add_nt = |name: &str, list: &mut Vec<String>| {
            if !nt_index.contains_key(name) {
                nt_index.insert(name.to_string(), list.len());
                list.push(name.to_string());
            }
        };
        for name in &self.declared {
            add_nt(name, &mut nonterminals);
        }
        for (_, lhs, _, _) in &self.rules {
            add_nt(lhs, &mut nonterminals);
        }
        for (_, name, _) in &self.roots {
            add_nt(name, &mut nonterminals);
        }
        for name in &nonterminals {
            if !is_name(name) {
                return Err(GrammarError::BadName(name.clone()));
            }
        }
        for t in &self.extra_terminals {
            if nt_index.contains_key(t) {
                return Err(GrammarError::SymbolConflict(t.clone()));
            }
        }
        let terminal_set: BTreeSet<&str> = self
            .rules
            .iter()
            .flat_map(|(_, _, rhs, _)| rhs.iter())
            .filter(|s| !nt_index.contains_key(s.as_str()))
            .chain(&self.extra_terminals)
            .map(String::as_str)
            .collect();
        for t in &terminal_set {
            if !is_name(t) {
                return Err(GrammarError::BadName(t.to_string()));
            }
        }
        let terminals: Vec<String> = terminal_set.iter().map(|s| s.to_string()).collect();
        let t_index: HashMap<&str, usize> =
            terminals.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

        let mut rules = Vec::with_capacity(self.rules.len());
        let mut seen: HashMap<(usize, Vec<Sym>), ()> = HashMap::new();
        for (line, lhs, rhs, weight) in &self.rules {
            let text = || format!("{lhs} -> {}", rhs.join(" "));
            if rhs.is_empty() {
                return Err(GrammarError::EmptyRhs { line: *line, lhs: lhs.clone() });
            }
            if weight.is_negative() {
                return Err(GrammarError::NegativeWeight { line: *line, rule: text() });
            }
            let lhs_i = nt_index[lhs.as_str()];
            let rhs_syms: Vec<Sym> = rhs
                .iter()
                .map(|s| match nt_index.get(s.as_str()) {
                    Some(&i) => Sym::N(i),
                    None => Sym::T(t_index[s.as_str()]),
                })
                .collect();
            if seen.insert((lhs_i, rhs_syms.clone()), ()).is_some() {
                return Err(GrammarError::DuplicateRule { line: *line, rule: text() });
            }
            rules.push(Rule { lhs: lhs_i, rhs: rhs_syms, weight: weight.clone() });
        }

        let mut roots = BTreeMap::new();
        for (line, name, weight) in &self.roots {
            if weight.is_negative() {
                return Err(GrammarError::NegativeWeight { line: *line, rule: format!("root {name}") });
            }
            if roots.insert(nt_index[name.as_str()], weight.clone()).is_some() {
                return Err(GrammarError::DuplicateRoot { line: *line, name: name.clone() });
            }
        }
        if !roots.values().any(Rational::is_positive) {
            return Err(GrammarError::NoRoot);
        }
        if terminals.is_empty() {
            return Err(GrammarError::NoTerminals);
        }
        let mut arities: BTreeSet<usize> =
            rules.iter().filter(|r| !r.is_leaf_rule()).map(|r| r.rhs.len()).collect();
        arities.extend(self.extra_arities.iter().copied());
        if arities.is_empty() {
            // Only leaf rules: binary nodes are still part of the tree space.
            arities.insert(2);
        }
        let alphabet = RankedAlphabet::new(&terminals, arities)?;
        Ok(Wcfg { nonterminals, terminals, rules, roots, alphabet })
    }
}

impl Wcfg {
    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Root weights by nonterminal index.
    pub fn roots(&self) -> &BTreeMap<usize, Rational> {
        &self.roots
    }

    pub fn root_weight(&self, nt: usize) -> Rational {
        self.roots.get(&nt).cloned().unwrap_or_else(Rational::zero)
    }

    /// Terminals plus the arities used by non-leaf rules (binary when there
    /// are none).
    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn nonterminal_index(&self, name: &str) -> Option<usize> {
        self.nonterminals.iter().position(|n| n == name)
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|n| n == name)
    }

    pub fn symbol_name(&self, s: Sym) -> &str {
        match s {
            Sym::N(i) => &self.nonterminals[i],
            Sym::T(i) => &self.terminals[i],
        }
    }

    /// `N -> X Y` without the weight.
    pub fn rule_head(&self, i: usize) -> String {
        let r = &self.rules[i];
        let mut s = format!("{} ->", self.nonterminals[r.lhs]);
        for sym in &r.rhs {
            s.push(' ');
            s.push_str(self.symbol_name(*sym));
        }
        s
    }

    pub fn rule_text(&self, i: usize) -> String {
        format!("{} [{}]", self.rule_head(i), self.rules[i].weight)
    }

    /// `None` when no two rules share a right-hand side with different
    /// left-hand sides, and no terminal is both derived by a leaf rule and
    /// matched directly inside a longer rule.
    pub fn check_invertible(&self) -> Option<InvertibilityWitness> {
        let mut by_rhs: HashMap<&[Sym], usize> = HashMap::new();
        for (i, r) in self.rules.iter().enumerate() {
            match by_rhs.get(r.rhs.as_slice()) {
                Some(&j) if self.rules[j].lhs != r.lhs => {
                    return Some(InvertibilityWitness { first: j, second: i, kind: WitnessKind::SharedRhs })
                }
                Some(_) => {}
                None => {
                    by_rhs.insert(&r.rhs, i);
                }
            }
        }
        for (i, leaf) in self.rules.iter().enumerate().filter(|(_, r)| r.is_leaf_rule()) {
            let inline = self
                .rules
                .iter()
                .position(|r| !r.is_leaf_rule() && r.rhs.contains(&leaf.rhs[0]));
            if let Some(j) = inline {
                return Some(InvertibilityWitness { first: i, second: j, kind: WitnessKind::LeafAlsoTerminal });
            }
        }
        None
    }

    pub fn describe_witness(&self, w: &InvertibilityWitness) -> String {
        let (a, b) = (self.rule_text(w.first), self.rule_text(w.second));
        match w.kind {
            WitnessKind::SharedRhs => format!("`{a}` and `{b}` share a right-hand side"),
            WitnessKind::LeafAlsoTerminal => {
                let t = self.symbol_name(self.rules[w.first].rhs[0]);
                format!("`{a}` derives the leaf `{t}`, which `{b}` matches as a terminal")
            }
        }
    }

    pub fn check_probabilistic(&self) -> ProbabilisticReport {
        let mut sums = vec![Rational::zero(); self.nonterminals.len()];
        for r in &self.rules {
            sums[r.lhs] += &r.weight;
        }
        ProbabilisticReport { sums, root_sum: self.roots.values().sum() }
    }

    /// Zero-weight rules and nonterminals unreachable from a positive root.
    pub fn lint(&self) -> Vec<Lint> {
        let mut out: Vec<Lint> = (0..self.rules.len())
            .filter(|&i| self.rules[i].weight.is_zero())
            .map(Lint::ZeroWeightRule)
            .collect();
        let reachable = self.reachable();
        out.extend((0..self.nonterminals.len()).filter(|&n| !reachable[n]).map(Lint::Unreachable));
        out
    }

    /// Nonterminals reachable from a positive root through positive rules.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nonterminals.len()];
        let mut stack: Vec<usize> =
            self.roots.iter().filter(|(_, w)| w.is_positive()).map(|(&n, _)| n).collect();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            for r in self.rules.iter().filter(|r| r.lhs == n && r.weight.is_positive()) {
                for s in &r.rhs {
                    if let Sym::N(m) = *s {
                        if !seen[m] {
                            stack.push(m);
                        }
                    }
                }
            }
        }
        seen
    }

    /// `𝒲_V(s)` for every nonterminal `V`.
    pub fn weight_vector(&self, s: &SkeletalTree) -> Result<WeightVector, GrammarError> {
        let index = RuleIndex::new(self);
        let mut memo = HashMap::new();
        index.inside(s, &mut memo).map(WeightVector)
    }

    /// `Σ_N root(N) · 𝒲_N(s)`.
    pub fn tree_weight(&self, s: &SkeletalTree) -> Result<Rational, GrammarError> {
        let v = self.weight_vector(s)?;
        Ok(self.roots.iter().map(|(&n, w)| w * &v.0[n]).sum())
    }

    /// Evaluator that reuses its rule index and subtree memo across calls.
    pub fn evaluator(&self) -> TreeWeigher<'_> {
        TreeWeigher { grammar: self, index: RuleIndex::new(self), memo: HashMap::new() }
    }
}

/// Repeated [`Wcfg::tree_weight`] with shared memoization.
pub struct TreeWeigher<'g> {
    grammar: &'g Wcfg,
    index: RuleIndex<'g>,
    memo: HashMap<SkeletalTree, Vec<Rational>>,
}

impl TreeWeigher<'_> {
    pub fn tree_weight(&mut self, s: &SkeletalTree) -> Result<Rational, GrammarError> {
        let v = self.index.inside(s, &mut self.memo)?;
        Ok(self.grammar.roots.iter().map(|(&n, w)| w * &v[n]).sum())
    }
}

struct RuleIndex<'g> {
    grammar: &'g Wcfg,
    leaf_rules: HashMap<&'g str, Vec<(usize, &'g Rational)>>,
    by_arity: BTreeMap<usize, Vec<&'g Rule>>,
}

impl<'g> RuleIndex<'g> {
    fn new(g: &'g Wcfg) -> Self {
        let mut leaf_rules: HashMap<&str, Vec<(usize, &Rational)>> = HashMap::new();
        let mut by_arity: BTreeMap<usize, Vec<&Rule>> = BTreeMap::new();
        for r in &g.rules {
            if r.weight.is_zero() {
                continue;
            }
            match r.rhs.as_slice() {
                [Sym::T(t)] => leaf_rules.entry(&g.terminals[*t]).or_default().push((r.lhs, &r.weight)),
                rhs => by_arity.entry(rhs.len()).or_default().push(r),
            }
        }
        RuleIndex { grammar: g, leaf_rules, by_arity }
    }

    fn inside(
        &self,
        s: &SkeletalTree,
        memo: &mut HashMap<SkeletalTree, Vec<Rational>>,
    ) -> Result<Vec<Rational>, GrammarError> {
        if let Some(v) = memo.get(s) {
            return Ok(v.clone());
        }
        let g = self.grammar;
        let mut out = vec![Rational::zero(); g.nonterminals.len()];
        if let Some(label) = s.label() {
            if g.terminal_index(label).is_none() {
                return Err(GrammarError::UnknownTerminal(label.to_string()));
            }
            for &(n, w) in self.leaf_rules.get(label.as_ref()).into_iter().flatten() {
                out[n] += w;
            }
        } else {
            let children: Vec<SkeletalTree> = s.children().collect();
            let child_vectors = children
                .iter()
                .map(|c| self.inside(c, memo))
                .collect::<Result<Vec<_>, _>>()?;
            for rule in self.by_arity.get(&children.len()).into_iter().flatten() {
                let mut product = rule.weight.clone();
                for (i, sym) in rule.rhs.iter().enumerate() {
                    match *sym {
                        Sym::T(t) => {
                            if children[i].label().map(|l| l.as_ref()) != Some(g.terminals[t].as_str()) {
                                product = Rational::zero();
                            }
                        }
                        Sym::N(m) => product *= &child_vectors[i][m],
                    }
                    if product.is_zero() {
                        break;
                    }
                }
                if !product.is_zero() {
                    out[rule.lhs] += &product;
                }
            }
        }
        memo.insert(s.clone(), out.clone());
        Ok(out)
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax { line, column, message: message.into() }
}

/// Splits a line into (token, 1-based column) pairs.
fn words(line: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&line[s..i], line[..s].chars().count() + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&line[s..], line[..s].chars().count() + 1));
    }
    out
}

/// Splits a trailing `[w]` off a line body.
fn split_weight(body: &str, line: usize) -> Result<(&str, Option<Rational>), GrammarError> {
    let trimmed = body.trim_end();
    if !trimmed.ends_with(']') {
        if let Some(pos) = trimmed.find(['[', ']']) {
            return Err(syntax(line, trimmed[..pos].chars().count() + 1, "weight must end the line"));
        }
        return Ok((trimmed, None));
    }
    let open = trimmed
        .rfind('[')
        .ok_or_else(|| syntax(line, trimmed.chars().count(), "unmatched `]`"))?;
    let inner = &trimmed[open + 1..trimmed.len() - 1];
    let column = trimmed[..open].chars().count() + 2;
    let weight: Rational = inner
        .trim()
        .parse()
        .map_err(|_| syntax(line, column, format!("bad weight `{inner}`")))?;
    let head = &trimmed[..open];
    if head.contains(['[', ']']) {
        return Err(syntax(line, column, "more than one weight"));
    }
    Ok((head, Some(weight)))
}

/// Parses the line-based grammar format.
///
/// ```text
/// # comment
/// start S
/// S -> a S2 [1/2]
/// S -> a b [0.5]
/// S2 -> S b [1]
/// ```
///
/// `root N [w]` lines (repeatable) give a general root distribution. A
/// missing rule weight means `1`.
pub fn parse_grammar(text: &str) -> Result<Wcfg, GrammarError> {
    let mut b = WcfgBuilder::new();
    let mut start_line: Option<usize> = None;
    let mut root_line: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let (head, weight) = split_weight(body, line)?;
        let toks = words(head);
        let Some(&(first, first_col)) = toks.first() else {
            return Err(syntax(line, 1, "missing rule"));
        };
        match first {
            "start" if toks.get(1).map(|t| t.0) != Some("->") => {
                if weight.is_some() {
                    return Err(syntax(line, first_col, "`start` takes no weight"));
                }
                if toks.len() != 2 {
                    return Err(syntax(line, first_col, "expected `start <nonterminal>`"));
                }
                if start_line.is_some() || root_line.is_some() {
                    return Err(syntax(line, first_col, "root already declared"));
                }
                check_name(toks[1], line)?;
                start_line = Some(line);
                b.roots.push((line, toks[1].0.to_string(), Rational::one()));
            }
            "root" if toks.get(1).map(|t| t.0) != Some("->") => {
                if toks.len() != 2 {
                    return Err(syntax(line, first_col, "expected `root <nonterminal> [<weight>]`"));
                }
                if start_line.is_some() {
                    return Err(syntax(line, first_col, "`root` cannot follow `start`"));
                }
                check_name(toks[1], line)?;
                root_line = Some(line);
                let w = weight.unwrap_or_else(Rational::one);
                b.roots.push((line, toks[1].0.to_string(), w));
            }
            _ => {
                check_name((first, first_col), line)?;
                match toks.get(1) {
                    Some(&("->", _)) => {}
                    Some(&(tok, col)) => return Err(syntax(line, col, format!("expected `->`, found `{tok}`"))),
                    None => return Err(syntax(line, first_col + first.len(), "expected `->`")),
                }
                let rhs: Vec<String> = toks[2..]
                    .iter()
                    .map(|&t| check_name(t, line).map(|_| t.0.to_string()))
                    .collect::<Result<_, _>>()?;
                b.rule_at(line, first, rhs, weight.unwrap_or_else(Rational::one));
            }
        }
    }
    b.build()
}

fn check_name((tok, col): (&str, usize), line: usize) -> Result<(), GrammarError> {
    if is_name(tok) {
        Ok(())
    } else {
        Err(syntax(line, col, format!("bad symbol `{tok}`")))
    }
}

impl fmt::Display for Wcfg {
    /// `start X` when the root distribution is `{X: 1}`, else `root` lines;
    /// then the rules in order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        match self.roots.iter().collect::<Vec<_>>().as_slice() {
            [(&n, w)] if w.is_one() => writeln!(out, "start {}", self.nonterminals[n])?,
            all => {
                for (&n, w) in all {
                    writeln!(out, "root {} [{}]", self.nonterminals[n], w)?;
                }
            }
        }
        for i in 0..self.rules.len() {
            writeln!(out, "{}", self.rule_text(i))?;
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_tree;

    pub(crate) const ANBN: &str = "start S\nS -> a S2 [1/2]\nS -> a b [1/2]\nS2 -> S b [1]\n";
    const LEARNED: &str = "root N3 [1/2]\nN1 -> a [1]\nN2 -> b [1]\nN3 -> N1 N2 [1]\nN3 -> N1 N4 [1/2]\nN4 -> N3 N2 [1]\n";

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn tree(g: &Wcfg, s: &str) -> SkeletalTree {
        parse_tree(s, g.alphabet()).unwrap()
    }

    #[test]
    fn parses_target_grammar() {
        let g = parse_grammar(ANBN).unwrap();
        assert_eq!(g.nonterminals(), ["S", "S2"]);
        assert_eq!(g.terminals(), ["a", "b"]);
        assert_eq!(g.rules().len(), 3);
        assert_eq!(g.root_weight(0), Rational::one());
        assert_eq!(g.alphabet().arities(), [2]);
        assert_eq!(g.to_string(), ANBN);
    }

    #[test]
    fn parses_single_rule_and_learned_grammar() {
        let g = parse_grammar("start S\nS -> a [1]").unwrap();
        assert_eq!(g.rules().len(), 1);
        assert!(g.rules()[0].is_leaf_rule());

        let g = parse_grammar(LEARNED).unwrap();
        assert_eq!(g.nonterminals(), ["N1", "N2", "N3", "N4"]);
        assert_eq!(g.root_weight(2), q("1/2"));
        assert_eq!(g.to_string(), LEARNED);
    }

    #[test]
    fn decimal_weights_are_exact() {
        let g = parse_grammar("start S\nS -> a b [0.25]\nS -> b a").unwrap();
        assert_eq!(g.rules()[0].weight, q("1/4"));
        assert_eq!(g.rules()[1].weight, Rational::one());
    }

    #[test]
    fn parse_errors() {
        let err = |t: &str| parse_grammar(t).unwrap_err();
        assert!(matches!(err("start S\nS a b [1]"), GrammarError::Syntax { line: 2, column: 3, .. }));
        assert!(matches!(err("start S\nS -> a [x]"), GrammarError::Syntax { line: 2, .. }));
        assert!(matches!(err("start S\nS -> a [1]\nS -> a [1/2]"), GrammarError::DuplicateRule { line: 3, .. }));
        assert!(matches!(err("start S\nS -> a [-1]"), GrammarError::NegativeWeight { line: 2, .. }));
        assert!(matches!(err("start S\nS -> [1]"), GrammarError::EmptyRhs { line: 2, .. }));
        assert_eq!(err("S -> a [1]"), GrammarError::NoRoot);
        assert_eq!(err("root S [0]\nS -> a"), GrammarError::NoRoot);
        assert!(matches!(err("root S [1]\nroot S [1]\nS -> a"), GrammarError::DuplicateRoot { .. }));
        assert!(matches!(err("start S\nS -> a-b"), GrammarError::Syntax { .. }));
        assert!(matches!(err("start S\nstart T\nS -> a"), GrammarError::Syntax { line: 2, .. }));
        assert!(matches!(err("start S\nS -> a [1] b"), GrammarError::Syntax { .. }));
        assert_eq!(err("start S\nS -> S S"), GrammarError::NoTerminals);
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = parse_grammar("# target\n\nstart S   # root\nS -> a b [1] # rule\n").unwrap();
        assert_eq!(g.rules().len(), 1);
    }

    #[test]
    fn invertibility() {
        let g = parse_grammar(ANBN).unwrap();
        assert_eq!(g.check_invertible(), None);
        let dup = parse_grammar("root N1 [1]\nroot N2 [1]\nN1 -> a a [1]\nN2 -> a a [1]").unwrap();
        let w = dup.check_invertible().unwrap();
        assert_eq!(dup.rule_head(w.first), "N1 -> a a");
        assert_eq!(dup.rule_head(w.second), "N2 -> a a");
        let two_state = parse_grammar(
            "start N1\nN1 -> a N1 [1/2]\nN1 -> a N2 [1/3]\nN1 -> a a [1/6]\n\
             N2 -> a N1 [1/4]\nN2 -> a N2 [1/4]\nN2 -> a a [1/2]",
        )
        .unwrap();
        let w = two_state.check_invertible().unwrap();
        assert_eq!(two_state.rule_head(w.first), "N1 -> a N1");
        assert_eq!(two_state.rule_head(w.second), "N2 -> a N1");

        let mixed = parse_grammar("start S\nS -> b T [1]\nT -> b [1]").unwrap();
        let w = mixed.check_invertible().unwrap();
        assert_eq!(w.kind, WitnessKind::LeafAlsoTerminal);
        assert_eq!(
            mixed.describe_witness(&w),
            "`T -> b [1]` derives the leaf `b`, which `S -> b T [1]` matches as a terminal"
        );
    }

    #[test]
    fn probabilistic_check() {
        let g = parse_grammar(ANBN).unwrap();
        assert!(g.check_probabilistic().is_probabilistic());
        let learned = parse_grammar(LEARNED).unwrap();
        let report = learned.check_probabilistic();
        assert_eq!(report.sums[2], q("3/2"));
        assert!(!report.is_probabilistic());
        let empty = parse_grammar("root S [1]\nroot T [0]\nS -> a").unwrap();
        let report = empty.check_probabilistic();
        assert_eq!(report.sums[1], Rational::zero());
        assert_eq!(report.failing(), [1]);
    }

    #[test]
    fn weight_vectors() {
        let g = parse_grammar(ANBN).unwrap();
        let v = g.weight_vector(&tree(&g, "(a b)")).unwrap();
        assert_eq!(v.0, [q("1/2"), q("0")]);
        let v = g.weight_vector(&tree(&g, "((a b) b)")).unwrap();
        assert_eq!(v.0, [q("0"), q("1/2")]);
        let v = g.weight_vector(&tree(&g, "a")).unwrap();
        assert_eq!(v.0, [q("0"), q("0")]);
        assert_eq!(v.get(&g, "S2"), Some(&q("0")));
    }

    #[test]
    fn tree_weights() {
        let g = parse_grammar(ANBN).unwrap();
        assert_eq!(g.tree_weight(&tree(&g, "(a ((a b) b))")).unwrap(), q("1/4"));
        assert_eq!(g.tree_weight(&tree(&g, "(a a)")).unwrap(), q("0"));
        let learned = parse_grammar(LEARNED).unwrap();
        assert_eq!(learned.tree_weight(&tree(&learned, "(a b)")).unwrap(), q("1/2"));
        let al = RankedAlphabet::new(["a", "z"], [2]).unwrap();
        let foreign = parse_tree("(a z)", &al).unwrap();
        assert_eq!(g.tree_weight(&foreign), Err(GrammarError::UnknownTerminal("z".into())));
    }

    #[test]
    fn lints() {
        let g = parse_grammar("start S\nS -> a [0]\nS -> b [1]\nT -> a [1]").unwrap();
        assert_eq!(g.lint(), [Lint::ZeroWeightRule(0), Lint::Unreachable(1)]);
    }
}
