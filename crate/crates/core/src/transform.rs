//! Conversions between grammars and automata, and PCFG renormalization.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::automata::{Mta, Site};
use crate::grammar::{GrammarError, Sym, Wcfg, WcfgBuilder};
use crate::rational::{format_float, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("negative weight at {0}")]
    NegativeWeight(Site),
    #[error("partition functions diverge (after {iterations} iterations, f_{nonterminal} is unbounded or unsettled)")]
    Divergence { iterations: usize, nonterminal: String },
    #[error("nonterminal `{0}` is reachable but has partition value 0")]
    ZeroPartition(String),
    #[error("tolerance must be positive and max_iter at least 1")]
    BadParameters,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

const DIVERGENCE_BOUND: f64 = 1e12;

/// Reads an automaton with nonnegative weights as a grammar with
/// nonterminals `N1..Nd`: `root(Nᵢ) = λ[i]`, `Nᵢ -> σ [μ_σ[i]]` and
/// `Nᵢ -> N_{j₁} … N_{j_k} [c^i_{j₁..j_k}]`. Zero-weight rules are omitted.
///
/// Rules are grouped by left-hand side; internal rules come first, by
/// arity and column, then leaf rules in terminal order.
pub fn pmta_to_wcfg(a: &Mta) -> Result<Wcfg, TransformError> {
    if let Some(site) = a.check_colinear().negative {
        return Err(TransformError::NegativeWeight(site));
    }
    let terminals = a.alphabet().terminals();
    let mut prefix = String::from("N");
    while terminals.iter().any(|t| t.strip_prefix(prefix.as_str()).is_some_and(|r| r.chars().all(|c| c.is_ascii_digit()))) {
        prefix.push('_');
    }
    let names: Vec<String> = (1..=a.dim()).map(|i| format!("{prefix}{i}")).collect();

    let mut by_lhs: Vec<Vec<(Vec<&str>, Rational)>> = vec![Vec::new(); a.dim()];
    for map in a.transitions() {
        for (i, tuple, c) in map.entries() {
            by_lhs[i].push((tuple.iter().map(|&j| names[j].as_str()).collect(), c.clone()));
        }
    }
    for t in terminals {
        let mu = a.leaf(t).expect("alphabet terminal");
        for (i, w) in mu.iter().enumerate() {
            if !w.is_zero() {
                by_lhs[i].push((vec![t.as_ref()], w.clone()));
            }
        }
    }

    let mut b = WcfgBuilder::new();
    for n in &names {
        b.nonterminal(n);
    }
    for t in terminals {
        b.terminal(t);
    }
    for &k in a.alphabet().arities() {
        b.arity(k);
    }
    for (i, w) in a.lambda().iter().enumerate() {
        if !w.is_zero() {
            b.root(&names[i], w.clone());
        }
    }
    for (i, rules) in by_lhs.into_iter().enumerate() {
        for (rhs, w) in rules {
            b.rule(&names[i], &rhs, w);
        }
    }
    Ok(b.build()?)
}

/// Coordinate of a grammar symbol in [`wcfg_to_pmta`]: nonterminals first,
/// then terminals.
pub fn symbol_coordinate(g: &Wcfg, s: Sym) -> usize {
    match s {
        Sym::N(i) => i,
        Sym::T(i) => g.nonterminals().len() + i,
    }
}

/// The automaton of dimension `|V| + |Σ|` computing the grammar's tree
/// series.
///
/// `λ` holds the root weights. A leaf rule `V -> σ` contributes to
/// `μ_σ[V]`; a terminal that occurs inside a longer right-hand side also
/// gets its own coordinate `μ_σ[σ] = 1`, which those rules reference.
/// Terminals that only occur in leaf rules get no coordinate weight, so an
/// invertible grammar yields an automaton whose columns have at most one
/// nonzero.
pub fn wcfg_to_pmta(g: &Wcfg) -> Mta {
    let n = g.nonterminals().len() + g.terminals().len();
    let mut a = Mta::new(g.alphabet().clone(), n);
    for (&root, w) in g.roots() {
        a.set_lambda(root, w.clone()).expect("root index in range");
    }
    let mut leaf_weight: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for r in g.rules() {
        match r.rhs.as_slice() {
            [Sym::T(t)] => *leaf_weight.entry((*t, r.lhs)).or_default() += &r.weight,
            rhs => {
                for s in rhs {
                    if let Sym::T(t) = *s {
                        leaf_weight.insert((t, symbol_coordinate(g, *s)), Rational::one());
                    }
                }
                let tuple: Vec<usize> = rhs.iter().map(|&s| symbol_coordinate(g, s)).collect();
                a.set_entry(r.lhs, &tuple, r.weight.clone()).expect("rule arity is in the alphabet");
            }
        }
    }
    for ((t, i), w) in leaf_weight {
        a.set_leaf(&g.terminals()[t], i, w).expect("terminal in alphabet");
    }
    a
}

/// Fixed-point totals `f_N` for every nonterminal.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTable {
    pub values: Vec<f64>,
    /// Sweeps before the last, confirming one.
    pub iterations: usize,
    /// Largest change in the confirming sweep.
    pub residual: f64,
}

impl PartitionTable {
    pub fn get(&self, g: &Wcfg, name: &str) -> Option<f64> {
        g.nonterminal_index(name).map(|i| self.values[i])
    }
}

/// Jacobi iteration of `f_N = Σ θ · Π factor(Xᵢ)` from zero, where a
/// terminal contributes 1 and a nonterminal `M` contributes `f_M`.
pub fn partition_functions(g: &Wcfg, tol: f64, max_iter: usize) -> Result<PartitionTable, TransformError> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(TransformError::BadParameters);
    }
    let rules: Vec<(usize, f64, &[Sym])> =
        g.rules().iter().map(|r| (r.lhs, r.weight.to_f64(), r.rhs.as_slice())).collect();
    let mut f = vec![0.0; g.nonterminals().len()];
    let mut next = vec![0.0; f.len()];
    for sweep in 1..=max_iter {
        next.iter_mut().for_each(|x| *x = 0.0);
        for &(lhs, w, rhs) in &rules {
            let mut p = w;
            for s in rhs {
                if let Sym::N(m) = *s {
                    p *= f[m];
                }
            }
            next[lhs] += p;
        }
        let mut residual: f64 = 0.0;
        for (i, (&old, &new)) in f.iter().zip(&next).enumerate() {
            if !(new <= DIVERGENCE_BOUND) {
                return Err(TransformError::Divergence {
                    iterations: sweep,
                    nonterminal: g.nonterminals()[i].clone(),
                });
            }
            residual = residual.max((new - old).abs());
        }
        std::mem::swap(&mut f, &mut next);
        if residual < tol {
            return Ok(PartitionTable { values: f, iterations: sweep - 1, residual });
        }
    }
    let worst = (0..f.len())
        .max_by(|&i, &j| (f[i] - next[i]).abs().total_cmp(&(f[j] - next[j]).abs()))
        .unwrap_or(0);
    Err(TransformError::Divergence {
        iterations: max_iter,
        nonterminal: g.nonterminals().get(worst).cloned().unwrap_or_default(),
    })
}

/// A renormalized grammar. The float probabilities are authoritative;
/// `grammar` holds their exact binary values as rationals.
#[derive(Debug, Clone)]
pub struct Pcfg {
    pub grammar: Wcfg,
    /// Aligned with `grammar.rules()`.
    pub probabilities: Vec<f64>,
    pub root_probabilities: BTreeMap<usize, f64>,
    /// Partition values of the source grammar.
    pub partition: PartitionTable,
}

/// `θ'(N -> X₁..X_k) = θ · Π f_{Xᵢ} / f_N` and
/// `root'(N) = root(N) · f_N / Σ_M root(M) · f_M`.
///
/// Nonterminals with `f_N = 0` are dropped when unreachable and rejected
/// otherwise; rules whose new weight is zero are dropped.
pub fn wcfg_to_pcfg(g: &Wcfg, tol: f64, max_iter: usize) -> Result<Pcfg, TransformError> {
    let partition = partition_functions(g, tol, max_iter)?;
    let f = &partition.values;
    let reachable = g.reachable();
    if let Some(n) = (0..f.len()).find(|&n| reachable[n] && f[n] == 0.0) {
        return Err(TransformError::ZeroPartition(g.nonterminals()[n].clone()));
    }
    let names = g.nonterminals();
    let mut b = WcfgBuilder::new();
    for (n, name) in names.iter().enumerate() {
        if f[n] > 0.0 {
            b.nonterminal(name);
        }
    }
    for t in g.terminals() {
        b.terminal(t);
    }
    for &k in g.alphabet().arities() {
        b.arity(k);
    }
    let total: f64 = g.roots().iter().map(|(&n, w)| w.to_f64() * f[n]).sum();
    let mut root_probabilities = BTreeMap::new();
    for (&n, w) in g.roots() {
        let p = w.to_f64() * f[n] / total;
        if p > 0.0 {
            b.root(&names[n], exact(p));
            root_probabilities.insert(n, p);
        }
    }
    let mut probabilities = Vec::new();
    for r in g.rules() {
        if f[r.lhs] == 0.0 {
            continue;
        }
        let mut p = r.weight.to_f64();
        for s in &r.rhs {
            if let Sym::N(m) = *s {
                p *= f[m];
            }
        }
        p /= f[r.lhs];
        if p > 0.0 {
            let rhs: Vec<&str> = r.rhs.iter().map(|&s| g.symbol_name(s)).collect();
            b.rule(&names[r.lhs], &rhs, exact(p));
            probabilities.push(p);
        }
    }
    let grammar = b.build()?;
    // Reindex roots by the new grammar's nonterminal order.
    let root_probabilities = root_probabilities
        .into_iter()
        .map(|(n, p)| (grammar.nonterminal_index(&names[n]).expect("kept root"), p))
        .collect();
    Ok(Pcfg { grammar, probabilities, root_probabilities, partition })
}

fn exact(p: f64) -> Rational {
    Rational::from_f64(p).expect("finite probability")
}

impl Pcfg {
    /// Largest deviation from 1 among per-nonterminal sums and the root sum.
    pub fn normalization_error(&self) -> f64 {
        let mut sums = vec![0.0; self.grammar.nonterminals().len()];
        for (r, p) in self.grammar.rules().iter().zip(&self.probabilities) {
            sums[r.lhs] += p;
        }
        let root: f64 = self.root_probabilities.values().sum();
        sums.iter().chain([&root]).map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for Pcfg {
    /// Grammar text with weights printed to 12 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.grammar;
        let mut out = String::new();
        match self.root_probabilities.iter().collect::<Vec<_>>().as_slice() {
            [(&n, 1.0)] => writeln!(out, "start {}", g.nonterminals()[n])?,
            all => {
                for (&n, &p) in all {
                    writeln!(out, "root {} [{}]", g.nonterminals()[n], format_float(p))?;
                }
            }
        }
        for (i, p) in self.probabilities.iter().enumerate() {
            writeln!(out, "{} [{}]", g.rule_head(i), format_float(*p))?;
        }
        f.write_str(&out)
    }
}
