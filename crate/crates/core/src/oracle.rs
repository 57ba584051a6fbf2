//! A teacher that answers membership and equivalence queries from a target
//! grammar.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use thiserror::Error;

use crate::automata::{AutomatonError, Mta};
use crate::grammar::{GrammarError, InvertibilityWitness, ProbabilisticReport, Wcfg};
use crate::rational::Rational;
use crate::trees::{enumerate_trees, RankedAlphabet, SkeletalTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("target grammar is not invertible: {description}")]
    NotInvertible { description: String, witness: InvertibilityWitness },
    #[error("target grammar is not probabilistic (rule sums: {summary})")]
    NotProbabilistic { summary: String, report: ProbabilisticReport },
    #[error("seq bound must be at least 1")]
    BadSeqBound,
    #[error("hypothesis alphabet does not match the target alphabet")]
    AlphabetMismatch,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub tree: SkeletalTree,
    pub true_value: Rational,
}

/// Structured membership and equivalence queries.
pub trait Oracle {
    fn alphabet(&self) -> &RankedAlphabet;

    fn smq(&self, s: &SkeletalTree) -> Result<Rational, OracleError>;

    /// `None` when the hypothesis agrees with the target.
    fn seq(&self, hypothesis: &Mta) -> Result<Option<Counterexample>, OracleError>;
}

/// How strictly [`Teacher::new`] validates the target weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetMode {
    /// Rule weights of every nonterminal, and the root weights, sum to one.
    #[default]
    Probabilistic,
    /// Any nonnegative weights.
    Weighted,
}

/// Answers queries exactly from a target grammar. Equivalence is checked by
/// comparing every tree up to `seq_bound` nodes in canonical order.
#[derive(Debug)]
pub struct Teacher {
    target: Wcfg,
    seq_bound: usize,
    smq_count: AtomicUsize,
    seq_count: AtomicUsize,
    // Target values of all trees up to the bound, in canonical order.
    reference: OnceLock<Vec<(SkeletalTree, Rational)>>,
}

impl Teacher {
    pub fn new(target: Wcfg, seq_bound: usize) -> Result<Self, OracleError> {
        Self::with_mode(target, seq_bound, TargetMode::Probabilistic)
    }

    pub fn with_mode(target: Wcfg, seq_bound: usize, mode: TargetMode) -> Result<Self, OracleError> {
        if let Some(witness) = target.check_invertible() {
            return Err(OracleError::NotInvertible { description: target.describe_witness(&witness), witness });
        }
        if mode == TargetMode::Probabilistic {
            let report = target.check_probabilistic();
            if !report.is_probabilistic() {
                let mut parts: Vec<String> = report
                    .failing()
                    .into_iter()
                    .map(|n| format!("{} = {}", target.nonterminals()[n], report.sums[n]))
                    .collect();
                if !report.root_sum.is_one() {
                    parts.push(format!("root = {}", report.root_sum));
                }
                return Err(OracleError::NotProbabilistic { summary: parts.join(", "), report });
            }
        }
        if seq_bound < 1 {
            return Err(OracleError::BadSeqBound);
        }
        Ok(Teacher {
            target,
            seq_bound,
            smq_count: AtomicUsize::new(0),
            seq_count: AtomicUsize::new(0),
            reference: OnceLock::new(),
        })
    }

    pub fn target(&self) -> &Wcfg {
        &self.target
    }

    pub fn seq_bound(&self) -> usize {
        self.seq_bound
    }

    pub fn smq_count(&self) -> usize {
        self.smq_count.load(Ordering::Relaxed)
    }

    pub fn seq_count(&self) -> usize {
        self.seq_count.load(Ordering::Relaxed)
    }

    fn reference(&self) -> Result<&[(SkeletalTree, Rational)], OracleError> {
        if let Some(r) = self.reference.get() {
            return Ok(r);
        }
        let mut weigher = self.target.evaluator();
        let table = enumerate_trees(self.target.alphabet(), self.seq_bound)
            .map(|t| weigher.tree_weight(&t).map(|w| (t, w)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.reference.get_or_init(|| table))
    }
}

impl Oracle for Teacher {
    fn alphabet(&self) -> &RankedAlphabet {
        self.target.alphabet()
    }

    fn smq(&self, s: &SkeletalTree) -> Result<Rational, OracleError> {
        self.target.alphabet().validate(s).map_err(GrammarError::from)?;
        self.smq_count.fetch_add(1, Ordering::Relaxed);
        Ok(self.target.tree_weight(s)?)
    }

    fn seq(&self, hypothesis: &Mta) -> Result<Option<Counterexample>, OracleError> {
        if hypothesis.alphabet() != self.target.alphabet() {
            return Err(OracleError::AlphabetMismatch);
        }
        self.seq_count.fetch_add(1, Ordering::Relaxed);
        for (t, want) in self.reference()? {
            if &hypothesis.value(t)? != want {
                return Ok(Some(Counterexample { tree: t.clone(), true_value: want.clone() }));
            }
        }
        Ok(None)
    }
}
