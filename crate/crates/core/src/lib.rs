//! Learning structurally unambiguous probabilistic grammars from structured
//! membership and equivalence queries.
//!
//! Trees are skeletal: leaves carry terminals and every internal node has
//! the same unlabeled symbol, ranked by arity. The learner builds a
//! co-linear multiplicity tree automaton from a [`Teacher`], and
//! [`transform`] turns it into a weighted or probabilistic grammar.

pub mod automata;
pub mod grammar;
pub mod learner;
pub mod oracle;
pub mod rational;
pub mod transform;
pub mod trees;

pub use automata::{parse_mta, AutomatonError, ColinearReport, Mta, MultilinearMap, Site};
pub use grammar::{parse_grammar, GrammarError, Rule, Sym, Wcfg, WcfgBuilder};
pub use learner::{learn, learn_with_observer, LearnError, LearnTranscript, Limits, ObservationTable};
pub use oracle::{Counterexample, Oracle, OracleError, TargetMode, Teacher};
pub use rational::{format_float, Rational};
pub use transform::{partition_functions, pmta_to_wcfg, wcfg_to_pcfg, wcfg_to_pmta, PartitionTable, Pcfg, TransformError};
pub use trees::{
    compose, compose_contexts, enumerate_trees, parse_context, parse_structured, parse_tree, subtrees, Context,
    RankedAlphabet, SkeletalTree, Structured, TreeError,
};
