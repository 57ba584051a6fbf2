//! Benchmarks for the learner and the evaluators; see `benches/`.
