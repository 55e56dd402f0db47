//! Chronological evaluation: every theorem is ranked with cutoff = its own
//! id, the top slice is handed to a prover, and verdicts are collected.
//! The learn/prove loop feeds solved verdicts back as new proofs between
//! passes.

mod method;
mod metrics;
mod prover;

pub use method::{Learner, MethodSet, MethodSpec, RankingEngine, Restriction};
pub use metrics::{
    greedy_cover, percent, sotac, sotac_exact, summary, CoverStep, EvalReport, ResultRow,
    SummaryRow,
};
pub use prover::{
    parse_szs, szs_status, ExternalProver, Problem, ProverAdapter, Status, SyntheticOracle,
    Verdict,
};

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{CorpusError, CorpusStore, FormulaId};
use crate::ensemble::EnsembleError;
use crate::lsi::LsiError;
use crate::rankers::RankError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown method `{name}` (available: {})", available.join(", "))]
    UnknownMethod { name: String, available: Vec<String> },
    #[error("invalid method {0}")]
    InvalidMethod(String),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Lsi(#[from] LsiError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("results line {line}: {message}")]
    Results { line: usize, message: String },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Theorems and lemmas in chronological order.
pub fn provable_theorems(store: &CorpusStore) -> Vec<FormulaId> {
    store
        .ids()
        .filter(|&id| store.formula(id).role.is_provable())
        .collect()
}

/// Every `stride`-th theorem, starting with the first.
pub fn sample_theorems(store: &CorpusStore, stride: usize) -> Vec<FormulaId> {
    assert!(stride >= 1, "stride must be positive");
    provable_theorems(store).into_iter().step_by(stride).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub theorem: FormulaId,
    pub method: String,
    pub offered: usize,
    pub verdict: Verdict,
}

impl Attempt {
    pub fn to_row(&self, store: &CorpusStore) -> ResultRow {
        ResultRow {
            theorem: store.name(self.theorem).to_string(),
            method: self.method.clone(),
            status: self.verdict.status,
            seconds: self.verdict.seconds,
            used: self.verdict.used.iter().map(|&p| store.name(p).to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Seconds per attempt; only external provers observe it.
    pub time_limit: f64,
    /// Worker threads; 1 runs everything on the calling thread.
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            time_limit: 10.0,
            threads: 1,
        }
    }
}

/// Ranks, slices and proves one theorem with one method.
pub fn attempt(
    engine: &RankingEngine<'_>,
    prover: &dyn ProverAdapter,
    theorem: FormulaId,
    method: &str,
    time_limit: f64,
    restriction: Option<&Restriction>,
) -> Result<Attempt, EvalError> {
    let store = engine.store();
    let query = engine.theorem_query(theorem);
    let conjecture = &store.formula(theorem).body;
    let premises = engine.select(method, &query, theorem, Some(conjecture), restriction)?;
    let verdict = prover.prove(
        &Problem {
            store,
            theorem,
            premises: &premises,
        },
        time_limit,
    );
    Ok(Attempt {
        theorem,
        method: method.to_string(),
        offered: premises.len(),
        verdict,
    })
}

fn run_all<T: Send>(threads: usize, work: impl FnOnce() -> T + Send) -> Result<T, EvalError> {
    if threads <= 1 {
        return Ok(work());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    Ok(pool.install(work))
}

/// Attempts every (theorem, method) pair, theorem-major, handing each
/// finished attempt to `sink` in that order. Work is done in chunks so the
/// sink sees results incrementally.
pub fn evaluate_streaming(
    engine: &RankingEngine<'_>,
    pairs: &[(FormulaId, String)],
    prover: &dyn ProverAdapter,
    options: &EvalOptions,
    restrictions: Option<&HashMap<FormulaId, Restriction>>,
    sink: &mut dyn FnMut(Attempt) -> Result<(), EvalError>,
) -> Result<(), EvalError> {
    for m in pairs.iter().map(|(_, m)| m).collect::<BTreeSet<_>>() {
        engine.methods().get(m)?;
    }
    let chunk = (options.threads.max(1) * 8).max(16);
    for block in pairs.chunks(chunk) {
        let one = |(t, m): &(FormulaId, String)| {
            let r = restrictions.and_then(|rs| rs.get(t));
            attempt(engine, prover, *t, m, options.time_limit, r)
        };
        let results: Vec<Result<Attempt, EvalError>> = if options.threads <= 1 {
            block.iter().map(one).collect()
        } else {
            run_all(options.threads, || block.par_iter().map(one).collect())?
        };
        for r in results {
            sink(r?)?;
        }
    }
    Ok(())
}

/// Every method on every sampled theorem.
pub fn evaluate(
    engine: &RankingEngine<'_>,
    methods: &[String],
    sample: &[FormulaId],
    prover: &dyn ProverAdapter,
    options: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let pairs: Vec<(FormulaId, String)> = sample
        .iter()
        .flat_map(|&t| methods.iter().map(move |m| (t, m.clone())))
        .collect();
    let store = engine.store();
    let mut rows = Vec::with_capacity(pairs.len());
    evaluate_streaming(engine, &pairs, prover, options, None, &mut |a| {
        rows.push(a.to_row(store));
        Ok(())
    })?;
    Ok(EvalReport::new(rows))
}

/// How the candidates of a pass are chosen.
#[derive(Debug, Clone, Default)]
pub enum PassMode {
    #[default]
    Unlimited,
    /// Only premises of the theorem's own stored proofs or its explicit
    /// references may be offered; the references always are.
    Limited {
        references: HashMap<FormulaId, BTreeSet<FormulaId>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassSummary {
    pub pass: usize,
    pub attempted: usize,
    /// Theorems solved by at least one method in this pass.
    pub solved_in_pass: usize,
    /// Theorems without any stored proof before the pass and with one after.
    pub newly_solved: usize,
    /// Theorems with at least one stored proof after the pass.
    pub total_solved: usize,
    /// Stored proofs after the pass.
    pub dependencies: usize,
}

/// One learn/prove pass over all theorems. Every attempt trains on the
/// store as it was at the start of the pass; solved verdicts are recorded
/// afterwards.
pub fn run_pass(
    store: &mut CorpusStore,
    methods: &MethodSet,
    names: &[String],
    prover: &dyn ProverAdapter,
    options: &EvalOptions,
    mode: &PassMode,
    pass: usize,
) -> Result<(PassSummary, Vec<Attempt>), EvalError> {
    let theorems = provable_theorems(store);
    let before: BTreeSet<FormulaId> = theorems
        .iter()
        .copied()
        .filter(|&t| !store.proofs(t).is_empty())
        .collect();
    let restrictions = match mode {
        PassMode::Unlimited => None,
        PassMode::Limited { references } => Some(
            theorems
                .iter()
                .map(|&t| {
                    let forced = references.get(&t).cloned().unwrap_or_default();
                    let mut allowed = forced.clone();
                    for p in store.proofs(t) {
                        allowed.extend(p.iter().copied());
                    }
                    (t, Restriction { allowed, forced })
                })
                .collect::<HashMap<_, _>>(),
        ),
    };
    let mut attempts = Vec::new();
    {
        let engine = RankingEngine::new(store, methods);
        let pairs: Vec<(FormulaId, String)> = theorems
            .iter()
            .flat_map(|&t| names.iter().map(move |m| (t, m.clone())))
            .collect();
        evaluate_streaming(&engine, &pairs, prover, options, restrictions.as_ref(), &mut |a| {
            attempts.push(a);
            Ok(())
        })?;
    }
    let mut solved = BTreeSet::new();
    for a in &attempts {
        if a.verdict.status == Status::Solved {
            solved.insert(a.theorem);
            store.record_proof(a.theorem, a.verdict.used.iter().copied())?;
        }
    }
    let after: BTreeSet<FormulaId> = theorems
        .iter()
        .copied()
        .filter(|&t| !store.proofs(t).is_empty())
        .collect();
    let summary = PassSummary {
        pass,
        attempted: theorems.len(),
        solved_in_pass: solved.len(),
        newly_solved: after.difference(&before).count(),
        total_solved: after.len(),
        dependencies: store.dependency_count(),
    };
    Ok((summary, attempts))
}
