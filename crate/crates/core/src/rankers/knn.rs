use std::collections::BTreeMap;

use super::{check_cutoff, PreparedQuery, RankError, Ranking};
use crate::corpus::{CorpusStore, FormulaId};
use crate::ensemble::top_k;
use crate::features::{QueryBag, SparseVector, Weighting};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnParams {
    /// Number of neighbors.
    pub k: usize,
    /// Exponent applied to each shared feature's idf contribution.
    pub tau1: f64,
    /// Damping of a neighbor's vote by the size of its proof.
    pub tau2: f64,
    /// Multiplier of a neighbor's own similarity in its score.
    pub beta: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 40,
            tau1: 1.0,
            tau2: 0.0,
            beta: 2.0,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<(), RankError> {
        let bad = |what: &str| Err(RankError::InvalidParameter(what.to_string()));
        if self.k == 0 {
            return bad("k must be positive");
        }
        if !(self.tau1 >= 0.0 && self.tau1.is_finite()) {
            return bad("tau1 must be a finite non-negative number");
        }
        if !(self.tau2 >= 0.0 && self.tau2.is_finite()) {
            return bad("tau2 must be a finite non-negative number");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be a finite non-negative number");
        }
        Ok(())
    }
}

/// `Σ (w_q(f)·w_d(f))^(tau1/2)` over features present in both vectors.
pub fn similarity(query: &SparseVector, doc: &SparseVector, tau1: f64) -> f64 {
    let (a, b) = (query.as_slice(), doc.as_slice());
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += (a[i].1 * b[j].1).powf(tau1 / 2.0);
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// The `k` formulas before the cutoff most similar to the query, with
/// positive similarity, in ranking order.
pub fn knn_neighbors(
    store: &CorpusStore,
    query: &PreparedQuery,
    k: usize,
    tau1: f64,
) -> Vec<(FormulaId, f64)> {
    let cutoff = query.cutoff;
    let mut acc = vec![0.0f64; cutoff.index()];
    let mut touched: Vec<FormulaId> = Vec::new();
    let exponent = tau1 / 2.0;
    for term in &query.terms {
        let wq = query.weight(term);
        if wq == 0.0 {
            continue;
        }
        for &(d, count) in store.index().postings(term.feature, cutoff) {
            let wd = query.scheme.weight(count, term.idf);
            if wd == 0.0 {
                continue;
            }
            let slot = &mut acc[d.index()];
            if *slot == 0.0 {
                touched.push(d);
            }
            *slot += (wq * wd).powf(exponent);
        }
    }
    top_k(
        touched
            .into_iter()
            .map(|d| (d, acc[d.index()]))
            .filter(|&(_, s)| s > 0.0),
        k,
    )
}

/// Scores neighbors and the members of their training proofs.
///
/// `neighbors` must hold distinct ids below the cutoff the store was
/// trained at; the self term is added before any proof vote, and votes
/// are added in ascending neighbor id order.
pub fn aggregate_neighbors(
    store: &CorpusStore,
    neighbors: &[(FormulaId, f64)],
    params: &KnnParams,
) -> Ranking {
    let mut scores: BTreeMap<FormulaId, f64> = BTreeMap::new();
    for &(n, s) in neighbors {
        scores.insert(n, params.beta * s);
    }
    let mut by_id = neighbors.to_vec();
    by_id.sort_unstable_by_key(|&(n, _)| n);
    for (n, s) in by_id {
        let Some(proof) = store.chosen_proof(n) else {
            continue;
        };
        if proof.is_empty() {
            continue;
        }
        let vote = s / (proof.len() as f64).powf(params.tau2);
        for &p in proof {
            *scores.entry(p).or_insert(0.0) += vote;
        }
    }
    Ranking::from_scores(scores.into_iter().filter(|&(_, s)| s > 0.0))
}

/// Distance-weighted k-nearest-neighbor ranking.
pub fn knn_rank(
    store: &CorpusStore,
    query: &QueryBag,
    cutoff: FormulaId,
    scheme: Weighting,
    params: &KnnParams,
) -> Result<Ranking, RankError> {
    check_cutoff(store, cutoff)?;
    params.validate()?;
    let prepared = PreparedQuery::new(store, query, cutoff, scheme);
    let neighbors = knn_neighbors(store, &prepared, params.k, params.tau1);
    Ok(aggregate_neighbors(store, &neighbors, params))
}
