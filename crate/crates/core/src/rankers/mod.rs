//! Premise scorers over a [`CorpusStore`] at a chronological cutoff.
//!
//! Every scorer sees only formulas and proofs with id below the cutoff.
//! Query features whose document frequency below the cutoff is zero are
//! folded into one "unseen" group, so a ranking never depends on data at
//! or after the cutoff, not even through the feature numbering.

mod geo;
mod knn;
mod nb;

pub use geo::{geo_rank, GeoMode, GeoParams};
pub use knn::{aggregate_neighbors, knn_neighbors, knn_rank, similarity, KnnParams};
pub use nb::{nb_rank, NbParams};

use thiserror::Error;

use crate::corpus::{CorpusStore, FormulaId};
use crate::features::{DocumentFrequency, FeatureId, QueryBag, Weighting};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("cutoff {cutoff} is beyond the corpus size {len}")]
    CutoffOutOfRange { cutoff: FormulaId, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub(crate) fn check_cutoff(store: &CorpusStore, cutoff: FormulaId) -> Result<(), RankError> {
    if cutoff.index() > store.len() {
        Err(RankError::CutoffOutOfRange {
            cutoff,
            len: store.len(),
        })
    } else {
        Ok(())
    }
}

/// Premises with scores, sorted by (score desc, id asc), without duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ranking {
    entries: Vec<(FormulaId, f64)>,
}

impl Ranking {
    /// Sorts arbitrary `(premise, score)` pairs. Ids must be distinct and
    /// scores finite.
    pub fn from_scores(scores: impl IntoIterator<Item = (FormulaId, f64)>) -> Self {
        let mut entries: Vec<_> = scores.into_iter().collect();
        entries.sort_unstable_by(|a, b| rank_order(*a, *b));
        debug_assert!(entries.windows(2).all(|w| w[0].0 != w[1].0));
        Self { entries }
    }

    /// Wraps entries already in ranking order.
    pub fn from_sorted(entries: Vec<(FormulaId, f64)>) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| rank_order(w[0], w[1]) == std::cmp::Ordering::Less));
        Self { entries }
    }

    pub fn as_slice(&self) -> &[(FormulaId, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (FormulaId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = FormulaId> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    pub fn into_vec(self) -> Vec<(FormulaId, f64)> {
        self.entries
    }
}

/// The ranking order: higher score first, then lower id.
pub fn rank_order(a: (FormulaId, f64), b: (FormulaId, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// One query feature that occurs in some formula before the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryTerm {
    pub feature: FeatureId,
    pub count: u32,
    pub idf: f64,
}

/// A query bag resolved against the corpus at one cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedQuery {
    pub cutoff: FormulaId,
    pub scheme: Weighting,
    /// Features with positive document frequency, ascending by id.
    pub terms: Vec<QueryTerm>,
    /// Number of query features absent from every formula before the cutoff.
    pub unseen_features: usize,
    /// Sum of their counts.
    pub unseen_occurrences: u64,
}

impl PreparedQuery {
    pub fn new(
        store: &CorpusStore,
        query: &QueryBag,
        cutoff: FormulaId,
        scheme: Weighting,
    ) -> Self {
        let idf = store.idf_at(cutoff);
        let mut terms = Vec::with_capacity(query.known.len());
        let mut unseen_features = query.unseen.len();
        let mut unseen_occurrences: u64 = query.unseen.iter().map(|&c| u64::from(c)).sum();
        for (feature, count) in query.known.iter() {
            if idf.df(feature) == 0 {
                unseen_features += 1;
                unseen_occurrences += u64::from(count);
            } else {
                terms.push(QueryTerm {
                    feature,
                    count,
                    idf: idf.idf(feature),
                });
            }
        }
        Self {
            cutoff,
            scheme,
            terms,
            unseen_features,
            unseen_occurrences,
        }
    }

    /// Weight of one unseen feature's idf, `ln(N / 1)`.
    pub fn unseen_idf(&self) -> f64 {
        (self.cutoff.index() as f64).ln()
    }

    pub fn weight(&self, term: &QueryTerm) -> f64 {
        self.scheme.weight(term.count, term.idf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_file;

    #[test]
    fn ranking_orders_by_score_then_id() {
        let r = Ranking::from_scores([
            (FormulaId(3), 1.0),
            (FormulaId(1), 2.0),
            (FormulaId(0), 1.0),
        ]);
        assert_eq!(
            r.ids().collect::<Vec<_>>(),
            vec![FormulaId(1), FormulaId(0), FormulaId(3)]
        );
    }

    #[test]
    fn future_features_join_the_unseen_group() {
        let store = CorpusStore::ingest(
            parse_file("fof(a, axiom, p(a)).\nfof(b, axiom, q(b)).").unwrap(),
        )
        .unwrap();
        let query = QueryBag::from_bag(store.bag(FormulaId(1)).clone());
        let at1 = PreparedQuery::new(&store, &query, FormulaId(1), Weighting::BinaryIdf);
        assert!(at1.terms.is_empty());
        assert_eq!(at1.unseen_features, query.known.len());
        let at2 = PreparedQuery::new(&store, &query, FormulaId(2), Weighting::BinaryIdf);
        assert_eq!(at2.unseen_features, 0);
        assert_eq!(at2.terms.len(), query.known.len());
    }
}
