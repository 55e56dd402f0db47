use std::collections::{HashMap, HashSet};

use super::knn::knn_neighbors;
use super::{check_cutoff, KnnParams, PreparedQuery, RankError, Ranking};
use crate::corpus::{CorpusStore, FormulaId};
use crate::features::{QueryBag, Weighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeoMode {
    /// Only the direct proof members of each neighbor.
    FirstLevel,
    /// Transitive proof members, decaying per level.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoParams {
    /// Per-level decay factor, strictly between 0 and 1.
    pub decay: f64,
    pub mode: GeoMode,
    /// Deepest dependency level followed in full mode.
    pub max_depth: usize,
    /// Weights below this are neither assigned nor expanded.
    pub epsilon: f64,
}

impl Default for GeoParams {
    fn default() -> Self {
        Self {
            decay: 0.5,
            mode: GeoMode::Full,
            max_depth: 8,
            epsilon: 1e-6,
        }
    }
}

impl GeoParams {
    pub fn validate(&self) -> Result<(), RankError> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(RankError::InvalidParameter("decay must lie in (0, 1)".into()));
        }
        if self.max_depth == 0 {
            return Err(RankError::InvalidParameter("max_depth must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(RankError::InvalidParameter("epsilon must be a finite positive number".into()));
        }
        Ok(())
    }

    fn depth(&self) -> usize {
        match self.mode {
            GeoMode::FirstLevel => 1,
            GeoMode::Full => self.max_depth,
        }
    }
}

/// Recursive dependency weighting: a formula reached `l` proof steps
/// below neighbor `n` is worth `decay^l · s(n)`; scores take the maximum
/// over all derivations, and neighbors keep their own similarity.
pub fn geo_rank(
    store: &CorpusStore,
    query: &QueryBag,
    cutoff: FormulaId,
    scheme: Weighting,
    knn: &KnnParams,
    geo: &GeoParams,
) -> Result<Ranking, RankError> {
    check_cutoff(store, cutoff)?;
    knn.validate()?;
    geo.validate()?;
    let prepared = PreparedQuery::new(store, query, cutoff, scheme);
    let neighbors = knn_neighbors(store, &prepared, knn.k, knn.tau1);
    Ok(propagate(store, &neighbors, geo))
}

fn propagate(store: &CorpusStore, neighbors: &[(FormulaId, f64)], geo: &GeoParams) -> Ranking {
    let mut best: HashMap<FormulaId, f64> = HashMap::new();
    let mut raise = |p: FormulaId, w: f64| {
        let slot = best.entry(p).or_insert(w);
        if w > *slot {
            *slot = w;
        }
    };
    for &(n, s) in neighbors {
        raise(n, s);
    }
    let depth = geo.depth();
    let mut seen = HashSet::new();
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    for &(n, s) in neighbors {
        // weights fall strictly with depth, so the first visit is the best
        seen.clear();
        seen.insert(n);
        frontier.clear();
        frontier.push(n);
        let mut w = s;
        for _ in 0..depth {
            w *= geo.decay;
            if w < geo.epsilon {
                break;
            }
            for &q in &frontier {
                for &p in store.chosen_proof(q).unwrap_or(&[]) {
                    if seen.insert(p) {
                        raise(p, w);
                        next.push(p);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
            if frontier.is_empty() {
                break;
            }
        }
    }
    Ranking::from_scores(best.into_iter().filter(|&(_, s)| s > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_file;

    fn chain_store() -> CorpusStore {
        let mut s = CorpusStore::ingest(
            parse_file(
                "fof(d2, axiom, a2).\nfof(d1, theorem, a1).\nfof(e, axiom, a3).\nfof(n, theorem, b).\nfof(m, theorem, c).",
            )
            .unwrap(),
        )
        .unwrap();
        s.record_proof(FormulaId(1), [FormulaId(0)]).unwrap();
        s.record_proof(FormulaId(3), [FormulaId(1), FormulaId(2)]).unwrap();
        s.record_proof(FormulaId(4), [FormulaId(2)]).unwrap();
        s
    }

    fn score(r: &Ranking, id: u32) -> Option<f64> {
        r.iter().find(|&(p, _)| p == FormulaId(id)).map(|(_, s)| s)
    }

    #[test]
    fn first_level_and_full_modes() {
        let s = chain_store();
        let first = GeoParams {
            decay: 0.5,
            mode: GeoMode::FirstLevel,
            ..GeoParams::default()
        };
        let r = propagate(&s, &[(FormulaId(3), 1.0)], &first);
        assert_eq!(score(&r, 3), Some(1.0));
        assert_eq!(score(&r, 1), Some(0.5));
        assert_eq!(score(&r, 2), Some(0.5));
        assert_eq!(score(&r, 0), None);
        let full = GeoParams {
            mode: GeoMode::Full,
            ..first
        };
        let r = propagate(&s, &[(FormulaId(3), 1.0)], &full);
        assert_eq!(score(&r, 0), Some(0.25));
        let one = GeoParams { max_depth: 1, ..full };
        assert_eq!(
            propagate(&s, &[(FormulaId(3), 1.0)], &one),
            propagate(&s, &[(FormulaId(3), 1.0)], &first)
        );
    }

    #[test]
    fn maximum_over_neighbors() {
        let s = chain_store();
        let p = GeoParams {
            decay: 0.5,
            mode: GeoMode::FirstLevel,
            ..GeoParams::default()
        };
        // e is reached from n (0.6 · 0.5) and from m (0.8 · 0.5)
        let r = propagate(&s, &[(FormulaId(4), 0.8), (FormulaId(3), 0.6)], &p);
        assert_eq!(score(&r, 2), Some(0.4));
    }

    #[test]
    fn epsilon_stops_recursion() {
        let s = chain_store();
        let p = GeoParams {
            decay: 0.5,
            mode: GeoMode::Full,
            max_depth: 8,
            epsilon: 0.3,
        };
        let r = propagate(&s, &[(FormulaId(3), 1.0)], &p);
        assert_eq!(score(&r, 1), Some(0.5));
        assert_eq!(score(&r, 0), None);
    }
}
