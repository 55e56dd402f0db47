use super::{check_cutoff, PreparedQuery, RankError, Ranking};
use crate::corpus::{CorpusStore, FormulaId};
use crate::features::{QueryBag, Weighting};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbParams {
    /// Sharpens the contribution of features co-occurring with a premise.
    pub sigma1: f64,
    /// Penalty per unit weight of query features never seen with a premise.
    pub sigma2: f64,
    /// Weight features by idf instead of uniformly.
    pub use_idf: bool,
}

impl Default for NbParams {
    fn default() -> Self {
        Self {
            sigma1: 30.0,
            sigma2: -0.3,
            use_idf: true,
        }
    }
}

impl NbParams {
    pub fn validate(&self) -> Result<(), RankError> {
        if !(self.sigma1 > 0.0 && self.sigma1.is_finite()) {
            return Err(RankError::InvalidParameter(
                "sigma1 must be a finite positive number".into(),
            ));
        }
        if !(self.sigma2 <= 0.0 && self.sigma2.is_finite()) {
            return Err(RankError::InvalidParameter(
                "sigma2 must be a finite non-positive number".into(),
            ));
        }
        Ok(())
    }
}

/// Naive Bayes ranking of every formula before the cutoff.
///
/// A premise's uses are the training theorems whose proof contains it,
/// plus the premise itself. Query features are visited in ascending id
/// order, then the unseen group is added as one term.
pub fn nb_rank(
    store: &CorpusStore,
    query: &QueryBag,
    cutoff: FormulaId,
    params: &NbParams,
) -> Result<Ranking, RankError> {
    check_cutoff(store, cutoff)?;
    params.validate()?;
    let n = cutoff.index();
    if n == 0 {
        return Ok(Ranking::default());
    }
    let prepared = PreparedQuery::new(store, query, cutoff, Weighting::Binary);

    let mut uses = vec![1u32; n];
    let mut proofs: Vec<&[FormulaId]> = vec![&[]; n];
    for (theorem, proof) in store.training_slice(cutoff) {
        proofs[theorem.index()] = proof;
        for &p in proof {
            uses[p.index()] += 1;
        }
    }

    // hits[p] lists (query term index, co-occurrence count) in term order
    let mut hits: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    let mut counts = vec![0u32; n];
    let mut touched = Vec::new();
    for (qi, term) in prepared.terms.iter().enumerate() {
        for &(d, _) in store.index().postings(term.feature, cutoff) {
            for p in std::iter::once(d).chain(proofs[d.index()].iter().copied()) {
                let c = &mut counts[p.index()];
                if *c == 0 {
                    touched.push(p);
                }
                *c += 1;
            }
        }
        for p in touched.drain(..) {
            hits[p.index()].push((qi as u32, counts[p.index()]));
            counts[p.index()] = 0;
        }
    }

    let weights: Vec<f64> = prepared
        .terms
        .iter()
        .map(|t| if params.use_idf { t.idf } else { 1.0 })
        .collect();
    let unseen_weight = prepared.unseen_features as f64
        * if params.use_idf {
            prepared.unseen_idf()
        } else {
            1.0
        };

    let scores = (0..n).map(|i| {
        let t = f64::from(uses[i]);
        let mut total = t.ln();
        let mut h = hits[i].iter().peekable();
        for (qi, &w) in weights.iter().enumerate() {
            match h.next_if(|&&(q, _)| q as usize == qi) {
                Some(&(_, s)) => total += w * (params.sigma1 * f64::from(s) / t).ln(),
                None => total += params.sigma2 * w,
            }
        }
        total += params.sigma2 * unseen_weight;
        (FormulaId::from_index(i), total)
    });
    Ok(Ranking::from_scores(scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_features, Interner};
    use crate::fol::{parse_file, parse_formula};

    fn single(text: &str) -> CorpusStore {
        CorpusStore::ingest(parse_file(text).unwrap()).unwrap()
    }

    fn score_of(r: &Ranking, id: u32) -> f64 {
        r.iter().find(|&(p, _)| p == FormulaId(id)).unwrap().1
    }

    #[test]
    fn fully_shared_query_scores_zero_or_query_size() {
        let store = single("fof(p, axiom, q(a)).");
        let q = store
            .interner()
            .query_bag(&extract_features(&parse_formula("q(a)").unwrap(), false), false);
        let flat = NbParams {
            sigma1: 1.0,
            sigma2: -1.0,
            use_idf: false,
        };
        let r = nb_rank(&store, &q, store.end(), &flat).unwrap();
        assert_eq!(score_of(&r, 0), 0.0);
        let sharp = NbParams {
            sigma1: std::f64::consts::E,
            ..flat
        };
        let r = nb_rank(&store, &q, store.end(), &sharp).unwrap();
        let size = q.known.len() as f64;
        assert!((score_of(&r, 0) - size).abs() < 1e-12);
    }

    #[test]
    fn unrelated_query_pays_full_penalty() {
        let store = single("fof(p, axiom, q(a)).\nfof(o, axiom, r(b)).");
        let body = parse_formula("r(b)").unwrap();
        let q = store.interner().query_bag(&extract_features(&body, false), false);
        let params = NbParams {
            sigma1: 1.0,
            sigma2: -1.0,
            use_idf: false,
        };
        let r = nb_rank(&store, &q, store.end(), &params).unwrap();
        assert_eq!(score_of(&r, 0), -(q.known.len() as f64));
        // features never seen before the cutoff are penalized the same way
        let fresh = Interner::new().query_bag(&extract_features(&body, false), false);
        let r = nb_rank(&store, &fresh, store.end(), &params).unwrap();
        assert_eq!(score_of(&r, 0), -(fresh.unseen.len() as f64));
    }

    #[test]
    fn uses_raise_the_prior() {
        let mut store = single("fof(p, axiom, q(a)).\nfof(o, axiom, q(b)).\nfof(t, theorem, s(c)).");
        store.record_proof(FormulaId(2), [FormulaId(0)]).unwrap();
        let q = store
            .interner()
            .query_bag(&extract_features(&parse_formula("s(c)").unwrap(), false), false);
        let r = nb_rank(&store, &q, store.end(), &NbParams::default()).unwrap();
        assert!(score_of(&r, 0) > score_of(&r, 1));
        assert_eq!(r.len(), 3);
    }
}
