//! Rank aggregation and partial top-k selection.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::FormulaId;
use crate::rankers::{rank_order, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CombineScheme {
    Minimum,
    Maximum,
    Linear,
    Geometric,
    Harmonic,
    Quadratic,
}

impl CombineScheme {
    pub const ALL: [CombineScheme; 6] = [
        CombineScheme::Minimum,
        CombineScheme::Maximum,
        CombineScheme::Linear,
        CombineScheme::Geometric,
        CombineScheme::Harmonic,
        CombineScheme::Quadratic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CombineScheme::Minimum => "minimum",
            CombineScheme::Maximum => "maximum",
            CombineScheme::Linear => "linear",
            CombineScheme::Geometric => "geometric",
            CombineScheme::Harmonic => "harmonic",
            CombineScheme::Quadratic => "quadratic",
        }
    }

    /// Aggregate key of one premise; lower is better.
    pub fn key(self, ranks: &[f64], weights: &[f64]) -> f64 {
        let weighted = |f: fn(f64) -> f64| {
            ranks
                .iter()
                .zip(weights)
                .fold(0.0, |acc, (&r, &w)| acc + w * f(r))
        };
        match self {
            CombineScheme::Minimum => ranks.iter().copied().fold(f64::INFINITY, f64::min),
            CombineScheme::Maximum => ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            CombineScheme::Linear => weighted(|r| r),
            CombineScheme::Geometric => weighted(f64::ln),
            CombineScheme::Harmonic => 1.0 / weighted(|r| 1.0 / r),
            CombineScheme::Quadratic => weighted(|r| r * r),
        }
    }
}

impl fmt::Display for CombineScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombineScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CombineScheme::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                format!("unknown combination scheme `{s}` (expected minimum, maximum, linear, geometric, harmonic or quadratic)")
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSpec {
    pub scheme: CombineScheme,
    /// One positive weight per input ranking; normalized to sum 1.
    pub weights: Vec<f64>,
}

impl CombinerSpec {
    pub fn equal(scheme: CombineScheme, n: usize) -> Self {
        Self {
            scheme,
            weights: vec![1.0; n],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("a combination needs at least 2 rankings, got {0}")]
    TooFewRankings(usize),
    #[error("{weights} weights given for {rankings} rankings")]
    WeightCountMismatch { weights: usize, rankings: usize },
    #[error("combination weights must be finite and positive")]
    InvalidWeight,
}

/// Combines rankings by their 1-based rank positions. A premise missing
/// from an input gets rank `U + 1`, `U` being the number of distinct
/// premises over all inputs. The output score is the negated key.
pub fn combine(rankings: &[Ranking], spec: &CombinerSpec) -> Result<Ranking, EnsembleError> {
    if rankings.len() < 2 {
        return Err(EnsembleError::TooFewRankings(rankings.len()));
    }
    if spec.weights.len() != rankings.len() {
        return Err(EnsembleError::WeightCountMismatch {
            weights: spec.weights.len(),
            rankings: rankings.len(),
        });
    }
    if spec.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(EnsembleError::InvalidWeight);
    }
    let total: f64 = spec.weights.iter().sum();
    let weights: Vec<f64> = spec.weights.iter().map(|w| w / total).collect();

    let mut slot: HashMap<FormulaId, usize> = HashMap::new();
    let mut universe: Vec<FormulaId> = Vec::new();
    for r in rankings {
        for id in r.ids() {
            slot.entry(id).or_insert_with(|| {
                universe.push(id);
                universe.len() - 1
            });
        }
    }
    let missing = (universe.len() + 1) as f64;
    let m = rankings.len();
    let mut ranks = vec![missing; universe.len() * m];
    for (i, r) in rankings.iter().enumerate() {
        for (pos, id) in r.ids().enumerate() {
            ranks[slot[&id] * m + i] = (pos + 1) as f64;
        }
    }
    let mut keyed: Vec<(FormulaId, f64)> = universe
        .iter()
        .enumerate()
        .map(|(u, &id)| (id, spec.scheme.key(&ranks[u * m..(u + 1) * m], &weights)))
        .collect();
    keyed.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(Ranking::from_sorted(
        keyed.into_iter().map(|(id, k)| (id, -k)).collect(),
    ))
}

struct Worst((FormulaId, f64));

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order(self.0, other.0)
    }
}

/// The first `k` items in ranking order (score desc, id asc), selected
/// with a heap of at most `k` entries.
pub fn top_k(items: impl IntoIterator<Item = (FormulaId, f64)>, k: usize) -> Vec<(FormulaId, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let mut heap: BinaryHeap<Worst> = BinaryHeap::with_capacity(k.min(1 << 16) + 1);
    for item in items {
        if heap.len() < k {
            heap.push(Worst(item));
        } else if let Some(mut worst) = heap.peek_mut() {
            if rank_order(item, worst.0) == Ordering::Less {
                *worst = Worst(item);
            }
        }
    }
    heap.into_sorted_vec().into_iter().map(|w| w.0).collect()
}
