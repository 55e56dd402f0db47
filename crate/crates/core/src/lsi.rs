//! Latent semantic indexing: a truncated SVD of the weighted
//! feature-by-formula matrix, and k-NN ranking by cosine in the latent space.
//!
//! The factorization is randomized subspace iteration: a Gaussian sketch
//! of `topics + 10` columns, at least four power iterations, continued
//! until the leading singular values settle to ~1e-12 relative change.

use std::io::{self, BufRead, Read, Write};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::corpus::{CorpusStore, FormulaId};
use crate::ensemble::top_k;
use crate::features::{DocumentFrequency, FeatureId, QueryBag, Weighting};
use crate::rankers::{aggregate_neighbors, check_cutoff, KnnParams, PreparedQuery, RankError, Ranking};

pub const OVERSAMPLING: usize = 10;
pub const MIN_POWER_ITERATIONS: usize = 4;
pub const MAX_POWER_ITERATIONS: usize = 200;
const CONVERGENCE: f64 = 1e-12;
/// Singular values below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;
/// Latent cosines not above this are not neighbors.
const MIN_COSINE: f64 = 1e-12;
const MAGIC: &str = "premsel-lsi 1";

#[derive(Debug, Error)]
pub enum LsiError {
    #[error("topic count must be at least 1")]
    NoTopics,
    #[error("model does not match the corpus: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LsiOptions {
    pub topics: usize,
    pub scheme: Weighting,
    pub original_vars: bool,
    pub seed: u64,
}

impl Default for LsiOptions {
    fn default() -> Self {
        Self {
            topics: 64,
            scheme: Weighting::BinaryIdf,
            original_vars: false,
            seed: 0x5eed,
        }
    }
}

/// Sparse matrix stored by columns; rows are compacted feature indices.
#[derive(Debug, Clone)]
pub struct ColumnMatrix {
    rows: usize,
    columns: Vec<Vec<(u32, f64)>>,
}

impl ColumnMatrix {
    pub fn new(rows: usize, columns: Vec<Vec<(u32, f64)>>) -> Self {
        debug_assert!(columns.iter().flatten().all(|&(r, _)| (r as usize) < rows));
        Self { rows, columns }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[(u32, f64)] {
        &self.columns[j]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols());
        for (j, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                m[(r as usize, j)] += v;
            }
        }
        m
    }

    /// `(A · M)ᵀ` for `mt = Mᵀ` (`l × cols`).
    fn mul_transposed(&self, mt: &DMatrix<f64>) -> DMatrix<f64> {
        let mut yt = DMatrix::zeros(mt.nrows(), self.rows);
        for (j, col) in self.columns.iter().enumerate() {
            let src = mt.column(j);
            for &(r, v) in col {
                yt.column_mut(r as usize).axpy(v, &src, 1.0);
            }
        }
        yt
    }

    /// `(Aᵀ · Q)ᵀ` for `qt = Qᵀ` (`l × rows`).
    fn mul_adjoint_transposed(&self, qt: &DMatrix<f64>) -> DMatrix<f64> {
        let mut zt = DMatrix::zeros(qt.nrows(), self.cols());
        for (j, col) in self.columns.iter().enumerate() {
            let mut dst = zt.column_mut(j);
            for &(r, v) in col {
                dst.axpy(v, &qt.column(r as usize), 1.0);
            }
        }
        zt
    }
}

/// Leading singular triplets of a sparse matrix.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Descending, length = attained rank.
    pub singular_values: Vec<f64>,
    /// `rows × rank` left singular vectors.
    pub left: DMatrix<f64>,
    /// Fewer than the requested number of non-zero singular values.
    pub rank_deficient: bool,
    pub iterations: usize,
}

/// Transposed orthonormal basis of the columns of `yt`ᵀ.
fn orthonormal_rows(yt: DMatrix<f64>) -> DMatrix<f64> {
    yt.transpose().qr().q().transpose()
}

/// Descending singular values and left vectors (as columns) of `b` (`l × n`).
fn small_svd(b: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    // the SVD of the tall transpose yields b's left vectors as its right ones
    let svd = b.transpose().svd(false, true);
    let vt = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &c| svd.singular_values[c].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut left = DMatrix::zeros(b.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        left.set_column(k, &vt.row(i).transpose());
    }
    (values, left)
}

/// Rank-`topics` truncated SVD by randomized subspace iteration.
pub fn truncated_svd(a: &ColumnMatrix, topics: usize, seed: u64) -> TruncatedSvd {
    let limit = a.rows().min(a.cols());
    let width = (topics + OVERSAMPLING).min(limit);
    if width == 0 {
        return TruncatedSvd {
            singular_values: Vec::new(),
            left: DMatrix::zeros(a.rows(), 0),
            rank_deficient: topics > 0,
            iterations: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sketch = DMatrix::from_fn(width, a.cols(), |_, _| StandardNormal.sample(&mut rng));
    let mut qt = orthonormal_rows(a.mul_transposed(&sketch));
    let wanted = topics.min(width);
    let mut previous: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let (values, small_left) = loop {
        iterations += 1;
        let zt = orthonormal_rows(a.mul_adjoint_transposed(&qt));
        qt = orthonormal_rows(a.mul_transposed(&zt));
        if iterations < MIN_POWER_ITERATIONS {
            continue;
        }
        let b = a.mul_adjoint_transposed(&qt);
        let (values, left) = small_svd(&b);
        let top = values[0].max(f64::MIN_POSITIVE);
        let settled = previous.len() == wanted
            && values[..wanted]
                .iter()
                .zip(&previous)
                .all(|(v, p)| (v - p).abs() <= CONVERGENCE * top);
        if settled || iterations >= MAX_POWER_ITERATIONS {
            break (values, left);
        }
        previous = values[..wanted].to_vec();
    };
    let top = values.first().copied().unwrap_or(0.0);
    let rank = values
        .iter()
        .take(wanted)
        .take_while(|&&v| top > 0.0 && v > RANK_TOLERANCE * top)
        .count();
    let left = qt.transpose() * small_left.columns(0, rank);
    TruncatedSvd {
        singular_values: values[..rank].to_vec(),
        left,
        rank_deficient: rank < topics,
        iterations,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub options: LsiOptions,
    /// Topics actually attained; at most `options.topics`.
    pub topics: usize,
    pub rank_deficient: bool,
    pub singular_values: Vec<f64>,
    /// Feature of each matrix row, ascending.
    pub features: Vec<FeatureId>,
    /// Row `r` holds the `topics` latent coordinates of feature `features[r]`.
    projection: Vec<f64>,
    /// Row `j` holds the embedding of formula `j`.
    embeddings: Vec<f64>,
    documents: usize,
}

impl LatentModel {
    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn embedding(&self, doc: FormulaId) -> &[f64] {
        let t = self.topics;
        &self.embeddings[doc.index() * t..(doc.index() + 1) * t]
    }

    fn row_of(&self, f: FeatureId) -> Option<usize> {
        self.features.binary_search(&f).ok()
    }

    /// Latent coordinates of a sparse vector; features outside the model are ignored.
    pub fn embed(&self, vector: impl IntoIterator<Item = (FeatureId, f64)>) -> Vec<f64> {
        let t = self.topics;
        let mut out = vec![0.0; t];
        for (f, w) in vector {
            if let Some(r) = self.row_of(f) {
                for (o, &p) in out.iter_mut().zip(&self.projection[r * t..(r + 1) * t]) {
                    *o += w * p;
                }
            }
        }
        out
    }

    /// Writes a text header, then little-endian f64 blocks: singular values,
    /// the `topics × features` projection (row-major), the
    /// `documents × topics` embeddings, and finally the feature ids as u32.
    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        let o = &self.options;
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "topics {}", self.topics)?;
        writeln!(out, "requested {}", o.topics)?;
        writeln!(out, "features {}", self.features.len())?;
        writeln!(out, "documents {}", self.documents)?;
        writeln!(out, "seed {}", o.seed)?;
        writeln!(out, "scheme {}", o.scheme.as_str())?;
        writeln!(out, "original_vars {}", o.original_vars)?;
        writeln!(out, "rank_deficient {}", self.rank_deficient)?;
        writeln!(out, "end")?;
        let mut put = |x: f64| out.write_all(&x.to_le_bytes());
        for &s in &self.singular_values {
            put(s)?;
        }
        let t = self.topics;
        for k in 0..t {
            for r in 0..self.features.len() {
                put(self.projection[r * t + k])?;
            }
        }
        for &e in &self.embeddings {
            put(e)?;
        }
        for f in &self.features {
            out.write_all(&f.0.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(input: impl Read) -> Result<Self, LsiError> {
        let mut input = io::BufReader::new(input);
        let bad = |m: &str| LsiError::Format(m.to_string());
        let mut line = String::new();
        input.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(bad("missing header"));
        }
        let mut fields = std::collections::HashMap::new();
        loop {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Err(bad("truncated header"));
            }
            let l = line.trim_end();
            if l == "end" {
                break;
            }
            let (k, v) = l.split_once(' ').ok_or_else(|| bad("header line without value"))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| bad(&format!("header lacks `{k}`")));
        let num = |k: &str| -> Result<usize, LsiError> {
            get(k)?.parse().map_err(|_| bad(&format!("`{k}` is not a number")))
        };
        let flag = |k: &str| -> Result<bool, LsiError> {
            get(k)?.parse().map_err(|_| bad(&format!("`{k}` is not a boolean")))
        };
        let topics = num("topics")?;
        let features = num("features")?;
        let documents = num("documents")?;
        let options = LsiOptions {
            topics: num("requested")?,
            scheme: get("scheme")?.parse().map_err(|e: String| LsiError::Format(e))?,
            original_vars: flag("original_vars")?,
            seed: get("seed")?.parse().map_err(|_| bad("`seed` is not a number"))?,
        };
        let rank_deficient = flag("rank_deficient")?;
        let mut f64s = |n: usize| -> Result<Vec<f64>, LsiError> {
            let mut buf = vec![0u8; n * 8];
            input.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let singular_values = f64s(topics)?;
        let by_topic = f64s(topics * features)?;
        let embeddings = f64s(documents * topics)?;
        let mut buf = vec![0u8; features * 4];
        input.read_exact(&mut buf)?;
        let feature_ids = buf
            .chunks_exact(4)
            .map(|c| FeatureId(u32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        let mut projection = vec![0.0; topics * features];
        for k in 0..topics {
            for r in 0..features {
                projection[r * topics + k] = by_topic[k * features + r];
            }
        }
        Ok(Self {
            options,
            topics,
            rank_deficient,
            singular_values,
            features: feature_ids,
            projection,
            embeddings,
            documents,
        })
    }
}

/// The weighted feature-by-formula matrix at a cutoff, with its row features.
pub fn weighted_matrix(
    store: &CorpusStore,
    cutoff: FormulaId,
    scheme: Weighting,
    original_vars: bool,
) -> (Vec<FeatureId>, ColumnMatrix) {
    let idf = store.idf_at(cutoff);
    let interner = store.interner();
    let weighted = |j: usize| {
        store
            .bag(FormulaId::from_index(j))
            .iter()
            .filter(|&(f, _)| original_vars || !interner.is_original_var(f))
            .map(|(f, c)| (f, scheme.weight(c, idf.idf(f))))
            .filter(|&(_, w)| w != 0.0)
    };
    let mut active = vec![false; interner.len()];
    for j in 0..cutoff.index() {
        for (f, _) in weighted(j) {
            active[f.index()] = true;
        }
    }
    let mut row = vec![u32::MAX; interner.len()];
    let mut features = Vec::new();
    for (i, _) in active.iter().enumerate().filter(|(_, &a)| a) {
        row[i] = features.len() as u32;
        features.push(FeatureId(i as u32));
    }
    let columns = (0..cutoff.index())
        .map(|j| weighted(j).map(|(f, w)| (row[f.index()], w)).collect())
        .collect();
    (features.clone(), ColumnMatrix::new(features.len(), columns))
}

/// Builds the latent model of all formulas before `cutoff`.
pub fn build_lsi(
    store: &CorpusStore,
    cutoff: FormulaId,
    options: LsiOptions,
) -> Result<LatentModel, LsiError> {
    check_cutoff(store, cutoff)?;
    if options.topics == 0 {
        return Err(LsiError::NoTopics);
    }
    let (features, matrix) = weighted_matrix(store, cutoff, options.scheme, options.original_vars);
    let svd = truncated_svd(&matrix, options.topics, options.seed);
    let topics = svd.singular_values.len();
    let mut projection = vec![0.0; features.len() * topics];
    for r in 0..features.len() {
        for k in 0..topics {
            projection[r * topics + k] = svd.left[(r, k)];
        }
    }
    let mut model = LatentModel {
        options,
        topics,
        rank_deficient: svd.rank_deficient,
        singular_values: svd.singular_values,
        features,
        projection,
        embeddings: Vec::with_capacity(cutoff.index() * topics),
        documents: cutoff.index(),
    };
    for j in 0..cutoff.index() {
        let e = model.embed(
            matrix
                .column(j)
                .iter()
                .map(|&(r, w)| (model.features[r as usize], w)),
        );
        model.embeddings.extend(e);
    }
    Ok(model)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Neighbors by latent cosine, then the k-NN aggregation.
pub fn lsi_rank(
    model: &LatentModel,
    store: &CorpusStore,
    query: &QueryBag,
    cutoff: FormulaId,
    params: &KnnParams,
) -> Result<Ranking, LsiError> {
    check_cutoff(store, cutoff)?;
    params.validate()?;
    if model.documents != cutoff.index() {
        return Err(LsiError::DimensionMismatch(format!(
            "model covers {} formulas, cutoff is {}",
            model.documents, cutoff
        )));
    }
    if model.features.last().is_some_and(|f| f.index() >= store.interner().len()) {
        return Err(LsiError::DimensionMismatch(
            "model refers to features the corpus does not have".into(),
        ));
    }
    let prepared = PreparedQuery::new(store, query, cutoff, model.options.scheme);
    let interner = store.interner();
    let q = model.embed(
        prepared
            .terms
            .iter()
            .filter(|t| model.options.original_vars || !interner.is_original_var(t.feature))
            .map(|t| (t.feature, prepared.weight(t))),
    );
    let neighbors = top_k(
        (0..model.documents)
            .map(|j| (FormulaId::from_index(j), cosine(&q, model.embedding(FormulaId::from_index(j)))))
            .filter(|&(_, s)| s > MIN_COSINE),
        params.k,
    );
    Ok(aggregate_neighbors(store, &neighbors, params))
}
