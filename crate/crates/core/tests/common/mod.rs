//! Brute-force reference rankers and random small corpora.
//!
//! Each reference recomputes document frequencies, neighbor sets and
//! dependency levels by scanning every formula directly, sharing nothing
//! with the library but the input store and the documented summation order
//! (features ascending by id, neighbor votes ascending by neighbor id).
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use premsel::corpus::{CorpusStore, FormulaId};
use premsel::ensemble::CombineScheme;
use premsel::features::{FeatureBag, FeatureId, QueryBag, Weighting};
use premsel::fol::{AnnotatedFormula, Formula, Role, Term};
use premsel::rankers::{GeoMode, GeoParams, KnnParams, NbParams, Ranking};
use rand::seq::IndexedRandom;
use rand::Rng;

pub type Scored = Vec<(FormulaId, f64)>;

fn random_term(rng: &mut impl Rng, depth: usize) -> Term {
    const CONSTS: [&str; 4] = ["a", "b", "c", "d"];
    const FUNS: [(&str, usize); 3] = [("f", 1), ("g", 2), ("h", 1)];
    match rng.random_range(0..if depth == 0 { 2 } else { 4 }) {
        0 => Term::var(*["X", "Y"].choose(rng).unwrap()),
        1 => Term::constant(*CONSTS.choose(rng).unwrap()),
        _ => {
            let (f, n) = *FUNS.choose(rng).unwrap();
            Term::app(f, (0..n).map(|_| random_term(rng, depth - 1)).collect())
        }
    }
}

fn random_atom(rng: &mut impl Rng) -> Formula {
    const PREDS: [(&str, usize); 4] = [("p", 1), ("q", 2), ("r", 1), ("s", 1)];
    let (p, n) = *PREDS.choose(rng).unwrap();
    Formula::atom(Term::app(p, (0..n).map(|_| random_term(rng, 2)).collect()))
}

pub fn random_formula(rng: &mut impl Rng) -> Formula {
    let mut f = random_atom(rng);
    for _ in 0..rng.random_range(0..3) {
        let g = random_atom(rng);
        f = match rng.random_range(0..3) {
            0 => Formula::and(f, g),
            1 => Formula::implies(g, f),
            _ => Formula::or(f, Formula::not(g)),
        };
    }
    let vars: Vec<String> = f.free_variables().into_iter().collect();
    if vars.is_empty() {
        f
    } else {
        Formula::forall(vars, f)
    }
}

/// Up to `max` formulas over a small vocabulary with random earlier-premise
/// proofs, some theorems carrying two proofs.
pub fn random_corpus(rng: &mut impl Rng, max: usize) -> CorpusStore {
    let n = rng.random_range(1..=max);
    let formulas = (0..n)
        .map(|i| {
            let role = [Role::Axiom, Role::Theorem, Role::Theorem, Role::Definition, Role::Typing]
                .choose(rng)
                .copied()
                .unwrap();
            AnnotatedFormula::new(format!("f{i}"), role, random_formula(rng))
        })
        .collect();
    let mut store = CorpusStore::ingest(formulas).unwrap();
    for t in 1..n {
        if !rng.random_bool(0.6) {
            continue;
        }
        for _ in 0..rng.random_range(1..=2) {
            let size = rng.random_range(1..=5.min(t));
            let proof: Vec<FormulaId> = (0..size)
                .map(|_| FormulaId(rng.random_range(0..t) as u32))
                .collect();
            store.record_proof(FormulaId(t as u32), proof).unwrap();
        }
    }
    store
}

/// Query with a few features the store has never seen.
pub fn random_query(rng: &mut impl Rng, store: &CorpusStore) -> QueryBag {
    if !store.is_empty() && rng.random_bool(0.5) {
        let d = FormulaId(rng.random_range(0..store.len()) as u32);
        return QueryBag::from_bag(store.bag(d).clone());
    }
    let f = Formula::and(
        random_formula(rng),
        Formula::atom(Term::app("fresh", vec![Term::constant("e")])),
    );
    let named = premsel::features::extract_features(&f, true);
    store.interner().query_bag(&named, true)
}

fn df(store: &CorpusStore, f: FeatureId, cutoff: FormulaId) -> usize {
    (0..cutoff.0)
        .filter(|&d| store.bag(FormulaId(d)).contains(f))
        .count()
}

fn idf(store: &CorpusStore, f: FeatureId, cutoff: FormulaId) -> f64 {
    (cutoff.0 as f64 / df(store, f, cutoff).max(1) as f64).ln()
}

/// Smallest proof, ties broken lexicographically on sorted premise ids.
fn chosen(store: &CorpusStore, t: FormulaId) -> Option<Vec<FormulaId>> {
    store
        .proofs(t)
        .iter()
        .map(|p| {
            let mut p = p.to_vec();
            p.sort();
            p.dedup();
            p
        })
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
}

fn weight(scheme: Weighting, count: u32, idf: f64) -> f64 {
    match scheme {
        Weighting::BinaryIdf => idf,
        Weighting::TfIdf => f64::from(count) * idf,
        Weighting::Binary => 1.0,
    }
}

fn sorted(mut v: Scored) -> Scored {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    v
}

/// Every earlier formula scored by similarity, best `k` with positive score.
fn neighbors(
    store: &CorpusStore,
    query: &QueryBag,
    cutoff: FormulaId,
    scheme: Weighting,
    k: usize,
    tau1: f64,
) -> Scored {
    let terms: Vec<(FeatureId, u32)> = query
        .known
        .iter()
        .filter(|&(f, _)| df(store, f, cutoff) > 0)
        .collect();
    let mut all = Vec::new();
    for d in 0..cutoff.0 {
        let bag: &FeatureBag = store.bag(FormulaId(d));
        let mut s = 0.0;
        for &(f, qc) in &terms {
            if bag.contains(f) {
                let dc = bag.get(f);
                let i = idf(store, f, cutoff);
                let p = weight(scheme, qc, i) * weight(scheme, dc, i);
                if p != 0.0 {
                    s += p.powf(tau1 / 2.0);
                }
            }
        }
        if s > 0.0 {
            all.push((FormulaId(d), s));
        }
    }
    let mut all = sorted(all);
    all.truncate(k);
    all
}

pub fn knn(store: &CorpusStore, query: &QueryBag, cutoff: FormulaId, scheme: Weighting, p: &KnnParams) -> Scored {
    let nb = neighbors(store, query, cutoff, scheme, p.k, p.tau1);
    let mut by_id = nb.clone();
    by_id.sort_by_key(|x| x.0);
    let mut out = Vec::new();
    for cand in 0..cutoff.0 {
        let c = FormulaId(cand);
        let own = nb.iter().find(|x| x.0 == c).map(|x| p.beta * x.1);
        let mut score = own;
        for &(n, s) in &by_id {
            if let Some(proof) = chosen(store, n) {
                if proof.contains(&c) {
                    let vote = s / (proof.len() as f64).powf(p.tau2);
                    score = Some(score.unwrap_or(0.0) + vote);
                }
            }
        }
        if let Some(s) = score.filter(|&s| s > 0.0) {
            out.push((c, s));
        }
    }
    sorted(out)
}

pub fn nb(store: &CorpusStore, query: &QueryBag, cutoff: FormulaId, p: &NbParams) -> Scored {
    let n = cutoff.0;
    if n == 0 {
        return Vec::new();
    }
    let mut terms = Vec::new();
    let mut unseen = query.unseen.len();
    for (f, _) in query.known.iter() {
        if df(store, f, cutoff) > 0 {
            terms.push(f);
        } else {
            unseen += 1;
        }
    }
    let proofs: BTreeMap<FormulaId, Vec<FormulaId>> = (0..n)
        .filter_map(|t| chosen(store, FormulaId(t)).map(|p| (FormulaId(t), p)))
        .collect();
    let unseen_weight = unseen as f64 * if p.use_idf { (n as f64).ln() } else { 1.0 };
    let mut out = Vec::new();
    for cand in 0..n {
        let c = FormulaId(cand);
        let t = 1.0 + proofs.values().filter(|q| q.contains(&c)).count() as f64;
        let mut score = t.ln();
        for &f in &terms {
            let w = if p.use_idf { idf(store, f, cutoff) } else { 1.0 };
            let s = (0..n)
                .map(FormulaId)
                .filter(|&d| store.bag(d).contains(f))
                .filter(|d| *d == c || proofs.get(d).is_some_and(|q| q.contains(&c)))
                .count();
            if s > 0 {
                score += w * (p.sigma1 * s as f64 / t).ln();
            } else {
                score += p.sigma2 * w;
            }
        }
        score += p.sigma2 * unseen_weight;
        out.push((c, score));
    }
    sorted(out)
}

/// Shortest proof-step distance from `from` to every formula below it.
fn levels(store: &CorpusStore, from: FormulaId, limit: usize) -> BTreeMap<FormulaId, usize> {
    fn walk(store: &CorpusStore, at: FormulaId, depth: usize, limit: usize, best: &mut BTreeMap<FormulaId, usize>) {
        if depth == limit {
            return;
        }
        for p in chosen(store, at).unwrap_or_default() {
            let d = depth + 1;
            if best.get(&p).is_none_or(|&b| d < b) {
                best.insert(p, d);
                walk(store, p, d, limit, best);
            }
        }
    }
    let mut best = BTreeMap::new();
    walk(store, from, 0, limit, &mut best);
    best.remove(&from);
    best
}

pub fn geo(
    store: &CorpusStore,
    query: &QueryBag,
    cutoff: FormulaId,
    scheme: Weighting,
    k: &KnnParams,
    g: &GeoParams,
) -> Scored {
    let nb = neighbors(store, query, cutoff, scheme, k.k, k.tau1);
    let limit = match g.mode {
        GeoMode::FirstLevel => 1,
        GeoMode::Full => g.max_depth,
    };
    let mut best: BTreeMap<FormulaId, f64> = BTreeMap::new();
    let mut raise = |p: FormulaId, w: f64| {
        let e = best.entry(p).or_insert(w);
        *e = e.max(w);
    };
    for &(n, s) in &nb {
        raise(n, s);
        for (p, level) in levels(store, n, limit) {
            let mut w = s;
            let mut alive = true;
            for _ in 0..level {
                w *= g.decay;
                alive &= w >= g.epsilon;
            }
            if alive {
                raise(p, w);
            }
        }
    }
    sorted(best.into_iter().filter(|x| x.1 > 0.0).collect())
}

pub fn combine(rankings: &[Ranking], scheme: CombineScheme, weights: &[f64]) -> Scored {
    let universe: BTreeSet<FormulaId> = rankings.iter().flat_map(|r| r.ids()).collect();
    let missing = (universe.len() + 1) as f64;
    let total: f64 = weights.iter().sum();
    let w: Vec<f64> = weights.iter().map(|x| x / total).collect();
    let mut out = Vec::new();
    for &id in &universe {
        let ranks: Vec<f64> = rankings
            .iter()
            .map(|r| r.ids().position(|x| x == id).map_or(missing, |p| (p + 1) as f64))
            .collect();
        let sum = |f: &dyn Fn(f64) -> f64| {
            let mut acc = 0.0;
            for (r, wi) in ranks.iter().zip(&w) {
                acc += wi * f(*r);
            }
            acc
        };
        let key = match scheme {
            CombineScheme::Minimum => ranks.iter().copied().fold(f64::INFINITY, f64::min),
            CombineScheme::Maximum => ranks.iter().copied().fold(0.0, f64::max),
            CombineScheme::Linear => sum(&|r| r),
            CombineScheme::Geometric => sum(&|r| r.ln()),
            CombineScheme::Harmonic => 1.0 / sum(&|r| 1.0 / r),
            CombineScheme::Quadratic => sum(&|r| r * r),
        };
        out.push((id, -key));
    }
    sorted(out)
}

/// Full stable sort, then the first `k`.
pub fn top_k(items: &[(FormulaId, f64)], k: usize) -> Scored {
    let mut v = items.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// Same ids in the same order and scores within `1e-9`.
pub fn agree(what: &str, actual: &[(FormulaId, f64)], expected: &[(FormulaId, f64)]) -> Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!("{what}: {} entries, expected {}", actual.len(), expected.len()));
    }
    for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
        if a.0 != e.0 || (a.1 - e.1).abs() > 1e-9 {
            return Err(format!("{what}: position {i} is {a:?}, expected {e:?}"));
        }
    }
    Ok(())
}

pub fn random_knn(rng: &mut impl Rng) -> KnnParams {
    KnnParams {
        k: rng.random_range(1..=12),
        tau1: [0.5, 1.0, 2.0][rng.random_range(0..3)],
        tau2: [0.0, 0.5, 1.0][rng.random_range(0..3)],
        beta: [0.0, 1.0, 2.0][rng.random_range(0..3)],
    }
}

pub fn random_scheme(rng: &mut impl Rng) -> Weighting {
    [Weighting::BinaryIdf, Weighting::TfIdf, Weighting::Binary][rng.random_range(0..3)]
}

/// Runs every ranker against its reference once on a fresh random corpus.
pub fn check_all_rankers(rng: &mut impl Rng) -> Result<(), String> {
    use premsel::rankers::{geo_rank, knn_rank, nb_rank};
    let store = random_corpus(rng, 50);
    for _ in 0..3 {
        let cutoff = FormulaId(rng.random_range(0..=store.len()) as u32);
        let query = random_query(rng, &store);
        let scheme = random_scheme(rng);
        let kp = random_knn(rng);
        let actual = knn_rank(&store, &query, cutoff, scheme, &kp).map_err(|e| e.to_string())?;
        agree("knn", actual.as_slice(), &knn(&store, &query, cutoff, scheme, &kp))?;

        let np = NbParams {
            sigma1: [1.0, 30.0][rng.random_range(0..2)],
            sigma2: [0.0, -0.3, -2.0][rng.random_range(0..3)],
            use_idf: rng.random_bool(0.5),
        };
        let actual = nb_rank(&store, &query, cutoff, &np).map_err(|e| e.to_string())?;
        agree("nb", actual.as_slice(), &nb(&store, &query, cutoff, &np))?;

        for mode in [GeoMode::FirstLevel, GeoMode::Full] {
            let gp = GeoParams {
                decay: [0.3, 0.5, 0.9][rng.random_range(0..3)],
                mode,
                max_depth: rng.random_range(1..=6),
                epsilon: [1e-6, 0.05][rng.random_range(0..2)],
            };
            let actual = geo_rank(&store, &query, cutoff, scheme, &kp, &gp).map_err(|e| e.to_string())?;
            agree("geo", actual.as_slice(), &geo(&store, &query, cutoff, scheme, &kp, &gp))?;
        }

        let inputs = [
            knn_rank(&store, &query, cutoff, scheme, &kp).unwrap(),
            nb_rank(&store, &query, cutoff, &np).unwrap(),
            knn_rank(&store, &query, cutoff, Weighting::Binary, &KnnParams::default()).unwrap(),
        ];
        let m = rng.random_range(2..=3);
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(1..=4) as f64).collect();
        for scheme in CombineScheme::ALL {
            let spec = premsel::ensemble::CombinerSpec {
                scheme,
                weights: weights.clone(),
            };
            let actual = premsel::ensemble::combine(&inputs[..m], &spec).map_err(|e| e.to_string())?;
            agree(
                &format!("combine {scheme}"),
                actual.as_slice(),
                &combine(&inputs[..m], scheme, &weights),
            )?;
        }

        let items: Scored = (0..rng.random_range(0..200))
            .map(|i| (FormulaId(i), f64::from(rng.random_range(0..20u8))))
            .collect();
        let k = rng.random_range(0..=64);
        agree("top_k", &premsel::ensemble::top_k(items.iter().copied(), k), &top_k(&items, k))?;
    }
    Ok(())
}

/// A theorem's ranking over the full store equals its ranking over the
/// prefix strictly before it, bit for bit. The query is the theorem's own
/// features, resolved against each store's vocabulary.
pub fn check_no_leak(rng: &mut impl Rng) -> Result<(), String> {
    use premsel::lsi::{build_lsi, lsi_rank, LsiOptions};
    use premsel::rankers::{geo_rank, knn_rank, nb_rank};
    let store = random_corpus(rng, 50);
    let theorem = FormulaId(rng.random_range(0..store.len()) as u32);
    let cutoff = theorem;
    let prefix = store.prefix(cutoff);
    let named = premsel::features::extract_features(&store.formula(theorem).body, true);
    let query_full = store.interner().query_bag(&named, true);
    let query_prefix = prefix.interner().query_bag(&named, true);
    let bits = |r: &Ranking, s: &CorpusStore| -> Vec<(String, u64)> {
        r.iter().map(|(id, v)| (s.name(id).to_string(), v.to_bits())).collect()
    };
    let scheme = random_scheme(rng);
    let kp = random_knn(rng);
    let lsi = |s: &CorpusStore, q: &QueryBag| -> Result<Ranking, String> {
        let options = LsiOptions {
            topics: 4,
            scheme,
            original_vars: false,
            seed: 3,
        };
        let model = build_lsi(s, cutoff, options).map_err(|e| e.to_string())?;
        lsi_rank(&model, s, q, cutoff, &kp).map_err(|e| e.to_string())
    };
    let err = |e: premsel::rankers::RankError| e.to_string();
    let pairs = [
        (
            knn_rank(&store, &query_full, cutoff, scheme, &kp).map_err(err),
            knn_rank(&prefix, &query_prefix, cutoff, scheme, &kp).map_err(err),
        ),
        (
            nb_rank(&store, &query_full, cutoff, &NbParams::default()).map_err(err),
            nb_rank(&prefix, &query_prefix, cutoff, &NbParams::default()).map_err(err),
        ),
        (
            geo_rank(&store, &query_full, cutoff, scheme, &kp, &GeoParams::default()).map_err(err),
            geo_rank(&prefix, &query_prefix, cutoff, scheme, &kp, &GeoParams::default()).map_err(err),
        ),
        (lsi(&store, &query_full), lsi(&prefix, &query_prefix)),
    ];
    for (i, (full, cut)) in pairs.into_iter().enumerate() {
        if bits(&full?, &store) != bits(&cut?, &prefix) {
            return Err(format!("ranker {i} differs for theorem {theorem}"));
        }
    }
    Ok(())
}

/// Random sparse `rows × cols` matrix with about `density` non-zeros.
pub fn random_sparse(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> premsel::lsi::ColumnMatrix {
    let columns = (0..cols)
        .map(|_| {
            let mut column = Vec::new();
            for r in 0..rows as u32 {
                if rng.random_bool(density) {
                    column.push((r, rng.random_range(0.1..3.0)));
                }
            }
            column
        })
        .collect();
    premsel::lsi::ColumnMatrix::new(rows, columns)
}

/// Largest relative error of the leading `k` singular values against a
/// dense SVD; numerically zero values are compared against `σ_max`.
pub fn lsi_singular_value_error(rng: &mut impl Rng, rows: usize, cols: usize, k: usize) -> f64 {
    let a = random_sparse(rng, rows, cols, 0.05);
    let mut dense: Vec<f64> = a.to_dense().svd(false, false).singular_values.iter().copied().collect();
    dense.sort_by(|x, y| y.total_cmp(x));
    let svd = premsel::lsi::truncated_svd(&a, k, rng.random());
    (0..k)
        .map(|i| {
            let got = svd.singular_values.get(i).copied().unwrap_or(0.0);
            (got - dense[i]).abs() / dense[i].max(1e-9 * dense[0]).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

fn raw_cosine(a: &[(FeatureId, f64)], b: &[(FeatureId, f64)]) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(f, x)| b.iter().find(|(g, _)| g == f).map(|(_, y)| x * y))
        .sum();
    let norm = |v: &[(FeatureId, f64)]| v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    if norm(a) == 0.0 || norm(b) == 0.0 {
        0.0
    } else {
        dot / (norm(a) * norm(b))
    }
}

/// Largest gap between latent and raw cosine over all document pairs of
/// a random corpus, with as many topics as the matrix can have.
pub fn lsi_cosine_error(rng: &mut impl Rng) -> f64 {
    let store = random_corpus(rng, 40);
    let cutoff = store.end();
    let scheme = random_scheme(rng);
    let options = premsel::lsi::LsiOptions {
        topics: store.interner().len().max(1),
        scheme,
        original_vars: false,
        seed: rng.random(),
    };
    let model = premsel::lsi::build_lsi(&store, cutoff, options).unwrap();
    let raw: Vec<Vec<(FeatureId, f64)>> = (0..cutoff.0)
        .map(|d| {
            store
                .bag(FormulaId(d))
                .iter()
                .filter(|&(f, _)| !store.interner().is_original_var(f))
                .map(|(f, c)| (f, weight(scheme, c, idf(&store, f, cutoff))))
                .filter(|&(_, w)| w != 0.0)
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..cutoff.0 {
        for j in 0..cutoff.0 {
            let latent = premsel::lsi::cosine(model.embedding(FormulaId(i)), model.embedding(FormulaId(j)));
            let exact = raw_cosine(&raw[i as usize], &raw[j as usize]);
            worst = worst.max((latent - exact).abs());
        }
    }
    worst
}
