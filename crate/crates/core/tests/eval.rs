//! Evaluation harness and the learn/prove loop on synthetic corpora.

use std::collections::BTreeSet;

use premsel::corpus::{CorpusStore, FormulaId};
use premsel::eval::{
    evaluate, provable_theorems, run_pass, sample_theorems, EvalOptions, Learner, MethodSet,
    MethodSpec, PassMode, RankingEngine, Status, SyntheticOracle,
};
use premsel::fol::parse_file;
use premsel::rankers::{KnnParams, NbParams};
use premsel::synth::{generate, SynthConfig};

fn ids(v: &[u32]) -> Vec<FormulaId> {
    v.iter().map(|&i| FormulaId(i)).collect()
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn whole_corpus_slices_solve_exactly_the_provable_theorems() {
    let corpus = generate(&SynthConfig::new(300));
    let store = corpus.store().unwrap();
    let oracle = corpus.oracle();
    let methods = MethodSet::new([MethodSpec::new("nb", Learner::Nb(NbParams::default()), 300)]).unwrap();
    let engine = RankingEngine::new(&store, &methods);
    let sample = provable_theorems(&store);
    let report = evaluate(&engine, &names(&["nb"]), &sample, &oracle, &EvalOptions::default()).unwrap();
    let solved: BTreeSet<&str> = report.solved_by_method()["nb"].clone();
    let expected: BTreeSet<&str> = corpus.truth.iter().map(|(t, _)| corpus.formulas[*t].name.as_str()).collect();
    assert_eq!(solved, expected);
    assert!(report.rows.iter().all(|r| r.seconds == 0.0));
}

#[test]
fn slices_below_every_proof_size_solve_nothing() {
    let corpus = generate(&SynthConfig::new(300));
    let store = corpus.store().unwrap();
    let smallest = corpus.truth.iter().map(|(_, p)| p.len()).min().unwrap();
    let methods = MethodSet::new([MethodSpec::new(
        "tiny",
        Learner::Knn(KnnParams::default()),
        smallest - 1,
    )])
    .unwrap();
    let engine = RankingEngine::new(&store, &methods);
    let report = evaluate(
        &engine,
        &names(&["tiny"]),
        &provable_theorems(&store),
        &corpus.oracle(),
        &EvalOptions::default(),
    )
    .unwrap();
    assert!(report.union_solved().is_empty());
}

#[test]
fn every_thirtieth_of_1930_theorems_gives_65_rows() {
    let text: String = (0..2200)
        .map(|i| {
            let role = if i % 11 == 0 { "axiom" } else { "theorem" };
            format!("fof(x{i}, {role}, p(c{})).\n", i % 7)
        })
        .collect();
    let store = CorpusStore::ingest(parse_file(&text).unwrap()).unwrap();
    let theorems = provable_theorems(&store);
    let store = store.prefix(FormulaId(theorems[1929].0 + 1));
    assert_eq!(provable_theorems(&store).len(), 1930);
    let methods = MethodSet::new([MethodSpec::new("k", Learner::Knn(KnnParams::default()), 32)]).unwrap();
    let engine = RankingEngine::new(&store, &methods);
    let sample = sample_theorems(&store, 30);
    let report = evaluate(&engine, &names(&["k"]), &sample, &SyntheticOracle::new([]), &EvalOptions::default()).unwrap();
    assert_eq!(report.rows.len(), 65);
}

#[test]
fn later_data_never_changes_a_verdict() {
    let corpus = generate(&SynthConfig::new(500));
    let oracle = corpus.oracle();
    let store = corpus.store().unwrap();
    let methods = MethodSet::new([
        MethodSpec::new("knn", Learner::Knn(KnnParams::default()), 48),
        MethodSpec::new("nb", Learner::Nb(NbParams::default()), 48),
    ])
    .unwrap();
    let all = names(&["knn", "nb"]);
    let sample: Vec<FormulaId> = sample_theorems(&store, 7).into_iter().take(30).collect();
    let last = *sample.last().unwrap();
    let prefix = store.prefix(FormulaId(last.0 + 1));
    let full = evaluate(&RankingEngine::new(&store, &methods), &all, &sample, &oracle, &EvalOptions::default()).unwrap();
    let cut = evaluate(&RankingEngine::new(&prefix, &methods), &all, &sample, &oracle, &EvalOptions::default()).unwrap();
    assert!(!full.union_solved().is_empty());
    assert_eq!(full, cut);
}

// Ten formulas; every atom is a unary predicate on a constant, so each
// atom contributes the same number of features. The oracle knows
// t4:{a0,a3}, t5:{a0,a1}, t9:{a0,a1}; only t4's proof is given. k-NN with
// beta 2, slice 3.
//
// Pass 1, t5 (query p(a) & q(b) & k(m), cutoff 5): with m features per atom,
// s(a1) = m·ln5, s(a0) = s(t4) = m·ln2.5, so a1 = 2m·ln5, a0 = 3m·ln2.5,
// t4 = 2m·ln2.5, a3 = m·ln2.5; the slice {a1, a0, t4} holds t5's proof.
// Pass 1, t9 (query p(a) & k(m), cutoff 9): t5 carries no proof yet and a1
// shares no feature with t9, so a1 gets no score and t9 stays unsolved.
// Pass 2, t9: t5 now votes s(t5) = m(ln3 + ln9) for a0 and a1; the top three
// are a0, t5 (both 6m·ln3) and a1 (3m·ln3, ahead of t4 at 2m·ln3).
#[test]
fn a_proof_found_in_one_pass_unlocks_a_theorem_in_the_next() {
    let text = "fof(a0, axiom, p(a)).\nfof(a1, axiom, q(b)).\nfof(a2, axiom, r(c)).\nfof(a3, axiom, s(e)).\n\
                fof(t4, theorem, (p(a) & s(e))).\nfof(t5, theorem, ((p(a) & q(b)) & k(m))).\n\
                fof(a6, axiom, u(g)).\nfof(a7, axiom, v(h)).\nfof(a8, axiom, w(i)).\n\
                fof(t9, theorem, (k(m) & p(a))).\n";
    let mut store = CorpusStore::ingest(parse_file(text).unwrap()).unwrap();
    store.record_proof(FormulaId(4), ids(&[0, 3])).unwrap();
    let oracle = SyntheticOracle::new([
        (FormulaId(4), ids(&[0, 3])),
        (FormulaId(5), ids(&[0, 1])),
        (FormulaId(9), ids(&[0, 1])),
    ]);
    let methods = MethodSet::new([MethodSpec::new("knn", Learner::Knn(KnnParams::default()), 3)]).unwrap();
    let status = |attempts: &[premsel::eval::Attempt], t: u32| {
        attempts.iter().find(|a| a.theorem == FormulaId(t)).unwrap().verdict.status
    };
    let opts = EvalOptions::default();
    let (s1, a1) = run_pass(&mut store, &methods, &names(&["knn"]), &oracle, &opts, &PassMode::Unlimited, 1).unwrap();
    assert_eq!(status(&a1, 5), Status::Solved);
    assert_eq!(status(&a1, 9), Status::Unsolved);
    assert_eq!((s1.newly_solved, s1.total_solved), (1, 2));
    let (s2, a2) = run_pass(&mut store, &methods, &names(&["knn"]), &oracle, &opts, &PassMode::Unlimited, 2).unwrap();
    assert_eq!(status(&a2, 9), Status::Solved);
    assert_eq!((s2.newly_solved, s2.total_solved), (1, 3));
    let (s3, _) = run_pass(&mut store, &methods, &names(&["knn"]), &oracle, &opts, &PassMode::Unlimited, 3).unwrap();
    assert_eq!((s3.newly_solved, s3.total_solved), (0, 3));
}

#[test]
fn solved_sets_only_grow_across_passes() {
    let corpus = generate(&SynthConfig::new(600));
    let oracle = corpus.oracle();
    let mut store = corpus.store().unwrap();
    let methods = MethodSet::new([MethodSpec::new("knn", Learner::Knn(KnnParams::default()), 64)]).unwrap();
    let solved = |s: &CorpusStore| -> BTreeSet<FormulaId> {
        provable_theorems(s).into_iter().filter(|&t| !s.proofs(t).is_empty()).collect()
    };
    let mut previous = solved(&store);
    for pass in 1..=3 {
        run_pass(&mut store, &methods, &names(&["knn"]), &oracle, &EvalOptions::default(), &PassMode::Unlimited, pass)
            .unwrap();
        let now = solved(&store);
        assert!(previous.is_subset(&now));
        previous = now;
    }
}
