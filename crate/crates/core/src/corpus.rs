//! Chronologically ordered formula table with proof dependencies.
//!
//! Formula ids are assigned in ingestion order and that order is the
//! chronology: a proof of theorem `t` may only use premises with smaller
//! ids, and every query made "at cutoff `c`" sees only ids below `c`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::features::{extract_features, DocumentFrequency, FeatureBag, FeatureId, Interner};
use crate::fol::{AnnotatedFormula, Formula};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaId(pub u32);

impl FormulaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Self {
        FormulaId(u32::try_from(i).expect("formula id space exhausted"))
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A premise set: sorted, without duplicates.
pub type Proof = Vec<FormulaId>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("duplicate formula name `{0}`")]
    DuplicateName(String),
    #[error("unknown formula id {0}")]
    UnknownId(FormulaId),
    #[error("premise {premise} of theorem {theorem} is not chronologically earlier")]
    Chronology {
        theorem: FormulaId,
        premise: FormulaId,
    },
    #[error("line {line}: unknown formula name `{name}`")]
    UnknownName { line: usize, name: String },
    #[error("line {line}: expected `theorem:premise premise ...`")]
    MalformedDependencyLine { line: usize },
    #[error("line {line}: {source}")]
    DependencyLine {
        line: usize,
        #[source]
        source: Box<CorpusError>,
    },
}

/// All stored proofs of one theorem; no proof is a superset of another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyRecord {
    pub theorem: FormulaId,
    pub proofs: Vec<Proof>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofOutcome {
    /// Stored; the number of superseded (superset) proofs removed.
    Added { removed: usize },
    /// Rejected because a stored proof is a subset of it.
    Subsumed,
}

/// Posting lists: for every feature, the formulas containing it in id order.
#[derive(Debug, Clone, Default)]
pub struct FeatureIndex {
    postings: Vec<Vec<(FormulaId, u32)>>,
}

impl FeatureIndex {
    pub fn build(bags: &[FeatureBag], feature_count: usize) -> Self {
        let mut lens = vec![0u32; feature_count];
        for bag in bags {
            for &(f, _) in bag.as_slice() {
                lens[f.index()] += 1;
            }
        }
        let mut postings: Vec<Vec<(FormulaId, u32)>> =
            lens.iter().map(|&n| Vec::with_capacity(n as usize)).collect();
        for (i, bag) in bags.iter().enumerate() {
            let id = FormulaId::from_index(i);
            for &(f, c) in bag.as_slice() {
                postings[f.index()].push((id, c));
            }
        }
        Self { postings }
    }

    fn push(&mut self, id: FormulaId, bag: &FeatureBag, feature_count: usize) {
        if self.postings.len() < feature_count {
            self.postings.resize_with(feature_count, Vec::new);
        }
        for &(f, c) in bag.as_slice() {
            self.postings[f.index()].push((id, c));
        }
    }

    /// Formulas with id below `cutoff` containing `f`, with counts.
    pub fn postings(&self, f: FeatureId, cutoff: FormulaId) -> &[(FormulaId, u32)] {
        match self.postings.get(f.index()) {
            Some(list) => {
                let end = list.partition_point(|&(d, _)| d < cutoff);
                &list[..end]
            }
            None => &[],
        }
    }

    pub fn df(&self, f: FeatureId, cutoff: FormulaId) -> usize {
        self.postings(f, cutoff).len()
    }

    pub fn feature_count(&self) -> usize {
        self.postings.len()
    }
}

/// Document frequencies restricted to formulas before a cutoff.
#[derive(Debug, Clone, Copy)]
pub struct ChronoIdf<'a> {
    index: &'a FeatureIndex,
    cutoff: FormulaId,
}

impl DocumentFrequency for ChronoIdf<'_> {
    fn doc_count(&self) -> usize {
        self.cutoff.index()
    }

    fn df(&self, f: FeatureId) -> usize {
        self.index.df(f, self.cutoff)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    formulas: Vec<AnnotatedFormula>,
    names: HashMap<String, FormulaId>,
    interner: Interner,
    bags: Vec<FeatureBag>,
    index: FeatureIndex,
    symbol_ids: HashMap<String, u32>,
    symbols: Vec<Box<[u32]>>,
    typing: Vec<Vec<FormulaId>>,
    deps: BTreeMap<FormulaId, DependencyRecord>,
    chosen: HashMap<FormulaId, Proof>,
}

impl CorpusStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from formulas in chronological order.
    pub fn ingest(formulas: Vec<AnnotatedFormula>) -> Result<Self, CorpusError> {
        let mut store = CorpusStore::new();
        for f in formulas {
            store.push_formula(f)?;
        }
        Ok(store)
    }

    /// Like [`CorpusStore::ingest`], from pre-extracted bags. The posting
    /// lists are built in one pass instead of incrementally.
    pub fn ingest_with_bags(
        formulas: Vec<AnnotatedFormula>,
        interner: Interner,
        bags: Vec<FeatureBag>,
    ) -> Result<Self, CorpusError> {
        assert_eq!(formulas.len(), bags.len(), "one bag per formula");
        let mut store = CorpusStore {
            index: FeatureIndex::build(&bags, interner.len()),
            interner,
            bags,
            ..CorpusStore::default()
        };
        for f in formulas {
            store.register(f)?;
        }
        Ok(store)
    }

    /// Appends one formula as the chronologically latest.
    pub fn push_formula(&mut self, f: AnnotatedFormula) -> Result<FormulaId, CorpusError> {
        if self.names.contains_key(&f.name) {
            return Err(CorpusError::DuplicateName(f.name));
        }
        let named = extract_features(&f.body, true);
        let bag = self.interner.bag(&named);
        let id = FormulaId::from_index(self.formulas.len());
        self.index.push(id, &bag, self.interner.len());
        self.bags.push(bag);
        self.register(f)
    }

    fn register(&mut self, f: AnnotatedFormula) -> Result<FormulaId, CorpusError> {
        if self.names.contains_key(&f.name) {
            return Err(CorpusError::DuplicateName(f.name));
        }
        let id = FormulaId::from_index(self.formulas.len());
        let syms: Box<[u32]> = f
            .body
            .symbols()
            .into_iter()
            .map(|s| {
                let next = self.symbol_ids.len() as u32;
                *self.symbol_ids.entry(s).or_insert(next)
            })
            .collect();
        if self.typing.len() < self.symbol_ids.len() {
            self.typing.resize_with(self.symbol_ids.len(), Vec::new);
        }
        if f.role.is_background() {
            for &s in syms.iter() {
                self.typing[s as usize].push(id);
            }
        }
        self.symbols.push(syms);
        self.names.insert(f.name.clone(), id);
        self.formulas.push(f);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    /// One past the last id; the cutoff that sees the whole corpus.
    pub fn end(&self) -> FormulaId {
        FormulaId::from_index(self.formulas.len())
    }

    pub fn ids(&self) -> impl Iterator<Item = FormulaId> {
        (0..self.formulas.len()).map(FormulaId::from_index)
    }

    pub fn formula(&self, id: FormulaId) -> &AnnotatedFormula {
        &self.formulas[id.index()]
    }

    pub fn formulas(&self) -> &[AnnotatedFormula] {
        &self.formulas
    }

    pub fn name(&self, id: FormulaId) -> &str {
        &self.formulas[id.index()].name
    }

    pub fn id_of(&self, name: &str) -> Option<FormulaId> {
        self.names.get(name).copied()
    }

    pub fn bag(&self, id: FormulaId) -> &FeatureBag {
        &self.bags[id.index()]
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    pub fn index(&self) -> &FeatureIndex {
        &self.index
    }

    pub fn idf_at(&self, cutoff: FormulaId) -> ChronoIdf<'_> {
        ChronoIdf {
            index: &self.index,
            cutoff,
        }
    }

    /// Background (typing/definition) formulas mentioning `symbol`.
    pub fn typing_index(&self, symbol: &str) -> &[FormulaId] {
        self.symbol_ids
            .get(symbol)
            .map(|&s| self.typing[s as usize].as_slice())
            .unwrap_or(&[])
    }

    fn check_id(&self, id: FormulaId) -> Result<(), CorpusError> {
        if id.index() < self.formulas.len() {
            Ok(())
        } else {
            Err(CorpusError::UnknownId(id))
        }
    }

    /// Adds a proof unless a stored proof of the same theorem is a subset
    /// of it; stored proofs that are supersets of the new one are dropped.
    pub fn record_proof(
        &mut self,
        theorem: FormulaId,
        premises: impl IntoIterator<Item = FormulaId>,
    ) -> Result<ProofOutcome, CorpusError> {
        self.check_id(theorem)?;
        let mut proof: Proof = premises.into_iter().collect();
        proof.sort_unstable();
        proof.dedup();
        if let Some(&premise) = proof.iter().find(|&&p| p >= theorem) {
            return Err(CorpusError::Chronology { theorem, premise });
        }
        let record = self
            .deps
            .entry(theorem)
            .or_insert_with(|| DependencyRecord {
                theorem,
                proofs: Vec::new(),
            });
        if record.proofs.iter().any(|p| is_subset(p, &proof)) {
            return Ok(ProofOutcome::Subsumed);
        }
        let before = record.proofs.len();
        record.proofs.retain(|p| !is_subset(&proof, p));
        let removed = before - record.proofs.len();
        record.proofs.push(proof);
        let best = choose_proof(&record.proofs).clone();
        self.chosen.insert(theorem, best);
        Ok(ProofOutcome::Added { removed })
    }

    pub fn record(&self, theorem: FormulaId) -> Option<&DependencyRecord> {
        self.deps.get(&theorem)
    }

    pub fn proofs(&self, theorem: FormulaId) -> &[Proof] {
        self.deps
            .get(&theorem)
            .map(|r| r.proofs.as_slice())
            .unwrap_or(&[])
    }

    pub fn records(&self) -> impl Iterator<Item = &DependencyRecord> {
        self.deps.values()
    }

    /// The proof used for training: minimal cardinality, ties broken by
    /// the lexicographically smallest id sequence.
    pub fn chosen_proof(&self, theorem: FormulaId) -> Option<&[FormulaId]> {
        self.chosen.get(&theorem).map(Vec::as_slice)
    }

    pub fn proved_count(&self) -> usize {
        self.deps.len()
    }

    pub fn dependency_count(&self) -> usize {
        self.deps.values().map(|r| r.proofs.len()).sum()
    }

    /// `(theorem, chosen proof)` for every theorem before `cutoff` that has a proof.
    pub fn training_slice(&self, cutoff: FormulaId) -> Vec<(FormulaId, &[FormulaId])> {
        self.deps
            .range(..cutoff)
            .map(|(&t, _)| (t, self.chosen[&t].as_slice()))
            .collect()
    }

    /// Least fixpoint adding background formulas (id < `cutoff`) indexed
    /// under any symbol of the current set or of the optional conjecture.
    pub fn background_closure(
        &self,
        seed: &BTreeSet<FormulaId>,
        cutoff: FormulaId,
        conjecture: Option<&Formula>,
    ) -> BTreeSet<FormulaId> {
        let mut result = seed.clone();
        let mut seen_symbols = vec![false; self.symbol_ids.len()];
        let mut pending: Vec<u32> = Vec::new();
        let mut visit = |syms: &[u32], pending: &mut Vec<u32>| {
            for &s in syms {
                if !seen_symbols[s as usize] {
                    seen_symbols[s as usize] = true;
                    pending.push(s);
                }
            }
        };
        if let Some(c) = conjecture {
            let syms: Vec<u32> = c
                .symbols()
                .iter()
                .filter_map(|s| self.symbol_ids.get(s).copied())
                .collect();
            visit(&syms, &mut pending);
        }
        for &id in seed {
            if let Some(syms) = self.symbols.get(id.index()) {
                visit(syms, &mut pending);
            }
        }
        while let Some(s) = pending.pop() {
            for &ty in &self.typing[s as usize] {
                if ty >= cutoff {
                    break;
                }
                if result.insert(ty) {
                    visit(&self.symbols[ty.index()], &mut pending);
                }
            }
        }
        result
    }

    /// A copy holding only formulas and proofs strictly before `cutoff`.
    pub fn prefix(&self, cutoff: FormulaId) -> CorpusStore {
        let n = cutoff.index().min(self.len());
        let mut out = CorpusStore::ingest(self.formulas[..n].to_vec())
            .expect("prefix of a valid store is valid");
        for record in self.deps.range(..cutoff).map(|(_, r)| r) {
            for p in &record.proofs {
                out.record_proof(record.theorem, p.iter().copied())
                    .expect("prefix of a valid store is valid");
            }
        }
        out
    }

    /// Reads `theorem:premise premise ...` lines; blank lines and `%`
    /// comments are skipped. Returns the number of proofs stored.
    pub fn load_dependencies(&mut self, text: &str) -> Result<usize, CorpusError> {
        let mut stored = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('%').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (theorem, premises) = content
                .split_once(':')
                .ok_or(CorpusError::MalformedDependencyLine { line })?;
            let lookup = |name: &str| {
                self.id_of(name).ok_or_else(|| CorpusError::UnknownName {
                    line,
                    name: name.to_string(),
                })
            };
            let theorem = lookup(theorem.trim())?;
            let premises = premises
                .split_whitespace()
                .map(lookup)
                .collect::<Result<Vec<_>, _>>()?;
            match self.record_proof(theorem, premises) {
                Ok(ProofOutcome::Added { .. }) => stored += 1,
                Ok(ProofOutcome::Subsumed) => {}
                Err(e) => {
                    return Err(CorpusError::DependencyLine {
                        line,
                        source: Box::new(e),
                    })
                }
            }
        }
        Ok(stored)
    }

    /// One line per stored proof, theorems and premises in id order.
    pub fn write_dependencies(&self) -> String {
        let mut out = String::new();
        for record in self.deps.values() {
            let mut proofs = record.proofs.clone();
            proofs.sort();
            for p in proofs {
                out.push_str(self.name(record.theorem));
                out.push(':');
                for (i, &q) in p.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push_str(self.name(q));
                }
                out.push('\n');
            }
        }
        out
    }
}

fn is_subset(small: &[FormulaId], big: &[FormulaId]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut j = 0;
    for &x in small {
        while j < big.len() && big[j] < x {
            j += 1;
        }
        if j == big.len() || big[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

fn choose_proof(proofs: &[Proof]) -> &Proof {
    proofs
        .iter()
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
        .expect("record has at least one proof")
}
