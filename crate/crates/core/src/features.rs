//! Syntactic features of formulas and their weighting.
//!
//! A formula contributes `sym:<s>` for every non-variable symbol occurrence
//! and `trm:<t>` for every non-variable subterm and every atom, printed
//! canonically with all variables renamed to `A0`. Optionally `trmV:<t>`
//! features keep the original variable names.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::fol::{write_atom, write_term, Formula, Term, VarStyle};

pub const SYMBOL_PREFIX: &str = "sym:";
pub const TERM_PREFIX: &str = "trm:";
pub const ORIGINAL_VAR_TERM_PREFIX: &str = "trmV:";
const NORMALIZED_VAR: &str = "A0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(pub u32);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureClass {
    Symbol,
    Term,
    OriginalVarTerm,
}

impl FeatureClass {
    pub fn of(name: &str) -> Option<Self> {
        if name.starts_with(SYMBOL_PREFIX) {
            Some(FeatureClass::Symbol)
        } else if name.starts_with(ORIGINAL_VAR_TERM_PREFIX) {
            Some(FeatureClass::OriginalVarTerm)
        } else if name.starts_with(TERM_PREFIX) {
            Some(FeatureClass::Term)
        } else {
            None
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("local constant `{0}` occurs with arguments")]
    LocalNotConstant(String),
}

/// Feature counts keyed by feature string, before interning.
pub type NamedBag = BTreeMap<String, u32>;

/// Maps feature strings to dense ids in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    ids: HashMap<String, FeatureId>,
    names: Vec<String>,
    original_var: Vec<bool>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> FeatureId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = FeatureId(u32::try_from(self.names.len()).expect("feature id space exhausted"));
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        self.original_var
            .push(FeatureClass::of(name) == Some(FeatureClass::OriginalVarTerm));
        id
    }

    pub fn get(&self, name: &str) -> Option<FeatureId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: FeatureId) -> &str {
        &self.names[id.index()]
    }

    pub fn is_original_var(&self, id: FeatureId) -> bool {
        self.original_var[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn bag(&mut self, named: &NamedBag) -> FeatureBag {
        FeatureBag::from_counts(named.iter().map(|(k, &c)| (self.intern(k), c)))
    }

    /// Looks features up without interning; unknown ones are kept aside.
    /// `trmV:` features are dropped unless `original_vars` is set.
    pub fn query_bag(&self, named: &NamedBag, original_vars: bool) -> QueryBag {
        let mut known = Vec::new();
        let mut unseen = Vec::new();
        for (k, &c) in named {
            if !original_vars && k.starts_with(ORIGINAL_VAR_TERM_PREFIX) {
                continue;
            }
            match self.get(k) {
                Some(id) => known.push((id, c)),
                None => unseen.push(c),
            }
        }
        QueryBag {
            known: FeatureBag::from_counts(known),
            unseen,
        }
    }
}

/// Feature id → positive count, sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureBag {
    entries: Vec<(FeatureId, u32)>,
}

impl FeatureBag {
    /// Builds a bag, summing duplicate ids and dropping zero counts.
    pub fn from_counts(counts: impl IntoIterator<Item = (FeatureId, u32)>) -> Self {
        let mut entries: Vec<_> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        entries.sort_unstable_by_key(|&(f, _)| f);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        Self { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, u32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn as_slice(&self) -> &[(FeatureId, u32)] {
        &self.entries
    }

    pub fn get(&self, f: FeatureId) -> u32 {
        self.entries
            .binary_search_by_key(&f, |&(g, _)| g)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn contains(&self, f: FeatureId) -> bool {
        self.get(f) > 0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(FeatureId) -> bool) {
        self.entries.retain(|&(f, _)| keep(f));
    }
}

/// A bag for a query formula. Features never interned by the corpus are
/// only counted, since no stored formula can share them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryBag {
    pub known: FeatureBag,
    pub unseen: Vec<u32>,
}

impl QueryBag {
    pub fn from_bag(known: FeatureBag) -> Self {
        Self {
            known,
            unseen: Vec::new(),
        }
    }

    /// Drops known `trmV:` features when the method does not use them.
    pub fn restricted(&self, interner: &Interner, original_vars: bool) -> QueryBag {
        if original_vars {
            return self.clone();
        }
        let mut known = self.known.clone();
        known.retain(|f| !interner.is_original_var(f));
        QueryBag {
            known,
            unseen: self.unseen.clone(),
        }
    }
}

/// Feature id → finite non-zero weight, sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(FeatureId, f64)>,
}

impl SparseVector {
    pub fn from_weights(weights: impl IntoIterator<Item = (FeatureId, f64)>) -> Self {
        let mut entries: Vec<_> = weights
            .into_iter()
            .filter(|&(_, w)| w != 0.0 && w.is_finite())
            .collect();
        entries.sort_unstable_by_key(|&(f, _)| f);
        entries.dedup_by_key(|&mut (f, _)| f);
        Self { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn as_slice(&self) -> &[(FeatureId, f64)] {
        &self.entries
    }

    pub fn get(&self, f: FeatureId) -> f64 {
        self.entries
            .binary_search_by_key(&f, |&(g, _)| g)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Extracts the feature bag of a formula.
pub fn extract_features(f: &Formula, include_original_vars: bool) -> NamedBag {
    let mut bag = NamedBag::new();
    let mut ex = Extractor {
        bag: &mut bag,
        original_vars: include_original_vars,
    };
    f.for_each_atom_formula(&mut |atom| ex.atom(atom));
    bag
}

struct Extractor<'a> {
    bag: &'a mut NamedBag,
    original_vars: bool,
}

impl Extractor<'_> {
    fn add(&mut self, prefix: &str, body: &str) {
        let mut key = String::with_capacity(prefix.len() + body.len());
        key.push_str(prefix);
        key.push_str(body);
        *self.bag.entry(key).or_insert(0) += 1;
    }

    fn atom(&mut self, atom: &Formula) {
        let mut norm = String::new();
        write_atom(&mut norm, atom, VarStyle::Renamed(NORMALIZED_VAR));
        self.add(TERM_PREFIX, &norm);
        if self.original_vars {
            let mut orig = String::new();
            write_atom(&mut orig, atom, VarStyle::Original);
            let ground = match atom {
                Formula::Atom(t) => !has_variable(t),
                Formula::Eq(l, r) => !has_variable(l) && !has_variable(r),
                _ => true,
            };
            if !ground {
                self.add(ORIGINAL_VAR_TERM_PREFIX, &orig);
            }
        }
        match atom {
            Formula::Atom(t) => {
                // the atom itself was recorded as a term above
                if let Term::App(p, args) = t {
                    self.add(SYMBOL_PREFIX, p);
                    for a in args {
                        self.term(a);
                    }
                }
            }
            Formula::Eq(l, r) => {
                self.term(l);
                self.term(r);
            }
            _ => unreachable!(),
        }
    }

    fn term(&mut self, t: &Term) {
        let Term::App(f, args) = t else { return };
        self.add(SYMBOL_PREFIX, f);
        let mut norm = String::new();
        write_term(&mut norm, t, VarStyle::Renamed(NORMALIZED_VAR));
        self.add(TERM_PREFIX, &norm);
        if self.original_vars && has_variable(t) {
            let mut orig = String::new();
            write_term(&mut orig, t, VarStyle::Original);
            self.add(ORIGINAL_VAR_TERM_PREFIX, &orig);
        }
        for a in args {
            stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.term(a));
        }
    }
}

fn has_variable(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(_, args) => args.iter().any(has_variable),
    }
}

/// Replaces every occurrence of a local constant `c` by a fresh variable
/// (`Vc`, suffixed with `_` until it clashes with no variable of `f`).
pub fn generalize_local_constants(
    f: &Formula,
    locals: &BTreeSet<String>,
) -> Result<Formula, FeatureError> {
    if locals.is_empty() {
        return Ok(f.clone());
    }
    let mut used = BTreeSet::new();
    collect_variables(f, &mut used);
    let mut fresh = HashMap::new();
    for c in locals {
        let mut v = format!("V{c}");
        while used.contains(&v) {
            v.push('_');
        }
        used.insert(v.clone());
        fresh.insert(c.as_str(), v);
    }
    map_formula_terms(f, &mut |t| generalize_term(t, &fresh))
}

/// Features of `f` merged with those of its generalized version; a feature
/// present in both keeps the larger count.
pub fn extract_with_locals(
    f: &Formula,
    locals: &BTreeSet<String>,
    include_original_vars: bool,
) -> Result<NamedBag, FeatureError> {
    let mut bag = extract_features(f, include_original_vars);
    if locals.is_empty() {
        return Ok(bag);
    }
    let general = generalize_local_constants(f, locals)?;
    for (k, c) in extract_features(&general, include_original_vars) {
        let e = bag.entry(k).or_insert(0);
        *e = (*e).max(c);
    }
    Ok(bag)
}

fn generalize_term(t: &Term, fresh: &HashMap<&str, String>) -> Result<Term, FeatureError> {
    match t {
        Term::Var(_) => Ok(t.clone()),
        Term::App(f, args) => {
            if let Some(v) = fresh.get(f.as_str()) {
                if !args.is_empty() {
                    return Err(FeatureError::LocalNotConstant(f.clone()));
                }
                return Ok(Term::Var(v.clone()));
            }
            let args = args
                .iter()
                .map(|a| generalize_term(a, fresh))
                .collect::<Result<_, _>>()?;
            Ok(Term::App(f.clone(), args))
        }
    }
}

fn collect_variables(f: &Formula, out: &mut BTreeSet<String>) {
    fn term(t: &Term, out: &mut BTreeSet<String>) {
        match t {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| term(a, out)),
        }
    }
    f.for_each_atom_term(&mut |t| term(t, out));
    f.for_each_binder(&mut |vs| out.extend(vs.iter().cloned()));
}

fn map_formula_terms<E>(
    f: &Formula,
    g: &mut impl FnMut(&Term) -> Result<Term, E>,
) -> Result<Formula, E> {
    stacker::maybe_grow(32 * 1024, 1024 * 1024, || {
        Ok(match f {
            Formula::Forall(vs, b) => Formula::forall(vs.clone(), map_formula_terms(b, g)?),
            Formula::Exists(vs, b) => Formula::exists(vs.clone(), map_formula_terms(b, g)?),
            Formula::And(l, r) => Formula::and(map_formula_terms(l, g)?, map_formula_terms(r, g)?),
            Formula::Or(l, r) => Formula::or(map_formula_terms(l, g)?, map_formula_terms(r, g)?),
            Formula::Implies(l, r) => {
                Formula::implies(map_formula_terms(l, g)?, map_formula_terms(r, g)?)
            }
            Formula::Iff(l, r) => Formula::iff(map_formula_terms(l, g)?, map_formula_terms(r, g)?),
            Formula::Not(b) => Formula::not(map_formula_terms(b, g)?),
            Formula::Atom(t) => Formula::Atom(g(t)?),
            Formula::Eq(l, r) => Formula::Eq(g(l)?, g(r)?),
        })
    })
}

/// Document counts for inverse-document-frequency weighting.
pub trait DocumentFrequency {
    fn doc_count(&self) -> usize;
    fn df(&self, f: FeatureId) -> usize;

    /// `ln(N / df)`, with features absent from the table treated as `df = 1`.
    fn idf(&self, f: FeatureId) -> f64 {
        let df = self.df(f).max(1);
        (self.doc_count() as f64 / df as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdfTable {
    docs: usize,
    df: Vec<u32>,
}

impl IdfTable {
    pub fn from_parts(docs: usize, df: Vec<u32>) -> Self {
        Self { docs, df }
    }
}

impl DocumentFrequency for IdfTable {
    fn doc_count(&self) -> usize {
        self.docs
    }

    fn df(&self, f: FeatureId) -> usize {
        self.df.get(f.index()).copied().unwrap_or(0) as usize
    }
}

pub fn build_idf(bags: &[FeatureBag]) -> IdfTable {
    let mut df: Vec<u32> = Vec::new();
    for bag in bags {
        for (f, _) in bag.iter() {
            if df.len() <= f.index() {
                df.resize(f.index() + 1, 0);
            }
            df[f.index()] += 1;
        }
    }
    IdfTable {
        docs: bags.len(),
        df,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Weighting {
    #[default]
    BinaryIdf,
    TfIdf,
    Binary,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::BinaryIdf => "binary-idf",
            Weighting::TfIdf => "tf-idf",
            Weighting::Binary => "binary",
        }
    }

    pub fn weight(self, count: u32, idf: f64) -> f64 {
        match self {
            Weighting::BinaryIdf => idf,
            Weighting::TfIdf => count as f64 * idf,
            Weighting::Binary => 1.0,
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary-idf" => Ok(Weighting::BinaryIdf),
            "tf-idf" => Ok(Weighting::TfIdf),
            "binary" => Ok(Weighting::Binary),
            other => Err(format!(
                "unknown weighting `{other}` (expected binary-idf, tf-idf or binary)"
            )),
        }
    }
}

pub fn weigh(bag: &FeatureBag, idf: &impl DocumentFrequency, scheme: Weighting) -> SparseVector {
    SparseVector::from_weights(bag.iter().map(|(f, c)| (f, scheme.weight(c, idf.idf(f)))))
}

/// One line per formula: `name TAB feature:count,...` in interning order.
pub fn dump_line(name: &str, bag: &FeatureBag, interner: &Interner) -> String {
    let mut out = String::from(name);
    out.push('\t');
    for (i, (f, c)) in bag.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(interner.name(f));
        out.push(':');
        out.push_str(&c.to_string());
    }
    out
}
