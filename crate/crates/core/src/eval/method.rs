use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use super::EvalError;
use crate::corpus::{CorpusStore, FormulaId};
use crate::ensemble::{combine, top_k, CombinerSpec};
use crate::features::{QueryBag, Weighting};
use crate::fol::Formula;
use crate::lsi::{build_lsi, lsi_rank, LatentModel, LsiOptions};
use crate::rankers::{geo_rank, knn_rank, nb_rank, GeoParams, KnnParams, NbParams, Ranking};

#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Knn(KnnParams),
    Nb(NbParams),
    Geo { knn: KnnParams, geo: GeoParams },
    Lsi { knn: KnnParams, topics: usize, seed: u64 },
    /// Rank aggregation over other named methods (their full rankings).
    Combine { members: Vec<String>, spec: CombinerSpec },
}

impl Learner {
    pub fn kind(&self) -> &'static str {
        match self {
            Learner::Knn(_) => "knn",
            Learner::Nb(_) => "nb",
            Learner::Geo { .. } => "geo",
            Learner::Lsi { .. } => "lsi",
            Learner::Combine { .. } => "combine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub learner: Learner,
    pub weighting: Weighting,
    pub original_vars: bool,
    /// Number of top-ranked premises offered to the prover.
    pub slice: usize,
    /// Add the background closure of the slice.
    pub closure: bool,
}

impl MethodSpec {
    pub fn new(name: impl Into<String>, learner: Learner, slice: usize) -> Self {
        Self {
            name: name.into(),
            learner,
            weighting: Weighting::BinaryIdf,
            original_vars: false,
            slice,
            closure: false,
        }
    }
}

/// A validated collection of named methods.
#[derive(Debug, Clone, Default)]
pub struct MethodSet {
    methods: BTreeMap<String, MethodSpec>,
}

impl MethodSet {
    pub fn new(specs: impl IntoIterator<Item = MethodSpec>) -> Result<Self, EvalError> {
        let mut methods = BTreeMap::new();
        for spec in specs {
            if methods.contains_key(&spec.name) {
                return Err(EvalError::InvalidMethod(format!(
                    "method `{}` defined twice",
                    spec.name
                )));
            }
            methods.insert(spec.name.clone(), spec);
        }
        let set = Self { methods };
        for spec in set.methods.values() {
            set.validate(spec)?;
        }
        for name in set.methods.keys() {
            set.check_acyclic(name, &mut Vec::new())?;
        }
        Ok(set)
    }

    fn validate(&self, spec: &MethodSpec) -> Result<(), EvalError> {
        let invalid = |msg: String| Err(EvalError::InvalidMethod(format!("{}: {msg}", spec.name)));
        if spec.slice == 0 {
            return invalid("slice size must be positive".into());
        }
        let check = |r: Result<(), crate::rankers::RankError>| match r {
            Ok(()) => Ok(()),
            Err(e) => invalid(e.to_string()),
        };
        match &spec.learner {
            Learner::Knn(k) => check(k.validate()),
            Learner::Nb(n) => check(n.validate()),
            Learner::Geo { knn, geo } => check(knn.validate().and_then(|_| geo.validate())),
            Learner::Lsi { knn, topics, .. } => {
                if *topics == 0 {
                    return invalid("topic count must be positive".into());
                }
                check(knn.validate())
            }
            Learner::Combine { members, spec: c } => {
                if members.len() < 2 {
                    return invalid("a combination needs at least 2 members".into());
                }
                if c.weights.len() != members.len() {
                    return invalid(format!(
                        "{} weights for {} members",
                        c.weights.len(),
                        members.len()
                    ));
                }
                for m in members {
                    if !self.methods.contains_key(m) {
                        return invalid(format!("member `{m}` is not defined"));
                    }
                }
                Ok(())
            }
        }
    }

    fn check_acyclic<'a>(&'a self, name: &'a str, stack: &mut Vec<&'a str>) -> Result<(), EvalError> {
        if stack.contains(&name) {
            stack.push(name);
            return Err(EvalError::InvalidMethod(format!(
                "combination cycle: {}",
                stack.join(" -> ")
            )));
        }
        if let Learner::Combine { members, .. } = &self.methods[name].learner {
            stack.push(name);
            for m in members {
                self.check_acyclic(m, stack)?;
            }
            stack.pop();
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&MethodSpec, EvalError> {
        self.methods.get(name).ok_or_else(|| EvalError::UnknownMethod {
            name: name.to_string(),
            available: self.names().map(str::to_string).collect(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.methods.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct LsiKey {
    topics: usize,
    seed: u64,
    scheme: Weighting,
    original_vars: bool,
    cutoff: FormulaId,
}

const LSI_CACHE_LIMIT: usize = 8;

/// Runs named methods against one corpus snapshot.
pub struct RankingEngine<'a> {
    store: &'a CorpusStore,
    methods: &'a MethodSet,
    lsi_cache: Mutex<HashMap<LsiKey, Arc<LatentModel>>>,
}

impl<'a> RankingEngine<'a> {
    pub fn new(store: &'a CorpusStore, methods: &'a MethodSet) -> Self {
        Self {
            store,
            methods,
            lsi_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &'a CorpusStore {
        self.store
    }

    pub fn methods(&self) -> &'a MethodSet {
        self.methods
    }

    /// The query of a stored formula, as seen by every method.
    pub fn theorem_query(&self, theorem: FormulaId) -> QueryBag {
        QueryBag::from_bag(self.store.bag(theorem).clone())
    }

    fn lsi_model(&self, key: LsiKey) -> Result<Arc<LatentModel>, EvalError> {
        if let Some(m) = self.lsi_cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(m));
        }
        let options = LsiOptions {
            topics: key.topics,
            scheme: key.scheme,
            original_vars: key.original_vars,
            seed: key.seed,
        };
        let model = Arc::new(build_lsi(self.store, key.cutoff, options)?);
        let mut cache = self.lsi_cache.lock().expect("cache lock");
        if cache.len() >= LSI_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, Arc::clone(&model));
        Ok(model)
    }

    /// Full ranking of the premises before `cutoff` by method `name`.
    pub fn rank(&self, name: &str, query: &QueryBag, cutoff: FormulaId) -> Result<Ranking, EvalError> {
        let spec = self.methods.get(name)?;
        let store = self.store;
        let q = query.restricted(store.interner(), spec.original_vars);
        let ranking = match &spec.learner {
            Learner::Knn(p) => knn_rank(store, &q, cutoff, spec.weighting, p)?,
            Learner::Nb(p) => nb_rank(store, &q, cutoff, p)?,
            Learner::Geo { knn, geo } => geo_rank(store, &q, cutoff, spec.weighting, knn, geo)?,
            Learner::Lsi { knn, topics, seed } => {
                let model = self.lsi_model(LsiKey {
                    topics: *topics,
                    seed: *seed,
                    scheme: spec.weighting,
                    original_vars: spec.original_vars,
                    cutoff,
                })?;
                lsi_rank(&model, store, &q, cutoff, knn)?
            }
            Learner::Combine { members, spec: c } => {
                let inputs = members
                    .iter()
                    .map(|m| self.rank(m, query, cutoff))
                    .collect::<Result<Vec<_>, _>>()?;
                combine(&inputs, c)?
            }
        };
        Ok(ranking)
    }

    /// The premises offered for a problem: the top `slice` of the ranking,
    /// restricted to `allowed` when given, plus `forced`, plus the
    /// background closure if the method asks for it. Ascending ids.
    pub fn select(
        &self,
        name: &str,
        query: &QueryBag,
        cutoff: FormulaId,
        conjecture: Option<&Formula>,
        restriction: Option<&Restriction>,
    ) -> Result<Vec<FormulaId>, EvalError> {
        let spec = self.methods.get(name)?;
        let ranking = self.rank(name, query, cutoff)?;
        let candidates = ranking
            .iter()
            .filter(|&(p, _)| restriction.is_none_or(|r| r.allowed.contains(&p)));
        let mut chosen: BTreeSet<FormulaId> =
            top_k(candidates, spec.slice).into_iter().map(|(p, _)| p).collect();
        if let Some(r) = restriction {
            chosen.extend(r.forced.iter().copied().filter(|&p| p < cutoff));
        }
        if spec.closure {
            chosen = self.store.background_closure(&chosen, cutoff, conjecture);
        }
        Ok(chosen.into_iter().collect())
    }
}

/// Candidate limiting for re-proving passes.
#[derive(Debug, Clone, Default)]
pub struct Restriction {
    pub allowed: BTreeSet<FormulaId>,
    pub forced: BTreeSet<FormulaId>,
}
