//! Random corpora shaped like a formal library: formulas come in articles,
//! each article introduces a few symbols and imports earlier articles, and
//! theorems draw premises by preferential attachment (mostly from their own
//! article). Every formula has a characteristic term and theorems mention
//! the characteristic terms of most of their premises, so
//! similarity in feature space correlates with shared dependencies.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::corpus::{CorpusError, CorpusStore, FormulaId};
use crate::eval::SyntheticOracle;
use crate::fol::{print_tptp, AnnotatedFormula, Formula, Role, Term};

/// Probability that a theorem extends an earlier related theorem.
const FAMILY: f64 = 0.75;
/// Probability of keeping each premise of that related theorem.
const INHERIT: f64 = 0.7;
/// Probability that a theorem mentions the signature of a premise.
const MENTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub formulas: usize,
    /// Mean premise count of a theorem.
    pub mean_proof: f64,
    /// Total number of function and predicate symbols.
    pub symbols: usize,
    pub seed: u64,
    /// Share of theorems that get a ground-truth proof.
    pub proof_fraction: f64,
    /// Share of ground-truth proofs that are also given as training data.
    pub training_fraction: f64,
    /// Formulas per article.
    pub article_size: usize,
}

impl SynthConfig {
    pub fn new(formulas: usize) -> Self {
        Self {
            formulas,
            mean_proof: 12.0,
            symbols: (formulas / 9).max(16),
            seed: 1,
            proof_fraction: 0.6,
            training_fraction: 0.5,
            article_size: 40,
        }
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::new(2000)
    }
}

/// Generated formulas plus proofs as (theorem index, premise indices).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub formulas: Vec<AnnotatedFormula>,
    /// Ground truth, visible to the oracle only.
    pub truth: Vec<(usize, Vec<usize>)>,
    /// Subset of `truth` available for training before the first pass.
    pub training: Vec<(usize, Vec<usize>)>,
}

impl SyntheticCorpus {
    /// A store holding every formula and the training proofs.
    pub fn store(&self) -> Result<CorpusStore, CorpusError> {
        let mut store = CorpusStore::ingest(self.formulas.clone())?;
        for (t, p) in &self.training {
            store.record_proof(id(*t), p.iter().map(|&i| id(i)))?;
        }
        Ok(store)
    }

    pub fn oracle(&self) -> SyntheticOracle {
        SyntheticOracle::new(
            self.truth
                .iter()
                .map(|(t, p)| (id(*t), p.iter().map(|&i| id(i)).collect())),
        )
    }

    pub fn to_tptp(&self) -> String {
        let mut out = String::new();
        for f in &self.formulas {
            out.push_str(&print_tptp(f));
            out.push('\n');
        }
        out
    }

    /// `theorem:premise premise ...` lines for `proofs`.
    pub fn dependency_text(&self, proofs: &[(usize, Vec<usize>)]) -> String {
        let mut out = String::new();
        for (t, p) in proofs {
            out.push_str(&self.formulas[*t].name);
            out.push(':');
            let names: Vec<&str> = p.iter().map(|&i| self.formulas[i].name.as_str()).collect();
            out.push_str(&names.join(" "));
            out.push('\n');
        }
        out
    }
}

fn id(i: usize) -> FormulaId {
    FormulaId(u32::try_from(i).expect("corpus exceeds u32 ids"))
}

#[derive(Debug, Clone, Copy)]
struct Sym {
    index: usize,
    arity: usize,
    predicate: bool,
}

impl Sym {
    fn name(self) -> String {
        if self.predicate {
            format!("r{}", self.index)
        } else if self.arity == 0 {
            format!("c{}", self.index)
        } else {
            format!("f{}", self.index)
        }
    }
}

struct Article {
    predicate: Sym,
    functions: Vec<Sym>,
    imports: Vec<usize>,
    /// Each member once, plus once per use as a premise.
    urn: Vec<usize>,
    /// Theorems of the article, oldest first.
    theorems: Vec<usize>,
}

struct Builder<'c> {
    config: &'c SynthConfig,
    rng: ChaCha8Rng,
    next_symbol: usize,
    articles: Vec<Article>,
    /// Article imports, again with one extra entry per import.
    article_urn: Vec<usize>,
    global_urn: Vec<usize>,
    /// Term groups per formula; the first is its signature.
    formula_groups: Vec<Vec<Vec<Sym>>>,
    formula_premises: Vec<Vec<usize>>,
    formulas: Vec<AnnotatedFormula>,
    truth: Vec<(usize, Vec<usize>)>,
    training: Vec<(usize, Vec<usize>)>,
}

/// Deterministic in the configuration.
pub fn generate(config: &SynthConfig) -> SyntheticCorpus {
    let mut b = Builder {
        config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        next_symbol: 0,
        articles: Vec::new(),
        article_urn: Vec::new(),
        global_urn: Vec::new(),
        formula_groups: Vec::new(),
        formula_premises: Vec::new(),
        formulas: Vec::with_capacity(config.formulas),
        truth: Vec::new(),
        training: Vec::new(),
    };
    let size = config.article_size.max(4);
    let article_count = config.formulas.div_ceil(size).max(1);
    let per_article = (config.symbols as f64 / article_count as f64).max(2.0);
    while b.formulas.len() < config.formulas {
        let want = config.formulas - b.formulas.len();
        b.article(want.min(size), per_article);
    }
    SyntheticCorpus {
        formulas: b.formulas,
        truth: b.truth,
        training: b.training,
    }
}

impl Builder<'_> {
    fn fresh_symbol(&mut self, predicate: bool) -> Sym {
        // unary predicates keep atoms determined by their argument
        let arity = if predicate {
            1
        } else {
            [0, 1, 1, 2][self.rng.random_range(0..4)]
        };
        self.next_symbol += 1;
        Sym {
            index: self.next_symbol,
            arity,
            predicate,
        }
    }

    fn article(&mut self, count: usize, per_article: f64) {
        let a = self.articles.len();
        // stochastic rounding keeps the symbol total on target
        let mut n = per_article.floor() as usize;
        if self.rng.random::<f64>() < per_article.fract() {
            n += 1;
        }
        let predicate = self.fresh_symbol(true);
        let functions = (1..n.max(3)).map(|_| self.fresh_symbol(false)).collect();
        let mut imports = BTreeSet::new();
        if !self.article_urn.is_empty() {
            for _ in 0..self.rng.random_range(1..=4) {
                imports.insert(*self.article_urn.choose(&mut self.rng).expect("nonempty"));
            }
        }
        for &i in &imports {
            self.article_urn.push(i);
        }
        self.article_urn.push(a);
        self.articles.push(Article {
            predicate,
            functions,
            imports: imports.into_iter().collect(),
            urn: Vec::new(),
            theorems: Vec::new(),
        });
        for k in 0..count {
            let role = self.pick_role(k, count);
            self.formula(a, role);
        }
    }

    fn pick_role(&mut self, k: usize, count: usize) -> Role {
        // background formulas open the article, as definitions do in a library
        let head = (count / 10).max(1);
        if k < head {
            return if self.rng.random_bool(0.5) {
                Role::Typing
            } else {
                Role::Definition
            };
        }
        if self.rng.random::<f64>() < 0.15 {
            Role::Axiom
        } else {
            Role::Theorem
        }
    }

    fn add(&mut self, a: usize, role: Role, groups: Vec<Vec<Sym>>, body: Formula) -> usize {
        let i = self.formulas.len();
        let prefix = match role {
            Role::Typing => "ty",
            Role::Definition => "df",
            Role::Axiom => "ax",
            _ => "t",
        };
        self.formulas.push(AnnotatedFormula::new(format!("{prefix}{i}"), role, body));
        self.formula_groups.push(groups);
        self.formula_premises.push(Vec::new());
        self.articles[a].urn.push(i);
        self.global_urn.push(i);
        i
    }

    fn own_symbol(&mut self, a: usize, nullary: bool) -> Sym {
        let pool = &self.articles[a].functions;
        let candidates: Vec<Sym> = pool.iter().copied().filter(|s| nullary || s.arity > 0).collect();
        *candidates
            .choose(&mut self.rng)
            .or_else(|| pool.choose(&mut self.rng))
            .expect("articles have functions")
    }

    /// The characteristic atom of a new formula: the article predicate on a
    /// head symbol of the article applied to a symbol of the article or of
    /// an import.
    fn signature(&mut self, a: usize) -> Vec<Sym> {
        let predicate = self.articles[a].predicate;
        let head = self.own_symbol(a, false);
        if head.arity == 0 {
            return vec![predicate, head];
        }
        let source = match self.articles[a].imports.choose(&mut self.rng) {
            Some(&i) if self.rng.random_bool(0.3) => i,
            _ => a,
        };
        vec![predicate, head, self.own_symbol(source, true)]
    }

    fn formula(&mut self, a: usize, role: Role) {
        let signature = self.signature(a);
        if role != Role::Theorem {
            let mut groups = vec![signature];
            if self.rng.random_bool(0.5) {
                groups.push(vec![self.articles[a].predicate, self.own_symbol(a, true)]);
            }
            let body = self.body(&groups, role);
            self.add(a, role, groups, body);
            return;
        }
        let parent = self.parent(a);
        let mut premises = BTreeSet::new();
        let mut groups = vec![signature];
        if let Some(q) = parent {
            for &p in &self.formula_premises[q] {
                if self.rng.random_bool(INHERIT) {
                    premises.insert(p);
                }
            }
            let inherited = self.formula_groups[q][0].clone();
            groups.push(inherited);
        }
        let target = self.proof_size();
        self.premises(a, target, &mut premises);
        for &p in &premises {
            if self.rng.random_bool(MENTION) {
                groups.push(self.formula_groups[p][0].clone());
            }
        }
        groups.truncate(12);
        let body = self.body(&groups, role);
        let t = self.add(a, role, groups, body);
        self.formula_premises[t] = premises.iter().copied().collect();
        self.articles[a].theorems.push(t);
        for &p in &premises {
            let owner = self.owner(p);
            self.articles[owner].urn.push(p);
            self.global_urn.push(p);
        }
        if !premises.is_empty() && self.rng.random::<f64>() < self.config.proof_fraction {
            let proof = premises.into_iter().collect::<Vec<_>>();
            if self.rng.random::<f64>() < self.config.training_fraction {
                self.training.push((t, proof.clone()));
            }
            self.truth.push((t, proof));
        }
    }

    fn owner(&self, formula: usize) -> usize {
        // articles are contiguous and filled in order
        let size = self.config.article_size.max(4);
        (formula / size).min(self.articles.len() - 1)
    }

    fn proof_size(&mut self) -> usize {
        if self.config.mean_proof > 2.0 {
            2 + Poisson::new(self.config.mean_proof - 2.0)
                .expect("positive mean")
                .sample(&mut self.rng) as usize
        } else {
            self.config.mean_proof.round().max(1.0) as usize
        }
    }

    /// A related earlier theorem, usually a recent one of the same article.
    fn parent(&mut self, a: usize) -> Option<usize> {
        if !self.rng.random_bool(FAMILY) {
            return None;
        }
        let article = &self.articles[a];
        let pool = if !article.theorems.is_empty() && self.rng.random_bool(0.8) {
            let recent = article.theorems.len().saturating_sub(8);
            &article.theorems[recent..]
        } else {
            let i = *article.imports.choose(&mut self.rng)?;
            &self.articles[i].theorems
        };
        pool.choose(&mut self.rng).copied()
    }

    /// Tops `out` up to `target` premises by preferential attachment.
    fn premises(&mut self, a: usize, target: usize, out: &mut BTreeSet<usize>) {
        if self.global_urn.is_empty() {
            return;
        }
        for _ in 0..target * 4 {
            if out.len() >= target {
                break;
            }
            let roll = self.rng.random::<f64>();
            let article = &self.articles[a];
            let urn = if roll < 0.6 && !article.urn.is_empty() {
                &article.urn
            } else if roll < 0.97 && !article.imports.is_empty() {
                let i = *article.imports.choose(&mut self.rng).expect("nonempty");
                &self.articles[i].urn
            } else {
                &self.global_urn
            };
            if let Some(&p) = urn.choose(&mut self.rng) {
                out.insert(p);
            }
        }
    }

    /// `r(f(g(..(X))))` along the chain; a constant ends it.
    fn chain(group: &[Sym]) -> Term {
        let Some((&head, rest)) = group.split_first() else {
            return Term::var("X");
        };
        if head.arity == 0 {
            return Term::constant(head.name());
        }
        let mut args = vec![Self::chain(rest)];
        args.resize(head.arity, Term::var("X"));
        Term::app(head.name(), args)
    }

    /// Atoms of all groups but the first imply the first; a lone group
    /// gets a trivial hypothesis on the variable.
    fn body(&mut self, groups: &[Vec<Sym>], role: Role) -> Formula {
        let mut atoms: Vec<Formula> = groups.iter().map(|g| Formula::atom(Self::chain(g))).collect();
        if atoms.len() < 2 {
            let predicate = groups[0][0];
            atoms.push(Formula::atom(Self::chain(&[predicate])));
        }
        atoms.rotate_left(1);
        let conclusion = atoms.pop().expect("two atoms");
        let hypothesis = atoms
            .into_iter()
            .reduce(Formula::and)
            .expect("at least one hypothesis");
        let matrix = match role {
            Role::Definition => Formula::iff(hypothesis, conclusion),
            _ => Formula::implies(hypothesis, conclusion),
        };
        let used: Vec<String> = matrix.free_variables().into_iter().collect();
        if used.is_empty() {
            matrix
        } else {
            Formula::forall(used, matrix)
        }
    }
}
