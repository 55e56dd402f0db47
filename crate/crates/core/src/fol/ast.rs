use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

/// A first-order term. Variables carry uppercase-initial names and never
/// take arguments; constants are applications with no arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::App(name.into(), Vec::new())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(name.into(), args)
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn head(&self) -> &str {
        match self {
            Term::Var(v) => v,
            Term::App(f, _) => f,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }
}

/// Formula tree. Binary connectives always have exactly two children and
/// negation exactly one, which the enum shape enforces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Forall(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Atom(Term),
    Eq(Term, Term),
}

/// Discriminant of a [`Formula`] node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Universal,
    Existential,
    Conjunction,
    Disjunction,
    Implication,
    Equivalence,
    Negation,
    Atom,
    Equality,
}

impl Formula {
    pub fn atom(t: Term) -> Self {
        Formula::Atom(t)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    pub fn forall(vars: Vec<String>, body: Formula) -> Self {
        Formula::Forall(vars, Box::new(body))
    }

    pub fn exists(vars: Vec<String>, body: Formula) -> Self {
        Formula::Exists(vars, Box::new(body))
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            Formula::Forall(..) => NodeKind::Universal,
            Formula::Exists(..) => NodeKind::Existential,
            Formula::And(..) => NodeKind::Conjunction,
            Formula::Or(..) => NodeKind::Disjunction,
            Formula::Implies(..) => NodeKind::Implication,
            Formula::Iff(..) => NodeKind::Equivalence,
            Formula::Not(..) => NodeKind::Negation,
            Formula::Atom(..) => NodeKind::Atom,
            Formula::Eq(..) => NodeKind::Equality,
        }
    }

    /// Atoms of the formula in left-to-right order; equalities yield both sides.
    pub fn for_each_atom_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || match self {
            Formula::Forall(_, b) | Formula::Exists(_, b) | Formula::Not(b) => {
                b.for_each_atom_term(f)
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.for_each_atom_term(f);
                r.for_each_atom_term(f);
            }
            Formula::Atom(t) => f(t),
            Formula::Eq(l, r) => {
                f(l);
                f(r);
            }
        })
    }

    /// Atomic subformulas (`Atom` and `Eq` nodes) in left-to-right order.
    pub fn for_each_atom_formula<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || match self {
            Formula::Forall(_, b) | Formula::Exists(_, b) | Formula::Not(b) => {
                b.for_each_atom_formula(f)
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.for_each_atom_formula(f);
                r.for_each_atom_formula(f);
            }
            Formula::Atom(_) | Formula::Eq(..) => f(self),
        })
    }

    /// Variable lists of all quantifiers.
    pub fn for_each_binder<'a>(&'a self, f: &mut impl FnMut(&'a [String])) {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || match self {
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                f(vs);
                b.for_each_binder(f)
            }
            Formula::Not(b) => b.for_each_binder(f),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.for_each_binder(f);
                r.for_each_binder(f);
            }
            Formula::Atom(_) | Formula::Eq(..) => {}
        })
    }

    /// All non-variable symbols (predicates, functions, constants; `=` excluded).
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom_term(&mut |t| collect_symbols(t, &mut out));
        out
    }

    /// The non-variable symbols together with the arity they are used at.
    /// Returns the first symbol found at two different arities as an error.
    pub fn symbol_arities(&self) -> Result<HashMap<String, usize>, (String, usize, usize)> {
        let mut arities = HashMap::new();
        let mut clash = None;
        self.for_each_atom_term(&mut |t| {
            if clash.is_none() {
                if let Err(e) = record_arities(t, &mut arities) {
                    clash = Some(e);
                }
            }
        });
        match clash {
            Some(e) => Err(e),
            None => Ok(arities),
        }
    }

    /// Variables occurring outside the scope of any quantifier binding them.
    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        free_vars(self, &mut bound, &mut out);
        out
    }
}

fn collect_symbols(t: &Term, out: &mut BTreeSet<String>) {
    if let Term::App(f, args) = t {
        if !out.contains(f) {
            out.insert(f.clone());
        }
        for a in args {
            stacker::maybe_grow(32 * 1024, 1024 * 1024, || collect_symbols(a, out));
        }
    }
}

fn record_arities(
    t: &Term,
    arities: &mut HashMap<String, usize>,
) -> Result<(), (String, usize, usize)> {
    if let Term::App(f, args) = t {
        match arities.get(f) {
            Some(&a) if a != args.len() => return Err((f.clone(), a, args.len())),
            Some(_) => {}
            None => {
                arities.insert(f.clone(), args.len());
            }
        }
        for a in args {
            stacker::maybe_grow(32 * 1024, 1024 * 1024, || record_arities(a, arities))?;
        }
    }
    Ok(())
}

fn free_vars<'a>(f: &'a Formula, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    stacker::maybe_grow(32 * 1024, 1024 * 1024, || match f {
        Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
            let n = bound.len();
            bound.extend(vs.iter().map(String::as_str));
            free_vars(b, bound, out);
            bound.truncate(n);
        }
        Formula::Not(b) => free_vars(b, bound, out),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
            free_vars(l, bound, out);
            free_vars(r, bound, out);
        }
        Formula::Atom(t) => term_free_vars(t, bound, out),
        Formula::Eq(l, r) => {
            term_free_vars(l, bound, out);
            term_free_vars(r, bound, out);
        }
    })
}

fn term_free_vars(t: &Term, bound: &[&str], out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            if !bound.contains(&v.as_str()) {
                out.insert(v.clone());
            }
        }
        Term::App(_, args) => {
            for a in args {
                stacker::maybe_grow(32 * 1024, 1024 * 1024, || term_free_vars(a, bound, out));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Axiom,
    Definition,
    Typing,
    Lemma,
    Theorem,
    Conjecture,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Axiom,
        Role::Definition,
        Role::Typing,
        Role::Lemma,
        Role::Theorem,
        Role::Conjecture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Axiom => "axiom",
            Role::Definition => "definition",
            Role::Typing => "typing",
            Role::Lemma => "lemma",
            Role::Theorem => "theorem",
            Role::Conjecture => "conjecture",
        }
    }

    /// Roles whose formulas feed the background closure.
    pub fn is_background(self) -> bool {
        matches!(self, Role::Typing | Role::Definition)
    }

    /// Roles that are proof targets in evaluation.
    pub fn is_provable(self) -> bool {
        matches!(self, Role::Theorem | Role::Lemma)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

/// A named, role-tagged formula as it appears in a `fof(...)` statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnnotatedFormula {
    pub name: String,
    pub role: Role,
    pub body: Formula,
}

impl AnnotatedFormula {
    pub fn new(name: impl Into<String>, role: Role, body: Formula) -> Self {
        Self {
            name: name.into(),
            role,
            body,
        }
    }
}
