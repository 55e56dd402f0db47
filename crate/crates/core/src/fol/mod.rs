//! Parser and printer for the `fof(...)` subset of TPTP used for corpora
//! and exported problems.
//!
//! Accepted grammar: quantifiers `![X,Y]:` and `?[X]:`, connectives `~`,
//! `&`, `|`, `=>`, `<=>`, infix `=` / `!=`, parentheses, `$true` and
//! `$false`. Binding strength is `~` > `&` > `|` > `=>`/`<=>`; the last two
//! do not associate, so `a => b => c` is rejected. Quantifier bodies are
//! unary formulas, as in TPTP. `%` comments run to end of line.

mod ast;
mod lexer;
mod parser;
mod print;

pub use ast::{AnnotatedFormula, Formula, NodeKind, Role, Term};
pub use parser::{parse_file, parse_formula, MAX_DEPTH};
pub use print::{print_file, print_tptp, write_atom, write_formula, write_term, VarStyle};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: syntax error: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{column}: duplicate formula name `{name}`")]
    DuplicateName {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: unknown role `{role}` (expected axiom, definition, typing, lemma, theorem or conjecture)")]
    UnknownRole {
        role: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: symbol `{symbol}` in `{name}` used with arity {first} and {second}")]
    ArityMismatch {
        name: String,
        symbol: String,
        first: usize,
        second: usize,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: nesting deeper than {limit}")]
    DepthExceeded {
        line: usize,
        column: usize,
        limit: usize,
    },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match *self {
            ParseError::Syntax { line, column, .. }
            | ParseError::DuplicateName { line, column, .. }
            | ParseError::UnknownRole { line, column, .. }
            | ParseError::ArityMismatch { line, column, .. }
            | ParseError::DepthExceeded { line, column, .. } => (line, column),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(text: &str) -> AnnotatedFormula {
        let mut v = parse_file(text).unwrap();
        assert_eq!(v.len(), 1);
        v.pop().unwrap()
    }

    #[test]
    fn parses_simple_atom() {
        let f = one("fof(t1, axiom, p(a)).");
        assert_eq!(f.name, "t1");
        assert_eq!(f.role, Role::Axiom);
        assert_eq!(
            f.body,
            Formula::Atom(Term::app("p", vec![Term::constant("a")]))
        );
        assert_eq!(print_tptp(&f), "fof(t1, axiom, p(a)).");
    }

    #[test]
    fn parses_universal_over_implication() {
        let f = one("fof(t2, theorem, ![X]: (p(X) => q(X))).");
        let px = Formula::Atom(Term::app("p", vec![Term::var("X")]));
        let qx = Formula::Atom(Term::app("q", vec![Term::var("X")]));
        assert_eq!(f.body, Formula::forall(vec!["X".into()], Formula::implies(px, qx)));
        assert_eq!(f.body.kind(), NodeKind::Universal);
        assert_eq!(print_tptp(&f), "fof(t2, theorem, (![X]: (p(X) => q(X)))).");
    }

    #[test]
    fn chained_implication_is_rejected() {
        let err = parse_file("fof(t3, axiom, p(a) => q(a) => r(a)).").unwrap_err();
        match err {
            ParseError::Syntax {
                line,
                column,
                expected,
                found,
            } => {
                assert_eq!((line, column), (1, 29));
                assert_eq!(expected, vec!["`)`".to_string()]);
                assert_eq!(found, "`=>`");
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(parse_file("fof(t3, axiom, (p(a) => q(a)) => r(a)).").is_ok());
        assert!(parse_file("fof(t3, axiom, p(a) <=> q(a) <=> r(a)).").is_err());
    }

    #[test]
    fn precedence_of_and_over_or() {
        assert_eq!(
            parse_formula("a & b | c").unwrap(),
            parse_formula("(a & b) | c").unwrap()
        );
        assert_eq!(
            parse_formula("a | b & c").unwrap(),
            parse_formula("a | (b & c)").unwrap()
        );
        assert_eq!(
            parse_formula("~ a & b => c | d").unwrap(),
            parse_formula("((~a) & b) => (c | d)").unwrap()
        );
        // quantifier bodies are unary
        assert_eq!(
            parse_formula("![X]: p(X) & q").unwrap(),
            parse_formula("(![X]: p(X)) & q").unwrap()
        );
    }

    #[test]
    fn equality_and_disequality() {
        let f = parse_formula("f(X) != a").unwrap();
        assert_eq!(
            f,
            Formula::not(Formula::Eq(
                Term::app("f", vec![Term::var("X")]),
                Term::constant("a")
            ))
        );
        assert_eq!(f.to_string(), "(~ f(X) = a)");
        assert_eq!(parse_formula("X = Y").unwrap().kind(), NodeKind::Equality);
        assert!(parse_formula("X").is_err());
        assert!(parse_formula("$true & ~$false").is_ok());
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "% header\nfof(a1,axiom,\n   p(a)). % trailing\n\n fof( 2 , lemma , q ).\n";
        let v = parse_file(text).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].name, "2");
        assert_eq!(v[1].role, Role::Lemma);
    }

    #[test]
    fn errors_are_positioned() {
        let err = parse_file("fof(a, axiom, p(a)).\nfof(b, axiom, p(a) &).").unwrap_err();
        assert_eq!(err.position(), (2, 21));
        let err = parse_file("fof(a, axiom, p).\nfof(a, axiom, q).").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateName { ref name, line: 2, .. } if name == "a"));
        let err = parse_file("fof(a, hypothesis, p).").unwrap_err();
        assert!(matches!(err, ParseError::UnknownRole { ref role, line: 1, column: 8 } if role == "hypothesis"));
        let err = parse_file("fof(a, axiom, p(a) & p(a, b)).").unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { ref symbol, .. } if symbol == "p"));
        assert!(parse_file("fof(a, axiom, p(£)).").is_err());
    }

    #[test]
    fn arity_may_differ_across_formulas() {
        assert!(parse_file("fof(a, axiom, p(a)).\nfof(b, axiom, p(a, b)).").is_ok());
    }

    #[test]
    fn depth_limit_gives_clean_error() {
        let deep = format!("fof(a, axiom, {}p{}).", "(".repeat(MAX_DEPTH + 5), ")".repeat(MAX_DEPTH + 5));
        let err = parse_file(&deep).unwrap_err();
        assert!(matches!(err, ParseError::DepthExceeded { .. }), "{err:?}");
        // printing parenthesizes every negation, doubling the nesting
        let ok = format!("fof(a, axiom, {}p).", "~".repeat(MAX_DEPTH / 2 - 2));
        let parsed = parse_file(&ok).unwrap();
        let printed = print_tptp(&parsed[0]);
        assert_eq!(parse_file(&printed).unwrap(), parsed);
    }

    #[test]
    fn free_variables_are_reported() {
        let f = parse_formula("![X]: p(X, Y) & q(Z)").unwrap();
        let free: Vec<_> = f.free_variables().into_iter().collect();
        assert_eq!(free, vec!["Y".to_string(), "Z".to_string()]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_round_trip(f in strategy::annotated()) {
            let printed = print_tptp(&f);
            let back = parse_file(&printed).unwrap();
            prop_assert_eq!(&back, &vec![f.clone()]);
            prop_assert_eq!(print_tptp(&back[0]), printed);
        }

        #[test]
        fn arbitrary_text_never_panics(s in "\\PC{0,80}") {
            let _ = parse_file(&s);
        }

        #[test]
        fn token_soup_never_panics(parts in prop::collection::vec(
            prop::sample::select(vec!["fof", "(", ")", ",", ".", "axiom", "p", "X", "![", "]:", "~", "&", "|", "=>", "<=>", "=", "!=", "$true", "%c\n", "a"]),
            0..40,
        )) {
            let _ = parse_file(&parts.join(" "));
        }
    }
}
