use std::fmt::{self, Write};

use super::ast::{AnnotatedFormula, Formula, Term};

/// How variables are spelled when printing a term.
#[derive(Debug, Clone, Copy)]
pub enum VarStyle<'a> {
    Original,
    /// Every variable printed as the given name.
    Renamed(&'a str),
}

pub fn write_term(out: &mut String, t: &Term, style: VarStyle<'_>) {
    match t {
        Term::Var(v) => match style {
            VarStyle::Original => out.push_str(v),
            VarStyle::Renamed(r) => out.push_str(r),
        },
        Term::App(f, args) => {
            out.push_str(f);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    stacker::maybe_grow(32 * 1024, 1024 * 1024, || write_term(out, a, style));
                }
                out.push(')');
            }
        }
    }
}

/// Prints an equality or atom the same way it appears in formulas.
pub fn write_atom(out: &mut String, f: &Formula, style: VarStyle<'_>) {
    match f {
        Formula::Atom(t) => write_term(out, t, style),
        Formula::Eq(l, r) => {
            write_term(out, l, style);
            out.push_str(" = ");
            write_term(out, r, style);
        }
        _ => unreachable!("write_atom called on a non-atomic formula"),
    }
}

pub fn write_formula(out: &mut String, f: &Formula) {
    stacker::maybe_grow(32 * 1024, 1024 * 1024, || match f {
        Formula::Atom(_) | Formula::Eq(..) => write_atom(out, f, VarStyle::Original),
        Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
            out.push('(');
            out.push(if matches!(f, Formula::Forall(..)) { '!' } else { '?' });
            out.push('[');
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(v);
            }
            out.push_str("]: ");
            write_formula(out, b);
            out.push(')');
        }
        Formula::Not(b) => {
            out.push_str("(~ ");
            write_formula(out, b);
            out.push(')');
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
            let op = match f {
                Formula::And(..) => " & ",
                Formula::Or(..) => " | ",
                Formula::Implies(..) => " => ",
                _ => " <=> ",
            };
            out.push('(');
            write_formula(out, l);
            out.push_str(op);
            write_formula(out, r);
            out.push(')');
        }
    })
}

/// Fully parenthesized `fof(name, role, body).` line, without trailing newline.
pub fn print_tptp(f: &AnnotatedFormula) -> String {
    let mut out = String::with_capacity(64);
    out.push_str("fof(");
    out.push_str(&f.name);
    out.push_str(", ");
    out.push_str(f.role.as_str());
    out.push_str(", ");
    write_formula(&mut out, &f.body);
    out.push_str(").");
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(&mut s, self, VarStyle::Original);
        f.write_str(&s)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for AnnotatedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_tptp(self))
    }
}

/// Prints a list of formulas, one statement per line.
pub fn print_file<'a>(formulas: impl IntoIterator<Item = &'a AnnotatedFormula>) -> String {
    let mut out = String::new();
    for f in formulas {
        let _ = writeln!(out, "{}", print_tptp(f));
    }
    out
}
