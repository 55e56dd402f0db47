use std::collections::HashMap;

use super::ast::{AnnotatedFormula, Formula, Role, Term};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Nesting depth (parentheses, negations, quantifiers, term arguments)
/// beyond which parsing stops with [`ParseError::DepthExceeded`].
pub const MAX_DEPTH: usize = 10_000;

/// Parses a sequence of `fof(name, role, formula).` statements.
pub fn parse_file(text: &str) -> Result<Vec<AnnotatedFormula>, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let mut out = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    while p.peek() != &Tok::Eof {
        let start = p.current().clone();
        let f = p.annotated()?;
        if seen.insert(f.name.clone(), start.line).is_some() {
            return Err(ParseError::DuplicateName {
                name: f.name,
                line: start.line,
                column: start.column,
            });
        }
        if let Err((symbol, first, second)) = f.body.symbol_arities() {
            return Err(ParseError::ArityMismatch {
                name: f.name,
                symbol,
                first,
                second,
                line: start.line,
                column: start.column,
            });
        }
        out.push(f);
    }
    Ok(out)
}

/// Parses a single formula body (no `fof(...)` wrapper).
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let f = p.formula()?;
    p.expect(Tok::Eof, &["end of input"])?;
    if let Err((symbol, first, second)) = f.symbol_arities() {
        return Err(ParseError::ArityMismatch {
            name: String::new(),
            symbol,
            first,
            second,
            line: 1,
            column: 1,
        });
    }
    Ok(f)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.current();
        ParseError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<Token, ParseError> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            Err(self.error(expected))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let t = self.current();
            return Err(ParseError::DepthExceeded {
                line: t.line,
                column: t.column,
                limit: MAX_DEPTH,
            });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn annotated(&mut self) -> Result<AnnotatedFormula, ParseError> {
        match self.peek() {
            Tok::Lower(w) if w == "fof" => {
                self.advance();
            }
            _ => return Err(self.error(&["`fof`"])),
        }
        self.expect(Tok::LParen, &["`(`"])?;
        let name = match self.peek().clone() {
            Tok::Lower(w) | Tok::Integer(w) => {
                self.advance();
                w
            }
            _ => return Err(self.error(&["formula name"])),
        };
        self.expect(Tok::Comma, &["`,`"])?;
        let role_tok = self.current().clone();
        let role = match &role_tok.tok {
            Tok::Lower(w) => {
                let role = w.parse::<Role>().map_err(|_| ParseError::UnknownRole {
                    role: w.clone(),
                    line: role_tok.line,
                    column: role_tok.column,
                })?;
                self.advance();
                role
            }
            _ => return Err(self.error(&["formula role"])),
        };
        self.expect(Tok::Comma, &["`,`"])?;
        let body = self.formula()?;
        self.expect(Tok::RParen, &["`)`"])?;
        self.expect(Tok::Dot, &["`.`"])?;
        Ok(AnnotatedFormula { name, role, body })
    }

    /// `=>` / `<=>` level: at most one non-associative operator.
    fn formula(&mut self) -> Result<Formula, ParseError> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
            let lhs = self.disjunction()?;
            let f = match self.peek() {
                Tok::Implies => {
                    self.advance();
                    Formula::implies(lhs, self.disjunction()?)
                }
                Tok::Iff => {
                    self.advance();
                    Formula::iff(lhs, self.disjunction()?)
                }
                _ => return Ok(lhs),
            };
            if matches!(self.peek(), Tok::Implies | Tok::Iff) {
                return Err(self.error(&["`)`"]));
            }
            Ok(f)
        })
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == &Tok::Pipe {
            self.advance();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == &Tok::Amp {
            self.advance();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
            self.enter()?;
            let f = match self.peek() {
                Tok::Tilde => {
                    self.advance();
                    Formula::not(self.unary()?)
                }
                Tok::Bang | Tok::Question => {
                    let universal = self.advance().tok == Tok::Bang;
                    self.expect(Tok::LBracket, &["`[`"])?;
                    let mut vars = Vec::new();
                    loop {
                        match self.peek().clone() {
                            Tok::Upper(v) => {
                                self.advance();
                                vars.push(v);
                            }
                            _ => return Err(self.error(&["variable"])),
                        }
                        match self.peek() {
                            Tok::Comma => {
                                self.advance();
                            }
                            Tok::RBracket => {
                                self.advance();
                                break;
                            }
                            _ => return Err(self.error(&["`,`", "`]`"])),
                        }
                    }
                    self.expect(Tok::Colon, &["`:`"])?;
                    let body = self.unary()?;
                    if universal {
                        Formula::forall(vars, body)
                    } else {
                        Formula::exists(vars, body)
                    }
                }
                Tok::LParen => {
                    self.advance();
                    let f = self.formula()?;
                    self.expect(Tok::RParen, &["`)`"])?;
                    f
                }
                _ => self.atomic()?,
            };
            self.leave();
            Ok(f)
        })
    }

    fn atomic(&mut self) -> Result<Formula, ParseError> {
        let start = self.current().clone();
        let lhs = match self.peek() {
            Tok::Lower(_) | Tok::Upper(_) | Tok::Dollar(_) => self.term()?,
            _ => return Err(self.error(&["`~`", "`!`", "`?`", "`(`", "atom"])),
        };
        match self.peek() {
            Tok::Eq => {
                self.advance();
                Ok(Formula::Eq(lhs, self.term()?))
            }
            Tok::Neq => {
                self.advance();
                Ok(Formula::not(Formula::Eq(lhs, self.term()?)))
            }
            _ if lhs.is_variable() => Err(ParseError::Syntax {
                line: self.current().line,
                column: self.current().column,
                expected: vec!["`=`".into(), "`!=`".into()],
                found: format!("{} after variable at {}:{}", self.peek().describe(), start.line, start.column),
            }),
            _ => Ok(Formula::Atom(lhs)),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
            self.enter()?;
            let t = match self.peek().clone() {
                Tok::Upper(v) => {
                    self.advance();
                    Term::Var(v)
                }
                Tok::Dollar(w) => {
                    self.advance();
                    Term::App(format!("${w}"), Vec::new())
                }
                Tok::Lower(f) => {
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek() == &Tok::LParen {
                        self.advance();
                        loop {
                            args.push(self.term()?);
                            match self.peek() {
                                Tok::Comma => {
                                    self.advance();
                                }
                                Tok::RParen => {
                                    self.advance();
                                    break;
                                }
                                _ => return Err(self.error(&["`,`", "`)`"])),
                            }
                        }
                    }
                    Term::App(f, args)
                }
                _ => return Err(self.error(&["term"])),
            };
            self.leave();
            Ok(t)
        })
    }
}
