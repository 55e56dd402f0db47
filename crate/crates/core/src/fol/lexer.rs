use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Bang,
    Question,
    Tilde,
    Amp,
    Pipe,
    Implies,
    Iff,
    Eq,
    Neq,
    Lower(String),
    Upper(String),
    Dollar(String),
    Integer(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Question => "`?`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Implies => "`=>`".into(),
            Tok::Iff => "`<=>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Lower(s) | Tok::Upper(s) | Tok::Integer(s) => format!("`{s}`"),
            Tok::Dollar(s) => format!("`${s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: l,
                column: col,
            })
        };
        match c {
            c if c.is_whitespace() => {
                bump!();
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' | ')' | '[' | ']' | ',' | ':' | '.' | '?' | '~' | '&' | '|' => {
                bump!();
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '?' => Tok::Question,
                    '~' => Tok::Tilde,
                    '&' => Tok::Amp,
                    _ => Tok::Pipe,
                };
                push(&mut out, tok);
            }
            '!' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    push(&mut out, Tok::Neq);
                } else {
                    push(&mut out, Tok::Bang);
                }
            }
            '=' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    push(&mut out, Tok::Implies);
                } else {
                    push(&mut out, Tok::Eq);
                }
            }
            '<' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    if chars.peek() == Some(&'>') {
                        bump!();
                        push(&mut out, Tok::Iff);
                        continue;
                    }
                }
                return Err(ParseError::Syntax {
                    line: l,
                    column: col,
                    expected: vec!["`<=>`".into()],
                    found: "`<`".into(),
                });
            }
            '$' => {
                bump!();
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    word.push(c);
                    bump!();
                }
                if !word.starts_with(|c: char| c.is_ascii_lowercase()) {
                    return Err(ParseError::Syntax {
                        line: l,
                        column: col,
                        expected: vec!["`$true`".into(), "`$false`".into()],
                        found: format!("`${word}`"),
                    });
                }
                push(&mut out, Tok::Dollar(word));
            }
            c if c.is_ascii_alphanumeric() => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    word.push(c);
                    bump!();
                }
                let tok = if c.is_ascii_digit() {
                    if !word.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(ParseError::Syntax {
                            line: l,
                            column: col,
                            expected: vec!["integer".into()],
                            found: format!("`{word}`"),
                        });
                    }
                    Tok::Integer(word)
                } else if c.is_ascii_uppercase() {
                    Tok::Upper(word)
                } else {
                    Tok::Lower(word)
                };
                push(&mut out, tok);
            }
            other => {
                return Err(ParseError::Syntax {
                    line: l,
                    column: col,
                    expected: vec!["token".into()],
                    found: format!("{other:?}"),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}
