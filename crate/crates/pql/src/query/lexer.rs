//! Tokens of PQL.

use std::fmt;

use super::ParseError;
use crate::relations::{BinaryPredicate, UnaryPredicate};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Select,
    From,
    Where,
    Equals,
    Overlaps,
    With,
    Subset,
    Proper,
    GetTasks,
    Not,
    And,
    Or,
    Any,
    Some,
    Each,
    All,
    In,
    Is,
    Of,
    True,
    False,
    Union,
    Intersect,
    Except,
    Unary(UnaryPredicate),
    Binary(BinaryPredicate),
    Var(String),
    Str(String),
    Number(String),
    Star,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Assign,
    Tilde,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Unary(p) => return write!(f, "{p}"),
            Tok::Binary(p) => return write!(f, "{p}"),
            Tok::Var(v) => return write!(f, "variable {v}"),
            Tok::Str(s) => return write!(f, "string {s:?}"),
            Tok::Number(n) => return write!(f, "number {n}"),
            Tok::Eof => "end of input",
            Tok::Star => "*",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Assign => "=",
            Tok::Tilde => "~",
            kw => keyword_text(kw).unwrap_or("?"),
        };
        f.write_str(s)
    }
}

const KEYWORDS: &[(&str, Tok)] = &[
    ("SELECT", Tok::Select),
    ("FROM", Tok::From),
    ("WHERE", Tok::Where),
    ("EQUALS", Tok::Equals),
    ("OVERLAPS", Tok::Overlaps),
    ("WITH", Tok::With),
    ("SUBSET", Tok::Subset),
    ("PROPER", Tok::Proper),
    ("GetTasks", Tok::GetTasks),
    ("NOT", Tok::Not),
    ("AND", Tok::And),
    ("OR", Tok::Or),
    ("ANY", Tok::Any),
    ("SOME", Tok::Some),
    ("EACH", Tok::Each),
    ("ALL", Tok::All),
    ("IN", Tok::In),
    ("IS", Tok::Is),
    ("OF", Tok::Of),
    ("TRUE", Tok::True),
    ("FALSE", Tok::False),
    ("UNION", Tok::Union),
    ("INTERSECT", Tok::Intersect),
    ("EXCEPT", Tok::Except),
];

fn keyword_text(t: &Tok) -> Option<&'static str> {
    KEYWORDS.iter().find(|(_, k)| k == t).map(|(s, _)| *s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn word_token(word: &str) -> Option<Tok> {
    if let Some((_, t)) = KEYWORDS.iter().find(|(k, _)| *k == word) {
        return Some(t.clone());
    }
    if let Some(p) = UnaryPredicate::from_name(word) {
        return Some(Tok::Unary(p));
    }
    if let Some(p) = BinaryPredicate::from_name(word) {
        return Some(Tok::Binary(p));
    }
    let mut chars = word.chars();
    let first = chars.next()?;
    let var = (first.is_ascii_lowercase() || first == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    var.then(|| Tok::Var(word.to_string()))
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn string(&mut self, line: usize, col: usize) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            let (l, c) = (self.line, self.col);
            match self.bump() {
                None | Some('\n') => return Err(ParseError::at(line, col, "unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => {
                    let e = self
                        .bump()
                        .ok_or_else(|| ParseError::at(line, col, "unterminated string"))?;
                    match e {
                        '"' => out.push('"'),
                        '\\' => out.push('\\'),
                        '/' => out.push('/'),
                        'b' => out.push('\u{8}'),
                        'f' => out.push('\u{c}'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        't' => out.push('\t'),
                        'u' => {
                            let hex: String = (0..4).filter_map(|_| self.bump()).collect();
                            let ch = (hex.len() == 4 && hex.chars().all(|h| h.is_ascii_hexdigit()))
                                .then(|| {
                                    u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32)
                                })
                                .flatten()
                                .ok_or_else(|| {
                                    ParseError::at(l, c, format!("invalid unicode escape \\u{hex}"))
                                })?;
                            out.push(ch);
                        }
                        other => {
                            return Err(ParseError::at(l, c, format!("invalid escape \\{other}")))
                        }
                    }
                }
                Some(ch) => out.push(ch),
            }
        }
    }
}

/// Splits PQL text into tokens, dropping whitespace and `--` comments.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = lx.peek() {
        let (line, col) = (lx.line, lx.col);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col });
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                lx.bump();
            }
            '-' => {
                lx.bump();
                if lx.peek() != Some('-') {
                    return Err(ParseError::at(line, col, "unexpected character '-'"));
                }
                while lx.peek().is_some_and(|c| c != '\n' && c != '\r') {
                    lx.bump();
                }
            }
            '"' => {
                lx.bump();
                let s = lx.string(line, col)?;
                push(&mut out, Tok::Str(s));
            }
            '0'..='9' | '.' => {
                let mut n = String::new();
                while let Some(d) = lx.peek().filter(|d| d.is_ascii_digit() || *d == '.') {
                    n.push(d);
                    lx.bump();
                }
                push(&mut out, Tok::Number(n));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut w = String::new();
                while let Some(d) = lx.peek().filter(|d| d.is_ascii_alphanumeric() || *d == '_') {
                    w.push(d);
                    lx.bump();
                }
                if let Some(tok) = word_token(&w) {
                    push(&mut out, tok);
                } else if let Some(rest) = w.strip_prefix("GetTasks") {
                    // `GetTasksCanOccur` is GET_TASKS followed by a predicate name.
                    let pred =
                        word_token(rest).filter(|t| matches!(t, Tok::Unary(_) | Tok::Binary(_)));
                    let pred = pred.ok_or_else(|| {
                        ParseError::at(line, col, format!("unknown construction {w:?}"))
                    })?;
                    push(&mut out, Tok::GetTasks);
                    out.push(Token {
                        tok: pred,
                        line,
                        col: col + "GetTasks".len(),
                    });
                } else {
                    return Err(ParseError::at(line, col, format!("unknown word {w:?}")));
                }
            }
            _ => {
                lx.bump();
                let tok = match c {
                    '*' => Tok::Star,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '=' => Tok::Assign,
                    '~' => Tok::Tilde,
                    other => {
                        return Err(ParseError::at(
                            line,
                            col,
                            format!("unexpected character {other:?}"),
                        ))
                    }
                };
                push(&mut out, tok);
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line: lx.line,
        col: lx.col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn words_and_symbols() {
        assert_eq!(
            toks("SELECT * FROM \"/a\" -- note\n WHERE GetTasksCanOccur(x_1);"),
            vec![
                Tok::Select,
                Tok::Star,
                Tok::From,
                Tok::Str("/a".into()),
                Tok::Where,
                Tok::GetTasks,
                Tok::Unary(UnaryPredicate::CanOccur),
                Tok::LParen,
                Tok::Var("x_1".into()),
                Tok::RParen,
                Tok::Semi,
                Tok::Eof
            ]
        );
        assert_eq!(toks("\"a\"[.75]")[2], Tok::Number(".75".into()));
    }

    #[test]
    fn string_escapes() {
        assert_eq!(
            toks(r#""q\"\\\/\né""#)[0],
            Tok::Str("q\"\\/\n\u{e9}".into())
        );
        assert!(tokenize(r#""\x""#).is_err());
        assert!(tokenize(r#""\u12""#).is_err());
        assert!(tokenize("\"open").is_err());
    }

    #[test]
    fn positions_and_errors() {
        let t = tokenize("SELECT\n  *").unwrap();
        assert_eq!((t[1].line, t[1].col), (2, 3));
        let e = tokenize("SELECT Foo").unwrap_err();
        assert_eq!((e.line, e.col), (1, 8));
        assert_eq!(toks("select"), vec![Tok::Var("select".into()), Tok::Eof]);
        assert!(tokenize("GetTasksFoo").is_err());
        assert!(tokenize("a - b").is_err());
    }
}
