//! Recursive-descent parser for reaction expressions.

use super::{BinOp, Expr, Func, ReactionField};
use crate::error::{CoreError, Result};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Semi,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn error(&self, pos: usize, message: impl Into<String>) -> CoreError {
        CoreError::Parse { position: pos, message: message.into() }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Token)>> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                b'+' => {
                    out.push((start, Token::Plus));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((start, Token::Minus));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((start, Token::Star));
                    self.pos += 1;
                }
                b'/' => {
                    out.push((start, Token::Slash));
                    self.pos += 1;
                }
                b'^' => {
                    out.push((start, Token::Caret));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((start, Token::LParen));
                    self.pos += 1;
                }
                b')' => {
                    out.push((start, Token::RParen));
                    self.pos += 1;
                }
                b';' => {
                    out.push((start, Token::Semi));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'.' => {
                    let tok = self.lex_number()?;
                    out.push((start, tok));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                    out.push((start, Token::Ident(name)));
                }
                _ => return Err(self.error(start, format!("unexpected character '{}'", c as char))),
            }
        }
        Ok(out)
    }

    fn lex_number(&mut self) -> Result<Token> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        // Optional exponent part.
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mut p = self.pos + 1;
            if p < self.src.len() && (self.src[p] == b'+' || self.src[p] == b'-') {
                p += 1;
            }
            if p < self.src.len() && self.src[p].is_ascii_digit() {
                self.pos = p;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Token::Number)
            .map_err(|_| self.error(start, format!("invalid number literal '{text}'")))
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    idx: usize,
    arity: usize,
    src_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map_or(self.src_len, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).map(|(_, t)| t.clone());
        self.idx += 1;
        t
    }

    fn error(&self, message: impl Into<String>) -> CoreError {
        CoreError::Parse { position: self.pos(), message: message.into() }
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => break,
            };
            self.idx += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => break,
            };
            self.idx += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Token::Minus) {
            self.idx += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.idx += 1;
            // Right-associative; the exponent may carry a unary minus.
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::Number(v)) => Ok(Expr::Const(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen, "closing ')'")?;
                Ok(e)
            }
            Some(Token::Ident(name)) => {
                if let Some(idx) = parse_var(&name) {
                    if idx == 0 || idx > self.arity {
                        return Err(CoreError::Parse {
                            position: pos,
                            message: format!("variable u{idx} out of range for arity {}", self.arity),
                        });
                    }
                    return Ok(Expr::Var(idx - 1));
                }
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Token::LParen, &format!("'(' after function {name}"))?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "closing ')'")?;
                    return Ok(Expr::Func(f, Box::new(arg)));
                }
                Err(CoreError::Parse {
                    position: pos,
                    message: format!("unknown identifier '{name}' (variables are u1..u{}, functions tanh/exp/sin/cos/sqrt/abs)", self.arity),
                })
            }
            Some(other) => Err(CoreError::Parse {
                position: pos,
                message: format!("unexpected token {other:?}"),
            }),
            None => Err(CoreError::Parse { position: pos, message: "unexpected end of input".into() }),
        }
    }
}

/// `u<k>` with k decimal digits; returns the one-based index.
fn parse_var(name: &str) -> Option<usize> {
    let rest = name.strip_prefix('u')?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Parses semicolon-separated component expressions into a reaction field of
/// the declared arity.
pub fn parse(source: &str, arity: usize) -> Result<ReactionField> {
    if arity == 0 {
        return Err(CoreError::InvalidParameter { name: "arity", detail: "arity must be >= 1".into() });
    }
    let tokens = Lexer::new(source).tokens()?;
    let mut parser = Parser { tokens, idx: 0, arity, src_len: source.len() };
    let mut components = Vec::new();
    loop {
        components.push(parser.expr()?);
        match parser.peek() {
            Some(Token::Semi) => {
                parser.idx += 1;
            }
            None => break,
            Some(_) => return Err(parser.error("expected ';' or end of input")),
        }
    }
    if components.len() != arity {
        return Err(CoreError::InvalidParameter {
            name: "arity",
            detail: format!("declared arity {arity} but source has {} components", components.len()),
        });
    }
    ReactionField::new(arity, components)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_component_field() {
        let f = parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).unwrap();
        assert_eq!(f.arity(), 2);
        assert_eq!(f.components().len(), 2);
    }

    #[test]
    fn variable_out_of_range() {
        match parse("u3", 2) {
            Err(CoreError::Parse { message, .. }) => assert!(message.contains("out of range")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_reports_position() {
        match parse("u1 + frob(u1)", 1) {
            Err(CoreError::Parse { position, message }) => {
                assert_eq!(position, 5);
                assert!(message.contains("frob"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn component_count_must_match_arity() {
        assert!(parse("u1; u1", 1).is_err());
        assert!(parse("u1", 2).is_err());
    }

    #[test]
    fn syntax_error_has_position() {
        match parse("u1 + ", 1) {
            Err(CoreError::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("(u1", 1).is_err());
        assert!(parse("u1 u1", 1).is_err());
    }

    #[test]
    fn scientific_literals() {
        let f = parse("1.5e-3*u1", 1).unwrap();
        let v = f.eval(&[2.0]).unwrap();
        assert!((v[0] - 3.0e-3).abs() < 1e-18);
    }
}
