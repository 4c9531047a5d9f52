//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`; `^` is
//! right-associative.

use thiserror::Error;

use super::expr::{Expr, Func};
use super::number::{parse_decimal, Number};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((start, Tok::End));
        };
        if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
            let bytes = rest.as_bytes();
            let mut k = 0;
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            if k < bytes.len() && bytes[k] == b'.' {
                k += 1;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
            }
            if k < bytes.len() && (bytes[k] == b'e' || bytes[k] == b'E') {
                let mut j = k + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    k = j;
                }
            }
            self.pos += k;
            return Ok((start, Tok::Num(rest[..k].to_string())));
        }
        if c.is_alphabetic() || c == '_' {
            let len: usize = rest
                .chars()
                .take_while(|ch| ch.is_alphanumeric() || *ch == '_')
                .map(char::len_utf8)
                .sum();
            self.pos += len;
            return Ok((start, Tok::Ident(rest[..len].to_string())));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((start, Tok::Op(c)));
        }
        Err(ParseError::Syntax {
            offset: start,
            expected: vec!["an expression".to_string()],
            found: format!("`{c}`"),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (at, tok) = lexer.next()?;
        Ok(Parser { lexer, tok, at })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (at, tok) = self.lexer.next()?;
        self.at = at;
        self.tok = tok;
        Ok(())
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            offset: self.at,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.tok.describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.bump()?;
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump()?;
                    terms.push(self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(Expr::add_all(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.bump()?;
                    factors.push(self.factor()?);
                }
                Tok::Op('/') => {
                    self.bump()?;
                    factors.push(self.factor()?.recip());
                }
                _ => break,
            }
        }
        Ok(Expr::mul_all(factors))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(self.factor()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exp = self.factor()?;
            return Ok(Expr::pow(&base, &exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        const ATOM: &[&str] = &["number", "identifier", "`(`", "`-`"];
        match self.tok.clone() {
            Tok::Num(text) => {
                let value = parse_decimal(&text).ok_or_else(|| self.error(&["number"]))?;
                self.bump()?;
                Ok(Expr::number(Number::Rational(value)))
            }
            Tok::Ident(name) => {
                let start = self.at;
                self.bump()?;
                if self.tok == Tok::Op('(') {
                    let func = Func::from_name(&name).ok_or(ParseError::UnknownFunction {
                        name: name.clone(),
                        offset: start,
                    })?;
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Expr::apply(func, &arg));
                }
                match name.as_str() {
                    "i" => Ok(Expr::i()),
                    "pi" => Ok(Expr::pi()),
                    _ if Func::from_name(&name).is_some() => Err(self.error(&["`(`"])),
                    _ => Ok(Expr::sym(&name)),
                }
            }
            Tok::Op('(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            _ => Err(self.error(ATOM)),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        if self.tok == Tok::Op(')') {
            self.bump()
        } else {
            Err(self.error(&["`)`"]))
        }
    }
}

/// Parses an expression string into its canonical tree.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::expr::{cos, exp, sin, Node};

    #[test]
    fn power_of_function() {
        let e = parse("sin(theta)^2").unwrap();
        assert_eq!(e, Expr::pow(&sin(&Expr::sym("theta")), &Expr::int(2)));
    }

    #[test]
    fn hydrogenlike_product_keeps_exponentials_apart() {
        let e = parse("C1*r*sin(theta)*cos(phi)*exp(-r/(2*a0))*exp(-i*omega0*t)").unwrap();
        let Node::Mul(fs) = e.node() else { panic!() };
        assert_eq!(fs.len(), 6);
        assert!(fs.contains(&exp(&parse("-r/(2*a0)").unwrap())));
        assert!(fs.contains(&cos(&Expr::sym("phi"))));
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse("1 - r/(2*a0").unwrap_err();
        match err {
            ParseError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 11);
                assert_eq!(expected, vec!["`)`".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_function() {
        assert_eq!(
            parse("2*foo(x)").unwrap_err(),
            ParseError::UnknownFunction { name: "foo".into(), offset: 2 }
        );
    }

    #[test]
    fn precedence_rules() {
        assert_eq!(parse("-x^2").unwrap(), Expr::sym("x").powi(2).neg());
        assert_eq!(parse("2^3^2").unwrap(), Expr::int(512));
        assert_eq!(parse("x^-1").unwrap(), Expr::sym("x").recip());
        assert_eq!(parse("a/b*c").unwrap(), parse("(a*c)/b").unwrap());
        assert_eq!(parse(" 2.5e1 ").unwrap(), Expr::int(25));
    }

    #[test]
    fn trailing_garbage() {
        assert!(matches!(parse("x y"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("x $"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("sin + 1"), Err(ParseError::Syntax { .. })));
    }
}
