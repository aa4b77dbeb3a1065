//! Recursive-descent parser.
//!
//! Precedence, tightest first: `^` (right-associative), unary `-`, `*` `/`,
//! `+` `-`. The exponent of `^` may itself carry a unary minus, so `x1^-2`
//! parses as `x1^(-2)`. `#` starts a comment that runs to the end of the line.

use std::collections::BTreeSet;
use std::fmt;

use super::{Axis, BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(char),
    Syntax(String),
    UnknownIdentifier(String),
    /// The time symbol `t` is rejected: only autonomous fields are supported.
    TimeDependence,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Lexical(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}`"),
            ParseErrorKind::TimeDependence => {
                write!(f, "time symbol `t` is not allowed (autonomous systems only)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let token = if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal: String = chars[start..i].iter().collect();
            col += i - start;
            let value = literal.parse::<f64>().map_err(|_| ParseError {
                kind: ParseErrorKind::Syntax(format!("malformed number `{literal}`")),
                line: start_line,
                column: start_col,
            })?;
            Token::Num(value)
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            Token::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            col += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::LParen,
                ')' => Token::RParen,
                other => {
                    return Err(ParseError {
                        kind: ParseErrorKind::Lexical(other),
                        line: start_line,
                        column: start_col,
                    })
                }
            }
        };
        out.push(Spanned { token, line: start_line, column: start_col });
    }
    out.push(Spanned { token: Token::End, line, column: col });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    pos: usize,
    params: Option<&'a BTreeSet<String>>,
}

impl Parser<'_> {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, at: &Spanned, kind: ParseErrorKind) -> ParseError {
        ParseError { kind, line: at.line, column: at.column }
    }

    fn syntax(&self, at: &Spanned, msg: impl Into<String>) -> ParseError {
        self.error_at(at, ParseErrorKind::Syntax(msg.into()))
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Token::Op(c @ ('+' | '-')) = self.peek().token {
            self.advance();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::raw_binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Token::Op(c @ ('*' | '/')) = self.peek().token {
            self.advance();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::raw_binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().token {
            Token::Op('-') => {
                self.advance();
                let inner = self.unary()?;
                // a negated literal is the negative number itself
                Ok(match inner.as_num() {
                    Some(v) => Expr::num(-v),
                    None => Expr::raw_neg(inner),
                })
            }
            Token::Op('+') => {
                self.advance();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Token::Op('^') = self.peek().token {
            self.advance();
            let exponent = self.unary()?;
            return Ok(Expr::raw_binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.advance();
        match &tok.token {
            Token::Num(v) => Ok(Expr::num(*v)),
            Token::LParen => {
                let inner = self.expression()?;
                let close = self.advance();
                if close.token != Token::RParen {
                    return Err(self.syntax(&close, "expected `)`"));
                }
                Ok(inner)
            }
            Token::Ident(name) => {
                if self.peek().token == Token::LParen {
                    let func = Func::from_name(name).ok_or_else(|| {
                        self.error_at(&tok, ParseErrorKind::UnknownIdentifier(name.clone()))
                    })?;
                    self.advance();
                    let arg = self.expression()?;
                    let close = self.advance();
                    if close.token != Token::RParen {
                        return Err(self.syntax(&close, "expected `)` after function argument"));
                    }
                    return Ok(Expr::raw_call(func, arg));
                }
                self.identifier(&tok, name)
            }
            Token::End => Err(self.syntax(&tok, "unexpected end of input")),
            Token::Op(c) => Err(self.syntax(&tok, format!("unexpected operator `{c}`"))),
            Token::RParen => Err(self.syntax(&tok, "unexpected `)`")),
        }
    }

    fn identifier(&self, tok: &Spanned, name: &str) -> Result<Expr, ParseError> {
        if name == "t" {
            return Err(self.error_at(tok, ParseErrorKind::TimeDependence));
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(label) = rest.parse::<usize>() {
                return Axis::from_label(label)
                    .map(Expr::var)
                    .ok_or_else(|| self.error_at(tok, ParseErrorKind::UnknownIdentifier(name.into())));
            }
        }
        if Func::from_name(name).is_some() {
            return Err(self.syntax(tok, format!("function `{name}` requires an argument")));
        }
        if let Some(known) = self.params {
            if !known.contains(name) {
                return Err(self.error_at(tok, ParseErrorKind::UnknownIdentifier(name.into())));
            }
        }
        Ok(Expr::param(name))
    }
}

fn parse_impl(text: &str, params: Option<&BTreeSet<String>>) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, params };
    let e = parser.expression()?;
    let rest = parser.peek().clone();
    if rest.token != Token::End {
        return Err(parser.syntax(&rest, "unexpected trailing input"));
    }
    Ok(e)
}

/// Parses an expression; any non-reserved identifier becomes a parameter.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_impl(text, None)
}

/// Parses an expression, rejecting identifiers outside `params`.
pub fn parse_with_params(text: &str, params: &BTreeSet<String>) -> Result<Expr, ParseError> {
    parse_impl(text, Some(params))
}
