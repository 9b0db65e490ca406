//! Prefix-notation grammar for defining functions.
//!
//! ```text
//! expr  := NUMBER | const(NUMBER) | re(J) | im(J) | abs2(J) | absp(J, M)
//!        | norm | + expr expr | * expr expr | ^ expr INTEGER
//! ```
//!
//! Indices `J` are 1-based (`re(2)` is `Re z_2`). Example: the saddle
//! `Re z_2 - |z_1|^2` is written `+ re(2) * -1 abs2(1)`.
//!
//! Errors carry the line and column of the offending token; callers that
//! embed an expression inside a larger file pass the position of its first
//! character so reported positions refer to the file.

use crate::error::{Error, Result};
use crate::expr::{Node, ScalarFieldExpr};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Op(char),
    Number(f64),
    Word(String),
    Call(String, Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

/// Position of the first character of an embedded expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub line: usize,
    pub column: usize,
}

impl Default for Origin {
    fn default() -> Self {
        Origin { line: 1, column: 1 }
    }
}

pub(crate) fn err_at(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub(crate) fn tokenize(src: &str, origin: Origin, ops: &[char]) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (origin.line, origin.column);
    let mut i = 0;
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
        let ch = chars[*i];
        *i += 1;
        if ch == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() || ch == ',' {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        let (tl, tc) = (line, col);
        let is_number_start = ch.is_ascii_digit()
            || ch == '.'
            || ((ch == '-' || ch == '+')
                && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit() || *c == '.'));
        if is_number_start {
            let start = i;
            advance(&mut i, &mut line, &mut col);
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || chars[i] == 'E'
                    || ((chars[i] == '-' || chars[i] == '+')
                        && matches!(chars[i - 1], 'e' | 'E')))
            {
                advance(&mut i, &mut line, &mut col);
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| err_at(tl, tc, format!("malformed number '{text}'")))?;
            out.push(Token {
                kind: TokenKind::Number(v),
                line: tl,
                column: tc,
            });
            continue;
        }
        if ops.contains(&ch) {
            advance(&mut i, &mut line, &mut col);
            out.push(Token {
                kind: TokenKind::Op(ch),
                line: tl,
                column: tc,
            });
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            let name: String = chars[start..i].iter().collect();
            if i < chars.len() && chars[i] == '(' {
                advance(&mut i, &mut line, &mut col);
                let arg_start = i;
                while i < chars.len() && chars[i] != ')' {
                    if chars[i] == '\n' || chars[i] == '(' {
                        return Err(err_at(line, col, format!("unterminated argument list of '{name}'")));
                    }
                    advance(&mut i, &mut line, &mut col);
                }
                if i >= chars.len() {
                    return Err(err_at(tl, tc, format!("unterminated argument list of '{name}'")));
                }
                let inner: String = chars[arg_start..i].iter().collect();
                advance(&mut i, &mut line, &mut col);
                let mut args = Vec::new();
                for part in inner.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    args.push(part.parse::<f64>().map_err(|_| {
                        err_at(tl, tc, format!("malformed argument '{part}' of '{name}'"))
                    })?);
                }
                out.push(Token {
                    kind: TokenKind::Call(name, args),
                    line: tl,
                    column: tc,
                });
            } else {
                out.push(Token {
                    kind: TokenKind::Word(name),
                    line: tl,
                    column: tc,
                });
            }
            continue;
        }
        return Err(err_at(tl, tc, format!("unknown token '{ch}'")));
    }
    Ok(out)
}

fn index_arg(tok: &Token, name: &str, args: &[f64], dim: usize, arity: usize) -> Result<usize> {
    if args.len() != arity {
        return Err(err_at(
            tok.line,
            tok.column,
            format!("'{name}' expects {arity} argument(s), got {}", args.len()),
        ));
    }
    let j = args[0];
    if j.fract() != 0.0 || j < 1.0 || j as usize > dim {
        return Err(err_at(
            tok.line,
            tok.column,
            format!("index {j} out of range 1..={dim} in '{name}'"),
        ));
    }
    Ok(j as usize - 1)
}

struct FieldParser<'a> {
    toks: &'a [Token],
    pos: usize,
    dim: usize,
    end: Origin,
}

impl FieldParser<'_> {
    fn next(&mut self) -> Result<&Token> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| err_at(self.end.line, self.end.column, "unexpected end of expression"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self) -> Result<Node> {
        let tok = self.next()?.clone();
        match &tok.kind {
            TokenKind::Number(v) => Ok(Node::Const(*v)),
            TokenKind::Op('+') => {
                let a = self.expr()?;
                let b = self.expr()?;
                Ok(Node::Sum(vec![a, b]))
            }
            TokenKind::Op('*') => {
                let a = self.expr()?;
                let b = self.expr()?;
                Ok(Node::Product(vec![a, b]))
            }
            TokenKind::Op('^') => {
                let base = self.expr()?;
                let et = self.next()?.clone();
                match et.kind {
                    TokenKind::Number(k) if k.fract() == 0.0 && k.abs() < 64.0 => {
                        Ok(Node::Pow(Box::new(base), k as i32))
                    }
                    _ => Err(err_at(et.line, et.column, "'^' expects an integer exponent")),
                }
            }
            TokenKind::Word(w) if w == "norm" => Ok(Node::Norm),
            TokenKind::Call(name, args) => match name.as_str() {
                "const" => {
                    if args.len() != 1 {
                        return Err(err_at(tok.line, tok.column, "'const' expects 1 argument"));
                    }
                    Ok(Node::Const(args[0]))
                }
                "re" => Ok(Node::Re(index_arg(&tok, name, args, self.dim, 1)?)),
                "im" => Ok(Node::Im(index_arg(&tok, name, args, self.dim, 1)?)),
                "abs2" => Ok(Node::Abs2(index_arg(&tok, name, args, self.dim, 1)?)),
                "absp" => {
                    let j = index_arg(&tok, name, args, self.dim, 2)?;
                    let m = args[1];
                    if !(m >= 1.0) {
                        return Err(err_at(tok.line, tok.column, "'absp' exponent must be >= 1"));
                    }
                    Ok(Node::AbsPow(j, m))
                }
                other => Err(err_at(tok.line, tok.column, format!("unknown token '{other}'"))),
            },
            TokenKind::Word(w) => Err(err_at(tok.line, tok.column, format!("unknown token '{w}'"))),
            TokenKind::Op(o) => Err(err_at(tok.line, tok.column, format!("unknown token '{o}'"))),
        }
    }
}

fn end_position(src: &str, origin: Origin) -> Origin {
    let mut o = origin;
    for ch in src.chars() {
        if ch == '\n' {
            o.line += 1;
            o.column = 1;
        } else {
            o.column += 1;
        }
    }
    o
}

/// Parses a defining function of the given dimension.
pub fn parse_field(src: &str, dim: usize) -> Result<ScalarFieldExpr> {
    parse_field_at(src, dim, Origin::default())
}

pub fn parse_field_at(src: &str, dim: usize, origin: Origin) -> Result<ScalarFieldExpr> {
    let toks = tokenize(src, origin, &['+', '*', '^'])?;
    let mut p = FieldParser {
        toks: &toks,
        pos: 0,
        dim,
        end: end_position(src, origin),
    };
    let root = p.expr()?;
    if let Some(extra) = toks.get(p.pos) {
        return Err(err_at(extra.line, extra.column, "trailing tokens after expression"));
    }
    ScalarFieldExpr::new(root, dim)
}
