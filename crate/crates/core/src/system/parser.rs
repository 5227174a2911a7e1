//! Recursive-descent parser for expressions and system documents.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right associative and its exponent must not mention a state variable.

use std::collections::BTreeMap;

use super::expr::{named_constant, BinaryOp, Expr, UnaryOp};
use super::SystemError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<Vec<Token>, SystemError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let col = col0 + i;
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
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
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| SystemError::Syntax {
                line,
                col,
                message: format!("invalid number '{text}'"),
            })?;
            out.push(Token { tok: Tok::Num(v), col });
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if "+-*/^()".contains(ch) {
            out.push(Token { tok: Tok::Op(ch), col });
            i += 1;
        } else {
            return Err(SystemError::Syntax {
                line,
                col,
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    Ok(out)
}

/// Names visible while parsing an expression.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub dim: usize,
    pub params: &'a BTreeMap<String, f64>,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_col: usize,
    scope: Scope<'a>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err(&self, message: impl Into<String>) -> SystemError {
        SystemError::Syntax {
            line: self.line,
            col: self.col(),
            message: message.into(),
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), SystemError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr, SystemError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinaryOp::Add
            } else if self.eat('-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, SystemError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinaryOp::Mul
            } else if self.eat('/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::binary(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, SystemError> {
        if self.eat('-') {
            // A negative literal is a constant unless it is the base of a power.
            if let Some(&Tok::Num(v)) = self.peek() {
                if self.peek_at(1) != Some(&Tok::Op('^')) {
                    self.pos += 1;
                    return Ok(Expr::Const(-v));
                }
            }
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SystemError> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Op('^')) {
            let col = self.col();
            self.pos += 1;
            let exponent = self.unary()?;
            if !exponent.is_constant() {
                return Err(SystemError::Syntax {
                    line: self.line,
                    col,
                    message: "exponent must be a constant expression".into(),
                });
            }
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, SystemError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(op) = UnaryOp::from_function_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::unary(op, arg));
                }
                self.identifier(&name, col)
            }
            Some(Tok::Op(c)) => Err(self.err(format!("unexpected '{c}'"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }

    fn identifier(&self, name: &str, col: usize) -> Result<Expr, SystemError> {
        if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
            if (1..=self.scope.dim).contains(&idx) && !name[1..].starts_with('0') {
                return Ok(Expr::Var(idx - 1));
            }
        }
        if let Some(&value) = self.scope.params.get(name) {
            return Ok(Expr::Param {
                name: name.to_string(),
                value,
            });
        }
        if let Some(v) = named_constant(name) {
            return Ok(Expr::Const(v));
        }
        Err(SystemError::UnknownIdentifier {
            name: name.to_string(),
            line: self.line,
            col,
        })
    }
}

/// Parses one expression. `line` and `col0` locate `src` inside a larger
/// document for error messages (both 1-based).
pub fn parse_expr_at(
    src: &str,
    scope: Scope<'_>,
    line: usize,
    col0: usize,
) -> Result<Expr, SystemError> {
    let toks = tokenize(src, line, col0)?;
    let end_col = col0 + src.chars().count();
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        end_col,
        scope,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses a standalone expression over variables `x1..x{dim}`.
pub fn parse_expr(
    src: &str,
    dim: usize,
    params: &BTreeMap<String, f64>,
) -> Result<Expr, SystemError> {
    parse_expr_at(src, Scope { dim, params }, 1, 1)
}

/// Raw contents of a system document before expressions are parsed.
#[derive(Debug, Clone)]
pub(crate) struct Document {
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
    pub components: Vec<Expr>,
}

fn is_reserved(name: &str) -> bool {
    UnaryOp::from_function_name(name).is_some()
        || named_constant(name).is_some()
        || name == "dim"
        || name == "param"
        || (name.len() > 1
            && name.starts_with('x')
            && name[1..].chars().all(|c| c.is_ascii_digit()))
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a system document. `overrides` replace declared parameter values.
pub(crate) fn parse_document(
    text: &str,
    overrides: &[(&str, f64)],
) -> Result<Document, SystemError> {
    let mut dim: Option<usize> = None;
    let mut params = BTreeMap::new();
    let mut pending: BTreeMap<usize, (usize, usize, String)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(SystemError::Syntax {
                line,
                col: 1,
                message: "expected '<name> = <value>'".into(),
            });
        };
        let lhs = content[..eq].trim();
        let rhs = &content[eq + 1..];
        let rhs_col = content[..eq + 1].chars().count() + 1;

        if lhs == "dim" {
            if dim.is_some() {
                return Err(SystemError::Syntax {
                    line,
                    col: 1,
                    message: "duplicate 'dim' declaration".into(),
                });
            }
            let n: usize = rhs.trim().parse().map_err(|_| SystemError::Syntax {
                line,
                col: rhs_col,
                message: format!("invalid dimension '{}'", rhs.trim()),
            })?;
            if n == 0 {
                return Err(SystemError::Syntax {
                    line,
                    col: rhs_col,
                    message: "dimension must be at least 1".into(),
                });
            }
            dim = Some(n);
        } else if let Some(name) = lhs.strip_prefix("param") {
            let name = name.trim();
            if !lhs[5..].starts_with(char::is_whitespace) || !is_identifier(name) {
                return Err(SystemError::Syntax {
                    line,
                    col: 1,
                    message: format!("invalid parameter declaration '{lhs}'"),
                });
            }
            if is_reserved(name) || params.contains_key(name) {
                return Err(SystemError::Syntax {
                    line,
                    col: 1,
                    message: format!("parameter name '{name}' is reserved or already declared"),
                });
            }
            let scope = Scope {
                dim: 0,
                params: &params,
            };
            let value = parse_expr_at(rhs, scope, line, rhs_col)?
                .eval(&[])
                .map_err(|e| SystemError::Syntax {
                    line,
                    col: rhs_col,
                    message: format!("parameter value: {e}"),
                })?;
            params.insert(name.to_string(), value);
        } else if let Some(k) = lhs
            .strip_prefix('f')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&k| k >= 1 && !lhs[1..].starts_with('0'))
        {
            if dim.is_none() {
                return Err(SystemError::Syntax {
                    line,
                    col: 1,
                    message: "'dim' must be declared before components".into(),
                });
            }
            if pending.insert(k, (line, rhs_col, rhs.to_string())).is_some() {
                return Err(SystemError::Syntax {
                    line,
                    col: 1,
                    message: format!("duplicate component f{k}"),
                });
            }
        } else {
            return Err(SystemError::Syntax {
                line,
                col: 1,
                message: format!("unrecognized declaration '{lhs}'"),
            });
        }
    }

    let dim = dim.ok_or(SystemError::MissingDimension)?;
    for &(name, value) in overrides {
        match params.get_mut(name) {
            Some(slot) => *slot = value,
            None => {
                return Err(SystemError::UnknownIdentifier {
                    name: name.to_string(),
                    line: 0,
                    col: 0,
                })
            }
        }
    }
    if pending.len() != dim || pending.keys().copied().ne(1..=dim) {
        return Err(SystemError::DimensionMismatch {
            declared: dim,
            found: pending.len(),
        });
    }
    let scope = Scope {
        dim,
        params: &params,
    };
    let components = pending
        .values()
        .map(|(line, col, src)| parse_expr_at(src, scope, *line, *col))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Document {
        dim,
        params,
        components,
    })
}
