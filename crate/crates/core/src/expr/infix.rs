//! Infix text format.
//!
//! Trees print as fully parenthesized infix, e.g.
//! `(2.031 * x0) + exp((-0.5) * sq(x1))`. A numeric literal multiplied by a
//! variable (`c * xk`) reads back as a weighted variable leaf. The same
//! grammar, extended with `/`, `^` and a few extra functions, is used for
//! ground-truth formulas, so the parser produces a generic [`Ast`] first.

use std::fmt::Write;

use thiserror::Error;

use super::{ExpressionTree, Node, Symbol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected character `{0}` at offset {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("`{0}` cannot be represented as an expression tree")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed infix expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Number(f64),
    Ident(String),
    Neg(Box<Ast>),
    Binary(BinaryOp, Box<Ast>, Box<Ast>),
    Call(String, Vec<Ast>),
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        match ch {
            c if c.is_ascii_whitespace() => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(ch));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v = text
                    .parse::<f64>()
                    .map_err(|_| ParseError::InvalidNumber(text.to_string()))?;
                out.push(Token::Number(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token::Ident(src[start..i].to_string()));
            }
            _ => {
                let c = src[i..].chars().next().unwrap();
                return Err(ParseError::UnexpectedChar(c, i));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ParseError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        let t = self.next()?;
        if t == want {
            Ok(())
        } else {
            Err(ParseError::UnexpectedToken(format!("{t:?}")))
        }
    }

    // sum := product (('+' | '-') product)*
    fn sum(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Ast::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // product := unary (('*' | '/') unary)*
    fn product(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Ast::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // unary := ('-' | '+') unary | power
    fn unary(&mut self) -> Result<Ast, ParseError> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Ast::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // power := atom ('^' unary)?   (right associative)
    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Ast::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        match self.next()? {
            Token::Number(v) => Ok(Ast::Number(v)),
            Token::LParen => {
                let e = self.sum()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => {
                if let Some(Token::LParen) = self.peek() {
                    self.pos += 1;
                    let mut args = vec![self.sum()?];
                    while let Some(Token::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.sum()?);
                    }
                    self.expect(Token::RParen)?;
                    Ok(Ast::Call(name, args))
                } else {
                    match name.as_str() {
                        "inf" => Ok(Ast::Number(f64::INFINITY)),
                        "NaN" | "nan" => Ok(Ast::Number(f64::NAN)),
                        _ => Ok(Ast::Ident(name)),
                    }
                }
            }
            t => Err(ParseError::UnexpectedToken(format!("{t:?}"))),
        }
    }
}

/// Parses infix text into an [`Ast`].
pub fn parse_ast(src: &str) -> Result<Ast, ParseError> {
    let mut p = Parser {
        tokens: tokenize(src)?,
        pos: 0,
    };
    let e = p.sum()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::UnexpectedToken(format!("{t:?}")));
    }
    Ok(e)
}

/// Resolves `x<k>` (zero-based) or a name from `names` to a variable index.
pub fn resolve_variable(name: &str, names: &[String]) -> Option<usize> {
    if let Some(i) = names.iter().position(|n| n == name) {
        return Some(i);
    }
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    if names.is_empty() || k < names.len() {
        Some(k)
    } else {
        None
    }
}

impl ExpressionTree {
    /// Parses the tree infix format. Variables are `x0, x1, ...` or entries
    /// of `names`; with an empty `names` any `x<k>` is accepted.
    pub fn parse(src: &str, names: &[String]) -> Result<ExpressionTree, ParseError> {
        let ast = parse_ast(src)?;
        let mut nodes = Vec::new();
        lower(&ast, names, &mut nodes)?;
        Ok(ExpressionTree::from_nodes_unchecked(nodes))
    }
}

fn literal(ast: &Ast) -> Option<f64> {
    match ast {
        Ast::Number(v) => Some(*v),
        Ast::Neg(inner) => literal(inner).map(|v| -v),
        _ => None,
    }
}

fn lower(ast: &Ast, names: &[String], out: &mut Vec<Node>) -> Result<(), ParseError> {
    match ast {
        Ast::Number(v) => out.push(Node::Parameter(*v)),
        Ast::Ident(name) => {
            if name == "pi" {
                out.push(Node::Parameter(std::f64::consts::PI));
            } else {
                let index = resolve_variable(name, names)
                    .ok_or_else(|| ParseError::UnknownVariable(name.clone()))?;
                out.push(Node::Variable { index, weight: 1.0 });
            }
        }
        Ast::Neg(inner) => match literal(inner) {
            Some(v) => out.push(Node::Parameter(-v)),
            None => {
                out.push(Node::Function(Symbol::Mul));
                out.push(Node::Parameter(-1.0));
                lower(inner, names, out)?;
            }
        },
        Ast::Binary(op, a, b) => {
            let symbol = match op {
                BinaryOp::Add => Symbol::Add,
                BinaryOp::Sub => Symbol::Sub,
                BinaryOp::Mul => {
                    if let (Some(w), Ast::Ident(name)) = (literal(a), b.as_ref()) {
                        if let Some(index) = resolve_variable(name, names) {
                            out.push(Node::Variable { index, weight: w });
                            return Ok(());
                        }
                    }
                    Symbol::Mul
                }
                BinaryOp::Div => return Err(ParseError::Unsupported("/".into())),
                BinaryOp::Pow => return Err(ParseError::Unsupported("^".into())),
            };
            out.push(Node::Function(symbol));
            lower(a, names, out)?;
            lower(b, names, out)?;
        }
        Ast::Call(name, args) => {
            let symbol = match name.as_str() {
                "aq" => Symbol::Aq,
                "sqrt" => Symbol::Sqrt,
                "sq" | "square" => Symbol::Square,
                "log" => Symbol::Log,
                "exp" => Symbol::Exp,
                "sin" => Symbol::Sin,
                "tanh" => Symbol::Tanh,
                _ => return Err(ParseError::UnknownFunction(name.clone())),
            };
            if args.len() != symbol.arity() {
                return Err(ParseError::Arity {
                    name: name.clone(),
                    expected: symbol.arity(),
                    got: args.len(),
                });
            }
            out.push(Node::Function(symbol));
            for a in args {
                lower(a, names, out)?;
            }
        }
    }
    Ok(())
}

fn write_number(out: &mut String, v: f64) {
    let body = if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        "inf".to_string()
    } else {
        let a = v.abs();
        if a != 0.0 && !(1e-5..1e16).contains(&a) {
            format!("{a:e}")
        } else {
            format!("{a}")
        }
    };
    if v.is_sign_negative() && !v.is_nan() && v != 0.0 {
        let _ = write!(out, "(-{body})");
    } else {
        out.push_str(&body);
    }
}

fn write_node(tree: &ExpressionTree, at: usize, top: bool, out: &mut String) -> usize {
    match tree.nodes()[at] {
        Node::Parameter(v) => {
            write_number(out, v);
            at + 1
        }
        Node::Variable { index, weight } => {
            if weight == 1.0 {
                let _ = write!(out, "x{index}");
            } else {
                if !top {
                    out.push('(');
                }
                write_number(out, weight);
                let _ = write!(out, " * x{index}");
                if !top {
                    out.push(')');
                }
            }
            at + 1
        }
        Node::Function(s) if s.arity() == 2 && s != Symbol::Aq => {
            if !top {
                out.push('(');
            }
            let next = write_node(tree, at + 1, false, out);
            let _ = write!(out, " {} ", s.name());
            let end = write_node(tree, next, false, out);
            if !top {
                out.push(')');
            }
            end
        }
        Node::Function(s) => {
            out.push_str(s.name());
            out.push('(');
            let mut next = write_node(tree, at + 1, true, out);
            if s.arity() == 2 {
                out.push_str(", ");
                next = write_node(tree, next, true, out);
            }
            out.push(')');
            next
        }
    }
}

pub(crate) fn to_infix(tree: &ExpressionTree) -> String {
    let mut out = String::new();
    write_node(tree, 0, true, &mut out);
    out
}
