//! Closed-form ground-truth formulas.
//!
//! Ground truths need operators outside the search function set (division,
//! powers, `asin`, `cos`), so they get their own small expression type. It is
//! evaluated generically over [`Scalar`], which lets the same formula produce
//! values and, through [`Dual`] numbers, exact first and second partial
//! derivatives for the feasibility audit.

use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::expr::infix::{parse_ast, resolve_variable, Ast, BinaryOp};
use crate::expr::{ExpressionTree, ParseError, Symbol};
use crate::interval::{evaluate_interval, IntervalBox};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn asin(self) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn asin(self) -> Self {
        f64::asin(self)
    }
    fn powf(self, p: f64) -> Self {
        if p == p.trunc() && p.abs() <= i32::MAX as f64 {
            self.powi(p as i32)
        } else {
            f64::powf(self, p)
        }
    }
}

/// Forward-mode dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn constant(re: T) -> Self {
        Self {
            re,
            eps: T::from_f64(0.0),
        }
    }

    pub fn seed(re: T) -> Self {
        Self {
            re,
            eps: T::from_f64(1.0),
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            re: self.re + o.re,
            eps: self.eps + o.eps,
        }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            re: self.re - o.re,
            eps: self.eps - o.eps,
        }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re * o.re,
            eps: self.eps * o.re + self.re * o.eps,
        }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Self {
            re: q,
            eps: (self.eps - q * o.eps) / o.re,
        }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            eps: -self.eps,
        }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Self::constant(T::from_f64(v))
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self {
            re: s,
            eps: self.eps / (T::from_f64(2.0) * s),
        }
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Self {
            re: e,
            eps: self.eps * e,
        }
    }
    fn ln(self) -> Self {
        Self {
            re: self.re.ln(),
            eps: self.eps / self.re,
        }
    }
    fn sin(self) -> Self {
        Self {
            re: self.re.sin(),
            eps: self.eps * self.re.cos(),
        }
    }
    fn cos(self) -> Self {
        Self {
            re: self.re.cos(),
            eps: -(self.eps * self.re.sin()),
        }
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Self {
            re: t,
            eps: self.eps * (T::from_f64(1.0) - t * t),
        }
    }
    fn asin(self) -> Self {
        Self {
            re: self.re.asin(),
            eps: self.eps / (T::from_f64(1.0) - self.re * self.re).sqrt(),
        }
    }
    fn powf(self, p: f64) -> Self {
        Self {
            re: self.re.powf(p),
            eps: self.eps * T::from_f64(p) * self.re.powf(p - 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Sqrt,
    Square,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Asin,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Const(f64),
    Var(usize),
    Neg(std::boxed::Box<Formula>),
    Add(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Sub(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Mul(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Div(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Pow(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    /// `a / sqrt(1 + b^2)`
    Aq(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Call(Function, std::boxed::Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConversionError {
    #[error("`{0}` has no counterpart in the tree function set")]
    Unsupported(&'static str),
    #[error("divisor changes sign over the domain")]
    SignChangingDivisor,
    #[error("power base is not positive over the domain")]
    NonPositiveBase,
}

impl Formula {
    pub fn parse(src: &str, names: &[String]) -> Result<Formula, ParseError> {
        from_ast(&parse_ast(src)?, names)
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            Formula::Const(v) => T::from_f64(*v),
            Formula::Var(i) => x[*i],
            Formula::Neg(a) => -a.eval(x),
            Formula::Add(a, b) => a.eval(x) + b.eval(x),
            Formula::Sub(a, b) => a.eval(x) - b.eval(x),
            Formula::Mul(a, b) => a.eval(x) * b.eval(x),
            Formula::Div(a, b) => a.eval(x) / b.eval(x),
            Formula::Pow(a, b) => match **b {
                Formula::Const(p) => a.eval(x).powf(p),
                _ => (b.eval(x) * a.eval(x).ln()).exp(),
            },
            Formula::Aq(a, b) => {
                let bv = b.eval(x);
                a.eval(x) / (T::from_f64(1.0) + bv * bv).sqrt()
            }
            Formula::Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Function::Sqrt => v.sqrt(),
                    Function::Square => v * v,
                    Function::Exp => v.exp(),
                    Function::Log => v.ln(),
                    Function::Sin => v.sin(),
                    Function::Cos => v.cos(),
                    Function::Tanh => v.tanh(),
                    Function::Asin => v.asin(),
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    /// `d f / d x_j` at `x`.
    pub fn partial(&self, x: &[f64], j: usize) -> f64 {
        let args: Vec<Dual<f64>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == j { Dual::seed(v) } else { Dual::constant(v) })
            .collect();
        self.eval(&args).eps
    }

    /// `d² f / d x_j²` at `x`.
    pub fn second_partial(&self, x: &[f64], j: usize) -> f64 {
        let args: Vec<Dual<Dual<f64>>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i == j {
                    Dual {
                        re: Dual::seed(v),
                        eps: Dual::constant(1.0),
                    }
                } else {
                    Dual::constant(Dual::constant(v))
                }
            })
            .collect();
        self.eval(&args).eps.eps
    }

    /// Rewrites the formula with the tree function set. Quotients become
    /// `a * exp(-log(b))` and need a divisor of constant sign over `domain`;
    /// `asin` has no counterpart.
    pub fn to_tree(&self, domain: &IntervalBox) -> Result<ExpressionTree, ConversionError> {
        use ExpressionTree as T;
        let bin = |s, a: &Formula, b: &Formula| -> Result<T, ConversionError> {
            Ok(T::binary(s, a.to_tree(domain)?, b.to_tree(domain)?))
        };
        Ok(match self {
            Formula::Const(v) => T::constant(*v),
            Formula::Var(i) => T::variable(*i, 1.0),
            Formula::Neg(a) => match **a {
                Formula::Const(v) => T::constant(-v),
                _ => T::binary(Symbol::Mul, T::constant(-1.0), a.to_tree(domain)?),
            },
            Formula::Add(a, b) => bin(Symbol::Add, a, b)?,
            Formula::Sub(a, b) => bin(Symbol::Sub, a, b)?,
            Formula::Mul(a, b) => bin(Symbol::Mul, a, b)?,
            Formula::Aq(a, b) => bin(Symbol::Aq, a, b)?,
            Formula::Div(a, b) => {
                let num = a.to_tree(domain)?;
                if let Formula::Const(c) = **b {
                    return Ok(T::binary(Symbol::Mul, num, T::constant(1.0 / c)));
                }
                T::binary(Symbol::Mul, num, reciprocal(b.to_tree(domain)?, domain)?)
            }
            Formula::Pow(a, b) => {
                let Formula::Const(p) = **b else {
                    return Err(ConversionError::Unsupported("non-constant exponent"));
                };
                let base = a.to_tree(domain)?;
                power(base, p, domain)?
            }
            Formula::Call(f, a) => {
                let inner = a.to_tree(domain)?;
                match f {
                    Function::Sqrt => T::unary(Symbol::Sqrt, inner),
                    Function::Square => T::unary(Symbol::Square, inner),
                    Function::Exp => T::unary(Symbol::Exp, inner),
                    Function::Log => T::unary(Symbol::Log, inner),
                    Function::Sin => T::unary(Symbol::Sin, inner),
                    Function::Tanh => T::unary(Symbol::Tanh, inner),
                    Function::Cos => T::unary(
                        Symbol::Sin,
                        T::binary(
                            Symbol::Add,
                            inner,
                            T::constant(std::f64::consts::FRAC_PI_2),
                        ),
                    ),
                    Function::Asin => return Err(ConversionError::Unsupported("asin")),
                }
            }
        })
    }
}

fn reciprocal(t: ExpressionTree, domain: &IntervalBox) -> Result<ExpressionTree, ConversionError> {
    use ExpressionTree as T;
    let range = evaluate_interval(&t, domain);
    let inv = |u: T| T::unary(Symbol::Exp, T::binary(Symbol::Mul, T::constant(-1.0), T::unary(Symbol::Log, u)));
    if range.lo() > 0.0 {
        Ok(inv(t))
    } else if range.hi() < 0.0 {
        Ok(T::binary(
            Symbol::Mul,
            T::constant(-1.0),
            inv(T::binary(Symbol::Mul, T::constant(-1.0), t)),
        ))
    } else {
        Err(ConversionError::SignChangingDivisor)
    }
}

fn power(base: ExpressionTree, p: f64, domain: &IntervalBox) -> Result<ExpressionTree, ConversionError> {
    use ExpressionTree as T;
    if p == 0.0 {
        return Ok(T::constant(1.0));
    }
    if p < 0.0 {
        let positive = power(base, -p, domain)?;
        return reciprocal(positive, domain);
    }
    if p == 0.5 {
        return Ok(T::unary(Symbol::Sqrt, base));
    }
    if p == p.trunc() && p <= 16.0 {
        let n = p as u32;
        if n == 1 {
            return Ok(base);
        }
        let half = power(base.clone(), (n / 2) as f64, domain)?;
        let sq = T::unary(Symbol::Square, half);
        return Ok(if n % 2 == 1 {
            T::binary(Symbol::Mul, base, sq)
        } else {
            sq
        });
    }
    if evaluate_interval(&base, domain).lo() <= 0.0 {
        return Err(ConversionError::NonPositiveBase);
    }
    Ok(T::unary(
        Symbol::Exp,
        T::binary(Symbol::Mul, T::constant(p), T::unary(Symbol::Log, base)),
    ))
}

fn from_ast(ast: &Ast, names: &[String]) -> Result<Formula, ParseError> {
    use std::boxed::Box as B;
    Ok(match ast {
        Ast::Number(v) => Formula::Const(*v),
        Ast::Ident(name) => match name.as_str() {
            "pi" => Formula::Const(std::f64::consts::PI),
            _ => {
                let index = if names.is_empty() {
                    resolve_variable(name, names)
                } else {
                    names.iter().position(|n| n == name)
                };
                Formula::Var(index.ok_or_else(|| ParseError::UnknownVariable(name.clone()))?)
            }
        },
        Ast::Neg(a) => Formula::Neg(B::new(from_ast(a, names)?)),
        Ast::Binary(op, a, b) => {
            let (a, b) = (B::new(from_ast(a, names)?), B::new(from_ast(b, names)?));
            match op {
                BinaryOp::Add => Formula::Add(a, b),
                BinaryOp::Sub => Formula::Sub(a, b),
                BinaryOp::Mul => Formula::Mul(a, b),
                BinaryOp::Div => Formula::Div(a, b),
                BinaryOp::Pow => {
                    // fold `-k` exponents so powers stay on the constant path
                    let b = match *b {
                        Formula::Neg(inner) => match *inner {
                            Formula::Const(k) => B::new(Formula::Const(-k)),
                            other => B::new(Formula::Neg(B::new(other))),
                        },
                        other => B::new(other),
                    };
                    Formula::Pow(a, b)
                }
            }
        }
        Ast::Call(name, args) => {
            let arity = if name == "aq" { 2 } else { 1 };
            if args.len() != arity {
                return Err(ParseError::Arity {
                    name: name.clone(),
                    expected: arity,
                    got: args.len(),
                });
            }
            let a = B::new(from_ast(&args[0], names)?);
            if name == "aq" {
                return Ok(Formula::Aq(a, B::new(from_ast(&args[1], names)?)));
            }
            let f = match name.as_str() {
                "sqrt" => Function::Sqrt,
                "sq" | "square" => Function::Square,
                "exp" => Function::Exp,
                "log" | "ln" => Function::Log,
                "sin" => Function::Sin,
                "cos" => Function::Cos,
                "tanh" => Function::Tanh,
                "asin" | "arcsin" => Function::Asin,
                _ => return Err(ParseError::UnknownFunction(name.clone())),
            };
            Formula::Call(f, a)
        }
    })
}
