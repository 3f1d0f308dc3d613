//! Symbolic partial derivatives.
//!
//! The result only uses the tree's own symbol set plus numeric parameters, so
//! derivative trees go through the same point and interval evaluators as the
//! models themselves. Reciprocals are written as `exp(-log(u))`, cosine as
//! `sin(u + pi/2)`. Constant subexpressions are folded.

use std::f64::consts::FRAC_PI_2;

use super::eval::{apply_binary, apply_unary};
use super::{ExpressionTree, Node, Symbol};

/// Returns a tree for `d tree / d x[variable]`.
pub fn differentiate(tree: &ExpressionTree, variable: usize) -> ExpressionTree {
    let (d, _) = derive(tree.nodes(), 0, variable);
    d
}

fn as_const(t: &ExpressionTree) -> Option<f64> {
    match t.nodes() {
        [Node::Parameter(v)] => Some(*v),
        _ => None,
    }
}

fn c(v: f64) -> ExpressionTree {
    ExpressionTree::constant(v)
}

fn fold_unary(s: Symbol, a: ExpressionTree) -> ExpressionTree {
    if let Some(x) = as_const(&a) {
        let v = apply_unary(s, x);
        if v.is_finite() {
            return c(v);
        }
    }
    ExpressionTree::unary(s, a)
}

fn fold_binary(s: Symbol, a: ExpressionTree, b: ExpressionTree) -> ExpressionTree {
    if let (Some(x), Some(y)) = (as_const(&a), as_const(&b)) {
        let v = apply_binary(s, x, y);
        if v.is_finite() {
            return c(v);
        }
    }
    ExpressionTree::binary(s, a, b)
}

fn add(a: ExpressionTree, b: ExpressionTree) -> ExpressionTree {
    match (as_const(&a), as_const(&b)) {
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => fold_binary(Symbol::Add, a, b),
    }
}

fn sub(a: ExpressionTree, b: ExpressionTree) -> ExpressionTree {
    match as_const(&b) {
        Some(y) if y == 0.0 => a,
        _ => fold_binary(Symbol::Sub, a, b),
    }
}

fn mul(a: ExpressionTree, b: ExpressionTree) -> ExpressionTree {
    match (as_const(&a), as_const(&b)) {
        (Some(x), _) if x == 0.0 => c(0.0),
        (_, Some(y)) if y == 0.0 => c(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        // keep constants on the left so `c * (k * u)` folds
        (None, Some(_)) => mul(b, a),
        (Some(x), None) => match b.nodes() {
            [Node::Variable { index, weight }] => ExpressionTree::variable(*index, x * weight),
            [Node::Function(Symbol::Mul), Node::Parameter(k), ..] => {
                let rest = ExpressionTree::from_nodes_unchecked(b.nodes()[2..].to_vec());
                mul(c(x * k), rest)
            }
            _ => ExpressionTree::binary(Symbol::Mul, a, b),
        },
        _ => fold_binary(Symbol::Mul, a, b),
    }
}

fn neg(a: ExpressionTree) -> ExpressionTree {
    mul(c(-1.0), a)
}

fn aq(a: ExpressionTree, b: ExpressionTree) -> ExpressionTree {
    match as_const(&a) {
        Some(x) if x == 0.0 => c(0.0),
        _ => fold_binary(Symbol::Aq, a, b),
    }
}

fn exp(a: ExpressionTree) -> ExpressionTree {
    fold_unary(Symbol::Exp, a)
}

fn log(a: ExpressionTree) -> ExpressionTree {
    fold_unary(Symbol::Log, a)
}

fn sin(a: ExpressionTree) -> ExpressionTree {
    fold_unary(Symbol::Sin, a)
}

fn reciprocal(a: ExpressionTree) -> ExpressionTree {
    exp(neg(log(a)))
}

/// Derivative of the subtree at `start`; returns it with the subtree end.
fn derive(nodes: &[Node], start: usize, var: usize) -> (ExpressionTree, usize) {
    match nodes[start] {
        Node::Parameter(_) => (c(0.0), start + 1),
        Node::Variable { index, weight } => {
            (c(if index == var { weight } else { 0.0 }), start + 1)
        }
        Node::Function(s) => {
            let a_start = start + 1;
            let (da, a_end) = derive(nodes, a_start, var);
            let a = ExpressionTree::from_nodes_unchecked(nodes[a_start..a_end].to_vec());
            if s.arity() == 1 {
                let d = if as_const(&da) == Some(0.0) {
                    c(0.0)
                } else {
                    match s {
                        // u' / (2 sqrt(u)) = 0.5 u' exp(-0.5 log u)
                        Symbol::Sqrt => mul(
                            mul(c(0.5), da),
                            exp(mul(c(-0.5), log(a))),
                        ),
                        Symbol::Square => mul(mul(c(2.0), a), da),
                        Symbol::Log => mul(da, reciprocal(a)),
                        Symbol::Exp => mul(da, exp(a)),
                        Symbol::Sin => mul(da, sin(add(a, c(FRAC_PI_2)))),
                        Symbol::Tanh => mul(
                            da,
                            sub(c(1.0), fold_unary(Symbol::Square, fold_unary(Symbol::Tanh, a))),
                        ),
                        _ => unreachable!(),
                    }
                };
                return (d, a_end);
            }
            let (db, b_end) = derive(nodes, a_end, var);
            let b = ExpressionTree::from_nodes_unchecked(nodes[a_end..b_end].to_vec());
            let d = match s {
                Symbol::Add => add(da, db),
                Symbol::Sub => sub(da, db),
                Symbol::Mul => add(mul(da, b), mul(a, db)),
                Symbol::Aq => {
                    // d[a (1+b^2)^(-1/2)] = aq(a', b) - a b b' (1+b^2)^(-3/2)
                    let first = aq(da, b.clone());
                    if as_const(&db) == Some(0.0) {
                        first
                    } else {
                        let num = mul(mul(a, b.clone()), db);
                        let second = aq(aq(aq(num, b.clone()), b.clone()), b);
                        sub(first, second)
                    }
                }
                _ => unreachable!(),
            };
            (d, b_end)
        }
    }
}
