//! Point and batch evaluation, plus reverse-mode gradients with respect to the
//! numeric parameters (used by local optimization).

use super::{ExpressionTree, Node, Symbol};

#[inline]
pub(crate) fn apply_unary(symbol: Symbol, x: f64) -> f64 {
    match symbol {
        Symbol::Sqrt => x.sqrt(),
        Symbol::Square => x * x,
        Symbol::Log => x.ln(),
        Symbol::Exp => x.exp(),
        Symbol::Sin => x.sin(),
        Symbol::Tanh => x.tanh(),
        _ => unreachable!("{symbol:?} is binary"),
    }
}

#[inline]
pub(crate) fn apply_binary(symbol: Symbol, a: f64, b: f64) -> f64 {
    match symbol {
        Symbol::Add => a + b,
        Symbol::Sub => a - b,
        Symbol::Mul => a * b,
        Symbol::Aq => a / (1.0 + b * b).sqrt(),
        _ => unreachable!("{symbol:?} is unary"),
    }
}

impl ExpressionTree {
    /// Evaluates the tree at a single point. Domain violations yield
    /// non-finite values; evaluation never panics for valid indices.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(self.len());
        for node in self.nodes().iter().rev() {
            let v = match *node {
                Node::Parameter(v) => v,
                Node::Variable { index, weight } => weight * point[index],
                Node::Function(s) if s.arity() == 1 => {
                    let a = stack.pop().unwrap();
                    apply_unary(s, a)
                }
                Node::Function(s) => {
                    let a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    apply_binary(s, a, b)
                }
            };
            stack.push(v);
        }
        stack.pop().unwrap()
    }

    /// Evaluates the tree on column-major data (`columns[j][row]`).
    pub fn evaluate_batch(&self, columns: &[Vec<f64>], rows: usize) -> Vec<f64> {
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(8);
        let mut pool: Vec<Vec<f64>> = Vec::new();
        let fresh = |pool: &mut Vec<Vec<f64>>| pool.pop().unwrap_or_else(|| vec![0.0; rows]);
        for node in self.nodes().iter().rev() {
            match *node {
                Node::Parameter(v) => {
                    let mut buf = fresh(&mut pool);
                    buf.fill(v);
                    stack.push(buf);
                }
                Node::Variable { index, weight } => {
                    let mut buf = fresh(&mut pool);
                    for (o, x) in buf.iter_mut().zip(&columns[index]) {
                        *o = weight * x;
                    }
                    stack.push(buf);
                }
                Node::Function(s) if s.arity() == 1 => {
                    let buf = stack.last_mut().unwrap();
                    for v in buf.iter_mut() {
                        *v = apply_unary(s, *v);
                    }
                }
                Node::Function(s) => {
                    let mut a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    match s {
                        Symbol::Add => a.iter_mut().zip(&b).for_each(|(x, y)| *x += y),
                        Symbol::Sub => a.iter_mut().zip(&b).for_each(|(x, y)| *x -= y),
                        Symbol::Mul => a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y),
                        _ => a
                            .iter_mut()
                            .zip(&b)
                            .for_each(|(x, y)| *x = apply_binary(s, *x, *y)),
                    }
                    pool.push(b);
                    stack.push(a);
                }
            }
        }
        stack.pop().unwrap()
    }

    /// Values and the Jacobian of the output with respect to
    /// [`parameters`](Self::parameters) on column-major data.
    pub fn parameter_jacobian(&self, columns: &[Vec<f64>], rows: usize) -> ParameterJacobian {
        let nodes = self.nodes();
        let n = nodes.len();
        let children: Vec<Vec<usize>> = (0..n).map(|i| self.children(i)).collect();

        // node values, computed children-first
        let mut values = vec![Vec::new(); n];
        for i in (0..n).rev() {
            values[i] = match nodes[i] {
                Node::Parameter(v) => vec![v; rows],
                Node::Variable { index, weight } => {
                    columns[index][..rows].iter().map(|x| weight * x).collect()
                }
                Node::Function(s) if s.arity() == 1 => values[children[i][0]]
                    .iter()
                    .map(|&a| apply_unary(s, a))
                    .collect(),
                Node::Function(s) => values[children[i][0]]
                    .iter()
                    .zip(&values[children[i][1]])
                    .map(|(&a, &b)| apply_binary(s, a, b))
                    .collect(),
            };
        }

        // adjoints, parents before children
        let mut adjoint = vec![Vec::new(); n];
        adjoint[0] = vec![1.0; rows];
        for i in 0..n {
            let Node::Function(s) = nodes[i] else { continue };
            let up = std::mem::take(&mut adjoint[i]);
            match s.arity() {
                1 => {
                    let c = children[i][0];
                    let a = &values[c];
                    let out = &values[i];
                    adjoint[c] = (0..rows)
                        .map(|r| {
                            let local = match s {
                                Symbol::Sqrt => 0.5 / out[r],
                                Symbol::Square => 2.0 * a[r],
                                Symbol::Log => 1.0 / a[r],
                                Symbol::Exp => out[r],
                                Symbol::Sin => a[r].cos(),
                                Symbol::Tanh => 1.0 - out[r] * out[r],
                                _ => unreachable!(),
                            };
                            up[r] * local
                        })
                        .collect();
                }
                _ => {
                    let (ca, cb) = (children[i][0], children[i][1]);
                    let (a, b) = (&values[ca], &values[cb]);
                    let mut da = Vec::with_capacity(rows);
                    let mut db = Vec::with_capacity(rows);
                    for r in 0..rows {
                        let (la, lb) = match s {
                            Symbol::Add => (1.0, 1.0),
                            Symbol::Sub => (1.0, -1.0),
                            Symbol::Mul => (b[r], a[r]),
                            Symbol::Aq => {
                                let q = 1.0 + b[r] * b[r];
                                let inv = 1.0 / q.sqrt();
                                (inv, -a[r] * b[r] * inv / q)
                            }
                            _ => unreachable!(),
                        };
                        da.push(up[r] * la);
                        db.push(up[r] * lb);
                    }
                    adjoint[ca] = da;
                    adjoint[cb] = db;
                }
            }
        }

        let mut columns_out = Vec::new();
        for i in 0..n {
            match nodes[i] {
                Node::Parameter(_) => columns_out.push(std::mem::take(&mut adjoint[i])),
                Node::Variable { index, .. } => columns_out.push(
                    adjoint[i]
                        .iter()
                        .zip(&columns[index])
                        .map(|(g, x)| g * x)
                        .collect(),
                ),
                Node::Function(_) => {}
            }
        }
        ParameterJacobian {
            values: std::mem::take(&mut values[0]),
            columns: columns_out,
        }
    }
}

/// Output values and `d output / d parameter_k` per row.
#[derive(Debug, Clone)]
pub struct ParameterJacobian {
    pub values: Vec<f64>,
    /// One column per parameter, each of length `rows`.
    pub columns: Vec<Vec<f64>>,
}
