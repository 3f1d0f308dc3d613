//! Expression trees: representation, evaluation, differentiation and the
//! structural editing primitives used by the evolutionary operators.
//!
//! Trees are stored as a flat prefix-order node vector. A subtree is always a
//! contiguous slice, which keeps crossover and subtree replacement cheap.

mod create;
mod diff;
mod eval;
pub mod infix;
mod ops;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use create::{ptc2_random_tree, random_leaf};
pub use diff::differentiate;
pub use eval::ParameterJacobian;
pub use infix::ParseError;
pub use ops::{
    change_symbol, mutate, perturb_all_parameters, perturb_one_parameter, replace_random_branch,
    subtree_crossover, MutationKind,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("model space needs at least one variable")]
    NoVariables,
    #[error("max length must be at least 3, got {0}")]
    MaxLengthTooSmall(usize),
    #[error("max depth must be at least 2, got {0}")]
    MaxDepthTooSmall(usize),
    #[error("target length {target} outside [1, {max}]")]
    TargetLength { target: usize, max: usize },
    #[error("unknown function set `{0}` (expected F1..F4)")]
    UnknownFunctionSet(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("node sequence is not a single well-formed tree")]
    Malformed,
    #[error("empty tree")]
    Empty,
}

/// Function symbols available to the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Add,
    Sub,
    Mul,
    /// Analytic quotient `a / sqrt(1 + b^2)`.
    Aq,
    Sqrt,
    Square,
    Log,
    Exp,
    Sin,
    Tanh,
}

impl Symbol {
    pub const ALL: [Symbol; 10] = [
        Symbol::Add,
        Symbol::Sub,
        Symbol::Mul,
        Symbol::Aq,
        Symbol::Sqrt,
        Symbol::Square,
        Symbol::Log,
        Symbol::Exp,
        Symbol::Sin,
        Symbol::Tanh,
    ];

    pub fn arity(self) -> usize {
        match self {
            Symbol::Add | Symbol::Sub | Symbol::Mul | Symbol::Aq => 2,
            _ => 1,
        }
    }

    /// Name used by the infix format.
    pub fn name(self) -> &'static str {
        match self {
            Symbol::Add => "+",
            Symbol::Sub => "-",
            Symbol::Mul => "*",
            Symbol::Aq => "aq",
            Symbol::Sqrt => "sqrt",
            Symbol::Square => "sq",
            Symbol::Log => "log",
            Symbol::Exp => "exp",
            Symbol::Sin => "sin",
            Symbol::Tanh => "tanh",
        }
    }
}

/// The graded function sets F1 ⊂ F2 ⊂ F3 ⊂ F4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionSet {
    F1,
    F2,
    F3,
    F4,
}

impl FunctionSet {
    pub const ALL: [FunctionSet; 4] = [
        FunctionSet::F1,
        FunctionSet::F2,
        FunctionSet::F3,
        FunctionSet::F4,
    ];

    pub fn symbols(self) -> &'static [Symbol] {
        let n = match self {
            FunctionSet::F1 => 3,
            FunctionSet::F2 => 4,
            FunctionSet::F3 => 8,
            FunctionSet::F4 => 10,
        };
        &Symbol::ALL[..n]
    }

    pub fn contains(self, symbol: Symbol) -> bool {
        self.symbols().contains(&symbol)
    }
}

impl fmt::Display for FunctionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for FunctionSet {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "F1" => Ok(FunctionSet::F1),
            "F2" => Ok(FunctionSet::F2),
            "F3" => Ok(FunctionSet::F3),
            "F4" => Ok(FunctionSet::F4),
            _ => Err(ConfigError::UnknownFunctionSet(s.to_string())),
        }
    }
}

/// Limits of the searched model space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpaceConfig {
    pub function_set: FunctionSet,
    pub max_length: usize,
    pub max_depth: usize,
    pub n_variables: usize,
}

impl ModelSpaceConfig {
    pub fn new(function_set: FunctionSet, max_length: usize, n_variables: usize) -> Self {
        Self {
            function_set,
            max_length,
            max_depth: 20,
            n_variables,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_variables == 0 {
            return Err(ConfigError::NoVariables);
        }
        if self.max_length < 3 {
            return Err(ConfigError::MaxLengthTooSmall(self.max_length));
        }
        if self.max_depth < 2 {
            return Err(ConfigError::MaxDepthTooSmall(self.max_depth));
        }
        Ok(())
    }

    /// True if `tree` respects every limit of this model space.
    pub fn admits(&self, tree: &ExpressionTree) -> bool {
        tree.len() <= self.max_length
            && tree.depth() <= self.max_depth
            && tree.nodes().iter().all(|n| match *n {
                Node::Function(s) => self.function_set.contains(s),
                Node::Variable { index, .. } => index < self.n_variables,
                Node::Parameter(_) => true,
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Function(Symbol),
    Parameter(f64),
    /// `weight * x[index]`
    Variable { index: usize, weight: f64 },
}

impl Node {
    pub fn arity(&self) -> usize {
        match self {
            Node::Function(s) => s.arity(),
            _ => 0,
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self, Node::Function(_))
    }
}

/// An expression tree in prefix order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionTree {
    nodes: Vec<Node>,
}

impl ExpressionTree {
    /// Builds a tree from a prefix node sequence, checking arities.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut open = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if open == 0 {
                return Err(TreeError::Malformed);
            }
            open = open - 1 + n.arity();
            if open == 0 && i + 1 != nodes.len() {
                return Err(TreeError::Malformed);
            }
        }
        if open != 0 {
            return Err(TreeError::Malformed);
        }
        Ok(Self { nodes })
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<Node>) -> Self {
        debug_assert!(Self::from_nodes(nodes.clone()).is_ok());
        Self { nodes }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            nodes: vec![Node::Parameter(value)],
        }
    }

    pub fn variable(index: usize, weight: f64) -> Self {
        Self {
            nodes: vec![Node::Variable { index, weight }],
        }
    }

    pub fn unary(symbol: Symbol, child: ExpressionTree) -> Self {
        assert_eq!(symbol.arity(), 1, "{symbol:?} is not unary");
        let mut nodes = Vec::with_capacity(child.len() + 1);
        nodes.push(Node::Function(symbol));
        nodes.extend(child.nodes);
        Self { nodes }
    }

    pub fn binary(symbol: Symbol, a: ExpressionTree, b: ExpressionTree) -> Self {
        assert_eq!(symbol.arity(), 2, "{symbol:?} is not binary");
        let mut nodes = Vec::with_capacity(a.len() + b.len() + 1);
        nodes.push(Node::Function(symbol));
        nodes.extend(a.nodes);
        nodes.extend(b.nodes);
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.nodes
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exclusive end index of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        subtree_end(&self.nodes, start)
    }

    pub fn subtree(&self, start: usize) -> &[Node] {
        &self.nodes[start..self.subtree_end(start)]
    }

    /// Indices of the direct children of the node at `index`.
    pub fn children(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2);
        let mut c = index + 1;
        for _ in 0..self.nodes[index].arity() {
            out.push(c);
            c = self.subtree_end(c);
        }
        out
    }

    /// Depth of the tree; a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        let mut stack: Vec<usize> = Vec::with_capacity(self.nodes.len());
        for n in self.nodes.iter().rev() {
            let d = match n.arity() {
                0 => 1,
                k => {
                    let mut m = 0;
                    for _ in 0..k {
                        m = m.max(stack.pop().expect("well-formed tree"));
                    }
                    m + 1
                }
            };
            stack.push(d);
        }
        stack.pop().unwrap_or(0)
    }

    /// Depth of every node measured from the root (root = 1).
    pub fn node_levels(&self) -> Vec<usize> {
        let mut levels = vec![0; self.nodes.len()];
        // stack of (level of the next child, remaining children)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let level = match stack.last_mut() {
                None => 1,
                Some((lvl, remaining)) => {
                    *remaining -= 1;
                    *lvl
                }
            };
            levels[i] = level;
            while matches!(stack.last(), Some((_, 0))) {
                stack.pop();
            }
            if n.arity() > 0 {
                stack.push((level + 1, n.arity()));
            }
        }
        levels
    }

    /// Returns a copy with the subtree at `start` replaced by `donor`.
    pub fn replace_subtree(&self, start: usize, donor: &[Node]) -> ExpressionTree {
        let end = self.subtree_end(start);
        let mut nodes = Vec::with_capacity(self.len() - (end - start) + donor.len());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(donor);
        nodes.extend_from_slice(&self.nodes[end..]);
        ExpressionTree::from_nodes_unchecked(nodes)
    }

    /// Numeric parameters in prefix order: parameter values and variable
    /// weights.
    pub fn parameters(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Parameter(v) => Some(v),
                Node::Variable { weight, .. } => Some(weight),
                Node::Function(_) => None,
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Copy with parameters replaced, in the order of [`parameters`](Self::parameters).
    pub fn with_parameters(&self, values: &[f64]) -> ExpressionTree {
        assert_eq!(values.len(), self.parameter_count());
        let mut it = values.iter().copied();
        let nodes = self
            .nodes
            .iter()
            .map(|n| match *n {
                Node::Parameter(_) => Node::Parameter(it.next().unwrap()),
                Node::Variable { index, .. } => Node::Variable {
                    index,
                    weight: it.next().unwrap(),
                },
                f => f,
            })
            .collect();
        ExpressionTree { nodes }
    }

    /// Largest variable index referenced, if any.
    pub fn max_variable_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Variable { index, .. } => Some(*index),
                _ => None,
            })
            .max()
    }

    /// `intercept + slope * self`
    pub fn scaled(&self, slope: f64, intercept: f64) -> ExpressionTree {
        ExpressionTree::binary(
            Symbol::Add,
            ExpressionTree::constant(intercept),
            ExpressionTree::binary(Symbol::Mul, ExpressionTree::constant(slope), self.clone()),
        )
    }

    pub fn to_infix(&self) -> String {
        infix::to_infix(self)
    }
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

pub(crate) fn subtree_end(nodes: &[Node], start: usize) -> usize {
    let mut open = 1usize;
    let mut i = start;
    while open > 0 {
        open = open - 1 + nodes[i].arity();
        i += 1;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExpressionTree {
        // (x0 * 2) + exp(x1)
        ExpressionTree::binary(
            Symbol::Add,
            ExpressionTree::binary(
                Symbol::Mul,
                ExpressionTree::variable(0, 1.0),
                ExpressionTree::constant(2.0),
            ),
            ExpressionTree::unary(Symbol::Exp, ExpressionTree::variable(1, 0.5)),
        )
    }

    #[test]
    fn structure_queries() {
        let t = sample();
        assert_eq!(t.len(), 6);
        assert_eq!(t.depth(), 3);
        assert_eq!(t.subtree_end(1), 4);
        assert_eq!(t.children(0), vec![1, 4]);
        assert_eq!(t.node_levels(), vec![1, 2, 3, 3, 2, 3]);
        assert_eq!(t.parameters(), vec![1.0, 2.0, 0.5]);
    }

    #[test]
    fn from_nodes_rejects_bad_arity() {
        let nodes = vec![Node::Function(Symbol::Add), Node::Parameter(1.0)];
        assert_eq!(ExpressionTree::from_nodes(nodes), Err(TreeError::Malformed));
        let nodes = vec![Node::Parameter(1.0), Node::Parameter(1.0)];
        assert_eq!(ExpressionTree::from_nodes(nodes), Err(TreeError::Malformed));
        assert_eq!(ExpressionTree::from_nodes(vec![]), Err(TreeError::Empty));
    }

    #[test]
    fn function_sets_are_nested() {
        for w in FunctionSet::ALL.windows(2) {
            for s in w[0].symbols() {
                assert!(w[1].contains(*s));
            }
        }
        assert_eq!(FunctionSet::F1.symbols(), &[Symbol::Add, Symbol::Sub, Symbol::Mul]);
        assert!(FunctionSet::F4.contains(Symbol::Tanh));
        assert!(!FunctionSet::F3.contains(Symbol::Sin));
        assert_eq!("f3".parse::<FunctionSet>(), Ok(FunctionSet::F3));
    }

    #[test]
    fn config_validation() {
        let mut c = ModelSpaceConfig::new(FunctionSet::F1, 10, 0);
        assert_eq!(c.validate(), Err(ConfigError::NoVariables));
        c.n_variables = 1;
        assert!(c.validate().is_ok());
        c.max_length = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parameter_round_trip() {
        let t = sample();
        let u = t.with_parameters(&[3.0, 4.0, 5.0]);
        assert_eq!(u.parameters(), vec![3.0, 4.0, 5.0]);
        assert_eq!(u.len(), t.len());
    }
}
