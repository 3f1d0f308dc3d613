//! Probabilistic tree creation (PTC2).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ConfigError, ExpressionTree, ModelSpaceConfig, Node, Symbol};

/// A parameter leaf with value ~ N(0,1) or a variable leaf with weight
/// ~ N(0,1), chosen 50/50.
pub fn random_leaf<R: Rng + ?Sized>(n_variables: usize, rng: &mut R) -> Node {
    if rng.gen_bool(0.5) {
        Node::Parameter(rng.sample(StandardNormal))
    } else {
        Node::Variable {
            index: rng.gen_range(0..n_variables),
            weight: rng.sample(StandardNormal),
        }
    }
}

enum Slot {
    Open(usize),
    Filled(Node, Vec<usize>),
}

/// Grows a random tree of approximately `target_length` nodes.
///
/// Function nodes are placed into randomly chosen open slots until the tree
/// (with every remaining slot counted as a leaf) reaches the target; the
/// remaining slots are then filled with random leaves.
pub fn ptc2_random_tree<R: Rng + ?Sized>(
    config: &ModelSpaceConfig,
    target_length: usize,
    rng: &mut R,
) -> Result<ExpressionTree, ConfigError> {
    config.validate()?;
    if target_length == 0 || target_length > config.max_length {
        return Err(ConfigError::TargetLength {
            target: target_length,
            max: config.max_length,
        });
    }
    Ok(grow(config, target_length, config.max_depth, rng))
}

/// PTC2 with an explicit depth limit (used for branch replacement).
pub(crate) fn grow<R: Rng + ?Sized>(
    config: &ModelSpaceConfig,
    target_length: usize,
    max_depth: usize,
    rng: &mut R,
) -> ExpressionTree {
    let symbols = config.function_set.symbols();
    let mut arena: Vec<Slot> = vec![Slot::Open(1)];
    let mut open: Vec<usize> = vec![0];
    let mut total = 1usize;

    loop {
        // slots deep enough to take a function
        let expandable: Vec<usize> = open
            .iter()
            .enumerate()
            .filter(|(_, &slot)| matches!(arena[slot], Slot::Open(d) if d < max_depth))
            .map(|(k, _)| k)
            .collect();
        let room = target_length - total;
        if room == 0 || expandable.is_empty() {
            break;
        }
        let candidates: Vec<Symbol> = symbols
            .iter()
            .copied()
            .filter(|s| s.arity() <= room)
            .collect();
        let Some(&symbol) = candidates.choose(rng) else { break };
        let k = *expandable.choose(rng).unwrap();
        let slot = open.swap_remove(k);
        let Slot::Open(depth) = arena[slot] else { unreachable!() };
        let mut children = Vec::with_capacity(symbol.arity());
        for _ in 0..symbol.arity() {
            arena.push(Slot::Open(depth + 1));
            children.push(arena.len() - 1);
            open.push(arena.len() - 1);
        }
        arena[slot] = Slot::Filled(Node::Function(symbol), children);
        total += symbol.arity();
    }

    for slot in open {
        arena[slot] = Slot::Filled(random_leaf(config.n_variables, rng), Vec::new());
    }

    let mut nodes = Vec::with_capacity(total);
    flatten(&arena, 0, &mut nodes);
    ExpressionTree::from_nodes_unchecked(nodes)
}

fn flatten(arena: &[Slot], i: usize, out: &mut Vec<Node>) {
    let Slot::Filled(node, children) = &arena[i] else { unreachable!("unfilled slot") };
    out.push(*node);
    for &c in children {
        flatten(arena, c, out);
    }
}
