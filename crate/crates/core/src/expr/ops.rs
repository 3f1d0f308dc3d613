//! Variation operators: subtree crossover and the four mutation operators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::create::grow;
use super::{ExpressionTree, ModelSpaceConfig, Node};

const CROSSOVER_ATTEMPTS: usize = 10;

/// Replaces a uniformly chosen subtree of `a` with a uniformly chosen subtree
/// of `b`. Cut points are resampled up to ten times to respect the length and
/// depth limits; if no admissible pair is found `a` is returned unchanged.
pub fn subtree_crossover<R: Rng + ?Sized>(
    a: &ExpressionTree,
    b: &ExpressionTree,
    config: &ModelSpaceConfig,
    rng: &mut R,
) -> ExpressionTree {
    let levels = a.node_levels();
    for _ in 0..CROSSOVER_ATTEMPTS {
        let cut = rng.gen_range(0..a.len());
        let donor_root = rng.gen_range(0..b.len());
        let cut_len = a.subtree_end(cut) - cut;
        let donor = b.subtree(donor_root);
        if a.len() - cut_len + donor.len() > config.max_length {
            continue;
        }
        let donor_depth = ExpressionTree::from_nodes_unchecked(donor.to_vec()).depth();
        if levels[cut] - 1 + donor_depth > config.max_depth {
            continue;
        }
        return a.replace_subtree(cut, donor);
    }
    a.clone()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    ReplaceBranch,
    ChangeSymbol,
    PerturbAllParameters,
    PerturbOneParameter,
}

impl MutationKind {
    pub const ALL: [MutationKind; 4] = [
        MutationKind::ReplaceBranch,
        MutationKind::ChangeSymbol,
        MutationKind::PerturbAllParameters,
        MutationKind::PerturbOneParameter,
    ];
}

/// Applies one of the four mutation operators, chosen uniformly.
pub fn mutate<R: Rng + ?Sized>(
    tree: &ExpressionTree,
    config: &ModelSpaceConfig,
    rng: &mut R,
) -> ExpressionTree {
    match *MutationKind::ALL.choose(rng).unwrap() {
        MutationKind::ReplaceBranch => replace_random_branch(tree, config, rng),
        MutationKind::ChangeSymbol => change_symbol(tree, config, rng),
        MutationKind::PerturbAllParameters => perturb_all_parameters(tree, rng),
        MutationKind::PerturbOneParameter => perturb_one_parameter(tree, rng),
    }
}

/// Replaces a random subtree by a fresh PTC2 branch that fits the limits.
pub fn replace_random_branch<R: Rng + ?Sized>(
    tree: &ExpressionTree,
    config: &ModelSpaceConfig,
    rng: &mut R,
) -> ExpressionTree {
    let at = rng.gen_range(0..tree.len());
    let level = tree.node_levels()[at];
    let removed = tree.subtree_end(at) - at;
    let room = config.max_length.saturating_sub(tree.len() - removed).max(1);
    let depth_room = (config.max_depth + 1).saturating_sub(level).max(1);
    let target = rng.gen_range(1..=room);
    let branch = grow(config, target, depth_room, rng);
    tree.replace_subtree(at, branch.nodes())
}

/// Swaps one function symbol for a different one of the same arity.
pub fn change_symbol<R: Rng + ?Sized>(
    tree: &ExpressionTree,
    config: &ModelSpaceConfig,
    rng: &mut R,
) -> ExpressionTree {
    let functions: Vec<usize> = tree
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| !n.is_leaf())
        .map(|(i, _)| i)
        .collect();
    let Some(&at) = functions.choose(rng) else {
        return tree.clone();
    };
    let Node::Function(current) = tree.nodes()[at] else { unreachable!() };
    let alternatives: Vec<_> = config
        .function_set
        .symbols()
        .iter()
        .copied()
        .filter(|s| s.arity() == current.arity() && *s != current)
        .collect();
    let Some(&replacement) = alternatives.choose(rng) else {
        return tree.clone();
    };
    let mut nodes = tree.nodes().to_vec();
    nodes[at] = Node::Function(replacement);
    ExpressionTree::from_nodes_unchecked(nodes)
}

/// Adds independent N(0,1) noise to every parameter node.
pub fn perturb_all_parameters<R: Rng + ?Sized>(tree: &ExpressionTree, rng: &mut R) -> ExpressionTree {
    let nodes = tree
        .nodes()
        .iter()
        .map(|n| match *n {
            Node::Parameter(v) => Node::Parameter(v + rng.sample::<f64, _>(StandardNormal)),
            other => other,
        })
        .collect();
    ExpressionTree::from_nodes_unchecked(nodes)
}

/// Adds N(0,1) noise to one randomly chosen parameter node.
pub fn perturb_one_parameter<R: Rng + ?Sized>(tree: &ExpressionTree, rng: &mut R) -> ExpressionTree {
    let params: Vec<usize> = tree
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n, Node::Parameter(_)))
        .map(|(i, _)| i)
        .collect();
    let Some(&at) = params.choose(rng) else {
        return tree.clone();
    };
    let mut nodes = tree.nodes().to_vec();
    if let Node::Parameter(v) = nodes[at] {
        nodes[at] = Node::Parameter(v + rng.sample::<f64, _>(StandardNormal));
    }
    ExpressionTree::from_nodes_unchecked(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ptc2_random_tree, FunctionSet, Symbol};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn symbol_counts(t: &ExpressionTree) -> HashMap<Symbol, usize> {
        let mut m = HashMap::new();
        for n in t.nodes() {
            if let Node::Function(s) = n {
                *m.entry(*s).or_default() += 1;
            }
        }
        m
    }

    #[test]
    fn crossover_of_two_leaves() {
        let cfg = ModelSpaceConfig::new(FunctionSet::F1, 10, 2);
        let a = ExpressionTree::constant(1.0);
        let b = ExpressionTree::variable(1, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let c = subtree_crossover(&a, &b, &cfg, &mut rng);
            assert!(c == a || c == b);
        }
    }

    #[test]
    fn crossover_respects_limits() {
        let mut cfg = ModelSpaceConfig::new(FunctionSet::F4, 25, 3);
        cfg.max_depth = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let a = ptc2_random_tree(&cfg, rng.gen_range(1..=25), &mut rng).unwrap();
            let b = ptc2_random_tree(&cfg, rng.gen_range(1..=25), &mut rng).unwrap();
            let c = subtree_crossover(&a, &b, &cfg, &mut rng);
            assert!(cfg.admits(&c));
        }
    }

    #[test]
    fn self_crossover_introduces_no_new_symbols() {
        let cfg = ModelSpaceConfig::new(FunctionSet::F4, 50, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let a = ptc2_random_tree(&cfg, 20, &mut rng).unwrap();
            let c = subtree_crossover(&a, &a, &cfg, &mut rng);
            let ca = symbol_counts(&a);
            for s in symbol_counts(&c).keys() {
                assert!(ca.contains_key(s));
            }
        }
    }

    #[test]
    fn symbol_change_keeps_arity() {
        let cfg = ModelSpaceConfig::new(FunctionSet::F1, 10, 2);
        let t = ExpressionTree::binary(
            Symbol::Add,
            ExpressionTree::variable(0, 1.0),
            ExpressionTree::constant(2.0),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = change_symbol(&t, &cfg, &mut rng);
            let Node::Function(s) = m.nodes()[0] else { panic!() };
            assert!(matches!(s, Symbol::Sub | Symbol::Mul), "{s:?}");
            assert_eq!(&m.nodes()[1..], &t.nodes()[1..]);
        }
    }

    #[test]
    fn perturbing_without_parameter_nodes_is_identity() {
        let t = ExpressionTree::unary(Symbol::Exp, ExpressionTree::variable(0, 1.5));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(perturb_all_parameters(&t, &mut rng), t);
        assert_eq!(perturb_one_parameter(&t, &mut rng), t);
    }

    #[test]
    fn perturb_one_touches_exactly_one() {
        let t = ExpressionTree::binary(
            Symbol::Add,
            ExpressionTree::constant(1.0),
            ExpressionTree::constant(2.0),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = perturb_one_parameter(&t, &mut rng);
        let changed = t
            .nodes()
            .iter()
            .zip(m.nodes())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 1);
    }

    #[test]
    fn mutation_respects_limits() {
        let mut cfg = ModelSpaceConfig::new(FunctionSet::F4, 20, 3);
        cfg.max_depth = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let t = ptc2_random_tree(&cfg, rng.gen_range(1..=20), &mut rng).unwrap();
            let m = mutate(&t, &cfg, &mut rng);
            assert!(cfg.admits(&m), "{m}");
        }
    }

    #[test]
    fn operators_are_deterministic() {
        let cfg = ModelSpaceConfig::new(FunctionSet::F4, 30, 3);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = ptc2_random_tree(&cfg, 15, &mut rng).unwrap();
            let b = ptc2_random_tree(&cfg, 15, &mut rng).unwrap();
            let c = subtree_crossover(&a, &b, &cfg, &mut rng);
            mutate(&c, &cfg, &mut rng)
        };
        assert_eq!(run(7), run(7));
    }
}
