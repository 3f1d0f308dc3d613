use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scsr_core::evolution::{crowding_distance, non_dominated_sort};

/// Pairwise epsilon dominance written out from its definition.
fn oracle_dominates(a: &[f64], b: &[f64], eps: f64) -> bool {
    let no_worse = a.iter().zip(b).all(|(x, y)| x == y || *x <= y + eps);
    let better = a.iter().zip(b).any(|(x, y)| x != y && *x < y - eps);
    no_worse && better
}

/// Repeatedly peels off the members not dominated by any remaining member.
/// If nothing can be peeled (a dominance cycle), the rest is one front.
fn oracle_fronts(objs: &[Vec<f64>], eps: f64) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..objs.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| oracle_dominates(&objs[j], &objs[i], eps)))
            .collect();
        if front.is_empty() {
            fronts.push(std::mem::take(&mut remaining));
            break;
        }
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Crowding per objective with neighbours found by scanning: the rank of a
/// member is the number of members with a smaller value, or an equal value
/// and an earlier position.
fn oracle_crowding(objs: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let m = objs[front[0]].len();
    let mut dist = vec![0.0; n];
    for k in 0..m {
        let v = |p: usize| objs[front[p]][k];
        let rank = |p: usize| {
            (0..n)
                .filter(|&q| v(q) < v(p) || (v(q) == v(p) && q < p))
                .count()
        };
        let mut at = vec![0; n];
        for p in 0..n {
            at[rank(p)] = p;
        }
        let range = v(at[n - 1]) - v(at[0]);
        for p in 0..n {
            let r = rank(p);
            if r == 0 || r == n - 1 {
                dist[p] = f64::INFINITY;
            } else if range > 0.0 && range.is_finite() {
                let gap = v(at[r + 1]) - v(at[r - 1]);
                if gap.is_finite() {
                    dist[p] += gap / range;
                }
            }
        }
    }
    dist
}

fn random_population(rng: &mut ChaCha8Rng, eps: f64) -> Vec<Vec<f64>> {
    let n = rng.gen_range(1..=100);
    let m = rng.gen_range(1..=5);
    let style = rng.gen_range(0..3);
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| match style {
                    // continuous values, ties unlikely
                    0 => rng.gen::<f64>(),
                    // small integer grid, many ties
                    1 => rng.gen_range(0..4) as f64,
                    // values spaced at the epsilon scale, with infinities
                    _ => {
                        if rng.gen_bool(0.05) {
                            f64::INFINITY
                        } else {
                            rng.gen_range(0..6) as f64 * 0.6 * eps
                        }
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn sort_and_crowding_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let eps: f64 = if case % 2 == 0 { 0.0 } else { 1e-6 };
        let objs = random_population(&mut rng, eps.max(1e-6));
        let fronts = non_dominated_sort(&objs, eps);
        assert_eq!(fronts, oracle_fronts(&objs, eps), "case {case}: {objs:?}");
        for front in &fronts {
            assert_eq!(crowding_distance(&objs, front), oracle_crowding(&objs, front), "case {case}");
        }
    }
}

#[test]
fn every_member_is_placed_exactly_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..500 {
        let objs = random_population(&mut rng, 1e-6);
        let mut all: Vec<usize> = non_dominated_sort(&objs, 1e-6).concat();
        all.sort_unstable();
        assert_eq!(all, (0..objs.len()).collect::<Vec<_>>());
    }
}
