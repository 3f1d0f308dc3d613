use super::{EvaluatedIndividual, EvolutionError};

/// `a` dominates `b` with per-objective tolerance `eps`: no objective worse
/// by more than `eps` and at least one better by more than `eps`.
pub fn dominates(a: &[f64], b: &[f64], eps: f64) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x == y {
            continue;
        }
        if *x > y + eps {
            return false;
        }
        if *x < y - eps {
            strictly = true;
        }
    }
    strictly
}

fn equivalent(a: &[f64], b: &[f64], eps: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x == y || (x - y).abs() <= eps)
}

/// Fast non-dominated sort. Fronts are returned best first, each listing
/// indices in ascending order. Epsilon dominance is not transitive and can
/// form cycles; members caught in or behind a cycle share a final front.
pub fn non_dominated_sort(objectives: &[Vec<f64>], eps: f64) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objectives[i], &objectives[j], eps) {
                dominated_by_me[i].push(j);
                count[j] += 1;
            } else if dominates(&objectives[j], &objectives[i], eps) {
                dominated_by_me[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    let placed: usize = fronts.iter().map(Vec::len).sum();
    if placed < n {
        let mut seen = vec![false; n];
        fronts.iter().flatten().for_each(|&i| seen[i] = true);
        fronts.push((0..n).filter(|&i| !seen[i]).collect());
    }
    fronts
}

/// Crowding distance of each member of `front` (aligned with it). Per
/// objective the members are ordered by value (ties by position in `front`);
/// the extremes get infinity. Objectives whose range is zero or not finite
/// add nothing to interior members.
pub fn crowding_distance(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    let m = objectives[front[0]].len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objectives[front[a]][k].total_cmp(&objectives[front[b]][k]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let lo = objectives[front[order[0]]][k];
        let hi = objectives[front[order[n - 1]]][k];
        let range = hi - lo;
        if !(range.is_finite() && range > 0.0) {
            continue;
        }
        for w in 1..n.saturating_sub(1) {
            let gap = objectives[front[order[w + 1]]][k] - objectives[front[order[w - 1]]][k];
            if gap.is_finite() {
                dist[order[w]] += gap / range;
            }
        }
    }
    dist
}

/// Mutually non-dominated individuals, bounded in size; when full, the
/// member with the smallest crowding distance is dropped.
#[derive(Clone, Debug)]
pub struct ParetoArchive {
    members: Vec<EvaluatedIndividual>,
    capacity: usize,
    epsilon: f64,
}

impl ParetoArchive {
    pub fn new(capacity: usize, epsilon: f64) -> Self {
        Self {
            members: Vec::new(),
            capacity: capacity.max(1),
            epsilon,
        }
    }

    pub fn members(&self) -> &[EvaluatedIndividual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Inserts unless an equivalent or dominating member exists; evicts
    /// members the newcomer dominates.
    pub fn insert(&mut self, ind: EvaluatedIndividual) -> bool {
        let eps = self.epsilon;
        if self.members.iter().any(|m| {
            dominates(&m.objectives, &ind.objectives, eps) || equivalent(&m.objectives, &ind.objectives, eps)
        }) {
            return false;
        }
        self.members.retain(|m| !dominates(&ind.objectives, &m.objectives, eps));
        self.members.push(ind);
        if self.members.len() > self.capacity {
            let objs: Vec<Vec<f64>> = self.members.iter().map(|m| m.objectives.clone()).collect();
            let all: Vec<usize> = (0..objs.len()).collect();
            let d = crowding_distance(&objs, &all);
            let worst = (0..d.len())
                .min_by(|&a, &b| d[a].total_cmp(&d[b]))
                .expect("archive is non-empty");
            self.members.remove(worst);
        }
        true
    }
}

/// The feasible member with the lowest NMSE; without feasible members, the
/// lowest NMSE among those with minimal total violation.
pub fn select_final(archive: &ParetoArchive) -> Result<EvaluatedIndividual, EvolutionError> {
    let min_violation = archive
        .members()
        .iter()
        .map(EvaluatedIndividual::total_violation)
        .fold(f64::INFINITY, f64::min);
    let pool = archive.members().iter().filter(|m| {
        let v = m.total_violation();
        if min_violation == 0.0 {
            v == 0.0
        } else {
            v == min_violation || (v.is_infinite() && min_violation.is_infinite())
        }
    });
    pool.min_by(|a, b| a.nmse_train.total_cmp(&b.nmse_train))
        .cloned()
        .ok_or(EvolutionError::NoModel)
}
