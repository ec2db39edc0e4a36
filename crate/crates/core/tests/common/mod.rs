//! Oracles shared by the integration tests. Nothing here calls the crate's
//! own enumeration, capacity or scheduling code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use qnet_sched::sim::SlotRng;
use qnet_sched::{NetworkSpec, RequestClass};

pub struct Gen(SlotRng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(SlotRng::seed_from(seed))
    }

    pub fn unit(&mut self) -> f64 {
        self.0.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + ((self.unit() * (hi - lo + 1) as f64) as usize).min(hi - lo)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Decimal with three digits in `[lo, hi]`, so rational conversion is short.
    pub fn decimal(&mut self, lo: f64, hi: f64) -> f64 {
        let steps = ((hi - lo) * 1000.0).round() as usize;
        lo + self.int(0, steps) as f64 / 1000.0
    }
}

/// Random network with `num_links` links and `num_classes` classes over
/// random nonempty link subsets.
pub fn random_network(g: &mut Gen, num_links: usize, num_classes: usize, p_lo: f64, q_lo: f64) -> NetworkSpec {
    let probs = (0..num_links).map(|_| g.decimal(p_lo, 1.0)).collect();
    let classes = (0..num_classes)
        .map(|i| {
            let mut links = Vec::new();
            while links.is_empty() {
                links = (0..num_links).filter(|_| g.unit() < 0.5).collect();
            }
            let a = format!("a{i}");
            let b = format!("b{i}");
            RequestClass::new(format!("c{i}"), &[&a, &b], &links, g.decimal(q_lo, 1.0))
        })
        .collect();
    NetworkSpec::new(probs, classes).unwrap()
}

fn share_link(spec: &NetworkSpec, a: usize, b: usize) -> bool {
    let la = &spec.class(a).links;
    spec.class(b).links.iter().any(|l| la.contains(l))
}

pub fn conflict_free(spec: &NetworkSpec, bits: u32) -> bool {
    let members: Vec<usize> = (0..spec.num_classes()).filter(|&i| bits >> i & 1 == 1).collect();
    members
        .iter()
        .enumerate()
        .all(|(k, &a)| members[k + 1..].iter().all(|&b| !share_link(spec, a, b)))
}

/// All conflict-free subsets and the maximal ones, by filtering `2^M` sets.
pub fn brute_force_sets(spec: &NetworkSpec) -> (Vec<u32>, Vec<u32>) {
    let m = spec.num_classes();
    let free: Vec<u32> = (0..1u32 << m).filter(|&b| conflict_free(spec, b)).collect();
    let maximal = free
        .iter()
        .copied()
        .filter(|&b| (0..m).all(|i| b >> i & 1 == 1 || !conflict_free(spec, b | 1 << i)))
        .collect();
    (maximal, free)
}

/// Servable-class sets with their probabilities, from all `2^K` link states.
pub fn pattern_probabilities(spec: &NetworkSpec) -> BTreeMap<u32, f64> {
    let k = spec.num_links();
    let mut out = BTreeMap::new();
    for state in 0..1u64 << k {
        let mut prob = 1.0;
        for (j, &p) in spec.link_probs().iter().enumerate() {
            prob *= if state >> j & 1 == 1 { p } else { 1.0 - p };
        }
        if prob == 0.0 {
            continue;
        }
        let servable = (0..spec.num_classes())
            .filter(|&i| spec.class(i).links.iter().all(|&l| state >> l & 1 == 1))
            .fold(0u32, |acc, i| acc | 1 << i);
        *out.entry(servable).or_insert(0.0) += prob;
    }
    out
}

/// `h(y) = sum_s P(s) max_{sigma <= s conflict-free} sum_{i in sigma} q_i y_i`.
fn support(spec: &NetworkSpec, patterns: &BTreeMap<u32, f64>, free: &[u32], y: &[f64]) -> f64 {
    let q: Vec<f64> = spec.classes().iter().map(|c| c.q).collect();
    patterns
        .iter()
        .map(|(&s, &prob)| {
            let best = free
                .iter()
                .filter(|&&f| f & !s == 0)
                .map(|&f| {
                    (0..q.len())
                        .filter(|&i| f >> i & 1 == 1)
                        .map(|i| q[i] * y[i])
                        .sum::<f64>()
                })
                .fold(0.0, f64::max);
            prob * best
        })
        .sum()
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot_row = a[col].clone();
        for r in 0..n {
            if r != col {
                let f = a[r][col] / pivot_row[col];
                for (x, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Smallest budget by vertex enumeration of the dual.
///
/// The budget is the gauge of `lambda` with respect to the achievable-rate
/// set, i.e. the maximum of `lambda . y / h(y)` over the simplex. On each
/// region where every pattern's best selection is fixed the ratio is
/// linear-fractional, so the maximum sits at a vertex of the arrangement of
/// the hyperplanes `(1_a - 1_b) . (q y) = 0` and `y_i = 0`. Extra hyperplanes
/// only add feasible candidates, so all pairs of subsets are used.
pub fn budget_by_vertices(spec: &NetworkSpec, rates: &[f64]) -> f64 {
    let m = spec.num_classes();
    let q: Vec<f64> = spec.classes().iter().map(|c| c.q).collect();
    let patterns = pattern_probabilities(spec);
    let (_, free) = brute_force_sets(spec);
    let mut planes: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for a in 0..1u32 << m {
        for b in a + 1..1u32 << m {
            let d: Vec<f64> = (0..m)
                .map(|i| q[i] * ((a >> i & 1) as f64 - (b >> i & 1) as f64))
                .collect();
            if d.iter().any(|x| *x != 0.0) {
                planes.push(d);
            }
        }
    }
    let mut best = 0.0f64;
    for combo in combinations(planes.len(), m - 1) {
        let mut rows = vec![vec![1.0; m]];
        let mut rhs = vec![1.0];
        for &c in &combo {
            rows.push(planes[c].clone());
            rhs.push(0.0);
        }
        let Some(y) = solve_square(rows, rhs) else { continue };
        if y.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let y: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
        let h = support(spec, &patterns, &free, &y);
        let num: f64 = rates.iter().zip(&y).map(|(l, v)| l * v).sum();
        if h > 0.0 {
            best = best.max(num / h);
        }
    }
    best
}

/// Best Max-Weight value by scanning every conflict-free set whose classes
/// are all servable under `link_state`.
pub fn best_weight(spec: &NetworkSpec, queues: &[f64], link_state: u64) -> f64 {
    let (_, free) = brute_force_sets(spec);
    free.iter()
        .map(|&f| {
            (0..spec.num_classes())
                .filter(|&i| f >> i & 1 == 1)
                .filter(|&i| spec.class(i).links.iter().all(|&l| link_state >> l & 1 == 1))
                .map(|i| spec.class(i).q * queues[i])
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}
