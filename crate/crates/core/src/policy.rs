//! Per-slot scheduling policies. Each picks one matching given the queue
//! backlog, the link outcomes and a single uniform tie-break draw.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matching::{Matching, MatchingTable};
use crate::model::NetworkSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Matching maximizing `sum_i u_i Q_i`.
    #[serde(rename = "maxweight")]
    MaxWeight,
    /// Longest queue first, blind to link outcomes.
    Lqf,
    /// Longest queue among classes servable this slot.
    LqfServable,
    /// Uniform over matchings.
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::MaxWeight,
        PolicyKind::Lqf,
        PolicyKind::LqfServable,
        PolicyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::MaxWeight => "maxweight",
            PolicyKind::Lqf => "lqf",
            PolicyKind::LqfServable => "lqf-servable",
            PolicyKind::Random => "random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}` (expected maxweight, lqf, lqf-servable or random)"))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchedulerInput<'a, S> {
    pub queues: &'a [S],
    /// Bit `j` set iff link `j` holds an entanglement this slot.
    pub link_state: u64,
    /// Uniform draw in `[0, 1)` used for every random choice of the policy.
    pub tie_break: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision<S> {
    pub matching: Matching,
    /// Position of `matching` in the enumeration order.
    pub index: usize,
    pub weight: S,
    /// Number of candidates tied for the policy's criterion.
    pub num_maximizers: usize,
}

/// Per-network data the policies read: the matching set and each class's
/// link mask and measurement success probability.
#[derive(Debug, Clone)]
pub struct PolicyContext<S> {
    matchings: Vec<Matching>,
    first_containing: Vec<usize>,
    masks: Vec<u64>,
    q: Vec<S>,
}

impl<S: Scalar> PolicyContext<S> {
    pub fn new(spec: &NetworkSpec, table: &MatchingTable) -> Self {
        Self {
            matchings: table.matchings().to_vec(),
            first_containing: (0..spec.num_classes()).map(|i| table.first_matching_with(i)).collect(),
            masks: spec.classes().iter().map(|c| c.link_mask()).collect(),
            q: spec.classes().iter().map(|c| S::from_decimal(c.q)).collect(),
        }
    }

    pub fn matchings(&self) -> &[Matching] {
        &self.matchings
    }

    pub fn num_classes(&self) -> usize {
        self.q.len()
    }

    fn links_up(&self, i: usize, link_state: u64) -> bool {
        self.masks[i] & link_state == self.masks[i]
    }

    /// `u_i(Q, T, pi) = q_i 1{pi_i > 0} 1{Q_i > 0} 1{T_j > 0 for all j in L_i}`.
    pub fn service_chance(&self, i: usize, pi: Matching, queues: &[S], link_state: u64) -> S {
        if pi.contains(i) && queues[i] > S::zero() && self.links_up(i, link_state) {
            self.q[i].clone()
        } else {
            S::zero()
        }
    }

    /// `sum_i u_i(Q, T, pi) Q_i`.
    pub fn weight_of(&self, pi: Matching, queues: &[S], link_state: u64) -> S {
        pi.iter().filter(|&i| i < self.q.len()).fold(S::zero(), |acc, i| {
            acc + self.service_chance(i, pi, queues, link_state) * queues[i].clone()
        })
    }

    pub fn select(&self, kind: PolicyKind, input: &SchedulerInput<'_, S>) -> PolicyDecision<S> {
        match kind {
            PolicyKind::MaxWeight => self.max_weight_select(input),
            PolicyKind::Lqf => self.lqf_select(input),
            PolicyKind::LqfServable => self.lqf_servable_select(input),
            PolicyKind::Random => self.random_select(input),
        }
    }

    /// Max-Weight: a uniformly chosen maximizer of [`weight_of`](Self::weight_of).
    pub fn max_weight_select(&self, input: &SchedulerInput<'_, S>) -> PolicyDecision<S> {
        let weights: Vec<S> = self
            .matchings
            .iter()
            .map(|&pi| self.weight_of(pi, input.queues, input.link_state))
            .collect();
        let best = weights.iter().cloned().fold(S::zero(), S::max_of);
        let maximizers: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] == best).collect();
        let index = maximizers[pick(input.tie_break, maximizers.len())];
        debug_assert!(weights.iter().all(|w| *w <= weights[index]));
        PolicyDecision {
            matching: self.matchings[index],
            index,
            weight: weights[index].clone(),
            num_maximizers: maximizers.len(),
        }
    }

    /// Serves the class with the longest queue (uniform among ties, empty
    /// queues included), using the first matching that contains it.
    pub fn lqf_select(&self, input: &SchedulerInput<'_, S>) -> PolicyDecision<S> {
        let all: Vec<usize> = (0..self.q.len()).collect();
        self.longest_of(&all, input)
    }

    /// Like [`lqf_select`](Self::lqf_select) but only among classes whose
    /// links are all up and whose queue is non-empty; falls back to plain LQF
    /// when there are none.
    pub fn lqf_servable_select(&self, input: &SchedulerInput<'_, S>) -> PolicyDecision<S> {
        let candidates: Vec<usize> = (0..self.q.len())
            .filter(|&i| self.links_up(i, input.link_state) && input.queues[i] > S::zero())
            .collect();
        if candidates.is_empty() {
            self.lqf_select(input)
        } else {
            self.longest_of(&candidates, input)
        }
    }

    fn longest_of(&self, candidates: &[usize], input: &SchedulerInput<'_, S>) -> PolicyDecision<S> {
        let longest = candidates
            .iter()
            .map(|&i| input.queues[i].clone())
            .fold(S::zero(), S::max_of);
        let tied: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| input.queues[i] == longest)
            .collect();
        let class = tied[pick(input.tie_break, tied.len())];
        let index = self.first_containing[class];
        let matching = self.matchings[index];
        PolicyDecision {
            matching,
            index,
            weight: self.weight_of(matching, input.queues, input.link_state),
            num_maximizers: tied.len(),
        }
    }

    pub fn random_select(&self, input: &SchedulerInput<'_, S>) -> PolicyDecision<S> {
        let index = pick(input.tie_break, self.matchings.len());
        let matching = self.matchings[index];
        PolicyDecision {
            matching,
            index,
            weight: self.weight_of(matching, input.queues, input.link_state),
            num_maximizers: self.matchings.len(),
        }
    }
}

/// Maps a uniform draw in `[0, 1)` to an index in `0..n`.
fn pick(u: f64, n: usize) -> usize {
    debug_assert!(n > 0);
    ((u * n as f64) as usize).min(n - 1)
}
