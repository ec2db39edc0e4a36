//! Slot-by-slot queue simulation.
//!
//! One slot executes, in this order:
//!
//! 1. link outcomes `T_j ~ Bernoulli(p_j)` for `j = 0..K`;
//! 2. one uniform tie-break draw, then the policy picks a matching `W`;
//! 3. for each class `i` in ascending order with `W_i = 1`, `Q_i > 0` and all
//!    links of `L_i` up, a measurement draw `Z_i ~ Bernoulli(q_i)`;
//! 4. departures `D_i = Z_i` for those classes, zero elsewhere;
//! 5. arrivals `A_i ~ Bernoulli(lambda_i)` for `i = 0..M`;
//! 6. `Q <- Q - D + A`.
//!
//! All draws come from one ChaCha8 stream seeded with the run seed, so a
//! `(seed, config, spec)` triple determines the trace bit for bit.

mod diagnostics;
mod output;

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matching::{ClassSet, Matching, MatchingError, MatchingTable, ServiceVector};
use crate::model::{ArrivalSpec, NetworkSpec, SpecError};
use crate::policy::{PolicyContext, PolicyKind, SchedulerInput};

pub use diagnostics::{
    detect_trend, detect_trend_with, drift_probe, percentile_norm, service_frequency_check, DriftLog, DriftProbe,
    Trend, TrendVerdict, DEFAULT_SLOPE_THRESHOLD, MIN_DRIFT_SAMPLES, MIN_TREND_SAMPLES,
};
pub use output::{write_trace_csv, DriftReport, RunSummary, TraceRow, TrendReport};

/// Default slot count for `simulate` and `reproduce`.
pub const DEFAULT_SLOTS: u64 = 1_000_000;
/// Percentile of `||Q||` used as drift threshold when none is configured.
pub const DEFAULT_DRIFT_PERCENTILE: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("slots must be positive")]
    NoSlots,
    #[error("sample_every = {sample_every} leaves {samples} samples over {slots} slots; at least {MIN_TREND_SAMPLES} are needed")]
    TooFewSamples {
        slots: u64,
        sample_every: u64,
        samples: u64,
    },
    #[error("initial queue vector has length {found}, expected {expected}")]
    InitialQueues { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub slots: u64,
    pub seed: u64,
    pub sample_every: u64,
    pub policy: PolicyKind,
    /// `||Q||` threshold for the drift probe; `None` uses the 80th percentile.
    pub drift_threshold: Option<f64>,
    /// `Q(1)`; zero when `None`.
    pub initial_queues: Option<Vec<u64>>,
}

impl SimConfig {
    /// Config with roughly a thousand trace rows.
    pub fn new(policy: PolicyKind, slots: u64, seed: u64) -> Self {
        Self {
            slots,
            seed,
            sample_every: (slots / 1000).max(1),
            policy,
            drift_threshold: None,
            initial_queues: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.slots == 0 {
            return Err(SimError::NoSlots);
        }
        let samples = self.slots / self.sample_every.max(1);
        if self.sample_every == 0 || samples < MIN_TREND_SAMPLES as u64 {
            return Err(SimError::TooFewSamples {
                slots: self.slots,
                sample_every: self.sample_every,
                samples,
            });
        }
        Ok(())
    }
}

/// Deterministic random stream for one run.
#[derive(Debug, Clone)]
pub struct SlotRng(ChaCha8Rng);

impl SlotRng {
    pub fn seed_from(seed: u64) -> Self {
        SlotRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in `[0, 1)` from the top 53 bits of one 64-bit output.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Backlog vector and cumulative counters.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub queues: Vec<u64>,
    pub initial: Vec<u64>,
    pub cum_arrivals: Vec<u64>,
    pub cum_departures: Vec<u64>,
    /// How many slots served exactly each service vector (`D(n) = sigma`).
    pub c_sigma: BTreeMap<ServiceVector, u64>,
    /// Completed slots.
    pub slot: u64,
}

impl QueueState {
    pub fn new(initial: Vec<u64>) -> Self {
        let m = initial.len();
        Self {
            queues: initial.clone(),
            initial,
            cum_arrivals: vec![0; m],
            cum_departures: vec![0; m],
            c_sigma: BTreeMap::new(),
            slot: 0,
        }
    }

    pub fn zeros(num_classes: usize) -> Self {
        Self::new(vec![0; num_classes])
    }

    /// `S = (sum_i Q_i) / M`.
    pub fn average_queue(&self) -> f64 {
        self.total() as f64 / self.queues.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.queues.iter().sum()
    }

    /// `sum_i Q_i^2`.
    pub fn lyapunov(&self) -> u64 {
        self.queues.iter().map(|&q| q * q).sum()
    }

    /// `Q = Q(1) + cumulative arrivals - cumulative departures` and
    /// `sum_sigma c_sigma = slots`.
    pub fn conservation_holds(&self) -> bool {
        let flow = (0..self.queues.len())
            .all(|i| self.queues[i] + self.cum_departures[i] == self.initial[i] + self.cum_arrivals[i]);
        flow && self.c_sigma.values().sum::<u64>() == self.slot
    }
}

/// Everything drawn or decided in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    /// 1-based slot index `n`.
    pub slot: u64,
    /// `S(n)` computed from `Q(n)`, before the slot's departures and arrivals.
    pub avg_queue: f64,
    pub link_state: u64,
    pub matching: Matching,
    /// Classes whose measurement draw succeeded (draws happen only for
    /// selected, non-empty, servable classes).
    pub measured: ClassSet,
    pub departures: ServiceVector,
    pub arrivals: ClassSet,
}

/// Advances `state` by one slot.
pub fn step(
    state: &mut QueueState,
    spec: &NetworkSpec,
    rates: &[f64],
    policy: &PolicyContext<f64>,
    kind: PolicyKind,
    rng: &mut SlotRng,
    scratch: &mut Vec<f64>,
) -> SlotRecord {
    let m = spec.num_classes();
    let avg_queue = state.average_queue();

    let mut link_state = 0u64;
    for (j, &p) in spec.link_probs().iter().enumerate() {
        if rng.bernoulli(p) {
            link_state |= 1 << j;
        }
    }

    scratch.clear();
    scratch.extend(state.queues.iter().map(|&q| q as f64));
    let tie_break = rng.uniform();
    let decision = policy.select(
        kind,
        &SchedulerInput {
            queues: scratch,
            link_state,
            tie_break,
        },
    );

    let mut measured = ClassSet::EMPTY;
    for i in decision.matching.iter().filter(|&i| i < m) {
        let class = spec.class(i);
        let up = class.link_mask() & link_state == class.link_mask();
        if state.queues[i] > 0 && up && rng.bernoulli(class.q) {
            measured = measured.with(i);
        }
    }
    let departures = measured;

    let mut arrivals = ClassSet::EMPTY;
    for (i, &rate) in rates.iter().enumerate() {
        if rng.bernoulli(rate) {
            arrivals = arrivals.with(i);
        }
    }

    for i in 0..m {
        if departures.contains(i) {
            assert!(state.queues[i] > 0, "queue {i} would go negative");
            state.queues[i] -= 1;
            state.cum_departures[i] += 1;
        }
        if arrivals.contains(i) {
            state.queues[i] += 1;
            state.cum_arrivals[i] += 1;
        }
    }
    *state.c_sigma.entry(departures).or_insert(0) += 1;
    state.slot += 1;

    SlotRecord {
        slot: state.slot,
        avg_queue,
        link_state,
        matching: decision.matching,
        measured,
        departures,
        arrivals,
    }
}

/// Owns the state, random stream and policy data of one run.
pub struct Simulator<'a> {
    spec: &'a NetworkSpec,
    rates: &'a [f64],
    kind: PolicyKind,
    policy: PolicyContext<f64>,
    rng: SlotRng,
    state: QueueState,
    scratch: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        spec: &'a NetworkSpec,
        arrivals: &'a ArrivalSpec,
        kind: PolicyKind,
        seed: u64,
        initial: Option<Vec<u64>>,
    ) -> Result<Self, SimError> {
        spec.validate_rates(&arrivals.rates)?;
        let m = spec.num_classes();
        let initial = initial.unwrap_or_else(|| vec![0; m]);
        if initial.len() != m {
            return Err(SimError::InitialQueues {
                expected: m,
                found: initial.len(),
            });
        }
        let table = MatchingTable::new(spec)?;
        Ok(Self {
            spec,
            rates: &arrivals.rates,
            kind,
            policy: PolicyContext::new(spec, &table),
            rng: SlotRng::seed_from(seed),
            state: QueueState::new(initial),
            scratch: Vec::with_capacity(m),
        })
    }

    pub fn state(&self) -> &QueueState {
        &self.state
    }

    pub fn step(&mut self) -> SlotRecord {
        step(
            &mut self.state,
            self.spec,
            self.rates,
            &self.policy,
            self.kind,
            &mut self.rng,
            &mut self.scratch,
        )
    }

    pub fn into_state(self) -> QueueState {
        self.state
    }
}

/// Result of [`run`]: summary, decimated trace and per-slot drift log.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub trace: Vec<TraceRow>,
    pub drift_log: DriftLog,
    pub final_state: QueueState,
}

pub fn run(config: &SimConfig, spec: &NetworkSpec, arrivals: &ArrivalSpec) -> Result<RunOutput, SimError> {
    run_observed(config, spec, arrivals, |_, _| {})
}

/// [`run`], calling `observer` with the post-slot state after every slot.
pub fn run_observed<F>(
    config: &SimConfig,
    spec: &NetworkSpec,
    arrivals: &ArrivalSpec,
    mut observer: F,
) -> Result<RunOutput, SimError>
where
    F: FnMut(&QueueState, &SlotRecord),
{
    config.validate()?;
    let mut sim = Simulator::new(
        spec,
        arrivals,
        config.policy,
        config.seed,
        config.initial_queues.clone(),
    )?;
    let m = spec.num_classes();
    let mut trace = Vec::with_capacity((config.slots / config.sample_every + 1) as usize);
    let mut drift_log = DriftLog::with_capacity(config.slots as usize);
    let mut queue_sum: u128 = 0;

    for n in 1..=config.slots {
        let before = sim.state().lyapunov();
        let total_before = sim.state().total();
        if (n - 1) % config.sample_every == 0 {
            trace.push(TraceRow {
                slot: n,
                avg_queue: sim.state().average_queue(),
                queues: sim.state().queues.clone(),
                served_total: sim.state().cum_departures.iter().sum(),
            });
        }
        queue_sum += total_before as u128;
        let record = sim.step();
        drift_log.push(before, sim.state().lyapunov());
        observer(sim.state(), &record);
    }

    let state = sim.into_state();
    let slots = config.slots as f64;
    let threshold = config
        .drift_threshold
        .unwrap_or_else(|| percentile_norm(&drift_log, DEFAULT_DRIFT_PERCENTILE));
    let samples: Vec<(u64, f64)> = trace.iter().map(|r| (r.slot, r.avg_queue)).collect();
    let trend = detect_trend(&samples).expect("validated sample count");
    let drift = drift_probe(&drift_log, threshold);
    let summary = RunSummary {
        policy: config.policy,
        seed: config.seed,
        slots: config.slots,
        mean_s: queue_sum as f64 / (m as f64 * slots),
        final_q: state.queues.clone(),
        service_rates: state.cum_departures.iter().map(|&d| d as f64 / slots).collect(),
        arrival_rates: state.cum_arrivals.iter().map(|&a| a as f64 / slots).collect(),
        c_sigma_freqs: state
            .c_sigma
            .iter()
            .map(|(sigma, &count)| (sigma.to_bit_string(m), count as f64 / slots))
            .collect(),
        trend: TrendReport::from(&trend),
        drift: DriftReport::new(&drift, threshold),
    };
    Ok(RunOutput {
        summary,
        trace,
        drift_log,
        final_state: state,
    })
}

/// One independent simulation in a batch.
#[derive(Debug, Clone)]
pub struct RunJob {
    pub config: SimConfig,
    pub spec: NetworkSpec,
    pub arrivals: ArrivalSpec,
}

/// Runs independent jobs on separate threads; results keep job order.
pub fn run_batch(jobs: &[RunJob]) -> Vec<Result<RunOutput, SimError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|job| scope.spawn(move || run(&job.config, &job.spec, &job.arrivals)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}
