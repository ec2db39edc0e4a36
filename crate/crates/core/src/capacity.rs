//! Necessary stability regions for a rate vector.
//!
//! Two tests are provided. The per-link test bounds the scaled load each link
//! must carry. The decomposition test solves a linear program for the smallest
//! per-slot scheduling budget that delivers every class its arrival rate, given how
//! often each set of classes is servable; rates needing a budget of one or
//! more slot cannot be stabilized by any policy.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpOutcome, Relation};
use crate::matching::{enumerate_service_vectors, servable_classes, ClassSet, MatchingError, ServiceVector};
use crate::model::{NetworkSpec, SpecError};
use crate::scalar::{rational_text, Rational, Scalar};

/// Largest link count for which link states are enumerated.
pub const MAX_ENUMERATED_LINKS: usize = 16;
/// Margin separating the open region from its boundary.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;
/// Largest admissible rate residual of a reported certificate.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-8;
const MAX_LP_VARIABLES: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("{links} links exceed the link-state enumeration cap of {MAX_ENUMERATED_LINKS}")]
    TooManyLinks { links: usize },
    #[error("capacity program needs {vars} variables, above the cap of {MAX_LP_VARIABLES}")]
    TooLarge { vars: usize },
    #[error("solver failure: {0}")]
    Solver(#[from] LpError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// How many links each class selection blocks, scaled by service probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkLoads<S> {
    pub loads: Vec<S>,
    pub in_lambda: bool,
}

/// Per-link scaled loads `sum_{i uses r} lambda_i / (q_i prod_{j in L_i} p_j)`;
/// the rate vector is inside the per-link region iff every load is below one.
pub fn check_lambda<S: Scalar>(spec: &NetworkSpec, rates: &[f64]) -> Result<LinkLoads<S>, CapacityError> {
    spec.validate_rates(rates)?;
    let mut loads = vec![S::zero(); spec.num_links()];
    for (class, &rate) in spec.classes().iter().zip(rates) {
        let service = class.links.iter().fold(S::from_decimal(class.q), |acc, &j| {
            acc * S::from_decimal(spec.link_probs()[j])
        });
        let share = S::from_decimal(rate) / service;
        for &r in &class.links {
            loads[r] = loads[r].clone() + share.clone();
        }
    }
    let bound = S::one() - S::from_decimal(MEMBERSHIP_TOLERANCE);
    let in_lambda = loads.iter().all(|l| *l < bound);
    Ok(LinkLoads { loads, in_lambda })
}

/// Set of classes whose links all succeeded in a slot, with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ServabilityPattern<S> {
    pub classes: ClassSet,
    pub prob: S,
}

/// Distribution of the servable-class set induced by independent link
/// successes. Patterns of probability zero are omitted; output is ordered by
/// pattern bits.
pub fn servability_distribution<S: Scalar>(spec: &NetworkSpec) -> Result<Vec<ServabilityPattern<S>>, CapacityError> {
    let k = spec.num_links();
    if k > MAX_ENUMERATED_LINKS {
        return Err(CapacityError::TooManyLinks { links: k });
    }
    let up: Vec<S> = spec.link_probs().iter().map(|&p| S::from_decimal(p)).collect();
    let down: Vec<S> = up.iter().map(|p| S::one() - p.clone()).collect();
    let mut by_pattern: BTreeMap<ClassSet, S> = BTreeMap::new();
    for state in 0u64..(1 << k) {
        let prob = (0..k).fold(S::one(), |acc, j| {
            if state & (1 << j) != 0 {
                acc * up[j].clone()
            } else {
                acc * down[j].clone()
            }
        });
        if prob.is_zero() {
            continue;
        }
        let entry = by_pattern.entry(servable_classes(state, spec)).or_insert_with(S::zero);
        *entry = entry.clone() + prob;
    }
    Ok(by_pattern
        .into_iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(classes, prob)| ServabilityPattern { classes, prob })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Budget<S> {
    Finite(S),
    /// Some class with a positive rate is never servable.
    Unreachable {
        classes: Vec<usize>,
    },
}

impl<S: Scalar> Budget<S> {
    pub fn value(&self) -> Option<&S> {
        match self {
            Budget::Finite(b) => Some(b),
            Budget::Unreachable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Inside,
    Boundary,
    Outside,
}

/// Weight `v(s, sigma)` of serving `sigma` in slots whose servable set is `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateEntry<S> {
    pub pattern: ClassSet,
    pub service: ServiceVector,
    pub weight: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVerdict<S> {
    pub lambda_loads: Vec<S>,
    pub in_lambda: bool,
    pub budget: Budget<S>,
    /// Position of the budget relative to one.
    pub budget_region: Region,
    /// Budget strictly below one (by the membership tolerance).
    pub in_lambda_q: bool,
    pub certificate: Vec<CertificateEntry<S>>,
    /// Largest `|achieved rate - lambda_i|` over classes for the certificate.
    pub certificate_residual: S,
}

/// Solves the budget program
///
/// ```text
/// minimize B
///   sum_s P(s) q_i sum_{sigma in D, i in sigma, sigma <= s} v(s, sigma) = lambda_i   for all i
///   sum_sigma v(s, sigma) <= B                                                  for all s, P(s) > 0
///   v >= 0
/// ```
///
/// and combines it with [`check_lambda`] into a verdict.
pub fn lambda_q_budget<S: Scalar>(spec: &NetworkSpec, rates: &[f64]) -> Result<CapacityVerdict<S>, CapacityError> {
    let loads = check_lambda::<S>(spec, rates)?;
    let patterns = servability_distribution::<S>(spec)?;
    let vectors: Vec<ServiceVector> = enumerate_service_vectors(spec)?
        .into_iter()
        .filter(|v| !v.is_empty())
        .collect();
    let m = spec.num_classes();
    let lambda: Vec<S> = rates.iter().map(|&r| S::from_decimal(r)).collect();
    let q: Vec<S> = spec.classes().iter().map(|c| S::from_decimal(c.q)).collect();

    // Variables: one per (pattern, servable nonzero service vector), then B.
    let mut columns: Vec<(usize, ServiceVector)> = Vec::new();
    for (s, pattern) in patterns.iter().enumerate() {
        for &v in &vectors {
            if v.is_subset_of(pattern.classes) {
                columns.push((s, v));
            }
        }
    }
    let budget_var = columns.len();
    let num_vars = budget_var + 1;
    if num_vars > MAX_LP_VARIABLES {
        return Err(CapacityError::TooLarge { vars: num_vars });
    }

    let unreachable: Vec<usize> = (0..m)
        .filter(|&i| !lambda[i].is_zero() && !patterns.iter().any(|p| p.classes.contains(i)))
        .collect();
    if !unreachable.is_empty() {
        return Ok(CapacityVerdict {
            lambda_loads: loads.loads,
            in_lambda: loads.in_lambda,
            budget: Budget::Unreachable { classes: unreachable },
            budget_region: Region::Outside,
            in_lambda_q: false,
            certificate: Vec::new(),
            certificate_residual: S::zero(),
        });
    }

    let mut objective = vec![S::zero(); num_vars];
    objective[budget_var] = S::one();
    let mut lp = LinearProgram::minimize(objective);
    for i in 0..m {
        let terms: Vec<(usize, S)> = columns
            .iter()
            .enumerate()
            .filter(|(_, (_, v))| v.contains(i))
            .map(|(col, &(s, _))| (col, patterns[s].prob.clone() * q[i].clone()))
            .collect();
        lp.add_sparse(&terms, Relation::Eq, lambda[i].clone());
    }
    for s in 0..patterns.len() {
        let mut terms: Vec<(usize, S)> = columns
            .iter()
            .enumerate()
            .filter(|(_, (ps, _))| *ps == s)
            .map(|(col, _)| (col, S::one()))
            .collect();
        terms.push((budget_var, -S::one()));
        lp.add_sparse(&terms, Relation::Le, S::zero());
    }

    let solution = match lp.solve()? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible { residual } => {
            return Err(CapacityError::Numerical(format!(
                "budget program reported infeasible (residual {residual}) although every class is reachable"
            )))
        }
        LpOutcome::Unbounded => return Err(CapacityError::Numerical("budget program reported unbounded".into())),
    };

    let tol = S::tolerance();
    let certificate: Vec<CertificateEntry<S>> = columns
        .iter()
        .zip(&solution.values)
        .filter(|(_, w)| **w > tol)
        .map(|(&(s, v), w)| CertificateEntry {
            pattern: patterns[s].classes,
            service: v,
            weight: w.clone(),
        })
        .collect();
    let residual = certificate_residual(&certificate, &patterns, &q, &lambda);
    if residual > S::from_decimal(CERTIFICATE_TOLERANCE) {
        return Err(CapacityError::Numerical(format!(
            "certificate misses the rate vector by {residual}"
        )));
    }

    let mut budget = solution.objective;
    if budget < S::zero() && budget.is_negligible() {
        budget = S::zero();
    }
    let region = region_of(&budget);
    Ok(CapacityVerdict {
        lambda_loads: loads.loads,
        in_lambda: loads.in_lambda,
        in_lambda_q: region == Region::Inside,
        budget: Budget::Finite(budget),
        budget_region: region,
        certificate,
        certificate_residual: residual,
    })
}

fn region_of<S: Scalar>(budget: &S) -> Region {
    let tol = S::from_decimal(MEMBERSHIP_TOLERANCE);
    let gap = budget.clone() - S::one();
    if gap.abs() <= tol {
        Region::Boundary
    } else if gap < S::zero() {
        Region::Inside
    } else {
        Region::Outside
    }
}

/// Rates implied by a certificate: `sum_s P(s) q_i sum_{sigma ni i} v(s, sigma)`.
pub fn certificate_rates<S: Scalar>(
    certificate: &[CertificateEntry<S>],
    patterns: &[ServabilityPattern<S>],
    q: &[S],
) -> Vec<S> {
    let prob: BTreeMap<ClassSet, &S> = patterns.iter().map(|p| (p.classes, &p.prob)).collect();
    let mut rates = vec![S::zero(); q.len()];
    for entry in certificate {
        let p = prob.get(&entry.pattern).map(|&p| p.clone()).unwrap_or_else(S::zero);
        for i in entry.service.iter() {
            rates[i] = rates[i].clone() + p.clone() * q[i].clone() * entry.weight.clone();
        }
    }
    rates
}

fn certificate_residual<S: Scalar>(
    certificate: &[CertificateEntry<S>],
    patterns: &[ServabilityPattern<S>],
    q: &[S],
    lambda: &[S],
) -> S {
    certificate_rates(certificate, patterns, q)
        .into_iter()
        .zip(lambda)
        .map(|(r, l)| (r - l.clone()).abs())
        .fold(S::zero(), S::max_of)
}

/// Verdict computed in double precision.
pub type Verdict = CapacityVerdict<f64>;
/// Verdict computed in exact rational arithmetic.
pub type ExactVerdict = CapacityVerdict<Rational>;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CertificateReport {
    pub pattern: String,
    pub service: String,
    pub weight: f64,
}

/// JSON shape of a verdict.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerdictReport {
    pub lambda_loads: Vec<f64>,
    pub in_lambda: bool,
    /// `null` when some class with positive rate is never servable.
    pub budget: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unreachable_classes: Option<Vec<usize>>,
    pub budget_region: Region,
    pub in_lambda_q: bool,
    pub certificate: Vec<CertificateReport>,
    pub note: &'static str,
}

impl<S: Scalar> CapacityVerdict<S> {
    pub fn report(&self, num_classes: usize) -> VerdictReport {
        let (budget, unreachable) = match &self.budget {
            Budget::Finite(b) => (Some(b.to_f64_lossy()), None),
            Budget::Unreachable { classes } => (None, Some(classes.clone())),
        };
        VerdictReport {
            lambda_loads: self.lambda_loads.iter().map(Scalar::to_f64_lossy).collect(),
            in_lambda: self.in_lambda,
            budget,
            budget_exact: None,
            unreachable_classes: unreachable,
            budget_region: self.budget_region,
            in_lambda_q: self.in_lambda_q,
            certificate: self
                .certificate
                .iter()
                .map(|e| CertificateReport {
                    pattern: e.pattern.to_bit_string(num_classes),
                    service: e.service.to_bit_string(num_classes),
                    weight: e.weight.to_f64_lossy(),
                })
                .collect(),
            note: "necessary regions: a rate outside either region cannot be stabilized by any policy",
        }
    }
}

/// Verdict solved in both double precision and exact arithmetic. The exact
/// budget is reported; the two routes must agree to within the membership
/// tolerance or the call fails.
pub fn cross_checked_verdict(spec: &NetworkSpec, rates: &[f64]) -> Result<(Verdict, ExactVerdict), CapacityError> {
    let float = lambda_q_budget::<f64>(spec, rates)?;
    let exact = lambda_q_budget::<Rational>(spec, rates)?;
    let agree = match (&float.budget, &exact.budget) {
        (Budget::Finite(f), Budget::Finite(e)) => (f - e.to_f64_lossy()).abs() <= MEMBERSHIP_TOLERANCE,
        (Budget::Unreachable { classes: a }, Budget::Unreachable { classes: b }) => a == b,
        _ => false,
    };
    if !agree || float.in_lambda != exact.in_lambda {
        return Err(CapacityError::Numerical(format!(
            "floating and exact budgets disagree: {:?} vs {:?}",
            float.budget.value(),
            exact.budget.value().map(rational_text)
        )));
    }
    Ok((float, exact))
}

/// Report for the exact verdict, with the budget also given as a fraction.
pub fn exact_report(verdict: &ExactVerdict, num_classes: usize) -> VerdictReport {
    let mut report = verdict.report(num_classes);
    report.budget_exact = verdict.budget.value().map(rational_text);
    report
}
