//! Built-in networks used by the reproduction experiments.
//!
//! Link indices are 0-based; the display names carry the 1-based labels
//! (`l1`, `l2`, ...) used in figures.

use crate::model::{ArrivalSpec, NetworkSpec, RequestClass, SpecError};

pub const SCENARIO_NAMES: [&str; 5] = [
    "switch3-symmetric",
    "switch4-unstable",
    "switch4-stable",
    "net5-low",
    "net5-high",
];

/// Symmetric arrival rate used when `switch3-symmetric` is requested by name.
pub const SWITCH3_DEFAULT_RATE: f64 = 0.25;

fn link_names(k: usize) -> Option<Vec<String>> {
    Some((1..=k).map(|j| format!("l{j}")).collect())
}

/// Three users on one switch, one class per user pair, `p = q = 1`, every
/// class arriving at rate `a`.
pub fn switch3_symmetric(a: f64) -> Result<(NetworkSpec, ArrivalSpec), SpecError> {
    let classes = vec![
        RequestClass::new("U1", &["1", "2"], &[0, 1], 1.0),
        RequestClass::new("U2", &["2", "3"], &[1, 2], 1.0),
        RequestClass::new("U3", &["1", "3"], &[0, 2], 1.0),
    ];
    let net = NetworkSpec::with_link_names(vec![1.0; 3], link_names(3), classes)?;
    let rates = vec![a; 3];
    net.validate_rates(&rates)?;
    Ok((net, ArrivalSpec::bernoulli(rates)))
}

/// Four users on one switch with all six user-pair classes, `p = q = 1`.
pub fn switch4(rates: [f64; 6]) -> Result<(NetworkSpec, ArrivalSpec), SpecError> {
    let pairs = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];
    let classes = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let (ua, ub) = (a.to_string(), b.to_string());
            RequestClass::new(format!("U{}", i + 1), &[&ua, &ub], &[a - 1, b - 1], 1.0)
        })
        .collect();
    let net = NetworkSpec::with_link_names(vec![1.0; 4], link_names(4), classes)?;
    net.validate_rates(&rates)?;
    Ok((net, ArrivalSpec::bernoulli(rates.to_vec())))
}

/// Five users, three switches, seven links; the two classes share `l3`.
pub fn net5(rates: [f64; 2]) -> Result<(NetworkSpec, ArrivalSpec), SpecError> {
    let classes = vec![
        RequestClass::new("U1", &["1", "2", "3"], &[0, 1, 2, 5], 0.75),
        RequestClass::new("U2", &["3", "4", "5"], &[2, 3, 4, 6], 0.8),
    ];
    let net = NetworkSpec::with_link_names(vec![0.7, 0.8, 0.6, 0.9, 0.9, 0.9, 0.8], link_names(7), classes)?;
    net.validate_rates(&rates)?;
    Ok((net, ArrivalSpec::bernoulli(rates.to_vec())))
}

pub fn builtin_scenario(name: &str) -> Result<(NetworkSpec, ArrivalSpec), SpecError> {
    match name {
        "switch3-symmetric" => switch3_symmetric(SWITCH3_DEFAULT_RATE),
        "switch4-unstable" => switch4([0.3, 0.3, 0.3, 0.2, 0.45, 0.2]),
        // Rates whose best decomposition has budget 0.95.
        "switch4-stable" => switch4([0.3, 0.3, 0.2, 0.2, 0.45, 0.2]),
        "net5-low" => net5([0.095, 0.165]),
        "net5-high" => net5([0.105, 0.175]),
        other => Err(SpecError::UnknownScenario(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in SCENARIO_NAMES {
            let (net, arr) = builtin_scenario(name).unwrap();
            net.validate_rates(&arr.rates).unwrap();
        }
    }

    #[test]
    fn net5_low_parameters() {
        let (net, arr) = builtin_scenario("net5-low").unwrap();
        assert_eq!(net.num_links(), 7);
        assert_eq!(net.num_classes(), 2);
        assert_eq!(net.link_probs(), &[0.7, 0.8, 0.6, 0.9, 0.9, 0.9, 0.8]);
        assert_eq!(net.class(0).q, 0.75);
        assert_eq!(net.class(1).q, 0.8);
        assert_eq!(arr.rates, vec![0.095, 0.165]);
        assert_eq!(net.class(0).links, vec![0, 1, 2, 5]);
        assert_eq!(net.class(1).links, vec![2, 3, 4, 6]);
    }

    #[test]
    fn switch4_unstable_parameters() {
        let (net, arr) = builtin_scenario("switch4-unstable").unwrap();
        assert_eq!(arr.rates, vec![0.3, 0.3, 0.3, 0.2, 0.45, 0.2]);
        assert!(net.link_probs().iter().all(|&p| p == 1.0));
        assert!(net.classes().iter().all(|c| c.q == 1.0));
        assert_eq!(net.class(4).links, vec![1, 3]);
        assert_eq!(net.class(4).users, vec!["2", "4"]);
    }

    #[test]
    fn switch3_symmetric_parameters() {
        let (net, arr) = switch3_symmetric(0.25).unwrap();
        assert_eq!(arr.rates, vec![0.25; 3]);
        assert!(net.link_probs().iter().all(|&p| p == 1.0));
        assert!(switch3_symmetric(1.5).is_err());
    }

    #[test]
    fn unknown_name() {
        assert_eq!(
            builtin_scenario("fig9").unwrap_err(),
            SpecError::UnknownScenario("fig9".into())
        );
    }
}
