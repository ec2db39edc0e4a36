//! Network and request-class description, the Bernoulli arrival process and
//! the JSON spec document that carries both.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of links a network may declare (link states are `u64` masks).
pub const MAX_LINKS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("malformed spec document: {0}")]
    Syntax(String),
    #[error("missing field `{field}`")]
    Missing { field: String },
    #[error("`{field}` = {value} is outside {range}")]
    OutOfRange {
        field: String,
        value: f64,
        range: &'static str,
    },
    #[error("`{field}` references link {link}, but valid link indices are 0..{num_links}")]
    LinkIndex {
        field: String,
        link: usize,
        num_links: usize,
    },
    #[error("class {class} has an empty link set")]
    EmptyLinks { class: usize },
    #[error("class {class} lists link {link} more than once")]
    DuplicateLink { class: usize, link: usize },
    #[error("classes {first} and {second} have identical link and user sets")]
    DuplicateClass { first: usize, second: usize },
    #[error("`{field}` has length {found}, expected {expected}")]
    Length {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("`{field}`: give either `q` or `q_factors`, not both")]
    Ambiguous { field: String },
    #[error("unsupported arrival kind `{0}` (only `bernoulli` is implemented)")]
    ArrivalKind(String),
    #[error("network must declare between 1 and {MAX_LINKS} links, got {0}")]
    LinkCount(usize),
    #[error("network must have at least one request class")]
    NoClasses,
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

/// A request type: a demand stream for shared entanglement among `users`,
/// served by consuming one link-level entanglement on every link in `links`.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestClass {
    pub id: usize,
    pub name: String,
    pub users: Vec<String>,
    /// Sorted, duplicate-free link indices.
    pub links: Vec<usize>,
    /// Joint success probability of the swapping/GHZ measurements.
    pub q: f64,
    /// Per-node factors `q` was computed from, if it was given that way.
    pub q_factors: Option<Vec<f64>>,
    link_mask: u64,
}

impl RequestClass {
    pub fn new(name: impl Into<String>, users: &[&str], links: &[usize], q: f64) -> Self {
        let mut sorted = links.to_vec();
        sorted.sort_unstable();
        Self {
            id: 0,
            name: name.into(),
            users: users.iter().map(|u| u.to_string()).collect(),
            link_mask: mask_of(&sorted),
            links: sorted,
            q,
            q_factors: None,
        }
    }

    /// Builds a class whose `q` is the product of per-node measurement factors.
    pub fn with_factors(name: impl Into<String>, users: &[&str], links: &[usize], factors: &[f64]) -> Self {
        let mut class = Self::new(name, users, links, product(factors));
        class.q_factors = Some(factors.to_vec());
        class
    }

    /// Bit `j` is set iff link `j` belongs to this class.
    pub fn link_mask(&self) -> u64 {
        self.link_mask
    }

    pub fn uses_link(&self, link: usize) -> bool {
        link < 64 && self.link_mask & (1 << link) != 0
    }
}

fn mask_of(links: &[usize]) -> u64 {
    links
        .iter()
        .filter(|&&l| l < MAX_LINKS)
        .fold(0u64, |m, &l| m | (1 << l))
}

fn product(factors: &[f64]) -> f64 {
    factors.iter().product()
}

fn check_prob(field: impl FnOnce() -> String, value: f64, allow_zero: bool) -> Result<(), SpecError> {
    let ok = if allow_zero {
        (0.0..=1.0).contains(&value)
    } else {
        value > 0.0 && value <= 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(SpecError::OutOfRange {
            field: field(),
            value,
            range: if allow_zero { "[0, 1]" } else { "(0, 1]" },
        })
    }
}

/// Links and request classes. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    link_probs: Vec<f64>,
    link_names: Option<Vec<String>>,
    classes: Vec<RequestClass>,
}

impl NetworkSpec {
    pub fn new(link_probs: Vec<f64>, classes: Vec<RequestClass>) -> Result<Self, SpecError> {
        Self::with_link_names(link_probs, None, classes)
    }

    pub fn with_link_names(
        link_probs: Vec<f64>,
        link_names: Option<Vec<String>>,
        mut classes: Vec<RequestClass>,
    ) -> Result<Self, SpecError> {
        let num_links = link_probs.len();
        if num_links == 0 || num_links > MAX_LINKS {
            return Err(SpecError::LinkCount(num_links));
        }
        for (j, &p) in link_probs.iter().enumerate() {
            check_prob(|| format!("link_probs[{j}]"), p, false)?;
        }
        if let Some(names) = &link_names {
            if names.len() != num_links {
                return Err(SpecError::Length {
                    field: "link_names".into(),
                    expected: num_links,
                    found: names.len(),
                });
            }
        }
        if classes.is_empty() {
            return Err(SpecError::NoClasses);
        }
        for (i, class) in classes.iter_mut().enumerate() {
            class.id = i;
            class.links.sort_unstable();
            if class.links.is_empty() {
                return Err(SpecError::EmptyLinks { class: i });
            }
            for (pos, &link) in class.links.iter().enumerate() {
                if link >= num_links {
                    return Err(SpecError::LinkIndex {
                        field: format!("classes[{i}].links"),
                        link,
                        num_links,
                    });
                }
                if pos > 0 && class.links[pos - 1] == link {
                    return Err(SpecError::DuplicateLink { class: i, link });
                }
            }
            class.link_mask = mask_of(&class.links);
            if let Some(factors) = &class.q_factors {
                for (k, &f) in factors.iter().enumerate() {
                    check_prob(|| format!("classes[{i}].q_factors[{k}]"), f, false)?;
                }
                class.q = product(factors);
            }
            check_prob(|| format!("classes[{i}].q"), class.q, false)?;
        }
        let keys: Vec<(u64, BTreeSet<&str>)> = classes
            .iter()
            .map(|c| (c.link_mask, c.users.iter().map(String::as_str).collect()))
            .collect();
        for second in 1..keys.len() {
            if let Some(first) = (0..second).find(|&first| keys[first] == keys[second]) {
                return Err(SpecError::DuplicateClass { first, second });
            }
        }
        Ok(Self {
            link_probs,
            link_names,
            classes,
        })
    }

    pub fn num_links(&self) -> usize {
        self.link_probs.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn link_probs(&self) -> &[f64] {
        &self.link_probs
    }

    pub fn link_names(&self) -> Option<&[String]> {
        self.link_names.as_deref()
    }

    pub fn classes(&self) -> &[RequestClass] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &RequestClass {
        &self.classes[i]
    }

    /// `q_i * prod_{j in L_i} p_j`: probability a selected class-`i` request is
    /// served in a slot, given its queue is non-empty.
    pub fn service_probability(&self, i: usize) -> f64 {
        let class = &self.classes[i];
        class.q * class.links.iter().map(|&j| self.link_probs[j]).product::<f64>()
    }

    /// Checks a rate vector against this network's class count.
    pub fn validate_rates(&self, rates: &[f64]) -> Result<(), SpecError> {
        if rates.len() != self.num_classes() {
            return Err(SpecError::Length {
                field: "arrivals.rates".into(),
                expected: self.num_classes(),
                found: rates.len(),
            });
        }
        for (i, &r) in rates.iter().enumerate() {
            check_prob(|| format!("arrivals.rates[{i}]"), r, true)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalKind {
    /// At most one request per class per slot, with probability `rate`.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSpec {
    pub kind: ArrivalKind,
    pub rates: Vec<f64>,
}

impl ArrivalSpec {
    pub fn bernoulli(rates: Vec<f64>) -> Self {
        Self {
            kind: ArrivalKind::Bernoulli,
            rates,
        }
    }
}

// Wire format. Every field is optional here so that validation can name the
// missing one instead of surfacing a serde message.
#[derive(Debug, Default, Serialize, Deserialize)]
struct RawDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    num_links: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    link_probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    link_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<RawClass>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arrivals: Option<RawArrivals>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawClass {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    users: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    links: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_factors: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawArrivals {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<Vec<f64>>,
}

fn require<T>(value: Option<T>, field: impl Into<String>) -> Result<T, SpecError> {
    value.ok_or_else(|| SpecError::Missing { field: field.into() })
}

/// Parses and validates a spec document.
pub fn parse_spec(text: &str) -> Result<(NetworkSpec, ArrivalSpec), SpecError> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))?;
    let num_links = require(raw.num_links, "num_links")?;
    let link_probs = require(raw.link_probs, "link_probs")?;
    if link_probs.len() != num_links {
        return Err(SpecError::Length {
            field: "link_probs".into(),
            expected: num_links,
            found: link_probs.len(),
        });
    }
    let raw_classes = require(raw.classes, "classes")?;
    let mut classes = Vec::with_capacity(raw_classes.len());
    for (i, rc) in raw_classes.into_iter().enumerate() {
        let links = require(rc.links, format!("classes[{i}].links"))?;
        let users = rc.users.unwrap_or_default();
        let users: Vec<&str> = users.iter().map(String::as_str).collect();
        let name = rc.name.unwrap_or_else(|| format!("class{i}"));
        let class = match (rc.q, rc.q_factors) {
            (Some(_), Some(_)) => {
                return Err(SpecError::Ambiguous {
                    field: format!("classes[{i}]"),
                })
            }
            (Some(q), None) => RequestClass::new(name, &users, &links, q),
            (None, Some(f)) => RequestClass::with_factors(name, &users, &links, &f),
            (None, None) => {
                return Err(SpecError::Missing {
                    field: format!("classes[{i}].q"),
                })
            }
        };
        classes.push(class);
    }
    let network = NetworkSpec::with_link_names(link_probs, raw.link_names, classes)?;

    let arrivals = require(raw.arrivals, "arrivals")?;
    let kind = require(arrivals.kind, "arrivals.kind")?;
    if kind != "bernoulli" {
        return Err(SpecError::ArrivalKind(kind));
    }
    let rates = require(arrivals.rates, "arrivals.rates")?;
    network.validate_rates(&rates)?;
    Ok((network, ArrivalSpec::bernoulli(rates)))
}

/// Renders a network and its arrivals in the spec document format.
pub fn serialize_spec(network: &NetworkSpec, arrivals: &ArrivalSpec) -> String {
    let raw = RawDocument {
        num_links: Some(network.num_links()),
        link_probs: Some(network.link_probs.clone()),
        link_names: network.link_names.clone(),
        classes: Some(
            network
                .classes
                .iter()
                .map(|c| RawClass {
                    name: Some(c.name.clone()),
                    users: Some(c.users.clone()),
                    links: Some(c.links.clone()),
                    q: if c.q_factors.is_some() { None } else { Some(c.q) },
                    q_factors: c.q_factors.clone(),
                })
                .collect(),
        ),
        arrivals: Some(RawArrivals {
            kind: Some(
                match arrivals.kind {
                    ArrivalKind::Bernoulli => "bernoulli",
                }
                .into(),
            ),
            rates: Some(arrivals.rates.clone()),
        }),
    };
    serde_json::to_string_pretty(&raw).expect("spec serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWITCH3: &str = r#"{
        "num_links": 3,
        "link_probs": [1.0, 1.0, 1.0],
        "classes": [
            {"name": "u12", "users": ["1", "2"], "links": [0, 1], "q": 1.0},
            {"name": "u23", "users": ["2", "3"], "links": [1, 2], "q": 1.0},
            {"name": "u13", "users": ["1", "3"], "links": [0, 2], "q": 1.0}
        ],
        "arrivals": {"kind": "bernoulli", "rates": [0.25, 0.25, 0.25]}
    }"#;

    #[test]
    fn parses_three_link_switch() {
        let (net, arr) = parse_spec(SWITCH3).unwrap();
        assert_eq!(net.num_links(), 3);
        assert_eq!(net.num_classes(), 3);
        assert_eq!(net.class(0).links, vec![0, 1]);
        assert_eq!(net.class(1).links, vec![1, 2]);
        assert_eq!(net.class(2).links, vec![0, 2]);
        assert_eq!(net.class(2).id, 2);
        assert_eq!(arr.rates, vec![0.25; 3]);
    }

    #[test]
    fn rejects_out_of_range_link_probability() {
        let text = SWITCH3.replace("[1.0, 1.0, 1.0]", "[1.0, 1.0, 1.3]");
        match parse_spec(&text).unwrap_err() {
            SpecError::OutOfRange { field, value, .. } => {
                assert_eq!(field, "link_probs[2]");
                assert_eq!(value, 1.3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let zero = SWITCH3.replace("[1.0, 1.0, 1.0]", "[0.0, 1.0, 1.0]");
        assert!(matches!(parse_spec(&zero), Err(SpecError::OutOfRange { .. })));
    }

    #[test]
    fn rejects_link_index_equal_to_link_count() {
        let probs = vec![0.9; 7];
        let bad = NetworkSpec::new(probs.clone(), vec![RequestClass::new("a", &[], &[0, 7], 1.0)]);
        assert_eq!(
            bad.unwrap_err(),
            SpecError::LinkIndex {
                field: "classes[0].links".into(),
                link: 7,
                num_links: 7
            }
        );
        assert!(NetworkSpec::new(probs, vec![RequestClass::new("a", &[], &[0, 6], 1.0)]).is_ok());
    }

    #[test]
    fn rejects_empty_link_set_and_duplicates() {
        let err = NetworkSpec::new(vec![1.0], vec![RequestClass::new("a", &[], &[], 1.0)]).unwrap_err();
        assert_eq!(err, SpecError::EmptyLinks { class: 0 });

        let err = NetworkSpec::new(
            vec![1.0, 1.0],
            vec![
                RequestClass::new("a", &["x", "y"], &[0, 1], 1.0),
                RequestClass::new("b", &["y", "x"], &[1, 0], 0.5),
            ],
        )
        .unwrap_err();
        assert_eq!(err, SpecError::DuplicateClass { first: 0, second: 1 });

        // Same links but different users is a distinct class.
        assert!(NetworkSpec::new(
            vec![1.0, 1.0],
            vec![
                RequestClass::new("a", &["x", "y"], &[0, 1], 1.0),
                RequestClass::new("b", &["x", "z"], &[0, 1], 1.0),
            ],
        )
        .is_ok());

        let err = NetworkSpec::new(vec![1.0, 1.0], vec![RequestClass::new("a", &[], &[1, 1], 1.0)]).unwrap_err();
        assert_eq!(err, SpecError::DuplicateLink { class: 0, link: 1 });
    }

    #[test]
    fn missing_fields_are_named() {
        let text = SWITCH3.replace(r#""links": [1, 2], "#, "");
        assert_eq!(
            parse_spec(&text).unwrap_err(),
            SpecError::Missing {
                field: "classes[1].links".into()
            }
        );
        let text = SWITCH3.replace(r#", "q": 1.0}"#, "}");
        assert!(matches!(parse_spec(&text), Err(SpecError::Missing { field }) if field == "classes[0].q"));
        assert!(matches!(parse_spec("{}"), Err(SpecError::Missing { field }) if field == "num_links"));
        assert!(matches!(parse_spec("{"), Err(SpecError::Syntax(_))));
    }

    #[test]
    fn arrival_validation() {
        let text = SWITCH3.replace("[0.25, 0.25, 0.25]", "[0.25, 1.5, 0.25]");
        assert!(matches!(parse_spec(&text), Err(SpecError::OutOfRange { field, .. }) if field == "arrivals.rates[1]"));
        let text = SWITCH3.replace("[0.25, 0.25, 0.25]", "[0.25]");
        assert!(matches!(parse_spec(&text), Err(SpecError::Length { .. })));
        let text = SWITCH3.replace("bernoulli", "poisson");
        assert_eq!(parse_spec(&text).unwrap_err(), SpecError::ArrivalKind("poisson".into()));
    }

    #[test]
    fn q_factors_multiply() {
        let text = SWITCH3.replace(r#""q": 1.0}"#, r#""q_factors": [0.9, 0.5, 0.8]}"#);
        let (net, _) = parse_spec(&text).unwrap();
        assert_eq!(net.class(0).q, 0.9 * 0.5 * 0.8);
        assert_eq!(net.class(0).q_factors.as_deref(), Some(&[0.9, 0.5, 0.8][..]));
        let both = SWITCH3.replace(r#""q": 1.0}"#, r#""q": 1.0, "q_factors": [0.9]}"#);
        assert!(matches!(parse_spec(&both), Err(SpecError::Ambiguous { .. })));
    }

    #[test]
    fn serialize_round_trips() {
        let (net, arr) = parse_spec(SWITCH3).unwrap();
        let text = serialize_spec(&net, &arr);
        assert_eq!(parse_spec(&text).unwrap(), (net, arr));
    }

    #[test]
    fn service_probability_is_q_times_link_product() {
        let net = NetworkSpec::new(vec![0.5, 0.4, 0.9], vec![RequestClass::new("a", &[], &[0, 2], 0.8)]).unwrap();
        assert!((net.service_probability(0) - 0.8 * 0.5 * 0.9).abs() < 1e-15);
        assert!(net.class(0).uses_link(2));
        assert!(!net.class(0).uses_link(1));
    }
}
