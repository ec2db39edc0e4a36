//! Figure reproduction table: which network, policy and seed each figure
//! uses, and the qualitative outcome it shows.

use crate::model::{ArrivalSpec, NetworkSpec, SpecError};
use crate::policy::PolicyKind;
use crate::scenario::builtin_scenario;
use crate::sim::{SimConfig, TrendVerdict, DEFAULT_SLOTS};

#[derive(Debug, Clone, PartialEq)]
pub struct ReproScenario {
    pub name: &'static str,
    pub network: &'static str,
    pub policy: PolicyKind,
    pub seed: u64,
    pub expected: TrendVerdict,
}

use PolicyKind::{Lqf, MaxWeight};
use TrendVerdict::{Growing, StableLooking};

pub const REPRO_SCENARIOS: [ReproScenario; 6] = [
    ReproScenario {
        name: "fig3",
        network: "switch4-unstable",
        policy: MaxWeight,
        seed: 3,
        expected: Growing,
    },
    ReproScenario {
        name: "fig4",
        network: "switch4-stable",
        policy: MaxWeight,
        seed: 4,
        expected: StableLooking,
    },
    ReproScenario {
        name: "fig5",
        network: "net5-low",
        policy: MaxWeight,
        seed: 5,
        expected: StableLooking,
    },
    ReproScenario {
        name: "fig6",
        network: "net5-low",
        policy: Lqf,
        seed: 6,
        expected: StableLooking,
    },
    ReproScenario {
        name: "fig7a",
        network: "net5-high",
        policy: MaxWeight,
        seed: 71,
        expected: StableLooking,
    },
    ReproScenario {
        name: "fig7b",
        network: "net5-high",
        policy: Lqf,
        seed: 72,
        expected: Growing,
    },
];

pub fn repro_scenario(name: &str) -> Result<&'static ReproScenario, SpecError> {
    REPRO_SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| SpecError::UnknownScenario(name.to_string()))
}

impl ReproScenario {
    pub fn network(&self) -> (NetworkSpec, ArrivalSpec) {
        builtin_scenario(self.network).expect("built-in scenarios are valid")
    }

    pub fn config(&self, slots: Option<u64>) -> SimConfig {
        SimConfig::new(self.policy, slots.unwrap_or(DEFAULT_SLOTS), self.seed)
    }
}
