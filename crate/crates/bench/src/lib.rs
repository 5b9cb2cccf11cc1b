//! Shared fixtures for the criterion benchmarks.

use keychain_core::gen;
use keychain_core::laminar::AntichainValuation;
use keychain_core::obm::WobmInstance;
use keychain_core::{build_information_forest, InformationForest, ScenarioInstance};

/// Scenario instance with `count` scenarios over `n` keys and up to `m` rounds.
pub fn scenarios(n: usize, m: usize, count: usize) -> ScenarioInstance {
    gen::random_scenarios(n, m, count, 42).expect("valid generator bounds")
}

pub fn forest(n: usize, m: usize, count: usize) -> InformationForest {
    build_information_forest(&scenarios(n, m, count))
}

pub fn valuation(elements: usize, k: usize) -> AntichainValuation {
    gen::random_laminar_valuation(elements, elements, k, 42).expect("valid generator bounds")
}

pub fn wobm(offline: usize, arrivals: usize, support: usize) -> WobmInstance {
    gen::random_wobm(offline, arrivals, support, 42).expect("valid generator bounds")
}
