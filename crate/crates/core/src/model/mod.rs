//! Core domain types shared by every solver: keychains, the known-order,
//! scenario and multi-key instances, and deterministic exploitative
//! policies.
//!
//! Keys are 0-based `usize` ids. A chain is stored in canonical form, as a
//! sorted list of distinct key ids, so that information sets can be compared
//! structurally.

mod eval;
mod forest;
mod simulate;

pub use eval::{
    eval_known_order_policy, eval_scenario_policy, validate_admissible, AdmissibilityViolation,
};
pub use forest::{build_information_forest, InformationForest, PrefixForest};
pub use simulate::{
    simulate_known_order, simulate_scenarios, trial_rng, ScenarioSampler, SimulationReport,
    TrialTrace,
};

use serde::{Deserialize, Serialize};

use crate::error::{KeychainError, Result};

/// Tolerance for sum-to-one checks on probability vectors.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A keychain in canonical form: nonempty, sorted, duplicate-free key ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Chain(Vec<usize>);

impl Chain {
    pub fn new(keys: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut keys: Vec<usize> = keys.into_iter().collect();
        keys.sort_unstable();
        keys.dedup();
        if keys.is_empty() {
            return Err(KeychainError::InvalidInstance("empty keychain".into()));
        }
        Ok(Chain(keys))
    }

    #[inline]
    pub fn contains(&self, key: usize) -> bool {
        self.0.binary_search(&key).is_ok()
    }

    #[inline]
    pub fn keys(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest key id on the chain.
    pub fn max_key(&self) -> usize {
        *self.0.last().expect("chains are nonempty")
    }
}

impl TryFrom<Vec<usize>> for Chain {
    type Error = KeychainError;

    fn try_from(keys: Vec<usize>) -> Result<Self> {
        Chain::new(keys)
    }
}

impl From<Chain> for Vec<usize> {
    fn from(chain: Chain) -> Self {
        chain.0
    }
}

/// Builds a chain sequence from nested slices. Panics on an empty chain;
/// meant for literals in generators and tests.
pub fn chains(lists: &[&[usize]]) -> Vec<Chain> {
    lists
        .iter()
        .map(|l| Chain::new(l.iter().copied()).expect("nonempty chain literal"))
        .collect()
}

pub fn check_distribution(probs: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(KeychainError::InvalidInstance(format!(
            "{what} contains invalid probability {bad}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(KeychainError::ProbabilitySum { sum });
    }
    Ok(())
}

fn check_chain_keys(chains: &[Chain], num_keys: usize) -> Result<()> {
    for (t, c) in chains.iter().enumerate() {
        if c.max_key() >= num_keys {
            return Err(KeychainError::InvalidInstance(format!(
                "chain {t} references key {} but there are only {num_keys} keys",
                c.max_key()
            )));
        }
    }
    Ok(())
}

/// Fixed, known chain order with a single correct key drawn from `prior`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnownOrderRepr", into = "KnownOrderRepr")]
pub struct KnownOrderInstance {
    num_keys: usize,
    chains: Vec<Chain>,
    prior: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KnownOrderRepr {
    num_keys: usize,
    chains: Vec<Chain>,
    prior: Vec<f64>,
}

impl TryFrom<KnownOrderRepr> for KnownOrderInstance {
    type Error = KeychainError;
    fn try_from(r: KnownOrderRepr) -> Result<Self> {
        KnownOrderInstance::new(r.num_keys, r.chains, r.prior)
    }
}

impl From<KnownOrderInstance> for KnownOrderRepr {
    fn from(i: KnownOrderInstance) -> Self {
        KnownOrderRepr {
            num_keys: i.num_keys,
            chains: i.chains,
            prior: i.prior,
        }
    }
}

impl KnownOrderInstance {
    pub fn new(num_keys: usize, chains: Vec<Chain>, prior: Vec<f64>) -> Result<Self> {
        if chains.is_empty() {
            return Err(KeychainError::InvalidInstance("no keychains".into()));
        }
        if prior.len() != num_keys {
            return Err(KeychainError::InvalidInstance(format!(
                "prior has {} entries for {num_keys} keys",
                prior.len()
            )));
        }
        check_distribution(&prior, "prior")?;
        check_chain_keys(&chains, num_keys)?;
        Ok(KnownOrderInstance {
            num_keys,
            chains,
            prior,
        })
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    pub fn num_rounds(&self) -> usize {
        self.chains.len()
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Number of chains from round `t` onwards that contain `key`.
    pub fn future_count(&self, key: usize, t: usize) -> usize {
        self.chains[t..].iter().filter(|c| c.contains(key)).count()
    }

    /// `r[k][t]`: expected reward of testing key `k` for the first time at round `t`.
    pub fn reward_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.num_keys)
            .map(|k| {
                (0..self.num_rounds())
                    .map(|t| {
                        if self.chains[t].contains(k) {
                            self.prior[k] * self.future_count(k, t) as f64
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// One scenario per key with positive prior mass, all sharing the chain
    /// sequence. In the embedded forest the information set of round `t` has
    /// id `t`, so round-indexed policies carry over unchanged.
    pub fn to_scenarios(&self) -> ScenarioInstance {
        let scenarios = (0..self.num_keys)
            .filter(|&k| self.prior[k] > 0.0)
            .map(|k| Scenario {
                chains: self.chains.clone(),
                correct_key: k,
                prob: self.prior[k],
            })
            .collect();
        ScenarioInstance::new(self.num_keys, scenarios)
            .expect("embedding of a valid known-order instance is valid")
    }

    /// Reinterprets a round-indexed policy as a policy on the embedded forest.
    pub fn embed_policy(&self, policy: &Policy) -> Policy {
        Policy {
            kind: PolicyKind::Scenario,
            assignment: policy.assignment.clone(),
        }
    }
}

/// One joint realization of (chain sequence, correct key).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub chains: Vec<Chain>,
    pub correct_key: usize,
    pub prob: f64,
}

/// Explicit prior over finitely many scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct ScenarioInstance {
    num_keys: usize,
    scenarios: Vec<Scenario>,
    merged_duplicates: usize,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    num_keys: usize,
    scenarios: Vec<Scenario>,
}

impl TryFrom<ScenarioRepr> for ScenarioInstance {
    type Error = KeychainError;
    fn try_from(r: ScenarioRepr) -> Result<Self> {
        ScenarioInstance::new(r.num_keys, r.scenarios)
    }
}

impl From<ScenarioInstance> for ScenarioRepr {
    fn from(i: ScenarioInstance) -> Self {
        ScenarioRepr {
            num_keys: i.num_keys,
            scenarios: i.scenarios,
        }
    }
}

impl ScenarioInstance {
    /// Validates and canonicalizes the scenarios. Exact duplicates (same
    /// chains and correct key) are merged by summing their probabilities;
    /// see [`ScenarioInstance::merged_duplicates`].
    pub fn new(num_keys: usize, scenarios: Vec<Scenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(KeychainError::InvalidInstance("no scenarios".into()));
        }
        let probs: Vec<f64> = scenarios.iter().map(|s| s.prob).collect();
        check_distribution(&probs, "scenario probabilities")?;
        let mut merged: Vec<Scenario> = Vec::with_capacity(scenarios.len());
        let mut index = std::collections::HashMap::new();
        let mut merged_duplicates = 0;
        for (i, s) in scenarios.into_iter().enumerate() {
            if s.chains.is_empty() {
                return Err(KeychainError::InvalidInstance(format!(
                    "scenario {i} has no keychains"
                )));
            }
            if s.correct_key >= num_keys {
                return Err(KeychainError::InvalidInstance(format!(
                    "scenario {i} has correct key {} but there are only {num_keys} keys",
                    s.correct_key
                )));
            }
            check_chain_keys(&s.chains, num_keys)?;
            match index.get(&(s.chains.clone(), s.correct_key)) {
                Some(&j) => {
                    let target: &mut Scenario = &mut merged[j];
                    target.prob += s.prob;
                    merged_duplicates += 1;
                }
                None => {
                    index.insert((s.chains.clone(), s.correct_key), merged.len());
                    merged.push(s);
                }
            }
        }
        Ok(ScenarioInstance {
            num_keys,
            scenarios: merged,
            merged_duplicates,
        })
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Longest chain sequence over all scenarios.
    pub fn max_rounds(&self) -> usize {
        self.scenarios
            .iter()
            .map(|s| s.chains.len())
            .max()
            .unwrap_or(0)
    }

    /// How many input scenarios were folded into an earlier identical one.
    pub fn merged_duplicates(&self) -> usize {
        self.merged_duplicates
    }

    /// Same scenarios under a different prior.
    pub fn with_probs(&self, probs: &[f64]) -> Result<Self> {
        if probs.len() != self.scenarios.len() {
            return Err(KeychainError::InvalidInput(format!(
                "{} probabilities for {} scenarios",
                probs.len(),
                self.scenarios.len()
            )));
        }
        check_distribution(probs, "scenario probabilities")?;
        let mut out = self.clone();
        for (s, &p) in out.scenarios.iter_mut().zip(probs) {
            s.prob = p;
        }
        Ok(out)
    }
}

/// How correct keys are drawn when several keys may open the lock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CorrectnessModel {
    /// Keys `2i` and `2i + 1` form pair `i`; exactly one of them is correct,
    /// key `2i` with probability `pair_probs[i]`.
    Dueling { pair_probs: Vec<f64> },
    /// Each key is correct independently with its own probability.
    Independent { accept_probs: Vec<f64> },
}

/// Known chain order with possibly many correct keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultiKeyRepr", into = "MultiKeyRepr")]
pub struct MultiKeyInstance {
    num_keys: usize,
    chains: Vec<Chain>,
    model: CorrectnessModel,
}

#[derive(Serialize, Deserialize)]
struct MultiKeyRepr {
    num_keys: usize,
    chains: Vec<Chain>,
    model: CorrectnessModel,
}

impl TryFrom<MultiKeyRepr> for MultiKeyInstance {
    type Error = KeychainError;
    fn try_from(r: MultiKeyRepr) -> Result<Self> {
        MultiKeyInstance::new(r.num_keys, r.chains, r.model)
    }
}

impl From<MultiKeyInstance> for MultiKeyRepr {
    fn from(i: MultiKeyInstance) -> Self {
        MultiKeyRepr {
            num_keys: i.num_keys,
            chains: i.chains,
            model: i.model,
        }
    }
}

impl MultiKeyInstance {
    pub fn new(num_keys: usize, chains: Vec<Chain>, model: CorrectnessModel) -> Result<Self> {
        if chains.is_empty() {
            return Err(KeychainError::InvalidInstance("no keychains".into()));
        }
        check_chain_keys(&chains, num_keys)?;
        let probs = match &model {
            CorrectnessModel::Dueling { pair_probs } => {
                if !num_keys.is_multiple_of(2) {
                    return Err(KeychainError::InvalidInstance(
                        "dueling pairs need an even number of keys".into(),
                    ));
                }
                if pair_probs.len() != num_keys / 2 {
                    return Err(KeychainError::InvalidInstance(format!(
                        "{} pair probabilities for {} pairs",
                        pair_probs.len(),
                        num_keys / 2
                    )));
                }
                pair_probs
            }
            CorrectnessModel::Independent { accept_probs } => {
                if accept_probs.len() != num_keys {
                    return Err(KeychainError::InvalidInstance(format!(
                        "{} acceptance probabilities for {num_keys} keys",
                        accept_probs.len()
                    )));
                }
                accept_probs
            }
        };
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(KeychainError::InvalidInstance(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Ok(MultiKeyInstance {
            num_keys,
            chains,
            model,
        })
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn model(&self) -> &CorrectnessModel {
        &self.model
    }
}

/// Whether a policy is indexed by round or by information set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    KnownOrder,
    Scenario,
}

/// Deterministic exploitative policy: the key tested for the first time at
/// each round (known order) or information set (scenarios), `None` for NULL.
/// Once the correct key is found it is replayed whenever it is on the chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub kind: PolicyKind,
    pub assignment: Vec<Option<usize>>,
}

impl Policy {
    pub fn null(kind: PolicyKind, len: usize) -> Self {
        Policy {
            kind,
            assignment: vec![None; len],
        }
    }

    pub fn known_order(assignment: Vec<Option<usize>>) -> Self {
        Policy {
            kind: PolicyKind::KnownOrder,
            assignment,
        }
    }

    pub fn scenario(assignment: Vec<Option<usize>>) -> Self {
        Policy {
            kind: PolicyKind::Scenario,
            assignment,
        }
    }

    #[inline]
    pub fn get(&self, index: usize) -> Option<usize> {
        self.assignment.get(index).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_canonical() {
        let c = Chain::new([3, 1, 3, 2]).unwrap();
        assert_eq!(c.keys(), &[1, 2, 3]);
        assert!(c.contains(2));
        assert!(!c.contains(0));
        assert!(Chain::new([]).is_err());
    }

    #[test]
    fn known_order_rejects_bad_prior() {
        let err = KnownOrderInstance::new(2, chains(&[&[0, 1]]), vec![0.5, 0.6]).unwrap_err();
        assert!(matches!(err, KeychainError::ProbabilitySum { .. }));
        assert!(KnownOrderInstance::new(2, chains(&[&[0, 2]]), vec![0.5, 0.5]).is_err());
        assert!(KnownOrderInstance::new(2, vec![], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn reward_matrix_matches_hand_values() {
        let inst =
            KnownOrderInstance::new(2, chains(&[&[0, 1], &[0, 1], &[0]]), vec![0.5, 0.5]).unwrap();
        let r = inst.reward_matrix();
        assert_eq!(r[0], vec![1.5, 1.0, 0.5]);
        assert_eq!(r[1], vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn duplicate_scenarios_are_merged() {
        let s = Scenario {
            chains: chains(&[&[0, 1]]),
            correct_key: 0,
            prob: 0.25,
        };
        let t = Scenario {
            correct_key: 1,
            prob: 0.5,
            ..s.clone()
        };
        let inst = ScenarioInstance::new(2, vec![s.clone(), t, s]).unwrap();
        assert_eq!(inst.num_scenarios(), 2);
        assert_eq!(inst.merged_duplicates(), 1);
        assert_eq!(inst.scenarios()[0].prob, 0.5);
    }

    #[test]
    fn scenario_validation() {
        let s = Scenario {
            chains: chains(&[&[0]]),
            correct_key: 3,
            prob: 1.0,
        };
        assert!(ScenarioInstance::new(2, vec![s]).is_err());
        let s = Scenario {
            chains: vec![],
            correct_key: 0,
            prob: 1.0,
        };
        assert!(ScenarioInstance::new(2, vec![s]).is_err());
    }

    #[test]
    fn multikey_validation() {
        let dueling = CorrectnessModel::Dueling {
            pair_probs: vec![0.5],
        };
        assert!(MultiKeyInstance::new(3, chains(&[&[0]]), dueling.clone()).is_err());
        assert!(MultiKeyInstance::new(2, chains(&[&[0, 1]]), dueling).is_ok());
        let bad = CorrectnessModel::Independent {
            accept_probs: vec![1.2],
        };
        assert!(MultiKeyInstance::new(1, chains(&[&[0]]), bad).is_err());
    }
}
