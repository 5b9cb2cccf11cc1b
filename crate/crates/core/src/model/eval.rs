use super::{InformationForest, KnownOrderInstance, Policy, PolicyKind};
use crate::error::{KeychainError, Result};

/// First place where a scenario policy assigns the same key twice on one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissibilityViolation {
    pub scenario: usize,
    pub key: usize,
    pub first: usize,
    pub second: usize,
}

impl From<AdmissibilityViolation> for KeychainError {
    fn from(v: AdmissibilityViolation) -> Self {
        KeychainError::Inadmissible {
            scenario: v.scenario,
            key: v.key,
            first: v.first,
            second: v.second,
        }
    }
}

fn check_shape(policy: &Policy, kind: PolicyKind, len: usize, num_keys: usize) -> Result<()> {
    if policy.kind != kind {
        return Err(KeychainError::InvalidPolicy(format!(
            "expected a {kind:?} policy, got {:?}",
            policy.kind
        )));
    }
    if policy.len() != len {
        return Err(KeychainError::InvalidPolicy(format!(
            "policy has {} entries, expected {len}",
            policy.len()
        )));
    }
    if let Some(k) = policy.assignment.iter().flatten().find(|&&k| k >= num_keys) {
        return Err(KeychainError::InvalidPolicy(format!(
            "key {k} out of range for {num_keys} keys"
        )));
    }
    Ok(())
}

/// Scans scenario paths in order and reports the first repeated key.
///
/// A policy whose length or key ids do not fit the forest is reported as
/// admissible here; [`eval_scenario_policy`] checks the shape separately.
pub fn validate_admissible(
    forest: &InformationForest,
    policy: &Policy,
) -> Option<AdmissibilityViolation> {
    let mut seen: Vec<Option<usize>> = vec![None; forest.num_keys()];
    for s in 0..forest.num_scenarios() {
        seen.iter_mut().for_each(|x| *x = None);
        for &o in forest.path(s) {
            let Some(k) = policy.get(o) else { continue };
            if k >= seen.len() {
                continue;
            }
            if let Some(first) = seen[k] {
                return Some(AdmissibilityViolation {
                    scenario: s,
                    key: k,
                    first,
                    second: o,
                });
            }
            seen[k] = Some(o);
        }
    }
    None
}

/// Exact expected number of successful rotations of an admissible policy.
pub fn eval_scenario_policy(forest: &InformationForest, policy: &Policy) -> Result<f64> {
    check_shape(
        policy,
        PolicyKind::Scenario,
        forest.num_info_sets(),
        forest.num_keys(),
    )?;
    if let Some(v) = validate_admissible(forest, policy) {
        return Err(v.into());
    }
    Ok(policy
        .assignment
        .iter()
        .enumerate()
        .filter_map(|(o, k)| k.map(|k| forest.weight(o, k)))
        .sum())
}

/// Exact expected reward of a round-indexed policy on a known chain order.
pub fn eval_known_order_policy(instance: &KnownOrderInstance, policy: &Policy) -> Result<f64> {
    check_shape(
        policy,
        PolicyKind::KnownOrder,
        instance.num_rounds(),
        instance.num_keys(),
    )?;
    let mut first = vec![None; instance.num_keys()];
    for (t, k) in policy.assignment.iter().enumerate() {
        let Some(k) = *k else { continue };
        if let Some(prev) = first[k] {
            return Err(KeychainError::Inadmissible {
                scenario: 0,
                key: k,
                first: prev,
                second: t,
            });
        }
        first[k] = Some(t);
    }
    Ok(policy
        .assignment
        .iter()
        .enumerate()
        .filter_map(|(t, k)| {
            let k = (*k)?;
            instance.chains()[t]
                .contains(k)
                .then(|| instance.prior()[k] * instance.future_count(k, t) as f64)
        })
        .sum())
}
