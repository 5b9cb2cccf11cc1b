use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    build_information_forest, eval_known_order_policy, eval_scenario_policy, InformationForest,
    KnownOrderInstance, Policy,
};
use crate::error::{KeychainError, Result};

/// Generator for trial `trial` of a run seeded with `seed`. Independent of
/// scheduling, so parallel runs reproduce sequential ones.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Inverse-CDF sampling from a finite distribution.
#[derive(Debug, Clone)]
pub struct ScenarioSampler {
    cumulative: Vec<f64>,
}

impl ScenarioSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        ScenarioSampler { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("nonempty distribution");
        let u = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        // guard against rounding at the top end and zero-mass tails
        let mut i = i.min(self.cumulative.len() - 1);
        while i > 0 && self.cumulative[i] == self.cumulative[i - 1] {
            i -= 1;
        }
        i
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialTrace {
    pub scenario: usize,
    /// Key played at each round, `None` for NULL.
    pub plays: Vec<Option<usize>>,
    pub reward: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub traces: Vec<TrialTrace>,
}

impl SimulationReport {
    fn from_traces(seed: u64, traces: Vec<TrialTrace>) -> Self {
        let n = traces.len() as f64;
        let mean = traces.iter().map(|t| t.reward as f64).sum::<f64>() / n;
        let var = if traces.len() > 1 {
            traces
                .iter()
                .map(|t| (t.reward as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        SimulationReport {
            seed,
            trials: traces.len(),
            mean,
            std_error: (var / n).sqrt(),
            traces,
        }
    }
}

fn run_protocol(forest: &InformationForest, policy: &Policy, s: usize) -> TrialTrace {
    let target = forest.correct_key(s);
    let mut found = false;
    let mut reward = 0;
    let plays = forest
        .path(s)
        .iter()
        .map(|&o| {
            let chain = forest.chain(o);
            if found {
                if chain.contains(target) {
                    reward += 1;
                    Some(target)
                } else {
                    None
                }
            } else {
                let k = policy.get(o)?;
                if k == target && chain.contains(k) {
                    found = true;
                    reward += 1;
                }
                Some(k)
            }
        })
        .collect();
    TrialTrace {
        scenario: s,
        plays,
        reward,
    }
}

/// Runs the exploitative protocol on independently drawn scenarios.
pub fn simulate_scenarios(
    forest: &InformationForest,
    policy: &Policy,
    seed: u64,
    trials: usize,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(KeychainError::InvalidInput(
            "trials must be at least 1".into(),
        ));
    }
    eval_scenario_policy(forest, policy)?;
    let sampler = ScenarioSampler::new(forest.scenario_probs());
    let traces = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = sampler.sample(&mut trial_rng(seed, i));
            run_protocol(forest, policy, s)
        })
        .collect();
    Ok(SimulationReport::from_traces(seed, traces))
}

/// Known-order simulation; the trace's `scenario` field is the correct key.
pub fn simulate_known_order(
    instance: &KnownOrderInstance,
    policy: &Policy,
    seed: u64,
    trials: usize,
) -> Result<SimulationReport> {
    eval_known_order_policy(instance, policy)?;
    let embedded = instance.to_scenarios();
    let forest = build_information_forest(&embedded);
    let mut report = simulate_scenarios(&forest, &instance.embed_policy(policy), seed, trials)?;
    for t in &mut report.traces {
        t.scenario = embedded.scenarios()[t.scenario].correct_key;
    }
    Ok(report)
}
