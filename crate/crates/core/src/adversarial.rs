//! Minimax policies against an adversarially chosen prior from a convex
//! set, by follow-the-regularized-leader with an entropy regularizer on the
//! adversary's side and best responses on the learner's side.

use serde::{Deserialize, Serialize};

use crate::error::{KeychainError, Result};
use crate::lp::{solve_lp, LinearProgram, Sense};
use crate::model::{InformationForest, Policy};
use crate::oracle::solve_one_key_forest;
use crate::scenarios::approx_solve_forest;

/// Duality-gap and violation target of the leader projection.
pub const LEADER_TOL: f64 = 1e-7;
const LEADER_MAX_PASSES: usize = 200_000;
const LAMBDA_MAX: f64 = 1e6;

/// Priors `p` on the simplex with `A p <= b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSet {
    pub num_scenarios: usize,
    /// Rows `(a, b)` meaning `a · p <= b`.
    pub constraints: Vec<(Vec<f64>, f64)>,
}

impl PriorSet {
    /// Validates shapes and certifies nonemptiness with a feasibility LP.
    pub fn new(num_scenarios: usize, constraints: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if num_scenarios == 0 {
            return Err(KeychainError::InvalidInput(
                "prior set over no scenarios".into(),
            ));
        }
        for (j, (a, b)) in constraints.iter().enumerate() {
            if a.len() != num_scenarios || !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(KeychainError::InvalidInput(format!(
                    "constraint {j} is malformed"
                )));
            }
        }
        let set = PriorSet {
            num_scenarios,
            constraints,
        };
        set.minimize(&vec![0.0; num_scenarios])
            .map_err(|e| match e {
                KeychainError::Infeasible => {
                    KeychainError::InvalidInput("prior set is empty".into())
                }
                other => other,
            })?;
        Ok(set)
    }

    pub fn simplex(num_scenarios: usize) -> Self {
        PriorSet {
            num_scenarios,
            constraints: Vec::new(),
        }
    }

    /// `lower[s] <= p_s <= upper[s]`.
    pub fn boxed(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let n = lower.len();
        if upper.len() != n {
            return Err(KeychainError::InvalidInput(
                "box bounds differ in length".into(),
            ));
        }
        let mut rows = Vec::new();
        for s in 0..n {
            let mut e = vec![0.0; n];
            e[s] = 1.0;
            rows.push((e.clone(), upper[s]));
            e[s] = -1.0;
            rows.push((e, -lower[s]));
        }
        PriorSet::new(n, rows)
    }

    pub fn max_violation(&self, p: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|(a, b)| (dot(a, p) - b).max(0.0));
        let sum = (p.iter().sum::<f64>() - 1.0).abs();
        rows.fold(sum, f64::max)
    }

    /// `min c · p` over the set, with a minimizer.
    pub fn minimize(&self, c: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut lp = LinearProgram::new(self.num_scenarios);
        for (s, &v) in c.iter().enumerate() {
            lp.set_objective(s, -v);
        }
        lp.add_row(
            (0..self.num_scenarios).map(|s| (s, 1.0)).collect(),
            Sense::Eq,
            1.0,
        );
        for (a, b) in &self.constraints {
            let coeffs = a
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(s, v)| (s, *v))
                .collect();
            lp.add_row(coeffs, Sense::Le, *b);
        }
        let sol = solve_lp(&lp)?;
        Ok((-sol.value, sol.x))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Entropy-regularized leader: `argmin_{p ∈ K} ⟨U, p⟩ + (1/η) Σ p ln p`,
/// i.e. the KL projection of `q ∝ exp(-η U)` onto `K`.
///
/// Solved by cyclic coordinate ascent on the dual multipliers of the rows,
/// each coordinate by bisection. `lambda` is the warm start and is updated.
#[derive(Debug, Clone)]
pub struct Leader {
    pub lambda: Vec<f64>,
    pub passes: usize,
}

impl Leader {
    pub fn new(set: &PriorSet) -> Self {
        Leader {
            lambda: vec![0.0; set.constraints.len()],
            passes: 0,
        }
    }

    fn prior(&self, set: &PriorSet, logq: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..set.num_scenarios)
            .map(|s| {
                logq[s]
                    - set
                        .constraints
                        .iter()
                        .zip(&self.lambda)
                        .map(|((a, _), l)| l * a[s])
                        .sum::<f64>()
            })
            .collect();
        softmax(&logits)
    }

    pub fn step(&mut self, set: &PriorSet, cumulative: &[f64], eta: f64) -> Result<Vec<f64>> {
        if !(eta > 0.0) {
            return Err(KeychainError::InvalidInput("eta must be positive".into()));
        }
        let logq: Vec<f64> = cumulative.iter().map(|u| -eta * u).collect();
        if set.constraints.is_empty() {
            return Ok(softmax(&logq));
        }
        for pass in 0..LEADER_MAX_PASSES {
            for j in 0..set.constraints.len() {
                self.coordinate(set, &logq, j);
            }
            let p = self.prior(set, &logq);
            let violation = set.max_violation(&p);
            let gap: f64 = set
                .constraints
                .iter()
                .zip(&self.lambda)
                .map(|((a, b), l)| l * (b - dot(a, &p)).abs())
                .sum();
            if violation <= LEADER_TOL && gap <= LEADER_TOL {
                self.passes += pass + 1;
                return Ok(p);
            }
        }
        let p = self.prior(set, &logq);
        Err(KeychainError::Numerical(format!(
            "leader projection did not converge: violation {:.3e}",
            set.max_violation(&p)
        )))
    }

    fn coordinate(&mut self, set: &PriorSet, logq: &[f64], j: usize) {
        let (a, b) = &set.constraints[j];
        let expect = |l: f64, me: &mut Self| {
            me.lambda[j] = l;
            dot(a, &me.prior(set, logq))
        };
        if expect(0.0, self) <= *b {
            self.lambda[j] = 0.0;
            return;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while expect(hi, self) > *b && hi < LAMBDA_MAX {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if expect(mid, self) > *b {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        self.lambda[j] = hi;
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// One FTRL leader step from scratch.
pub fn ftrl_leader_step(set: &PriorSet, cumulative: &[f64], eta: f64) -> Result<Vec<f64>> {
    Leader::new(set).step(set, cumulative, eta)
}

/// Learner side: a (possibly approximate) solver for a fixed prior.
pub trait BestResponse {
    fn respond(&self, forest: &InformationForest, round: usize) -> Result<Policy>;
}

/// Exact best responses from the one-key oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleResponse;

impl BestResponse for OracleResponse {
    fn respond(&self, forest: &InformationForest, _round: usize) -> Result<Policy> {
        Ok(solve_one_key_forest(forest)?.1)
    }
}

/// Best-of-R LP rounding, reseeded every round.
#[derive(Debug, Clone, Copy)]
pub struct RoundingResponse {
    pub seed: u64,
    pub repetitions: usize,
}

impl BestResponse for RoundingResponse {
    fn respond(&self, forest: &InformationForest, round: usize) -> Result<Policy> {
        let seed = self
            .seed
            .wrapping_add((round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Ok(approx_solve_forest(forest, seed, self.repetitions)?.policy)
    }
}

/// `T = ⌈4 m² ln|S| / ε²⌉` (at least 1) and `η = √(ln|S|) / (m √T)`.
pub fn ftrl_schedule(
    max_rounds: usize,
    num_scenarios: usize,
    epsilon: f64,
) -> Result<(usize, f64)> {
    if !(epsilon > 0.0) {
        return Err(KeychainError::InvalidInput(
            "epsilon must be positive".into(),
        ));
    }
    let m = max_rounds.max(1) as f64;
    let ln_s = (num_scenarios as f64).ln();
    let t = ((4.0 * m * m * ln_s / (epsilon * epsilon)).ceil() as usize).max(1);
    let eta = ln_s.sqrt() / (m * (t as f64).sqrt());
    Ok((t, eta))
}

#[derive(Debug, Clone, Serialize)]
pub struct FtrlResult {
    pub rounds: usize,
    pub eta: f64,
    /// Uniform mixture components in round order.
    pub policies: Vec<Policy>,
    pub priors: Vec<Vec<f64>>,
    /// Per-scenario utility of the mixture.
    pub mixture_utility: Vec<f64>,
    /// `min_{p ∈ K} E u(p, π)` over the mixture.
    pub worst_case_value: f64,
    pub worst_prior: Vec<f64>,
    /// Adversary regret `Σ_t u(p^t, π^t) - min_p Σ_t u(p, π^t)`.
    pub regret: f64,
    /// `ln|S| / η + η Σ_{t,s} p^t_s u_s(π^t)²`.
    pub regret_bound: f64,
}

/// Per-scenario utilities of a deterministic policy.
pub fn scenario_utilities(forest: &InformationForest, policy: &Policy) -> Vec<f64> {
    (0..forest.num_scenarios())
        .map(|s| forest.scenario_utility(&policy.assignment, s) as f64)
        .collect()
}

/// Worst-case expected utility of a fixed utility vector over the set.
pub fn worst_case_value(set: &PriorSet, utility: &[f64]) -> Result<(f64, Vec<f64>)> {
    set.minimize(utility)
}

pub fn ftrl_solve(
    forest: &InformationForest,
    set: &PriorSet,
    epsilon: f64,
    best_response: &dyn BestResponse,
) -> Result<FtrlResult> {
    let n = forest.num_scenarios();
    if set.num_scenarios != n {
        return Err(KeychainError::InvalidInput(format!(
            "prior set over {} scenarios for an instance with {n}",
            set.num_scenarios
        )));
    }
    let (rounds, eta) = ftrl_schedule(forest.max_rounds(), n, epsilon)?;
    let mut leader = Leader::new(set);
    let mut cumulative = vec![0.0; n];
    let mut policies = Vec::with_capacity(rounds);
    let mut priors = Vec::with_capacity(rounds);
    let mut played = 0.0;
    let mut second_moment = 0.0;
    for t in 0..rounds {
        let p = if n == 1 {
            vec![1.0]
        } else {
            leader.step(set, &cumulative, eta)?
        };
        // renormalize away rounding drift before re-weighting the forest
        let z: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|v| v / z).collect();
        let policy = best_response.respond(&forest.with_probs(&p)?, t)?;
        let u = scenario_utilities(forest, &policy);
        played += dot(&p, &u);
        second_moment += p.iter().zip(&u).map(|(ps, us)| ps * us * us).sum::<f64>();
        for (c, v) in cumulative.iter_mut().zip(&u) {
            *c += v;
        }
        policies.push(policy);
        priors.push(p);
    }
    let (best_fixed, _) = set.minimize(&cumulative)?;
    let mixture_utility: Vec<f64> = cumulative.iter().map(|c| c / rounds as f64).collect();
    let (worst_case_value, worst_prior) = worst_case_value(set, &mixture_utility)?;
    let regret_bound = if n == 1 {
        0.0
    } else {
        (n as f64).ln() / eta + eta * second_moment
    };
    Ok(FtrlResult {
        rounds,
        eta,
        policies,
        priors,
        mixture_utility,
        worst_case_value,
        worst_prior,
        regret: played - best_fixed,
        regret_bound,
    })
}
