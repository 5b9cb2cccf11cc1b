//! Probabilistic scenarios: the laminar matching and auction reductions,
//! the assignment LP with preallocation rounding, the sample-based weight
//! estimator and the greedy baseline.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KeychainError, Result};
use crate::laminar::{supporting_prices, value_query, AntichainValuation, LaminarFamily};
use crate::lp::{DenseSimplex, LinearProgram, LpSolver, Sense};
use crate::model::{
    build_information_forest, eval_scenario_policy, trial_rng, Chain, InformationForest, Policy,
    PrefixForest, ScenarioInstance, ScenarioSampler,
};

/// Slack allowed on the packing constraints of a fractional solution.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Rounding repetitions of the derandomized pipeline.
pub const DEFAULT_REPETITIONS: usize = 64;

/// Bipartite instance whose right nodes carry laminar type sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaminarMatchingInstance {
    pub capacities: Vec<usize>,
    pub types: LaminarFamily,
    /// `weights[i][j]` for left node `i` and right node `j`.
    pub weights: Vec<Vec<f64>>,
}

/// Edges as `(left, right)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct LaminarMatching {
    pub edges: Vec<(usize, usize)>,
}

impl LaminarMatchingInstance {
    pub fn num_left(&self) -> usize {
        self.weights.len()
    }

    pub fn num_right(&self) -> usize {
        self.types.len()
    }

    pub fn weight(&self, m: &LaminarMatching) -> f64 {
        m.edges.iter().map(|&(i, j)| self.weights[i][j]).sum()
    }

    /// Right degree at most one and at most `b_i` neighbors of any type per
    /// left node `i`.
    pub fn validate(&self, m: &LaminarMatching) -> Result<()> {
        let mut right_used = vec![false; self.num_right()];
        let mut per_left: Vec<Vec<usize>> = vec![Vec::new(); self.num_left()];
        for &(i, j) in &m.edges {
            if i >= self.num_left() || j >= self.num_right() {
                return Err(KeychainError::InvalidMatching(format!(
                    "edge ({i}, {j}) out of range"
                )));
            }
            if right_used[j] {
                return Err(KeychainError::InvalidMatching(format!(
                    "right node {j} is matched twice"
                )));
            }
            right_used[j] = true;
            per_left[i].push(j);
        }
        for (i, nodes) in per_left.iter().enumerate() {
            let mut count: std::collections::HashMap<usize, usize> = Default::default();
            for &j in nodes {
                for &tau in self.types.types(j) {
                    let c = count.entry(tau).or_default();
                    *c += 1;
                    if *c > self.capacities[i] {
                        return Err(KeychainError::InvalidMatching(format!(
                            "left node {i} has more than {} neighbors of type {tau}",
                            self.capacities[i]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Keys on the left, information sets on the right, typed by consistency set.
pub fn reduce_to_mwlm(forest: &InformationForest) -> LaminarMatchingInstance {
    let types = (0..forest.num_info_sets())
        .map(|o| forest.consistent(o).to_vec())
        .collect();
    LaminarMatchingInstance {
        capacities: vec![1; forest.num_keys()],
        types: LaminarFamily::new(types).expect("consistency sets of a prefix forest are laminar"),
        weights: (0..forest.num_keys())
            .map(|k| {
                (0..forest.num_info_sets())
                    .map(|o| forest.weight(o, k))
                    .collect()
            })
            .collect(),
    }
}

pub fn policy_to_matching(policy: &Policy) -> LaminarMatching {
    LaminarMatching {
        edges: policy
            .assignment
            .iter()
            .enumerate()
            .filter_map(|(o, k)| k.map(|k| (k, o)))
            .collect(),
    }
}

pub fn matching_to_policy(
    instance: &LaminarMatchingInstance,
    m: &LaminarMatching,
) -> Result<Policy> {
    instance.validate(m)?;
    let mut assignment = vec![None; instance.num_right()];
    for &(k, o) in &m.edges {
        assignment[o] = Some(k);
    }
    Ok(Policy::scenario(assignment))
}

/// One bidder per left node, valuing a bundle of right nodes by its best
/// `b_i` disjoint antichains.
pub fn reduce_mwlm_to_auction(instance: &LaminarMatchingInstance) -> Vec<AntichainValuation> {
    instance
        .weights
        .iter()
        .zip(&instance.capacities)
        .map(|(w, &b)| {
            AntichainValuation::new(w.clone(), instance.types.clone(), b)
                .expect("reduction weights are finite")
        })
        .collect()
}

fn check_allocation(num_items: usize, allocation: &[Vec<usize>]) -> Result<()> {
    let mut owner = vec![None; num_items];
    for (i, bundle) in allocation.iter().enumerate() {
        for &j in bundle {
            if j >= num_items {
                return Err(KeychainError::InvalidInput(format!(
                    "item {j} out of range"
                )));
            }
            if let Some(prev) = owner[j] {
                return Err(KeychainError::InvalidInput(format!(
                    "item {j} allocated to bidders {prev} and {i}"
                )));
            }
            owner[j] = Some(i);
        }
    }
    Ok(())
}

pub fn welfare(bidders: &[AntichainValuation], allocation: &[Vec<usize>]) -> f64 {
    bidders
        .iter()
        .zip(allocation)
        .map(|(v, s)| value_query(v, s))
        .sum()
}

/// Keeps, for every bidder, the items carrying a nonzero supporting price.
pub fn allocation_to_matching(
    instance: &LaminarMatchingInstance,
    bidders: &[AntichainValuation],
    allocation: &[Vec<usize>],
) -> Result<LaminarMatching> {
    if allocation.len() != bidders.len() {
        return Err(KeychainError::InvalidInput(format!(
            "{} bundles for {} bidders",
            allocation.len(),
            bidders.len()
        )));
    }
    check_allocation(instance.num_right(), allocation)?;
    let mut edges = Vec::new();
    for (i, (v, bundle)) in bidders.iter().zip(allocation).enumerate() {
        let prices = supporting_prices(v, bundle);
        let mut items: Vec<usize> = bundle
            .iter()
            .copied()
            .filter(|&j| prices[j] != 0.0)
            .collect();
        items.sort_unstable();
        edges.extend(items.into_iter().map(|j| (i, j)));
    }
    Ok(LaminarMatching { edges })
}

/// x[o][k], one row per information set (or arrival prefix).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionalPolicy {
    pub x: Vec<Vec<f64>>,
}

impl FractionalPolicy {
    /// Checks the node rows and the per-leaf-path capacity rows.
    pub fn check_feasible(&self, tree: &PrefixForest, capacities: &[usize]) -> Result<()> {
        if self.x.len() != tree.len() || self.x.iter().any(|r| r.len() != capacities.len()) {
            return Err(KeychainError::InvalidInput(
                "fractional policy has the wrong shape".into(),
            ));
        }
        for (o, row) in self.x.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < -FEASIBILITY_TOL) {
                return Err(KeychainError::InvalidInput(format!(
                    "negative entry at node {o}"
                )));
            }
            if row.iter().sum::<f64>() > 1.0 + FEASIBILITY_TOL {
                return Err(KeychainError::InvalidInput(format!(
                    "node {o} is over-allocated"
                )));
            }
        }
        for leaf in (0..tree.len()).filter(|&o| tree.children(o).is_empty()) {
            let path = tree.ancestry(leaf);
            for (k, &b) in capacities.iter().enumerate() {
                let total: f64 = path.iter().map(|&o| self.x[o][k]).sum();
                if total > b as f64 + FEASIBILITY_TOL {
                    return Err(KeychainError::InvalidInput(format!(
                        "key {k} exceeds capacity {b} on the path to node {leaf}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpRelaxation {
    pub value: f64,
    pub x: FractionalPolicy,
    pub primal_violation: f64,
    pub slackness_residual: f64,
    pub pivots: usize,
}

/// Builds `max Σ w[o][k] x[o][k]` with one packing row per node and one
/// capacity row per (key, root-to-leaf path). Only positive weights get a
/// variable; the returned map gives `(o, k)` per variable.
pub fn build_assignment_lp(
    tree: &PrefixForest,
    weights: &[Vec<f64>],
    capacities: &[usize],
) -> (LinearProgram, Vec<(usize, usize)>) {
    let mut vars = Vec::new();
    let mut index = vec![vec![None; capacities.len()]; tree.len()];
    for (o, row) in weights.iter().enumerate() {
        for (k, &w) in row.iter().enumerate() {
            if w > 0.0 {
                index[o][k] = Some(vars.len());
                vars.push((o, k));
            }
        }
    }
    let mut lp = LinearProgram::new(vars.len());
    for (v, &(o, k)) in vars.iter().enumerate() {
        lp.set_objective(v, weights[o][k]);
    }
    for row in &index {
        let coeffs: Vec<(usize, f64)> = row.iter().flatten().map(|&v| (v, 1.0)).collect();
        if !coeffs.is_empty() {
            lp.add_row(coeffs, Sense::Le, 1.0);
        }
    }
    for leaf in (0..tree.len()).filter(|&o| tree.children(o).is_empty()) {
        let path = tree.ancestry(leaf);
        for (k, &b) in capacities.iter().enumerate() {
            let coeffs: Vec<(usize, f64)> = path
                .iter()
                .filter_map(|&o| index[o][k])
                .map(|v| (v, 1.0))
                .collect();
            if !coeffs.is_empty() {
                lp.add_row(coeffs, Sense::Le, b as f64);
            }
        }
    }
    (lp, vars)
}

pub fn solve_assignment_lp(
    solver: &dyn LpSolver,
    tree: &PrefixForest,
    weights: &[Vec<f64>],
    capacities: &[usize],
) -> Result<LpRelaxation> {
    let (lp, vars) = build_assignment_lp(tree, weights, capacities);
    let sol = solver.solve(&lp)?;
    let mut x = vec![vec![0.0; capacities.len()]; tree.len()];
    for (v, &(o, k)) in vars.iter().enumerate() {
        x[o][k] = sol.x[v].clamp(0.0, 1.0);
    }
    Ok(LpRelaxation {
        value: sol.value,
        x: FractionalPolicy { x },
        primal_violation: sol.primal_violation,
        slackness_residual: sol.slackness_residual,
        pivots: sol.pivots,
    })
}

fn forest_weights(forest: &InformationForest) -> Vec<Vec<f64>> {
    (0..forest.num_info_sets())
        .map(|o| forest.weights(o).to_vec())
        .collect()
}

pub fn solve_lp_relaxation(forest: &InformationForest) -> Result<LpRelaxation> {
    solve_assignment_lp(
        &DenseSimplex,
        forest.tree(),
        &forest_weights(forest),
        &vec![1; forest.num_keys()],
    )
}

/// Online preallocation rounding of a fractional solution.
///
/// Along the observed path each key with capacity one that has not been
/// allocated yet joins `A_o` with probability `x[o][k] / (1 - Σ earlier x)`.
/// Keys with capacity `b > 1` draw one offset `U` and join whenever the
/// cumulative mass along the path crosses a point of `U + Z`, which keeps
/// the marginal at `x[o][k]` and never allocates more than `b` times.
/// The played key is the allocated key of largest score, smallest id on
/// ties; zero-score keys are never played.
#[derive(Debug, Clone)]
pub struct Preallocation {
    x: Vec<Vec<f64>>,
    before: Vec<Vec<f64>>,
    rank: Vec<Vec<usize>>,
    score: Vec<Vec<f64>>,
    capacities: Vec<usize>,
}

/// Allocation and play along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRun {
    pub allocated: Vec<Vec<usize>>,
    pub played: Vec<Option<usize>>,
}

impl Preallocation {
    pub fn new(
        tree: &PrefixForest,
        x: &FractionalPolicy,
        score: Vec<Vec<f64>>,
        capacities: Vec<usize>,
    ) -> Result<Self> {
        x.check_feasible(tree, &capacities)?;
        let n = capacities.len();
        let mut before = vec![vec![0.0; n]; tree.len()];
        for o in 0..tree.len() {
            if let Some(p) = tree.parent(o) {
                for k in 0..n {
                    before[o][k] = before[p][k] + x.x[p][k].max(0.0);
                }
            }
        }
        let rank = (0..tree.len())
            .map(|o| {
                let mut keys: Vec<usize> = (0..n).filter(|&k| x.x[o][k] > 0.0).collect();
                keys.sort_by(|&a, &b| score[o][b].total_cmp(&score[o][a]).then(a.cmp(&b)));
                keys
            })
            .collect();
        Ok(Preallocation {
            x: x.x.clone(),
            before,
            rank,
            score,
            capacities,
        })
    }

    /// Forest pipeline: scores are the conditional rewards, capacities one.
    pub fn for_forest(forest: &InformationForest, x: &FractionalPolicy) -> Result<Self> {
        let score = forest_weights(forest);
        Self::new(forest.tree(), x, score, vec![1; forest.num_keys()])
    }

    /// Conditional inclusion probability of an unallocated capacity-one key.
    pub fn inclusion_probability(&self, o: usize, k: usize) -> f64 {
        let denom = 1.0 - self.before[o][k];
        if denom <= 1e-12 {
            0.0
        } else {
            (self.x[o][k] / denom).clamp(0.0, 1.0)
        }
    }

    fn pick(&self, o: usize, allocated: &[usize]) -> Option<usize> {
        self.rank[o]
            .iter()
            .copied()
            .find(|k| allocated.contains(k) && self.score[o][*k] > 0.0)
    }

    pub fn run_path<R: Rng + ?Sized>(&self, path: &[usize], rng: &mut R) -> PathRun {
        let n = self.capacities.len();
        let offsets: Vec<f64> = (0..n)
            .map(|k| {
                if self.capacities[k] > 1 {
                    rng.gen::<f64>()
                } else {
                    0.0
                }
            })
            .collect();
        let mut used = vec![false; n];
        let mut allocated = Vec::with_capacity(path.len());
        let mut played = Vec::with_capacity(path.len());
        for &o in path {
            let mut a = Vec::new();
            for &k in &self.rank[o] {
                let cap = self.capacities[k] as f64;
                let enter = if self.capacities[k] > 1 {
                    let lo = self.before[o][k].min(cap);
                    let hi = (self.before[o][k] + self.x[o][k]).min(cap);
                    (hi - offsets[k]).ceil() > (lo - offsets[k]).ceil()
                } else {
                    !used[k] && rng.gen::<f64>() < self.inclusion_probability(o, k)
                };
                if enter {
                    used[k] = true;
                    a.push(k);
                }
            }
            played.push(self.pick(o, &a));
            allocated.push(a);
        }
        PathRun { allocated, played }
    }

    /// Probability that key `k` is played at node `o`.
    pub fn play_probability(&self, o: usize, k: usize) -> f64 {
        let mut p = 1.0;
        for &j in &self.rank[o] {
            if j == k {
                return if self.score[o][k] > 0.0 {
                    p * self.x[o][k]
                } else {
                    0.0
                };
            }
            if self.score[o][j] > 0.0 {
                p *= 1.0 - self.x[o][j];
            }
        }
        0.0
    }

    /// Exact expected value `Σ_o Σ_k w[o][k] Pr[k played at o]`.
    pub fn expected_value(&self, weights: &[Vec<f64>]) -> f64 {
        (0..self.rank.len())
            .map(|o| {
                self.rank[o]
                    .iter()
                    .map(|&k| weights[o][k] * self.play_probability(o, k))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Draws a deterministic admissible policy by running the rounding on
    /// every node of the forest, parents first. Capacity-one keys only.
    pub fn sample_policy<R: Rng + ?Sized>(&self, tree: &PrefixForest, rng: &mut R) -> Policy {
        let n = self.capacities.len();
        let mut used: Vec<Vec<bool>> = vec![Vec::new(); tree.len()];
        let mut assignment = vec![None; tree.len()];
        let mut stack: Vec<usize> = tree.roots().collect();
        stack.reverse();
        while let Some(o) = stack.pop() {
            let mut u = match tree.parent(o) {
                Some(p) => used[p].clone(),
                None => vec![false; n],
            };
            let mut a = Vec::new();
            for &k in &self.rank[o] {
                if !u[k] && rng.gen::<f64>() < self.inclusion_probability(o, k) {
                    u[k] = true;
                    a.push(k);
                }
            }
            assignment[o] = self.pick(o, &a);
            used[o] = u;
            stack.extend(tree.children(o).iter().rev());
        }
        Policy::scenario(assignment)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl MonteCarlo {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MonteCarlo {
            trials: samples.len(),
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Reward of the online rounding on `trials` scenarios drawn from the prior.
pub fn simulate_rounding(
    forest: &InformationForest,
    rounding: &Preallocation,
    seed: u64,
    trials: usize,
) -> MonteCarlo {
    let sampler = ScenarioSampler::new(forest.scenario_probs());
    let rewards: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let s = sampler.sample(&mut rng);
            let path = forest.path(s);
            let run = rounding.run_path(path, &mut rng);
            let target = forest.correct_key(s);
            run.played
                .iter()
                .enumerate()
                .find(|(_, k)| **k == Some(target))
                .map_or(0.0, |(t, _)| forest.scenario_reward(target, s, t) as f64)
        })
        .collect();
    MonteCarlo::from_samples(&rewards)
}

/// Empirical `Pr[k ∈ A_o]` from `trials` allocation runs along every
/// root-to-leaf path.
pub fn allocation_frequencies(
    tree: &PrefixForest,
    rounding: &Preallocation,
    seed: u64,
    trials: usize,
) -> Vec<Vec<f64>> {
    let n = rounding.capacities.len();
    let mut hits = vec![vec![0usize; n]; tree.len()];
    let mut visits = vec![0usize; tree.len()];
    let leaves: Vec<usize> = (0..tree.len())
        .filter(|&o| tree.children(o).is_empty())
        .collect();
    for (l, &leaf) in leaves.iter().enumerate() {
        let path = tree.ancestry(leaf);
        let runs: Vec<PathRun> = (0..trials as u64)
            .into_par_iter()
            .map(|i| rounding.run_path(&path, &mut trial_rng(seed ^ ((l as u64) << 32), i)))
            .collect();
        for run in runs {
            for (t, &o) in path.iter().enumerate() {
                visits[o] += 1;
                for &k in &run.allocated[t] {
                    hits[o][k] += 1;
                }
            }
        }
    }
    hits.into_iter()
        .zip(visits)
        .map(|(h, v)| h.into_iter().map(|c| c as f64 / v.max(1) as f64).collect())
        .collect()
}

/// `1 - (1 - 1/n)^n`, the rounding guarantee with `n` keys.
pub fn rounding_ratio(n: usize) -> f64 {
    let n = n.max(1) as f64;
    1.0 - (1.0 - 1.0 / n).powf(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxSolution {
    pub lp_value: f64,
    /// Exact expected reward of the randomized online rounding.
    pub expected_value: f64,
    /// Best deterministic policy over the rounding repetitions.
    pub policy: Policy,
    pub policy_value: f64,
    pub repetitions: usize,
    pub x: FractionalPolicy,
}

pub fn approx_solve(
    instance: &ScenarioInstance,
    seed: u64,
    repetitions: usize,
) -> Result<ApproxSolution> {
    approx_solve_forest(&build_information_forest(instance), seed, repetitions)
}

pub fn approx_solve_forest(
    forest: &InformationForest,
    seed: u64,
    repetitions: usize,
) -> Result<ApproxSolution> {
    let relax = solve_lp_relaxation(forest)?;
    let rounding = Preallocation::for_forest(forest, &relax.x)?;
    let expected_value = rounding.expected_value(&forest_weights(forest));
    let (policy_value, policy) = (0..repetitions.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let p = rounding.sample_policy(forest.tree(), &mut trial_rng(seed, r));
            let v = eval_scenario_policy(forest, &p).expect("rounded policies are admissible");
            (v, r, p)
        })
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .map(|(v, _, p)| (v, p))
        .expect("at least one repetition");
    Ok(ApproxSolution {
        lp_value: relax.value,
        expected_value,
        policy,
        policy_value,
        repetitions: repetitions.max(1),
        x: relax.x,
    })
}

/// Plays, at every information set, the untested on-chain key with the
/// largest positive conditional reward (smallest id on ties).
pub fn greedy_policy(forest: &InformationForest) -> Policy {
    let mut assignment = vec![None; forest.num_info_sets()];
    let mut stack: Vec<(usize, Vec<usize>)> =
        forest.tree().roots().map(|o| (o, Vec::new())).collect();
    while let Some((o, tested)) = stack.pop() {
        let mut best: Option<(usize, f64)> = None;
        for &k in forest.chain(o).keys() {
            let r = forest.weight(o, k);
            if tested.contains(&k) || r <= 0.0 {
                continue;
            }
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((k, r));
            }
        }
        assignment[o] = best.map(|(k, _)| k);
        let mut next = tested;
        next.extend(assignment[o]);
        for &c in forest.children(o) {
            stack.push((c, next.clone()));
        }
    }
    Policy::scenario(assignment)
}

/// Number of prior draws for the sample-based estimator:
/// `⌈2 m² |O|² (ln(n |O| / δ) + 1) / ε²⌉`.
pub fn sample_size(
    m: usize,
    info_sets: usize,
    n: usize,
    epsilon: f64,
    delta: f64,
) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(KeychainError::InvalidInput(
            "epsilon and delta must lie in (0, 1)".into(),
        ));
    }
    let (m, o, n) = (m as f64, info_sets as f64, n as f64);
    let h = 2.0 * m * m * o * o * ((n * o / delta).ln() + 1.0) / (epsilon * epsilon);
    Ok(h.ceil() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightEstimate {
    pub samples: usize,
    /// Estimated `p_o r_{k,o}`, indexed `[o][k]`.
    pub weights: Vec<Vec<f64>>,
    /// Draws whose chain sequence left the known forest.
    pub unmatched: usize,
}

/// Estimates the edge weights of a known forest structure from i.i.d.
/// draws of `(chains, correct key)`.
pub fn estimate_weights_from_samples<F>(
    forest: &InformationForest,
    epsilon: f64,
    delta: f64,
    mut draw: F,
) -> Result<WeightEstimate>
where
    F: FnMut() -> Result<(Vec<Chain>, usize)>,
{
    let h = sample_size(
        forest.max_rounds(),
        forest.num_info_sets(),
        forest.num_keys(),
        epsilon,
        delta,
    )?;
    let mut sums = vec![vec![0.0; forest.num_keys()]; forest.num_info_sets()];
    let mut unmatched = 0;
    for _ in 0..h {
        let (chains, k) = draw()?;
        if k >= forest.num_keys() {
            return Err(KeychainError::InvalidInput(format!(
                "sampled key {k} out of range"
            )));
        }
        let path = forest.walk(&chains);
        if path.len() < chains.len() {
            unmatched += 1;
        }
        let mut future = 0.0;
        let mut counts = vec![0.0; path.len()];
        for t in (0..chains.len()).rev() {
            if chains[t].contains(k) {
                future += 1.0;
                if t < path.len() {
                    counts[t] = future;
                }
            }
        }
        for (t, &o) in path.iter().enumerate() {
            sums[o][k] += counts[t];
        }
    }
    let weights = sums
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / h as f64).collect())
        .collect();
    Ok(WeightEstimate {
        samples: h,
        weights,
        unmatched,
    })
}

/// Sample-based pipeline: estimate weights from the prior, solve the LP on
/// the estimates, round, and report exact values under the true prior.
pub fn sample_solve(
    forest: &InformationForest,
    epsilon: f64,
    delta: f64,
    seed: u64,
    repetitions: usize,
) -> Result<ApproxSolution> {
    let sampler = ScenarioSampler::new(forest.scenario_probs());
    let mut rng = trial_rng(seed, u64::MAX);
    let est = estimate_weights_from_samples(forest, epsilon, delta, || {
        let s = sampler.sample(&mut rng);
        Ok((
            forest.prefix(*forest.path(s).last().expect("nonempty path")),
            forest.correct_key(s),
        ))
    })?;
    let capacities = vec![1; forest.num_keys()];
    let relax = solve_assignment_lp(&DenseSimplex, forest.tree(), &est.weights, &capacities)?;
    let rounding = Preallocation::new(forest.tree(), &relax.x, est.weights.clone(), capacities)?;
    let expected_value = rounding.expected_value(&forest_weights(forest));
    let (policy_value, policy) = (0..repetitions.max(1) as u64)
        .map(|r| {
            let p = rounding.sample_policy(forest.tree(), &mut trial_rng(seed, r));
            (
                eval_scenario_policy(forest, &p).expect("rounded policies are admissible"),
                p,
            )
        })
        .fold(None::<(f64, Policy)>, |best, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
        .expect("at least one repetition");
    Ok(ApproxSolution {
        lp_value: relax.value,
        expected_value,
        policy,
        policy_value,
        repetitions: repetitions.max(1),
        x: relax.x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{chains, KnownOrderInstance, Scenario};

    fn two_key_forest() -> InformationForest {
        let inst =
            KnownOrderInstance::new(2, chains(&[&[0, 1], &[0, 1], &[0]]), vec![0.5, 0.5]).unwrap();
        build_information_forest(&inst.to_scenarios())
    }

    #[test]
    fn single_sequence_lp_is_integral() {
        let f = two_key_forest();
        let relax = solve_lp_relaxation(&f).unwrap();
        assert!((relax.value - 2.0).abs() < 1e-9);
        assert!(relax
            .x
            .x
            .iter()
            .flatten()
            .all(|v| v.abs() < 1e-9 || (v - 1.0).abs() < 1e-9));
        let sol = approx_solve_forest(&f, 1, 4).unwrap();
        assert!((sol.policy_value - 2.0).abs() < 1e-9);
        assert!((sol.expected_value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_reward_instance() {
        let inst = ScenarioInstance::new(
            2,
            vec![Scenario {
                chains: chains(&[&[1]]),
                correct_key: 0,
                prob: 1.0,
            }],
        )
        .unwrap();
        let f = build_information_forest(&inst);
        assert_eq!(solve_lp_relaxation(&f).unwrap().value, 0.0);
        assert_eq!(approx_solve_forest(&f, 0, 2).unwrap().policy_value, 0.0);
        let red = reduce_to_mwlm(&f);
        assert!(red.weights[0].iter().all(|w| *w == 0.0));
    }

    #[test]
    fn conditional_inclusion_along_path() {
        let inst = ScenarioInstance::new(
            1,
            vec![Scenario {
                chains: chains(&[&[0], &[0]]),
                correct_key: 0,
                prob: 1.0,
            }],
        )
        .unwrap();
        let f = build_information_forest(&inst);
        let x = FractionalPolicy {
            x: vec![vec![0.4], vec![0.6]],
        };
        let r = Preallocation::for_forest(&f, &x).unwrap();
        assert!((r.inclusion_probability(0, 0) - 0.4).abs() < 1e-12);
        assert!((r.inclusion_probability(1, 0) - 1.0).abs() < 1e-12);
        let freq = allocation_frequencies(f.tree(), &r, 5, 20_000);
        assert!((freq[0][0] - 0.4).abs() < 0.02);
        assert!((freq[1][0] - 0.6).abs() < 0.02);
    }

    #[test]
    fn infeasible_fraction_rejected() {
        let f = two_key_forest();
        let x = FractionalPolicy {
            x: vec![vec![0.7, 0.7], vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        assert!(Preallocation::for_forest(&f, &x).is_err());
    }

    #[test]
    fn lattice_rounding_respects_capacity() {
        let inst = ScenarioInstance::new(
            1,
            vec![Scenario {
                chains: chains(&[&[0], &[0], &[0]]),
                correct_key: 0,
                prob: 1.0,
            }],
        )
        .unwrap();
        let f = build_information_forest(&inst);
        let x = FractionalPolicy {
            x: vec![vec![0.5], vec![0.9], vec![0.6]],
        };
        let weights = vec![vec![1.0]; 3];
        let r = Preallocation::new(f.tree(), &x, weights, vec![2]).unwrap();
        let mut rng = trial_rng(2, 0);
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            let run = r.run_path(f.path(0), &mut rng);
            let total: usize = run.allocated.iter().map(Vec::len).sum();
            assert!(total <= 2);
            for (t, a) in run.allocated.iter().enumerate() {
                counts[t] += a.len();
            }
        }
        for (t, p) in [0.5, 0.9, 0.6].into_iter().enumerate() {
            assert!((counts[t] as f64 / 20_000.0 - p).abs() < 0.02);
        }
    }

    #[test]
    fn sample_size_formula() {
        assert_eq!(sample_size(2, 3, 2, 0.5, 0.1).unwrap(), 1468);
        assert!(sample_size(2, 3, 2, 0.0, 0.1).is_err());
    }

    #[test]
    fn deterministic_prior_estimates_exactly() {
        let f = two_key_forest();
        let single = ScenarioInstance::new(
            2,
            vec![Scenario {
                chains: chains(&[&[0, 1], &[0, 1], &[0]]),
                correct_key: 0,
                prob: 1.0,
            }],
        )
        .unwrap();
        let g = build_information_forest(&single);
        let est = estimate_weights_from_samples(&g, 0.5, 0.1, || {
            Ok((chains(&[&[0, 1], &[0, 1], &[0]]), 0))
        })
        .unwrap();
        for o in 0..g.num_info_sets() {
            assert_eq!(est.weights[o], g.weights(o));
        }
        assert_eq!(est.unmatched, 0);
        assert_eq!(f.num_info_sets(), 3);
    }

    #[test]
    fn auction_keeps_heavier_comparable_item() {
        // right node 0 contains right node 1; bidder 0 gets both
        let inst = LaminarMatchingInstance {
            capacities: vec![1],
            types: LaminarFamily::new(vec![vec![0, 1], vec![0]]).unwrap(),
            weights: vec![vec![1.0, 3.0]],
        };
        let bidders = reduce_mwlm_to_auction(&inst);
        let alloc = vec![vec![0, 1]];
        let m = allocation_to_matching(&inst, &bidders, &alloc).unwrap();
        assert_eq!(m.edges, vec![(0, 1)]);
        assert_eq!(welfare(&bidders, &alloc), inst.weight(&m));
        let empty = allocation_to_matching(&inst, &bidders, &[vec![]]).unwrap();
        assert!(empty.edges.is_empty());
        assert!(allocation_to_matching(&inst, &bidders, &[vec![0, 0]]).is_err());
    }

    #[test]
    fn matching_validation() {
        let f = two_key_forest();
        let red = reduce_to_mwlm(&f);
        let bad = LaminarMatching {
            edges: vec![(0, 0), (0, 1)],
        };
        assert!(matching_to_policy(&red, &bad).is_err());
        let ok = LaminarMatching {
            edges: vec![(0, 0), (1, 1)],
        };
        let p = matching_to_policy(&red, &ok).unwrap();
        assert_eq!(policy_to_matching(&p), ok);
        assert!((eval_scenario_policy(&f, &p).unwrap() - red.weight(&ok)).abs() < 1e-12);
    }
}
