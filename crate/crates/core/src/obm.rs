//! Stochastic edge-weighted online bipartite b-matching: offline nodes with
//! capacities, online arrivals whose weight columns are drawn jointly from
//! a finite support.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{max_weight_assignment, WeightMatrix};
use crate::error::{KeychainError, Result};
use crate::laminar::LaminarFamily;
use crate::lp::DenseSimplex;
use crate::model::{check_distribution, trial_rng, PrefixForest, ScenarioSampler};
use crate::scenarios::{
    solve_assignment_lp, FractionalPolicy, LaminarMatchingInstance, MonteCarlo, Preallocation,
};

/// States allowed in the philosopher's backward induction.
pub const MAX_PHILOSOPHER_STATES: usize = 2_000_000;

/// One weight matrix of the support, `weights[i][j]` for offline node `i`
/// and arrival `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub weights: Vec<Vec<f64>>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WobmRepr", into = "WobmRepr")]
pub struct WobmInstance {
    capacities: Vec<usize>,
    num_arrivals: usize,
    support: Vec<WeightProfile>,
}

#[derive(Serialize, Deserialize)]
struct WobmRepr {
    capacities: Vec<usize>,
    num_arrivals: usize,
    support: Vec<WeightProfile>,
}

impl TryFrom<WobmRepr> for WobmInstance {
    type Error = KeychainError;
    fn try_from(r: WobmRepr) -> Result<Self> {
        WobmInstance::new(r.capacities, r.num_arrivals, r.support)
    }
}

impl From<WobmInstance> for WobmRepr {
    fn from(i: WobmInstance) -> Self {
        WobmRepr {
            capacities: i.capacities,
            num_arrivals: i.num_arrivals,
            support: i.support,
        }
    }
}

impl WobmInstance {
    pub fn new(
        capacities: Vec<usize>,
        num_arrivals: usize,
        support: Vec<WeightProfile>,
    ) -> Result<Self> {
        if capacities.is_empty() || num_arrivals == 0 || support.is_empty() {
            return Err(KeychainError::InvalidInstance(
                "need offline nodes, arrivals and a nonempty support".into(),
            ));
        }
        if capacities.contains(&0) {
            return Err(KeychainError::InvalidInstance(
                "capacities must be at least 1".into(),
            ));
        }
        let probs: Vec<f64> = support.iter().map(|w| w.prob).collect();
        check_distribution(&probs, "support probabilities")?;
        for (s, prof) in support.iter().enumerate() {
            if prof.weights.len() != capacities.len()
                || prof.weights.iter().any(|r| r.len() != num_arrivals)
            {
                return Err(KeychainError::InvalidInstance(format!(
                    "weight matrix {s} is not {}x{num_arrivals}",
                    capacities.len()
                )));
            }
            if prof
                .weights
                .iter()
                .flatten()
                .any(|w| !w.is_finite() || *w < 0.0)
            {
                return Err(KeychainError::InvalidInstance(format!(
                    "weight matrix {s} has a negative or non-finite entry"
                )));
            }
        }
        Ok(WobmInstance {
            capacities,
            num_arrivals,
            support,
        })
    }

    pub fn num_offline(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_arrivals(&self) -> usize {
        self.num_arrivals
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn support(&self) -> &[WeightProfile] {
        &self.support
    }
}

/// Arrival-prefix information sets of a WOBM instance.
#[derive(Debug, Clone)]
pub struct WobmForest {
    pub tree: PrefixForest,
    /// Weight column revealed at each node, indexed `[o][i]`.
    pub columns: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    pub support_probs: Vec<f64>,
}

impl WobmForest {
    pub fn build(instance: &WobmInstance) -> Self {
        let key = |v: f64| if v == 0.0 { 0u64 } else { v.to_bits() };
        let sequences: Vec<Vec<Vec<u64>>> = instance
            .support
            .iter()
            .map(|p| {
                (0..instance.num_arrivals)
                    .map(|j| p.weights.iter().map(|row| key(row[j])).collect())
                    .collect()
            })
            .collect();
        let (tree, labels) = PrefixForest::build(&sequences);
        let columns = labels
            .into_iter()
            .map(|c| c.into_iter().map(f64::from_bits).collect())
            .collect();
        let support_probs: Vec<f64> = instance.support.iter().map(|p| p.prob).collect();
        WobmForest {
            probs: tree.node_masses(&support_probs),
            tree,
            columns,
            support_probs,
        }
    }

    /// `p_o · w_{i,o}`, indexed `[o][i]`.
    pub fn edge_weights(&self) -> Vec<Vec<f64>> {
        self.columns
            .iter()
            .zip(&self.probs)
            .map(|(col, p)| col.iter().map(|w| p * w).collect())
            .collect()
    }
}

/// Offline nodes on the left, arrival prefixes on the right.
pub fn reduce_wobm_to_mwlbm(instance: &WobmInstance) -> (LaminarMatchingInstance, WobmForest) {
    let forest = WobmForest::build(instance);
    let w = forest.edge_weights();
    let types = (0..forest.tree.len())
        .map(|o| forest.tree.consistent(o).to_vec())
        .collect();
    let lm = LaminarMatchingInstance {
        capacities: instance.capacities.clone(),
        types: LaminarFamily::new(types).expect("prefix consistency sets are laminar"),
        weights: (0..instance.num_offline())
            .map(|i| w.iter().map(|row| row[i]).collect())
            .collect(),
    };
    (lm, forest)
}

#[derive(Debug, Clone, Serialize)]
pub struct WobmSolution {
    pub lp_value: f64,
    /// Exact expected value of the online rounding.
    pub expected_value: f64,
    pub monte_carlo: MonteCarlo,
    pub x: FractionalPolicy,
}

/// The rounding engine for a WOBM instance.
pub fn wobm_rounding(
    instance: &WobmInstance,
) -> Result<(WobmForest, f64, Preallocation, FractionalPolicy)> {
    let forest = WobmForest::build(instance);
    let relax = solve_assignment_lp(
        &DenseSimplex,
        &forest.tree,
        &forest.edge_weights(),
        &instance.capacities,
    )?;
    let rounding = Preallocation::new(
        &forest.tree,
        &relax.x,
        forest.columns.clone(),
        instance.capacities.clone(),
    )?;
    Ok((forest, relax.value, rounding, relax.x))
}

/// LP relaxation plus preallocation rounding, evaluated exactly and by
/// `trials` simulated arrival sequences.
pub fn solve_wobm(instance: &WobmInstance, seed: u64, trials: usize) -> Result<WobmSolution> {
    if trials == 0 {
        return Err(KeychainError::InvalidInput(
            "trials must be at least 1".into(),
        ));
    }
    let (forest, lp_value, rounding, x) = wobm_rounding(instance)?;
    let expected_value = rounding.expected_value(&forest.edge_weights());
    let sampler = ScenarioSampler::new(&forest.support_probs);
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let s = sampler.sample(&mut rng);
            let path = forest.tree.path(s);
            let run = rounding.run_path(path, &mut rng);
            path.iter()
                .zip(&run.played)
                .filter_map(|(&o, k)| k.map(|k| forest.columns[o][k]))
                .sum()
        })
        .collect();
    Ok(WobmSolution {
        lp_value,
        expected_value,
        monte_carlo: MonteCarlo::from_samples(&samples),
        x,
    })
}

/// Bayes-optimal online value by backward induction over (arrival prefix,
/// residual capacities).
pub fn philosopher_oracle(instance: &WobmInstance) -> Result<f64> {
    let forest = WobmForest::build(instance);
    let states: f64 = forest.tree.len() as f64
        * instance
            .capacities
            .iter()
            .map(|&b| (b + 1) as f64)
            .product::<f64>();
    if states > MAX_PHILOSOPHER_STATES as f64 {
        return Err(KeychainError::SizeGuard {
            what: "philosopher states",
            actual: states.min(usize::MAX as f64) as usize,
            limit: MAX_PHILOSOPHER_STATES,
        });
    }
    let mut memo = HashMap::new();
    let roots: Vec<usize> = forest.tree.roots().collect();
    let value = roots
        .iter()
        .map(|&o| {
            forest.probs[o] * philosopher_value(&forest, o, instance.capacities.clone(), &mut memo)
        })
        .sum();
    Ok(value)
}

fn philosopher_value(
    f: &WobmForest,
    o: usize,
    residual: Vec<usize>,
    memo: &mut HashMap<(usize, Vec<usize>), f64>,
) -> f64 {
    if f.probs[o] <= 0.0 {
        return 0.0;
    }
    if let Some(&v) = memo.get(&(o, residual.clone())) {
        return v;
    }
    let continuation = |r: &Vec<usize>, memo: &mut HashMap<(usize, Vec<usize>), f64>| -> f64 {
        f.tree
            .children(o)
            .iter()
            .map(|&c| f.probs[c] / f.probs[o] * philosopher_value(f, c, r.clone(), memo))
            .sum()
    };
    let mut best = continuation(&residual, memo);
    for i in 0..residual.len() {
        let w = f.columns[o][i];
        if residual[i] == 0 || w <= 0.0 {
            continue;
        }
        let mut r = residual.clone();
        r[i] -= 1;
        best = best.max(w + continuation(&r, memo));
    }
    memo.insert((o, residual), best);
    best
}

/// Offline maximum-weight b-matching, by replicating each offline node
/// `b_i` times in an assignment problem.
pub fn offline_b_matching(weights: &[Vec<f64>], capacities: &[usize]) -> Result<f64> {
    let rows: Vec<Vec<f64>> = weights
        .iter()
        .zip(capacities)
        .flat_map(|(row, &b)| std::iter::repeat_n(row.clone(), b))
        .collect();
    Ok(max_weight_assignment(&WeightMatrix::new(rows)?).value)
}
