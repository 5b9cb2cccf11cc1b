//! Exhaustive Bayes-optimal solvers, exponential by design. They serve as
//! ground truth for the polynomial algorithms on small instances.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{KeychainError, Result};
use crate::model::{
    build_information_forest, CorrectnessModel, InformationForest, MultiKeyInstance, Policy,
    ScenarioInstance,
};

pub const MAX_ONE_KEY_KEYS: usize = 20;
pub const MAX_ONE_KEY_INFO_SETS: usize = 5000;
/// Memo entries allowed per multi-key solve (per policy class).
pub const MAX_MULTI_KEY_STATES: usize = 4_000_000;

/// Optimal admissible policy for a scenario instance.
pub fn solve_one_key_mdp(instance: &ScenarioInstance) -> Result<(f64, Policy)> {
    solve_one_key_forest(&build_information_forest(instance))
}

/// Backward induction over (information set, set of failed keys).
pub fn solve_one_key_forest(forest: &InformationForest) -> Result<(f64, Policy)> {
    if forest.num_keys() > MAX_ONE_KEY_KEYS {
        return Err(KeychainError::SizeGuard {
            what: "number of keys",
            actual: forest.num_keys(),
            limit: MAX_ONE_KEY_KEYS,
        });
    }
    if forest.num_info_sets() > MAX_ONE_KEY_INFO_SETS {
        return Err(KeychainError::SizeGuard {
            what: "number of information sets",
            actual: forest.num_info_sets(),
            limit: MAX_ONE_KEY_INFO_SETS,
        });
    }
    let mut solver = OneKey {
        forest,
        memo: HashMap::new(),
    };
    let roots: Vec<usize> = forest.tree().roots().collect();
    let value = roots.iter().map(|&o| solver.value(o, 0)).sum();
    let mut assignment = vec![None; forest.num_info_sets()];
    let mut stack: Vec<(usize, u32)> = roots.into_iter().map(|o| (o, 0)).collect();
    while let Some((o, mask)) = stack.pop() {
        let action = solver.memo[&(o, mask)].1;
        assignment[o] = action;
        let next = action.map_or(mask, |k| mask | 1 << k);
        for &c in forest.children(o) {
            solver.value(c, next);
            stack.push((c, next));
        }
    }
    Ok((value, Policy::scenario(assignment)))
}

struct OneKey<'a> {
    forest: &'a InformationForest,
    memo: HashMap<(usize, u32), (f64, Option<usize>)>,
}

impl OneKey<'_> {
    fn value(&mut self, o: usize, mask: u32) -> f64 {
        if let Some(&(v, _)) = self.memo.get(&(o, mask)) {
            return v;
        }
        let f = self.forest;
        let t = f.depth(o);
        let live = |s: &usize| mask & (1 << f.correct_key(*s)) == 0 && f.scenario_prob(*s) > 0.0;
        let result = if !f.consistent(o).iter().any(live) {
            (0.0, None)
        } else {
            let mut best = (
                f.children(o)
                    .iter()
                    .map(|&c| self.value(c, mask))
                    .sum::<f64>(),
                None,
            );
            for &k in f.chain(o).keys() {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let gain: f64 = f
                    .consistent(o)
                    .iter()
                    .filter(|s| live(s) && f.correct_key(**s) == k)
                    .map(|&s| f.scenario_prob(s) * f.scenario_reward(k, s, t) as f64)
                    .sum();
                let next = mask | 1 << k;
                let rest: f64 = f.children(o).iter().map(|&c| self.value(c, next)).sum();
                if gain + rest > best.0 + 1e-12 {
                    best = (gain + rest, Some(k));
                }
            }
            best
        };
        self.memo.insert((o, mask), result);
        result.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiKeySolution {
    /// Bayes-optimal expected number of successful rounds.
    pub optimum: f64,
    /// Key played in round 0 by the optimal policy (smallest id on ties).
    pub first_action: usize,
    /// Best value among policies that replay a known-correct key whenever one
    /// is on the chain.
    pub exploit_value: f64,
}

/// Exact optimum for the multi-correct-key setting by recursion over
/// (round, known-correct keys, known-incorrect keys).
///
/// Key statuses are only tracked for keys that still appear in a later
/// chain, which keeps long instances with short-lived keys tractable; the
/// guard is on the number of memoized states rather than on raw sizes.
pub fn solve_multi_key_mdp(instance: &MultiKeyInstance) -> Result<MultiKeySolution> {
    let n = instance.num_keys();
    if n > 64 {
        return Err(KeychainError::SizeGuard {
            what: "number of keys",
            actual: n,
            limit: 64,
        });
    }
    let chains: Vec<u64> = instance
        .chains()
        .iter()
        .map(|c| c.keys().iter().fold(0u64, |m, &k| m | 1 << k))
        .collect();
    let mut live = vec![0u64; chains.len() + 1];
    for t in (0..chains.len()).rev() {
        live[t] = live[t + 1] | chains[t];
    }
    let (q, dueling) = match instance.model() {
        CorrectnessModel::Independent { accept_probs } => (accept_probs.clone(), false),
        CorrectnessModel::Dueling { pair_probs } => (
            pair_probs.iter().flat_map(|&p| [p, 1.0 - p]).collect(),
            true,
        ),
    };
    let mut correct = 0u64;
    let mut incorrect = 0u64;
    for (k, &p) in q.iter().enumerate() {
        if p >= 1.0 {
            correct |= 1 << k;
        } else if p <= 0.0 {
            incorrect |= 1 << k;
        }
    }
    let solve = |exploit: bool| -> Result<(f64, usize)> {
        let mut mdp = MultiKey {
            chains: &chains,
            live: &live,
            q: &q,
            dueling,
            exploit,
            memo: HashMap::new(),
        };
        let v = mdp.value(0, correct, incorrect)?;
        let first = mdp.best_action(0, correct, incorrect)?.1;
        Ok((v, first))
    };
    let (optimum, first_action) = solve(false)?;
    let (exploit_value, _) = solve(true)?;
    Ok(MultiKeySolution {
        optimum,
        first_action,
        exploit_value,
    })
}

struct MultiKey<'a> {
    chains: &'a [u64],
    live: &'a [u64],
    q: &'a [f64],
    dueling: bool,
    exploit: bool,
    memo: HashMap<(usize, u64, u64), f64>,
}

impl MultiKey<'_> {
    fn value(&mut self, t: usize, correct: u64, incorrect: u64) -> Result<f64> {
        if t == self.chains.len() {
            return Ok(0.0);
        }
        let live = self.live[t];
        let key = (t, correct & live, incorrect & live);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if self.memo.len() >= MAX_MULTI_KEY_STATES {
            return Err(KeychainError::SizeGuard {
                what: "multi-key memo states",
                actual: self.memo.len(),
                limit: MAX_MULTI_KEY_STATES,
            });
        }
        let v = self.best_action(t, key.1, key.2)?.0;
        self.memo.insert(key, v);
        Ok(v)
    }

    fn best_action(&mut self, t: usize, correct: u64, incorrect: u64) -> Result<(f64, usize)> {
        let chain = self.chains[t];
        if chain & correct != 0 {
            let k = (chain & correct).trailing_zeros() as usize;
            let stay = 1.0 + self.value(t + 1, correct, incorrect)?;
            if self.exploit {
                return Ok((stay, k));
            }
            let mut best = (stay, k);
            self.explore(t, correct, incorrect, &mut best)?;
            return Ok(best);
        }
        let useless =
            (chain & incorrect != 0).then(|| (chain & incorrect).trailing_zeros() as usize);
        let mut best = match useless {
            Some(k) => (self.value(t + 1, correct, incorrect)?, k),
            None => (f64::NEG_INFINITY, usize::MAX),
        };
        self.explore(t, correct, incorrect, &mut best)?;
        Ok(best)
    }

    /// Tries every untested key of chain `t`, updating `best` on strict improvement.
    fn explore(
        &mut self,
        t: usize,
        correct: u64,
        incorrect: u64,
        best: &mut (f64, usize),
    ) -> Result<()> {
        let mut untested = self.chains[t] & !(correct | incorrect);
        while untested != 0 {
            let k = untested.trailing_zeros() as usize;
            untested &= untested - 1;
            let p = self.q[k];
            let (hit, miss) = if self.dueling {
                let mate = 1u64 << (k ^ 1);
                (
                    (correct | 1 << k, incorrect | mate),
                    (correct | mate, incorrect | 1 << k),
                )
            } else {
                ((correct | 1 << k, incorrect), (correct, incorrect | 1 << k))
            };
            let mut v = 0.0;
            if p > 0.0 {
                v += p * (1.0 + self.value(t + 1, hit.0, hit.1)?);
            }
            if p < 1.0 {
                v += (1.0 - p) * self.value(t + 1, miss.0, miss.1)?;
            }
            if v > best.0 + 1e-12 || (best.1 == usize::MAX) {
                *best = (v, k);
            }
        }
        Ok(())
    }
}
