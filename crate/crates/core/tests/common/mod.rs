//! Brute-force reference solvers shared by the integration tests. None of
//! these call into the solver under test.
#![allow(dead_code)]

use std::collections::HashMap;
use std::ops::{Add, Mul};

use num_rational::Ratio;

pub type Q = Ratio<i64>;

pub trait Scalar: Clone + PartialOrd + Add<Output = Self> + Mul<Output = Self> {
    fn zero() -> Self;
    fn count(n: usize) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn count(n: usize) -> Self {
        n as f64
    }
}

impl Scalar for Q {
    fn zero() -> Self {
        Q::from_integer(0)
    }
    fn count(n: usize) -> Self {
        Q::from_integer(n as i64)
    }
}

/// Scenario as plain data: chains, correct key, probability.
#[derive(Clone, Debug)]
pub struct RawScenario<T> {
    pub chains: Vec<Vec<usize>>,
    pub correct: usize,
    pub prob: T,
}

/// Information sets of a list of scenarios, keyed by chain prefix.
pub struct Prefixes {
    pub ids: HashMap<Vec<Vec<usize>>, usize>,
    pub chain: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
}

pub fn prefixes<T>(scenarios: &[RawScenario<T>]) -> Prefixes {
    let mut p = Prefixes {
        ids: HashMap::new(),
        chain: Vec::new(),
        parent: Vec::new(),
    };
    for s in scenarios {
        let mut prev = None;
        for t in 0..s.chains.len() {
            let key = s.chains[..=t].to_vec();
            let next = p.chain.len();
            let id = *p.ids.entry(key).or_insert(next);
            if id == next {
                p.chain.push(s.chains[t].clone());
                p.parent.push(prev);
            }
            prev = Some(id);
        }
    }
    p
}

/// Expected successes of a policy given as info set -> key.
pub fn evaluate<T: Scalar>(
    scenarios: &[RawScenario<T>],
    pre: &Prefixes,
    play: &[Option<usize>],
) -> T {
    let mut total = T::zero();
    for s in scenarios {
        for t in 0..s.chains.len() {
            let o = pre.ids[&s.chains[..=t].to_vec()];
            if play[o] == Some(s.correct) {
                let future = s.chains[t..]
                    .iter()
                    .filter(|c| c.contains(&s.correct))
                    .count();
                total = total + s.prob.clone() * T::count(future);
                break;
            }
        }
    }
    total
}

/// Optimum over every admissible deterministic policy.
pub fn exhaustive_optimum<T: Scalar>(scenarios: &[RawScenario<T>]) -> T {
    let pre = prefixes(scenarios);
    let mut play = vec![None; pre.chain.len()];
    let mut best = T::zero();
    enumerate(scenarios, &pre, 0, &mut play, &mut best);
    best
}

fn used_above(pre: &Prefixes, o: usize, play: &[Option<usize>], k: usize) -> bool {
    let mut cur = pre.parent[o];
    while let Some(p) = cur {
        if play[p] == Some(k) {
            return true;
        }
        cur = pre.parent[p];
    }
    false
}

fn enumerate<T: Scalar>(
    scenarios: &[RawScenario<T>],
    pre: &Prefixes,
    o: usize,
    play: &mut Vec<Option<usize>>,
    best: &mut T,
) {
    if o == pre.chain.len() {
        let v = evaluate(scenarios, pre, play);
        if v > *best {
            *best = v;
        }
        return;
    }
    play[o] = None;
    enumerate(scenarios, pre, o + 1, play, best);
    for k in pre.chain[o].clone() {
        if !used_above(pre, o, play, k) {
            play[o] = Some(k);
            enumerate(scenarios, pre, o + 1, play, best);
        }
    }
    play[o] = None;
}

/// Known chain order: optimum over all injective partial key selections.
pub fn known_order_optimum(chains: &[Vec<usize>], prior: &[f64]) -> f64 {
    fn go(chains: &[Vec<usize>], prior: &[f64], t: usize, used: &mut Vec<bool>) -> f64 {
        if t == chains.len() {
            return 0.0;
        }
        let mut best = go(chains, prior, t + 1, used);
        for &k in &chains[t] {
            if used[k] {
                continue;
            }
            used[k] = true;
            let future = chains[t..].iter().filter(|c| c.contains(&k)).count();
            best = best.max(prior[k] * future as f64 + go(chains, prior, t + 1, used));
            used[k] = false;
        }
        best
    }
    go(chains, prior, 0, &mut vec![false; prior.len()])
}

/// Best weight of `k` disjoint antichains inside every subset of a laminar
/// ground set, indexed by bitmask. A subset splits into `k` antichains iff
/// its longest chain has at most `k` elements, and a chain of a laminar
/// family is a set of types sharing a point.
pub fn antichain_values(types: &[Vec<usize>], weights: &[f64], k: usize) -> Vec<f64> {
    let n = types.len();
    let universe = types.iter().flatten().copied().max().map_or(0, |u| u + 1);
    let mut best = vec![0.0f64; 1 << n];
    for mask in 0usize..(1 << n) {
        let deepest = (0..universe)
            .map(|u| {
                (0..n)
                    .filter(|&i| mask >> i & 1 == 1 && types[i].contains(&u))
                    .count()
            })
            .max()
            .unwrap_or(0);
        if deepest <= k {
            best[mask] = (0..n)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| weights[i])
                .sum();
        }
    }
    // superset sweep: best feasible subset of each mask
    for i in 0..n {
        for mask in 0usize..(1 << n) {
            if mask >> i & 1 == 1 {
                let without = best[mask ^ (1 << i)];
                if without > best[mask] {
                    best[mask] = without;
                }
            }
        }
    }
    best
}

pub fn mask_of(set: &[usize]) -> usize {
    set.iter().map(|&i| 1usize << i).sum()
}

pub fn min_vertex_cover(vertices: usize, edges: &[(usize, usize)]) -> usize {
    (0usize..(1 << vertices))
        .filter(|m| {
            edges
                .iter()
                .all(|&(u, v)| m >> u & 1 == 1 || m >> v & 1 == 1)
        })
        .map(|m| m.count_ones() as usize)
        .min()
        .unwrap()
}

/// `Pr[Bin(n, p) >= k]`.
pub fn binomial_upper_tail(n: usize, p: f64, k: usize) -> f64 {
    let mut total = 0.0;
    for j in k..=n {
        let ln_choose: f64 = (1..=j).map(|i| ((n - j + i) as f64 / i as f64).ln()).sum();
        total += (ln_choose + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp();
    }
    total.min(1.0)
}
