//! Keychain order selection: the learner also picks the order in which the
//! chains are presented.

use serde::{Deserialize, Serialize};

use crate::assignment::solve_known_order;
use crate::error::{KeychainError, Result};
use crate::model::{Chain, KnownOrderInstance};

pub const MAX_BRUTE_FORCE_CHAINS: usize = 7;

/// Multiset of chains with a prior over keys; the order is free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderInstance {
    inner: KnownOrderInstance,
}

impl OrderInstance {
    pub fn new(num_keys: usize, chains: Vec<Chain>, prior: Vec<f64>) -> Result<Self> {
        Ok(OrderInstance {
            inner: KnownOrderInstance::new(num_keys, chains, prior)?,
        })
    }

    pub fn num_keys(&self) -> usize {
        self.inner.num_keys()
    }

    pub fn num_chains(&self) -> usize {
        self.inner.num_rounds()
    }

    pub fn chains(&self) -> &[Chain] {
        self.inner.chains()
    }

    pub fn prior(&self) -> &[f64] {
        self.inner.prior()
    }

    /// Chains in the input order, as a known-order instance.
    pub fn as_known_order(&self) -> &KnownOrderInstance {
        &self.inner
    }

    /// Known-order instance presenting chain `order[t]` at round `t`.
    pub fn with_order(&self, order: &[usize]) -> KnownOrderInstance {
        let chains = order.iter().map(|&c| self.chains()[c].clone()).collect();
        KnownOrderInstance::new(self.num_keys(), chains, self.prior().to_vec())
            .expect("reordering keeps the instance valid")
    }

    /// Whether the prior is uniform and there are as many chains as keys.
    pub fn is_square_uniform(&self) -> bool {
        let n = self.num_keys();
        self.num_chains() == n
            && self
                .prior()
                .iter()
                .all(|p| (p - 1.0 / n as f64).abs() < 1e-12)
    }
}

/// Ordering `order[t]` = chain shown at round `t`, and key selection
/// `selection[c]` = key tested on chain `c` (by input index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderPolicy {
    pub order: Vec<usize>,
    pub selection: Vec<Option<usize>>,
}

impl OrderPolicy {
    pub fn reversed(&self) -> OrderPolicy {
        let mut order = self.order.clone();
        order.reverse();
        OrderPolicy {
            order,
            selection: self.selection.clone(),
        }
    }
}

pub fn eval_order_policy(instance: &OrderInstance, policy: &OrderPolicy) -> Result<f64> {
    let m = instance.num_chains();
    let mut seen = vec![false; m];
    if policy.order.len() != m || policy.selection.len() != m {
        return Err(KeychainError::InvalidPolicy(format!(
            "order policy must cover all {m} chains"
        )));
    }
    for &c in &policy.order {
        if c >= m || std::mem::replace(&mut seen[c], true) {
            return Err(KeychainError::InvalidPolicy(
                "ordering is not a permutation".into(),
            ));
        }
    }
    let mut owner = vec![None; instance.num_keys()];
    for (c, k) in policy.selection.iter().enumerate() {
        let Some(k) = *k else { continue };
        if !instance.chains()[c].contains(k) {
            return Err(KeychainError::InvalidPolicy(format!(
                "key {k} is not on chain {c}"
            )));
        }
        if let Some(prev) = owner[k].replace(c) {
            return Err(KeychainError::Inadmissible {
                scenario: 0,
                key: k,
                first: prev,
                second: c,
            });
        }
    }
    let mut value = 0.0;
    for (t, &c) in policy.order.iter().enumerate() {
        if let Some(k) = policy.selection[c] {
            let later = policy.order[t..]
                .iter()
                .filter(|&&d| instance.chains()[d].contains(k))
                .count();
            value += instance.prior()[k] * later as f64;
        }
    }
    Ok(value)
}

fn solve_with_order(instance: &OrderInstance, order: Vec<usize>) -> (f64, OrderPolicy) {
    let (v, p) = solve_known_order(&instance.with_order(&order));
    let mut selection = vec![None; instance.num_chains()];
    for (t, k) in p.assignment.into_iter().enumerate() {
        selection[order[t]] = k;
    }
    (v, OrderPolicy { order, selection })
}

/// Solves the input order and its reverse exactly and keeps the better
/// (the input order on ties).
pub fn best_of_two(instance: &OrderInstance) -> (f64, OrderPolicy) {
    let forward: Vec<usize> = (0..instance.num_chains()).collect();
    let backward: Vec<usize> = forward.iter().rev().copied().collect();
    let a = solve_with_order(instance, forward);
    let b = solve_with_order(instance, backward);
    if b.0 > a.0 + 1e-12 {
        b
    } else {
        a
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Exact optimum over all orderings; the first ordering in lexicographic
/// order wins ties.
pub fn brute_force_order_opt(instance: &OrderInstance) -> Result<(f64, OrderPolicy)> {
    let m = instance.num_chains();
    if m > MAX_BRUTE_FORCE_CHAINS {
        return Err(KeychainError::SizeGuard {
            what: "number of chains",
            actual: m,
            limit: MAX_BRUTE_FORCE_CHAINS,
        });
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut best = solve_with_order(instance, order.clone());
    while next_permutation(&mut order) {
        let cand = solve_with_order(instance, order.clone());
        if cand.0 > best.0 + 1e-12 {
            best = cand;
        }
    }
    Ok(best)
}

/// `(n + 1) / 2`, the largest value of a square uniform instance.
pub fn square_upper_bound(n: usize) -> f64 {
    (n as f64 + 1.0) / 2.0
}

/// Order instance for a square binary matrix: complement it, prepend a
/// ones column, append a ones row, and read chain `j` off row `j`.
pub fn utmp_gadget(matrix: &[Vec<u8>]) -> Result<OrderInstance> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(KeychainError::InvalidInput("matrix must be square".into()));
    }
    if matrix.iter().flatten().any(|&v| v > 1) {
        return Err(KeychainError::InvalidInput("matrix must be binary".into()));
    }
    let mut b = vec![vec![1u8; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            b[i][j + 1] = 1 - matrix[i][j];
        }
    }
    let chains = b
        .iter()
        .map(|row| Chain::new((0..=n).filter(|&i| row[i] == 1)))
        .collect::<Result<Vec<_>>>()?;
    OrderInstance::new(n + 1, chains, vec![1.0 / (n + 1) as f64; n + 1])
}

/// Whether a square uniform instance attains `(n + 1) / 2`.
pub fn reaches_upper_bound(instance: &OrderInstance) -> Result<bool> {
    if !instance.is_square_uniform() {
        return Err(KeychainError::InvalidInput(
            "upper-bound test needs a square instance with a uniform prior".into(),
        ));
    }
    let (v, _) = brute_force_order_opt(instance)?;
    Ok(v >= square_upper_bound(instance.num_keys()) - 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::chains;

    fn two_chain() -> OrderInstance {
        OrderInstance::new(2, chains(&[&[0], &[0, 1]]), vec![0.5, 0.5]).unwrap()
    }

    fn adjacency(rows: &[&[u8]]) -> OrderInstance {
        // rows are keys, columns chains
        let n = rows.len();
        let cs = (0..rows[0].len())
            .map(|j| Chain::new((0..n).filter(|&i| rows[i][j] == 1)).unwrap())
            .collect();
        OrderInstance::new(n, cs, vec![1.0 / n as f64; n]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let inst = two_chain();
        let p = OrderPolicy {
            order: vec![0, 1],
            selection: vec![Some(0), Some(1)],
        };
        assert_eq!(eval_order_policy(&inst, &p).unwrap(), 1.5);
        let q = OrderPolicy {
            order: vec![1, 0],
            selection: vec![None, Some(0)],
        };
        assert_eq!(eval_order_policy(&inst, &q).unwrap(), 1.0);
        let null = OrderPolicy {
            order: vec![0, 1],
            selection: vec![None, None],
        };
        assert_eq!(eval_order_policy(&inst, &null).unwrap(), 0.0);
        let off = OrderPolicy {
            order: vec![0, 1],
            selection: vec![Some(1), None],
        };
        assert!(eval_order_policy(&inst, &off).is_err());
    }

    #[test]
    fn best_of_two_examples() {
        let inst = two_chain();
        let (v, p) = best_of_two(&inst);
        assert_eq!(v, 1.5);
        assert_eq!(p.order, vec![0, 1]);
        assert_eq!(brute_force_order_opt(&inst).unwrap().0, 1.5);

        let tri = adjacency(&[&[1, 1, 1], &[0, 1, 1], &[0, 0, 1]]);
        assert!((best_of_two(&tri).0 - 2.0).abs() < 1e-12);
        assert!(reaches_upper_bound(&tri).unwrap());
        let id = adjacency(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert!(!reaches_upper_bound(&id).unwrap());
        let ones = adjacency(&[&[1, 1], &[1, 1]]);
        assert!(reaches_upper_bound(&ones).unwrap());
    }

    #[test]
    fn gadget_examples() {
        let g = utmp_gadget(&[vec![0]]).unwrap();
        assert_eq!(g.chains(), chains(&[&[0, 1], &[0, 1]]).as_slice());
        assert!((brute_force_order_opt(&g).unwrap().0 - 1.5).abs() < 1e-12);
        let g = utmp_gadget(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!((g.num_keys(), g.num_chains()), (3, 3));
        assert!(brute_force_order_opt(&g).unwrap().0 < 2.0 - 1e-9);
        assert!(utmp_gadget(&[vec![0, 1]]).is_err());
    }

    #[test]
    fn guard() {
        let one: &[usize] = &[0];
        let inst = OrderInstance::new(1, chains(&[one; 8]), vec![1.0]).unwrap();
        assert!(brute_force_order_opt(&inst).is_err());
    }
}
