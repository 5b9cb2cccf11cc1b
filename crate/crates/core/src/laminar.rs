//! Laminar type families and the tree dynamic program behind the
//! (k-disjoint) antichain valuations: value, demand and supporting-price
//! oracles.

use serde::{Deserialize, Serialize};

use crate::error::{KeychainError, Result};

/// One type set per element; any two sets are nested or disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct LaminarFamily {
    types: Vec<Vec<usize>>,
}

impl TryFrom<Vec<Vec<usize>>> for LaminarFamily {
    type Error = KeychainError;
    fn try_from(types: Vec<Vec<usize>>) -> Result<Self> {
        LaminarFamily::new(types)
    }
}

impl From<LaminarFamily> for Vec<Vec<usize>> {
    fn from(f: LaminarFamily) -> Self {
        f.types
    }
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

impl LaminarFamily {
    /// Canonicalizes each type set and checks laminarity, naming the first
    /// offending pair.
    pub fn new(mut types: Vec<Vec<usize>>) -> Result<Self> {
        for t in &mut types {
            t.sort_unstable();
            t.dedup();
        }
        for i in 0..types.len() {
            for j in (i + 1)..types.len() {
                let common = intersection_size(&types[i], &types[j]);
                if common != 0 && common != types[i].len() && common != types[j].len() {
                    return Err(KeychainError::NotLaminar(i, j));
                }
            }
        }
        Ok(LaminarFamily { types })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self, i: usize) -> &[usize] {
        &self.types[i]
    }

    /// Whether elements `i` and `j` may share an antichain.
    pub fn disjoint(&self, i: usize, j: usize) -> bool {
        intersection_size(&self.types[i], &self.types[j]) == 0
    }

    /// T_j ⊆ T_i.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        intersection_size(&self.types[i], &self.types[j]) == self.types[j].len()
    }
}

/// Forest on a subset of elements where ancestors have larger type sets.
/// Elements with identical type sets are chained, lower id on top.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarForest {
    elements: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl LaminarForest {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Element id of node `v`.
    pub fn element(&self, v: usize) -> usize {
        self.elements[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&v| self.parent[v].is_none())
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.len()];
        // nodes are stored parents-first
        for v in 0..self.len() {
            depth[v] = self.parent[v].map_or(1, |p| depth[p] + 1);
        }
        depth.into_iter().max().unwrap_or(0)
    }
}

/// Builds the containment forest on `subset`, weighting element `i` by
/// `weights[i]`.
pub fn build_forest(family: &LaminarFamily, subset: &[usize], weights: &[f64]) -> LaminarForest {
    let mut order: Vec<usize> = subset.to_vec();
    order.sort_unstable_by_key(|&i| (std::cmp::Reverse(family.types(i).len()), i));
    order.dedup();
    let mut parent = vec![None; order.len()];
    let mut children = vec![Vec::new(); order.len()];
    for v in 0..order.len() {
        let i = order[v];
        if family.types(i).is_empty() {
            continue;
        }
        if let Some(p) = (0..v).rev().find(|&u| family.contains(order[u], i)) {
            parent[v] = Some(p);
            children[p].push(v);
        }
    }
    LaminarForest {
        weights: order.iter().map(|&i| weights[i]).collect(),
        elements: order,
        parent,
        children,
    }
}

/// Maximum total weight of at most `k` pairwise disjoint antichains, with
/// the antichains as ascending element ids (`A_1` first).
pub fn disjoint_antichains(forest: &LaminarForest, k: usize) -> (f64, Vec<Vec<usize>>) {
    let n = forest.len();
    let width = k + 1;
    // opt[v * width + u]; children come after parents, so fill backwards
    let mut opt = vec![0.0f64; n * width];
    let mut skip = vec![0.0f64; n * width];
    for v in (0..n).rev() {
        for u in 0..=k {
            skip[v * width + u] = forest.children[v].iter().map(|&c| opt[c * width + u]).sum();
        }
        for u in 1..=k {
            let take = forest.weights[v] + skip[v * width + u - 1];
            opt[v * width + u] = take.max(skip[v * width + u]);
        }
    }
    let mut antichains = vec![Vec::new(); k];
    let mut value = 0.0;
    let mut stack: Vec<(usize, usize)> = forest.roots().map(|r| (r, k)).collect();
    value += stack.iter().map(|&(r, _)| opt[r * width + k]).sum::<f64>();
    while let Some((v, u)) = stack.pop() {
        if u == 0 {
            continue;
        }
        let take = forest.weights[v] + skip[v * width + u - 1];
        let next = if take >= skip[v * width + u] {
            antichains[u - 1].push(forest.elements[v]);
            u - 1
        } else {
            u
        };
        stack.extend(forest.children[v].iter().map(|&c| (c, next)));
    }
    for a in &mut antichains {
        a.sort_unstable();
    }
    (value, antichains)
}

/// XOS valuation of a bidder: best weight of `k` disjoint antichains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntichainValuation {
    weights: Vec<f64>,
    family: LaminarFamily,
    k: usize,
}

impl AntichainValuation {
    pub fn new(weights: Vec<f64>, family: LaminarFamily, k: usize) -> Result<Self> {
        if weights.len() != family.len() {
            return Err(KeychainError::InvalidInput(format!(
                "{} weights for {} elements",
                weights.len(),
                family.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(KeychainError::InvalidInput(format!(
                "weight {w} is not finite"
            )));
        }
        if k == 0 {
            return Err(KeychainError::InvalidInput(
                "budget k must be at least 1".into(),
            ));
        }
        Ok(AntichainValuation { weights, family, k })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn family(&self) -> &LaminarFamily {
        &self.family
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn best_on(&self, subset: &[usize], weights: &[f64]) -> (f64, Vec<Vec<usize>>) {
        disjoint_antichains(&build_forest(&self.family, subset, weights), self.k)
    }
}

pub fn value_query(v: &AntichainValuation, subset: &[usize]) -> f64 {
    v.best_on(subset, &v.weights).0
}

/// Bundle maximizing value minus price.
pub fn demand_query(v: &AntichainValuation, prices: &[f64]) -> Result<Vec<usize>> {
    if prices.len() != v.len() {
        return Err(KeychainError::InvalidInput(format!(
            "{} prices for {} elements",
            prices.len(),
            v.len()
        )));
    }
    if let Some(p) = prices.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(KeychainError::InvalidInput(format!("invalid price {p}")));
    }
    let adjusted: Vec<f64> = v.weights.iter().zip(prices).map(|(w, p)| w - p).collect();
    let all: Vec<usize> = (0..v.len()).collect();
    let (_, antichains) = v.best_on(&all, &adjusted);
    let mut out: Vec<usize> = antichains
        .into_iter()
        .flatten()
        .filter(|&i| adjusted[i] > 0.0)
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Additive prices supporting `v` at `subset`: the element's weight if it
/// is in the maximizing antichains, else zero.
pub fn supporting_prices(v: &AntichainValuation, subset: &[usize]) -> Vec<f64> {
    let (_, antichains) = v.best_on(subset, &v.weights);
    let mut prices = vec![0.0; v.len()];
    for i in antichains.into_iter().flatten() {
        prices[i] = v.weights[i];
    }
    prices
}
