use std::collections::HashMap;
use std::hash::Hash;

use super::{check_distribution, Chain, ScenarioInstance};
use crate::error::{KeychainError, Result};

/// Deduplicated prefix tree over a family of label sequences.
///
/// Node ids are assigned in order of first appearance while scanning the
/// sequences in order, so the path of sequence 0 is `0, 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixForest {
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
    consistent: Vec<Vec<usize>>,
    paths: Vec<Vec<usize>>,
}

impl PrefixForest {
    /// Builds the forest and returns it with the label of each node.
    pub fn build<L, S>(sequences: &[S]) -> (PrefixForest, Vec<L>)
    where
        L: Eq + Hash + Clone,
        S: AsRef<[L]>,
    {
        let mut index: HashMap<(Option<usize>, L), usize> = HashMap::new();
        let mut f = PrefixForest {
            parent: Vec::new(),
            depth: Vec::new(),
            children: Vec::new(),
            consistent: Vec::new(),
            paths: Vec::with_capacity(sequences.len()),
        };
        let mut labels = Vec::new();
        for (s, seq) in sequences.iter().enumerate() {
            let mut path = Vec::with_capacity(seq.as_ref().len());
            let mut cur: Option<usize> = None;
            for (t, label) in seq.as_ref().iter().enumerate() {
                let id = *index.entry((cur, label.clone())).or_insert_with(|| {
                    let id = f.parent.len();
                    f.parent.push(cur);
                    f.depth.push(t);
                    f.children.push(Vec::new());
                    f.consistent.push(Vec::new());
                    labels.push(label.clone());
                    if let Some(p) = cur {
                        f.children[p].push(id);
                    }
                    id
                });
                f.consistent[id].push(s);
                path.push(id);
                cur = Some(id);
            }
            f.paths.push(path);
        }
        (f, labels)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn num_sequences(&self) -> usize {
        self.paths.len()
    }

    pub fn parent(&self, o: usize) -> Option<usize> {
        self.parent[o]
    }

    /// Round index of the node (0 for roots).
    pub fn depth(&self, o: usize) -> usize {
        self.depth[o]
    }

    pub fn children(&self, o: usize) -> &[usize] {
        &self.children[o]
    }

    /// Ids of the sequences passing through `o`, ascending.
    pub fn consistent(&self, o: usize) -> &[usize] {
        &self.consistent[o]
    }

    pub fn path(&self, s: usize) -> &[usize] {
        &self.paths[s]
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&o| self.parent[o].is_none())
    }

    /// Ancestors of `o` from the root down to `o` itself.
    pub fn ancestry(&self, o: usize) -> Vec<usize> {
        let mut out = vec![o];
        let mut cur = o;
        while let Some(p) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Mass of each node under per-sequence probabilities.
    pub fn node_masses(&self, probs: &[f64]) -> Vec<f64> {
        self.consistent
            .iter()
            .map(|c| c.iter().map(|&s| probs[s]).sum())
            .collect()
    }
}

/// Information sets of a scenario instance with the quantities needed by
/// every solver: consistency sets, occurrence probabilities and rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationForest {
    tree: PrefixForest,
    labels: Vec<Chain>,
    num_keys: usize,
    correct_keys: Vec<usize>,
    scenario_probs: Vec<f64>,
    // future[s][t]: appearances of k*(s) from round t on when k*(s) is on C_t(s), else 0
    future: Vec<Vec<u32>>,
    probs: Vec<f64>,
    // weights[o][k] = p_o * r_{k,o}
    weights: Vec<Vec<f64>>,
}

pub fn build_information_forest(instance: &ScenarioInstance) -> InformationForest {
    let sequences: Vec<&[Chain]> = instance
        .scenarios()
        .iter()
        .map(|s| s.chains.as_slice())
        .collect();
    let (tree, labels) = PrefixForest::build(&sequences);
    let future = instance
        .scenarios()
        .iter()
        .map(|s| {
            let k = s.correct_key;
            let mut out = vec![0u32; s.chains.len()];
            let mut remaining = 0u32;
            for t in (0..s.chains.len()).rev() {
                if s.chains[t].contains(k) {
                    remaining += 1;
                    out[t] = remaining;
                }
            }
            out
        })
        .collect();
    let mut forest = InformationForest {
        tree,
        labels,
        num_keys: instance.num_keys(),
        correct_keys: instance.scenarios().iter().map(|s| s.correct_key).collect(),
        scenario_probs: instance.scenarios().iter().map(|s| s.prob).collect(),
        future,
        probs: Vec::new(),
        weights: Vec::new(),
    };
    forest.compute_weights();
    forest
}

impl InformationForest {
    fn compute_weights(&mut self) {
        self.probs = self.tree.node_masses(&self.scenario_probs);
        let mut weights = vec![vec![0.0; self.num_keys]; self.tree.len()];
        for s in 0..self.scenario_probs.len() {
            let k = self.correct_keys[s];
            for (t, &o) in self.tree.path(s).iter().enumerate() {
                weights[o][k] += self.scenario_probs[s] * self.future[s][t] as f64;
            }
        }
        self.weights = weights;
    }

    /// Same structure under a new scenario prior.
    pub fn with_probs(&self, probs: &[f64]) -> Result<Self> {
        if probs.len() != self.scenario_probs.len() {
            return Err(KeychainError::InvalidInput(format!(
                "{} probabilities for {} scenarios",
                probs.len(),
                self.scenario_probs.len()
            )));
        }
        check_distribution(probs, "scenario probabilities")?;
        let mut out = self.clone();
        out.scenario_probs = probs.to_vec();
        out.compute_weights();
        Ok(out)
    }

    pub fn tree(&self) -> &PrefixForest {
        &self.tree
    }

    pub fn num_info_sets(&self) -> usize {
        self.tree.len()
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenario_probs.len()
    }

    /// Longest scenario path.
    pub fn max_rounds(&self) -> usize {
        self.tree.depth.iter().map(|d| d + 1).max().unwrap_or(0)
    }

    /// The chain observed last at information set `o`.
    pub fn chain(&self, o: usize) -> &Chain {
        &self.labels[o]
    }

    /// Canonical prefix identifying `o`.
    pub fn prefix(&self, o: usize) -> Vec<Chain> {
        self.tree
            .ancestry(o)
            .into_iter()
            .map(|a| self.labels[a].clone())
            .collect()
    }

    pub fn parent(&self, o: usize) -> Option<usize> {
        self.tree.parent(o)
    }

    pub fn depth(&self, o: usize) -> usize {
        self.tree.depth(o)
    }

    pub fn children(&self, o: usize) -> &[usize] {
        self.tree.children(o)
    }

    pub fn consistent(&self, o: usize) -> &[usize] {
        self.tree.consistent(o)
    }

    pub fn path(&self, s: usize) -> &[usize] {
        self.tree.path(s)
    }

    pub fn correct_key(&self, s: usize) -> usize {
        self.correct_keys[s]
    }

    pub fn scenario_prob(&self, s: usize) -> f64 {
        self.scenario_probs[s]
    }

    pub fn scenario_probs(&self) -> &[f64] {
        &self.scenario_probs
    }

    /// Occurrence probability p_o.
    pub fn prob(&self, o: usize) -> f64 {
        self.probs[o]
    }

    /// p_o * r_{k,o}, the edge weight of the laminar matching reduction.
    pub fn weight(&self, o: usize, k: usize) -> f64 {
        self.weights[o][k]
    }

    pub fn weights(&self, o: usize) -> &[f64] {
        &self.weights[o]
    }

    /// Conditional reward r_{k,o}; zero at information sets of probability zero.
    pub fn reward(&self, o: usize, k: usize) -> f64 {
        if self.probs[o] > 0.0 {
            self.weights[o][k] / self.probs[o]
        } else {
            0.0
        }
    }

    /// r_{k,o,s} for the information set at round `t` of scenario `s`.
    pub fn scenario_reward(&self, k: usize, s: usize, t: usize) -> u32 {
        if k == self.correct_keys[s] {
            self.future[s][t]
        } else {
            0
        }
    }

    /// Successful rotations of the exploitative policy in scenario `s`.
    /// The policy must be admissible; this is not checked.
    pub fn scenario_utility(&self, assignment: &[Option<usize>], s: usize) -> u32 {
        self.path(s)
            .iter()
            .enumerate()
            .map(|(t, &o)| match assignment[o] {
                Some(k) => self.scenario_reward(k, s, t),
                None => 0,
            })
            .sum()
    }

    /// Follows `chains` down the forest as far as it matches.
    pub fn walk(&self, chains: &[Chain]) -> Vec<usize> {
        let mut out = Vec::with_capacity(chains.len());
        let mut level: Vec<usize> = self.tree.roots().collect();
        for c in chains {
            match level.iter().find(|&&o| &self.labels[o] == c) {
                Some(&o) => {
                    out.push(o);
                    level = self.tree.children(o).to_vec();
                }
                None => break,
            }
        }
        out
    }

    /// Checks that consistency sets are pairwise nested or disjoint.
    pub fn check_laminar(&self) -> Result<()> {
        let n = self.num_info_sets();
        for a in 0..n {
            for b in (a + 1)..n {
                let ca = self.consistent(a);
                let cb = self.consistent(b);
                let common = ca.iter().filter(|s| cb.binary_search(s).is_ok()).count();
                if common != 0 && common != ca.len() && common != cb.len() {
                    return Err(KeychainError::NotLaminar(a, b));
                }
            }
        }
        Ok(())
    }
}
