//! Instance generators: the advisor example, hardness gadgets and seeded
//! random families.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KeychainError, Result};
use crate::laminar::{AntichainValuation, LaminarFamily};
use crate::model::{
    Chain, CorrectnessModel, KnownOrderInstance, MultiKeyInstance, Scenario, ScenarioInstance,
};
use crate::obm::{WeightProfile, WobmInstance};
use crate::order::OrderInstance;

pub const ALICE: usize = 0;
pub const BOB: usize = 1;
pub const CAROL: usize = 2;

/// Three advisors over three rotations. Each of Alice, Bob, Carol is the
/// right fit with probability 3/7, 2/7, 2/7; independently Alice is away
/// for the second rotation with probability 2/3.
pub fn advisor_instance() -> ScenarioInstance {
    let all = || Chain::new([ALICE, BOB, CAROL]).unwrap();
    let away = || vec![all(), Chain::new([BOB, CAROL]).unwrap(), all()];
    let present = || vec![all(), all(), all()];
    let probs = [
        (2.0 / 7.0, 1.0 / 7.0),
        (4.0 / 21.0, 2.0 / 21.0),
        (4.0 / 21.0, 2.0 / 21.0),
    ];
    let scenarios = (0..3)
        .flat_map(|k| {
            [
                Scenario {
                    chains: away(),
                    correct_key: k,
                    prob: probs[k].0,
                },
                Scenario {
                    chains: present(),
                    correct_key: k,
                    prob: probs[k].1,
                },
            ]
        })
        .collect();
    ScenarioInstance::new(3, scenarios).unwrap()
}

/// Key ids in [`exploit_counterexample`].
pub fn counterexample_keys(i: usize) -> (usize, usize, usize) {
    (2 + 3 * i, 3 + 3 * i, 4 + 3 * i)
}

/// Keys 0 and 1 are the two starting keys; pair `i` adds `a_i, b_i, c_i`
/// (see [`counterexample_keys`]). Chains: `{0, 1}`, then every `{a_i, b_i}`,
/// then every `{1, b_i, c_i}`.
pub fn exploit_counterexample(x: usize, epsilon: f64) -> Result<MultiKeyInstance> {
    if x == 0 {
        return Err(KeychainError::InvalidInput("x must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(KeychainError::InvalidInput(format!(
            "epsilon {epsilon} outside (0, 0.001]"
        )));
    }
    let n = 3 * x + 2;
    let mut accept = vec![0.0; n];
    accept[0] = 1.0;
    accept[1] = 1.0 - epsilon;
    let mut chains = vec![Chain::new([0, 1])?];
    for i in 0..x {
        let (a, b, c) = counterexample_keys(i);
        accept[a] = 0.51;
        accept[b] = 0.5;
        accept[c] = 0.51;
        chains.push(Chain::new([a, b])?);
    }
    for i in 0..x {
        let (_, b, c) = counterexample_keys(i);
        chains.push(Chain::new([1, b, c])?);
    }
    MultiKeyInstance::new(
        n,
        chains,
        CorrectnessModel::Independent {
            accept_probs: accept,
        },
    )
}

/// `1 − 0.51ε + (1.51 − 0.49ε)x`: always play the certain key first.
pub fn exploit_value(x: usize, epsilon: f64) -> f64 {
    1.0 - 0.51 * epsilon + (1.51 - 0.49 * epsilon) * x as f64
}

/// `1 − ε + (1.51 − 0.255ε)x`: test the uncertain key first.
pub fn explore_value(x: usize, epsilon: f64) -> f64 {
    1.0 - epsilon + (1.51 - 0.255 * epsilon) * x as f64
}

/// Simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(KeychainError::InvalidInput(format!(
                    "edge ({u}, {v}) leaves the {num_vertices} vertices"
                )));
            }
            if u == v {
                return Err(KeychainError::InvalidInput(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(KeychainError::InvalidInput(format!(
                    "parallel edge ({u}, {v})"
                )));
            }
        }
        Ok(Graph {
            num_vertices,
            edges,
        })
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_vertices];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }
}

/// Dueling pair per vertex (keys `2v`, `2v + 1`, each correct with
/// probability 1/2) and one chain per edge with both endpoint pairs.
pub fn vertex_cover_gadget(graph: &Graph) -> Result<MultiKeyInstance> {
    if let Some(v) = graph.degrees().iter().position(|&d| d > 3) {
        return Err(KeychainError::InvalidInput(format!(
            "vertex {v} has degree above 3"
        )));
    }
    if graph.edges.is_empty() {
        return Err(KeychainError::InvalidInput("graph has no edges".into()));
    }
    let chains = graph
        .edges
        .iter()
        .map(|&(u, v)| Chain::new([2 * u, 2 * u + 1, 2 * v, 2 * v + 1]))
        .collect::<Result<Vec<_>>>()?;
    MultiKeyInstance::new(
        2 * graph.num_vertices,
        chains,
        CorrectnessModel::Dueling {
            pair_probs: vec![0.5; graph.num_vertices],
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    /// Key of the literal: `2 var` for `x`, `2 var + 1` for `¬x`.
    pub fn key(self) -> usize {
        2 * self.var + self.negated as usize
    }

    pub fn is_true(self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

impl std::fmt::Display for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", if self.negated { "¬" } else { "" }, self.var)
    }
}

/// 3-CNF formula in which every literal occurs exactly twice and every
/// clause has three distinct literals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub num_vars: usize,
    pub clauses: Vec<[Literal; 3]>,
}

impl Formula {
    pub fn new(num_vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        let mut count = vec![0usize; 2 * num_vars];
        for (c, clause) in clauses.iter().enumerate() {
            for (i, l) in clause.iter().enumerate() {
                if l.var >= num_vars {
                    return Err(KeychainError::InvalidInput(format!(
                        "clause {c} uses {l} but there are {num_vars} variables"
                    )));
                }
                if clause[..i].contains(l) {
                    return Err(KeychainError::InvalidInput(format!(
                        "clause {c} repeats literal {l}"
                    )));
                }
                count[l.key()] += 1;
            }
        }
        if let Some(k) = count.iter().position(|&c| c != 2) {
            let l = Literal {
                var: k / 2,
                negated: k % 2 == 1,
            };
            return Err(KeychainError::InvalidInput(format!(
                "literal {l} occurs {} times, expected 2",
                count[k]
            )));
        }
        Ok(Formula { num_vars, clauses })
    }

    pub fn satisfied(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().any(|l| l.is_true(assignment)))
            .count()
    }
}

/// Every scenario presents `{x_t, ¬x_t}` for each variable in turn and then
/// the literals of one clause; the three scenarios of a clause make each of
/// its literals the correct key. Uniform prior.
pub fn threesat_gadget(formula: &Formula) -> Result<ScenarioInstance> {
    let n = formula.num_vars;
    let m = formula.clauses.len();
    if m == 0 {
        return Err(KeychainError::InvalidInput("formula has no clauses".into()));
    }
    let prefix = (0..n)
        .map(|t| Chain::new([2 * t, 2 * t + 1]))
        .collect::<Result<Vec<_>>>()?;
    let mut scenarios = Vec::with_capacity(3 * m);
    for clause in &formula.clauses {
        let last = Chain::new(clause.iter().map(|l| l.key()))?;
        for l in clause {
            let mut chains = prefix.clone();
            chains.push(last.clone());
            scenarios.push(Scenario {
                chains,
                correct_key: l.key(),
                prob: 1.0 / (3 * m) as f64,
            });
        }
    }
    ScenarioInstance::new(2 * n, scenarios)
}

/// Random balanced formula over `n` variables (`n` a positive multiple of
/// 3): literal occurrences are dealt into clause slots uniformly and deals
/// with a repeated variable inside a clause are rejected.
pub fn random_formula(n: usize, seed: u64) -> Result<Formula> {
    if n == 0 || !n.is_multiple_of(3) {
        return Err(KeychainError::InvalidInput(format!(
            "variable count {n} is not a positive multiple of 3"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<Literal> = (0..2 * n)
        .flat_map(|k| {
            let l = Literal {
                var: k / 2,
                negated: k % 2 == 1,
            };
            [l, l]
        })
        .collect();
    loop {
        slots.shuffle(&mut rng);
        let clauses: Vec<[Literal; 3]> = slots.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let distinct = clauses
            .iter()
            .all(|c| c[0].var != c[1].var && c[0].var != c[2].var && c[1].var != c[2].var);
        if distinct {
            return Formula::new(n, clauses);
        }
    }
}

fn random_chain(rng: &mut ChaCha8Rng, num_keys: usize) -> Chain {
    loop {
        let keys: Vec<usize> = (0..num_keys).filter(|_| rng.gen_bool(0.5)).collect();
        if !keys.is_empty() {
            return Chain::new(keys).unwrap();
        }
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

fn check_bounds(bounds: &[usize]) -> Result<()> {
    if bounds.contains(&0) {
        return Err(KeychainError::InvalidInput(
            "generator bounds must be positive".into(),
        ));
    }
    Ok(())
}

/// `n` keys, `m` random nonempty chains, random positive prior.
pub fn random_known_order(n: usize, m: usize, seed: u64) -> Result<KnownOrderInstance> {
    check_bounds(&[n, m])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chains = (0..m).map(|_| random_chain(&mut rng, n)).collect();
    let prior = random_distribution(&mut rng, n);
    KnownOrderInstance::new(n, chains, prior)
}

/// Same family, chain order left to the solver.
pub fn random_order(n: usize, m: usize, seed: u64) -> Result<OrderInstance> {
    let k = random_known_order(n, m, seed)?;
    OrderInstance::new(n, k.chains().to_vec(), k.prior().to_vec())
}

/// `count` scenarios of 1 to `m` chains over `n` keys. Each scenario after
/// the first shares a random-length prefix of an earlier one with
/// probability 1/2, so the information forest branches.
pub fn random_scenarios(n: usize, m: usize, count: usize, seed: u64) -> Result<ScenarioInstance> {
    check_bounds(&[n, m, count])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequences: Vec<Vec<Chain>> = Vec::with_capacity(count);
    for s in 0..count {
        let len = rng.gen_range(1..=m);
        let mut chains = if s > 0 && rng.gen_bool(0.5) {
            let other = &sequences[rng.gen_range(0..s)];
            let keep = rng.gen_range(0..=other.len().min(len));
            other[..keep].to_vec()
        } else {
            Vec::new()
        };
        while chains.len() < len {
            chains.push(random_chain(&mut rng, n));
        }
        sequences.push(chains);
    }
    let probs = random_distribution(&mut rng, count);
    let scenarios = sequences
        .into_iter()
        .zip(probs)
        .map(|(chains, prob)| Scenario {
            correct_key: rng.gen_range(0..n),
            chains,
            prob,
        })
        .collect();
    ScenarioInstance::new(n, scenarios)
}

/// `n` independent keys with acceptance probabilities in `[0.1, 0.9]`.
pub fn random_multi_key(n: usize, m: usize, seed: u64) -> Result<MultiKeyInstance> {
    check_bounds(&[n, m])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chains = (0..m).map(|_| random_chain(&mut rng, n)).collect();
    let accept_probs = (0..n)
        .map(|_| (rng.gen_range(0.1..0.9) * 100.0_f64).round() / 100.0)
        .collect();
    MultiKeyInstance::new(n, chains, CorrectnessModel::Independent { accept_probs })
}

/// Random laminar family over `universe` points, built by repeatedly
/// splitting an unsplit set, with `elements` elements typed by random sets
/// of it and weights in `[0, 1)`.
pub fn random_laminar_valuation(
    elements: usize,
    universe: usize,
    k: usize,
    seed: u64,
) -> Result<AntichainValuation> {
    check_bounds(&[elements, universe, k])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets: Vec<Vec<usize>> = vec![(0..universe).collect()];
    let mut open = vec![0usize];
    while let Some(pos) = (!open.is_empty()).then(|| rng.gen_range(0..open.len())) {
        let s = open.swap_remove(pos);
        if sets[s].len() < 2 || rng.gen_bool(0.25) {
            continue;
        }
        let parts = rng.gen_range(2..=3usize.min(sets[s].len()));
        let mut split = vec![Vec::new(); parts];
        let mut points = sets[s].clone();
        points.shuffle(&mut rng);
        for (i, p) in points.into_iter().enumerate() {
            let j = if i < parts {
                i
            } else {
                rng.gen_range(0..parts)
            };
            split[j].push(p);
        }
        for part in split {
            open.push(sets.len());
            sets.push(part);
        }
    }
    let types = (0..elements)
        .map(|_| sets[rng.gen_range(0..sets.len())].clone())
        .collect();
    let weights = (0..elements).map(|_| rng.gen_range(0.0..1.0)).collect();
    AntichainValuation::new(weights, LaminarFamily::new(types)?, k)
}

/// Graph with at most `edges` edges and maximum degree 3.
pub fn random_graph(vertices: usize, edges: usize, seed: u64) -> Result<Graph> {
    check_bounds(&[vertices])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<(usize, usize)> = (0..vertices)
        .flat_map(|u| ((u + 1)..vertices).map(move |v| (u, v)))
        .collect();
    all.shuffle(&mut rng);
    let mut degree = vec![0; vertices];
    let mut chosen = Vec::new();
    for (u, v) in all {
        if chosen.len() == edges {
            break;
        }
        if degree[u] < 3 && degree[v] < 3 {
            degree[u] += 1;
            degree[v] += 1;
            chosen.push((u, v));
        }
    }
    Graph::new(vertices, chosen)
}

/// `offline` nodes with capacity 1 or 2, `arrivals` arrivals, `support`
/// weight matrices with small integer weights sharing random prefixes.
pub fn random_wobm(
    offline: usize,
    arrivals: usize,
    support: usize,
    seed: u64,
) -> Result<WobmInstance> {
    check_bounds(&[offline, arrivals, support])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capacities = (0..offline).map(|_| rng.gen_range(1..=2)).collect();
    let mut columns: Vec<Vec<Vec<f64>>> = Vec::with_capacity(support);
    for s in 0..support {
        let keep = if s > 0 { rng.gen_range(0..arrivals) } else { 0 };
        let mut cols = if keep > 0 {
            columns[rng.gen_range(0..s)][..keep].to_vec()
        } else {
            Vec::new()
        };
        while cols.len() < arrivals {
            cols.push((0..offline).map(|_| rng.gen_range(0..10) as f64).collect());
        }
        columns.push(cols);
    }
    let probs = random_distribution(&mut rng, support);
    let profiles = columns
        .into_iter()
        .zip(probs)
        .map(|(cols, prob)| WeightProfile {
            weights: (0..offline)
                .map(|i| cols.iter().map(|c| c[i]).collect())
                .collect(),
            prob,
        })
        .collect();
    WobmInstance::new(capacities, arrivals, profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_information_forest;

    #[test]
    fn advisor_shape() {
        let inst = advisor_instance();
        assert_eq!(inst.num_scenarios(), 6);
        let total: f64 = inst.scenarios().iter().map(|s| s.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let away: f64 = inst.scenarios().iter().step_by(2).map(|s| s.prob).sum();
        assert!((away - 2.0 / 3.0).abs() < 1e-12);
        let f = build_information_forest(&inst);
        assert_eq!(f.num_info_sets(), 5);
        assert_eq!(f.prob(0), 1.0);
    }

    #[test]
    fn counterexample_shape() {
        let inst = exploit_counterexample(3, 1e-3).unwrap();
        assert_eq!((inst.num_keys(), inst.chains().len()), (11, 7));
        assert!(exploit_counterexample(0, 1e-3).is_err());
        assert!(exploit_counterexample(2, 0.01).is_err());
    }

    #[test]
    fn vertex_cover_guard() {
        let star = Graph::new(5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert!(vertex_cover_gadget(&star).is_err());
        assert!(Graph::new(2, vec![(0, 1), (1, 0)]).is_err());
        let g = random_graph(6, 9, 4).unwrap();
        assert!(g.degrees().iter().all(|&d| d <= 3));
    }

    #[test]
    fn formula_gadget_counts() {
        let f = random_formula(3, 7).unwrap();
        assert_eq!(f.clauses.len(), 4);
        let inst = threesat_gadget(&f).unwrap();
        assert_eq!(inst.num_scenarios(), 12);
        assert!(inst
            .scenarios()
            .iter()
            .all(|s| s.chains.len() == 4 && s.prob == 1.0 / 12.0));
        let l = |var, negated| Literal { var, negated };
        let bad = Formula::new(2, vec![[l(0, false), l(0, true), l(1, false)]]);
        assert!(bad
            .unwrap_err()
            .to_string()
            .contains("literal x0 occurs 1 times"));
        let bad = Formula::new(1, vec![[l(0, true), l(0, true), l(0, false)]]);
        assert!(bad.unwrap_err().to_string().contains("repeats literal ¬x0"));
    }

    #[test]
    fn random_families_validate() {
        for seed in 0..20 {
            let s = random_scenarios(4, 4, 6, seed).unwrap();
            build_information_forest(&s).check_laminar().unwrap();
            assert_eq!(s, random_scenarios(4, 4, 6, seed).unwrap());
            random_known_order(5, 5, seed).unwrap();
            random_multi_key(4, 3, seed).unwrap();
            let v = random_laminar_valuation(8, 5, 2, seed).unwrap();
            assert_eq!(v.len(), 8);
            random_wobm(2, 3, 3, seed).unwrap();
        }
        assert!(random_scenarios(0, 1, 1, 0).is_err());
    }
}
