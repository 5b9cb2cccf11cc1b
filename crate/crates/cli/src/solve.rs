use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use keychain_core::assignment::solve_known_order;
use keychain_core::io::load_instance;
use keychain_core::obm::{philosopher_oracle, solve_wobm};
use keychain_core::oracle::{solve_multi_key_mdp, solve_one_key_mdp};
use keychain_core::order::{best_of_two, brute_force_order_opt, eval_order_policy, OrderPolicy};
use keychain_core::scenarios::{
    approx_solve_forest, greedy_policy, sample_solve, simulate_rounding, Preallocation,
};
use keychain_core::{
    build_information_forest, eval_known_order_policy, eval_scenario_policy, Instance,
    InstanceKind, Policy,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::{append_csv, Row};
use crate::{emit, CmdResult, Failure, KindArg, SeedArg, VERSION};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Algo {
    Exact,
    Oracle,
    Greedy,
    LpRound,
    Sample,
    Best2,
    Brute,
    Philosopher,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::Oracle => "oracle",
            Algo::Greedy => "greedy",
            Algo::LpRound => "lp-round",
            Algo::Sample => "sample",
            Algo::Best2 => "best2",
            Algo::Brute => "brute",
            Algo::Philosopher => "philosopher",
        }
    }
}

#[derive(Args)]
pub struct SolveArgs {
    /// Expected instance kind; inferred from the file when omitted.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Monte Carlo trials for randomized algorithms.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Rounding repetitions; the best realized policy is kept.
    #[arg(long, default_value_t = 64)]
    pub reps: usize,
    /// Additive accuracy for the sample-based pipeline.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Failure probability for the sample-based pipeline.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Also compute the exact optimum.
    #[arg(long)]
    pub oracle: bool,
    /// Result JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a report row to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Result JSON from `solve`, or a bare policy.
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Machine-readable output of `solve`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub kind: InstanceKind,
    pub algo: String,
    pub value: f64,
    pub lp_value: Option<f64>,
    pub oracle_value: Option<f64>,
    pub policy: Option<Value>,
    pub details: Value,
}

/// Solver output before it is wrapped into a report.
pub struct Outcome {
    pub value: f64,
    pub lp_value: Option<f64>,
    pub policy: Option<Value>,
    pub details: Value,
}

#[derive(Clone, Copy)]
pub struct Settings {
    pub seed: u64,
    pub trials: usize,
    pub reps: usize,
    pub epsilon: f64,
    pub delta: f64,
}

pub fn load(path: &Path, kind: Option<KindArg>) -> CmdResult<Instance> {
    let inst = load_instance(path)?;
    if let Some(k) = kind {
        let want = InstanceKind::from(k);
        if want != inst.kind() {
            return Err(Failure::Validation(anyhow!(
                "{} holds a {} instance, not {want}",
                path.display(),
                inst.kind()
            )));
        }
    }
    Ok(inst)
}

pub fn default_algo(kind: InstanceKind) -> Algo {
    match kind {
        InstanceKind::KnownOrder | InstanceKind::MultiKey => Algo::Exact,
        InstanceKind::Scenarios | InstanceKind::Wobm => Algo::LpRound,
        InstanceKind::OrderSelection => Algo::Best2,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn compute(inst: &Instance, algo: Algo, s: &Settings) -> CmdResult<Outcome> {
    let plain = |value: f64, policy: Option<Value>| Outcome {
        value,
        lp_value: None,
        policy,
        details: json!({}),
    };
    Ok(match (inst, algo) {
        (Instance::KnownOrder(k), Algo::Exact | Algo::Oracle) => {
            let (v, p) = solve_known_order(k);
            plain(v, Some(to_value(&p)))
        }
        (Instance::Scenarios(i), Algo::Exact | Algo::Oracle) => {
            let (v, p) = solve_one_key_mdp(i)?;
            plain(v, Some(to_value(&p)))
        }
        (Instance::Scenarios(i), Algo::Greedy) => {
            let f = build_information_forest(i);
            let p = greedy_policy(&f);
            plain(eval_scenario_policy(&f, &p)?, Some(to_value(&p)))
        }
        (Instance::Scenarios(i), Algo::LpRound) => {
            let f = build_information_forest(i);
            let sol = approx_solve_forest(&f, s.seed, s.reps)?;
            let mut details = json!({
                "expected_value": sol.expected_value,
                "repetitions": sol.repetitions,
            });
            if s.trials > 0 {
                let rounding = Preallocation::for_forest(&f, &sol.x)?;
                details["monte_carlo"] =
                    to_value(&simulate_rounding(&f, &rounding, s.seed, s.trials));
            }
            Outcome {
                value: sol.policy_value,
                lp_value: Some(sol.lp_value),
                policy: Some(to_value(&sol.policy)),
                details,
            }
        }
        (Instance::Scenarios(i), Algo::Sample) => {
            let f = build_information_forest(i);
            let sol = sample_solve(&f, s.epsilon, s.delta, s.seed, s.reps)?;
            Outcome {
                value: sol.policy_value,
                lp_value: Some(sol.lp_value),
                policy: Some(to_value(&sol.policy)),
                details: json!({
                    "expected_value": sol.expected_value,
                    "epsilon": s.epsilon,
                    "delta": s.delta,
                }),
            }
        }
        (Instance::MultiKey(k), Algo::Exact | Algo::Oracle) => {
            let sol = solve_multi_key_mdp(k)?;
            Outcome {
                value: sol.optimum,
                lp_value: None,
                policy: None,
                details: json!({
                    "first_action": sol.first_action,
                    "exploit_value": sol.exploit_value,
                }),
            }
        }
        (Instance::OrderSelection(o), Algo::Best2) => {
            let (v, p) = best_of_two(o);
            plain(v, Some(to_value(&p)))
        }
        (Instance::OrderSelection(o), Algo::Brute | Algo::Exact | Algo::Oracle) => {
            let (v, p) = brute_force_order_opt(o)?;
            plain(v, Some(to_value(&p)))
        }
        (Instance::Wobm(w), Algo::LpRound) => {
            let sol = solve_wobm(w, s.seed, s.trials.max(1))?;
            Outcome {
                value: sol.expected_value,
                lp_value: Some(sol.lp_value),
                policy: None,
                details: json!({ "monte_carlo": to_value(&sol.monte_carlo) }),
            }
        }
        (Instance::Wobm(w), Algo::Philosopher | Algo::Exact | Algo::Oracle) => {
            plain(philosopher_oracle(w)?, None)
        }
        (inst, algo) => {
            return Err(Failure::Validation(anyhow!(
                "algorithm {} does not apply to {} instances",
                algo.name(),
                inst.kind()
            )))
        }
    })
}

/// Exact optimum of any instance kind.
pub fn oracle_value(inst: &Instance) -> CmdResult<(f64, Option<Value>)> {
    Ok(match inst {
        Instance::KnownOrder(k) => {
            let (v, p) = solve_one_key_mdp(&k.to_scenarios())?;
            (v, Some(to_value(&p)))
        }
        Instance::Scenarios(i) => {
            let (v, p) = solve_one_key_mdp(i)?;
            (v, Some(to_value(&p)))
        }
        Instance::MultiKey(k) => (solve_multi_key_mdp(k)?.optimum, None),
        Instance::OrderSelection(o) => {
            let (v, p) = brute_force_order_opt(o)?;
            (v, Some(to_value(&p)))
        }
        Instance::Wobm(w) => (philosopher_oracle(w)?, None),
    })
}

pub fn run_solve(a: &SolveArgs) -> CmdResult {
    let inst = load(&a.input, a.kind)?;
    let algo = a.algo.unwrap_or_else(|| default_algo(inst.kind()));
    let settings = Settings {
        seed: a.seed.seed,
        trials: a.trials,
        reps: a.reps,
        epsilon: a.epsilon,
        delta: a.delta,
    };
    let start = Instant::now();
    let out = compute(&inst, algo, &settings)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let oracle = if a.oracle {
        Some(oracle_value(&inst)?.0)
    } else {
        None
    };
    let mut details = out.details;
    if let Instance::Scenarios(s) = &inst {
        if s.merged_duplicates() > 0 {
            details["merged_duplicates"] = json!(s.merged_duplicates());
        }
    }
    let report = SolveReport {
        tool: "keychain".into(),
        version: VERSION.into(),
        seed: settings.seed,
        kind: inst.kind(),
        algo: algo.name().into(),
        value: out.value,
        lp_value: out.lp_value,
        oracle_value: oracle,
        policy: out.policy,
        details,
    };
    emit(
        a.out.as_ref(),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    if let Some(path) = &a.csv {
        let name = a
            .input
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let mut row = Row::new(&name, &inst, algo.name(), out.value).with_oracle(oracle);
        row.lp = out.lp_value;
        row.wall_ms = Some(wall_ms);
        append_csv(path, &[row])?;
    }
    Ok(())
}

pub fn run_eval(a: &EvalArgs) -> CmdResult {
    let inst = load(&a.input, None)?;
    let text = std::fs::read_to_string(&a.policy)
        .map_err(|e| Failure::Validation(anyhow!("{}: {e}", a.policy.display())))?;
    let mut doc: Value = serde_json::from_str(&text)?;
    if let Some(p) = doc.get_mut("policy") {
        doc = p.take();
    }
    let value = match &inst {
        Instance::KnownOrder(k) => {
            eval_known_order_policy(k, &serde_json::from_value::<Policy>(doc)?)?
        }
        Instance::Scenarios(i) => {
            let policy: Policy = serde_json::from_value(doc)?;
            eval_scenario_policy(&build_information_forest(i), &policy)?
        }
        Instance::OrderSelection(o) => {
            eval_order_policy(o, &serde_json::from_value::<OrderPolicy>(doc)?)?
        }
        other => {
            return Err(Failure::Validation(anyhow!(
                "{} instances have no deterministic policy to evaluate",
                other.kind()
            )))
        }
    };
    let report = json!({
        "tool": "keychain",
        "version": VERSION,
        "kind": inst.kind(),
        "value": value,
    });
    emit(
        a.out.as_ref(),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )
}

pub fn run_oracle(a: &OracleArgs) -> CmdResult {
    let inst = load(&a.input, a.kind)?;
    let (value, policy) = oracle_value(&inst)?;
    let report = json!({
        "tool": "keychain",
        "version": VERSION,
        "kind": inst.kind(),
        "value": value,
        "policy": policy,
    });
    emit(
        a.out.as_ref(),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )
}
