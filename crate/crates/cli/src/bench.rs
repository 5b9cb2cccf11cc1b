use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use keychain_core::gen;
use keychain_core::scenarios::approx_solve;
use keychain_core::Instance;

use crate::report::{to_csv, Row};
use crate::solve::{compute, oracle_value, Algo, Settings};
use crate::{emit, CmdResult, SeedArg};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Suite {
    Scenarios,
    Order,
    Wobm,
    Multikey,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Random instances in the sweep.
    #[arg(long, default_value_t = 12)]
    pub instances: usize,
    /// Rounding repetitions for scenario instances.
    #[arg(long, default_value_t = 16)]
    pub reps: usize,
    /// Fill the wall_ms column. Timings make the table nondeterministic.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn instance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x100_0000_01b3).wrapping_add(i as u64)
}

fn sweep(suite: Suite, seed: u64, count: usize) -> CmdResult<Vec<(String, Instance)>> {
    let mut out = Vec::new();
    match suite {
        Suite::Scenarios => out.push((
            "advisor".to_string(),
            Instance::Scenarios(gen::advisor_instance()),
        )),
        Suite::Multikey => out.push((
            "counterexample-3".to_string(),
            Instance::MultiKey(gen::exploit_counterexample(3, 1e-3)?),
        )),
        Suite::Order | Suite::Wobm => {}
    }
    for i in 0..count {
        let s = instance_seed(seed, i);
        let (a, b, c) = (i % 3, (i / 3) % 3, (i / 9) % 3);
        let inst = match suite {
            Suite::Scenarios => {
                Instance::Scenarios(gen::random_scenarios(2 + a, 2 + b, 3 + 2 * c, s)?)
            }
            Suite::Order => Instance::OrderSelection(gen::random_order(2 + a, 3 + b, s)?),
            Suite::Wobm => Instance::Wobm(gen::random_wobm(2 + a % 2, 2 + b, 2 + c, s)?),
            Suite::Multikey => Instance::MultiKey(gen::random_multi_key(3 + a, 3 + b, s)?),
        };
        out.push((format!("{}-{i}", inst.kind()), inst));
    }
    Ok(out)
}

pub fn run(a: &BenchArgs) -> CmdResult {
    let settings = Settings {
        seed: a.seed.seed,
        trials: 0,
        reps: a.reps,
        epsilon: 0.1,
        delta: 0.1,
    };
    let mut rows = Vec::new();
    for (name, inst) in sweep(a.suite, a.seed.seed, a.instances)? {
        let start = Instant::now();
        let oracle = oracle_value(&inst)?.0;
        let oracle_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut push = |algo: &str, value: f64, lp: Option<f64>, ms: f64| {
            let mut row = Row::new(&name, &inst, algo, value).with_oracle(Some(oracle));
            row.lp = lp;
            row.wall_ms = a.timing.then_some(ms);
            rows.push(row);
        };
        push("oracle", oracle, None, oracle_ms);
        match &inst {
            Instance::Scenarios(s) => {
                let start = Instant::now();
                let sol = approx_solve(s, settings.seed, settings.reps)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                // exact expectation of the randomized rounding, then the best realized policy
                push("lp-round", sol.expected_value, Some(sol.lp_value), ms);
                push("lp-round-best", sol.policy_value, Some(sol.lp_value), ms);
                let start = Instant::now();
                let greedy = compute(&inst, Algo::Greedy, &settings)?;
                push(
                    "greedy",
                    greedy.value,
                    None,
                    start.elapsed().as_secs_f64() * 1e3,
                );
            }
            Instance::OrderSelection(_) => {
                let start = Instant::now();
                let out = compute(&inst, Algo::Best2, &settings)?;
                push(
                    "best2",
                    out.value,
                    None,
                    start.elapsed().as_secs_f64() * 1e3,
                );
            }
            Instance::Wobm(_) => {
                let start = Instant::now();
                let out = compute(
                    &inst,
                    Algo::LpRound,
                    &Settings {
                        trials: 1,
                        ..settings
                    },
                )?;
                push(
                    "lp-round",
                    out.value,
                    out.lp_value,
                    start.elapsed().as_secs_f64() * 1e3,
                );
            }
            Instance::MultiKey(_) => {
                let start = Instant::now();
                let out = compute(&inst, Algo::Exact, &settings)?;
                let exploit = out.details["exploit_value"]
                    .as_f64()
                    .expect("exploit value reported");
                push(
                    "exploit",
                    exploit,
                    None,
                    start.elapsed().as_secs_f64() * 1e3,
                );
            }
            Instance::KnownOrder(_) => unreachable!("no known-order suite"),
        }
    }
    emit(a.out.as_ref(), &to_csv(&rows)?)
}
