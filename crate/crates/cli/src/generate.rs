use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use keychain_core::gen;
use keychain_core::order::utmp_gadget;
use keychain_core::Instance;

use crate::{emit, CmdResult, Failure, SeedArg};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Family {
    /// The three-advisor scenario instance.
    Advisor,
    /// Multi-key instance where exploiting a found key is suboptimal.
    Counterexample,
    /// Dueling-pair gadget of a random graph with degree at most 3.
    #[value(alias = "vertex_cover")]
    VertexCover,
    /// Scenario gadget of a random formula.
    Threesat,
    /// Order-selection gadget of a 0/1 matrix.
    Utmp,
    #[value(alias = "known_order")]
    KnownOrder,
    Scenarios,
    #[value(aliases = ["multi_key", "multikey"])]
    MultiKey,
    #[value(aliases = ["order", "order_selection"])]
    OrderSelection,
    Wobm,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Keys, vertices, variables or offline nodes.
    #[arg(short, long, default_value_t = 4)]
    pub n: usize,
    /// Rounds, edges or arrivals.
    #[arg(short, long, default_value_t = 4)]
    pub m: usize,
    /// Scenarios or support size.
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    /// Counterexample size parameter.
    #[arg(long, default_value_t = 3)]
    pub x: usize,
    /// Counterexample perturbation.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// 0/1 matrix for `utmp`: JSON rows or one line of digits per row.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn read_matrix(text: &str) -> CmdResult<Vec<Vec<u8>>> {
    if let Ok(rows) = serde_json::from_str::<Vec<Vec<u8>>>(text) {
        return Ok(rows);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.chars()
                .filter(|c| !c.is_whitespace() && *c != ',')
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(Failure::Validation(anyhow!(
                        "matrix row {i}: unexpected {c:?}"
                    ))),
                })
                .collect()
        })
        .collect()
}

pub fn generate(a: &GenArgs) -> CmdResult<Instance> {
    let seed = a.seed.seed;
    Ok(match a.family {
        Family::Advisor => Instance::Scenarios(gen::advisor_instance()),
        Family::Counterexample => Instance::MultiKey(gen::exploit_counterexample(a.x, a.epsilon)?),
        Family::VertexCover => {
            let g = gen::random_graph(a.n, a.m, seed)?;
            Instance::MultiKey(gen::vertex_cover_gadget(&g)?)
        }
        Family::Threesat => {
            Instance::Scenarios(gen::threesat_gadget(&gen::random_formula(a.n, seed)?)?)
        }
        Family::Utmp => {
            let path = a
                .matrix
                .as_ref()
                .ok_or_else(|| Failure::Validation(anyhow!("utmp needs --matrix")))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Validation(anyhow!("{}: {e}", path.display())))?;
            Instance::OrderSelection(utmp_gadget(&read_matrix(&text)?)?)
        }
        Family::KnownOrder => Instance::KnownOrder(gen::random_known_order(a.n, a.m, seed)?),
        Family::Scenarios => Instance::Scenarios(gen::random_scenarios(a.n, a.m, a.count, seed)?),
        Family::MultiKey => Instance::MultiKey(gen::random_multi_key(a.n, a.m, seed)?),
        Family::OrderSelection => Instance::OrderSelection(gen::random_order(a.n, a.m, seed)?),
        Family::Wobm => Instance::Wobm(gen::random_wobm(a.n, a.m, a.count, seed)?),
    })
}

pub fn run(a: &GenArgs) -> CmdResult {
    let inst = generate(a)?;
    emit(a.out.as_ref(), &(inst.to_json() + "\n"))
}
