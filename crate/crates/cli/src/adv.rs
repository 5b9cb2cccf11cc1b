use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use keychain_core::adversarial::{
    ftrl_solve, BestResponse, OracleResponse, PriorSet, RoundingResponse,
};
use keychain_core::{build_information_forest, Instance};
use serde::Deserialize;
use serde_json::json;

use crate::solve::load;
use crate::{emit, CmdResult, Failure, KindArg, SeedArg, VERSION};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum AdvAlgo {
    Oracle,
    LpRound,
}

#[derive(Args)]
pub struct AdvArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Prior constraints; the whole simplex when omitted.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = AdvAlgo::Oracle)]
    pub algo: AdvAlgo,
    /// Rounding repetitions per round for `lp-round`.
    #[arg(long, default_value_t = 8)]
    pub reps: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Either per-scenario bounds or explicit rows `coeffs · p <= rhs`.
#[derive(Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum Constraints {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Rows { rows: Vec<ConstraintRow> },
}

#[derive(Deserialize)]
struct ConstraintRow {
    coeffs: Vec<f64>,
    rhs: f64,
}

fn prior_set(path: Option<&PathBuf>, num_scenarios: usize) -> CmdResult<PriorSet> {
    let Some(path) = path else {
        return Ok(PriorSet::simplex(num_scenarios));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(anyhow!("{}: {e}", path.display())))?;
    let parsed: Constraints = serde_json::from_str(&text).map_err(|e| {
        Failure::Validation(anyhow!(
            "{}: expected {{\"lower\", \"upper\"}} or {{\"rows\": [{{\"coeffs\", \"rhs\"}}]}} ({e})",
            path.display()
        ))
    })?;
    Ok(match parsed {
        Constraints::Box { lower, upper } => PriorSet::boxed(&lower, &upper)?,
        Constraints::Rows { rows } => PriorSet::new(
            num_scenarios,
            rows.into_iter().map(|r| (r.coeffs, r.rhs)).collect(),
        )?,
    })
}

pub fn run(a: &AdvArgs) -> CmdResult {
    let Instance::Scenarios(inst) = load(&a.input, Some(KindArg::Scenarios))? else {
        unreachable!("kind checked on load")
    };
    let forest = build_information_forest(&inst);
    let set = prior_set(a.constraints.as_ref(), inst.num_scenarios())?;
    let rounding = RoundingResponse {
        seed: a.seed.seed,
        repetitions: a.reps,
    };
    let response: &dyn BestResponse = match a.algo {
        AdvAlgo::Oracle => &OracleResponse,
        AdvAlgo::LpRound => &rounding,
    };
    let result = ftrl_solve(&forest, &set, a.epsilon, response)?;
    let report = json!({
        "tool": "keychain",
        "version": VERSION,
        "seed": a.seed.seed,
        "algo": a.algo.to_possible_value().map(|v| v.get_name().to_string()),
        "epsilon": a.epsilon,
        "result": result,
    });
    emit(
        a.out.as_ref(),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )
}
