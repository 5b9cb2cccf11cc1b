use std::fs::OpenOptions;
use std::path::Path;

use keychain_core::Instance;
use serde::Serialize;

use crate::CmdResult;

/// One line of a CSV report. Empty cells mean "not computed".
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub scenarios: Option<usize>,
    pub algo: String,
    pub value: f64,
    pub oracle: Option<f64>,
    pub lp: Option<f64>,
    pub ratio: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl Row {
    pub fn new(instance: &str, inst: &Instance, algo: &str, value: f64) -> Self {
        let (n, m, scenarios) = dimensions(inst);
        Row {
            instance: instance.to_string(),
            n,
            m,
            scenarios,
            algo: algo.to_string(),
            value,
            oracle: None,
            lp: None,
            ratio: None,
            wall_ms: None,
        }
    }

    pub fn with_oracle(mut self, oracle: Option<f64>) -> Self {
        self.oracle = oracle;
        self.ratio = oracle.map(|o| if o > 0.0 { self.value / o } else { 1.0 });
        self
    }
}

/// Keys (or offline nodes), rounds (or arrivals), scenario count.
pub fn dimensions(inst: &Instance) -> (usize, usize, Option<usize>) {
    match inst {
        Instance::KnownOrder(k) => (k.num_keys(), k.num_rounds(), None),
        Instance::Scenarios(s) => (s.num_keys(), s.max_rounds(), Some(s.num_scenarios())),
        Instance::MultiKey(k) => (k.num_keys(), k.chains().len(), None),
        Instance::OrderSelection(o) => (o.num_keys(), o.num_chains(), None),
        Instance::Wobm(w) => (w.num_offline(), w.num_arrivals(), Some(w.support().len())),
    }
}

pub fn to_csv(rows: &[Row]) -> CmdResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Appends rows to `path`, writing the header only when the file is new.
pub fn append_csv(path: &Path, rows: &[Row]) -> CmdResult {
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
