//! One run per parameter value, in order, aggregated into CSV and JSON.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::pipeline::{run, Mode, RunReport};
use crate::RunError;

pub const PARAMS: &[&str] = &["strength", "voiculescu_n", "n", "epsilon"];

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub value: String,
    pub report: Option<RunReport>,
    /// Set when the run could not produce a report.
    pub error: Option<String>,
}

impl SweepEntry {
    pub fn pass(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.status.pass)
    }
}

/// Parses a comma-separated value list; blank input is the empty list.
pub fn parse_values(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect()
}

/// Config errors in `param` or any value abort the sweep; failures inside a
/// run are recorded and the sweep continues.
pub fn sweep(base: &ExperimentConfig, param: &str, values: &[String]) -> Result<Vec<SweepEntry>, RunError> {
    if !PARAMS.contains(&param) {
        return Err(RunError::Config(format!("cannot sweep `{param}`; expected one of {}", PARAMS.join(", "))));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.set(param, v)?;
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(configs
        .par_iter()
        .zip(values)
        .map(|(cfg, value)| match run(cfg, Mode::Invariants) {
            Ok(r) => SweepEntry { value: value.clone(), report: Some(r.report), error: None },
            Err(e) => SweepEntry { value: value.clone(), report: None, error: Some(e.to_string()) },
        })
        .collect())
}

const LEMMA_KEYS: [&str; 8] = ["L2", "L3", "L4", "L6", "L6h", "L7", "L8", "L8_hyp"];

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["value", "cocycle_defect_plus", "cocycle_defect_minus", "pair_lhs", "epsilon", "delta"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in LEMMA_KEYS {
        h.push(format!("{k}_measured"));
        h.push(format!("{k}_bound"));
    }
    h.extend(["theorem_margin", "q_defect", "gap", "rank", "chern", "pass", "error"].map(String::from));
    h
}

pub fn csv_row(e: &SweepEntry) -> Vec<String> {
    let Some(r) = &e.report else {
        let mut row = vec![e.value.clone()];
        row.resize(csv_header().len() - 2, String::new());
        row.push("false".into());
        row.push(e.error.clone().unwrap_or_default());
        return row;
    };
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut row = vec![
        e.value.clone(),
        r.cocycle_defects.plus.to_string(),
        r.cocycle_defects.minus.to_string(),
        r.pair_defect.lhs_plus.max(r.pair_defect.lhs_minus).to_string(),
        r.lemmas.params.epsilon.to_string(),
        r.lemmas.params.delta.to_string(),
    ];
    for (_, c) in r.lemmas.lemmas.iter() {
        row.push(c.measured.to_string());
        row.push(c.bound.to_string());
    }
    row.push(r.lemmas.theorem_margin.to_string());
    row.push(opt(r.q_defect.map(|d| d.to_string())));
    row.push(opt(r.extraction.map(|x| x.gap.to_string())));
    row.push(opt(r.invariants.as_ref().map(|i| i.rank.to_string())));
    row.push(opt(r.invariants.as_ref().and_then(|i| i.chern).map(|c| c.to_string())));
    row.push(r.status.pass.to_string());
    row.push(String::new());
    row
}
