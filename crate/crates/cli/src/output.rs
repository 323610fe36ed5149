//! CSV rows. Columns are only ever appended; bump `SCHEMA_VERSION` when they are.

use std::path::Path;

use serde::Serialize;

use crate::Fail;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Row {
    pub schema_version: u32,
    pub quantity: String,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub param_c3s: Option<f64>,
    pub param_gammas: Option<f64>,
    pub param_lambda: Option<f64>,
    pub param_t1: Option<f64>,
    pub seed: Option<u64>,
}

impl Row {
    pub fn new(quantity: &str, value: f64) -> Self {
        Self { schema_version: SCHEMA_VERSION, quantity: quantity.to_string(), value, ..Self::default() }
    }

    pub fn shape(mut self, d: usize, k: usize, n: usize, m: Option<usize>) -> Self {
        (self.d, self.k, self.n, self.m) = (Some(d), Some(k), Some(n), m);
        self
    }

    pub fn ci(mut self, lo: f64, hi: f64) -> Self {
        (self.ci_low, self.ci_high) = (Some(lo), Some(hi));
        self
    }
}

/// Rows are written in the order given; callers sort by sweep key.
pub fn write_csv(path: &Path, rows: &[Row]) -> Result<(), Fail> {
    let io = |e: csv::Error| Fail::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}
