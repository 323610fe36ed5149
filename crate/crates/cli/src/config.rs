//! Run configuration: an optional TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Fail;

/// Keys accepted in the configuration file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub m_range: Option<String>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub eps_range: Option<String>,
    pub threads: Option<usize>,
    pub source: Option<String>,
    pub lambda_reg: Option<f64>,
    pub kkt_tol: Option<f64>,
    pub plot: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Fail> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Fail::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Fail::Config(format!("bad config {}: {e}", path.display())))
    }
}

/// Parsed `LO:HI` measurement range.
pub fn parse_m_range(s: &str) -> Result<(usize, usize), Fail> {
    let bad = || Fail::Config(format!("--m-range expects LO:HI, got '{s}'"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(Fail::Config(format!("empty M range {lo}:{hi}")));
    }
    Ok((lo, hi))
}

/// Parsed `LO:HI:STEP` angle grid, endpoints included.
pub fn parse_eps_range(s: &str) -> Result<Vec<f64>, Fail> {
    let bad = || Fail::Config(format!("--eps-range expects LO:HI:STEP, got '{s}'"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(lo <= hi) {
        return Err(Fail::Config(format!("empty eps grid {s}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=count).map(|i| lo + step * i as f64).collect();
    if grid.iter().any(|&e| !(e > 0.0 && e < std::f64::consts::FRAC_PI_2)) {
        return Err(Fail::Config(format!("eps grid {s} leaves (0, pi/2)")));
    }
    Ok(grid)
}

/// Worker count: `BLOCKSPT_THREADS` wins over the flag and the file.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Fail> {
    match std::env::var("BLOCKSPT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Fail::Config(format!("BLOCKSPT_THREADS='{v}' is not a positive integer"))),
        Err(_) => match flag {
            Some(0) => Err(Fail::Config("--threads must be positive".into())),
            t => Ok(t),
        },
    }
}
