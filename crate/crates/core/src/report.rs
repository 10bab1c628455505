//! Residual reports, the tolerance baseline and convergence tables.
//!
//! A report is JSON with the fixed top-level keys `example`, `grid`,
//! `residuals` and `convergence`. Each residual is judged against a
//! baseline entry: either an absolute bound (identities that hold to
//! rounding) or a constant `C` for a bound `factor * C * h^2`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::ComplexGrid;
use crate::verify::Norms;

pub const BASELINE_ENV: &str = "TRANSLATOR_FORGE_BASELINE";

const BUILTIN_BASELINE: &str = include_str!("../baseline/residual_baseline.json");

/// Residual maxima at or below this at every level count as exact zeros.
pub const EXACT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read baseline {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed baseline {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub h_u: f64,
    pub h_v: f64,
    pub n_u: usize,
    pub n_v: usize,
}

impl GridSummary {
    pub fn of(grid: &ComplexGrid) -> Self {
        Self {
            h_u: grid.h_u(),
            h_v: grid.h_v(),
            n_u: grid.n_u(),
            n_v: grid.n_v(),
        }
    }
}

/// Observed convergence: a ratio or order, or `"exact"` when the residual
/// is zero to rounding at every level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Observed(f64),
    Exact(ExactTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactTag {
    Exact,
}

impl Rate {
    pub const EXACT: Rate = Rate::Exact(ExactTag::Exact);
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Observed(x) => write!(f, "{x:.3}"),
            Rate::Exact(_) => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub example: String,
    pub grid: GridSummary,
    pub residuals: BTreeMap<String, Norms>,
    pub convergence: BTreeMap<String, Rate>,
}

impl ResidualReport {
    pub fn new(example: impl Into<String>, grid: &ComplexGrid, residuals: BTreeMap<String, Norms>) -> Self {
        Self {
            example: example.into(),
            grid: GridSummary::of(grid),
            residuals,
            convergence: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Catalog name the baseline is keyed by (the label up to any `:`).
    pub fn example_key(&self) -> &str {
        self.example.split(':').next().unwrap_or(&self.example)
    }

    pub fn h(&self) -> f64 {
        self.grid.h_u.max(self.grid.h_v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `max <= value` regardless of `h`.
    Abs(f64),
    /// `max <= regression_factor * value * h^2`.
    C(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub regression_factor: f64,
    /// Example name (or `default`) to residual name to bound.
    pub examples: BTreeMap<String, BTreeMap<String, Bound>>,
}

impl Baseline {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_BASELINE).expect("built-in baseline parses")
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ReportError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// The file named by `TRANSLATOR_FORGE_BASELINE`, else the built-in one.
    pub fn from_env() -> Result<Self, ReportError> {
        match std::env::var_os(BASELINE_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::builtin()),
        }
    }

    pub fn bound(&self, example: &str, residual: &str) -> Option<Bound> {
        self.examples
            .get(example)
            .and_then(|m| m.get(residual))
            .or_else(|| self.examples.get("default").and_then(|m| m.get(residual)))
            .copied()
    }

    pub fn threshold(&self, bound: Bound, h: f64) -> f64 {
        match bound {
            Bound::Abs(x) => x,
            Bound::C(c) => self.regression_factor * c * h * h,
        }
    }

    pub fn judge(&self, report: &ResidualReport) -> Verdict {
        let h = report.h();
        let checks = report
            .residuals
            .iter()
            .map(|(name, norms)| {
                let threshold = self.bound(report.example_key(), name).map(|b| self.threshold(b, h));
                Check {
                    name: name.clone(),
                    value: norms.max,
                    threshold,
                    // NaN never passes.
                    pass: threshold.map(|t| norms.max <= t),
                }
            })
            .collect();
        Verdict { checks }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `None` when the baseline has no entry; such residuals are reported
    /// but do not gate.
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.pass == Some(false))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match c.pass {
                Some(true) => "ok  ",
                Some(false) => "FAIL",
                None => "--  ",
            };
            match c.threshold {
                Some(t) => writeln!(f, "{status} {:<26} {:.3e} <= {:.3e}", c.name, c.value, t)?,
                None => writeln!(f, "{status} {:<26} {:.3e}", c.name, c.value)?,
            }
        }
        Ok(())
    }
}

/// Residual maxima over a sequence of spacings, finest last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub example: String,
    pub h: Vec<f64>,
    pub residuals: BTreeMap<String, Vec<f64>>,
    /// Observed order between consecutive levels.
    pub orders: BTreeMap<String, Vec<Rate>>,
}

/// `log(e0/e1) / log(h0/h1)`, or exact when both errors are below the floor.
pub fn observed_order(e0: f64, e1: f64, h0: f64, h1: f64) -> Rate {
    if e0 <= EXACT_FLOOR && e1 <= EXACT_FLOOR {
        Rate::EXACT
    } else {
        Rate::Observed((e0 / e1).ln() / (h0 / h1).ln())
    }
}

impl ConvergenceTable {
    /// Builds the table from per-level reports (any order of `h`).
    pub fn from_reports(example: impl Into<String>, reports: &[ResidualReport]) -> Self {
        let mut levels: Vec<&ResidualReport> = reports.iter().collect();
        levels.sort_by(|a, b| b.h().total_cmp(&a.h()));
        let h: Vec<f64> = levels.iter().map(|r| r.h()).collect();
        let mut residuals: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        if let Some(first) = levels.first() {
            for name in first.residuals.keys() {
                if levels.iter().all(|r| r.residuals.contains_key(name)) {
                    residuals.insert(name.clone(), levels.iter().map(|r| r.residuals[name].max).collect());
                }
            }
        }
        let orders = residuals
            .iter()
            .map(|(name, e)| {
                let o = (1..e.len()).map(|k| observed_order(e[k - 1], e[k], h[k - 1], h[k])).collect();
                (name.clone(), o)
            })
            .collect();
        Self {
            example: example.into(),
            h,
            residuals,
            orders,
        }
    }

    /// Order over the last (finest) pair of levels.
    pub fn final_orders(&self) -> BTreeMap<String, Rate> {
        self.orders
            .iter()
            .filter_map(|(k, v)| v.last().map(|r| (k.clone(), *r)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("residual,h,max,order\n");
        for (name, e) in &self.residuals {
            for (k, (h, x)) in self.h.iter().zip(e).enumerate() {
                let order = if k == 0 {
                    String::new()
                } else {
                    self.orders[name][k - 1].to_string()
                };
                out.push_str(&format!("{name},{h:e},{x:e},{order}\n"));
            }
        }
        out
    }
}
