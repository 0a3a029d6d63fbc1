//! Engel elasticities of time from cell-by-quarter panels, in log-log and
//! budget-share form.

use serde::Serialize;

use super::data::Dataset;
use super::regression::{ols, tsls, RegressionResult, RegressionSpec};
use crate::error::{Error, Result};
use crate::model::Activity;
use crate::records::EngelCell;

/// First-stage F below which the rainfall instrument is flagged weak.
pub const WEAK_INSTRUMENT_F: f64 = 10.0;

/// Share sums may deviate from one by at most this much.
pub const SHARE_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EngelClustering {
    /// Clustered by cell and by quarter.
    TwoWay,
    /// Clustered by cell.
    Cell,
    /// Heteroskedasticity-robust.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EngelOptions {
    /// Instrument log total hours with log precipitation.
    pub use_iv: bool,
    pub clustering: EngelClustering,
}

impl EngelOptions {
    pub fn new(use_iv: bool) -> Self {
        Self {
            use_iv,
            clustering: EngelClustering::TwoWay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngelEstimates {
    pub activities: Vec<Activity>,
    /// Log-log elasticity (log form) or `1 + gamma / mean_share` (share form).
    pub beta: Vec<f64>,
    pub beta_se: Vec<f64>,
    /// Share-form coefficients on log total hours.
    pub gamma: Option<Vec<f64>>,
    pub gamma_se: Option<Vec<f64>>,
    /// Average budget share per activity over included cell-quarters.
    pub mean_share: Vec<f64>,
    pub implied_beta_from_shares: Option<Vec<f64>>,
    /// Sum of share coefficients and its combined standard error.
    pub gamma_sum: Option<(f64, f64)>,
    pub first_stage_f: Option<f64>,
    pub weak_instrument: bool,
    /// Cell-quarters dropped per activity for zero hours.
    pub dropped_zero: Vec<usize>,
    pub n_obs: Vec<usize>,
}

fn build(cells: &[EngelCell], y: Vec<f64>) -> Result<Dataset> {
    let n = cells.len();
    let mut ds = Dataset::new(n);
    ds.add_numeric("y", y)?;
    ds.add_numeric("ln_total", cells.iter().map(|c| c.total.ln()).collect())?;
    ds.add_numeric("log_precip", cells.iter().map(|c| c.log_precip).collect())?;
    ds.add_categorical("cell", cells.iter().map(|c| c.cell as i64).collect())?;
    ds.add_categorical("quarter", cells.iter().map(|c| c.quarter as i64).collect())?;
    Ok(ds)
}

fn regress(ds: &Dataset, opts: &EngelOptions) -> Result<RegressionResult> {
    let mut spec = RegressionSpec::new("y").fixed_effect(&["cell"]).fixed_effect(&["quarter"]);
    spec = match opts.clustering {
        EngelClustering::TwoWay => spec.cluster(&["cell"]).cluster(&["quarter"]),
        EngelClustering::Cell => spec.cluster(&["cell"]),
        EngelClustering::None => spec,
    };
    if opts.use_iv {
        tsls(&spec.endogenous("ln_total", "log_precip"), ds)
    } else {
        ols(&spec.regressor("ln_total"), ds)
    }
}

fn validate_totals(cells: &[EngelCell]) -> Result<()> {
    for (row, c) in cells.iter().enumerate() {
        if !(c.total > 0.0 && c.total.is_finite()) {
            return Err(Error::Data(format!("row {row}: total hours {} must be positive", c.total)));
        }
        if c.hours.iter().any(|h| !(*h >= 0.0 && h.is_finite())) {
            return Err(Error::Data(format!("row {row}: hours must be finite and nonnegative")));
        }
    }
    Ok(())
}

fn mean_shares(cells: &[EngelCell]) -> Vec<f64> {
    (0..3)
        .map(|a| cells.iter().map(|c| c.hours[a] / c.total).sum::<f64>() / cells.len() as f64)
        .collect()
}

/// `ln h_a = cell + quarter + beta_a ln H`, one regression per activity.
/// Cell-quarters with zero hours in an activity are dropped for that
/// activity.
pub fn engel_loglog(cells: &[EngelCell], opts: &EngelOptions) -> Result<EngelEstimates> {
    validate_totals(cells)?;
    let mut beta = Vec::new();
    let mut beta_se = Vec::new();
    let mut dropped_zero = Vec::new();
    let mut n_obs = Vec::new();
    let mut first_stage_f = None;
    for (a, activity) in Activity::ALL.iter().enumerate() {
        let keep: Vec<EngelCell> = cells.iter().filter(|c| c.hours[a] > 0.0).cloned().collect();
        if keep.is_empty() {
            return Err(Error::Data(format!("activity {activity} has zero hours in every cell")));
        }
        dropped_zero.push(cells.len() - keep.len());
        let ds = build(&keep, keep.iter().map(|c| c.hours[a].ln()).collect())?;
        let r = regress(&ds, opts)?;
        beta.push(r.coefficients[0]);
        beta_se.push(r.se[0]);
        n_obs.push(r.n_obs);
        if first_stage_f.is_none() {
            first_stage_f = r.first_stage_f();
        }
    }
    Ok(EngelEstimates {
        activities: Activity::ALL.to_vec(),
        beta,
        beta_se,
        gamma: None,
        gamma_se: None,
        mean_share: mean_shares(cells),
        implied_beta_from_shares: None,
        gamma_sum: None,
        weak_instrument: first_stage_f.is_some_and(|f| !(f >= WEAK_INSTRUMENT_F)),
        first_stage_f,
        dropped_zero,
        n_obs,
    })
}

/// `s_a = cell + quarter + gamma_a ln H` with implied elasticity
/// `1 + gamma_a / mean(s_a)`.
pub fn engel_shares(cells: &[EngelCell], opts: &EngelOptions) -> Result<EngelEstimates> {
    validate_totals(cells)?;
    for (row, c) in cells.iter().enumerate() {
        let sum: f64 = c.hours.iter().sum::<f64>() / c.total;
        if (sum - 1.0).abs() > SHARE_SUM_TOL {
            return Err(Error::Data(format!(
                "row {row} (cell {}, quarter {}): shares sum to {sum}",
                c.cell, c.quarter
            )));
        }
    }
    let mean_share = mean_shares(cells);
    let mut gamma = Vec::new();
    let mut gamma_se = Vec::new();
    let mut first_stage_f = None;
    for a in 0..3 {
        let ds = build(cells, cells.iter().map(|c| c.hours[a] / c.total).collect())?;
        let r = regress(&ds, opts)?;
        gamma.push(r.coefficients[0]);
        gamma_se.push(r.se[0]);
        if first_stage_f.is_none() {
            first_stage_f = r.first_stage_f();
        }
    }
    let implied: Vec<f64> = gamma.iter().zip(&mean_share).map(|(g, s)| 1.0 + g / s).collect();
    let beta_se = gamma_se.iter().zip(&mean_share).map(|(se, s)| se / s).collect();
    let sum = gamma.iter().sum::<f64>();
    let sum_se = gamma_se.iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok(EngelEstimates {
        activities: Activity::ALL.to_vec(),
        beta: implied.clone(),
        beta_se,
        gamma: Some(gamma),
        gamma_se: Some(gamma_se),
        mean_share,
        implied_beta_from_shares: Some(implied),
        gamma_sum: Some((sum, sum_se)),
        weak_instrument: first_stage_f.is_some_and(|f| !(f >= WEAK_INSTRUMENT_F)),
        first_stage_f,
        dropped_zero: vec![0; 3],
        n_obs: vec![cells.len(); 3],
    })
}
