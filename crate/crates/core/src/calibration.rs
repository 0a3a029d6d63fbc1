//! Inversion of Engel elasticities and causal time-use effects into the
//! implied productive efficiency gain.
//!
//! Differencing the log first-order conditions across the adopt and
//! no-adopt regimes, with leisure as the reference activity, gives
//!
//! ```text
//! (1 - eta_z) ln(1 + delta_z) - r (1 - eta_l) ln(1 + psi delta_z) = r * bgpt_l - bgpt_z
//! ```
//!
//! where `r = beta_z / beta_l` and `eta_a = beta_a * eta_bar`. The right-hand
//! side is `A_z`; with `psi = 0` the scaled gain `exp(A_z) - 1` does not
//! depend on `eta_bar`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{brent_root, Bracket};

/// Residual tolerance for the `delta_z` equation.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Largest `delta_z` probed when bracketing (geometric probe from 1).
pub const DELTA_PROBE_MAX: f64 = 1e300;

/// Default curvature levels reported in the calibration grid.
pub const DEFAULT_ETA_BARS: [f64; 4] = [0.73, 0.90, 1.00, 1.07];

/// Default efficiency gain ratios reported in the calibration grid.
pub const DEFAULT_PSIS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

/// Estimated elasticities and causal effects feeding the inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationInputs {
    /// Productive Engel elasticity.
    pub beta_z: f64,
    /// Leisure Engel elasticity.
    pub beta_l: f64,
    /// Causal log effect of adoption on leisure time.
    pub bgpt_l: f64,
    /// Causal log effect of adoption on productive time.
    pub bgpt_z: f64,
    /// `beta_z / beta_l`, carried explicitly so rounded values can be used.
    pub ratio_r: f64,
}

impl CalibrationInputs {
    pub fn new(beta_z: f64, beta_l: f64, bgpt_l: f64, bgpt_z: f64, ratio_r: f64) -> Result<Self> {
        for (name, v) in [("beta_z", beta_z), ("beta_l", beta_l), ("ratio_r", ratio_r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !bgpt_l.is_finite() || !bgpt_z.is_finite() {
            return Err(Error::InvalidParameter("causal effects must be finite".into()));
        }
        Ok(Self {
            beta_z,
            beta_l,
            bgpt_l,
            bgpt_z,
            ratio_r,
        })
    }

    /// Published estimates: Engel elasticities 0.931 (productive) and 1.374
    /// (leisure), IV effects 1.512 (leisure) and 0.011 (productive), with the
    /// ratio rounded to 0.6776.
    pub fn published() -> Self {
        Self {
            beta_z: 0.931,
            beta_l: 1.374,
            bgpt_l: 1.512,
            bgpt_z: 0.011,
            ratio_r: 0.6776,
        }
    }

    /// Copy with `ratio_r` recomputed as `beta_z / beta_l`.
    pub fn with_exact_ratio(self) -> Self {
        Self {
            ratio_r: self.beta_z / self.beta_l,
            ..self
        }
    }

    pub fn eta_z(&self, eta_bar: f64) -> f64 {
        self.beta_z * eta_bar
    }

    pub fn eta_l(&self, eta_bar: f64) -> f64 {
        self.beta_l * eta_bar
    }
}

/// One solved cell of the calibration grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationCell {
    pub eta_bar: f64,
    pub psi: f64,
    pub delta_z: f64,
    pub scaled_gain_pct: f64,
}

/// `A_z = r * bgpt_l - bgpt_z`.
pub fn compute_az(inputs: &CalibrationInputs) -> f64 {
    inputs.ratio_r * inputs.bgpt_l - inputs.bgpt_z
}

/// Scaled gain in percent for `psi = 0`: `100 (exp(A_z) - 1)`.
pub fn invert_psi0(az: f64) -> f64 {
    100.0 * az.exp_m1()
}

/// Scaled gain `100 (exp((1 - eta_z) ln(1 + delta_z)) - 1)` in percent.
pub fn scaled_gain_pct(eta_z: f64, delta_z: f64) -> f64 {
    100.0 * ((1.0 - eta_z) * delta_z.ln_1p()).exp_m1()
}

/// Left-hand side of the inversion equation as a function of `x = ln(1 + delta_z)`.
fn lhs_log(eta_z: f64, eta_l: f64, r: f64, psi: f64, x: f64) -> f64 {
    // ln(1 + psi * (e^x - 1)), computed without forming e^x for large x.
    let leisure = if psi == 0.0 {
        0.0
    } else if x > 30.0 {
        x + psi.ln() + ((1.0 - psi) / psi * (-x).exp()).ln_1p()
    } else {
        (psi * x.exp_m1()).ln_1p()
    };
    (1.0 - eta_z) * x - r * (1.0 - eta_l) * leisure
}

/// Solves the inversion equation for `delta_z >= 0` at the given `eta_bar`
/// and `psi`.
///
/// Requires `eta_z = beta_z * eta_bar < 1` when `A_z > 0`; otherwise the
/// left-hand side never reaches `A_z` and a no-solution error names the bound.
pub fn invert_psi(inputs: &CalibrationInputs, eta_bar: f64, psi: f64) -> Result<CalibrationCell> {
    if !(eta_bar > 0.0 && eta_bar.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta_bar must be positive, got {eta_bar}")));
    }
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::InvalidParameter(format!("psi must lie in [0,1], got {psi}")));
    }
    let az = compute_az(inputs);
    let eta_z = inputs.eta_z(eta_bar);
    let eta_l = inputs.eta_l(eta_bar);
    let r = inputs.ratio_r;

    if az == 0.0 {
        return Ok(CalibrationCell {
            eta_bar,
            psi,
            delta_z: 0.0,
            scaled_gain_pct: 0.0,
        });
    }
    if az > 0.0 && eta_z >= 1.0 {
        return Err(Error::NoSolution(format!(
            "eta_z = {eta_z:.4} >= 1 (eta_bar = {eta_bar} exceeds upper bound 1/beta_z = {:.4})",
            1.0 / inputs.beta_z
        )));
    }

    let f = |x: f64| lhs_log(eta_z, eta_l, r, psi, x) - az;
    let f0 = f(0.0);
    let mut delta_hi = 1.0f64;
    let mut x_hi = delta_hi.ln_1p();
    while f(x_hi) * f0 > 0.0 {
        if delta_hi >= DELTA_PROBE_MAX {
            return Err(Error::NoSolution(format!(
                "no sign change for delta_z in [0, {DELTA_PROBE_MAX:e}] at eta_bar = {eta_bar}, psi = {psi}"
            )));
        }
        delta_hi *= 10.0;
        x_hi = delta_hi.ln_1p();
    }
    let bracket = Bracket::from_values(0.0, x_hi, f0, f(x_hi))?;
    let x = brent_root(f, bracket, RESIDUAL_TOL)?;
    if x < 0.0 {
        return Err(Error::NoSolution(format!(
            "root at negative delta_z for eta_bar = {eta_bar}, psi = {psi}"
        )));
    }
    Ok(CalibrationCell {
        eta_bar,
        psi,
        delta_z: x.exp_m1(),
        scaled_gain_pct: 100.0 * ((1.0 - eta_z) * x).exp_m1(),
    })
}

/// A grid cell with its outcome; failures are kept in place.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub eta_bar: f64,
    pub psi: f64,
    pub outcome: std::result::Result<CalibrationCell, Error>,
    /// Set when `eta_bar` lies outside the curvature bounds implied by the
    /// Engel elasticities.
    pub bound_violation: Option<String>,
}

/// Solves every `(eta_bar, psi)` combination, ordered by `eta_bar` then `psi`.
pub fn grid(inputs: &CalibrationInputs, eta_bars: &[f64], psis: &[f64]) -> Vec<GridEntry> {
    let bounds = eta_bounds(inputs.beta_z, inputs.beta_l).ok();
    let mut out = Vec::with_capacity(eta_bars.len() * psis.len());
    for &eta_bar in eta_bars {
        let bound_violation = match bounds {
            Some((_, upper)) if eta_bar >= upper => Some(format!(
                "eta_bar {eta_bar} >= upper bound 1/beta_z = {upper:.4} (productive not a necessity)"
            )),
            Some((lower, _)) if eta_bar < lower => Some(format!(
                "eta_bar {eta_bar} < lower bound 1/beta_l = {lower:.4} (leisure not a luxury)"
            )),
            Some(_) => None,
            None => Some("curvature bounds are infeasible for these elasticities".into()),
        };
        for &psi in psis {
            out.push(GridEntry {
                eta_bar,
                psi,
                outcome: invert_psi(inputs, eta_bar, psi),
                bound_violation: bound_violation.clone(),
            });
        }
    }
    out
}

/// Admissible range of `eta_bar`: `(1/beta_l, 1/beta_z)`.
pub fn eta_bounds(beta_z: f64, beta_l: f64) -> Result<(f64, f64)> {
    if !(beta_z > 0.0 && beta_l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Engel elasticities must be positive (beta_z={beta_z}, beta_l={beta_l})"
        )));
    }
    let lower = 1.0 / beta_l;
    let upper = 1.0 / beta_z;
    if lower >= upper {
        return Err(Error::InfeasibleBounds { lower, upper });
    }
    Ok((lower, upper))
}

/// Curvature levels `eta_a = beta_a * eta_bar`.
pub fn implied_etas(beta: &[f64], eta_bar: f64) -> Result<Vec<f64>> {
    if !(eta_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("eta_bar must be positive, got {eta_bar}")));
    }
    Ok(beta.iter().map(|b| b * eta_bar).collect())
}

/// Published scaled-gain grid (percent), rows `DEFAULT_ETA_BARS`, columns `DEFAULT_PSIS`.
pub const PUBLISHED_GRID: [[f64; 4]; 4] = [
    [175.52, 174.46, 174.12, 173.76],
    [175.52, 85.16, 75.59, 66.45],
    [175.52, 33.60, 28.80, 24.22],
    [175.52, 1.73, 1.47, 1.21],
];

/// Tolerance, in percentage points, for matching the published grid.
pub const PUBLISHED_TOL_PP: f64 = 0.05;
