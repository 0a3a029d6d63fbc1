//! Household digital time-allocation model.
//!
//! A household splits a digital time budget `H` across activities `a` to
//! maximize the additively separable isoelastic aggregator
//!
//! ```text
//! v(h) = sum_a (theta_a * xi_a * h_a)^(1 - 1/eta_a) / (1 - 1/eta_a)
//! ```
//!
//! (with `ln(theta_a xi_a h_a)` when `eta_a = 1`). At the interior optimum
//! every marginal utility equals the shadow price `omega`, which gives the
//! closed-form demand `h_a = (theta_a xi_a)^(eta_a - 1) * omega^(-eta_a)`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// `|eta - 1|` below this routes to the logarithmic branch.
pub const LOG_BRANCH_TOL: f64 = 1e-9;

/// Default tolerance used by [`exact_effects`] for its two equilibrium solves.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;

const OMEGA_LO: f64 = 1e-9;
const OMEGA_HI: f64 = 1e9;
const OMEGA_FLOOR: f64 = 1e-15;
const OMEGA_CEIL: f64 = 1e15;
const BISECTION_CAP: usize = 200;
const BISECTION_RTOL: f64 = 1e-12;

/// Digital activity kinds in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Leisure,
    Productive,
    Other,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Leisure, Activity::Productive, Activity::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Leisure => "leisure",
            Activity::Productive => "productive",
            Activity::Other => "other",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Taste shifter, efficiency shifter and curvature of one activity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityParams {
    theta: f64,
    xi: f64,
    eta: f64,
}

impl ActivityParams {
    pub fn new(theta: f64, xi: f64, eta: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("xi", xi), ("eta", eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { theta, xi, eta })
    }

    /// Parameters with unit taste and the given effective quality `theta * xi`.
    pub fn with_quality(quality: f64, eta: f64) -> Result<Self> {
        Self::new(1.0, quality, eta)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Effective quality `theta * xi`.
    pub fn quality(&self) -> f64 {
        self.theta * self.xi
    }

    pub fn is_log(&self) -> bool {
        (self.eta - 1.0).abs() < LOG_BRANCH_TOL
    }

    /// Returns a copy with the efficiency shifter scaled by `factor`.
    pub fn scale_xi(&self, factor: f64) -> Result<Self> {
        Self::new(self.theta, self.xi * factor, self.eta)
    }

    /// Utility contribution of `hours` in this activity.
    pub fn utility(&self, hours: f64) -> f64 {
        let log_effective = self.quality().ln() + hours.ln();
        if self.is_log() {
            log_effective
        } else {
            let alpha = 1.0 - 1.0 / self.eta;
            (alpha * log_effective).exp() / alpha
        }
    }

    /// Marginal utility `(theta xi)^(1 - 1/eta) * h^(-1/eta)`.
    pub fn marginal_utility(&self, hours: f64) -> f64 {
        let alpha = 1.0 - 1.0 / self.eta;
        (alpha * self.quality().ln() - hours.ln() / self.eta).exp()
    }
}

/// The activity set of a household with its parameters, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preferences {
    activities: Vec<(Activity, ActivityParams)>,
}

impl Preferences {
    pub fn new(activities: Vec<(Activity, ActivityParams)>) -> Result<Self> {
        if activities.len() < 2 {
            return Err(Error::InvalidParameter(
                "preferences need at least two activities".into(),
            ));
        }
        for (i, (a, _)) in activities.iter().enumerate() {
            if activities[..i].iter().any(|(b, _)| b == a) {
                return Err(Error::InvalidParameter(format!("duplicate activity label {a}")));
            }
        }
        Ok(Self { activities })
    }

    /// Two-activity preferences over leisure and productive time.
    pub fn two(leisure: ActivityParams, productive: ActivityParams) -> Self {
        Self {
            activities: vec![(Activity::Leisure, leisure), (Activity::Productive, productive)],
        }
    }

    /// Three-activity preferences over leisure, productive and other time.
    pub fn three(leisure: ActivityParams, productive: ActivityParams, other: ActivityParams) -> Self {
        Self {
            activities: vec![
                (Activity::Leisure, leisure),
                (Activity::Productive, productive),
                (Activity::Other, other),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Activity, ActivityParams)> {
        self.activities.iter()
    }

    pub fn labels(&self) -> Vec<Activity> {
        self.activities.iter().map(|(a, _)| *a).collect()
    }

    pub fn get(&self, activity: Activity) -> Option<&ActivityParams> {
        self.activities
            .iter()
            .find(|(a, _)| *a == activity)
            .map(|(_, p)| p)
    }

    pub fn index_of(&self, activity: Activity) -> Option<usize> {
        self.activities.iter().position(|(a, _)| *a == activity)
    }

    fn require(&self, activity: Activity) -> Result<&ActivityParams> {
        self.get(activity)
            .ok_or_else(|| Error::Unsupported(format!("preferences lack a {activity} activity")))
    }

    /// Aggregator value at `hours` (same order as the activities).
    pub fn utility(&self, hours: &[f64]) -> f64 {
        self.activities
            .iter()
            .zip(hours)
            .map(|((_, p), &h)| p.utility(h))
            .sum()
    }

    /// Preferences after adoption: productive efficiency scaled by
    /// `1 + delta_z`, leisure efficiency by `1 + psi * delta_z`.
    pub fn shocked(&self, shock: &TechShock) -> Result<Self> {
        let activities = self
            .activities
            .iter()
            .map(|&(a, p)| {
                let factor = match a {
                    Activity::Productive => 1.0 + shock.delta_z,
                    Activity::Leisure => 1.0 + shock.psi * shock.delta_z,
                    Activity::Other => 1.0,
                };
                Ok((a, p.scale_xi(factor)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { activities })
    }
}

/// Optimal time allocation with its shadow price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub labels: Vec<Activity>,
    pub hours: Vec<f64>,
    pub total: f64,
    pub shadow_price: f64,
}

impl Allocation {
    pub fn hours_of(&self, activity: Activity) -> Option<f64> {
        self.labels
            .iter()
            .position(|&a| a == activity)
            .map(|i| self.hours[i])
    }

    pub fn shares(&self) -> Vec<f64> {
        self.hours.iter().map(|h| h / self.total).collect()
    }

    /// Largest FOC residual `|MU_a(h_a) - omega|` across activities.
    pub fn foc_residual(&self, prefs: &Preferences) -> f64 {
        prefs
            .iter()
            .zip(&self.hours)
            .map(|((_, p), &h)| (p.marginal_utility(h) - self.shadow_price).abs())
            .fold(0.0, f64::max)
    }
}

/// Adoption technology shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechShock {
    pub delta_z: f64,
    pub psi: f64,
    pub cost_time: f64,
}

impl TechShock {
    pub fn new(delta_z: f64, psi: f64, cost_time: f64) -> Result<Self> {
        if !(delta_z >= 0.0 && delta_z.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta_z must be >= 0, got {delta_z}")));
        }
        if !(0.0..=1.0).contains(&psi) {
            return Err(Error::InvalidParameter(format!("psi must lie in [0,1], got {psi}")));
        }
        if !(cost_time >= 0.0 && cost_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cost_time must be >= 0, got {cost_time}"
            )));
        }
        Ok(Self {
            delta_z,
            psi,
            cost_time,
        })
    }

    /// Productive-only shock with no adoption cost.
    pub fn productive(delta_z: f64) -> Result<Self> {
        Self::new(delta_z, 0.0, 0.0)
    }
}

/// Log-point effects of adoption on time per activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentEffects {
    pub beta_gpt: Vec<(Activity, f64)>,
    /// `true` for two-solve effects, `false` for first-order formulas.
    pub exact: bool,
}

impl TreatmentEffects {
    pub fn get(&self, activity: Activity) -> Option<f64> {
        self.beta_gpt
            .iter()
            .find(|(a, _)| *a == activity)
            .map(|(_, b)| *b)
    }
}

/// Closed-form demand `(theta xi)^(eta - 1) * omega^(-eta)`; `1/omega` at `eta = 1`.
pub fn demand(params: &ActivityParams, omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("shadow price must be positive, got {omega}")));
    }
    Ok(demand_at_log_omega(params, omega.ln()))
}

fn demand_at_log_omega(params: &ActivityParams, log_omega: f64) -> f64 {
    if params.is_log() {
        (-log_omega).exp()
    } else {
        ((params.eta - 1.0) * params.quality().ln() - params.eta * log_omega).exp()
    }
}

fn excess_demand(prefs: &Preferences, total: f64, log_omega: f64) -> f64 {
    prefs
        .iter()
        .map(|(_, p)| demand_at_log_omega(p, log_omega))
        .sum::<f64>()
        - total
}

/// Solves for the shadow price that exhausts the time budget `total`.
///
/// Bisection on `ln(omega)` (excess demand is strictly decreasing in
/// `omega`) followed by one Newton polish step.
pub fn solve_allocation(prefs: &Preferences, total: f64, tol: f64) -> Result<Allocation> {
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Domain(format!("total time must be positive, got {total}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let g = |x: f64| excess_demand(prefs, total, x);

    let mut lo = OMEGA_LO.ln();
    let mut hi = OMEGA_HI.ln();
    let step = 10f64.ln();
    while g(lo) < 0.0 && lo > OMEGA_FLOOR.ln() + 1e-9 {
        lo -= step;
    }
    while g(hi) > 0.0 && hi < OMEGA_CEIL.ln() - 1e-9 {
        hi += step;
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo >= 0.0 && g_hi <= 0.0) {
        return Err(Error::Bracket {
            lo: lo.exp(),
            hi: hi.exp(),
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }

    for _ in 0..BISECTION_CAP {
        if hi - lo <= BISECTION_RTOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut log_omega = 0.5 * (lo + hi);
    // Newton in ln(omega): d/dx sum h_a(x) = -sum eta_a h_a.
    let hours: Vec<f64> = prefs
        .iter()
        .map(|(_, p)| demand_at_log_omega(p, log_omega))
        .collect();
    let slope: f64 = -prefs
        .iter()
        .zip(&hours)
        .map(|((_, p), h)| if p.is_log() { *h } else { p.eta * h })
        .sum::<f64>();
    let resid = hours.iter().sum::<f64>() - total;
    if slope < 0.0 {
        let polished = log_omega - resid / slope;
        if polished >= lo - BISECTION_RTOL
            && polished <= hi + BISECTION_RTOL
            && g(polished).abs() <= resid.abs()
        {
            log_omega = polished;
        }
    }

    let hours: Vec<f64> = prefs
        .iter()
        .map(|(_, p)| demand_at_log_omega(p, log_omega))
        .collect();
    let budget_gap = hours.iter().sum::<f64>() - total;
    if budget_gap.abs() > tol {
        return Err(Error::Convergence {
            iterations: BISECTION_CAP,
            last: log_omega.exp(),
        });
    }
    Ok(Allocation {
        labels: prefs.labels(),
        hours,
        total,
        shadow_price: log_omega.exp(),
    })
}

/// First-order envelope approximation of the adoption gain, `delta * z^N * omega^N`.
pub fn adoption_gain(prefs: &Preferences, alloc_no: &Allocation, shock: &TechShock) -> Result<f64> {
    prefs.require(Activity::Productive)?;
    let z = productive_hours(alloc_no)?;
    Ok(shock.delta_z * z * alloc_no.shadow_price)
}

/// Exact indirect-utility difference `v(Adopt) - v(No adopt)` from two solves.
pub fn exact_adoption_gain(prefs: &Preferences, total: f64, shock: &TechShock) -> Result<f64> {
    let adopt_prefs = prefs.shocked(shock)?;
    let no = solve_allocation(prefs, total, DEFAULT_SOLVE_TOL * total.max(1.0))?;
    let yes = solve_allocation(&adopt_prefs, total, DEFAULT_SOLVE_TOL * total.max(1.0))?;
    Ok(adopt_prefs.utility(&yes.hours) - prefs.utility(&no.hours))
}

/// Adoption rule in time units: adopt iff `delta_z * z^N >= cost_time`.
pub fn should_adopt(shock: &TechShock, alloc_no: &Allocation) -> Result<bool> {
    Ok(shock.delta_z * productive_hours(alloc_no)? >= shock.cost_time)
}

fn productive_hours(alloc: &Allocation) -> Result<f64> {
    alloc
        .hours_of(Activity::Productive)
        .ok_or_else(|| Error::Unsupported("allocation has no productive activity".into()))
}

/// Effects of adoption from two equilibrium solves: log hours under the
/// shocked preferences minus log hours under the baseline.
pub fn exact_effects(prefs: &Preferences, total: f64, shock: &TechShock) -> Result<TreatmentEffects> {
    let tol = DEFAULT_SOLVE_TOL * total.max(1.0);
    let no = solve_allocation(prefs, total, tol)?;
    let yes = solve_allocation(&prefs.shocked(shock)?, total, tol)?;
    let beta_gpt = no
        .labels
        .iter()
        .zip(no.hours.iter().zip(&yes.hours))
        .map(|(&a, (&hn, &ha))| (a, ha.ln() - hn.ln()))
        .collect();
    Ok(TreatmentEffects {
        beta_gpt,
        exact: true,
    })
}

/// First-order (small-shock) effects for two-activity preferences with an
/// unshocked leisure activity, evaluated at the no-adopt allocation.
pub fn firstorder_effects(
    prefs: &Preferences,
    alloc_no: &Allocation,
    shock: &TechShock,
) -> Result<TreatmentEffects> {
    if prefs.len() != 2 {
        return Err(Error::Unsupported(format!(
            "first-order effects need exactly two activities, got {}",
            prefs.len()
        )));
    }
    if shock.psi != 0.0 {
        return Err(Error::Unsupported(format!(
            "first-order effects assume psi = 0, got {}",
            shock.psi
        )));
    }
    let eta_z = prefs.require(Activity::Productive)?.eta;
    let eta_l = prefs.require(Activity::Leisure)?.eta;
    let z = productive_hours(alloc_no)?;
    let l = alloc_no
        .hours_of(Activity::Leisure)
        .ok_or_else(|| Error::Unsupported("allocation has no leisure activity".into()))?;
    let dlog_xi = shock.delta_z.ln_1p();

    let beta_z = (eta_z - 1.0) / (1.0 + (eta_z / eta_l) * (z / l)) * dlog_xi;
    let beta_l = (1.0 - eta_z) * (eta_l / eta_z) / (1.0 + (eta_l / eta_z) * (l / z)) * dlog_xi;
    Ok(TreatmentEffects {
        beta_gpt: vec![(Activity::Leisure, beta_l), (Activity::Productive, beta_z)],
        exact: false,
    })
}

/// `beta_z / eta_z - beta_l / eta_l`.
pub fn gap_identity_lhs(effects: &TreatmentEffects, prefs: &Preferences) -> Result<f64> {
    let bz = effects
        .get(Activity::Productive)
        .ok_or_else(|| Error::Unsupported("effects lack a productive entry".into()))?;
    let bl = effects
        .get(Activity::Leisure)
        .ok_or_else(|| Error::Unsupported("effects lack a leisure entry".into()))?;
    let eta_z = prefs.require(Activity::Productive)?.eta;
    let eta_l = prefs.require(Activity::Leisure)?.eta;
    Ok(bz / eta_z - bl / eta_l)
}

/// `((eta_z - 1)/eta_z) ln(1 + delta) - ((eta_l - 1)/eta_l) ln(1 + psi delta)`.
pub fn gap_identity_rhs(prefs: &Preferences, shock: &TechShock) -> Result<f64> {
    let eta_z = prefs.require(Activity::Productive)?.eta;
    let eta_l = prefs.require(Activity::Leisure)?.eta;
    Ok((eta_z - 1.0) / eta_z * shock.delta_z.ln_1p()
        - (eta_l - 1.0) / eta_l * (shock.psi * shock.delta_z).ln_1p())
}
