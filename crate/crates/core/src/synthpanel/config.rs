use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::Category;
use crate::model::LOG_BRANCH_TOL;

/// Causal log-duration effects of adoption per browsing category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CategoryEffects {
    pub productive: f64,
    pub leisure: f64,
    pub mixed: f64,
    pub adcdn: f64,
}

impl Default for CategoryEffects {
    fn default() -> Self {
        Self {
            productive: 0.011,
            leisure: 1.512,
            mixed: -0.285,
            adcdn: 0.0,
        }
    }
}

impl CategoryEffects {
    pub fn zero() -> Self {
        Self {
            productive: 0.0,
            leisure: 0.0,
            mixed: 0.0,
            adcdn: 0.0,
        }
    }

    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::Productive => self.productive,
            Category::Leisure => self.leisure,
            Category::Mixed => self.mixed,
            Category::Adcdn => self.adcdn,
        }
    }

    /// Indexed as [`Category::ALL`].
    pub fn as_array(&self) -> [f64; 4] {
        Category::ALL.map(|c| self.get(c))
    }
}

/// Curvatures and base-point budget shares of the cell-level Engel panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngelEtas {
    pub leisure: f64,
    pub productive: f64,
    pub other: f64,
    /// Budget shares `[leisure, productive, other]` at the base total.
    pub base_shares: [f64; 3],
}

impl Default for EngelEtas {
    /// Curvatures `0.8 * (1.374, 0.931, 1.110)` with base shares chosen so
    /// the share-weighted curvature is 0.8, making the Engel elasticities
    /// exactly `(1.374, 0.931, 1.110)` at the base point.
    fn default() -> Self {
        let beta = [1.374, 0.931, 1.110];
        let other = 0.1;
        let leisure = (1.0 - other * beta[2] - (1.0 - other) * beta[1]) / (beta[0] - beta[1]);
        Self {
            leisure: 0.8 * beta[0],
            productive: 0.8 * beta[1],
            other: 0.8 * beta[2],
            base_shares: [leisure, 1.0 - other - leisure, other],
        }
    }
}

impl EngelEtas {
    pub fn as_array(&self) -> [f64; 3] {
        [self.leisure, self.productive, self.other]
    }

    /// Engel elasticities `eta_a / sum_b s_b eta_b` at the base point.
    pub fn true_betas(&self) -> [f64; 3] {
        let etas = self.as_array();
        let bar: f64 = etas.iter().zip(&self.base_shares).map(|(e, s)| e * s).sum();
        etas.map(|e| e / bar)
    }
}

/// Standard deviations of the generator's shocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSd {
    /// Household-quarter-category log duration noise.
    pub duration: f64,
    /// Household level of log browsing.
    pub household: f64,
    /// Scale of the post-release leisure demand shock.
    pub leisure_shock: f64,
    /// Cell-quarter log total hours noise in the Engel panel.
    pub engel_total: f64,
    /// Cell-quarter activity taste noise in the Engel panel.
    pub engel_taste: f64,
    /// Log precipitation.
    pub log_precip: f64,
}

impl Default for NoiseSd {
    fn default() -> Self {
        Self {
            duration: 0.5,
            household: 0.5,
            leisure_shock: 0.5,
            engel_total: 0.05,
            engel_taste: 0.05,
            log_precip: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemographicCells {
    pub income_bins: u8,
    pub age_bins: u8,
    pub regions: u32,
}

impl Default for DemographicCells {
    fn default() -> Self {
        Self {
            income_bins: 3,
            age_bins: 3,
            regions: 4,
        }
    }
}

impl DemographicCells {
    pub fn count(&self) -> usize {
        self.income_bins as usize * self.age_bins as usize * self.regions as usize
    }
}

/// Settings of the 30-minute interval generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntervalConfig {
    pub n_intervals: usize,
    /// Fraction of interval households that ever use the chatbot.
    pub user_share: f64,
    /// Fraction of all intervals that are chatbot windows.
    pub gpt_window_share: f64,
    /// Productive share gap of chatbot windows, percentage points.
    pub gap_productive: f64,
    /// Leisure share gap of chatbot windows, percentage points.
    pub gap_leisure: f64,
    /// Dirichlet concentration of per-interval category shares.
    pub concentration: f64,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        Self {
            n_intervals: 50_000,
            user_share: 0.3,
            gpt_window_share: 0.1,
            gap_productive: 25.2,
            gap_leisure: -13.7,
            concentration: 20.0,
        }
    }
}

/// Synthetic data generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DgpConfig {
    pub n_households: usize,
    pub n_quarters: usize,
    pub seed: u64,
    pub true_effects: CategoryEffects,
    /// Coefficient on log exposure in the latent adoption index.
    pub exposure_strength: f64,
    /// Correlation between the adoption shock and the leisure demand shock.
    pub confound_strength: f64,
    pub engel_etas: EngelEtas,
    /// Effect of log precipitation on log total browsing.
    pub rain_elasticity: f64,
    pub noise_sd: NoiseSd,
    pub demographic_cells: DemographicCells,
    /// Mean and standard deviation of log exposure before clipping at 1.
    pub exposure_log_mean: f64,
    pub exposure_log_sd: f64,
    /// Intercept of the latent adoption index.
    pub adoption_intercept: f64,
    pub intervals: IntervalConfig,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n_households: 10_000,
            n_quarters: 12,
            seed: 20_221_130,
            true_effects: CategoryEffects::default(),
            exposure_strength: 0.2,
            confound_strength: 0.5,
            engel_etas: EngelEtas::default(),
            rain_elasticity: 0.5,
            noise_sd: NoiseSd::default(),
            demographic_cells: DemographicCells::default(),
            exposure_log_mean: -2.25,
            exposure_log_sd: 1.0,
            adoption_intercept: -0.5,
            intervals: IntervalConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite, got {v}")))
    }
}

impl DgpConfig {
    /// First quarter offset; the four pre-release quarters end at 0.
    pub const FIRST_QUARTER: i32 = -3;

    pub fn quarters(&self) -> std::ops::RangeInclusive<i32> {
        Self::FIRST_QUARTER..=self.last_quarter()
    }

    pub fn last_quarter(&self) -> i32 {
        Self::FIRST_QUARTER + self.n_quarters as i32 - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_households == 0 {
            return Err(Error::Config("n_households must be positive".into()));
        }
        if self.n_quarters < 8 {
            return Err(Error::Config(format!(
                "n_quarters must be at least 8 (four pre, four post), got {}",
                self.n_quarters
            )));
        }
        for (name, v) in [
            ("true_effects.productive", self.true_effects.productive),
            ("true_effects.leisure", self.true_effects.leisure),
            ("true_effects.mixed", self.true_effects.mixed),
            ("true_effects.adcdn", self.true_effects.adcdn),
            ("exposure_strength", self.exposure_strength),
            ("rain_elasticity", self.rain_elasticity),
            ("exposure_log_mean", self.exposure_log_mean),
            ("adoption_intercept", self.adoption_intercept),
        ] {
            finite(name, v)?;
        }
        if !(-1.0..=1.0).contains(&self.confound_strength) {
            return Err(Error::Config(format!(
                "confound_strength must lie in [-1, 1], got {}",
                self.confound_strength
            )));
        }
        if !(self.exposure_log_sd > 0.0 && self.exposure_log_sd.is_finite()) {
            return Err(Error::Config(format!(
                "exposure_log_sd must be positive (zero-variance exposure is degenerate), got {}",
                self.exposure_log_sd
            )));
        }
        let n = &self.noise_sd;
        for (name, v) in [
            ("noise_sd.duration", n.duration),
            ("noise_sd.household", n.household),
            ("noise_sd.leisure_shock", n.leisure_shock),
            ("noise_sd.engel_total", n.engel_total),
            ("noise_sd.engel_taste", n.engel_taste),
            ("noise_sd.log_precip", n.log_precip),
        ] {
            positive(name, v)?;
        }
        let e = &self.engel_etas;
        let etas = e.as_array();
        for (name, v) in [("engel_etas.leisure", etas[0]), ("engel_etas.productive", etas[1]), ("engel_etas.other", etas[2])] {
            positive(name, v)?;
            let all_equal = etas.iter().all(|x| (x - etas[0]).abs() < LOG_BRANCH_TOL);
            if (v - 1.0).abs() < 1e-6 && !all_equal {
                return Err(Error::Config(format!(
                    "{name} = 1 cannot be matched to the base shares; use distinct curvatures away from 1"
                )));
            }
        }
        for (i, s) in e.base_shares.iter().enumerate() {
            positive(&format!("engel_etas.base_shares[{i}]"), *s)?;
        }
        let sum: f64 = e.base_shares.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("engel_etas.base_shares must sum to 1, got {sum}")));
        }
        let d = &self.demographic_cells;
        if !(1..=8).contains(&d.income_bins) {
            return Err(Error::Config(format!("demographic_cells.income_bins must be in 1..=8, got {}", d.income_bins)));
        }
        if !(1..=6).contains(&d.age_bins) {
            return Err(Error::Config(format!("demographic_cells.age_bins must be in 1..=6, got {}", d.age_bins)));
        }
        if d.regions == 0 {
            return Err(Error::Config("demographic_cells.regions must be positive".into()));
        }
        let iv = &self.intervals;
        if !(iv.user_share > 0.0 && iv.user_share < 1.0) {
            return Err(Error::Config(format!("intervals.user_share must lie in (0,1), got {}", iv.user_share)));
        }
        if !(iv.gpt_window_share > 0.0 && iv.gpt_window_share < iv.user_share) {
            return Err(Error::Config(format!(
                "intervals.gpt_window_share must lie in (0, user_share), got {}",
                iv.gpt_window_share
            )));
        }
        finite("intervals.gap_productive", iv.gap_productive)?;
        finite("intervals.gap_leisure", iv.gap_leisure)?;
        positive("intervals.concentration", iv.concentration)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = DgpConfig::default();
        c.validate().unwrap();
        assert_eq!(c.demographic_cells.count(), 36);
        assert_eq!(c.quarters().count(), 12);
        let b = c.engel_etas.true_betas();
        for (got, want) in b.iter().zip([1.374, 0.931, 1.110]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_configs() {
        let bad = [
            DgpConfig { n_households: 0, ..DgpConfig::default() },
            DgpConfig { n_quarters: 7, ..DgpConfig::default() },
            DgpConfig { exposure_log_sd: 0.0, ..DgpConfig::default() },
            DgpConfig { confound_strength: 1.5, ..DgpConfig::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))));
        }
    }
}
