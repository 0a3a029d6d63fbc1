use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::config::DgpConfig;
use crate::econometrics::raking_weights;
use crate::error::Result;
use crate::exposure::Category;
use crate::records::{HouseholdInfo, PanelRecord};

/// RNG stream of the household panel.
pub const STREAM_PANEL: u64 = 1;

/// Browsing seconds per quarter at a household effect of zero.
const BASE_SECONDS: f64 = 30.0 * 3600.0;

/// Category composition of baseline browsing, indexed as [`Category::ALL`].
const BASE_MIX: [f64; 4] = [0.50, 0.22, 0.20, 0.08];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdTruth {
    pub info: HouseholdInfo,
    /// First quarter with the effects switched on.
    pub adoption_quarter: Option<i32>,
    /// Adoption shock component shared with the leisure demand shock.
    pub confound: f64,
    /// Latent adoption index.
    pub latent: f64,
}

/// Realized and counterfactual log durations of one household-quarter-category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeTruth {
    pub household_id: u64,
    pub quarter: i32,
    pub category: Category,
    /// Log duration before noise, with adoption effects.
    pub log_realized: f64,
    /// Log duration before noise had the household not adopted.
    pub log_counterfactual: f64,
    /// Noise added to both to form observed seconds.
    pub noise: f64,
}

impl OutcomeTruth {
    pub fn realized_seconds(&self) -> f64 {
        (self.log_realized + self.noise).exp()
    }

    pub fn counterfactual_seconds(&self) -> f64 {
        (self.log_counterfactual + self.noise).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongDifferenceTruth {
    pub households: Vec<HouseholdTruth>,
    pub outcomes: Vec<OutcomeTruth>,
}

impl LongDifferenceTruth {
    pub fn household_info(&self) -> Vec<HouseholdInfo> {
        self.households.iter().map(|h| h.info.clone()).collect()
    }

    pub fn exposure_map(&self) -> BTreeMap<u64, f64> {
        self.households.iter().map(|h| (h.info.household_id, h.info.exposure)).collect()
    }

    /// Counterfactual panel: the observed panel had no household adopted.
    pub fn counterfactual_records(&self, realized: &[PanelRecord]) -> Vec<PanelRecord> {
        realized
            .iter()
            .zip(&self.outcomes)
            .map(|(r, o)| PanelRecord {
                duration_seconds: o.counterfactual_seconds(),
                ..r.clone()
            })
            .collect()
    }
}

/// Household panel with exposure-driven adoption and a leisure demand shock
/// correlated with the adoption shock.
///
/// Quarters run from -3 to `n_quarters - 4`. Adopters switch on in a
/// quarter drawn from 1..=4 and stay treated. The leisure shock applies to
/// every household from quarter 1 on.
pub fn generate_long_difference(config: &DgpConfig) -> Result<(Vec<PanelRecord>, LongDifferenceTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_PANEL);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let cells = config.demographic_cells;
    let quarters: Vec<i32> = config.quarters().collect();
    let last = config.last_quarter();
    let rho = config.confound_strength;
    let noise = &config.noise_sd;
    let effects = config.true_effects.as_array();

    // Cell-level adoption effects and cell-quarter-category time effects.
    let n_cells = cells.count();
    let cell_adopt: Vec<f64> = (0..n_cells).map(|_| 0.3 * std.sample(&mut rng)).collect();
    let time_effects: Vec<f64> = (0..n_cells * quarters.len() * 4)
        .map(|_| 0.05 * std.sample(&mut rng))
        .collect();
    let cell_index = |i: u8, a: u8, r: u32| -> usize {
        ((i as usize - 1) * cells.age_bins as usize + (a as usize - 1)) * cells.regions as usize + (r as usize - 1)
    };

    let mut households = Vec::with_capacity(config.n_households);
    let mut outcomes = Vec::with_capacity(config.n_households * quarters.len() * 4);
    for id in 0..config.n_households as u64 {
        let income_bin = rng.random_range(1..=cells.income_bins);
        let age_bin = rng.random_range(1..=cells.age_bins);
        let region_id = rng.random_range(1..=cells.regions);
        let g = cell_index(income_bin, age_bin, region_id);
        let ln_e = (config.exposure_log_mean + config.exposure_log_sd * std.sample(&mut rng)).min(0.0);
        let u: f64 = std.sample(&mut rng);
        let v: f64 = std.sample(&mut rng);
        let latent = config.adoption_intercept
            + config.exposure_strength * (ln_e - config.exposure_log_mean)
            + cell_adopt[g]
            + rho * u
            + (1.0 - rho * rho).sqrt() * v;
        let adopted = latent > 0.0;
        let adoption_quarter = adopted.then(|| rng.random_range(1..=4.min(last)));
        let labeled_coverage = rng.random_range(0.5..0.95);
        let category_exposure = 0.5 * (ln_e - config.exposure_log_mean) + std.sample(&mut rng);
        let level = noise.household * std.sample(&mut rng);
        let base: Vec<f64> = BASE_MIX
            .iter()
            .map(|m| (BASE_SECONDS * m).ln() + level + 0.3 * std.sample(&mut rng))
            .collect();
        let shock = noise.leisure_shock * u;

        for (qi, &q) in quarters.iter().enumerate() {
            for (k, c) in Category::ALL.iter().enumerate() {
                let mut log_cf = base[k] + time_effects[(g * quarters.len() + qi) * 4 + k];
                if *c == Category::Leisure && q >= 1 {
                    log_cf += shock;
                }
                let treated = adoption_quarter.is_some_and(|a| q >= a);
                let log_realized = if treated { log_cf + effects[k] } else { log_cf };
                outcomes.push(OutcomeTruth {
                    household_id: id,
                    quarter: q,
                    category: *c,
                    log_realized,
                    log_counterfactual: log_cf,
                    noise: noise.duration * std.sample(&mut rng),
                });
            }
        }
        households.push(HouseholdTruth {
            info: HouseholdInfo {
                household_id: id,
                income_bin,
                age_bin,
                region_id,
                exposure: ln_e.exp(),
                labeled_coverage,
                category_exposure,
                chatgpt_ever_used: adopted,
            },
            adoption_quarter,
            confound: u,
            latent,
        });
    }

    // Post-stratify the income-by-age mix to equal cell shares.
    let mut counts: BTreeMap<(u8, u8), u64> = BTreeMap::new();
    for h in &households {
        *counts.entry((h.info.income_bin, h.info.age_bin)).or_default() += 1;
    }
    let target_share = 1.0 / (cells.income_bins as f64 * cells.age_bins as f64);
    let target: BTreeMap<(u8, u8), f64> = counts.keys().map(|k| (*k, target_share)).collect();
    let target = if counts.len() == cells.income_bins as usize * cells.age_bins as usize {
        target
    } else {
        // Small samples may leave bins empty; spread the target over occupied bins.
        counts.keys().map(|k| (*k, 1.0 / counts.len() as f64)).collect()
    };
    let weights = raking_weights(&counts, &target)?;

    let records = outcomes
        .iter()
        .map(|o| {
            let h = &households[o.household_id as usize].info;
            PanelRecord {
                household_id: o.household_id,
                quarter: o.quarter,
                income_bin: h.income_bin,
                age_bin: h.age_bin,
                region_id: h.region_id,
                category: o.category,
                duration_seconds: o.realized_seconds(),
                weight: weights[&(h.income_bin, h.age_bin)],
            }
        })
        .collect();
    Ok((records, LongDifferenceTruth { households, outcomes }))
}
