use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::config::DgpConfig;
use crate::error::Result;
use crate::model::{solve_allocation, ActivityParams, Preferences, DEFAULT_SOLVE_TOL};
use crate::records::EngelCell;

/// RNG stream of the cell-level Engel panel.
pub const STREAM_ENGEL: u64 = 2;

/// Hours per model unit of the time budget.
const HOURS_PER_UNIT: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngelTruth {
    /// Engel elasticities at the base point, `[leisure, productive, other]`.
    pub beta: [f64; 3],
    pub etas: [f64; 3],
    pub base_shares: [f64; 3],
    pub rain_elasticity: f64,
}

/// Cell-by-quarter panel of activity hours.
///
/// Log total hours load on a cell effect, a quarter effect, centered log
/// precipitation times `rain_elasticity`, and noise. Hours per activity come
/// from the household optimum at `engel_etas`, with qualities set so the
/// base total reproduces `base_shares`, perturbed by multiplicative taste
/// noise.
pub fn generate_engel_panel(config: &DgpConfig) -> Result<(Vec<EngelCell>, EngelTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_ENGEL);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let etas = config.engel_etas.as_array();
    let shares = config.engel_etas.base_shares;
    let noise = &config.noise_sd;
    let n_cells = config.demographic_cells.count();
    let quarters: Vec<i32> = config.quarters().collect();

    // At omega = 1 and unit budget, demand equals q^(eta - 1).
    let all_equal = etas.iter().all(|e| (e - etas[0]).abs() < 1e-12);
    let base_q: Vec<f64> = etas
        .iter()
        .zip(&shares)
        .map(|(e, s)| if all_equal && (e - 1.0).abs() < 1e-6 { 1.0 } else { s.powf(1.0 / (e - 1.0)) })
        .collect();

    let cell_fx: Vec<f64> = (0..n_cells).map(|_| 0.1 * std.sample(&mut rng)).collect();
    let time_fx: Vec<f64> = quarters.iter().map(|_| 0.05 * std.sample(&mut rng)).collect();
    let mut out = Vec::with_capacity(n_cells * quarters.len());
    for (g, cfx) in cell_fx.iter().enumerate() {
        for (t, &q) in quarters.iter().enumerate() {
            let log_precip = noise.log_precip * std.sample(&mut rng);
            let ln_total = cfx + time_fx[t] + config.rain_elasticity * log_precip + noise.engel_total * std.sample(&mut rng);
            let params = (0..3)
                .map(|a| ActivityParams::with_quality(base_q[a] * (noise.engel_taste * std.sample(&mut rng)).exp(), etas[a]))
                .collect::<Result<Vec<_>>>()?;
            let prefs = Preferences::three(params[0], params[1], params[2]);
            let total = ln_total.exp();
            let alloc = solve_allocation(&prefs, total, DEFAULT_SOLVE_TOL * total.max(1.0))?;
            let hours = [
                alloc.hours[0] * HOURS_PER_UNIT,
                alloc.hours[1] * HOURS_PER_UNIT,
                alloc.hours[2] * HOURS_PER_UNIT,
            ];
            out.push(EngelCell {
                cell: g as u32,
                quarter: q,
                hours,
                total: hours.iter().sum(),
                log_precip,
            });
        }
    }
    Ok((
        out,
        EngelTruth {
            beta: config.engel_etas.true_betas(),
            etas,
            base_shares: shares,
            rain_elasticity: config.rain_elasticity,
        },
    ))
}
