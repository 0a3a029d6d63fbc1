use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use super::config::DgpConfig;
use crate::error::{Error, Result};
use crate::records::IntervalRecord;

/// RNG stream of the interval generator.
pub const STREAM_INTERVALS: u64 = 3;

/// Never-user category mix, indexed as [`crate::exposure::Category::ALL`].
pub const NEVER_USER_MIX: [f64; 4] = [0.549, 0.213, 0.200, 0.038];

/// Shift of the productive share toward daytime (leisure moves the other way).
const DAYTIME_TILT: f64 = 0.04;

/// Smallest mean share passed to the Dirichlet draw.
const MIN_SHARE: f64 = 1e-3;

/// Slots 16..=35 cover 8:00 to 18:00.
fn is_daytime(hour_bucket: u8) -> bool {
    (16..=35).contains(&hour_bucket)
}

/// Mean category mix of never-user browsing in a half-hour slot.
pub fn baseline_mix(hour_bucket: u8) -> [f64; 4] {
    let tilt = if is_daytime(hour_bucket) { DAYTIME_TILT } else { -DAYTIME_TILT };
    let mut m = NEVER_USER_MIX;
    m[0] += tilt;
    m[1] -= tilt;
    m
}

/// Mean mix inside chatbot windows: the baseline shifted by the configured
/// productive and leisure gaps, with the offsetting change spread over the
/// mixed and ad/CDN shares in proportion to their baseline size. Shares are
/// floored at a small positive value and renormalized.
pub fn window_mix(hour_bucket: u8, gap_productive_pp: f64, gap_leisure_pp: f64) -> [f64; 4] {
    let mut m = baseline_mix(hour_bucket);
    let gp = gap_productive_pp / 100.0;
    let gl = gap_leisure_pp / 100.0;
    let rest = m[2] + m[3];
    let offset = gp + gl;
    m[0] += gp;
    m[1] += gl;
    let (m2, m3) = (m[2], m[3]);
    m[2] -= offset * m2 / rest;
    m[3] -= offset * m3 / rest;
    let m = m.map(|v| v.max(MIN_SHARE));
    let s: f64 = m.iter().sum();
    m.map(|v| v / s)
}

fn dirichlet(mean: [f64; 4], concentration: f64) -> Result<Dirichlet<f64, 4>> {
    Dirichlet::new(mean.map(|m| m * concentration))
        .map_err(|e| Error::Config(format!("interval share distribution: {e}")))
}

/// Half-hour browsing intervals for chatbot users and never-users.
///
/// Chatbot windows are concentrated in daytime slots, where the baseline
/// mix already leans productive, so unmatched comparisons overstate the gap.
pub fn generate_intervals(config: &DgpConfig) -> Result<Vec<IntervalRecord>> {
    config.validate()?;
    let ic = &config.intervals;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_INTERVALS);
    let cells = config.demographic_cells;

    let n_households = config.n_households as u64;
    let pool: Vec<(u8, u8, bool)> = (0..n_households)
        .map(|_| {
            (
                rng.random_range(1..=cells.income_bins),
                rng.random_range(1..=cells.age_bins),
                rng.random_bool(ic.user_share),
            )
        })
        .collect();
    let users: Vec<u64> = (0..n_households).filter(|&h| pool[h as usize].2).collect();
    let never: Vec<u64> = (0..n_households).filter(|&h| !pool[h as usize].2).collect();
    if users.is_empty() || never.is_empty() {
        return Err(Error::Config(
            "interval household pool needs both chatbot users and never-users".into(),
        ));
    }

    let baseline: Vec<Dirichlet<f64, 4>> = (0..48u8)
        .map(|h| dirichlet(baseline_mix(h), ic.concentration))
        .collect::<Result<_>>()?;
    let windows: Vec<Dirichlet<f64, 4>> = (0..48u8)
        .map(|h| dirichlet(window_mix(h, ic.gap_productive, ic.gap_leisure), ic.concentration))
        .collect::<Result<_>>()?;

    let p_window_given_user = ic.gpt_window_share / ic.user_share;
    let mut out = Vec::with_capacity(ic.n_intervals);
    for _ in 0..ic.n_intervals {
        let from_user = rng.random_bool(ic.user_share);
        let household_id = if from_user {
            users[rng.random_range(0..users.len())]
        } else {
            never[rng.random_range(0..never.len())]
        };
        let is_gpt_window = from_user && rng.random_bool(p_window_given_user);
        let day_of_week = rng.random_range(0..7u8);
        let hour_bucket = if is_gpt_window && rng.random_bool(0.7) {
            rng.random_range(16..=35u8)
        } else {
            rng.random_range(0..48u8)
        };
        let mix = if is_gpt_window {
            windows[hour_bucket as usize].sample(&mut rng)
        } else {
            baseline[hour_bucket as usize].sample(&mut rng)
        };
        let total: f64 = rng.random_range(60.0..1800.0);
        let (income_bin, age_bin, _) = pool[household_id as usize];
        out.push(IntervalRecord {
            household_id,
            day_of_week,
            hour_bucket,
            income_bin,
            age_bin,
            is_gpt_window,
            ever_user: from_user,
            durations: mix.map(|s| s * total),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixes_are_distributions() {
        for h in 0..48 {
            for m in [baseline_mix(h), window_mix(h, 25.2, -13.7), window_mix(h, 0.0, 0.0)] {
                assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(m.iter().all(|v| *v > 0.0));
            }
        }
    }

    #[test]
    fn window_mix_applies_gaps_exactly_when_interior() {
        let b = baseline_mix(20);
        let w = window_mix(20, 25.2, -13.7);
        assert!((100.0 * (w[0] - b[0]) - 25.2).abs() < 1e-10);
        assert!((100.0 * (w[1] - b[1]) + 13.7).abs() < 1e-10);
        assert_eq!(window_mix(5, 0.0, 0.0), baseline_mix(5));
    }
}
