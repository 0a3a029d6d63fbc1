//! Category composition of chatbot windows against matched never-user
//! intervals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::records::IntervalRecord;

/// Match cell: day of week, half-hour slot, income bin, age bin.
pub type MatchKey = (u8, u8, u8, u8);

pub fn match_key(r: &IntervalRecord) -> MatchKey {
    (r.day_of_week, r.hour_bucket, r.income_bin, r.age_bin)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowContrast {
    /// Duration-weighted category shares inside chatbot windows, indexed as
    /// [`crate::exposure::Category::ALL`].
    pub gpt_shares: [f64; 4],
    /// Matched never-user shares, reweighted to the windows' cell durations.
    pub matched_shares: [f64; 4],
    /// `gpt_shares - matched_shares` in percentage points.
    pub diff_pp: [f64; 4],
    pub cells_used: usize,
    /// Cells with chatbot windows but no never-user interval.
    pub cells_dropped: usize,
    pub gpt_windows_used: usize,
    pub matched_intervals: usize,
}

#[derive(Default)]
struct CellSums {
    treated: [f64; 4],
    treated_n: usize,
    control: [f64; 4],
    control_n: usize,
}

/// Contrasts chatbot windows with never-user intervals in the same match
/// cell. Within each cell the control composition is the duration-weighted
/// never-user share; cells are combined with the windows' total duration in
/// the cell as weight, so both sides share one cell mix.
pub fn window_contrast(intervals: &[IntervalRecord]) -> Result<WindowContrast> {
    let mut cells: BTreeMap<MatchKey, CellSums> = BTreeMap::new();
    let mut any_window = false;
    for (row, r) in intervals.iter().enumerate() {
        if r.durations.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(Error::Data(format!("interval row {row} has a negative or non-finite duration")));
        }
        let entry = cells.entry(match_key(r)).or_default();
        if r.is_gpt_window {
            any_window = true;
            for k in 0..4 {
                entry.treated[k] += r.durations[k];
            }
            entry.treated_n += 1;
        } else if !r.ever_user {
            for k in 0..4 {
                entry.control[k] += r.durations[k];
            }
            entry.control_n += 1;
        }
    }
    if !any_window {
        return Err(Error::NoTreatmentWindows);
    }

    let mut treated = [0.0; 4];
    let mut matched = [0.0; 4];
    let mut mass = 0.0;
    let (mut used, mut dropped, mut windows, mut controls) = (0, 0, 0, 0);
    for c in cells.values() {
        if c.treated_n == 0 {
            continue;
        }
        let t_total: f64 = c.treated.iter().sum();
        let c_total: f64 = c.control.iter().sum();
        if c.control_n == 0 || c_total == 0.0 {
            dropped += 1;
            continue;
        }
        if t_total == 0.0 {
            continue;
        }
        used += 1;
        windows += c.treated_n;
        controls += c.control_n;
        mass += t_total;
        for k in 0..4 {
            treated[k] += c.treated[k];
            matched[k] += t_total * c.control[k] / c_total;
        }
    }
    if used == 0 {
        return Err(Error::Data("no chatbot window has a matched never-user interval".into()));
    }
    let gpt_shares = treated.map(|v| v / mass);
    let matched_shares = matched.map(|v| v / mass);
    let mut diff_pp = [0.0; 4];
    for k in 0..4 {
        diff_pp[k] = 100.0 * (gpt_shares[k] - matched_shares[k]);
    }
    Ok(WindowContrast {
        gpt_shares,
        matched_shares,
        diff_pp,
        cells_used: used,
        cells_dropped: dropped,
        gpt_windows_used: windows,
        matched_intervals: controls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(dow: u8, gpt: bool, user: bool, d: [f64; 4]) -> IntervalRecord {
        IntervalRecord {
            household_id: 0,
            day_of_week: dow,
            hour_bucket: 10,
            income_bin: 1,
            age_bin: 1,
            is_gpt_window: gpt,
            ever_user: user,
            durations: d,
        }
    }

    #[test]
    fn identical_compositions_give_zero() {
        let d = [600.0, 300.0, 200.0, 100.0];
        let out = window_contrast(&[iv(0, true, true, d), iv(0, false, false, d)]).unwrap();
        assert_eq!(out.diff_pp, [0.0; 4]);
    }

    #[test]
    fn single_cell_and_dropped_cells() {
        let out = window_contrast(&[
            iv(0, true, true, [900.0, 100.0, 0.0, 0.0]),
            iv(0, false, false, [500.0, 500.0, 0.0, 0.0]),
            iv(0, false, true, [0.0, 1000.0, 0.0, 0.0]),
            iv(3, true, true, [0.0, 1000.0, 0.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(out.cells_used, 1);
        assert_eq!(out.cells_dropped, 1);
        assert!((out.diff_pp[0] - 40.0).abs() < 1e-12);
        assert!((out.diff_pp[1] + 40.0).abs() < 1e-12);
    }

    #[test]
    fn never_user_only_input_has_no_windows() {
        let d = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(
            window_contrast(&[iv(0, false, false, d)]).unwrap_err(),
            Error::NoTreatmentWindows
        );
    }
}
