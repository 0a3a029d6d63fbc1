//! Calibration grid against the published values and its structural properties.

use proptest::prelude::*;
use timealloc_core::calibration::{
    compute_az, grid, invert_psi, invert_psi0, CalibrationInputs, DEFAULT_ETA_BARS, DEFAULT_PSIS, PUBLISHED_GRID,
    PUBLISHED_TOL_PP,
};
use timealloc_core::Error;

#[test]
fn published_grid_is_reproduced() {
    let start = std::time::Instant::now();
    let entries = grid(&CalibrationInputs::published(), &DEFAULT_ETA_BARS, &DEFAULT_PSIS);
    assert_eq!(entries.len(), 16);
    for (k, e) in entries.iter().enumerate() {
        let expected = PUBLISHED_GRID[k / 4][k % 4];
        let got = e.outcome.as_ref().unwrap().scaled_gain_pct;
        assert!(
            (got - expected).abs() <= PUBLISHED_TOL_PP,
            "eta_bar {} psi {}: {got:.4} vs {expected}",
            e.eta_bar,
            e.psi
        );
        assert!(e.bound_violation.is_none());
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn quoted_cells() {
    let inputs = CalibrationInputs::published();
    let cell = |eb, psi| invert_psi(&inputs, eb, psi).unwrap().scaled_gain_pct;
    assert!((cell(0.90, 0.25) - 85.16).abs() <= 0.05);
    assert!((cell(1.00, 1.0) - 24.22).abs() <= 0.05);
    assert!((cell(0.73, 0.5) - 174.12).abs() <= 0.05);
    assert!((invert_psi0(1.01353) - 175.52).abs() <= 0.05);
}

#[test]
fn strict_ratio_moves_cells_by_less_than_a_hundredth() {
    let rounded = grid(&CalibrationInputs::published(), &DEFAULT_ETA_BARS, &DEFAULT_PSIS);
    let strict = grid(
        &CalibrationInputs::published().with_exact_ratio(),
        &DEFAULT_ETA_BARS,
        &DEFAULT_PSIS,
    );
    for (a, b) in rounded.iter().zip(&strict) {
        let d = (a.outcome.as_ref().unwrap().scaled_gain_pct - b.outcome.as_ref().unwrap().scaled_gain_pct).abs();
        assert!(d <= 0.01, "{d}");
    }
}

#[test]
fn eta_bar_above_upper_bound_is_reported() {
    let entries = grid(&CalibrationInputs::published(), &[2.0], &DEFAULT_PSIS);
    for e in &entries {
        assert!(e.bound_violation.as_deref().unwrap().contains("upper bound"));
        assert!(matches!(e.outcome, Err(Error::NoSolution(_))));
    }
}

#[test]
fn zero_effects_give_zero_gain() {
    let inputs = CalibrationInputs::new(0.931, 1.374, 0.0, 0.0, 0.6776).unwrap();
    for e in grid(&inputs, &DEFAULT_ETA_BARS, &DEFAULT_PSIS) {
        assert_eq!(e.outcome.unwrap().scaled_gain_pct, 0.0);
    }
}

fn lhs_slope(eta_z: f64, eta_l: f64, r: f64, psi: f64, delta: f64) -> f64 {
    (1.0 - eta_z) / (1.0 + delta) - r * (1.0 - eta_l) * psi / (1.0 + psi * delta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gain_is_nonincreasing_in_psi(eta_bar in 0.73f64..1.07, bgpt_l in 0.1f64..3.0) {
        let inputs = CalibrationInputs { bgpt_l, ..CalibrationInputs::published() };
        prop_assume!(inputs.eta_l(eta_bar) > 1.0 && inputs.eta_z(eta_bar) < 1.0 && compute_az(&inputs) > 0.0);
        let mut last = f64::INFINITY;
        for k in 0..=20 {
            let g = invert_psi(&inputs, eta_bar, k as f64 / 20.0).unwrap().scaled_gain_pct;
            prop_assert!(g <= last * (1.0 + 1e-12));
            last = g;
        }
    }

    #[test]
    fn psi_zero_cells_do_not_depend_on_eta_bar(a in 0.73f64..1.07, b in 0.73f64..1.07) {
        let inputs = CalibrationInputs::published();
        let x = invert_psi(&inputs, a, 0.0).unwrap().scaled_gain_pct;
        let y = invert_psi(&inputs, b, 0.0).unwrap().scaled_gain_pct;
        prop_assert!((x - y).abs() <= 1e-12 * x.abs());
    }

    #[test]
    fn inversion_equation_is_increasing_where_solved(
        eta_bar in 0.73f64..1.07, psi in 0.0f64..=1.0, log_delta in -10.0f64..30.0,
    ) {
        let inputs = CalibrationInputs::published();
        let (ez, el) = (inputs.eta_z(eta_bar), inputs.eta_l(eta_bar));
        prop_assume!(ez < 1.0 && el > 1.0);
        prop_assert!(lhs_slope(ez, el, inputs.ratio_r, psi, log_delta.exp()) > 0.0);
    }

    #[test]
    fn solved_delta_satisfies_the_equation(eta_bar in 0.73f64..1.07, psi in 0.0f64..=1.0) {
        let inputs = CalibrationInputs::published();
        let cell = invert_psi(&inputs, eta_bar, psi).unwrap();
        let x = cell.delta_z.ln_1p();
        let (ez, el) = (inputs.eta_z(eta_bar), inputs.eta_l(eta_bar));
        let lhs = (1.0 - ez) * x - inputs.ratio_r * (1.0 - el) * (psi * cell.delta_z).ln_1p();
        prop_assert!((lhs - compute_az(&inputs)).abs() <= 1e-9, "{lhs}");
    }
}
