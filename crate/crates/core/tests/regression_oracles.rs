//! Regression engine against explicit dummy-variable least squares.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use timealloc_core::econometrics::{
    ols, tsls, within_transform, within_transform_multi, Dataset, GroupIndex, ProjectionOptions, RegressionSpec,
};

struct Fixture {
    data: Dataset,
    y: Vec<f64>,
    x1: Vec<f64>,
    x2: Vec<f64>,
    d: Vec<f64>,
    z: Vec<f64>,
    w: Vec<f64>,
    g: Vec<usize>,
    h: Vec<usize>,
}

fn fixture(seed: u64, n: usize, n_g: usize, n_h: usize) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norm = || -> f64 { StandardNormal.sample(&mut rng) };
    let g: Vec<usize> = (0..n).map(|i| i % n_g).collect();
    let h: Vec<usize> = (0..n).map(|i| (i * 7 + i / 3) % n_h).collect();
    let x1: Vec<f64> = (0..n).map(|i| norm() + g[i] as f64 * 0.3).collect();
    let x2: Vec<f64> = (0..n).map(|_| norm()).collect();
    let z: Vec<f64> = (0..n).map(|_| norm()).collect();
    let u: Vec<f64> = (0..n).map(|_| norm()).collect();
    let d: Vec<f64> = (0..n).map(|i| 0.8 * z[i] + 0.5 * u[i] + 0.2 * x2[i]).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 1.5 * x1[i] - 0.7 * x2[i] + 0.9 * d[i] + g[i] as f64 + 0.5 * h[i] as f64 + u[i] * (1.0 + x2[i].abs()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let data = Dataset::new(n)
        .with_numeric("y", y.clone())
        .unwrap()
        .with_numeric("x1", x1.clone())
        .unwrap()
        .with_numeric("x2", x2.clone())
        .unwrap()
        .with_numeric("d", d.clone())
        .unwrap()
        .with_numeric("z", z.clone())
        .unwrap()
        .with_numeric("w", w.clone())
        .unwrap()
        .with_categorical("g", g.iter().map(|&v| v as i64).collect())
        .unwrap()
        .with_categorical("h", h.iter().map(|&v| v as i64).collect())
        .unwrap()
        .with_categorical("id", (0..n as i64).collect())
        .unwrap();
    Fixture { data, y, x1, x2, d, z, w, g, h }
}

/// Design with the listed columns followed by full dummies for `g`, and for
/// `h` minus its first level when given.
fn dummy_design(cols: &[&[f64]], g: &[usize], n_g: usize, h: Option<(&[usize], usize)>) -> DMatrix<f64> {
    let n = g.len();
    let extra_h = h.map_or(0, |(_, k)| k - 1);
    let k = cols.len() + n_g + extra_h;
    DMatrix::from_fn(n, k, |i, j| {
        if j < cols.len() {
            cols[j][i]
        } else if j < cols.len() + n_g {
            f64::from(g[i] == j - cols.len())
        } else {
            let (hv, _) = h.unwrap();
            f64::from(hv[i] == j - cols.len() - n_g + 1)
        }
    })
}

/// Weighted least squares (or just-identified IV) by the normal equations,
/// with the HC1 sandwich.
struct Oracle {
    beta: DVector<f64>,
    hc1: DMatrix<f64>,
}

fn wls_oracle(x: &DMatrix<f64>, zm: Option<&DMatrix<f64>>, y: &[f64], w: &[f64]) -> Oracle {
    let n = x.nrows();
    let k = x.ncols();
    let wm = DMatrix::from_diagonal(&DVector::from_column_slice(w));
    let yv = DVector::from_column_slice(y);
    // Just-identified IV: beta = (Z'WX)^{-1} Z'Wy; OLS when Z = X.
    let z = zm.unwrap_or(x);
    let a = z.transpose() * &wm * x;
    let a_inv = a.clone().try_inverse().unwrap();
    let beta = &a_inv * (z.transpose() * &wm * &yv);
    let e = &yv - x * &beta;
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let s = z.row(i).transpose() * (w[i] * e[i]);
        meat += &s * s.transpose();
    }
    let hc1 = &a_inv * meat * a_inv.transpose() * (n as f64 / (n - k) as f64);
    Oracle { beta, hc1 }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn one_way_fixed_effects_match_dummy_regression() {
    let f = fixture(7, 50, 5, 4);
    let x = dummy_design(&[&f.x1, &f.x2], &f.g, 5, None);
    let ones = vec![1.0; 50];
    for weighted in [false, true] {
        let w = if weighted { &f.w } else { &ones };
        let mut spec = RegressionSpec::new("y").regressor("x1").regressor("x2").fixed_effect(&["g"]);
        if weighted {
            spec = spec.weights("w");
        }
        let r = ols(&spec, &f.data).unwrap();
        let o = wls_oracle(&x, None, &f.y, w);
        assert_eq!(r.dof_adjustment.k, 7);
        for j in 0..2 {
            assert!(close(r.coefficients[j], o.beta[j], 1e-10), "coef {j}");
            for l in 0..2 {
                assert!(close(r.covariance[(j, l)], o.hc1[(j, l)], 1e-9), "cov {j} {l}");
            }
        }
    }
}

#[test]
fn two_way_fixed_effects_match_dummy_regression() {
    let f = fixture(8, 60, 6, 5);
    let x = dummy_design(&[&f.x1, &f.x2], &f.g, 6, Some((&f.h, 5)));
    let r = ols(
        &RegressionSpec::new("y").regressor("x1").regressor("x2").fixed_effect(&["g"]).fixed_effect(&["h"]),
        &f.data,
    )
    .unwrap();
    let o = wls_oracle(&x, None, &f.y, &[1.0; 60]);
    assert_eq!(r.dof_adjustment.k, 2 + 6 + 4);
    for j in 0..2 {
        assert!(close(r.coefficients[j], o.beta[j], 1e-9), "coef {j}");
        assert!(close(r.covariance[(j, j)], o.hc1[(j, j)], 1e-8), "var {j}");
    }
}

#[test]
fn iv_with_fixed_effects_matches_explicit_formula() {
    let f = fixture(9, 50, 5, 4);
    let x = dummy_design(&[&f.d, &f.x2], &f.g, 5, None);
    let z = dummy_design(&[&f.z, &f.x2], &f.g, 5, None);
    for weighted in [false, true] {
        let w = if weighted { f.w.clone() } else { vec![1.0; 50] };
        let mut spec = RegressionSpec::new("y").endogenous("d", "z").regressor("x2").fixed_effect(&["g"]);
        if weighted {
            spec = spec.weights("w");
        }
        let r = tsls(&spec, &f.data).unwrap();
        let o = wls_oracle(&x, Some(&z), &f.y, &w);
        for j in 0..2 {
            assert!(close(r.coefficients[j], o.beta[j], 1e-10), "coef {j}");
            assert!(close(r.covariance[(j, j)], o.hc1[(j, j)], 1e-9), "var {j}");
        }
        let fs = r.first_stage.unwrap();
        let fs_oracle = wls_oracle(&z, None, &f.d, &w);
        assert!(close(fs.coefficient, fs_oracle.beta[0], 1e-10));
        assert!(close(fs.se, fs_oracle.hc1[(0, 0)].sqrt(), 1e-9));
    }
}

#[test]
fn cluster_robust_matches_explicit_sum_over_clusters() {
    let f = fixture(10, 80, 4, 8);
    // Clusters on `h`, fixed effects on `g`: not nested, so all levels count.
    let r = ols(
        &RegressionSpec::new("y").regressor("x1").regressor("x2").fixed_effect(&["g"]).cluster(&["h"]),
        &f.data,
    )
    .unwrap();
    let x = dummy_design(&[&f.x1, &f.x2], &f.g, 4, None);
    let o = wls_oracle(&x, None, &f.y, &[1.0; 80]);
    let (n, k) = x.shape();
    let e = DVector::from_column_slice(&f.y) - &x * &o.beta;
    let bread = (x.transpose() * &x).try_inverse().unwrap();
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for c in 0..8 {
        let mut s = DVector::<f64>::zeros(k);
        for i in (0..n).filter(|&i| f.h[i] == c) {
            s += x.row(i).transpose() * e[i];
        }
        meat += &s * s.transpose();
    }
    let factor = (8.0 / 7.0) * ((n - 1) as f64 / (n - k) as f64);
    let v = &bread * meat * &bread * factor;
    assert_eq!(r.dof_adjustment.factors, vec![factor]);
    for j in 0..2 {
        assert!(close(r.covariance[(j, j)], v[(j, j)], 1e-9));
    }
}

#[test]
fn singleton_clusters_reduce_to_hc1() {
    let f = fixture(11, 50, 5, 4);
    let base = RegressionSpec::new("y").regressor("x1").regressor("x2");
    let hc = ols(&base.clone(), &f.data).unwrap();
    let cr = ols(&base.cluster(&["id"]), &f.data).unwrap();
    let (n, k) = (50.0, hc.dof_adjustment.k as f64);
    // CR1 with G = N: G/(G-1) (N-1)/(N-K) = N/(N-K), the HC1 factor.
    assert!(close(cr.dof_adjustment.factors[0], n / (n - k), 1e-15));
    for j in 0..2 {
        for l in 0..2 {
            assert!(close(cr.covariance[(j, l)], hc.covariance[(j, l)], 1e-12));
        }
    }
}

#[test]
fn two_way_clustering_combines_components_and_is_psd() {
    for seed in 0..20 {
        let f = fixture(100 + seed, 120, 6, 5);
        let r = ols(
            &RegressionSpec::new("y").regressor("x1").regressor("x2").cluster(&["g"]).cluster(&["h"]),
            &f.data,
        )
        .unwrap();
        let tw = r.two_way.as_ref().unwrap();
        let raw = &tw.v_a + &tw.v_b - &tw.v_ab;
        let eig = SymmetricEigen::new(r.covariance.clone()).eigenvalues;
        assert!(eig.iter().all(|&l| l >= -1e-14 * raw.amax()), "seed {seed}");
        if tw.clipped_eigenvalues == 0 {
            assert!((&r.covariance - &raw).amax() <= 1e-14 * raw.amax());
        }
        let one_a = ols(
            &RegressionSpec::new("y").regressor("x1").regressor("x2").cluster(&["g"]),
            &f.data,
        )
        .unwrap();
        assert!((&one_a.covariance - &tw.v_a).amax() <= 1e-14 * tw.v_a.amax());
    }
}

#[test]
fn instrument_equal_to_endogenous_reproduces_ols() {
    for seed in 0..10 {
        let f = fixture(200 + seed, 70, 7, 3);
        let spec = RegressionSpec::new("y")
            .endogenous("d", "d")
            .regressor("x2")
            .fixed_effect(&["g"])
            .cluster(&["h"])
            .weights("w");
        let a = ols(&spec, &f.data).unwrap();
        let b = tsls(&spec, &f.data).unwrap();
        for j in 0..2 {
            assert!((a.coefficients[j] - b.coefficients[j]).abs() <= 1e-10);
            assert!((a.se[j] - b.se[j]).abs() <= 1e-10);
        }
    }
}

#[test]
fn weak_instrument_warning_tracks_first_stage_f() {
    let f = fixture(12, 200, 4, 4);
    let mut flagged = 0;
    for seed in 0..40 {
        let mut data = f.data.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        data.add_numeric("junk", noise).unwrap();
        let r = tsls(&RegressionSpec::new("y").endogenous("d", "junk").regressor("x2"), &data).unwrap();
        let weak = r.first_stage.unwrap().effective_f < 1.0;
        assert_eq!(weak, r.warnings.iter().any(|w| w.contains("weak instrument")));
        flagged += usize::from(weak);
    }
    assert!(flagged > 0);
}

fn idempotence_gap(cols: &[Vec<f64>], again: &[Vec<f64>]) -> f64 {
    cols.iter()
        .zip(again)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn within_transform_is_a_projection(seed in any::<u64>(), n_g in 1usize..12, weighted in any::<bool>()) {
        let f = fixture(seed, 90, n_g, 3);
        let groups = GroupIndex::from_keys(&f.g);
        let w = weighted.then_some(f.w.as_slice());
        let once = within_transform(&[&f.y, &f.x1], &groups, w);
        let refs: Vec<&[f64]> = once.iter().map(Vec::as_slice).collect();
        let twice = within_transform(&refs, &groups, w);
        prop_assert!(idempotence_gap(&once, &twice) <= 1e-12);
    }

    #[test]
    fn multiway_transform_is_a_projection(seed in any::<u64>(), n_g in 2usize..8, n_h in 2usize..6) {
        let f = fixture(seed, 90, n_g, n_h);
        let sets = [GroupIndex::from_keys(&f.g), GroupIndex::from_keys(&f.h)];
        let once = within_transform_multi(&[&f.y, &f.x1], &sets, Some(&f.w), ProjectionOptions::default()).unwrap();
        let refs: Vec<&[f64]> = once.iter().map(Vec::as_slice).collect();
        let twice = within_transform_multi(&refs, &sets, Some(&f.w), ProjectionOptions::default()).unwrap();
        prop_assert!(idempotence_gap(&once, &twice) <= 1e-12);
    }
}
