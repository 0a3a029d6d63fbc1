//! Numerical primitives and oracles: bracketed root finding, grid search on
//! the simplex, and finite-difference log elasticities.
//!
//! These routines are deliberately independent of the closed forms in
//! [`crate::model`] so they can be used to check them.

use crate::error::{Error, Result};

/// A root bracket with function values at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends and checks for a sign change.
    pub fn new<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Self> {
        Self::from_values(lo, hi, f(lo), f(hi))
    }

    pub fn from_values(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(lo < hi) || !f_lo.is_finite() || !f_hi.is_finite() || f_lo * f_hi > 0.0 {
            return Err(Error::Bracket { lo, hi, f_lo, f_hi });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }
}

const BRENT_MAX_ITER: usize = 500;

/// Brent's method (inverse quadratic interpolation with bisection fallback).
///
/// Returns `x` with `|f(x)| <= tol` or a final bracket narrower than `tol`.
/// Every trial point lies inside the initial bracket.
pub fn brent_root<F: Fn(f64) -> f64>(f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..BRENT_MAX_ITER {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol || xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::Convergence {
        iterations: BRENT_MAX_ITER,
        last: b,
    })
}

/// Resolution of the simplex grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points_per_dim: usize,
    pub refine_rounds: usize,
    pub shrink_factor: f64,
}

impl GridSpec {
    pub fn new(points_per_dim: usize, refine_rounds: usize, shrink_factor: f64) -> Result<Self> {
        if points_per_dim < 3 {
            return Err(Error::InvalidParameter(format!(
                "points_per_dim must be >= 3, got {points_per_dim}"
            )));
        }
        if !(shrink_factor > 0.0 && shrink_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrink_factor must lie in (0,1), got {shrink_factor}"
            )));
        }
        Ok(Self {
            points_per_dim,
            refine_rounds,
            shrink_factor,
        })
    }

    /// Default resolution for a simplex of the given dimension.
    pub fn for_dims(dims: usize) -> Self {
        let points_per_dim = if dims <= 2 { 200 } else { 60 };
        Self {
            points_per_dim,
            refine_rounds: 6,
            shrink_factor: 0.2,
        }
    }
}

/// Best point found by [`grid_maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Interior clipping applied to every simplex coordinate.
pub const SIMPLEX_EPS: f64 = 1e-9;

/// Maximizes `objective` over `{x >= eps, sum(x) = total}` by exhaustive grid
/// search followed by shrinking-window refinement around the incumbent.
///
/// The search is parametrized by the first `dims - 1` coordinates; the last
/// coordinate absorbs the remainder. Ties keep the lexicographically first
/// point, so the result does not depend on evaluation order.
pub fn grid_maximize<F>(objective: F, dims: usize, total: f64, spec: &GridSpec) -> Result<GridOptimum>
where
    F: Fn(&[f64]) -> f64,
{
    if !(dims == 2 || dims == 3) {
        return Err(Error::Unsupported(format!(
            "grid search supports 2 or 3 dimensions, got {dims}"
        )));
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Domain(format!("total must be positive, got {total}")));
    }
    let free = dims - 1;
    let n = spec.points_per_dim;
    let lo_bound = SIMPLEX_EPS;
    let hi_bound = total - SIMPLEX_EPS * free as f64;

    let mut best: Option<GridOptimum> = None;
    let mut point = vec![0.0; dims];
    let mut center = vec![0.5 * total / dims as f64; free];
    let mut half_width = total;

    for round in 0..=spec.refine_rounds {
        if round > 0 {
            half_width *= spec.shrink_factor;
        }
        let windows: Vec<(f64, f64)> = (0..free)
            .map(|i| {
                if round == 0 {
                    (lo_bound, hi_bound)
                } else {
                    (
                        (center[i] - half_width).max(lo_bound),
                        (center[i] + half_width).min(hi_bound),
                    )
                }
            })
            .collect();
        let axis = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;

        let mut consider = |coords: &[f64], best: &mut Option<GridOptimum>| {
            let used: f64 = coords.iter().sum();
            let last = total - used;
            if last < SIMPLEX_EPS {
                return;
            }
            point[..free].copy_from_slice(coords);
            point[free] = last;
            let value = objective(&point);
            if !value.is_finite() {
                return;
            }
            let better = match best {
                Some(b) => value > b.value,
                None => true,
            };
            if better {
                *best = Some(GridOptimum {
                    point: point.clone(),
                    value,
                });
            }
        };

        if free == 1 {
            for k in 0..n {
                consider(&[axis(windows[0], k)], &mut best);
            }
        } else {
            for k1 in 0..n {
                let x1 = axis(windows[0], k1);
                for k2 in 0..n {
                    consider(&[x1, axis(windows[1], k2)], &mut best);
                }
            }
        }

        if let Some(b) = &best {
            center.copy_from_slice(&b.point[..free]);
        }
    }

    best.ok_or_else(|| Error::Domain("objective not finite anywhere on the grid".into()))
}

/// Central finite-difference elasticities `d ln h_a / d ln H` at `total`.
///
/// `step` is a relative (log) step: the function is evaluated at
/// `total * exp(+-step)`.
pub fn fd_elasticity<F>(h_fn: F, total: f64, step: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    if !(total > 0.0) || !(step > 0.0) {
        return Err(Error::Domain(format!(
            "total and step must be positive (total={total}, step={step})"
        )));
    }
    let up = h_fn(total * step.exp())?;
    let down = h_fn(total * (-step).exp())?;
    if up.len() != down.len() {
        return Err(Error::Domain("hours vectors differ in length".into()));
    }
    up.iter()
        .zip(&down)
        .enumerate()
        .map(|(a, (&hu, &hd))| {
            if hu > 0.0 && hd > 0.0 {
                Ok((hu.ln() - hd.ln()) / (2.0 * step))
            } else {
                Err(Error::Domain(format!(
                    "nonpositive hours for activity {a} at perturbed total"
                )))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(f: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64) -> f64 {
        brent_root(f, Bracket::new(&f, lo, hi).unwrap(), 1e-14).unwrap()
    }

    #[test]
    fn brent_linear() {
        assert!((root(|x| x - 3.0, 0.0, 10.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn brent_sqrt_two() {
        assert!((root(|x| x * x - 2.0, 0.0, 2.0) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn brent_log_equation_matches_exponentiation() {
        let f = |x: f64| (1.0 + x).ln() * 0.1621 - 1.0135;
        let expected = (1.0135f64 / 0.1621).exp() - 1.0;
        let x = brent_root(f, Bracket::new(&f, 0.0, 1e6).unwrap(), 1e-13).unwrap();
        assert!((x - expected).abs() / expected < 1e-10, "{x} vs {expected}");
    }

    #[test]
    fn brent_stays_inside_bracket_and_is_deterministic() {
        use std::cell::RefCell;
        let seen = RefCell::new(Vec::new());
        let f = |x: f64| {
            seen.borrow_mut().push(x);
            (x - 0.3).powi(3) + 0.01 * x
        };
        let br = Bracket::new(&f, -2.0, 5.0).unwrap();
        let a = brent_root(f, br, 1e-13).unwrap();
        assert!(seen.borrow().iter().all(|&x| (-2.0..=5.0).contains(&x)));
        let b = brent_root(f, br, 1e-13).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn bracket_without_sign_change_is_rejected() {
        let f = |x: f64| x * x + 1.0;
        assert!(matches!(Bracket::new(&f, -1.0, 1.0), Err(Error::Bracket { .. })));
    }

    #[test]
    fn grid_symmetric_concave_2d() {
        let f = |p: &[f64]| p.iter().map(|x| x.ln()).sum::<f64>();
        let opt = grid_maximize(f, 2, 1.0, &GridSpec::for_dims(2)).unwrap();
        assert!((opt.point[0] - 0.5).abs() < 1e-6);
        assert!((opt.point[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn grid_power_utility_ratio() {
        // eta = 2 on both, quality (2, 1): sqrt(2 h1)/0.5 + sqrt(h2)/0.5
        let f = |p: &[f64]| 2.0 * (2.0 * p[0]).sqrt() + 2.0 * p[1].sqrt();
        let opt = grid_maximize(f, 2, 1.0, &GridSpec::for_dims(2)).unwrap();
        assert!((opt.point[0] - 2.0 / 3.0).abs() < 1e-5);
        assert!((opt.point[1] - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn grid_rounds_are_monotone() {
        let f = |p: &[f64]| -(p[0] - 0.21).powi(2) - 3.0 * (p[1] - 0.47).powi(2);
        let mut last = f64::NEG_INFINITY;
        for rounds in 0..6 {
            let spec = GridSpec::new(60, rounds, 0.2).unwrap();
            let v = grid_maximize(f, 3, 1.0, &spec).unwrap().value;
            assert!(v >= last);
            assert!(v <= 0.0);
            last = v;
        }
    }

    #[test]
    fn grid_rejects_four_dims() {
        let f = |_: &[f64]| 0.0;
        assert!(grid_maximize(f, 4, 1.0, &GridSpec::for_dims(3)).is_err());
    }

    #[test]
    fn fd_of_homothetic_map_is_one() {
        let h = |t: f64| Ok(vec![0.2 * t, 0.5 * t, 0.3 * t]);
        for e in fd_elasticity(h, 1.7, 1e-5).unwrap() {
            assert!((e - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fd_power_law() {
        let h = |t: f64| Ok(vec![t.powf(1.374), t.powf(0.931)]);
        let e = fd_elasticity(h, 2.3, 1e-4).unwrap();
        assert!((e[0] - 1.374).abs() < 1e-8);
        assert!((e[1] - 0.931).abs() < 1e-8);
    }

    #[test]
    fn fd_rejects_nonpositive_hours() {
        let h = |t: f64| Ok(vec![t - 1.0]);
        assert!(fd_elasticity(h, 1.0, 1e-3).is_err());
    }
}
