//! Fixed-effect absorption by (weighted) demeaning.

use super::data::GroupIndex;
use crate::error::{Error, Result};

/// Weighted group means of one column.
pub fn group_means(column: &[f64], groups: &GroupIndex, weights: Option<&[f64]>) -> Vec<f64> {
    let mut sum = vec![0.0; groups.n_groups];
    let mut mass = vec![0.0; groups.n_groups];
    for (i, (&g, &x)) in groups.ids.iter().zip(column).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        sum[g] += w * x;
        mass[g] += w;
    }
    sum.iter().zip(&mass).map(|(s, m)| s / m).collect()
}

fn demean_in_place(column: &mut [f64], groups: &GroupIndex, weights: Option<&[f64]>) -> f64 {
    let means = group_means(column, groups, weights);
    let mut max_shift = 0.0f64;
    for (x, &g) in column.iter_mut().zip(&groups.ids) {
        *x -= means[g];
        max_shift = max_shift.max(means[g].abs());
    }
    max_shift
}

/// Subtracts group means within each fixed-effect cell.
pub fn within_transform(columns: &[&[f64]], groups: &GroupIndex, weights: Option<&[f64]>) -> Vec<Vec<f64>> {
    columns
        .iter()
        .map(|c| {
            let mut out = c.to_vec();
            demean_in_place(&mut out, groups, weights);
            out
        })
        .collect()
}

/// Stopping rule for alternating projections over several fixed-effect sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Stop once a full sweep shifts no entry by more than `tol * (1 + max |x|)`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_sweeps: 100_000,
        }
    }
}

/// Partials out several fixed-effect sets by alternating projections.
///
/// With one set this is a single exact pass.
pub fn within_transform_multi(
    columns: &[&[f64]],
    fe_sets: &[GroupIndex],
    weights: Option<&[f64]>,
    opts: ProjectionOptions,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(columns.len());
    for c in columns {
        let mut col = c.to_vec();
        match fe_sets {
            [] => {}
            [only] => {
                demean_in_place(&mut col, only, weights);
            }
            _ => {
                let scale = 1.0 + col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let mut converged = false;
                for _ in 0..opts.max_sweeps {
                    let mut shift = 0.0f64;
                    for fe in fe_sets {
                        shift = shift.max(demean_in_place(&mut col, fe, weights));
                    }
                    if shift <= opts.tol * scale {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::Convergence {
                        iterations: opts.max_sweeps,
                        last: 0.0,
                    });
                }
            }
        }
        out.push(col);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_group_removes_overall_mean() {
        let x = [1.0, 2.0, 6.0];
        let out = within_transform(&[&x], &GroupIndex::single(3), None);
        assert_eq!(out[0], vec![-2.0, -1.0, 3.0]);
    }

    #[test]
    fn weighted_means() {
        let g = GroupIndex::from_keys(&[0, 0, 1]);
        let m = group_means(&[1.0, 3.0, 5.0], &g, Some(&[3.0, 1.0, 2.0]));
        assert_eq!(m, vec![1.5, 5.0]);
    }

    #[test]
    fn two_way_projection_is_idempotent() {
        let a = GroupIndex::from_keys(&[0, 0, 1, 1, 2, 2, 0]);
        let b = GroupIndex::from_keys(&[0, 1, 0, 1, 0, 1, 1]);
        let x = [1.0, 4.0, 2.0, 8.0, 3.0, -1.0, 0.5];
        let sets = [a.clone(), b.clone()];
        let once = within_transform_multi(&[&x], &sets, None, ProjectionOptions::default()).unwrap();
        let twice = within_transform_multi(&[&once[0]], &sets, None, ProjectionOptions::default()).unwrap();
        for (p, q) in once[0].iter().zip(&twice[0]) {
            assert!((p - q).abs() < 1e-12);
        }
        for fe in [&a, &b] {
            for m in group_means(&once[0], fe, None) {
                assert!(m.abs() < 1e-12);
            }
        }
    }
}
