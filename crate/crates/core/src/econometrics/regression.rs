//! Fixed-effects OLS and just-identified 2SLS with robust and clustered
//! covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::data::{Dataset, GroupIndex};
use super::within::{within_transform_multi, ProjectionOptions};
use crate::error::{Error, Result};

/// Relative size of a QR pivot below which a column counts as collinear.
pub const RANK_TOL: f64 = 1e-10;

/// First-stage effective F below which a weak-instrument warning is attached.
pub const WEAK_F_WARNING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegressionSpec {
    pub outcome: String,
    /// Exogenous regressors.
    pub regressors: Vec<String>,
    pub endogenous: Option<String>,
    pub instrument: Option<String>,
    /// Each entry is one composite categorical key absorbed as fixed effects.
    /// No entry means a plain intercept.
    pub fixed_effects: Vec<Vec<String>>,
    /// Zero, one or two composite cluster keys.
    pub clusters: Vec<Vec<String>>,
    pub weights: Option<String>,
}

impl RegressionSpec {
    pub fn new(outcome: &str) -> Self {
        Self {
            outcome: outcome.to_string(),
            ..Self::default()
        }
    }

    pub fn regressor(mut self, name: &str) -> Self {
        self.regressors.push(name.to_string());
        self
    }

    pub fn endogenous(mut self, endogenous: &str, instrument: &str) -> Self {
        self.endogenous = Some(endogenous.to_string());
        self.instrument = Some(instrument.to_string());
        self
    }

    pub fn fixed_effect(mut self, key: &[&str]) -> Self {
        self.fixed_effects.push(key.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn cluster(mut self, key: &[&str]) -> Self {
        self.clusters.push(key.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn weights(mut self, name: &str) -> Self {
        self.weights = Some(name.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.endogenous.is_some() != self.instrument.is_some() {
            return Err(Error::InvalidParameter(
                "endogenous regressor and instrument must be given together".into(),
            ));
        }
        if self.clusters.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "at most two cluster keys are supported, got {}",
                self.clusters.len()
            )));
        }
        if self.regressors.is_empty() && self.endogenous.is_none() {
            return Err(Error::InvalidParameter("no regressors".into()));
        }
        Ok(())
    }

    /// Coefficient names in result order: endogenous first, then regressors.
    pub fn coefficient_names(&self) -> Vec<String> {
        self.endogenous.iter().chain(&self.regressors).cloned().collect()
    }
}

/// Small-sample correction applied to the covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofAdjustment {
    /// `HC1`, `CR1` or `CR1 two-way`.
    pub kind: String,
    pub n: usize,
    /// Slopes plus absorbed fixed-effect levels (sets nested in a cluster
    /// key are not counted).
    pub k: usize,
    /// Number of clusters per key, then the intersection for two-way.
    pub clusters: Vec<usize>,
    /// Factor per component: `N/(N-K)` or `G/(G-1) (N-1)/(N-K)`.
    pub factors: Vec<f64>,
}

/// Components of a two-way clustered covariance, before repair.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayComponents {
    pub v_a: DMatrix<f64>,
    pub v_b: DMatrix<f64>,
    pub v_ab: DMatrix<f64>,
    /// Eigenvalues clipped to zero during repair.
    pub clipped_eigenvalues: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstStage {
    pub coefficient: f64,
    pub se: f64,
    /// `(coefficient / se)^2` under the same covariance as the second stage.
    pub effective_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub se: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub n_obs: usize,
    pub residual_ss: f64,
    pub first_stage: Option<FirstStage>,
    pub dof_adjustment: DofAdjustment,
    pub two_way: Option<TwoWayComponents>,
    pub warnings: Vec<String>,
}

impl RegressionResult {
    fn position(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Data(format!("no coefficient named '{name}'")))
    }

    pub fn coef(&self, name: &str) -> Result<f64> {
        Ok(self.coefficients[self.position(name)?])
    }

    pub fn se_of(&self, name: &str) -> Result<f64> {
        Ok(self.se[self.position(name)?])
    }

    pub fn first_stage_f(&self) -> Option<f64> {
        self.first_stage.as_ref().map(|f| f.effective_f)
    }
}

/// Demeaned and weight-scaled design, shared by both estimators.
struct Prepared {
    n: usize,
    /// sqrt(w) * demeaned outcome.
    y: DVector<f64>,
    /// sqrt(w) * demeaned [endogenous, regressors].
    x: DMatrix<f64>,
    /// sqrt(w) * demeaned [instrument, regressors] when instrumented.
    z: Option<DMatrix<f64>>,
    /// Norms of the weighted columns before demeaning, for the rank check.
    x_scale: Vec<f64>,
    z_scale: Vec<f64>,
    clusters: Vec<GroupIndex>,
    absorbed: usize,
}

fn column_matrix(cols: &[Vec<f64>], sqrt_w: &[f64]) -> DMatrix<f64> {
    let n = sqrt_w.len();
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i] * sqrt_w[i])
}

fn prepare(spec: &RegressionSpec, data: &Dataset) -> Result<Prepared> {
    spec.validate()?;
    let n = data.n_rows();
    let weights = match &spec.weights {
        Some(name) => {
            let w = data.numeric(name)?;
            if let Some(i) = w.iter().position(|&v| v <= 0.0) {
                return Err(Error::Data(format!("weight column '{name}' row {i} is not positive")));
            }
            Some(w)
        }
        None => None,
    };

    let fe_sets: Vec<GroupIndex> = if spec.fixed_effects.is_empty() {
        vec![GroupIndex::single(n)]
    } else {
        spec.fixed_effects
            .iter()
            .map(|k| data.group_index(k))
            .collect::<Result<_>>()?
    };
    let clusters: Vec<GroupIndex> = spec
        .clusters
        .iter()
        .map(|k| data.group_index(k))
        .collect::<Result<_>>()?;

    let mut raw: Vec<&[f64]> = vec![data.numeric(&spec.outcome)?];
    if let Some(e) = &spec.endogenous {
        raw.push(data.numeric(e)?);
    }
    for r in &spec.regressors {
        raw.push(data.numeric(r)?);
    }
    if let Some(z) = &spec.instrument {
        raw.push(data.numeric(z)?);
    }
    let demeaned = within_transform_multi(&raw, &fe_sets, weights, ProjectionOptions::default())?;

    let sqrt_w: Vec<f64> = match weights {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; n],
    };
    let k_x = spec.coefficient_names().len();
    let raw_norm = |c: &[f64]| c.iter().zip(&sqrt_w).map(|(v, s)| (v * s).powi(2)).sum::<f64>().sqrt();
    let x_scale: Vec<f64> = raw[1..=k_x].iter().map(|c| raw_norm(c)).collect();
    let z_scale: Vec<f64> = if spec.instrument.is_some() {
        std::iter::once(raw_norm(raw[k_x + 1])).chain(x_scale[1..].iter().copied()).collect()
    } else {
        Vec::new()
    };
    let y = DVector::from_iterator(n, demeaned[0].iter().zip(&sqrt_w).map(|(v, s)| v * s));
    let x = column_matrix(&demeaned[1..=k_x], &sqrt_w);
    let z = spec.instrument.as_ref().map(|_| {
        let mut cols = vec![demeaned[k_x + 1].clone()];
        cols.extend(demeaned[2..=k_x].iter().cloned());
        column_matrix(&cols, &sqrt_w)
    });

    // Absorbed levels: each non-nested fixed-effect set counts its groups,
    // less one per extra set for the shared intercept.
    let counted: Vec<&GroupIndex> = fe_sets
        .iter()
        .filter(|fe| !clusters.iter().any(|c| fe.n_groups > 1 && fe.nested_in(c)))
        .collect();
    let absorbed = if counted.is_empty() {
        1
    } else {
        counted.iter().map(|fe| fe.n_groups).sum::<usize>() - (counted.len() - 1)
    };

    Ok(Prepared {
        n,
        y,
        x,
        z,
        x_scale,
        z_scale,
        clusters,
        absorbed,
    })
}

/// Thin QR factor with a rank check naming collinear columns.
struct Factor {
    qr: nalgebra::linalg::QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    r_inv: DMatrix<f64>,
}

/// `scale` holds reference column norms; a pivot that is tiny relative to
/// them marks the column as collinear with earlier ones or the fixed effects.
fn factor(m: &DMatrix<f64>, names: &[String], scale: &[f64]) -> Result<Factor> {
    let (n, k) = m.shape();
    if n <= k {
        return Err(Error::Data(format!("{n} observations for {k} regressors")));
    }
    let norms: Vec<f64> = m.column_iter().zip(scale).map(|(c, s)| c.norm().max(*s)).collect();
    let qr = m.clone().qr();
    let r = qr.r();
    let collinear: Vec<String> = (0..k)
        .filter(|&j| norms[j] == 0.0 || r[(j, j)].abs() <= RANK_TOL * norms[j])
        .map(|j| names[j].clone())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { columns: collinear });
    }
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient { columns: names.to_vec() })?;
    Ok(Factor { qr, r_inv })
}

impl Factor {
    /// Least-squares coefficients of `rhs` on the factored matrix.
    fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.r_inv.nrows();
        let mut qt = rhs.clone();
        self.qr.q_tr_mul(&mut qt);
        &self.r_inv * qt.rows(0, k)
    }

    /// `(X'X)^{-1}`.
    fn bread(&self) -> DMatrix<f64> {
        &self.r_inv * self.r_inv.transpose()
    }
}

fn cluster_meat(scores: &DMatrix<f64>, groups: &GroupIndex) -> DMatrix<f64> {
    let k = scores.ncols();
    let mut sums = DMatrix::<f64>::zeros(groups.n_groups, k);
    for (i, &g) in groups.ids.iter().enumerate() {
        for j in 0..k {
            sums[(g, j)] += scores[(i, j)];
        }
    }
    sums.transpose() * sums
}

fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> DMatrix<f64> {
    let v = bread * meat * bread;
    (&v + v.transpose()) * 0.5
}

fn clip_psd(v: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let eig = SymmetricEigen::new(v.clone());
    let clipped = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    if clipped == 0 {
        return (v.clone(), 0);
    }
    let vals = eig.eigenvalues.map(|l| l.max(0.0));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    ((&out + out.transpose()) * 0.5, clipped)
}

/// Covariance of coefficients given the (projected) design and residuals,
/// both already scaled by sqrt(w).
fn covariance(
    design: &DMatrix<f64>,
    resid: &DVector<f64>,
    bread: &DMatrix<f64>,
    prep: &Prepared,
) -> (DMatrix<f64>, DofAdjustment, Option<TwoWayComponents>) {
    let n = prep.n;
    let k = design.ncols() + prep.absorbed;
    let mut scores = design.clone();
    for (i, mut row) in scores.row_iter_mut().enumerate() {
        row *= resid[i];
    }
    let nk = (n as f64 - 1.0) / (n as f64 - k as f64);
    let cr1 = |g: usize| (g as f64 / (g as f64 - 1.0)) * nk;
    match prep.clusters.as_slice() {
        [] => {
            let factor = n as f64 / (n as f64 - k as f64);
            let v = sandwich(bread, &(scores.transpose() * &scores)) * factor;
            let dof = DofAdjustment {
                kind: "HC1".into(),
                n,
                k,
                clusters: vec![],
                factors: vec![factor],
            };
            (v, dof, None)
        }
        [c] => {
            let factor = cr1(c.n_groups);
            let v = sandwich(bread, &cluster_meat(&scores, c)) * factor;
            let dof = DofAdjustment {
                kind: "CR1".into(),
                n,
                k,
                clusters: vec![c.n_groups],
                factors: vec![factor],
            };
            (v, dof, None)
        }
        [a, b, ..] => {
            let ab = a.intersect(b);
            let fa = cr1(a.n_groups);
            let fb = cr1(b.n_groups);
            let fab = cr1(ab.n_groups);
            let v_a = sandwich(bread, &cluster_meat(&scores, a)) * fa;
            let v_b = sandwich(bread, &cluster_meat(&scores, b)) * fb;
            let v_ab = sandwich(bread, &cluster_meat(&scores, &ab)) * fab;
            let raw = &v_a + &v_b - &v_ab;
            let (v, clipped) = clip_psd(&raw);
            let dof = DofAdjustment {
                kind: "CR1 two-way".into(),
                n,
                k,
                clusters: vec![a.n_groups, b.n_groups, ab.n_groups],
                factors: vec![fa, fb, fab],
            };
            let comps = TwoWayComponents {
                v_a,
                v_b,
                v_ab,
                clipped_eigenvalues: clipped,
            };
            (v, dof, Some(comps))
        }
    }
}

fn finish(
    names: Vec<String>,
    beta: DVector<f64>,
    covariance: DMatrix<f64>,
    resid: &DVector<f64>,
    n: usize,
    dof: DofAdjustment,
    two_way: Option<TwoWayComponents>,
) -> RegressionResult {
    let se: Vec<f64> = covariance.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let t_stats = coefficients.iter().zip(&se).map(|(b, s)| b / s).collect();
    RegressionResult {
        names,
        coefficients,
        covariance,
        se,
        t_stats,
        n_obs: n,
        residual_ss: resid.norm_squared(),
        first_stage: None,
        dof_adjustment: dof,
        two_way,
        warnings: Vec::new(),
    }
}

/// Weighted least squares after absorbing fixed effects. An endogenous
/// column, if named, is treated as an ordinary regressor.
pub fn ols(spec: &RegressionSpec, data: &Dataset) -> Result<RegressionResult> {
    let prep = prepare(spec, data)?;
    let names = spec.coefficient_names();
    let f = factor(&prep.x, &names, &prep.x_scale)?;
    let y = DMatrix::from_column_slice(prep.n, 1, prep.y.as_slice());
    let beta: DVector<f64> = f.solve(&y).column(0).into_owned();
    let resid = &prep.y - &prep.x * &beta;
    let (cov, dof, two_way) = covariance(&prep.x, &resid, &f.bread(), &prep);
    Ok(finish(names, beta, cov, &resid, prep.n, dof, two_way))
}

/// Just-identified two-stage least squares after absorbing fixed effects.
pub fn tsls(spec: &RegressionSpec, data: &Dataset) -> Result<RegressionResult> {
    let (endog, instr) = match (&spec.endogenous, &spec.instrument) {
        (Some(e), Some(z)) => (e.clone(), z.clone()),
        _ => {
            return Err(Error::InvalidParameter(
                "two-stage least squares needs one endogenous regressor and one instrument".into(),
            ))
        }
    };
    let prep = prepare(spec, data)?;
    let names = spec.coefficient_names();
    let z = prep.z.as_ref().expect("instrument present");
    let mut z_names = vec![instr.clone()];
    z_names.extend(spec.regressors.iter().cloned());
    let fz = factor(z, &z_names, &prep.z_scale)?;

    // Fitted design: instrument space projection of [endogenous, regressors].
    let pi = fz.solve(&prep.x);
    let x_hat = z * &pi;
    let fx = factor(&x_hat, &names, &prep.x_scale)?;
    let y = DMatrix::from_column_slice(prep.n, 1, prep.y.as_slice());
    let beta: DVector<f64> = fx.solve(&y).column(0).into_owned();
    let resid = &prep.y - &prep.x * &beta;
    let (cov, dof, two_way) = covariance(&x_hat, &resid, &fx.bread(), &prep);

    // First stage: endogenous on instrument and regressors, same covariance.
    let d = prep.x.column(0).into_owned();
    let fs_resid = &d - z * pi.column(0);
    let (fs_cov, _, _) = covariance(z, &fs_resid, &fz.bread(), &prep);
    let coefficient = pi[(0, 0)];
    let se = fs_cov[(0, 0)].max(0.0).sqrt();
    let effective_f = (coefficient / se).powi(2);

    let mut result = finish(names, beta, cov, &resid, prep.n, dof, two_way);
    if !(effective_f >= WEAK_F_WARNING) {
        result.warnings.push(format!(
            "weak instrument: first-stage effective F = {effective_f:.3} for '{endog}' on '{instr}'"
        ));
    }
    result.first_stage = Some(FirstStage {
        coefficient,
        se,
        effective_f,
    });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.1).collect();
        let z: Vec<f64> = (0..20).map(|i| (i as f64 * 1.3).cos()).collect();
        let e: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.01).collect();
        let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| 2.0 * a + b).collect();
        Dataset::new(20)
            .with_numeric("x", x)
            .unwrap()
            .with_numeric("z", z)
            .unwrap()
            .with_numeric("y", y)
            .unwrap()
            .with_numeric("w", vec![3.0; 20])
            .unwrap()
            .with_categorical("g", (0..20).map(|i| i % 4).collect())
            .unwrap()
            .with_categorical("id", (0..20).collect())
            .unwrap()
    }

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = x.iter().map(|v| 2.0 * v).collect();
        let ds = Dataset::new(10).with_numeric("x", x).unwrap().with_numeric("y", y).unwrap();
        let r = ols(&RegressionSpec::new("y").regressor("x"), &ds).unwrap();
        assert!((r.coefficients[0] - 2.0).abs() < 1e-12);
        assert!(r.residual_ss < 1e-20);
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let ds = toy();
        let a = ols(&RegressionSpec::new("y").regressor("x").fixed_effect(&["g"]), &ds).unwrap();
        let b = ols(
            &RegressionSpec::new("y").regressor("x").fixed_effect(&["g"]).weights("w"),
            &ds,
        )
        .unwrap();
        assert!((a.coefficients[0] - b.coefficients[0]).abs() < 1e-12);
        assert!((a.se[0] - b.se[0]).abs() < 1e-12);
    }

    #[test]
    fn perfect_first_stage_equals_ols() {
        let ds = toy();
        let base = RegressionSpec::new("y").fixed_effect(&["g"]).cluster(&["g"]);
        let o = ols(&base.clone().regressor("z").endogenous("x", "x"), &ds).unwrap();
        let t = tsls(&base.regressor("z").endogenous("x", "x"), &ds).unwrap();
        for (a, b) in o.coefficients.iter().zip(&t.coefficients) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn singleton_clusters_equal_hc1() {
        let ds = toy();
        let hc = ols(&RegressionSpec::new("y").regressor("x").fixed_effect(&["g"]), &ds).unwrap();
        let cr = ols(
            &RegressionSpec::new("y").regressor("x").fixed_effect(&["g"]).cluster(&["id"]),
            &ds,
        )
        .unwrap();
        assert_eq!(hc.dof_adjustment.kind, "HC1");
        assert_eq!(cr.dof_adjustment.kind, "CR1");
        assert!((hc.covariance[(0, 0)] - cr.covariance[(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let mut ds = toy();
        let x2: Vec<f64> = ds.numeric("x").unwrap().iter().map(|v| 3.0 * v).collect();
        ds.add_numeric("x2", x2).unwrap();
        let err = ols(&RegressionSpec::new("y").regressor("x").regressor("x2"), &ds).unwrap_err();
        assert_eq!(err, Error::RankDeficient { columns: vec!["x2".into()] });
    }

    #[test]
    fn spec_validation() {
        let mut s = RegressionSpec::new("y").regressor("x");
        s.instrument = Some("z".into());
        assert!(s.validate().is_err());
        let s = RegressionSpec::new("y").regressor("x").cluster(&["a"]).cluster(&["b"]).cluster(&["c"]);
        assert!(s.validate().is_err());
        assert!(tsls(&RegressionSpec::new("y").regressor("x"), &toy()).is_err());
    }
}
