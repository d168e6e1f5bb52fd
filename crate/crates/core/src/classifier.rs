//! Ridge regression classifier with generalized cross-validation.
//!
//! Features are standardized with the training mean and (population)
//! standard deviation, targets are one-vs-rest `+1/-1`, and both are
//! centred so the intercept is the target mean and is not penalized. For
//! every candidate `alpha` the fit minimizes `||Y - XW||^2 + alpha ||W||^2`.
//!
//! A single symmetric eigendecomposition serves the whole alpha grid: of the
//! Gram matrix `X X^T` when there are fewer samples than features, otherwise
//! of `X^T X`. With eigenvalues `s_i` the hat-matrix trace is
//! `1 + sum s_i / (s_i + alpha)`, the one coming from the intercept, and the
//! selected alpha minimizes
//!
//! ```text
//! GCV(alpha) = n * ||Y - Y_hat||^2 / (n - tr H)^2
//! ```
//!
//! Ties go to the earlier grid entry.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ClassId;

/// `10^linspace(-3, 3, 10)`.
pub fn default_alphas() -> Vec<f64> {
    log_space(-3.0, 3.0, 10)
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..n)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Fitted one-vs-rest linear classifier.
///
/// `coefficients` is row-major `C x P` and acts on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub class_labels: Vec<ClassId>,
    pub coefficients: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub alpha: f64,
}

/// Multi-output ridge regression fitted on standardized features.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    /// `P x T`, standardized feature space.
    pub coefficients: DMatrix<f64>,
    pub intercepts: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub alpha: f64,
    /// GCV score of every candidate alpha, in grid order.
    pub gcv_scores: Vec<f64>,
}

impl RidgeFit {
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        let p = self.feature_means.len();
        if features.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: features.len(),
            });
        }
        let t = self.intercepts.len();
        let mut out = vec![0.0; t];
        for (k, o) in out.iter_mut().enumerate() {
            let col = self.coefficients.column(k);
            let mut s = 0.0;
            for j in 0..p {
                s += col[j] * ((features[j] - self.feature_means[j]) / self.feature_scales[j]);
            }
            *o = s + self.intercepts[k];
        }
        Ok(out)
    }
}

/// Fits a ridge classifier over the classes present in `labels`.
pub fn fit_ridge(rows: &[&[f64]], labels: &[ClassId], alphas: &[f64]) -> Result<RidgeModel> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    fit_ridge_with_classes(rows, labels, &classes, alphas)
}

/// Fits a ridge classifier with an explicit class list; every listed class
/// must occur in `labels`.
pub fn fit_ridge_with_classes(
    rows: &[&[f64]],
    labels: &[ClassId],
    classes: &[ClassId],
    alphas: &[f64],
) -> Result<RidgeModel> {
    if rows.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if classes.len() < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    let mut column_of = std::collections::HashMap::new();
    for (c, &label) in classes.iter().enumerate() {
        if column_of.insert(label, c).is_some() {
            return Err(Error::invalid(format!("class {label} listed twice")));
        }
    }
    let mut seen = vec![false; classes.len()];
    let mut targets = vec![vec![-1.0; classes.len()]; labels.len()];
    for (i, label) in labels.iter().enumerate() {
        let &c = column_of
            .get(label)
            .ok_or_else(|| Error::invalid(format!("label {label} is not a listed class")))?;
        targets[i][c] = 1.0;
        seen[c] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::EmptyClass(classes[c].index()));
    }
    let target_rows: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
    let fit = fit_ridge_regression(rows, &target_rows, alphas)?;

    let p = fit.feature_means.len();
    let mut coefficients = Vec::with_capacity(classes.len() * p);
    for c in 0..classes.len() {
        coefficients.extend(fit.coefficients.column(c).iter());
    }
    Ok(RidgeModel {
        class_labels: classes.to_vec(),
        coefficients,
        intercepts: fit.intercepts,
        feature_means: fit.feature_means,
        feature_scales: fit.feature_scales,
        alpha: fit.alpha,
    })
}

/// Ridge regression with GCV-selected alpha. `rows` is `N x P`, `targets`
/// is `N x T`.
pub fn fit_ridge_regression(
    rows: &[&[f64]],
    targets: &[&[f64]],
    alphas: &[f64],
) -> Result<RidgeFit> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::invalid("no training rows"));
    }
    if targets.len() != n {
        return Err(Error::invalid("target count differs from row count"));
    }
    if alphas.is_empty() {
        return Err(Error::invalid("empty regularization grid"));
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::invalid(format!("alpha {a} is not a positive number")));
    }
    let p = rows[0].len();
    let t = targets[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: r.len(),
            });
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i, column: j });
        }
    }
    if targets.iter().any(|y| y.len() != t) {
        return Err(Error::invalid("ragged target rows"));
    }

    let (feature_means, feature_scales) = column_stats(rows);
    let x = DMatrix::from_fn(n, p, |i, j| {
        (rows[i][j] - feature_means[j]) / feature_scales[j]
    });
    let mut intercepts = vec![0.0; t];
    for y in targets {
        for (m, v) in intercepts.iter_mut().zip(y.iter()) {
            *m += v;
        }
    }
    intercepts.iter_mut().for_each(|m| *m /= n as f64);
    let y = DMatrix::from_fn(n, t, |i, k| targets[i][k] - intercepts[k]);

    let path = if n <= p {
        RidgePath::dual(&x, &y)
    } else {
        RidgePath::primal(&x, &y)
    };
    let gcv_scores: Vec<f64> = alphas.iter().map(|&a| path.gcv(&x, &y, a)).collect();
    let mut best = 0;
    for (i, &g) in gcv_scores.iter().enumerate() {
        if g < gcv_scores[best] {
            best = i;
        }
    }
    let alpha = alphas[best];
    Ok(RidgeFit {
        coefficients: path.coefficients(&x, alpha),
        intercepts,
        feature_means,
        feature_scales,
        alpha,
        gcv_scores,
    })
}

/// Column means and population standard deviations. Columns whose spread is
/// at rounding level get scale 1.
fn column_stats(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mut means = vec![0.0; p];
    for r in rows {
        for (m, v) in means.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for r in rows {
        for j in 0..p {
            let d = r[j] - means[j];
            var[j] += d * d;
        }
    }
    let scales = var
        .iter()
        .zip(&means)
        .map(|(v, m)| {
            let sd = (v / n).sqrt();
            if sd <= 10.0 * f64::EPSILON * m.abs() || sd == 0.0 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    (means, scales)
}

enum RidgePath {
    /// `X X^T = U diag(s) U^T`; `proj = U^T Y`.
    Dual {
        s: DVector<f64>,
        u: DMatrix<f64>,
        proj: DMatrix<f64>,
    },
    /// `X^T X = V diag(s) V^T`; `proj = V^T X^T Y`.
    Primal {
        s: DVector<f64>,
        v: DMatrix<f64>,
        proj: DMatrix<f64>,
    },
}

impl RidgePath {
    fn dual(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        let gram = x * x.transpose();
        let eig = SymmetricEigen::new(gram);
        let u = eig.eigenvectors;
        let proj = u.transpose() * y;
        Self::Dual {
            s: eig.eigenvalues.map(|s| s.max(0.0)),
            u,
            proj,
        }
    }

    fn primal(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        let gram = x.transpose() * x;
        let eig = SymmetricEigen::new(gram);
        let v = eig.eigenvectors;
        let proj = v.transpose() * (x.transpose() * y);
        Self::Primal {
            s: eig.eigenvalues.map(|s| s.max(0.0)),
            v,
            proj,
        }
    }

    fn eigenvalues(&self) -> &DVector<f64> {
        match self {
            Self::Dual { s, .. } | Self::Primal { s, .. } => s,
        }
    }

    fn hat_trace(&self, alpha: f64) -> f64 {
        self.eigenvalues().iter().map(|s| s / (s + alpha)).sum()
    }

    fn residual_ss(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> f64 {
        match self {
            // U is square and orthogonal, so Y - Y_hat = U diag(alpha / (s + alpha)) U^T Y.
            Self::Dual { s, proj, .. } => {
                let mut rss = 0.0;
                for (i, si) in s.iter().enumerate() {
                    let shrink = alpha / (si + alpha);
                    for v in proj.row(i).iter() {
                        let r = shrink * v;
                        rss += r * r;
                    }
                }
                rss
            }
            Self::Primal { .. } => {
                let w = self.coefficients(x, alpha);
                (y - x * w).norm_squared()
            }
        }
    }

    fn gcv(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> f64 {
        let n = x.nrows() as f64;
        // the unpenalized intercept adds one to the trace of the full hat matrix
        let denom = n - self.hat_trace(alpha) - 1.0;
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        n * self.residual_ss(x, y, alpha) / (denom * denom)
    }

    fn coefficients(&self, x: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
        match self {
            Self::Dual { s, u, proj } => {
                let mut scaled = proj.clone();
                for (i, si) in s.iter().enumerate() {
                    scaled.row_mut(i).scale_mut(1.0 / (si + alpha));
                }
                x.transpose() * (u * scaled)
            }
            Self::Primal { s, v, proj } => {
                let mut scaled = proj.clone();
                for (i, si) in s.iter().enumerate() {
                    scaled.row_mut(i).scale_mut(1.0 / (si + alpha));
                }
                v * scaled
            }
        }
    }
}

impl RidgeModel {
    pub fn class_count(&self) -> usize {
        self.class_labels.len()
    }

    pub fn feature_len(&self) -> usize {
        self.feature_means.len()
    }

    pub fn predict_scores(&self, features: &[f64]) -> Result<Vec<f64>> {
        let p = self.feature_len();
        if features.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: features.len(),
            });
        }
        let z: Vec<f64> = features
            .iter()
            .zip(self.feature_means.iter().zip(&self.feature_scales))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        Ok(self
            .coefficients
            .chunks_exact(p.max(1))
            .take(self.class_count())
            .zip(&self.intercepts)
            .map(|(w, b)| w.iter().zip(&z).map(|(w, z)| w * z).sum::<f64>() + b)
            .collect())
    }

    /// Highest-scoring class; ties go to the earliest entry of `class_labels`.
    pub fn predict_class(&self, features: &[f64]) -> Result<ClassId> {
        let scores = self.predict_scores(features)?;
        Ok(self.class_labels[argmax_first(&scores)])
    }
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    /// Standardize + centre independently of the implementation, then solve
    /// `(X^T X + alpha I) W = X^T Y` by LU.
    fn normal_equations(rows: &[Vec<f64>], y: &[Vec<f64>], alpha: f64) -> DMatrix<f64> {
        let n = rows.len();
        let p = rows[0].len();
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        let mut xs = x.clone();
        for j in 0..p {
            let col = x.column(j);
            let mean = col.mean();
            let sd = col.variance().sqrt();
            let sd = if sd == 0.0 { 1.0 } else { sd };
            for i in 0..n {
                xs[(i, j)] = (x[(i, j)] - mean) / sd;
            }
        }
        let t = y[0].len();
        let mut ym = DMatrix::from_fn(n, t, |i, k| y[i][k]);
        for k in 0..t {
            let mean = ym.column(k).mean();
            ym.column_mut(k).add_scalar_mut(-mean);
        }
        let a = xs.transpose() * &xs + DMatrix::identity(p, p) * alpha;
        a.lu().solve(&(xs.transpose() * ym)).unwrap()
    }

    fn refs(rows: &[Vec<f64>]) -> Vec<&[f64]> {
        rows.iter().map(Vec::as_slice).collect()
    }

    fn one_hot(labels: &[ClassId], classes: usize) -> Vec<Vec<f64>> {
        labels
            .iter()
            .map(|l| (0..classes).map(|c| if c == l.0 { 1.0 } else { -1.0 }).collect())
            .collect()
    }

    fn blobs(seed: u64, per_class: usize) -> (Vec<Vec<f64>>, Vec<ClassId>) {
        let mut rng = crate::rng::substream(seed, 0);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * per_class {
            let c = i % 2;
            let centre = if c == 0 { -3.0 } else { 3.0 };
            rows.push(vec![
                centre + noise.sample(&mut rng),
                centre + noise.sample(&mut rng),
            ]);
            labels.push(ClassId(c));
        }
        (rows, labels)
    }

    #[test]
    fn default_grid() {
        let a = default_alphas();
        assert_eq!(a.len(), 10);
        assert!((a[0] - 1e-3).abs() < 1e-15);
        assert!((a[9] - 1e3).abs() < 1e-9);
        assert!((a[1] - 10f64.powf(-3.0 + 6.0 / 9.0)).abs() < 1e-15);
        for w in a.windows(2) {
            assert!((w[1] / w[0] - 10f64.powf(2.0 / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn small_problem_matches_normal_equations() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![1.0, 1.0],
            vec![1.1, 1.0],
        ];
        let labels = [ClassId(0), ClassId(0), ClassId(1), ClassId(1)];
        let model = fit_ridge(&refs(&rows), &labels, &[1e-3]).unwrap();
        let expected = normal_equations(&rows, &one_hot(&labels, 2), 1e-3);
        for c in 0..2 {
            for j in 0..2 {
                let got = model.coefficients[c * 2 + j];
                let want = expected[(j, c)];
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{got} vs {want}");
            }
        }
        assert_eq!(model.alpha, 1e-3);
        assert_eq!(model.intercepts, vec![0.0, 0.0]);
    }

    #[test]
    fn wide_problem_uses_dual_and_matches() {
        let mut rng = crate::rng::substream(17, 0);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..40).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let labels: Vec<ClassId> = (0..12).map(|i| ClassId(i % 3)).collect();
        for alpha in [1e-3, 0.7, 250.0] {
            let model = fit_ridge(&refs(&rows), &labels, &[alpha]).unwrap();
            let expected = normal_equations(&rows, &one_hot(&labels, 3), alpha);
            let scale = expected.amax();
            for c in 0..3 {
                for j in 0..40 {
                    let got = model.coefficients[c * 40 + j];
                    assert!((got - expected[(j, c)]).abs() <= 1e-8 * scale);
                }
            }
        }
    }

    #[test]
    fn blobs_are_separated_at_every_alpha() {
        let (rows, labels) = blobs(5, 20);
        for alpha in default_alphas() {
            let model = fit_ridge(&refs(&rows), &labels, &[alpha]).unwrap();
            for (r, l) in rows.iter().zip(&labels) {
                assert_eq!(model.predict_class(r).unwrap(), *l);
            }
        }
    }

    #[test]
    fn held_out_blobs() {
        let (rows, labels) = blobs(5, 20);
        let (test_rows, test_labels) = blobs(6, 100);
        let model = fit_ridge(&refs(&rows), &labels, &default_alphas()).unwrap();
        let correct = test_rows
            .iter()
            .zip(&test_labels)
            .filter(|(r, l)| model.predict_class(r).unwrap() == **l)
            .count();
        assert!(correct as f64 / test_rows.len() as f64 >= 0.95);
    }

    #[test]
    fn mean_input_scores_intercepts() {
        let (rows, labels) = blobs(9, 10);
        let model = fit_ridge(&refs(&rows), &labels, &default_alphas()).unwrap();
        let scores = model.predict_scores(&model.feature_means).unwrap();
        assert_eq!(scores, model.intercepts);
        assert_eq!(model.predict_scores(&[1.0, 2.0]).unwrap().len(), 2);
        assert!(matches!(
            model.predict_scores(&[1.0]),
            Err(Error::LengthMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn tie_goes_to_first_class() {
        let model = RidgeModel {
            class_labels: vec![ClassId(4), ClassId(2)],
            coefficients: vec![1.0, 1.0],
            intercepts: vec![0.5, 0.5],
            feature_means: vec![0.0],
            feature_scales: vec![1.0],
            alpha: 1.0,
        };
        assert_eq!(model.predict_class(&[0.25]).unwrap(), ClassId(4));
        let repeated: Vec<ClassId> = (0..5).map(|_| model.predict_class(&[3.0]).unwrap()).collect();
        assert!(repeated.iter().all(|c| *c == repeated[0]));
    }

    #[test]
    fn rejects_missing_class_and_bad_values() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = [ClassId(0), ClassId(0), ClassId(1)];
        let err = fit_ridge_with_classes(
            &refs(&rows),
            &labels,
            &[ClassId(0), ClassId(1), ClassId(2)],
            &[1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyClass(2)));

        let bad = vec![vec![0.0, 1.0], vec![1.0, f64::NAN], vec![2.0, 0.0]];
        assert!(matches!(
            fit_ridge(&refs(&bad), &labels, &[1.0]),
            Err(Error::NonFiniteFeature { row: 1, column: 1 })
        ));
        assert!(fit_ridge(&refs(&rows), &labels, &[]).is_err());
        assert!(fit_ridge(&refs(&rows), &[ClassId(0); 3], &[1.0]).is_err());
    }

    #[test]
    fn constant_columns_get_unit_scale() {
        let rows = vec![
            vec![0.1, 5.0, 1.0],
            vec![0.1, 6.0, 1.0],
            vec![0.1, 7.0, 1.0],
        ];
        let labels = [ClassId(0), ClassId(1), ClassId(1)];
        let model = fit_ridge(&refs(&rows), &labels, &[1.0]).unwrap();
        assert_eq!(model.feature_scales[0], 1.0);
        assert_eq!(model.feature_scales[2], 1.0);
        assert!(model.feature_scales[1] > 0.0 && model.feature_scales[1] != 1.0);
    }

    #[test]
    fn standardized_input_is_fixed_point() {
        let mut rng = crate::rng::substream(21, 0);
        let raw: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let (means, scales) = column_stats(&refs(&raw));
        let standardized: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| (0..6).map(|j| (r[j] - means[j]) / scales[j]).collect())
            .collect();
        let labels: Vec<ClassId> = (0..30).map(|i| ClassId(i % 2)).collect();
        let model = fit_ridge(&refs(&standardized), &labels, &default_alphas()).unwrap();
        for (m, s) in model.feature_means.iter().zip(&model.feature_scales) {
            assert!(m.abs() < 1e-12);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decisions_invariant_to_positive_scaling() {
        let mut rng = crate::rng::substream(22, 0);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..8).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let labels: Vec<ClassId> = (0..40).map(|i| ClassId(i % 3)).collect();
        let tests: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..8).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let base = fit_ridge(&refs(&rows), &labels, &default_alphas()).unwrap();
        for factor in [1e-3, 7.5, 1e4] {
            let scaled: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect();
            let model = fit_ridge(&refs(&scaled), &labels, &default_alphas()).unwrap();
            assert_eq!(model.alpha, base.alpha);
            for t in &tests {
                let ts: Vec<f64> = t.iter().map(|v| v * factor).collect();
                assert_eq!(
                    model.predict_class(&ts).unwrap(),
                    base.predict_class(t).unwrap()
                );
            }
        }
    }

    #[test]
    fn gcv_matches_brute_force_formula() {
        let mut rng = crate::rng::substream(23, 0);
        for (n, p) in [(10, 25), (30, 5)] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let y: Vec<Vec<f64>> = (0..n).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
            let alphas = default_alphas();
            let fit = fit_ridge_regression(&refs(&rows), &refs(&y), &alphas).unwrap();
            // explicit hat matrix of the fit with intercept:
            // H = 11^T / n + X (X^T X + aI)^-1 X^T on the centred design
            let xs = DMatrix::from_fn(n, p, |i, j| {
                (rows[i][j] - fit.feature_means[j]) / fit.feature_scales[j]
            });
            let yv = DVector::from_fn(n, |i, _| y[i][0]);
            for (a, g) in alphas.iter().zip(&fit.gcv_scores) {
                let inv = (xs.transpose() * &xs + DMatrix::identity(p, p) * *a)
                    .try_inverse()
                    .unwrap();
                let h = DMatrix::from_element(n, n, 1.0 / n as f64) + &xs * inv * xs.transpose();
                let resid = &yv - &h * &yv;
                let want = n as f64 * resid.norm_squared() / (n as f64 - h.trace()).powi(2);
                // the explicit inverse is ill-conditioned for p > n at tiny alpha
                assert!((g - want).abs() <= 1e-6 * want, "{g} vs {want}");
            }
        }
    }
}
