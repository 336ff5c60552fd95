//! Least-squares fitting helpers.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("input lengths differ")]
    LengthMismatch,
    #[error("non-finite input value")]
    NonFinite,
    #[error("design matrix is rank deficient")]
    RankDeficient,
}

/// Straight-line fit `y = intercept + slope * x` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub points: usize,
    pub x_mean: f64,
    /// Standard error of the fitted value at `x_mean`.
    pub mean_err: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Abscissa where the fitted line crosses zero.
    pub fn root(&self) -> f64 {
        -self.intercept / self.slope
    }

    /// One-sigma uncertainty of [`root`](Self::root).
    pub fn root_err(&self) -> f64 {
        // x0 = xm - ym/m, and ym, m are uncorrelated
        let m = self.slope;
        let ym = self.eval(self.x_mean);
        ((self.mean_err / m).powi(2) + (ym / (m * m) * self.slope_err).powi(2)).sqrt()
    }
}

fn check(xs: &[f64], ys: &[f64], needed: usize) -> Result<(), FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch);
    }
    if xs.len() < needed {
        return Err(FitError::TooFewPoints { needed, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

/// Fits a line through `(xs, ys)`; needs at least three points.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit, FitError> {
    check(xs, ys, 3)?;
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::RankDeficient);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = ssr / (n - 2.0);
    Ok(LineFit {
        slope,
        intercept,
        slope_err: (s2 / sxx).sqrt(),
        intercept_err: (s2 * (1.0 / n + xm * xm / sxx)).sqrt(),
        rms: (ssr / n).sqrt(),
        points: xs.len(),
        x_mean: xm,
        mean_err: (s2 / n).sqrt(),
    })
}

/// Power-law fit `obs ~ C * eps^p` done as a line in log-log coordinates.
pub fn loglog_fit(eps: &[f64], obs: &[f64]) -> Result<LineFit, FitError> {
    if eps.iter().chain(obs).any(|v| !(*v > 0.0)) {
        return Err(FitError::NonFinite);
    }
    let lx: Vec<f64> = eps.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = obs.iter().map(|v| v.ln()).collect();
    line_fit(&lx, &ly)
}

/// Solution of a general linear least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coef: Vec<f64>,
    pub rms: f64,
}

/// Minimises `|A c - y|` for the design matrix given column by column.
///
/// Columns are scaled to unit norm and the system is solved by Householder
/// QR, which keeps badly scaled bases (logs times powers) usable.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, FitError> {
    let m = y.len();
    let p = columns.len();
    if p == 0 || m < p {
        return Err(FitError::TooFewPoints { needed: p.max(1), got: m });
    }
    if columns.iter().any(|c| c.len() != m) {
        return Err(FitError::LengthMismatch);
    }
    if columns.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if scales.iter().any(|&s| s == 0.0) {
        return Err(FitError::RankDeficient);
    }
    // column-major copy
    let mut a: Vec<Vec<f64>> = columns
        .iter()
        .zip(&scales)
        .map(|(c, s)| c.iter().map(|v| v / s).collect())
        .collect();
    let mut b = y.to_vec();
    let mut diag = vec![0.0; p];
    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(FitError::RankDeficient);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        for j in k..p {
            let dot: f64 = v.iter().zip(&a[j][k..]).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (i, vi) in v.iter().enumerate() {
                a[j][k + i] -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(x, y)| x * y).sum();
        let f = 2.0 * dot / vnorm2;
        for (i, vi) in v.iter().enumerate() {
            b[k + i] -= f * vi;
        }
    }
    let mut c = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = b[k];
        for j in k + 1..p {
            s -= a[j][k] * c[j];
        }
        c[k] = s / diag[k];
    }
    let coef: Vec<f64> = c.iter().zip(&scales).map(|(v, s)| v / s).collect();
    let ssr: f64 = (0..m)
        .map(|i| {
            let fit: f64 = columns.iter().zip(&coef).map(|(col, c)| col[i] * c).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    Ok(LeastSquares { coef, rms: (ssr / m as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = line_fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-13);
        assert!((f.root() - 4.0).abs() < 1e-12);
        assert!(f.slope_err < 1e-12 && f.root_err() < 1e-10);
    }

    #[test]
    fn root_error_matches_monte_carlo_scale() {
        // deterministic "noise"
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        let ys: Vec<f64> =
            xs.iter().enumerate().map(|(i, x)| 1.0 - x + 1e-3 * ((i * 7919) % 13) as f64 / 13.0 - 5e-4).collect();
        let f = line_fit(&xs, &ys).unwrap();
        assert!(f.root_err() > 1e-5 && f.root_err() < 1e-2);
    }

    #[test]
    fn power_law_recovered() {
        let eps: Vec<f64> = (2..=5).map(|j| 10f64.powi(-j)).collect();
        let obs: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(0.2)).collect();
        let f = loglog_fit(&eps, &obs).unwrap();
        assert!((f.slope - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(line_fit(&[1.0, 2.0], &[1.0, 2.0]), Err(FitError::TooFewPoints { needed: 3, got: 2 }));
        assert_eq!(line_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(FitError::RankDeficient));
        assert_eq!(line_fit(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(FitError::LengthMismatch));
        assert!(loglog_fit(&[1.0, -1.0, 2.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn qr_recovers_log_basis() {
        let ys: Vec<f64> = (0..200).map(|i| 1e-4 + 9e-4 * i as f64 / 199.0).collect();
        let cols = vec![
            ys.iter().map(|_| 1.0).collect::<Vec<_>>(),
            ys.iter().map(|y| y * y.ln()).collect(),
            ys.clone(),
            ys.iter().map(|y| y * y * y.ln().powi(2)).collect(),
        ];
        let truth = [0.3, -0.7, 1.1, 2.0];
        let obs: Vec<f64> =
            (0..200).map(|i| cols.iter().zip(&truth).map(|(c, t)| c[i] * t).sum()).collect();
        let sol = least_squares(&cols, &obs).unwrap();
        assert!((sol.coef[0] - 0.3).abs() < 1e-12);
        assert!((sol.coef[1] + 0.7).abs() < 1e-8);
        assert!(sol.rms < 1e-14);
    }

    proptest! {
        #[test]
        fn line_fit_is_exact_on_lines(m in -10.0f64..10.0, b in -10.0f64..10.0) {
            let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.3 - 1.0).collect();
            let ys: Vec<f64> = xs.iter().map(|x| b + m * x).collect();
            let f = line_fit(&xs, &ys).unwrap();
            prop_assert!((f.slope - m).abs() < 1e-10);
            prop_assert!((f.intercept - b).abs() < 1e-10);
        }
    }
}
