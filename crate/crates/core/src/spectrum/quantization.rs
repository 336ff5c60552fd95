//! Discrete spectrum of the limiting potential `-3 / sinh^2(rho)`.
//!
//! Bound states `u ~ e^{-alpha rho}` exist for the phase condition
//! `arg{Gamma(1/2 - i b) Gamma(1/2 + i b + alpha)} = k pi`, `b = sqrt(11)/2`.

use super::lgamma::log_gamma_complex;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Imaginary part of the indicial exponent at `rho = 0`.
pub fn beta() -> f64 {
    11f64.sqrt() / 2.0
}

/// Asymptotic ratio of consecutive roots, `exp(2 pi / sqrt(11))`.
pub fn asymptotic_ratio() -> f64 {
    (2.0 * PI / 11f64.sqrt()).exp()
}

/// `Gamma(z + k) / Gamma(z)` at `z = 1/2 + i b`, from the log-gamma
/// difference.
pub fn gamma_shift_ratio(k: u32) -> Complex64 {
    let z = Complex64::new(0.5, beta());
    (log_gamma_complex(z + k as f64).unwrap() - log_gamma_complex(z).unwrap()).exp()
}

/// The same ratio as the rising product `z (z + 1) ... (z + k - 1)`.
pub fn rising_product(k: u32) -> Complex64 {
    let z = Complex64::new(0.5, beta());
    (0..k).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z + j as f64))
}

const MARCH_STEP: f64 = 0.5;

fn principal_phase(alpha: f64) -> f64 {
    let z = Complex64::new(0.5, beta());
    let s = log_gamma_complex(z.conj()).unwrap() + log_gamma_complex(z + alpha).unwrap();
    // principal value of arg
    s.im.sin().atan2(s.im.cos())
}

/// The phase, unwrapped continuously from 0 at `alpha = 0` by marching in
/// steps of 0.5 and removing 2 pi jumps.
pub fn quantization_condition(alpha: f64) -> f64 {
    assert!(alpha >= 0.0, "alpha must be non-negative");
    let mut acc = 0.0;
    let mut prev = principal_phase(0.0);
    let mut a = 0.0;
    loop {
        let next = (a + MARCH_STEP).min(alpha);
        let ph = principal_phase(next);
        let mut d = ph - prev;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        acc += d;
        prev = ph;
        a = next;
        if a >= alpha {
            break;
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("k_max must be at least 1")]
    NoRoots,
    #[error("could not bracket root {0}")]
    Bracket(usize),
}

/// The first `k_max` solutions of `quantization_condition(alpha) = k pi`.
pub fn quantization_roots(k_max: usize) -> Result<Vec<f64>, RootError> {
    if k_max == 0 {
        return Err(RootError::NoRoots);
    }
    let ratio = asymptotic_ratio();
    let mut roots: Vec<f64> = Vec::with_capacity(k_max);
    let mut seed: f64 = 4.0;
    for k in 1..=k_max {
        let target = k as f64 * PI;
        let f = |a: f64| quantization_condition(a) - target;
        let lower_limit = roots.last().copied().unwrap_or(0.0);
        let mut lo = (seed / 1.5).max(lower_limit);
        let mut hi = seed * 1.5;
        let mut tries = 0;
        while f(lo) > 0.0 {
            lo = (lo / 1.5).max(lower_limit);
            tries += 1;
            if tries > 50 {
                return Err(RootError::Bracket(k));
            }
        }
        while f(hi) < 0.0 {
            hi *= 1.5;
            tries += 1;
            if tries > 100 {
                return Err(RootError::Bracket(k));
            }
        }
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        roots.push(root);
        seed = root * ratio;
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    // The same phase from the continuous log-gamma branch directly.
    fn analytic_phase(alpha: f64) -> f64 {
        let z = Complex64::new(0.5, beta());
        (log_gamma_complex(z + alpha).unwrap() - log_gamma_complex(z).unwrap()).im
    }

    #[test]
    fn shift_by_four_gives_minus_45() {
        let target = Complex64::new(-45.0, 0.0);
        assert!((gamma_shift_ratio(4) - target).norm() < 1e-10);
        assert!((rising_product(4) - target).norm() < 1e-12);
        assert!((gamma_shift_ratio(2) - rising_product(2)).norm() < 1e-12);
    }

    #[test]
    fn endpoints() {
        assert_eq!(quantization_condition(0.0), 0.0);
        assert!((quantization_condition(4.0) - PI).abs() < 1e-10);
        assert!((quantization_condition(27.37319) - 2.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn unwrapping_matches_continuous_branch() {
        for i in 0..200 {
            let a = i as f64 * 10.0 + 0.37;
            assert!((quantization_condition(a) - analytic_phase(a)).abs() < 1e-10, "alpha={a}");
        }
    }

    #[test]
    fn strictly_increasing() {
        let mut prev = -1.0;
        for i in 0..=8000 {
            let a = i as f64 * 0.25;
            let q = analytic_phase(a);
            assert!(q > prev, "alpha={a}");
            prev = q;
        }
        let mut prev = -1.0;
        for i in 0..=800 {
            let q = quantization_condition(i as f64 * 2.5);
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn first_roots() {
        let r = quantization_roots(4).unwrap();
        assert!((r[0] - 4.0).abs() < 1e-10);
        assert!((r[1] - 27.37319).abs() < 1e-3);
        assert!((r[2] - 182.1202).abs() < 1e-2);
        assert!((r[3] - 1210.917).abs() < 0.1);
        // the ratio is asymptotic; the first pair is still 3% off
        for w in r.windows(2).skip(1) {
            assert!((w[1] / w[0] / asymptotic_ratio() - 1.0).abs() < 0.01);
        }
        assert!((r[1] / r[0] / asymptotic_ratio() - 1.0).abs() > 0.02);
        assert!(quantization_roots(0).is_err());
    }
}
