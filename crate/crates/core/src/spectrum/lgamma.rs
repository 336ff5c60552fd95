//! Complex log-gamma on the standard branch (continuous off the negative real
//! axis, real on the positive real axis).

use num_complex::Complex64;
use std::f64::consts::PI;

const G: f64 = 7.0;
const COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("log-gamma pole at {0}")]
pub struct PoleError(pub f64);

/// `ln Gamma(z)`; rejects the poles `z = 0, -1, -2, ...`.
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64, PoleError> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(PoleError(z.re));
    }
    // shift right so the Lanczos sum sees Re >= 1/2; each ln(z + k) is a
    // principal log, which keeps the cut on the negative real axis
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 0.5 {
        shift += w.ln();
        w += 1.0;
    }
    Ok(lanczos(w) - shift)
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(COEF[0], 0.0);
    for (i, c) in COEF.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}
