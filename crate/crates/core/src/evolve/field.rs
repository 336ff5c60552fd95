//! Radial field state in the regular variable `u`, `w = s (1 + r^2 u)`.

use super::grid::CompositeGrid;
use super::EvolveError;
use serde::{Deserialize, Serialize};

/// Initial-velocity convention for Gaussian data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    /// `w_t = 0`.
    #[default]
    Symmetric,
    /// `w_t = d/dr (w - 1)`, an approximately inward-moving pulse.
    Ingoing,
}

/// Parameters of `w(0, r) = 1 - A r^2 exp(-sigma (r - R)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianData {
    pub amplitude: f64,
    pub sigma: f64,
    pub radius: f64,
    pub mode: PulseMode,
}

impl GaussianData {
    pub fn symmetric(amplitude: f64, sigma: f64, radius: f64) -> Self {
        Self { amplitude, sigma, radius, mode: PulseMode::Symmetric }
    }

    pub fn w(&self, r: f64) -> f64 {
        1.0 + r * r * self.u(r)
    }

    fn u(&self, r: f64) -> f64 {
        -self.amplitude * (-self.sigma * (r - self.radius).powi(2)).exp()
    }

    fn u_r(&self, r: f64) -> f64 {
        -2.0 * self.sigma * (r - self.radius) * self.u(r)
    }
}

/// A refinement event in the life of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub t: f64,
    pub depth: usize,
    pub h: f64,
    pub extent: f64,
    pub energy_before: f64,
    pub energy_after: f64,
}

/// `w(t, r)` and `w_t` on a composite grid, stored through
/// `u = (s w - 1)/r^2` and `u_t`, which are smooth and even in `r`.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub(crate) dim: u32,
    pub(crate) sign: f64,
    pub(crate) t: f64,
    pub(crate) grid: CompositeGrid,
    pub(crate) u: Vec<f64>,
    pub(crate) p: Vec<f64>,
    pub(crate) refinements: Vec<RefinementRecord>,
}

pub(crate) fn check_dim(dim: u32) -> Result<(), EvolveError> {
    if dim == 4 || dim == 5 {
        Ok(())
    } else {
        Err(EvolveError::Dimension(dim))
    }
}

impl RadialField {
    /// Builds a field from `u` and `u_t` samples on `grid`.
    pub fn from_regular(dim: u32, sign: f64, grid: CompositeGrid, u: Vec<f64>, p: Vec<f64>) -> Result<Self, EvolveError> {
        check_dim(dim)?;
        if u.len() != grid.len() || p.len() != grid.len() {
            return Err(EvolveError::InvalidConfig("sample count does not match the grid".into()));
        }
        if sign.abs() != 1.0 {
            return Err(EvolveError::InvalidConfig("sign must be +1 or -1".into()));
        }
        Ok(Self { dim, sign, t: 0.0, grid, u, p, refinements: Vec::new() })
    }

    /// Builds a field from `w` and `w_t` given as functions of `r`. The
    /// vacuum branch `s = sign(w(0))` is taken from the value at the centre.
    pub fn from_fn(
        dim: u32,
        grid: CompositeGrid,
        w: impl Fn(f64) -> f64,
        wt: impl Fn(f64) -> f64,
    ) -> Result<Self, EvolveError> {
        let sign = if w(0.0) < 0.0 { -1.0 } else { 1.0 };
        let r = grid.nodes();
        let mut u: Vec<f64> = r.iter().map(|&x| if x > 0.0 { (sign * w(x) - 1.0) / (x * x) } else { 0.0 }).collect();
        let mut p: Vec<f64> = r.iter().map(|&x| if x > 0.0 { sign * wt(x) / (x * x) } else { 0.0 }).collect();
        // centre value from the even quadratic through nodes 1 and 2
        let (a, b) = (r[1] * r[1], r[2] * r[2]);
        u[0] = (b * u[1] - a * u[2]) / (b - a);
        p[0] = (b * p[1] - a * p[2]) / (b - a);
        Self::from_regular(dim, sign, grid, u, p)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &CompositeGrid {
        &self.grid
    }

    pub fn regular(&self) -> (&[f64], &[f64]) {
        (&self.u, &self.p)
    }

    pub fn refinements(&self) -> &[RefinementRecord] {
        &self.refinements
    }

    pub fn w_values(&self) -> Vec<f64> {
        self.grid.nodes().iter().zip(&self.u).map(|(r, u)| self.sign * (1.0 + r * r * u)).collect()
    }

    pub fn wt_values(&self) -> Vec<f64> {
        self.grid.nodes().iter().zip(&self.p).map(|(r, p)| self.sign * r * r * p).collect()
    }

    /// `w(t, r)` by interpolation of `u`.
    pub fn w_at(&self, r: f64) -> f64 {
        self.sign * (1.0 + r * r * self.grid.interpolate_even(&self.u, r))
    }

    /// `w` and `w_r` at `r`.
    pub fn w_and_wr_at(&self, r: f64) -> (f64, f64) {
        let (u, ur) = self.grid.interpolate_even_with_derivative(&self.u, r);
        (self.sign * (1.0 + r * r * u), self.sign * (2.0 * r * u + r * r * ur))
    }

    /// `d^2 w / dr^2` at the centre, `2 s u(0)`.
    pub fn central_curvature(&self) -> f64 {
        2.0 * self.sign * self.u[0]
    }

    /// Width of the central feature, `|u(0)|^{-1/2}`; infinite for vacuum.
    pub fn feature_width(&self) -> f64 {
        let u0 = self.u[0].abs();
        if u0 == 0.0 {
            f64::INFINITY
        } else {
            1.0 / u0.sqrt()
        }
    }

    /// Largest deviation from the vacuum `w = s`, `max |r^2 u|`.
    pub fn vacuum_deviation(&self) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(self.u.iter().zip(&self.p))
            .map(|(r, (u, p))| (r * r * u).abs().max((r * r * p).abs()))
            .fold(0.0, f64::max)
    }
}

/// Gaussian initial data on a uniform base grid.
///
/// Fails if the grid has fewer than four points per Gaussian width
/// `1/sqrt(sigma)`.
pub fn init_gaussian(dim: u32, data: &GaussianData, grid: CompositeGrid) -> Result<RadialField, EvolveError> {
    check_dim(dim)?;
    if !(data.sigma > 0.0 && data.radius > 0.0 && data.amplitude.is_finite()) {
        return Err(EvolveError::InvalidConfig("need sigma > 0, R > 0 and finite A".into()));
    }
    let width = 1.0 / data.sigma.sqrt();
    if grid.levels()[0].h > 0.25 * width {
        return Err(EvolveError::Unresolved { h: grid.levels()[0].h, width });
    }
    let r = grid.nodes().to_vec();
    let u: Vec<f64> = r.iter().map(|&x| data.u(x)).collect();
    let p: Vec<f64> = match data.mode {
        PulseMode::Symmetric => vec![0.0; r.len()],
        PulseMode::Ingoing => r
            .iter()
            .map(|&x| {
                // u_t = w_r / r^2 = u_r + 2u/r; the cutoff removes the 1/r
                // singularity of the exponentially small tail at the centre
                if x == 0.0 {
                    return 0.0;
                }
                let cut = 1.0 - (-(2.0 * x / data.radius).powi(8)).exp();
                cut * (data.u_r(x) + 2.0 * data.u(x) / x)
            })
            .collect(),
    };
    RadialField::from_regular(dim, 1.0, grid, u, p)
}
