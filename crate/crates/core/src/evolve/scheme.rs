//! Method-of-lines evolution with nested central refinement.

use super::diagnostics::{extract_scale_lambda, total_energy};
use super::field::{RadialField, RefinementRecord};
use super::grid::{CompositeGrid, RadialStencils};
use super::EvolveError;
use crate::odeint::Rk4Stepper;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// Time step as a fraction of the smallest spacing.
    pub cfl: f64,
    pub outer_radius: f64,
    /// Cells of the base grid on `[0, outer_radius]`.
    pub base_cells: usize,
    /// Refine once the central feature spans fewer than this many cells.
    pub refine_points: f64,
    pub refine_factor: usize,
    /// Radius of a new level in units of the feature width.
    pub refine_extent: f64,
    /// Total number of levels allowed, base included.
    pub max_levels: usize,
    /// Dispersal: central energy density below `ratio * peak` ...
    pub dispersal_ratio: f64,
    /// ... for this many feature widths `(10/peak)^{1/4}` at the peak.
    pub dispersal_window: f64,
    /// Stop once `|w_rr(t, 0)|` exceeds this ...
    pub blowup_curvature: f64,
    /// ... with at least this many levels in use.
    pub min_blowup_levels: usize,
    pub t_max: f64,
    /// Kreiss-Oliger dissipation strength (0 disables it).
    pub dissipation: f64,
    /// Total energy is sampled every this many steps.
    pub energy_every: usize,
    /// Blowup-time fit window: `|w_rr(0)|` from `blowup_curvature / 10^decades` up.
    pub fit_decades: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            outer_radius: 16.0,
            base_cells: 3200,
            refine_points: 32.0,
            refine_factor: 2,
            refine_extent: 6.0,
            max_levels: 40,
            dispersal_ratio: 1e-6,
            dispersal_window: 1.0,
            blowup_curvature: 1e20,
            min_blowup_levels: 3,
            t_max: 30.0,
            dissipation: 0.0,
            energy_every: 20,
            fit_decades: 2.0,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: &str| Err(EvolveError::InvalidConfig(m.into()));
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad("CFL factor must lie in (0, 1)");
        }
        if !(self.outer_radius > 0.0 && self.base_cells >= 8) {
            return bad("need a positive outer radius and at least 8 cells");
        }
        if !(self.refine_points > 0.0 && self.refine_factor >= 2 && self.refine_extent > 0.0 && self.max_levels >= 1) {
            return bad("refinement parameters must be positive (factor >= 2)");
        }
        if !(self.dispersal_ratio > 0.0 && self.dispersal_window > 0.0) {
            return bad("dispersal thresholds must be positive");
        }
        if !(self.blowup_curvature > 0.0 && self.t_max > 0.0 && self.fit_decades > 0.0) {
            return bad("stop criteria must be positive");
        }
        if !(self.dissipation >= 0.0 && self.energy_every >= 1) {
            return bad("dissipation must be non-negative and energy_every at least 1");
        }
        Ok(())
    }

    pub fn base_grid(&self) -> CompositeGrid {
        CompositeGrid::uniform(self.outer_radius, self.base_cells)
    }

    pub fn dt(&self, grid: &CompositeGrid) -> f64 {
        self.cfl * grid.h_min()
    }
}

/// Why an evolution stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    CurvatureLimit,
    Dispersed,
    TimeLimit,
    DepthExhausted,
    /// Stopped by the caller's observer.
    Observer,
}

/// Per-step central diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// `d^2 w/dr^2 (t, 0)`.
    pub curvature: f64,
    /// `e(t, 0) = 10 u(t, 0)^2`.
    pub central_density: f64,
    pub energy: Option<f64>,
    pub depth: usize,
    /// First zero of `w` (D = 4 only).
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub field: RadialField,
    pub history: Vec<Sample>,
    pub termination: Termination,
    pub steps: usize,
}

impl Evolution {
    pub fn peak_density(&self) -> (f64, f64) {
        self.history
            .iter()
            .fold((0.0, 0.0), |(t, e), s| if s.central_density > e { (s.t, s.central_density) } else { (t, e) })
    }
}

// Right-hand side of u_tt = u'' + (k/r) u' - 3(D-2) u^2 - (D-2) r^2 u^3,
// k = D + 1, with an outgoing condition u_t + u_r + (k/2r) u = 0 at the
// outer node.
struct Rhs {
    st: RadialStencils,
    r: Vec<f64>,
    r2: Vec<f64>,
    dm2: f64,
    k_out: f64,
    ko: Vec<Option<f64>>,
    eps: f64,
}

impl Rhs {
    fn new(grid: &CompositeGrid, dim: u32, dissipation: f64) -> Self {
        let r = grid.nodes().to_vec();
        let n = r.len();
        let k = dim as f64 + 1.0;
        // Kreiss-Oliger only where the five-point neighbourhood is uniform
        let ko = (0..n)
            .map(|i| {
                if dissipation == 0.0 || i + 2 >= n {
                    return None;
                }
                let h = if i == 0 { r[1] } else { r[i] - r[i - 1] };
                let pos = |j: isize| if j < 0 { -r[(-j) as usize] } else { r[j as usize] };
                let uniform = (-2..2).all(|o| {
                    let a = i as isize + o;
                    ((pos(a + 1) - pos(a)) / h - 1.0).abs() < 1e-9
                });
                uniform.then_some(h)
            })
            .collect();
        Self {
            st: RadialStencils::new(grid, k),
            r2: r.iter().map(|x| x * x).collect(),
            r,
            dm2: dim as f64 - 2.0,
            k_out: 0.5 * k,
            ko,
            eps: dissipation,
        }
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.r.len();
        let (u, p) = y.split_at(n);
        let (du, dp) = dy.split_at_mut(n);
        du.copy_from_slice(p);
        let source = |i: usize| -self.dm2 * u[i] * u[i] * (3.0 + self.r2[i] * u[i]);
        dp[0] = self.st.origin * (u[1] - u[0]) + source(0);
        for i in 1..n - 1 {
            let w = &self.st.interior[i - 1];
            dp[i] = w[0] * u[i - 1] + w[1] * u[i] + w[2] * u[i + 1] + source(i);
        }
        let w = &self.st.outer_d1;
        let rn = self.r[n - 1];
        dp[n - 1] = -(w[0] * p[n - 3] + w[1] * p[n - 2] + w[2] * p[n - 1]) - self.k_out * p[n - 1] / rn;
        if self.eps > 0.0 {
            let at = |f: &[f64], j: isize| if j < 0 { f[(-j) as usize] } else { f[j as usize] };
            for i in 0..n {
                if let Some(h) = self.ko[i] {
                    let j = i as isize;
                    let d4 = |f: &[f64]| {
                        at(f, j - 2) - 4.0 * at(f, j - 1) + 6.0 * f[i] - 4.0 * at(f, j + 1) + at(f, j + 2)
                    };
                    let c = self.eps / (16.0 * h);
                    du[i] -= c * d4(u);
                    dp[i] -= c * d4(p);
                }
            }
        }
    }
}

/// Adds one refinement level around the centre; `(u, u_t)` on the new nodes
/// come from cubic interpolation and existing nodes keep their values.
pub fn refine(field: &RadialField, config: &EvolveConfig) -> Result<RadialField, EvolveError> {
    if field.grid.depth() >= config.max_levels {
        return Err(EvolveError::DepthExhausted { t: field.t, depth: field.grid.depth() });
    }
    let finest = *field.grid.levels().last().unwrap();
    let width = field.feature_width();
    let extent = (config.refine_extent * width).min(0.5 * finest.extent);
    let grid = field.grid.refined(config.refine_factor, extent);
    let u = grid.nodes().iter().map(|&x| field.grid.interpolate_even(&field.u, x)).collect();
    let p = grid.nodes().iter().map(|&x| field.grid.interpolate_even(&field.p, x)).collect();
    // exact copies on surviving nodes
    let mut out = RadialField { grid, u, p, refinements: field.refinements.clone(), ..field.clone() };
    let old = field.grid.nodes();
    let mut j = 0;
    for (i, &x) in out.grid.nodes().iter().enumerate() {
        while j < old.len() && old[j] < x - 1e-12 * x.max(1e-300) {
            j += 1;
        }
        if j < old.len() && (old[j] - x).abs() <= 1e-9 * out.grid.h_min() {
            out.u[i] = field.u[j];
            out.p[i] = field.p[j];
        }
    }
    let levels = out.grid.levels();
    let new = levels[levels.len() - 1];
    out.refinements.push(RefinementRecord {
        t: field.t,
        depth: levels.len(),
        h: new.h,
        extent: new.extent,
        energy_before: total_energy(field),
        energy_after: total_energy(&out),
    });
    Ok(out)
}

/// What an observer asks the integrator to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Evolves until a stop criterion fires.
pub fn advance(field: RadialField, config: &EvolveConfig) -> Result<Evolution, EvolveError> {
    advance_with(field, config, |_, _| Control::Continue)
}

/// Like [`advance`], calling `observer` after every step.
pub fn advance_with<F>(mut field: RadialField, config: &EvolveConfig, mut observer: F) -> Result<Evolution, EvolveError>
where
    F: FnMut(&RadialField, &Sample) -> Control,
{
    config.validate()?;
    let mut rhs = Rhs::new(&field.grid, field.dim, config.dissipation);
    let mut n = field.grid.len();
    let mut y: Vec<f64> = field.u.iter().chain(&field.p).copied().collect();
    let mut stepper = Rk4Stepper::new(2 * n);
    let mut dt = config.dt(&field.grid);
    let mut history = Vec::new();
    let mut steps = 0usize;
    let mut peak = 0.0f64;
    let mut below_since: Option<f64> = None;
    let sample = |f: &RadialField, with_energy: bool| Sample {
        t: f.t,
        curvature: f.central_curvature(),
        central_density: 10.0 * f.u[0] * f.u[0],
        energy: with_energy.then(|| total_energy(f)),
        depth: f.grid.depth(),
        lambda: if f.dim == 4 { extract_scale_lambda(f) } else { None },
    };
    history.push(sample(&field, true));
    peak = peak.max(history[0].central_density);

    let termination = loop {
        if field.t >= config.t_max {
            break Termination::TimeLimit;
        }
        let h = dt.min(config.t_max - field.t);
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| rhs.eval(y, dy);
        stepper.step(&mut f, field.t, &mut y, h);
        steps += 1;
        field.t += h;
        field.u.copy_from_slice(&y[..n]);
        field.p.copy_from_slice(&y[n..]);
        if !field.u[0].is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(EvolveError::NonFinite { t: field.t });
        }

        let mut refined = false;
        while field.feature_width() < config.refine_points * field.grid.h_min() {
            if field.grid.depth() >= config.max_levels {
                let s = sample(&field, true);
                history.push(s);
                return Ok(Evolution { field, history, termination: Termination::DepthExhausted, steps });
            }
            field = refine(&field, config)?;
            refined = true;
        }
        if refined {
            rhs = Rhs::new(&field.grid, field.dim, config.dissipation);
            n = field.grid.len();
            y = field.u.iter().chain(&field.p).copied().collect();
            stepper = Rk4Stepper::new(2 * n);
            dt = config.dt(&field.grid);
        }

        let s = sample(&field, refined || steps % config.energy_every == 0);
        history.push(s);
        if observer(&field, &s) == Control::Stop {
            break Termination::Observer;
        }
        if s.curvature.abs() > config.blowup_curvature && field.grid.depth() >= config.min_blowup_levels {
            break Termination::CurvatureLimit;
        }
        if s.central_density > peak {
            peak = s.central_density;
            below_since = None;
        } else if s.central_density <= config.dispersal_ratio * peak {
            let since = *below_since.get_or_insert(field.t);
            // e(t, 0) = 10 u(0)^2, so the width at the peak is (10/peak)^{1/4}
            let width = if peak > 0.0 { (10.0 / peak).powf(0.25) } else { 1.0 };
            if field.t - since >= config.dispersal_window * width {
                break Termination::Dispersed;
            }
        } else {
            below_since = None;
        }
    };
    if history.last().map(|s| s.energy.is_none()).unwrap_or(false) {
        let last = history.last_mut().unwrap();
        last.energy = Some(total_energy(&field));
    }
    Ok(Evolution { field, history, termination, steps })
}
