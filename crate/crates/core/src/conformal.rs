//! Pseudo-conformal change of variables `s = t/(1-t)`, `y = x/(1-t)`,
//! `u(s,y) = (1-t)^{N/2} e^{i|x|²/(4(1-t))} v(t,x)`.
//!
//! Under it, `i v_t + Δv + κ(1-t)^{-(4-Nα)/2}|v|^α v = 0` on `[0,1)` is
//! equivalent to the original equation for `u` on `[0,∞)`, with
//! `v(0,x) = e^{-i|x|²/4} u(0,x)`.

use crate::diagnostics::DiagnosticProbeSet;
use crate::exponents::ModelParams;
use crate::field::{FieldError, FieldState, GridSpec};
use crate::solver::{run, run_with_schedule, RunStatus, SolverConfig, SolverError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("v-side time must lie in [0, 1) (got {0})")]
    BadTime(f64),
    #[error("u-side time must be nonnegative (got {0})")]
    BadSTime(f64),
    #[error("quadratic phase under-resolved: max |∇phase|·h = {0} exceeds π/4")]
    ChirpUnresolved(f64),
    #[error("{path} stopped early with status {status:?}")]
    PathFailed { path: &'static str, status: RunStatus },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Matching times on the two sides of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalPair {
    pub t: f64,
    pub s: f64,
    /// `1 - t`.
    pub scale: f64,
}

impl ConformalPair {
    pub fn from_t(t: f64) -> Result<Self, ConformalError> {
        if !(0.0..1.0).contains(&t) {
            return Err(ConformalError::BadTime(t));
        }
        Ok(Self { t, s: t / (1.0 - t), scale: 1.0 - t })
    }

    pub fn from_s(s: f64) -> Result<Self, ConformalError> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(ConformalError::BadSTime(s));
        }
        let t = s / (1.0 + s);
        Ok(Self { t, s, scale: 1.0 / (1.0 + s) })
    }
}

fn weight_exponent(model: &ModelParams) -> f64 {
    0.5 * (4.0 - model.dim as f64 * model.alpha)
}

/// `h(t) = iκ(1-t)^{-(4-Nα)/2}`.
pub fn h_coefficient(model: &ModelParams, t: f64) -> Result<Complex64, ConformalError> {
    Ok(Complex64::i() * v_coefficient(model, t)?)
}

/// Nonlinear coefficient `κ(1-t)^{-(4-Nα)/2}` of the v-equation.
pub fn v_coefficient(model: &ModelParams, t: f64) -> Result<Complex64, ConformalError> {
    let pair = ConformalPair::from_t(t)?;
    Ok(model.kappa * pair.scale.powf(-weight_exponent(model)))
}

/// Largest `|∇(|x|²/(4c))|·h = |x|h/(2c)` over the grid, for phase scale `c`.
pub fn chirp_resolution(grid: &GridSpec, c: f64) -> f64 {
    let max_x = (grid.dim as f64).sqrt() * 0.5 * grid.box_length;
    max_x * grid.spacing() / (2.0 * c)
}

fn check_chirp(grid: &GridSpec, c: f64) -> Result<(), ConformalError> {
    let r = chirp_resolution(grid, c);
    if r < FRAC_PI_4 {
        Ok(())
    } else {
        Err(ConformalError::ChirpUnresolved(r))
    }
}

/// Multiplies by `amplitude · e^{i sign |x|²/(4c)}` node by node.
fn apply_chirp(values: &[Complex64], grid: &GridSpec, c: f64, sign: f64, amplitude: f64) -> Vec<Complex64> {
    values
        .iter()
        .zip(grid.radius_squared())
        .map(|(v, r2)| v * Complex64::from_polar(amplitude, sign * r2 / (4.0 * c)))
        .collect()
}

/// Maps `v(t)` on its grid to `u(s)` on the grid scaled by `1/(1-t)`; node
/// `j` of one grid corresponds to node `j` of the other.
pub fn to_u_frame(v: &FieldState) -> Result<FieldState, ConformalError> {
    let pair = ConformalPair::from_t(v.time)?;
    check_chirp(&v.grid, pair.scale)?;
    let grid = v.grid.rescaled(1.0 / pair.scale)?;
    let amplitude = pair.scale.powf(0.5 * v.grid.dim as f64);
    let values = apply_chirp(&v.values, &v.grid, pair.scale, 1.0, amplitude);
    Ok(FieldState { grid, values, time: pair.s })
}

/// Inverse of [`to_u_frame`].
pub fn from_u_frame(u: &FieldState) -> Result<FieldState, ConformalError> {
    let pair = ConformalPair::from_s(u.time)?;
    let grid = u.grid.rescaled(pair.scale)?;
    check_chirp(&grid, pair.scale)?;
    let amplitude = pair.scale.powf(-0.5 * u.grid.dim as f64);
    let values = apply_chirp(&u.values, &grid, pair.scale, -1.0, amplitude);
    Ok(FieldState { grid, values, time: pair.t })
}

/// `v(0) = e^{-i|x|²/4} u(0)` on the same grid.
pub fn initial_v(u0: &FieldState) -> Result<FieldState, ConformalError> {
    check_chirp(&u0.grid, 1.0)?;
    let values = apply_chirp(&u0.values, &u0.grid, 1.0, -1.0, 1.0);
    Ok(FieldState { grid: u0.grid, values, time: 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceGrids {
    pub v: GridSpec,
    pub u: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub t_star: f64,
    pub s_star: f64,
    /// `‖u_A - u_B‖/‖u_B‖` on the u-side grid.
    pub l2_discrepancy: f64,
    pub grids: EquivalenceGrids,
    /// v-side step; the u-side step is `dt · s*/t*` so both paths take the
    /// same number of steps.
    pub dt: f64,
    pub dt_u: f64,
}

/// Solves the v-problem to `t*` and maps it forward (path A), solves the
/// u-problem directly to `s*` (path B), and compares them.
///
/// `u0` lives on the v-side grid; path B resamples it onto the enlarged
/// u-side grid with zero extension.
pub fn equivalence_experiment(
    u0: &FieldState,
    model: &ModelParams,
    cfg: &SolverConfig,
    t_star: f64,
) -> Result<EquivalenceReport, ConformalError> {
    let pair = ConformalPair::from_t(t_star)?;
    let grid_v = u0.grid;
    let grid_u = grid_v.rescaled(1.0 / pair.scale)?;
    let grids = EquivalenceGrids { v: grid_v, u: grid_u };
    if t_star == 0.0 {
        return Ok(EquivalenceReport { t_star, s_star: 0.0, l2_discrepancy: 0.0, grids, dt: cfg.dt, dt_u: cfg.dt });
    }
    check_chirp(&grid_v, pair.scale)?;
    let v0 = initial_v(u0)?;
    let u0_big = u0.resample_with(&grid_u, false)?;

    let mut cfg_a = cfg.clone();
    cfg_a.t_end = t_star;
    cfg_a.dt = cfg.dt.min(t_star);
    let mut cfg_b = cfg_a.clone();
    cfg_b.t_end = pair.s;
    cfg_b.dt = cfg_a.dt * pair.s / t_star;
    let model_v = *model;
    let schedule = move |t: f64| v_coefficient(&model_v, t).unwrap_or(Complex64::new(f64::NAN, f64::NAN));

    let (a, b) = std::thread::scope(|scope| {
        let a = scope.spawn(|| run_with_schedule(&v0, model, &cfg_a, DiagnosticProbeSet::default(), &schedule));
        let b = run(&u0_big, model, &cfg_b, DiagnosticProbeSet::default());
        (a.join().expect("path A panicked"), b)
    });
    let (a, b) = (a?, b?);
    for (path, out) in [("path A", &a), ("path B", &b)] {
        if out.status != RunStatus::ReachedTEnd {
            return Err(ConformalError::PathFailed { path, status: out.status });
        }
    }
    let mut u_a = to_u_frame(&a.final_state)?;
    u_a.time = b.final_state.time;
    let l2_discrepancy = u_a.relative_l2_distance(&b.final_state)?;
    Ok(EquivalenceReport { t_star, s_star: pair.s, l2_discrepancy, grids, dt: cfg_a.dt, dt_u: cfg_b.dt })
}
