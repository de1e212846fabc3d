//! Strang split-step Fourier integrator with halving step control and
//! blowup detection.
//!
//! One step is `L(dt/2) ∘ N(dt) ∘ L(dt/2)` where `L` is the exact spectral
//! linear flow and `N` the exact pointwise flow of `u_t = iκ|u|^α u`.

use crate::diagnostics::{DiagnosticProbeSet, DiagnosticTrace, DiagnosticsError, Recorder};
use crate::exponents::ModelParams;
use crate::field::{FieldError, FieldState, Spectral};
use crate::oracle::{pointwise_nonlinear_flow, OracleError};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Grids at least this large run the pointwise substep on the thread pool.
const PARALLEL_MIN_LEN: usize = 1 << 15;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver config: {0}")]
    Config(String),
    #[error("initial state contains non-finite values")]
    NonFiniteInitial,
    #[error(transparent)]
    Substep(#[from] OracleError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("duhamel check: {0}")]
    Duhamel(String),
}

/// Smooth exponential spectral filter `exp(-strength (|m|/(M/2))^order)` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(default = "default_filter_strength")]
    pub strength: f64,
    #[serde(default = "default_filter_order")]
    pub order: u32,
}

fn default_filter_strength() -> f64 {
    36.0
}
fn default_filter_order() -> u32 {
    36
}
fn default_safety() -> f64 {
    0.5
}
fn default_linf_threshold() -> f64 {
    1e6
}
fn default_dt_floor() -> f64 {
    1e-12
}
fn default_cadence() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Factor applied to `dt` after a rejected step.
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_linf_threshold")]
    pub blowup_linf_threshold: f64,
    #[serde(default = "default_dt_floor")]
    pub blowup_dt_floor: f64,
    /// Accepted steps between trace rows.
    #[serde(default = "default_cadence")]
    pub diagnostics_cadence: usize,
    #[serde(default)]
    pub filter: Option<FilterSpec>,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            safety: default_safety(),
            blowup_linf_threshold: default_linf_threshold(),
            blowup_dt_floor: default_dt_floor(),
            diagnostics_cadence: default_cadence(),
            filter: None,
        }
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.diagnostics_cadence = cadence;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.dt > self.t_end {
            return bad("dt must not exceed t_end");
        }
        // a factor of 1 would retry the same step forever
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety must lie in (0, 1)");
        }
        if !(self.blowup_linf_threshold > 0.0) || !(self.blowup_dt_floor > 0.0) {
            return bad("blowup thresholds must be positive");
        }
        if self.diagnostics_cadence == 0 {
            return bad("diagnostics_cadence must be at least 1");
        }
        if let Some(f) = self.filter {
            if !(f.strength >= 0.0) || f.order == 0 {
                return bad("filter needs strength >= 0 and order >= 1");
            }
        }
        Ok(())
    }
}

/// Reusable stepping kernel for one grid and exponent.
pub struct Stepper {
    spectral: Spectral,
    alpha: f64,
    cached_dt: f64,
    half: Vec<Complex64>,
    filter: Option<Vec<f64>>,
}

impl Stepper {
    pub fn new(grid: &crate::field::GridSpec, alpha: f64, filter: Option<FilterSpec>) -> Self {
        let spectral = Spectral::new(grid);
        let filter = filter.map(|f| {
            let half_m = (grid.points / 2) as f64;
            let sigma: Vec<f64> = (0..grid.points)
                .map(|j| (-f.strength * (grid.mode_index(j).abs() as f64 / half_m).powi(f.order as i32)).exp())
                .collect();
            grid.map_nodes(|ix| ix.iter().map(|&j| sigma[j]).product())
        });
        Self { spectral, alpha, cached_dt: f64::NAN, half: Vec::new(), filter }
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn half_propagator(&mut self, dt: f64) {
        if self.cached_dt != dt {
            self.half = self.spectral.propagator(0.5 * dt);
            self.cached_dt = dt;
        }
    }

    /// One Strang step in place with nonlinear coefficient `kappa`. On error
    /// the contents of `values` are unspecified.
    pub fn advance(&mut self, values: &mut [Complex64], kappa: Complex64, dt: f64) -> Result<(), OracleError> {
        self.half_propagator(dt);
        let sp = &self.spectral;
        sp.forward(values);
        values.iter_mut().zip(&self.half).for_each(|(v, p)| *v *= p);
        sp.inverse(values);

        let alpha = self.alpha;
        if kappa != Complex64::new(0.0, 0.0) {
            let flow = |v: &mut Complex64| -> Result<(), OracleError> {
                *v = pointwise_nonlinear_flow(*v, alpha, kappa, dt)?;
                Ok(())
            };
            if values.len() >= PARALLEL_MIN_LEN {
                values.par_iter_mut().try_for_each(flow)?;
            } else {
                values.iter_mut().try_for_each(flow)?;
            }
        }

        sp.forward(values);
        match &self.filter {
            Some(f) => values.iter_mut().zip(&self.half).zip(f).for_each(|((v, p), s)| *v *= p * s),
            None => values.iter_mut().zip(&self.half).for_each(|(v, p)| *v *= p),
        }
        sp.inverse(values);
        Ok(())
    }
}

/// Single Strang step of the model equation; time advances by `dt`.
pub fn step(state: &FieldState, model: &ModelParams, dt: f64) -> Result<FieldState, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::Config(format!("dt must be positive (got {dt})")));
    }
    let mut stepper = Stepper::new(&state.grid, model.alpha, None);
    let mut values = state.values.clone();
    stepper.advance(&mut values, model.kappa, dt)?;
    Ok(FieldState { grid: state.grid, values, time: state.time + dt })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    ReachedTEnd,
    BlowupDetected,
    StepFloorHit,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_state: FieldState,
    /// Time of the last accepted state when the run stopped early.
    pub blowup_time_estimate: Option<f64>,
    pub trace: DiagnosticTrace,
    /// States at the requested snapshot times that were reached.
    pub snapshots: Vec<FieldState>,
    /// States of every trace row when `keep_states` was requested.
    pub states: Vec<FieldState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_dt: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Rejection {
    Blowup,
    NonFinite,
}

/// Advances `state0` to `cfg.t_end` with constant coefficient `model.kappa`.
pub fn run(
    state0: &FieldState,
    model: &ModelParams,
    cfg: &SolverConfig,
    probes: DiagnosticProbeSet,
) -> Result<RunOutcome, SolverError> {
    let kappa = model.kappa;
    run_with_schedule(state0, model, cfg, probes, &|_| kappa)
}

/// As [`run`], with the nonlinear coefficient supplied per step by
/// `schedule(t_mid)` at the step midpoint.
pub fn run_with_schedule(
    state0: &FieldState,
    model: &ModelParams,
    cfg: &SolverConfig,
    probes: DiagnosticProbeSet,
    schedule: &dyn Fn(f64) -> Complex64,
) -> Result<RunOutcome, SolverError> {
    cfg.validate()?;
    if !state0.is_finite() {
        return Err(SolverError::NonFiniteInitial);
    }
    if !(state0.time < cfg.t_end) {
        return Err(SolverError::Config(format!("initial time {} is not before t_end {}", state0.time, cfg.t_end)));
    }
    let mut snapshot_times: Vec<f64> =
        probes.snapshot_times.iter().copied().filter(|&t| t >= state0.time && t <= cfg.t_end).collect();
    snapshot_times.sort_by(f64::total_cmp);
    snapshot_times.dedup();
    let mut targets: Vec<f64> = snapshot_times.iter().copied().filter(|&t| t > state0.time).collect();
    if targets.last() != Some(&cfg.t_end) {
        targets.push(cfg.t_end);
    }

    let mut stepper = Stepper::new(&state0.grid, model.alpha, cfg.filter);
    let mut recorder = Recorder::new(&state0.grid, model, probes)?;
    let mut snapshots = Vec::new();
    let mut state = state0.clone();
    if snapshot_times.first() == Some(&state0.time) {
        snapshots.push(state.clone());
    }
    recorder.record(&state, stepper.spectral());

    let mut dt = cfg.dt;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut next = 0usize;
    let mut candidate = state.values.clone();
    let mut stop: Option<Rejection> = None;

    while next < targets.len() {
        let target = targets[next];
        let remaining = target - state.time;
        // land exactly on targets; absorb slivers below 1e-9 dt
        let landing = remaining <= dt * (1.0 + 1e-9);
        let h = if landing { remaining } else { dt };
        candidate.copy_from_slice(&state.values);
        let kappa = schedule(state.time + 0.5 * h);
        let verdict = match stepper.advance(&mut candidate, kappa, h) {
            Err(_) => Some(Rejection::Blowup),
            Ok(()) => {
                let mut linf = 0.0f64;
                let mut finite = true;
                for v in &candidate {
                    let n = v.norm();
                    finite &= n.is_finite();
                    linf = linf.max(n);
                }
                if !finite {
                    Some(Rejection::NonFinite)
                } else if linf > cfg.blowup_linf_threshold {
                    Some(Rejection::Blowup)
                } else {
                    None
                }
            }
        };
        if let Some(reason) = verdict {
            rejected += 1;
            dt *= cfg.safety;
            if dt < cfg.blowup_dt_floor {
                stop = Some(reason);
                break;
            }
            continue;
        }
        std::mem::swap(&mut state.values, &mut candidate);
        state.time = if landing { target } else { state.time + h };
        accepted += 1;
        let at_end = landing && target == cfg.t_end;
        if landing {
            if snapshot_times.binary_search_by(|t| t.total_cmp(&target)).is_ok() {
                snapshots.push(state.clone());
            }
            next += 1;
        }
        if accepted.is_multiple_of(cfg.diagnostics_cadence) || at_end {
            recorder.record(&state, stepper.spectral());
        }
    }

    if recorder.last_time().is_some_and(|t| t < state.time) {
        recorder.record(&state, stepper.spectral());
    }
    let (status, estimate) = match stop {
        None => (RunStatus::ReachedTEnd, None),
        Some(Rejection::Blowup) => (RunStatus::BlowupDetected, Some(state.time)),
        Some(Rejection::NonFinite) => (RunStatus::StepFloorHit, Some(state.time)),
    };
    Ok(RunOutcome {
        status,
        final_state: state,
        blowup_time_estimate: estimate,
        trace: recorder.trace,
        snapshots,
        states: recorder.states,
        accepted_steps: accepted,
        rejected_steps: rejected,
        final_dt: dt,
    })
}

/// Composite Simpson weights on `n` uniform intervals of width `h`; an odd
/// `n` closes with the 3/8 rule on the last three intervals.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2, "need at least two intervals");
    let mut w = vec![0.0; n + 1];
    let simpson_end = if n.is_multiple_of(2) { n } else { n - 3 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if n % 2 == 1 {
        let s = simpson_end;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[s + k] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// Relative L² mismatch between the last state and the Duhamel formula
/// `e^{iTΔ}u(t₀) + iκ∫ e^{i(T-s)Δ}|u|^α u(s) ds` evaluated by composite
/// Simpson quadrature over the given uniformly spaced states.
pub fn duhamel_residual(states: &[FieldState], model: &ModelParams) -> Result<f64, SolverError> {
    if states.len() < 3 {
        return Err(SolverError::Duhamel(format!("need at least 3 states, got {}", states.len())));
    }
    let grid = states[0].grid;
    if states.iter().any(|s| !s.grid.same_as(&grid)) {
        return Err(SolverError::Duhamel("states live on different grids".into()));
    }
    let n = states.len() - 1;
    let t0 = states[0].time;
    let t_final = states[n].time;
    let h = (t_final - t0) / n as f64;
    if !(h > 0.0) {
        return Err(SolverError::Duhamel("times must increase".into()));
    }
    for (i, s) in states.iter().enumerate() {
        if (s.time - (t0 + i as f64 * h)).abs() > 1e-9 * h.max(t_final.abs()) {
            return Err(SolverError::Duhamel(format!("state {i} breaks uniform spacing")));
        }
    }
    let spectral = Spectral::new(&grid);
    let weights = simpson_weights(n, h);
    let alpha = model.alpha;
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (s, &w) in states.iter().zip(&weights) {
        let mut f: Vec<Complex64> = s
            .values
            .iter()
            .map(|&u| {
                let r2 = u.norm_sqr();
                if r2 == 0.0 {
                    u
                } else {
                    u * (0.5 * alpha * r2.ln()).exp()
                }
            })
            .collect();
        spectral.forward(&mut f);
        let lag = t_final - s.time;
        for ((a, v), &k2) in acc.iter_mut().zip(&f).zip(spectral.k2()) {
            *a += w * v * Complex64::from_polar(1.0, -k2 * lag);
        }
    }
    let mut rhs: Vec<Complex64> = states[0].values.clone();
    spectral.forward(&mut rhs);
    let ik = Complex64::i() * model.kappa;
    for ((r, a), &k2) in rhs.iter_mut().zip(&acc).zip(spectral.k2()) {
        *r = *r * Complex64::from_polar(1.0, -k2 * (t_final - t0)) + ik * a;
    }
    spectral.inverse(&mut rhs);
    let last = &states[n];
    let diff: f64 = last.values.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum();
    let norm: f64 = last.values.iter().map(|a| a.norm_sqr()).sum();
    Ok((diff / norm).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_initial, GridSpec, InitialDataSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian(grid: GridSpec, a: f64, width: f64) -> FieldState {
        make_initial(&grid, &InitialDataSpec::Gaussian { amplitude: c(a, 0.0), width, center: vec![] }).unwrap()
    }

    #[test]
    fn zero_kappa_step_is_linear_flow() {
        let g = GridSpec::new(1, 20.0, 128).unwrap();
        let u = gaussian(g, 1.0, 1.0);
        let m = ModelParams::new(1, 2.0, c(0.0, 0.0)).unwrap();
        let s = step(&u, &m, 0.1).unwrap();
        let l = u.linear_propagate(0.1);
        assert!(s.sub(&l).unwrap().linf() < 1e-14);
        assert_eq!(s.time, 0.1);
    }

    #[test]
    fn uniform_step_follows_pointwise_flow() {
        let g = GridSpec::new(2, 5.0, 16).unwrap();
        let u = FieldState::new(g, vec![c(1.0, 0.0); g.len()], 0.0).unwrap();
        let m = ModelParams::new(2, 2.0, c(0.0, -1.0)).unwrap();
        let s = step(&u, &m, 0.375).unwrap();
        let expect = pointwise_nonlinear_flow(c(1.0, 0.0), 2.0, c(0.0, -1.0), 0.375).unwrap();
        for v in &s.values {
            assert!((v - expect).norm() < 1e-13);
            assert!((v.norm() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_matches_oracle_and_local_error_is_third_order() {
        let g = GridSpec::new(1, 2.0 * std::f64::consts::PI, 32).unwrap();
        let m = ModelParams::new(1, 2.0, c(1.0, -0.3)).unwrap();
        let a = 0.8;
        let u = make_initial(&g, &InitialDataSpec::PlaneWave { amplitude: c(a, 0.0), mode: vec![2] }).unwrap();
        // pure plane wave: the two flows commute, so splitting is exact
        let dt = 1e-3;
        let s = step(&u, &m, dt).unwrap();
        let amp = pointwise_nonlinear_flow(c(a, 0.0), 2.0, m.kappa, dt).unwrap() * Complex64::from_polar(1.0, -4.0 * dt);
        let xs = g.coordinates();
        for (v, x) in s.values.iter().zip(&xs) {
            assert!((v - amp * Complex64::from_polar(1.0, 2.0 * x)).norm() < 1e-13);
        }
        // perturbed plane wave: local error ∝ dt³
        let pert = FieldState::from_fn(g, 0.0, |x| {
            c(0.5, 0.0) + c(0.1, 0.0) * Complex64::from_polar(1.0, 2.0 * x[0])
        })
        .unwrap();
        let fine = |dt: f64| {
            let mut st = Stepper::new(&g, 2.0, None);
            let mut v = pert.values.clone();
            let n = 64;
            for _ in 0..n {
                st.advance(&mut v, m.kappa, dt / n as f64).unwrap();
            }
            FieldState::new(g, v, dt).unwrap()
        };
        let err = |dt: f64| step(&pert, &m, dt).unwrap().sub(&fine(dt)).unwrap().l2();
        let ratio = err(2e-2) / err(1e-2);
        assert!((ratio - 8.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for n in [2, 3, 4, 5, 8, 9] {
            let h = 1.0 / n as f64;
            let w = simpson_weights(n, h);
            let s: f64 = w.iter().enumerate().map(|(i, w)| w * (i as f64 * h).powi(3)).sum();
            assert!((s - 0.25).abs() < 1e-14, "n {n}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.1, 1.0).validate().is_ok());
        assert!(SolverConfig::new(2.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(-0.1, 1.0).validate().is_err());
        let mut c = SolverConfig::new(0.1, 1.0);
        c.safety = 1.0;
        assert!(c.validate().is_err());
        let c = SolverConfig::new(0.1, 1.0).with_cadence(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn run_with_zero_kappa_matches_linear_flow() {
        let g = GridSpec::new(1, 40.0, 256).unwrap();
        let u = gaussian(g, 1.0, 1.0);
        let m = ModelParams::new(1, 1.0, c(0.0, 0.0)).unwrap();
        let out = run(&u, &m, &SolverConfig::new(0.013, 1.0).with_cadence(10), DiagnosticProbeSet::default()).unwrap();
        assert_eq!(out.status, RunStatus::ReachedTEnd);
        assert_eq!(out.final_state.time, 1.0);
        assert!(out.final_state.sub(&u.linear_propagate(1.0)).unwrap().linf() < 1e-12);
        let t = out.trace.times();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!(out.blowup_time_estimate.is_none());
    }

    #[test]
    fn snapshots_land_exactly() {
        let g = GridSpec::new(1, 20.0, 64).unwrap();
        let u = gaussian(g, 0.5, 1.0);
        let m = ModelParams::new(1, 2.0, c(1.0, 0.0)).unwrap();
        let probes = DiagnosticProbeSet { snapshot_times: vec![0.0, 0.25, 0.7, 1.0], ..Default::default() };
        let out = run(&u, &m, &SolverConfig::new(0.1, 1.0), probes).unwrap();
        let t: Vec<f64> = out.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(t, vec![0.0, 0.25, 0.7, 1.0]);
    }

    #[test]
    fn uniform_blowup_is_detected_near_one_half() {
        let g = GridSpec::new(1, 2.0 * std::f64::consts::PI, 8).unwrap();
        let u = FieldState::new(g, vec![c(1.0, 0.0); 8], 0.0).unwrap();
        let m = ModelParams::new(1, 2.0, c(0.0, -1.0)).unwrap();
        let mut cfg = SolverConfig::new(1e-3, 1.0);
        cfg.blowup_dt_floor = 1e-10;
        let out = run(&u, &m, &cfg, DiagnosticProbeSet::default()).unwrap();
        assert_eq!(out.status, RunStatus::BlowupDetected);
        let t = out.blowup_time_estimate.unwrap();
        assert!((0.499..=0.5).contains(&t), "{t}");
        assert_eq!(out.final_state.time, t);
    }

    #[test]
    fn dissipative_run_loses_mass() {
        let g = GridSpec::new(1, 40.0, 256).unwrap();
        let u = gaussian(g, 1.0, 1.0);
        let m = ModelParams::new(1, 1.0, c(0.0, 1.0)).unwrap();
        let out = run(&u, &m, &SolverConfig::new(1e-2, 1.0).with_cadence(5), DiagnosticProbeSet::default()).unwrap();
        assert_eq!(out.status, RunStatus::ReachedTEnd);
        assert!(out.trace.rows.windows(2).all(|w| w[1].mass < w[0].mass));
    }

    #[test]
    fn duhamel_residual_of_free_flow_vanishes() {
        let g = GridSpec::new(1, 40.0, 256).unwrap();
        let u = gaussian(g, 1.0, 1.0);
        let m = ModelParams::new(1, 1.0, c(0.0, 0.0)).unwrap();
        let probes = DiagnosticProbeSet { keep_states: true, ..Default::default() };
        let out = run(&u, &m, &SolverConfig::new(0.05, 1.0), probes).unwrap();
        assert!(duhamel_residual(&out.states, &m).unwrap() <= 1e-12);
        assert!(duhamel_residual(&out.states[..2], &m).is_err());
    }
}
