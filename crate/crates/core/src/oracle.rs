//! Closed-form reduced dynamics.
//!
//! Two Bernoulli-type ODEs have exact solutions and serve as oracles:
//!
//! * the self-similar amplitude `z(t)` of `u = (t+t₀)^{-N/2} z(t) e^{i|x|²/(4(t+t₀))}`,
//!   which obeys `z' = iκ (t+t₀)^{-Nα/2} |z|^α z`;
//! * the pointwise flow `u_t = iκ|u|^α u`, the exact nonlinear substep of the
//!   splitting solver.
//!
//! Writing `B(t) = |z(t)|^{-α}` both reduce to `B' = α Im κ · w(t)` with weight
//! `w ≡ 1` (pointwise) or `w = (t+t₀)^{-Nα/2}` (self-similar), and the phase
//! obeys `arg z' = Re κ · w / B`.

use crate::exponents::ModelParams;
use crate::ode::{Dopri5, OdeError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("t0 must be positive (got {0})")]
    BadOffset(f64),
    #[error("z0 = 0 is the trivial solution")]
    TrivialData,
    #[error("t = {t} lies past the blowup time {blowup_time}")]
    PastBlowup { t: f64, blowup_time: f64 },
    #[error("pointwise substep blows up: bracket {bracket} <= 0")]
    SubstepBlowup { bracket: f64 },
    #[error("time must be nonnegative (got {0})")]
    NegativeTime(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarParams {
    pub t0: f64,
    pub z0: Complex64,
    pub model: ModelParams,
}

impl SelfSimilarParams {
    pub fn new(model: ModelParams, t0: f64, z0: Complex64) -> Result<Self, OracleError> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(OracleError::BadOffset(t0));
        }
        Ok(Self { t0, z0, model })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Global,
    FiniteTimeBlowup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleVerdict {
    pub classification: Classification,
    pub blowup_time: Option<f64>,
    params: SelfSimilarParams,
}

impl OracleVerdict {
    pub fn params(&self) -> &SelfSimilarParams {
        &self.params
    }

    /// `|z(t)|`.
    pub fn amplitude_at(&self, t: f64) -> Result<f64, OracleError> {
        reduced_amplitude(&self.params, t)
    }

    /// Full complex `z(t)`, phase included.
    pub fn trajectory_at(&self, t: f64) -> Result<Complex64, OracleError> {
        reduced_state(&self.params, t)
    }
}

/// `(e^{qL} - 1)/q`, continuous through `q = 0`.
fn expm1_over(q: f64, l: f64) -> f64 {
    if q == 0.0 {
        l
    } else {
        (q * l).exp_m1() / q
    }
}

/// `ln(1+qx)/q`, continuous through `q = 0`.
fn ln1p_over(q: f64, x: f64) -> f64 {
    if q * x == 0.0 {
        x
    } else {
        (q * x).ln_1p() / q
    }
}

/// `∫₀ᵗ (s+t₀)^{-Nα/2} ds` in closed form (`t = ∞` allowed).
pub fn weight_integral(model: &ModelParams, t0: f64, t: f64) -> f64 {
    let p = model.half_n_alpha();
    let q = 1.0 - p;
    if t == 0.0 {
        return 0.0;
    }
    if t.is_infinite() {
        return if p > 1.0 { t0.powf(q) / (p - 1.0) } else { f64::INFINITY };
    }
    // t₀^{1-p} (e^{(1-p) ln(1+t/t₀)} - 1)/(1-p); the log branch is q = 0
    t0.powf(q) * expm1_over(q, (t / t0).ln_1p())
}

/// Inverse of [`weight_integral`]: the `t` with `W(t) = target`, or `None` if
/// the target is at or beyond `W(∞)`.
pub fn invert_weight_integral(model: &ModelParams, t0: f64, target: f64) -> Option<f64> {
    let p = model.half_n_alpha();
    let q = 1.0 - p;
    if target <= 0.0 {
        return Some(0.0);
    }
    // (T+t₀)^q = t₀^q + q·target  ⇒  ln(1+T/t₀) = ln(1 + q·target·t₀^{-q})/q
    let x = target * t0.powf(-q);
    if q < 0.0 && q * x <= -1.0 {
        return None;
    }
    let log_ratio = ln1p_over(q, x);
    Some(t0 * log_ratio.exp_m1())
}

fn bracket(params: &SelfSimilarParams, t: f64) -> f64 {
    let alpha = params.model.alpha;
    let r0 = params.z0.norm();
    r0.powf(-alpha) + alpha * params.model.kappa.im * weight_integral(&params.model, params.t0, t)
}

/// `|z(t)| = (|z₀|^{-α} + α Im κ W(t))^{-1/α}`.
pub fn reduced_amplitude(params: &SelfSimilarParams, t: f64) -> Result<f64, OracleError> {
    if t < 0.0 {
        return Err(OracleError::NegativeTime(t));
    }
    let r0 = params.z0.norm();
    if r0 == 0.0 {
        return Ok(0.0);
    }
    let b = bracket(params, t);
    if !(b > 0.0) {
        let blowup_time = blowup_time(params).unwrap_or(f64::NAN);
        return Err(OracleError::PastBlowup { t, blowup_time });
    }
    Ok(b.powf(-1.0 / params.model.alpha))
}

/// Complex `z(t)`; the phase advance is `Re κ/(α Im κ) · ln(B(t)/B(0))`.
pub fn reduced_state(params: &SelfSimilarParams, t: f64) -> Result<Complex64, OracleError> {
    let modulus = reduced_amplitude(params, t)?;
    if modulus == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let alpha = params.model.alpha;
    let kappa = params.model.kappa;
    let r0a = params.z0.norm().powf(alpha);
    let w = weight_integral(&params.model, params.t0, t);
    let dphase = kappa.re * ln1p_over(alpha * kappa.im, r0a * w);
    Ok(Complex64::from_polar(modulus, params.z0.arg() + dphase))
}

/// Relative slack treating `|z₀|^{-α}/α = -Im κ W(∞)` as an equality.
pub const THRESHOLD_TIE: f64 = 1e-12;

fn blowup_time(params: &SelfSimilarParams) -> Option<f64> {
    let kappa_im = params.model.kappa.im;
    let r0 = params.z0.norm();
    if kappa_im >= 0.0 || r0 == 0.0 {
        return None;
    }
    let alpha = params.model.alpha;
    let target = r0.powf(-alpha) / (alpha * -kappa_im);
    // equality at the threshold is global; absorb rounding in |z₀|^{-α}
    let w_inf = weight_integral(&params.model, params.t0, f64::INFINITY);
    if target >= w_inf * (1.0 - THRESHOLD_TIE) {
        return None;
    }
    invert_weight_integral(&params.model, params.t0, target)
}

/// Global/blowup verdict for the self-similar family.
///
/// With `Im κ < 0`: for `α ≤ 2/N` every nonzero `z₀` blows up; for `α > 2/N`
/// the solution is global iff `|z₀|^{-α}/α ≥ -Im κ · W(∞)`.
pub fn classify(params: &SelfSimilarParams) -> Result<OracleVerdict, OracleError> {
    if params.z0.norm() == 0.0 {
        return Err(OracleError::TrivialData);
    }
    let blowup = blowup_time(params);
    Ok(OracleVerdict {
        classification: if blowup.is_some() {
            Classification::FiniteTimeBlowup
        } else {
            Classification::Global
        },
        blowup_time: blowup,
        params: *params,
    })
}

/// Exact solution of `u_t = iκ|u|^α u` after time `dt`.
///
/// Modulus `|u₀| β^{-1/α}` with bracket `β = 1 + α Im κ |u₀|^α dt`; phase
/// advance `Re κ |u₀|^α dt · ln(β)/(β-1)`, which reduces to `Re κ |u₀|^α dt`
/// as `Im κ → 0`.
#[inline]
pub fn pointwise_nonlinear_flow(
    u0: Complex64,
    alpha: f64,
    kappa: Complex64,
    dt: f64,
) -> Result<Complex64, OracleError> {
    let r2 = u0.norm_sqr();
    if r2 == 0.0 {
        return Ok(u0);
    }
    // |u|^α = exp(α/2 · ln|u|²)
    let ra = (0.5 * alpha * r2.ln()).exp();
    let x = alpha * kappa.im * ra * dt;
    let beta = 1.0 + x;
    if !(beta > 0.0) {
        return Err(OracleError::SubstepBlowup { bracket: beta });
    }
    let growth = (-beta.ln() / alpha).exp();
    let dphase = kappa.re * ra * dt * if x == 0.0 { 1.0 } else { x.ln_1p() / x };
    Ok(u0 * Complex64::from_polar(growth, dphase))
}

/// Convenience wrapper taking the model.
pub fn pointwise_flow(u0: Complex64, model: &ModelParams, dt: f64) -> Result<Complex64, OracleError> {
    pointwise_nonlinear_flow(u0, model.alpha, model.kappa, dt)
}

/// Independent route: integrates `z' = iκ (t+t₀)^{-Nα/2} |z|^α z` with an
/// adaptive Dormand–Prince scheme and returns `z` at each requested time.
pub fn integrate_reduced(
    params: &SelfSimilarParams,
    times: &[f64],
    rtol: f64,
) -> Result<Vec<Complex64>, OracleError> {
    let solver = Dopri5 { rtol, atol: rtol * 1e-3 * params.z0.norm(), ..Dopri5::default() };
    let sol = solver.solve(reduced_rhs(params), 0.0, &[params.z0.re, params.z0.im], times, |_| false)?;
    Ok(sol.outputs.into_iter().map(|(_, y)| Complex64::new(y[0], y[1])).collect())
}

/// Blowup time estimated by integrating until `|z|` exceeds `cap`, or `None`
/// if the solution stays below `cap` up to `t_max`.
pub fn integrate_blowup_time(
    params: &SelfSimilarParams,
    t_max: f64,
    cap: f64,
    rtol: f64,
) -> Result<Option<f64>, OracleError> {
    let solver = Dopri5 { rtol, atol: rtol * 1e-3 * params.z0.norm(), ..Dopri5::default() };
    let sol = solver.solve(
        reduced_rhs(params),
        0.0,
        &[params.z0.re, params.z0.im],
        &[t_max],
        |y| y[0].hypot(y[1]) > cap,
    )?;
    Ok(sol.stopped.then_some(sol.t_final))
}

fn reduced_rhs(params: &SelfSimilarParams) -> impl FnMut(f64, &[f64], &mut [f64]) {
    let p = params.model.half_n_alpha();
    let alpha = params.model.alpha;
    let kappa = params.model.kappa;
    let t0 = params.t0;
    move |t, y, dy| {
        let z = Complex64::new(y[0], y[1]);
        let dz = Complex64::i() * kappa * (t + t0).powf(-p) * z.norm().powf(alpha) * z;
        dy[0] = dz.re;
        dy[1] = dz.im;
    }
}
