//! Monitored quantities and post-hoc checks.
//!
//! Live probes are collected into a [`DiagnosticTrace`] by a [`Recorder`]
//! while the solver runs; the remaining functions are pure analyses over
//! completed traces or lists of states.

use crate::exponents::ModelParams;
use crate::field::{FieldError, FieldState, GridSpec, Spectral};
use crate::quadrature::integrate_with_breaks;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("cutoff support 2/λ = {support} for λ = {lambda} exceeds half box {half_box}")]
    SupportExceedsBox { lambda: f64, support: f64, half_box: f64 },
    #[error("field is identically zero")]
    ZeroField,
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("states are not in increasing time order")]
    OutOfOrder,
    #[error("confinement radius {radius} reaches the box edge {half_box}")]
    BoxTooSmall { radius: f64, half_box: f64 },
    #[error("cutoff dimension {0} unsupported")]
    BadDimension(usize),
    #[error("λ must be positive (got {0})")]
    BadLambda(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Tent profile: 1 on `[0,1]`, `2-r` on `[1,2]`, 0 beyond.
pub fn tent(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r < 2.0 {
        2.0 - r
    } else {
        0.0
    }
}

fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// `∫_{R^N} θ(|x|)² dx` by adaptive radial quadrature.
pub fn tent_norm_sq(dim: usize) -> f64 {
    let f = |r: f64| tent(r).powi(2) * r.powi(dim as i32 - 1);
    sphere_area(dim) * integrate_with_breaks(&f, 0.0, 2.0, &[1.0], 1e-15)
}

/// Normalisation `ν` with `ν² ∫θ(|x|)² dx = 1`, cached per dimension.
pub fn nu(dim: usize) -> Result<f64, DiagnosticsError> {
    static CACHE: OnceLock<[f64; 3]> = OnceLock::new();
    if !(1..=3).contains(&dim) {
        return Err(DiagnosticsError::BadDimension(dim));
    }
    let table = CACHE.get_or_init(|| [1, 2, 3].map(|d| tent_norm_sq(d).sqrt().recip()));
    Ok(table[dim - 1])
}

/// Family `φ_λ(x) = ν θ(λ|x|)` over a ladder of λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub dim: usize,
    pub nu: f64,
    pub lambdas: Vec<f64>,
}

impl CutoffFamily {
    pub fn new(dim: usize, lambdas: Vec<f64>) -> Result<Self, DiagnosticsError> {
        if let Some(&bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(DiagnosticsError::BadLambda(bad));
        }
        Ok(Self { dim, nu: nu(dim)?, lambdas })
    }

    /// Five geometric values spanning `[4/L, 4/w₀]`.
    pub fn default_ladder(grid: &GridSpec, width: f64) -> Result<Self, DiagnosticsError> {
        let lo = 4.0 / grid.box_length;
        let hi = (4.0 / width).max(lo);
        let lambdas = (0..5).map(|i| lo * (hi / lo).powf(i as f64 / 4.0)).collect();
        let fam = Self::new(grid.dim, lambdas)?;
        fam.check_support(grid)?;
        Ok(fam)
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.nu * tent(r)
    }

    pub fn phi(&self, lambda: f64, r: f64) -> f64 {
        self.psi(lambda * r)
    }

    /// `‖∇φ_λ‖_∞`, the tent slope.
    pub fn gradient_sup(&self, lambda: f64) -> f64 {
        self.nu * lambda
    }

    pub fn check_support(&self, grid: &GridSpec) -> Result<(), DiagnosticsError> {
        let half_box = 0.5 * grid.box_length;
        for &lambda in &self.lambdas {
            let support = 2.0 / lambda;
            if support > half_box * (1.0 + 1e-12) {
                return Err(DiagnosticsError::SupportExceedsBox { lambda, support, half_box });
            }
        }
        Ok(())
    }

    /// `‖φ_λ‖²` by Cartesian adaptive quadrature (N = 1, 2), independent of
    /// the radial integral behind `ν`.
    pub fn norm_sq_cartesian(&self, lambda: f64, tol: f64) -> Result<f64, DiagnosticsError> {
        let radii = [1.0 / lambda, 2.0 / lambda];
        let extent = 2.0 / lambda;
        match self.dim {
            1 => {
                let f = |x: f64| self.phi(lambda, x.abs()).powi(2);
                Ok(integrate_with_breaks(&f, -extent, extent, &[-radii[0], radii[0]], tol))
            }
            2 => {
                let outer = |x: f64| {
                    let breaks: Vec<f64> = radii
                        .iter()
                        .filter(|&&r| r > x.abs())
                        .flat_map(|&r| {
                            let y = (r * r - x * x).sqrt();
                            [-y, y]
                        })
                        .collect();
                    let inner = |y: f64| self.phi(lambda, x.hypot(y)).powi(2);
                    integrate_with_breaks(&inner, -extent, extent, &breaks, 0.1 * tol)
                };
                Ok(integrate_with_breaks(&outer, -extent, extent, &[-radii[0], radii[0]], tol))
            }
            d => Err(DiagnosticsError::BadDimension(d)),
        }
    }
}

/// `f_λ = ‖u φ_λ‖` for every λ of the family.
pub fn localized_mass(state: &FieldState, cutoffs: &CutoffFamily) -> Result<Vec<f64>, DiagnosticsError> {
    cutoffs.check_support(&state.grid)?;
    let r: Vec<f64> = state.grid.radius_squared().into_iter().map(f64::sqrt).collect();
    Ok(localized_mass_with_radii(state, cutoffs, &r))
}

fn localized_mass_with_radii(state: &FieldState, cutoffs: &CutoffFamily, r: &[f64]) -> Vec<f64> {
    let dv = state.grid.cell_volume();
    cutoffs
        .lambdas
        .iter()
        .map(|&lambda| {
            let s: f64 = state
                .values
                .iter()
                .zip(r)
                .map(|(v, &r)| {
                    let p = cutoffs.phi(lambda, r);
                    v.norm_sqr() * p * p
                })
                .sum();
            (s * dv).sqrt()
        })
        .collect()
}

/// Nodes grouped into radial shells of width `h` about the box centre.
#[derive(Debug, Clone)]
pub struct RadialBins {
    bin_of: Vec<u32>,
    count: usize,
    h: f64,
}

impl RadialBins {
    pub fn new(grid: &GridSpec) -> Self {
        let h = grid.spacing();
        // shell k holds radii in [(k-½)h, (k+½)h); shell 0 is [0, h/2)
        let bin_of: Vec<u32> = grid.radius_squared().iter().map(|r2| (r2.sqrt() / h + 0.5).floor() as u32).collect();
        let count = bin_of.iter().copied().max().unwrap_or(0) as usize + 1;
        Self { bin_of, count, h }
    }

    pub fn median_radius(&self, values: &[Complex64]) -> Result<f64, DiagnosticsError> {
        let mut shells = vec![0.0f64; self.count];
        for (v, &b) in values.iter().zip(&self.bin_of) {
            shells[b as usize] += v.norm_sqr();
        }
        let total: f64 = shells.iter().sum();
        if total == 0.0 {
            return Err(DiagnosticsError::ZeroField);
        }
        let half = 0.5 * total;
        let mut below = 0.0;
        for (k, &m) in shells.iter().enumerate() {
            let above = below + m;
            if above >= half {
                // cumulative mass at shell edges, linear in between
                let lo_edge = if k == 0 { 0.0 } else { (k as f64 - 0.5) * self.h };
                let hi_edge = (k as f64 + 0.5) * self.h;
                let frac = if m > 0.0 { (half - below) / m } else { 0.0 };
                return Ok(lo_edge + frac * (hi_edge - lo_edge));
            }
            below = above;
        }
        Ok((self.count as f64 - 0.5) * self.h)
    }
}

/// Radius enclosing half the mass.
pub fn median_radius(state: &FieldState) -> Result<f64, DiagnosticsError> {
    RadialBins::new(&state.grid).median_radius(&state.values)
}

/// One trace record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub mass: f64,
    /// `∫|u|^{α+2}`.
    pub lp: f64,
    pub grad_l2: f64,
    pub k_t: f64,
    pub linf: f64,
    pub median_radius: Option<f64>,
    pub weighted_l2: f64,
    pub scatter_residual: Option<f64>,
    pub loc_mass: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticTrace {
    pub lambdas: Vec<f64>,
    pub rows: Vec<TraceRow>,
}

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// C-style `%.6g`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        strip(format!("{:.*}", (5 - exp) as usize, x))
    } else {
        let m = strip(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

impl DiagnosticTrace {
    pub fn header(&self) -> String {
        let mut h = String::from("t,mass,lp,grad_l2,K_t,linf,R_t,weighted_l2,scatter_residual");
        for &l in &self.lambdas {
            let _ = write!(h, ",loc_mass_λ={}", format_g6(l));
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                format_float(r.t),
                format_float(r.mass),
                format_float(r.lp),
                format_float(r.grad_l2),
                format_float(r.k_t),
                format_float(r.linf),
                opt(r.median_radius),
                format_float(r.weighted_l2),
                opt(r.scatter_residual)
            );
            for &m in &r.loc_mass {
                let _ = write!(out, ",{}", format_float(m));
            }
            out.push('\n');
        }
        out
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// What to record while a run progresses.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticProbeSet {
    pub cutoffs: Option<CutoffFamily>,
    pub median_radius: bool,
    /// Record the X-norm increment of `e^{-itΔ}u(t)` between rows.
    pub scatter: bool,
    /// Times the solver lands on exactly and stores full states for.
    pub snapshot_times: Vec<f64>,
    /// Keep the state of every trace row (for Duhamel checks).
    pub keep_states: bool,
}

/// X-norm `(‖w‖² + ‖∇w‖² + ‖|x|w‖²)^{1/2}` from physical samples and their transform.
fn x_norm(values: &[Complex64], hat: &[Complex64], spectral: &Spectral, r2: &[f64]) -> f64 {
    let l2 = spectral.l2_sq_hat(hat);
    let grad = spectral.gradient_norm_sq_hat(hat);
    let dv = spectral.grid().cell_volume();
    let weighted: f64 = values.iter().zip(r2).map(|(v, r)| r * v.norm_sqr()).sum::<f64>() * dv;
    (l2 + grad + weighted).sqrt()
}

/// Accumulates trace rows for one run.
pub struct Recorder {
    probes: DiagnosticProbeSet,
    lp_exponent: f64,
    r2: Vec<f64>,
    radii: Vec<f64>,
    bins: Option<RadialBins>,
    running_k: f64,
    last_w: Option<(Vec<Complex64>, Vec<Complex64>)>,
    pub trace: DiagnosticTrace,
    pub states: Vec<FieldState>,
}

impl Recorder {
    pub fn new(grid: &GridSpec, model: &ModelParams, probes: DiagnosticProbeSet) -> Result<Self, DiagnosticsError> {
        if let Some(c) = &probes.cutoffs {
            c.check_support(grid)?;
        }
        let r2 = grid.radius_squared();
        let radii = r2.iter().map(|r| r.sqrt()).collect();
        let lambdas = probes.cutoffs.as_ref().map(|c| c.lambdas.clone()).unwrap_or_default();
        Ok(Self {
            bins: probes.median_radius.then(|| RadialBins::new(grid)),
            probes,
            lp_exponent: model.alpha + 2.0,
            r2,
            radii,
            running_k: 0.0,
            last_w: None,
            trace: DiagnosticTrace { lambdas, rows: Vec::new() },
            states: Vec::new(),
        })
    }

    pub fn probes(&self) -> &DiagnosticProbeSet {
        &self.probes
    }

    pub fn last_time(&self) -> Option<f64> {
        self.trace.rows.last().map(|r| r.t)
    }

    pub fn record(&mut self, state: &FieldState, spectral: &Spectral) {
        let mut hat = state.values.clone();
        spectral.forward(&mut hat);
        let grad = spectral.gradient_norm_sq_hat(&hat).sqrt();
        self.running_k = self.running_k.max(grad);
        let dv = state.grid.cell_volume();
        let weighted = (state.values.iter().zip(&self.r2).map(|(v, r)| r * v.norm_sqr()).sum::<f64>() * dv).sqrt();
        let median = self.bins.as_ref().and_then(|b| b.median_radius(&state.values).ok());
        let loc_mass = self
            .probes
            .cutoffs
            .as_ref()
            .map(|c| localized_mass_with_radii(state, c, &self.radii))
            .unwrap_or_default();

        let scatter_residual = if self.probes.scatter {
            // w = e^{-itΔ}u: multiply modes by e^{+i|k|²t}
            let w_hat: Vec<Complex64> = hat
                .iter()
                .zip(spectral.k2())
                .map(|(v, &k2)| v * Complex64::from_polar(1.0, k2 * state.time))
                .collect();
            let mut w = w_hat.clone();
            spectral.inverse(&mut w);
            let res = self.last_w.as_ref().map(|(pw, pw_hat)| {
                let d: Vec<Complex64> = w.iter().zip(pw).map(|(a, b)| a - b).collect();
                let dh: Vec<Complex64> = w_hat.iter().zip(pw_hat).map(|(a, b)| a - b).collect();
                x_norm(&d, &dh, spectral, &self.r2)
            });
            self.last_w = Some((w, w_hat));
            res
        } else {
            None
        };

        self.trace.rows.push(TraceRow {
            t: state.time,
            mass: state.mass(),
            lp: state.lp_integral(self.lp_exponent),
            grad_l2: grad,
            k_t: self.running_k,
            linf: state.linf(),
            median_radius: median,
            weighted_l2: weighted,
            scatter_residual,
            loc_mass,
        });
        if self.probes.keep_states {
            self.states.push(state.clone());
        }
    }
}

/// Three-point derivative on a nonuniform stencil, at the middle node.
pub fn central_derivative(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassBalanceReport {
    /// Largest relative mismatch between `d mass/dt` and `-2 Im κ ∫|u|^{α+2}`.
    pub max_mismatch: f64,
    pub rows_checked: usize,
    pub strictly_decreasing: bool,
    pub strictly_increasing: bool,
}

/// Checks `d/dt ∫|u|² = -2 Im κ ∫|u|^{α+2}` at interior rows.
pub fn mass_balance_check(trace: &DiagnosticTrace, model: &ModelParams) -> Result<MassBalanceReport, DiagnosticsError> {
    let rows = &trace.rows;
    if rows.len() < 3 {
        return Err(DiagnosticsError::TooFewRows { needed: 3, got: rows.len() });
    }
    let mut max_mismatch = 0.0f64;
    for w in rows.windows(3) {
        let d = central_derivative([w[0].t, w[1].t, w[2].t], [w[0].mass, w[1].mass, w[2].mass]);
        let rhs = -2.0 * model.kappa.im * w[1].lp;
        let denom = if rhs.abs() > 1e-12 * w[1].mass { rhs.abs() } else { w[1].mass };
        max_mismatch = max_mismatch.max((d - rhs).abs() / denom);
    }
    Ok(MassBalanceReport {
        max_mismatch,
        rows_checked: rows.len() - 2,
        strictly_decreasing: rows.windows(2).all(|w| w[1].mass < w[0].mass),
        strictly_increasing: rows.windows(2).all(|w| w[1].mass > w[0].mass),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaLedger {
    pub lambda: f64,
    pub min_slack: f64,
    pub scale: f64,
    /// `min_slack / scale`.
    pub min_relative_slack: f64,
    /// Fraction of rows where `f^{α+1} ≥ 4 (-Im κ)^{-1} λ^{(2-Nα)/2} ν K_t`.
    pub dominance_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityLedger {
    pub per_lambda: Vec<LambdaLedger>,
    pub min_relative_slack: f64,
}

/// Slack in `f_λ' ≥ -2νλK_t - Im κ λ^{Nα/2} f_λ^{α+1}` at interior rows.
pub fn differential_inequality_ledger(
    trace: &DiagnosticTrace,
    model: &ModelParams,
    cutoffs: &CutoffFamily,
) -> Result<InequalityLedger, DiagnosticsError> {
    let rows = &trace.rows;
    if rows.len() < 3 {
        return Err(DiagnosticsError::TooFewRows { needed: 3, got: rows.len() });
    }
    let n = model.dim as f64;
    let alpha = model.alpha;
    let im = model.kappa.im;
    let mut per_lambda = Vec::with_capacity(cutoffs.lambdas.len());
    for (j, &lambda) in cutoffs.lambdas.iter().enumerate() {
        let mut min_slack = f64::INFINITY;
        let mut scale = 0.0f64;
        let mut dominant = 0usize;
        for w in rows.windows(3) {
            let f = [w[0].loc_mass[j], w[1].loc_mass[j], w[2].loc_mass[j]];
            let df = central_derivative([w[0].t, w[1].t, w[2].t], f);
            let cross = 2.0 * cutoffs.nu * lambda * w[1].k_t;
            let growth = -im * lambda.powf(0.5 * n * alpha) * f[1].powf(alpha + 1.0);
            min_slack = min_slack.min(df - (growth - cross));
            scale = scale.max(df.abs()).max(cross).max(growth.abs());
            if im < 0.0 {
                let bound = 4.0 / -im * lambda.powf(0.5 * (2.0 - n * alpha)) * cutoffs.nu * w[1].k_t;
                if f[1].powf(alpha + 1.0) >= bound {
                    dominant += 1;
                }
            }
        }
        let scale = if scale > 0.0 { scale } else { 1.0 };
        per_lambda.push(LambdaLedger {
            lambda,
            min_slack,
            scale,
            min_relative_slack: min_slack / scale,
            dominance_fraction: dominant as f64 / (rows.len() - 2) as f64,
        });
    }
    let min_relative_slack = per_lambda.iter().map(|l| l.min_relative_slack).fold(f64::INFINITY, f64::min);
    Ok(InequalityLedger { per_lambda, min_relative_slack })
}

/// `(2-Nα)/(Nα)`, the growth exponent of `K_t`.
pub fn growth_exponent(model: &ModelParams) -> f64 {
    let na = model.dim as f64 * model.alpha;
    (2.0 - na) / na
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub exponent: f64,
    pub rows: usize,
    pub verdict: bool,
}

/// Least-squares slope of `ln K_t` against `ln t` over the last `window`
/// fraction of the positive-time log range.
pub fn rate_fit(
    trace: &DiagnosticTrace,
    model: &ModelParams,
    window: f64,
    blew_up: bool,
) -> Result<RateFit, DiagnosticsError> {
    let pts: Vec<(f64, f64)> =
        trace.rows.iter().filter(|r| r.t > 0.0 && r.k_t > 0.0).map(|r| (r.t.ln(), r.k_t.ln())).collect();
    if pts.len() < 2 {
        return Err(DiagnosticsError::TooFewRows { needed: 10, got: pts.len() });
    }
    let lo = pts[0].0;
    let hi = pts[pts.len() - 1].0;
    let cut = hi - window.clamp(0.0, 1.0) * (hi - lo);
    let sel: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 >= cut).collect();
    if sel.len() < 10 {
        return Err(DiagnosticsError::TooFewRows { needed: 10, got: sel.len() });
    }
    let n = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / n;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = sel.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let exponent = growth_exponent(model);
    Ok(RateFit { slope, intercept, r2, exponent, rows: sel.len(), verdict: blew_up || slope >= exponent - 0.1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementRow {
    pub t: f64,
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: f64,
    pub exterior_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    /// `16 ‖∇u₀‖/‖u₀‖`.
    pub a: f64,
    pub rows: Vec<ConfinementRow>,
    pub max_violation: f64,
    pub final_exterior_fraction: f64,
}

/// Free-flow bound `∫ψ_M|ũ|² ≤ ∫ψ_M|u₀|² + (2t/M)‖u₀‖‖∇u₀‖` with `M = a t`,
/// `ψ_M = min{|x|/M, 1}`. At `t = 0` the correction term is taken as 0.
pub fn linear_confinement_check(u0: &FieldState, times: &[f64]) -> Result<ConfinementReport, DiagnosticsError> {
    let l2 = u0.l2();
    if l2 == 0.0 {
        return Err(DiagnosticsError::ZeroField);
    }
    let spectral = Spectral::new(&u0.grid);
    let grad = spectral.gradient_norm_sq(&u0.values).sqrt();
    let a = 16.0 * grad / l2;
    let half_box = 0.5 * u0.grid.box_length;
    let radii: Vec<f64> = u0.grid.radius_squared().into_iter().map(f64::sqrt).collect();
    let dv = u0.grid.cell_volume();
    let mass0 = l2 * l2;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let m = a * t;
        if m >= half_box {
            return Err(DiagnosticsError::BoxTooSmall { radius: m, half_box });
        }
        let psi = |r: f64| if m == 0.0 { if r > 0.0 { 1.0 } else { 0.0 } } else { (r / m).min(1.0) };
        let evolved = u0.linear_propagate_with(&spectral, t);
        let weigh = |s: &FieldState| s.values.iter().zip(&radii).map(|(v, &r)| psi(r) * v.norm_sqr()).sum::<f64>() * dv;
        let lhs = weigh(&evolved);
        let correction = if t == 0.0 { 0.0 } else { 2.0 * t / m * l2 * grad };
        let rhs = weigh(u0) + correction;
        let exterior =
            evolved.values.iter().zip(&radii).filter(|(_, &r)| r > m).map(|(v, _)| v.norm_sqr()).sum::<f64>() * dv;
        rows.push(ConfinementRow {
            t,
            radius: m,
            lhs,
            rhs,
            violation: (lhs - rhs).max(0.0),
            exterior_fraction: exterior / mass0,
        });
    }
    Ok(ConfinementReport {
        a,
        max_violation: rows.iter().map(|r| r.violation).fold(0.0, f64::max),
        final_exterior_fraction: rows.last().map_or(0.0, |r| r.exterior_fraction),
        rows,
    })
}

/// X-norm increments of `w_i = e^{-it_iΔ}u(t_i)` between consecutive states.
pub fn scattering_residual(states: &[FieldState]) -> Result<Vec<f64>, DiagnosticsError> {
    if states.len() < 2 {
        return Err(DiagnosticsError::TooFewRows { needed: 2, got: states.len() });
    }
    if states.windows(2).any(|w| !(w[1].time > w[0].time)) {
        return Err(DiagnosticsError::OutOfOrder);
    }
    let grid = states[0].grid;
    if let Some(s) = states.iter().find(|s| !s.grid.same_as(&grid)) {
        return Err(FieldError::GridMismatch(format!("{:?} vs {:?}", s.grid, grid)).into());
    }
    let spectral = Spectral::new(&grid);
    let r2 = grid.radius_squared();
    let pulled: Vec<FieldState> = states.iter().map(|s| s.linear_propagate_with(&spectral, -s.time)).collect();
    Ok(pulled
        .windows(2)
        .map(|w| {
            let d: Vec<Complex64> = w[1].values.iter().zip(&w[0].values).map(|(a, b)| a - b).collect();
            let mut dh = d.clone();
            spectral.forward(&mut dh);
            x_norm(&d, &dh, &spectral, &r2)
        })
        .collect())
}

/// Largest grid-node value of `|x|`: used only as a cheap support bound.
pub fn max_radius(grid: &GridSpec) -> f64 {
    (grid.dim as f64).sqrt() * 0.5 * grid.box_length
}
