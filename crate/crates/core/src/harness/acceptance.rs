//! Acceptance suite.
//!
//! Each criterion is a self-contained function returning a
//! [`CriterionResult`]; [`run_all`] runs the selected ones in order. Runs
//! shared between criteria are computed once per suite invocation.

use super::{dichotomy_run, property_rng, DichotomyClass, DichotomyRow, SimulationSetup};
use crate::conformal::equivalence_experiment;
use crate::diagnostics::{
    differential_inequality_ledger, linear_confinement_check, mass_balance_check, median_radius, nu, CutoffFamily,
    DiagnosticProbeSet, RadialBins,
};
use crate::exponents::{alpha1, alpha2, gradient_monotone_condition, ModelParams};
use crate::field::{make_initial, FieldState, GridSpec, InitialDataSpec, Spectral};
use crate::oracle::{classify, integrate_blowup_time, integrate_reduced, SelfSimilarParams};
use crate::solver::{run, RunOutcome, RunStatus, SolverConfig, Stepper};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::f64::consts::E;
use std::time::Instant;

/// Shown in every report: what stands in for the existential constants.
pub const SUBSTITUTION_NOTE: &str = "The smallness threshold of the global-existence theorem and the constant of the \
blowup theorem are existential and cannot be reproduced numerically. Criteria 1 (exponent table), 8 (dichotomy \
sweep), 9 (non-scattering below the Fujita exponent) and 12 (pseudo-conformal equivalence) serve as their \
property-based stand-ins.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
}

impl CriterionResult {
    /// One line: `PASS  7 localized-mass  detail`.
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<24} {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub results: Vec<CriterionResult>,
    pub substitution_note: String,
    pub seed: u64,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,name,passed,seconds,detail\n");
        for r in &self.results {
            s.push_str(&format!("{},{},{},{:.3},\"{}\"\n", r.id, r.name, r.passed, r.seconds, r.detail.replace('"', "'")));
        }
        s
    }
}

/// Identifier and short name of every criterion.
pub const CRITERIA: [(u32, &str); 13] = [
    (1, "exponent-table"),
    (2, "oracle-closed-forms"),
    (3, "solver-exactness-order"),
    (4, "mass-law"),
    (5, "uniform-blowup"),
    (6, "gradient-monotonicity"),
    (7, "localized-mass"),
    (8, "fujita-dichotomy"),
    (9, "non-scattering"),
    (10, "linear-confinement"),
    (11, "median-radius"),
    (12, "pseudo-conformal"),
    (13, "constant-substitution"),
];

/// Whether `filter` selects a criterion: matches the number exactly or any
/// substring of the name.
pub fn selects(filter: Option<&str>, id: u32, name: &str) -> bool {
    match filter {
        None => true,
        Some(f) => f.trim() == id.to_string() || name.contains(f.trim()),
    }
}

/// Runs the criteria selected by `filter`.
pub fn run_all(filter: Option<&str>, seed: u64) -> AcceptanceReport {
    let ctx = Suite::new(seed);
    let results = CRITERIA
        .iter()
        .filter(|(id, name)| selects(filter, *id, name))
        .map(|&(id, name)| ctx.run(id, name))
        .collect();
    AcceptanceReport { results, substitution_note: SUBSTITUTION_NOTE.to_string(), seed }
}

/// Runs a single criterion by id.
pub fn run_one(id: u32, seed: u64) -> Option<CriterionResult> {
    let ctx = Suite::new(seed);
    CRITERIA.iter().find(|c| c.0 == id).map(|&(id, name)| ctx.run(id, name))
}

type Metrics = BTreeMap<String, f64>;

struct Verdict {
    passed: bool,
    detail: String,
    metrics: Metrics,
}

fn verdict(passed: bool, detail: String, metrics: &[(&str, f64)]) -> Verdict {
    Verdict { passed, detail, metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
}

fn failure(detail: impl std::fmt::Display) -> Verdict {
    Verdict { passed: false, detail: format!("error: {detail}"), metrics: Metrics::new() }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn model(dim: usize, alpha: f64, kappa: Complex64) -> ModelParams {
    ModelParams::new(dim, alpha, kappa).expect("valid model")
}

fn gaussian(amplitude: f64, width: f64) -> InitialDataSpec {
    InitialDataSpec::Gaussian { amplitude: c(amplitude, 0.0), width, center: vec![] }
}

/// `(1+it)^{-N/2} e^{-|x|²/(4(1+it))}`: the free evolution of `e^{-|x|²/4}`.
pub fn free_gaussian(x2: f64, t: f64, dim: usize) -> Complex64 {
    let z = c(1.0, t);
    z.powf(-(dim as f64) / 2.0) * (-x2 / (4.0 * z)).exp()
}

/// Runs shared by several criteria.
struct Suite {
    seed: u64,
    gradient_run: OnceCell<Result<(ModelParams, CutoffFamily, RunOutcome), String>>,
    dichotomy: OnceCell<Result<DichotomyRuns, String>>,
}

struct DichotomyRuns {
    low: DichotomyRow,
    high: DichotomyRow,
    noise_floor: f64,
}

const DICHOTOMY_TIMES: [f64; 4] = [5.0, 10.0, 20.0, 40.0];

impl Suite {
    fn new(seed: u64) -> Self {
        Self { seed, gradient_run: OnceCell::new(), dichotomy: OnceCell::new() }
    }

    fn run(&self, id: u32, name: &str) -> CriterionResult {
        let start = Instant::now();
        let v = match id {
            1 => exponent_table(),
            2 => oracle_closed_forms(self.seed),
            3 => solver_exactness_order(),
            4 => mass_law(),
            5 => uniform_blowup(),
            6 => self.gradient_monotonicity(),
            7 => self.localized_mass(),
            8 => self.fujita_dichotomy(),
            9 => self.non_scattering(),
            10 => linear_confinement(),
            11 => median_radius_law(),
            12 => pseudo_conformal(),
            13 => verdict(!SUBSTITUTION_NOTE.is_empty(), "substitution documented in report".into(), &[]),
            _ => failure("unknown criterion"),
        };
        CriterionResult {
            id,
            name: name.to_string(),
            passed: v.passed,
            detail: v.detail,
            metrics: v.metrics,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    /// κ = −i, α = 1, Gaussian of amplitude 0.5 on `[-40, 40)`, `t ≤ 2`.
    fn gradient_case(&self) -> &Result<(ModelParams, CutoffFamily, RunOutcome), String> {
        self.gradient_run.get_or_init(|| {
            let m = model(1, 1.0, c(0.0, -1.0));
            let grid = GridSpec::new(1, 80.0, 1024).map_err(|e| e.to_string())?;
            let u0 = make_initial(&grid, &gaussian(0.5, 1.0)).map_err(|e| e.to_string())?;
            let cutoffs = CutoffFamily::default_ladder(&grid, 1.0).map_err(|e| e.to_string())?;
            let probes = DiagnosticProbeSet { cutoffs: Some(cutoffs.clone()), median_radius: false, ..Default::default() };
            let cfg = SolverConfig::new(1e-3, 2.0).with_cadence(10);
            let out = run(&u0, &m, &cfg, probes).map_err(|e| e.to_string())?;
            Ok((m, cutoffs, out))
        })
    }

    fn gradient_monotonicity(&self) -> Verdict {
        let (m, _, out) = match self.gradient_case() {
            Ok(v) => v,
            Err(e) => return failure(e),
        };
        let rows = &out.trace.rows;
        let scale = rows.iter().map(|r| r.grad_l2).fold(0.0, f64::max);
        let worst = rows.windows(2).map(|w| w[1].grad_l2 - w[0].grad_l2).fold(f64::INFINITY, f64::min);
        let passed = out.status == RunStatus::ReachedTEnd && gradient_monotone_condition(m) && worst >= -1e-8 * scale;
        verdict(
            passed,
            format!("{:?}, min increment {worst:.3e} (scale {scale:.3e}) over {} rows", out.status, rows.len()),
            &[("min_increment", worst), ("scale", scale), ("rows", rows.len() as f64)],
        )
    }

    fn localized_mass(&self) -> Verdict {
        let mut worst_norm = 0.0f64;
        for dim in [1usize, 2] {
            let fam = match CutoffFamily::new(dim, vec![0.5, 1.0, 2.0]) {
                Ok(f) => f,
                Err(e) => return failure(e),
            };
            for &l in &fam.lambdas {
                let n2 = match fam.norm_sq_cartesian(l, 1e-13) {
                    Ok(v) => v,
                    Err(e) => return failure(e),
                };
                let expect = l.powf(-(dim as f64) / 2.0);
                worst_norm = worst_norm.max((n2.sqrt() - expect).abs() / expect);
            }
        }
        let nu_err = (nu(1).unwrap_or(f64::NAN) - (3.0f64 / 8.0).sqrt()).abs();
        let (m, cutoffs, out) = match self.gradient_case() {
            Ok(v) => v,
            Err(e) => return failure(e),
        };
        let ledger = match differential_inequality_ledger(&out.trace, m, cutoffs) {
            Ok(l) => l,
            Err(e) => return failure(e),
        };
        let passed = worst_norm <= 1e-8 && nu_err <= 1e-10 && ledger.min_relative_slack >= -1e-3;
        verdict(
            passed,
            format!(
                "norm error {worst_norm:.2e}, nu error {nu_err:.2e}, min relative slack {:.3e}",
                ledger.min_relative_slack
            ),
            &[("norm_error", worst_norm), ("nu_error", nu_err), ("min_relative_slack", ledger.min_relative_slack)],
        )
    }

    /// N = 1, κ = −i, Gaussian amplitude 0.1 on `L = 1024`, `M = 4096`,
    /// `dt = 0.01`, snapshots at 5, 10, 20, 40.
    fn dichotomy_case(&self) -> &Result<DichotomyRuns, String> {
        self.dichotomy.get_or_init(|| {
            let grid = GridSpec::new(1, 1024.0, 4096).map_err(|e| e.to_string())?;
            let setup = |alpha: f64, kappa: Complex64, t_end: f64| SimulationSetup {
                model: model(1, alpha, kappa),
                grid,
                solver: SolverConfig::new(0.01, t_end).with_cadence(10),
                initial: gaussian(0.1, 1.0),
            };
            let probes = DiagnosticProbeSet::default;
            let cases = [setup(1.0, c(0.0, -1.0), 100.0), setup(3.0, c(0.0, -1.0), 40.0), setup(1.0, c(0.0, 0.0), 40.0)];
            let results: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> =
                    cases.iter().map(|cs| s.spawn(move || dichotomy_run(cs, probes(), &DICHOTOMY_TIMES))).collect();
                handles.into_iter().map(|h| h.join().expect("dichotomy worker panicked")).collect()
            });
            let mut rows = Vec::new();
            for r in results {
                rows.push(r.map_err(|e| e.to_string())?.1);
            }
            let free = rows.pop().expect("three rows");
            let high = rows.pop().expect("three rows");
            let low = rows.pop().expect("three rows");
            let noise_floor = free.residuals.iter().copied().fold(0.0, f64::max);
            Ok(DichotomyRuns { low, high, noise_floor })
        })
    }

    fn fujita_dichotomy(&self) -> Verdict {
        let d = match self.dichotomy_case() {
            Ok(d) => d,
            Err(e) => return failure(e),
        };
        let slope = d.low.rate_fit.as_ref().map_or(f64::NAN, |f| f.slope);
        let low_ok = d.low.classification == DichotomyClass::BlowupDetected
            || (d.low.classification == DichotomyClass::GrowthConfirmed && slope >= 0.9);
        let first = d.high.residuals.first().copied().unwrap_or(f64::NAN);
        let last = d.high.final_residual().unwrap_or(f64::NAN);
        let ratio = last / first;
        let high_ok = d.high.classification == DichotomyClass::BoundedScattering
            && d.high.residuals.len() == DICHOTOMY_TIMES.len() - 1
            && d.high.residuals_strictly_decreasing()
            && ratio <= 0.1;
        verdict(
            low_ok && high_ok,
            format!(
                "alpha=1: {:?} (slope {slope:.3}, blowup at {}); alpha=3: {:?}, residuals {:?}, final/first {ratio:.3}",
                d.low.classification,
                d.low.blowup_time_estimate.map_or("none".into(), |t| format!("{t:.2}")),
                d.high.classification,
                sci(&d.high.residuals),
            ),
            &[
                ("low_slope", slope),
                ("high_first_residual", first),
                ("high_final_residual", last),
                ("high_ratio", ratio),
            ],
        )
    }

    fn non_scattering(&self) -> Verdict {
        let d = match self.dichotomy_case() {
            Ok(d) => d,
            Err(e) => return failure(e),
        };
        let last = d.low.final_residual().unwrap_or(f64::NAN);
        let passed = d.low.residuals.len() == DICHOTOMY_TIMES.len() - 1 && last > 10.0 * d.noise_floor;
        verdict(
            passed,
            format!("last residual {last:.3e} vs free noise floor {:.3e}", d.noise_floor),
            &[("last_residual", last), ("noise_floor", d.noise_floor)],
        )
    }
}

fn exponent_table() -> Verdict {
    let mut below_mass_critical = true;
    let mut ordering_matches = true;
    for n in 1..=64usize {
        let (a1, a2) = (alpha1(n), alpha2(n));
        below_mass_critical &= a2 < 4.0 / n as f64;
        ordering_matches &= (a2 < a1) == (n >= 7);
    }
    verdict(
        below_mass_critical && ordering_matches,
        format!("alpha2 < 4/N for all N: {below_mass_critical}; alpha2 < alpha1 iff N >= 7: {ordering_matches}"),
        &[("alpha1_7", alpha1(7)), ("alpha2_7", alpha2(7))],
    )
}

fn oracle_closed_forms(seed: u64) -> Verdict {
    let kappa = c(0.0, -1.0);
    let mut worst_closed = 0.0f64;
    let mut worst_ode = 0.0f64;
    for (alpha, expected) in [(1.0, E - 1.0), (2.0, 1.0)] {
        let p = match SelfSimilarParams::new(model(2, alpha, kappa), 1.0, c(1.0, 0.0)) {
            Ok(p) => p,
            Err(e) => return failure(e),
        };
        let closed = classify(&p).ok().and_then(|v| v.blowup_time).unwrap_or(f64::NAN);
        let ode = integrate_blowup_time(&p, 10.0, 1e12, 1e-12).ok().flatten().unwrap_or(f64::NAN);
        worst_closed = worst_closed.max((closed - expected).abs() / expected);
        worst_ode = worst_ode.max((ode - expected).abs() / expected);
    }
    // seeded random cross-check of the closed-form trajectory
    let mut rng = property_rng(seed, 2);
    let mut worst_traj = 0.0f64;
    for _ in 0..16 {
        let dim = rng.random_range(1..=3usize);
        let alpha = rng.random_range(0.3..3.0);
        let k = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..0.0));
        let t0 = rng.random_range(0.5..2.0);
        let z0 = Complex64::from_polar(rng.random_range(0.2..1.5), rng.random_range(0.0..6.0));
        let Ok(p) = SelfSimilarParams::new(model(dim, alpha, k), t0, z0) else { continue };
        let Ok(v) = classify(&p) else { continue };
        let horizon = v.blowup_time.map_or(5.0, |t| 0.8 * t);
        let times = [0.25 * horizon, 0.5 * horizon, horizon];
        let Ok(num) = integrate_reduced(&p, &times, 1e-12) else {
            worst_traj = f64::INFINITY;
            continue;
        };
        for (t, z) in times.iter().zip(num) {
            let exact = v.trajectory_at(*t).unwrap_or(c(f64::NAN, f64::NAN));
            worst_traj = worst_traj.max((z - exact).norm() / exact.norm());
        }
    }
    let passed = worst_closed <= 1e-10 && worst_ode <= 1e-6 && worst_traj <= 1e-6;
    verdict(
        passed,
        format!("closed form {worst_closed:.2e}, integrator {worst_ode:.2e}, random trajectories {worst_traj:.2e}"),
        &[("closed_form_error", worst_closed), ("integrator_error", worst_ode), ("trajectory_error", worst_traj)],
    )
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Advances `u0` to `t_end` with `n` equal steps of the bare stepper.
fn evolve(u0: &FieldState, m: &ModelParams, t_end: f64, n: usize) -> Result<FieldState, String> {
    let mut st = Stepper::new(&u0.grid, m.alpha, None);
    let mut v = u0.values.clone();
    let dt = t_end / n as f64;
    for _ in 0..n {
        st.advance(&mut v, m.kappa, dt).map_err(|e| e.to_string())?;
    }
    FieldState::new(u0.grid, v, u0.time + t_end).map_err(|e| e.to_string())
}

fn solver_exactness_order() -> Verdict {
    let inner = || -> Result<Verdict, String> {
        let grid = GridSpec::new(1, 40.0, 1024).map_err(|e| e.to_string())?;
        let u0 = FieldState::from_fn(grid, 0.0, |x| free_gaussian(x[0] * x[0], 0.0, 1)).map_err(|e| e.to_string())?;
        let free = model(1, 2.0, c(0.0, 0.0));
        let out = run(&u0, &free, &SolverConfig::new(0.01, 1.0), DiagnosticProbeSet::default()).map_err(|e| e.to_string())?;
        let xs = grid.coordinates();
        let free_err = out
            .final_state
            .values
            .iter()
            .zip(&xs)
            .map(|(v, x)| (v - free_gaussian(x * x, 1.0, 1)).norm())
            .fold(0.0, f64::max);

        // perturbed plane wave; a pure plane wave is reproduced exactly
        let pgrid = GridSpec::new(1, 2.0 * std::f64::consts::PI, 32).map_err(|e| e.to_string())?;
        let m = model(1, 2.0, c(1.0, 0.0));
        let pw = FieldState::from_fn(pgrid, 0.0, |x| c(0.5, 0.0) + c(0.1, 0.0) * Complex64::from_polar(1.0, 2.0 * x[0]))
            .map_err(|e| e.to_string())?;
        let reference = evolve(&pw, &m, 1.0, 6400)?;
        let dts: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
        let mut errs = Vec::new();
        for dt in dts {
            let s = evolve(&pw, &m, 1.0, (1.0 / dt).round() as usize)?;
            errs.push(s.sub(&reference).map_err(|e| e.to_string())?.l2() / reference.l2());
        }
        let slope = loglog_slope(&dts, &errs);
        let passed = free_err <= 1e-8 && (slope - 2.0).abs() <= 0.1;
        Ok(verdict(
            passed,
            format!("free Gaussian sup error {free_err:.2e}; plane-wave slope {slope:.3} (errors {})", sci(&errs)),
            &[("free_error", free_err), ("slope", slope)],
        ))
    };
    inner().unwrap_or_else(failure)
}

fn mass_law() -> Verdict {
    let inner = || -> Result<Verdict, String> {
        let grid = GridSpec::new(1, 40.0, 512).map_err(|e| e.to_string())?;
        let u0 = make_initial(&grid, &gaussian(1.0, 1.0)).map_err(|e| e.to_string())?;
        let real = model(1, 2.0, c(1.0, 0.0));
        let out = run(&u0, &real, &SolverConfig::new(1e-3, 1.0).with_cadence(10), DiagnosticProbeSet::default())
            .map_err(|e| e.to_string())?;
        let m0 = out.trace.rows[0].mass;
        let drift = out
            .trace
            .rows
            .iter()
            .filter(|r| r.t > 0.0)
            .map(|r| (r.mass - m0).abs() / m0 / r.t)
            .fold(0.0, f64::max);

        // amplitude 0.5 keeps the amplifying run well clear of blowup on [0, 1]
        let small = make_initial(&grid, &gaussian(0.5, 1.0)).map_err(|e| e.to_string())?;
        let damped = model(1, 2.0, c(0.0, -1.0));
        let mut mismatches = Vec::new();
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let o = run(&small, &damped, &SolverConfig::new(dt, 1.0), DiagnosticProbeSet::default()).map_err(|e| e.to_string())?;
            if o.status != RunStatus::ReachedTEnd {
                return Ok(verdict(false, format!("dt {dt:e}: {:?}", o.status), &[]));
            }
            mismatches.push(mass_balance_check(&o.trace, &damped).map_err(|e| e.to_string())?.max_mismatch);
        }
        let orders: Vec<f64> = mismatches.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
        let passed = drift <= 1e-10 && min_order >= 1.9;
        Ok(verdict(
            passed,
            format!("real kappa drift {drift:.2e}/unit time; damped mismatch {}, orders {orders:.3?}", sci(&mismatches)),
            &[("drift_per_time", drift), ("min_order", min_order)],
        ))
    };
    inner().unwrap_or_else(failure)
}

fn uniform_blowup() -> Verdict {
    let inner = || -> Result<Verdict, String> {
        let grid = GridSpec::new(1, 2.0 * std::f64::consts::PI, 8).map_err(|e| e.to_string())?;
        let u0 = make_initial(&grid, &InitialDataSpec::PlaneWave { amplitude: c(1.0, 0.0), mode: vec![0] })
            .map_err(|e| e.to_string())?;
        let m = model(1, 2.0, c(0.0, -1.0));
        let mut estimates = Vec::new();
        for floor in [1e-6, 1e-8, 1e-10] {
            let mut cfg = SolverConfig::new(1e-2, 1.0);
            cfg.blowup_dt_floor = floor;
            let out = run(&u0, &m, &cfg, DiagnosticProbeSet::default()).map_err(|e| e.to_string())?;
            if out.status != RunStatus::BlowupDetected {
                return Ok(verdict(false, format!("floor {floor:e}: {:?}", out.status), &[]));
            }
            estimates.push(out.blowup_time_estimate.unwrap_or(f64::NAN));
        }
        let last = *estimates.last().expect("three floors");
        let monotone = estimates.windows(2).all(|w| w[1] >= w[0]);
        let passed = (0.499..=0.5).contains(&last) && monotone;
        Ok(verdict(passed, format!("estimates {estimates:.12?}"), &[("estimate", last)]))
    };
    inner().unwrap_or_else(failure)
}

fn linear_confinement() -> Verdict {
    let inner = || -> Result<Verdict, String> {
        let grid = GridSpec::new(1, 400.0, 4096).map_err(|e| e.to_string())?;
        let u0 = make_initial(&grid, &gaussian(1.0, 1.0)).map_err(|e| e.to_string())?;
        let rep = linear_confinement_check(&u0, &[0.0, 1.0, 2.0, 4.0, 8.0]).map_err(|e| e.to_string())?;
        let passed = rep.max_violation <= 1e-8 && rep.final_exterior_fraction <= 0.25;
        Ok(verdict(
            passed,
            format!("a = {:.4}, max violation {:.2e}, exterior fraction at t=8 {:.3e}", rep.a, rep.max_violation, rep.final_exterior_fraction),
            &[("max_violation", rep.max_violation), ("final_exterior_fraction", rep.final_exterior_fraction)],
        ))
    };
    inner().unwrap_or_else(failure)
}

fn median_radius_law() -> Verdict {
    let inner = || -> Result<Verdict, String> {
        let grid = GridSpec::new(1, 80.0, 2048).map_err(|e| e.to_string())?;
        let u0 = FieldState::from_fn(grid, 0.0, |x| free_gaussian(x[0] * x[0], 0.0, 1)).map_err(|e| e.to_string())?;
        let spectral = Spectral::new(&grid);
        let a = 16.0 * spectral.gradient_norm_sq(&u0.values).sqrt() / u0.l2();
        let bins = RadialBins::new(&grid);
        let times = [0.0, 1.0, 2.0, 4.0];
        let mut worst = 0.0f64;
        let mut radii = Vec::new();
        for &t in &times {
            let u = u0.linear_propagate_with(&spectral, t);
            let r = bins.median_radius(&u.values).map_err(|e| e.to_string())?;
            let expect = 0.674_489_750_196_081_7 * (1.0 + t * t).sqrt();
            worst = worst.max((r - expect).abs() / expect);
            radii.push(r);
        }
        debug_assert!((median_radius(&u0).unwrap_or(0.0) - radii[0]).abs() < 1e-12);
        let bounded = times.iter().zip(&radii).skip(2).all(|(t, r)| *r <= a * t);
        let passed = worst <= 0.01 && bounded;
        Ok(verdict(
            passed,
            format!("radii {radii:.4?}, worst relative error {worst:.2e}, a = {a:.3}, R <= a t at t = 2, 4: {bounded}"),
            &[("worst_relative_error", worst), ("a", a)],
        ))
    };
    inner().unwrap_or_else(failure)
}

fn pseudo_conformal() -> Verdict {
    let inner = || -> Result<Verdict, String> {
        let grid = GridSpec::new(1, 80.0, 4096).map_err(|e| e.to_string())?;
        let u0 = make_initial(&grid, &gaussian(0.1, 1.0)).map_err(|e| e.to_string())?;
        let free = model(1, 3.0, c(0.0, 0.0));
        let nonlinear = model(1, 3.0, c(0.0, -1.0));
        let disc = |m: &ModelParams, dt: f64| {
            equivalence_experiment(&u0, m, &SolverConfig::new(dt, 0.5), 0.5).map(|r| r.l2_discrepancy).map_err(|e| e.to_string())
        };
        let (free_d, fine, coarse, half) = std::thread::scope(|s| {
            let a = s.spawn(|| disc(&free, 1e-3));
            let b = s.spawn(|| disc(&nonlinear, 1e-4));
            let c2 = s.spawn(|| disc(&nonlinear, 2e-3));
            let d = disc(&nonlinear, 1e-3);
            (a.join().expect("worker"), b.join().expect("worker"), c2.join().expect("worker"), d)
        });
        let (free_d, fine, coarse, half) = (free_d?, fine?, coarse?, half?);
        let ratio = coarse / half;
        let passed = free_d <= 1e-8 && fine <= 1e-2 && (3.5..=4.5).contains(&ratio);
        Ok(verdict(
            passed,
            format!("free {free_d:.2e}; nonlinear {fine:.2e} at dt=1e-4; halving ratio {ratio:.3} ({coarse:.2e} -> {half:.2e})"),
            &[("free_discrepancy", free_d), ("nonlinear_discrepancy", fine), ("halving_ratio", ratio)],
        ))
    };
    inner().unwrap_or_else(failure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_matches_id_or_name() {
        assert!(selects(None, 3, "x"));
        assert!(selects(Some("7"), 7, "localized-mass"));
        assert!(!selects(Some("7"), 1, "exponent-table"));
        assert!(selects(Some("mass"), 4, "mass-law"));
        assert!(!selects(Some("mass"), 5, "uniform-blowup"));
    }

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 2, 13] {
            let r = run_one(id, 0).unwrap();
            assert!(r.passed, "{}", r.line());
        }
    }

    #[test]
    fn report_lines_and_csv() {
        let rep = run_all(Some("exponent"), 3);
        assert_eq!(rep.results.len(), 1);
        assert!(rep.results[0].line().starts_with("PASS  1 exponent-table"));
        assert!(rep.to_csv().lines().count() == 2);
        assert!(rep.substitution_note.contains("stand-ins"));
    }

    #[test]
    fn loglog_slope_exact_power() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
