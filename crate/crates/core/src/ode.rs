//! Adaptive Dormand–Prince 5(4) integrator for small real ODE systems.
//!
//! Used as the independent numerical route against the closed-form reduced
//! dynamics; nothing in here knows about the equation being checked.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, h_init: 1e-4, h_min: 1e-300, max_steps: 2_000_000 }
    }
}

/// Result of [`Dopri5::solve`].
#[derive(Debug, Clone)]
pub struct OdeSolution {
    /// States at the requested output times that were reached.
    pub outputs: Vec<(f64, Vec<f64>)>,
    pub t_final: f64,
    pub y_final: Vec<f64>,
    /// True when the stop predicate fired before the last output time.
    pub stopped: bool,
    pub steps: usize,
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `(t0, y0)`, landing exactly on each of
    /// the increasing `t_out` times. Integration halts early once `stop(y)`
    /// returns true for an accepted state.
    pub fn solve<F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t_out: &[f64],
        mut stop: S,
    ) -> Result<OdeSolution, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        S: FnMut(&[f64]) -> bool,
    {
        let n = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut h = self.h_init;
        let mut outputs = Vec::with_capacity(t_out.len());
        let mut steps = 0usize;
        f(t, &y, &mut k[0]);

        for &target in t_out {
            while t < target {
                if steps >= self.max_steps {
                    return Err(OdeError::TooManySteps(self.max_steps));
                }
                let mut h_try = h.min(target - t);
                let landing = h_try >= target - t;
                if landing {
                    h_try = target - t;
                }
                self.stages(&mut f, t, &y, h_try, &mut k, &mut tmp, &mut y_new);
                let mut err = 0.0f64;
                for i in 0..n {
                    let e = h_try
                        * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i]
                            + E6 * k[5][i]
                            + E7 * k[6][i]);
                    let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                    err = err.max((e / sc).abs());
                }
                if !err.is_finite() {
                    err = f64::INFINITY;
                }
                if err <= 1.0 {
                    t = if landing { target } else { t + h_try };
                    std::mem::swap(&mut y, &mut y_new);
                    // FSAL: last stage is f at the new point
                    let (first, rest) = k.split_at_mut(1);
                    first[0].copy_from_slice(&rest[5]);
                    steps += 1;
                    if y.iter().any(|v| !v.is_finite()) {
                        return Err(OdeError::NonFinite(t));
                    }
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !landing {
                        h = h_try * factor;
                    } else {
                        h = h.max(h_try * factor);
                    }
                    if stop(&y) {
                        return Ok(OdeSolution { outputs, t_final: t, y_final: y, stopped: true, steps });
                    }
                } else {
                    let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 1.0) } else { 0.1 };
                    h = h_try * factor;
                    if h < self.h_min || t + h == t {
                        return Err(OdeError::StepUnderflow { t, h });
                    }
                }
            }
            outputs.push((t, y.clone()));
        }
        Ok(OdeSolution { outputs, t_final: t, y_final: y, stopped: false, steps })
    }

    #[allow(clippy::too_many_arguments)]
    fn stages<F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64],
        h: f64,
        k: &mut [Vec<f64>],
        tmp: &mut [f64],
        y_new: &mut [f64],
    ) where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        f(t + C2 * h, tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * h, tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * h, tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * h, tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        f(t + h, tmp, &mut k[5]);
        for i in 0..n {
            y_new[i] = y[i]
                + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f(t + h, y_new, &mut k[6]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let sol = Dopri5::default()
            .solve(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], &[1.0, 2.0], |_| false)
            .unwrap();
        assert!((sol.outputs[0].1[0] - 1f64.exp()).abs() < 1e-11);
        assert!((sol.outputs[1].1[0] - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator() {
        let sol = Dopri5::default()
            .solve(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[1.0, 0.0],
                &[std::f64::consts::PI],
                |_| false,
            )
            .unwrap();
        assert!((sol.y_final[0] + 1.0).abs() < 1e-10);
        assert!(sol.y_final[1].abs() < 1e-10);
    }

    #[test]
    fn stops_on_predicate() {
        // y' = y², y(0) = 1 blows up at t = 1
        let sol = Dopri5::default()
            .solve(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], &[2.0], |y| y[0] > 1e10)
            .unwrap();
        assert!(sol.stopped);
        assert!((sol.t_final - 1.0).abs() < 1e-8);
    }
}
