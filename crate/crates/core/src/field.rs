//! Periodic-box discretisation of `R^N` (N = 1, 2, 3).
//!
//! The box is `[-L/2, L/2)^N` sampled at `M` equally spaced nodes per axis,
//! node `j` sitting at `x_j = -L/2 + j L/M`; the box centre is node `M/2`.
//! Fields are stored row-major, last axis fastest. Fourier coefficients use
//! the unnormalised forward DFT, wavenumbers `k = 2πm/L` with
//! `m ∈ [-M/2, M/2)`.

use crate::exponents::ModelParams;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("dimension must be 1, 2 or 3 (got {0})")]
    BadDimension(usize),
    #[error("points per axis must be a power of two >= 8 (got {0})")]
    BadPoints(usize),
    #[error("box length must be finite and positive (got {0})")]
    BadLength(f64),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("gaussian width must be positive (got {0})")]
    BadWidth(f64),
    #[error("mode index {index} outside [-{half}, {half})")]
    ModeOutOfRange { index: i64, half: i64 },
    #[error("vector has {got} components, grid has dimension {expected}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("grids differ: {0}")]
    GridMismatch(String),
    #[error("initial data file: {0}")]
    File(#[from] crate::checkpoint::CheckpointError),
    #[error("lp norm needs p >= 1 (got {0})")]
    BadExponent(f64),
}

/// Isotropic periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub box_length: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, box_length: f64, points: usize) -> Result<Self, FieldError> {
        let g = Self { dim, box_length, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(1..=3).contains(&self.dim) {
            return Err(FieldError::BadDimension(self.dim));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(FieldError::BadPoints(self.points));
        }
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return Err(FieldError::BadLength(self.box_length));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of node `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coordinate(j)).collect()
    }

    /// Signed mode index of FFT bin `j`.
    pub fn mode_index(&self, j: usize) -> i64 {
        let m = self.points as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode_index(j) as f64 / self.box_length
    }

    /// Wavenumber used for derivatives: zero at the Nyquist bin.
    pub fn derivative_wavenumber(&self, j: usize) -> f64 {
        if j == self.points / 2 {
            0.0
        } else {
            self.wavenumber(j)
        }
    }

    /// Multi-index of flat index `idx`, first axis first.
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    /// `|x|²` of every node, measured from the box centre.
    pub fn radius_squared(&self) -> Vec<f64> {
        let xs = self.coordinates();
        self.map_nodes(|ix| ix.iter().map(|&j| xs[j] * xs[j]).sum())
    }

    /// `|k|²` of every Fourier bin (Nyquist included).
    pub fn wavenumber_squared(&self) -> Vec<f64> {
        let ks: Vec<f64> = (0..self.points).map(|j| self.wavenumber(j)).collect();
        self.map_nodes(|ix| ix.iter().map(|&j| ks[j] * ks[j]).sum())
    }

    /// `|k|²` with the Nyquist components dropped.
    pub fn derivative_wavenumber_squared(&self) -> Vec<f64> {
        let ks: Vec<f64> = (0..self.points).map(|j| self.derivative_wavenumber(j)).collect();
        self.map_nodes(|ix| ix.iter().map(|&j| ks[j] * ks[j]).sum())
    }

    /// Evaluates `f` at every multi-index in storage order.
    pub fn map_nodes<T, F: FnMut(&[usize]) -> T>(&self, mut f: F) -> Vec<T> {
        let m = self.points;
        let mut out = Vec::with_capacity(self.len());
        match self.dim {
            1 => (0..m).for_each(|i| out.push(f(&[i]))),
            2 => {
                for i in 0..m {
                    for j in 0..m {
                        out.push(f(&[i, j]));
                    }
                }
            }
            _ => {
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            out.push(f(&[i, j, k]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Same grid with box length scaled by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self, FieldError> {
        GridSpec::new(self.dim, self.box_length * factor, self.points)
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && (self.box_length - other.box_length).abs() <= 1e-12 * self.box_length
    }
}

/// N-dimensional FFT over a grid, with cached plans.
pub struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
    k2_deriv: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
            k2: grid.wavenumber_squared(),
            k2_deriv: grid.derivative_wavenumber_squared(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.grid.points;
        debug_assert_eq!(data.len(), self.grid.len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // last axis: contiguous rows
        fft.process_with_scratch(data, &mut scratch);
        if self.grid.dim == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for axis in 0..self.grid.dim - 1 {
            let stride = m.pow((self.grid.dim - 1 - axis) as u32);
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + i * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalised forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, including the `1/M^N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// `e^{itΔ}` in place: each mode picks up `e^{-i|k|²t}`.
    pub fn propagate_in_place(&self, data: &mut [Complex64], dt: f64) {
        if dt == 0.0 {
            return;
        }
        self.forward(data);
        for (v, &k2) in data.iter_mut().zip(&self.k2) {
            *v *= Complex64::from_polar(1.0, -k2 * dt);
        }
        self.inverse(data);
    }

    /// Multiplier table `e^{-i|k|²t}` for repeated propagation.
    pub fn propagator(&self, dt: f64) -> Vec<Complex64> {
        self.k2.iter().map(|&k2| Complex64::from_polar(1.0, -k2 * dt)).collect()
    }

    /// `‖∇u‖²` from Fourier coefficients.
    pub fn gradient_norm_sq(&self, values: &[Complex64]) -> f64 {
        let mut hat = values.to_vec();
        self.forward(&mut hat);
        self.gradient_norm_sq_hat(&hat)
    }

    pub fn gradient_norm_sq_hat(&self, hat: &[Complex64]) -> f64 {
        let s: f64 = hat.iter().zip(&self.k2_deriv).map(|(v, &k2)| k2 * v.norm_sqr()).sum();
        s * self.grid.cell_volume() / self.grid.len() as f64
    }

    /// Fourier-side `‖u‖²`.
    pub fn l2_sq_hat(&self, hat: &[Complex64]) -> f64 {
        let s: f64 = hat.iter().map(|v| v.norm_sqr()).sum();
        s * self.grid.cell_volume() / self.grid.len() as f64
    }

    /// Spectral gradient, one component per axis.
    pub fn gradient(&self, values: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut hat = values.to_vec();
        self.forward(&mut hat);
        let kd: Vec<f64> = (0..self.grid.points).map(|j| self.grid.derivative_wavenumber(j)).collect();
        (0..self.grid.dim)
            .map(|axis| {
                let mut comp: Vec<Complex64> = self
                    .grid
                    .map_nodes(|ix| kd[ix[axis]])
                    .into_iter()
                    .zip(&hat)
                    .map(|(k, v)| Complex64::new(0.0, k) * v)
                    .collect();
                self.inverse(&mut comp);
                comp
            })
            .collect()
    }

    /// Fraction of spectral energy in the top octave (`|m| ≥ M/4` on any axis).
    pub fn top_octave_fraction(&self, values: &[Complex64]) -> f64 {
        let mut hat = values.to_vec();
        self.forward(&mut hat);
        let quarter = (self.grid.points / 4) as i64;
        let grid = self.grid;
        let high = grid.map_nodes(|ix| ix.iter().any(|&j| grid.mode_index(j).abs() >= quarter));
        let total: f64 = hat.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let top: f64 = hat.iter().zip(high).filter(|(_, h)| *h).map(|(v, _)| v.norm_sqr()).sum();
        top / total
    }
}

/// Quadrature-based norms of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub weighted_l2: f64,
    pub h1: f64,
    pub grad_l2: f64,
}

/// Initial data recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    /// `A e^{-|x-x₀|²/(2σ²)}`.
    Gaussian {
        amplitude: Complex64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// `A e^{i k·x}` with `k = 2πm/L`; `m = 0` gives uniform data.
    PlaneWave { amplitude: Complex64, mode: Vec<i64> },
    /// `A e^{-|x|²/(2σ²)} e^{i|x|²/4}`.
    QuadraticPhaseGaussian { amplitude: Complex64, width: f64 },
    /// A checkpoint file on the same grid.
    File { path: PathBuf },
}

/// Field samples on a grid at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl FieldState {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, time: f64) -> Result<Self, FieldError> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: GridSpec, time: f64, f: F) -> Result<Self, FieldError> {
        grid.validate()?;
        let xs = grid.coordinates();
        let mut x = [0.0; 3];
        let values = grid.map_nodes(|ix| {
            for (a, &j) in ix.iter().enumerate() {
                x[a] = xs[j];
            }
            f(&x[..grid.dim])
        });
        Ok(Self { grid, values, time })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `e^{i dt Δ}` applied exactly on the grid; time advances by `dt`.
    pub fn linear_propagate(&self, dt: f64) -> FieldState {
        self.linear_propagate_with(&Spectral::new(&self.grid), dt)
    }

    pub fn linear_propagate_with(&self, spectral: &Spectral, dt: f64) -> FieldState {
        let mut values = self.values.clone();
        spectral.propagate_in_place(&mut values, dt);
        FieldState { grid: self.grid, values, time: self.time + dt }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `∫|u|^p`.
    pub fn lp_integral(&self, p: f64) -> f64 {
        self.values.iter().map(|v| v.norm_sqr().powf(0.5 * p)).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn lp(&self, p: f64) -> Result<f64, FieldError> {
        if !(p >= 1.0) {
            return Err(FieldError::BadExponent(p));
        }
        if p.is_infinite() {
            return Ok(self.linf());
        }
        Ok(self.lp_integral(p).powf(1.0 / p))
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn weighted_l2(&self) -> f64 {
        let r2 = self.grid.radius_squared();
        (self.values.iter().zip(&r2).map(|(v, r)| r * v.norm_sqr()).sum::<f64>() * self.grid.cell_volume())
            .sqrt()
    }

    pub fn gradient_norm(&self) -> f64 {
        Spectral::new(&self.grid).gradient_norm_sq(&self.values).sqrt()
    }

    pub fn norms(&self) -> Norms {
        self.norms_with(&Spectral::new(&self.grid))
    }

    pub fn norms_with(&self, spectral: &Spectral) -> Norms {
        let l2 = self.l2();
        let grad = spectral.gradient_norm_sq(&self.values).sqrt();
        Norms {
            l2,
            linf: self.linf(),
            weighted_l2: self.weighted_l2(),
            h1: (l2 * l2 + grad * grad).sqrt(),
            grad_l2: grad,
        }
    }

    fn check_same_grid(&self, other: &FieldState) -> Result<(), FieldError> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(FieldError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }

    pub fn sub(&self, other: &FieldState) -> Result<FieldState, FieldError> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(FieldState { grid: self.grid, values, time: self.time })
    }

    /// Relative L² distance `‖self - other‖/‖other‖`.
    pub fn relative_l2_distance(&self, other: &FieldState) -> Result<f64, FieldError> {
        let d = self.sub(other)?.l2();
        let n = other.l2();
        Ok(if n == 0.0 { d } else { d / n })
    }

    /// Mass outside the ball `|x| < L/2 - margin`, as a fraction of the total.
    pub fn boundary_mass_fraction(&self, margin: f64) -> f64 {
        let r2 = self.grid.radius_squared();
        let rmax = 0.5 * self.grid.box_length - margin;
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outer: f64 = self
            .values
            .iter()
            .zip(&r2)
            .filter(|(_, &r)| r.sqrt() >= rmax)
            .map(|(v, _)| v.norm_sqr())
            .sum();
        outer / total
    }

    /// Trigonometric interpolation onto another grid of the same dimension.
    /// Target nodes outside the source box are evaluated on the periodic
    /// extension.
    pub fn resample(&self, target: &GridSpec) -> Result<FieldState, FieldError> {
        self.resample_with(target, true)
    }

    /// As [`resample`](Self::resample), but target nodes outside the source
    /// box get zero when `periodic` is false (for data negligible at the edge).
    pub fn resample_with(&self, target: &GridSpec, periodic: bool) -> Result<FieldState, FieldError> {
        if target.dim != self.grid.dim {
            return Err(FieldError::GridMismatch(format!("dim {} vs {}", self.grid.dim, target.dim)));
        }
        target.validate()?;
        let spectral = Spectral::new(&self.grid);
        let mut hat = self.values.clone();
        spectral.forward(&mut hat);
        let scale = 1.0 / self.grid.len() as f64;
        hat.iter_mut().for_each(|v| *v *= scale);
        let ms = self.grid.points;
        let mt = target.points;
        // basis[t][j]: value at target node t of source mode j, origin at -L/2
        let basis: Vec<Vec<Complex64>> = target
            .coordinates()
            .iter()
            .map(|&x| {
                let xi = x + 0.5 * self.grid.box_length;
                if !periodic && !(0.0..self.grid.box_length).contains(&xi) {
                    return vec![Complex64::new(0.0, 0.0); ms];
                }
                (0..ms)
                    .map(|j| {
                        if j == ms / 2 {
                            // symmetric Nyquist term keeps real data real
                            Complex64::new((PI * ms as f64 * xi / self.grid.box_length).cos(), 0.0)
                        } else {
                            Complex64::from_polar(1.0, self.grid.wavenumber(j) * xi)
                        }
                    })
                    .collect()
            })
            .collect();

        // contract one axis at a time, last axis first
        let dim = self.grid.dim;
        let mut data = hat;
        let mut shape = vec![ms; dim];
        for axis in (0..dim).rev() {
            let outer: usize = shape[..axis].iter().product();
            let inner: usize = shape[axis + 1..].iter().product();
            let mut next = vec![Complex64::new(0.0, 0.0); outer * mt * inner];
            for o in 0..outer {
                for t in 0..mt {
                    let row = &basis[t];
                    for i in 0..inner {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (j, b) in row.iter().enumerate() {
                            acc += b * data[(o * ms + j) * inner + i];
                        }
                        next[(o * mt + t) * inner + i] = acc;
                    }
                }
            }
            data = next;
            shape[axis] = mt;
        }
        Ok(FieldState { grid: *target, values: data, time: self.time })
    }
}

fn check_components(grid: &GridSpec, got: usize) -> Result<(), FieldError> {
    if got != grid.dim {
        Err(FieldError::ComponentMismatch { expected: grid.dim, got })
    } else {
        Ok(())
    }
}

/// Samples an initial-data recipe at the grid nodes, time 0.
pub fn make_initial(grid: &GridSpec, spec: &InitialDataSpec) -> Result<FieldState, FieldError> {
    grid.validate()?;
    match spec {
        InitialDataSpec::Gaussian { amplitude, width, center } => {
            if !(*width > 0.0) {
                return Err(FieldError::BadWidth(*width));
            }
            let center = if center.is_empty() { vec![0.0; grid.dim] } else { center.clone() };
            check_components(grid, center.len())?;
            let inv = 1.0 / (2.0 * width * width);
            FieldState::from_fn(*grid, 0.0, |x| {
                let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum();
                amplitude * (-r2 * inv).exp()
            })
        }
        InitialDataSpec::PlaneWave { amplitude, mode } => {
            check_components(grid, mode.len())?;
            let half = (grid.points / 2) as i64;
            if let Some(&bad) = mode.iter().find(|&&m| m < -half || m >= half) {
                return Err(FieldError::ModeOutOfRange { index: bad, half });
            }
            let k: Vec<f64> = mode.iter().map(|&m| 2.0 * PI * m as f64 / grid.box_length).collect();
            FieldState::from_fn(*grid, 0.0, |x| {
                let phase: f64 = x.iter().zip(&k).map(|(a, b)| a * b).sum();
                amplitude * Complex64::from_polar(1.0, phase)
            })
        }
        InitialDataSpec::QuadraticPhaseGaussian { amplitude, width } => {
            if !(*width > 0.0) {
                return Err(FieldError::BadWidth(*width));
            }
            let inv = 1.0 / (2.0 * width * width);
            FieldState::from_fn(*grid, 0.0, |x| {
                let r2: f64 = x.iter().map(|a| a * a).sum();
                amplitude * Complex64::from_polar((-r2 * inv).exp(), 0.25 * r2)
            })
        }
        InitialDataSpec::File { path } => {
            let bytes = std::fs::read(path).map_err(crate::checkpoint::CheckpointError::Io)?;
            let (file_grid, values) = crate::checkpoint::decode(&bytes)?;
            if file_grid.dim != grid.dim || file_grid.points != grid.points {
                return Err(FieldError::LengthMismatch { expected: grid.len(), got: values.len() });
            }
            if !file_grid.same_as(grid) {
                return Err(FieldError::GridMismatch(format!("{file_grid:?} vs {grid:?}")));
            }
            FieldState::new(*grid, values, 0.0)
        }
    }
}

/// Model plus grid, convenient for sidecar metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub time: f64,
    pub model: ModelParams,
    pub grid: GridSpec,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g1(l: f64, m: usize) -> GridSpec {
        GridSpec::new(1, l, m).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Free Schrödinger evolution of e^{-|x|²/4}: (1+it)^{-N/2} e^{-|x|²/(4(1+it))}
    fn free_gaussian(x2: f64, t: f64, dim: usize) -> Complex64 {
        let z = c(1.0, t);
        z.powf(-(dim as f64) / 2.0) * (-x2 / (4.0 * z)).exp()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(4, 1.0, 16).is_err());
        assert!(GridSpec::new(1, 1.0, 12).is_err());
        assert!(GridSpec::new(1, 1.0, 4).is_err());
        assert!(GridSpec::new(1, -1.0, 16).is_err());
        let g = g1(2.0 * PI, 8);
        assert_eq!(g.mode_index(4), -4);
        assert_eq!(g.derivative_wavenumber(4), 0.0);
        assert_eq!(g.coordinate(4), 0.0);
    }

    #[test]
    fn propagate_zero_is_identity() {
        let g = g1(20.0, 64);
        let u = make_initial(&g, &InitialDataSpec::Gaussian { amplitude: c(1.0, 0.5), width: 1.0, center: vec![] })
            .unwrap();
        let v = u.linear_propagate(0.0);
        assert_eq!(u.values, v.values);
    }

    #[test]
    fn free_gaussian_closed_form() {
        let g = g1(40.0, 1024);
        let u0 = FieldState::from_fn(g, 0.0, |x| c((-x[0] * x[0] / 4.0).exp(), 0.0)).unwrap();
        let u1 = u0.linear_propagate(1.0);
        let xs = g.coordinates();
        let err = u1
            .values
            .iter()
            .zip(&xs)
            .map(|(v, x)| (v - free_gaussian(x * x, 1.0, 1)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "sup error {err}");
        assert!((u1.values[512].norm() - 2f64.powf(-0.25)).abs() < 1e-8);
    }

    #[test]
    fn free_gaussian_large_box_three_times() {
        // box ≥ 40 × spreading width √(1+t²) at the final time
        let g = g1(40.0 * 17f64.sqrt(), 4096);
        let u0 = FieldState::from_fn(g, 0.0, |x| c((-x[0] * x[0] / 4.0).exp(), 0.0)).unwrap();
        let sp = Spectral::new(&g);
        let xs = g.coordinates();
        for t in [1.0, 2.0, 4.0] {
            let u = u0.linear_propagate_with(&sp, t);
            let err = u
                .values
                .iter()
                .zip(&xs)
                .map(|(v, x)| (v - free_gaussian(x * x, t, 1)).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "t = {t}: {err}");
        }
    }

    #[test]
    fn free_gaussian_two_dimensions() {
        let g = GridSpec::new(2, 40.0, 128).unwrap();
        let u0 = FieldState::from_fn(g, 0.0, |x| c((-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp(), 0.0)).unwrap();
        let u = u0.linear_propagate(0.5);
        let r2 = g.radius_squared();
        let err = u.values.iter().zip(&r2).map(|(v, r)| (v - free_gaussian(*r, 0.5, 2)).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn propagate_back_and_forth() {
        let g = GridSpec::new(2, 10.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals = (0..g.len()).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let u = FieldState::new(g, vals, 0.0).unwrap();
        let back = u.linear_propagate(0.37).linear_propagate(-0.37);
        let err = u.sub(&back).unwrap().linf();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn gradient_examples() {
        let g = g1(2.0 * PI, 64);
        let flat = FieldState::new(g, vec![c(2.0, -1.0); 64], 0.0).unwrap();
        assert!(flat.gradient_norm() < 1e-13);
        let wave = make_initial(&g, &InitialDataSpec::PlaneWave { amplitude: c(1.0, 0.0), mode: vec![4] }).unwrap();
        let gn = wave.gradient_norm();
        assert!((gn * gn - 16.0 * wave.mass()).abs() < 1e-10);
        let g = g1(40.0, 1024);
        let gauss = FieldState::from_fn(g, 0.0, |x| c((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let gn = gauss.gradient_norm();
        assert!((gn * gn - (PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn gradient_components_match_norm() {
        let g = GridSpec::new(2, 20.0, 64).unwrap();
        let u = FieldState::from_fn(g, 0.0, |x| c((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), x[0] * 0.1)).unwrap();
        let u = FieldState::from_fn(g, 0.0, |x| {
            let r2 = x[0] * x[0] + 2.0 * x[1] * x[1];
            c((-r2).exp(), 0.0) * Complex64::from_polar(1.0, 0.3 * x[0])
        })
        .map(|v| FieldState { time: u.time, ..v })
        .unwrap();
        let sp = Spectral::new(&g);
        let comps = sp.gradient(&u.values);
        let s: f64 = comps.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume();
        assert!((s - sp.gradient_norm_sq(&u.values)).abs() < 1e-10 * s);
    }

    #[test]
    fn norm_examples() {
        let g = g1(2.0 * PI, 32);
        let one = FieldState::new(g, vec![c(1.0, 0.0); 32], 0.0).unwrap();
        assert!((one.l2() - (2.0 * PI).sqrt()).abs() < 1e-13);
        let g = g1(40.0, 1024);
        let gauss = FieldState::from_fn(g, 0.0, |x| c((-x[0] * x[0]).exp(), 0.0)).unwrap();
        assert!((gauss.lp_integral(4.0) - PI.sqrt() / 2.0).abs() < 1e-10);
        let w = ((PI / 2.0).sqrt() / 4.0).sqrt();
        assert!((gauss.weighted_l2() - w).abs() < 1e-8);
        let n = gauss.norms();
        assert!((n.h1 * n.h1 - n.l2 * n.l2 - n.grad_l2 * n.grad_l2).abs() < 1e-12);
        assert!((n.linf - 1.0).abs() < 1e-15);
        assert!(gauss.lp(0.5).is_err());
        assert_eq!(gauss.lp(f64::INFINITY).unwrap(), n.linf);
    }

    #[test]
    fn initial_data_examples() {
        let g = g1(2.0 * PI, 64);
        let gauss = make_initial(&g, &InitialDataSpec::Gaussian { amplitude: c(1.0, 0.0), width: 1.0, center: vec![0.0] })
            .unwrap();
        assert_eq!(gauss.values[32], c(1.0, 0.0));
        let wave = make_initial(&g, &InitialDataSpec::PlaneWave { amplitude: c(1.0, 0.0), mode: vec![3] }).unwrap();
        for (v, x) in wave.values.iter().zip(g.coordinates()) {
            assert!((v - Complex64::from_polar(1.0, 3.0 * x)).norm() < 1e-13);
        }
        assert!((wave.l2() - (2.0 * PI).sqrt()).abs() < 1e-12);

        let g = g1(16.0, 64); // node 40 sits at x = 2
        let q = make_initial(&g, &InitialDataSpec::QuadraticPhaseGaussian { amplitude: c(1.0, 0.0), width: 1.0 })
            .unwrap();
        assert_eq!(g.coordinate(40), 2.0);
        assert!((q.values[40] - Complex64::from_polar((-2.0f64).exp(), 1.0)).norm() < 1e-15);

        assert!(matches!(
            make_initial(&g, &InitialDataSpec::Gaussian { amplitude: c(1.0, 0.0), width: 0.0, center: vec![] }),
            Err(FieldError::BadWidth(_))
        ));
        assert!(matches!(
            make_initial(&g, &InitialDataSpec::PlaneWave { amplitude: c(1.0, 0.0), mode: vec![32] }),
            Err(FieldError::ModeOutOfRange { .. })
        ));
        assert!(make_initial(&g, &InitialDataSpec::PlaneWave { amplitude: c(1.0, 0.0), mode: vec![-32] }).is_ok());
        assert!(matches!(
            make_initial(&g, &InitialDataSpec::PlaneWave { amplitude: c(1.0, 0.0), mode: vec![1, 1] }),
            Err(FieldError::ComponentMismatch { .. })
        ));
    }

    #[test]
    fn resample_is_spectrally_exact() {
        let g = g1(40.0, 256);
        let u = FieldState::from_fn(g, 0.0, |x| c((-x[0] * x[0] / 2.0).exp(), 0.0) * Complex64::from_polar(1.0, 0.5 * x[0]))
            .unwrap();
        let target = g1(20.0, 128);
        let r = u.resample(&target).unwrap();
        let direct = FieldState::from_fn(target, 0.0, |x| {
            c((-x[0] * x[0] / 2.0).exp(), 0.0) * Complex64::from_polar(1.0, 0.5 * x[0])
        })
        .unwrap();
        assert!(r.sub(&direct).unwrap().linf() < 1e-12);

        let g2 = GridSpec::new(2, 30.0, 64).unwrap();
        let f = |x: &[f64]| c((-(x[0] * x[0] + x[1] * x[1]) / 3.0).exp(), 0.0);
        let u2 = FieldState::from_fn(g2, 0.0, f).unwrap();
        let t2 = GridSpec::new(2, 15.0, 32).unwrap();
        let r2 = u2.resample(&t2).unwrap();
        let d2 = FieldState::from_fn(t2, 0.0, f).unwrap();
        assert!(r2.sub(&d2).unwrap().linf() < 1e-12);
    }

    #[test]
    fn zero_extended_resample_onto_larger_box() {
        let f = |x: &[f64]| c((-x[0] * x[0] / 2.0).exp(), 0.0);
        let u = FieldState::from_fn(g1(40.0, 512), 0.0, f).unwrap();
        let big = g1(80.0, 512);
        let r = u.resample_with(&big, false).unwrap();
        let direct = FieldState::from_fn(big, 0.0, f).unwrap();
        assert!(r.sub(&direct).unwrap().linf() < 1e-12);
        // periodic extension puts a copy at the new box edge
        let p = u.resample(&big).unwrap();
        assert!((p.values[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn top_octave_of_smooth_data_is_tiny() {
        let g = g1(40.0, 512);
        let u = FieldState::from_fn(g, 0.0, |x| c((-x[0] * x[0] / 2.0).exp(), 0.0)).unwrap();
        assert!(Spectral::new(&g).top_octave_fraction(&u.values) < 1e-8);
    }

    fn random_field(dim: usize, seed: u64) -> FieldState {
        let g = GridSpec::new(dim, 7.0, if dim == 3 { 8 } else { 16 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..g.len()).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        FieldState::new(g, vals, 0.0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn parseval(dim in 1usize..4, seed in any::<u64>()) {
            let u = random_field(dim, seed);
            let sp = Spectral::new(&u.grid);
            let mut hat = u.values.clone();
            sp.forward(&mut hat);
            prop_assert!((sp.l2_sq_hat(&hat) - u.mass()).abs() < 1e-12 * u.mass());
        }

        #[test]
        fn propagation_is_unitary_group(dim in 1usize..4, seed in any::<u64>(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
            let u = random_field(dim, seed);
            let sp = Spectral::new(&u.grid);
            let a = u.linear_propagate_with(&sp, t1).linear_propagate_with(&sp, t2);
            let b = u.linear_propagate_with(&sp, t1 + t2);
            prop_assert!((a.mass() - u.mass()).abs() < 1e-12 * u.mass());
            prop_assert!(a.sub(&b).unwrap().l2() < 1e-12 * u.l2());
            let g0 = sp.gradient_norm_sq(&u.values);
            let g1 = sp.gradient_norm_sq(&a.values);
            prop_assert!((g0 - g1).abs() < 1e-12 * g0);
        }
    }
}
