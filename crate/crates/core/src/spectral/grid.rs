use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[x_min, x_max)` with its ε-scaled momentum dual.
///
/// Momenta are `k_j = 2π ε j / L` for `j = −n/2 .. n/2 − 1`. Forward and
/// inverse FFT plans are shared by every function on the grid.
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    epsilon: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("x_min", &self.x_min)
            .field("x_max", &self.x_max)
            .field("n", &self.n)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize, epsilon: f64) -> Result<Arc<Self>> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Config(format!("bad domain [{x_min}, {x_max}]")));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            x_min,
            x_max,
            n,
            epsilon,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn with_points(&self, n: usize) -> Result<Arc<Self>> {
        Self::new(self.x_min, self.x_max, n, self.epsilon)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Arc<Self>> {
        Self::new(self.x_min, self.x_max, self.n, epsilon)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.epsilon / self.length()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Momentum at ascending index `a`, i.e. `j = a − n/2`.
    pub fn k(&self, a: usize) -> f64 {
        (a as f64 - (self.n / 2) as f64) * self.dk()
    }

    pub fn ks(&self) -> Vec<f64> {
        (0..self.n).map(|a| self.k(a)).collect()
    }

    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64 * self.dk()
    }

    /// Signed mode number of FFT slot `m`; the Nyquist slot maps to `−n/2`.
    pub fn mode(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Unscaled angular wavenumber `2π j / L` of FFT slot `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(m) as f64 / self.length()
    }

    pub fn forward_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.forward
    }

    pub fn inverse_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inverse
    }

    /// Unnormalized forward DFT in place.
    pub fn fft(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Unnormalized inverse DFT in place.
    pub fn ifft(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n
            && self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.epsilon == other.epsilon
    }

    pub fn same_domain(&self, other: &Grid1D) -> bool {
        self.x_min == other.x_min && self.x_max == other.x_max
    }

    pub fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Position,
    Momentum,
}

/// Complex samples on a grid, in position or momentum representation.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<Grid1D>,
    space: Space,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid1D>, space: Space, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid,
            space,
            values,
        })
    }

    pub fn zeros(grid: &Arc<Grid1D>, space: Space) -> Self {
        Self {
            grid: grid.clone(),
            space,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    /// Samples `f` at the grid coordinates of `space`.
    pub fn from_fn(grid: &Arc<Grid1D>, space: Space, f: impl Fn(f64) -> Complex64) -> Self {
        let values = match space {
            Space::Position => (0..grid.n()).map(|i| f(grid.x(i))).collect(),
            Space::Momentum => (0..grid.n()).map(|a| f(grid.k(a))).collect(),
        };
        Self {
            grid: grid.clone(),
            space,
            values,
        }
    }

    pub fn from_real(grid: &Arc<Grid1D>, space: Space, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, space, |s| Complex64::new(f(s), 0.0))
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinates matching the samples: x for position, k for momentum.
    pub fn coords(&self) -> Vec<f64> {
        match self.space {
            Space::Position => self.grid.xs(),
            Space::Momentum => self.grid.ks(),
        }
    }

    /// Quadrature weight: dx or dk.
    pub fn weight(&self) -> f64 {
        match self.space {
            Space::Position => self.grid.dx(),
            Space::Momentum => self.grid.dk(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.weight()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest modulus among the two end samples.
    pub fn boundary_max(&self) -> f64 {
        self.values[0]
            .norm()
            .max(self.values[self.len() - 1].norm())
    }

    pub fn is_exact_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.space != other.space {
            return Err(Error::GridMismatch("position/momentum mismatch".into()));
        }
        Ok(())
    }

    /// `⟨self, other⟩ = Σ conj(self)·other · weight`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.weight())
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.weight()).sqrt())
    }

    pub fn scale(&mut self, s: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &Self, s: Complex64) -> Result<()> {
        self.check_compatible(other)?;
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub fn mul_pointwise(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            space: self.space,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            space: self.space,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Ascending index of the largest modulus sample.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.norm() > self.values[best].norm() {
                best = i;
            }
        }
        best
    }
}
