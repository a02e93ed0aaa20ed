use std::sync::Arc;

use num_complex::Complex64;

use super::TwoLevelState;
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{Grid1D, Space};

/// Amplitude below which a momentum mode counts as unoccupied for the
/// step-size sanity check.
const OCCUPIED: f64 = 1e-10;

/// Symmetric split-step propagator `e^(−iT dt/2) e^(−iV dt) e^(−iT dt/2)`
/// for one model, grid and step size.
pub struct StrangStepper {
    grid: Arc<Grid1D>,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    /// Per point: `cos(dtρ/ε)` and `−i sin(dtρ/ε)` times `(cos θ, sin θ)`.
    pot: Vec<(Complex64, Complex64, Complex64)>,
    scratch: Vec<Complex64>,
}

impl StrangStepper {
    pub fn new(model: &DiabaticModel, grid: &Arc<Grid1D>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n = grid.n();
        let eps = grid.epsilon();
        let half: Vec<Complex64> = (0..n)
            .map(|m| {
                let k = eps * grid.wavenumber(m);
                Complex64::from_polar(1.0, -dt * k * k / (4.0 * eps))
            })
            .collect();
        let full = half.iter().map(|h| h * h).collect();
        let pot = grid
            .xs()
            .iter()
            .map(|&x| {
                let (s, c) = (dt * model.rho(x) / eps).sin_cos();
                let (st, ct) = model.theta(x).sin_cos();
                let mis = Complex64::new(0.0, -s);
                (Complex64::new(c, 0.0), mis * ct, mis * st)
            })
            .collect();
        let len = grid
            .forward_plan()
            .get_inplace_scratch_len()
            .max(grid.inverse_plan().get_inplace_scratch_len());
        Ok(Self {
            grid: grid.clone(),
            dt,
            half,
            full,
            pot,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    /// Largest |k| carrying amplitude above the occupancy floor.
    fn occupied_k_max(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let peak = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.norm()));
        let eps = self.grid.epsilon();
        (0..self.grid.n())
            .filter(|&m| a[m].norm() > OCCUPIED * peak || b[m].norm() > OCCUPIED * peak)
            .fold(0.0f64, |acc, m| {
                acc.max((eps * self.grid.wavenumber(m)).abs())
            })
    }

    /// Advances `state` by `steps` steps in place.
    pub fn advance(&mut self, state: &mut TwoLevelState, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        self.grid.check_same(state.up.grid())?;
        if state.up.space() != Space::Position || state.down.space() != Space::Position {
            return Err(Error::GridMismatch(
                "the solver propagates position-space states".into(),
            ));
        }
        let fwd = self.grid.forward_plan().clone();
        let inv = self.grid.inverse_plan().clone();
        let n = self.grid.n();
        let norm = 1.0 / n as f64;
        let eps = self.grid.epsilon();
        let mut a = state.up.values().to_vec();
        let mut b = state.down.values().to_vec();

        fwd.process_with_scratch(&mut a, &mut self.scratch);
        fwd.process_with_scratch(&mut b, &mut self.scratch);
        let k_occ = self.occupied_k_max(&a, &b);
        let phase = self.dt * k_occ * k_occ / (2.0 * eps);
        if phase >= std::f64::consts::PI {
            return Err(Error::Config(format!(
                "time step {} too large: kinetic phase {phase:.3} per step at occupied |k| = {k_occ:.3}",
                self.dt
            )));
        }
        for m in 0..n {
            a[m] *= self.half[m] * norm;
            b[m] *= self.half[m] * norm;
        }
        for step in 0..steps {
            inv.process_with_scratch(&mut a, &mut self.scratch);
            inv.process_with_scratch(&mut b, &mut self.scratch);
            for i in 0..n {
                let (c, sc, ss) = self.pot[i];
                let (u, d) = (a[i], b[i]);
                a[i] = c * u + sc * u + ss * d;
                b[i] = c * d + ss * u - sc * d;
            }
            if a.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::Solver(format!(
                    "non-finite amplitude after step {}",
                    step + 1
                )));
            }
            fwd.process_with_scratch(&mut a, &mut self.scratch);
            fwd.process_with_scratch(&mut b, &mut self.scratch);
            let kin = if step + 1 == steps {
                &self.half
            } else {
                &self.full
            };
            for m in 0..n {
                a[m] *= kin[m] * norm;
                b[m] *= kin[m] * norm;
            }
        }
        inv.process_with_scratch(&mut a, &mut self.scratch);
        inv.process_with_scratch(&mut b, &mut self.scratch);
        state.up.values_mut().copy_from_slice(&a);
        state.down.values_mut().copy_from_slice(&b);
        state.time += self.dt * steps as f64;
        Ok(())
    }
}

/// Evolves `state` by `steps` Strang steps of size `dt`.
pub fn strang_evolve(
    state: &TwoLevelState,
    model: &DiabaticModel,
    dt: f64,
    steps: usize,
) -> Result<TwoLevelState> {
    let mut out = state.clone();
    StrangStepper::new(model, state.up.grid(), dt)?.advance(&mut out, steps)?;
    Ok(out)
}
