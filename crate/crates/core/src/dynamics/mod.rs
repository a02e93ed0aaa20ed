//! Reference dynamics: the split-step solver, free band propagators,
//! incoming packets and (super)adiabatic projections of solver states.

mod packet;
mod solver;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{inverse_scaled_fourier, scaled_fourier, Grid1D, GridFunction, Space};
use crate::superadiabatic::SuperadiabaticProjector;

pub use packet::{PacketShape, PacketSpec};
pub use solver::{strang_evolve, StrangStepper};

/// Diabatic two-component wave function in position space.
#[derive(Clone, Debug)]
pub struct TwoLevelState {
    pub up: GridFunction,
    pub down: GridFunction,
    pub time: f64,
}

impl TwoLevelState {
    pub fn new(up: GridFunction, down: GridFunction, time: f64) -> Result<Self> {
        up.grid().check_same(down.grid())?;
        if up.space() != Space::Position || down.space() != Space::Position {
            return Err(Error::GridMismatch(
                "states are stored in position space".into(),
            ));
        }
        Ok(Self { up, down, time })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.up.grid()
    }

    pub fn norm(&self) -> f64 {
        self.up.l2_norm().hypot(self.down.l2_norm())
    }

    fn project_on(
        &self,
        model: &DiabaticModel,
        pick: impl Fn(&crate::model::AdiabaticFrame) -> [f64; 2],
    ) -> GridFunction {
        let xs = self.grid().xs();
        let values = xs
            .iter()
            .zip(self.up.values().iter().zip(self.down.values()))
            .map(|(&x, (u, d))| {
                let e = pick(&model.adiabatic_frame(x));
                u * e[0] + d * e[1]
            })
            .collect();
        GridFunction::new(self.grid().clone(), Space::Position, values)
            .expect("lengths match the grid")
    }

    /// Upper adiabatic amplitude `e₊(x)·ψ(x)`.
    pub fn upper_adiabatic(&self, model: &DiabaticModel) -> GridFunction {
        self.project_on(model, |f| f.upper())
    }

    /// Lower adiabatic amplitude `e₋(x)·ψ(x)`.
    pub fn lower_adiabatic(&self, model: &DiabaticModel) -> GridFunction {
        self.project_on(model, |f| f.lower())
    }

    pub fn upper_hat(&self, model: &DiabaticModel) -> Result<GridFunction> {
        scaled_fourier(&self.upper_adiabatic(model))
    }

    /// Scaled Fourier transform of the lower adiabatic amplitude.
    pub fn lower_hat(&self, model: &DiabaticModel) -> Result<GridFunction> {
        scaled_fourier(&self.lower_adiabatic(model))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Upper,
    Lower,
}

impl Band {
    fn sign(self) -> f64 {
        match self {
            Band::Upper => 1.0,
            Band::Lower => -1.0,
        }
    }
}

/// Multiplies a momentum-space amplitude by `exp(−(it/ε)(k²/2 ± δ))`.
pub fn free_band_propagate(
    psi_hat: &GridFunction,
    t: f64,
    band: Band,
    model: &DiabaticModel,
) -> Result<GridFunction> {
    model.require_constant_rho()?;
    if psi_hat.space() != Space::Momentum {
        return Err(Error::GridMismatch(
            "free_band_propagate expects a momentum-space function".into(),
        ));
    }
    if t == 0.0 {
        return Ok(psi_hat.clone());
    }
    let eps = psi_hat.grid().epsilon();
    let gap = band.sign() * model.delta();
    let ks = psi_hat.grid().ks();
    let values = psi_hat
        .values()
        .iter()
        .zip(&ks)
        .map(|(v, &k)| v * Complex64::from_polar(1.0, -t * (k * k / 2.0 + gap) / eps))
        .collect();
    GridFunction::new(psi_hat.grid().clone(), Space::Momentum, values)
}

/// `ψ̂₊(k, t₀)`: the packet profile evolved freely on the upper band to `t0`.
pub fn incoming_hat(
    spec: &PacketSpec,
    model: &DiabaticModel,
    grid: &Arc<Grid1D>,
    t0: f64,
) -> Result<GridFunction> {
    check_epsilon(spec, grid)?;
    free_band_propagate(&spec.hat_on(grid), t0, Band::Upper, model)
}

fn check_epsilon(spec: &PacketSpec, grid: &Grid1D) -> Result<()> {
    if spec.epsilon != grid.epsilon() {
        return Err(Error::Config(format!(
            "packet epsilon {} differs from grid epsilon {}",
            spec.epsilon,
            grid.epsilon()
        )));
    }
    Ok(())
}

/// Upper-band incoming state at `t0` without the distance check.
pub fn incoming_state(
    spec: &PacketSpec,
    model: &DiabaticModel,
    grid: &Arc<Grid1D>,
    t0: f64,
) -> Result<TwoLevelState> {
    let upper = inverse_scaled_fourier(&incoming_hat(spec, model, grid, t0)?)?;
    let frames: Vec<_> = grid
        .xs()
        .iter()
        .map(|&x| model.adiabatic_frame(x).upper())
        .collect();
    let up = frames
        .iter()
        .zip(upper.values())
        .map(|(e, v)| v * e[0])
        .collect();
    let down = frames
        .iter()
        .zip(upper.values())
        .map(|(e, v)| v * e[1])
        .collect();
    TwoLevelState::new(
        GridFunction::new(grid.clone(), Space::Position, up)?,
        GridFunction::new(grid.clone(), Space::Position, down)?,
        t0,
    )
}

/// Incoming state at `t0`; the packet centre must sit at least ten position
/// widths before the crossing and inside the grid.
pub fn prepare_incoming(
    spec: &PacketSpec,
    model: &DiabaticModel,
    grid: &Arc<Grid1D>,
    t0: f64,
) -> Result<TwoLevelState> {
    let centre = spec.p0() * t0;
    let width = spec.position_width();
    if centre > -10.0 * width {
        return Err(Error::Config(format!(
            "packet centre {centre:.3} at t0 = {t0} overlaps the crossing (position width {width:.3e})"
        )));
    }
    if centre < grid.x_min() {
        return Err(Error::Config(format!(
            "packet centre {centre:.3} lies outside the grid"
        )));
    }
    incoming_state(spec, model, grid, t0)
}

/// Distance from the crossing beyond which `sech(αq)` is below 1e-14.
fn coupling_reach(model: &DiabaticModel) -> f64 {
    model.poles().map_or(0.0, |p| {
        (1e14f64).acosh() * 2.0 * p.q_c / std::f64::consts::PI
    })
}

/// `t0 = −max(8 w / p₀, r / p₀)` with `w` the position width and `r` the
/// reach of the coupling.
pub fn default_t0(spec: &PacketSpec, model: &DiabaticModel) -> f64 {
    let p0 = spec.p0().abs();
    -(8.0 * spec.position_width()).max(coupling_reach(model)) / p0
}

/// `Π̂ₙψ` and `(1 − Π̂ₙ)ψ` of a state, with their norms.
#[derive(Clone, Debug)]
pub struct SuperadiabaticSplit {
    pub projected: [GridFunction; 2],
    pub complement: [GridFunction; 2],
    pub projected_norm: f64,
    pub complement_norm: f64,
}

pub fn superadiabatic_components(
    state: &TwoLevelState,
    projector: &SuperadiabaticProjector,
) -> Result<SuperadiabaticSplit> {
    projector.grid().check_same(state.grid())?;
    let grid = state.grid().clone();
    let [pu, pd] = projector.apply(state.up.values(), state.down.values());
    let cu: Vec<_> = state
        .up
        .values()
        .iter()
        .zip(&pu)
        .map(|(a, b)| a - b)
        .collect();
    let cd: Vec<_> = state
        .down
        .values()
        .iter()
        .zip(&pd)
        .map(|(a, b)| a - b)
        .collect();
    let make = |v: Vec<Complex64>| GridFunction::new(grid.clone(), Space::Position, v);
    let projected = [make(pu)?, make(pd)?];
    let complement = [make(cu)?, make(cd)?];
    let projected_norm = projected[0].l2_norm().hypot(projected[1].l2_norm());
    let complement_norm = complement[0].l2_norm().hypot(complement[1].l2_norm());
    Ok(SuperadiabaticSplit {
        projected,
        complement,
        projected_norm,
        complement_norm,
    })
}

#[cfg(test)]
mod tests;
