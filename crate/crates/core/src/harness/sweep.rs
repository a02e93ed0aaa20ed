use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::dynamics::{prepare_incoming, StrangStepper, TwoLevelState};
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{Grid1D, GridFunction, Space};
use crate::transition::{formula_transmitted, FormulaOptions, TransitionParams};

/// Steps between two readings of the lower-band norm.
pub const STATIONARY_WINDOW: usize = 200;
/// Relative change of the lower-band norm over one window that counts as settled.
pub const STATIONARY_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRecord {
    pub epsilon: f64,
    pub p0: f64,
    pub norm_formula: f64,
    pub norm_numeric: f64,
    /// `‖ψ₋ − φ₋‖₂/‖φ₋‖₂` with ψ₋ from the solver and φ₋ from the formula.
    pub rel_l2_error: f64,
    /// Same metric between the run and a rerun at `(dt/2, 2N)`.
    pub solver_self_error: f64,
    pub wall_time_s: f64,
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
    pub points: usize,
}

impl ComparisonRecord {
    /// The refinement gate: the solver must be ten times closer to itself
    /// than to the formula.
    pub fn passes_gate(&self) -> bool {
        self.solver_self_error <= self.rel_l2_error / 10.0
    }
}

/// One compared sweep point with its spectra on the solver grid.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub record: ComparisonRecord,
    pub accepted: bool,
    pub diagnostics: Vec<String>,
    pub numeric: GridFunction,
    pub formula: GridFunction,
}

/// Evolution stopped once the lower-band norm has settled.
pub struct SettledRun {
    pub state: TwoLevelState,
    pub steps: usize,
    pub settled: bool,
}

/// Evolves in windows of [`STATIONARY_WINDOW`] steps until the lower-band norm
/// changes by at most [`STATIONARY_TOLERANCE`] over a window. Readings start
/// once `time ≥ watch_from`; the run never passes `t_final`.
pub fn evolve_until_settled(
    mut state: TwoLevelState,
    model: &DiabaticModel,
    dt: f64,
    watch_from: f64,
    t_final: f64,
) -> Result<SettledRun> {
    let mut stepper = StrangStepper::new(model, state.grid(), dt)?;
    let start = state.time;
    let budget = ((t_final - start) / dt + 1e-9).floor() as usize;
    let mut steps = 0;
    let mut previous: Option<f64> = None;
    while steps < budget {
        let chunk = STATIONARY_WINDOW.min(budget - steps);
        stepper.advance(&mut state, chunk)?;
        steps += chunk;
        state.time = start + steps as f64 * dt;
        if state.time < watch_from {
            continue;
        }
        let norm = state.lower_adiabatic(model).l2_norm();
        if let Some(prev) = previous {
            if chunk == STATIONARY_WINDOW && (norm - prev).abs() <= STATIONARY_TOLERANCE * norm {
                return Ok(SettledRun {
                    state,
                    steps,
                    settled: true,
                });
            }
        }
        previous = Some(norm);
    }
    Ok(SettledRun {
        state,
        steps,
        settled: false,
    })
}

/// Keeps the modes of `fine` that exist on `coarse`, a grid on the same
/// domain with fewer points.
fn restrict_momentum(fine: &GridFunction, coarse: &Arc<Grid1D>) -> Result<GridFunction> {
    let shift = (fine.grid().n() - coarse.n()) / 2;
    let values: Vec<Complex64> = (0..coarse.n()).map(|a| fine.values()[a + shift]).collect();
    GridFunction::new(coarse.clone(), Space::Momentum, values)
}

fn lower_after(cfg: &RunConfig, grid: &Arc<Grid1D>, dt: f64, steps: usize) -> Result<GridFunction> {
    let model = cfg.model()?;
    let mut state = prepare_incoming(&cfg.packet()?, &model, grid, cfg.t0()?)?;
    StrangStepper::new(&model, grid, dt)?.advance(&mut state, steps)?;
    state.lower_hat(&model)
}

/// Halvings of dt tried after a failed refinement gate.
pub const MAX_REFINEMENTS: usize = 2;

fn measure(cfg: &RunConfig, dt: f64) -> Result<SweepPoint> {
    let model = cfg.model()?;
    model.require_constant_rho()?;
    let spec = cfg.packet()?;
    let grid = cfg.solver_grid()?;
    let t0 = cfg.t0()?;
    let incoming = prepare_incoming(&spec, &model, &grid, t0)?;
    let run = evolve_until_settled(incoming, &model, dt, -t0, cfg.run.t_final.0)?;
    let mut diagnostics = Vec::new();
    if !run.settled {
        diagnostics.push(format!(
            "lower-band norm still changing at t = {:.4}",
            run.state.time
        ));
    }
    let edge = run
        .state
        .up
        .boundary_max()
        .max(run.state.down.boundary_max());
    if edge > 1e-10 {
        diagnostics.push(format!("amplitude {edge:.2e} at the grid edge"));
    }
    let numeric = run.state.lower_hat(&model)?;
    let params = TransitionParams::from_model(&model, cfg.epsilon(), run.state.time)?;
    let formula = formula_transmitted(&spec.hat_on(&grid), &params, FormulaOptions::default())?;
    diagnostics.extend(formula.warnings.iter().cloned());
    let formula = formula.psi_minus_hat;
    let norm_formula = formula.l2_norm();
    if norm_formula == 0.0 {
        return Err(Error::Diagnostic(
            "formula predicts no transmission on this grid".into(),
        ));
    }
    let rel_l2_error = numeric.distance(&formula)? / norm_formula;

    let fine_grid = grid.with_points(2 * grid.n())?;
    let fine = lower_after(cfg, &fine_grid, dt / 2.0, 2 * run.steps)?;
    let solver_self_error = restrict_momentum(&fine, &grid)?.distance(&numeric)? / norm_formula;

    let record = ComparisonRecord {
        epsilon: cfg.epsilon(),
        p0: spec.p0(),
        norm_formula,
        norm_numeric: numeric.l2_norm(),
        rel_l2_error,
        solver_self_error,
        wall_time_s: 0.0,
        t_final: run.state.time,
        dt,
        steps: run.steps,
        points: grid.n(),
    };
    let accepted = record.passes_gate() && run.settled && edge <= 1e-10;
    Ok(SweepPoint {
        record,
        accepted,
        diagnostics,
        numeric,
        formula,
    })
}

/// Solver against formula for one configuration. Each attempt is checked
/// against a rerun at `(dt/2, 2N)`; on a failed gate dt is halved up to
/// [`MAX_REFINEMENTS`] times, stopping early once halving no longer halves
/// the self error.
pub fn compare_point(cfg: &RunConfig) -> Result<SweepPoint> {
    let clock = Instant::now();
    let mut dt = cfg.run.dt.0;
    let mut point = measure(cfg, dt)?;
    let mut stalled = false;
    for _ in 0..MAX_REFINEMENTS {
        if point.record.passes_gate() {
            break;
        }
        dt /= 2.0;
        let next = measure(cfg, dt)?;
        stalled = next.record.solver_self_error > 0.5 * point.record.solver_self_error;
        point = next;
        if stalled {
            break;
        }
    }
    let r = &point.record;
    if r.dt != cfg.run.dt.0 {
        point
            .diagnostics
            .push(format!("dt refined from {} to {}", cfg.run.dt.0, r.dt));
    }
    if !r.passes_gate() {
        point.diagnostics.push(format!(
            "refinement gate failed: self error {:.3e} exceeds a tenth of {:.3e}",
            r.solver_self_error, r.rel_l2_error
        ));
        if stalled {
            point
                .diagnostics
                .push("self error stopped falling with dt; round-off dominates".into());
        }
    }
    point.record.wall_time_s = clock.elapsed().as_secs_f64();
    Ok(point)
}

/// Compares every configuration in the current rayon pool; results keep
/// the input order.
pub fn run_sweep(configs: &[RunConfig]) -> Vec<Result<SweepPoint>> {
    configs.par_iter().map(compare_point).collect()
}
