use std::ops::RangeInclusive;

use serde::Serialize;

use super::config::RunConfig;
use crate::dynamics::{prepare_incoming, PacketShape, StrangStepper};
use crate::error::{Error, Result};
use crate::superadiabatic::{coefficient_tables, projection_symbol, SuperadiabaticProjector};
use crate::transition::{
    history_error_function_model, optimal_representation, ErrorFunctionModel, HistoryCurve,
};

#[derive(Clone, Debug, Serialize)]
pub struct HistoriesRun {
    pub curves: Vec<HistoryCurve>,
    /// Order closest to the optimal one, whose curve carries the model overlay.
    pub optimal_n: Option<usize>,
    pub model: Option<ErrorFunctionModel>,
}

/// Solver histories of `‖(1 − Π̂ₙ)ψ(t)‖₂` for each n in `orders`, sampled
/// every `histories.sample_every` steps from `t0` to `t_final`.
pub fn run_histories(cfg: &RunConfig, orders: RangeInclusive<usize>) -> Result<HistoriesRun> {
    if orders.is_empty() {
        return Err(Error::Config("empty range of orders".into()));
    }
    let model = cfg.model()?;
    let spec = cfg.packet()?;
    let grid = cfg.solver_grid()?;
    let n_top = *orders.end();
    let table = coefficient_tables(&model, &cfg.table_grid()?, n_top.max(1))?;
    let projector =
        SuperadiabaticProjector::new(&model, &projection_symbol(&table, n_top)?, &grid)?;
    let t0 = cfg.t0()?;
    let dt = cfg.run.dt.0;
    let every = cfg.histories.sample_every;
    let mut state = prepare_incoming(&spec, &model, &grid, t0)?;
    let mut stepper = StrangStepper::new(&model, &grid, dt)?;
    let budget = ((cfg.run.t_final.0 - t0) / dt + 1e-9).floor() as usize;

    let mut samples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_top + 1];
    let mut record = |t: f64, norms: Vec<f64>| {
        for (n, v) in norms.into_iter().enumerate() {
            samples[n].push((t, v));
        }
    };
    record(
        t0,
        projector.complement_norms(state.up.values(), state.down.values()),
    );
    let mut steps = 0;
    while steps < budget {
        let chunk = every.min(budget - steps);
        stepper.advance(&mut state, chunk)?;
        steps += chunk;
        state.time = t0 + steps as f64 * dt;
        record(
            state.time,
            projector.complement_norms(state.up.values(), state.down.values()),
        );
    }

    let mut curves: Vec<HistoryCurve> = orders
        .clone()
        .map(|n| HistoryCurve {
            n: n as f64,
            samples: std::mem::take(&mut samples[n]),
            model_prediction: None,
        })
        .collect();
    let (mut optimal_n, mut overlay) = (None, None);
    if let PacketShape::Gaussian { p0, sigma2 } = spec.shape {
        if model.delta() > 0.0 && model.poles().is_some() {
            let n_star = optimal_representation(p0, sigma2, &model, spec.epsilon)?.n_star;
            let n_opt = n_star.round() as usize;
            if let Some(curve) = curves.iter_mut().find(|c| c.n == n_opt as f64) {
                let times: Vec<f64> = curve.samples.iter().map(|s| s.0).collect();
                let fit = history_error_function_model(&spec, &model, curve.final_norm(), &times)?;
                curve.model_prediction = Some(fit.samples.clone());
                optimal_n = Some(n_opt);
                overlay = Some(fit);
            }
        }
    }
    Ok(HistoriesRun {
        curves,
        optimal_n,
        model: overlay,
    })
}
