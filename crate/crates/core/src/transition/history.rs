use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erf;

use super::optimal::optimal_representation;
use super::{Method, TransitionResult};
use crate::dynamics::{PacketShape, PacketSpec};
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{fourier_at, Grid1D, GridFunction, Space};
use crate::superadiabatic::{alpha_limit, coupling_symbol, CoefficientTable};

/// Time course of the lower-band norm in one representation.
#[derive(Clone, Debug, Serialize)]
pub struct HistoryCurve {
    pub n: f64,
    pub samples: Vec<(f64, f64)>,
    pub model_prediction: Option<Vec<(f64, f64)>>,
}

impl HistoryCurve {
    pub fn final_norm(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.1)
    }

    /// Largest sampled norm relative to the final one, minus one.
    pub fn overshoot(&self) -> f64 {
        let peak = self.samples.iter().fold(0.0f64, |m, s| m.max(s.1));
        peak / self.final_norm() - 1.0
    }
}

/// `n + 1` evenly spaced times from `start` to `end`.
pub fn uniform_times(start: f64, end: f64, intervals: usize) -> Vec<f64> {
    let h = (end - start) / intervals as f64;
    (0..=intervals).map(|i| start + i as f64 * h).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct HistoryOptions<'a> {
    /// Adds the `p^(n+1−4m)` couplings, m ≥ 1, taken from the recursion.
    pub higher_powers: Option<&'a CoefficientTable>,
    /// Relative amplitude below which packet samples and output rows are dropped.
    pub cutoff: f64,
}

impl Default for HistoryOptions<'_> {
    fn default() -> Self {
        Self {
            higher_powers: None,
            cutoff: 1e-14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PerturbativeHistory {
    pub curve: HistoryCurve,
    /// `ψ̂₋,ₙ(·, t)` at the last time.
    pub final_packet: TransitionResult,
}

/// `((k² − η²)/4δ)ⁿ`; for non-integer n only the positive part is kept.
fn gap_power(k: f64, eta: f64, delta: f64, n: f64) -> f64 {
    let ratio = (k * k - eta * eta) / (4.0 * delta);
    if n.fract() == 0.0 {
        ratio.powi(n as i32)
    } else if ratio > 0.0 {
        ratio.powf(n)
    } else {
        0.0
    }
}

/// Extra kernel terms from the higher powers of p in `κₙ₊₁⁻`, tabulated by
/// momentum-grid offset `k − η`.
struct HigherPowers {
    /// `(power, coefficient in position space, values)` with
    /// `values[j − offset_min]` at `k − η = j dk`.
    terms: Vec<(usize, GridFunction, Vec<Complex64>)>,
    offset_min: i64,
}

impl HigherPowers {
    fn build(
        table: &CoefficientTable,
        n: usize,
        grid: &Grid1D,
        offsets: (i64, i64),
    ) -> Result<Self> {
        let kappa = coupling_symbol(table, n + 1)?;
        let coeff_grid = table.grid().with_epsilon(grid.epsilon())?;
        let momenta: Vec<Complex64> = (offsets.0..=offsets.1)
            .map(|j| Complex64::new(j as f64 * grid.dk(), 0.0))
            .collect();
        let mut terms = Vec::new();
        for m in 1..=(n + 1) / 4 {
            let power = n + 1 - 4 * m;
            let Some(c) = kappa.kappa_minus.coeff(power) else {
                continue;
            };
            if c.is_exact_zero() {
                continue;
            }
            let f = GridFunction::new(coeff_grid.clone(), Space::Position, c.values().to_vec())?;
            let parts: Result<Vec<Vec<Complex64>>> = momenta
                .par_chunks(256)
                .map(|ch| fourier_at(&f, ch))
                .collect();
            terms.push((power, f, parts?.concat()));
        }
        Ok(Self {
            terms,
            offset_min: offsets.0,
        })
    }

    fn at(&self, offset: i64, k: f64, eta: f64) -> Complex64 {
        let idx = (offset - self.offset_min) as usize;
        self.terms
            .iter()
            .map(|(p, _, v)| v[idx] * ((k + eta) / 2.0).powi(*p as i32))
            .sum()
    }

    fn at_momentum(&self, k: f64, eta: f64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (p, f, _) in &self.terms {
            sum += fourier_at(f, &[Complex64::new(k - eta, 0.0)])?[0]
                * ((k + eta) / 2.0).powi(*p as i32);
        }
        Ok(sum)
    }
}

/// First-order perturbative lower-band packet in the n-th superadiabatic
/// representation, `ψ̂₋,ₙ(k, t)` for each `t` in `times`, with the packet
/// starting on the upper band at `t → −∞`.
///
/// The time integral is done exactly for each pair (k, η), which splits into
/// `π δ(ω)` on the resonance `η² = k² − 4δ` and a principal value in η. The
/// principal value is summed on the grid after subtracting the pole.
pub fn history_perturbative(
    spec: &PacketSpec,
    model: &DiabaticModel,
    n: f64,
    times: &[f64],
    grid: &Arc<Grid1D>,
    options: HistoryOptions,
) -> Result<PerturbativeHistory> {
    model.require_constant_rho()?;
    let poles = model.require_poles()?;
    if !(n >= 0.0) {
        return Err(Error::Config(format!(
            "representation order must be non-negative, got {n}"
        )));
    }
    if spec.epsilon != grid.epsilon() {
        return Err(Error::Config("packet and grid epsilon differ".into()));
    }
    let (eps, delta, q_c) = (spec.epsilon, model.delta(), poles.q_c);
    if !(delta > 0.0) {
        return Err(Error::Unsupported(
            "the perturbative history needs a positive gap".into(),
        ));
    }
    let step = check_uniform(times)?;
    let ks = grid.ks();
    let dk = grid.dk();
    let hat: Vec<f64> = ks.iter().map(|&k| spec.hat(k)).collect();
    let hat_max = hat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let etas: Vec<usize> = (0..ks.len())
        .filter(|&a| hat[a].abs() > options.cutoff * hat_max)
        .collect();
    if etas.is_empty() {
        return Err(Error::Config("packet has no samples on the grid".into()));
    }
    let reach = ks
        .iter()
        .zip(&hat)
        .filter(|(_, h)| h.abs() > 1e-8 * hat_max)
        .fold(0.0f64, |m, (k, _)| m.max(k.abs()));
    let horizon = times[0].abs().max(times[times.len() - 1].abs());
    if reach * horizon > 0.45 * (grid.x_max() - grid.x_min()) {
        return Err(Error::Accuracy(format!(
            "packet travels to |x| = {:.1} by |t| = {horizon}, beyond the grid half-length {:.1}",
            reach * horizon,
            (grid.x_max() - grid.x_min()) / 2.0
        )));
    }
    let pref = poles.gamma * alpha_limit(poles.gamma) / (4.0 * eps);
    let higher = match options.higher_powers {
        Some(table) if n.fract() == 0.0 => {
            let lo = -(etas[etas.len() - 1] as i64);
            let hi = (ks.len() - 1 - etas[0]) as i64;
            Some(HigherPowers::build(table, n as usize, grid, (lo, hi))?)
        }
        Some(_) => {
            return Err(Error::Config(
                "higher powers of p need an integer order".into(),
            ))
        }
        None => None,
    };
    let higher_norm = Complex64::new(0.0, -eps.powf(n)) / (2.0 * PI * eps).sqrt();
    let base = |k: f64, eta: f64| {
        pref * (eta + k) * gap_power(k, eta, delta, n) * (-(q_c / eps) * (k - eta).abs()).exp()
    };
    // g(k, η) on grid pairs, without the dk weight
    let weight = |a: usize, b: usize| -> Complex64 {
        let (k, eta) = (ks[a], ks[b]);
        let mut w = Complex64::new(base(k, eta), 0.0);
        if let Some(h) = &higher {
            w += higher_norm * h.at(a as i64 - b as i64, k, eta);
        }
        w * hat[b]
    };
    let weight_at = |k: f64, eta: f64| -> Result<Complex64> {
        let mut w = Complex64::new(base(k, eta), 0.0);
        if let Some(h) = &higher {
            w += higher_norm * h.at_momentum(k, eta)?;
        }
        Ok(w * spec.hat(eta))
    };
    let bounds: Vec<f64> = (0..ks.len())
        .into_par_iter()
        .map(|a| etas.iter().fold(0.0f64, |m, &b| m.max(weight(a, b).norm())))
        .collect();
    let bound_max = bounds.iter().fold(0.0f64, |m, v| m.max(*v));
    let rows: Vec<usize> = (0..ks.len())
        .filter(|&a| bounds[a] > options.cutoff * bound_max)
        .collect();
    let width = 40.0 * dk;
    let (t_first, t_last) = (times[0], times[times.len() - 1]);

    struct Row {
        power: Vec<f64>,
        last: Complex64,
    }
    let evaluated: Result<Vec<Row>> = rows
        .par_iter()
        .map(|&a| {
            let k = ks[a];
            let gap = k * k - 4.0 * delta;
            let mut resonant = Complex64::new(0.0, 0.0);
            let mut residues = Vec::new();
            if gap > 0.0 {
                let r = gap.sqrt();
                for rho in [r, -r] {
                    let g = weight_at(k, rho)?;
                    resonant += PI * eps / r * g;
                    residues.push((rho, -eps * g / rho));
                }
            }
            let mut amps = Vec::with_capacity(etas.len());
            let mut poles_part = Vec::with_capacity(etas.len());
            let mut omegas = Vec::with_capacity(etas.len());
            let mut on_pole = Vec::new();
            for &b in &etas {
                let eta = ks[b];
                let omega = (gap - eta * eta) / (2.0 * eps);
                if residues
                    .iter()
                    .any(|&(rho, _)| (eta - rho).abs() <= 1e-12 * rho.abs().max(1.0))
                {
                    on_pole.push(amps.len());
                }
                // pole subtraction, multiplied through by ω so the quotient stays finite
                let s: Complex64 = residues
                    .iter()
                    .map(|&(rho, c)| {
                        c * (-(eta - rho).powi(2) / (width * width)).exp()
                            * (-(eta + rho) / (2.0 * eps))
                    })
                    .sum();
                amps.push(weight(a, b));
                poles_part.push(s);
                omegas.push(omega);
            }
            let mut now: Vec<Complex64> = omegas
                .iter()
                .map(|&o| Complex64::from_polar(1.0, o * t_first))
                .collect();
            let advance: Vec<Complex64> = omegas
                .iter()
                .map(|&o| Complex64::from_polar(1.0, o * step))
                .collect();
            let mut terms = vec![Complex64::new(0.0, 0.0); amps.len()];
            let mut power = Vec::with_capacity(times.len());
            let mut last = Complex64::new(0.0, 0.0);
            for i in 0..times.len() {
                for j in 0..amps.len() {
                    terms[j] = if omegas[j] == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        (amps[j] * now[j] - poles_part[j]) / omegas[j]
                    };
                    now[j] *= advance[j];
                }
                for &j in &on_pole {
                    let left = if j > 0 {
                        terms[j - 1]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    let right = terms.get(j + 1).copied().unwrap_or_default();
                    terms[j] = (left + right) / 2.0;
                }
                let principal: Complex64 = terms.iter().sum::<Complex64>() * dk;
                let acc = resonant - Complex64::i() * principal;
                power.push(acc.norm_sqr());
                if i + 1 == times.len() {
                    last = acc;
                }
            }
            Ok(Row { power, last })
        })
        .collect();
    let evaluated = evaluated?;

    let samples = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            (
                t,
                (evaluated.iter().map(|r| r.power[i]).sum::<f64>() * dk).sqrt(),
            )
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); ks.len()];
    for (&a, r) in rows.iter().zip(&evaluated) {
        let k = ks[a];
        values[a] = r.last * Complex64::from_polar(1.0, -t_last * (k * k / 2.0 - delta) / eps);
    }
    Ok(PerturbativeHistory {
        curve: HistoryCurve {
            n,
            samples,
            model_prediction: None,
        },
        final_packet: TransitionResult {
            psi_minus_hat: GridFunction::new(grid.clone(), Space::Momentum, values)?,
            method: Method::Perturbative(n),
            warnings: Vec::new(),
        },
    })
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Config("a history needs at least two times".into()));
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::Config("history times must increase".into()));
    }
    for (i, pair) in times.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::Config(format!(
                "history times must be evenly spaced (gap {i})"
            )));
        }
    }
    Ok(step)
}

/// Error-function history at the stationary momentum of a Gaussian packet.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorFunctionModel {
    pub eta_star: f64,
    pub k_star: f64,
    pub n_star: f64,
    /// `η*²/M_ηη`, the width parameter of the error function.
    pub width_parameter: f64,
    pub samples: Vec<(f64, f64)>,
}

/// `plateau · |1 + erf(t √(A/2ε))| / 2` with `A = η*²/M_ηη`; the packet is
/// real at the crossing, so the transition time is 0 and A is real.
pub fn history_error_function_model(
    spec: &PacketSpec,
    model: &DiabaticModel,
    plateau: f64,
    times: &[f64],
) -> Result<ErrorFunctionModel> {
    let PacketShape::Gaussian { p0, sigma2 } = spec.shape else {
        return Err(Error::Config(
            "the error-function model needs a Gaussian packet".into(),
        ));
    };
    let opt = optimal_representation(p0, sigma2, model, spec.epsilon)?;
    let a = opt.eta_star * opt.eta_star / opt.hessian[1][1];
    let scale = (a / (2.0 * spec.epsilon)).sqrt();
    let samples = times
        .iter()
        .map(|&t| (t, plateau * (1.0 + erf(t * scale)) / 2.0))
        .collect();
    Ok(ErrorFunctionModel {
        eta_star: opt.eta_star,
        k_star: opt.k_star,
        n_star: opt.n_star,
        width_parameter: a,
        samples,
    })
}
