//! Analytic transition predictions for constant gaps: the transmitted packet
//! formula, perturbative histories, the optimal representation and the
//! Landau-Zener limit.

mod history;
mod optimal;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::PacketSpec;
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{fourier_at, inverse_scaled_fourier, GridFunction, Space};

pub use history::{
    history_error_function_model, history_perturbative, uniform_times, ErrorFunctionModel,
    HistoryCurve, HistoryOptions, PerturbativeHistory,
};
pub use optimal::{optimal_representation, OptimalRepresentation};

/// Constants entering the transmitted-packet formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionParams {
    pub epsilon: f64,
    pub delta: f64,
    pub q_c: f64,
    pub gamma: f64,
    pub t_report: f64,
}

impl TransitionParams {
    pub fn from_model(model: &DiabaticModel, epsilon: f64, t_report: f64) -> Result<Self> {
        model.require_constant_rho()?;
        let poles = model.require_poles()?;
        let params = Self {
            epsilon,
            delta: model.delta(),
            q_c: poles.q_c,
            gamma: poles.gamma,
            t_report,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.delta >= 0.0)
            || !(self.q_c >= 0.0)
            || !self.gamma.is_finite()
            || !self.t_report.is_finite()
        {
            return Err(Error::Config(format!(
                "invalid transition parameters {self:?}"
            )));
        }
        Ok(())
    }

    /// Lower-band phase `exp(−(i/ε) t (k²/2 − δ))`.
    fn lower_phase(&self, k: f64, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, -t * (k * k / 2.0 - self.delta) / self.epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Method {
    ClosedFormula,
    Perturbative(f64),
    Numeric,
}

/// A lower-band packet in momentum space.
#[derive(Clone, Debug)]
pub struct TransitionResult {
    pub psi_minus_hat: GridFunction,
    pub method: Method,
    pub warnings: Vec<String>,
}

impl TransitionResult {
    pub fn l2_norm(&self) -> f64 {
        self.psi_minus_hat.l2_norm()
    }

    /// Momentum of the largest modulus.
    pub fn peak_k(&self) -> f64 {
        self.psi_minus_hat.grid().k(self.psi_minus_hat.argmax_abs())
    }
}

/// `sgn(k) √(k² − 4δ)` where `k² > 4δ`.
pub fn v_of_k(k: f64, delta: f64) -> Option<f64> {
    let d = k * k - 4.0 * delta;
    (d > 0.0).then(|| k.signum() * d.sqrt())
}

/// Continuation of `v` used when the support indicator is dropped: purely
/// imaginary below the threshold.
fn v_complex(k: f64, delta: f64) -> Option<Complex64> {
    let d = k * k - 4.0 * delta;
    if d > 0.0 {
        Some(Complex64::new(k.signum() * d.sqrt(), 0.0))
    } else if d < 0.0 && k != 0.0 {
        Some(Complex64::new(0.0, k.signum() * (-d).sqrt()))
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormulaOptions {
    /// Restrict the output to `k² > 4δ`. When off, the formula is continued
    /// below the threshold with imaginary `v(k)`.
    pub indicator: bool,
}

impl Default for FormulaOptions {
    fn default() -> Self {
        Self { indicator: true }
    }
}

/// Mean and standard deviation of `|f̂|²` in k.
fn momentum_moments(hat: &GridFunction) -> (f64, f64) {
    let ks = hat.grid().ks();
    let w: f64 = hat.values().iter().map(|v| v.norm_sqr()).sum();
    let mean = hat
        .values()
        .iter()
        .zip(&ks)
        .map(|(v, k)| v.norm_sqr() * k)
        .sum::<f64>()
        / w;
    let var = hat
        .values()
        .iter()
        .zip(&ks)
        .map(|(v, k)| v.norm_sqr() * (k - mean).powi(2))
        .sum::<f64>()
        / w;
    (mean, var.sqrt())
}

fn check_momentum(hat: &GridFunction) -> Result<GridFunction> {
    if hat.space() != Space::Momentum {
        return Err(Error::GridMismatch(
            "expected the packet in momentum space".into(),
        ));
    }
    inverse_scaled_fourier(hat)
}

/// Band-limited values of `ψ̂` at arbitrary momenta, in parallel chunks.
fn interpolate(position: &GridFunction, momenta: &[Complex64]) -> Result<Vec<Complex64>> {
    let parts: Result<Vec<Vec<Complex64>>> = momenta
        .par_chunks(256)
        .map(|chunk| fourier_at(position, chunk))
        .collect();
    Ok(parts?.concat())
}

/// Drops samples near the round-off floor; at imaginary momenta they would be
/// amplified by `e^{|Im κ| |x|/ε}`.
fn denoised(position: &GridFunction) -> GridFunction {
    let floor = 1e-12 * position.sup_norm();
    position.map(|v| {
        if v.norm() > floor {
            v
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Transmitted lower-band packet for a given upper-band packet `ψ̂₊,₀` taken
/// at the instant its centre reaches the crossing.
pub fn formula_transmitted(
    psi_plus_hat: &GridFunction,
    params: &TransitionParams,
    options: FormulaOptions,
) -> Result<TransitionResult> {
    params.validate()?;
    let position = check_momentum(psi_plus_hat)?;
    let grid = psi_plus_hat.grid();
    let ks = grid.ks();
    let vs: Vec<Option<Complex64>> = ks
        .iter()
        .map(|&k| {
            if options.indicator {
                v_of_k(k, params.delta).map(|v| Complex64::new(v, 0.0))
            } else {
                v_complex(k, params.delta)
            }
        })
        .collect();
    let support: Vec<usize> = (0..ks.len()).filter(|&a| vs[a].is_some()).collect();
    let targets: Vec<Complex64> = support.iter().map(|&a| vs[a].unwrap()).collect();
    let (real, imaginary): (Vec<usize>, Vec<usize>) =
        (0..targets.len()).partition(|&i| targets[i].im == 0.0);
    let mut samples = vec![Complex64::new(0.0, 0.0); targets.len()];
    for (idx, source) in [(real, position.clone()), (imaginary, denoised(&position))] {
        let values = interpolate(
            &source,
            &idx.iter().map(|&i| targets[i]).collect::<Vec<_>>(),
        )?;
        for (i, v) in idx.into_iter().zip(values) {
            samples[i] = v;
        }
    }
    let amp = (PI * params.gamma / 2.0).sin();
    let mut values = vec![Complex64::new(0.0, 0.0); ks.len()];
    for (&a, (v, psi)) in support.iter().zip(targets.iter().zip(&samples)) {
        let k = ks[a];
        let decay = (-(params.q_c / params.epsilon) * (k - v).norm()).exp();
        values[a] =
            k.signum() * amp * params.lower_phase(k, params.t_report) * decay * (1.0 + k / v) * psi;
    }
    let mut warnings = Vec::new();
    let (mean, width) = momentum_moments(psi_plus_hat);
    let edge = 2.0 * params.delta.sqrt();
    if (mean.abs() - edge).abs() < 3.0 * width {
        warnings.push(format!(
            "packet centred at {mean:.3} (width {width:.3}) lies within three widths of the threshold |k| = {edge:.3}"
        ));
    }
    Ok(TransitionResult {
        psi_minus_hat: GridFunction::new(grid.clone(), Space::Momentum, values)?,
        method: Method::ClosedFormula,
        warnings,
    })
}

/// The two incoming-direction terms of the stationary transmitted packet,
/// before the single-branch simplification: the first is fed by `ψ̂₊,₀` at
/// `+√(k² − 4δ)`, the second at `−√(k² − 4δ)`.
pub fn formula_branches(
    psi_plus_hat: &GridFunction,
    params: &TransitionParams,
) -> Result<[GridFunction; 2]> {
    params.validate()?;
    let position = check_momentum(psi_plus_hat)?;
    let grid = psi_plus_hat.grid();
    let ks = grid.ks();
    let support: Vec<usize> = (0..ks.len())
        .filter(|&a| ks[a] * ks[a] > 4.0 * params.delta)
        .collect();
    let roots: Vec<f64> = support
        .iter()
        .map(|&a| (ks[a] * ks[a] - 4.0 * params.delta).sqrt())
        .collect();
    let plus = interpolate(
        &position,
        &roots
            .iter()
            .map(|&r| Complex64::new(r, 0.0))
            .collect::<Vec<_>>(),
    )?;
    let minus = interpolate(
        &position,
        &roots
            .iter()
            .map(|&r| Complex64::new(-r, 0.0))
            .collect::<Vec<_>>(),
    )?;
    let amp = (PI * params.gamma / 2.0).sin();
    let zero = Complex64::new(0.0, 0.0);
    let (mut first, mut second) = (vec![zero; ks.len()], vec![zero; ks.len()]);
    for (i, &a) in support.iter().enumerate() {
        let (k, r) = (ks[a], roots[i]);
        let phase = amp * params.lower_phase(k, params.t_report);
        let decay = |x: f64| (-(params.q_c / params.epsilon) * x.abs()).exp();
        first[a] = phase * (1.0 + k / r) * decay(k - r) * plus[i];
        second[a] = phase * (-1.0 + k / r) * decay(k + r) * minus[i];
    }
    Ok([
        GridFunction::new(grid.clone(), Space::Momentum, first)?,
        GridFunction::new(grid.clone(), Space::Momentum, second)?,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LzProbability {
    /// `exp(−(q_c/ε)(√(p₀² + 4δ) − p₀))`.
    pub exact: f64,
    /// `exp(−τ_c/(p₀ε))`.
    pub large_momentum: f64,
    pub ratio: f64,
}

pub fn lz_probability(p0: f64, model: &DiabaticModel, epsilon: f64) -> Result<LzProbability> {
    model.require_constant_rho()?;
    let poles = model.require_poles()?;
    let delta = model.delta();
    // √(p₀² + 4δ) − p₀ without cancellation
    let gap = 4.0 * delta / ((p0 * p0 + 4.0 * delta).sqrt() + p0);
    let exact = (-(poles.q_c / epsilon) * gap).exp();
    let large_momentum = (-poles.tau_c / (p0 * epsilon)).exp();
    Ok(LzProbability {
        exact,
        large_momentum,
        ratio: exact / large_momentum,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentumShift {
    /// Incoming momentum minimizing the transition exponent.
    pub v_star: f64,
    /// Outgoing momentum of the transmitted peak.
    pub k_peak: f64,
    /// Outgoing momentum by energy conservation alone, from the minimum of M.
    pub k_energy: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut a = hi - GOLDEN * (hi - lo);
    let mut b = lo + GOLDEN * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLDEN * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLDEN * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Peak of the transmitted packet predicted from the packet's log-modulus.
pub fn momentum_shift_predictor(spec: &PacketSpec, model: &DiabaticModel) -> Result<MomentumShift> {
    model.require_constant_rho()?;
    let q_c = model.require_poles()?.q_c;
    momentum_shift_for(|v| spec.log_modulus(v), spec.p0(), q_c, model.delta())
}

/// Minimizes `q_c(√(v² + 4δ) − v) + M(v)` over incoming momenta `v > 0`,
/// where `|ψ̂₊,₀| ∝ exp(−M/ε)` and `p_ref` locates the minimum of M.
pub fn momentum_shift_for(
    log_modulus: impl Fn(f64) -> f64,
    p_ref: f64,
    q_c: f64,
    delta: f64,
) -> Result<MomentumShift> {
    let exponent = |v: f64| q_c * ((v * v + 4.0 * delta).sqrt() - v) + log_modulus(v);
    let span = p_ref.abs().max(5.0);
    let (lo, hi) = ((p_ref - span).max(0.0), p_ref + span);
    let samples = 4000;
    let h = (hi - lo) / samples as f64;
    let values: Vec<f64> = (0..=samples).map(|i| exponent(lo + i as f64 * h)).collect();
    let minima: Vec<usize> = (1..samples)
        .filter(|&i| values[i] <= values[i - 1] && values[i] < values[i + 1])
        .collect();
    let m_min = (0..=samples)
        .min_by(|&a, &b| log_modulus(lo + a as f64 * h).total_cmp(&log_modulus(lo + b as f64 * h)))
        .unwrap();
    let v_energy = lo + m_min as f64 * h;
    let v_energy = golden_section(&log_modulus, (v_energy - h).max(lo), v_energy + h, 1e-12);
    if minima.len() != 1 {
        return Err(Error::Solver(format!(
            "transition exponent is not unimodal on [{lo}, {hi}]: {} interior minima",
            minima.len()
        )));
    }
    let i = minima[0];
    let v_star = golden_section(
        exponent,
        lo + (i - 1) as f64 * h,
        lo + (i + 1) as f64 * h,
        1e-12,
    );
    let k_of = |v: f64| (v * v + 4.0 * delta).sqrt();
    let out = MomentumShift {
        v_star,
        k_peak: k_of(v_star),
        k_energy: k_of(v_energy),
    };
    if q_c > 0.0 && out.k_peak < out.k_energy - 1e-9 {
        return Err(Error::Diagnostic(format!(
            "transmitted peak moved left of the energy value: {out:?}"
        )));
    }
    Ok(out)
}
