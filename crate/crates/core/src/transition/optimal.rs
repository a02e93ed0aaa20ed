use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DiabaticModel;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 50;

/// Stationary pair of the transition exponent and the optimal order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalRepresentation {
    pub eta_star: f64,
    pub k_star: f64,
    pub n_star: f64,
    /// `[[M_kk, M_kη], [M_kη, M_ηη]]` at the stationary pair.
    pub hessian: [[f64; 2]; 2],
    pub iterations: usize,
}

impl OptimalRepresentation {
    /// `∂_k M`, `∂_η M` and `k² − η² − 4δ` at the solution.
    pub fn residuals(&self, p0: f64, sigma2: f64, q_c: f64, delta: f64, epsilon: f64) -> [f64; 3] {
        let (k, eta, n) = (self.k_star, self.eta_star, self.n_star);
        let d = k * k - eta * eta;
        [
            -2.0 * n * epsilon * k / d + q_c,
            2.0 * n * epsilon * eta / d - q_c + (eta - p0) / sigma2,
            d - 4.0 * delta,
        ]
    }
}

/// Solves `k = √(η² + 4δ)`, `η = k(1 − (η − p₀)/(σ² q_c))` by Newton's method
/// in η, then `n* = 2δ q_c/(εk)`, and checks that the pair minimizes
/// `M(k, η) = −nε ln((k² − η²)/4δ) + q_c|k − η| + (η − p₀)²/(2σ²)`.
pub fn optimal_representation(
    p0: f64,
    sigma2: f64,
    model: &DiabaticModel,
    epsilon: f64,
) -> Result<OptimalRepresentation> {
    model.require_constant_rho()?;
    let q_c = model.require_poles()?.q_c;
    let delta = model.delta();
    if !(sigma2 > 0.0) || !(epsilon > 0.0) || !(q_c > 0.0) {
        return Err(Error::Config(format!(
            "need sigma2, epsilon, q_c > 0 (got {sigma2}, {epsilon}, {q_c})"
        )));
    }
    let stiff = sigma2 * q_c;
    let k_of = |eta: f64| (eta * eta + 4.0 * delta).sqrt();
    let mut eta = p0;
    let mut iterations = 0;
    loop {
        let k = k_of(eta);
        let shrink = 1.0 - (eta - p0) / stiff;
        let g = eta - k * shrink;
        let dg = 1.0 - eta / k * shrink + k / stiff;
        if dg == 0.0 || !dg.is_finite() {
            return Err(Error::Solver(format!(
                "Newton derivative vanished at eta = {eta} (iteration {iterations})"
            )));
        }
        let step = g / dg;
        eta -= step;
        iterations += 1;
        if !eta.is_finite() {
            return Err(Error::Solver(format!(
                "Newton diverged after {iterations} iterations"
            )));
        }
        if step.abs() <= NEWTON_TOL * eta.abs().max(1.0) {
            break;
        }
        if iterations >= NEWTON_MAX {
            return Err(Error::Solver(format!(
                "Newton did not converge in {NEWTON_MAX} iterations: eta = {eta}, last step {step:e}"
            )));
        }
    }
    let k = k_of(eta);
    let n = 2.0 * delta * q_c / (epsilon * k);
    let d = k * k - eta * eta;
    let hessian = if delta > 0.0 {
        let a = 2.0 * n * epsilon / (d * d);
        let m_kk = a * (k * k + eta * eta);
        let m_ke = -2.0 * a * k * eta;
        let m_ee = m_kk + 1.0 / sigma2;
        // M_kk M_ηη − M_kη² = a²D² + M_kk/σ², written without cancellation
        let det = a * a * d * d + m_kk / sigma2;
        if !(m_kk > 0.0 && det > 0.0) {
            return Err(Error::Solver(format!(
                "stationary point (eta {eta}, k {k}) is not a minimum: M_kk {m_kk:e}, det {det:e}"
            )));
        }
        [[m_kk, m_ke], [m_ke, m_ee]]
    } else {
        [[0.0, 0.0], [0.0, 1.0 / sigma2]]
    };
    Ok(OptimalRepresentation {
        eta_star: eta,
        k_star: k,
        n_star: n,
        hessian,
        iterations,
    })
}
