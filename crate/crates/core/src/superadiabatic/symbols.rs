use std::f64::consts::PI;

use num_complex::Complex64;

use super::tables::{CoefficientTable, Component};
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{GridFunction, PauliField, PolyPSymbol, Space, SymbolCoeff};

/// `sin(πγ/2)/(πγ/2)`, the limiting prefactor of the leading coupling poles.
pub fn alpha_limit(gamma: f64) -> f64 {
    let h = PI * gamma / 2.0;
    if h.abs() < 1e-8 {
        1.0 - h * h / 6.0
    } else {
        h.sin() / h
    }
}

/// Off-diagonal couplings `κₙ± = −2ρ(yₙ ± xₙ)`, one coefficient per power of p.
#[derive(Clone, Debug)]
pub struct CouplingSymbol {
    pub n: usize,
    pub kappa_plus: PolyPSymbol<GridFunction>,
    pub kappa_minus: PolyPSymbol<GridFunction>,
}

pub fn coupling_symbol(table: &CoefficientTable, n: usize) -> Result<CouplingSymbol> {
    if n > table.n_max() {
        return Err(Error::Capability {
            what: "coupling order",
            requested: n,
            limit: table.n_max(),
        });
    }
    let grid = table.grid();
    let mut plus = PolyPSymbol::new();
    let mut minus = PolyPSymbol::new();
    for m in 0..=n {
        let x = table.values(Component::X, n, m);
        let y = table.values(Component::Y, n, m);
        let zero = |v: &[Complex64]| v.iter().all(|z| z.re == 0.0 && z.im == 0.0);
        if zero(x) && zero(y) {
            continue;
        }
        let rho = table.rho();
        let make = |s: f64| {
            let v = (0..grid.n())
                .map(|i| -2.0 * rho[i] * (y[i] + s * x[i]))
                .collect();
            GridFunction::new(grid.clone(), Space::Position, v)
        };
        plus.add_term(n - m, &make(1.0)?, Complex64::new(1.0, 0.0));
        minus.add_term(n - m, &make(-1.0)?, Complex64::new(1.0, 0.0));
    }
    Ok(CouplingSymbol {
        n,
        kappa_plus: plus,
        kappa_minus: minus,
    })
}

/// Closed leading-pole forms of the top coefficients of `κₙ±`, sampled on
/// the grid of `like`, as single-power symbols in `pⁿ`.
pub fn coupling_leading_poles(
    model: &DiabaticModel,
    like: &GridFunction,
    n: usize,
) -> Result<CouplingSymbol> {
    model.require_constant_rho()?;
    if n < 2 {
        return Err(Error::Config(format!(
            "leading pole form needs n >= 2, got {n}"
        )));
    }
    let poles = model.require_poles()?;
    let rho = model.delta();
    let alim = alpha_limit(poles.gamma);
    let fact: f64 = (1..n).map(|i| i as f64).product();
    let i = Complex64::i();
    let ig = i * poles.gamma;
    let base = |q: f64| {
        let tau = 2.0 * rho * q;
        let lo = Complex64::new(tau, -poles.tau_c).powi(n as i32);
        let hi = Complex64::new(tau, poles.tau_c).powi(n as i32);
        fact * (ig / lo - ig / hi)
    };
    let grid = like.grid();
    let branch = |s: f64| {
        let pre = -s * alim * rho * Complex64::new(0.0, -s).powi(n as i32);
        GridFunction::from_fn(grid, Space::Position, |q| pre * base(q))
    };
    Ok(CouplingSymbol {
        n,
        kappa_plus: PolyPSymbol::monomial(n, branch(1.0)),
        kappa_minus: PolyPSymbol::monomial(n, branch(-1.0)),
    })
}

/// Truncated superadiabatic projection `Σ_{j≤n} εʲ πⱼ` with
/// `πⱼ = xⱼσx + i yⱼσy + zⱼσz + wⱼ` in the rotating Pauli basis.
#[derive(Clone, Debug)]
pub struct ProjectionSymbol {
    pub n: usize,
    orders: Vec<PolyPSymbol<PauliField>>,
}

impl ProjectionSymbol {
    /// `πⱼ`, with powers of p as keys.
    pub fn order(&self, j: usize) -> &PolyPSymbol<PauliField> {
        &self.orders[j]
    }

    pub fn orders(&self) -> &[PolyPSymbol<PauliField>] {
        &self.orders
    }

    /// `Σ_j εʲ πⱼ` collapsed at a numeric ε.
    pub fn at_epsilon(&self, epsilon: f64) -> PolyPSymbol<PauliField> {
        let mut out = PolyPSymbol::new();
        for (j, pj) in self.orders.iter().enumerate() {
            out.add(pj, Complex64::new(epsilon.powi(j as i32), 0.0));
        }
        out
    }
}

pub fn projection_symbol(table: &CoefficientTable, n: usize) -> Result<ProjectionSymbol> {
    if n > table.n_max() {
        return Err(Error::Capability {
            what: "projection order",
            requested: n,
            limit: table.n_max(),
        });
    }
    let grid = table.grid().clone();
    let tp = table.theta_prime().clone();
    let half = Complex64::new(0.5, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut orders = vec![PolyPSymbol::monomial(
        0,
        PauliField::constant(grid.clone(), tp.clone(), [half, zero, zero, half]),
    )];
    for j in 1..=n {
        let mut pj = PolyPSymbol::new();
        for m in 0..=j {
            let x = table.values(Component::X, j, m);
            let y = table.values(Component::Y, j, m);
            let z = table.values(Component::Z, j, m);
            let w = table.values(Component::W, j, m);
            let field = PauliField::new(
                grid.clone(),
                tp.clone(),
                [
                    w.to_vec(),
                    x.to_vec(),
                    y.iter().map(|v| v * Complex64::i()).collect(),
                    z.to_vec(),
                ],
            )?;
            if !field.is_exact_zero() {
                pj.add_term(j - m, &field, Complex64::new(1.0, 0.0));
            }
        }
        orders.push(pj);
    }
    Ok(ProjectionSymbol { n, orders })
}
