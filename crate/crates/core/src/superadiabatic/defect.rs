use num_complex::Complex64;
use serde::Serialize;

use super::symbols::{projection_symbol, ProjectionSymbol};
use super::tables::{CoefficientTable, Component};
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{moyal_term, PauliField, PolyPSymbol, SymbolCoeff};

pub const DEFAULT_P_SAMPLES: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

/// Moyal residuals of a truncated projection, per ε-order and fitted in ε.
#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub n: usize,
    pub epsilons: Vec<f64>,
    /// Sup norm of the order-k coefficient of `π#π − π`, k = 0..=n+2.
    pub idempotency_orders: Vec<f64>,
    /// Sup norm of the order-k coefficient of `[H, π]_#`.
    pub commutator_orders: Vec<f64>,
    pub idempotency_residuals: Vec<f64>,
    pub commutator_residuals: Vec<f64>,
    /// Largest order-k coefficient with k ≤ n over both families; zero up to round-off.
    pub lower_order_max: f64,
    pub idempotency_slope: f64,
    pub commutator_slope: f64,
    /// Relative deviation of the order-(n+1) commutator from
    /// `−2ρ y_{n+1} σx − 2iρ x_{n+1} σy`, when the table reaches n+1.
    pub offdiag_consistency: Option<f64>,
    /// For n = 0: deviation of the first-order commutator from `(ipθ′/2)σx`.
    pub adiabatic_anchor: Option<f64>,
}

fn sup_over(sym: &PolyPSymbol<PauliField>, len: usize, ps: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &p in ps {
        for i in 0..len {
            let c = sym.eval(p, i);
            best = best.max((2.0 * c.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt());
        }
    }
    best
}

fn sup_residual(orders: &[PolyPSymbol<PauliField>], eps: f64, len: usize, ps: &[f64]) -> f64 {
    let mut total = PolyPSymbol::new();
    for (k, o) in orders.iter().enumerate() {
        total.add(o, Complex64::new(eps.powi(k as i32), 0.0));
    }
    sup_over(&total, len, ps)
}

/// Log-log slope of the residuals; infinite when they vanish identically.
fn fit_slope(eps: &[f64], res: &[f64]) -> Result<f64> {
    if res.iter().all(|&r| r == 0.0) {
        return Ok(f64::INFINITY);
    }
    for w in res.windows(2).zip(eps.windows(2)) {
        let (r, e) = w;
        if (e[1] < e[0]) != (r[1] < r[0]) {
            return Err(Error::Diagnostic(format!(
                "defect residuals not monotone in epsilon: {res:?}"
            )));
        }
    }
    if res.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Diagnostic(format!(
            "non-positive defect residual: {res:?}"
        )));
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = res.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Hamiltonian symbol `p²/2 + ρσz` in the rotating Pauli basis.
fn hamiltonian(proj: &ProjectionSymbol, rho: f64) -> PolyPSymbol<PauliField> {
    let pi0 = proj.order(0).coeff(0).expect("π₀ is constant in p");
    let grid = pi0.grid().clone();
    let tp = pi0.theta_prime().clone();
    let z = Complex64::new(0.0, 0.0);
    let mut h = PolyPSymbol::monomial(
        2,
        PauliField::constant(
            grid.clone(),
            tp.clone(),
            [Complex64::new(0.5, 0.0), z, z, z],
        ),
    );
    h.add_term(
        0,
        &PauliField::constant(grid, tp, [z, z, z, Complex64::new(rho, 0.0)]),
        Complex64::new(1.0, 0.0),
    );
    h
}

pub fn projection_defect(
    model: &DiabaticModel,
    table: &CoefficientTable,
    n: usize,
    epsilons: &[f64],
    p_samples: &[f64],
) -> Result<DefectReport> {
    if !(2..=5).contains(&epsilons.len()) {
        return Err(Error::Config(format!(
            "need 2 to 5 epsilons, got {}",
            epsilons.len()
        )));
    }
    model.require_constant_rho()?;
    let proj = projection_symbol(table, n)?;
    let h = hamiltonian(&proj, model.delta());
    let len = table.grid().n();
    let top = n + 1;
    // G_{n+1} vanishes identically for even n, so one further order is kept
    let last = n + 2;

    let mut idem = Vec::with_capacity(last + 1);
    let mut comm = Vec::with_capacity(last + 1);
    for k in 0..=last {
        let mut g = PolyPSymbol::new();
        for i in 0..=n.min(k) {
            for l in 0..=n.min(k - i) {
                let j = k - i - l;
                g.add(
                    &moyal_term(proj.order(i), proj.order(l), j)?,
                    Complex64::new(1.0, 0.0),
                );
            }
        }
        if k <= n {
            g.add(proj.order(k), Complex64::new(-1.0, 0.0));
        }
        let mut f = PolyPSymbol::new();
        for i in 0..=n.min(k) {
            let j = k - i;
            f.add(&moyal_term(&h, proj.order(i), j)?, Complex64::new(1.0, 0.0));
            f.add(
                &moyal_term(proj.order(i), &h, j)?,
                Complex64::new(-1.0, 0.0),
            );
        }
        idem.push(g);
        comm.push(f);
    }

    let idempotency_residuals: Vec<f64> = epsilons
        .iter()
        .map(|&e| sup_residual(&idem, e, len, p_samples))
        .collect();
    let commutator_residuals: Vec<f64> = epsilons
        .iter()
        .map(|&e| sup_residual(&comm, e, len, p_samples))
        .collect();

    let offdiag_consistency = if table.n_max() > n {
        let rho = table.rho();
        let mut want = PolyPSymbol::new();
        for m in 0..=top {
            let x = table.values(Component::X, top, m);
            let y = table.values(Component::Y, top, m);
            let z = Complex64::new(0.0, 0.0);
            let sx = (0..len).map(|i| -2.0 * rho[i] * y[i]).collect();
            let sy = (0..len)
                .map(|i| Complex64::new(0.0, -2.0 * rho[i]) * x[i])
                .collect();
            let field = PauliField::new(
                table.grid().clone(),
                table.theta_prime().clone(),
                [vec![z; len], sx, sy, vec![z; len]],
            )?;
            want.add_term(top - m, &field, Complex64::new(1.0, 0.0));
        }
        let scale = sup_over(&want, len, p_samples);
        want.add(&comm[top], Complex64::new(-1.0, 0.0));
        Some(sup_over(&want, len, p_samples) / scale)
    } else {
        None
    };

    let adiabatic_anchor = if n == 0 {
        let mut want = comm[1].clone();
        let tp = table.theta_prime();
        let z = Complex64::new(0.0, 0.0);
        let sx = tp.iter().map(|&t| Complex64::new(0.0, 0.5 * t)).collect();
        let field = PauliField::new(
            table.grid().clone(),
            tp.clone(),
            [vec![z; len], sx, vec![z; len], vec![z; len]],
        )?;
        want.add_term(1, &field, Complex64::new(-1.0, 0.0));
        Some(sup_over(&want, len, p_samples))
    } else {
        None
    };

    let order_norms = |v: &[PolyPSymbol<PauliField>]| -> Vec<f64> {
        v.iter().map(|s| sup_over(s, len, p_samples)).collect()
    };
    let idempotency_orders = order_norms(&idem);
    let commutator_orders = order_norms(&comm);
    let lower_order_max = idempotency_orders[..=n]
        .iter()
        .chain(&commutator_orders[..=n])
        .fold(0.0f64, |a, &b| a.max(b));
    Ok(DefectReport {
        n,
        epsilons: epsilons.to_vec(),
        idempotency_orders,
        commutator_orders,
        lower_order_max,
        idempotency_slope: fit_slope(epsilons, &idempotency_residuals)?,
        commutator_slope: fit_slope(epsilons, &commutator_residuals)?,
        idempotency_residuals,
        commutator_residuals,
        offdiag_consistency,
        adiabatic_anchor,
    })
}
