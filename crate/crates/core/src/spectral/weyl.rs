use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{GridFunction, Space};
use super::symbol::PolyPSymbol;
use super::{derivative_stack, to_momentum, to_position};
use crate::error::{Error, Result};

/// Which of the two equivalent realisations of the Weyl quantization to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeylForm {
    /// Convolution with `ĝ(k−η)((η+k)/2)^m` in momentum space.
    MomentumKernel,
    /// `(−iε)^m Σ_j C(m,j) 2^(−j) g^(j) ψ^(m−j)` in position space.
    PositionSpace,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Applies the Weyl quantization of a scalar symbol `Σ_m p^m g_m(q)` to ψ,
/// with `p = −iε∂`. Input and output are in position space.
pub fn weyl_apply(
    symbol: &PolyPSymbol<GridFunction>,
    psi: &GridFunction,
    form: WeylForm,
) -> Result<GridFunction> {
    if psi.space() != Space::Position {
        return Err(Error::GridMismatch(
            "weyl_apply expects psi in position space".into(),
        ));
    }
    let grid = psi.grid();
    for (_, c) in symbol.terms() {
        grid.check_same(c.grid())?;
        if c.space() != Space::Position {
            return Err(Error::GridMismatch(
                "symbol coefficients must be in position space".into(),
            ));
        }
    }
    let values = match form {
        WeylForm::PositionSpace => position_form(symbol, psi),
        WeylForm::MomentumKernel => momentum_form(symbol, psi),
    };
    GridFunction::new(grid.clone(), Space::Position, values)
}

fn position_form(symbol: &PolyPSymbol<GridFunction>, psi: &GridFunction) -> Vec<Complex64> {
    let grid = psi.grid();
    let n = grid.n();
    let eps = grid.epsilon();
    let dpsi = derivative_stack(grid, psi.values(), symbol.degree());
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (m, g) in symbol.terms() {
        let dg = derivative_stack(grid, g.values(), m);
        let pre = Complex64::new(0.0, -eps).powu(m as u32);
        for j in 0..=m {
            let w = pre * binom(m, j) * 0.5f64.powi(j as i32);
            for i in 0..n {
                out[i] += w * dg[j][i] * dpsi[m - j][i];
            }
        }
    }
    out
}

fn momentum_form(symbol: &PolyPSymbol<GridFunction>, psi: &GridFunction) -> Vec<Complex64> {
    let grid = psi.grid();
    let n = grid.n();
    let eps = grid.epsilon();
    let ks = grid.ks();
    let psi_hat = to_momentum(grid, psi.values());
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(2 * n);
    let inv = planner.plan_fft_inverse(2 * n);
    let zero = Complex64::new(0.0, 0.0);
    let padded = |v: &[Complex64]| {
        let mut b = vec![zero; 2 * n];
        b[..n].copy_from_slice(v);
        fwd.process(&mut b);
        b
    };
    // η^l ψ̂(η) transformed once per power
    let degree = symbol.degree();
    let eta_pows: Vec<Vec<Complex64>> = (0..=degree)
        .map(|l| {
            let v: Vec<Complex64> = psi_hat
                .iter()
                .zip(&ks)
                .map(|(p, &k)| p * k.powi(l as i32))
                .collect();
            padded(&v)
        })
        .collect();
    let scale = grid.dk() / (2.0 * PI * eps).sqrt() / (2 * n) as f64;
    let mut out_hat = vec![zero; n];
    for (m, g) in symbol.terms() {
        let g_hat = padded(&to_momentum(grid, g.values()));
        for l in 0..=m {
            let mut conv: Vec<Complex64> =
                g_hat.iter().zip(&eta_pows[l]).map(|(a, b)| a * b).collect();
            inv.process(&mut conv);
            let w = binom(m, l) * 0.5f64.powi(m as i32) * scale;
            for a in 0..n {
                out_hat[a] += w * ks[a].powi((m - l) as i32) * conv[a + n / 2];
            }
        }
    }
    to_position(grid, &out_hat)
}
