use std::sync::Arc;

use num_complex::Complex64;

use super::symbols::ProjectionSymbol;
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::{derivative_stack, resample, Grid1D, GridFunction, Space, SymbolCoeff};

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

struct Term {
    power: usize,
    /// `derivs[d][2r + s]`: d-th q-derivative of the diabatic entry (r, s).
    derivs: Vec<[Vec<Complex64>; 4]>,
}

/// Position-space Weyl quantization of a projection symbol, applied
/// entry-wise in the diabatic basis on a solver grid.
pub struct SuperadiabaticProjector {
    grid: Arc<Grid1D>,
    orders: Vec<Vec<Term>>,
}

impl SuperadiabaticProjector {
    /// Resamples the symbol onto `grid` (same domain) and rotates it into the
    /// diabatic basis of `model`.
    pub fn new(
        model: &DiabaticModel,
        symbol: &ProjectionSymbol,
        grid: &Arc<Grid1D>,
    ) -> Result<Self> {
        let frames: Vec<_> = grid
            .xs()
            .iter()
            .map(|&x| model.adiabatic_frame(x))
            .collect();
        let n = grid.n();
        let mut orders = Vec::with_capacity(symbol.n + 1);
        for (j, pj) in symbol.orders().iter().enumerate() {
            let mut terms = Vec::new();
            for (power, field) in pj.terms() {
                let src = field.grid();
                if !src.same_domain(grid) {
                    return Err(Error::GridMismatch(
                        "projection symbol and solver grid domains differ".into(),
                    ));
                }
                let mut comps = Vec::with_capacity(4);
                for c in 0..4 {
                    let f = GridFunction::new(
                        src.clone(),
                        Space::Position,
                        field.component(c).to_vec(),
                    )?;
                    comps.push(resample(&f, grid)?.into_values());
                }
                let mut entries: [Vec<Complex64>; 4] = Default::default();
                for (e, out) in entries.iter_mut().enumerate() {
                    let (r, s) = (e / 2, e % 2);
                    *out = (0..n)
                        .map(|i| {
                            let fr = &frames[i];
                            let mut v = comps[1][i] * fr.sigma_x[r][s]
                                + comps[2][i] * fr.sigma_y[r][s]
                                + comps[3][i] * fr.sigma_z[r][s];
                            if r == s {
                                v += comps[0][i];
                            }
                            v
                        })
                        .collect();
                }
                let derivs = if power == 0 {
                    vec![entries]
                } else {
                    let stacks: Vec<Vec<Vec<Complex64>>> = entries
                        .iter()
                        .map(|e| derivative_stack(grid, e, power))
                        .collect();
                    (0..=power)
                        .map(|d| {
                            [
                                stacks[0][d].clone(),
                                stacks[1][d].clone(),
                                stacks[2][d].clone(),
                                stacks[3][d].clone(),
                            ]
                        })
                        .collect()
                };
                terms.push(Term { power, derivs });
            }
            if j == 0 && terms.is_empty() {
                return Err(Error::InvalidModel(
                    "projection symbol lacks its zeroth order".into(),
                ));
            }
            orders.push(terms);
        }
        Ok(Self {
            grid: grid.clone(),
            orders,
        })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.orders.len() - 1
    }

    /// `εʲ Ŵ(πⱼ)ψ` for j = 0..=n, as diabatic spinors.
    pub fn order_contributions(
        &self,
        up: &[Complex64],
        down: &[Complex64],
    ) -> Vec<[Vec<Complex64>; 2]> {
        let n = self.grid.n();
        let eps = self.grid.epsilon();
        let degree = self
            .orders
            .iter()
            .flatten()
            .map(|t| t.power)
            .max()
            .unwrap_or(0);
        let psi = [
            derivative_stack(&self.grid, up, degree),
            derivative_stack(&self.grid, down, degree),
        ];
        let zero = Complex64::new(0.0, 0.0);
        self.orders
            .iter()
            .enumerate()
            .map(|(j, terms)| {
                let mut out = [vec![zero; n], vec![zero; n]];
                for t in terms {
                    let m = t.power;
                    let pre = Complex64::new(0.0, -eps).powu(m as u32) * eps.powi(j as i32);
                    for i in 0..=m {
                        let w = pre * binom(m, i) * 0.5f64.powi(i as i32);
                        for r in 0..2 {
                            for s in 0..2 {
                                let g = &t.derivs[i][2 * r + s];
                                let f = &psi[s][m - i];
                                for (o, (gv, fv)) in out[r].iter_mut().zip(g.iter().zip(f)) {
                                    *o += w * gv * fv;
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// `Π̂ₙψ` for the full truncation order.
    pub fn apply(&self, up: &[Complex64], down: &[Complex64]) -> [Vec<Complex64>; 2] {
        let parts = self.order_contributions(up, down);
        let n = self.grid.n();
        let mut out = [
            vec![Complex64::new(0.0, 0.0); n],
            vec![Complex64::new(0.0, 0.0); n],
        ];
        for part in &parts {
            for r in 0..2 {
                out[r].iter_mut().zip(&part[r]).for_each(|(o, v)| *o += v);
            }
        }
        out
    }

    /// `‖(1 − Π̂ₖ)ψ‖₂` for every truncation k = 0..=n.
    pub fn complement_norms(&self, up: &[Complex64], down: &[Complex64]) -> Vec<f64> {
        let parts = self.order_contributions(up, down);
        let dx = self.grid.dx();
        let mut rest = [up.to_vec(), down.to_vec()];
        parts
            .iter()
            .map(|part| {
                for r in 0..2 {
                    rest[r].iter_mut().zip(&part[r]).for_each(|(o, v)| *o -= v);
                }
                (rest.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt()
            })
            .collect()
    }
}

impl std::fmt::Debug for SuperadiabaticProjector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SuperadiabaticProjector")
            .field("grid", &self.grid)
            .field("n", &self.n())
            .finish()
    }
}
