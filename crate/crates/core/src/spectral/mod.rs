//! Periodic spectral calculus on uniform grids.
//!
//! The ε-scaled Fourier transform is
//! `f̂(k) = (2πε)^(−1/2) ∫ e^(−ikx/ε) f(x) dx`, discretised as a DFT with
//! weight `dx/√(2πε)` and the phase of the left domain edge.

mod grid;
mod symbol;
mod weyl;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

pub use grid::{Grid1D, GridFunction, Space};
pub use symbol::{moyal_term, PauliField, PolyPSymbol, SymbolCoeff, MOYAL_MAX_ORDER};
pub use weyl::{weyl_apply, WeylForm};

use crate::error::{Error, Result};

pub const DERIVATIVE_MAX_ORDER: usize = 12;

/// A value with accuracy warnings collected while producing it.
#[derive(Clone, Debug)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// Antiderivative vanishing at the left edge, with its value at the right edge.
#[derive(Clone, Debug)]
pub struct Antiderivative {
    pub function: GridFunction,
    pub right_value: Complex64,
    pub warnings: Vec<String>,
}

fn edge_phase(grid: &Grid1D, j: i64) -> Complex64 {
    let r = j as f64 * (grid.x_min() / grid.length());
    Complex64::from_polar(1.0, -2.0 * PI * (r - r.round()))
}

pub(crate) fn to_momentum(grid: &Grid1D, x: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let mut buf = x.to_vec();
    grid.fft(&mut buf);
    let scale = grid.dx() / (2.0 * PI * grid.epsilon()).sqrt();
    (0..n)
        .map(|a| {
            let j = a as i64 - (n / 2) as i64;
            buf[j.rem_euclid(n as i64) as usize] * edge_phase(grid, j) * scale
        })
        .collect()
}

pub(crate) fn to_position(grid: &Grid1D, k: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let scale = (2.0 * PI * grid.epsilon()).sqrt() / grid.dx() / n as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (a, v) in k.iter().enumerate() {
        let j = a as i64 - (n / 2) as i64;
        buf[j.rem_euclid(n as i64) as usize] = v * edge_phase(grid, j).conj() * scale;
    }
    grid.ifft(&mut buf);
    buf
}

/// Position → momentum.
pub fn scaled_fourier(f: &GridFunction) -> Result<GridFunction> {
    if f.space() != Space::Position {
        return Err(Error::GridMismatch(
            "scaled_fourier expects a position-space function".into(),
        ));
    }
    GridFunction::new(
        f.grid().clone(),
        Space::Momentum,
        to_momentum(f.grid(), f.values()),
    )
}

/// Momentum → position.
pub fn inverse_scaled_fourier(f: &GridFunction) -> Result<GridFunction> {
    if f.space() != Space::Momentum {
        return Err(Error::GridMismatch(
            "inverse_scaled_fourier expects a momentum-space function".into(),
        ));
    }
    GridFunction::new(
        f.grid().clone(),
        Space::Position,
        to_position(f.grid(), f.values()),
    )
}

/// Real (or purely imaginary) input has real (or purely imaginary) calculus
/// output; drops the round-off of the opposite part.
fn keep_phase(input: &[Complex64], out: &mut [Complex64]) {
    if input.iter().all(|v| v.im == 0.0) {
        out.iter_mut().for_each(|v| v.im = 0.0);
    } else if input.iter().all(|v| v.re == 0.0) {
        out.iter_mut().for_each(|v| v.re = 0.0);
    }
}

/// Orders `0..=max_order` of the spectral x-derivative, sharing one forward FFT.
pub(crate) fn derivative_stack(
    grid: &Grid1D,
    values: &[Complex64],
    max_order: usize,
) -> Vec<Vec<Complex64>> {
    let n = grid.n();
    let mut out = vec![values.to_vec()];
    if max_order == 0 {
        return out;
    }
    let mut spec = values.to_vec();
    grid.fft(&mut spec);
    let inv = 1.0 / n as f64;
    for order in 1..=max_order {
        let mut buf: Vec<Complex64> = (0..n)
            .map(|m| {
                if order % 2 == 1 && m == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    spec[m] * Complex64::new(0.0, grid.wavenumber(m)).powu(order as u32) * inv
                }
            })
            .collect();
        grid.ifft(&mut buf);
        keep_phase(values, &mut buf);
        out.push(buf);
    }
    out
}

pub(crate) fn derivative_values(
    grid: &Grid1D,
    values: &[Complex64],
    order: usize,
) -> Vec<Complex64> {
    derivative_stack(grid, values, order).pop().unwrap()
}

pub(crate) fn antiderivative_values(grid: &Grid1D, values: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let mut spec = values.to_vec();
    grid.fft(&mut spec);
    let inv = 1.0 / n as f64;
    let mean = spec[0] * inv;
    for (m, s) in spec.iter_mut().enumerate() {
        *s = if m == 0 || m == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            *s / Complex64::new(0.0, grid.wavenumber(m)) * inv
        };
    }
    grid.ifft(&mut spec);
    let left = spec[0];
    let dx = grid.dx();
    let mut out: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(i, &p)| mean * (i as f64 * dx) + p - left)
        .collect();
    keep_phase(values, &mut out);
    out
}

/// `dᵒʳᵈᵉʳ f / dxᵒʳᵈᵉʳ` by multiplication with `(ik/ε)^order` in transform space.
pub fn spectral_derivative(f: &GridFunction, order: usize) -> Result<Checked<GridFunction>> {
    if order > DERIVATIVE_MAX_ORDER {
        return Err(Error::Capability {
            what: "spectral derivative order",
            requested: order,
            limit: DERIVATIVE_MAX_ORDER,
        });
    }
    if f.space() != Space::Position {
        return Err(Error::GridMismatch(
            "derivative expects a position-space function".into(),
        ));
    }
    let mut warnings = Vec::new();
    let sup = f.sup_norm();
    if order > 0 && f.boundary_max() > 1e-13 * sup {
        warnings.push(format!(
            "input not decayed at the boundary: {:.3e} of sup norm",
            f.boundary_max() / sup
        ));
    }
    let value = GridFunction::new(
        f.grid().clone(),
        Space::Position,
        derivative_values(f.grid(), f.values(), order),
    )?;
    Ok(Checked { value, warnings })
}

/// Antiderivative of a function decaying at both ends, zero at `x_min`.
pub fn antiderivative_decaying(f: &GridFunction) -> Result<Antiderivative> {
    antiderivative_with_tolerance(f, 1e-12)
}

pub(crate) fn antiderivative_with_tolerance(f: &GridFunction, tol: f64) -> Result<Antiderivative> {
    if f.space() != Space::Position {
        return Err(Error::GridMismatch(
            "antiderivative expects a position-space function".into(),
        ));
    }
    let sup = f.sup_norm();
    if f.boundary_max() > tol * sup {
        return Err(Error::Accuracy(format!(
            "integrand not decayed at the boundary: {:.3e} of sup norm",
            f.boundary_max() / sup
        )));
    }
    let values = antiderivative_values(f.grid(), f.values());
    let right_value = values[values.len() - 1];
    let mut warnings = Vec::new();
    let fsup = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if right_value.norm() > 1e-9 * fsup {
        warnings.push(format!("antiderivative tends to {right_value} at x_max"));
    }
    let function = GridFunction::new(f.grid().clone(), Space::Position, values)?;
    Ok(Antiderivative {
        function,
        right_value,
        warnings,
    })
}

/// Fourier interpolation onto another grid over the same domain.
pub fn resample(f: &GridFunction, target: &Arc<Grid1D>) -> Result<GridFunction> {
    if f.space() != Space::Position {
        return Err(Error::GridMismatch(
            "resample expects a position-space function".into(),
        ));
    }
    let src = f.grid();
    if !src.same_domain(target) {
        return Err(Error::GridMismatch(
            "resample needs identical domains".into(),
        ));
    }
    let (ns, nt) = (src.n(), target.n());
    if ns == nt {
        return GridFunction::new(target.clone(), Space::Position, f.values().to_vec());
    }
    let zero = Complex64::new(0.0, 0.0);
    if f.is_exact_zero() {
        return GridFunction::new(target.clone(), Space::Position, vec![zero; nt]);
    }
    let mut spec = f.values().to_vec();
    src.fft(&mut spec);
    let mut out = vec![zero; nt];
    let half_t = (nt / 2) as i64;
    let scale = 1.0 / ns as f64;
    for (m, &s) in spec.iter().enumerate() {
        let j = src.mode(m);
        if nt > ns && j == -((ns / 2) as i64) {
            out[j.rem_euclid(nt as i64) as usize] += s * 0.5 * scale;
            out[(-j) as usize] += s * 0.5 * scale;
        } else if j.abs() < half_t {
            out[j.rem_euclid(nt as i64) as usize] += s * scale;
        }
    }
    target.ifft(&mut out);
    GridFunction::new(target.clone(), Space::Position, out)
}

/// Band-limited evaluation of the scaled transform at arbitrary, possibly
/// complex, momenta by direct summation over the significant samples.
pub fn fourier_at(f: &GridFunction, momenta: &[Complex64]) -> Result<Vec<Complex64>> {
    if f.space() != Space::Position {
        return Err(Error::GridMismatch(
            "fourier_at expects a position-space function".into(),
        ));
    }
    let g = f.grid();
    let cut = 1e-17 * f.sup_norm();
    let first = f.values().iter().position(|v| v.norm() > cut).unwrap_or(0);
    let last = f.values().iter().rposition(|v| v.norm() > cut).unwrap_or(0);
    let eps = g.epsilon();
    let pref = g.dx() / (2.0 * PI * eps).sqrt();
    let x0 = g.x(first);
    let samples = &f.values()[first..=last];
    Ok(momenta
        .iter()
        .map(|&kappa| {
            let mut phase = (-Complex64::i() * kappa * x0 / eps).exp();
            let step = (-Complex64::i() * kappa * g.dx() / eps).exp();
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                if j % 256 == 0 {
                    phase = (-Complex64::i() * kappa * g.x(first + j) / eps).exp();
                }
                acc += v * phase;
                phase *= step;
            }
            acc * pref
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(eps: f64) -> Arc<Grid1D> {
        Grid1D::new(-30.0, 30.0, 4096, eps).unwrap()
    }

    #[test]
    fn gaussian_self_dual() {
        let eps = 0.1;
        let g = grid(eps);
        let f = GridFunction::from_real(&g, Space::Position, |x| (-x * x / (2.0 * eps)).exp());
        let h = scaled_fourier(&f).unwrap();
        for (a, k) in g.ks().into_iter().enumerate() {
            if k.abs() <= 5.0 * eps.sqrt() {
                let exact = (-k * k / (2.0 * eps)).exp();
                assert!((h.values()[a] - exact).norm() / exact < 1e-10, "k={k}");
            }
        }
    }

    #[test]
    fn asymmetric_domain_phase() {
        let eps = 0.05;
        let g = Grid1D::new(-17.0, 43.0, 4096, eps).unwrap();
        let f = GridFunction::from_real(&g, Space::Position, |x| {
            (-(x - 1.0).powi(2) / (2.0 * eps)).exp()
        });
        let h = scaled_fourier(&f).unwrap();
        for (a, k) in g.ks().into_iter().enumerate() {
            if k.abs() < 0.5 {
                let exact = Complex64::from_polar((-k * k / (2.0 * eps)).exp(), -k / eps);
                assert!((h.values()[a] - exact).norm() < 1e-10);
            }
        }
    }

    fn band_limited(seed: &[f64], g: &Arc<Grid1D>) -> GridFunction {
        GridFunction::from_fn(g, Space::Position, |x| {
            seed.iter()
                .enumerate()
                .map(|(j, &c)| {
                    let x0 = -8.0 + 4.0 * j as f64;
                    Complex64::new(c, 0.5 * c)
                        * (-(x - x0).powi(2)).exp()
                        * Complex64::from_polar(1.0, x * c)
                })
                .sum()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fourier_roundtrip_and_plancherel(seed in prop::collection::vec(-1.0f64..1.0, 5)) {
            let g = grid(0.07);
            let f = band_limited(&seed, &g);
            let h = scaled_fourier(&f).unwrap();
            let back = inverse_scaled_fourier(&h).unwrap();
            let scale = f.sup_norm().max(1e-300);
            prop_assert!(back.distance(&f).unwrap() / scale < 1e-12);
            prop_assert!((h.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm().max(1e-300));
        }
    }

    #[test]
    fn derivative_examples() {
        let g = grid(0.1);
        let l = g.length();
        let w = 2.0 * PI / l;
        let f = GridFunction::from_real(&g, Space::Position, |x| (w * x).sin());
        let d = spectral_derivative(&f, 1).unwrap().value;
        let exact = GridFunction::from_real(&g, Space::Position, |x| w * (w * x).cos());
        assert!(d.distance(&exact).unwrap() / exact.l2_norm() < 1e-10);
        assert_eq!(
            spectral_derivative(&f, 0).unwrap().value.values(),
            f.values()
        );

        let g = Grid1D::new(-40.0, 40.0, 4096, 0.1).unwrap();
        let s = GridFunction::from_real(&g, Space::Position, |x| 1.0 / x.cosh());
        let d2 = spectral_derivative(&s, 2).unwrap();
        assert!(d2.warnings.is_empty());
        for (i, x) in g.xs().into_iter().enumerate() {
            if x.abs() < 20.0 {
                let sech = 1.0 / x.cosh();
                assert!((d2.value.values()[i].re - (sech - 2.0 * sech.powi(3))).abs() < 1e-8);
            }
        }
        assert!(matches!(
            spectral_derivative(&s, 13),
            Err(Error::Capability { .. })
        ));
    }

    #[test]
    fn antiderivative_examples() {
        let g = grid(0.1);
        let gauss = GridFunction::from_real(&g, Space::Position, |x| (-x * x).exp());
        let dg = GridFunction::from_real(&g, Space::Position, |x| -2.0 * x * (-x * x).exp());
        let back = antiderivative_decaying(&dg).unwrap();
        assert!(back.function.distance(&gauss).unwrap() < 1e-10);
        assert!(back
            .function
            .values()
            .iter()
            .zip(gauss.values())
            .all(|(a, b)| (a - b).norm() < 1e-10));

        let zero = GridFunction::zeros(&g, Space::Position);
        assert!(antiderivative_decaying(&zero)
            .unwrap()
            .function
            .is_exact_zero());

        // cumulative trapezoid sums at two step sizes, Richardson-combined
        let s2 = GridFunction::from_real(&g, Space::Position, |x| 1.0 / x.cosh().powi(2));
        let f = antiderivative_decaying(&s2).unwrap();
        assert!(
            !f.warnings.is_empty(),
            "total integral 2 should be reported"
        );
        let sech2 = |x: f64| 1.0 / x.cosh().powi(2);
        let trapezoid = |refine: usize| {
            let h = g.dx() / refine as f64;
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(g.n());
            for i in 0..g.n() {
                out.push(acc);
                let x0 = g.x(i);
                for r in 0..refine {
                    let x = x0 + r as f64 * h;
                    acc += 0.5 * h * (sech2(x) + sech2(x + h));
                }
            }
            out
        };
        let (coarse, fine) = (trapezoid(8), trapezoid(16));
        for i in 0..g.n() {
            let oracle = (4.0 * fine[i] - coarse[i]) / 3.0;
            assert!((f.function.values()[i].re - oracle).abs() < 1e-9, "i={i}");
        }

        let bad = GridFunction::from_real(&g, Space::Position, |x| x.cos());
        assert!(matches!(
            antiderivative_decaying(&bad),
            Err(Error::Accuracy(_))
        ));
    }

    #[test]
    fn resample_is_exact_for_band_limited() {
        let g = grid(0.1);
        let fine = g.with_points(8192).unwrap();
        let f = GridFunction::from_real(&g, Space::Position, |x| (-x * x / 3.0).exp() * x.sin());
        let up = resample(&f, &fine).unwrap();
        let exact =
            GridFunction::from_real(&fine, Space::Position, |x| (-x * x / 3.0).exp() * x.sin());
        assert!(up.distance(&exact).unwrap() < 1e-13);
        let down = resample(&up, &g).unwrap();
        assert!(down.distance(&f).unwrap() < 1e-13);
    }

    #[test]
    fn fourier_at_matches_grid_and_continues() {
        let eps = 0.1;
        let g = grid(eps);
        let f = GridFunction::from_real(&g, Space::Position, |x| (-x * x / (2.0 * eps)).exp());
        let h = scaled_fourier(&f).unwrap();
        let ks: Vec<Complex64> = (1000..1010).map(|a| Complex64::new(g.k(a), 0.0)).collect();
        let direct = fourier_at(&f, &ks).unwrap();
        for (i, a) in (1000..1010).enumerate() {
            assert!((direct[i] - h.values()[a]).norm() < 1e-12);
        }
        let off = [Complex64::new(0.123, 0.0), Complex64::new(0.0, 0.3)];
        let v = fourier_at(&f, &off).unwrap();
        for (k, val) in off.iter().zip(v) {
            let exact = (-k * k / (2.0 * eps)).exp();
            assert!((val - exact).norm() < 1e-12);
        }
    }
}
