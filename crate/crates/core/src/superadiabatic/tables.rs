use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DiabaticModel, ModelKind, SechTanhPoly};
use crate::spectral::{
    antiderivative_with_tolerance, derivative_values, Grid1D, GridFunction, Space,
};

pub const AB_MAX: usize = 16;
pub const RECURSION_MAX: usize = 12;
pub const RECURSION_DEFAULT: usize = 8;

/// Derivatives of the potential in the rotating frame: `∂ⁿV = aₙ σz(q) + bₙ σx(q)`.
#[derive(Clone, Debug)]
pub struct ABTable {
    pub a: Vec<GridFunction>,
    pub b: Vec<GridFunction>,
}

impl ABTable {
    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }
}

/// Closed (sech, tanh) polynomials for `aₙ, bₙ` with constant ρ = δ.
pub fn ab_polys(
    theta_prime: &SechTanhPoly,
    delta: f64,
    n_max: usize,
) -> (Vec<SechTanhPoly>, Vec<SechTanhPoly>) {
    let alpha = theta_prime.alpha();
    let mut a = vec![SechTanhPoly::constant(alpha, delta)];
    let mut b = vec![SechTanhPoly::zero(alpha)];
    for n in 0..n_max {
        let an = a[n].derivative().add(&theta_prime.mul(&b[n]));
        let bn = b[n].derivative().add(&theta_prime.mul(&a[n]).scale(-1.0));
        a.push(an);
        b.push(bn);
    }
    (a, b)
}

/// θ′ and ρ sampled on `grid`.
pub(crate) fn sample_model(
    model: &DiabaticModel,
    grid: &Arc<Grid1D>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match model.kind() {
        ModelKind::SechTheta { .. } => {
            let xs = grid.xs();
            Ok((
                xs.iter().map(|&x| model.theta_prime(x)).collect(),
                vec![model.delta(); grid.n()],
            ))
        }
        ModelKind::Tabulated(t) => {
            if t.rho.len() != grid.n() || t.x_min != grid.x_min() || t.x_max != grid.x_max() {
                return Err(Error::GridMismatch(
                    "tabulated model samples live on a different grid".into(),
                ));
            }
            Ok((t.theta_prime.clone(), t.rho.clone()))
        }
    }
}

fn real_fn(grid: &Arc<Grid1D>, v: &[f64]) -> GridFunction {
    GridFunction::new(
        grid.clone(),
        Space::Position,
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    )
    .expect("length checked by caller")
}

pub fn ab_tables(model: &DiabaticModel, grid: &Arc<Grid1D>, n_max: usize) -> Result<ABTable> {
    if n_max > AB_MAX {
        return Err(Error::Capability {
            what: "ab table order",
            requested: n_max,
            limit: AB_MAX,
        });
    }
    match model.kind() {
        ModelKind::SechTheta { .. } => {
            let tp = model.theta_prime_poly(0)?;
            let (pa, pb) = ab_polys(&tp, model.delta(), n_max);
            let sample = |p: &SechTanhPoly| {
                if p.is_zero() {
                    GridFunction::zeros(grid, Space::Position)
                } else {
                    GridFunction::from_real(grid, Space::Position, |x| p.eval(x))
                }
            };
            Ok(ABTable {
                a: pa.iter().map(sample).collect(),
                b: pb.iter().map(sample).collect(),
            })
        }
        ModelKind::Tabulated(_) => {
            let (tp, rho) = sample_model(model, grid)?;
            let n = grid.n();
            let a0 = real_fn(grid, &rho);
            let b0 = GridFunction::zeros(grid, Space::Position);
            let rho_prime = if model.is_constant_rho() {
                GridFunction::zeros(grid, Space::Position)
            } else {
                // remove the linear ramp between the end values before differentiating
                let slope = (rho[n - 1] - rho[0]) / (grid.x(n - 1) - grid.x(0));
                let detrended: Vec<Complex64> = (0..n)
                    .map(|i| Complex64::new(rho[i] - rho[0] - slope * (grid.x(i) - grid.x(0)), 0.0))
                    .collect();
                let d = derivative_values(grid, &detrended, 1);
                GridFunction::new(
                    grid.clone(),
                    Space::Position,
                    d.iter().map(|v| v + slope).collect(),
                )?
            };
            let tpc: Vec<Complex64> = tp.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let mut a = vec![a0.clone(), rho_prime];
            let mut b = vec![b0, a0.map(|v| -v).mul_pointwise(&real_fn(grid, &tp))?];
            for k in 1..n_max {
                let da = derivative_values(grid, a[k].values(), 1);
                let db = derivative_values(grid, b[k].values(), 1);
                let an: Vec<Complex64> =
                    (0..n).map(|i| da[i] + tpc[i] * b[k].values()[i]).collect();
                let bn: Vec<Complex64> =
                    (0..n).map(|i| db[i] - tpc[i] * a[k].values()[i]).collect();
                a.push(GridFunction::new(grid.clone(), Space::Position, an)?);
                b.push(GridFunction::new(grid.clone(), Space::Position, bn)?);
            }
            a.truncate(n_max + 1);
            b.truncate(n_max + 1);
            Ok(ABTable { a, b })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Z,
    W,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::X, Component::Y, Component::Z, Component::W];

    fn index(self) -> usize {
        self as usize
    }
}

/// Deliberate corruption of the recursion, used to check that the
/// verification suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Seeds the forbidden slot y₁¹ with y₁⁰.
    StraySeed,
    /// Flips the sign of the Moyal sum in the x update.
    SignFlip,
}

#[derive(Clone, Copy, Debug)]
pub struct RecursionOptions {
    pub n_max: usize,
    /// Relative boundary size above which an integrand counts as non-decaying.
    pub decay_tolerance: f64,
    /// Relative right-edge value allowed for the integrated z and w.
    pub boundary_tolerance: f64,
    pub mutation: Option<Mutation>,
}

impl Default for RecursionOptions {
    fn default() -> Self {
        Self {
            n_max: RECURSION_DEFAULT,
            decay_tolerance: 1e-10,
            boundary_tolerance: 1e-9,
            mutation: None,
        }
    }
}

/// Per-power recursion output: `πₙ = Σ_m p^(n−m) (xₙᵐ σx + i yₙᵐ σy + zₙᵐ σz + wₙᵐ)`.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    grid: Arc<Grid1D>,
    n_max: usize,
    rho: Vec<f64>,
    theta_prime: Arc<Vec<f64>>,
    ab: ABTable,
    entries: Vec<Vec<[Vec<Complex64>; 4]>>,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl CoefficientTable {
    pub fn build(
        model: &DiabaticModel,
        grid: &Arc<Grid1D>,
        opts: RecursionOptions,
    ) -> Result<Self> {
        let n_max = opts.n_max;
        if n_max > RECURSION_MAX {
            return Err(Error::Capability {
                what: "recursion order",
                requested: n_max,
                limit: RECURSION_MAX,
            });
        }
        let (tp, rho) = sample_model(model, grid)?;
        let ab = ab_tables(model, grid, n_max / 2 + 1)?;
        let n = grid.n();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let blank = || [zero.clone(), zero.clone(), zero.clone(), zero.clone()];
        let mut entries: Vec<Vec<[Vec<Complex64>; 4]>> = (0..=n_max.max(1))
            .map(|l| (0..=l).map(|_| blank()).collect())
            .collect();
        entries[0][0][2] = vec![Complex64::new(0.5, 0.0); n];
        entries[0][0][3] = vec![Complex64::new(0.5, 0.0); n];
        entries[1][0][1] = (0..n)
            .map(|i| Complex64::new(0.0, -tp[i] / (4.0 * rho[i])))
            .collect();
        if opts.mutation == Some(Mutation::StraySeed) {
            entries[1][1][1] = entries[1][0][1].clone();
        }

        let mut table = Self {
            grid: grid.clone(),
            n_max,
            rho,
            theta_prime: Arc::new(tp),
            ab,
            entries,
        };
        for level in 2..=n_max {
            if level % 2 == 0 {
                table.step_x(level, opts.mutation == Some(Mutation::SignFlip));
                table.step_zw(level, &opts)?;
            } else {
                table.step_y(level);
            }
        }
        table.entries.truncate(n_max + 1);
        Ok(table)
    }

    fn get(&self, c: Component, n: usize, m: i64) -> Option<&[Complex64]> {
        if m < 0 || m as usize > n {
            return None;
        }
        let v = &self.entries[n][m as usize][c.index()];
        if v.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            None
        } else {
            Some(v)
        }
    }

    /// `Σ_{j=1}^{⌊m/2⌋} (2i)^(−j) C(n+1−m+j, j) (fa·a_j·A_{n+1−j}^{m−2j} + fb·b_j·B_{n+1−j}^{m−2j})`.
    fn moyal_sum(
        &self,
        n: usize,
        m: usize,
        (ca, fa): (Component, f64),
        (cb, fb): (Component, f64),
    ) -> Vec<Complex64> {
        let len = self.grid.n();
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for j in 1..=m / 2 {
            let w = Complex64::new(0.0, 2.0).powi(-(j as i32)) * binom(n + 1 - m + j, j);
            let lvl = n + 1 - j;
            let mm = m as i64 - 2 * j as i64;
            let (aj, bj) = (self.ab.a[j].values(), self.ab.b[j].values());
            if let Some(t) = self.get(ca, lvl, mm) {
                for i in 0..len {
                    out[i] += w * fa * aj[i] * t[i];
                }
            }
            if let Some(t) = self.get(cb, lvl, mm) {
                for i in 0..len {
                    out[i] += w * fb * bj[i] * t[i];
                }
            }
        }
        out
    }

    fn deriv(&self, c: Component, n: usize, m: usize) -> Vec<Complex64> {
        match self.get(c, n, m as i64) {
            Some(v) => derivative_values(&self.grid, v, 1),
            None => vec![Complex64::new(0.0, 0.0); self.grid.n()],
        }
    }

    /// `x_{n+1}ᵐ = −(1/2ρ)[−i (yₙᵐ)′ − 2 Σ (...)(b_j z − a_j x)]` for `n + 1 = level`.
    fn step_x(&mut self, level: usize, flip: bool) {
        let n = level - 1;
        let sign = if flip { -2.0 } else { 2.0 };
        for m in 0..=level {
            let dy = self.deriv(Component::Y, n, m);
            let s = self.moyal_sum(n, m, (Component::X, -1.0), (Component::Z, 1.0));
            let v: Vec<Complex64> = (0..self.grid.n())
                .map(|i| -(Complex64::new(0.0, -1.0) * dy[i] - sign * s[i]) / (2.0 * self.rho[i]))
                .collect();
            self.entries[level][m][Component::X.index()] = v;
        }
    }

    /// `y_{n+1}ᵐ = −(1/2ρ)[−i((xₙᵐ)′ − θ′zₙᵐ) − 2 Σ (...)(−a_j y + b_j w)]`.
    fn step_y(&mut self, level: usize) {
        let n = level - 1;
        let tp = self.theta_prime.clone();
        for m in 0..=level {
            let dx = self.deriv(Component::X, n, m);
            let z = self.get(Component::Z, n, m as i64).map(|v| v.to_vec());
            let s = self.moyal_sum(n, m, (Component::Y, -1.0), (Component::W, 1.0));
            let v: Vec<Complex64> = (0..self.grid.n())
                .map(|i| {
                    let zi = z.as_ref().map_or(Complex64::new(0.0, 0.0), |z| z[i]);
                    -(Complex64::new(0.0, -1.0) * (dx[i] - tp[i] * zi) - 2.0 * s[i])
                        / (2.0 * self.rho[i])
                })
                .collect();
            self.entries[level][m][Component::Y.index()] = v;
        }
    }

    /// Integrates `(zₙᵐ)′ = −θ′xₙᵐ + 2iΣ(...)(b_j y + a_j w)` and
    /// `(wₙᵐ)′ = 2iΣ(...)(a_j z + b_j x)` from the left edge, in increasing m.
    fn step_zw(&mut self, n: usize, opts: &RecursionOptions) -> Result<()> {
        let len = self.grid.n();
        let two_i = Complex64::new(0.0, 2.0);
        for m in 0..=n {
            let x = self.get(Component::X, n, m as i64).map(|v| v.to_vec());
            let sz = self.moyal_sum(n, m, (Component::W, 1.0), (Component::Y, 1.0));
            let sw = self.moyal_sum(n, m, (Component::Z, 1.0), (Component::X, 1.0));
            let dz: Vec<Complex64> = (0..len)
                .map(|i| {
                    let xi = x.as_ref().map_or(Complex64::new(0.0, 0.0), |x| x[i]);
                    -self.theta_prime[i] * xi + two_i * sz[i]
                })
                .collect();
            let dw: Vec<Complex64> = sw.iter().map(|v| two_i * v).collect();
            let z = self.integrate(dz, n, m, "z", opts)?;
            let w = self.integrate(dw, n, m, "w", opts)?;
            self.entries[n][m][Component::Z.index()] = z;
            self.entries[n][m][Component::W.index()] = w;
        }
        Ok(())
    }

    fn integrate(
        &self,
        f: Vec<Complex64>,
        n: usize,
        m: usize,
        name: &str,
        opts: &RecursionOptions,
    ) -> Result<Vec<Complex64>> {
        if f.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
            return Ok(f);
        }
        let g = GridFunction::new(self.grid.clone(), Space::Position, f)?;
        let anti = antiderivative_with_tolerance(&g, opts.decay_tolerance)
            .map_err(|e| Error::Accuracy(format!("{name}[{n}][{m}]: {e}")))?;
        let sup = anti.function.sup_norm();
        if anti.right_value.norm() > opts.boundary_tolerance * sup {
            return Err(Error::Accuracy(format!(
                "{name}[{n}][{m}] does not vanish at the right edge: {:.3e} of sup norm",
                anti.right_value.norm() / sup
            )));
        }
        Ok(anti.function.into_values())
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn theta_prime(&self) -> &Arc<Vec<f64>> {
        &self.theta_prime
    }

    pub fn ab(&self) -> &ABTable {
        &self.ab
    }

    /// Samples of `cₙᵐ`; `m ≤ n ≤ n_max`.
    pub fn values(&self, c: Component, n: usize, m: usize) -> &[Complex64] {
        &self.entries[n][m][c.index()]
    }

    pub fn function(&self, c: Component, n: usize, m: usize) -> GridFunction {
        GridFunction::new(
            self.grid.clone(),
            Space::Position,
            self.values(c, n, m).to_vec(),
        )
        .expect("table entries match the grid")
    }

    pub fn sup(&self, c: Component, n: usize, m: usize) -> f64 {
        self.values(c, n, m)
            .iter()
            .fold(0.0, |acc, v| acc.max(v.norm()))
    }
}

/// Table for `model` on `grid` up to order `n_max` with default tolerances.
pub fn coefficient_tables(
    model: &DiabaticModel,
    grid: &Arc<Grid1D>,
    n_max: usize,
) -> Result<CoefficientTable> {
    CoefficientTable::build(
        model,
        grid,
        RecursionOptions {
            n_max,
            ..Default::default()
        },
    )
}

/// Whether `(n, m)` may carry a nonzero entry of component `c`.
pub fn structurally_nonzero(c: Component, n: usize, m: usize) -> bool {
    match c {
        Component::Y => n % 2 == 1 && m % 4 == 0,
        Component::X | Component::Z => n % 2 == 0 && m % 4 == 0,
        Component::W => n % 2 == 0 && m % 4 == 2,
    }
}
