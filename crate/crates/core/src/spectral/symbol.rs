use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::derivative_values;
use super::grid::{Grid1D, GridFunction, Space};
use crate::error::{Error, Result};
use crate::model::{AdiabaticFrame, Mat2};

pub const MOYAL_MAX_ORDER: usize = 8;

/// Coefficient functions of q that a [`PolyPSymbol`] can carry.
pub trait SymbolCoeff: Clone + Send + Sync {
    fn grid(&self) -> &Arc<Grid1D>;
    fn zero_like(&self) -> Self;
    /// `self += s · other`.
    fn add_scaled(&mut self, other: &Self, s: Complex64);
    /// Pointwise product, matrix order `self · other`.
    fn product(&self, other: &Self) -> Self;
    /// First q-derivative.
    fn dq(&self) -> Self;
    fn sup_norm(&self) -> f64;
    fn is_exact_zero(&self) -> bool;
}

impl SymbolCoeff for GridFunction {
    fn grid(&self) -> &Arc<Grid1D> {
        GridFunction::grid(self)
    }

    fn zero_like(&self) -> Self {
        GridFunction::zeros(GridFunction::grid(self), Space::Position)
    }

    fn add_scaled(&mut self, other: &Self, s: Complex64) {
        GridFunction::add_scaled(self, other, s).expect("coefficients share a grid");
    }

    fn product(&self, other: &Self) -> Self {
        self.mul_pointwise(other)
            .expect("coefficients share a grid")
    }

    fn dq(&self) -> Self {
        if GridFunction::is_exact_zero(self) {
            return self.clone();
        }
        let g = GridFunction::grid(self);
        GridFunction::new(
            g.clone(),
            Space::Position,
            derivative_values(g, self.values(), 1),
        )
        .expect("same length")
    }

    fn sup_norm(&self) -> f64 {
        GridFunction::sup_norm(self)
    }

    fn is_exact_zero(&self) -> bool {
        GridFunction::is_exact_zero(self)
    }
}

/// Matrix field `c₀·1 + c_x σx(q) + c_y σy(q) + c_z σz(q)` in the rotating
/// Pauli basis `σ(q) = U₀(q) σ U₀(q)`.
///
/// The basis obeys the usual Pauli algebra pointwise and moves with
/// `σx′ = θ′σz`, `σz′ = −θ′σx`, `σy′ = 0`, so q-derivatives only ever touch
/// the coefficient functions.
#[derive(Clone, Debug)]
pub struct PauliField {
    grid: Arc<Grid1D>,
    theta_prime: Arc<Vec<f64>>,
    comps: [Vec<Complex64>; 4],
}

impl PauliField {
    pub fn new(
        grid: Arc<Grid1D>,
        theta_prime: Arc<Vec<f64>>,
        comps: [Vec<Complex64>; 4],
    ) -> Result<Self> {
        let n = grid.n();
        if theta_prime.len() != n || comps.iter().any(|c| c.len() != n) {
            return Err(Error::GridMismatch("pauli field component length".into()));
        }
        Ok(Self {
            grid,
            theta_prime,
            comps,
        })
    }

    pub fn constant(grid: Arc<Grid1D>, theta_prime: Arc<Vec<f64>>, c: [Complex64; 4]) -> Self {
        let n = grid.n();
        let comps = c.map(|v| vec![v; n]);
        Self {
            grid,
            theta_prime,
            comps,
        }
    }

    pub fn zero(grid: Arc<Grid1D>, theta_prime: Arc<Vec<f64>>) -> Self {
        Self::constant(grid, theta_prime, [Complex64::new(0.0, 0.0); 4])
    }

    pub fn theta_prime(&self) -> &Arc<Vec<f64>> {
        &self.theta_prime
    }

    /// Component 0: identity, 1: σx, 2: σy, 3: σz.
    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut Vec<Complex64> {
        &mut self.comps[c]
    }

    pub fn at(&self, i: usize) -> [Complex64; 4] {
        [
            self.comps[0][i],
            self.comps[1][i],
            self.comps[2][i],
            self.comps[3][i],
        ]
    }

    /// Hilbert–Schmidt norm at sample `i`.
    pub fn frobenius_at(&self, i: usize) -> f64 {
        (2.0 * self.at(i).iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Diabatic-frame matrix at sample `i`.
    pub fn diabatic_at(&self, i: usize, frame: &AdiabaticFrame) -> Mat2 {
        let c = self.at(i);
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                m[r][s] = c[1] * frame.sigma_x[r][s]
                    + c[2] * frame.sigma_y[r][s]
                    + c[3] * frame.sigma_z[r][s];
            }
            m[r][r] += c[0];
        }
        m
    }
}

impl SymbolCoeff for PauliField {
    fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    fn zero_like(&self) -> Self {
        Self::zero(self.grid.clone(), self.theta_prime.clone())
    }

    fn add_scaled(&mut self, other: &Self, s: Complex64) {
        for c in 0..4 {
            self.comps[c]
                .iter_mut()
                .zip(&other.comps[c])
                .for_each(|(a, b)| *a += s * b);
        }
    }

    fn product(&self, other: &Self) -> Self {
        let n = self.grid.n();
        let i = Complex64::i();
        let mut out = self.zero_like();
        for k in 0..n {
            let a = self.at(k);
            let b = other.at(k);
            let dot = a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
            let cross = [
                a[2] * b[3] - a[3] * b[2],
                a[3] * b[1] - a[1] * b[3],
                a[1] * b[2] - a[2] * b[1],
            ];
            out.comps[0][k] = a[0] * b[0] + dot;
            for c in 0..3 {
                out.comps[c + 1][k] = a[0] * b[c + 1] + b[0] * a[c + 1] + i * cross[c];
            }
        }
        out
    }

    fn dq(&self) -> Self {
        let d: Vec<Vec<Complex64>> = self
            .comps
            .iter()
            .map(|c| {
                if c.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
                    c.clone()
                } else {
                    derivative_values(&self.grid, c, 1)
                }
            })
            .collect();
        let tp = &self.theta_prime;
        let mut out = self.clone();
        for k in 0..self.grid.n() {
            out.comps[0][k] = d[0][k];
            out.comps[1][k] = d[1][k] - tp[k] * self.comps[3][k];
            out.comps[2][k] = d[2][k];
            out.comps[3][k] = d[3][k] + tp[k] * self.comps[1][k];
        }
        out
    }

    fn sup_norm(&self) -> f64 {
        (0..self.grid.n()).fold(0.0, |m, k| m.max(self.frobenius_at(k)))
    }

    fn is_exact_zero(&self) -> bool {
        self.comps
            .iter()
            .flatten()
            .all(|v| v.re == 0.0 && v.im == 0.0)
    }
}

/// Phase-space symbol `Σ_m p^m c_m(q)`, polynomial in momentum.
#[derive(Clone, Debug)]
pub struct PolyPSymbol<C> {
    terms: BTreeMap<usize, C>,
}

impl<C> Default for PolyPSymbol<C> {
    fn default() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }
}

impl<C: SymbolCoeff> PolyPSymbol<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn monomial(power: usize, coeff: C) -> Self {
        let mut s = Self::new();
        s.terms.insert(power, coeff);
        s
    }

    /// Adds `s · coeff · p^power`.
    pub fn add_term(&mut self, power: usize, coeff: &C, s: Complex64) {
        match self.terms.get_mut(&power) {
            Some(c) => c.add_scaled(coeff, s),
            None => {
                let mut c = coeff.zero_like();
                c.add_scaled(coeff, s);
                self.terms.insert(power, c);
            }
        }
    }

    pub fn add(&mut self, other: &Self, s: Complex64) {
        for (&p, c) in &other.terms {
            self.add_term(p, c, s);
        }
    }

    pub fn coeff(&self, power: usize) -> Option<&C> {
        self.terms.get(&power)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &C)> {
        self.terms.iter().map(|(&p, c)| (p, c))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = Self::new();
        out.add(self, s);
        out
    }

    /// Drops coefficients that are identically zero.
    pub fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| !c.is_exact_zero());
        self
    }

    pub fn sup_norm(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.sup_norm()))
    }
}

impl PolyPSymbol<GridFunction> {
    /// `Σ_m p^m c_m(q_i)`.
    pub fn eval(&self, p: f64, i: usize) -> Complex64 {
        self.terms
            .iter()
            .map(|(&m, c)| c.values()[i] * p.powi(m as i32))
            .sum()
    }
}

impl PolyPSymbol<PauliField> {
    pub fn eval(&self, p: f64, i: usize) -> [Complex64; 4] {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (&m, c) in &self.terms {
            let pm = p.powi(m as i32);
            for (o, v) in out.iter_mut().zip(c.at(i)) {
                *o += v * pm;
            }
        }
        out
    }
}

fn falling(a: usize, k: usize) -> f64 {
    (0..k).map(|i| (a - i) as f64).product()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `(A#B)_j = (2i)^(−j) Σ_{α+β=j} (−1)^α/(α!β!) (∂_q^α ∂_p^β A)(∂_p^α ∂_q^β B)`.
pub fn moyal_term<C: SymbolCoeff>(
    a: &PolyPSymbol<C>,
    b: &PolyPSymbol<C>,
    j: usize,
) -> Result<PolyPSymbol<C>> {
    if j > MOYAL_MAX_ORDER {
        return Err(Error::Capability {
            what: "moyal order",
            requested: j,
            limit: MOYAL_MAX_ORDER,
        });
    }
    let stack = |c: &C| {
        let mut v = vec![c.clone()];
        for _ in 0..j {
            let next = v.last().unwrap().dq();
            v.push(next);
        }
        v
    };
    let da: Vec<(usize, Vec<C>)> = a.terms().map(|(p, c)| (p, stack(c))).collect();
    let db: Vec<(usize, Vec<C>)> = b.terms().map(|(p, c)| (p, stack(c))).collect();
    let pre = Complex64::new(0.0, 2.0).powi(-(j as i32));
    let mut out = PolyPSymbol::new();
    for alpha in 0..=j {
        let beta = j - alpha;
        let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign / (factorial(alpha) * factorial(beta));
        for (pa, sa) in &da {
            if *pa < beta {
                continue;
            }
            for (pb, sb) in &db {
                if *pb < alpha {
                    continue;
                }
                let f = w * falling(*pa, beta) * falling(*pb, alpha);
                let prod = sa[alpha].product(&sb[beta]);
                out.add_term(pa - beta + pb - alpha, &prod, pre * f);
            }
        }
    }
    Ok(out)
}
