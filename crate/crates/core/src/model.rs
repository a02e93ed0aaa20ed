//! Diabatic two-level potentials and their adiabatic frame.
//!
//! A model is a traceless symmetric potential
//! `V(q) = ρ(q) [[cos θ, sin θ], [sin θ, −cos θ]]`. The rotation angle θ is
//! gauged so that θ(0) = 0, which puts the avoided crossing at q = 0.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex 2×2 matrix, row major.
pub type Mat2 = [[Complex64; 2]; 2];

/// Default cap on the order of θ′ derivatives.
pub const K_MAX_DEFAULT: usize = 64;

/// Polynomial in `S = sech(αq)` and `T = tanh(αq)`.
///
/// Stored reduced with `T² = 1 − S²`, so every term is `S^i` or `S^i T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SechTanhPoly {
    alpha: f64,
    even: Vec<f64>,
    odd: Vec<f64>,
}

impl SechTanhPoly {
    pub fn zero(alpha: f64) -> Self {
        Self {
            alpha,
            even: Vec::new(),
            odd: Vec::new(),
        }
    }

    pub fn constant(alpha: f64, value: f64) -> Self {
        Self {
            alpha,
            even: vec![value],
            odd: Vec::new(),
        }
    }

    /// `scale · S`.
    pub fn sech(alpha: f64, scale: f64) -> Self {
        Self {
            alpha,
            even: vec![0.0, scale],
            odd: Vec::new(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_zero(&self) -> bool {
        self.even.iter().chain(&self.odd).all(|&c| c == 0.0)
    }

    fn slot(v: &mut Vec<f64>, i: usize) -> &mut f64 {
        if v.len() <= i {
            v.resize(i + 1, 0.0);
        }
        &mut v[i]
    }

    pub fn derivative(&self) -> Self {
        let a = self.alpha;
        let mut out = Self::zero(a);
        for (i, &c) in self.even.iter().enumerate() {
            if c != 0.0 && i > 0 {
                *Self::slot(&mut out.odd, i) -= i as f64 * a * c;
            }
        }
        for (i, &c) in self.odd.iter().enumerate() {
            if c != 0.0 {
                // d(S^i T) = −iα S^i T² + α S^{i+2} = −iα S^i + (i+1)α S^{i+2}
                *Self::slot(&mut out.even, i) -= i as f64 * a * c;
                *Self::slot(&mut out.even, i + 2) += (i + 1) as f64 * a * c;
            }
        }
        out
    }

    pub fn nth_derivative(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, &c) in other.even.iter().enumerate() {
            *Self::slot(&mut out.even, i) += c;
        }
        for (i, &c) in other.odd.iter().enumerate() {
            *Self::slot(&mut out.odd, i) += c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            alpha: self.alpha,
            even: self.even.iter().map(|c| c * s).collect(),
            odd: self.odd.iter().map(|c| c * s).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        fn conv(a: &[f64], b: &[f64], shift: usize, sign: f64, out: &mut Vec<f64>) {
            for (i, &x) in a.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                for (j, &y) in b.iter().enumerate() {
                    *SechTanhPoly::slot(out, i + j + shift) += sign * x * y;
                }
            }
        }
        let mut out = Self::zero(self.alpha);
        conv(&self.even, &other.even, 0, 1.0, &mut out.even);
        conv(&self.odd, &other.odd, 0, 1.0, &mut out.even);
        conv(&self.odd, &other.odd, 2, -1.0, &mut out.even);
        conv(&self.even, &other.odd, 0, 1.0, &mut out.odd);
        conv(&self.odd, &other.even, 0, 1.0, &mut out.odd);
        out
    }

    pub fn eval(&self, q: f64) -> f64 {
        let s = 1.0 / (self.alpha * q).cosh();
        let t = (self.alpha * q).tanh();
        let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &x| acc * s + x);
        horner(&self.even) + t * horner(&self.odd)
    }
}

/// Pole data of θ′ nearest to the real axis.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PoleData {
    pub q_c: f64,
    pub gamma: f64,
    pub tau_c: f64,
}

/// `(q_c, γ, τ_c)` for `θ′(q) = (c/2) sech(αq)` and gap parameter δ.
pub fn derived_params(c: f64, alpha: f64, delta: f64) -> Result<PoleData> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidModel(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidModel(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if !c.is_finite() {
        return Err(Error::InvalidModel("c must be finite".into()));
    }
    let q_c = PI / (2.0 * alpha);
    Ok(PoleData {
        q_c,
        gamma: -c / (2.0 * alpha),
        tau_c: 2.0 * delta * q_c,
    })
}

/// θ′ and ρ sampled on the periodic grid `x_min + i (x_max − x_min)/n`.
#[derive(Clone, Debug)]
pub struct Tabulated {
    pub x_min: f64,
    pub x_max: f64,
    pub theta_prime: Vec<f64>,
    pub rho: Vec<f64>,
    theta: Vec<f64>,
}

impl Tabulated {
    fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.rho.len() as f64
    }

    fn interp(&self, values: &[f64], q: f64) -> f64 {
        let n = values.len();
        let s = ((q - self.x_min) / self.dx()).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let f = s - i as f64;
        values[i] * (1.0 - f) + values[i + 1] * f
    }
}

#[derive(Clone, Debug)]
pub enum ModelKind {
    SechTheta { c: f64, alpha: f64 },
    Tabulated(Tabulated),
}

#[derive(Clone, Debug)]
pub struct DiabaticModel {
    kind: ModelKind,
    delta: f64,
    poles: Option<PoleData>,
    k_max: usize,
}

impl DiabaticModel {
    /// `θ′(q) = (c/2) sech(αq)`, `ρ ≡ δ`.
    pub fn sech(c: f64, alpha: f64, delta: f64) -> Result<Self> {
        let poles = derived_params(c, alpha, delta)?;
        Ok(Self {
            kind: ModelKind::SechTheta { c, alpha },
            delta,
            poles: Some(poles),
            k_max: K_MAX_DEFAULT,
        })
    }

    /// Model from samples on a periodic grid over `[x_min, x_max)`.
    ///
    /// Pole data cannot be extracted from samples and may be supplied.
    pub fn tabulated(
        x_min: f64,
        x_max: f64,
        theta_prime: Vec<f64>,
        rho: Vec<f64>,
        poles: Option<PoleData>,
    ) -> Result<Self> {
        let n = rho.len();
        if n < 4 || theta_prime.len() != n {
            return Err(Error::InvalidModel(format!(
                "need matching sample vectors of length >= 4, got {} and {n}",
                theta_prime.len()
            )));
        }
        if !(x_max > x_min) {
            return Err(Error::InvalidModel("empty domain".into()));
        }
        if rho.iter().chain(&theta_prime).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite samples".into()));
        }
        let delta = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(delta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "gap closes: min rho = {delta}"
            )));
        }
        let dx = (x_max - x_min) / n as f64;
        let mut theta = vec![0.0; n];
        for i in 1..n {
            theta[i] = theta[i - 1] + 0.5 * dx * (theta_prime[i - 1] + theta_prime[i]);
        }
        let mut tab = Tabulated {
            x_min,
            x_max,
            theta_prime,
            rho,
            theta,
        };
        let at_zero = tab.interp(&tab.theta, 0.0);
        tab.theta.iter_mut().for_each(|t| *t -= at_zero);
        Ok(Self {
            kind: ModelKind::Tabulated(tab),
            delta,
            poles,
            k_max: K_MAX_DEFAULT,
        })
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Minimal eigenvalue; equals ρ for constant-ρ models.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn poles(&self) -> Option<PoleData> {
        self.poles
    }

    pub fn require_poles(&self) -> Result<PoleData> {
        self.poles
            .ok_or_else(|| Error::Unsupported("model has no pole data".into()))
    }

    pub fn is_constant_rho(&self) -> bool {
        match &self.kind {
            ModelKind::SechTheta { .. } => true,
            ModelKind::Tabulated(t) => t.rho.iter().all(|&r| r == t.rho[0]),
        }
    }

    pub fn require_constant_rho(&self) -> Result<()> {
        if self.is_constant_rho() {
            Ok(())
        } else {
            Err(Error::Unsupported("requires a constant-rho model".into()))
        }
    }

    pub fn theta(&self, q: f64) -> f64 {
        match &self.kind {
            ModelKind::SechTheta { c, alpha } => c / alpha * (alpha * q / 2.0).tanh().atan(),
            ModelKind::Tabulated(t) => t.interp(&t.theta, q),
        }
    }

    pub fn theta_prime(&self, q: f64) -> f64 {
        match &self.kind {
            ModelKind::SechTheta { c, alpha } => c / 2.0 / (alpha * q).cosh(),
            ModelKind::Tabulated(t) => t.interp(&t.theta_prime, q),
        }
    }

    pub fn rho(&self, q: f64) -> f64 {
        match &self.kind {
            ModelKind::SechTheta { .. } => self.delta,
            ModelKind::Tabulated(t) => t.interp(&t.rho, q),
        }
    }

    /// `dᵏθ′/dqᵏ` as an exact (sech, tanh) polynomial.
    pub fn theta_prime_poly(&self, k: usize) -> Result<SechTanhPoly> {
        if k > self.k_max {
            return Err(Error::Capability {
                what: "theta derivative order",
                requested: k,
                limit: self.k_max,
            });
        }
        match &self.kind {
            ModelKind::SechTheta { c, alpha } => {
                Ok(SechTanhPoly::sech(*alpha, c / 2.0).nth_derivative(k))
            }
            ModelKind::Tabulated(_) => Err(Error::Unsupported(
                "closed derivatives need the sech family".into(),
            )),
        }
    }

    /// `dᵏθ′/dqᵏ (q)`.
    pub fn theta_derivative(&self, q: f64, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(self.theta_prime(q));
        }
        Ok(self.theta_prime_poly(k)?.eval(q))
    }

    pub fn potential_matrix(&self, q: f64) -> Mat2 {
        let (s, c) = self.theta(q).sin_cos();
        let r = self.rho(q);
        let re = |v: f64| Complex64::new(v, 0.0);
        [[re(r * c), re(r * s)], [re(r * s), re(-r * c)]]
    }

    pub fn adiabatic_frame(&self, q: f64) -> AdiabaticFrame {
        AdiabaticFrame::from_angle(self.theta(q))
    }
}

/// Pointwise adiabatic frame: `U₀` and the transformed Pauli matrices `U₀ σ U₀`.
#[derive(Clone, Copy, Debug)]
pub struct AdiabaticFrame {
    pub theta: f64,
    pub u0: [[f64; 2]; 2],
    pub sigma_x: Mat2,
    pub sigma_y: Mat2,
    pub sigma_z: Mat2,
}

impl AdiabaticFrame {
    pub fn from_angle(theta: f64) -> Self {
        let (sh, ch) = (theta / 2.0).sin_cos();
        let (s, c) = theta.sin_cos();
        let re = |v: f64| Complex64::new(v, 0.0);
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        Self {
            theta,
            u0: [[ch, sh], [sh, -ch]],
            sigma_x: [[re(s), re(-c)], [re(-c), re(-s)]],
            sigma_y: [[z, i], [-i, z]],
            sigma_z: [[re(c), re(s)], [re(s), re(-c)]],
        }
    }

    /// Upper-band eigenvector `(cos θ/2, sin θ/2)`.
    pub fn upper(&self) -> [f64; 2] {
        [self.u0[0][0], self.u0[0][1]]
    }

    /// Lower-band eigenvector `(−sin θ/2, cos θ/2)`, the continuous rotation
    /// of `(0, 1)`. It is minus the second row of `U₀`.
    pub fn lower(&self) -> [f64; 2] {
        [-self.u0[1][0], -self.u0[1][1]]
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_a() -> DiabaticModel {
        DiabaticModel::sech(-PI / 3.0, PI / 2.0, 0.5).unwrap()
    }

    fn real(m: [[f64; 2]; 2]) -> Mat2 {
        m.map(|r| r.map(|v| Complex64::new(v, 0.0)))
    }

    #[test]
    fn derived_params_examples() {
        let p = derived_params(-PI / 3.0, PI / 2.0, 0.5).unwrap();
        assert!((p.q_c - 1.0).abs() < 1e-15 && (p.gamma - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.tau_c - 1.0).abs() < 1e-15);
        let p = derived_params(-PI / 3.0, 2.0 * PI / 5.0, 3.0 / 32.0).unwrap();
        assert!((p.q_c - 1.25).abs() < 1e-15 && (p.gamma - 5.0 / 12.0).abs() < 1e-15);
        assert!((p.tau_c - 15.0 / 64.0).abs() < 1e-15);
        let p = derived_params(0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.gamma, 0.0);
        assert!((p.q_c - PI / 2.0).abs() < 1e-15 && (p.tau_c - PI).abs() < 1e-15);
        assert!(matches!(
            derived_params(1.0, 0.0, 1.0),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(
            derived_params(1.0, 1.0, -1.0),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn theta_derivatives() {
        let m = set_a();
        assert!((m.theta_derivative(0.0, 0).unwrap() + PI / 6.0).abs() < 1e-15);
        assert!(m.theta_derivative(0.0, 1).unwrap().abs() < 1e-15);
        // 6th-order central difference of the second derivative of θ′
        let h = 1e-2;
        let w = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0];
        let f = |q: f64| m.theta_derivative(q, 1).unwrap();
        let mut fd = w[3] * f(1.0);
        for (j, c) in w[..3].iter().enumerate() {
            let o = (3 - j) as f64 * h;
            fd += c * (f(1.0 + o) + f(1.0 - o));
        }
        fd /= h * h;
        let exact = m.theta_derivative(1.0, 3).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-7, "{fd} vs {exact}");
        assert!(matches!(
            m.theta_derivative(0.3, 65),
            Err(Error::Capability { .. })
        ));
    }

    #[test]
    fn theta_is_antiderivative() {
        let m = set_a();
        let h = 1e-4;
        for &q in &[-2.0, -0.4, 0.0, 0.7, 3.1] {
            let d = (m.theta(q + h) - m.theta(q - h)) / (2.0 * h);
            assert!((d - m.theta_prime(q)).abs() < 1e-8);
        }
        assert_eq!(m.theta(0.0), 0.0);
    }

    #[test]
    fn potential_examples() {
        let m = set_a();
        let v = m.potential_matrix(0.0);
        assert!(mat_max_abs_diff(&v, &real([[0.5, 0.0], [0.0, -0.5]])) < 1e-15);
        for &q in &[-3.0, 0.4, 2.7] {
            let v = m.potential_matrix(q);
            assert!((v[0][0] + v[1][1]).norm() < 1e-15);
            let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
            assert!((det.re + 0.25).abs() < 1e-14);
            let tr = v[0][0] + v[1][1];
            let disc = (tr * tr / 4.0 - det).sqrt();
            assert!(((tr / 2.0 + disc).re - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn frame_properties() {
        let m = set_a();
        let f0 = m.adiabatic_frame(0.0);
        assert_eq!(f0.u0, [[1.0, 0.0], [0.0, -1.0]]);
        let one = real([[1.0, 0.0], [0.0, 1.0]]);
        let i = Complex64::i();
        for &q in &[-4.0, -1.3, 0.0, 1.3, 5.0] {
            let f = m.adiabatic_frame(q);
            let u = real(f.u0);
            assert!(mat_max_abs_diff(&mat_mul(&u, &u), &one) < 1e-14);
            assert_eq!(f.u0[0][1], f.u0[1][0]);
            let d = mat_mul(&mat_mul(&u, &m.potential_matrix(q)), &u);
            assert!(mat_max_abs_diff(&d, &real([[0.5, 0.0], [0.0, -0.5]])) < 1e-12);
            let xy = mat_mul(&f.sigma_x, &f.sigma_y);
            let iz = f.sigma_z.map(|r| r.map(|v| v * i));
            assert!(mat_max_abs_diff(&xy, &iz) < 1e-12);
            for s in [&f.sigma_x, &f.sigma_y, &f.sigma_z] {
                assert!(mat_max_abs_diff(&mat_mul(s, s), &one) < 1e-12);
            }
            let vz = m.potential_matrix(q).map(|r| r.map(|v| v / 0.5));
            assert!(mat_max_abs_diff(&vz, &f.sigma_z) < 1e-14);
        }
    }

    #[test]
    fn frame_derivative_rules() {
        let m = set_a();
        let h = 1e-5;
        for &q in &[-2.0, 0.3, 1.1] {
            let (fp, fm, f) = (
                m.adiabatic_frame(q + h),
                m.adiabatic_frame(q - h),
                m.adiabatic_frame(q),
            );
            let tp = m.theta_prime(q);
            for i in 0..2 {
                for j in 0..2 {
                    let dx = (fp.sigma_x[i][j] - fm.sigma_x[i][j]) / (2.0 * h);
                    let dz = (fp.sigma_z[i][j] - fm.sigma_z[i][j]) / (2.0 * h);
                    assert!((dx - f.sigma_z[i][j] * tp).norm() < 1e-8);
                    assert!((dz + f.sigma_x[i][j] * tp).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn poly_algebra() {
        let a = 0.8;
        let s = SechTanhPoly::sech(a, 1.0);
        let s2 = s.mul(&s);
        let t = SechTanhPoly {
            alpha: a,
            even: vec![],
            odd: vec![1.0],
        };
        let t2 = t.mul(&t);
        for &q in &[-1.0, 0.2, 2.5] {
            let (sv, tv) = (1.0 / (a * q).cosh(), (a * q).tanh());
            assert!((s2.eval(q) - sv * sv).abs() < 1e-15);
            assert!((t2.eval(q) - tv * tv).abs() < 1e-15);
            assert!((t.derivative().eval(q) - a * sv * sv).abs() < 1e-14);
            assert!((s.derivative().eval(q) + a * sv * tv).abs() < 1e-14);
        }
        assert!(SechTanhPoly::constant(a, 2.0).derivative().is_zero());
    }

    #[test]
    fn tabulated_matches_sech() {
        let m = set_a();
        let n = 4096;
        let (x0, x1) = (-40.0, 40.0);
        let xs: Vec<f64> = (0..n)
            .map(|i| x0 + (x1 - x0) * i as f64 / n as f64)
            .collect();
        let tab = DiabaticModel::tabulated(
            x0,
            x1,
            xs.iter().map(|&x| m.theta_prime(x)).collect(),
            vec![0.5; n],
            m.poles(),
        )
        .unwrap();
        assert!(tab.is_constant_rho());
        for &q in &[-3.0, 0.0, 1.7] {
            assert!((tab.theta(q) - m.theta(q)).abs() < 1e-4);
        }
        assert!(matches!(
            tab.theta_derivative(0.0, 2),
            Err(Error::Unsupported(_))
        ));
        assert!(DiabaticModel::tabulated(x0, x1, vec![0.0; 8], vec![-1.0; 8], None).is_err());
    }
}
