use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::superadiabatic::{coefficient_tables, projection_symbol, CoefficientTable};

fn set_a() -> DiabaticModel {
    DiabaticModel::sech(-PI / 3.0, PI / 2.0, 0.5).unwrap()
}

fn grid(eps: f64) -> Arc<Grid1D> {
    Grid1D::new(-40.0, 40.0, 1024, eps).unwrap()
}

fn distance(a: &TwoLevelState, b: &TwoLevelState) -> f64 {
    a.up.distance(&b.up)
        .unwrap()
        .hypot(a.down.distance(&b.down).unwrap())
}

fn gaussian_at(g: &Arc<Grid1D>, centre: f64, p: f64, scale: f64) -> GridFunction {
    let eps = g.epsilon();
    GridFunction::from_fn(g, Space::Position, |x| {
        Complex64::from_polar(
            scale * (-(x - centre).powi(2) / (2.0 * eps)).exp(),
            p * x / eps,
        )
    })
}

#[test]
fn diagonal_flow_is_exact() {
    let model = DiabaticModel::sech(0.0, PI / 2.0, 0.5).unwrap();
    let g = grid(0.1);
    let up = gaussian_at(&g, -5.0, 2.0, 0.7);
    let down = gaussian_at(&g, 3.0, -1.0, 0.4);
    let start = TwoLevelState::new(up.clone(), down.clone(), 0.0).unwrap();
    let t = 5.0;
    let end = strang_evolve(&start, &model, 0.01, 500).unwrap();
    assert!((end.time - t).abs() < 1e-12);
    for (psi, got, band) in [(&up, &end.up, Band::Upper), (&down, &end.down, Band::Lower)] {
        let exact = free_band_propagate(&scaled_fourier(psi).unwrap(), t, band, &model).unwrap();
        let err = scaled_fourier(got).unwrap().distance(&exact).unwrap();
        assert!(err < 1e-10, "{band:?}: {err}");
    }
}

fn incoming(eps: f64, p0: f64, centre: f64) -> (PacketSpec, TwoLevelState) {
    let spec = PacketSpec::gaussian(p0, 2.0, eps).unwrap();
    let state = prepare_incoming(&spec, &set_a(), &grid(eps), centre / p0).unwrap();
    (spec, state)
}

#[test]
fn unitarity_over_many_steps() {
    let (_, start) = incoming(0.1, 2.0, -10.0);
    let end = strang_evolve(&start, &set_a(), 1e-3, 10_000).unwrap();
    let drift = (end.norm() - start.norm()).abs();
    assert!(drift <= 1e-10, "{drift}");
}

#[test]
fn strang_is_second_order() {
    let model = set_a();
    let (_, start) = incoming(0.1, 2.0, -4.0);
    let span = 4.0;
    let run = |dt: f64| strang_evolve(&start, &model, dt, (span / dt).round() as usize).unwrap();
    let reference = run(0.01 / 8.0);
    let coarse = distance(&run(0.01), &reference);
    let fine = distance(&run(0.005), &reference);
    let ratio = coarse / fine;
    assert!(
        (3.6..=4.4).contains(&ratio),
        "ratio {ratio} ({coarse:e} / {fine:e})"
    );
}

#[test]
fn oversized_step_is_rejected() {
    let (_, start) = incoming(0.1, 2.0, -10.0);
    assert!(matches!(
        strang_evolve(&start, &set_a(), 0.5, 1),
        Err(Error::Config(_))
    ));
}

#[test]
fn non_finite_amplitude_reports_step() {
    let (_, mut start) = incoming(0.1, 2.0, -10.0);
    start.up.values_mut()[3] = Complex64::new(f64::NAN, 0.0);
    let err = strang_evolve(&start, &set_a(), 1e-3, 5).unwrap_err();
    assert!(matches!(err, Error::Config(_) | Error::Solver(_)), "{err}");
}

#[test]
fn free_band_rejects_varying_gap() {
    let g = grid(0.1);
    let xs = g.xs();
    let tab = DiabaticModel::tabulated(
        g.x_min(),
        g.x_max(),
        xs.iter().map(|&x| set_a().theta_prime(x)).collect(),
        xs.iter().map(|&x| 0.5 + 0.1 * (-x * x).exp()).collect(),
        None,
    )
    .unwrap();
    let hat = PacketSpec::gaussian(2.0, 2.0, 0.1).unwrap().hat_on(&g);
    assert!(matches!(
        free_band_propagate(&hat, 1.0, Band::Upper, &tab),
        Err(Error::Unsupported(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_band_group_property(t1 in -10.0f64..10.0, t2 in -10.0f64..10.0, upper in any::<bool>()) {
        let model = set_a();
        let band = if upper { Band::Upper } else { Band::Lower };
        let hat = PacketSpec::gaussian(2.0, 2.0, 0.1).unwrap().hat_on(&grid(0.1));
        let once = free_band_propagate(&hat, t1 + t2, band, &model).unwrap();
        let twice = free_band_propagate(&free_band_propagate(&hat, t2, band, &model).unwrap(), t1, band, &model).unwrap();
        prop_assert!(once.distance(&twice).unwrap() <= 1e-13);
        prop_assert!((once.l2_norm() - hat.l2_norm()).abs() <= 1e-14);
        let same = free_band_propagate(&hat, 0.0, band, &model).unwrap();
        prop_assert_eq!(same.values(), hat.values());
    }
}

#[test]
fn incoming_packets() {
    let model = set_a();
    for spec in [
        PacketSpec::gaussian(5.0, 2.0, 0.1).unwrap(),
        PacketSpec::sextic(5.0, 0.1).unwrap(),
    ] {
        let g = Grid1D::new(-40.0, 40.0, 4096, 0.1).unwrap();
        let at_zero = incoming_hat(&spec, &model, &g, 0.0).unwrap();
        assert_eq!(at_zero.values(), spec.hat_on(&g).values());
        let t0 = default_t0(&spec, &model);
        assert!(t0 * spec.p0() <= -(1e14f64).acosh() / (PI / 2.0) + 1e-12);
        let state = prepare_incoming(&spec, &model, &g, t0).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12, "{}", state.norm());
        assert!(
            state.lower_adiabatic(&model).is_exact_zero()
                || state.lower_adiabatic(&model).sup_norm() < 1e-15
        );
        let back = scaled_fourier(&state.upper_adiabatic(&model)).unwrap();
        let recovered = free_band_propagate(&back, -t0, Band::Upper, &model).unwrap();
        let err = recovered.distance(&spec.hat_on(&g)).unwrap();
        assert!(err < 1e-12, "{spec:?}: {err}");
        assert!(matches!(
            prepare_incoming(&spec, &model, &g, -0.01),
            Err(Error::Config(_))
        ));
    }
}

#[test]
fn packet_moments() {
    let g = Grid1D::new(-10.0, 10.0, 4096, 0.02).unwrap();
    for spec in [
        PacketSpec::gaussian(2.5, 2.0, 0.02).unwrap(),
        PacketSpec::sextic(5.0, 0.02).unwrap(),
    ] {
        let hat = spec.hat_on(&g);
        assert!((hat.l2_norm() - 1.0).abs() < 1e-12);
        let ks = g.ks();
        let w = g.dk();
        let mean: f64 = hat
            .values()
            .iter()
            .zip(&ks)
            .map(|(v, k)| v.norm_sqr() * k)
            .sum::<f64>()
            * w;
        let var: f64 = hat
            .values()
            .iter()
            .zip(&ks)
            .map(|(v, k)| v.norm_sqr() * (k - mean).powi(2))
            .sum::<f64>()
            * w;
        assert!((mean - spec.p0()).abs() < 1e-12);
        assert!(
            (var.sqrt() - spec.momentum_width()).abs() < 1e-10,
            "{spec:?}"
        );
    }
    assert!(PacketSpec::gaussian(1.0, -1.0, 0.1).is_err());
    assert!(PacketSpec::sextic(1.0, 1.5).is_err());
}

fn table() -> &'static CoefficientTable {
    static T: OnceLock<CoefficientTable> = OnceLock::new();
    T.get_or_init(|| {
        coefficient_tables(&set_a(), &Grid1D::new(-60.0, 60.0, 2048, 0.1).unwrap(), 8).unwrap()
    })
}

#[test]
fn zeroth_split_is_adiabatic() {
    let model = set_a();
    let g = Grid1D::new(-60.0, 60.0, 2048, 0.1).unwrap();
    let up = gaussian_at(&g, -1.0, 2.0, 0.8);
    let down = gaussian_at(&g, 0.5, 1.0, 0.5);
    let state = TwoLevelState::new(up, down, 0.0).unwrap();
    let op =
        SuperadiabaticProjector::new(&model, &projection_symbol(table(), 0).unwrap(), &g).unwrap();
    let split = superadiabatic_components(&state, &op).unwrap();
    let lower = state.lower_adiabatic(&model);
    assert!((split.complement_norm - lower.l2_norm()).abs() < 1e-12);
    let upper = state.upper_adiabatic(&model);
    assert!((split.projected_norm - upper.l2_norm()).abs() < 1e-12);
}

#[test]
fn superadiabatic_norms_before_and_after_crossing() {
    let model = set_a();
    let eps = 0.1;
    let g = Grid1D::new(-60.0, 60.0, 2048, eps).unwrap();
    let spec = PacketSpec::gaussian(2.0, 2.0, eps).unwrap();
    let t0 = default_t0(&spec, &model);
    let mut state = prepare_incoming(&spec, &model, &g, t0).unwrap();
    let op =
        SuperadiabaticProjector::new(&model, &projection_symbol(table(), 5).unwrap(), &g).unwrap();
    let dt = 1e-3;
    let mut stepper = StrangStepper::new(&model, &g, dt).unwrap();
    let mut advance_to = |state: &mut TwoLevelState, centre: f64| {
        let steps = ((centre / spec.p0() - state.time) / dt).round() as usize;
        stepper.advance(state, steps).unwrap();
        op.complement_norms(state.up.values(), state.down.values())
    };

    let before = advance_to(&mut state, -10.0);
    for (n, v) in before.iter().enumerate() {
        assert!(*v <= 1.05 * before[0], "n = {n}: {v:e} vs {:e}", before[0]);
        if n > 0 {
            assert!(*v <= 1.05 * before[n - 1], "n = {n}: {before:?}");
        }
    }
    assert!(
        (before[5] - before[4]).abs() <= 0.05 * before[5],
        "{before:?}"
    );

    let after = advance_to(&mut state, 6.0);
    for v in &after {
        assert!((v - after[0]).abs() <= 0.05 * after[0], "{after:?}");
    }
}

#[test]
fn projector_is_nearly_idempotent() {
    let model = set_a();
    for n in 1..=3 {
        let defect = |eps: f64| {
            let g = Grid1D::new(-60.0, 60.0, 4096, eps).unwrap();
            let op =
                SuperadiabaticProjector::new(&model, &projection_symbol(table(), n).unwrap(), &g)
                    .unwrap();
            let envelope = |x: f64| (-(x + 0.5) * (x + 0.5) / 2.0).exp();
            let frames: Vec<_> = g.xs().iter().map(|&x| model.adiabatic_frame(x)).collect();
            let wave: Vec<Complex64> = g
                .xs()
                .iter()
                .map(|&x| Complex64::from_polar(envelope(x), x / eps))
                .collect();
            let up: Vec<_> = wave
                .iter()
                .zip(&frames)
                .map(|(w, f)| w * f.upper()[0] + 0.3 * w * f.lower()[0])
                .collect();
            let down: Vec<_> = wave
                .iter()
                .zip(&frames)
                .map(|(w, f)| w * f.upper()[1] + 0.3 * w * f.lower()[1])
                .collect();
            let [a, b] = op.apply(&up, &down);
            let [aa, bb] = op.apply(&a, &b);
            let diff: f64 = aa
                .iter()
                .zip(&a)
                .chain(bb.iter().zip(&b))
                .map(|(x, y)| (x - y).norm_sqr())
                .sum();
            (diff * g.dx()).sqrt()
        };
        let (coarse, fine) = (defect(0.1), defect(0.05));
        let slope = (coarse / fine).ln() / 2f64.ln();
        assert!(
            slope >= n as f64 + 0.8,
            "n = {n}: slope {slope} ({coarse:e}, {fine:e})"
        );
    }
}
