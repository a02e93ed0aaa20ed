use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{prepare_incoming, strang_evolve, PacketSpec, TwoLevelState};
use crate::error::Result;
use crate::model::DiabaticModel;
use crate::spectral::{weyl_apply, Grid1D, GridFunction, PolyPSymbol, Space, WeylForm};
use crate::superadiabatic::{
    projection_defect, structurally_nonzero, CoefficientTable, Component, Mutation,
    RecursionOptions, DEFAULT_P_SAMPLES,
};
use crate::transition::lz_probability;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    /// Corruption injected into the recursion, if any.
    pub mutation: Option<String>,
    pub suites: Vec<SuiteResult>,
}

fn reference_model() -> DiabaticModel {
    DiabaticModel::sech(-PI / 3.0, PI / 2.0, 0.5).expect("reference parameters are valid")
}

fn params_suite() -> Result<(bool, String)> {
    let a = reference_model().require_poles()?;
    let b = DiabaticModel::sech(-PI / 3.0, 2.0 * PI / 5.0, 3.0 / 32.0)?.require_poles()?;
    let dev = [
        (a.q_c, 1.0),
        (a.gamma, 1.0 / 3.0),
        (b.q_c, 1.25),
        (b.gamma, 5.0 / 12.0),
    ]
    .iter()
    .fold(0.0f64, |m, (got, want)| m.max((got - want).abs()));
    Ok((dev <= 1e-12, format!("largest deviation {dev:.2e}")))
}

fn zeros_suite(table: &CoefficientTable) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut violations = 0;
    for n in 1..=table.n_max() {
        for m in 0..=n {
            for c in Component::ALL {
                if !structurally_nonzero(c, n, m) {
                    let s = table.sup(c, n, m);
                    worst = worst.max(s);
                    if s > 1e-13 {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations, largest forbidden entry {worst:.2e}"),
    ))
}

fn weyl_suite() -> Result<(bool, String)> {
    let g = Grid1D::new(-20.0, 20.0, 2048, 0.05)?;
    let psi = GridFunction::from_fn(&g, Space::Position, |x| {
        Complex64::from_polar((-(x - 0.7).powi(2) / 2.4).exp(), 0.6 * x / g.epsilon())
    });
    let mut worst = 0.0f64;
    for (shift, amps) in [
        (0.5, [0.3, -0.8, 0.5, 0.1, -0.4]),
        (-1.0, [1.0, 0.2, -0.6, 0.9, 0.3]),
    ] {
        let mut sym = PolyPSymbol::new();
        for (m, a) in amps.iter().enumerate() {
            let c = GridFunction::from_real(&g, Space::Position, |x| {
                a * (-(x - shift).powi(2) / 1.5).exp()
            });
            sym.add_term(m, &c, Complex64::new(1.0, 0.0));
        }
        let a = weyl_apply(&sym, &psi, WeylForm::PositionSpace)?;
        let b = weyl_apply(&sym, &psi, WeylForm::MomentumKernel)?;
        worst = worst.max(a.distance(&b)? / b.l2_norm());
    }
    Ok((worst <= 1e-8, format!("relative difference {worst:.2e}")))
}

fn defect_suite(model: &DiabaticModel, table: &CoefficientTable) -> Result<(bool, String)> {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in 1..=4 {
        let r = projection_defect(model, table, n, &[0.1, 0.05, 0.025], &DEFAULT_P_SAMPLES)?;
        let floor = n as f64 + 0.8;
        ok &= r.idempotency_slope >= floor
            && r.commutator_slope >= floor
            && r.lower_order_max < 1e-10;
        detail.push(format!(
            "n={n}: slopes {:.2}/{:.2}, lower orders {:.1e}",
            r.idempotency_slope, r.commutator_slope, r.lower_order_max
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn incoming(eps: f64, p0: f64, centre: f64) -> Result<TwoLevelState> {
    let spec = PacketSpec::gaussian(p0, 2.0, eps)?;
    prepare_incoming(
        &spec,
        &reference_model(),
        &Grid1D::new(-40.0, 40.0, 1024, eps)?,
        centre / p0,
    )
}

fn strang_suite() -> Result<(bool, String)> {
    let model = reference_model();
    let start = incoming(0.1, 2.0, -4.0)?;
    let span = 4.0;
    let run = |dt: f64| strang_evolve(&start, &model, dt, (span / dt).round() as usize);
    let reference = run(0.01 / 8.0)?;
    let dist = |s: &TwoLevelState| -> Result<f64> {
        Ok(s.up
            .distance(&reference.up)?
            .hypot(s.down.distance(&reference.down)?))
    };
    let ratio = dist(&run(0.01)?)? / dist(&run(0.005)?)?;
    Ok((
        (3.6..=4.4).contains(&ratio),
        format!("Richardson ratio {ratio:.3}"),
    ))
}

fn unitarity_suite() -> Result<(bool, String)> {
    let start = incoming(0.1, 2.0, -10.0)?;
    let end = strang_evolve(&start, &reference_model(), 1e-3, 10_000)?;
    let drift = (end.norm() - start.norm()).abs();
    Ok((
        drift <= 1e-10,
        format!("norm drift {drift:.2e} over 10000 steps"),
    ))
}

fn lz_suite() -> Result<(bool, String)> {
    let lz = lz_probability(20.0, &reference_model(), 1.0 / 50.0)?;
    Ok((
        (lz.ratio - 1.0).abs() <= 0.02,
        format!("exact/large-momentum ratio {:.5}", lz.ratio),
    ))
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> SuiteResult {
    let clock = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    SuiteResult {
        name,
        passed,
        detail,
        wall_time_s: clock.elapsed().as_secs_f64(),
    }
}

/// Runs every invariant suite; `mutation` corrupts the recursion table the
/// recursion-dependent suites use.
pub fn run_verify(mutation: Option<Mutation>) -> VerifyReport {
    let model = reference_model();
    let table = Grid1D::new(-60.0, 60.0, 2048, 0.1).and_then(|g| {
        CoefficientTable::build(
            &model,
            &g,
            RecursionOptions {
                n_max: 8,
                mutation,
                ..Default::default()
            },
        )
    });
    let suites = vec![
        timed("parameter_extraction", params_suite),
        timed("recursion_zero_structure", || {
            zeros_suite(table.as_ref().map_err(clone_err)?)
        }),
        timed("weyl_two_forms", weyl_suite),
        timed("projection_defect_order", || {
            defect_suite(&model, table.as_ref().map_err(clone_err)?)
        }),
        timed("strang_second_order", strang_suite),
        timed("unitarity", unitarity_suite),
        timed("landau_zener_limit", lz_suite),
    ];
    VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        mutation: mutation.map(|m| format!("{m:?}")),
        suites,
    }
}

fn clone_err(e: &crate::Error) -> crate::Error {
    crate::Error::Diagnostic(format!("recursion table unavailable: {e}"))
}
