use super::*;
use crate::superadiabatic::Mutation;
use crate::Error;

const BASE: &str = r#"
experiment = "sweep"

[model]
c = "-pi/3"
alpha = "pi/2"
delta = 0.5

[grid]
x_min = -40
x_max = 40
points = 1024
table_points = 512

[packet]
p0 = 3
sigma2 = 2

[run]
epsilon = "1/5"
dt = 2e-3
t_final = 12
"#;

#[test]
fn expressions_and_defaults() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    assert!((cfg.model.c.0 + std::f64::consts::PI / 3.0).abs() < 1e-15);
    assert_eq!(cfg.epsilon(), 0.2);
    assert_eq!(cfg.run.t0, StartTime::Auto);
    assert_eq!(cfg.packet.shape, Shape::Gaussian);
    assert_eq!(cfg.histories.n_max, 5);
    assert!(cfg.t0().unwrap() < 0.0);
    assert_eq!(cfg.points().len(), 1);
}

#[test]
fn malformed_configs_are_rejected() {
    let no_model = BASE.replace("[model]", "[unused]");
    assert!(matches!(
        RunConfig::from_toml(&no_model),
        Err(Error::Config(_))
    ));
    let big_eps = BASE.replace("\"1/5\"", "1.5");
    assert!(matches!(
        RunConfig::from_toml(&big_eps),
        Err(Error::Config(_))
    ));
    let bad_expr = BASE.replace("\"-pi/3\"", "\"-pi/\"");
    assert!(matches!(
        RunConfig::from_toml(&bad_expr),
        Err(Error::Config(_))
    ));
    let backwards = BASE.replace("t_final = 12", "t0 = 3\nt_final = 1");
    assert!(matches!(
        RunConfig::from_toml(&backwards),
        Err(Error::Config(_))
    ));
}

#[test]
fn hash_ignores_formatting() {
    let a = RunConfig::from_toml(BASE).unwrap();
    let b = RunConfig::from_toml(&BASE.replace("delta = 0.5", "delta   =   \"1/2\"")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = RunConfig::from_toml(&BASE.replace("p0 = 3", "p0 = 4")).unwrap();
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn sweep_entries_override_base() {
    let text = format!(
        "{BASE}\n[[sweep]]\nepsilon = 0.1\n\n[[sweep]]\nepsilon = 0.2\np0 = 5\npoints = 2048\n"
    );
    let cfg = RunConfig::from_toml(&text).unwrap();
    let pts = cfg.points();
    assert_eq!(pts.len(), 2);
    assert_eq!(
        (pts[0].epsilon(), pts[0].packet.p0.0, pts[0].grid.points),
        (0.1, 3.0, 1024)
    );
    assert_eq!(
        (pts[1].epsilon(), pts[1].packet.p0.0, pts[1].grid.points),
        (0.2, 5.0, 2048)
    );
    assert!(pts.iter().all(|p| p.sweep.is_empty()));
}

#[test]
fn small_sweep_point() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    let point = compare_point(&cfg).unwrap();
    let r = &point.record;
    assert!(r.norm_numeric > 0.0 && r.norm_formula > 0.0);
    assert!(r.rel_l2_error < 0.2, "{r:?}");
    assert!(r.solver_self_error < r.rel_l2_error, "{r:?}");
    assert_eq!(r.points, 1024);
    assert!(r.t_final <= 12.0 + 1e-9);

    let dir = std::env::temp_dir().join(format!("superad-sweep-{}", std::process::id()));
    let path = dir.join("sweep.csv");
    write_sweep_csv(&path, std::slice::from_ref(&point)).unwrap();
    let first = std::fs::read_to_string(&path).unwrap();
    write_sweep_csv(&path, std::slice::from_ref(&point)).unwrap();
    assert_eq!(first, std::fs::read_to_string(&path).unwrap());
    assert!(first.starts_with("epsilon,p0,norm_formula"));
    write_comparison_csv(&dir.join("cmp.csv"), &point.numeric, &point.formula).unwrap();
    let rows = std::fs::read_to_string(dir.join("cmp.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1025);
    let mut manifest = Manifest::new("sweep");
    manifest.config_hash = Some(cfg.hash());
    manifest.solver_self_error.push(r.solver_self_error);
    write_manifest(&dir, &manifest).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], cfg.hash());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn histories_record_every_order() {
    let text = BASE.replace("t_final = 12", "t_final = 2");
    let cfg = RunConfig::from_toml(&text).unwrap();
    let run = run_histories(&cfg, 0..=2).unwrap();
    assert_eq!(run.curves.len(), 3);
    let len = run.curves[0].samples.len();
    assert!(len > 2);
    assert!(run.curves.iter().all(|c| c.samples.len() == len));
}

#[test]
fn verify_passes_and_mutations_are_caught() {
    let clean = run_verify(None);
    assert!(clean.passed, "{:#?}", clean.suites);
    let failed = |m| -> Vec<&'static str> {
        run_verify(Some(m))
            .suites
            .into_iter()
            .filter(|s| !s.passed)
            .map(|s| s.name)
            .collect()
    };
    assert!(failed(Mutation::StraySeed).contains(&"recursion_zero_structure"));
    assert!(failed(Mutation::SignFlip).contains(&"projection_defect_order"));
}

#[test]
fn shipped_configs_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
