use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use superad::dynamics::{prepare_incoming, PacketShape, StrangStepper};
use superad::harness::{
    run_histories, run_sweep, run_verify, write_comparison_csv, write_history_csv, write_manifest,
    write_recursion_csv, write_spectrum_csv, write_state_spectrum_csv, write_sweep_csv, GridInfo,
    Manifest, RunConfig,
};
use superad::model::DiabaticModel;
use superad::spectral::Grid1D;
use superad::superadiabatic::{coefficient_tables, Mutation};
use superad::transition::{
    formula_transmitted, history_error_function_model, history_perturbative,
    optimal_representation, uniform_times, FormulaOptions, HistoryOptions, TransitionParams,
};
use superad::{Error, Result};

#[derive(Parser)]
#[command(name = "superad", version, about = "Superadiabatic transition toolkit")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, or file for single-table verbs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured packet with the split-step solver.
    Simulate,
    /// Closed-form transmitted packet at `t_final`.
    Formula {
        /// Continue the formula below the threshold instead of cutting it off.
        #[arg(long)]
        no_indicator: bool,
    },
    /// Perturbative histories of the lower-band norm.
    History {
        /// Orders, e.g. `3` or `0..5` (inclusive).
        #[arg(long, default_value = "0..5", value_parser = parse_orders)]
        n: RangeInclusive<usize>,
        /// Include the higher powers of p in the coupling.
        #[arg(long)]
        higher_powers: bool,
    },
    /// Print the optimal representation as JSON.
    OptimalN,
    /// Solver against formula over the configured sweep points.
    Sweep,
    /// Tabulate the recursion coefficients.
    RecursionTable {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Run the invariant suites; exits nonzero on failure.
    Verify {
        #[arg(long, value_enum)]
        mutate: Option<MutationArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    StraySeed,
    SignFlip,
}

fn parse_orders(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad order {t:?}: {e}"))
    };
    let range = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.trim_start_matches('='))?,
        None => num(s)?..=num(s)?,
    };
    if range.is_empty() {
        return Err(format!("empty range {s:?}"));
    }
    Ok(range)
}

struct Ctx {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| Error::Config("--config is required".into()))?;
        RunConfig::load(path)
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn manifest(command: &str, cfg: &RunConfig) -> Result<Manifest> {
    let mut m = Manifest::new(command);
    m.config_hash = Some(cfg.hash());
    m.grid = Some(GridInfo::from(cfg.solver_grid()?.as_ref()));
    m.dt = Some(cfg.run.dt.0);
    Ok(m)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn simulate(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.config()?;
    let dir = ctx.out("simulate-out");
    let model = cfg.model()?;
    let grid = cfg.solver_grid()?;
    let t0 = cfg.t0()?;
    let dt = cfg.run.dt.0;
    let mut m = manifest("simulate", &cfg)?;

    let mut stops: Vec<f64> = cfg
        .run
        .snapshots
        .iter()
        .map(|t| t.0)
        .filter(|&t| t > t0)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.push(cfg.run.t_final.0);
    let mut state = prepare_incoming(&cfg.packet()?, &model, &grid, t0)?;
    let start_norm = state.norm();
    let mut stepper = StrangStepper::new(&model, &grid, dt)?;
    let mut steps = 0usize;
    for (i, &stop) in stops.iter().enumerate() {
        let target = ((stop - t0) / dt).round() as usize;
        stepper.advance(&mut state, target.saturating_sub(steps))?;
        steps = steps.max(target);
        state.time = t0 + steps as f64 * dt;
        let name = if i + 1 == stops.len() {
            "spectrum.csv".to_string()
        } else {
            format!("spectrum_t{i}.csv")
        };
        write_state_spectrum_csv(
            &dir.join(&name),
            &state.upper_hat(&model)?,
            &state.lower_hat(&model)?,
        )?;
        m.files.push(name);
    }
    let drift = (state.norm() - start_norm).abs();
    eprintln!(
        "t = {:.4}: lower-band norm {:.6e}, norm drift {drift:.1e}",
        state.time,
        state.lower_adiabatic(&model).l2_norm()
    );

    let run = run_histories(&cfg, 0..=cfg.histories.n_max)?;
    for curve in &run.curves {
        let name = format!("history_n{}.csv", curve.n);
        write_history_csv(&dir.join(&name), "norm_lower", &curve.samples)?;
        m.files.push(name);
        if let Some(model_curve) = &curve.model_prediction {
            let name = format!("history_model_n{}.csv", curve.n);
            write_history_csv(&dir.join(&name), "norm_lower", model_curve)?;
            m.files.push(name);
        }
    }
    write_manifest(&dir, &m)
}

fn formula(ctx: &Ctx, no_indicator: bool) -> Result<()> {
    let cfg = ctx.config()?;
    let path = ctx.out("spectrum.csv");
    let grid = cfg.solver_grid()?;
    let params = TransitionParams::from_model(&cfg.model()?, cfg.epsilon(), cfg.run.t_final.0)?;
    let result = formula_transmitted(
        &cfg.packet()?.hat_on(&grid),
        &params,
        FormulaOptions {
            indicator: !no_indicator,
        },
    )?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    write_spectrum_csv(&path, &result.psi_minus_hat)?;
    eprintln!("transmitted norm {:.6e}", result.l2_norm());
    Ok(())
}

fn history(ctx: &Ctx, orders: RangeInclusive<usize>, higher_powers: bool) -> Result<()> {
    let cfg = ctx.config()?;
    let dir = ctx.out("history-out");
    let (model, spec, grid) = (cfg.model()?, cfg.packet()?, cfg.solver_grid()?);
    let t0 = cfg.t0()?;
    let spacing = cfg.run.dt.0 * cfg.histories.sample_every as f64;
    let intervals = ((cfg.run.t_final.0 - t0) / spacing).round().max(1.0) as usize;
    let times = uniform_times(t0, cfg.run.t_final.0, intervals);
    let table = if higher_powers {
        Some(coefficient_tables(
            &model,
            &cfg.table_grid()?,
            orders.end() + 1,
        )?)
    } else {
        None
    };
    let mut m = manifest("history", &cfg)?;
    let mut plateaus = Vec::new();
    for n in orders {
        let options = HistoryOptions {
            higher_powers: table.as_ref(),
            ..Default::default()
        };
        let hist = history_perturbative(&spec, &model, n as f64, &times, &grid, options)?;
        let name = format!("history_n{n}.csv");
        write_history_csv(&dir.join(&name), "norm_lower", &hist.curve.samples)?;
        m.files.push(name);
        plateaus.push((n, hist.curve.final_norm()));
    }
    if matches!(spec.shape, PacketShape::Gaussian { .. }) {
        let params = TransitionParams::from_model(&model, cfg.epsilon(), cfg.run.t_final.0)?;
        let plateau =
            formula_transmitted(&spec.hat_on(&grid), &params, FormulaOptions::default())?.l2_norm();
        let fit = history_error_function_model(&spec, &model, plateau, &times)?;
        write_history_csv(&dir.join("history_model.csv"), "norm_lower", &fit.samples)?;
        m.files.push("history_model.csv".into());
    }
    for (n, v) in plateaus {
        eprintln!("n = {n}: final norm {v:.6e}");
    }
    write_manifest(&dir, &m)
}

fn optimal_n(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.config()?;
    let spec = cfg.packet()?;
    let PacketShape::Gaussian { p0, sigma2 } = spec.shape else {
        return Err(Error::Config(
            "the optimal representation needs a Gaussian packet".into(),
        ));
    };
    let opt = optimal_representation(p0, sigma2, &cfg.model()?, cfg.epsilon())?;
    let json =
        serde_json::json!({ "eta_star": opt.eta_star, "k_star": opt.k_star, "n_star": opt.n_star });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("plain numbers serialize")
    );
    Ok(())
}

fn sweep(ctx: &Ctx) -> Result<bool> {
    let cfg = ctx.config()?;
    let dir = ctx.out("sweep-out");
    let configs = cfg.points();
    let mut m = manifest("sweep", &cfg)?;
    let mut points = Vec::new();
    let mut all_ok = true;
    for (c, result) in configs.iter().zip(run_sweep(&configs)) {
        match result {
            Ok(p) => {
                let r = &p.record;
                eprintln!(
                    "eps = {:.5}, p0 = {}: norm {:.4e} (formula {:.4e}), error {:.3e}, self {:.3e}, {:.1} s{}",
                    r.epsilon,
                    r.p0,
                    r.norm_numeric,
                    r.norm_formula,
                    r.rel_l2_error,
                    r.solver_self_error,
                    r.wall_time_s,
                    if p.accepted { "" } else { " REJECTED" }
                );
                for d in &p.diagnostics {
                    eprintln!("  {d}");
                }
                let name = format!("comparison_{}.csv", points.len());
                write_comparison_csv(&dir.join(&name), &p.numeric, &p.formula)?;
                m.files.push(name);
                m.solver_self_error.push(r.solver_self_error);
                all_ok &= p.accepted;
                points.push(p);
            }
            Err(e) => {
                eprintln!("eps = {}: {e}", c.epsilon());
                all_ok = false;
            }
        }
    }
    let path = dir.join("sweep.csv");
    write_sweep_csv(&path, &points)?;
    m.files.push(file_name(&path));
    write_manifest(&dir, &m)?;
    Ok(all_ok)
}

fn recursion_table(ctx: &Ctx, n_max: usize) -> Result<()> {
    let (model, grid) = match &ctx.config {
        Some(_) => {
            let cfg = ctx.config()?;
            (cfg.model()?, cfg.table_grid()?)
        }
        None => (
            DiabaticModel::sech(-std::f64::consts::PI / 3.0, std::f64::consts::PI / 2.0, 0.5)?,
            Grid1D::new(-60.0, 60.0, 2048, 0.1)?,
        ),
    };
    let table = coefficient_tables(&model, &grid, n_max)?;
    write_recursion_csv(&ctx.out("table.csv"), &table, n_max)
}

fn verify(ctx: &Ctx, mutate: Option<MutationArg>) -> Result<bool> {
    let mutation = mutate.map(|m| match m {
        MutationArg::StraySeed => Mutation::StraySeed,
        MutationArg::SignFlip => Mutation::SignFlip,
    });
    let report = run_verify(mutation);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &ctx.out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, json + "\n")?;
        }
        None => println!("{json}"),
    }
    for s in &report.suites {
        eprintln!(
            "{} {} ({:.2} s): {}",
            if s.passed { "pass" } else { "FAIL" },
            s.name,
            s.wall_time_s,
            s.detail
        );
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = Ctx {
        config: cli.config,
        out: cli.out,
    };
    let outcome = match cli.command {
        Command::Simulate => simulate(&ctx).map(|_| true),
        Command::Formula { no_indicator } => formula(&ctx, no_indicator).map(|_| true),
        Command::History { n, higher_powers } => history(&ctx, n, higher_powers).map(|_| true),
        Command::OptimalN => optimal_n(&ctx).map(|_| true),
        Command::Sweep => sweep(&ctx),
        Command::RecursionTable { n_max } => recursion_table(&ctx, n_max).map(|_| true),
        Command::Verify { mutate } => verify(&ctx, mutate),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_ranges() {
        assert_eq!(parse_orders("0..5").unwrap(), 0..=5);
        assert_eq!(parse_orders("0..=5").unwrap(), 0..=5);
        assert_eq!(parse_orders("3").unwrap(), 3..=3);
        assert!(parse_orders("5..2").is_err());
        assert!(parse_orders("a").is_err());
    }

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from([
            "superad",
            "history",
            "--n",
            "1..3",
            "--config",
            "a.toml",
            "--threads",
            "2",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::History { ref n, .. } if *n == (1..=3)));
        assert_eq!(cli.threads, Some(2));
        let cli = Cli::try_parse_from(["superad", "verify", "--mutate", "sign-flip"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Verify {
                mutate: Some(MutationArg::SignFlip)
            }
        ));
    }
}
