//! Subcommand implementations.

use arnoma_core::analytic::{AnalyticModel, MomentResult, MomentStatus};
use arnoma_core::config::{db_to_linear, SystemParams};
use arnoma_core::montecarlo::{
    build_snapshots, empirical_local_delay, empirical_moment, empirical_rate, McSettings,
};
use arnoma_core::optimizer::{optimize_noma, optimize_oma, Evaluator, OptimizationOutcome};
use arnoma_core::spatial::{build_snapshot, default_window_radius, NetworkSnapshot};
use arnoma_core::{Device, Scheme};

use crate::cli::{
    check_grid, Cli, CliError, Command, Context, DelayArgs, MomentArgs, OptimizeArgs, RateArgs,
    RunStatus, SnapshotArgs,
};
use crate::manifest::Tolerances;
use crate::output::{self, num, opt, rel_diff, CsvSink};

pub fn dispatch(cli: &Cli, argv: Vec<String>) -> Result<RunStatus, CliError> {
    let mut ctx = Context::from_cli(cli)?;
    match &cli.command {
        Command::Moment(a) => moment(&mut ctx, a, argv),
        Command::Rate(a) => rate(&mut ctx, a, argv),
        Command::Delay(a) => delay(&mut ctx, a, argv),
        Command::Optimize(a) => optimize(&mut ctx, a, argv),
        Command::Reproduce(a) => crate::reproduce::reproduce(&mut ctx, a, argv),
        Command::JmArea => jm_area(&mut ctx, argv),
        Command::Snapshot(a) => snapshot(&mut ctx, a, argv),
    }
}

pub(crate) fn tolerances(ctx: &Context, n_geo: Option<usize>, grid_res: Option<f64>) -> Tolerances {
    Tolerances {
        n_geo,
        grid_res,
        ..Tolerances::analytic(&ctx.settings)
    }
}

pub(crate) fn snapshots(ctx: &Context, n_geo: usize) -> Result<Vec<NetworkSnapshot>, CliError> {
    let settings = McSettings::new(n_geo, ctx.seed, ctx.params.lambda_b());
    log::info!("building {n_geo} geometries");
    Ok(build_snapshots(&ctx.params, &settings, &ctx.exec)?)
}

pub(crate) fn track(ctx: &mut Context, r: &MomentResult) {
    if r.status == MomentStatus::Diverged {
        ctx.mark_divergent();
    }
}

/// Validates the moment order against what the analytic engine supports.
fn check_order(b: f64) -> Result<(), CliError> {
    if b.is_finite() && (b >= 0.0 || b == -1.0) {
        Ok(())
    } else {
        Err(CliError::Core(arnoma_core::Error::UnsupportedOrder(b)))
    }
}

fn moment(ctx: &mut Context, a: &MomentArgs, argv: Vec<String>) -> Result<RunStatus, CliError> {
    check_grid("--beta-grid", &a.beta_grid)?;
    check_order(a.b)?;
    let device: Device = a.device.into();
    let schemes = a.scheme.schemes();
    let inv = if a.engine.analytic() {
        Some(ctx.inverse_jm_area()?)
    } else {
        None
    };
    let mut outputs = Vec::new();
    let stem = |s: Scheme| format!("moment_{}_{}", device.name(), s.name());
    for &s in &schemes {
        if a.engine.analytic() {
            outputs.push(format!("{}.csv", stem(s)));
        }
        if a.engine.mc() {
            outputs.push(format!("{}_mc.csv", stem(s)));
        }
        if a.engine.analytic() && a.engine.mc() {
            outputs.push(format!("{}_both.csv", stem(s)));
        }
    }
    let n_geo = a.engine.mc().then_some(a.mc.n_geo);
    let tol = tolerances(ctx, n_geo, None);
    ctx.begin("moment", argv, &outputs, inv.as_ref(), tol)?;
    let manifest = ctx.manifest_name();
    let snaps = if a.engine.mc() {
        Some(snapshots(ctx, a.mc.n_geo)?)
    } else {
        None
    };
    let model = inv.as_ref().map(|i| ctx.model(i));
    let betas: Vec<f64> = a.beta_grid.iter().map(|&d| db_to_linear(d)).collect();

    for &scheme in &schemes {
        let mut analytic = Vec::new();
        let mut empirical = Vec::new();
        for &beta in &betas {
            if ctx.out_of_budget() {
                break;
            }
            if let Some(m) = &model {
                let r = m.moment(device, scheme, a.b, beta)?;
                track(ctx, &r);
                analytic.push(r);
            }
            if let Some(snaps) = &snaps {
                empirical.push(empirical_moment(
                    snaps,
                    device,
                    scheme,
                    a.b,
                    beta,
                    &ctx.params,
                )?);
            }
        }
        if model.is_some() {
            let mut w = CsvSink::create(
                &ctx.path(&format!("{}.csv", stem(scheme))),
                &manifest,
                output::META_CURVE_HEADER,
            )?;
            for (db, r) in a.beta_grid.iter().zip(&analytic) {
                let [v, e, s] = output::moment_fields(r);
                w.row([num(*db), v, e, s])?;
            }
            w.finish()?;
        }
        if snaps.is_some() {
            let n = empirical.len();
            output::write_empirical(
                &ctx.path(&format!("{}_mc.csv", stem(scheme))),
                &manifest,
                &a.beta_grid[..n],
                &empirical,
                scheme,
                device,
            )?;
        }
        if model.is_some() && snaps.is_some() {
            let mut w = CsvSink::create(
                &ctx.path(&format!("{}_both.csv", stem(scheme))),
                &manifest,
                PAIRED_HEADER,
            )?;
            for ((db, r), e) in a.beta_grid.iter().zip(&analytic).zip(&empirical) {
                let [v, err, s] = output::moment_fields(r);
                w.row([
                    num(*db),
                    v,
                    err,
                    s,
                    num(e.value),
                    num(e.std_error),
                    e.n_samples.to_string(),
                    num(rel_diff(e.value, r.value)),
                ])?;
            }
            w.finish()?;
        }
    }
    ctx.finish()
}

/// Header of analytic-versus-simulation comparison files.
pub const PAIRED_HEADER: &[&str] = &[
    "beta_db",
    "analytic",
    "abs_error",
    "status",
    "estimate",
    "std_error",
    "n_samples",
    "rel_diff",
];

fn eta_list(ctx: &Context, given: &[f64]) -> Result<Vec<f64>, CliError> {
    if given.is_empty() {
        return Ok(vec![ctx.params.eta()]);
    }
    for &e in given {
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Usage(format!(
                "--eta {e}: time shares must lie in (0, 1)"
            )));
        }
    }
    Ok(given.to_vec())
}

/// `(scheme, eta)` combinations; NOMA ignores the time share.
fn scheme_etas(schemes: &[Scheme], etas: &[f64]) -> Vec<(Scheme, Option<f64>)> {
    let mut v = Vec::new();
    for &s in schemes {
        match s {
            Scheme::Noma => v.push((s, None)),
            Scheme::Oma => v.extend(etas.iter().map(|&e| (s, Some(e)))),
        }
    }
    v
}

fn with_eta(p: &SystemParams, eta: Option<f64>) -> Result<SystemParams, CliError> {
    Ok(match eta {
        Some(e) => p.with_eta(e)?,
        None => *p,
    })
}

const RATE_HEADER: &[&str] = &[
    "scheme",
    "eta",
    "eps_m",
    "eps_t",
    "analytic",
    "abs_error",
    "status",
    "estimate",
    "std_error",
    "n_samples",
    "rel_diff",
];

fn rate(ctx: &mut Context, a: &RateArgs, argv: Vec<String>) -> Result<RunStatus, CliError> {
    let etas = eta_list(ctx, &a.eta)?;
    let combos = scheme_etas(&a.scheme.schemes(), &etas);
    let inv = if a.engine.analytic() {
        Some(ctx.inverse_jm_area()?)
    } else {
        None
    };
    let outputs = vec!["rate.csv".to_string()];
    let tol = tolerances(ctx, a.engine.mc().then_some(a.mc.n_geo), None);
    ctx.begin("rate", argv, &outputs, inv.as_ref(), tol)?;
    let snaps = if a.engine.mc() {
        Some(snapshots(ctx, a.mc.n_geo)?)
    } else {
        None
    };
    let model = inv.as_ref().map(|i| ctx.model(i));
    let mut w = CsvSink::create(&ctx.path("rate.csv"), &ctx.manifest_name(), RATE_HEADER)?;
    for (scheme, eta) in combos {
        if ctx.out_of_budget() {
            break;
        }
        let p = with_eta(&ctx.params, eta)?;
        let mut row = vec![
            scheme.name().to_string(),
            opt(eta),
            num(p.eps_m()),
            num(p.eps_t()),
        ];
        let mut analytic = None;
        if let Some(m) = &model {
            let r = m.with_params(p).ergodic_rate(scheme);
            if r.status == MomentStatus::Diverged {
                ctx.mark_divergent();
            }
            analytic = Some(r.value);
            row.extend([
                num(r.value),
                num(r.abs_error_est),
                r.status.name().to_string(),
            ]);
        } else {
            row.extend([String::new(), String::new(), String::new()]);
        }
        if let Some(snaps) = &snaps {
            let e = empirical_rate(snaps, scheme, a.draws_per_geo, ctx.seed, &p)?;
            row.extend([num(e.value), num(e.std_error), e.n_samples.to_string()]);
            row.push(
                analytic
                    .map(|v| num(rel_diff(e.value, v)))
                    .unwrap_or_default(),
            );
        } else {
            row.extend([String::new(), String::new(), String::new(), String::new()]);
        }
        w.row(row)?;
    }
    w.finish()?;
    ctx.finish()
}

const DELAY_HEADER: &[&str] = &[
    "scheme",
    "eta",
    "eps_m",
    "eps_t",
    "beta_t_db",
    "delay",
    "abs_error",
    "status",
    "harmonic",
    "harmonic_std_error",
    "retransmission",
    "retransmission_std_error",
    "cap_hits",
    "n_samples",
];

fn delay(ctx: &mut Context, a: &DelayArgs, argv: Vec<String>) -> Result<RunStatus, CliError> {
    let grid = if a.beta_t_grid.is_empty() {
        vec![arnoma_core::config::linear_to_db(ctx.params.beta_t())]
    } else {
        check_grid("--beta-t-grid", &a.beta_t_grid)?;
        a.beta_t_grid.clone()
    };
    let etas = eta_list(ctx, &a.eta)?;
    let combos = scheme_etas(&a.scheme.schemes(), &etas);
    let inv = if a.engine.analytic() {
        Some(ctx.inverse_jm_area()?)
    } else {
        None
    };
    let outputs = vec!["delay.csv".to_string()];
    let tol = tolerances(ctx, a.engine.mc().then_some(a.mc.n_geo), None);
    ctx.begin("delay", argv, &outputs, inv.as_ref(), tol)?;
    let snaps = if a.engine.mc() {
        Some(snapshots(ctx, a.mc.n_geo)?)
    } else {
        None
    };
    let model = inv.as_ref().map(|i| ctx.model(i));
    let mut w = CsvSink::create(&ctx.path("delay.csv"), &ctx.manifest_name(), DELAY_HEADER)?;
    'outer: for (scheme, eta) in combos {
        for &db in &grid {
            if ctx.out_of_budget() {
                break 'outer;
            }
            let p = with_eta(&ctx.params, eta)?;
            let p = p.with_betas(p.beta_m(), db_to_linear(db))?;
            let mut row = vec![
                scheme.name().to_string(),
                opt(eta),
                num(p.eps_m()),
                num(p.eps_t()),
                num(db),
            ];
            if let Some(m) = &model {
                let r = m.with_params(p).mean_local_delay(scheme);
                track(ctx, &r);
                row.extend(output::moment_fields(&r));
            } else {
                row.extend([String::new(), String::new(), String::new()]);
            }
            if let Some(snaps) = &snaps {
                let d = empirical_local_delay(snaps, scheme, ctx.seed, &p)?;
                row.extend([
                    num(d.harmonic.value),
                    num(d.harmonic.std_error),
                    num(d.retransmission.value),
                    num(d.retransmission.std_error),
                    d.cap_hits.to_string(),
                    d.harmonic.n_samples.to_string(),
                ]);
            } else {
                row.extend(std::iter::repeat_n(String::new(), 6));
            }
            w.row(row)?;
        }
    }
    w.finish()?;
    ctx.finish()
}

/// Runs the optimizer for one scheme.
pub(crate) fn solve(
    model: &AnalyticModel,
    ctx: &Context,
    scheme: Scheme,
    tau: f64,
    grid_res: f64,
) -> Result<OptimizationOutcome, CliError> {
    let mut ev = Evaluator::new(model.clone(), &ctx.exec);
    let out = match scheme {
        Scheme::Noma => optimize_noma(&mut ev, tau, grid_res)?,
        Scheme::Oma => optimize_oma(&mut ev, tau, grid_res)?,
    };
    log::info!(
        "{} optimum at tau = {tau}: eps = ({}, {}), eta = {:?}, rate {:.4}, feasible {}",
        scheme.name(),
        out.eps_m,
        out.eps_t,
        out.eta,
        out.rate,
        out.feasible
    );
    Ok(out)
}

fn optimize(ctx: &mut Context, a: &OptimizeArgs, argv: Vec<String>) -> Result<RunStatus, CliError> {
    let tau = a.tau.unwrap_or(ctx.params.tau());
    if !(tau >= 1.0) {
        return Err(CliError::Usage("--tau must be at least 1".into()));
    }
    if !(0.01..=0.25).contains(&a.grid_res) {
        return Err(CliError::Usage(
            "--grid-res must lie in [0.01, 0.25]".into(),
        ));
    }
    let schemes = a.scheme.schemes();
    let inv = ctx.inverse_jm_area()?;
    let mut outputs = vec!["optimize.csv".to_string()];
    outputs.extend(
        schemes
            .iter()
            .map(|s| format!("optimize_trace_{}.csv", s.name())),
    );
    let tol = tolerances(ctx, None, Some(a.grid_res));
    ctx.begin("optimize", argv, &outputs, Some(&inv), tol)?;
    let manifest = ctx.manifest_name();
    let model = ctx.model(&inv);
    let mut w = CsvSink::create(&ctx.path("optimize.csv"), &manifest, output::OUTCOME_HEADER)?;
    for scheme in schemes {
        if ctx.out_of_budget() {
            break;
        }
        let out = solve(&model, ctx, scheme, tau, a.grid_res)?;
        w.row(output::outcome_fields(&out, tau))?;
        output::write_trace(
            &ctx.path(&format!("optimize_trace_{}.csv", scheme.name())),
            &manifest,
            &out,
        )?;
        println!(
            "{}: eps_m = {}, eps_t = {}, eta = {}, rate = {}, delay = {}, feasible = {}",
            scheme.name(),
            out.eps_m,
            out.eps_t,
            opt(out.eta),
            out.rate,
            out.delay,
            out.feasible
        );
    }
    w.finish()?;
    ctx.finish()
}

const JM_HEADER: &[&str] = &[
    "lambda_b",
    "L",
    "lambda_l2",
    "normalized",
    "normalized_std_error",
    "value",
    "ci_half_width",
    "n_cells",
    "points_per_cell",
    "seed",
    "degenerate_resamples",
];

fn jm_area(ctx: &mut Context, argv: Vec<String>) -> Result<RunStatus, CliError> {
    let outputs = vec!["jm_area.csv".to_string()];
    let tol = tolerances(ctx, None, None);
    ctx.begin("jm-area", argv, &outputs, None, tol)?;
    let est = ctx.inverse_jm_area()?;
    let mut w = CsvSink::create(&ctx.path("jm_area.csv"), &ctx.manifest_name(), JM_HEADER)?;
    w.row([
        num(ctx.params.lambda_b()),
        num(ctx.params.pairing_radius()),
        num(est.lambda_l2),
        num(est.normalized),
        num(est.normalized_std_error),
        num(est.value()),
        num(est.ci_half_width()),
        est.n_samples.to_string(),
        ctx.jm_settings.points_per_cell.to_string(),
        est.seed.to_string(),
        est.degenerate_resamples.to_string(),
    ])?;
    w.finish()?;
    println!(
        "E[1/|JM cell|] = {:.6e} per m^2 ({:.5} lambda_b +- {:.5})",
        est.value(),
        est.normalized,
        est.ci_half_width() / ctx.params.lambda_b()
    );
    ctx.finish()
}

fn snapshot(ctx: &mut Context, a: &SnapshotArgs, argv: Vec<String>) -> Result<RunStatus, CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be positive".into()));
    }
    let outputs = vec!["snapshot.csv".to_string()];
    let tol = tolerances(ctx, Some(a.count as usize), None);
    ctx.begin("snapshot", argv, &outputs, None, tol)?;
    let window = default_window_radius(ctx.params.lambda_b());
    let mut w = CsvSink::create(
        &ctx.path("snapshot.csv"),
        &ctx.manifest_name(),
        output::SNAPSHOT_HEADER,
    )?;
    for idx in a.index..a.index + a.count {
        if ctx.out_of_budget() {
            break;
        }
        let snap = build_snapshot(&ctx.params, window, ctx.seed, idx)?;
        output::write_snapshot_rows(&mut w, &snap)?;
    }
    w.finish()?;
    ctx.finish()
}
