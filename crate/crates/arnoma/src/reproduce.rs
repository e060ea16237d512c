//! Data bundles behind the three result panels.
//!
//! * `left`: analytic and simulated first moments of both devices.
//! * `middle`: optimal rates for delay caps 2 and 10 and the rate CCDF at
//!   each optimum.
//! * `right`: IoT mean local delay against its threshold, for power-control
//!   and time-share sweeps.

use arnoma_core::analytic::AnalyticModel;
use arnoma_core::config::db_to_linear;
use arnoma_core::montecarlo::empirical_moment;
use arnoma_core::optimizer::OptimizationOutcome;
use arnoma_core::{Device, Scheme};

use crate::cli::{check_grid, CliError, Context, Figure, ReproduceArgs, RunStatus};
use crate::commands::{snapshots, solve, tolerances, track};
use crate::output::{self, num, opt, rel_diff, CsvSink};

/// Power-control pairs of the moment verification panel.
pub const LEFT_EPS: [(f64, f64); 4] = [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.5, 1.0)];
/// Relative agreement required between the engines.
pub const LEFT_REL_TOL: f64 = 0.03;
/// Standard errors allowed between the engines.
pub const LEFT_SE_TOL: f64 = 3.0;
/// Delay caps of the rate panel.
pub const MIDDLE_TAUS: [f64; 2] = [2.0, 10.0];
/// Rate thresholds (bits/s/Hz) of the rate CCDF.
pub const MIDDLE_RATES: [f64; 16] = [
    0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0, 10.0,
];
/// Mobile power-control fractions of the delay panel.
pub const RIGHT_EPS_M: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
/// IoT power-control fractions of the delay panel.
pub const RIGHT_EPS_T: [f64; 2] = [0.75, 1.0];
/// OMA time shares of the delay panel.
pub const RIGHT_ETAS: [f64; 3] = [0.25, 0.5, 0.75];
/// IoT thresholds (dB) of the delay panel.
pub const RIGHT_BETA_T_DB: [f64; 9] = [-15.0, -12.5, -10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0];

pub fn reproduce(
    ctx: &mut Context,
    a: &ReproduceArgs,
    argv: Vec<String>,
) -> Result<RunStatus, CliError> {
    match a.figure {
        Figure::Left => left(ctx, a, argv),
        Figure::Middle => middle(ctx, a, argv),
        Figure::Right => right(ctx, argv),
    }
}

const LEFT_HEADER: &[&str] = &[
    "eps_m",
    "eps_t",
    "device",
    "scheme",
    "beta_db",
    "analytic",
    "abs_error",
    "status",
    "estimate",
    "std_error",
    "n_samples",
    "rel_diff",
    "agree",
];

/// Whether an analytic and an empirical value agree to the panel tolerance.
pub fn engines_agree(analytic: f64, estimate: f64, std_error: f64) -> bool {
    let diff = (analytic - estimate).abs();
    diff <= (LEFT_REL_TOL * analytic.abs()).max(LEFT_SE_TOL * std_error)
}

fn left(ctx: &mut Context, a: &ReproduceArgs, argv: Vec<String>) -> Result<RunStatus, CliError> {
    check_grid("--beta-grid", &a.beta_grid)?;
    let inv = ctx.inverse_jm_area()?;
    let outputs = vec!["left_m1.csv".to_string()];
    let tol = tolerances(ctx, Some(a.mc.n_geo), None);
    ctx.begin("reproduce-left", argv, &outputs, Some(&inv), tol)?;
    let snaps = snapshots(ctx, a.mc.n_geo)?;
    let model = ctx.model(&inv);
    let mut w = CsvSink::create(&ctx.path("left_m1.csv"), &ctx.manifest_name(), LEFT_HEADER)?;
    let mut disagreements = 0usize;
    'outer: for (m, t) in LEFT_EPS {
        let p = ctx.params.with_eps(m, t)?;
        let mm = model.with_params(p);
        for device in [Device::Mobile, Device::Iot] {
            for scheme in [Scheme::Noma, Scheme::Oma] {
                for &db in &a.beta_grid {
                    if ctx.out_of_budget() {
                        break 'outer;
                    }
                    let beta = db_to_linear(db);
                    let r = mm.moment(device, scheme, 1.0, beta)?;
                    track(ctx, &r);
                    let e = empirical_moment(&snaps, device, scheme, 1.0, beta, &p)?;
                    let agree = engines_agree(r.value, e.value, e.std_error);
                    disagreements += usize::from(!agree);
                    let [v, err, s] = output::moment_fields(&r);
                    w.row([
                        num(m),
                        num(t),
                        device.name().to_string(),
                        scheme.name().to_string(),
                        num(db),
                        v,
                        err,
                        s,
                        num(e.value),
                        num(e.std_error),
                        e.n_samples.to_string(),
                        num(rel_diff(e.value, r.value)),
                        agree.to_string(),
                    ])?;
                }
            }
        }
    }
    w.finish()?;
    if disagreements > 0 {
        log::warn!("{disagreements} points outside the cross-engine tolerance");
        ctx.note(format!(
            "{disagreements} points outside the cross-engine tolerance"
        ));
    }
    ctx.finish()
}

const CCDF_HEADER: &[&str] = &[
    "tau",
    "scheme",
    "eps_m",
    "eps_t",
    "eta",
    "rate",
    "ccdf",
    "abs_error",
    "status",
];

fn rate_ccdf_rows(
    ctx: &mut Context,
    model: &AnalyticModel,
    out: &OptimizationOutcome,
    tau: f64,
    w: &mut CsvSink,
) -> Result<(), CliError> {
    let mut p = ctx.params.with_eps(out.eps_m, out.eps_t)?;
    if let Some(eta) = out.eta {
        p = p.with_eta(eta)?;
    }
    let share = out.eta.unwrap_or(1.0);
    let m = model.with_params(p);
    for r in MIDDLE_RATES {
        // P(share * log2(1 + SIR) > r)
        let beta = (r / share).exp2() - 1.0;
        let c = m.moment(Device::Mobile, out.scheme, 1.0, beta)?;
        track(ctx, &c);
        let [v, e, s] = output::moment_fields(&c);
        w.row([
            num(tau),
            out.scheme.name().to_string(),
            num(out.eps_m),
            num(out.eps_t),
            opt(out.eta),
            num(r),
            v,
            e,
            s,
        ])?;
    }
    Ok(())
}

fn middle(ctx: &mut Context, a: &ReproduceArgs, argv: Vec<String>) -> Result<RunStatus, CliError> {
    if !(0.01..=0.25).contains(&a.grid_res) {
        return Err(CliError::Usage(
            "--grid-res must lie in [0.01, 0.25]".into(),
        ));
    }
    let inv = ctx.inverse_jm_area()?;
    let trace = |s: Scheme, tau: f64| format!("middle_trace_{}_tau{}.csv", s.name(), tau);
    let mut outputs = vec![
        "middle_optimal.csv".to_string(),
        "middle_rate_ccdf.csv".to_string(),
    ];
    for tau in MIDDLE_TAUS {
        for s in [Scheme::Noma, Scheme::Oma] {
            outputs.push(trace(s, tau));
        }
    }
    let tol = tolerances(ctx, None, Some(a.grid_res));
    ctx.begin("reproduce-middle", argv, &outputs, Some(&inv), tol)?;
    let manifest = ctx.manifest_name();
    let model = ctx.model(&inv);
    let mut best = CsvSink::create(
        &ctx.path("middle_optimal.csv"),
        &manifest,
        output::OUTCOME_HEADER,
    )?;
    let mut ccdf = CsvSink::create(&ctx.path("middle_rate_ccdf.csv"), &manifest, CCDF_HEADER)?;
    'outer: for tau in MIDDLE_TAUS {
        let mut rates = Vec::new();
        for s in [Scheme::Noma, Scheme::Oma] {
            if ctx.out_of_budget() {
                break 'outer;
            }
            let out = solve(&model, ctx, s, tau, a.grid_res)?;
            best.row(output::outcome_fields(&out, tau))?;
            output::write_trace(&ctx.path(&trace(s, tau)), &manifest, &out)?;
            if out.feasible {
                rate_ccdf_rows(ctx, &model, &out, tau, &mut ccdf)?;
            }
            rates.push(out.rate);
        }
        if let [noma, oma] = rates[..] {
            let verdict = if noma > oma {
                "NOMA ahead"
            } else {
                "OMA ahead or tied"
            };
            ctx.note(format!(
                "tau = {tau}: NOMA {noma:.4}, OMA {oma:.4} ({verdict})"
            ));
        }
    }
    best.finish()?;
    ccdf.finish()?;
    ctx.finish()
}

const RIGHT_HEADER: &[&str] = &[
    "scheme",
    "eps_m",
    "eps_t",
    "eta",
    "beta_t_db",
    "delay",
    "abs_error",
    "status",
];

const SPREAD_HEADER: &[&str] = &["eps_t", "beta_t_db", "min_delay", "max_delay", "rel_spread"];

fn right(ctx: &mut Context, argv: Vec<String>) -> Result<RunStatus, CliError> {
    let inv = ctx.inverse_jm_area()?;
    let outputs = vec![
        "right_delay.csv".to_string(),
        "right_spread.csv".to_string(),
    ];
    let tol = tolerances(ctx, None, None);
    ctx.begin("reproduce-right", argv, &outputs, Some(&inv), tol)?;
    let manifest = ctx.manifest_name();
    let model = ctx.model(&inv);
    let mut w = CsvSink::create(&ctx.path("right_delay.csv"), &manifest, RIGHT_HEADER)?;
    let mut spread = CsvSink::create(&ctx.path("right_spread.csv"), &manifest, SPREAD_HEADER)?;

    let mut configs: Vec<(Scheme, f64, f64, Option<f64>)> = Vec::new();
    for t in RIGHT_EPS_T {
        configs.extend(RIGHT_EPS_M.iter().map(|&m| (Scheme::Noma, m, t, None)));
    }
    for t in RIGHT_EPS_T {
        configs.extend(
            RIGHT_ETAS
                .iter()
                .map(|&e| (Scheme::Oma, ctx.params.eps_m(), t, Some(e))),
        );
    }
    // NOMA delays per (eps_t, beta_t) for the spread table.
    let mut noma: Vec<(f64, f64, f64)> = Vec::new();
    'outer: for (scheme, m, t, eta) in configs {
        for db in RIGHT_BETA_T_DB {
            if ctx.out_of_budget() {
                break 'outer;
            }
            let mut p = ctx.params.with_eps(m, t)?;
            p = p.with_betas(p.beta_m(), db_to_linear(db))?;
            if let Some(e) = eta {
                p = p.with_eta(e)?;
            }
            let d = model.with_params(p).mean_local_delay(scheme);
            track(ctx, &d);
            if scheme == Scheme::Noma {
                noma.push((t, db, d.value));
            }
            let [v, e, s] = output::moment_fields(&d);
            w.row([
                scheme.name().to_string(),
                num(m),
                num(t),
                opt(eta),
                num(db),
                v,
                e,
                s,
            ])?;
        }
    }
    for t in RIGHT_EPS_T {
        for db in RIGHT_BETA_T_DB {
            let vals: Vec<f64> = noma
                .iter()
                .filter(|x| x.0 == t && x.1 == db)
                .map(|x| x.2)
                .collect();
            if vals.len() != RIGHT_EPS_M.len() {
                continue;
            }
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            spread.row([num(t), num(db), num(lo), num(hi), num((hi - lo) / lo)])?;
        }
    }
    w.finish()?;
    spread.finish()?;
    ctx.finish()
}
