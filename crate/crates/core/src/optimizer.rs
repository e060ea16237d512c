//! Rate maximisation under a mean-local-delay cap.
//!
//! NOMA: maximise the mobile ergodic rate over `(eps_m, eps_t)` subject to
//! the IoT delay staying below `tau`. OMA: additionally choose the time share
//! `eta`; the rate is `eta` times a constant and the delay is `1 / (1 - eta)`
//! times a constant, so for each `(eps_m, eps_t)` the best `eta` is the
//! largest feasible one.
//!
//! Both problems are solved on a grid with one refinement pass at half the
//! resolution around the incumbent. Evaluations are memoised for the
//! lifetime of an [`Evaluator`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Float;

use crate::analytic::{AnalyticModel, MomentResult, MomentStatus, RateResult};
use crate::exec::Executor;
use crate::{Device, Error, Scheme};

/// Constraint slack accepted when declaring a point feasible.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

/// Time share used internally when evaluating the OMA rate, which is linear
/// in `eta`.
const ETA_REF: f64 = 0.5;

/// Outcome of one optimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutcome {
    /// Scheme optimised.
    pub scheme: Scheme,
    /// Power-control fraction of the mobile user at the optimum.
    pub eps_m: f64,
    /// Power-control fraction of the IoT device at the optimum.
    pub eps_t: f64,
    /// OMA time share at the optimum.
    pub eta: Option<f64>,
    /// Ergodic rate at the optimum, bits/s/Hz.
    pub rate: f64,
    /// Mean local delay at the optimum (or the smallest delay seen when
    /// infeasible).
    pub delay: f64,
    /// Whether any grid point met the delay cap.
    pub feasible: bool,
    /// Effective grid resolution.
    pub grid_res: f64,
    /// Distinct analytic evaluations performed.
    pub evaluations: usize,
    /// Every evaluated point, in evaluation order.
    pub trace: Vec<TracePoint>,
}

/// One evaluated design point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Mobile power-control fraction.
    pub eps_m: f64,
    /// IoT power-control fraction.
    pub eps_t: f64,
    /// OMA time share.
    pub eta: Option<f64>,
    /// Ergodic rate.
    pub rate: f64,
    /// Mean local delay (`+inf` when divergent).
    pub delay: f64,
    /// Delay within the cap.
    pub feasible: bool,
}

type Key = (u64, u64, u8);

fn key(eps_m: f64, eps_t: f64, scheme: Scheme) -> Key {
    (eps_m.to_bits(), eps_t.to_bits(), scheme as u8)
}

/// Memoising front end of the analytic engine.
///
/// Memo keys are `(eps_m, eps_t, scheme)`; the threshold and moment order
/// are those of the bound model (the delay uses `b = -1` at `beta_t`, the
/// rate integrates the `b = 1` moment over all thresholds).
pub struct Evaluator<'a, E: Executor> {
    base: AnalyticModel,
    exec: &'a E,
    rates: BTreeMap<Key, RateResult>,
    delays: BTreeMap<Key, MomentResult>,
    evaluations: usize,
}

impl<'a, E: Executor> Evaluator<'a, E> {
    /// Evaluator around `base`; its power-control fractions and `eta` are
    /// overridden per query.
    pub fn new(base: AnalyticModel, exec: &'a E) -> Self {
        Evaluator {
            base,
            exec,
            rates: BTreeMap::new(),
            delays: BTreeMap::new(),
            evaluations: 0,
        }
    }

    /// The bound model.
    pub fn model(&self) -> &AnalyticModel {
        &self.base
    }

    /// Distinct analytic evaluations so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    fn model_at(
        base: &AnalyticModel,
        eps_m: f64,
        eps_t: f64,
        eta: f64,
    ) -> Result<AnalyticModel, Error> {
        let p = base.params().with_eps(eps_m, eps_t)?.with_eta(eta)?;
        Ok(base.with_params(p))
    }

    /// Fills the memo for every design point in `points`, in parallel.
    pub fn prefetch(&mut self, scheme: Scheme, points: &[(f64, f64)]) -> Result<(), Error> {
        let todo: Vec<(f64, f64)> = points
            .iter()
            .copied()
            .filter(|&(m, t)| !self.rates.contains_key(&key(m, t, scheme)))
            .collect();
        let base = &self.base;
        let results = self.exec.map(todo.len(), |i| {
            let (m, t) = todo[i];
            let model = Self::model_at(base, m, t, ETA_REF)?;
            let rate = model.ergodic_rate(scheme);
            let delay = model.moment(Device::Iot, scheme, -1.0, model.params().beta_t())?;
            Ok::<_, Error>((rate, delay))
        });
        for (&(m, t), r) in todo.iter().zip(results) {
            let (rate, delay) = r?;
            self.rates.insert(key(m, t, scheme), rate);
            self.delays.insert(key(m, t, scheme), delay);
            self.evaluations += 1;
        }
        Ok(())
    }

    /// Ergodic rate at `(eps_m, eps_t)`; for OMA at time share `eta`.
    pub fn rate(&mut self, scheme: Scheme, eps_m: f64, eps_t: f64, eta: f64) -> Result<f64, Error> {
        self.prefetch(scheme, &[(eps_m, eps_t)])?;
        let r = self.rates[&key(eps_m, eps_t, scheme)].value;
        Ok(match scheme {
            Scheme::Noma => r,
            Scheme::Oma => r / ETA_REF * eta,
        })
    }

    /// Mean local delay at `(eps_m, eps_t)`; for OMA at time share `eta`.
    /// Divergent delays are `+inf`.
    pub fn delay(
        &mut self,
        scheme: Scheme,
        eps_m: f64,
        eps_t: f64,
        eta: f64,
    ) -> Result<f64, Error> {
        self.prefetch(scheme, &[(eps_m, eps_t)])?;
        let m = self.delays[&key(eps_m, eps_t, scheme)];
        if m.status == MomentStatus::Diverged {
            return Ok(f64::INFINITY);
        }
        Ok(match scheme {
            Scheme::Noma => m.value,
            Scheme::Oma => m.value / (1.0 - eta),
        })
    }
}

/// Grid description: `n` steps over `[0, 1]`.
fn grid_steps(grid_res: f64) -> Result<usize, Error> {
    if !(0.01 - 1e-12..=0.25 + 1e-12).contains(&grid_res) {
        return Err(Error::InvalidArgument {
            name: "grid_res",
            reason: "must lie in [0.01, 0.25]",
        });
    }
    Ok(Float::round(1.0 / grid_res) as usize)
}

fn better(cand: &TracePoint, best: &Option<TracePoint>) -> bool {
    match best {
        None => true,
        Some(b) => {
            cand.rate > b.rate
                || (cand.rate == b.rate
                    && (cand.eps_m, cand.eps_t, cand.eta.unwrap_or(0.0))
                        < (b.eps_m, b.eps_t, b.eta.unwrap_or(0.0)))
        }
    }
}

fn refinement_points(n: usize, eps_m: f64, eps_t: f64) -> Vec<(f64, f64)> {
    // The incumbent is a coarse point i / n; neighbours sit at (2i +- 1) / 2n.
    let im = Float::round(eps_m * n as f64) as i64;
    let it = Float::round(eps_t * n as f64) as i64;
    let fine = 2 * n as i64;
    let mut out = Vec::new();
    for dm in [-1i64, 0, 1] {
        for dt in [-1i64, 0, 1] {
            if dm == 0 && dt == 0 {
                continue;
            }
            let (m, t) = (2 * im + dm, 2 * it + dt);
            if (0..=fine).contains(&m) && (0..=fine).contains(&t) {
                out.push((m as f64 / fine as f64, t as f64 / fine as f64));
            }
        }
    }
    out
}

fn coarse_points(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            out.push((i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    out
}

struct Search {
    best: Option<TracePoint>,
    min_delay: f64,
    trace: Vec<TracePoint>,
}

impl Search {
    fn new() -> Self {
        Search {
            best: None,
            min_delay: f64::INFINITY,
            trace: Vec::new(),
        }
    }

    fn offer(&mut self, pt: TracePoint) {
        self.min_delay = Float::min(self.min_delay, pt.delay);
        if pt.feasible && better(&pt, &self.best) {
            self.best = Some(pt);
        }
        self.trace.push(pt);
    }

    fn finish<E: Executor>(
        self,
        scheme: Scheme,
        n: usize,
        ev: &Evaluator<'_, E>,
    ) -> OptimizationOutcome {
        match self.best {
            Some(b) => OptimizationOutcome {
                scheme,
                eps_m: b.eps_m,
                eps_t: b.eps_t,
                eta: b.eta,
                rate: b.rate,
                delay: b.delay,
                feasible: true,
                grid_res: 1.0 / n as f64,
                evaluations: ev.evaluations(),
                trace: self.trace,
            },
            None => OptimizationOutcome {
                scheme,
                eps_m: f64::NAN,
                eps_t: f64::NAN,
                eta: None,
                rate: f64::NAN,
                delay: self.min_delay,
                feasible: false,
                grid_res: 1.0 / n as f64,
                evaluations: ev.evaluations(),
                trace: self.trace,
            },
        }
    }
}

fn feasible(delay: f64, tau: f64) -> bool {
    delay <= tau * (1.0 + FEASIBILITY_SLACK)
}

/// Solves the NOMA design problem on a grid of resolution `grid_res`.
pub fn optimize_noma<E: Executor>(
    ev: &mut Evaluator<'_, E>,
    tau: f64,
    grid_res: f64,
) -> Result<OptimizationOutcome, Error> {
    let n = grid_steps(grid_res)?;
    let mut search = Search::new();
    let visit =
        |ev: &mut Evaluator<'_, E>, search: &mut Search, pts: &[(f64, f64)]| -> Result<(), Error> {
            ev.prefetch(Scheme::Noma, pts)?;
            for &(m, t) in pts {
                let delay = ev.delay(Scheme::Noma, m, t, ETA_REF)?;
                let rate = ev.rate(Scheme::Noma, m, t, ETA_REF)?;
                search.offer(TracePoint {
                    eps_m: m,
                    eps_t: t,
                    eta: None,
                    rate,
                    delay,
                    feasible: feasible(delay, tau),
                });
            }
            Ok(())
        };
    visit(ev, &mut search, &coarse_points(n))?;
    if let Some(b) = search.best {
        visit(ev, &mut search, &refinement_points(n, b.eps_m, b.eps_t))?;
    }
    Ok(search.finish(Scheme::Noma, n, ev))
}

/// Largest grid time share `k / n` (`1 <= k <= n - 1`) meeting the cap,
/// found by bisection on `k`; probes are appended to `probes`.
fn best_eta<E: Executor>(
    ev: &mut Evaluator<'_, E>,
    n: usize,
    eps_m: f64,
    eps_t: f64,
    tau: f64,
    probes: &mut Vec<TracePoint>,
) -> Result<Option<usize>, Error> {
    let mut probe = |ev: &mut Evaluator<'_, E>, k: usize| -> Result<bool, Error> {
        let eta = k as f64 / n as f64;
        let delay = ev.delay(Scheme::Oma, eps_m, eps_t, eta)?;
        let rate = ev.rate(Scheme::Oma, eps_m, eps_t, eta)?;
        let ok = feasible(delay, tau);
        probes.push(TracePoint {
            eps_m,
            eps_t,
            eta: Some(eta),
            rate,
            delay,
            feasible: ok,
        });
        Ok(ok)
    };
    if !probe(ev, 1)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (1usize, n - 1);
    if probe(ev, hi)? {
        return Ok(Some(hi));
    }
    // Invariant: lo feasible, hi infeasible.
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if probe(ev, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Solves the OMA design problem: grid over `(eps_m, eps_t)`, bisection over
/// the grid time shares `grid_res, ..., 1 - grid_res`.
pub fn optimize_oma<E: Executor>(
    ev: &mut Evaluator<'_, E>,
    tau: f64,
    grid_res: f64,
) -> Result<OptimizationOutcome, Error> {
    let n = grid_steps(grid_res)?;
    let mut search = Search::new();
    let visit =
        |ev: &mut Evaluator<'_, E>, search: &mut Search, pts: &[(f64, f64)]| -> Result<(), Error> {
            ev.prefetch(Scheme::Oma, pts)?;
            for &(m, t) in pts {
                let mut probes = Vec::new();
                let k = best_eta(ev, n, m, t, tau, &mut probes)?;
                let chosen = k.map(|k| k as f64 / n as f64);
                for pt in probes {
                    // Only the chosen share competes; the other probes are trace.
                    if chosen.is_some() && pt.eta == chosen {
                        search.offer(pt);
                    } else {
                        search.min_delay = Float::min(search.min_delay, pt.delay);
                        search.trace.push(pt);
                    }
                }
            }
            Ok(())
        };
    visit(ev, &mut search, &coarse_points(n))?;
    if let Some(b) = search.best {
        visit(ev, &mut search, &refinement_points(n, b.eps_m, b.eps_t))?;
    }
    Ok(search.finish(Scheme::Oma, n, ev))
}

/// Largest IoT threshold (dB, within `[lo_db, hi_db]`, to `tol_db`) at which
/// some candidate configuration meets the delay cap. Candidates are
/// `(eps_m, eps_t, eta)`; `eta` only matters for OMA. Returns `None` when no
/// candidate is feasible at `lo_db`.
pub fn max_feasible_threshold_db(
    base: &AnalyticModel,
    scheme: Scheme,
    candidates: &[(f64, f64, f64)],
    tau: f64,
    lo_db: f64,
    hi_db: f64,
    tol_db: f64,
) -> Result<Option<f64>, Error> {
    let feasible_at = |db: f64| -> Result<bool, Error> {
        let beta_t = crate::config::db_to_linear(db);
        for &(m, t, eta) in candidates {
            let p = base.params().with_eps(m, t)?.with_eta(eta)?;
            let p = p.with_betas(p.beta_m(), beta_t)?;
            let d = base.with_params(p).mean_local_delay(scheme);
            if d.status != MomentStatus::Diverged && feasible(d.value, tau) {
                return Ok(true);
            }
        }
        Ok(false)
    };
    if !feasible_at(lo_db)? {
        return Ok(None);
    }
    if feasible_at(hi_db)? {
        return Ok(Some(hi_db));
    }
    let (mut lo, mut hi) = (lo_db, hi_db);
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if feasible_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
