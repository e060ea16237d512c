//! Estimators built on sampled geometries.
//!
//! Under Rayleigh fading the success probability of a link given the
//! geometry has a product form, so moments of the meta distribution are
//! estimated from closed-form conditional probabilities rather than from
//! fading indicators. Direct fading-draw simulation of the SIRs is kept as an
//! oracle for those closed forms.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_traits::Float;
use rand::Rng;

use crate::analytic::{CurveKind, CurveSource, MetaCurve, MomentResult, MomentStatus};
use crate::config::SystemParams;
use crate::distributions::{LinkDistanceLaw, RadialDensity};
use crate::exec::Executor;
use crate::rng::{substream, Purpose};
use crate::spatial::{build_snapshot, draw_fading, FadingDraw, NetworkSnapshot};
use crate::stats::SampleStats;
use crate::{Device, Error, Scheme};

/// Fewest geometries accepted by the estimators.
pub const MIN_GEOMETRIES: usize = 100;
/// Slot cap of the Bernoulli retransmission simulation.
pub const RETRANSMISSION_CAP: u64 = 10_000;
/// Cap-hit fraction above which the delay is flagged as heavy tailed.
pub const CAP_HIT_WARN_FRACTION: f64 = 0.01;
/// Sample excess kurtosis above which a `b < 0` moment is flagged.
pub const HEAVY_TAIL_KURTOSIS: f64 = 100.0;

/// What an [`EmpiricalEstimate`] estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    /// `E[P^b]`.
    Moment(f64),
    /// `P(SIR > beta)`, the first moment.
    Ccdf,
    /// `P(P > x)` at reliability `x`.
    MetaCcdf(f64),
    /// Ergodic rate, bits/s/Hz.
    Rate,
    /// Mean local delay, harmonic estimator.
    Delay,
    /// Mean local delay, capped retransmission simulation.
    DelayRetransmission,
    /// Functional of an inhomogeneous PPP.
    Pgfl,
}

impl EstimatorKind {
    /// Name used in CSV files.
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Moment(_) => "moment",
            EstimatorKind::Ccdf => "ccdf",
            EstimatorKind::MetaCcdf(_) => "meta-ccdf",
            EstimatorKind::Rate => "rate",
            EstimatorKind::Delay => "delay-harmonic",
            EstimatorKind::DelayRetransmission => "delay-retransmission",
            EstimatorKind::Pgfl => "pgfl",
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEstimate {
    /// Sample mean.
    pub value: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Number of independent samples.
    pub n_samples: usize,
    /// What was estimated.
    pub kind: EstimatorKind,
    /// Set when the samples look too heavy tailed for the standard error
    /// to be trusted (possible divergence of the estimated quantity).
    pub heavy_tail: bool,
}

impl EmpiricalEstimate {
    fn from_stats(stats: &SampleStats, kind: EstimatorKind) -> Self {
        EmpiricalEstimate {
            value: stats.mean(),
            std_error: stats.std_error(),
            n_samples: stats.count(),
            kind,
            heavy_tail: false,
        }
    }

    /// Half-width of the normal confidence interval at quantile `z`.
    pub fn ci_half_width(&self, z: f64) -> f64 {
        z * self.std_error
    }

    /// As a [`MomentResult`] with the standard error as error estimate.
    pub fn to_moment_result(&self) -> MomentResult {
        MomentResult {
            value: self.value,
            abs_error_est: self.std_error,
            status: if self.heavy_tail {
                MomentStatus::TruncatedTailWarning
            } else {
                MomentStatus::Converged
            },
        }
    }
}

/// Sampling effort of the geometry estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    /// Number of independent geometries.
    pub n_geo: usize,
    /// Master seed; geometry `i` uses substream `i`.
    pub master_seed: u64,
    /// Simulation window radius, m.
    pub window_radius: f64,
}

impl McSettings {
    /// `n_geo` geometries in the default window for `lambda_b`.
    pub fn new(n_geo: usize, master_seed: u64, lambda_b: f64) -> Self {
        McSettings {
            n_geo,
            master_seed,
            window_radius: crate::spatial::default_window_radius(lambda_b),
        }
    }
}

/// Builds the geometries of a batch, in index order.
pub fn build_snapshots<E: Executor>(
    params: &SystemParams,
    settings: &McSettings,
    exec: &E,
) -> Result<Vec<NetworkSnapshot>, Error> {
    if settings.n_geo < MIN_GEOMETRIES {
        return Err(Error::TooFewSamples {
            got: settings.n_geo,
            min: MIN_GEOMETRIES,
        });
    }
    exec.map(settings.n_geo, |i| {
        build_snapshot(
            params,
            settings.window_radius,
            settings.master_seed,
            i as u64,
        )
    })
    .into_iter()
    .collect()
}

/// `sum ln(1 + s rho R^{alpha eps} D^{-alpha})` over one interferer class.
fn log_interference(
    list: &[crate::spatial::Interferer],
    s: f64,
    rho: f64,
    alpha: f64,
    eps: f64,
) -> f64 {
    let ae = alpha * eps;
    list.iter()
        .map(|x| {
            let tx = if ae == 0.0 {
                rho
            } else {
                rho * Float::powf(x.link, ae)
            };
            Float::ln_1p(s * tx * Float::powf(x.to_origin, -alpha))
        })
        .sum()
}

/// Interference scale of the typical mobile user.
fn scale_mobile(snap: &NetworkSnapshot, beta_m: f64, p: &SystemParams) -> f64 {
    beta_m / p.rho_m() * Float::powf(snap.typical_mobile, p.alpha() * (1.0 - p.eps_m()))
}

/// Interference scale of the typical IoT device.
fn scale_iot(snap: &NetworkSnapshot, beta_t: f64, p: &SystemParams) -> f64 {
    beta_t / p.rho_t() * Float::powf(snap.typical_iot, p.alpha() * (1.0 - p.eps_t()))
}

/// Success probability of the typical mobile user given the geometry.
pub fn conditional_success_mobile(
    snap: &NetworkSnapshot,
    beta_m: f64,
    scheme: Scheme,
    p: &SystemParams,
) -> f64 {
    let s = scale_mobile(snap, beta_m, p);
    let a = p.alpha();
    let mut log = log_interference(&snap.interferers_mobile, s, p.rho_m(), a, p.eps_m());
    if scheme == Scheme::Noma {
        let intra = s * p.rho_t() * Float::powf(snap.typical_iot, a * (p.eps_t() - 1.0));
        log += Float::ln_1p(intra);
        log += log_interference(&snap.interferers_iot, s, p.rho_t(), a, p.eps_t());
    }
    Float::exp(-log)
}

/// Success probability of the typical IoT device (after SIC) under NOMA.
pub fn conditional_success_iot(snap: &NetworkSnapshot, beta_t: f64, p: &SystemParams) -> f64 {
    let s = scale_iot(snap, beta_t, p);
    let a = p.alpha();
    let log = log_interference(&snap.interferers_iot, s, p.rho_t(), a, p.eps_t())
        + log_interference(&snap.interferers_mobile, s, p.rho_m(), a, p.eps_m());
    Float::exp(-log)
}

/// Success probability of the typical IoT device under OMA: only IoT
/// devices of other cells interfere.
pub fn conditional_success_iot_oma(snap: &NetworkSnapshot, beta_t: f64, p: &SystemParams) -> f64 {
    let s = scale_iot(snap, beta_t, p);
    Float::exp(-log_interference(
        &snap.interferers_iot,
        s,
        p.rho_t(),
        p.alpha(),
        p.eps_t(),
    ))
}

/// Conditional success probability of `device` under `scheme`.
pub fn conditional_success(
    snap: &NetworkSnapshot,
    device: Device,
    scheme: Scheme,
    beta: f64,
    p: &SystemParams,
) -> f64 {
    match (device, scheme) {
        (Device::Mobile, s) => conditional_success_mobile(snap, beta, s, p),
        (Device::Iot, Scheme::Noma) => conditional_success_iot(snap, beta, p),
        (Device::Iot, Scheme::Oma) => conditional_success_iot_oma(snap, beta, p),
    }
}

fn received(rho: f64, link: f64, alpha: f64, eps: f64, dist: f64) -> f64 {
    rho * Float::powf(link, alpha * eps) * Float::powf(dist, -alpha)
}

fn interference(
    snap: &NetworkSnapshot,
    f: &FadingDraw,
    p: &SystemParams,
    mobile: bool,
    iot: bool,
) -> f64 {
    let a = p.alpha();
    let mut total = 0.0;
    if mobile {
        for (x, h) in snap.interferers_mobile.iter().zip(&f.h_xm) {
            total += h * received(p.rho_m(), x.link, a, p.eps_m(), x.to_origin);
        }
    }
    if iot {
        for (x, h) in snap.interferers_iot.iter().zip(&f.h_xt) {
            total += h * received(p.rho_t(), x.link, a, p.eps_t(), x.to_origin);
        }
    }
    total
}

/// SIR of the typical mobile user for one fading draw. Under NOMA the
/// paired IoT device interferes; under OMA only other mobile users do.
pub fn sir_mobile(snap: &NetworkSnapshot, f: &FadingDraw, scheme: Scheme, p: &SystemParams) -> f64 {
    let a = p.alpha();
    let signal = f.h_m
        * received(
            p.rho_m(),
            snap.typical_mobile,
            a,
            p.eps_m(),
            snap.typical_mobile,
        );
    let noma = scheme == Scheme::Noma;
    let mut i = interference(snap, f, p, true, noma);
    if noma {
        i += f.h_t * received(p.rho_t(), snap.typical_iot, a, p.eps_t(), snap.typical_iot);
    }
    signal / i
}

/// SIR of the typical IoT device for one fading draw, after the mobile
/// signal has been cancelled (NOMA) or in its own slot (OMA).
pub fn sir_iot(snap: &NetworkSnapshot, f: &FadingDraw, scheme: Scheme, p: &SystemParams) -> f64 {
    let a = p.alpha();
    let signal = f.h_t * received(p.rho_t(), snap.typical_iot, a, p.eps_t(), snap.typical_iot);
    signal / interference(snap, f, p, scheme == Scheme::Noma, true)
}

/// Frequency of `SIR > beta` over `n_draws` fading draws on one geometry:
/// the direct-simulation oracle for the conditional success formulas.
pub fn fading_success_frequency(
    snap: &NetworkSnapshot,
    device: Device,
    scheme: Scheme,
    beta: f64,
    p: &SystemParams,
    n_draws: usize,
    seed: u64,
) -> EmpiricalEstimate {
    let mut rng = substream(seed, Purpose::Fading, snap.seed.1);
    let mut stats = SampleStats::new();
    for _ in 0..n_draws {
        let f = draw_fading(snap, &mut rng);
        let sir = match device {
            Device::Mobile => sir_mobile(snap, &f, scheme, p),
            Device::Iot => sir_iot(snap, &f, scheme, p),
        };
        stats.push((sir > beta) as u8 as f64);
    }
    EmpiricalEstimate::from_stats(&stats, EstimatorKind::Ccdf)
}

fn power(x: f64, b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else if b == 1.0 {
        x
    } else if b == -1.0 {
        1.0 / x
    } else {
        Float::powf(x, b)
    }
}

/// `E[P^b]` over the given geometries.
///
/// For `b < 0` the sample kurtosis is checked and
/// [`EmpiricalEstimate::heavy_tail`] set when it explodes.
pub fn empirical_moment(
    snaps: &[NetworkSnapshot],
    device: Device,
    scheme: Scheme,
    b: f64,
    beta: f64,
    p: &SystemParams,
) -> Result<EmpiricalEstimate, Error> {
    check_count(snaps.len())?;
    let stats = SampleStats::from_iter(
        snaps
            .iter()
            .map(|s| power(conditional_success(s, device, scheme, beta, p), b)),
    );
    let mut est = EmpiricalEstimate::from_stats(&stats, EstimatorKind::Moment(b));
    if b < 0.0 {
        let k = stats.excess_kurtosis();
        est.heavy_tail = !est.value.is_finite() || !(k <= HEAVY_TAIL_KURTOSIS);
        if est.heavy_tail {
            log::warn!("moment b = {b}: heavy-tailed samples (excess kurtosis {k:.1})");
        }
    }
    Ok(est)
}

/// Empirical moment curve over linear thresholds.
pub fn empirical_moment_curve(
    snaps: &[NetworkSnapshot],
    device: Device,
    scheme: Scheme,
    b: f64,
    thresholds: &[f64],
    p: &SystemParams,
) -> Result<(MetaCurve, Vec<EmpiricalEstimate>), Error> {
    let ests = thresholds
        .iter()
        .map(|&beta| empirical_moment(snaps, device, scheme, b, beta, p))
        .collect::<Result<Vec<_>, _>>()?;
    let curve = MetaCurve {
        thresholds: thresholds.to_vec(),
        points: ests
            .iter()
            .map(EmpiricalEstimate::to_moment_result)
            .collect(),
        kind: if b == 1.0 {
            CurveKind::Ccdf
        } else {
            CurveKind::Moment(b)
        },
        source: CurveSource::Empirical,
    };
    Ok((curve, ests))
}

/// Fraction of geometries whose conditional success probability exceeds `x`.
pub fn empirical_meta_ccdf(
    snaps: &[NetworkSnapshot],
    x: f64,
    device: Device,
    scheme: Scheme,
    beta: f64,
    p: &SystemParams,
) -> Result<EmpiricalEstimate, Error> {
    check_count(snaps.len())?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument {
            name: "x",
            reason: "reliability must lie in [0, 1]",
        });
    }
    let stats = SampleStats::from_iter(
        snaps
            .iter()
            .map(|s| (conditional_success(s, device, scheme, beta, p) > x) as u8 as f64),
    );
    Ok(EmpiricalEstimate::from_stats(
        &stats,
        EstimatorKind::MetaCcdf(x),
    ))
}

/// Ergodic rate `E[log2(1 + SIR_m)]` over geometries and `draws_per_geo`
/// fading draws each; OMA is scaled by `eta`. The standard error treats
/// per-geometry averages as the independent samples.
pub fn empirical_rate(
    snaps: &[NetworkSnapshot],
    scheme: Scheme,
    draws_per_geo: usize,
    seed: u64,
    p: &SystemParams,
) -> Result<EmpiricalEstimate, Error> {
    check_count(snaps.len())?;
    if draws_per_geo == 0 {
        return Err(Error::InvalidArgument {
            name: "draws_per_geo",
            reason: "must be positive",
        });
    }
    let scale = match scheme {
        Scheme::Noma => 1.0,
        Scheme::Oma => p.eta(),
    };
    let stats = SampleStats::from_iter(snaps.iter().map(|snap| {
        let mut rng = substream(seed, Purpose::Fading, snap.seed.1);
        let mut acc = 0.0;
        for _ in 0..draws_per_geo {
            let f = draw_fading(snap, &mut rng);
            acc += Float::ln_1p(sir_mobile(snap, &f, scheme, p)) / LN_2;
        }
        scale * acc / draws_per_geo as f64
    }));
    Ok(EmpiricalEstimate::from_stats(&stats, EstimatorKind::Rate))
}

/// Empirical SIR CCDF of the mobile user from fading draws, for checking
/// rate integrals: returns `P(SIR_m > g)` for every `g` in `thresholds`.
pub fn empirical_sir_ccdf(
    snaps: &[NetworkSnapshot],
    scheme: Scheme,
    thresholds: &[f64],
    draws_per_geo: usize,
    seed: u64,
    p: &SystemParams,
) -> Vec<f64> {
    let mut counts = alloc::vec![0u64; thresholds.len()];
    let mut total = 0u64;
    for snap in snaps {
        let mut rng = substream(seed, Purpose::Fading, snap.seed.1);
        for _ in 0..draws_per_geo {
            let f = draw_fading(snap, &mut rng);
            let sir = sir_mobile(snap, &f, scheme, p);
            for (c, &g) in counts.iter_mut().zip(thresholds) {
                *c += (sir > g) as u64;
            }
            total += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Both mean-local-delay estimators and the cap diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEstimates {
    /// Mean of `1 / P` (divided by `1 - eta` under OMA).
    pub harmonic: EmpiricalEstimate,
    /// Mean slot count of a simulated retransmission run per geometry.
    pub retransmission: EmpiricalEstimate,
    /// Runs that hit [`RETRANSMISSION_CAP`].
    pub cap_hits: usize,
}

impl DelayEstimates {
    /// Fraction of capped runs.
    pub fn cap_hit_fraction(&self) -> f64 {
        self.cap_hits as f64 / self.retransmission.n_samples as f64
    }

    /// `true` when either estimator looks heavy tailed.
    pub fn heavy_tail(&self) -> bool {
        self.harmonic.heavy_tail || self.retransmission.heavy_tail
    }
}

/// Mean local delay of the typical IoT device at the configured `beta_t`.
///
/// Each slot the device gets the channel (always under NOMA, with
/// probability `1 - eta` under OMA) and then succeeds with its conditional
/// success probability. The harmonic estimator averages the exact
/// conditional mean `1 / ((1 - eta) P)`; the retransmission estimator
/// simulates one run per geometry, capped at [`RETRANSMISSION_CAP`] slots.
pub fn empirical_local_delay(
    snaps: &[NetworkSnapshot],
    scheme: Scheme,
    seed: u64,
    p: &SystemParams,
) -> Result<DelayEstimates, Error> {
    check_count(snaps.len())?;
    let access = match scheme {
        Scheme::Noma => 1.0,
        Scheme::Oma => 1.0 - p.eta(),
    };
    let mut harmonic = SampleStats::new();
    let mut runs = SampleStats::new();
    let mut cap_hits = 0usize;
    for snap in snaps {
        let prob = conditional_success(snap, Device::Iot, scheme, p.beta_t(), p) * access;
        harmonic.push(1.0 / prob);
        let mut rng = substream(seed, Purpose::Retransmission, snap.seed.1);
        let mut slots = 1u64;
        while slots < RETRANSMISSION_CAP && !(rng.random::<f64>() < prob) {
            slots += 1;
        }
        if slots == RETRANSMISSION_CAP {
            cap_hits += 1;
        }
        runs.push(slots as f64);
    }
    let mut h = EmpiricalEstimate::from_stats(&harmonic, EstimatorKind::Delay);
    h.heavy_tail = !(harmonic.excess_kurtosis() <= HEAVY_TAIL_KURTOSIS);
    let mut r = EmpiricalEstimate::from_stats(&runs, EstimatorKind::DelayRetransmission);
    let frac = cap_hits as f64 / snaps.len() as f64;
    r.heavy_tail = frac > CAP_HIT_WARN_FRACTION;
    if cap_hits > 0 {
        log::info!(
            "retransmission cap hit in {cap_hits} of {} runs",
            snaps.len()
        );
    }
    if r.heavy_tail || h.heavy_tail {
        log::warn!("mean local delay looks heavy tailed (possible divergence)");
    }
    Ok(DelayEstimates {
        harmonic: h,
        retransmission: r,
        cap_hits,
    })
}

fn check_count(n: usize) -> Result<(), Error> {
    if n < MIN_GEOMETRIES {
        Err(Error::TooFewSamples {
            got: n,
            min: MIN_GEOMETRIES,
        })
    } else {
        Ok(())
    }
}

/// Sampling effort of [`pgfl_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgflSettings {
    /// Realisations of the point process.
    pub n_real: usize,
    /// Radius of the simulated disk, m.
    pub window_radius: f64,
    /// Master seed.
    pub seed: u64,
}

/// `E[prod_x f(|x|, R_x)]` for an inhomogeneous PPP with the given radial
/// `density`, simulated by thinning a homogeneous PPP of intensity
/// `dominating` (which must bound the density); each retained point `x`
/// gets an independent link distance `R_x` drawn from `link(|x|)`.
pub fn pgfl_oracle<D, L, F, E>(
    density: &D,
    dominating: f64,
    link: L,
    factor: F,
    settings: &PgflSettings,
    exec: &E,
) -> Result<EmpiricalEstimate, Error>
where
    D: RadialDensity + Sync,
    L: Fn(f64) -> LinkDistanceLaw + Sync + Send,
    F: Fn(f64, f64) -> f64 + Sync + Send,
    E: Executor,
{
    if settings.n_real == 0 {
        return Err(Error::TooFewSamples { got: 0, min: 1 });
    }
    let values = exec.map(settings.n_real, |i| {
        let mut rng = substream(settings.seed, Purpose::Pgfl, i as u64);
        let pts = crate::spatial::sample_bs_process(dominating, settings.window_radius, &mut rng);
        let mut prod = 1.0;
        // Index 0 is the extra origin point, not part of the process.
        for q in &pts[1..] {
            let u = Float::sqrt(q[0] * q[0] + q[1] * q[1]);
            let keep = density.eval(u) / dominating;
            if keep > 1.0 + 1e-12 {
                return Err(Error::InvalidArgument {
                    name: "dominating",
                    reason: "density exceeds the dominating intensity",
                });
            }
            if rng.random::<f64>() < keep {
                let r = link(u).sample(&mut rng);
                prod *= factor(u, r);
            }
        }
        Ok(prod)
    });
    let mut stats = SampleStats::new();
    for v in values {
        stats.push(v?);
    }
    Ok(EmpiricalEstimate::from_stats(&stats, EstimatorKind::Pgfl))
}

/// Oracle for the inter-cell kernels: `I2(s)` for `Device::Iot`, `M(s)` for
/// `Device::Mobile`, with the interferer densities and conditional link laws
/// of the analytic model.
pub fn pgfl_kernel_oracle<E: Executor>(
    side: Device,
    s: f64,
    b: f64,
    p: &SystemParams,
    inv_jm_area: f64,
    settings: &PgflSettings,
    exec: &E,
) -> Result<EmpiricalEstimate, Error> {
    use crate::distributions::InterfererDensity;
    let a = p.alpha();
    let (density, rho, eps) = match side {
        Device::Iot => (InterfererDensity::iot(p), p.rho_t(), p.eps_t()),
        Device::Mobile => (
            InterfererDensity::mobile(inv_jm_area, p),
            p.rho_m(),
            p.eps_m(),
        ),
    };
    let link = |u: f64| match side {
        Device::Iot => LinkDistanceLaw::interferer_iot(u, p),
        Device::Mobile => LinkDistanceLaw::interferer_mobile(u, p),
    };
    let factor = |u: f64, r: f64| {
        let x = s * rho * Float::powf(r, a * eps) * Float::powf(u, -a);
        power(1.0 / (1.0 + x), b)
    };
    pgfl_oracle(&density, p.lambda_b(), link, factor, settings, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::spatial::Interferer;

    fn snaps(n: usize, seed: u64) -> (SystemParams, Vec<NetworkSnapshot>) {
        let p = SystemParams::default();
        let s = McSettings::new(n, seed, p.lambda_b());
        (p, build_snapshots(&p, &s, &Sequential).unwrap())
    }

    fn bare(r_m: f64, r_t: f64) -> NetworkSnapshot {
        NetworkSnapshot {
            bs_points: alloc::vec![[0.0, 0.0]],
            mobile_positions: alloc::vec![[r_m, 0.0]],
            iot_positions: alloc::vec![[0.0, r_t]],
            typical_mobile: r_m,
            typical_iot: r_t,
            interferers_mobile: Vec::new(),
            interferers_iot: Vec::new(),
            window_radius: 100.0,
            seed: (0, 0),
            clamped: 0,
        }
    }

    #[test]
    fn too_few_geometries_rejected() {
        let p = SystemParams::default();
        let s = McSettings::new(10, 1, p.lambda_b());
        assert!(matches!(
            build_snapshots(&p, &s, &Sequential),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn vanishing_threshold_gives_certain_success() {
        let (p, s) = snaps(100, 1);
        for d in [Device::Mobile, Device::Iot] {
            for sc in [Scheme::Noma, Scheme::Oma] {
                let v = conditional_success(&s[0], d, sc, 1e-15, &p);
                assert!(Float::abs(v - 1.0) < 1e-9);
            }
        }
    }

    #[test]
    fn isolated_pair_closed_forms() {
        let p = SystemParams::default().with_eps(0.5, 0.5).unwrap();
        let snap = bare(20.0, 40.0);
        let beta = 2.0;
        let s_m = beta / p.rho_m() * Float::powf(20.0, 2.0);
        let want = 1.0 / (1.0 + s_m * p.rho_t() * Float::powf(40.0, -2.0));
        let got = conditional_success_mobile(&snap, beta, Scheme::Noma, &p);
        assert!(Float::abs(got - want) < 1e-15);
        assert_eq!(
            conditional_success_mobile(&snap, beta, Scheme::Oma, &p),
            1.0
        );
        assert_eq!(conditional_success_iot(&snap, beta, &p), 1.0);
        // Unit gains: log2(1 + rho_m R_m^{a(e-1)} / (rho_t R_t^{a(e-1)})).
        let f = FadingDraw {
            h_m: 1.0,
            h_t: 1.0,
            h_xm: Vec::new(),
            h_xt: Vec::new(),
        };
        let sir = sir_mobile(&snap, &f, Scheme::Noma, &p);
        let want = Float::powf(20.0, -2.0) / Float::powf(40.0, -2.0);
        assert!(Float::abs(sir - want) < 1e-12 * want);
    }

    #[test]
    fn oma_iot_equals_noma_without_mobile_interferers() {
        let (p, s) = snaps(100, 2);
        let mut stripped = s[3].clone();
        stripped.interferers_mobile.clear();
        let a = conditional_success_iot_oma(&s[3], 0.3, &p);
        let b = conditional_success_iot(&stripped, 0.3, &p);
        assert!(Float::abs(a - b) < 1e-15);
    }

    #[test]
    fn pathwise_scheme_ordering() {
        let (p, s) = snaps(100, 3);
        for snap in &s {
            for d in [Device::Mobile, Device::Iot] {
                let n = conditional_success(snap, d, Scheme::Noma, 1.0, &p);
                let o = conditional_success(snap, d, Scheme::Oma, 1.0, &p);
                assert!(n <= o && n > 0.0 && o <= 1.0);
            }
        }
    }

    #[test]
    fn closed_form_matches_fading_draws() {
        let (p0, s) = snaps(100, 4);
        for (em, et) in [(0.5, 1.0), (0.0, 0.0), (1.0, 1.0)] {
            let p = p0.with_eps(em, et).unwrap();
            for snap in &s[..3] {
                for (d, sc, beta) in [
                    (Device::Mobile, Scheme::Noma, 0.2),
                    (Device::Mobile, Scheme::Oma, 1.0),
                    (Device::Iot, Scheme::Noma, p.beta_t()),
                    (Device::Iot, Scheme::Oma, p.beta_t()),
                ] {
                    let exact = conditional_success(snap, d, sc, beta, &p);
                    let freq = fading_success_frequency(snap, d, sc, beta, &p, 10_000, 9);
                    let sd = Float::sqrt(Float::max(exact * (1.0 - exact), 1e-12) / 1e4);
                    assert!(
                        Float::abs(freq.value - exact) <= 3.0 * sd + 1e-12,
                        "{em} {et} {d:?} {sc:?}: {} vs {exact}",
                        freq.value
                    );
                }
            }
        }
    }

    #[test]
    fn zeroth_moment_and_monotonicity() {
        let (p, s) = snaps(200, 5);
        let m0 = empirical_moment(&s, Device::Iot, Scheme::Noma, 0.0, 1.0, &p).unwrap();
        assert_eq!((m0.value, m0.std_error), (1.0, 0.0));
        let grid = [0.1, 0.3, 1.0, 3.0, 10.0];
        let (curve, _) =
            empirical_moment_curve(&s, Device::Mobile, Scheme::Noma, 1.0, &grid, &p).unwrap();
        assert!(curve.check_invariants(0.0));
        let m1 = empirical_moment(&s, Device::Mobile, Scheme::Noma, 1.0, 1.0, &p).unwrap();
        let m2 = empirical_moment(&s, Device::Mobile, Scheme::Noma, 2.0, 1.0, &p).unwrap();
        assert!(m2.value >= m1.value * m1.value);
    }

    #[test]
    fn meta_ccdf_endpoints() {
        let (p, s) = snaps(100, 6);
        let a = empirical_meta_ccdf(&s, 0.0, Device::Iot, Scheme::Noma, 1.0, &p).unwrap();
        let b = empirical_meta_ccdf(&s, 1.0, Device::Iot, Scheme::Noma, 1.0, &p).unwrap();
        assert_eq!((a.value, b.value), (1.0, 0.0));
        let mut last = 1.0;
        for i in 0..=10 {
            let v = empirical_meta_ccdf(&s, i as f64 / 10.0, Device::Mobile, Scheme::Oma, 1.0, &p)
                .unwrap()
                .value;
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn oma_rate_linear_in_eta() {
        let (p, s) = snaps(100, 7);
        let a = empirical_rate(&s, Scheme::Oma, 4, 1, &p.with_eta(0.2).unwrap()).unwrap();
        let b = empirical_rate(&s, Scheme::Oma, 4, 1, &p.with_eta(0.4).unwrap()).unwrap();
        assert!(Float::abs(2.0 * a.value - b.value) < 1e-12 * b.value);
    }

    #[test]
    fn certain_success_delay_is_one() {
        let p = SystemParams::default();
        let s: Vec<_> = (0..100).map(|_| bare(10.0, 10.0)).collect();
        let d = empirical_local_delay(&s, Scheme::Noma, 1, &p).unwrap();
        assert_eq!(d.harmonic.value, 1.0);
        assert_eq!(d.retransmission.value, 1.0);
        assert_eq!(d.cap_hits, 0);
    }

    #[test]
    fn oracle_of_constant_functional_is_one() {
        let p = SystemParams::default();
        let settings = PgflSettings {
            n_real: 20,
            window_radius: 500.0,
            seed: 1,
        };
        let d = crate::distributions::InterfererDensity::iot(&p);
        let e = pgfl_oracle(
            &d,
            p.lambda_b(),
            |u| LinkDistanceLaw::interferer_iot(u, &p),
            |_, _| 1.0,
            &settings,
            &Sequential,
        )
        .unwrap();
        assert_eq!(e.value, 1.0);
        let e =
            pgfl_kernel_oracle(Device::Mobile, 0.0, 1.0, &p, 4e-4, &settings, &Sequential).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn interferers_far_away_barely_matter() {
        let p = SystemParams::default();
        let mut snap = bare(20.0, 40.0);
        let base = conditional_success_iot(&snap, 1.0, &p);
        snap.interferers_iot.push(Interferer {
            link: 10.0,
            to_origin: 1e5,
        });
        let v = conditional_success_iot(&snap, 1.0, &p);
        assert!(v < base && base - v < 1e-10);
    }
}
