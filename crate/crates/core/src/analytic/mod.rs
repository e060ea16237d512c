//! Quadrature evaluation of the meta-distribution moments, the ergodic rate
//! of the mobile user and the mean local delay of the IoT device.
//!
//! Moments are built from three kernels of the interference scale `s`:
//!
//! - `I1(s)`: intra-cell IoT interference seen by the mobile user, an
//!   expectation over the IoT link distance;
//! - `I2(s)`: inter-cell IoT interferers, the probability generating
//!   functional of the non-homogeneous PPP with density `lambda_b g_t(u)`;
//! - `M(s)`: inter-cell mobile interferers, same with `g_m(u)` and link
//!   distances truncated at `min(u, L)`.
//!
//! Evaluation order: the innermost link-distance integral uses a fixed
//! Gauss-Legendre rule on its finite support, the interferer-distance
//! integral and the outer link-distance expectation use the adaptive
//! engine of [`crate::quadrature`].

mod kernels;
mod rate;

use alloc::vec::Vec;

use num_traits::Float;

pub use rate::RateResult;

use crate::config::SystemParams;
use crate::distributions::LinkDistanceLaw;
use crate::quadrature::{Adaptive, GaussLegendre, QuadResult, QuadStatus};
use crate::{Device, Error, Scheme};

/// Orders closer than this to a divergence boundary count as on it.
const BOUNDARY_EPS: f64 = 1e-9;

/// Convergence status of an analytic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MomentStatus {
    /// All layers met their tolerance.
    Converged,
    /// A logarithmically divergent integral was cut off at the minimum link
    /// distance; the value is finite but depends on that cutoff.
    TruncatedTailWarning,
    /// The quantity is infinite (or an integral failed to converge).
    Diverged,
}

impl MomentStatus {
    /// Name used in CSV files.
    pub fn name(self) -> &'static str {
        match self {
            MomentStatus::Converged => "converged",
            MomentStatus::TruncatedTailWarning => "truncated-tail-warning",
            MomentStatus::Diverged => "diverged",
        }
    }

    fn from_quad(q: &QuadResult) -> Self {
        match q.status {
            QuadStatus::Converged => MomentStatus::Converged,
            QuadStatus::MaxSubdivisions | QuadStatus::NonFinite => MomentStatus::Diverged,
        }
    }
}

/// A moment (or delay) value with its error estimate and status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResult {
    /// The value; `+inf` for diverged negative-order moments.
    pub value: f64,
    /// Composite absolute error estimate (sum over quadrature layers).
    pub abs_error_est: f64,
    /// Convergence status.
    pub status: MomentStatus,
}

impl MomentResult {
    fn diverged() -> Self {
        MomentResult {
            value: f64::INFINITY,
            abs_error_est: f64::INFINITY,
            status: MomentStatus::Diverged,
        }
    }

    /// `false` only for [`MomentStatus::Diverged`].
    pub fn is_finite_result(&self) -> bool {
        self.status != MomentStatus::Diverged
    }
}

/// What a [`MetaCurve`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// `b`-th moment of the meta distribution.
    Moment(f64),
    /// SIR complementary CDF (the first moment).
    Ccdf,
    /// Integrand of the ergodic-rate integral.
    RateIntegrand,
}

/// Which engine produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSource {
    /// Quadrature.
    Analytic,
    /// Simulation.
    Empirical,
}

/// Values tabulated over an increasing grid of (linear) thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaCurve {
    /// Linear thresholds, strictly increasing.
    pub thresholds: Vec<f64>,
    /// One result per threshold.
    pub points: Vec<MomentResult>,
    /// What the values are.
    pub kind: CurveKind,
    /// Where they come from.
    pub source: CurveSource,
}

impl MetaCurve {
    /// Checks the curve invariants: increasing thresholds, and for CCDFs
    /// values that do not increase with the threshold (up to `slack`).
    pub fn check_invariants(&self, slack: f64) -> bool {
        let increasing = self.thresholds.windows(2).all(|w| w[0] < w[1]);
        let monotone = match self.kind {
            CurveKind::Ccdf => self
                .points
                .windows(2)
                .all(|w| w[1].value <= w[0].value + slack),
            _ => true,
        };
        increasing && monotone && self.thresholds.len() == self.points.len()
    }
}

/// Tolerances and rule sizes of the analytic engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSettings {
    /// Relative tolerance of every adaptive layer.
    pub tol: f64,
    /// Order of the innermost Gauss-Legendre rule.
    pub inner_order: usize,
    /// Panel limit of the adaptive layers.
    pub limit: usize,
}

impl Default for AnalyticSettings {
    fn default() -> Self {
        AnalyticSettings {
            tol: 1e-6,
            inner_order: 24,
            limit: 200,
        }
    }
}

/// One quadrature layer's contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Layer {
    pub value: f64,
    pub abs_error: f64,
    pub status: MomentStatus,
}

impl Layer {
    pub fn exact(value: f64) -> Self {
        Layer {
            value,
            abs_error: 0.0,
            status: MomentStatus::Converged,
        }
    }

    pub fn diverged() -> Self {
        Layer {
            value: f64::INFINITY,
            abs_error: f64::INFINITY,
            status: MomentStatus::Diverged,
        }
    }

    pub fn from_quad(q: QuadResult) -> Self {
        Layer {
            value: q.value,
            abs_error: q.abs_error,
            status: MomentStatus::from_quad(&q),
        }
    }

    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            self.abs_error
        } else {
            self.abs_error / Float::abs(self.value)
        }
    }
}

/// Tracks the worst inner status and relative error seen while an outer
/// integrand is being evaluated.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InnerTrack {
    pub status: MomentStatus,
    pub rel_error: f64,
}

impl InnerTrack {
    pub fn new() -> Self {
        InnerTrack {
            status: MomentStatus::Converged,
            rel_error: 0.0,
        }
    }

    pub fn absorb(&mut self, status: MomentStatus, rel_error: f64) {
        self.status = self.status.max(status);
        if rel_error.is_finite() {
            self.rel_error = Float::max(self.rel_error, rel_error);
        }
    }
}

/// Analytic engine bound to one parameter set.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    params: SystemParams,
    inv_jm_area: f64,
    settings: AnalyticSettings,
    gl: GaussLegendre,
}

impl AnalyticModel {
    /// Model with default settings. `inv_jm_area` is `E[1/|JM cell|]` per m²,
    /// see [`crate::distributions::estimate_inverse_jm_area`].
    pub fn new(params: SystemParams, inv_jm_area: f64) -> Self {
        Self::with_settings(params, inv_jm_area, AnalyticSettings::default())
    }

    /// Model with explicit settings.
    pub fn with_settings(
        params: SystemParams,
        inv_jm_area: f64,
        settings: AnalyticSettings,
    ) -> Self {
        AnalyticModel {
            params,
            inv_jm_area,
            settings,
            gl: GaussLegendre::new(settings.inner_order),
        }
    }

    /// Same model with different parameters.
    pub fn with_params(&self, params: SystemParams) -> Self {
        AnalyticModel {
            params,
            ..self.clone()
        }
    }

    /// Parameters in use.
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Mean inverse JM-cell area in use.
    pub fn inv_jm_area(&self) -> f64 {
        self.inv_jm_area
    }

    /// Settings in use.
    pub fn settings(&self) -> &AnalyticSettings {
        &self.settings
    }

    pub(crate) fn quad(&self) -> Adaptive {
        Adaptive {
            epsabs: 0.0,
            epsrel: self.settings.tol,
            limit: self.settings.limit,
        }
    }

    /// Interference scale of the mobile user at link distance `r`.
    pub fn scale_mobile(&self, beta_m: f64, r: f64) -> f64 {
        let p = &self.params;
        beta_m / p.rho_m() * Float::powf(r, p.alpha() * (1.0 - p.eps_m()))
    }

    /// Interference scale of the IoT device at link distance `r`.
    pub fn scale_iot(&self, beta_t: f64, r: f64) -> f64 {
        let p = &self.params;
        beta_t / p.rho_t() * Float::powf(r, p.alpha() * (1.0 - p.eps_t()))
    }

    /// Intra-cell kernel `E_Rt[(1 + s rho_t R_t^{alpha(eps_t - 1)})^{-b}]`.
    pub fn kernel_i1(&self, s: f64, b: f64) -> f64 {
        self.i1_layer(s, b).value
    }

    /// Inter-cell IoT kernel `I2(s)`.
    pub fn kernel_i2(&self, s: f64, b: f64) -> f64 {
        self.pgfl_layer(kernels::Side::Iot, s, b).value
    }

    /// Inter-cell mobile kernel `M(s)`.
    pub fn kernel_m(&self, s: f64, b: f64) -> f64 {
        self.pgfl_layer(kernels::Side::Mobile, s, b).value
    }

    fn check_order(b: f64) -> Result<(), Error> {
        if b >= 0.0 || b == -1.0 {
            Ok(())
        } else {
            Err(Error::UnsupportedOrder(b))
        }
    }

    /// `b`-th moment of the conditional success probability of `device`
    /// under `scheme` at threshold `beta` (linear).
    pub fn moment(
        &self,
        device: Device,
        scheme: Scheme,
        b: f64,
        beta: f64,
    ) -> Result<MomentResult, Error> {
        Self::check_order(b)?;
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument {
                name: "beta",
                reason: "must be positive",
            });
        }
        Ok(match device {
            Device::Mobile => self.moment_mobile(scheme, b, beta),
            Device::Iot => self.moment_iot(scheme, b, beta),
        })
    }

    /// Mobile user, NOMA.
    pub fn moment_mobile_noma(&self, b: f64, beta_m: f64) -> Result<MomentResult, Error> {
        self.moment(Device::Mobile, Scheme::Noma, b, beta_m)
    }

    /// Mobile user, OMA.
    pub fn moment_mobile_oma(&self, b: f64, beta_m: f64) -> Result<MomentResult, Error> {
        self.moment(Device::Mobile, Scheme::Oma, b, beta_m)
    }

    /// IoT device, NOMA.
    pub fn moment_iot_noma(&self, b: f64, beta_t: f64) -> Result<MomentResult, Error> {
        self.moment(Device::Iot, Scheme::Noma, b, beta_t)
    }

    /// IoT device, OMA.
    pub fn moment_iot_oma(&self, b: f64, beta_t: f64) -> Result<MomentResult, Error> {
        self.moment(Device::Iot, Scheme::Oma, b, beta_t)
    }

    /// Product of the kernels seen by the mobile user at scale `s`.
    pub(crate) fn mobile_kernel(&self, scheme: Scheme, s: f64, b: f64) -> Layer {
        let mut layers = [Layer::exact(1.0); 3];
        layers[0] = self.pgfl_layer(kernels::Side::Mobile, s, b);
        if scheme == Scheme::Noma {
            layers[1] = self.i1_layer(s, b);
            layers[2] = self.pgfl_layer(kernels::Side::Iot, s, b);
        }
        product(&layers)
    }

    fn moment_mobile(&self, scheme: Scheme, b: f64, beta: f64) -> MomentResult {
        let p = &self.params;
        let law = LinkDistanceLaw::serving_mobile(p);
        if p.eps_m() == 1.0 {
            // s does not depend on the link distance.
            let k = self.mobile_kernel(scheme, beta / p.rho_m(), b);
            return finish(k, Layer::exact(k.value), InnerTrack::new());
        }
        let mut track = InnerTrack::new();
        let outer = self.quad().integrate(
            |r| {
                let w = law.pdf(r);
                if w == 0.0 {
                    return 0.0;
                }
                let k = self.mobile_kernel(scheme, self.scale_mobile(beta, r), b);
                track.absorb(k.status, k.rel_error());
                w * k.value
            },
            0.0,
            p.pairing_radius(),
        );
        finish_outer(outer, track)
    }

    /// Product of the kernels seen by the IoT device at scale `s`.
    pub(crate) fn iot_kernel(&self, scheme: Scheme, s: f64, b: f64) -> Layer {
        let mut layers = [Layer::exact(1.0); 2];
        layers[0] = self.pgfl_layer(kernels::Side::Iot, s, b);
        if scheme == Scheme::Noma {
            layers[1] = self.pgfl_layer(kernels::Side::Mobile, s, b);
        }
        product(&layers)
    }

    fn moment_iot(&self, scheme: Scheme, b: f64, beta: f64) -> MomentResult {
        let p = &self.params;
        let law = LinkDistanceLaw::serving_iot(p);
        let growth = p.alpha() * (1.0 - p.eps_t());
        if growth == 0.0 {
            let k = self.iot_kernel(scheme, beta / p.rho_t(), b);
            return finish(k, Layer::exact(k.value), InnerTrack::new());
        }
        if b == -1.0 {
            return self.moment_iot_negative(scheme, beta, law, growth);
        }
        let mut track = InnerTrack::new();
        let outer = self.quad().semi_infinite(
            |r| {
                let w = law.pdf(r);
                if w == 0.0 {
                    return 0.0;
                }
                let k = self.iot_kernel(scheme, self.scale_iot(beta, r), b);
                track.absorb(k.status, k.rel_error());
                w * k.value
            },
            0.0,
            law.untruncated_mean(),
        );
        finish_outer(outer, track)
    }

    /// `b = -1` for the IoT device with `eps_t < 1`.
    ///
    /// At `b = -1` every interferer factor is linear in `s`, so the kernels are
    /// `exp(C s)` with `C` the kernel exponent at `s = 1`. The outer
    /// expectation then grows like `exp(C beta/rho_t r^growth)` against the
    /// Rayleigh tail `exp(-a r^2)`.
    fn moment_iot_negative(
        &self,
        scheme: Scheme,
        beta: f64,
        law: LinkDistanceLaw,
        growth: f64,
    ) -> MomentResult {
        let p = &self.params;
        if growth > 2.0 + BOUNDARY_EPS {
            return MomentResult::diverged();
        }
        let mut c = self.pgfl_exponent(kernels::Side::Iot, 1.0, -1.0);
        if scheme == Scheme::Noma {
            let m = self.pgfl_exponent(kernels::Side::Mobile, 1.0, -1.0);
            c = Layer {
                value: c.value + m.value,
                abs_error: c.abs_error + m.abs_error,
                status: c.status.max(m.status),
            };
        }
        if c.status == MomentStatus::Diverged {
            return MomentResult::diverged();
        }
        let coeff = c.value * beta / p.rho_t();
        if Float::abs(growth - 2.0) <= BOUNDARY_EPS && coeff >= law.rate() {
            return MomentResult::diverged();
        }
        let outer = self.quad().semi_infinite(
            |r| {
                let w = law.pdf(r);
                if w == 0.0 {
                    0.0
                } else {
                    w * Float::exp(coeff * Float::powf(r, growth))
                }
            },
            0.0,
            law.untruncated_mean(),
        );
        // d/dC of E[exp(C x)] is bounded by value * max exponent; use the
        // first-order propagation through the mean.
        let mut track = InnerTrack::new();
        track.absorb(
            c.status,
            c.abs_error * beta / p.rho_t() * Float::max(1.0, outer.value),
        );
        finish_outer(outer, track)
    }

    /// SIR complementary CDF of the mobile user at `beta_m` (linear).
    pub fn ccdf_sir_mobile(&self, beta_m: f64, scheme: Scheme) -> Result<MomentResult, Error> {
        self.moment(Device::Mobile, scheme, 1.0, beta_m)
    }

    /// Mean local delay of the IoT device at the configured `beta_t`.
    ///
    /// OMA includes the `(1 - eta)^{-1}` access factor.
    pub fn mean_local_delay(&self, scheme: Scheme) -> MomentResult {
        let p = &self.params;
        let m = self.moment_iot(scheme, -1.0, p.beta_t());
        match scheme {
            Scheme::Noma => m,
            Scheme::Oma => {
                let f = 1.0 / (1.0 - p.eta());
                MomentResult {
                    value: m.value * f,
                    abs_error_est: m.abs_error_est * f,
                    status: m.status,
                }
            }
        }
    }

    /// Tabulates a moment over linear thresholds.
    pub fn moment_curve(
        &self,
        device: Device,
        scheme: Scheme,
        b: f64,
        thresholds: &[f64],
    ) -> Result<MetaCurve, Error> {
        let points = thresholds
            .iter()
            .map(|&beta| self.moment(device, scheme, b, beta))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MetaCurve {
            thresholds: thresholds.to_vec(),
            points,
            kind: if b == 1.0 {
                CurveKind::Ccdf
            } else {
                CurveKind::Moment(b)
            },
            source: CurveSource::Analytic,
        })
    }
}

fn product(layers: &[Layer]) -> Layer {
    let mut value = 1.0;
    let mut rel = 0.0;
    let mut status = MomentStatus::Converged;
    for l in layers {
        value *= l.value;
        rel += l.rel_error();
        status = status.max(l.status);
    }
    Layer {
        value,
        abs_error: rel * Float::abs(value),
        status,
    }
}

fn finish(inner: Layer, outer: Layer, track: InnerTrack) -> MomentResult {
    let status = inner.status.max(outer.status).max(track.status);
    if status == MomentStatus::Diverged && !inner.value.is_finite() {
        return MomentResult::diverged();
    }
    MomentResult {
        value: outer.value,
        abs_error_est: outer.abs_error + inner.abs_error,
        status,
    }
}

fn finish_outer(outer: QuadResult, track: InnerTrack) -> MomentResult {
    let status = MomentStatus::from_quad(&outer).max(track.status);
    if !outer.value.is_finite() {
        return MomentResult::diverged();
    }
    MomentResult {
        value: outer.value,
        abs_error_est: outer.abs_error + track.rel_error * Float::abs(outer.value),
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawParams;

    // Mean inverse JM-cell area at the reference point, normalised by
    // lambda_b; close to the cached estimate and only needs to be plausible.
    const INV_AREA_NORM: f64 = 4.17;

    fn model(eps_m: f64, eps_t: f64) -> AnalyticModel {
        let p = SystemParams::default().with_eps(eps_m, eps_t).unwrap();
        AnalyticModel::new(p, INV_AREA_NORM * p.lambda_b())
    }

    const FAMILIES: [(Device, Scheme); 4] = [
        (Device::Mobile, Scheme::Noma),
        (Device::Mobile, Scheme::Oma),
        (Device::Iot, Scheme::Noma),
        (Device::Iot, Scheme::Oma),
    ];

    #[test]
    fn zeroth_moment_is_one() {
        for (em, et) in [(0.0, 0.0), (0.3, 0.7), (1.0, 1.0)] {
            let m = model(em, et);
            for (d, s) in FAMILIES {
                let r = m.moment(d, s, 0.0, 2.0).unwrap();
                assert!(Float::abs(r.value - 1.0) < 1e-8, "{d:?} {s:?}: {r:?}");
            }
        }
    }

    #[test]
    fn kernels_are_one_at_zero_scale() {
        let m = model(0.5, 0.5);
        for b in [1.0, 2.0, -1.0] {
            assert_eq!(m.kernel_i1(0.0, b), 1.0);
            assert_eq!(m.kernel_i2(0.0, b), 1.0);
            assert_eq!(m.kernel_m(0.0, b), 1.0);
        }
        assert_eq!(m.kernel_i2(3.0, 0.0), 1.0);
    }

    #[test]
    fn intra_cell_kernel_without_power_control_residue() {
        let m = model(0.5, 1.0);
        for (s, b) in [(0.3, 1.0), (2.0, 2.0), (5.0, 0.5)] {
            let want = Float::powf(1.0 + s * m.params().rho_t(), -b);
            assert!(Float::abs(m.kernel_i1(s, b) - want) <= 1e-14 * want);
        }
    }

    #[test]
    fn intra_cell_kernel_matches_plain_quadrature() {
        // Independent route: midpoint sum of the Rayleigh expectation.
        let m = model(0.5, 0.25);
        let p = *m.params();
        let (s, b) = (1e-3, 1.0);
        let k = p.alpha() * (1.0 - p.eps_t());
        let a = p.link_rate();
        let n = 400_000;
        let h = 1000.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * h;
            let pdf = 2.0 * a * r * Float::exp(-a * r * r);
            acc += pdf / (1.0 + s * Float::powf(r, -k)) * h;
        }
        let got = m.kernel_i1(s, b);
        assert!(Float::abs(got - acc) < 1e-6, "{got} vs {acc}");
    }

    #[test]
    fn mobile_kernel_reduces_to_iot_kernel_without_pairing_limit() {
        let raw = RawParams {
            pairing_radius: Some(250.0),
            pairing_fraction: None,
            eps_m: 0.6,
            eps_t: 0.6,
            ..RawParams::default()
        };
        let p = raw.validate().unwrap();
        let m = AnalyticModel::new(p, 1.4 * p.lambda_b());
        for (s, b) in [(1e-4, 1.0), (1e-3, 2.0), (5e-3, 1.0), (1e-4, -1.0)] {
            let (km, ki) = (m.kernel_m(s, b), m.kernel_i2(s, b));
            assert!(Float::abs(km - ki) < 1e-6 * ki, "s={s} b={b}: {km} vs {ki}");
        }
    }

    #[test]
    fn moment_inequalities_hold() {
        for (em, et) in [(0.5, 0.5), (1.0, 1.0), (0.5, 1.0)] {
            let m = model(em, et);
            for (d, s) in FAMILIES {
                for beta_db in [-10.0, 0.0, 10.0] {
                    let beta = crate::config::db_to_linear(beta_db);
                    let m1 = m.moment(d, s, 1.0, beta).unwrap().value;
                    let m2 = m.moment(d, s, 2.0, beta).unwrap().value;
                    assert!(m1 <= 1.0 + 1e-9 && m2 <= m1 + 1e-9, "{d:?} {s:?} {m1} {m2}");
                    assert!(m2 >= m1 * m1 - 1e-7, "{d:?} {s:?} {m1} {m2}");
                    let mneg = m.moment(d, s, -1.0, beta).unwrap();
                    if mneg.status == MomentStatus::Converged {
                        assert!(mneg.value >= 1.0 / m1 - 1e-6, "{d:?} {s:?} {m1} {mneg:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn oma_dominates_noma() {
        let m = model(0.5, 0.5);
        for beta in [0.1, 1.0, 10.0] {
            for d in [Device::Mobile, Device::Iot] {
                let n = m.moment(d, Scheme::Noma, 1.0, beta).unwrap().value;
                let o = m.moment(d, Scheme::Oma, 1.0, beta).unwrap().value;
                assert!(o >= n, "{d:?} {beta}");
            }
        }
        let n = m
            .moment(Device::Iot, Scheme::Noma, -1.0, 0.3)
            .unwrap()
            .value;
        let o = m.moment(Device::Iot, Scheme::Oma, -1.0, 0.3).unwrap().value;
        assert!(o <= n);
    }

    #[test]
    fn ccdf_is_nonincreasing() {
        let m = model(0.5, 1.0);
        let grid: Vec<f64> = (-10..=10)
            .map(|d| crate::config::db_to_linear(d as f64))
            .collect();
        for s in [Scheme::Noma, Scheme::Oma] {
            let c = m.moment_curve(Device::Mobile, s, 1.0, &grid).unwrap();
            assert!(c.check_invariants(1e-9));
        }
    }

    #[test]
    fn unsupported_orders_and_thresholds_rejected() {
        let m = model(0.5, 0.5);
        assert!(matches!(
            m.moment(Device::Iot, Scheme::Noma, -0.5, 1.0),
            Err(Error::UnsupportedOrder(_))
        ));
        assert!(m.moment(Device::Iot, Scheme::Noma, 1.0, 0.0).is_err());
    }

    #[test]
    fn delay_divergence_rules() {
        // alpha (1 - eps_t) = 4 > 2: the Rayleigh tail cannot compensate.
        assert_eq!(
            model(0.5, 0.0).mean_local_delay(Scheme::Noma).status,
            MomentStatus::Diverged
        );
        // = 2: finite only if the exponent coefficient stays below the rate.
        let d = model(0.5, 0.5).mean_local_delay(Scheme::Noma);
        assert!(d.is_finite_result() && d.value >= 1.0, "{d:?}");
        // No outer expectation at full inversion.
        let d = model(0.0, 1.0).mean_local_delay(Scheme::Noma);
        assert!(d.value >= 1.0 && d.value.is_finite());
    }

    #[test]
    fn log_divergent_mobile_side_is_flagged() {
        // eps_m = 0 at b = -1: the near-field interferer integral is
        // logarithmic and gets cut at the minimum link distance.
        let d = model(0.0, 1.0).mean_local_delay(Scheme::Noma);
        assert_eq!(d.status, MomentStatus::TruncatedTailWarning);
        let o = model(0.0, 1.0).mean_local_delay(Scheme::Oma);
        assert_eq!(o.status, MomentStatus::Converged);
    }

    #[test]
    fn oma_delay_carries_access_factor() {
        let m = model(0.5, 1.0);
        let raw = m
            .moment(Device::Iot, Scheme::Oma, -1.0, m.params().beta_t())
            .unwrap()
            .value;
        for eta in [0.1, 0.5, 0.9] {
            let me = m.with_params(m.params().with_eta(eta).unwrap());
            let d = me.mean_local_delay(Scheme::Oma).value;
            assert!(Float::abs(d - raw / (1.0 - eta)) <= 1e-12 * d);
        }
    }

    #[test]
    fn rate_routes_agree() {
        for (em, et) in [(0.5, 0.5), (1.0, 1.0)] {
            let m = model(em, et);
            for s in [Scheme::Noma, Scheme::Oma] {
                let a = m.ergodic_rate(s);
                let b = m.ergodic_rate_via_ccdf(s);
                assert_eq!(a.status, MomentStatus::Converged);
                assert!(
                    Float::abs(a.value - b.value) < 1e-5 * a.value,
                    "{em} {et} {s:?}: {} vs {}",
                    a.value,
                    b.value
                );
            }
        }
    }

    #[test]
    fn rate_scaling_in_eta() {
        let m = model(0.5, 0.5);
        let half = m.with_params(m.params().with_eta(0.5).unwrap());
        let quarter = m.with_params(m.params().with_eta(0.25).unwrap());
        let (h, q) = (
            half.ergodic_rate(Scheme::Oma).value,
            quarter.ergodic_rate(Scheme::Oma).value,
        );
        assert!(Float::abs(h - 2.0 * q) <= 1e-12 * h);
        assert_eq!(
            half.ergodic_rate(Scheme::Noma).value,
            quarter.ergodic_rate(Scheme::Noma).value
        );
    }

    #[test]
    fn evaluations_are_deterministic() {
        let m = model(0.3, 0.6);
        let a = m.moment(Device::Mobile, Scheme::Noma, 1.0, 1.3).unwrap();
        let b = m.moment(Device::Mobile, Scheme::Noma, 1.0, 1.3).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let a = m.ergodic_rate(Scheme::Noma).value;
        let b = m.ergodic_rate(Scheme::Noma).value;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn slow_far_field_decay_still_converges() {
        // At alpha just above 2 the interference tail decays like u^{-1.1}.
        let raw = RawParams {
            alpha: 2.1,
            ..SystemParams::default().to_raw()
        };
        let p = raw.validate().unwrap();
        let loose = AnalyticModel::new(p, INV_AREA_NORM * p.lambda_b());
        let tight = AnalyticModel::with_settings(
            p,
            INV_AREA_NORM * p.lambda_b(),
            AnalyticSettings {
                tol: 1e-10,
                ..Default::default()
            },
        );
        for (d, s) in FAMILIES {
            let beta = 1.0;
            let a = loose.moment(d, s, 1.0, beta).unwrap();
            let b = tight.moment(d, s, 1.0, beta).unwrap();
            assert_eq!(b.status, MomentStatus::Converged, "{d:?} {s:?}");
            assert!(b.value > 0.0 && b.value < 1.0);
            assert!(
                Float::abs(a.value - b.value) < 1e-5,
                "{} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn inner_rule_order_is_sufficient() {
        let p = SystemParams::default().with_eps(0.5, 0.75).unwrap();
        let base = AnalyticModel::with_settings(
            p,
            INV_AREA_NORM * p.lambda_b(),
            AnalyticSettings { tol: 1e-11, ..Default::default() },
        );
        let fine = AnalyticModel::with_settings(
            p,
            INV_AREA_NORM * p.lambda_b(),
            AnalyticSettings { tol: 1e-11, inner_order: 64, ..Default::default() },
        );
        for s in [1e-3, 0.1, 1.0, 30.0] {
            for b in [-1.0, 1.0, 2.5] {
                let (a, c) = (base.kernel_i2(s, b), fine.kernel_i2(s, b));
                assert!(Float::abs(a - c) <= 1e-10 * c, "I2 s={s} b={b}: {a} vs {c}");
                let (a, c) = (base.kernel_m(s, b), fine.kernel_m(s, b));
                assert!(Float::abs(a - c) <= 1e-10 * c, "M s={s} b={b}: {a} vs {c}");
            }
        }
    }
}
