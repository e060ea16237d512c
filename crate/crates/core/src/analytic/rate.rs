//! Ergodic rate of the mobile user.
//!
//! `R = 1/ln 2 * int_0^inf F(g) / (1 + g) dg` with `F` the SIR CCDF. Writing
//! `F(g) = E_R[K(g c(R))]`, `c(R) = R^{alpha(1 - eps_m)} / rho_m`, and
//! substituting `s = g c(R)` under the expectation gives
//!
//! `R = 1/ln 2 * int_0^inf K(s) w(s) ds`,   `w(s) = E_R[1 / (c(R) + s)]`,
//!
//! so each kernel evaluation is shared by all link distances. Both forms are
//! integrated on a logarithmic axis truncated where the integrand has decayed
//! by [`TAIL_CUT`] relative to its peak; the truncated tails are bounded by
//! assuming locally exponential decay in the log variable.

use core::f64::consts::LN_2;

use num_traits::Float;

use super::{AnalyticModel, InnerTrack, Layer, MomentStatus};
use crate::distributions::LinkDistanceLaw;
use crate::quadrature::QuadResult;
use crate::Scheme;

/// Relative integrand level at which the log axis is truncated.
pub const TAIL_CUT: f64 = 1e-10;
const SCAN_STEP: f64 = 2.0;
const SCAN_LIMIT: f64 = 140.0;

/// Ergodic rate and its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    /// Rate in bits/s/Hz (already scaled by `eta` for OMA).
    pub value: f64,
    /// Composite absolute error estimate including the truncated tails.
    pub abs_error_est: f64,
    /// Worst status seen in any layer.
    pub status: MomentStatus,
    /// Integration range of the truncated variable, `(lo, hi)`.
    pub range: (f64, f64),
    /// Bound on the contribution of both truncated tails.
    pub tail_bound: f64,
}

struct LogWindow {
    lo: f64,
    hi: f64,
    tail: f64,
}

fn tail_estimate(edge: f64, inner: f64) -> f64 {
    if edge <= 0.0 {
        return 0.0;
    }
    let slope = Float::ln(inner / edge) / SCAN_STEP;
    if slope > 0.0 && slope.is_finite() {
        edge / slope
    } else {
        f64::INFINITY
    }
}

/// Finds where `h` (a density on the log axis) is negligible on both sides.
fn log_window<F: FnMut(f64) -> f64>(h: &mut F) -> LogWindow {
    let mut peak = Float::abs(h(0.0));
    let mut prev = peak;
    let mut x = 0.0;
    let mut hi_edge = 0.0;
    let mut hi_inner = 0.0;
    while x < SCAN_LIMIT {
        x += SCAN_STEP;
        let v = Float::abs(h(x));
        peak = Float::max(peak, v);
        if v <= TAIL_CUT * peak && v <= prev {
            hi_edge = v;
            hi_inner = prev;
            break;
        }
        prev = v;
    }
    let hi = x;
    let mut prev = Float::abs(h(0.0));
    let mut x = 0.0;
    let mut lo_edge = 0.0;
    let mut lo_inner = 0.0;
    while x > -SCAN_LIMIT {
        x -= SCAN_STEP;
        let v = Float::abs(h(x));
        peak = Float::max(peak, v);
        if v <= TAIL_CUT * peak && v <= prev {
            lo_edge = v;
            lo_inner = prev;
            break;
        }
        prev = v;
    }
    let tail = tail_estimate(hi_edge, hi_inner) + tail_estimate(lo_edge, lo_inner);
    LogWindow { lo: x, hi, tail }
}

impl AnalyticModel {
    /// `E_R[1 / (c(R) + s)]` over the mobile link distance.
    fn rate_weight(&self, s: f64) -> Layer {
        let p = self.params();
        let k = p.alpha() * (1.0 - p.eps_m());
        if k == 0.0 {
            return Layer::exact(1.0 / (1.0 / p.rho_m() + s));
        }
        let law = LinkDistanceLaw::serving_mobile(p);
        let inv_rho = 1.0 / p.rho_m();
        let q = self.quad().integrate(
            |r| law.pdf(r) / (inv_rho * Float::powf(r, k) + s),
            0.0,
            p.pairing_radius(),
        );
        Layer::from_quad(q)
    }

    /// Ergodic rate of the typical mobile user.
    pub fn ergodic_rate(&self, scheme: Scheme) -> RateResult {
        let mut track = InnerTrack::new();
        let mut h = |x: f64| {
            let s = Float::exp(x);
            let k = self.mobile_kernel(scheme, s, 1.0);
            let w = self.rate_weight(s);
            track.absorb(k.status.max(w.status), k.rel_error() + w.rel_error());
            k.value * w.value * s
        };
        let window = log_window(&mut h);
        let q = self.quad().integrate(&mut h, window.lo, window.hi);
        self.finish_rate(scheme, q, window, track, true)
    }

    /// Ergodic rate by direct integration of the SIR CCDF over the threshold.
    ///
    /// Much slower than [`AnalyticModel::ergodic_rate`]; kept as an
    /// independent route for cross-checking.
    pub fn ergodic_rate_via_ccdf(&self, scheme: Scheme) -> RateResult {
        let mut track = InnerTrack::new();
        let mut h = |x: f64| {
            let g = Float::exp(x);
            let m = self.moment_mobile(scheme, 1.0, g);
            track.absorb(
                m.status,
                m.abs_error_est / Float::max(m.value, f64::MIN_POSITIVE),
            );
            m.value * g / (1.0 + g)
        };
        let window = log_window(&mut h);
        let q = self.quad().integrate(&mut h, window.lo, window.hi);
        self.finish_rate(scheme, q, window, track, false)
    }

    fn finish_rate(
        &self,
        scheme: Scheme,
        q: QuadResult,
        window: LogWindow,
        track: InnerTrack,
        scale_axis: bool,
    ) -> RateResult {
        let scale = match scheme {
            Scheme::Noma => 1.0,
            Scheme::Oma => self.params().eta(),
        } / LN_2;
        let value = q.value * scale;
        let tail_bound = window.tail * scale;
        let mut status = Layer::from_quad(q).status.max(track.status);
        if !(tail_bound <= self.settings().tol * Float::abs(value)) {
            status = status.max(MomentStatus::TruncatedTailWarning);
        }
        let range = (Float::exp(window.lo), Float::exp(window.hi));
        log::debug!(
            "ergodic rate ({}): {} axis truncated to [{:.3e}, {:.3e}], tail bound {:.3e}",
            scheme.name(),
            if scale_axis {
                "interference-scale"
            } else {
                "threshold"
            },
            range.0,
            range.1,
            tail_bound
        );
        RateResult {
            value,
            abs_error_est: q.abs_error * scale + tail_bound + track.rel_error * Float::abs(value),
            status,
            range,
            tail_bound,
        }
    }
}
