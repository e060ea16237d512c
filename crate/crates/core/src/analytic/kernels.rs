//! The three interference kernels.

use core::f64::consts::PI;

use num_traits::Float;

use super::{AnalyticModel, Layer, MomentStatus, BOUNDARY_EPS};
use crate::config::MIN_LINK_DISTANCE;
use crate::distributions::{InterfererDensity, LinkDistanceLaw, RadialDensity};
use crate::quadrature::{Adaptive, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Iot,
    Mobile,
}

/// `1 - (1 + x)^{-b}`, accurate for small `x`.
#[inline]
pub(crate) fn miss_factor(x: f64, b: f64) -> f64 {
    if b == 1.0 {
        x / (1.0 + x)
    } else if b == -1.0 {
        -x
    } else {
        -Float::exp_m1(-b * Float::ln_1p(x))
    }
}

/// `(1 + x)^{-b}`.
#[inline]
pub(crate) fn success_factor(x: f64, b: f64) -> f64 {
    if b == 1.0 {
        1.0 / (1.0 + x)
    } else {
        Float::exp(-b * Float::ln_1p(x))
    }
}

impl AnalyticModel {
    pub(crate) fn i1_layer(&self, s: f64, b: f64) -> Layer {
        let p = self.params();
        if s == 0.0 || b == 0.0 {
            return Layer::exact(1.0);
        }
        let k = p.alpha() * (1.0 - p.eps_t());
        if k == 0.0 {
            return Layer::exact(success_factor(s * p.rho_t(), b));
        }
        let mut lo = 0.0;
        let mut status = MomentStatus::Converged;
        if b < 0.0 {
            // (1 + c r^{-k})^{|b|} r is integrable at 0 iff k |b| < 2.
            let order = k * -b;
            if order > 2.0 + BOUNDARY_EPS {
                return Layer::diverged();
            }
            if Float::abs(order - 2.0) <= BOUNDARY_EPS {
                lo = MIN_LINK_DISTANCE;
                status = MomentStatus::TruncatedTailWarning;
            }
        }
        let law = LinkDistanceLaw::serving_iot(p);
        let c = s * p.rho_t();
        let q = self.quad().semi_infinite(
            |r| {
                let w = law.pdf(r);
                if w == 0.0 {
                    return 0.0;
                }
                w * success_factor(c * Float::powf(r, -k), b)
            },
            lo,
            law.untruncated_mean(),
        );
        let mut layer = Layer::from_quad(q);
        layer.status = layer.status.max(status);
        layer
    }

    /// Kernel `exp(exponent)`.
    pub(crate) fn pgfl_layer(&self, side: Side, s: f64, b: f64) -> Layer {
        let e = self.pgfl_exponent(side, s, b);
        if e.status == MomentStatus::Diverged && !e.value.is_finite() {
            return Layer::diverged();
        }
        let value = Float::exp(e.value);
        Layer {
            value,
            abs_error: value * e.abs_error,
            status: e.status,
        }
    }

    /// `-2 pi int_0^inf lambda(u) (1 - E[(1 + s rho r^{alpha eps} u^{-alpha})^{-b}]) u du`.
    pub(crate) fn pgfl_exponent(&self, side: Side, s: f64, b: f64) -> Layer {
        if s == 0.0 || b == 0.0 {
            return Layer::exact(0.0);
        }
        let p = self.params();
        let (rho, eps, density) = match side {
            Side::Iot => (p.rho_t(), p.eps_t(), InterfererDensity::iot(p)),
            Side::Mobile => (
                p.rho_m(),
                p.eps_m(),
                InterfererDensity::mobile(self.inv_jm_area(), p),
            ),
        };
        let alpha = p.alpha();
        let mut lo = 0.0;
        let mut status = MomentStatus::Converged;
        if b < 0.0 {
            // Near u = 0 the integrand behaves like u^{3 - alpha (1 - eps) |b|}.
            let order = alpha * (1.0 - eps) * -b;
            if order > 4.0 + BOUNDARY_EPS {
                return Layer::diverged();
            }
            if Float::abs(order - 4.0) <= BOUNDARY_EPS {
                lo = MIN_LINK_DISTANCE;
                status = MomentStatus::TruncatedTailWarning;
            }
        }
        let rate = p.link_rate();
        let l = p.pairing_radius();
        let ae = alpha * eps;
        let sr = s * rho;
        let integrand = |u: f64| -> f64 {
            if u <= 0.0 {
                return 0.0;
            }
            let top = match side {
                Side::Iot => u,
                Side::Mobile => Float::min(u, l),
            };
            let law = LinkDistanceLaw::new(rate, top);
            let lu = Float::ln(u);
            let c = sr * Float::exp(-alpha * lu);
            let miss: f64 = self
                .gl
                .mapped(0.0, top)
                .map(|(r, w)| {
                    // Combined in log space: far out u^{-alpha} underflows before r^{ae} overflows.
                    let x = if ae == 0.0 {
                        c
                    } else {
                        sr * Float::exp(ae * Float::ln(r) - alpha * lu)
                    };
                    w * miss_factor(x, b) * law.pdf(r)
                })
                .sum();
            density.eval(u) * miss * u
        };
        let scale = 1.0 / Float::sqrt(p.lambda_b());
        let quad = self.quad();
        let q = match side {
            Side::Iot => algebraic_tail(&quad, integrand, lo, scale, alpha),
            Side::Mobile => join(
                quad.integrate(integrand, lo, l),
                algebraic_tail(&quad, integrand, l, scale, alpha),
            ),
        };
        let mut layer = Layer::from_quad(q);
        layer.value *= -2.0 * PI;
        layer.abs_error *= 2.0 * PI;
        layer.status = layer.status.max(status);
        layer
    }
}

fn join(a: QuadResult, b: QuadResult) -> QuadResult {
    QuadResult {
        value: a.value + b.value,
        abs_error: a.abs_error + b.abs_error,
        evaluations: a.evaluations + b.evaluations,
        status: if a.converged() { b.status } else { a.status },
    }
}

/// `int_lo^inf f` for an integrand decaying like `u^{1 - alpha}`. Past
/// `lo + scale` the substitution `u = a e^v` turns the slow algebraic tail
/// into `e^{-(alpha - 2) v}`, which the mapped rule handles for alpha near 2.
fn algebraic_tail<F: Fn(f64) -> f64>(
    quad: &Adaptive,
    f: F,
    lo: f64,
    scale: f64,
    alpha: f64,
) -> QuadResult {
    let a = lo + scale;
    let near = quad.integrate(&f, lo, a);
    let decay = Float::max(alpha - 2.0, 1e-3);
    let far = quad.semi_infinite(
        |v| {
            let u = a * Float::exp(v);
            if !u.is_finite() {
                return 0.0;
            }
            f(u) * u
        },
        0.0,
        1.0 / decay,
    );
    join(near, far)
}
