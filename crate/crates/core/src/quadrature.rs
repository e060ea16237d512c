//! Quadrature: fixed-order Gauss-Legendre and adaptive Gauss-Kronrod (7/15)
//! on finite and semi-infinite intervals.
//!
//! The semi-infinite rule maps `[lo, inf)` onto `[0, 1)` through
//! `x = lo + scale * t / (1 - t)`; `scale` should be the length on which the
//! integrand varies so that the adaptive bisection starts near the mass.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadStatus {
    /// Error estimate within tolerance.
    Converged,
    /// Subdivision limit reached; the value is a partial result.
    MaxSubdivisions,
    /// The integrand returned NaN or an infinity.
    NonFinite,
}

/// Value, error estimate and bookkeeping of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    /// Integral estimate.
    pub value: f64,
    /// Absolute error estimate.
    pub abs_error: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
    /// Convergence status.
    pub status: QuadStatus,
}

impl QuadResult {
    /// `true` when the tolerance was met.
    pub fn converged(&self) -> bool {
        self.status == QuadStatus::Converged
    }
}

/// One 15-point Kronrod panel on `[a, b]`: `(value, error, |f| integral)`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = Float::abs(hlgth);

    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    let fc = f(centr);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = Float::abs(resk);
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (Float::abs(f1) + Float::abs(f2));
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (Float::abs(f1) + Float::abs(f2));
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * Float::abs(fc - reskh);
    for j in 0..7 {
        resasc += WGK[j] * (Float::abs(fv1[j] - reskh) + Float::abs(fv2[j] - reskh));
    }
    let result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut abserr = Float::abs((resk - resg) * hlgth);
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * Float::min(1.0, Float::powf(200.0 * abserr / resasc, 1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        abserr = Float::max(f64::EPSILON * 50.0 * resabs, abserr);
    }
    (result, abserr, resabs)
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Adaptive Gauss-Kronrod integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive {
    /// Absolute tolerance.
    pub epsabs: f64,
    /// Relative tolerance.
    pub epsrel: f64,
    /// Maximum number of panels.
    pub limit: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            epsabs: 0.0,
            epsrel: 1e-6,
            limit: 200,
        }
    }
}

impl Adaptive {
    /// Relative tolerance `epsrel`, tiny absolute floor.
    pub fn relative(epsrel: f64) -> Self {
        Adaptive {
            epsrel,
            ..Self::default()
        }
    }

    /// Same integrator with a different absolute tolerance.
    pub fn with_epsabs(self, epsabs: f64) -> Self {
        Adaptive { epsabs, ..self }
    }

    /// Integrates `f` over the finite interval `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> QuadResult {
        if a == b {
            return QuadResult {
                value: 0.0,
                abs_error: 0.0,
                evaluations: 0,
                status: QuadStatus::Converged,
            };
        }
        let mut evaluations = 15;
        let (v, e, _) = gk15(&mut f, a, b);
        let mut segs: Vec<Segment> = Vec::with_capacity(16);
        segs.push(Segment {
            a,
            b,
            value: v,
            error: e,
        });
        loop {
            let (total, err) = segs
                .iter()
                .fold((0.0, 0.0), |(t, e), s| (t + s.value, e + s.error));
            let status = if !total.is_finite() || !err.is_finite() {
                Some(QuadStatus::NonFinite)
            } else if err <= Float::max(self.epsabs, self.epsrel * Float::abs(total)) {
                Some(QuadStatus::Converged)
            } else if segs.len() >= self.limit {
                Some(QuadStatus::MaxSubdivisions)
            } else {
                None
            };
            if let Some(status) = status {
                return QuadResult {
                    value: total,
                    abs_error: err,
                    evaluations,
                    status,
                };
            }
            let worst =
                segs.iter()
                    .enumerate()
                    .fold(0, |w, (i, s)| if s.error > segs[w].error { i } else { w });
            let Segment { a, b, .. } = segs[worst];
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                // Interval exhausted at machine precision.
                return QuadResult {
                    value: total,
                    abs_error: err,
                    evaluations,
                    status: QuadStatus::MaxSubdivisions,
                };
            }
            let (v1, e1, _) = gk15(&mut f, a, mid);
            let (v2, e2, _) = gk15(&mut f, mid, b);
            evaluations += 30;
            segs[worst] = Segment {
                a,
                b: mid,
                value: v1,
                error: e1,
            };
            segs.push(Segment {
                a: mid,
                b,
                value: v2,
                error: e2,
            });
        }
    }

    /// Integrates `f` over `[lo, inf)` after compactifying with length `scale`.
    pub fn semi_infinite<F: FnMut(f64) -> f64>(&self, mut f: F, lo: f64, scale: f64) -> QuadResult {
        self.integrate(
            |t| {
                let one_m = 1.0 - t;
                let x = lo + scale * t / one_m;
                let y = f(x);
                if y == 0.0 {
                    0.0
                } else {
                    y * scale / (one_m * one_m)
                }
            },
            0.0,
            1.0,
        )
    }
}

/// `integrate_semi_infinite` with the default engine settings.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(f: F, lo: f64, tol: f64) -> QuadResult {
    Adaptive::relative(tol).semi_infinite(f, lo, 1.0)
}

/// Fixed-order Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = Float::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if Float::abs(z - z1) < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Number of points.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_tail() {
        let r = integrate_semi_infinite(|x| Float::exp(-x), 0.0, 1e-10);
        assert!(r.converged());
        assert!(Float::abs(r.value - 1.0) < 1e-10, "{r:?}");
    }

    #[test]
    fn rayleigh_pdf_normalises() {
        let a = PI * (9.0 / 7.0) * 1e-4;
        let pdf = |r: f64| 2.0 * a * r * Float::exp(-a * r * r);
        let r = Adaptive::relative(1e-10).semi_infinite(pdf, 0.0, 50.0);
        assert!(Float::abs(r.value - 1.0) < 1e-10, "{r:?}");
        // also fine with a badly chosen scale
        let r = integrate_semi_infinite(pdf, 0.0, 1e-10);
        assert!(Float::abs(r.value - 1.0) < 1e-9, "{r:?}");
    }

    #[test]
    fn power_law_tail() {
        let r = integrate_semi_infinite(|u| Float::powf(u, 1.0 - 4.0), 1.0, 1e-10);
        assert!(Float::abs(r.value - 0.5) < 1e-10, "{r:?}");
    }

    #[test]
    fn non_integrable_tail_is_flagged() {
        let r = Adaptive::relative(1e-8).semi_infinite(|u| 1.0 / (1.0 + u), 0.0, 1.0);
        assert!(!r.converged());
    }

    #[test]
    fn finite_interval_with_endpoint_singularity() {
        // integral of x^{-1/2} over [0, 1] is 2
        let r = Adaptive::relative(1e-8).integrate(|x| 1.0 / Float::sqrt(x), 0.0, 1.0);
        assert!(Float::abs(r.value - 2.0) < 1e-6, "{r:?}");
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        assert_eq!(gl.order(), 8);
        // exact up to degree 15
        let v = gl.integrate(|x| Float::powi(x, 14) + 3.0 * Float::powi(x, 3), -1.0, 2.0);
        let exact = (Float::powi(2.0, 15) + 1.0) / 15.0 + 0.75 * (16.0 - 1.0);
        assert!(Float::abs(v - exact) < 1e-10 * exact);
        let w: f64 = gl.mapped(0.0, 3.0).map(|(_, w)| w).sum();
        assert!(Float::abs(w - 3.0) < 1e-14);
    }

    #[test]
    fn odd_order_rule_has_centre_node() {
        let gl = GaussLegendre::new(5);
        let xs: Vec<f64> = gl.mapped(-1.0, 1.0).map(|(x, _)| x).collect();
        assert!(Float::abs(xs[2]) < 1e-15);
        assert!(Float::abs(gl.integrate(|x| x * x, -1.0, 1.0) - 2.0 / 3.0) < 1e-15);
    }

    #[test]
    fn deterministic() {
        let f = |x: f64| Float::sin(x) * Float::exp(-0.1 * x);
        let a = integrate_semi_infinite(f, 0.0, 1e-8);
        let b = integrate_semi_infinite(f, 0.0, 1e-8);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
