//! Probability ingredients: link-distance laws, pair correlation functions
//! of the inter-cell interferers and the Monte Carlo estimate of the mean
//! inverse Johnson-Mehl cell area.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::SystemParams;
use crate::exec::Executor;
use crate::rng::{substream, Purpose};
use crate::stats::SampleStats;
use crate::Error;

/// A nonnegative function of the distance to the origin.
pub trait RadialDensity {
    /// Value at radius `r`; zero outside [`RadialDensity::support`].
    fn eval(&self, r: f64) -> f64;
    /// Closed support `[lo, hi]`; `hi` may be infinite.
    fn support(&self) -> (f64, f64);
}

/// Rayleigh link-distance law `2 a r exp(-a r^2)`, optionally truncated to
/// `[0, upper]` and renormalised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDistanceLaw {
    rate: f64,
    upper: f64,
    mass: f64,
}

impl LinkDistanceLaw {
    /// Law with Rayleigh rate `rate` (`pi rho lambda_b`) truncated at `upper`.
    pub fn new(rate: f64, upper: f64) -> Self {
        let mass = if upper.is_finite() {
            -Float::exp_m1(-rate * upper * upper)
        } else {
            1.0
        };
        LinkDistanceLaw { rate, upper, mass }
    }

    /// Untruncated law of the serving IoT link.
    pub fn serving_iot(p: &SystemParams) -> Self {
        Self::new(p.link_rate(), f64::INFINITY)
    }

    /// Law of the serving mobile link, truncated at the pairing radius.
    pub fn serving_mobile(p: &SystemParams) -> Self {
        Self::new(p.link_rate(), p.pairing_radius())
    }

    /// Law of an interfering mobile user's link given its distance `d` to the
    /// typical BS: truncated at `min(L, d)`.
    pub fn interferer_mobile(d: f64, p: &SystemParams) -> Self {
        Self::new(p.link_rate(), Float::min(p.pairing_radius(), d))
    }

    /// Law of an interfering IoT device's link given `d`: truncated at `d`.
    pub fn interferer_iot(d: f64, p: &SystemParams) -> Self {
        Self::new(p.link_rate(), d)
    }

    /// Rayleigh rate `a`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Upper end of the support.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Probability density.
    pub fn pdf(&self, r: f64) -> f64 {
        if !(r >= 0.0 && r <= self.upper) || self.mass <= 0.0 {
            return 0.0;
        }
        2.0 * self.rate * r * Float::exp(-self.rate * r * r) / self.mass
    }

    /// Distribution function.
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else if r >= self.upper {
            1.0
        } else {
            -Float::exp_m1(-self.rate * r * r) / self.mass
        }
    }

    /// Inverse distribution function, `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let r = Float::sqrt(-Float::ln_1p(-u * self.mass) / self.rate);
        Float::min(r, self.upper)
    }

    /// Draws one distance by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Mean of the untruncated law, `1 / (2 sqrt(a / pi))`.
    pub fn untruncated_mean(&self) -> f64 {
        0.5 * Float::sqrt(PI / self.rate)
    }
}

impl RadialDensity for LinkDistanceLaw {
    fn eval(&self, r: f64) -> f64 {
        self.pdf(r)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.upper)
    }
}

/// Serving-link pdf of the IoT device.
pub fn pdf_serving_iot(r: f64, p: &SystemParams) -> f64 {
    LinkDistanceLaw::serving_iot(p).pdf(r)
}

/// Serving-link pdf of the mobile user (truncated at `L`).
pub fn pdf_serving_mobile(r: f64, p: &SystemParams) -> f64 {
    LinkDistanceLaw::serving_mobile(p).pdf(r)
}

/// Link pdf of an interfering mobile user at distance `d` from the typical BS.
pub fn pdf_interferer_mobile(r: f64, d: f64, p: &SystemParams) -> f64 {
    LinkDistanceLaw::interferer_mobile(d, p).pdf(r)
}

/// Link pdf of an interfering IoT device at distance `d` from the typical BS.
pub fn pdf_interferer_iot(r: f64, d: f64, p: &SystemParams) -> f64 {
    LinkDistanceLaw::interferer_iot(d, p).pdf(r)
}

/// Pair correlation `1 - exp(-c r^2)` seen from the typical BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pcf {
    coeff: f64,
}

impl Pcf {
    /// Pcf of the interfering IoT devices: `c = (14/5) pi lambda_b`.
    pub fn iot(p: &SystemParams) -> Self {
        Pcf {
            coeff: 14.0 / 5.0 * PI * p.lambda_b(),
        }
    }

    /// Pcf of the interfering mobile users: `c = 2 pi E[1/|JM cell|]`.
    pub fn mobile(inv_jm_area: f64) -> Self {
        Pcf {
            coeff: 2.0 * PI * inv_jm_area,
        }
    }

    /// Coefficient `c`.
    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    /// Value at `r`.
    pub fn eval(&self, r: f64) -> f64 {
        -Float::exp_m1(-self.coeff * r * r)
    }
}

/// IoT-interferer pcf.
pub fn pcf_iot(r: f64, p: &SystemParams) -> f64 {
    Pcf::iot(p).eval(r)
}

/// Mobile-interferer pcf for a given mean inverse JM-cell area (per m²).
pub fn pcf_mobile(r: f64, inv_jm_area: f64) -> f64 {
    Pcf::mobile(inv_jm_area).eval(r)
}

/// Density `lambda_b g(r)` of an approximating non-homogeneous PPP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererDensity {
    lambda_b: f64,
    pcf: Pcf,
}

impl InterfererDensity {
    /// Density of the interfering IoT devices.
    pub fn iot(p: &SystemParams) -> Self {
        InterfererDensity {
            lambda_b: p.lambda_b(),
            pcf: Pcf::iot(p),
        }
    }

    /// Density of the interfering mobile users.
    pub fn mobile(inv_jm_area: f64, p: &SystemParams) -> Self {
        InterfererDensity {
            lambda_b: p.lambda_b(),
            pcf: Pcf::mobile(inv_jm_area),
        }
    }

    /// Far-field density, which also bounds the density everywhere.
    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    /// The pcf in use.
    pub fn pcf(&self) -> Pcf {
        self.pcf
    }
}

impl RadialDensity for InterfererDensity {
    fn eval(&self, r: f64) -> f64 {
        if r < 0.0 {
            0.0
        } else {
            self.lambda_b * self.pcf.eval(r)
        }
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
}

/// Interfering-IoT density at radius `r`.
pub fn interferer_density_iot(r: f64, p: &SystemParams) -> f64 {
    InterfererDensity::iot(p).eval(r)
}

/// Interfering-mobile density at radius `r`.
pub fn interferer_density_mobile(r: f64, inv_jm_area: f64, p: &SystemParams) -> f64 {
    InterfererDensity::mobile(inv_jm_area, p).eval(r)
}

/// Sampling effort of the inverse JM-area estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JmAreaSettings {
    /// Number of sampled typical cells.
    pub n_cells: usize,
    /// Hit-or-miss test points per cell.
    pub points_per_cell: usize,
    /// Master seed.
    pub seed: u64,
}

impl Default for JmAreaSettings {
    fn default() -> Self {
        JmAreaSettings {
            n_cells: 10_000,
            points_per_cell: 100_000,
            seed: 0x5EED_0001,
        }
    }
}

/// Below this many cells the reported interval is widened.
pub const JM_AREA_TARGET_CELLS: usize = 10_000;
/// Minimum number of cells accepted.
pub const JM_AREA_MIN_CELLS: usize = 100;

/// Monte Carlo estimate of `E[1/|JM cell|]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseAreaEstimate {
    /// `lambda_b L^2`, the only parameter the normalised estimate depends on.
    pub lambda_l2: f64,
    /// `E[1/|JM cell|] / lambda_b`.
    pub normalized: f64,
    /// Standard error of [`InverseAreaEstimate::normalized`].
    pub normalized_std_error: f64,
    /// BS density the estimate is scaled to.
    pub lambda_b: f64,
    /// Number of cells.
    pub n_samples: usize,
    /// Cells with zero hits that had to be redrawn.
    pub degenerate_resamples: usize,
    /// Seed used.
    pub seed: u64,
    /// `true` when fewer than [`JM_AREA_TARGET_CELLS`] cells were used.
    pub widened_ci: bool,
}

impl InverseAreaEstimate {
    /// The estimate, per m².
    pub fn value(&self) -> f64 {
        self.normalized * self.lambda_b
    }

    /// Standard error, per m².
    pub fn std_error(&self) -> f64 {
        self.normalized_std_error * self.lambda_b
    }

    /// Half-width of the reported confidence interval, per m².
    pub fn ci_half_width(&self) -> f64 {
        let z = if self.widened_ci { 3.0 } else { 1.96 };
        z * self.std_error()
    }

    /// Rescales a cached normalised estimate to another BS density.
    pub fn rescaled(&self, lambda_b: f64) -> Self {
        InverseAreaEstimate { lambda_b, ..*self }
    }
}

/// Inverse area of one typical JM cell, in units where `lambda_b = 1`.
///
/// Returns `None` when no test point fell inside the cell.
pub fn sample_inverse_jm_area<R: Rng + ?Sized>(
    lambda_l2: f64,
    points_per_cell: usize,
    rng: &mut R,
) -> Option<f64> {
    let l = Float::sqrt(lambda_l2);
    let disk_area = PI * lambda_l2;
    // Only BSs within 2L of the origin can claim points of B(o, L).
    let mean = PI * 4.0 * lambda_l2;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map(|d| d.sample(rng) as usize)
            .unwrap_or(0)
    } else {
        0
    };
    if count == 0 {
        return Some(1.0 / disk_area);
    }
    let mut neighbours: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            let rad = 2.0 * l * Float::sqrt(rng.random::<f64>());
            let th = 2.0 * PI * rng.random::<f64>();
            (rad * rad, rad * Float::cos(th), rad * Float::sin(th))
        })
        .collect();
    neighbours.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut hits = 0usize;
    for _ in 0..points_per_cell {
        let rad = l * Float::sqrt(rng.random::<f64>());
        let th = 2.0 * PI * rng.random::<f64>();
        let (y0, y1) = (rad * Float::cos(th), rad * Float::sin(th));
        let own = rad * rad;
        let reach = 4.0 * own;
        let inside = neighbours
            .iter()
            .take_while(|z| z.0 <= reach)
            .all(|z| (y0 - z.1) * (y0 - z.1) + (y1 - z.2) * (y1 - z.2) >= own);
        hits += inside as usize;
    }
    if hits == 0 {
        return None;
    }
    Some(points_per_cell as f64 / (hits as f64 * disk_area))
}

/// Estimates `E[1/|B_o(L) ∩ V_o|]` for a PPP of density `lambda_b` with an
/// extra BS at the origin.
///
/// Cell `i` is drawn from its own random substream, so the estimate is
/// reproducible for any executor. It depends on `(lambda_b, L)` only through
/// `lambda_b L^2`; the result is scaled back by `lambda_b`.
pub fn estimate_inverse_jm_area<E: Executor>(
    lambda_b: f64,
    pairing_radius: f64,
    settings: &JmAreaSettings,
    exec: &E,
) -> Result<InverseAreaEstimate, Error> {
    if settings.n_cells < JM_AREA_MIN_CELLS {
        return Err(Error::TooFewSamples {
            got: settings.n_cells,
            min: JM_AREA_MIN_CELLS,
        });
    }
    if settings.points_per_cell == 0 {
        return Err(Error::InvalidArgument {
            name: "points_per_cell",
            reason: "must be positive",
        });
    }
    if !(lambda_b > 0.0 && pairing_radius > 0.0) {
        return Err(Error::InvalidArgument {
            name: "lambda_b, L",
            reason: "must be positive",
        });
    }
    let lambda_l2 = lambda_b * pairing_radius * pairing_radius;
    let per_cell = exec.map(settings.n_cells, |i| {
        let mut rng = substream(settings.seed, Purpose::CellArea, i as u64);
        let mut redraws = 0usize;
        loop {
            if let Some(v) = sample_inverse_jm_area(lambda_l2, settings.points_per_cell, &mut rng) {
                return (v, redraws);
            }
            redraws += 1;
        }
    });
    let degenerate: usize = per_cell.iter().map(|c| c.1).sum();
    if degenerate > 0 {
        log::warn!("inverse JM area: {degenerate} degenerate cells redrawn");
    }
    let stats = SampleStats::from_iter(per_cell.iter().map(|c| c.0));
    Ok(InverseAreaEstimate {
        lambda_l2,
        normalized: stats.mean(),
        normalized_std_error: stats.std_error(),
        lambda_b,
        n_samples: settings.n_cells,
        degenerate_resamples: degenerate,
        seed: settings.seed,
        widened_ci: settings.n_cells < JM_AREA_TARGET_CELLS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::quadrature::Adaptive;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn serving_iot_pdf_shape() {
        let p = params();
        assert_eq!(pdf_serving_iot(0.0, &p), 0.0);
        let mass = Adaptive::relative(1e-11).semi_infinite(|r| pdf_serving_iot(r, &p), 0.0, 50.0);
        assert!(Float::abs(mass.value - 1.0) < 1e-8);
        // mode by grid search vs (2 pi rho lambda)^(-1/2)
        let mode = (0..200_000)
            .map(|i| i as f64 * 1e-3)
            .max_by(|a, b| pdf_serving_iot(*a, &p).total_cmp(&pdf_serving_iot(*b, &p)))
            .unwrap();
        let expected = 1.0 / Float::sqrt(2.0 * p.link_rate());
        assert!(Float::abs(expected - 35.18) < 0.01, "{expected}");
        assert!(Float::abs(mode - expected) < 2e-3, "{mode} vs {expected}");
    }

    #[test]
    fn serving_mobile_pdf_truncated() {
        let p = params();
        let l = p.pairing_radius();
        assert_eq!(pdf_serving_mobile(l + 1.0, &p), 0.0);
        let mass = Adaptive::relative(1e-12).integrate(|r| pdf_serving_mobile(r, &p), 0.0, l);
        assert!(Float::abs(mass.value - 1.0) < 1e-8);
        let far = p.with_pairing_radius(300.0).unwrap();
        let (a, b) = (pdf_serving_mobile(30.0, &far), pdf_serving_iot(30.0, &far));
        assert!(Float::abs(a - b) / b < 1e-6);
    }

    #[test]
    fn interferer_mobile_pdf() {
        let p = params();
        let l = p.pairing_radius();
        for r in [1.0, 10.0, 25.0] {
            assert_eq!(
                pdf_interferer_mobile(r, 3.0 * l, &p),
                pdf_serving_mobile(r, &p)
            );
        }
        assert_eq!(pdf_interferer_mobile(0.6 * l, 0.5 * l, &p), 0.0);
        for d in [0.3 * l, 0.5 * l, 2.0 * l] {
            let top = Float::min(l, d);
            let mass =
                Adaptive::relative(1e-12).integrate(|r| pdf_interferer_mobile(r, d, &p), 0.0, top);
            assert!(Float::abs(mass.value - 1.0) < 1e-8);
        }
    }

    #[test]
    fn interferer_iot_pdf() {
        let p = params();
        assert_eq!(pdf_interferer_iot(12.0, 10.0, &p), 0.0);
        for d in [1.0, 40.0, 300.0] {
            let mass =
                Adaptive::relative(1e-12).integrate(|r| pdf_interferer_iot(r, d, &p), 0.0, d);
            assert!(Float::abs(mass.value - 1.0) < 1e-8);
        }
        let (a, b) = (pdf_interferer_iot(40.0, 1e5, &p), pdf_serving_iot(40.0, &p));
        assert!(Float::abs(a - b) / b < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = LinkDistanceLaw::new(params().link_rate(), 42.0);
        for u in [0.0, 0.1, 0.5, 0.9, 0.999] {
            let r = law.quantile(u);
            assert!(r <= 42.0);
            assert!(Float::abs(law.cdf(r) - u) < 1e-12);
        }
    }

    #[test]
    fn pcf_iot_values() {
        let p = params();
        assert_eq!(pcf_iot(0.0, &p), 0.0);
        let half = Float::sqrt(5.0 * core::f64::consts::LN_2 / (14.0 * PI * p.lambda_b()));
        assert!(Float::abs(pcf_iot(half, &p) - 0.5) < 1e-14);
        let far = 10.0 / Float::sqrt(p.lambda_b());
        assert!(Float::abs(pcf_iot(far, &p) - 1.0) < 1e-12);
    }

    #[test]
    fn pcf_mobile_matches_iot_in_the_limit() {
        let p = params();
        let inv = 7.0 / 5.0 * p.lambda_b();
        for r in [0.0, 5.0, 50.0, 123.0, 900.0] {
            assert!(Float::abs(pcf_mobile(r, inv) - pcf_iot(r, &p)) < 1e-15);
        }
        let mut last = -1.0;
        for i in 0..200 {
            let g = pcf_mobile(i as f64 * 0.3, 4e-4);
            assert!(g > last && g < 1.0);
            last = g;
        }
    }

    #[test]
    fn interferer_densities() {
        let p = params();
        let inv = 3.9 * p.lambda_b();
        assert_eq!(interferer_density_iot(0.0, &p), 0.0);
        assert_eq!(interferer_density_mobile(0.0, inv, &p), 0.0);
        let far = 10.0 / Float::sqrt(p.lambda_b());
        assert!(Float::abs(interferer_density_iot(far, &p) - p.lambda_b()) < 1e-12 * p.lambda_b());
        // with a smaller inverse area the mobile density is dominated
        let small = 1.1 * p.lambda_b();
        for i in 0..500 {
            let r = i as f64 * 0.5;
            assert!(interferer_density_iot(r, &p) >= interferer_density_mobile(r, small, &p));
        }
    }

    #[test]
    fn inverse_area_scale_covariance() {
        let s = JmAreaSettings {
            n_cells: 200,
            points_per_cell: 2_000,
            seed: 9,
        };
        let a = estimate_inverse_jm_area(1e-4, 30.0, &s, &Sequential).unwrap();
        let b = estimate_inverse_jm_area(0.25e-4, 60.0, &s, &Sequential).unwrap();
        let combined = Float::hypot(a.std_error(), 4.0 * b.std_error());
        assert!(Float::abs(a.value() - 4.0 * b.value()) <= 3.0 * combined);
        assert!(a.widened_ci);
    }

    #[test]
    fn inverse_area_reproducible() {
        let s = JmAreaSettings {
            n_cells: 100,
            points_per_cell: 1_000,
            seed: 3,
        };
        let a = estimate_inverse_jm_area(1e-4, 30.0, &s, &Sequential).unwrap();
        let b = estimate_inverse_jm_area(1e-4, 30.0, &s, &Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_area_needs_samples() {
        let s = JmAreaSettings {
            n_cells: 50,
            ..JmAreaSettings::default()
        };
        assert!(matches!(
            estimate_inverse_jm_area(1e-4, 30.0, &s, &Sequential),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
