//! Model parameters, their units and validation.
//!
//! [`RawParams`] is the loosely-typed input (thresholds in dB or linear, only
//! one of `L` / `A_L` needed). [`RawParams::validate`] checks every invariant
//! and produces a [`SystemParams`], which is immutable afterwards and shared
//! by the analytic and simulation engines.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::{Error, ParamViolation};

/// Area-scaling constant of the serving-link-distance law.
pub const RHO_AREA_DEFAULT: f64 = 9.0 / 7.0;

/// Link distances below this value (m) are clamped by the simulator and used
/// as the lower integration cutoff where the analytic integrals diverge only
/// logarithmically at the origin.
pub const MIN_LINK_DISTANCE: f64 = 0.1;

/// Relative tolerance for the consistency check between `L` and `A_L`.
const PAIRING_CONSISTENCY_TOL: f64 = 1e-9;

/// Converts decibels to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    Float::powf(10.0, db / 10.0)
}

/// Converts a linear ratio to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * Float::log10(linear)
}

/// Fraction of mobile users lying within distance `l` of their serving BS.
pub fn pairing_fraction(l: f64, lambda_b: f64) -> f64 {
    -Float::exp_m1(-PI * lambda_b * l * l)
}

/// Inverse of [`pairing_fraction`]: the pairing radius giving fraction `a_l`.
pub fn pairing_radius_from_fraction(a_l: f64, lambda_b: f64) -> Result<f64, Error> {
    let mut violations = Vec::new();
    if !(a_l > 0.0 && a_l < 1.0) {
        violations.push(ParamViolation {
            field: "A_L",
            reason: "must lie in (0, 1)",
        });
    }
    if !(lambda_b > 0.0 && lambda_b.is_finite()) {
        violations.push(ParamViolation {
            field: "lambda_b",
            reason: "must be positive and finite",
        });
    }
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    Ok(Float::sqrt(-Float::ln_1p(-a_l) / (PI * lambda_b)))
}

/// An SIR threshold as supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Linear power ratio.
    Linear(f64),
    /// Decibels.
    Db(f64),
}

impl Threshold {
    /// Linear value.
    pub fn linear(self) -> f64 {
        match self {
            Threshold::Linear(x) => x,
            Threshold::Db(db) => db_to_linear(db),
        }
    }
}

/// Unvalidated parameter set.
///
/// Field names follow the configuration-file keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParams {
    /// BS density, points per m².
    pub lambda_b: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Power-control fraction of the mobile user.
    pub eps_m: f64,
    /// Power-control fraction of the IoT device.
    pub eps_t: f64,
    /// Baseline transmit power of the mobile user, W.
    pub rho_m: f64,
    /// Baseline transmit power of the IoT device, W.
    pub rho_t: f64,
    /// SIR threshold of the mobile user.
    pub beta_m: Threshold,
    /// SIR threshold of the IoT device.
    pub beta_t: Threshold,
    /// Pairing radius `L`, m.
    pub pairing_radius: Option<f64>,
    /// Pairing fraction `A_L`.
    pub pairing_fraction: Option<f64>,
    /// OMA time share of the mobile user.
    pub eta: f64,
    /// Mean-local-delay cap, transmissions.
    pub tau: f64,
    /// Area-scaling constant of the link-distance law.
    pub rho_area: f64,
    /// IoT / mobile densities: documented, accepted, unused (saturated model).
    pub lambda_m: Option<f64>,
    /// See [`RawParams::lambda_m`].
    pub lambda_t: Option<f64>,
}

impl Default for RawParams {
    /// The reference operating point: `lambda_b = 1e-4`, `A_L = 0.25`,
    /// `alpha = 4`, `beta_t = -5 dB`, unit baseline powers.
    fn default() -> Self {
        RawParams {
            lambda_b: 1e-4,
            alpha: 4.0,
            eps_m: 0.5,
            eps_t: 1.0,
            rho_m: 1.0,
            rho_t: 1.0,
            beta_m: Threshold::Db(0.0),
            beta_t: Threshold::Db(-5.0),
            pairing_radius: None,
            pairing_fraction: Some(0.25),
            eta: 0.5,
            tau: 2.0,
            rho_area: RHO_AREA_DEFAULT,
            lambda_m: None,
            lambda_t: None,
        }
    }
}

impl RawParams {
    /// Checks every invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<SystemParams, Error> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, field: &'static str, reason: &'static str| {
            if !ok {
                bad.push(ParamViolation { field, reason });
            }
        };
        let finite_pos = |x: f64| x > 0.0 && x.is_finite();
        let unit = |x: f64| (0.0..=1.0).contains(&x);

        check(
            finite_pos(self.lambda_b),
            "lambda_b",
            "must be positive and finite",
        );
        check(
            self.alpha > 2.0 && self.alpha.is_finite(),
            "alpha",
            "must exceed 2 (interference integrals diverge otherwise)",
        );
        check(unit(self.eps_m), "eps_m", "must lie in [0, 1]");
        check(unit(self.eps_t), "eps_t", "must lie in [0, 1]");
        check(
            finite_pos(self.rho_m),
            "rho_m",
            "must be positive and finite",
        );
        check(
            finite_pos(self.rho_t),
            "rho_t",
            "must be positive and finite",
        );
        let beta_m = self.beta_m.linear();
        let beta_t = self.beta_t.linear();
        check(finite_pos(beta_m), "beta_m", "must be positive (linear)");
        check(finite_pos(beta_t), "beta_t", "must be positive (linear)");
        check(
            self.eta > 0.0 && self.eta < 1.0,
            "eta",
            "must lie in (0, 1); eta = 1 makes the OMA delay diverge",
        );
        check(
            self.tau >= 1.0 && !self.tau.is_nan(),
            "tau",
            "must be at least 1 transmission",
        );
        check(
            finite_pos(self.rho_area),
            "rho_area",
            "must be positive and finite",
        );
        for (v, field) in [(self.lambda_m, "lambda_m"), (self.lambda_t, "lambda_t")] {
            if let Some(v) = v {
                check(
                    finite_pos(v),
                    field,
                    "must be positive and finite when given",
                );
            }
        }

        let (radius, fraction) = match (self.pairing_radius, self.pairing_fraction) {
            (None, None) => {
                check(false, "L", "one of L or A_L is required");
                (f64::NAN, f64::NAN)
            }
            (Some(l), None) => {
                check(finite_pos(l), "L", "must be positive and finite");
                (l, pairing_fraction(l, self.lambda_b))
            }
            (None, Some(a)) => {
                check(a > 0.0 && a < 1.0, "A_L", "must lie in (0, 1)");
                let l = pairing_radius_from_fraction(a, self.lambda_b).unwrap_or(f64::NAN);
                (l, a)
            }
            (Some(l), Some(a)) => {
                check(finite_pos(l), "L", "must be positive and finite");
                check(a > 0.0 && a < 1.0, "A_L", "must lie in (0, 1)");
                let implied = pairing_fraction(l, self.lambda_b);
                check(
                    Float::abs(implied - a) <= PAIRING_CONSISTENCY_TOL * a,
                    "A_L",
                    "inconsistent with L: A_L must equal 1 - exp(-pi lambda_b L^2)",
                );
                (l, a)
            }
        };
        // A tiny L can still round A_L to 0.
        if radius.is_finite() && radius > 0.0 {
            check(
                fraction > 0.0 && fraction < 1.0,
                "A_L",
                "implied fraction must lie in (0, 1)",
            );
        }

        if !bad.is_empty() {
            return Err(Error::InvalidParams(bad));
        }
        Ok(SystemParams {
            lambda_b: self.lambda_b,
            alpha: self.alpha,
            eps_m: self.eps_m,
            eps_t: self.eps_t,
            rho_m: self.rho_m,
            rho_t: self.rho_t,
            beta_m,
            beta_t,
            pairing_radius: radius,
            pairing_fraction: fraction,
            eta: self.eta,
            tau: self.tau,
            rho_area: self.rho_area,
        })
    }
}

/// Validated, immutable model parameters. Thresholds are linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    lambda_b: f64,
    alpha: f64,
    eps_m: f64,
    eps_t: f64,
    rho_m: f64,
    rho_t: f64,
    beta_m: f64,
    beta_t: f64,
    pairing_radius: f64,
    pairing_fraction: f64,
    eta: f64,
    tau: f64,
    rho_area: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        RawParams::default()
            .validate()
            .expect("default parameters are valid")
    }
}

impl SystemParams {
    /// BS density, per m².
    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }
    /// Path-loss exponent.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// Mobile power-control fraction.
    pub fn eps_m(&self) -> f64 {
        self.eps_m
    }
    /// IoT power-control fraction.
    pub fn eps_t(&self) -> f64 {
        self.eps_t
    }
    /// Mobile baseline power, W.
    pub fn rho_m(&self) -> f64 {
        self.rho_m
    }
    /// IoT baseline power, W.
    pub fn rho_t(&self) -> f64 {
        self.rho_t
    }
    /// Mobile SIR threshold (linear).
    pub fn beta_m(&self) -> f64 {
        self.beta_m
    }
    /// IoT SIR threshold (linear).
    pub fn beta_t(&self) -> f64 {
        self.beta_t
    }
    /// Pairing radius `L`, m.
    pub fn pairing_radius(&self) -> f64 {
        self.pairing_radius
    }
    /// Pairing fraction `A_L`.
    pub fn pairing_fraction(&self) -> f64 {
        self.pairing_fraction
    }
    /// OMA time share of the mobile user.
    pub fn eta(&self) -> f64 {
        self.eta
    }
    /// Mean-local-delay cap.
    pub fn tau(&self) -> f64 {
        self.tau
    }
    /// Area-scaling constant of the link-distance law.
    pub fn rho_area(&self) -> f64 {
        self.rho_area
    }

    /// `pi * rho_area * lambda_b`, the Rayleigh rate of the link-distance law.
    pub fn link_rate(&self) -> f64 {
        PI * self.rho_area * self.lambda_b
    }

    /// Back to the raw form, with both `L` and `A_L` filled in.
    pub fn to_raw(&self) -> RawParams {
        RawParams {
            lambda_b: self.lambda_b,
            alpha: self.alpha,
            eps_m: self.eps_m,
            eps_t: self.eps_t,
            rho_m: self.rho_m,
            rho_t: self.rho_t,
            beta_m: Threshold::Linear(self.beta_m),
            beta_t: Threshold::Linear(self.beta_t),
            pairing_radius: Some(self.pairing_radius),
            pairing_fraction: Some(self.pairing_fraction),
            eta: self.eta,
            tau: self.tau,
            rho_area: self.rho_area,
            lambda_m: None,
            lambda_t: None,
        }
    }

    /// Same parameters with new power-control fractions.
    pub fn with_eps(&self, eps_m: f64, eps_t: f64) -> Result<Self, Error> {
        let mut raw = self.to_raw();
        raw.eps_m = eps_m;
        raw.eps_t = eps_t;
        raw.validate()
    }

    /// Same parameters with new linear thresholds.
    pub fn with_betas(&self, beta_m: f64, beta_t: f64) -> Result<Self, Error> {
        let mut raw = self.to_raw();
        raw.beta_m = Threshold::Linear(beta_m);
        raw.beta_t = Threshold::Linear(beta_t);
        raw.validate()
    }

    /// Same parameters with a new OMA time share.
    pub fn with_eta(&self, eta: f64) -> Result<Self, Error> {
        let mut raw = self.to_raw();
        raw.eta = eta;
        raw.validate()
    }

    /// Same parameters with a new delay cap.
    pub fn with_tau(&self, tau: f64) -> Result<Self, Error> {
        let mut raw = self.to_raw();
        raw.tau = tau;
        raw.validate()
    }

    /// Same parameters with a new pairing radius (`A_L` recomputed).
    pub fn with_pairing_radius(&self, l: f64) -> Result<Self, Error> {
        let mut raw = self.to_raw();
        raw.pairing_radius = Some(l);
        raw.pairing_fraction = None;
        raw.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_from_fraction_reference_point() {
        let l = pairing_radius_from_fraction(0.25, 1e-4).unwrap();
        assert!(Float::abs(l - 30.27) < 0.01, "L = {l}");
        assert!(Float::abs(pairing_fraction(l, 1e-4) - 0.25) < 1e-14);
    }

    #[test]
    fn radius_vanishes_with_fraction() {
        let l = pairing_radius_from_fraction(1e-12, 1e-4).unwrap();
        assert!(l < 1e-3);
    }

    #[test]
    fn fraction_round_trip() {
        for x in [0.1, 0.5, 0.9] {
            let l = pairing_radius_from_fraction(x, 1e-4).unwrap();
            assert!(Float::abs(pairing_fraction(l, 1e-4) - x) < 1e-12);
        }
    }

    #[test]
    fn radius_rejects_bad_inputs() {
        assert!(pairing_radius_from_fraction(0.0, 1e-4).is_err());
        assert!(pairing_radius_from_fraction(1.0, 1e-4).is_err());
        match pairing_radius_from_fraction(0.5, -1.0) {
            Err(Error::InvalidParams(v)) => assert_eq!(v[0].field, "lambda_b"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_are_valid_and_linearised() {
        let p = SystemParams::default();
        assert!(Float::abs(p.beta_t() - db_to_linear(-5.0)) < 1e-15);
        assert!(Float::abs(p.pairing_fraction() - 0.25) < 1e-15);
        assert!(p.pairing_radius() > 30.0);
    }

    #[test]
    fn alpha_two_rejected() {
        let raw = RawParams {
            alpha: 2.0,
            ..RawParams::default()
        };
        match raw.validate() {
            Err(Error::InvalidParams(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].field, "alpha");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eta_one_rejected() {
        let raw = RawParams {
            eta: 1.0,
            ..RawParams::default()
        };
        assert!(matches!(raw.validate(), Err(Error::InvalidParams(v)) if v[0].field == "eta"));
    }

    #[test]
    fn all_violations_reported() {
        let raw = RawParams {
            lambda_b: 0.0,
            eps_m: 1.5,
            tau: 0.5,
            pairing_fraction: None,
            ..RawParams::default()
        };
        let Err(Error::InvalidParams(v)) = raw.validate() else {
            panic!("expected failure")
        };
        let fields: Vec<_> = v.iter().map(|v| v.field).collect();
        for f in ["lambda_b", "eps_m", "tau", "L"] {
            assert!(fields.contains(&f), "{fields:?} lacks {f}");
        }
    }

    #[test]
    fn inconsistent_pairing_rejected() {
        let raw = RawParams {
            pairing_radius: Some(50.0),
            pairing_fraction: Some(0.25),
            ..RawParams::default()
        };
        assert!(raw.validate().is_err());
    }

    #[test]
    fn radius_fills_fraction() {
        let raw = RawParams {
            pairing_radius: Some(30.0),
            pairing_fraction: None,
            ..RawParams::default()
        };
        let p = raw.validate().unwrap();
        assert!(Float::abs(p.pairing_fraction() - pairing_fraction(30.0, 1e-4)) < 1e-15);
    }

    #[test]
    fn validation_idempotent() {
        let p = SystemParams::default();
        assert_eq!(p.to_raw().validate().unwrap(), p);
    }

    #[test]
    fn db_round_trip() {
        for db in [-20.0, -5.0, 0.0, 3.0, 17.5] {
            assert!(Float::abs(linear_to_db(db_to_linear(db)) - db) < 1e-12);
        }
    }
}
