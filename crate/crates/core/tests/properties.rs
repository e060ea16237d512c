use arnoma_core::analytic::{AnalyticModel, AnalyticSettings, MomentStatus};
use arnoma_core::config::{
    db_to_linear, linear_to_db, pairing_fraction, pairing_radius_from_fraction, RawParams,
    Threshold,
};
use arnoma_core::distributions::{pcf_iot, pcf_mobile, LinkDistanceLaw};
use arnoma_core::quadrature::Adaptive;
use arnoma_core::{Device, Scheme};
use proptest::prelude::*;

fn raw_params() -> impl Strategy<Value = RawParams> {
    (
        -5.0f64..-3.0,
        2.1f64..6.0,
        0.0f64..=1.0,
        0.0f64..=1.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
        -15.0f64..15.0,
        -15.0f64..15.0,
        0.02f64..0.95,
        0.01f64..0.99,
        1.0f64..20.0,
    )
        .prop_map(
            |(lb, alpha, em, et, pm, pt, bm, bt, al, eta, tau)| RawParams {
                lambda_b: 10f64.powf(lb),
                alpha,
                eps_m: em,
                eps_t: et,
                rho_m: 10f64.powf(pm),
                rho_t: 10f64.powf(pt),
                beta_m: Threshold::Db(bm),
                beta_t: Threshold::Db(bt),
                pairing_fraction: Some(al),
                eta,
                tau,
                ..RawParams::default()
            },
        )
}

proptest! {
    #[test]
    fn validation_is_idempotent(raw in raw_params()) {
        let p = raw.validate().unwrap();
        prop_assert_eq!(p.to_raw().validate().unwrap(), p);
    }

    #[test]
    fn pairing_fill_in_is_consistent(raw in raw_params()) {
        let p = raw.validate().unwrap();
        let a = pairing_fraction(p.pairing_radius(), p.lambda_b());
        prop_assert!((a - p.pairing_fraction()).abs() <= 1e-12);
    }

    #[test]
    fn decibels_round_trip(db in -100.0f64..100.0) {
        prop_assert!((linear_to_db(db_to_linear(db)) - db).abs() <= 1e-12);
    }

    #[test]
    fn fraction_round_trip(a in 0.001f64..0.999, lb in -6.0f64..-2.0) {
        let lambda = 10f64.powf(lb);
        let l = pairing_radius_from_fraction(a, lambda).unwrap();
        prop_assert!((pairing_fraction(l, lambda) - a).abs() <= 1e-12);
    }

    #[test]
    fn truncated_link_laws_normalise(rate in 1e-5f64..1e-2, upper_scale in 0.05f64..20.0) {
        // upper_scale is the truncation point in units of the untruncated scale.
        let upper = upper_scale / rate.sqrt();
        let law = LinkDistanceLaw::new(rate, upper);
        let q = Adaptive::relative(1e-11).integrate(|r| law.pdf(r), 0.0, upper);
        prop_assert!((q.value - 1.0).abs() <= 1e-8, "integral {}", q.value);
        prop_assert_eq!(law.pdf(upper * 1.0001), 0.0);
        prop_assert!((law.cdf(upper) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pcfs_are_increasing_and_bounded(r1 in 0.0f64..500.0, dr in 1e-3f64..500.0, inv_scale in 0.5f64..6.0) {
        let p = RawParams::default().validate().unwrap();
        let inv = inv_scale * p.lambda_b();
        let r2 = r1 + dr;
        for (a, b) in [(pcf_iot(r1, &p), pcf_iot(r2, &p)), (pcf_mobile(r1, inv), pcf_mobile(r2, inv))] {
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            prop_assert!(b >= a);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn moment_inequalities_hold_for_random_parameters(raw in raw_params(), dev in 0usize..4) {
        let p = raw.validate().unwrap();
        let model = AnalyticModel::with_settings(p, 4.2 * p.lambda_b(), AnalyticSettings { tol: 1e-7, ..Default::default() });
        let (d, s) = [
            (Device::Mobile, Scheme::Noma),
            (Device::Mobile, Scheme::Oma),
            (Device::Iot, Scheme::Noma),
            (Device::Iot, Scheme::Oma),
        ][dev];
        let beta = match d { Device::Mobile => p.beta_m(), Device::Iot => p.beta_t() };
        let m1 = model.moment(d, s, 1.0, beta).unwrap();
        let m2 = model.moment(d, s, 2.0, beta).unwrap();
        prop_assert_eq!(m1.status, MomentStatus::Converged);
        prop_assert_eq!(m2.status, MomentStatus::Converged);
        let slack = m1.abs_error_est + m2.abs_error_est + 1e-10;
        prop_assert!(m1.value <= 1.0 + slack);
        prop_assert!(m2.value <= m1.value + slack);
        prop_assert!(m2.value >= m1.value * m1.value - slack);
        let mn = model.moment(d, s, -1.0, beta).unwrap();
        if mn.status != MomentStatus::Diverged {
            prop_assert!(mn.value * m1.value >= 1.0 - 1e-6, "M_-1 {} M_1 {}", mn.value, m1.value);
        }
    }

    #[test]
    fn kernels_decrease_in_scale(s in 1e-3f64..1e3, ratio in 1.01f64..10.0, b in 0.5f64..3.0) {
        let p = RawParams::default().validate().unwrap();
        let model = AnalyticModel::new(p, 4.2 * p.lambda_b());
        for k in [AnalyticModel::kernel_i1, AnalyticModel::kernel_i2, AnalyticModel::kernel_m] {
            let (a, c) = (k(&model, s, b), k(&model, s * ratio, b));
            prop_assert!(a > 0.0 && a <= 1.0 + 1e-12);
            prop_assert!(c <= a + 1e-9);
        }
    }
}
