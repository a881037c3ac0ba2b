use proptest::prelude::*;

use spc_relay::geom::Vec3;
use spc_relay::planner::initial_feasible;
use spc_relay::radio::{dispersion, q_func, q_inv, slot_snrs};
use spc_relay::sca::{a0, a1, f_lb, tangent_of_concave, ConcaveFn};
use spc_relay::scenario::{default_scenario, parse_scenario, serialize_scenario, Scenario};
use spc_relay::secrecy::{downlink_rate_lb, east, uplink_rate_lb};

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        (-900.0..-300.0f64, -300.0..300.0f64),
        (-800.0..800.0f64, 400.0..1000.0f64, 0.0..150.0f64),
        (20u32..120, 50u32..1200),
        (log_uniform(1e-5, 0.1), log_uniform(1e-5, 0.1), log_uniform(1e-4, 0.4)),
    )
        .prop_map(|(a, e, (t, l_max), (er, eb, ee))| {
            let mut s = default_scenario().with_timing(t as f64, 1.0);
            s.alice_pos = Vec3::new(a.0, a.1, 0.0);
            s.eve_est_pos = Vec3::new(e.0, e.1, 0.0);
            s.eve_uncertainty = e.2;
            s.l_max = l_max;
            s.eps_r = er;
            s.eps_b = eb;
            s.eta_e = ee;
            s
        })
        .prop_filter("valid scenario", |s| s.validate().is_empty())
}

fn waypoint() -> impl Strategy<Value = Vec3> {
    (-1000.0..1000.0f64, -1000.0..1000.0f64, 60.0..120.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scenario_round_trip(s in scenario()) {
        let back = parse_scenario(&serialize_scenario(&s)).unwrap();
        prop_assert_eq!(s, back);
    }

    #[test]
    fn dispersion_is_monotone_and_bounded(g in log_uniform(1e-8, 1e8), f in 1.0..10.0f64) {
        let (a, b) = (dispersion(g).unwrap(), dispersion(g * f).unwrap());
        prop_assert!(a <= b);
        let sup = std::f64::consts::LOG2_E.powi(2);
        prop_assert!(b <= sup);
        // (1+γ)⁻² drops below one ulp of 1 around γ = 1e8.
        if g * f < 1e7 {
            prop_assert!(b < sup);
        }
    }

    #[test]
    fn q_inv_inverts_q(p in log_uniform(1e-6, 0.5)) {
        let x = q_inv(p).unwrap();
        prop_assert!((q_func(x) - p).abs() <= 1e-10);
        prop_assert!(q_inv(p * 0.99).unwrap() > x);
    }

    #[test]
    fn snrs_scale_with_power(q in waypoint(), pa in 1e-4..0.1f64, pr in 1e-4..0.1f64) {
        let s = default_scenario();
        let one = slot_snrs(&s, q, pa, pr).unwrap();
        let two = slot_snrs(&s, q, 2.0 * pa, 2.0 * pr).unwrap();
        for (a, b) in [
            (one.gamma_r, two.gamma_r),
            (one.gamma_b, two.gamma_b),
            (one.gamma_ae_bar, two.gamma_ae_bar),
            (one.gamma_ae_tilde, two.gamma_ae_tilde),
            (one.gamma_re_bar, two.gamma_re_bar),
            (one.gamma_re_tilde, two.gamma_re_tilde),
        ] {
            prop_assert_eq!(2.0 * a, b);
        }
    }

    #[test]
    fn reverse_triangle_dominance(
        q in waypoint(),
        dir in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        r in 0.0..1.0f64,
    ) {
        let s = default_scenario();
        let d = Vec3::new(dir.0, dir.1, dir.2);
        prop_assume!(d.norm() > 1e-6 && d.norm() <= 1.0);
        let eve = s.eve_est_pos + d * (r * s.eve_uncertainty / d.norm());
        for p in [s.alice_pos, q] {
            prop_assert!(p.dist(eve) >= p.dist(s.eve_est_pos) - s.eve_uncertainty - 1e-9);
        }
    }

    #[test]
    fn rates_grow_with_blocklength(q in waypoint(), pa in 1e-4..0.1f64, pr in 1e-4..0.1f64, l in 1.0..999.0f64) {
        let s = default_scenario();
        let snr = slot_snrs(&s, q, pa, pr).unwrap();
        prop_assert!(uplink_rate_lb(&snr, l, s.eps_r, s.eta_e).unwrap()
            <= uplink_rate_lb(&snr, l + 1.0, s.eps_r, s.eta_e).unwrap());
        prop_assert!(downlink_rate_lb(&snr, l, s.eps_b, s.eta_e).unwrap()
            <= downlink_rate_lb(&snr, l + 1.0, s.eps_b, s.eta_e).unwrap());
    }

    #[test]
    fn rates_shrink_with_eve_snr(q in waypoint(), pa in 1e-4..0.1f64, pr in 1e-4..0.1f64, f in 1.0..100.0f64) {
        let s = default_scenario();
        let snr = slot_snrs(&s, q, pa, pr).unwrap();
        let mut worse = snr;
        worse.gamma_ae_tilde *= f;
        worse.gamma_re_tilde *= f;
        prop_assert!(uplink_rate_lb(&worse, 200.0, s.eps_r, s.eta_e).unwrap()
            <= uplink_rate_lb(&snr, 200.0, s.eps_r, s.eta_e).unwrap());
        prop_assert!(downlink_rate_lb(&worse, 200.0, s.eps_b, s.eta_e).unwrap()
            <= downlink_rate_lb(&snr, 200.0, s.eps_b, s.eta_e).unwrap());
    }

    #[test]
    fn east_is_pure(s in scenario()) {
        let dv = initial_feasible(&s).unwrap();
        prop_assert_eq!(east(&s, &dv).unwrap().to_bits(), east(&s, &dv).unwrap().to_bits());
    }

    #[test]
    fn tangents_dominate(
        k in log_uniform(1e-3, 1e3),
        x0 in log_uniform(1e-4, 1e4),
        x in log_uniform(1e-4, 1e4),
    ) {
        for f in [ConcaveFn::HalfLogKx2Kx { k }, ConcaveFn::Sqrt, ConcaveFn::Log1pKx { k }] {
            let t = tangent_of_concave(f, x0).unwrap();
            let v = f.value(x).unwrap();
            prop_assert!(t.at(x) >= v - 1e-12 * (1.0 + v.abs()));
            let v0 = f.value(x0).unwrap();
            prop_assert!((t.at(x0) - v0).abs() <= 1e-12 * (1.0 + v0.abs()));
        }
    }

    #[test]
    fn f_lb_is_a_global_lower_bound(
        x in log_uniform(1e-2, 1e2),
        y in log_uniform(1e-2, 1e2),
        x0 in log_uniform(1e-2, 1e2),
        y0 in log_uniform(1e-2, 1e2),
    ) {
        let exact = 1.0 / (x * y);
        prop_assert!(f_lb(x, y, x0, y0).unwrap() <= exact * (1.0 + 1e-12));
        prop_assert!((f_lb(x0, y0, x0, y0).unwrap() * x0 * y0 - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn a1_is_the_derivative_of_a0() {
    let mut worst: f64 = 0.0;
    for k in [0.01, 1.0, 100.0] {
        for i in 0..=80 {
            let x = 10f64.powf(-4.0 + 8.0 * i as f64 / 80.0);
            let h = 1e-5 * x;
            let fd = (a0(x + h, k).unwrap() - a0(x - h, k).unwrap()) / (2.0 * h);
            let d = a1(x, k).unwrap();
            worst = worst.max((fd - d).abs() / d.max(1.0));
        }
    }
    assert!(worst <= 1e-5, "{worst}");
}
