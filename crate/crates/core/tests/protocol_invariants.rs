use confquant::conferencing::{
    ceil_log2, dq_mr_it, dq_mr_ts, dq_sr_it, dq_sr_ts, gq_mr_it, CodebookCm, Transcript,
    DEFAULT_MAX_ROUNDS,
};
use confquant::rates::{opt_outage, report};
use confquant::{ChannelState, FadingParams, Metric, Strategy};
use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest, ProptestConfig};

fn log2_1p(x: f64) -> f64 {
    (1.0 + x).log2()
}

fn min_rate(h: &[f64; 4], p: f64, p1: f64, p2: f64) -> f64 {
    let [h11, h12, h21, h22] = *h;
    let r1 = log2_1p(p1 * p * h11 / (p2 * p * h21 + 1.0));
    let r2 = log2_1p(p2 * p * h22 / (p1 * p * h12 + 1.0));
    r1.min(r2)
}

fn sum_rate(h: &[f64; 4], p: f64, p1: f64, p2: f64) -> f64 {
    let [h11, h12, h21, h22] = *h;
    log2_1p(p1 * p * h11 / (p2 * p * h21 + 1.0)) + log2_1p(p2 * p * h22 / (p1 * p * h12 + 1.0))
}

fn t_min(p: f64, rho: f64, direct: f64) -> f64 {
    rho / log2_1p(p * direct)
}

/// Binary `k`-th fractional digit of `x` in `[0, 1)`.
fn digit(x: f64, k: usize) -> bool {
    ((x * (1u64 << k) as f64).floor() as u64) & 1 == 1
}

fn setup(g: [f64; 4], eps: f64, p_db: f64, rho: f64) -> (ChannelState, FadingParams) {
    (
        ChannelState::new(g[0], g[1], g[2], g[3]).unwrap(),
        FadingParams::with_db(eps, p_db, rho).unwrap(),
    )
}

fn bits_of(t: &Transcript) -> Vec<(String, String)> {
    t.rounds()
        .iter()
        .map(|r| (r.from_rx1.to_string(), r.from_rx2.to_string()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn sum_rate_it_is_exact(
        g in [1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0],
        eps in 0.01f64..1.0, p_db in -20.0f64..40.0, rho in 0.1f64..2.0,
    ) {
        let (h, params) = setup(g, eps, p_db, rho);
        let p = params.p();
        let t = dq_sr_it(&h, &params);
        prop_assert_eq!(t.total_bits(), 2);
        let best = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
            .iter()
            .map(|&(a, b)| sum_rate(&g, p, a, b))
            .fold(f64::NEG_INFINITY, f64::max);
        // skip knife-edge states where rounding decides
        prop_assume!((best - 2.0 * rho).abs() > 1e-9);
        prop_assert_eq!(t.declared_outage(), best < 2.0 * rho);
        prop_assert_eq!(t.declared_outage(), opt_outage(&h, &params, Metric::SumRate, Strategy::Interference));
        prop_assert_eq!(report(&h, &t.decision(), &params).sum < 2.0 * rho, t.declared_outage());
    }

    #[test]
    fn sum_rate_ts_is_exact(
        g in [1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0],
        p_db in -20.0f64..40.0, rho in 0.1f64..2.0,
    ) {
        let (h, params) = setup(g, 0.1, p_db, rho);
        let t = dq_sr_ts(&h, &params);
        prop_assert_eq!(t.total_bits(), 2);
        prop_assert_eq!(t.declared_outage(), opt_outage(&h, &params, Metric::SumRate, Strategy::TimeSharing));
    }

    #[test]
    fn bisection_matches_time_share_test(
        g in [1e-5f64..20.0, 1e-5f64..20.0, 1e-5f64..20.0, 1e-5f64..20.0],
        p_db in -20.0f64..40.0, rho in 0.1f64..2.0,
    ) {
        let (h, params) = setup(g, 0.1, p_db, rho);
        let t = dq_mr_ts(&h, &params, DEFAULT_MAX_ROUNDS).unwrap();
        let (t1, t2) = (t_min(params.p(), rho, g[0]), t_min(params.p(), rho, g[3]));
        prop_assume!(!t.terminated_by_cap());
        prop_assert_eq!(t.declared_outage(), t1 + t2 > 1.0);
        prop_assert_eq!(t.declared_outage(), opt_outage(&h, &params, Metric::MinRate, Strategy::TimeSharing));
        if !t.declared_outage() {
            let d = t.decision();
            prop_assert!(d.first() >= t1 && d.second() >= t2);
            prop_assert!((d.first() + d.second() - 1.0).abs() < 1e-12);
        }
        prop_assert_eq!(t.total_bits() as usize, 2 * t.rounds().len());
    }

    #[test]
    fn bisection_bits_are_binary_digits(
        t1 in 0.02f64..0.98, share in 0.0f64..1.0, rho in 0.2f64..2.0, p_db in -10.0f64..30.0,
    ) {
        let t2 = (1.0 - t1) * share;
        prop_assume!(t2 > 0.02 && t1 + t2 < 1.0 - 1e-9);
        let params = FadingParams::with_db(0.1, p_db, rho).unwrap();
        let gain = |t: f64| ((rho / t).exp2() - 1.0) / params.p();
        let h = ChannelState::new(gain(t1), 0.2, 0.2, gain(t2)).unwrap();
        let (t1, t2) = (t_min(params.p(), rho, h.h11()), t_min(params.p(), rho, h.h22()));
        let tr = dq_mr_ts(&h, &params, DEFAULT_MAX_ROUNDS).unwrap();
        prop_assume!(!tr.terminated_by_cap());
        prop_assert!(!tr.declared_outage());
        for (k, (b1, b2)) in bits_of(&tr).iter().enumerate().skip(1) {
            prop_assert_eq!(b1 == "1", digit(t1, k));
            prop_assert_eq!(b2 == "1", digit(t2, k));
        }
    }

    #[test]
    fn power_protocol_matches_global_quantizer(
        g in [1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0],
        eps in 0.01f64..1.0, p_db in -10.0f64..30.0, rho in 0.1f64..2.0, m in 1u32..40,
    ) {
        let (h, params) = setup(g, eps, p_db, rho);
        let cb = CodebookCm::new(m).unwrap();
        let t = dq_mr_it(&h, &params, &cb);
        let gq = gq_mr_it(&h, &params, &cb);
        let gq_rate = min_rate(&g, params.p(), gq.first(), gq.second());
        prop_assume!((gq_rate - rho).abs() > 1e-9);
        prop_assert_eq!(t.declared_outage(), gq_rate < rho);
        prop_assert!(t.total_bits() <= 2 * ceil_log2(m as u64 + 1) + 1);
        prop_assert!(t.rounds().len() <= 2);
    }

    #[test]
    fn finer_codebooks_never_hurt(
        g in [1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0],
        p_db in -10.0f64..30.0, m in 1u32..20, k in 2u32..5,
    ) {
        let (h, params) = setup(g, 0.1, p_db, 0.5);
        let coarse = gq_mr_it(&h, &params, &CodebookCm::new(m).unwrap());
        let fine = gq_mr_it(&h, &params, &CodebookCm::new(m * k).unwrap());
        let p = params.p();
        prop_assert!(
            min_rate(&g, p, fine.first(), fine.second()) >= min_rate(&g, p, coarse.first(), coarse.second()) - 1e-12
        );
    }

    #[test]
    fn quantizers_never_beat_the_optimum(
        g in [1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0, 1e-4f64..20.0],
        p_db in -10.0f64..30.0, m in 1u32..20,
    ) {
        let (h, params) = setup(g, 0.1, p_db, 0.5);
        let opt = opt_outage(&h, &params, Metric::MinRate, Strategy::Interference);
        let t = dq_mr_it(&h, &params, &CodebookCm::new(m).unwrap());
        prop_assert!(!opt || t.declared_outage());
    }

    #[test]
    fn transcripts_round_trip(
        g in [1e-5f64..20.0, 1e-5f64..20.0, 1e-5f64..20.0, 1e-5f64..20.0],
        p_db in -20.0f64..40.0, m in 1u32..20,
    ) {
        let (h, params) = setup(g, 0.1, p_db, 0.5);
        for t in [
            dq_sr_it(&h, &params),
            dq_mr_ts(&h, &params, DEFAULT_MAX_ROUNDS).unwrap(),
            dq_mr_it(&h, &params, &CodebookCm::new(m).unwrap()),
        ] {
            let back = Transcript::from_json(&t.to_json()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
