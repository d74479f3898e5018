use proptest::prelude::*;

use reformlab_core::equilibrium::{solve, Policy};
use reformlab_core::model::{check_assumptions, find_p_bar, informativeness_with_p, posteriors};
use reformlab_core::sweep::{sweep_row, SweepOutput};
use reformlab_core::verification::bayes_consistency;
use reformlab_core::welfare::{optimal_regime, Thresholds};
use reformlab_core::{AgentType, Params, Regime, RentMode, Signal};

fn params() -> impl Strategy<Value = Params> {
    (
        0.5..=1.0f64,
        0.001..0.999f64,
        0.0005..0.5f64,
        0.01..=1.0f64,
        0.001..3.0f64,
        0.001..0.999f64,
    )
        .prop_map(|(p, phi, d, lambda, rent, pi)| Params::new(p, phi, d, lambda, rent, pi).unwrap())
}

/// Points satisfying the relaxed assumption set, built so that rejection is
/// rare: strong signals, small status-quo payoff.
fn valid_params() -> impl Strategy<Value = Params> {
    (
        0.8..0.9999f64,
        0.3..0.95f64,
        0.0005..0.05f64,
        0.2..=1.0f64,
        0.05..1.5f64,
        0.05..0.95f64,
    )
        .prop_map(|(p, phi, d, lambda, rent, pi)| Params::new(p, phi, d, lambda, rent, pi).unwrap())
        .prop_filter("relaxed assumption set", |p| {
            check_assumptions(p)
                .unwrap()
                .base_set_holds(RentMode::Relaxed)
        })
}

const ALL_REGIMES: [Regime; 5] = [
    Regime::Benchmark,
    Regime::Nontransparent,
    Regime::Opaque,
    Regime::TransparentSeparating,
    Regime::TransparentPooling,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn params_json_round_trip(p in params(), m in 0.0..5.0f64) {
        let p = p.with_selection_weight(m).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: Params = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(p, back);
    }

    #[test]
    fn posteriors_bracket_the_prior(p in params()) {
        let post = posteriors(&p).unwrap();
        prop_assert!(post.mu_minus <= p.phi + 1e-15);
        prop_assert!(p.phi <= post.mu_plus + 1e-15);
    }

    #[test]
    fn strict_rent_implies_relaxed(p in params()) {
        let r = check_assumptions(&p).unwrap();
        prop_assert!(!r.moderate_rent_strict.pass || r.moderate_rent_relaxed.pass);
    }

    #[test]
    fn equilibria_are_well_formed(p in valid_params()) {
        for regime in ALL_REGIMES {
            let Ok(eq) = solve(&p, regime, RentMode::Relaxed) else { continue };
            for (_, _, a) in eq.profile.iter() {
                prop_assert!(a.validate().is_ok());
                prop_assert!((0.0..=1.0).contains(&a.effort));
            }
            let bayes = bayes_consistency(&eq, &p).unwrap();
            prop_assert!(bayes.all_pass(), "{regime}: {bayes:?}");
        }
    }

    #[test]
    fn opaque_effort_dominates_nontransparent(p in valid_params()) {
        let Ok(opaque) = solve(&p, Regime::Opaque, RentMode::Relaxed) else { return Ok(()) };
        let nt = solve(&p, Regime::Nontransparent, RentMode::Relaxed).unwrap();
        for s in Signal::ALL {
            let o = opaque.profile.action(AgentType::Congruent, s);
            let n = nt.profile.action(AgentType::Congruent, s);
            prop_assert_eq!(o.policy, Policy::Reform);
            prop_assert!(o.effort > n.effort);
        }
    }

    #[test]
    fn welfare_report_invariants(p in valid_params(), m in 0.0..2.0f64) {
        let p = p.with_selection_weight(m).unwrap();
        let report = optimal_regime(&p, RentMode::Relaxed).unwrap();
        for e in &report.entries {
            prop_assert!((0.0..=1.0).contains(&e.w));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&e.q));
            prop_assert!((e.total - (e.w + m * e.q)).abs() < 1e-12);
        }
        prop_assert_eq!(report.entries.len() + report.excluded.len(), 3);
        if let Some(best) = report.optimal {
            let top = report.get(best).unwrap().total;
            for e in &report.entries {
                prop_assert!(top >= e.total - p.eps_tol);
            }
        }
    }

    #[test]
    fn h_is_nonpositive_between_roots(lh in 0.01..0.6f64, d in 0.0..0.3f64, u in 0.0..=1.0f64) {
        let t = Thresholds::from_lambda_hat(lh, d);
        prop_assert_eq!(t.exists, 1.0 >= 2.0 * lh * (1.0 + d));
        if let (Some(lo), Some(hi)) = (t.r_low, t.r_high) {
            prop_assert!(0.0 < lo && lo <= hi);
            let inside = lo + u * (hi - lo);
            prop_assert!(t.h(inside) <= 1e-12 * (1.0 + inside * inside));
            prop_assert!(t.h(lo - 0.01) > 0.0);
            prop_assert!(t.h(hi + 0.01) > 0.0);
        }
    }

    #[test]
    fn informativeness_holds_above_p_bar(p in params(), u in 0.0..1.0f64) {
        if let Some(p_bar) = find_p_bar(&p).unwrap() {
            let q = p_bar + u * (1.0 - p_bar);
            prop_assert!(informativeness_with_p(&p, q).unwrap().holds, "p_bar {p_bar}, p {q}");
        }
    }

    #[test]
    fn sweep_rows_match_header_width(p in params()) {
        let outputs = [
            SweepOutput::Welfare,
            SweepOutput::OptimalRegime,
            SweepOutput::Assumptions,
            SweepOutput::Thresholds,
        ];
        let row = sweep_row(&p, &outputs, RentMode::Relaxed).unwrap();
        prop_assert_eq!(row.split(',').count(), 7 + 3 + 1 + 6 + 3);
    }
}
