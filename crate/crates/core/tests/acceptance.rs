//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//!     cargo test --release -p reformlab-core --test acceptance
//!     cargo test -p reformlab-core --test acceptance -- 3 5   # a subset

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use reformlab_core::equilibrium::{
    nontransparent_equilibrium, opaque_candidate_profile, solve, transparent_pooling_equilibrium,
    transparent_pooling_family,
};
use reformlab_core::model::{check_assumptions, informativeness_condition, posteriors};
use reformlab_core::montecarlo::simulate;
use reformlab_core::sampling::{ParamSampler, RENT_MAX};
use reformlab_core::sweep::{run_sweep, Axis, SweepOutput, SweepSpec};
use reformlab_core::verification::{
    deviation_check, divinity_breakeven, joint_distribution, news_classification, NewsClass,
    DEFAULT_GRID, NEUTRAL_BAND,
};
use reformlab_core::welfare::{
    optimal_regime, regime_welfare, threshold_roots_bisection, Thresholds,
};
use reformlab_core::{
    AgentAction, AgentType, Outcome, ParamName, Params, Regime, RentMode, Signal, SimConfig,
};

const MODE: RentMode = RentMode::Relaxed;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn sanity() -> Params {
    Params::new(0.99, 0.75, 0.0125, 0.5, 0.25, 0.9).unwrap()
}

fn near_certain(rent: f64) -> Params {
    Params::new(0.999, 0.999, 0.05, 0.3, rent, 0.999).unwrap()
}

/// The shared 200 points at which every compared regime exists.
fn shared_points() -> Vec<Params> {
    let mut sampler = ParamSampler::new(20_260_401);
    (0..200).map(|_| sampler.draw_all_regimes(MODE)).collect()
}

fn criterion_1() -> Verdict {
    let params = sanity();
    let post = posteriors(&params).unwrap();
    let report = check_assumptions(&params).unwrap();
    let threshold = (2.0 * params.d / params.lambda).sqrt();
    let lambda_hat = params.lambda * post.mu_plus * post.mu_plus;
    let slack = 2.0 * (params.rent - params.d);
    let family = transparent_pooling_family(&params, MODE).unwrap();
    let checks = [
        ("mu+", (post.mu_plus - 0.9966).abs() <= 5e-4),
        ("mu-", (post.mu_minus - 0.0294).abs() <= 5e-4),
        ("sqrt(2d/lambda)", (threshold - 0.2236).abs() <= 1e-4),
        ("lambda mu+^2", (lambda_hat - 0.4966).abs() <= 5e-4),
        ("2(R-d)", slack == 0.475),
        ("informativeness", report.informativeness.holds),
        ("pooling empty", family.is_none()),
    ];
    let failed: Vec<_> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        failed.is_empty(),
        format!(
            "mu+={:.4} mu-={:.4} sqrt={:.4} lambda_hat={:.4} 2(R-d)={slack}; \
             strict rent {} / relaxed rent {}; failed: {failed:?}",
            post.mu_plus,
            post.mu_minus,
            threshold,
            lambda_hat,
            if report.moderate_rent_strict.pass {
                "pass"
            } else {
                "fail"
            },
            if report.moderate_rent_relaxed.pass {
                "pass"
            } else {
                "fail"
            },
        ),
    )
}

fn criterion_2() -> Verdict {
    let (lambda, d) = (0.3_f64, 0.05_f64);
    let root = (1.0 - 2.0 * (1.0 + d) * lambda).sqrt();
    let a = 1.0 - lambda - root;
    let b = 2.0 * (2.0 * d * lambda).sqrt();
    let c = 1.0 - root;
    // The same quantities through the threshold solver: lambda R_low and
    // lambda (1 + R_low) in the lambda_hat = lambda limit.
    let t = Thresholds::from_lambda_hat(lambda, d);
    let r_low = t.r_low.unwrap();
    let consistent =
        (lambda * r_low - a).abs() < 1e-12 && (lambda * (1.0 + r_low) - c).abs() < 1e-12;
    let close =
        (a - 0.0917).abs() <= 1e-3 && (b - 0.3464).abs() <= 1e-3 && (c - 0.3917).abs() <= 1e-3;
    let chain = a < b && b < c && a < 0.0917 + 1e-3 && c > 0.39;
    verdict(
        close && chain && consistent,
        format!("{a:.4} < {b:.4} < {c:.4}; solver-consistent={consistent}"),
    )
}

fn criterion_3() -> Verdict {
    let t = Thresholds::from_lambda_hat(0.3, 0.05);
    let (r_low, r_high) = (t.r_low.unwrap(), t.r_high.unwrap());
    let (b_low, b_high) = threshold_roots_bisection(0.3, 0.05).unwrap();
    let values_ok = (r_low - 0.3057).abs() <= 1e-3 && (r_high - 4.3609).abs() <= 1e-3;
    let agree = (r_low - b_low).abs() <= 1e-9 && (r_high - b_high).abs() <= 1e-9;

    let n = 20;
    let lh = |i: usize| 0.05 + 0.40 * i as f64 / (n - 1) as f64;
    let dd = |j: usize| 0.01 + 0.19 * j as f64 / (n - 1) as f64;
    let grid: Vec<Vec<Option<(f64, f64)>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let t = Thresholds::from_lambda_hat(lh(i), dd(j));
                    t.r_low.zip(t.r_high)
                })
                .collect()
        })
        .collect();
    let mut violations = 0;
    let mut compared = 0;
    let mut existing = 0;
    for i in 0..n {
        for j in 0..n {
            let Some((lo, hi)) = grid[i][j] else { continue };
            existing += 1;
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if let Some(Some((lo2, hi2))) = grid.get(ni).and_then(|row| row.get(nj)) {
                    compared += 1;
                    if *lo2 < lo || *hi2 > hi {
                        violations += 1;
                    }
                }
            }
        }
    }
    verdict(
        values_ok && agree && violations == 0,
        format!(
            "R_low={r_low:.6} R_high={r_high:.6}; bisection diff {:.1e}/{:.1e}; \
             monotonicity: {existing} grid points with roots, {compared} neighbour pairs, {violations} violations",
            (r_low - b_low).abs(),
            (r_high - b_high).abs()
        ),
    )
}

fn deviation_suite(points: &[Params], mode: RentMode) -> Verdict {
    struct PointResult {
        checked: usize,
        skipped: usize,
        documented: usize,
        /// (regime, cell) of each unexplained failure.
        unexplained: Vec<(Regime, AgentType, Signal)>,
        /// Whether the noncongruent reform payoff after g, (lambda/2)(R mu+)^2,
        /// falls below d; possible only under the relaxed rent reading.
        low_noncongruent_rent: bool,
    }
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|params| {
            let mut eqs = Vec::new();
            for regime in [
                Regime::Benchmark,
                Regime::Nontransparent,
                Regime::Opaque,
                Regime::TransparentSeparating,
            ] {
                eqs.push(solve(params, regime, mode));
            }
            if let Ok(Some(family)) = transparent_pooling_family(params, mode) {
                let mid = 0.5 * (family.low + family.high.min(1.0));
                eqs.push(transparent_pooling_equilibrium(params, mode, family.low));
                eqs.push(transparent_pooling_equilibrium(params, mode, mid));
            }
            let post = posteriors(params).unwrap();
            let mut r = PointResult {
                checked: 0,
                skipped: 0,
                documented: 0,
                unexplained: Vec::new(),
                low_noncongruent_rent: 0.5 * params.lambda * (params.rent * post.mu_plus).powi(2)
                    < params.d,
            };
            for eq in eqs {
                let Ok(eq) = eq else {
                    r.skipped += 1;
                    continue;
                };
                let report = deviation_check(&eq, params, DEFAULT_GRID).unwrap();
                r.checked += 1;
                r.documented += report.documented_failures();
                for c in &report.cells {
                    if c.verdict == reformlab_core::Verdict::Fail {
                        r.unexplained.push((eq.regime, c.agent_type, c.signal));
                    }
                }
            }
            r
        })
        .collect();
    let checked: usize = results.iter().map(|r| r.checked).sum();
    let skipped: usize = results.iter().map(|r| r.skipped).sum();
    let documented: usize = results.iter().map(|r| r.documented).sum();
    let unexplained: usize = results.iter().map(|r| r.unexplained.len()).sum();
    let mut by_cell: Vec<((Regime, AgentType, Signal), usize)> = Vec::new();
    for cell in results.iter().flat_map(|r| r.unexplained.iter()) {
        match by_cell.iter_mut().find(|(k, _)| k == cell) {
            Some((_, n)) => *n += 1,
            None => by_cell.push((*cell, 1)),
        }
    }
    let by_cell: Vec<String> = by_cell
        .iter()
        .map(|((g, t, s), n)| format!("{g} ({t},{s}) x{n}"))
        .collect();
    let failing_points = results.iter().filter(|r| !r.unexplained.is_empty()).count();
    let on_low_branch = results
        .iter()
        .filter(|r| !r.unexplained.is_empty() && r.low_noncongruent_rent)
        .count();
    let low_branch_points = results.iter().filter(|r| r.low_noncongruent_rent).count();
    verdict(
        unexplained == 0,
        format!(
            "{} points, {checked} equilibria at grid {DEFAULT_GRID} ({skipped} not constructible); \
             unexplained failures {unexplained} {by_cell:?}, documented (c,b) opaque failures {documented}; \
             {failing_points} points with unexplained failures, {on_low_branch} of them have \
             (lambda/2)(R mu+)^2 < d ({low_branch_points} such points sampled)",
            points.len(),
        ),
    )
}

fn criterion_4(points: &[Params]) -> Verdict {
    let main = deviation_suite(points, MODE);
    // Supplementary, not part of the verdict: the same suite on points drawn
    // under the strict (min) rent reading.
    let mut sampler = ParamSampler::new(4_004);
    let strict: Vec<Params> = (0..200)
        .map(|_| sampler.draw_all_regimes(RentMode::Strict))
        .collect();
    let supplementary = deviation_suite(&strict, RentMode::Strict);
    verdict(
        main.pass,
        format!(
            "relaxed rent (verdict): {} | strict rent (info, {}): {}",
            main.detail,
            if supplementary.pass { "pass" } else { "fail" },
            supplementary.detail
        ),
    )
}

fn criterion_5(points: &[Params]) -> Verdict {
    let mut violations = 0;
    for params in points {
        let report = optimal_regime(params, MODE).unwrap();
        let w = |r| report.get(r).expect("all three regimes exist").w;
        let nt = w(Regime::Nontransparent);
        if nt > w(Regime::Opaque).min(w(Regime::TransparentSeparating)) + 1e-9 {
            violations += 1;
        }
    }

    // Near-certain construction: sweep R over [0.2, 5] in steps of 0.01.
    let axis = Axis {
        param: ParamName::Rent,
        min: 0.2,
        max: 5.0,
        steps: 481,
    };
    let step = axis.step();
    let t = Thresholds::from_lambda_hat(0.3, 0.05);
    let limit = reformlab_core::welfare::thresholds(&near_certain(0.5)).unwrap();
    let (r_low, r_high) = (limit.r_low.unwrap(), limit.r_high.unwrap());
    let mut mismatches = Vec::new();
    let mut undefined = 0;
    for i in 0..axis.steps {
        let rent = axis.value(i);
        let params = near_certain(rent);
        let report = optimal_regime(&params, MODE).unwrap();
        if report.optimal.is_none() {
            undefined += 1;
        }
        let transparent = report.optimal == Some(Regime::TransparentSeparating);
        let expected = rent > r_low && rent < r_high;
        let near_edge = (rent - r_low).abs() <= step || (rent - r_high).abs() <= step;
        if transparent != expected && !near_edge {
            mismatches.push((rent, report.optimal));
        }
    }
    let sweep_ok = mismatches.is_empty();
    let first = mismatches
        .first()
        .map(|(r, o)| {
            format!(
                "; first mismatch R={r:.2} optimal={}",
                o.map_or("NA".into(), |o| o.to_string())
            )
        })
        .unwrap_or_default();
    verdict(
        violations == 0 && sweep_ok,
        format!(
            "ranking: {} points, {violations} violations; near-certain sweep: R_low={r_low:.4} R_high={r_high:.4} \
             (limit values {:.4}/{:.4}), {} mismatches outside one step, {undefined} of {} points with no \
             constructible regime{first}",
            points.len(),
            t.r_low.unwrap(),
            t.r_high.unwrap(),
            mismatches.len(),
            axis.steps
        ),
    )
}

/// Closed-form W and outcome frequencies against simulation at one point and
/// regime; returns a description of the first discrepancy.
fn mc_gate(params: &Params, regime: Regime, seed: u64, n: u64) -> Result<(), String> {
    let eq = solve(params, regime, MODE).map_err(|e| e.to_string())?;
    let closed = regime_welfare(params, regime, &eq).map_err(|e| e.to_string())?;
    let stats = simulate(
        &SimConfig {
            n_draws: n,
            seed,
            regime,
            params: *params,
        },
        &eq,
    )
    .map_err(|e| e.to_string())?;
    let se = stats.payoff.se.unwrap_or(0.0);
    if (stats.payoff.mean - closed.w).abs() > 3.0 * se {
        return Err(format!(
            "W closed {:.6} vs MC {:.6} (se {:.2e})",
            closed.w, stats.payoff.mean, se
        ));
    }
    let atoms = joint_distribution(&eq.profile, params);
    let empirical = [
        (Outcome::Success, stats.outcomes.success),
        (Outcome::Failure, stats.outcomes.failure),
        (Outcome::StatusQuo, stats.outcomes.status_quo),
    ];
    for (outcome, freq) in empirical {
        let analytic: f64 = atoms
            .iter()
            .filter(|a| a.outcome == outcome)
            .map(|a| a.probability)
            .sum();
        let se = (analytic * (1.0 - analytic) / n as f64).sqrt();
        if (freq - analytic).abs() > 3.0 * se && !(analytic == 0.0 && freq == 0.0) {
            return Err(format!(
                "{outcome:?} frequency analytic {analytic:.6} vs MC {freq:.6} (se {se:.2e})"
            ));
        }
    }
    Ok(())
}

fn criterion_6(points: &[Params]) -> Verdict {
    let n = 1_000_000;
    let regimes = [
        Regime::Benchmark,
        Regime::Nontransparent,
        Regime::Opaque,
        Regime::TransparentSeparating,
    ];
    let mut retries = Vec::new();
    let mut failures = Vec::new();
    for (i, params) in points.iter().take(50).enumerate() {
        for (k, &regime) in regimes.iter().enumerate() {
            let seed = 6_000 + 10 * i as u64 + k as u64;
            if let Err(first) = mc_gate(params, regime, seed, n) {
                let reseed = seed + 1_000_000;
                match mc_gate(params, regime, reseed, n) {
                    Ok(()) => retries.push(format!(
                        "point {i} {regime} seeds {seed}->{reseed} ({first})"
                    )),
                    Err(second) => failures.push(format!(
                        "point {i} {regime} seeds {seed},{reseed}: {first}; {second}"
                    )),
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "50 points x {} regimes at n={n}; {} passed after one reseed {:?}; {} failed {:?}",
            regimes.len(),
            retries.len(),
            retries,
            failures.len(),
            failures
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut sampler = ParamSampler::new(7_007);
    let (mut mismatches, mut banded, mut bad, mut not_bad) = (0, 0, 0, 0);
    for _ in 0..1_000 {
        let params = sampler.draw_assumption_set(MODE);
        let info = informativeness_condition(&params).unwrap();
        let profile = opaque_candidate_profile(&params).unwrap();
        let news = news_classification(&profile, &params).unwrap();
        let failure = news.event(Outcome::Failure);
        let posterior = failure.posterior.expect("failure occurs on path");
        if (posterior - params.pi).abs() <= NEUTRAL_BAND
            || (info.lhs - info.rhs).abs() <= params.eps_tol
        {
            banded += 1;
            continue;
        }
        let is_bad = failure.class == Some(NewsClass::Bad);
        if is_bad {
            bad += 1;
        } else {
            not_bad += 1;
        }
        if is_bad != info.holds {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!(
            "1000 points: failure bad news at {bad}, good news at {not_bad}, {banded} inside the neutral band; \
             {mismatches} mismatches with the informativeness condition"
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut parts = Vec::new();
    let mut all = true;

    // Rent > 2d whenever strict moderate rent, effort bound and signal
    // informativeness hold.
    let mut sampler = ParamSampler::new(8_001);
    let mut rent_failures = 0;
    for _ in 0..10_000 {
        let params = sampler
            .draw_where(usize::MAX, |p| {
                let r = check_assumptions(p).unwrap();
                r.moderate_rent_strict.pass && r.effort_bound.pass && r.signal_informative.pass
            })
            .unwrap();
        if params.rent <= 2.0 * params.d {
            rent_failures += 1;
        }
    }
    all &= rent_failures == 0;
    parts.push(format!("R > 2d {rent_failures}/10000 failures"));

    // Informativeness is preserved when (lambda, R, phi, p) all increase.
    let mut rng = ChaCha8Rng::seed_from_u64(8_002);
    let mut sampler = ParamSampler::new(8_003);
    let mut mon_failures = 0;
    for _ in 0..10_000 {
        let v = sampler
            .draw_where(usize::MAX, |p| informativeness_condition(p).unwrap().holds)
            .unwrap();
        let mut w = v;
        w.lambda += rng.gen::<f64>() * (1.0 - v.lambda);
        w.rent += rng.gen::<f64>() * RENT_MAX;
        w.phi += rng.gen::<f64>() * (1.0 - v.phi);
        w.p += rng.gen::<f64>() * (1.0 - v.p);
        if w.validate().is_err() {
            w.phi = v.phi;
        }
        if !informativeness_condition(&w).unwrap().holds {
            mon_failures += 1;
        }
    }
    all &= mon_failures == 0;
    parts.push(format!(
        "monotone informativeness {mon_failures}/10000 failures"
    ));

    // Break-even orderings for the status-quo deviation.
    let mut sampler = ParamSampler::new(8_004);
    let sq = AgentAction::status_quo();
    let mut pool_failures = 0;
    for _ in 0..1_000 {
        let params = sampler
            .draw_where(
                usize::MAX,
                |p| matches!(transparent_pooling_family(p, MODE), Ok(Some(f)) if f.low <= 1.0),
            )
            .unwrap();
        let family = transparent_pooling_family(&params, MODE).unwrap().unwrap();
        let u: f64 = rng.gen();
        let e_star = family.low + u * (family.high.min(1.0) - family.low);
        let eq = transparent_pooling_equilibrium(&params, MODE, e_star).unwrap();
        let b = divinity_breakeven(&eq, sq, &params).unwrap();
        let (cg, cb) = (
            b.breakeven(AgentType::Congruent, Signal::Good),
            b.breakeven(AgentType::Congruent, Signal::Bad),
        );
        let n = b.breakeven(AgentType::Noncongruent, Signal::Good);
        if !(cg > cb && cb > n) {
            pool_failures += 1;
        }
    }
    let mut reform_failures = 0;
    for _ in 0..1_000 {
        let params = sampler.draw_assumption_set(MODE);
        let eq = nontransparent_equilibrium(&params, MODE).unwrap();
        let b = divinity_breakeven(&eq, sq, &params).unwrap();
        for s in Signal::ALL {
            if b.breakeven(AgentType::Congruent, s) <= b.breakeven(AgentType::Noncongruent, s) {
                reform_failures += 1;
            }
        }
    }
    all &= pool_failures == 0 && reform_failures == 0;
    parts.push(format!(
        "break-even pooling {pool_failures}/1000, pooling-on-reform {reform_failures}/1000 failures"
    ));

    // Determinism: same seed, different thread counts.
    let params = sanity();
    let eq = solve(&params, Regime::Opaque, MODE).unwrap();
    let config = SimConfig {
        n_draws: 300_000,
        seed: 99,
        regime: Regime::Opaque,
        params,
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let a = simulate(&config, &eq).unwrap();
    let b = simulate(&config, &eq).unwrap();
    let c = single.install(|| simulate(&config, &eq).unwrap());
    let sim_same = serde_json::to_vec(&a).unwrap() == serde_json::to_vec(&b).unwrap()
        && serde_json::to_vec(&a).unwrap() == serde_json::to_vec(&c).unwrap();
    all &= sim_same;
    parts.push(format!("simulation bit-identical: {sim_same}"));

    // CSV bit-stability against repeated runs, a single thread and the
    // golden file.
    let spec = golden_spec();
    let first = run_sweep(&spec).unwrap();
    let second = run_sweep(&spec).unwrap();
    let third = single.install(|| run_sweep(&spec).unwrap());
    let golden = std::fs::read_to_string(golden_path()).unwrap_or_default();
    let csv_same = first == second && first == third && first == golden;
    all &= csv_same;
    parts.push(format!(
        "CSV byte-identical (runs, 1 thread, golden file): {csv_same}"
    ));

    verdict(all, parts.join("; "))
}

fn golden_spec() -> SweepSpec {
    SweepSpec {
        base: sanity(),
        axes: vec![
            Axis {
                param: ParamName::Phi,
                min: 0.6,
                max: 0.9,
                steps: 7,
            },
            Axis {
                param: ParamName::Rent,
                min: 0.15,
                max: 0.35,
                steps: 5,
            },
        ],
        outputs: vec![
            SweepOutput::Welfare,
            SweepOutput::OptimalRegime,
            SweepOutput::Assumptions,
            SweepOutput::Thresholds,
        ],
        rent_mode: MODE,
    }
}

fn golden_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden_sweep.csv")
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let wanted = |n: u32| args.is_empty() || args.iter().any(|a| a == &n.to_string());

    if std::env::var_os("REFORMLAB_WRITE_GOLDEN").is_some() {
        std::fs::write(golden_path(), run_sweep(&golden_spec()).unwrap()).unwrap();
    }

    let names = [
        "sanity-check regression",
        "threshold inequality chain",
        "threshold regression and monotonicity",
        "no-profitable-deviation suite",
        "welfare ranking and rent-threshold switch",
        "closed form vs Monte Carlo",
        "news classification vs informativeness",
        "property suites, determinism, CSV stability",
    ];
    let needs_points = [4, 5, 6].iter().any(|&n| wanted(n));
    let points = if needs_points {
        shared_points()
    } else {
        Vec::new()
    };

    let mut failed = 0;
    for (idx, name) in names.iter().enumerate() {
        let n = idx as u32 + 1;
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let v = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(&points),
            5 => criterion_5(&points),
            6 => criterion_6(&points),
            7 => criterion_7(),
            _ => criterion_8(),
        };
        if !v.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {n}: {name} ({:.1}s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
