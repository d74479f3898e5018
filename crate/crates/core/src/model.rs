//! Posteriors, parameter-assumption checks and the informativeness condition.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{ParamName, Params};

/// Beliefs about the state after each signal, plus the odds reparameterization
/// `gamma = (1 - p) / p`, `z = (1 - phi) / phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posteriors {
    /// P(good state | good signal).
    pub mu_plus: f64,
    /// P(good state | bad signal).
    pub mu_minus: f64,
    pub gamma: f64,
    pub z: f64,
}

impl Posteriors {
    /// Belief about the state after the given signal.
    pub fn after(&self, signal: crate::Signal) -> f64 {
        match signal {
            crate::Signal::Good => self.mu_plus,
            crate::Signal::Bad => self.mu_minus,
        }
    }
}

pub fn posteriors(params: &Params) -> Result<Posteriors> {
    params.validate()?;
    Ok(posteriors_unchecked(params.p, params.phi))
}

pub(crate) fn posteriors_unchecked(p: f64, phi: f64) -> Posteriors {
    let good = phi * p;
    let mu_plus = good / (good + (1.0 - phi) * (1.0 - p));
    let bad = phi * (1.0 - p);
    let mu_minus = bad / (bad + (1.0 - phi) * p);
    Posteriors {
        mu_plus,
        mu_minus,
        gamma: (1.0 - p) / p,
        z: (1.0 - phi) / phi,
    }
}

/// Probability of a good signal, phi p + (1 - phi)(1 - p).
pub fn prob_good_signal(params: &Params) -> f64 {
    params.phi * params.p + (1.0 - params.phi) * (1.0 - params.p)
}

/// Which reading of the moderate-rent assumption gates equilibrium construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RentMode {
    /// `min{(1+R) mu-, R mu+} > sqrt(2d/lambda) > R mu-`.
    Strict,
    /// `max{(1+R) mu-, R mu+} > sqrt(2d/lambda) > R mu-`; the only form the
    /// worked numeric example satisfies.
    #[default]
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionCheck {
    SignalInformative,
    ModerateRentStrict,
    ModerateRentRelaxed,
    EffortBound,
    Informativeness,
    RentExceeds2d,
}

impl std::fmt::Display for AssumptionCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AssumptionCheck::SignalInformative => "signal_informative",
            AssumptionCheck::ModerateRentStrict => "moderate_rent_strict",
            AssumptionCheck::ModerateRentRelaxed => "moderate_rent_relaxed",
            AssumptionCheck::EffortBound => "effort_bound",
            AssumptionCheck::Informativeness => "informativeness",
            AssumptionCheck::RentExceeds2d => "rent_exceeds_2d",
        };
        f.write_str(s)
    }
}

/// A single check with signed margins; every margin is positive when the
/// corresponding inequality holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub pass: bool,
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Informativeness {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `sqrt(2d / lambda)`, the bar every posterior check compares against.
    pub threshold: f64,
    pub posteriors: Posteriors,
    pub signal_informative: CheckResult,
    pub moderate_rent_strict: CheckResult,
    pub moderate_rent_relaxed: CheckResult,
    pub effort_bound: CheckResult,
    pub informativeness: Informativeness,
    pub rent_exceeds_2d: CheckResult,
}

impl AssumptionReport {
    pub fn moderate_rent(&self, mode: RentMode) -> &CheckResult {
        match mode {
            RentMode::Strict => &self.moderate_rent_strict,
            RentMode::Relaxed => &self.moderate_rent_relaxed,
        }
    }

    /// The assumption set every equilibrium constructor relies on.
    pub fn base_set_holds(&self, mode: RentMode) -> bool {
        self.signal_informative.pass && self.moderate_rent(mode).pass && self.effort_bound.pass
    }

    /// First failing check of the base set, in a fixed order.
    pub fn first_failure(&self, mode: RentMode) -> Option<(AssumptionCheck, &CheckResult)> {
        let rent_check = match mode {
            RentMode::Strict => AssumptionCheck::ModerateRentStrict,
            RentMode::Relaxed => AssumptionCheck::ModerateRentRelaxed,
        };
        [
            (AssumptionCheck::SignalInformative, &self.signal_informative),
            (rent_check, self.moderate_rent(mode)),
            (AssumptionCheck::EffortBound, &self.effort_bound),
        ]
        .into_iter()
        .find(|(_, c)| !c.pass)
    }
}

fn two_sided(params: &Params, upper: f64, mid: f64, lower: f64) -> CheckResult {
    CheckResult {
        pass: params.gt(upper, mid) && params.gt(mid, lower),
        margins: vec![upper - mid, mid - lower],
    }
}

pub fn check_assumptions(params: &Params) -> Result<AssumptionReport> {
    let post = posteriors(params)?;
    let Params {
        lambda, rent, d, ..
    } = *params;
    let threshold = (2.0 * d / lambda).sqrt();

    let signal_informative = two_sided(params, post.mu_plus, threshold, post.mu_minus);
    let a = (1.0 + rent) * post.mu_minus;
    let b = rent * post.mu_plus;
    let moderate_rent_strict = two_sided(params, a.min(b), threshold, rent * post.mu_minus);
    let moderate_rent_relaxed = two_sided(params, a.max(b), threshold, rent * post.mu_minus);

    let slack = 1.0 - lambda * (1.0 + rent);
    let effort_bound = CheckResult {
        pass: slack >= -params.eps_tol,
        margins: vec![slack],
    };
    let rent_exceeds_2d = CheckResult {
        pass: params.gt(rent, 2.0 * d),
        margins: vec![rent - 2.0 * d],
    };

    Ok(AssumptionReport {
        threshold,
        posteriors: post,
        signal_informative,
        moderate_rent_strict,
        moderate_rent_relaxed,
        effort_bound,
        informativeness: informativeness_condition(params)?,
        rent_exceeds_2d,
    })
}

/// Fails with the first violated check of the base assumption set.
pub fn require_assumptions(params: &Params, mode: RentMode) -> Result<AssumptionReport> {
    let report = check_assumptions(params)?;
    if let Some((check, result)) = report.first_failure(mode) {
        return Err(ModelError::AssumptionViolated {
            check,
            detail: format!("margins {:?}", result.margins),
        });
    }
    Ok(report)
}

pub fn informativeness_condition(params: &Params) -> Result<Informativeness> {
    params.validate()?;
    Ok(informativeness_at(params, params.p))
}

/// `z - lambda / (1 + gamma z) <= gamma [lambda (1+R) gamma / (gamma + z) - 1]`
/// evaluated at signal accuracy `p`, other parameters fixed.
fn informativeness_at(params: &Params, p: f64) -> Informativeness {
    let gamma = (1.0 - p) / p;
    let z = (1.0 - params.phi) / params.phi;
    let lhs = z - params.lambda / (1.0 + gamma * z);
    let rhs = gamma * (params.lambda * (1.0 + params.rent) * gamma / (gamma + z) - 1.0);
    Informativeness {
        holds: params.le(lhs, rhs),
        lhs,
        rhs,
    }
}

const P_BAR_SCAN: usize = 2000;
const P_BAR_TOL: f64 = 1e-9;

/// Smallest signal accuracy above which the informativeness condition holds
/// at every sampled accuracy, when `z < lambda`.
///
/// A top-down scan locates the highest failing grid point; bisection then
/// refines the crossing between it and its holding neighbour. If the
/// condition already holds across the whole scan, returns `1/2`.
pub fn find_p_bar(params: &Params) -> Result<Option<f64>> {
    params.validate()?;
    let z = (1.0 - params.phi) / params.phi;
    if z >= params.lambda {
        return Ok(None);
    }
    let holds = |p: f64| informativeness_at(params, p).holds;
    let step = 0.5 / P_BAR_SCAN as f64;
    let mut highest_fail = None;
    for i in (0..=P_BAR_SCAN).rev() {
        let p = 0.5 + step * i as f64;
        if !holds(p) {
            highest_fail = Some(p);
            break;
        }
    }
    let Some(mut lo) = highest_fail else {
        return Ok(Some(0.5));
    };
    if lo >= 1.0 {
        // z < lambda makes the condition hold at p = 1; only the tolerance band can upset that.
        return Ok(None);
    }
    let mut hi = (lo + step).min(1.0);
    while hi - lo > P_BAR_TOL {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Informativeness evaluated with `p` replaced, for p-sweeps.
pub fn informativeness_with_p(params: &Params, p: f64) -> Result<Informativeness> {
    let bumped = params.with(ParamName::P, p)?;
    Ok(informativeness_at(&bumped, p))
}
