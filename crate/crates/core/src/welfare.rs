//! Principal welfare per regime, regime selection, rent thresholds and
//! comparative statics.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    solve, AgentType, Equilibrium, Outcome, Policy, Regime, Retention, Signal,
};
use crate::error::{ModelError, Result};
use crate::model::{posteriors, prob_good_signal, RentMode};
use crate::params::{ParamName, Params};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeWelfare {
    pub regime: Regime,
    /// Expected policy payoff.
    pub w: f64,
    /// Expected congruence of tomorrow's office-holder.
    pub q: f64,
    /// `w + M q`.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub regime: Regime,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub entries: Vec<RegimeWelfare>,
    pub excluded: Vec<Exclusion>,
    pub optimal: Option<Regime>,
    /// Optimal total minus the runner-up total.
    pub margin: Option<f64>,
}

impl WelfareReport {
    pub fn get(&self, regime: Regime) -> Option<&RegimeWelfare> {
        self.entries.iter().find(|e| e.regime == regime)
    }

    /// CSV with columns `regime,W,Q,total,optimal_flag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("regime,W,Q,total,optimal_flag\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.regime,
                e.w,
                e.q,
                e.total,
                u8::from(self.optimal == Some(e.regime))
            ));
        }
        for x in &self.excluded {
            out.push_str(&format!("{},NA,NA,NA,0\n", x.regime));
        }
        out
    }
}

fn signal_prob(params: &Params, signal: Signal) -> f64 {
    let g = prob_good_signal(params);
    match signal {
        Signal::Good => g,
        Signal::Bad => 1.0 - g,
    }
}

/// Closed-form expected policy payoff and selection term of an equilibrium.
pub fn regime_welfare(params: &Params, regime: Regime, eq: &Equilibrium) -> Result<RegimeWelfare> {
    if eq.regime != regime {
        return Err(ModelError::RegimeMismatch {
            expected: regime,
            found: eq.regime,
        });
    }
    let post = posteriors(params)?;
    let mut w = 0.0;
    let mut q = 0.0;
    for (agent, signal, action) in eq.profile.iter() {
        let weight = agent.prior(params) * signal_prob(params, signal);
        let mu = post.after(signal);
        w += weight
            * match action.policy {
                Policy::Reform => action.effort * mu,
                Policy::StatusQuo => params.d,
            };
        if eq.accountable() {
            let outcomes = match action.policy {
                Policy::Reform => {
                    let s = action.effort * mu;
                    vec![(Outcome::Success, s), (Outcome::Failure, 1.0 - s)]
                }
                Policy::StatusQuo => vec![(Outcome::StatusQuo, 1.0)],
            };
            for (outcome, prob) in outcomes {
                if prob <= 0.0 {
                    continue;
                }
                let rule = eq.resolve(&eq.observe(action, outcome))?;
                let next = match rule.decision {
                    Retention::Retain => rule.belief,
                    Retention::Remove => params.pi,
                };
                q += weight * prob * next;
            }
        }
    }
    if !eq.accountable() {
        q = params.pi;
    }
    Ok(RegimeWelfare {
        regime,
        w,
        q,
        total: w + params.selection_weight * q,
    })
}

/// Welfare table over the compared regimes; regimes whose equilibrium
/// cannot be built at `params` are excluded and noted.
pub fn optimal_regime(params: &Params, rent: RentMode) -> Result<WelfareReport> {
    params.validate()?;
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    for regime in Regime::COMPARED {
        match solve(params, regime, rent) {
            Ok(eq) => entries.push(regime_welfare(params, regime, &eq)?),
            Err(e) if e.is_precondition() => excluded.push(Exclusion {
                regime,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    // Preference order on exact ties: opaque, transparent, nontransparent.
    let mut ranked: Vec<&RegimeWelfare> = entries.iter().collect();
    ranked.sort_by(|a, b| {
        b.total
            .total_cmp(&a.total)
            .then_with(|| tie_rank(a.regime).cmp(&tie_rank(b.regime)))
    });
    let optimal = ranked.first().map(|e| e.regime);
    let margin = match ranked.as_slice() {
        [first, second, ..] => Some(first.total - second.total),
        _ => None,
    };
    Ok(WelfareReport {
        entries,
        excluded,
        optimal,
        margin,
    })
}

fn tie_rank(regime: Regime) -> u8 {
    match regime {
        Regime::Opaque => 0,
        Regime::TransparentSeparating => 1,
        _ => 2,
    }
}

/// Rent thresholds between which full transparency elicits more effort in
/// the near-certain, near-congruent limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `lambda mu+^2`.
    pub lambda_hat: f64,
    pub d: f64,
    /// Whether `H(R) = lambda_hat (1+R)^2 - 2(R - d)` has real roots.
    pub exists: bool,
    pub r_low: Option<f64>,
    pub r_high: Option<f64>,
}

impl Thresholds {
    pub fn from_lambda_hat(lambda_hat: f64, d: f64) -> Self {
        let disc = 1.0 - 2.0 * (1.0 + d) * lambda_hat;
        let exists = disc >= 0.0;
        let (r_low, r_high) = if exists {
            let high = (1.0 - lambda_hat + disc.sqrt()) / lambda_hat;
            // product of roots is (lambda_hat + 2d) / lambda_hat; avoids cancellation
            let low = (lambda_hat + 2.0 * d) / (lambda_hat * high);
            (Some(low), Some(high))
        } else {
            (None, None)
        };
        Thresholds {
            lambda_hat,
            d,
            exists,
            r_low,
            r_high,
        }
    }

    pub fn h(&self, rent: f64) -> f64 {
        h_value(self.lambda_hat, self.d, rent)
    }
}

fn h_value(lambda_hat: f64, d: f64, rent: f64) -> f64 {
    lambda_hat * (1.0 + rent).powi(2) - 2.0 * (rent - d)
}

pub fn thresholds(params: &Params) -> Result<Thresholds> {
    let post = posteriors(params)?;
    Ok(Thresholds::from_lambda_hat(
        params.lambda * post.mu_plus * post.mu_plus,
        params.d,
    ))
}

/// Roots of `H` by bisection on either side of its minimizer `1/lambda_hat - 1`.
pub fn threshold_roots_bisection(lambda_hat: f64, d: f64) -> Option<(f64, f64)> {
    let h = |r: f64| h_value(lambda_hat, d, r);
    let vertex = 1.0 / lambda_hat - 1.0;
    if h(vertex) > 0.0 {
        return None;
    }
    let bisect = |mut pos: f64, mut neg: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (pos + neg);
            if h(mid) > 0.0 {
                pos = mid;
            } else {
                neg = mid;
            }
            if (pos - neg).abs() < 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (pos + neg)
    };
    let mut far = vertex + 1.0;
    while h(far) <= 0.0 {
        far = vertex + 2.0 * (far - vertex);
    }
    // H(-1) = 2(1 + d) > 0 bounds the lower root from the left.
    Some((bisect(-1.0, vertex), bisect(far, vertex)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeDelta {
    pub regime: Regime,
    pub base_total: f64,
    pub bumped_total: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparativeStatics {
    pub parameter: ParamName,
    pub delta: f64,
    pub base: WelfareReport,
    pub bumped: WelfareReport,
    pub deltas: Vec<RegimeDelta>,
    pub persisted: bool,
}

/// Re-solves the welfare table after `which += delta` and reports how each
/// regime's welfare and the optimal regime respond.
pub fn comparative_statics(
    params: &Params,
    which: ParamName,
    delta: f64,
    rent: RentMode,
) -> Result<ComparativeStatics> {
    if !matches!(
        which,
        ParamName::Phi | ParamName::Lambda | ParamName::P | ParamName::Rent
    ) {
        return Err(ModelError::InvalidSweep(format!(
            "comparative statics are defined for phi, lambda, p and R, not {which}"
        )));
    }
    let bumped_params = params.with(which, params.get(which) + delta)?;
    let base = optimal_regime(params, rent)?;
    let bumped = optimal_regime(&bumped_params, rent)?;
    for entry in &base.entries {
        if bumped.get(entry.regime).is_none() {
            let source = solve(&bumped_params, entry.regime, rent)
                .expect_err("regime was excluded at the bumped point");
            return Err(ModelError::PreconditionLost {
                parameter: which_name(which),
                regime: entry.regime,
                source: Box::new(source),
            });
        }
    }
    let deltas = base
        .entries
        .iter()
        .map(|b| {
            let after = bumped.get(b.regime).expect("checked above").total;
            RegimeDelta {
                regime: b.regime,
                base_total: b.total,
                bumped_total: after,
                delta: after - b.total,
            }
        })
        .collect();
    let persisted = base.optimal == bumped.optimal;
    Ok(ComparativeStatics {
        parameter: which,
        delta,
        base,
        bumped,
        deltas,
        persisted,
    })
}

fn which_name(which: ParamName) -> &'static str {
    which.as_str()
}

/// Congruent effort after a good signal in the opaque and the transparent
/// separating regimes; the quantities the limit welfare comparison turns on.
pub fn good_signal_efforts(params: &Params) -> Result<(f64, f64)> {
    let post = posteriors(params)?;
    let opaque = params.lambda * (1.0 + params.rent) * post.mu_plus;
    let (e_high, _) = crate::equilibrium::separating_efforts(params)?;
    Ok((opaque, e_high))
}

/// The type and signal weights used by the closed forms, exposed for oracles.
pub fn cell_weight(params: &Params, agent: AgentType, signal: Signal) -> f64 {
    agent.prior(params) * signal_prob(params, signal)
}
