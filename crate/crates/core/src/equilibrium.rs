//! Equilibrium objects for each information regime: strategy profiles,
//! belief systems over observables, and the retention rules they induce.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{ModelError, Result};
use crate::model::{self, require_assumptions, Posteriors, RentMode};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Congruent,
    Noncongruent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Good,
    Bad,
}

impl AgentType {
    pub const ALL: [AgentType; 2] = [AgentType::Congruent, AgentType::Noncongruent];

    fn index(self) -> usize {
        self as usize
    }

    pub fn prior(self, params: &Params) -> f64 {
        match self {
            AgentType::Congruent => params.pi,
            AgentType::Noncongruent => 1.0 - params.pi,
        }
    }
}

impl Signal {
    pub const ALL: [Signal; 2] = [Signal::Good, Signal::Bad];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AgentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentType::Congruent => "c",
            AgentType::Noncongruent => "n",
        })
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signal::Good => "g",
            Signal::Bad => "b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Reform,
    StatusQuo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    pub policy: Policy,
    pub effort: f64,
}

impl AgentAction {
    pub fn reform(effort: f64) -> Self {
        AgentAction {
            policy: Policy::Reform,
            effort,
        }
    }

    pub fn status_quo() -> Self {
        AgentAction {
            policy: Policy::StatusQuo,
            effort: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.effort) {
            return Err(ModelError::InvalidAction(format!(
                "effort {} outside [0, 1]",
                self.effort
            )));
        }
        if self.policy == Policy::StatusQuo && self.effort != 0.0 {
            return Err(ModelError::InvalidAction(
                "status quo carries no effort".into(),
            ));
        }
        Ok(())
    }

    pub fn is_reform(&self) -> bool {
        self.policy == Policy::Reform
    }
}

impl fmt::Display for AgentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.policy {
            Policy::Reform => write!(f, "reform(e={:.6})", self.effort),
            Policy::StatusQuo => f.write_str("status_quo"),
        }
    }
}

/// A pure strategy for every (type, signal) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyProfile {
    cells: [[AgentAction; 2]; 2],
}

#[derive(Serialize)]
struct ProfileCell {
    agent_type: AgentType,
    signal: Signal,
    policy: Policy,
    effort: f64,
}

impl StrategyProfile {
    pub fn new(
        congruent_good: AgentAction,
        congruent_bad: AgentAction,
        noncongruent_good: AgentAction,
        noncongruent_bad: AgentAction,
    ) -> Result<Self> {
        let profile = StrategyProfile {
            cells: [
                [congruent_good, congruent_bad],
                [noncongruent_good, noncongruent_bad],
            ],
        };
        for (_, _, action) in profile.iter() {
            action.validate()?;
        }
        Ok(profile)
    }

    pub fn action(&self, agent: AgentType, signal: Signal) -> AgentAction {
        self.cells[agent.index()][signal.index()]
    }

    pub fn set(&mut self, agent: AgentType, signal: Signal, action: AgentAction) -> Result<()> {
        action.validate()?;
        self.cells[agent.index()][signal.index()] = action;
        Ok(())
    }

    /// Cells in the order (c,g), (c,b), (n,g), (n,b).
    pub fn iter(&self) -> impl Iterator<Item = (AgentType, Signal, AgentAction)> + '_ {
        AgentType::ALL.into_iter().flat_map(move |t| {
            Signal::ALL
                .into_iter()
                .map(move |s| (t, s, self.action(t, s)))
        })
    }
}

impl Serialize for StrategyProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let cells: Vec<ProfileCell> = self
            .iter()
            .map(|(agent_type, signal, a)| ProfileCell {
                agent_type,
                signal,
                policy: a.policy,
                effort: a.effort,
            })
            .collect();
        cells.serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    StatusQuo,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Success, Outcome::Failure, Outcome::StatusQuo];
}

/// What the principal sees of the agent's play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Policy,
    PolicyOutcome,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Benchmark,
    Nontransparent,
    Opaque,
    TransparentSeparating,
    TransparentPooling,
}

impl Regime {
    /// The regimes compared in welfare analysis.
    pub const COMPARED: [Regime; 3] = [
        Regime::Nontransparent,
        Regime::Opaque,
        Regime::TransparentSeparating,
    ];

    pub fn visibility(self) -> Visibility {
        match self {
            Regime::Benchmark | Regime::Nontransparent => Visibility::Policy,
            Regime::Opaque => Visibility::PolicyOutcome,
            Regime::TransparentSeparating | Regime::TransparentPooling => Visibility::Full,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Benchmark => "benchmark",
            Regime::Nontransparent => "nontransparent",
            Regime::Opaque => "opaque",
            Regime::TransparentSeparating => "transparent_separating",
            Regime::TransparentPooling => "transparent_pooling",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "benchmark" => Regime::Benchmark,
            "nontransparent" => Regime::Nontransparent,
            "opaque" => Regime::Opaque,
            "transparent" | "transparent_separating" => Regime::TransparentSeparating,
            "transparent_pooling" => Regime::TransparentPooling,
            _ => return None,
        })
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The principal's view of one play of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub policy: Policy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effort: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

impl Observation {
    pub fn observe(visibility: Visibility, action: AgentAction, outcome: Outcome) -> Self {
        Observation {
            policy: action.policy,
            effort: (visibility == Visibility::Full).then_some(action.effort),
            outcome: (visibility != Visibility::Policy).then_some(outcome),
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let policy = match self.policy {
            Policy::Reform => "r",
            Policy::StatusQuo => "q",
        };
        write!(f, "({policy}")?;
        if let Some(e) = self.effort {
            write!(f, ", e={e}")?;
        }
        if let Some(o) = self.outcome {
            write!(f, ", {o:?}")?;
        }
        f.write_str(")")
    }
}

/// A set of observations sharing one belief and retention decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationPattern {
    StatusQuo,
    /// Any reform, effort and outcome ignored.
    Reform,
    ReformOutcome {
        outcome: Outcome,
    },
    ReformEffortEq {
        effort: f64,
    },
    ReformEffortAtLeast {
        effort: f64,
    },
    ReformEffortAbove {
        effort: f64,
    },
    ReformEffortBelow {
        effort: f64,
    },
}

impl ObservationPattern {
    pub fn matches(&self, obs: &Observation, tol: f64) -> bool {
        if let ObservationPattern::StatusQuo = self {
            return obs.policy == Policy::StatusQuo;
        }
        if obs.policy != Policy::Reform {
            return false;
        }
        let effort = || obs.effort;
        match *self {
            ObservationPattern::StatusQuo => unreachable!(),
            ObservationPattern::Reform => true,
            ObservationPattern::ReformOutcome { outcome } => obs.outcome == Some(outcome),
            ObservationPattern::ReformEffortEq { effort: e } => {
                effort().is_some_and(|x| (x - e).abs() <= tol)
            }
            ObservationPattern::ReformEffortAtLeast { effort: e } => {
                effort().is_some_and(|x| x >= e - tol)
            }
            ObservationPattern::ReformEffortAbove { effort: e } => {
                effort().is_some_and(|x| x > e + tol)
            }
            ObservationPattern::ReformEffortBelow { effort: e } => {
                effort().is_some_and(|x| x < e - tol)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    Retain,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeliefRule {
    pub pattern: ObservationPattern,
    /// Posterior probability that the agent is congruent.
    pub belief: f64,
    pub decision: Retention,
}

/// Retain iff the posterior is at least the prior; ties go to the agent.
pub fn retention_for(belief: f64, params: &Params) -> Retention {
    if belief >= params.pi - params.eps_tol {
        Retention::Retain
    } else {
        Retention::Remove
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub regime: Regime,
    pub profile: StrategyProfile,
    /// Ordered; the first matching rule resolves an observation.
    pub rules: Vec<BeliefRule>,
    pub pooling_effort: Option<f64>,
    pub(crate) effort_tol: f64,
}

impl Equilibrium {
    fn new(
        regime: Regime,
        profile: StrategyProfile,
        beliefs: &[(ObservationPattern, f64)],
        params: &Params,
    ) -> Self {
        let rules = beliefs
            .iter()
            .map(|&(pattern, belief)| BeliefRule {
                pattern,
                belief,
                decision: retention_for(belief, params),
            })
            .collect();
        Equilibrium {
            regime,
            profile,
            rules,
            pooling_effort: None,
            effort_tol: params.eps_tol,
        }
    }

    /// Whether a retention stage exists at all.
    pub fn accountable(&self) -> bool {
        self.regime != Regime::Benchmark
    }

    pub fn visibility(&self) -> Visibility {
        self.regime.visibility()
    }

    pub fn observe(&self, action: AgentAction, outcome: Outcome) -> Observation {
        Observation::observe(self.visibility(), action, outcome)
    }

    pub fn resolve(&self, obs: &Observation) -> Result<&BeliefRule> {
        self.rules
            .iter()
            .find(|r| r.pattern.matches(obs, self.effort_tol))
            .ok_or_else(|| ModelError::UnresolvableObservation(obs.to_string()))
    }

    /// Probability of keeping office after `obs`; zero when nothing is at stake.
    pub fn retention_prob(&self, obs: &Observation) -> Result<f64> {
        if !self.accountable() {
            return Ok(0.0);
        }
        Ok(match self.resolve(obs)?.decision {
            Retention::Retain => 1.0,
            Retention::Remove => 0.0,
        })
    }

    pub fn belief(&self, obs: &Observation) -> Result<f64> {
        Ok(self.resolve(obs)?.belief)
    }
}

#[derive(Serialize)]
struct RetentionEntry {
    pattern: ObservationPattern,
    decision: Retention,
}

#[derive(Serialize)]
struct BeliefEntry {
    pattern: ObservationPattern,
    probability: f64,
}

impl Serialize for Equilibrium {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let retention: Vec<_> = self
            .rules
            .iter()
            .map(|r| RetentionEntry {
                pattern: r.pattern,
                decision: r.decision,
            })
            .collect();
        let beliefs: Vec<_> = self
            .rules
            .iter()
            .map(|r| BeliefEntry {
                pattern: r.pattern,
                probability: r.belief,
            })
            .collect();
        let mut s = serializer.serialize_struct("Equilibrium", 5)?;
        s.serialize_field("regime", &self.regime)?;
        s.serialize_field("profile", &self.profile)?;
        s.serialize_field("retention", &retention)?;
        s.serialize_field("beliefs", &beliefs)?;
        s.serialize_field("pooling_effort", &self.pooling_effort)?;
        s.end()
    }
}

/// Maximizer of `mu * e * reward_weight - e^2 / (2 lambda)` on [0, 1].
pub fn interior_effort(mu: f64, reward_weight: f64, params: &Params) -> f64 {
    (params.lambda * reward_weight * mu).clamp(0.0, 1.0)
}

fn gate(params: &Params, rent: RentMode) -> Result<Posteriors> {
    Ok(require_assumptions(params, rent)?.posteriors)
}

/// No retention stage: only a congruent agent with a good signal reforms.
pub fn benchmark_profile(params: &Params, rent: RentMode) -> Result<Equilibrium> {
    let post = gate(params, rent)?;
    let profile = StrategyProfile::new(
        AgentAction::reform(interior_effort(post.mu_plus, 1.0, params)),
        AgentAction::status_quo(),
        AgentAction::status_quo(),
        AgentAction::status_quo(),
    )?;
    Ok(Equilibrium::new(Regime::Benchmark, profile, &[], params))
}

/// Policy-only observability: both types pool on reform.
pub fn nontransparent_equilibrium(params: &Params, rent: RentMode) -> Result<Equilibrium> {
    let post = gate(params, rent)?;
    let profile = StrategyProfile::new(
        AgentAction::reform(interior_effort(post.mu_plus, 1.0, params)),
        AgentAction::reform(interior_effort(post.mu_minus, 1.0, params)),
        AgentAction::reform(0.0),
        AgentAction::reform(0.0),
    )?;
    Ok(Equilibrium::new(
        Regime::Nontransparent,
        profile,
        &[
            (ObservationPattern::Reform, params.pi),
            // off path: whoever keeps the status quo is noncongruent
            (ObservationPattern::StatusQuo, 0.0),
        ],
        params,
    ))
}

/// The only signal-responsive profile that can support outcome-pivotal
/// retention, built without checking any precondition.
pub fn opaque_candidate_profile(params: &Params) -> Result<StrategyProfile> {
    let post = model::posteriors(params)?;
    let weight = 1.0 + params.rent;
    StrategyProfile::new(
        AgentAction::reform(interior_effort(post.mu_plus, weight, params)),
        AgentAction::reform(interior_effort(post.mu_minus, weight, params)),
        AgentAction::reform(interior_effort(post.mu_plus, params.rent, params)),
        AgentAction::status_quo(),
    )
}

/// P(congruent | success) and P(congruent | failure) under the opaque
/// candidate profile, from the closed-form joint probabilities.
pub fn opaque_outcome_beliefs(params: &Params) -> Result<(f64, f64)> {
    let post = model::posteriors(params)?;
    let Params {
        p,
        phi,
        pi,
        lambda,
        rent,
        ..
    } = *params;
    let success_c = phi * lambda * (1.0 + rent) * (p * post.mu_plus + (1.0 - p) * post.mu_minus);
    let success_n = phi * p * lambda * rent * post.mu_plus;
    let fail_c = 1.0 - success_c;
    let fail_n = phi * p * (1.0 - lambda * rent * post.mu_plus) + (1.0 - phi) * (1.0 - p);
    let success = pi * success_c / (pi * success_c + (1.0 - pi) * success_n);
    let failure = pi * fail_c / (pi * fail_c + (1.0 - pi) * fail_n);
    Ok((success, failure))
}

/// Policy and outcome observable: retention only after a successful reform.
pub fn opaque_equilibrium(params: &Params, rent: RentMode) -> Result<Equilibrium> {
    gate(params, rent)?;
    let info = model::informativeness_condition(params)?;
    if !info.holds {
        return Err(ModelError::InformativenessViolated {
            lhs: info.lhs,
            rhs: info.rhs,
        });
    }
    let profile = opaque_candidate_profile(params)?;
    let (success, failure) = opaque_outcome_beliefs(params)?;
    Ok(Equilibrium::new(
        Regime::Opaque,
        profile,
        &[
            (
                ObservationPattern::ReformOutcome {
                    outcome: Outcome::Success,
                },
                success,
            ),
            (
                ObservationPattern::ReformOutcome {
                    outcome: Outcome::Failure,
                },
                failure,
            ),
            (ObservationPattern::StatusQuo, 0.0),
        ],
        params,
    ))
}

/// Effort at which a noncongruent mimic is exactly indifferent to the status
/// quo, `sqrt(2 lambda (R - d))` (zero when `R <= d`).
pub fn mimic_bar(params: &Params) -> f64 {
    (2.0 * params.lambda * (params.rent - params.d))
        .max(0.0)
        .sqrt()
}

/// Separating efforts `(e_H, e_L)` of the least-cost separating outcome.
pub fn separating_efforts(params: &Params) -> Result<(f64, f64)> {
    let post = model::posteriors(params)?;
    let bar = mimic_bar(params);
    Ok((
        bar.max(params.lambda * post.mu_plus),
        bar.max(params.lambda * post.mu_minus),
    ))
}

/// Full observability: the least-cost separating outcome.
pub fn transparent_separating_equilibrium(params: &Params, rent: RentMode) -> Result<Equilibrium> {
    gate(params, rent)?;
    let (e_high, e_low) = separating_efforts(params)?;
    if e_high > 1.0 {
        return Err(ModelError::SeparationInfeasible { effort: e_high });
    }
    let profile = StrategyProfile::new(
        AgentAction::reform(e_high),
        AgentAction::reform(e_low),
        AgentAction::status_quo(),
        AgentAction::status_quo(),
    )?;
    Ok(Equilibrium::new(
        Regime::TransparentSeparating,
        profile,
        &[
            (ObservationPattern::ReformEffortEq { effort: e_low }, 1.0),
            (
                ObservationPattern::ReformEffortAtLeast { effort: e_high },
                1.0,
            ),
            (ObservationPattern::Reform, 0.0),
            (ObservationPattern::StatusQuo, 0.0),
        ],
        params,
    ))
}

/// Closed interval of pooling efforts that survive refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingInterval {
    pub low: f64,
    pub high: f64,
}

impl PoolingInterval {
    pub fn contains(&self, e: f64, tol: f64) -> bool {
        e >= self.low - tol && e <= self.high + tol
    }
}

/// `[lambda mu+, sqrt(2 lambda (R - d))]` when `lambda mu+^2 < 2(R - d)`.
pub fn transparent_pooling_family(
    params: &Params,
    rent: RentMode,
) -> Result<Option<PoolingInterval>> {
    let post = gate(params, rent)?;
    let lambda_hat = params.lambda * post.mu_plus * post.mu_plus;
    let slack = 2.0 * (params.rent - params.d);
    if !params.gt(slack, lambda_hat) {
        return Ok(None);
    }
    Ok(Some(PoolingInterval {
        low: params.lambda * post.mu_plus,
        high: mimic_bar(params),
    }))
}

/// The pooling equilibrium in which every type reforms with effort `e_star`.
pub fn transparent_pooling_equilibrium(
    params: &Params,
    rent: RentMode,
    e_star: f64,
) -> Result<Equilibrium> {
    let interval = transparent_pooling_family(params, rent)?.ok_or_else(|| {
        ModelError::InvalidAction("no pooling equilibrium exists at these parameters".into())
    })?;
    if !interval.contains(e_star, params.eps_tol) || e_star > 1.0 {
        return Err(ModelError::InvalidAction(format!(
            "pooling effort {e_star} outside [{}, {}]",
            interval.low, interval.high
        )));
    }
    let pooled = AgentAction::reform(e_star);
    let profile = StrategyProfile::new(pooled, pooled, pooled, pooled)?;
    let mut eq = Equilibrium::new(
        Regime::TransparentPooling,
        profile,
        &[
            (
                ObservationPattern::ReformEffortEq { effort: e_star },
                params.pi,
            ),
            (
                ObservationPattern::ReformEffortAbove { effort: e_star },
                1.0,
            ),
            (ObservationPattern::Reform, 0.0),
            (ObservationPattern::StatusQuo, 0.0),
        ],
        params,
    );
    eq.pooling_effort = Some(e_star);
    Ok(eq)
}

/// Builds the equilibrium for a regime with default choices (pooling at
/// the lower end of its interval).
pub fn solve(params: &Params, regime: Regime, rent: RentMode) -> Result<Equilibrium> {
    match regime {
        Regime::Benchmark => benchmark_profile(params, rent),
        Regime::Nontransparent => nontransparent_equilibrium(params, rent),
        Regime::Opaque => opaque_equilibrium(params, rent),
        Regime::TransparentSeparating => transparent_separating_equilibrium(params, rent),
        Regime::TransparentPooling => {
            let interval = transparent_pooling_family(params, rent)?.ok_or_else(|| {
                ModelError::AssumptionViolated {
                    check: model::AssumptionCheck::RentExceeds2d,
                    detail: "lambda mu+^2 >= 2(R - d): no pooling equilibrium survives".into(),
                }
            })?;
            transparent_pooling_equilibrium(params, rent, interval.low)
        }
    }
}
