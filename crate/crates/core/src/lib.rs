//! Equilibria of a career-concerns reform game under three information
//! regimes (policy only, policy and outcome, policy, effort and outcome),
//! with independent checks: a grid deviation oracle, Bayes-consistency and
//! news enumeration, break-even retention probabilities, and a seeded Monte
//! Carlo simulator.

pub mod equilibrium;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod params;
pub mod sampling;
pub mod sweep;
pub mod verification;
pub mod welfare;

pub use equilibrium::{
    AgentAction, AgentType, BeliefRule, Equilibrium, Observation, ObservationPattern, Outcome,
    Policy, Regime, Retention, Signal, StrategyProfile, Visibility,
};
pub use error::{ModelError, Result};
pub use model::{AssumptionCheck, AssumptionReport, Posteriors, RentMode};
pub use montecarlo::{SimConfig, SimStats};
pub use params::{ParamName, Params};
pub use sweep::{Axis, SweepOutput, SweepSpec};
pub use verification::{BreakEvenReport, DeviationReport, NewsReport, Verdict};
pub use welfare::{Thresholds, WelfareReport};
