use thiserror::Error;

use crate::equilibrium::Regime;
use crate::model::AssumptionCheck;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// A primitive parameter lies outside its declared domain.
    #[error("parameter `{name}` = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("assumption `{check}` fails: {detail}")]
    AssumptionViolated {
        check: AssumptionCheck,
        detail: String,
    },

    #[error(
        "informativeness condition fails (lhs {lhs} > rhs {rhs}); a failed reform is not bad news"
    )]
    InformativenessViolated { lhs: f64, rhs: f64 },

    #[error("separating effort {effort} exceeds 1; the noncongruent type cannot be screened out")]
    SeparationInfeasible { effort: f64 },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("observation {0} is not resolvable under this equilibrium")]
    UnresolvableObservation(String),

    #[error("equilibrium regime {found} does not match requested regime {expected}")]
    RegimeMismatch { expected: Regime, found: Regime },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimulation(String),

    #[error("bump of `{parameter}` broke a precondition of the {regime} equilibrium: {source}")]
    PreconditionLost {
        parameter: &'static str,
        regime: Regime,
        #[source]
        source: Box<ModelError>,
    },
}

impl ModelError {
    /// True for errors that come from the parameters failing a modelling
    /// precondition (as opposed to malformed input).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            ModelError::AssumptionViolated { .. }
                | ModelError::InformativenessViolated { .. }
                | ModelError::SeparationInfeasible { .. }
                | ModelError::PreconditionLost { .. }
        )
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
