//! Primitive parameters of the reform game.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

pub const DEFAULT_EPS_TOL: f64 = 1e-12;

/// The model's primitive parameter vector.
///
/// JSON form is a flat object with keys `p, phi, d, lambda, R, pi, M, eps_tol`;
/// `M` and `eps_tol` are optional. Deserialization validates every domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    /// Signal accuracy, P(s = g | G) = P(s = b | B).
    pub p: f64,
    /// Prior probability that the reform is good.
    pub phi: f64,
    /// Status-quo payoff.
    pub d: f64,
    /// Cost sensitivity; effort e costs e^2 / (2 lambda).
    pub lambda: f64,
    /// Office rent.
    #[serde(rename = "R")]
    pub rent: f64,
    /// Prior probability that the agent is congruent.
    pub pi: f64,
    /// Principal's weight on selecting a congruent agent.
    #[serde(rename = "M")]
    pub selection_weight: f64,
    pub eps_tol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    p: f64,
    phi: f64,
    d: f64,
    lambda: f64,
    #[serde(rename = "R")]
    rent: f64,
    pi: f64,
    #[serde(rename = "M", default)]
    selection_weight: f64,
    #[serde(default = "default_eps")]
    eps_tol: f64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS_TOL
}

impl TryFrom<RawParams> for Params {
    type Error = ModelError;

    fn try_from(raw: RawParams) -> Result<Self> {
        let params = Params {
            p: raw.p,
            phi: raw.phi,
            d: raw.d,
            lambda: raw.lambda,
            rent: raw.rent,
            pi: raw.pi,
            selection_weight: raw.selection_weight,
            eps_tol: raw.eps_tol,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Names of the parameters that can be swept or bumped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamName {
    #[serde(rename = "p")]
    P,
    #[serde(rename = "phi")]
    Phi,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "R")]
    Rent,
    #[serde(rename = "pi")]
    Pi,
}

impl ParamName {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::P => "p",
            ParamName::Phi => "phi",
            ParamName::D => "d",
            ParamName::Lambda => "lambda",
            ParamName::Rent => "R",
            ParamName::Pi => "pi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "p" => ParamName::P,
            "phi" => ParamName::Phi,
            "d" => ParamName::D,
            "lambda" => ParamName::Lambda,
            "R" | "r" => ParamName::Rent,
            "pi" => ParamName::Pi,
            _ => return None,
        })
    }
}

impl std::fmt::Display for ParamName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Params {
    /// Builds and validates a parameter vector with `M = 0` and the default tolerance.
    pub fn new(p: f64, phi: f64, d: f64, lambda: f64, rent: f64, pi: f64) -> Result<Self> {
        let params = Params {
            p,
            phi,
            d,
            lambda,
            rent,
            pi,
            selection_weight: 0.0,
            eps_tol: DEFAULT_EPS_TOL,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_selection_weight(mut self, m: f64) -> Result<Self> {
        self.selection_weight = m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, value: f64, domain: &'static str) -> Result<()> {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ModelError::Domain {
                    name,
                    value,
                    domain,
                })
            }
        }
        check((0.5..=1.0).contains(&self.p), "p", self.p, "[1/2, 1]")?;
        check(self.phi > 0.0 && self.phi < 1.0, "phi", self.phi, "(0, 1)")?;
        check(self.d > 0.0 && self.d < 1.0, "d", self.d, "(0, 1)")?;
        check(
            self.lambda > 0.0 && self.lambda <= 1.0,
            "lambda",
            self.lambda,
            "(0, 1]",
        )?;
        check(self.rent > 0.0, "R", self.rent, "(0, inf)")?;
        check(self.pi > 0.0 && self.pi < 1.0, "pi", self.pi, "(0, 1)")?;
        check(
            self.selection_weight >= 0.0,
            "M",
            self.selection_weight,
            "[0, inf)",
        )?;
        check(self.eps_tol >= 0.0, "eps_tol", self.eps_tol, "[0, inf)")?;
        Ok(())
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::P => self.p,
            ParamName::Phi => self.phi,
            ParamName::D => self.d,
            ParamName::Lambda => self.lambda,
            ParamName::Rent => self.rent,
            ParamName::Pi => self.pi,
        }
    }

    /// Returns a copy with one parameter replaced, validated.
    pub fn with(&self, name: ParamName, value: f64) -> Result<Self> {
        let mut out = *self;
        match name {
            ParamName::P => out.p = value,
            ParamName::Phi => out.phi = value,
            ParamName::D => out.d = value,
            ParamName::Lambda => out.lambda = value,
            ParamName::Rent => out.rent = value,
            ParamName::Pi => out.pi = value,
        }
        out.validate()?;
        Ok(out)
    }

    /// `a > b` beyond the tolerance band.
    pub(crate) fn gt(&self, a: f64, b: f64) -> bool {
        a - b > self.eps_tol
    }

    /// `a <= b` up to the tolerance band.
    pub(crate) fn le(&self, a: f64, b: f64) -> bool {
        a <= b + self.eps_tol
    }
}
