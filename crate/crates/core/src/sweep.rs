//! Grid sweeps over one or two parameters, emitted as CSV.
//!
//! Dialect: comma separated, one header row, LF line endings, floats in
//! shortest round-trip form, `NA` wherever a quantity is undefined. Rows
//! follow row-major axis order (the first axis varies slowest).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::Regime;
use crate::error::{ModelError, Result};
use crate::model::{check_assumptions, RentMode};
use crate::params::{ParamName, Params};
use crate::welfare::{optimal_regime, thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: ParamName,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    /// Expected policy payoff per compared regime.
    Welfare,
    OptimalRegime,
    Assumptions,
    Thresholds,
}

fn default_outputs() -> Vec<SweepOutput> {
    vec![
        SweepOutput::Welfare,
        SweepOutput::OptimalRegime,
        SweepOutput::Assumptions,
        SweepOutput::Thresholds,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: Params,
    pub axes: Vec<Axis>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<SweepOutput>,
    #[serde(default)]
    pub rent_mode: RentMode,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidSweep(msg));
        if self.axes.is_empty() || self.axes.len() > 2 {
            return bad(format!("expected 1 or 2 axes, got {}", self.axes.len()));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return bad(format!("axis `{}` given twice", self.axes[0].param));
        }
        for axis in &self.axes {
            if axis.steps < 2 {
                return bad(format!("axis `{}` needs at least 2 steps", axis.param));
            }
            if axis.min >= axis.max {
                return bad(format!("axis `{}` needs min < max", axis.param));
            }
            for v in [axis.min, axis.max] {
                if self.base.with(axis.param, v).is_err() {
                    return bad(format!(
                        "axis `{}` value {v} is outside the parameter domain",
                        axis.param
                    ));
                }
            }
        }
        if self.outputs.is_empty() {
            return bad("no outputs requested".into());
        }
        Ok(())
    }

    /// Grid points in row-major order.
    pub fn points(&self) -> Result<Vec<Params>> {
        self.validate()?;
        let first = self.axes[0];
        let mut out = Vec::new();
        for i in 0..first.steps {
            let p = self.base.with(first.param, first.value(i))?;
            match self.axes.get(1) {
                None => out.push(p),
                Some(second) => {
                    for j in 0..second.steps {
                        out.push(p.with(second.param, second.value(j))?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn header(&self) -> String {
        let mut cols: Vec<&str> = vec!["p", "phi", "d", "lambda", "R", "pi", "M"];
        for o in &self.outputs {
            match o {
                SweepOutput::Welfare => {
                    cols.extend(["W_nontransparent", "W_opaque", "W_transparent"])
                }
                SweepOutput::OptimalRegime => cols.push("optimal_regime"),
                SweepOutput::Assumptions => cols.extend([
                    "signal_informative",
                    "moderate_rent_strict",
                    "moderate_rent_relaxed",
                    "effort_bound",
                    "informativeness",
                    "rent_exceeds_2d",
                ]),
                SweepOutput::Thresholds => cols.extend(["lambda_hat", "R_low", "R_high"]),
            }
        }
        cols.join(",")
    }
}

fn num(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v}"),
        None => "NA".to_string(),
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// One CSV data row (no line terminator).
pub fn sweep_row(params: &Params, outputs: &[SweepOutput], rent: RentMode) -> Result<String> {
    let mut cells = vec![
        num(Some(params.p)),
        num(Some(params.phi)),
        num(Some(params.d)),
        num(Some(params.lambda)),
        num(Some(params.rent)),
        num(Some(params.pi)),
        num(Some(params.selection_weight)),
    ];
    let needs_welfare = outputs
        .iter()
        .any(|o| matches!(o, SweepOutput::Welfare | SweepOutput::OptimalRegime));
    let welfare = if needs_welfare {
        Some(optimal_regime(params, rent)?)
    } else {
        None
    };
    for o in outputs {
        match o {
            SweepOutput::Welfare => {
                let w = welfare.as_ref().expect("computed above");
                for regime in Regime::COMPARED {
                    cells.push(num(w.get(regime).map(|e| e.w)));
                }
            }
            SweepOutput::OptimalRegime => {
                let w = welfare.as_ref().expect("computed above");
                cells.push(match w.optimal {
                    Some(r) => r.to_string(),
                    None => "NA".to_string(),
                });
            }
            SweepOutput::Assumptions => {
                let r = check_assumptions(params)?;
                cells.extend(
                    [
                        r.signal_informative.pass,
                        r.moderate_rent_strict.pass,
                        r.moderate_rent_relaxed.pass,
                        r.effort_bound.pass,
                        r.informativeness.holds,
                        r.rent_exceeds_2d.pass,
                    ]
                    .map(|b| flag(b).to_string()),
                );
            }
            SweepOutput::Thresholds => {
                let t = thresholds(params)?;
                cells.push(num(Some(t.lambda_hat)));
                cells.push(num(t.r_low));
                cells.push(num(t.r_high));
            }
        }
    }
    Ok(cells.join(","))
}

/// Evaluates every grid point (in parallel) and returns the full CSV text.
pub fn run_sweep(spec: &SweepSpec) -> Result<String> {
    let points = spec.points()?;
    let rows = points
        .par_iter()
        .map(|p| sweep_row(p, &spec.outputs, spec.rent_mode))
        .collect::<Result<Vec<_>>>()?;
    let mut out = spec.header();
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}
