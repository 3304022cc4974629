//! Observables given as JSON with expressions in chart notation.

use super::ObservableForm;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::exterior::{ChartSpec, PhaseSpace};
use serde::{Deserialize, Serialize};

/// `Momentum.coordinate` names a coordinate of `𝒳×𝒴`, e.g. `"y1"` or `"x2"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableJson {
    Position { field: usize, f: Vec<String> },
    Momentum { coordinate: String, g: String },
    GeneralizedMomentum { xi: Vec<String> },
    StarMomentum { coordinate: String, g: String },
    HamiltonianDensity,
    Eta,
}

fn coordinate(chart: &ChartSpec, name: &str) -> Result<usize> {
    match chart.resolve(name) {
        Some(s) if (s as usize) < chart.n() + chart.k() => Ok(s as usize),
        _ => Err(Error::Input(format!(
            "coordinate: '{name}' is not a coordinate of the base or the fibre"
        ))),
    }
}

impl ObservableJson {
    /// Build the form; `h` is the Hamiltonian density used by the density-valued kinds.
    pub fn build(&self, ps: &PhaseSpace, h: Option<&Expr>) -> Result<ObservableForm> {
        let chart = ps.chart();
        let need_h = || {
            h.cloned().ok_or_else(|| {
                Error::Model("this observable needs a closed-form Hamiltonian".into())
            })
        };
        let list = |field: &str, v: &[String]| -> Result<Vec<Expr>> {
            v.iter()
                .enumerate()
                .map(|(i, s)| chart.parse_field(&format!("{field}[{i}]"), s))
                .collect()
        };
        let form = match self {
            ObservableJson::Position { field, f } => {
                ObservableForm::position(*field, list("f", f)?)
            }
            ObservableJson::Momentum { coordinate: c, g } => {
                ObservableForm::momentum(coordinate(chart, c)?, chart.parse_field("g", g)?)
            }
            ObservableJson::GeneralizedMomentum { xi } => ObservableForm::GeneralizedMomentum {
                xi: list("xi", xi)?,
            },
            ObservableJson::StarMomentum { coordinate: c, g } => ObservableForm::StarMomentum {
                mu: coordinate(chart, c)?,
                g: chart.parse_field("g", g)?,
                h: need_h()?,
            },
            ObservableJson::HamiltonianDensity => {
                ObservableForm::HamiltonianDensity { h: need_h()? }
            }
            ObservableJson::Eta => ObservableForm::Eta { h: need_h()? },
        };
        form.validate(ps)?;
        Ok(form)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn momentum_by_coordinate_name() {
        let ps = PhaseSpace::new(ChartSpec::weyl(2, 1).unwrap());
        let j: ObservableJson =
            serde_json::from_str(r#"{"kind":"momentum","coordinate":"y1","g":"x1^2"}"#).unwrap();
        let f = j.build(&ps, None).unwrap();
        assert_eq!(
            f,
            ObservableForm::momentum(2, ps.chart().parse("x1^2").unwrap())
        );
        let bad: ObservableJson =
            serde_json::from_str(r#"{"kind":"momentum","coordinate":"eps","g":"1"}"#).unwrap();
        assert!(bad.build(&ps, None).is_err());
        assert!(ObservableJson::Eta.build(&ps, None).is_err());
    }
}
