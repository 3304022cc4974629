//! Exterior calculus on a single chart of `ΛⁿT*(𝒳×𝒴)`.

mod cartan;
mod chart;
mod form;
mod multiindex;

pub use cartan::{cartan_form, cartan_form_weighted, pataplectic_form, volume_form, PhaseSpace};
pub use chart::{ChartJson, ChartSpec, Momentum};
pub use form::{DifferentialForm, MultiVectorField, VectorField};
pub use multiindex::{canonicalize, canonicalize_raw, MultiIndex};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TermJson {
    /// 1-based coordinate indices, any order.
    pub index: Vec<usize>,
    pub coeff: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FormJson {
    pub degree: usize,
    pub terms: Vec<TermJson>,
}

impl FormJson {
    pub fn from_form(form: &DifferentialForm, chart: &ChartSpec) -> Self {
        FormJson {
            degree: form.degree(),
            terms: form
                .terms()
                .iter()
                .map(|(i, c)| TermJson {
                    index: i.iter().map(|q| q + 1).collect(),
                    coeff: chart.show(c),
                })
                .collect(),
        }
    }

    pub fn to_form(&self, chart: &ChartSpec) -> Result<DifferentialForm> {
        let dim = chart.dim();
        let mut acc = DifferentialForm::zero(dim, self.degree);
        for (t_no, t) in self.terms.iter().enumerate() {
            if t.index.len() != self.degree {
                return Err(Error::Degree(format!(
                    "term {t_no} has {} indices, expected {}",
                    t.index.len(),
                    self.degree
                )));
            }
            canonicalize(&t.index, dim)?;
            let c = chart.parse_field(&format!("terms[{t_no}].coeff"), &t.coeff)?;
            let zero_based: Vec<usize> = t.index.iter().map(|i| i - 1).collect();
            acc = acc.add(&DifferentialForm::monomial(dim, &zero_based, c));
        }
        Ok(acc)
    }
}

/// Human-readable rendering, e.g. `eps dx1^dx2 + p1_1 dy1^dx2`.
pub fn show_form(form: &DifferentialForm, chart: &ChartSpec) -> String {
    if form.is_zero() {
        return "0".into();
    }
    let parts: Vec<String> = form
        .terms()
        .iter()
        .map(|(i, c)| {
            let basis: Vec<String> = i
                .iter()
                .map(|q| format!("d{}", chart.name(q as u32)))
                .collect();
            if basis.is_empty() {
                format!("({})", chart.show(c))
            } else {
                format!("({}) {}", chart.show(c), basis.join("^"))
            }
        })
        .collect();
    parts.join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_json_round_trip() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let theta = cartan_form(&c);
        let j = FormJson::from_form(&theta, &c);
        let s = serde_json::to_string(&j).unwrap();
        let back: FormJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_form(&c).unwrap(), theta);
    }

    #[test]
    fn permuted_indices_read_back_with_sign() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let j = FormJson {
            degree: 2,
            terms: vec![TermJson {
                index: vec![2, 1],
                coeff: "y1".into(),
            }],
        };
        let f = j.to_form(&c).unwrap();
        assert_eq!(f.component(&[0, 1]), -crate::expr::Expr::sym(2));
        let bad = FormJson {
            degree: 1,
            terms: vec![TermJson {
                index: vec![9],
                coeff: "1".into(),
            }],
        };
        assert!(bad.to_form(&c).is_err());
    }
}
