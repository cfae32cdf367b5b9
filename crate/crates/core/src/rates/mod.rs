//! Expected rates, closed forms, memory-rate envelopes and curve export.

pub mod closed;
pub mod envelope;
pub mod expectation;
pub mod sweep;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{Exact, Frac};

pub use closed::{
    compare_strategies, rate_alpha_closed, rate_alpha_closed_exact, rate_beta_closed,
    rate_beta_closed_exact, table_rate_exact, MaxGain, StrategyComparison, Thresholds,
};
pub use envelope::{lower_envelope, Envelope, PointStatus};
pub use expectation::{
    expected_rate_exact, expected_rate_mc, McEstimate, Placed, RateProfile,
    DEFAULT_ENUMERATION_LIMIT,
};
pub use sweep::{certify_table_allm, classic_rate, table_allm, Family, Strategy};

pub(crate) fn serialize_frac<S: Serializer>(
    x: &Frac,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    if x.is_integer() {
        s.serialize_i64(*x.numer())
    } else {
        s.serialize_str(&x.to_string())
    }
}

pub(crate) fn serialize_exact_opt<S: Serializer>(
    x: &Option<Exact>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

/// One achievable `(M, R)` pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    /// Cache size per user, in files.
    #[serde(serialize_with = "serialize_frac")]
    pub memory: Frac,
    pub rate: f64,
    /// The rate as an exact rational, when the popularity was rational.
    #[serde(serialize_with = "serialize_exact_opt")]
    pub exact: Option<Exact>,
    pub label: String,
}

impl RatePoint {
    pub fn new(memory: Frac, exact: Exact, label: impl Into<String>) -> Self {
        RatePoint {
            memory,
            rate: crate::exact::exact_to_f64(&exact),
            exact: Some(exact),
            label: label.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub x: f64,
    pub values: Vec<f64>,
}

/// Sampled curves sharing one abscissa.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateCurve {
    /// Name of the abscissa column, `p` or `M`.
    pub abscissa: String,
    pub columns: Vec<String>,
    pub rows: Vec<CurveRow>,
    pub metadata: BTreeMap<String, String>,
}

impl RateCurve {
    pub fn new(abscissa: impl Into<String>, columns: Vec<String>) -> Self {
        RateCurve {
            abscissa: abscissa.into(),
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Appends a row; the abscissa must increase strictly.
    pub fn push(&mut self, x: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::validation(format!(
                "row has {} values for {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        if let Some(last) = self.rows.last() {
            if x <= last.x {
                return Err(Error::validation(format!(
                    "abscissa {x} does not increase past {}",
                    last.x
                )));
            }
        }
        self.rows.push(CurveRow { x, values });
        Ok(())
    }

    /// `abscissa,col1,col2,...` followed by one line per row. Numbers use the
    /// shortest representation that reads back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = self.abscissa.clone();
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.x);
            for v in &row.values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }
}
