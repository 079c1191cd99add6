use serde::Serialize;
use serde_json::Value;

/// A sampled point that violated (or most nearly violated) a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub point: Vec<f64>,
    pub value: f64,
    pub note: String,
}

/// Outcome of a numerical hypothesis check. Reproducible for a fixed seed
/// and parameter set; a pass is evidence gathered on samples, not a proof.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationVerdict {
    pub check: String,
    pub pass: bool,
    /// Worst-case statistic of the check (its meaning depends on `check`).
    pub statistic: f64,
    pub offenders: Vec<Offender>,
    pub parameters: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Value>,
}

const MAX_OFFENDERS: usize = 5;

impl ValidationVerdict {
    pub fn new(check: &str, parameters: Value) -> Self {
        ValidationVerdict {
            check: check.to_string(),
            pass: true,
            statistic: 0.0,
            offenders: Vec::new(),
            parameters,
            table: None,
        }
    }

    /// Record a failing sample. Only the worst few are kept, ranked by
    /// `|value|` (NaN ranks worst).
    pub(crate) fn fail(&mut self, point: &[f64], value: f64, note: impl Into<String>) {
        self.pass = false;
        let rank = |v: f64| if v.is_nan() { f64::INFINITY } else { v.abs() };
        let at = self
            .offenders
            .iter()
            .position(|o| rank(value) > rank(o.value))
            .unwrap_or(self.offenders.len());
        if at < MAX_OFFENDERS {
            self.offenders.insert(
                at,
                Offender {
                    point: point.to_vec(),
                    value,
                    note: note.into(),
                },
            );
            self.offenders.truncate(MAX_OFFENDERS);
        }
    }

    pub(crate) fn observe(&mut self, stat: f64) {
        if stat > self.statistic || stat.is_nan() {
            self.statistic = stat;
        }
    }
}
