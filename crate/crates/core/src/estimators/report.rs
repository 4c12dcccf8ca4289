use serde::{Deserialize, Serialize};

use crate::estimators::stats::{self, least_squares};

/// Summary of one scale of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    /// `n`, `k` or `N`, depending on the study.
    pub scale: f64,
    pub samples: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl ScaleRecord {
    pub fn from_values(scale: f64, xs: &[f64]) -> Self {
        ScaleRecord {
            scale,
            samples: xs.len() as u64,
            mean: stats::mean(xs),
            variance: stats::variance(xs),
            std_error: stats::std_error(xs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    /// What the abscissa is, e.g. `ln n`.
    pub abscissa: String,
    /// Scales used in the fit.
    pub window: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Batch-means standard error of the slope.
    pub slope_se: f64,
    pub batches: usize,
    /// `slope +- 1.96 slope_se`.
    pub ci: (f64, f64),
}

impl Regression {
    /// Fit `ys` against `xs` and attach a batch-means error computed from
    /// the per-batch slopes.
    pub fn fit(abscissa: &str, window: Vec<f64>, xs: &[f64], ys: &[f64], batch_slopes: &[f64]) -> Self {
        let f = least_squares(xs, ys);
        let se = if batch_slopes.len() < 2 {
            f64::NAN
        } else {
            (stats::variance(batch_slopes) / batch_slopes.len() as f64).sqrt()
        };
        Regression {
            abscissa: abscissa.to_string(),
            window,
            slope: f.slope,
            intercept: f.intercept,
            slope_se: se,
            batches: batch_slopes.len(),
            ci: (f.slope - 1.96 * se, f.slope + 1.96 * se),
        }
    }
}

/// The value a study is compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub value: f64,
    /// Closed form the value was evaluated from.
    pub formula: String,
    /// Allowed relative deviation of the estimate.
    pub relative_tolerance: f64,
}

/// A named check inside a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Allowed deviation `|value - reference|`; NaN for boolean checks.
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(name: &str, value: f64, reference: f64, bound: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            reference,
            bound,
            pass: (value - reference).abs() <= bound,
        }
    }

    pub fn holds(name: &str, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            value: pass as u8 as f64,
            reference: 1.0,
            bound: f64::NAN,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub study: String,
    /// What the per-scale records summarise.
    pub quantity: String,
    pub scales: Vec<ScaleRecord>,
    pub regression: Option<Regression>,
    /// The same fit on the Bernoulli-coupled values.
    pub coupled: Option<Regression>,
    pub target: Option<Target>,
    pub checks: Vec<Check>,
    pub flags: Vec<String>,
    pub pass: bool,
}

impl EstimatorReport {
    pub fn new(study: &str, quantity: &str) -> Self {
        EstimatorReport {
            study: study.to_string(),
            quantity: quantity.to_string(),
            scales: Vec::new(),
            regression: None,
            coupled: None,
            target: None,
            checks: Vec::new(),
            flags: Vec::new(),
            pass: true,
        }
    }

    /// Compare the regression slope against the target and record the
    /// outcome as a check.
    pub fn judge_slope(&mut self) {
        if let (Some(r), Some(t)) = (&self.regression, &self.target) {
            let bound = t.relative_tolerance * t.value.abs();
            let c = Check::within("slope vs target", r.slope, t.value, bound);
            self.checks.push(c);
        }
        self.settle();
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
        self.settle();
    }

    fn settle(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass);
    }
}
