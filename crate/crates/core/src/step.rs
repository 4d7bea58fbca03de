//! Right-continuous piecewise-constant functions.
//!
//! Every cumulative estimate in the crate (regression functions, effect
//! curves) is a [`StepFunction`]: a strictly increasing list of jump times
//! with one increment per jump. The function is zero before the first jump
//! and equals the running sum of increments at jumps `<= t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepRepr", into = "StepRepr")]
pub struct StepFunction {
    jumps: Vec<f64>,
    increments: Vec<f64>,
    // Running sums, cached so that evaluation is a binary search.
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepRepr {
    jumps: Vec<f64>,
    increments: Vec<f64>,
}

impl TryFrom<StepRepr> for StepFunction {
    type Error = Error;
    fn try_from(r: StepRepr) -> Result<Self> {
        StepFunction::from_increments(r.jumps, r.increments)
    }
}

impl From<StepFunction> for StepRepr {
    fn from(f: StepFunction) -> Self {
        StepRepr {
            jumps: f.jumps,
            increments: f.increments,
        }
    }
}

fn check_jumps(jumps: &[f64]) -> Result<()> {
    if jumps.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidTime(f64::NAN));
    }
    if let Some(w) = jumps.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidTime(w[1]));
    }
    Ok(())
}

impl StepFunction {
    pub fn zero() -> Self {
        StepFunction {
            jumps: Vec::new(),
            increments: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a step function from jump times and per-jump increments.
    pub fn from_increments(jumps: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        if jumps.len() != increments.len() {
            return Err(Error::DimensionMismatch {
                expected: jumps.len(),
                actual: increments.len(),
            });
        }
        check_jumps(&jumps)?;
        let values = increments
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect();
        Ok(StepFunction {
            jumps,
            increments,
            values,
        })
    }

    /// Builds a step function from its values at each jump time. Evaluation at
    /// a jump returns the given value bit-for-bit.
    pub fn from_values(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jumps.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: jumps.len(),
                actual: values.len(),
            });
        }
        check_jumps(&jumps)?;
        let mut prev = 0.0;
        let increments = values
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect();
        Ok(StepFunction {
            jumps,
            increments,
            values,
        })
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Values at the jump times (running sums of the increments).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jumps.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    pub fn eval_many(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }

    /// Multiplies every value by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let values = self.values.iter().map(|v| v * k).collect();
        StepFunction::from_values(self.jumps.clone(), values).expect("jumps already validated")
    }

    /// Average slope over `[t0, t1]`.
    pub fn slope(&self, t0: f64, t1: f64) -> f64 {
        (self.eval(t1) - self.eval(t0)) / (t1 - t0)
    }
}

/// Evaluates the step function defined by `jumps`/`increments`.
pub fn eval_step(f: &StepFunction, t: f64) -> f64 {
    f.eval(t)
}
