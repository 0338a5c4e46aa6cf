//! Strong Wolfe line search: bracketing phase followed by a zoom phase with
//! safeguarded cubic interpolation (Nocedal & Wright, Algorithms 3.5 and 3.6).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Budget of joint (value, slope) evaluations.
    pub max_evals: usize,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            max_evals: 20,
            initial_step: 1.0,
            max_step: 1e6,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "line search needs 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.max_evals == 0 || !(self.initial_step > 0.0) || !(self.max_step >= self.initial_step) {
            return Err(Error::InvalidParameter(
                "line search needs max_evals >= 1 and 0 < initial_step <= max_step".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineSearchStatus {
    /// The returned step satisfies both strong Wolfe conditions.
    Converged,
    /// Budget exhausted; the returned step is the best decreasing one seen.
    MaxEvals,
    /// Budget exhausted without any decrease; the step is zero.
    NoDecrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchOutcome {
    pub status: LineSearchStatus,
    pub step: f64,
    /// `φ(step)`.
    pub value: f64,
    /// `φ'(step)`.
    pub slope: f64,
    /// `φ(0)`.
    pub initial_value: f64,
    /// `φ'(0)`.
    pub initial_slope: f64,
    pub evals: usize,
}

impl LineSearchOutcome {
    /// Re-checks both strong Wolfe inequalities from the recorded values.
    pub fn satisfies_strong_wolfe(&self, c1: f64, c2: f64) -> bool {
        satisfies_strong_wolfe(
            self.initial_value,
            self.initial_slope,
            self.step,
            self.value,
            self.slope,
            c1,
            c2,
        )
    }
}

pub fn satisfies_armijo(value0: f64, slope0: f64, step: f64, value: f64, c1: f64) -> bool {
    value <= value0 + c1 * step * slope0
}

pub fn satisfies_strong_wolfe(
    value0: f64,
    slope0: f64,
    step: f64,
    value: f64,
    slope: f64,
    c1: f64,
    c2: f64,
) -> bool {
    step > 0.0 && satisfies_armijo(value0, slope0, step, value, c1) && slope.abs() <= c2 * slope0.abs()
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    step: f64,
    value: f64,
    slope: f64,
}

/// Minimizer of the cubic matching values and slopes at `a` and `b`, or `None`
/// when it does not exist.
fn cubic_minimizer(a: Sample, b: Sample) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
    let radicand = d1 * d1 - a.slope * b.slope;
    if !(radicand >= 0.0) {
        return None;
    }
    let d2 = (b.step - a.step).signum() * radicand.sqrt();
    let denom = b.slope - a.slope + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let x = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
    x.is_finite().then_some(x)
}

struct Search<'p, F> {
    eval: F,
    params: &'p LineSearchParams,
    value0: f64,
    slope0: f64,
    evals: usize,
    best: Option<Sample>,
}

impl<F> Search<'_, F>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    fn sample(&mut self, step: f64) -> Result<Sample> {
        let (value, slope) = (self.eval)(step)?;
        self.evals += 1;
        // a non-finite trial is treated as "too far"
        let (value, slope) = if value.is_finite() && slope.is_finite() {
            (value, slope)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let s = Sample { step, value, slope };
        if value < self.value0 && self.best.is_none_or(|b| value < b.value) {
            self.best = Some(s);
        }
        Ok(s)
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.params.max_evals
    }

    fn sufficient(&self, s: &Sample) -> bool {
        satisfies_armijo(self.value0, self.slope0, s.step, s.value, self.params.c1)
    }

    fn curvature_ok(&self, s: &Sample) -> bool {
        s.slope.abs() <= -self.params.c2 * self.slope0
    }

    fn converged(&self, s: Sample) -> LineSearchOutcome {
        LineSearchOutcome {
            status: LineSearchStatus::Converged,
            step: s.step,
            value: s.value,
            slope: s.slope,
            initial_value: self.value0,
            initial_slope: self.slope0,
            evals: self.evals,
        }
    }

    fn give_up(&self) -> LineSearchOutcome {
        match self.best {
            Some(b) => LineSearchOutcome {
                status: LineSearchStatus::MaxEvals,
                step: b.step,
                value: b.value,
                slope: b.slope,
                initial_value: self.value0,
                initial_slope: self.slope0,
                evals: self.evals,
            },
            None => LineSearchOutcome {
                status: LineSearchStatus::NoDecrease,
                step: 0.0,
                value: self.value0,
                slope: self.slope0,
                initial_value: self.value0,
                initial_slope: self.slope0,
                evals: self.evals,
            },
        }
    }

    fn zoom(&mut self, mut lo: Sample, mut hi: Sample) -> Result<LineSearchOutcome> {
        while !self.exhausted() {
            let (left, right) = if lo.step < hi.step {
                (lo.step, hi.step)
            } else {
                (hi.step, lo.step)
            };
            let width = right - left;
            if width <= f64::EPSILON * right {
                break;
            }
            let margin = 0.1 * width;
            let trial = match (hi.value.is_finite(), cubic_minimizer(lo, hi)) {
                (true, Some(x)) if x > left + margin && x < right - margin => x,
                _ => 0.5 * (lo.step + hi.step),
            };
            let s = self.sample(trial)?;
            if !self.sufficient(&s) || s.value >= lo.value {
                hi = s;
            } else {
                if self.curvature_ok(&s) {
                    return Ok(self.converged(s));
                }
                if s.slope * (hi.step - lo.step) >= 0.0 {
                    hi = lo;
                }
                lo = s;
            }
        }
        Ok(self.give_up())
    }

    fn run(&mut self) -> Result<LineSearchOutcome> {
        let mut previous = Sample {
            step: 0.0,
            value: self.value0,
            slope: self.slope0,
        };
        let mut step = self.params.initial_step;
        let mut first = true;
        while !self.exhausted() {
            let s = self.sample(step)?;
            if !self.sufficient(&s) || (!first && s.value >= previous.value) {
                return self.zoom(previous, s);
            }
            if self.curvature_ok(&s) {
                return Ok(self.converged(s));
            }
            if s.slope >= 0.0 {
                return self.zoom(s, previous);
            }
            if step >= self.params.max_step {
                break;
            }
            previous = s;
            first = false;
            step = (2.0 * step).min(self.params.max_step);
        }
        Ok(self.give_up())
    }
}

/// Finds a step satisfying the strong Wolfe conditions for `φ`.
///
/// `eval(η)` returns `(φ(η), φ'(η))`; `value0` and `slope0` are `φ(0)` and
/// `φ'(0)`, the latter required to be negative.
pub fn wolfe_line_search<F>(
    eval: F,
    value0: f64,
    slope0: f64,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    params.validate()?;
    if !(slope0 < 0.0) {
        return Err(Error::NotADescentDirection { slope: slope0 });
    }
    if !value0.is_finite() {
        return Err(Error::NonFinite("line search initial value"));
    }
    Search {
        eval,
        params,
        value0,
        slope0,
        evals: 0,
        best: None,
    }
    .run()
}
