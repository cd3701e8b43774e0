//! Scalar and curve summaries of run records.
//!
//! Everything here is a pure function of one or more [`RunRecord`]s. The
//! unit of analysis is always the run: a batch becomes a set of per-run
//! scalars, never a pool of steps, so sample sizes in downstream intervals
//! reflect the number of independent runs.

use crate::error::{Error, Result};
use crate::harness::RunRecord;

/// Per-run scalar samples of one metric, tagged with the spec fingerprint
/// they came from. Mixing records from different specs is rejected at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfSampleSet {
    pub values: Vec<f64>,
    pub label: String,
    pub fingerprint: String,
}

/// A scalar summary applicable to any run record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarMetric {
    /// Mean of the per-step return curve: area under the curve divided by
    /// the step budget.
    ReturnRate,
    /// Mean over the final fraction of the curve; see [`tail_average`].
    TailAverage { fraction: f64, include_partial: bool },
}

impl ScalarMetric {
    pub fn id(&self) -> String {
        match self {
            ScalarMetric::ReturnRate => "return_rate".to_string(),
            ScalarMetric::TailAverage { fraction, .. } => format!("tail_average({fraction})"),
        }
    }

    pub fn compute(&self, record: &RunRecord) -> Result<f64> {
        match *self {
            ScalarMetric::ReturnRate => return_rate(record),
            ScalarMetric::TailAverage {
                fraction,
                include_partial,
            } => tail_average(record, fraction, include_partial),
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean of the per-step return curve over the whole budget.
pub fn return_rate(record: &RunRecord) -> Result<f64> {
    if record.per_step_return.is_empty() {
        return Err(Error::StatPrecondition("empty run record".into()));
    }
    Ok(mean(&record.per_step_return))
}

/// Mean over the final `ceil(fraction * len)` steps of the curve.
///
/// When the record's last episode was cut off by the budget and
/// `include_partial` is false, its steps are dropped before the window is
/// taken: the partial value is an artifact of where the budget happened to
/// land, not of the policy.
pub fn tail_average(record: &RunRecord, fraction: f64, include_partial: bool) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::StatPrecondition(format!(
            "tail fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut curve: &[f64] = &record.per_step_return;
    if !include_partial && record.final_episode_partial {
        let last_start = *record
            .episode_starts
            .last()
            .expect("a partial episode implies at least one episode");
        curve = &curve[..last_start];
    }
    if curve.is_empty() {
        return Err(Error::StatPrecondition(
            "no completed episodes before the budget end; nothing to average".into(),
        ));
    }
    let window = ((fraction * curve.len() as f64).ceil() as usize).max(1);
    Ok(mean(&curve[curve.len() - window..]))
}

/// First step index where the curve stays at or above `threshold` for
/// `consecutive` steps; `None` when that never happens.
pub fn steps_to_threshold(
    record: &RunRecord,
    threshold: f64,
    consecutive: usize,
) -> Result<Option<usize>> {
    if consecutive == 0 {
        return Err(Error::StatPrecondition(
            "consecutive must be at least 1".into(),
        ));
    }
    let curve = &record.per_step_return;
    if curve.len() < consecutive {
        return Ok(None);
    }
    Ok(curve
        .windows(consecutive)
        .position(|w| w.iter().all(|&v| v >= threshold)))
}

/// Number of steps at or after `after_step` where the curve dips below
/// `threshold`. Pair with [`steps_to_threshold`] to measure stability after
/// first crossing.
pub fn stability_violations(record: &RunRecord, threshold: f64, after_step: usize) -> Result<usize> {
    if after_step >= record.per_step_return.len() {
        return Err(Error::StatPrecondition(format!(
            "after_step {after_step} outside a {}-step record",
            record.per_step_return.len()
        )));
    }
    Ok(record.per_step_return[after_step..]
        .iter()
        .filter(|&&v| v < threshold)
        .count())
}

/// Maps a return onto [0, 1] between a known worst and optimal return.
/// Values outside the declared bounds map outside [0, 1] rather than being
/// clipped; the caller decides whether that is noteworthy.
pub fn normalize_return(g: f64, g_star: f64, g_minus: f64) -> Result<f64> {
    if g_star.is_nan() || g_minus.is_nan() || g_star <= g_minus {
        return Err(Error::StatPrecondition(format!(
            "return bounds must satisfy optimal > worst, got {g_star} and {g_minus}"
        )));
    }
    Ok((g - g_minus) / (g_star - g_minus))
}

/// Applies a scalar metric to every record of one batch, preserving run
/// order. All records must come from the same spec.
pub fn batch_metric(records: &[RunRecord], metric: ScalarMetric) -> Result<PerfSampleSet> {
    let first = records
        .first()
        .ok_or_else(|| Error::StatPrecondition("empty record batch".into()))?;
    if let Some(stray) = records
        .iter()
        .find(|r| r.fingerprint != first.fingerprint)
    {
        return Err(Error::StatPrecondition(format!(
            "records mix specs: {} and {}",
            first.fingerprint, stray.fingerprint
        )));
    }
    let values = records
        .iter()
        .map(|r| metric.compute(r))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PerfSampleSet {
        values,
        label: metric.id(),
        fingerprint: first.fingerprint.clone(),
    })
}

/// Index of the run whose value is the sample median; with an even count,
/// the lower of the two middle runs. Selecting a run this way keeps any
/// "representative" curve an actual run, never a pointwise composite.
pub fn median_run_index(values: &[f64]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::StatPrecondition("no values to take a median of".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(order[(values.len() - 1) / 2])
}
