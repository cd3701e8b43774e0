//! Comparing two experiment arms, and aggregating across environments.
//!
//! The pairing discipline matters more than the test statistic here. When
//! two arms were run under repeated-measures seeding, run i of each arm
//! saw the same environment stream, so the per-run differences cancel the
//! shared draw noise and a paired interval can be dramatically tighter
//! than an unpaired one on the same data. Pairing runs that do not share
//! seeds is statistically invalid, so `diff_curve` refuses to do it.

use crate::error::{Error, Result};
use crate::harness::{PairingMode, RunRecord};
use crate::metrics::normalize_return;
use crate::seed::RngStream;
use crate::stats::{
    self, bootstrap_ci, student_t_ci, Interval, IntervalKind, Method,
};

/// Per-step difference between two arms with a pointwise interval.
///
/// Each step's interval is at the stated alpha individually; across T
/// steps the family-wise error rate is far higher, which is why
/// `count_significant` exists for honest reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffCurve {
    pub label_a: String,
    pub label_b: String,
    pub paired: bool,
    pub method: Method,
    pub alpha: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// True where the pointwise interval excludes zero.
    pub significant: Vec<bool>,
}

impl DiffCurve {
    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    pub fn count_significant(&self) -> usize {
        self.significant.iter().filter(|&&s| s).count()
    }
}

fn check_side(records: &[RunRecord], side: &str) -> Result<()> {
    if records.len() < 2 {
        return Err(Error::StatPrecondition(format!(
            "diff curve needs at least 2 runs per arm, arm {side} has {}",
            records.len()
        )));
    }
    let fingerprint = &records[0].fingerprint;
    if records.iter().any(|r| &r.fingerprint != fingerprint) {
        return Err(Error::StatPrecondition(format!(
            "arm {side} mixes runs from different experiment fingerprints"
        )));
    }
    Ok(())
}

fn check_pairable(a: &[RunRecord], b: &[RunRecord]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::StatPrecondition(format!(
            "paired comparison needs equal run counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    for (ra, rb) in a.iter().zip(b) {
        let matched = ra.pairing == PairingMode::RepeatedMeasures
            && rb.pairing == PairingMode::RepeatedMeasures
            && ra.base_seed == rb.base_seed
            && ra.run_index == rb.run_index;
        if !matched {
            return Err(Error::StatPrecondition(format!(
                "paired comparison needs matched repeated-measures seed plans; \
                 run {} of arm A has (seed {}, {:?}) but arm B has (seed {}, {:?})",
                ra.run_index,
                ra.base_seed,
                ra.pairing,
                rb.base_seed,
                rb.pairing
            )));
        }
    }
    Ok(())
}

/// Welch interval for a difference of independent means, with the
/// Satterthwaite degrees-of-freedom approximation.
fn welch_interval(a: &[f64], b: &[f64], alpha: f64) -> Result<(f64, f64)> {
    let center = stats::mean(a) - stats::mean(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let qa = stats::sample_variance(a) / na;
    let qb = stats::sample_variance(b) / nb;
    if qa + qb == 0.0 {
        return Ok((center, 0.0));
    }
    let df = (qa + qb).powi(2) / (qa.powi(2) / (na - 1.0) + qb.powi(2) / (nb - 1.0));
    let half = stats::t_multiplier_from_df(alpha, df)? * (qa + qb).sqrt();
    Ok((center, half))
}

fn bootstrap_mean_diff(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    m: usize,
    rng: &mut RngStream,
) -> (f64, f64) {
    let mut diffs = Vec::with_capacity(m);
    for _ in 0..m {
        let res_a: f64 = (0..a.len())
            .map(|_| a[rand::Rng::random_range(rng, 0..a.len())])
            .sum::<f64>()
            / a.len() as f64;
        let res_b: f64 = (0..b.len())
            .map(|_| b[rand::Rng::random_range(rng, 0..b.len())])
            .sum::<f64>()
            / b.len() as f64;
        diffs.push(res_a - res_b);
    }
    diffs.sort_by(f64::total_cmp);
    let lo_pos = alpha / 2.0 * (m - 1) as f64;
    let hi_pos = (1.0 - alpha / 2.0) * (m - 1) as f64;
    let pick = |pos: f64| {
        let lo = pos.floor() as usize;
        let hi = (pos.ceil() as usize).min(m - 1);
        diffs[lo] + (diffs[hi] - diffs[lo]) * (pos - lo as f64)
    };
    (pick(lo_pos), pick(hi_pos))
}

/// Per-step difference curve A - B with a pointwise interval at each step.
///
/// Paired mode demands matched repeated-measures seed plans and builds the
/// interval from per-run difference curves; unpaired mode treats the arms
/// as independent (Welch for `t`, two-sample resampling for `bootstrap`).
/// Centers agree exactly between the two modes; only the widths differ.
pub fn diff_curve(
    a: &[RunRecord],
    b: &[RunRecord],
    alpha: f64,
    paired: bool,
    method: Method,
    m: usize,
    rng: &mut RngStream,
) -> Result<DiffCurve> {
    check_side(a, "A")?;
    check_side(b, "B")?;
    if a[0].step_budget != b[0].step_budget {
        return Err(Error::StatPrecondition(format!(
            "arms ran different step budgets ({} vs {})",
            a[0].step_budget, b[0].step_budget
        )));
    }
    if paired {
        check_pairable(a, b)?;
    }
    if !matches!(method, Method::StudentT | Method::Bootstrap) {
        return Err(Error::StatPrecondition(format!(
            "diff curves support methods t and bootstrap, not {}",
            method.id()
        )));
    }

    let steps = a[0].step_budget;
    let mut center = Vec::with_capacity(steps);
    let mut lower = Vec::with_capacity(steps);
    let mut upper = Vec::with_capacity(steps);
    for t in 0..steps {
        let va: Vec<f64> = a.iter().map(|r| r.per_step_return[t]).collect();
        let vb: Vec<f64> = b.iter().map(|r| r.per_step_return[t]).collect();
        // Same center formula in both modes; pairing only changes widths.
        let c = stats::mean(&va) - stats::mean(&vb);
        let (lo, hi) = if paired {
            let diffs: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| x - y).collect();
            let interval = match method {
                Method::StudentT => student_t_ci(&diffs, alpha)?,
                Method::Bootstrap => bootstrap_ci(&diffs, alpha, m, rng)?,
                _ => unreachable!(),
            };
            (interval.lower, interval.upper)
        } else {
            match method {
                Method::StudentT => {
                    let (center, half) = welch_interval(&va, &vb, alpha)?;
                    (center - half, center + half)
                }
                Method::Bootstrap => bootstrap_mean_diff(&va, &vb, alpha, m, rng),
                _ => unreachable!(),
            }
        };
        center.push(c);
        lower.push(lo);
        upper.push(hi);
    }
    let significant = lower
        .iter()
        .zip(&upper)
        .map(|(&lo, &hi)| lo > 0.0 || hi < 0.0)
        .collect();
    Ok(DiffCurve {
        label_a: a[0].fingerprint.clone(),
        label_b: b[0].fingerprint.clone(),
        paired,
        method,
        alpha,
        n_a: a.len(),
        n_b: b.len(),
        center,
        lower,
        upper,
        significant,
    })
}

/// Result of a paired test on scalar per-run summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedScalarTest {
    /// Mean per-pair difference; doubles as the effect-size estimate.
    pub effect: f64,
    pub interval: Interval,
    pub significant: bool,
    pub n_pairs: usize,
}

/// Student-t interval over per-pair differences of scalar summaries
/// (element i of each slice must come from the same seed).
pub fn paired_scalar_test(a: &[f64], b: &[f64], alpha: f64) -> Result<PairedScalarTest> {
    if a.len() != b.len() {
        return Err(Error::StatPrecondition(format!(
            "paired test needs equal-length samples, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let interval = student_t_ci(&diffs, alpha)?;
    let significant = interval.lower > 0.0 || interval.upper < 0.0;
    Ok(PairedScalarTest {
        effect: stats::mean(&diffs),
        interval,
        significant,
        n_pairs: a.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnpairedScalarTest {
    /// Difference of group means.
    pub effect: f64,
    pub interval: Interval,
    pub significant: bool,
    pub n_a: usize,
    pub n_b: usize,
}

/// Welch interval over the difference of two independent groups of scalar
/// summaries. The unpaired fallback when seed plans do not match; shared
/// run-to-run noise stays in the widths here instead of cancelling.
pub fn unpaired_scalar_test(a: &[f64], b: &[f64], alpha: f64) -> Result<UnpairedScalarTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::StatPrecondition(format!(
            "unpaired test needs at least 2 runs per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (center, half) = welch_interval(a, b, alpha)?;
    let interval = Interval {
        lower: center - half,
        upper: center + half,
        kind: IntervalKind::Confidence,
        alpha,
        beta: None,
        method: Method::StudentT,
        n_samples: a.len() + b.len(),
    };
    let significant = interval.lower > 0.0 || interval.upper < 0.0;
    Ok(UnpairedScalarTest {
        effect: center,
        interval,
        significant,
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// Bonferroni-adjusted per-comparison error rate for k planned
/// comparisons at family-wise rate alpha.
pub fn bonferroni(alpha: f64, k: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::StatPrecondition(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if k == 0 {
        return Err(Error::StatPrecondition(
            "bonferroni needs at least one comparison".into(),
        ));
    }
    Ok(alpha / k as f64)
}

/// One environment's contribution to a cross-environment summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroGroup {
    pub label: String,
    /// Per-run scalar summaries on the environment's native return scale.
    pub values: Vec<f64>,
    pub optimal_return: f64,
    pub worst_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroAggregate {
    /// All runs from all environments on the common [0, 1]-anchored scale,
    /// in group order.
    pub normalized: Vec<f64>,
    /// Bootstrap interval for the pooled mean.
    pub pooled_interval: Interval,
    /// Bootstrap interval per environment, same order as the input groups.
    pub per_env_intervals: Vec<Interval>,
}

/// Pool runs across environments after mapping each onto its own
/// worst-to-optimal scale. Pooling multiplies the effective sample size,
/// so the aggregate interval is tighter than any single environment's.
pub fn macro_aggregate(
    groups: &[MacroGroup],
    alpha: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<MacroAggregate> {
    if groups.is_empty() {
        return Err(Error::StatPrecondition(
            "macro aggregation needs at least one environment".into(),
        ));
    }
    let mut normalized = Vec::new();
    let mut per_env_intervals = Vec::with_capacity(groups.len());
    for group in groups {
        let scaled: Vec<f64> = group
            .values
            .iter()
            .map(|&g| normalize_return(g, group.optimal_return, group.worst_return))
            .collect::<Result<_>>()
            .map_err(|e| {
                Error::StatPrecondition(format!("environment {}: {e}", group.label))
            })?;
        per_env_intervals.push(bootstrap_ci(&scaled, alpha, m, rng)?);
        normalized.extend(scaled);
    }
    let pooled_interval = bootstrap_ci(&normalized, alpha, m, rng)?;
    debug_assert_eq!(pooled_interval.kind, IntervalKind::Confidence);
    Ok(MacroAggregate {
        normalized,
        pooled_interval,
        per_env_intervals,
    })
}
