//! Hyperparameter studies: grids, random search, sensitivity curves, and
//! the statistics of reporting a tuned result without fooling yourself.
//!
//! The quantity people quote after a sweep, the best configuration's
//! estimated score, is a maximum over noisy estimates and is biased
//! upward. `maximization_bias_probability` measures how often that
//! maximum overshoots the truth, `bootstrap_max_estimate` builds an
//! interval that accounts for the selection step, and
//! `naive_best_interval` exists as the overconfident baseline the other
//! two should be contrasted with.

use std::path::{Path, PathBuf};

use crate::agents::HyperConfig;
use crate::error::{Error, Result};
use crate::seed::RngStream;
use crate::stats::{self, student_t_ci, Interval, IntervalKind, Method};

/// Geometric grid base^lo, base^(lo+1), ..., base^hi.
pub fn power_grid(base: f64, lo: i32, hi: i32) -> Result<Vec<f64>> {
    if !(base > 0.0 && base.is_finite()) {
        return Err(Error::Config(format!(
            "power grid base must be positive and finite, got {base}"
        )));
    }
    if lo > hi {
        return Err(Error::Config(format!(
            "power grid needs lo <= hi, got {lo} > {hi}"
        )));
    }
    Ok((lo..=hi).map(|e| base.powi(e)).collect())
}

/// Performance as a function of one hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    /// Hyperparameter values, ascending.
    pub values: Vec<f64>,
    /// Per-run scores at each value, aligned with `values`.
    pub runs: Vec<Vec<f64>>,
    /// Mean score at each value.
    pub means: Vec<f64>,
    /// Bootstrap interval for each value's mean.
    pub intervals: Vec<Interval>,
    pub best_index: usize,
    /// True when the best value sits on the edge of the sweep, meaning
    /// the sweep may have missed the real optimum.
    pub boundary_flag: bool,
}

/// Build a sensitivity curve from (hyper value, per-run scores) points.
/// Points arrive in any order; ties in the mean resolve to the smaller
/// hyperparameter value.
pub fn sensitivity(
    points: &[(f64, Vec<f64>)],
    alpha: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<SensitivityCurve> {
    if points.is_empty() {
        return Err(Error::StatPrecondition(
            "sensitivity curve needs at least one hyperparameter value".into(),
        ));
    }
    if let Some((v, scores)) = points.iter().find(|(_, scores)| scores.len() < 2) {
        return Err(Error::StatPrecondition(format!(
            "hyperparameter value {v} has {} runs; intervals need at least 2",
            scores.len()
        )));
    }
    let mut ordered: Vec<&(f64, Vec<f64>)> = points.iter().collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = ordered.iter().map(|(v, _)| *v).collect();
    if values.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::StatPrecondition(
            "duplicate hyperparameter values in sensitivity input".into(),
        ));
    }
    let runs: Vec<Vec<f64>> = ordered.iter().map(|(_, s)| s.clone()).collect();
    let means: Vec<f64> = runs.iter().map(|s| stats::mean(s)).collect();
    let intervals: Vec<Interval> = runs
        .iter()
        .map(|s| stats::bootstrap_ci(s, alpha, m, rng))
        .collect::<Result<_>>()?;
    let best_index = means
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("nonempty");
    let boundary_flag = best_index == 0 || best_index == values.len() - 1;
    Ok(SensitivityCurve {
        values,
        runs,
        means,
        intervals,
        best_index,
        boundary_flag,
    })
}

/// Budget audit for a comparison between tuned methods.
#[derive(Debug, Clone, PartialEq)]
pub struct FairSetReport {
    pub min_count: usize,
    /// Labels that received more configurations than the minimum.
    pub offenders: Vec<String>,
    pub fair: bool,
}

/// A comparison is only fair if every method got the same number of
/// tuning configurations; the ones above the minimum had extra chances to
/// look good.
pub fn fair_set_check(counts: &[(String, usize)]) -> Result<FairSetReport> {
    if counts.is_empty() {
        return Err(Error::StatPrecondition(
            "fair-set check needs at least one method".into(),
        ));
    }
    let min_count = counts.iter().map(|(_, c)| *c).min().expect("nonempty");
    let offenders: Vec<String> = counts
        .iter()
        .filter(|(_, c)| *c > min_count)
        .map(|(label, _)| label.clone())
        .collect();
    Ok(FairSetReport {
        min_count,
        fair: offenders.is_empty(),
        offenders,
    })
}

/// Sampling distribution for one hyperparameter dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperRange {
    Uniform { lo: f64, hi: f64 },
    /// Uniform in log space; suits scale parameters like stepsizes.
    LogUniform { lo: f64, hi: f64 },
    Choice(Vec<f64>),
}

impl HyperRange {
    fn validate(&self, key: &str) -> Result<()> {
        match self {
            HyperRange::Uniform { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => {
                Ok(())
            }
            HyperRange::LogUniform { lo, hi }
                if *lo > 0.0 && lo < hi && hi.is_finite() =>
            {
                Ok(())
            }
            HyperRange::Choice(options) if !options.is_empty() => Ok(()),
            _ => Err(Error::Config(format!("invalid sampling range for {key}"))),
        }
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        let u: f64 = rand::Rng::random(rng);
        match self {
            HyperRange::Uniform { lo, hi } => lo + u * (hi - lo),
            HyperRange::LogUniform { lo, hi } => {
                (lo.ln() + u * (hi.ln() - lo.ln())).exp()
            }
            HyperRange::Choice(options) => {
                options[rand::Rng::random_range(rng, 0..options.len())]
            }
        }
    }
}

/// Draw `count` configurations from a product of per-key ranges.
pub fn random_configs(
    space: &[(String, HyperRange)],
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<HyperConfig>> {
    if space.is_empty() {
        return Err(Error::Config("empty hyperparameter space".into()));
    }
    for (key, range) in space {
        range.validate(key)?;
    }
    Ok((0..count)
        .map(|_| {
            space.iter().fold(HyperConfig::new(), |config, (key, range)| {
                config.set(key, range.sample(rng))
            })
        })
        .collect())
}

/// Best-configuration estimate with selection accounted for.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapMax {
    /// Index of the configuration with the best sample mean.
    pub best_index: usize,
    /// Its sample mean: the naive, upward-biased report.
    pub naive_max: f64,
    /// Mean of the resampled max-of-means distribution.
    pub estimate: f64,
    /// Percentile interval of the resampled max-over-configs mean.
    pub interval: Interval,
}

/// Bootstrap the entire select-the-max procedure: resample every
/// configuration's runs, recompute each mean, take the max, repeat m
/// times. The percentile interval of that max reflects both estimation
/// noise and the selection step; with one configuration it reduces to a
/// plain bootstrap of the mean.
pub fn bootstrap_max_estimate(
    config_samples: &[Vec<f64>],
    alpha: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<BootstrapMax> {
    if config_samples.is_empty() {
        return Err(Error::StatPrecondition(
            "bootstrap max needs at least one configuration".into(),
        ));
    }
    if config_samples.iter().any(|s| s.len() < 2) {
        return Err(Error::StatPrecondition(
            "bootstrap max needs at least 2 runs per configuration".into(),
        ));
    }
    if m < 100 {
        return Err(Error::StatPrecondition(format!(
            "bootstrap needs at least 100 resamples, got {m}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::StatPrecondition(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let means: Vec<f64> = config_samples.iter().map(|s| stats::mean(s)).collect();
    let best_index = means
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("nonempty");

    let mut maxes = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best = f64::NEG_INFINITY;
        for samples in config_samples {
            let n = samples.len();
            let total: f64 = (0..n)
                .map(|_| samples[rand::Rng::random_range(rng, 0..n)])
                .sum();
            best = best.max(total / n as f64);
        }
        maxes.push(best);
    }
    let estimate = stats::mean(&maxes);
    maxes.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        let pos = q * (m - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (pos.ceil() as usize).min(m - 1);
        maxes[lo] + (maxes[hi] - maxes[lo]) * (pos - lo as f64)
    };
    let total_n: usize = config_samples.iter().map(Vec::len).sum();
    let interval = Interval {
        lower: pick(alpha / 2.0),
        upper: pick(1.0 - alpha / 2.0),
        kind: IntervalKind::Confidence,
        alpha,
        beta: None,
        method: Method::Bootstrap,
        n_samples: total_n,
    };
    Ok(BootstrapMax {
        best_index,
        naive_max: means[best_index],
        estimate,
        interval,
    })
}

/// The overconfident baseline: pick the best configuration by sample
/// mean, then report a Student-t interval from its runs alone as if it
/// had been chosen in advance. Under-covers whenever several
/// configurations are close.
pub fn naive_best_interval(
    config_samples: &[Vec<f64>],
    alpha: f64,
) -> Result<(usize, Interval)> {
    if config_samples.is_empty() {
        return Err(Error::StatPrecondition(
            "best-config interval needs at least one configuration".into(),
        ));
    }
    let means: Vec<f64> = config_samples.iter().map(|s| stats::mean(s)).collect();
    let best_index = means
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("nonempty");
    Ok((best_index, student_t_ci(&config_samples[best_index], alpha)?))
}

/// Monte Carlo estimate of how often a sweep's reported best score
/// exceeds the true best mean. Each sweep draws `n_per_config` normal
/// samples per configuration at the given noise level, averages, and
/// takes the max.
pub fn maximization_bias_probability(
    true_means: &[f64],
    sigma: f64,
    n_per_config: usize,
    sweeps: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if true_means.is_empty() {
        return Err(Error::StatPrecondition(
            "need at least one configuration".into(),
        ));
    }
    if sigma.is_nan() || sigma < 0.0 || n_per_config == 0 || sweeps < 100 {
        return Err(Error::StatPrecondition(
            "need sigma >= 0, n_per_config >= 1 and sweeps >= 100".into(),
        ));
    }
    let true_best = true_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = sigma / (n_per_config as f64).sqrt();
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("valid");
    let mut overshoots = 0usize;
    for _ in 0..sweeps {
        let max_estimate = true_means
            .iter()
            .map(|&mu| {
                let noise: f64 = if scale == 0.0 {
                    0.0
                } else {
                    rand_distr::Distribution::sample(&normal, rng) * scale
                };
                mu + noise
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if max_estimate > true_best {
            overshoots += 1;
        }
    }
    Ok(overshoots as f64 / sweeps as f64)
}

/// Closed form for the equal-means case with continuous symmetric noise:
/// the max of H independent unbiased estimates exceeds the common true
/// mean unless every single one lands below it.
pub fn maximization_bias_closed_form(h: usize) -> Result<f64> {
    if h == 0 {
        return Err(Error::StatPrecondition(
            "need at least one configuration".into(),
        ));
    }
    Ok(1.0 - 0.5f64.powi(h as i32))
}

/// One environment's sweep over a shared hyperparameter grid, on a scale
/// comparable across environments.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSweep {
    pub label: String,
    pub grid: Vec<f64>,
    /// scores[h] holds the per-run scores at grid value h.
    pub scores: Vec<Vec<f64>>,
}

/// Leave-one-environment-out view of hyperparameter transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct LooReport {
    pub grid: Vec<f64>,
    /// Grid index chosen with every environment included.
    pub overall_index: usize,
    /// Per fold: grid index chosen without that environment.
    pub fold_indices: Vec<usize>,
    /// Per fold: held-out environment's mean score at the transferred
    /// index.
    pub fold_transfer_scores: Vec<f64>,
    /// Per fold: held-out environment's mean score at its own best index.
    pub fold_best_scores: Vec<f64>,
    /// Mean held-out score: the honest estimate of deploying the
    /// cross-environment choice on a new environment.
    pub estimate: f64,
}

fn argmax_lowest_tie(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("nonempty")
}

/// How well does a hyperparameter tuned on all-but-one environment carry
/// to the held-out one? Environments weigh equally (mean of per-env
/// means), grids must match exactly, and mean ties resolve to the lowest
/// grid index so results do not depend on float noise ordering.
pub fn loo_hyper_generalization(envs: &[EnvSweep]) -> Result<LooReport> {
    if envs.len() < 2 {
        return Err(Error::StatPrecondition(
            "leave-one-out needs at least two environments".into(),
        ));
    }
    let grid = &envs[0].grid;
    if grid.is_empty() {
        return Err(Error::StatPrecondition("empty hyperparameter grid".into()));
    }
    for env in envs {
        if &env.grid != grid {
            return Err(Error::StatPrecondition(format!(
                "environment {} swept a different grid",
                env.label
            )));
        }
        if env.scores.len() != grid.len() {
            return Err(Error::StatPrecondition(format!(
                "environment {} has {} score groups for a grid of {}",
                env.label,
                env.scores.len(),
                grid.len()
            )));
        }
        if env.scores.iter().any(Vec::is_empty) {
            return Err(Error::StatPrecondition(format!(
                "environment {} has a grid value with no runs",
                env.label
            )));
        }
    }

    // env_means[e][h]
    let env_means: Vec<Vec<f64>> = envs
        .iter()
        .map(|env| env.scores.iter().map(|s| stats::mean(s)).collect())
        .collect();
    let mean_over = |skip: Option<usize>| -> Vec<f64> {
        (0..grid.len())
            .map(|h| {
                let (total, count) = env_means
                    .iter()
                    .enumerate()
                    .filter(|(e, _)| Some(*e) != skip)
                    .fold((0.0, 0usize), |(t, c), (_, means)| (t + means[h], c + 1));
                total / count as f64
            })
            .collect()
    };

    let overall_index = argmax_lowest_tie(&mean_over(None));
    let mut fold_indices = Vec::with_capacity(envs.len());
    let mut fold_transfer_scores = Vec::with_capacity(envs.len());
    let mut fold_best_scores = Vec::with_capacity(envs.len());
    for e in 0..envs.len() {
        let idx = argmax_lowest_tie(&mean_over(Some(e)));
        fold_indices.push(idx);
        fold_transfer_scores.push(env_means[e][idx]);
        fold_best_scores.push(env_means[e][argmax_lowest_tie(&env_means[e])]);
    }
    let estimate = stats::mean(&fold_transfer_scores);
    Ok(LooReport {
        grid: grid.clone(),
        overall_index,
        fold_indices,
        fold_transfer_scores,
        fold_best_scores,
        estimate,
    })
}

/// Five-number summary of per-configuration means, backing a violin or
/// box rendering of how performance varies across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolinSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub n_configs: usize,
}

/// Summarize a sweep's pooled per-config means. One configuration gives a
/// degenerate summary at its mean. Comparing violins across algorithms is
/// only fair after `fair_set_check` passes.
pub fn violin_data(config_samples: &[Vec<f64>]) -> Result<ViolinSummary> {
    if config_samples.is_empty() {
        return Err(Error::StatPrecondition(
            "violin summary needs at least one configuration".into(),
        ));
    }
    if config_samples.iter().any(Vec::is_empty) {
        return Err(Error::StatPrecondition(
            "every configuration needs at least one run".into(),
        ));
    }
    let mut means: Vec<f64> = config_samples.iter().map(|s| stats::mean(s)).collect();
    if let Some(bad) = means.iter().find(|v| !v.is_finite()) {
        return Err(Error::StatPrecondition(format!("non-finite config mean {bad}")));
    }
    means.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (means.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (pos.ceil() as usize).min(means.len() - 1);
        means[lo] + (means[hi] - means[lo]) * (pos - lo as f64)
    };
    Ok(ViolinSummary {
        min: means[0],
        q25: q(0.25),
        median: q(0.5),
        q75: q(0.75),
        max: means[means.len() - 1],
        n_configs: config_samples.len(),
    })
}

/// One manifest row of a stored sweep. The batch record files themselves
/// live in `dir` (relative to the manifest), one directory per
/// configuration, keyed by the configuration's experiment fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepManifestRow {
    /// Experiment fingerprint of the configuration.
    pub config_id: String,
    /// Canonical `key=value` hyperparameter string.
    pub hypers: String,
    pub n_runs: usize,
    /// Directory name holding the configuration's record files.
    pub dir: String,
}

const MANIFEST_NAME: &str = "sweep_manifest.csv";

/// Write the manifest table for a sweep whose record batches are already
/// on disk under `dir`.
pub fn write_sweep_manifest(dir: &Path, rows: &[SweepManifestRow]) -> Result<PathBuf> {
    if rows.is_empty() {
        return Err(Error::StatPrecondition(
            "refusing to write an empty sweep manifest".into(),
        ));
    }
    std::fs::create_dir_all(dir)?;
    // Hypers go last: the canonical string contains commas itself.
    let mut manifest = String::from("# columns: config_id,n_runs,dir,hypers\n");
    for row in rows {
        manifest.push_str(&format!(
            "{},{},{},{}\n",
            row.config_id, row.n_runs, row.dir, row.hypers
        ));
    }
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest)?;
    Ok(path)
}

/// Load a sweep manifest, in row order.
pub fn read_sweep_manifest(dir: &Path) -> Result<Vec<SweepManifestRow>> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let manifest = std::fs::read_to_string(&manifest_path)?;
    let mut rows = Vec::new();
    for line in manifest.lines().filter(|l| !l.starts_with('#')) {
        let fields: Vec<&str> = line.splitn(4, ',').collect();
        if fields.len() != 4 {
            return Err(Error::RecordFormat(format!(
                "bad manifest row `{line}` in {}",
                manifest_path.display()
            )));
        }
        let (config_id, n_runs, row_dir, hypers) =
            (fields[0], fields[1], fields[2], fields[3]);
        let n_runs: usize = n_runs.parse().map_err(|_| {
            Error::RecordFormat(format!("bad run count `{n_runs}` in manifest"))
        })?;
        rows.push(SweepManifestRow {
            config_id: config_id.to_string(),
            hypers: hypers.to_string(),
            n_runs,
            dir: row_dir.to_string(),
        });
    }
    if rows.is_empty() {
        return Err(Error::RecordFormat(format!(
            "no sweep entries in {}",
            manifest_path.display()
        )));
    }
    Ok(rows)
}
