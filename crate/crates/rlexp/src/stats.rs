//! Interval estimators and robust summaries for small run counts.
//!
//! Confidence intervals (Student-t, percentile bootstrap, empirical
//! Bernstein) quantify uncertainty in the mean and shrink as runs are
//! added. Tolerance intervals instead bound where a chosen fraction of
//! future runs will land, and deliberately do not shrink to zero. There is
//! no standard-error output anywhere in this module: a bare standard error
//! is a confidence interval at an unlabeled, far lower confidence level,
//! and reporting one invites exactly that misreading.

use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

use crate::error::{Error, Result};
use crate::seed::RngStream;

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    Confidence,
    Tolerance,
}

impl IntervalKind {
    pub fn id(self) -> &'static str {
        match self {
            IntervalKind::Confidence => "confidence",
            IntervalKind::Tolerance => "tolerance",
        }
    }
}

/// Estimator that produced an interval. The ids double as the CLI's method
/// flag values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    StudentT,
    Bootstrap,
    Bernstein,
    Tolerance,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::StudentT => "t",
            Method::Bootstrap => "bootstrap",
            Method::Bernstein => "bernstein",
            Method::Tolerance => "tolerance",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(Method::StudentT),
            "bootstrap" => Ok(Method::Bootstrap),
            "bernstein" => Ok(Method::Bernstein),
            "tolerance" => Ok(Method::Tolerance),
            other => Err(Error::Config(format!(
                "unknown interval method `{other}`, expected t, bootstrap, bernstein or tolerance"
            ))),
        }
    }
}

/// An interval plus everything needed to read it honestly: what kind of
/// statement it makes, at what error rate, from how many samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub kind: IntervalKind,
    pub alpha: f64,
    /// Content fraction; present exactly for tolerance intervals.
    pub beta: Option<f64>,
    pub method: Method,
    pub n_samples: usize,
}

impl Interval {
    fn new(
        lower: f64,
        upper: f64,
        kind: IntervalKind,
        alpha: f64,
        beta: Option<f64>,
        method: Method,
        n_samples: usize,
    ) -> Self {
        debug_assert!(lower <= upper);
        debug_assert!(beta.is_some() == (kind == IntervalKind::Tolerance));
        Interval {
            lower,
            upper,
            kind,
            alpha,
            beta,
            method,
            n_samples,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// Comma-separated row matching the header
    /// `method,alpha,beta,lower,upper,n`.
    pub fn table_row(&self) -> String {
        let beta = match self.beta {
            Some(b) => b.to_string(),
            None => "-".to_string(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.method.id(),
            self.alpha,
            beta,
            self.lower,
            self.upper,
            self.n_samples
        )
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::StatPrecondition(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_n(samples: &[f64], least: usize, what: &str) -> Result<()> {
    if samples.len() < least {
        return Err(Error::StatPrecondition(format!(
            "{what} needs at least {least} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::StatPrecondition(format!(
            "non-finite sample {bad}"
        )));
    }
    Ok(())
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub(crate) fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Linear-interpolation quantile of pre-sorted values, position q(n-1).
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    interpolate_position(sorted, q * (sorted.len() - 1) as f64)
}

fn interpolate_position(sorted: &[f64], position: f64) -> f64 {
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    let frac = position - lo as f64;
    sorted[lo] + (sorted[hi.min(sorted.len() - 1)] - sorted[lo]) * frac
}

/// Two-sided Student-t multiplier at confidence 1 - alpha with n - 1
/// degrees of freedom.
pub fn t_multiplier(alpha: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::StatPrecondition(format!(
            "t multiplier needs n >= 2, got {n}"
        )));
    }
    t_multiplier_from_df(alpha, (n - 1) as f64)
}

/// Fractional degrees of freedom, for Welch-style approximations.
pub(crate) fn t_multiplier_from_df(alpha: f64, df: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if df.is_nan() || df <= 0.0 {
        return Err(Error::StatPrecondition(format!(
            "t multiplier needs positive degrees of freedom, got {df}"
        )));
    }
    let t = StudentsT::new(0.0, 1.0, df).expect("valid Student-t parameters");
    Ok(t.inverse_cdf(1.0 - alpha / 2.0))
}

/// Mean +/- t * sigma-hat / sqrt(n). Degenerates to [mean, mean] on
/// zero-variance input.
pub fn student_t_ci(samples: &[f64], alpha: f64) -> Result<Interval> {
    check_n(samples, 2, "a Student-t interval")?;
    let n = samples.len();
    let center = mean(samples);
    let half = t_multiplier(alpha, n)? * (sample_variance(samples) / n as f64).sqrt();
    Ok(Interval::new(
        center - half,
        center + half,
        IntervalKind::Confidence,
        alpha,
        None,
        Method::StudentT,
        n,
    ))
}

/// Percentile-method bootstrap interval for the mean: resample n-of-n with
/// replacement m times, take the (alpha/2, 1 - alpha/2) quantiles of the
/// resampled means. The rng is an explicit analysis stream so results are
/// reproducible.
pub fn bootstrap_ci(samples: &[f64], alpha: f64, m: usize, rng: &mut RngStream) -> Result<Interval> {
    check_alpha(alpha)?;
    check_n(samples, 2, "a bootstrap interval")?;
    if m < 100 {
        return Err(Error::StatPrecondition(format!(
            "bootstrap needs at least 100 resamples, got {m}"
        )));
    }
    let n = samples.len();
    let mut means = Vec::with_capacity(m);
    for _ in 0..m {
        let mut total = 0.0;
        for _ in 0..n {
            total += samples[rand::Rng::random_range(rng, 0..n)];
        }
        means.push(total / n as f64);
    }
    means.sort_by(f64::total_cmp);
    Ok(Interval::new(
        sorted_quantile(&means, alpha / 2.0),
        sorted_quantile(&means, 1.0 - alpha / 2.0),
        IntervalKind::Confidence,
        alpha,
        None,
        Method::Bootstrap,
        n,
    ))
}

/// Empirical Bernstein interval for the mean of range-bounded samples:
/// mean +/- [ sqrt(2 sigma-hat^2 ln(3/alpha) / n) + 3 R ln(3/alpha) / n ]
/// with R the declared range width. Guaranteed coverage on any bounded
/// distribution, at the price of being much wider than the t interval.
pub fn bernstein_ci(samples: &[f64], alpha: f64, value_range: (f64, f64)) -> Result<Interval> {
    check_alpha(alpha)?;
    check_n(samples, 2, "a Bernstein interval")?;
    let (lo, hi) = value_range;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::StatPrecondition(format!(
            "empty value range ({lo}, {hi})"
        )));
    }
    if let Some(bad) = samples.iter().find(|&&v| v < lo || v > hi) {
        return Err(Error::StatPrecondition(format!(
            "sample {bad} outside the declared range [{lo}, {hi}]"
        )));
    }
    let n = samples.len() as f64;
    let log_term = (3.0 / alpha).ln();
    let center = mean(samples);
    let half = (2.0 * sample_variance(samples) * log_term / n).sqrt()
        + 3.0 * (hi - lo) * log_term / n;
    Ok(Interval::new(
        center - half,
        center + half,
        IntervalKind::Confidence,
        alpha,
        None,
        Method::Bernstein,
        samples.len(),
    ))
}

/// Distribution-free (alpha, beta) tolerance interval from order
/// statistics.
///
/// The count of samples to trim comes from the binomial inverse CDF: with
/// nu = n - InvCDF[Binomial(n, beta)](1 - alpha), the symmetric window
/// between the (nu/2)-th smallest and largest samples contains at least a
/// beta fraction of the distribution with probability 1 - alpha.
/// Fractional trim counts interpolate between adjacent order statistics.
/// When even the full sample range cannot deliver the guarantee (nu < 2),
/// more runs are required and this errors rather than quietly under-cover.
pub fn tolerance_interval(samples: &[f64], alpha: f64, beta: f64) -> Result<Interval> {
    check_alpha(alpha)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::StatPrecondition(format!(
            "beta must be in (0, 1), got {beta}"
        )));
    }
    check_n(samples, 2, "a tolerance interval")?;
    let n = samples.len();
    let binomial =
        Binomial::new(beta, n as u64).expect("checked beta and n make a valid binomial");
    let keep = binomial.inverse_cdf(1.0 - alpha);
    let nu = n as f64 - keep as f64;
    if nu < 2.0 {
        return Err(Error::StatPrecondition(format!(
            "{n} samples cannot support a ({alpha}, {beta}) tolerance interval; collect more runs"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    // 1-indexed order statistics nu/2 and n + 1 - nu/2, as 0-indexed
    // positions. nu = 2 keeps the full sample range.
    let lower = interpolate_position(&sorted, nu / 2.0 - 1.0);
    let upper = interpolate_position(&sorted, n as f64 - nu / 2.0);
    Ok(Interval::new(
        lower,
        upper,
        IntervalKind::Tolerance,
        alpha,
        Some(beta),
        Method::Tolerance,
        n,
    ))
}

/// Interquartile mean: the mean of the middle half of the sorted sample.
/// With n not divisible by four, the boundary samples contribute
/// fractionally so the trimmed mass is exactly one quarter per side.
pub fn iqm(samples: &[f64]) -> Result<f64> {
    check_n(samples, 4, "the interquartile mean")?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let trim = n as f64 / 4.0;
    let whole = trim.floor() as usize;
    let frac = trim - whole as f64;
    let kept = &sorted[whole..n - whole];
    let mut total = 0.0;
    let mut weight = 0.0;
    for (i, &v) in kept.iter().enumerate() {
        let w = if i == 0 || i == kept.len() - 1 {
            1.0 - frac
        } else {
            1.0
        };
        total += w * v;
        weight += w;
    }
    Ok(total / weight)
}

/// Histogram plus kernel density summary of a performance sample, with a
/// conservative mode count for spotting multi-modal (and therefore
/// mean-unfriendly) distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfDistribution {
    /// `masses.len() + 1` edges; masses sum to one.
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub kde_x: Vec<f64>,
    pub kde_density: Vec<f64>,
    /// Locations of detected density modes, ascending.
    pub mode_xs: Vec<f64>,
    pub bimodal: bool,
}

const KDE_GRID: usize = 256;
// A peak only counts as a separate mode when the density dips at least
// this far below the smaller peak somewhere between them.
const MODE_VALLEY_DIP: f64 = 0.8;
// And when it is not dwarfed by the global mode.
const MODE_FLOOR: f64 = 0.05;

pub fn perf_distribution(samples: &[f64], n_bins: usize) -> Result<PerfDistribution> {
    check_n(samples, 2, "a performance distribution")?;
    if n_bins == 0 {
        return Err(Error::StatPrecondition("need at least one bin".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let n = sorted.len();

    let (bin_edges, masses) = if hi == lo {
        (vec![lo, hi], vec![1.0])
    } else {
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
        let mut masses = vec![0.0; n_bins];
        for &v in &sorted {
            let bin = (((v - lo) / width) as usize).min(n_bins - 1);
            masses[bin] += 1.0 / n as f64;
        }
        (edges, masses)
    };

    // Silverman's rule, with a floor so constant-ish data stays finite.
    let std = sample_variance(&sorted).sqrt();
    let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
    let mut h = 0.9 * std.min(iqr / 1.34) * (n as f64).powf(-0.2);
    if h.is_nan() || h <= 0.0 {
        h = (hi - lo).max(lo.abs().max(1.0) * 1e-6) / n as f64 + f64::MIN_POSITIVE;
    }

    let grid_lo = lo - 3.0 * h;
    let grid_hi = hi + 3.0 * h;
    let step = (grid_hi - grid_lo) / (KDE_GRID - 1) as f64;
    let kde_x: Vec<f64> = (0..KDE_GRID).map(|i| grid_lo + step * i as f64).collect();
    let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let kde_density: Vec<f64> = kde_x
        .iter()
        .map(|&x| {
            norm * sorted
                .iter()
                .map(|&xi| (-0.5 * ((x - xi) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();

    let mode_xs = detect_modes(&kde_x, &kde_density);
    let bimodal = mode_xs.len() >= 2;
    Ok(PerfDistribution {
        bin_edges,
        masses,
        kde_x,
        kde_density,
        mode_xs,
        bimodal,
    })
}

fn detect_modes(xs: &[f64], density: &[f64]) -> Vec<f64> {
    let peak_max = density.iter().fold(0.0f64, |m, &d| m.max(d));
    if peak_max == 0.0 {
        return Vec::new();
    }
    let mut peaks: Vec<usize> = (1..density.len() - 1)
        .filter(|&i| density[i] > density[i - 1] && density[i] > density[i + 1])
        .filter(|&i| density[i] >= MODE_FLOOR * peak_max)
        .collect();
    peaks.sort_by(|&a, &b| density[b].total_cmp(&density[a]));

    let mut accepted: Vec<usize> = Vec::new();
    'candidates: for &peak in &peaks {
        for &kept in &accepted {
            let (from, to) = if peak < kept { (peak, kept) } else { (kept, peak) };
            let valley = density[from..=to]
                .iter()
                .fold(f64::INFINITY, |m, &d| m.min(d));
            let smaller = density[peak].min(density[kept]);
            // No real dip between them: same mode, keep the taller one.
            if valley > MODE_VALLEY_DIP * smaller {
                continue 'candidates;
            }
        }
        accepted.push(peak);
    }
    let mut xs: Vec<f64> = accepted.into_iter().map(|i| xs[i]).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Heavy-left-tail benchmark distribution: a 95/5 mixture of
/// Normal(-100, 10^2) and Normal(-900, 50^2). Small samples frequently
/// miss the tail component entirely, which makes nominal 95% intervals
/// for the mean under-cover badly.
#[derive(Debug, Clone)]
pub struct LongTailedMixture {
    main: rand_distr::Normal<f64>,
    tail: rand_distr::Normal<f64>,
}

impl LongTailedMixture {
    pub const TAIL_WEIGHT: f64 = 0.05;
    /// Exact mixture mean: 0.95 * -100 + 0.05 * -900.
    pub const MEAN: f64 = -140.0;

    pub fn new() -> Self {
        LongTailedMixture {
            main: rand_distr::Normal::new(-100.0, 10.0).expect("valid"),
            tail: rand_distr::Normal::new(-900.0, 50.0).expect("valid"),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        use rand_distr::Distribution;
        if rand::Rng::random::<f64>(rng) < Self::TAIL_WEIGHT {
            self.tail.sample(rng)
        } else {
            self.main.sample(rng)
        }
    }
}

impl Default for LongTailedMixture {
    fn default() -> Self {
        Self::new()
    }
}

/// Fraction of `reps` repetitions in which the interval built from a fresh
/// sample contains `true_value`. `draw` produces one sample set; `build`
/// turns it into an interval (and may consume randomness of its own, e.g.
/// for bootstrap resampling).
pub fn estimate_coverage(
    reps: usize,
    true_value: f64,
    rng: &mut RngStream,
    mut draw: impl FnMut(&mut RngStream) -> Vec<f64>,
    mut build: impl FnMut(&[f64], &mut RngStream) -> Result<Interval>,
) -> Result<f64> {
    if reps == 0 {
        return Err(Error::StatPrecondition(
            "coverage estimation needs at least one repetition".into(),
        ));
    }
    let mut hits = 0usize;
    for _ in 0..reps {
        let samples = draw(rng);
        if build(&samples, rng)?.contains(true_value) {
            hits += 1;
        }
    }
    Ok(hits as f64 / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{derive_stream, StreamLabel};
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    fn analysis_rng(seed: u64) -> RngStream {
        derive_stream(seed, 0, StreamLabel::Analysis)
    }

    #[test]
    fn t_multipliers_match_the_reference_table() {
        assert_relative_eq!(t_multiplier(0.05, 3).unwrap(), 4.303, epsilon = 1e-3);
        assert_relative_eq!(t_multiplier(0.05, 10).unwrap(), 2.262, epsilon = 1e-3);
        assert_relative_eq!(t_multiplier(0.05, 1000).unwrap(), 1.962, epsilon = 1e-3);
        assert!(t_multiplier(0.05, 1).is_err());
        assert!(t_multiplier(0.0, 10).is_err());
    }

    #[test]
    fn t_interval_matches_hand_computation() {
        // {0, 1, 2}: mean 1, sigma-hat 1, half-width 4.3027/sqrt(3).
        let interval = student_t_ci(&[0.0, 1.0, 2.0], 0.05).unwrap();
        assert_relative_eq!(interval.lower, 1.0 - 4.3027 / 3f64.sqrt(), epsilon = 1e-3);
        assert_relative_eq!(interval.upper, 1.0 + 4.3027 / 3f64.sqrt(), epsilon = 1e-3);
        assert_eq!(interval.n_samples, 3);
        assert_eq!(interval.kind, IntervalKind::Confidence);
        assert_eq!(interval.beta, None);
    }

    #[test]
    fn t_interval_degenerates_on_constant_data() {
        let interval = student_t_ci(&[2.5; 10], 0.05).unwrap();
        assert_eq!((interval.lower, interval.upper), (2.5, 2.5));
        assert!(student_t_ci(&[1.0], 0.05).is_err());
    }

    #[test]
    fn t_interval_width_halves_when_n_quadruples() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = analysis_rng(7);
        let mut ratio_sum = 0.0;
        let reps = 300;
        for _ in 0..reps {
            let small: Vec<f64> = (0..100).map(|_| normal.sample(&mut rng)).collect();
            let large: Vec<f64> = (0..400).map(|_| normal.sample(&mut rng)).collect();
            ratio_sum += student_t_ci(&large, 0.05).unwrap().width()
                / student_t_ci(&small, 0.05).unwrap().width();
        }
        let mean_ratio = ratio_sum / reps as f64;
        assert!((mean_ratio - 0.5).abs() < 0.05, "{mean_ratio}");
    }

    #[test]
    fn bootstrap_interval_stays_inside_the_sample_hull() {
        let samples: Vec<f64> = (0..40).map(|i| i as f64 / 10.0).collect();
        let interval = bootstrap_ci(&samples, 0.05, 2000, &mut analysis_rng(1)).unwrap();
        assert!(interval.lower >= 0.0 && interval.upper <= 3.9);
        assert!(interval.contains(mean(&samples)));
        assert_eq!(interval.method, Method::Bootstrap);
    }

    #[test]
    fn bootstrap_is_deterministic_given_the_stream() {
        let samples = [1.0, 4.0, 2.0, 8.0, 5.0];
        let a = bootstrap_ci(&samples, 0.05, 500, &mut analysis_rng(3)).unwrap();
        let b = bootstrap_ci(&samples, 0.05, 500, &mut analysis_rng(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_degenerates_on_constant_data_and_checks_m() {
        let interval = bootstrap_ci(&[3.0; 12], 0.05, 200, &mut analysis_rng(0)).unwrap();
        assert_eq!((interval.lower, interval.upper), (3.0, 3.0));
        assert!(bootstrap_ci(&[1.0, 2.0], 0.05, 99, &mut analysis_rng(0)).is_err());
    }

    #[test]
    fn bernstein_is_wider_than_t_and_checks_its_range() {
        let mut rng = analysis_rng(5);
        let normal = Normal::new(0.5, 0.1).unwrap();
        let samples: Vec<f64> = (0..30)
            .map(|_| f64::clamp(normal.sample(&mut rng), 0.0, 1.0))
            .collect();
        let bernstein = bernstein_ci(&samples, 0.05, (0.0, 1.0)).unwrap();
        let student = student_t_ci(&samples, 0.05).unwrap();
        assert!(bernstein.width() > student.width());
        assert!(bernstein_ci(&samples, 0.05, (0.6, 1.0)).is_err());
    }

    #[test]
    fn bernstein_degenerates_with_an_empty_range() {
        let interval = bernstein_ci(&[2.0; 5], 0.05, (2.0, 2.0)).unwrap();
        assert_eq!((interval.lower, interval.upper), (2.0, 2.0));
    }

    #[test]
    fn tolerance_keeps_the_full_range_at_fifty_samples() {
        // At n = 50, (0.05, 0.9) the binomial arithmetic leaves exactly two
        // samples of slack: the interval is the sample min and max.
        let mut rng = analysis_rng(11);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..50).map(|_| normal.sample(&mut rng)).collect();
        let interval = tolerance_interval(&samples, 0.05, 0.9).unwrap();
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((interval.lower, interval.upper), (lo, hi));
        assert_eq!(interval.kind, IntervalKind::Tolerance);
        assert_eq!(interval.beta, Some(0.9));
    }

    #[test]
    fn tolerance_refuses_sample_sizes_it_cannot_honor() {
        let samples: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let err = tolerance_interval(&samples, 0.05, 0.9).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn tolerance_is_ordering_invariant_and_contains_the_naive_band() {
        let mut rng = analysis_rng(13);
        let normal = Normal::new(5.0, 2.0).unwrap();
        let mut samples: Vec<f64> = (0..80).map(|_| normal.sample(&mut rng)).collect();
        let a = tolerance_interval(&samples, 0.05, 0.9).unwrap();
        samples.reverse();
        samples.swap(3, 60);
        let b = tolerance_interval(&samples, 0.05, 0.9).unwrap();
        assert_eq!(a, b);

        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let naive_lo = sorted_quantile(&sorted, 0.05);
        let naive_hi = sorted_quantile(&sorted, 0.95);
        assert!(a.lower <= naive_lo && a.upper >= naive_hi);
    }

    #[test]
    fn tolerance_converges_to_the_percentile_band() {
        let mut rng = analysis_rng(17);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| rand::Rng::random::<f64>(&mut rng))
            .collect();
        let interval = tolerance_interval(&samples, 0.05, 0.9).unwrap();
        // Uniform(0,1): the middle 90% of mass sits in [0.05, 0.95].
        assert_relative_eq!(interval.lower, 0.05, epsilon = 0.01);
        assert_relative_eq!(interval.upper, 0.95, epsilon = 0.01);
    }

    #[test]
    fn iqm_trims_the_outer_quartiles() {
        assert_eq!(iqm(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(iqm(&[0.0, 0.0, 0.0, 1000.0]).unwrap(), 0.0);
        assert!(iqm(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn iqm_weights_boundary_samples_fractionally() {
        // n = 5 trims 1.25 per side: kept weights (0.75, 1, 0.75) over the
        // middle three values.
        let value = iqm(&[0.0, 1.0, 2.0, 3.0, 100.0]).unwrap();
        assert_relative_eq!(value, (0.75 * 1.0 + 2.0 + 0.75 * 3.0) / 2.5);
    }

    #[test]
    fn iqm_ignores_tail_perturbations() {
        let base = iqm(&[0.0, 1.0, 2.0, 3.0, 100.0]).unwrap();
        let perturbed = iqm(&[-500.0, 1.0, 2.0, 3.0, 9000.0]).unwrap();
        assert_eq!(base, perturbed);
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let mut rng = analysis_rng(19);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng)).collect();
        let dist = perf_distribution(&samples, 20).unwrap();
        let total: f64 = dist.masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(dist.bin_edges.len(), dist.masses.len() + 1);
    }

    #[test]
    fn unimodal_data_reports_one_mode() {
        let mut rng = analysis_rng(23);
        let normal = Normal::new(3.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..600).map(|_| normal.sample(&mut rng)).collect();
        let dist = perf_distribution(&samples, 20).unwrap();
        assert_eq!(dist.mode_xs.len(), 1, "{:?}", dist.mode_xs);
        assert!(!dist.bimodal);
        assert_relative_eq!(dist.mode_xs[0], 3.0, epsilon = 0.5);
    }

    #[test]
    fn separated_mixture_reports_two_modes() {
        let mut rng = analysis_rng(29);
        let left = Normal::new(-5.0, 1.0).unwrap();
        let right = Normal::new(5.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..1000)
            .map(|i| {
                if i % 5 < 3 {
                    left.sample(&mut rng)
                } else {
                    right.sample(&mut rng)
                }
            })
            .collect();
        let dist = perf_distribution(&samples, 30).unwrap();
        assert_eq!(dist.mode_xs.len(), 2, "{:?}", dist.mode_xs);
        assert!(dist.bimodal);
        assert!(dist.mode_xs[0] < 0.0 && dist.mode_xs[1] > 0.0);
    }

    #[test]
    fn interval_rows_serialize_with_method_and_samples() {
        let interval = student_t_ci(&[0.0, 1.0, 2.0], 0.05).unwrap();
        let row = interval.table_row();
        assert!(row.starts_with("t,0.05,-,"));
        assert!(row.ends_with(",3"));
    }

    #[test]
    fn mixture_mean_matches_its_constant() {
        let mixture = LongTailedMixture::new();
        let mut rng = analysis_rng(31);
        let total: f64 = (0..200_000).map(|_| mixture.sample(&mut rng)).sum();
        assert_relative_eq!(total / 200_000.0, LongTailedMixture::MEAN, epsilon = 2.0);
    }

    #[test]
    fn coverage_estimator_counts_hits() {
        let mut rng = analysis_rng(37);
        let normal = Normal::new(0.0, 1.0).unwrap();
        // The t interval on easy normal data should cover near nominally
        // even in a quick check.
        let coverage = estimate_coverage(
            400,
            0.0,
            &mut rng,
            |r| (0..20).map(|_| normal.sample(r)).collect(),
            |s, _| student_t_ci(s, 0.05),
        )
        .unwrap();
        assert!((coverage - 0.95).abs() < 0.05, "{coverage}");
        assert!(estimate_coverage(0, 0.0, &mut rng, |_| vec![], |s, _| student_t_ci(s, 0.05)).is_err());
    }
}
