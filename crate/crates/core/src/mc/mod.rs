//! Reproducible parallel Monte Carlo: ensemble driver, eta-skeleton
//! sampler, and dyadic trend scans.
//!
//! Reproducibility contract: path `i` of an ensemble is generated from the
//! counter-based seed `mix64(master_seed, i)` by its own generator, and
//! results are collected in index order. Reports are therefore bit-for-bit
//! identical for any worker count.

pub mod stats;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::paths::{interpolated_root, sample_brownian, EtaRecord, SamplePath};

/// Hard cap on `n_paths * n_steps` for one ensemble.
pub const DEFAULT_STEP_BUDGET: u64 = 1 << 36;

pub use crate::paths::mix64;

/// One named check inside a report.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRecord<T> {
    pub name: String,
    pub statistic: T,
    pub threshold: T,
    pub pass: bool,
}

/// Summary of one ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport<T> {
    pub master_seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub statistic_name: String,
    pub samples: Vec<T>,
    pub tests: Vec<TestRecord<T>>,
    pub runtime_seconds: f64,
}

/// Shape of one ensemble run.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleSpec<T> {
    pub n_paths: usize,
    pub n_steps: usize,
    pub horizon: T,
    pub master_seed: u64,
    pub workers: usize,
}

fn check_budget(n_paths: usize, n_steps: usize, budget: u64) -> Result<()> {
    let total = (n_paths as u128) * (n_steps as u128);
    if total > budget as u128 {
        return Err(Error::CapacityExceeded(format!(
            "ensemble needs {total} path-steps, budget is {budget}"
        )));
    }
    Ok(())
}

/// Map `f` over indices `0..n` on `workers` threads, collecting results in
/// index order.
pub fn ensemble_map<T: Send, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be >= 1".into()));
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Run a statistic over a fresh Brownian path per index. `samples[i]` comes
/// from the path seeded by `mix64(master_seed, i)`.
pub fn run_ensemble<T: Real>(
    spec: EnsembleSpec<T>,
    statistic_name: &str,
    recipe: impl Fn(&SamplePath<T>) -> T + Sync,
) -> Result<EnsembleReport<T>> {
    run_ensemble_with_budget(spec, statistic_name, DEFAULT_STEP_BUDGET, recipe)
}

/// As [`run_ensemble`] with an explicit `n_paths * n_steps` budget.
pub fn run_ensemble_with_budget<T: Real>(
    spec: EnsembleSpec<T>,
    statistic_name: &str,
    budget: u64,
    recipe: impl Fn(&SamplePath<T>) -> T + Sync,
) -> Result<EnsembleReport<T>> {
    if spec.n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be >= 1".into()));
    }
    check_budget(spec.n_paths, spec.n_steps, budget)?;
    let start = Instant::now();
    let samples = ensemble_map(spec.n_paths, spec.workers, |i| {
        let path = sample_brownian(spec.n_steps, spec.horizon, mix64(spec.master_seed, i as u64))
            .expect("ensemble spec validated");
        recipe(&path)
    })?;
    Ok(EnsembleReport {
        master_seed: spec.master_seed,
        n_paths: spec.n_paths,
        n_steps: spec.n_steps,
        statistic_name: statistic_name.to_string(),
        samples,
        tests: Vec::new(),
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Configuration of the eta-skeleton sampler.
///
/// Each record is one step of the skeleton `eta_{k+1} = first zero after
/// eta_k + 1`, started at a zero (which is how every record begins, by the
/// strong Markov property): a unit window at fine resolution yields the
/// principal-value increment `Z`, and the first zero after the window is
/// chased in doubling segments whose per-segment step count is constant,
/// so remote zeros are located at coarser resolution. The chase is capped
/// at `2^(max_chase_segments - 1)` time units past the window; a record
/// whose zero lies beyond the cap is censored and ends its chain.
#[derive(Debug, Clone, Copy)]
pub struct EtaChainConfig<T> {
    /// Steps across each unit window (resolution of `Z`).
    pub unit_steps: usize,
    /// Steps per chase segment (segment `s >= 1` spans `2^(s-1)` time units).
    pub chase_segment_steps: usize,
    /// Total segments, counting the length-1 fine segment 0.
    pub max_chase_segments: u32,
    /// Records attempted per chain.
    pub records_per_chain: usize,
    /// Cutoff for the principal-value sum over the unit window.
    pub cutoff_eps: T,
}

impl<T: Real> EtaChainConfig<T> {
    /// Fine unit window of 2^14 steps, cutoff eps = sqrt(dt)/2, chase
    /// segments of 2^12 steps capped at 2^21 time units (censoring
    /// probability about 4.4e-4).
    pub fn default_acceptance() -> Self {
        let unit_steps = 1 << 14;
        let dt = 1.0 / unit_steps as f64;
        EtaChainConfig {
            unit_steps,
            chase_segment_steps: 1 << 12,
            max_chase_segments: 22,
            records_per_chain: 5,
            cutoff_eps: T::of(0.5 * dt.sqrt()),
        }
    }
}

/// Simulate one record from a zero start; returns `(z_value, gap)` or
/// `None` if the chase is censored at the cap.
fn eta_record_from_zero<T: Real>(rng: &mut ChaCha8Rng, cfg: &EtaChainConfig<T>) -> Option<(T, T)> {
    let n = cfg.unit_steps;
    let dt = T::one() / T::of(n as f64);
    let sqrt_dt = dt.sqrt();
    let mut w = T::zero();
    let mut z_value = T::zero();
    for _ in 0..n {
        if w.abs() >= cfg.cutoff_eps && w != T::zero() {
            z_value = z_value + dt / w;
        }
        w = w + T::standard_normal(rng) * sqrt_dt;
    }
    // Chase the first zero after the window. Segment 0 keeps the window's
    // resolution over one more unit; segment s >= 1 spans 2^(s-1) units.
    let mut elapsed = T::zero();
    for seg in 0..cfg.max_chase_segments {
        let (seg_len, seg_steps) = if seg == 0 {
            (T::one(), cfg.unit_steps)
        } else {
            (T::of(f64::powi(2.0, seg as i32 - 1)), cfg.chase_segment_steps)
        };
        let h = seg_len / T::of(seg_steps as f64);
        let sqrt_h = h.sqrt();
        for _ in 0..seg_steps {
            let next = w + T::standard_normal(rng) * sqrt_h;
            if next == T::zero() || (next > T::zero()) != (w > T::zero()) {
                let root = interpolated_root(elapsed, h, w, next);
                return Some((z_value, T::one() + root));
            }
            w = next;
            elapsed = elapsed + h;
        }
    }
    None
}

/// Sample eta-skeleton chains. Chain `c` is seeded by
/// `mix64(master_seed, c)` and yields up to `records_per_chain` records;
/// a censored chase ends its chain early. Within a chain, record `i + 1`
/// starts at the zero where record `i` ended, so successive records are
/// consecutive skeleton steps of one path.
pub fn sample_eta_chains<T: Real>(
    n_chains: usize,
    cfg: EtaChainConfig<T>,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<Vec<EtaRecord<T>>>> {
    if cfg.unit_steps < 2 || cfg.chase_segment_steps < 2 {
        return Err(Error::InvalidArgument(
            "eta chains need at least 2 steps per segment".into(),
        ));
    }
    if cfg.max_chase_segments == 0 || cfg.records_per_chain == 0 {
        return Err(Error::InvalidArgument(
            "eta chains need at least one segment and one record".into(),
        ));
    }
    ensemble_map(n_chains, workers, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(master_seed, c as u64));
        let mut records = Vec::with_capacity(cfg.records_per_chain);
        let mut eta_time = T::zero();
        for i in 0..cfg.records_per_chain {
            match eta_record_from_zero(&mut rng, &cfg) {
                Some((z_value, gap)) => {
                    eta_time = eta_time + gap;
                    records.push(EtaRecord {
                        index: i + 1,
                        eta_gap: gap,
                        z_value,
                        eta_time,
                    });
                }
                None => break,
            }
        }
        records
    })
}

/// Index pairs `(i, i+1)` of consecutive records within each chain, over
/// the flattened record list.
pub fn successive_pairs<T>(chains: &[Vec<EtaRecord<T>>]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut base = 0;
    for chain in chains {
        for k in 1..chain.len() {
            pairs.push((base + k - 1, base + k));
        }
        base += chain.len();
    }
    pairs
}

/// 5% / 50% / 95% quantiles of one ensemble slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileTriple<T> {
    pub q05: T,
    pub median: T,
    pub q95: T,
}

impl<T: Real> QuantileTriple<T> {
    pub fn from_samples(samples: &[T]) -> Result<Self> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantiles need ordered values"));
        Ok(QuantileTriple {
            q05: stats::quantile_sorted(&sorted, 0.05)?,
            median: stats::quantile_sorted(&sorted, 0.5)?,
            q95: stats::quantile_sorted(&sorted, 0.95)?,
        })
    }
}

/// Whether the per-path running statistic tracks a maximum or minimum
/// across the horizon grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunningExtreme {
    Max,
    Min,
}

/// Result of a dyadic trend scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendScan<T> {
    /// Horizons in grid-step units.
    pub t_grid: Vec<usize>,
    /// Per-horizon quantiles of the normalized statistic.
    pub per_t: Vec<QuantileTriple<T>>,
    /// Quantiles of the per-path running extreme over the whole grid.
    pub running: QuantileTriple<T>,
    /// Per-path running extreme at the last horizon (index order).
    pub running_samples: Vec<T>,
}

/// Scan a normalized statistic over a dyadic horizon grid, one long path
/// per sample (running extremes are about a single trajectory, so the path
/// is shared across horizons rather than resampled).
///
/// `derive` maps the Brownian path to the series the statistic reads
/// (identity for Brownian channels, a principal-value series for Y
/// channels); it runs once per path. `stat` evaluates the normalized
/// statistic on `series[0..=t]`; times are in grid steps with `dt = 1`.
pub fn trend_scan<T: Real, D, S>(
    n_paths: usize,
    total_steps: usize,
    t_grid: &[usize],
    master_seed: u64,
    workers: usize,
    extreme: RunningExtreme,
    derive: D,
    stat: S,
) -> Result<TrendScan<T>>
where
    D: Fn(&SamplePath<T>) -> Result<Vec<T>> + Sync,
    S: Fn(&[T], usize) -> Result<T> + Sync,
{
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("trend grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "trend grid must be strictly increasing".into(),
        ));
    }
    if *t_grid.last().unwrap() > total_steps {
        return Err(Error::InvalidArgument(format!(
            "trend grid exceeds the path length {total_steps}"
        )));
    }
    check_budget(n_paths, total_steps, DEFAULT_STEP_BUDGET)?;
    let rows: Vec<Result<Vec<T>>> = ensemble_map(n_paths, workers, |i| {
        let path = sample_brownian(
            total_steps,
            T::of(total_steps as f64),
            mix64(master_seed, i as u64),
        )?;
        let series = derive(&path)?;
        let mut row = Vec::with_capacity(t_grid.len() + 1);
        let mut run = match extreme {
            RunningExtreme::Max => T::neg_infinity(),
            RunningExtreme::Min => T::infinity(),
        };
        for &t in t_grid {
            let v = stat(&series, t)?;
            run = match extreme {
                RunningExtreme::Max => run.max(v),
                RunningExtreme::Min => run.min(v),
            };
            row.push(v);
        }
        row.push(run);
        Ok(row)
    })?;
    let rows: Vec<Vec<T>> = rows.into_iter().collect::<Result<_>>()?;
    let mut per_t = Vec::with_capacity(t_grid.len());
    for (k, _) in t_grid.iter().enumerate() {
        let col: Vec<T> = rows.iter().map(|r| r[k]).collect();
        per_t.push(QuantileTriple::from_samples(&col)?);
    }
    let running_samples: Vec<T> = rows.iter().map(|r| r[t_grid.len()]).collect();
    let running = QuantileTriple::from_samples(&running_samples)?;
    Ok(TrendScan {
        t_grid: t_grid.to_vec(),
        per_t,
        running,
        running_samples,
    })
}

/// Cumulative principal-value series of a path at `dt = 1` per grid step
/// with the given cutoff, for trend channels (`series[k] = Y(k)`).
pub fn pv_series_unit_dt<T: Real>(path: &SamplePath<T>, eps: T) -> Vec<T> {
    let mut y = Vec::with_capacity(path.values.len());
    let mut acc = T::zero();
    y.push(acc);
    for &w in &path.values[..path.values.len() - 1] {
        if w.abs() >= eps && w != T::zero() {
            acc = acc + T::one() / w;
        }
        y.push(acc);
    }
    y
}
