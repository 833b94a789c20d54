//! Brownian grid paths and their zero structure.
//!
//! A [`SamplePath`] stores a process sampled on the uniform grid
//! `t_k = k * T / n_steps`. Zeros seen by the grid are sign changes
//! between adjacent values, located by linear interpolation inside the
//! step. The last-zero scan additionally recovers crossings the grid
//! cannot see: a step whose endpoints share a sign still hides a double
//! crossing with the Brownian-bridge probability `exp(-2ab/dt)`, and the
//! scan flags such steps with a Bernoulli draw from a generator derived
//! from the path seed. Without that recovery, zero-hugging paths get a
//! systematically early last zero and the meander endpoint inherits a
//! spurious correlation with it.
//!
//! The last-zero decomposition splits a Brownian path at
//! `g = sup{t <= T : W(t) = 0}` into a scaled bridge on `[0, g]` and a
//! scaled absolute meander on `[g, T]`, each mapped onto its own uniform
//! grid over `[0, 1]`.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use crate::error::{Error, Result};
use crate::num::Real;

/// Hard cap on the number of steps in a single path (memory guard).
pub const MAX_STEPS: usize = 1 << 26;

/// SplitMix64-style finalizer mixing a master seed with a counter.
/// Published so external tooling can reproduce any single path.
#[inline]
pub fn mix64(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Default grid resolution per unit of time.
pub const DEFAULT_STEPS_PER_UNIT: usize = 1 << 14;

/// What process a stored path represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    BrownianMotion,
    Bridge,
    Meander,
}

/// A process sampled on a uniform time grid; `values[0] == 0` always.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T> {
    /// Time horizon `T > 0`.
    pub horizon: T,
    /// Number of grid steps; `values.len() == n_steps + 1`.
    pub n_steps: usize,
    /// Grid values `W(t_k)`, `t_k = k * horizon / n_steps`.
    pub values: Vec<T>,
    /// Seed recorded for provenance and reused to derive the last-zero
    /// scan's Bernoulli stream (0 when the path was derived).
    pub seed: u64,
    pub kind: PathKind,
}

impl<T: Real> SamplePath<T> {
    /// Grid spacing `horizon / n_steps`.
    #[inline]
    pub fn dt(&self) -> T {
        self.horizon / T::of(self.n_steps as f64)
    }

    /// Time of grid node `k`.
    #[inline]
    pub fn time_at(&self, k: usize) -> T {
        T::of(k as f64) * self.dt()
    }

    /// Path value at an arbitrary `t` in `[0, horizon]` by linear
    /// interpolation between the bracketing grid nodes.
    pub fn value_at(&self, t: T) -> T {
        let dt = self.dt();
        let pos = t / dt;
        let k = pos.floor().as_f64() as usize;
        if k >= self.n_steps {
            return self.values[self.n_steps];
        }
        let theta = pos - T::of(k as f64);
        self.values[k] + (self.values[k + 1] - self.values[k]) * theta
    }

    /// Rescale `(t, W) -> (a t, sqrt(a) W)`. Exact (bit for bit) whenever
    /// `sqrt(a)` is a power of two.
    pub fn scaled(&self, a: T) -> Result<SamplePath<T>> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive and finite, got {a}"
            )));
        }
        let root = a.sqrt();
        Ok(SamplePath {
            horizon: self.horizon * a,
            n_steps: self.n_steps,
            values: self.values.iter().map(|&v| v * root).collect(),
            seed: self.seed,
            kind: self.kind,
        })
    }
}

/// Last-zero decomposition of a Brownian path on `[0, T]`.
#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    /// Location of the last zero, `0 < g < T`.
    pub g: T,
    /// `B(s) = W(s g) / sqrt(g)` on `[0, 1]`; starts and ends at zero.
    pub bridge: SamplePath<T>,
    /// `m(s) = |W(g + s (T - g))| / sqrt(T - g)` on `[0, 1]`; positive for
    /// `s > 0`.
    pub meander: SamplePath<T>,
    /// Sign of `W` on `(g, T]` (`+1` or `-1`).
    pub sign: T,
}

/// One record of the zero-skeleton construction: starting from a zero
/// `eta_{i-1}`, `z_value` is the principal-value increment over one unit of
/// time and `eta_gap = eta_i - eta_{i-1} > 1` is the time to the next zero
/// after that unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaRecord<T> {
    /// 1-based record index within its sequence.
    pub index: usize,
    /// `eta_i - eta_{i-1}`; always `> 1`.
    pub eta_gap: T,
    /// Principal-value increment over `[eta_{i-1}, eta_{i-1} + 1]`.
    pub z_value: T,
    /// Absolute time `eta_i`.
    pub eta_time: T,
}

/// Interpolated root of the segment from `(t_left, a)` to `(t_left + dt, b)`.
/// Requires a sign change (or an exact zero at an endpoint).
#[inline]
pub(crate) fn interpolated_root<T: Real>(t_left: T, dt: T, a: T, b: T) -> T {
    t_left + dt * a / (a - b)
}

/// Sample a Brownian path on `n_steps` uniform steps over `[0, horizon]`.
///
/// Deterministic: the same `(n_steps, horizon, seed)` always produces the
/// same bits. The generator draws one standard normal per step and scales by
/// `sqrt(dt)`, so paths with equal `(n_steps, seed)` and horizons in an
/// exact-power-of-four ratio are exact rescalings of each other.
pub fn sample_brownian<T: Real>(n_steps: usize, horizon: T, seed: u64) -> Result<SamplePath<T>> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if n_steps > MAX_STEPS {
        return Err(Error::CapacityExceeded(format!(
            "n_steps {n_steps} exceeds MAX_STEPS {MAX_STEPS}"
        )));
    }
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_brownian_with(&mut rng, n_steps, horizon, seed))
}

/// Same as [`sample_brownian`] but drawing from a caller-owned generator
/// (used by record-chain samplers that thread one stream across segments).
/// `seed` is stored for provenance only.
pub fn sample_brownian_with<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    n_steps: usize,
    horizon: T,
    seed: u64,
) -> SamplePath<T> {
    let dt = horizon / T::of(n_steps as f64);
    let step = dt.sqrt();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut w = T::zero();
    values.push(w);
    for _ in 0..n_steps {
        w = w + step * T::standard_normal(rng);
        values.push(w);
    }
    SamplePath {
        horizon,
        n_steps,
        values,
        seed,
        kind: PathKind::BrownianMotion,
    }
}

/// Location of the smallest interpolated zero at time `>= t`, or `None`
/// when the path has no further zero (a normal outcome, not a failure).
///
/// Grid values that are exactly zero count as zeros; otherwise a zero is a
/// sign change between adjacent grid values, located by linear
/// interpolation.
pub fn first_zero_after<T: Real>(path: &SamplePath<T>, t: T) -> Result<Option<T>> {
    if !(t >= T::zero()) || t > path.horizon {
        return Err(Error::InvalidArgument(format!(
            "t must lie in [0, horizon], got {t}"
        )));
    }
    let dt = path.dt();
    let n = path.n_steps;
    let start = (t / dt).floor().as_f64() as usize;
    let start = start.min(n);
    for k in start..=n {
        let tk = path.time_at(k);
        if path.values[k] == T::zero() && tk >= t {
            return Ok(Some(tk));
        }
        if k < n {
            let a = path.values[k];
            let b = path.values[k + 1];
            if a != T::zero() && b != T::zero() && (a > T::zero()) != (b > T::zero()) {
                let root = interpolated_root(tk, dt, a, b);
                if root >= t {
                    return Ok(Some(root));
                }
            }
        }
    }
    Ok(None)
}

/// Index `k` of the step containing the last zero, together with the
/// interpolated location `g`. Exact grid zeros at interior nodes are
/// reported with `g` on the node. Zeros at `t = 0` or `t = T` do not count.
/// Stream tag separating the last-zero scan's Bernoulli draws from every
/// other consumer of a path seed.
const SUB_GRID_CROSSING_STREAM: u64 = 1 << 42;

/// `exp(-2ab/dt)` below `exp(-40)` is treated as zero without consuming a
/// draw, which keeps the generator stream short and the scan cheap away
/// from zero-hugging stretches.
const SUB_GRID_EXPONENT_CAP: f64 = 40.0;

fn last_zero<T: Real>(path: &SamplePath<T>) -> Option<(usize, T)> {
    let dt = path.dt();
    let n = path.n_steps;
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(path.seed, SUB_GRID_CROSSING_STREAM));
    for k in (0..n).rev() {
        let a = path.values[k];
        let b = path.values[k + 1];
        if k > 0 && a == T::zero() {
            return Some((k, path.time_at(k)));
        }
        if a == T::zero() || b == T::zero() {
            continue;
        }
        if (a > T::zero()) != (b > T::zero()) {
            return Some((k, interpolated_root(path.time_at(k), dt, a, b)));
        }
        let exponent = T::of(2.0) * a * b / dt;
        if exponent.as_f64() < SUB_GRID_EXPONENT_CAP && rng.gen::<f64>() < (-exponent).exp().as_f64()
        {
            // A hidden double crossing; its location concentrates at the
            // saddle point of the first-passage factors from both ends.
            let (aa, bb) = (a.abs(), b.abs());
            return Some((k, path.time_at(k) + dt * aa / (aa + bb)));
        }
    }
    None
}

/// Split a Brownian path at its last zero into scaled bridge and meander
/// parts, each resampled onto `n_steps` uniform steps over `[0, 1]`.
///
/// Returns [`Error::NoZeroCrossing`] when the only zero is at `t = 0`
/// (callers resample with a fresh seed).
pub fn decompose_at_last_zero<T: Real>(path: &SamplePath<T>) -> Result<Decomposition<T>> {
    if path.kind != PathKind::BrownianMotion {
        return Err(Error::InvalidArgument(
            "decomposition requires a Brownian path".into(),
        ));
    }
    if path.n_steps < 2 {
        return Err(Error::InvalidArgument(
            "decomposition needs at least 2 steps".into(),
        ));
    }
    let (crossing_step, g) = last_zero(path).ok_or(Error::NoZeroCrossing)?;
    let t_tail = path.horizon - g;
    debug_assert!(g > T::zero() && t_tail > T::zero());

    let n = path.n_steps;
    let root_g = g.sqrt();
    let root_tail = t_tail.sqrt();
    let n_t = T::of(n as f64);

    let mut bridge_values = Vec::with_capacity(n + 1);
    bridge_values.push(T::zero());
    for j in 1..n {
        let s = T::of(j as f64) / n_t;
        bridge_values.push(path.value_at(s * g) / root_g);
    }
    bridge_values.push(T::zero());

    // The sign of W on (g, T] is the sign just after the crossing.
    let after = path.values[crossing_step + 1];
    let after = if after == T::zero() {
        path.values[(crossing_step + 2).min(n)]
    } else {
        after
    };
    let sign = if after >= T::zero() { T::one() } else { -T::one() };

    let mut meander_values = Vec::with_capacity(n + 1);
    meander_values.push(T::zero());
    for j in 1..=n {
        let s = T::of(j as f64) / n_t;
        let v = path.value_at(g + s * t_tail).abs() / root_tail;
        debug_assert!(v > T::zero(), "meander must be positive after the zero");
        meander_values.push(v);
    }

    Ok(Decomposition {
        g,
        bridge: SamplePath {
            horizon: T::one(),
            n_steps: n,
            values: bridge_values,
            seed: path.seed,
            kind: PathKind::Bridge,
        },
        meander: SamplePath {
            horizon: T::one(),
            n_steps: n,
            values: meander_values,
            seed: path.seed,
            kind: PathKind::Meander,
        },
        sign,
    })
}

/// Principal-value increment estimator handle used by [`eta_sequence`].
pub trait PvIncrement<T: Real> {
    /// Estimate `Y(b) - Y(a)` on the path's grid.
    fn increment(&self, path: &SamplePath<T>, a: T, b: T) -> T;
}

/// Walk the zero skeleton of a fixed path: `eta_0 = 0`, and `eta_{i+1}` is
/// the first zero after `eta_i + 1`. Returns the records found within the
/// horizon; empty when `eta_1` does not exist. Records near the end of the
/// horizon are censored by construction, so gap statistics from a single
/// fixed path underrepresent the heavy tail; the ensemble samplers in
/// [`crate::mc`] avoid that bias.
pub fn eta_sequence<T: Real>(
    path: &SamplePath<T>,
    estimator: &dyn PvIncrement<T>,
) -> Result<Vec<EtaRecord<T>>> {
    if path.kind != PathKind::BrownianMotion {
        return Err(Error::InvalidArgument(
            "eta sequence requires a Brownian path".into(),
        ));
    }
    let mut records = Vec::new();
    let mut eta = T::zero();
    let mut index = 1;
    loop {
        let q = eta + T::one();
        if q > path.horizon {
            break;
        }
        let Some(next) = first_zero_after(path, q)? else {
            break;
        };
        let z_value = estimator.increment(path, eta, q);
        records.push(EtaRecord {
            index,
            eta_gap: next - eta,
            z_value,
            eta_time: next,
        });
        eta = next;
        index += 1;
    }
    Ok(records)
}
