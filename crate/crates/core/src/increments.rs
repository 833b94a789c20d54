//! Sliding-window increment statistics and their growth normalizers.
//!
//! For a series `y` on a uniform grid, the window statistics over
//! `s in [0, a]` are
//!
//! ```text
//!     sup-sup:   sup_{t <= T - a} sup_s |y(t+s) - y(t)|
//!     one-sided: sup_{t <= T - a} sup_s (y(t+s) - y(t))
//!     inf-sup:   inf_{t <= T - a} sup_s |y(t+s) - y(t)|
//! ```
//!
//! computed in O(n) with monotone deques, because
//! `sup_s |y(t+s) - y(t)| = max(window_max - y(t), y(t) - window_min)`.
//! Windows are grid-aligned by flooring `a` to whole steps; all evaluation
//! happens on grid points only.
//!
//! The normalizers are the standard growth scales of the iterated-logarithm
//! theory: each [`NormalizerKind`] documents its formula. `loglog` means
//! `ln ln` and, inside lag profiles, is clipped at `e^1.001` so that short
//! lags stay finite; the clip is far below every asymptotic regime of
//! interest.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::num::Real;

/// How the window length `a_T` is derived from the horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowRule<T> {
    /// `a_T = rho * T` with `0 < rho <= 1`.
    ConstantFraction { rho: T },
    /// `a_T = T / (ln T)^alpha` with `alpha > 0`.
    PowerLog { alpha: T },
    /// `a_T = a` independent of `T`.
    Fixed { a: T },
}

/// A window rule plus the monotonicity constraints the asymptotic theory
/// assumes ("`a_T` nondecreasing", "`T / a_T` nondecreasing"). The flags
/// are checked against a concrete evaluation grid by [`WindowSpec::validate_on`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec<T> {
    pub rule: WindowRule<T>,
    /// Require `a_T` nondecreasing in `T`.
    pub require_window_nondecreasing: bool,
    /// Require `T / a_T` nondecreasing in `T`.
    pub require_ratio_nondecreasing: bool,
}

impl<T: Real> WindowSpec<T> {
    pub fn new(rule: WindowRule<T>) -> Self {
        Self {
            rule,
            require_window_nondecreasing: true,
            require_ratio_nondecreasing: true,
        }
    }

    /// Window length at horizon `t`.
    pub fn window_at(&self, t: T) -> Result<T> {
        if !(t > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {t}"
            )));
        }
        let a = match self.rule {
            WindowRule::ConstantFraction { rho } => {
                if !(rho > T::zero() && rho <= T::one()) {
                    return Err(Error::InvalidArgument(format!(
                        "fraction rho must lie in (0, 1], got {rho}"
                    )));
                }
                rho * t
            }
            WindowRule::PowerLog { alpha } => {
                if !(alpha > T::zero()) {
                    return Err(Error::InvalidArgument(format!(
                        "exponent alpha must be positive, got {alpha}"
                    )));
                }
                if t <= T::one() {
                    return Err(Error::InvalidArgument(
                        "power-log windows need t > 1".into(),
                    ));
                }
                t / t.ln().powf(alpha)
            }
            WindowRule::Fixed { a } => a,
        };
        if !(a > T::zero()) || a > t {
            return Err(Error::InvalidArgument(format!(
                "window {a} must lie in (0, t] for t = {t}"
            )));
        }
        Ok(a)
    }

    /// Check the constraint flags on an ascending grid of horizons.
    pub fn validate_on(&self, horizons: &[T]) -> Result<()> {
        let mut prev: Option<(T, T)> = None;
        for &t in horizons {
            let a = self.window_at(t)?;
            if let Some((pa, pr)) = prev {
                if self.require_window_nondecreasing && a < pa {
                    return Err(Error::InvalidArgument(format!(
                        "window must be nondecreasing, {a} < {pa}"
                    )));
                }
                let ratio = t / a;
                if self.require_ratio_nondecreasing && ratio < pr {
                    return Err(Error::InvalidArgument(format!(
                        "T/a must be nondecreasing, {ratio} < {pr}"
                    )));
                }
            }
            prev = Some((a, t / a));
        }
        Ok(())
    }
}

/// Walk every window `[t, t + w]` (indices, inclusive) of `vals[0..=n]`,
/// reporting the window max and min. O(n) with two monotone deques.
fn for_each_window<T: Real>(
    vals: &[T],
    n: usize,
    w: usize,
    mut visit: impl FnMut(usize, T, T),
) {
    debug_assert!(n < vals.len() && w <= n);
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    for i in 0..=n {
        while maxq.back().is_some_and(|&j| vals[j] <= vals[i]) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| vals[j] >= vals[i]) {
            minq.pop_back();
        }
        minq.push_back(i);
        if i >= w {
            let t = i - w;
            while *maxq.front().unwrap() < t {
                maxq.pop_front();
            }
            while *minq.front().unwrap() < t {
                minq.pop_front();
            }
            visit(t, vals[*maxq.front().unwrap()], vals[*minq.front().unwrap()]);
        }
    }
}

fn window_steps<T: Real>(dt: T, horizon: T, a: T, len: usize) -> Result<(usize, usize)> {
    if !(a > T::zero()) || a > horizon {
        return Err(Error::InvalidArgument(format!(
            "window a = {a} must lie in (0, T] for T = {horizon}"
        )));
    }
    let n = ((horizon / dt).floor().as_f64() as usize).min(len - 1);
    let w = ((a / dt).floor().as_f64() as usize).min(n);
    Ok((n, w))
}

/// `sup_t sup_{s <= a} |y(t+s) - y(t)|` over the grid up to `horizon`.
pub fn sup_sup_increment<T: Real>(vals: &[T], dt: T, horizon: T, a: T) -> Result<T> {
    let (n, w) = window_steps(dt, horizon, a, vals.len())?;
    let mut best = T::zero();
    for_each_window(vals, n, w, |t, hi, lo| {
        let two_sided = (hi - vals[t]).max(vals[t] - lo);
        if two_sided > best {
            best = two_sided;
        }
    });
    Ok(best)
}

/// `sup_t sup_{s <= a} (y(t+s) - y(t))`: the one-sided (upward) variant.
pub fn one_sided_sup_increment<T: Real>(vals: &[T], dt: T, horizon: T, a: T) -> Result<T> {
    let (n, w) = window_steps(dt, horizon, a, vals.len())?;
    let mut best = T::zero();
    for_each_window(vals, n, w, |t, hi, _| {
        let up = hi - vals[t];
        if up > best {
            best = up;
        }
    });
    Ok(best)
}

/// `inf_t sup_{s <= a} |y(t+s) - y(t)|`: the smallest two-sided window
/// oscillation along the path.
pub fn inf_sup_increment<T: Real>(vals: &[T], dt: T, horizon: T, a: T) -> Result<T> {
    let (n, w) = window_steps(dt, horizon, a, vals.len())?;
    let mut best = T::infinity();
    for_each_window(vals, n, w, |t, hi, lo| {
        let two_sided = (hi - vals[t]).max(vals[t] - lo);
        if two_sided < best {
            best = two_sided;
        }
    });
    Ok(best)
}

/// One lag of the lag-increment profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagPoint<T> {
    /// Grid-aligned lag.
    pub lag: T,
    /// `sup_{lag <= s <= T} |y(s) - y(s - lag)|`.
    pub sup_abs: T,
    /// `sup_abs` over `sqrt(lag (ln(T/lag) + 2 loglog lag))` (clipped).
    pub normalized: T,
}

/// Lag profile over a log-spaced grid of lags.
#[derive(Debug, Clone, PartialEq)]
pub struct LagProfile<T> {
    pub points: Vec<LagPoint<T>>,
    /// Largest normalized value over the profile.
    pub max_normalized: T,
}

/// Lags per decade of the evaluation grid.
pub const LAGS_PER_DECADE: usize = 32;

/// Sup of `|y(s) - y(s - t)|` over `s`, profiled across a log-spaced grid
/// of lags `t` from a few grid steps up to the horizon (32 per decade).
/// Requires `horizon >= 3` so the normalizer stays positive on the grid.
pub fn lag_sup_increment<T: Real>(vals: &[T], dt: T, horizon: T) -> Result<LagProfile<T>> {
    if !(horizon >= T::of(3.0)) {
        return Err(Error::InvalidArgument(format!(
            "lag profile requires horizon >= 3, got {horizon}"
        )));
    }
    let n = ((horizon / dt).floor().as_f64() as usize).min(vals.len() - 1);
    let t_lo = (dt * T::of(4.0)).max(horizon * T::of(1e-6));
    let decades = (horizon / t_lo).log10();
    let n_lags = (decades.as_f64() * LAGS_PER_DECADE as f64).ceil() as usize + 1;
    let ratio = (horizon / t_lo).powf(T::of((n_lags as f64 - 1.0).recip()));

    let mut points: Vec<LagPoint<T>> = Vec::with_capacity(n_lags);
    let mut prev_steps = 0usize;
    let mut lag = t_lo;
    for _ in 0..n_lags {
        let steps = ((lag / dt).floor().as_f64() as usize).clamp(1, n);
        if steps != prev_steps {
            prev_steps = steps;
            let mut sup = T::zero();
            for i in steps..=n {
                let d = (vals[i] - vals[i - steps]).abs();
                if d > sup {
                    sup = d;
                }
            }
            let grid_lag = T::of(steps as f64) * dt;
            let norm = lag_normalizer(horizon, grid_lag);
            points.push(LagPoint {
                lag: grid_lag,
                sup_abs: sup,
                normalized: sup / norm,
            });
        }
        lag = lag * ratio;
    }
    let max_normalized = points
        .iter()
        .map(|p| p.normalized)
        .fold(T::zero(), T::max);
    Ok(LagProfile {
        points,
        max_normalized,
    })
}

/// `ln ln` with the argument clipped at `e^1.001` so the result stays
/// positive for short horizons.
#[inline]
pub fn loglog_clipped<T: Real>(t: T) -> T {
    t.max(T::of(1.001).exp()).ln().ln()
}

fn lag_normalizer<T: Real>(horizon: T, lag: T) -> T {
    (lag * ((horizon / lag).ln() + T::of(2.0) * loglog_clipped(lag))).sqrt()
}

/// Growth normalizers for the increment statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizerKind {
    /// `sqrt(a (ln sqrt(T/a) + loglog T))`: two-sided sup-sup scale for
    /// principal-value increments (the limit constant `sqrt 8` is carried
    /// by callers).
    SupSupIterated,
    /// `sqrt(a ln(T/a))`: scale in the large-window regime where
    /// `ln(T/a)` dominates `loglog T`.
    SupSupLarge,
    /// `a / sqrt(T loglog T)`: scale of the inf-sup (slowest window)
    /// statistic.
    InfSup,
    /// `sqrt(a (ln(T/a) + 2 loglog a))`: lag-profile normalizer at lag `a`.
    Lag,
    /// `sqrt(a (ln(T/a) + loglog T))`: Brownian sup-sup scale (limit
    /// constant `sqrt 2`).
    BrownianSupSup,
    /// `sqrt(T / loglog T)`: the Chung-type small-deviation scale for
    /// `sup |W|` (window argument ignored).
    ChungSup,
}

/// Evaluate a normalizer at horizon `T` and window `a`. Kinds that involve
/// `loglog T` require `T > e`; all results are positive.
pub fn normalizer<T: Real>(kind: NormalizerKind, horizon: T, a: T) -> Result<T> {
    if !(a > T::zero()) || a > horizon {
        return Err(Error::InvalidArgument(format!(
            "window a = {a} must lie in (0, T] for T = {horizon}"
        )));
    }
    let needs_loglog = !matches!(kind, NormalizerKind::SupSupLarge);
    if needs_loglog && horizon <= T::one().exp() {
        return Err(Error::Domain(format!(
            "loglog normalizer requires T > e, got T = {horizon}"
        )));
    }
    let value = match kind {
        NormalizerKind::SupSupIterated => {
            (a * ((horizon / a).sqrt().ln() + horizon.ln().ln())).sqrt()
        }
        NormalizerKind::SupSupLarge => {
            if a == horizon {
                return Err(Error::Domain(
                    "large-window normalizer vanishes at a = T".into(),
                ));
            }
            (a * (horizon / a).ln()).sqrt()
        }
        NormalizerKind::InfSup => a / (horizon * horizon.ln().ln()).sqrt(),
        NormalizerKind::Lag => lag_normalizer(horizon, a),
        NormalizerKind::BrownianSupSup => {
            (a * ((horizon / a).ln() + horizon.ln().ln())).sqrt()
        }
        NormalizerKind::ChungSup => (horizon / horizon.ln().ln()).sqrt(),
    };
    if !(value > T::zero()) {
        return Err(Error::Domain(format!(
            "normalizer is not positive at T = {horizon}, a = {a}"
        )));
    }
    Ok(value)
}

/// Every normalizer evaluated at one `(T, a)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizerSet<T> {
    pub sup_sup_iterated: T,
    pub sup_sup_large: T,
    pub inf_sup: T,
    pub lag: T,
    pub brownian_sup_sup: T,
}

/// All window statistics of one series at one `(T, a)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementStat<T> {
    pub horizon: T,
    pub window: T,
    pub sup_sup: T,
    pub one_sided_sup: T,
    pub inf_sup: T,
    /// Sup of `|y(s) - y(s - a)|` at the single lag `a`.
    pub lag_sup: T,
    pub normalizers: NormalizerSet<T>,
}

impl<T: Real> IncrementStat<T> {
    /// Compute the full row. Requires `e < horizon` and `0 < a < horizon`.
    pub fn compute(vals: &[T], dt: T, horizon: T, a: T) -> Result<IncrementStat<T>> {
        let sup_sup = sup_sup_increment(vals, dt, horizon, a)?;
        let one_sided_sup = one_sided_sup_increment(vals, dt, horizon, a)?;
        let inf_sup = inf_sup_increment(vals, dt, horizon, a)?;

        let (n, w) = window_steps(dt, horizon, a, vals.len())?;
        let mut lag_sup = T::zero();
        if w >= 1 {
            for i in w..=n {
                let d = (vals[i] - vals[i - w]).abs();
                if d > lag_sup {
                    lag_sup = d;
                }
            }
        }
        Ok(IncrementStat {
            horizon,
            window: a,
            sup_sup,
            one_sided_sup,
            inf_sup,
            lag_sup,
            normalizers: NormalizerSet {
                sup_sup_iterated: normalizer(NormalizerKind::SupSupIterated, horizon, a)?,
                sup_sup_large: normalizer(NormalizerKind::SupSupLarge, horizon, a)?,
                inf_sup: normalizer(NormalizerKind::InfSup, horizon, a)?,
                lag: normalizer(NormalizerKind::Lag, horizon, a)?,
                brownian_sup_sup: normalizer(NormalizerKind::BrownianSupSup, horizon, a)?,
            },
        })
    }
}

/// Result of the Strassen-class admissibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrassenCheck<T> {
    /// `SUM (delta f)^2 / (delta x)` over the pieces.
    pub energy: T,
    /// Whether the energy is `<= 1` (up to a 1e-12 rounding allowance).
    pub admissible: bool,
}

/// Energy of a piecewise-linear function given as breakpoints `(x, f(x))`
/// with `x` strictly increasing from 0 to 1 and `f(0) = 0`. Functions in
/// the Strassen class satisfy `energy <= 1`.
pub fn strassen_partition_check<T: Real>(breakpoints: &[(T, T)]) -> Result<StrassenCheck<T>> {
    if breakpoints.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two breakpoints".into(),
        ));
    }
    let first = breakpoints[0];
    let last = breakpoints[breakpoints.len() - 1];
    if first.0 != T::zero() || first.1 != T::zero() {
        return Err(Error::InvalidArgument(
            "breakpoints must start at (0, 0)".into(),
        ));
    }
    if last.0 != T::one() {
        return Err(Error::InvalidArgument("breakpoints must end at x = 1".into()));
    }
    let mut energy = T::zero();
    for pair in breakpoints.windows(2) {
        let dx = pair[1].0 - pair[0].0;
        if !(dx > T::zero()) {
            return Err(Error::InvalidArgument(
                "breakpoint x-values must be strictly increasing".into(),
            ));
        }
        let df = pair[1].1 - pair[0].1;
        energy = energy + df * df / dx;
    }
    Ok(StrassenCheck {
        energy,
        admissible: energy <= T::one() + T::of(1e-12),
    })
}
