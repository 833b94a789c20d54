//! Principal-value estimators and the binned local-time field.
//!
//! Two independent routes to `Y(t) = p.v. INT_0^t ds / W(s)`:
//!
//! * [`pv_riemann`]: cutoff Riemann sum `sum dt / W(t_i)` over grid steps
//!   with `|W(t_i)| >= eps` (left endpoints). `eps = 0` keeps every step
//!   whose left value is not exactly zero.
//! * [`pv_localtime`]: the local-time representation
//!   `INT_0^inf (L(t, x) - L(t, -x)) / x dx`, evaluated from the symmetric
//!   binned occupation field by differencing paired bins before dividing by
//!   the bin center.
//!
//! The two estimators share nothing but the path, which is what makes their
//! agreement a meaningful cross-check.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::paths::{PvIncrement, SamplePath};

/// Which estimator produced a [`PvResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvEstimatorKind {
    Riemann,
    LocalTime,
}

/// Bookkeeping carried alongside an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvDiagnostics<T> {
    /// Grid steps excluded by the cutoff rule.
    pub excluded_step_count: usize,
    /// Largest `|dt / W(t_i)|` that entered the sum.
    pub max_abs_term: T,
}

/// Running principal-value estimate along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PvResult<T> {
    /// `y_values[k]` estimates `Y(t_k)`; `y_values[0] == 0`.
    pub y_values: Vec<T>,
    pub estimator: PvEstimatorKind,
    pub cutoff_eps: T,
    pub diagnostics: PvDiagnostics<T>,
}

impl<T: Real> PvResult<T> {
    /// Estimate at the final grid time.
    #[inline]
    pub fn final_value(&self) -> T {
        *self.y_values.last().unwrap()
    }
}

/// Symmetric binned occupation-density field of a path up to time `t`.
///
/// Bin `j` covers `[levels[j] - bin_width/2, levels[j] + bin_width/2)`;
/// the centers are `+-(k + 1/2) * bin_width`, so no bin straddles zero.
/// A value exactly at zero lies on the shared edge of the two innermost
/// bins and contributes half its time to each. `mass[j] * bin_width` is
/// the time spent in bin `j`, and the masses sum to `t / bin_width`
/// (occupation identity).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField<T> {
    pub t: T,
    pub bin_width: T,
    /// Bin centers, ascending, symmetric about zero.
    pub levels: Vec<T>,
    /// Occupation density per bin (time in bin divided by `bin_width`).
    pub mass: Vec<T>,
}

impl<T: Real> LocalTimeField<T> {
    /// Occupation density of the bin containing level `x`.
    pub fn mass_at(&self, x: T) -> T {
        let half = self.levels.len() / 2;
        let idx = (x / self.bin_width).floor().as_f64() as isize + half as isize;
        if idx < 0 || idx as usize >= self.mass.len() {
            T::zero()
        } else {
            self.mass[idx as usize]
        }
    }
}

/// Default bin width `sqrt(dt) / 4`: a quarter of the typical one-step
/// displacement, fine enough to resolve the `1/x` kernel without starving
/// the bins.
pub fn default_bin_width<T: Real>(path: &SamplePath<T>) -> T {
    path.dt().sqrt() / T::of(4.0)
}

/// Cutoff Riemann-sum estimator along the whole grid.
pub fn pv_riemann<T: Real>(path: &SamplePath<T>, eps: T) -> Result<PvResult<T>> {
    if !(eps >= T::zero()) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cutoff eps must be finite and >= 0, got {eps}"
        )));
    }
    let dt = path.dt();
    let mut y = Vec::with_capacity(path.n_steps + 1);
    let mut acc = T::zero();
    let mut excluded = 0usize;
    let mut max_abs = T::zero();
    y.push(acc);
    for i in 0..path.n_steps {
        let w = path.values[i];
        let keep = if eps == T::zero() {
            w != T::zero()
        } else {
            w.abs() >= eps
        };
        if keep {
            let term = dt / w;
            acc = acc + term;
            if term.abs() > max_abs {
                max_abs = term.abs();
            }
        } else {
            excluded += 1;
        }
        y.push(acc);
    }
    Ok(PvResult {
        y_values: y,
        estimator: PvEstimatorKind::Riemann,
        cutoff_eps: eps,
        diagnostics: PvDiagnostics {
            excluded_step_count: excluded,
            max_abs_term: max_abs,
        },
    })
}

/// Riemann estimator with a fixed cutoff, usable as a [`PvIncrement`]
/// handle. Increment sums run over grid steps contained in `[a, b]`;
/// partial end steps are dropped because their left values sit next to a
/// zero of the path, where a single `1/W` term is unreliable.
#[derive(Debug, Clone, Copy)]
pub struct RiemannPv<T> {
    pub eps: T,
}

impl<T: Real> PvIncrement<T> for RiemannPv<T> {
    fn increment(&self, path: &SamplePath<T>, a: T, b: T) -> T {
        let dt = path.dt();
        let n = path.n_steps;
        let first = (a / dt).ceil().as_f64() as usize;
        let mut acc = T::zero();
        for i in first..n {
            if path.time_at(i + 1) > b {
                break;
            }
            let w = path.values[i];
            let keep = if self.eps == T::zero() {
                w != T::zero()
            } else {
                w.abs() >= self.eps
            };
            if keep {
                acc = acc + dt / w;
            }
        }
        acc
    }
}

/// Binned occupation field of `path` up to time `t` (`0 < t <= horizon`).
/// The final partial step contributes its overlap with `[0, t]`, so the
/// occupation identity holds for any `t`, grid-aligned or not.
pub fn local_time<T: Real>(path: &SamplePath<T>, t: T, bin_width: T) -> Result<LocalTimeField<T>> {
    if !(t > T::zero()) || t > path.horizon {
        return Err(Error::InvalidArgument(format!(
            "t must lie in (0, horizon], got {t}"
        )));
    }
    if !(bin_width > T::zero()) || !bin_width.is_finite() {
        return Err(Error::DegenerateBinning(format!(
            "bin width must be positive and finite, got {bin_width}"
        )));
    }
    let dt = path.dt();
    let n_full = (t / dt).floor().as_f64() as usize;
    let n_full = n_full.min(path.n_steps);

    let mut max_abs = T::zero();
    for &v in &path.values[..=n_full.min(path.n_steps)] {
        if v.abs() > max_abs {
            max_abs = v.abs();
        }
    }
    if bin_width > max_abs.max(dt.sqrt()) * T::of(2.0) {
        return Err(Error::DegenerateBinning(format!(
            "bin width {bin_width} exceeds the path's value range"
        )));
    }

    // Symmetric layout: indices -half..half-1 map to centers (j + 1/2) w.
    let half = (max_abs / bin_width).floor().as_f64() as usize + 1;
    let mut occupation = vec![T::zero(); 2 * half];
    let offset = half as isize;
    let mut deposit = |w: T, span: T| {
        if w == T::zero() {
            // An exact zero sits on the shared edge of the two innermost
            // bins; its mass splits evenly between them.
            let each = span / T::of(2.0);
            occupation[half - 1] = occupation[half - 1] + each;
            occupation[half] = occupation[half] + each;
            return;
        }
        let idx = (w / bin_width).floor().as_f64() as isize + offset;
        debug_assert!(idx >= 0 && (idx as usize) < occupation.len());
        occupation[idx as usize] = occupation[idx as usize] + span;
    };
    for i in 0..n_full {
        deposit(path.values[i], dt);
    }
    let leftover = t - T::of(n_full as f64) * dt;
    if leftover > T::zero() && n_full < path.n_steps {
        deposit(path.values[n_full], leftover);
    }

    let levels = (0..2 * half)
        .map(|i| (T::of(i as f64 - half as f64) + T::of(0.5)) * bin_width)
        .collect();
    let mass = occupation.into_iter().map(|o| o / bin_width).collect();
    Ok(LocalTimeField {
        t,
        bin_width,
        levels,
        mass,
    })
}

/// Local-time-route estimate of `Y(t)`: difference the symmetric bin pair
/// before dividing by the bin center. With centers `(j + 1/2) w` the bin
/// width cancels and each pair contributes `(mass_+ - mass_-) / (j + 1/2)`.
pub fn pv_localtime<T: Real>(path: &SamplePath<T>, t: T, bin_width: T) -> Result<T> {
    let field = local_time(path, t, bin_width)?;
    let m = field.mass.len();
    let half = m / 2;
    let mut acc = T::zero();
    // Smallest pair last so the dominant near-zero difference is not
    // swamped by rounding from the far bins.
    for j in (0..half).rev() {
        let plus = field.mass[half + j];
        let minus = field.mass[half - 1 - j];
        if plus == minus {
            continue;
        }
        acc = acc + (plus - minus) / (T::of(j as f64) + T::of(0.5));
    }
    Ok(acc)
}
