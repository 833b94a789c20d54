//! Closed-form laws for the principal value of Brownian local time and the
//! companion processes of its last-zero decomposition.
//!
//! The distribution of `Y(1)` has the alternating Gaussian series density
//!
//! ```text
//!     f(x) = sqrt(2 / pi^3) * SUM_{k>=0} (-1)^k exp(-(2k+1)^2 x^2 / 8),
//! ```
//!
//! whose termwise integral gives the CDF
//!
//! ```text
//!     F(z) = 1 - (2/pi) * SUM_{k>=0} (-1)^k erfc((2k+1) z / (2 sqrt 2)) / (2k+1),   z > 0,
//! ```
//!
//! with `F(-z) = 1 - F(z)` and `F(0) = 1/2`. The normalized meander
//! integral `INT_0^1 dv / m(v)` (conditioned on `m(1) = 0`) has a CDF with
//! two analytically equal representations, a polynomial-Gaussian series and
//! its theta-transform dual; evaluating both and comparing is one of the
//! verification suites. The remaining laws are elementary: the arcsine law
//! for the last zero, the Rayleigh tail for the meander endpoint, and the
//! `1 + tau^2` law (`tau` standard Cauchy) for the zero-skeleton gap.

use crate::error::{Error, Result};
use crate::num::Real;

/// Truncation control for the series evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvSeriesSpec<T> {
    /// Stop once the next term magnitude falls below this.
    pub abs_tol: T,
    /// Hard cap on the number of terms.
    pub max_terms: usize,
}

impl<T: Real> Default for PvSeriesSpec<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::of(1e-12),
            max_terms: 1_000_000,
        }
    }
}

/// A series evaluation together with its truncation record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval<T> {
    pub value: T,
    pub terms_used: usize,
    /// False when the `max_terms` cap fired before `abs_tol` was met.
    pub converged: bool,
}

/// Which representation of the meander-integral CDF to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanderCdfForm {
    /// `SUM_{k in Z} (1 - k^2 z^2) exp(-k^2 z^2 / 2)`; fast for large `z`.
    PolynomialGaussian,
    /// `(8 pi^2 sqrt(2 pi) / z^3) SUM_{k>=1} k^2 exp(-2 k^2 pi^2 / z^2)`;
    /// fast for small `z`.
    DualTheta,
    /// `DualTheta` below `z = 2`, `PolynomialGaussian` from `z = 2` on;
    /// at most ~25 terms anywhere on the positive axis.
    Auto,
}

/// Density of `Y(1)`, full truncation record. `x = 0` is handled by the
/// even-extension limit: the series is summed at `+-x0` for a small `x0`
/// and averaged (the density is even and smooth at 0, so the error is
/// `O(x0^2)`). `x0` is `sqrt(abs_tol)` pushed up just far enough that the
/// series still converges within `max_terms`.
pub fn y1_density_detailed<T: Real>(x: T, spec: &PvSeriesSpec<T>) -> SeriesEval<T> {
    if x == T::zero() {
        let x0 = limit_evaluation_point(spec);
        let plus = y1_density_detailed(x0, spec);
        let minus = y1_density_detailed(-x0, spec);
        return SeriesEval {
            value: (plus.value + minus.value) / T::of(2.0),
            terms_used: plus.terms_used + minus.terms_used,
            converged: plus.converged && minus.converged,
        };
    }
    let c = x * x / T::of(8.0);
    // Consecutive terms are paired: each pair is positive and decreasing,
    // which keeps the alternating sum stable for small |x| where single
    // terms are all close to 1.
    let mut sum = T::zero();
    let mut terms = 0usize;
    let mut converged = false;
    while terms < spec.max_terms {
        let k = terms as f64;
        let lead = expm(T::of(2.0 * k + 1.0), c);
        if terms + 1 < spec.max_terms {
            let trail = expm(T::of(2.0 * k + 3.0), c);
            sum = sum + (lead - trail);
            terms += 2;
        } else {
            sum = sum + lead;
            terms += 1;
        }
        if lead < spec.abs_tol {
            converged = true;
            break;
        }
    }
    let pref = (T::of(2.0) / T::PI().powi(3)).sqrt();
    SeriesEval {
        value: pref * sum,
        terms_used: terms,
        converged,
    }
}

#[inline]
fn expm<T: Real>(odd: T, c: T) -> T {
    (-odd * odd * c).exp()
}

/// Evaluation point standing in for `x = 0`: `sqrt(abs_tol)` unless the
/// series would need more than `max_terms` terms there, in which case the
/// smallest convergent point is used instead. Either way the substitution
/// error is far below `abs_tol^(1/2)`.
fn limit_evaluation_point<T: Real>(spec: &PvSeriesSpec<T>) -> T {
    // Terms drop below tol once (2k+1) |x| / sqrt(8) exceeds
    // sqrt(ln(1/tol)), i.e. after about 1.5 * sqrt(8 ln(1/tol)) / (2|x|)
    // terms; inverting at the max_terms cap gives the floor below.
    let tol = spec.abs_tol.max(T::of(1e-300));
    let natural = tol.sqrt();
    let ln_inv = -tol.ln();
    let floor = T::of(1.5) * (T::of(8.0) * ln_inv).sqrt() / T::of(spec.max_terms.max(2) as f64);
    natural.max(floor)
}

/// Density of `Y(1)` at `x`.
pub fn y1_density<T: Real>(x: T, spec: &PvSeriesSpec<T>) -> T {
    y1_density_detailed(x, spec).value
}

/// CDF of `Y(1)`. Symmetric around `F(0) = 1/2` by construction, so
/// `F(z) + F(-z) = 1` holds to rounding for every `z`.
pub fn y1_cdf<T: Real>(z: T, spec: &PvSeriesSpec<T>) -> T {
    if z == T::zero() {
        return T::of(0.5);
    }
    if z < T::zero() {
        return T::one() - y1_cdf(-z, spec);
    }
    // Below this the erfc series needs too many terms; the odd Taylor
    // expansion F(z) = 1/2 + f(0) z + O(z^5) is already exact to ~1e-15
    // (the z^3 coefficient vanishes).
    if z < T::of(1e-4) {
        let f0 = (T::of(2.0) * T::PI().powi(3)).sqrt().recip();
        return T::of(0.5) + f0 * z;
    }
    let scale = z / T::of(8.0).sqrt();
    let mut sum = T::zero();
    let mut sign = T::one();
    let mut k = 0usize;
    while k < spec.max_terms {
        let odd = T::of(2.0 * k as f64 + 1.0);
        let term = (odd * scale).erfc() / odd;
        sum = sum + sign * term;
        if term < spec.abs_tol {
            break;
        }
        sign = -sign;
        k += 1;
    }
    T::one() - T::of(2.0) / T::PI() * sum
}

/// Gaussian upper bound for the right tail: `P(Y(1) >= z) <= exp(-z^2/8)`
/// for `z >= 1`.
pub fn y1_tail_upper<T: Real>(z: T) -> Result<T> {
    if !(z >= T::one()) {
        return Err(Error::Domain(format!(
            "tail bound requires z >= 1, got {z}"
        )));
    }
    Ok((-z * z / T::of(8.0)).exp())
}

/// CDF of the normalized meander integral `INT_0^1 dv / m(v)` conditioned
/// on `m(1) = 0`, in the requested representation. Outputs are clamped to
/// `[0, 1]`; in the far tails the polynomial-Gaussian form cancels to
/// rounding level (~1e-16), which is well inside every tolerance used here.
pub fn meander_integral_cdf<T: Real>(
    z: T,
    form: MeanderCdfForm,
    spec: &PvSeriesSpec<T>,
) -> Result<T> {
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "meander integral CDF requires z > 0, got {z}"
        )));
    }
    let value = match form {
        MeanderCdfForm::Auto => {
            let chosen = if z < T::of(2.0) {
                MeanderCdfForm::DualTheta
            } else {
                MeanderCdfForm::PolynomialGaussian
            };
            return meander_integral_cdf(z, chosen, spec);
        }
        MeanderCdfForm::PolynomialGaussian => {
            let z2 = z * z;
            let mut sum = T::one();
            for k in 1..=spec.max_terms {
                let k2 = T::of((k * k) as f64);
                let gauss = (-k2 * z2 / T::of(2.0)).exp();
                sum = sum + T::of(2.0) * (T::one() - k2 * z2) * gauss;
                // The raw term passes through zero at k z = 1, so the stop
                // rule uses the monotone envelope (1 + k^2 z^2) gauss.
                if (T::one() + k2 * z2) * gauss < spec.abs_tol {
                    break;
                }
            }
            sum
        }
        MeanderCdfForm::DualTheta => {
            let pref = T::of(8.0) * T::PI() * T::PI() * (T::of(2.0) * T::PI()).sqrt()
                / (z * z * z);
            let rate = T::of(2.0) * T::PI() * T::PI() / (z * z);
            // Terms k^2 exp(-rate k^2) peak near k = 1/sqrt(rate); stop
            // only once past the peak.
            let peak = rate.sqrt().recip().as_f64().ceil() as usize;
            let mut sum = T::zero();
            for k in 1..=spec.max_terms {
                let k2 = T::of((k * k) as f64);
                let term = k2 * (-rate * k2).exp();
                sum = sum + term;
                if k > peak && pref * term < spec.abs_tol {
                    break;
                }
            }
            pref * sum
        }
    };
    Ok(value.max(T::zero()).min(T::one()))
}

/// Tail of the Brownian meander endpoint: `P(m(1) > x) = exp(-x^2/2)` for
/// `x >= 0`.
pub fn meander_endpoint_tail<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::Domain(format!(
            "meander endpoint tail requires x >= 0, got {x}"
        )));
    }
    Ok((-x * x / T::of(2.0)).exp())
}

/// Arcsine CDF of the last zero of a Brownian path on `[0, 1]`:
/// `P(g <= u) = (2/pi) asin(sqrt u)`.
pub fn arcsine_cdf<T: Real>(u: T) -> Result<T> {
    if !(u >= T::zero() && u <= T::one()) {
        return Err(Error::Domain(format!(
            "arcsine CDF requires u in [0, 1], got {u}"
        )));
    }
    Ok(T::of(2.0) / T::PI() * u.sqrt().asin())
}

/// CDF of the zero-skeleton gap `1 + tau^2` with `tau` standard Cauchy:
/// `P(gap <= x) = (2/pi) atan(sqrt(x - 1))` for `x >= 1`.
pub fn eta_gap_cdf<T: Real>(x: T) -> Result<T> {
    if !(x >= T::one()) {
        return Err(Error::Domain(format!(
            "eta gap CDF requires x >= 1, got {x}"
        )));
    }
    Ok(T::of(2.0) / T::PI() * (x - T::one()).sqrt().atan())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PvSeriesSpec<f64> {
        PvSeriesSpec::default()
    }

    // Reference values computed independently by 50-digit summation of the
    // defining series (brute force, ~1e4 terms, no shared code with the
    // implementations above).
    const DENSITY_AT_3: f64 = 0.082_443_286_704_946_344_719_733_681_685_03;
    const DENSITY_AT_1: f64 = 0.152_291_688_697_324_576_051_712_625_164_26;
    const DENSITY_AT_HALF: f64 = 0.131_314_331_622_429_225_374_454_710_219_73;
    const DENSITY_AT_0: f64 = 0.126_987_271_868_481_939_571_526_609_869_27;
    const CDF_AT_HALF: f64 = 0.564_189_330_475_628_863_035_428_464_350_35;
    const CDF_AT_1: f64 = 0.633_972_217_953_267_015_300_146_255_237_90;
    const CDF_AT_2: f64 = 0.798_566_698_237_889_936_629_749_712_505_88;
    const MEANDER_CDF_AT_1: f64 = 5.294_807_881_344_431_756_544_387_938_03e-7;
    const MEANDER_CDF_AT_2: f64 = 0.177_923_355_643_070_678_689_995_713_681_44;
    const MEANDER_CDF_AT_5: f64 = 0.999_821_120_647_740_223_754_150_360_139_47;

    #[test]
    fn density_matches_high_precision_references() {
        assert!((y1_density(3.0, &spec()) - DENSITY_AT_3).abs() < 1e-10);
        assert!((y1_density(1.0, &spec()) - DENSITY_AT_1).abs() < 1e-12);
        assert!((y1_density(0.5, &spec()) - DENSITY_AT_HALF).abs() < 1e-12);
    }

    #[test]
    fn density_is_even_and_positive() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 3.5, 6.0] {
            let p = y1_density(x, &spec());
            assert_eq!(p, y1_density(-x, &spec()));
            assert!(p > 0.0);
        }
    }

    #[test]
    fn density_limit_at_zero() {
        // The x = 0 value is the even-extension limit 1 / sqrt(2 pi^3).
        let f0 = y1_density(0.0, &spec());
        assert!((f0 - DENSITY_AT_0).abs() < 1e-9);
    }

    #[test]
    fn density_truncation_is_reported() {
        let tight = PvSeriesSpec {
            abs_tol: 1e-12,
            max_terms: 3,
        };
        let eval = y1_density_detailed(0.05, &tight);
        assert!(!eval.converged);
        assert!(eval.terms_used <= 4);
        let loose = y1_density_detailed(3.0, &spec());
        assert!(loose.converged);
    }

    #[test]
    fn cdf_center_symmetry_and_references() {
        assert_eq!(y1_cdf(0.0, &spec()), 0.5);
        assert!((y1_cdf(1.0, &spec()) - CDF_AT_1).abs() < 1e-13);
        assert!((y1_cdf(2.0, &spec()) - CDF_AT_2).abs() < 1e-13);
        assert!((y1_cdf(0.5, &spec()) - CDF_AT_HALF).abs() < 1e-13);
        for &z in &[0.001, 0.1, 0.7, 1.3, 2.9, 8.0] {
            let sum = y1_cdf(z, &spec()) + y1_cdf(-z, &spec());
            assert!((sum - 1.0).abs() < 1e-12, "F(z)+F(-z) = {sum} at z = {z}");
        }
    }

    #[test]
    fn cdf_is_monotone_to_the_limits() {
        let mut prev = 0.0;
        let mut z = -12.0;
        while z <= 12.0 {
            let f = y1_cdf(z, &spec());
            assert!((0.0..=1.0).contains(&f));
            assert!(f >= prev, "CDF must be nondecreasing at z = {z}");
            prev = f;
            z += 0.0625;
        }
        assert!(y1_cdf(-12.0, &spec()) < 1e-8);
        assert!(y1_cdf(12.0, &spec()) > 1.0 - 1e-8);
    }

    #[test]
    fn cdf_small_z_expansion_is_continuous() {
        // The series branch just above 1e-4 must agree with the odd Taylor
        // branch used below it.
        let s = spec();
        let z = 1.01e-4;
        let series = y1_cdf(z, &s);
        let taylor = 0.5 + DENSITY_AT_0 * z;
        assert!((series - taylor).abs() < 1e-12);
    }

    #[test]
    fn tail_upper_matches_cdf_complement() {
        // The bound must dominate the true tail wherever it applies.
        for &z in &[1.0, 1.5, 2.0, 2.5, 3.0, 5.0] {
            let tail = 1.0 - y1_cdf(z, &spec());
            let bound = y1_tail_upper(z).unwrap();
            assert!(tail <= bound, "tail {tail} above bound {bound} at z = {z}");
        }
        assert!((y1_tail_upper(2.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!(y1_tail_upper(0.99).is_err());
    }

    #[test]
    fn meander_forms_agree_to_ten_digits() {
        for &z in &[0.5, 1.0, 2.0, 5.0, 10.0] {
            let a = meander_integral_cdf(z, MeanderCdfForm::PolynomialGaussian, &spec()).unwrap();
            let b = meander_integral_cdf(z, MeanderCdfForm::DualTheta, &spec()).unwrap();
            assert!(
                (a - b).abs() < 1e-10,
                "forms disagree at z = {z}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn meander_cdf_reference_values() {
        let s = spec();
        let at = |z| meander_integral_cdf(z, MeanderCdfForm::Auto, &s).unwrap();
        assert!((at(1.0) - MEANDER_CDF_AT_1).abs() < 1e-13);
        assert!((at(2.0) - MEANDER_CDF_AT_2).abs() < 1e-12);
        assert!((at(5.0) - MEANDER_CDF_AT_5).abs() < 1e-12);
    }

    #[test]
    fn meander_cdf_shape() {
        let s = spec();
        let mut prev = 0.0;
        let mut z = 0.05;
        while z < 25.0 {
            let f = meander_integral_cdf(z, MeanderCdfForm::Auto, &s).unwrap();
            assert!((0.0..=1.0).contains(&f));
            assert!(f + 1e-12 >= prev, "CDF must be nondecreasing at z = {z}");
            prev = f;
            z += 0.05;
        }
        assert!(meander_integral_cdf(0.0, MeanderCdfForm::Auto, &s).is_err());
        assert!(meander_integral_cdf(-1.0, MeanderCdfForm::Auto, &s).is_err());
    }

    #[test]
    fn elementary_laws() {
        assert!((arcsine_cdf(0.25f64).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(arcsine_cdf(0.0).unwrap(), 0.0);
        assert!((arcsine_cdf(1.0f64).unwrap() - 1.0).abs() < 1e-15);
        assert!(arcsine_cdf(-0.1).is_err());
        assert!(arcsine_cdf(1.1).is_err());

        assert!((eta_gap_cdf(2.0f64).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(eta_gap_cdf(1.0).unwrap(), 0.0);
        assert!(eta_gap_cdf(0.5).is_err());

        assert_eq!(meander_endpoint_tail(0.0).unwrap(), 1.0);
        assert!((meander_endpoint_tail(1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!(meander_endpoint_tail(-0.1).is_err());
    }

    #[test]
    fn f32_instantiation_is_coarse_but_sane() {
        let s32 = PvSeriesSpec::<f32> {
            abs_tol: 1e-6,
            max_terms: 100_000,
        };
        assert!((y1_cdf(1.0f32, &s32) - CDF_AT_1 as f32).abs() < 1e-5);
        assert!((y1_density(1.0f32, &s32) - DENSITY_AT_1 as f32).abs() < 1e-5);
    }
}
