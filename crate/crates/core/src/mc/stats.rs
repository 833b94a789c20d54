//! Statistical instruments: Kolmogorov-Smirnov tests, Wilson-interval
//! bound checks, least-squares shape fits, rank correlations, and a
//! permutation test of serial independence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::Real;

/// Result of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult<T> {
    /// Sup distance between the empirical CDF and the reference CDF.
    pub d: T,
    /// Asymptotic p-value at lambda = sqrt(n) * d.
    pub p: T,
    pub n: usize,
}

/// Kolmogorov's limiting survival function
/// `Q(lambda) = 2 SUM_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`,
/// truncated when a term drops below 1e-12.
pub fn kolmogorov_sf<T: Real>(lambda: T) -> T {
    if lambda <= T::zero() {
        return T::one();
    }
    let mut sum = T::zero();
    let mut sign = T::one();
    for k in 1..=1000 {
        let kk = T::of(k as f64);
        let term = (-T::of(2.0) * kk * kk * lambda * lambda).exp();
        sum = sum + sign * term;
        if term < T::of(1e-12) {
            break;
        }
        sign = -sign;
    }
    (T::of(2.0) * sum).min(T::one()).max(T::zero())
}

/// One-sample KS test against `cdf`.
pub fn ks_test<T: Real>(samples: &[T], cdf: impl Fn(T) -> T) -> Result<KsResult<T>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("KS test needs samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("KS test needs ordered values"));
    let n = sorted.len();
    let nf = T::of(n as f64);
    let mut d = T::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let above = T::of((i + 1) as f64) / nf - f;
        let below = f - T::of(i as f64) / nf;
        d = d.max(above).max(below);
    }
    let p = kolmogorov_sf(nf.sqrt() * d);
    Ok(KsResult { d, p, n })
}

/// Sup distance between the empirical CDFs of two samples.
pub fn two_sample_ks<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("two-sample KS needs samples".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).expect("KS test needs ordered values"));
    sb.sort_by(|x, y| x.partial_cmp(y).expect("KS test needs ordered values"));
    let (na, nb) = (T::of(sa.len() as f64), T::of(sb.len() as f64));
    let mut d = T::zero();
    let (mut i, mut j) = (0usize, 0usize);
    while i < sa.len() && j < sb.len() {
        // Consume every copy of the smaller head value from both sides
        // before comparing, so ties contribute a single CDF step.
        let v = if sa[i] <= sb[j] { sa[i] } else { sb[j] };
        while i < sa.len() && sa[i] <= v {
            i += 1;
        }
        while j < sb.len() && sb[j] <= v {
            j += 1;
        }
        let diff = (T::of(i as f64) / na - T::of(j as f64) / nb).abs();
        d = d.max(diff);
    }
    Ok(d)
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> Result<T> {
    if sorted.is_empty() {
        return Err(Error::InsufficientData("quantile of empty slice".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "quantile level {q} outside [0, 1]"
        )));
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::of(pos - lo as f64);
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Inverse standard-normal CDF: Acklam's rational approximation refined by
/// one Halley step against erfc, accurate to about 1e-15 on (0, 1).
pub fn inverse_normal<T: Real>(p: T) -> Result<T> {
    let pf = p.as_f64();
    if !(0.0 < pf && pf < 1.0) {
        return Err(Error::Domain(format!("inverse normal needs p in (0,1), got {pf}")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    let x = if pf < p_low {
        let q = (-2.0 * pf.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if pf <= 1.0 - p_low {
        let q = pf - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - pf).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement: e = Phi(x) - p, Phi(x) = erfc(-x/sqrt2)/2.
    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - pf;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    let x = x - u / (1.0 + x * u / 2.0);
    Ok(T::of(x))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval<T: Real>(successes: usize, n: usize, confidence: T) -> Result<(T, T)> {
    if n == 0 {
        return Err(Error::InsufficientData("Wilson interval needs trials".into()));
    }
    if successes > n {
        return Err(Error::InvalidArgument(format!(
            "{successes} successes out of {n} trials"
        )));
    }
    let cf = confidence.as_f64();
    if !(0.0 < cf && cf < 1.0) {
        return Err(Error::Domain(format!("confidence {cf} outside (0,1)")));
    }
    let z = inverse_normal(T::of(0.5 * (1.0 + cf)))?;
    let nf = T::of(n as f64);
    let p_hat = T::of(successes as f64) / nf;
    let z2 = z * z;
    let denom = T::one() + z2 / nf;
    let center = (p_hat + z2 / (T::of(2.0) * nf)) / denom;
    let half =
        z * (p_hat * (T::one() - p_hat) / nf + z2 / (T::of(4.0) * nf * nf)).sqrt() / denom;
    Ok(((center - half).max(T::zero()), (center + half).min(T::one())))
}

/// Which tail probability a bound constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    /// The bound dominates `P(X >= z)`.
    UpperTail,
    /// The bound dominates `P(X <= z)`.
    LowerTail,
}

/// Result of checking an analytic tail bound against an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck<T> {
    pub z: T,
    pub empirical: T,
    pub ci_low: T,
    pub ci_high: T,
    pub bound: T,
    pub pass: bool,
}

/// Check `P(X >= z) <= bound` (or the lower-tail analogue): the check
/// fails only when the whole Wilson interval for the tail probability lies
/// above the bound.
pub fn bound_check<T: Real>(
    samples: &[T],
    z: T,
    bound: T,
    side: BoundSide,
    confidence: T,
) -> Result<BoundCheck<T>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("bound check needs samples".into()));
    }
    let hits = match side {
        BoundSide::UpperTail => samples.iter().filter(|&&x| x >= z).count(),
        BoundSide::LowerTail => samples.iter().filter(|&&x| x <= z).count(),
    };
    let n = samples.len();
    let (lo, hi) = wilson_interval(hits, n, confidence)?;
    Ok(BoundCheck {
        z,
        empirical: T::of(hits as f64) / T::of(n as f64),
        ci_low: lo,
        ci_high: hi,
        bound,
        pass: lo <= bound,
    })
}

/// Least-squares fit of `ln p` against `-1/z^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    pub points_used: usize,
}

/// Fit the small-deviation shape `p(z) ~ exp(-c/z^2)`: regress `ln p` on
/// `-1/z^2` over grid points with `p > 0` (zeros are dropped). A positive
/// slope is the shape-consistency signal.
pub fn small_deviation_shape<T: Real>(z_grid: &[T], probs: &[T]) -> Result<ShapeFit<T>> {
    if z_grid.len() != probs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} grid points vs {} probabilities",
            z_grid.len(),
            probs.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&z, &p) in z_grid.iter().zip(probs) {
        if !(z > T::zero()) {
            return Err(Error::Domain(format!("grid point {z} must be positive")));
        }
        if p > T::zero() {
            xs.push(-T::one() / (z * z));
            ys.push(p.ln());
        }
    }
    let m = xs.len();
    if m < 4 {
        return Err(Error::InsufficientData(format!(
            "shape fit needs >= 4 nonzero probabilities, got {m}"
        )));
    }
    let mf = T::of(m as f64);
    let mean_x = xs.iter().copied().sum::<T>() / mf;
    let mean_y = ys.iter().copied().sum::<T>() / mf;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for k in 0..m {
        let dx = xs[k] - mean_x;
        let dy = ys[k] - mean_y;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if !(sxx > T::zero()) {
        return Err(Error::Domain("degenerate grid: all z equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > T::zero() {
        (sxy * sxy) / (sxx * syy)
    } else {
        T::one()
    };
    Ok(ShapeFit {
        slope,
        intercept,
        r_squared,
        points_used: m,
    })
}

/// Pearson correlation coefficient.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation needs two equal-length samples of size >= 2".into(),
        ));
    }
    let nf = T::of(a.len() as f64);
    let ma = a.iter().copied().sum::<T>() / nf;
    let mb = b.iter().copied().sum::<T>() / nf;
    let mut saa = T::zero();
    let mut sbb = T::zero();
    let mut sab = T::zero();
    for k in 0..a.len() {
        let da = a[k] - ma;
        let db = b[k] - mb;
        saa = saa + da * da;
        sbb = sbb + db * db;
        sab = sab + da * db;
    }
    if !(saa > T::zero()) || !(sbb > T::zero()) {
        return Err(Error::Domain("correlation of a constant sample".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Average ranks (1-based; ties share their mean rank).
pub fn ranks<T: Real>(values: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("ranks need ordered values"));
    let mut out = vec![T::zero(); values.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut j = k;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[k]] {
            j += 1;
        }
        let avg = T::of((k + j + 2) as f64) / T::of(2.0);
        for &i in &idx[k..=j] {
            out[i] = avg;
        }
        k = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    pearson(&ranks(a), &ranks(b))
}

/// Result of the permutation test of serial independence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceTest<T> {
    /// Largest absolute rank correlation across the four cross-record
    /// feature combinations.
    pub statistic: T,
    /// Permutation p-value with add-one smoothing.
    pub p: T,
    pub n_pairs: usize,
    pub n_shuffles: usize,
}

fn max_abs_pair_correlation<T: Real>(
    ra: &[T],
    rb: &[T],
    pairs: &[(usize, usize)],
    order: &[usize],
) -> Result<T> {
    let first_a: Vec<T> = pairs.iter().map(|&(i, _)| ra[order[i]]).collect();
    let first_b: Vec<T> = pairs.iter().map(|&(i, _)| rb[order[i]]).collect();
    let second_a: Vec<T> = pairs.iter().map(|&(_, j)| ra[order[j]]).collect();
    let second_b: Vec<T> = pairs.iter().map(|&(_, j)| rb[order[j]]).collect();
    let mut best = T::zero();
    for (x, y) in [
        (&first_a, &second_a),
        (&first_a, &second_b),
        (&first_b, &second_a),
        (&first_b, &second_b),
    ] {
        best = best.max(pearson(x, y)?.abs());
    }
    Ok(best)
}

/// Permutation test that consecutive records are independent: the observed
/// max absolute rank correlation between the features `(a, b)` of pair
/// predecessors and successors is compared against its distribution under
/// random reordering of the records. Under independence, p is uniform;
/// small p is evidence of serial dependence.
pub fn shuffle_independence_test<T: Real>(
    a: &[T],
    b: &[T],
    pairs: &[(usize, usize)],
    n_shuffles: usize,
    seed: u64,
) -> Result<IndependenceTest<T>> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(
            "feature arrays must have equal length".into(),
        ));
    }
    if pairs.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "independence test needs >= 8 pairs, got {}",
            pairs.len()
        )));
    }
    if n_shuffles < 1 {
        return Err(Error::InvalidArgument("need at least one shuffle".into()));
    }
    for &(i, j) in pairs {
        if i >= a.len() || j >= a.len() {
            return Err(Error::InvalidArgument(format!(
                "pair ({i}, {j}) outside the record range"
            )));
        }
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let identity: Vec<usize> = (0..a.len()).collect();
    let observed = max_abs_pair_correlation(&ra, &rb, pairs, &identity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = identity;
    let mut at_least = 0usize;
    for _ in 0..n_shuffles {
        order.shuffle(&mut rng);
        if max_abs_pair_correlation(&ra, &rb, pairs, &order)? >= observed {
            at_least += 1;
        }
    }
    let p = T::of((1 + at_least) as f64) / T::of((n_shuffles + 1) as f64);
    Ok(IndependenceTest {
        statistic: observed,
        p,
        n_pairs: pairs.len(),
        n_shuffles,
    })
}
