//! Reduced-scale statistical checks of the distributional laws: every
//! ensemble here is a few thousand paths at moderate resolution with a
//! frozen seed, so the suite stays fast and fully deterministic while the
//! tolerances keep roughly a 2x margin over the observed statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pvsim_core::error::Error;
use pvsim_core::exactdist::{
    arcsine_cdf, eta_gap_cdf, meander_endpoint_tail, meander_integral_cdf, y1_cdf, y1_tail_upper,
    MeanderCdfForm, PvSeriesSpec,
};
use pvsim_core::mc::stats::{
    bound_check, ks_test, pearson, small_deviation_shape, spearman, two_sample_ks, BoundSide,
};
use pvsim_core::mc::{ensemble_map, mix64, run_ensemble, sample_eta_chains, EnsembleSpec, EtaChainConfig};
use pvsim_core::paths::{decompose_at_last_zero, sample_brownian, sample_brownian_with, SamplePath};
use pvsim_core::pv::{pv_localtime, pv_riemann};

fn cutoff(n_steps: usize) -> f64 {
    0.5 * (1.0 / n_steps as f64).sqrt()
}

#[test]
fn y1_law_and_tail_bound_at_reduced_scale() {
    let spec = EnsembleSpec {
        n_paths: 4_000,
        n_steps: 4_096,
        horizon: 1.0,
        master_seed: 71,
        workers: 2,
    };
    let eps = cutoff(spec.n_steps);
    let report = run_ensemble(spec, "y1", |p| {
        pv_riemann(p, eps).expect("valid cutoff").final_value()
    })
    .unwrap();
    let series = PvSeriesSpec::default();
    let ks = ks_test(&report.samples, |x| y1_cdf(x, &series)).unwrap();
    assert!(ks.d < 0.035, "KS distance to the Y(1) law: {}", ks.d);
    for z in [1.0, 2.0] {
        let b = bound_check(
            &report.samples,
            z,
            y1_tail_upper(z).unwrap(),
            BoundSide::UpperTail,
            0.98,
        )
        .unwrap();
        assert!(
            b.pass,
            "tail bound at z = {z}: empirical {} vs bound {}",
            b.empirical, b.bound
        );
    }
}

struct DecompositionRow {
    g: f64,
    m1: f64,
    bridge_sup: f64,
    meander_integral: f64,
}

/// Same per-path pipeline as the front end: deterministic resampling in
/// seed blocks when a path has no zero crossing, a continuity-corrected
/// bridge maximum, and a square-root endpoint cap on the meander integral.
fn decomposition_rows(n_paths: usize, n_steps: usize, master_seed: u64) -> Vec<DecompositionRow> {
    let rows: Vec<pvsim_core::Result<DecompositionRow>> = ensemble_map(n_paths, 2, |i| {
        for attempt in 0..64u64 {
            let seed = mix64(master_seed, i as u64 + attempt * n_paths as u64);
            let path: SamplePath<f64> = sample_brownian(n_steps, 1.0, seed)?;
            let dec = match decompose_at_last_zero(&path) {
                Ok(dec) => dec,
                Err(Error::NoZeroCrossing) => continue,
                Err(e) => return Err(e),
            };
            let m = &dec.meander.values;
            let dt = 1.0 / n_steps as f64;
            let mut trap = 0.0;
            for j in 1..n_steps {
                trap += 0.5 * dt * (1.0 / m[j] + 1.0 / m[j + 1]);
            }
            let integral = trap + 2.0 * dt / m[1];
            let grid_max = dec.bridge.values.iter().fold(0.0f64, |s, &v| s.max(v.abs()));
            return Ok(DecompositionRow {
                g: dec.g,
                m1: m[n_steps],
                bridge_sup: grid_max + 0.5826 * (path.dt() / dec.g).sqrt(),
                meander_integral: integral,
            });
        }
        Err(Error::NoZeroCrossing)
    })
    .unwrap();
    rows.into_iter().collect::<pvsim_core::Result<_>>().unwrap()
}

#[test]
fn last_zero_decomposition_laws_at_reduced_scale() {
    let rows = decomposition_rows(4_000, 4_096, 72);
    let gs: Vec<f64> = rows.iter().map(|r| r.g).collect();
    let m1s: Vec<f64> = rows.iter().map(|r| r.m1).collect();
    let sups: Vec<f64> = rows.iter().map(|r| r.bridge_sup).collect();

    let ks_g = ks_test(&gs, |u| arcsine_cdf(u.clamp(0.0, 1.0)).unwrap()).unwrap();
    assert!(ks_g.d < 0.04, "KS distance to the arcsine law: {}", ks_g.d);
    let ks_m = ks_test(&m1s, |x| 1.0 - meander_endpoint_tail(x.max(0.0)).unwrap()).unwrap();
    assert!(ks_m.d < 0.045, "KS distance to the Rayleigh law: {}", ks_m.d);

    let c_gm = pearson(&gs, &m1s).unwrap();
    assert!(c_gm.abs() < 0.08, "corr(g, m(1)) = {c_gm}");
    let c_gb = pearson(&gs, &sups).unwrap();
    assert!(c_gb.abs() < 0.08, "corr(g, sup|B|) = {c_gb}");
}

#[test]
fn meander_integral_decreases_stochastically_in_the_endpoint() {
    let rows = decomposition_rows(4_000, 2_048, 73);
    let m1s: Vec<f64> = rows.iter().map(|r| r.m1).collect();
    let ints: Vec<f64> = rows.iter().map(|r| r.meander_integral).collect();

    let rank_corr = spearman(&m1s, &ints).unwrap();
    assert!(
        rank_corr < -0.35,
        "endpoint and integral should be strongly anticorrelated, got {rank_corr}"
    );

    let median_of = |bin: Vec<f64>| {
        let mut bin = bin;
        bin.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bin[bin.len() / 2]
    };
    let low = median_of(
        rows.iter()
            .filter(|r| r.m1 < 0.75)
            .map(|r| r.meander_integral)
            .collect(),
    );
    let mid = median_of(
        rows.iter()
            .filter(|r| (0.75..1.5).contains(&r.m1))
            .map(|r| r.meander_integral)
            .collect(),
    );
    let high = median_of(
        rows.iter()
            .filter(|r| r.m1 >= 1.5)
            .map(|r| r.meander_integral)
            .collect(),
    );
    assert!(
        low > mid && mid > high,
        "median integrals by endpoint bin must decrease: {low} > {mid} > {high}"
    );
}

#[test]
fn excursion_integral_matches_the_conditioned_law() {
    // Conditioning the meander on returning to zero gives the normalized
    // excursion, built here as a 3d Bessel bridge from three independent
    // Brownian bridges; its time integral of 1/e follows the closed-form
    // CDF with both endpoints capped by the square-root scaling.
    let n = 1_024usize;
    let dt = 1.0 / n as f64;
    let samples: Vec<f64> = ensemble_map(4_000, 2, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(74, i as u64));
        let mut e2 = vec![0.0f64; n - 1];
        for _ in 0..3 {
            let w: SamplePath<f64> = sample_brownian_with(&mut rng, n, 1.0, 0);
            let w1 = w.values[n];
            for (j, e) in e2.iter_mut().enumerate() {
                let t = (j + 1) as f64 * dt;
                let b = w.values[j + 1] - t * w1;
                *e += b * b;
            }
        }
        let inv: Vec<f64> = e2.iter().map(|&v| 1.0 / v.sqrt()).collect();
        let mut trap = 0.0;
        for pair in inv.windows(2) {
            trap += 0.5 * dt * (pair[0] + pair[1]);
        }
        trap + 2.0 * dt * (inv[0] + inv[n - 2])
    })
    .unwrap();
    let spec = PvSeriesSpec::default();
    let ks = ks_test(&samples, |z| {
        meander_integral_cdf(z, MeanderCdfForm::Auto, &spec).unwrap()
    })
    .unwrap();
    assert!(ks.d < 0.035, "KS distance to the conditioned law: {}", ks.d);
}

#[test]
fn eta_skeleton_laws_at_reduced_scale() {
    let cfg = EtaChainConfig {
        unit_steps: 1 << 10,
        chase_segment_steps: 1 << 8,
        max_chase_segments: 14,
        records_per_chain: 3,
        cutoff_eps: cutoff(1 << 10),
    };
    let chains = sample_eta_chains(600, cfg, 75, 2).unwrap();
    let gaps: Vec<f64> = chains.iter().flatten().map(|r| r.eta_gap).collect();
    let zs: Vec<f64> = chains.iter().flatten().map(|r| r.z_value).collect();
    assert!(gaps.len() > 1_500, "only {} records", gaps.len());

    let ks_gap = ks_test(&gaps, |x| eta_gap_cdf(x.max(1.0)).unwrap()).unwrap();
    assert!(ks_gap.d < 0.05, "KS distance to the gap law: {}", ks_gap.d);
    let spec = PvSeriesSpec::default();
    let ks_z = ks_test(&zs, |x| y1_cdf(x, &spec)).unwrap();
    assert!(ks_z.d < 0.07, "KS distance of Z to the Y(1) law: {}", ks_z.d);
}

#[test]
fn pv_estimators_cross_validate_at_reduced_scale() {
    let n_steps = 1 << 14;
    let eps = cutoff(n_steps);
    let rows: Vec<(f64, f64)> = ensemble_map(2_000, 2, |i| {
        let path: SamplePath<f64> = sample_brownian(n_steps, 1.0, mix64(76, i as u64)).unwrap();
        let riemann = pv_riemann(&path, eps).unwrap().final_value();
        let ltime = pv_localtime(&path, 1.0, eps).unwrap();
        (riemann, ltime)
    })
    .unwrap();
    let riemanns: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ltimes: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let d = two_sample_ks(&riemanns, &ltimes).unwrap();
    assert!(d < 0.08, "paired estimator KS distance: {d}");
}

#[test]
fn small_deviation_shape_at_reduced_scale() {
    let n_steps = 1 << 10;
    let eps = cutoff(n_steps);
    let sups: Vec<f64> = ensemble_map(20_000, 2, |i| {
        let path: SamplePath<f64> = sample_brownian(n_steps, 1.0, mix64(77, i as u64)).unwrap();
        pv_riemann(&path, eps)
            .unwrap()
            .y_values
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    })
    .unwrap();
    let z_grid: Vec<f64> = (0..=12).map(|k| 0.4 + 0.05 * k as f64).collect();
    let n = sups.len() as f64;
    let probs: Vec<f64> = z_grid
        .iter()
        .map(|&z| sups.iter().filter(|&&s| s < z).count() as f64 / n)
        .collect();
    let fit = small_deviation_shape(&z_grid, &probs).unwrap();
    assert!(fit.slope > 0.0, "slope {}", fit.slope);
    assert!(fit.r_squared > 0.85, "R^2 {}", fit.r_squared);
}
