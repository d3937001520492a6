use tensorconc::ensembles::{ComponentEnsemble, CorrelationMode, Family, SpectrumSpec};
use tensorconc::experiments::{mc_expected_deviation, mean_stderr, ratio_sweep, run_plan, ExperimentPlan, Statistic};

fn deviation_plan(id: &str, grid: Vec<u64>, ensembles: Vec<ComponentEnsemble>, trials: u64) -> ExperimentPlan {
    let mut p = ExperimentPlan::new(id, grid, ensembles, trials, Statistic::DeviationNorm, 17);
    p.solver.restarts = 4;
    p
}

#[test]
fn scalar_variance_deviation_matches_closed_form() {
    // |N^{-1} sum (g_i^2 - 1)| has mean sqrt(2) * sqrt(2 / pi) / sqrt(N) to leading order.
    let mut plan = deviation_plan("scalar", vec![100], vec![ComponentEnsemble::gaussian_identity(1); 2], 4000);
    plan.correlation = CorrelationMode::Identical;
    let g = &mc_expected_deviation(&plan).unwrap()[0];
    let expected = 2.0 / (std::f64::consts::PI * 100.0).sqrt();
    assert!((expected - 0.112838).abs() < 1e-6);
    assert!((g.mean - expected).abs() <= 3.0 * g.stderr + 0.01 * expected, "{} vs {expected}", g.mean);
}

#[test]
fn doubling_n_shrinks_scalar_deviation_by_root_two() {
    let plan = deviation_plan("doubling", vec![256, 512], vec![ComponentEnsemble::gaussian_identity(1); 2], 4000);
    let s = mc_expected_deviation(&plan).unwrap();
    let ratio = s[0].mean / s[1].mean;
    let rel_err = (s[0].stderr / s[0].mean).hypot(s[1].stderr / s[1].mean);
    assert!((ratio - 2f64.sqrt()).abs() <= 3.0 * rel_err * ratio, "ratio {ratio}");
}

#[test]
fn stderr_matches_spread_of_independent_blocks() {
    let plan = deviation_plan("blocks", vec![64], vec![ComponentEnsemble::gaussian_identity(2); 2], 2048);
    let records = run_plan(&plan).unwrap();
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let (_, se) = mean_stderr(&values);
    let block_means: Vec<f64> = values.chunks(128).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let (_, block_se) = mean_stderr(&block_means);
    // Sixteen blocks: the block-mean standard error estimates the same quantity.
    let ratio = block_se / se;
    assert!((0.6..=1.4).contains(&ratio), "block/se ratio {ratio}");
}

#[test]
fn ratio_is_invariant_under_spectrum_scaling() {
    let base = vec![ComponentEnsemble::gaussian_identity(3), ComponentEnsemble::gaussian_identity(4)];
    let scaled: Vec<ComponentEnsemble> =
        base.iter().map(|e| ComponentEnsemble::new(e.spectrum.scaled(4.0), e.family)).collect();
    let a = ratio_sweep(&deviation_plan("scale", vec![32, 128], base, 16)).unwrap();
    let b = ratio_sweep(&deviation_plan("scale", vec![32, 128], scaled, 16)).unwrap();
    for (x, y) in a.points.iter().zip(&b.points) {
        assert!((y.mean - 4.0 * x.mean).abs() <= 1e-9 * y.mean);
        assert!((x.ratio.unwrap() - y.ratio.unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn rademacher_ratios_track_gaussian_ratios() {
    let grid = vec![64, 256, 1024];
    let ens = |f| vec![ComponentEnsemble::new(SpectrumSpec::identity(8), f); 2];
    let g = ratio_sweep(&deviation_plan("gauss", grid.clone(), ens(Family::Gaussian), 32)).unwrap();
    let r = ratio_sweep(&deviation_plan("rade", grid, ens(Family::ScaledRademacher), 32)).unwrap();
    assert!(r.max_ratio <= 2.0 * g.max_ratio, "{} vs {}", r.max_ratio, g.max_ratio);
    assert!(r.min_ratio > 0.0);
}
