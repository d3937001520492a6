//! Command implementations. Each writes a human table to `w` and a CSV with
//! the same formatted cells under the output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tensorconc::bounds::{logconcave_bound, regime_classify, script_e_n, theorem21_upper, theorem23_bound};
use tensorconc::chaining::{
    doubling_violations, hoeffding_rearrangement_check, j_s_sequence, j_s_unrounded, linf_sup_check, order_stats_check,
    OrderLaw,
};
use tensorconc::ensembles::{effective_rank, Family, SpectrumSpec};
use tensorconc::experiments::{
    exponent_fit, run_keys, summarize, Abscissa, ExperimentPlan, FitResult, GridSummary, Statistic,
};
use tensorconc::rng::SeededStream;

use crate::config::RateInput;
use crate::format::sig6;
use crate::plot::rate_plot_svg;
use crate::store::{summary_row, write_summary_csv, ResultStore, SUMMARY_COLUMNS};

/// Mean `linf_statistic` must stay below this for the sup-norm check.
pub const LINF_THRESHOLD: f64 = 2.0;
pub const DEFAULT_C0: [f64; 3] = [0.5, 1.0, 2.0];

/// Prints an aligned text table.
pub fn print_table<S: AsRef<str>>(w: &mut dyn Write, headers: &[&str], rows: &[Vec<S>]) -> std::io::Result<()> {
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (c, cell) in r.iter().enumerate() {
            width[c] = width[c].max(cell.as_ref().chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        cells.iter().zip(&width).map(|(c, &n)| format!("{c:<n$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    writeln!(w, "{}", line(headers.to_vec()))?;
    writeln!(w, "{}", width.iter().map(|&n| "-".repeat(n)).collect::<Vec<_>>().join("  "))?;
    for r in rows {
        writeln!(w, "{}", line(r.iter().map(|c| c.as_ref()).collect()))?;
    }
    Ok(())
}

fn write_csv<S: AsRef<str>>(path: &Path, headers: &[&str], rows: &[Vec<S>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut out = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    out.write_record(headers)?;
    for r in rows {
        out.write_record(r.iter().map(|c| c.as_ref()))?;
    }
    out.flush()?;
    Ok(())
}

fn summary_rows(summary: &[GridSummary]) -> Vec<Vec<String>> {
    summary.iter().map(|g| summary_row(g).to_vec()).collect()
}

/// Rate table rows as `(quantity, value)`.
pub fn bound_rows(input: &RateInput) -> Result<Vec<(String, String)>> {
    let n = input.n as f64;
    let mut rows = vec![("N".to_string(), input.n.to_string()), ("p".to_string(), input.spectra.len().to_string())];
    for (k, s) in input.spectra.iter().enumerate() {
        rows.push((format!("d_{}", k + 1), s.dim().to_string()));
        rows.push((format!("r_{}", k + 1), sig6(effective_rank(s))));
        rows.push((format!("lambda1_{}", k + 1), sig6(s.op_norm())));
    }
    let regime = regime_classify(&input.spectra, n)?;
    rows.push(("log N".into(), sig6(regime.log_n)));
    rows.push(("t".into(), regime.t.to_string()));
    rows.push(("sqrt_term".into(), sig6(regime.sqrt_term)));
    rows.push(("log_term".into(), sig6(regime.log_term)));
    rows.push(("dominant".into(), serde_json::to_value(regime.dominant)?.as_str().unwrap_or_default().to_string()));
    rows.push(("E_N".into(), sig6(script_e_n(&input.spectra, n)?)));
    rows.push(("theorem21_upper".into(), sig6(theorem21_upper(&input.spectra, n)?)));
    if input.spectra.iter().all(SpectrumSpec::is_identity) {
        let dims: Vec<usize> = input.spectra.iter().map(SpectrumSpec::dim).collect();
        rows.push(("logconcave_bound".into(), sig6(logconcave_bound(&dims, n)?)));
    }
    if let Some(t) = &input.theorem23 {
        let r = theorem23_bound(&t.gamma, &t.dpsi2, n)?;
        rows.push(("theorem23_bound".into(), sig6(r.value)));
        for (k, g) in r.gamma_bar.iter().enumerate() {
            rows.push((format!("gamma_bar_{}", k + 1), sig6(*g)));
        }
        if !r.suspicious.is_empty() {
            let list: Vec<String> = r.suspicious.iter().map(|k| (k + 1).to_string()).collect();
            rows.push(("gamma_bar_below_1".into(), list.join(" ")));
        }
    }
    Ok(rows)
}

pub fn cmd_bound(input: &RateInput, out: &Path, w: &mut dyn Write) -> Result<PathBuf> {
    let rows: Vec<Vec<String>> = bound_rows(input)?.into_iter().map(|(q, v)| vec![q, v]).collect();
    print_table(w, &["quantity", "value"], &rows)?;
    let path = out.join("bound.csv");
    write_csv(&path, &["quantity", "value"], &rows)?;
    Ok(path)
}

/// Runs a plan in memory and writes its summary and plot under
/// `<out>/simulate/<experiment_id>/`.
pub fn cmd_simulate(
    plan: &ExperimentPlan,
    seed: Option<u64>,
    out: &Path,
    w: &mut dyn Write,
) -> Result<Vec<GridSummary>> {
    let mut plan = plan.clone();
    if let Some(s) = seed {
        plan.master_seed = s;
    }
    let records = run_keys(&plan, &plan.keys())?;
    let summary = summarize(&plan, &records)?;
    let dir = out.join("simulate").join(&plan.experiment_id);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_summary_csv(&dir.join("summary.csv"), &summary)?;
    std::fs::write(dir.join("plot.svg"), rate_plot_svg(&summary))?;
    print_table(w, &SUMMARY_COLUMNS, &summary_rows(&summary))?;
    flag_low_confidence(&summary, w)?;
    Ok(summary)
}

fn flag_low_confidence(summary: &[GridSummary], w: &mut dyn Write) -> Result<()> {
    for g in summary.iter().filter(|g| g.low_confidence) {
        writeln!(w, "low confidence: N = {} (converged fraction {})", g.n, sig6(g.converged_fraction))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub resume: bool,
    /// Stop after appending this many records (simulated interruption).
    pub stop_after: Option<u64>,
    /// Records computed per parallel batch; 0 picks a default.
    pub chunk: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub store_dir: PathBuf,
    pub appended: u64,
    pub recorded: u64,
    pub complete: bool,
    pub summary: Option<Vec<GridSummary>>,
}

/// Runs the pending trials of a plan into its store; parallel batches feed a
/// single appender in canonical key order.
pub fn cmd_sweep(plan: &ExperimentPlan, out: &Path, opts: &SweepOptions, w: &mut dyn Write) -> Result<SweepOutcome> {
    let mut store = ResultStore::open(out, plan, opts.resume)?;
    let chunk = if opts.chunk == 0 { (4 * rayon::current_num_threads()).max(64) } else { opts.chunk };
    let mut pending = store.pending_keys();
    if let Some(k) = opts.stop_after {
        pending.truncate(usize::try_from(k).unwrap_or(usize::MAX));
    }
    let mut appended = 0u64;
    for batch in pending.chunks(chunk) {
        let records = run_keys(plan, batch)?;
        store.append(&records)?;
        appended += records.len() as u64;
    }
    let recorded = store.records().len() as u64;
    if !store.is_complete() {
        writeln!(
            w,
            "stopped with {recorded} of {} trials recorded in {}; rerun with --resume to continue",
            plan.keys().len(),
            store.dir().display()
        )?;
        return Ok(SweepOutcome {
            store_dir: store.dir().to_path_buf(),
            appended,
            recorded,
            complete: false,
            summary: None,
        });
    }
    let summary = summarize(plan, store.records())?;
    store.write_summary(&summary)?;
    std::fs::write(store.dir().join("plot.svg"), rate_plot_svg(&summary))?;
    print_table(w, &SUMMARY_COLUMNS, &summary_rows(&summary))?;
    flag_low_confidence(&summary, w)?;
    Ok(SweepOutcome {
        store_dir: store.dir().to_path_buf(),
        appended,
        recorded,
        complete: true,
        summary: Some(summary),
    })
}

fn statistic_kind(s: &Statistic) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
        .unwrap_or_default()
}

/// Log-log abscissa for the maximum-type statistics, log N otherwise.
pub fn default_abscissa(s: &Statistic) -> Abscissa {
    match s {
        Statistic::MaxProd { .. } | Statistic::ClaimII { .. } => Abscissa::LogLogN,
        _ => Abscissa::LogN,
    }
}

/// Fits the grid-point means of a store against the chosen abscissa.
pub fn cmd_fit(store_dir: &Path, statistic: &str, abscissa: Option<Abscissa>, w: &mut dyn Write) -> Result<FitResult> {
    let store = ResultStore::load(store_dir)?;
    let plan = store.plan();
    if statistic != plan.statistic.name() && statistic != statistic_kind(&plan.statistic) {
        anyhow::bail!(
            "store {} holds statistic {} ({}), not {statistic}",
            store_dir.display(),
            plan.statistic.name(),
            statistic_kind(&plan.statistic)
        );
    }
    if !store.is_complete() {
        anyhow::bail!("store {} is incomplete; finish it with sweep --resume", store_dir.display());
    }
    let summary = summarize(plan, store.records())?;
    let points: Vec<(u64, f64)> = summary.iter().map(|g| (g.n, g.mean)).collect();
    let abscissa = abscissa.unwrap_or_else(|| default_abscissa(&plan.statistic));
    let fit = exponent_fit(&points, abscissa)?;
    let rows = vec![
        vec!["statistic".to_string(), plan.statistic.name()],
        vec!["abscissa".into(), serde_json::to_value(abscissa)?.as_str().unwrap_or_default().to_string()],
        vec!["points".into(), fit.points.to_string()],
        vec!["slope".into(), sig6(fit.slope)],
        vec!["slope_std_err".into(), sig6(fit.slope_std_err)],
        vec!["intercept".into(), sig6(fit.intercept)],
        vec!["r2".into(), sig6(fit.r2)],
        vec!["poor_fit".into(), fit.poor_fit.to_string()],
    ];
    print_table(w, &["quantity", "value"], &rows)?;
    write_csv(&store_dir.join("fit.csv"), &["quantity", "value"], &rows)?;
    Ok(fit)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub c0: Vec<f64>,
    pub seed: u64,
    pub hoeffding_trials: u64,
    pub order_trials: u64,
    pub linf_trials: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { c0: DEFAULT_C0.to_vec(), seed: 1, hoeffding_trials: 4000, order_trials: 1000, linf_trials: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub suite: String,
    pub params: String,
    pub rate: f64,
    pub reference: f64,
    pub std_err: f64,
    pub pass: bool,
}

impl CheckRow {
    fn cells(&self) -> Vec<String> {
        vec![
            self.suite.clone(),
            self.params.clone(),
            sig6(self.rate),
            sig6(self.reference),
            sig6(self.std_err),
            if self.pass { "PASS" } else { "FAIL" }.to_string(),
        ]
    }
}

pub const VERIFY_COLUMNS: [&str; 6] = ["suite", "params", "rate", "reference", "std_err", "result"];

pub const HOEFFDING_N: usize = 64;
pub const HOEFFDING_VECTORS: u64 = 20;

/// Random test vector `j`: Gaussian entries with a `j`-dependent power decay.
pub fn hoeffding_vector(seed: u64, j: u64) -> Vec<f64> {
    let mut rng = SeededStream::new(seed, "verify-hoeffding-z", HOEFFDING_N as u64, j).component(0);
    let alpha = j as f64 / HOEFFDING_VECTORS as f64 * 1.5;
    (0..HOEFFDING_N).map(|i| Family::Gaussian.draw_unit(&mut rng) * ((i + 1) as f64).powf(-alpha)).collect()
}

pub fn hoeffding_rows(opts: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (ti, t) in [1.0f64, 2.0, 3.0].into_iter().enumerate() {
        for k in [0usize, (t * t).ceil() as usize] {
            let mut worst: Option<tensorconc::chaining::HoeffdingCheck> = None;
            let mut all = true;
            for j in 0..HOEFFDING_VECTORS {
                let z = hoeffding_vector(opts.seed, j);
                let stream = SeededStream::new(opts.seed, "verify-hoeffding", ti as u64 * 100 + k as u64, j);
                let c = hoeffding_rearrangement_check(&z, k, t, opts.hoeffding_trials, &stream)?;
                all &= c.passes();
                if worst.as_ref().is_none_or(|w| c.rate > w.rate) {
                    worst = Some(c);
                }
            }
            let c = worst.expect("at least one vector");
            rows.push(CheckRow {
                suite: "hoeffding".into(),
                params: format!("t={t} k={k} vectors={HOEFFDING_VECTORS} worst"),
                rate: c.rate,
                reference: c.reference,
                std_err: c.std_err,
                pass: all,
            });
        }
    }
    Ok(rows)
}

pub fn order_rows(opts: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let laws = [("gaussian", OrderLaw::Gaussian { sigma: 1.0 }), ("laplace", OrderLaw::Laplace { scale: 1.0 })];
    let mut rows = Vec::new();
    for &c0 in &opts.c0 {
        for w in [4.0f64, 8.0] {
            for n in [256u64, 1024] {
                for (name, law) in laws {
                    let stream = SeededStream::new(opts.seed, format!("verify-order-{name}-{c0}-{w}"), n, 0);
                    let c = order_stats_check(law, n, w, c0, opts.order_trials, &stream)?;
                    rows.push(CheckRow {
                        suite: "order_stats".into(),
                        params: format!("law={name} c0={c0} w={w} N={n} j*={}", c.j_star),
                        rate: c.rate,
                        reference: c.reference,
                        std_err: c.std_err,
                        pass: c.passes(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn linf_rows(opts: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let spectra = [
        ("identity(16)", SpectrumSpec::identity(16)),
        ("geometric(32,0.9)", SpectrumSpec::Geometric { d: 32, ratio: 0.9 }),
    ];
    let mut rows = Vec::new();
    for (name, s) in &spectra {
        for n in [256usize, 1024] {
            let stream = SeededStream::new(opts.seed, format!("verify-linf-{name}"), n as u64, 0);
            let c = linf_sup_check(s, n, opts.linf_trials, &stream)?;
            rows.push(CheckRow {
                suite: "linf_sup".into(),
                params: format!("spectrum={name} N={n} mean (max {})", sig6(c.max)),
                rate: c.mean,
                reference: LINF_THRESHOLD,
                std_err: c.std_err,
                pass: c.mean <= LINF_THRESHOLD,
            });
        }
    }
    Ok(rows)
}

/// Counts over all consecutive `s` with `1 < j_{s-1}` and `j_s < N + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DoublingCounts {
    pub pairs: u64,
    pub strict_violations: u64,
    pub weak_violations: u64,
    pub unrounded_violations: u64,
}

pub const JS_U: [f64; 3] = [1.0, 2.0, 4.0];
pub const JS_P: [usize; 3] = [2, 3, 4];
pub const JS_N: [u64; 3] = [100, 1000, 10000];

pub fn doubling_counts(c0: f64) -> Result<DoublingCounts> {
    let mut c = DoublingCounts::default();
    for u in JS_U {
        for p in JS_P {
            for n in JS_N {
                let probe = j_s_sequence(u, p, n, 0..=0, c0)?;
                let last = probe.s1.unwrap_or(1023);
                let seq = j_s_sequence(u, p, n, 0..=last, c0)?;
                for pair in seq.values.windows(2) {
                    let ((_, prev), (s, cur)) = (pair[0], pair[1]);
                    if prev > 1 && cur < n + 1 {
                        c.pairs += 1;
                        if cur + 1 < 2 * prev {
                            c.weak_violations += 1;
                        }
                        if j_s_unrounded(u, p, n, s, c0) <= 2.0 * j_s_unrounded(u, p, n, s - 1, c0) {
                            c.unrounded_violations += 1;
                        }
                    }
                }
                c.strict_violations += doubling_violations(&seq).len() as u64;
            }
        }
    }
    Ok(c)
}

pub fn doubling_rows(opts: &VerifyOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for &c0 in &opts.c0 {
        let c = doubling_counts(c0)?;
        let rate = |v: u64| if c.pairs == 0 { 0.0 } else { v as f64 / c.pairs as f64 };
        let row = |form: &str, v: u64| CheckRow {
            suite: format!("j_s_doubling_{form}"),
            params: format!("c0={c0} pairs={} violations={v}", c.pairs),
            rate: rate(v),
            reference: 0.0,
            std_err: 0.0,
            pass: v == 0,
        };
        rows.push(row("strict", c.strict_violations));
        rows.push(row("unrounded", c.unrounded_violations));
        rows.push(row("weak", c.weak_violations));
    }
    Ok(rows)
}

/// Runs all lemma suites; returns the rows and whether every row passed.
pub fn cmd_verify(opts: &VerifyOptions, out: &Path, w: &mut dyn Write) -> Result<(Vec<CheckRow>, bool)> {
    if opts.c0.is_empty() || opts.c0.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(crate::config::ConfigError("--c0 needs positive finite values".into()).into());
    }
    let mut rows = hoeffding_rows(opts)?;
    rows.extend(order_rows(opts)?);
    rows.extend(linf_rows(opts)?);
    rows.extend(doubling_rows(opts)?);
    let cells: Vec<Vec<String>> = rows.iter().map(CheckRow::cells).collect();
    print_table(w, &VERIFY_COLUMNS, &cells)?;
    write_csv(&out.join("verify.csv"), &VERIFY_COLUMNS, &cells)?;
    let all = rows.iter().all(|r| r.pass);
    let failed = rows.iter().filter(|r| !r.pass).count();
    writeln!(w, "{} of {} checks passed", rows.len() - failed, rows.len())?;
    Ok((rows, all))
}
