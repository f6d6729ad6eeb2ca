//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::{Datelike, Duration as Days, Weekday};
use contract_lab::analysis::{
    summarize, ComparisonReport, ContractResult, FitOutcome, ModelSummary, VariableSummary,
};
use contract_lab::marketdata::{
    last_friday, parse_contract_csv, parse_spot_csv, write_contract_csv, write_spot_csv, AssetId,
    ContractMonth,
};
use contract_lab::measures::{
    basis_pct, build_panel, parkinson_volatility, DependentKind,
};
use contract_lab::regress::{ols_fit, ModelSpec, Predictor, RegressionFit, TermEstimate};
use contract_lab::report::{render_comparison, Format, RenderOptions};
use contract_lab::stats::{describe, student_t_cdf};
use contract_lab::synth::{generate_market, FixtureRng, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use common::{normal_equation_ols, panel_columns, random_panel, rel_close};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(elapsed: Duration, budget_secs: u64) -> Result<(), String> {
    ensure(
        elapsed <= Duration::from_secs(budget_secs),
        format!("took {elapsed:.2?}, budget {budget_secs} s"),
    )
}

fn ols_oracle() -> Check {
    let start = Instant::now();
    let model = ModelSpec::full();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let panel = random_panel(1_000 + seed, 60);
        let fit = ols_fit(&panel, model).map_err(|e| format!("seed {seed}: {e}"))?;
        let (y, cols) = panel_columns(&panel);
        let oracle = normal_equation_ols(&y, &cols);
        let pairs = [
            ("coefficient", fit.coefficients(), &oracle.coefficients),
            ("std error", fit.std_errors(), &oracle.std_errors),
            ("t-stat", fit.t_stats(), &oracle.t_stats),
        ];
        for (what, got, want) in pairs {
            for (i, (g, w)) in got.iter().zip(want.iter()).enumerate() {
                worst = worst.max((g - w).abs() / w.abs());
                ensure(
                    rel_close(*g, *w, 1e-8),
                    format!("seed {seed} {what}[{i}]: {g} vs oracle {w}"),
                )?;
            }
        }
    }
    within_budget(start.elapsed(), 5)?;
    Ok(format!("100 panels, worst relative gap {worst:.1e}"))
}

fn zero_noise_recovery() -> Check {
    let start = Instant::now();
    let config = SynthConfig {
        seed: 2018,
        n_contracts: 47,
        noise_sigma: 0.0,
        dgp_beta: [5.0, 0.3, 0.02, -0.01],
        ..SynthConfig::default()
    };
    let market = generate_market(&config).map_err(|e| e.to_string())?;
    let csv = write_contract_csv(&market.contracts);
    let spot_csv = write_spot_csv(std::slice::from_ref(&market.spot));
    let contracts = parse_contract_csv(csv.as_bytes()).map_err(|e| e.to_string())?;
    parse_spot_csv(spot_csv.as_bytes()).map_err(|e| e.to_string())?;
    ensure(contracts.len() == 47, format!("{} contracts", contracts.len()))?;
    let mut worst = 0.0f64;
    for series in &contracts {
        let panel = build_panel(
            series,
            None,
            DependentKind::Volatility,
            &config.scaling,
            config.window_days,
        )
        .map_err(|e| e.to_string())?;
        let fit = ols_fit(&panel, ModelSpec::full()).map_err(|e| e.to_string())?;
        for (got, want) in fit.coefficients().iter().zip(config.dgp_beta) {
            worst = worst.max((got - want).abs());
        }
    }
    ensure(worst <= 1e-6, format!("max abs error {worst:e}"))?;
    within_budget(start.elapsed(), 10)?;
    Ok(format!("47 contracts, max abs error {worst:.1e}"))
}

fn null_calibration() -> Check {
    let start = Instant::now();
    let config = SynthConfig {
        seed: 31,
        n_contracts: 200,
        noise_sigma: 1.0,
        dgp_beta: [10.0, 0.0, 0.0, 0.0],
        ..SynthConfig::default()
    };
    let market = generate_market(&config).map_err(|e| e.to_string())?;
    let model = ModelSpec::full();
    let results: Vec<ContractResult> = market
        .truth
        .panels
        .iter()
        .map(|panel| ContractResult {
            asset: panel.asset.clone(),
            contract_month: panel.contract_month,
            n_rows: panel.len(),
            fits: BTreeMap::from([(
                model,
                match ols_fit(panel, model) {
                    Ok(f) => FitOutcome::Fit(f),
                    Err(e) => FitOutcome::Failed((&e).into()),
                },
            )]),
        })
        .collect();
    let summary = summarize(&results, model, 0.10).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for v in &summary.variables {
        parts.push(format!("{} {:.1}%", v.predictor, v.pct_significant));
        ensure(
            (5.0..=15.0).contains(&v.pct_significant),
            format!("{} significant in {:.1}% of contracts", v.predictor, v.pct_significant),
        )?;
    }
    within_budget(start.elapsed(), 30)?;
    Ok(format!("200 contracts: {}", parts.join(", ")))
}

fn parkinson() -> Check {
    let ln2 = std::f64::consts::LN_2;
    let base = parkinson_volatility(2.0, 1.0).map_err(|e| e.to_string())?;
    ensure((base - ln2 / 4.0).abs() <= 1e-12, format!("H/L=2 gives {base}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let low: f64 = rng.random_range(0.01..1_000.0);
        let high = low * rng.random_range(1.0..3.0);
        let k: f64 = 10f64.powf(rng.random_range(-3.0..3.0));
        let a = parkinson_volatility(high, low).map_err(|e| e.to_string())?;
        let b = parkinson_volatility(k * high, k * low).map_err(|e| e.to_string())?;
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-12, format!("scale invariance gap {worst:e}"))?;
    Ok(format!("ln2/4 exact to 1e-12, scale gap {worst:.1e}"))
}

fn student_t() -> Check {
    for df in [1.0, 2.5, 10.0, 1e3, 1e6] {
        let c = student_t_cdf(0.0, df).map_err(|e| e.to_string())?;
        ensure(c == 0.5, format!("cdf(0, {df}) = {c}"))?;
    }
    let c = student_t_cdf(1.0, 1.0).map_err(|e| e.to_string())?;
    ensure((c - 0.75).abs() <= 1e-10, format!("cdf(1, 1) = {c}"))?;
    let normal = Normal::standard();
    let mut worst = 0.0f64;
    for i in -6..=6 {
        let t = f64::from(i) * 0.5;
        let c = student_t_cdf(t, 1e6).map_err(|e| format!("t={t}: {e}"))?;
        worst = worst.max((c - normal.cdf(t)).abs());
    }
    ensure(worst <= 1e-4, format!("df=1e6 vs normal gap {worst:e}"))?;
    Ok(format!("df=1e6 vs normal max gap {worst:.1e}"))
}

fn basis_convergence() -> Check {
    let config = SynthConfig {
        seed: 6,
        ..SynthConfig::default()
    };
    let market = generate_market(&config).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for series in &market.contracts {
        let last = series.bars().last().ok_or("empty contract")?;
        let spot = market
            .spot
            .price_on(last.date)
            .ok_or(format!("no spot on {}", last.date))?;
        let basis = basis_pct(spot, last.close).map_err(|e| e.to_string())?;
        let panel = build_panel(
            series,
            Some(&market.spot),
            DependentKind::Basis,
            &config.scaling,
            config.window_days,
        )
        .map_err(|e| e.to_string())?;
        let row = panel.rows.last().ok_or("empty panel")?;
        ensure(row.m == 0, format!("last panel row has m = {}", row.m))?;
        worst = worst.max(basis.abs()).max((row.dv / config.scaling.dv_factor).abs());
    }
    ensure(worst <= 1e-12, format!("final-bar basis {worst:e}"))?;
    Ok(format!(
        "{} contracts, max |basis| {worst:.1e}",
        market.contracts.len()
    ))
}

fn descriptive_stats() -> Check {
    let mut rng = FixtureRng::new(7);
    let xs: Vec<f64> = (0..100_000).map(|_| rng.standard_normal()).collect();
    let s = describe(&xs).map_err(|e| e.to_string())?;
    let skew = s.skewness.ok_or("skewness undefined")?;
    let kurt = s.kurtosis.ok_or("kurtosis undefined")?;
    ensure(s.mean.abs() <= 0.02, format!("mean {}", s.mean))?;
    ensure((s.std_dev - 1.0).abs() <= 0.02, format!("std {}", s.std_dev))?;
    ensure(skew.abs() <= 0.05, format!("skewness {skew}"))?;
    ensure((kurt - 3.0).abs() <= 0.15, format!("kurtosis {kurt}"))?;
    Ok(format!(
        "mean {:.4}, std {:.4}, skew {skew:.4}, kurt {kurt:.4}",
        s.mean, s.std_dev
    ))
}

fn calendar() -> Check {
    let mut count = 0;
    for year in 1990..=2100 {
        for month in 1..=12 {
            let d = last_friday(year, month).map_err(|e| e.to_string())?;
            ensure(d.weekday() == Weekday::Fri, format!("{d} is not a Friday"))?;
            ensure(
                d.month() == month && (d + Days::days(7)).month() != month,
                format!("{d} is not the last Friday of {year}-{month:02}"),
            )?;
            count += 1;
        }
    }
    for (y, m, want) in [(2018, 3, "2018-03-30"), (2021, 9, "2021-09-24"), (2021, 12, "2021-12-31")] {
        let got = last_friday(y, m).map_err(|e| e.to_string())?.to_string();
        ensure(got == want, format!("{y}-{m:02}: {got}, expected {want}"))?;
        ensure(
            ContractMonth::new(y, m).map_err(|e| e.to_string())?.expiry().to_string() == want,
            "contract expiry disagrees with last_friday",
        )?;
    }
    Ok(format!("{count} months checked"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_contract-lab"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn strip_timestamp(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v.as_object_mut()
        .ok_or("manifest is not an object")?
        .remove("generated_at")
        .ok_or("manifest lacks generated_at")?;
    Ok(v)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let p = |name: &str| d.join(name).to_string_lossy().into_owned();
    run_cli(&["synth", "--out", &p("market"), "--seed", "99", "--n-contracts", "12"])?;
    let contracts = p("market/contracts.csv");
    let spot = p("market/spot.csv");
    for format in ["markdown", "csv", "json"] {
        for dependent in ["volatility", "basis"] {
            let mut outputs = Vec::new();
            for run in 0..2 {
                let manifest = p(&format!("{format}-{dependent}-{run}.json"));
                let stdout = run_cli(&[
                    "compare",
                    "--contracts",
                    &contracts,
                    "--spot",
                    &spot,
                    "--dependent",
                    dependent,
                    "--format",
                    format,
                    "--manifest",
                    &manifest,
                ])?;
                ensure(!stdout.is_empty(), "empty compare output")?;
                outputs.push((stdout, strip_timestamp(Path::new(&manifest))?));
            }
            ensure(
                outputs[0].0 == outputs[1].0,
                format!("{format}/{dependent} output differs between runs"),
            )?;
            ensure(
                outputs[0].1 == outputs[1].1,
                format!("{format}/{dependent} manifest differs beyond its timestamp"),
            )?;
        }
    }
    Ok("markdown, csv and json identical across runs".into())
}

fn term(name: &str, estimate: f64, p_value: f64) -> TermEstimate {
    TermEstimate {
        term: name.into(),
        estimate,
        std_error: 1.0,
        t_stat: estimate,
        p_value,
    }
}

fn format_oracle() -> Check {
    // (−) share counts only significant contracts: of four m coefficients,
    // two are significant and one of those is negative; the negative but
    // insignificant one is ignored.
    let model: ModelSpec = "mv".parse().map_err(|e: contract_lab::regress::RegressError| e.to_string())?;
    let fits = [(0.5, 0.01), (-0.4, 0.03), (-0.9, 0.6), (0.2, 0.4)];
    let results: Vec<ContractResult> = fits
        .iter()
        .enumerate()
        .map(|(i, &(m_coef, m_p))| ContractResult {
            asset: AssetId::Bitcoin,
            contract_month: ContractMonth::new(2018, 3 * (i as u32 + 1)).unwrap(),
            n_rows: 42,
            fits: BTreeMap::from([(
                model,
                FitOutcome::Fit(RegressionFit {
                    model,
                    n: 42,
                    terms: vec![
                        term("intercept", 1.0, 0.5),
                        term("m", m_coef, m_p),
                        term("v", 0.01, 0.9),
                    ],
                    r2: 0.3,
                    adj_r2: 0.28,
                    residual_df: 39,
                    residuals: vec![],
                }),
            )]),
        })
        .collect();
    let mv = summarize(&results, model, 0.10).map_err(|e| e.to_string())?;
    let m = mv.variable(Predictor::Maturity).ok_or("m missing")?;
    ensure(m.pct_significant == 50.0, format!("pct(m) {}", m.pct_significant))?;
    ensure(
        m.pct_negative_given_significant == Some(50.0),
        format!("pct_neg(m) {:?}", m.pct_negative_given_significant),
    )?;
    let v = mv.variable(Predictor::Volume).ok_or("v missing")?;
    ensure(
        v.pct_negative_given_significant.is_none(),
        "pct_neg(v) should be undefined",
    )?;

    let var = |p, pct, neg| VariableSummary {
        predictor: p,
        significant: 0,
        significant_negative: 0,
        pct_significant: pct,
        pct_negative_given_significant: neg,
    };
    let mvo = ModelSummary {
        model: ModelSpec::full(),
        variables: vec![
            var(Predictor::Maturity, 48.9, Some(4.3)),
            var(Predictor::Volume, 72.3, Some(0.0)),
            var(Predictor::OpenInterest, 19.1, Some(100.0)),
        ],
        mean_adj_r2: 0.28,
        contracts_used: 47,
        contracts_failed: 0,
    };
    let report = ComparisonReport {
        asset: AssetId::Bitcoin,
        dependent: DependentKind::Volatility,
        alpha: 0.10,
        contracts: 4,
        summaries: vec![mv, mvo],
        best: ModelSpec::full(),
    };
    let md = render_comparison(&report, &RenderOptions::default()).map_err(|e| e.to_string())?;
    let row = |label: &str| {
        md.lines()
            .find(|l| l.starts_with(&format!("| {label} |")))
            .map(str::to_string)
            .ok_or(format!("no {label} row in:\n{md}"))
    };
    let mv_row = row("mv")?;
    ensure(
        mv_row == "| mv | 50.0 | 50.0 | 0.0 | - | | | 0.280 | 4 | 0 |",
        format!("mv row: {mv_row}"),
    )?;
    let mvo_row = row("mvo")?;
    ensure(
        mvo_row == "| mvo | 48.9 | 4.3 | **72.3** | 0.0 | 19.1 | 100.0 | 0.280 | 47 | 0 |",
        format!("mvo row: {mvo_row}"),
    )?;
    let csv = render_comparison(&report, &RenderOptions::with_format(Format::Csv))
        .map_err(|e| e.to_string())?;
    ensure(!csv.contains("**"), "csv carries bold markers")?;
    ensure(csv.contains(",72.3,"), "csv lacks raw 72.3")?;
    Ok("bold > 50 only, (-) among significant, adj R² at 3 decimals".into())
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("OLS oracle equivalence", ols_oracle),
        ("zero-noise recovery", zero_noise_recovery),
        ("null calibration", null_calibration),
        ("Parkinson estimator", parkinson),
        ("Student-t accuracy", student_t),
        ("basis convergence", basis_convergence),
        ("descriptive statistics", descriptive_stats),
        ("calendar", calendar),
        ("determinism", determinism),
        ("format oracle", format_oracle),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
