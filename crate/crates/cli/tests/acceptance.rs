// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use edms_cli::artifacts::FORECASTS;
use edms_cli::config::DataConfig;
use edms_cli::suite::{bundled_suite, write_suite};
use edms_cli::{cmd_report, cmd_run, ExperimentConfig, Method};
use edms_core::ensemble::{compute_weights, Member, PerformanceReport, RoundConfig};
use edms_core::eval::{delta_percent, series_mape, MapeDenominator};
use edms_core::models::{
    fit_holt, holt_one_step_errors, holt_rss, loss_and_gradient, mean_squared_error, ForecasterKind,
    LstmWeights, WindowSet,
};
use edms_core::pipeline::{run_edms, run_eims, RetrainSchedule, RunConfig};
use edms_core::synth::{generate, SynthKind, SynthSpec};
use edms_core::timeseries::{align_panel, render_wide_csv, CsvLayout, Frequency, Panel, Series};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn report(maes: &[f64]) -> PerformanceReport {
    PerformanceReport {
        maes: maes
            .iter()
            .enumerate()
            .map(|(i, &m)| (format!("m{i}"), m))
            .collect(),
        horizon_used: 1,
    }
}

fn weights_of(maes: &[f64]) -> Vec<f64> {
    let w = compute_weights(&report(maes)).unwrap();
    (0..maes.len()).map(|i| w.weights[&format!("m{i}")]).collect()
}

fn weight_formula() -> Outcome {
    let w = weights_of(&[1.0, 2.0, 3.0]);
    for (got, want) in w.iter().zip([5.0 / 12.0, 4.0 / 12.0, 3.0 / 12.0]) {
        ensure((got - want).abs() <= 1e-12, || format!("weights {w:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let k = rng.gen_range(2..8);
        let maes: Vec<f64> = (0..k).map(|_| rng.gen_range(1e-3..100.0)).collect();
        let w = weights_of(&maes);
        let scale = 10f64.powf(rng.gen_range(-6.0..6.0));
        let scaled = weights_of(&maes.iter().map(|m| m * scale).collect::<Vec<_>>());
        for (a, b) in w.iter().zip(&scaled) {
            ensure((a - b).abs() <= 1e-12, || format!("case {case}: not scale invariant"))?;
        }
        ensure((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12, || format!("case {case}: sum"))?;
        for i in 0..k {
            for j in 0..k {
                if maes[i] < maes[j] {
                    ensure(w[i] > w[j], || format!("case {case}: not monotone"))?;
                }
            }
        }
    }
    Ok("{1,2,3} -> {5,4,3}/12; 1000 random vectors scale invariant and monotone".into())
}

fn config_for(dir: &Path, dataset: &str, csv: &str, frequency: Frequency, seed: u64) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(
        dataset,
        seed,
        DataConfig {
            path: dir.join(csv),
            layout: CsvLayout::Wide,
            frequency,
        },
    );
    config.out = Some(dir.join("runs").join(dataset));
    config
}

fn column(path: &Path, field: usize) -> Result<Vec<String>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| e.to_string())?;
            Ok(format!("{},{},{}", &r[0], &r[1], &r[field]))
        })
        .collect()
}

fn degeneracy() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let spec = SynthSpec::new(SynthKind::TrendBreak, 5, 60, Frequency::Annual, 21);
    let csv = render_wide_csv(&generate(&spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    fs::write(dir.path().join("p.csv"), csv).map_err(|e| e.to_string())?;

    let mut eims = config_for(dir.path(), "eims", "p.csv", Frequency::Annual, 5);
    eims.run.horizon = Some(18);
    let mut edms = config_for(dir.path(), "edms", "p.csv", Frequency::Annual, 5);
    edms.run.horizon = Some(18);
    edms.run.schedule = Some(Vec::new());
    let a = cmd_run(&eims, Method::Eims).map_err(|e| e.to_string())?;
    let b = cmd_run(&edms, Method::Edms).map_err(|e| e.to_string())?;
    let ea = column(&a.out_dir.join(FORECASTS), 2)?;
    let eb = column(&b.out_dir.join(FORECASTS), 3)?;
    ensure(ea.len() == 5 * 18, || format!("{} forecast rows", ea.len()))?;
    ensure(ea.join("\n").as_bytes() == eb.join("\n").as_bytes(), || {
        "EIMS and schedule-free EDMS forecasts differ".into()
    })?;
    Ok("5 series x 18 steps, all five members, identical forecast bytes".into())
}

fn exactness() -> Outcome {
    let spec = SynthSpec::new(SynthKind::Affine, 5, 60, Frequency::Annual, 3);
    let panel = Panel::new(generate(&spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (history, holdout) = panel.holdout(20).map_err(|e| e.to_string())?;
    let config = RunConfig {
        horizon: 20,
        schedule: RetrainSchedule::default_for(Frequency::Annual),
        members: Member::from_kinds(&[ForecasterKind::Linear, ForecasterKind::Holt]),
        round: RoundConfig::default(),
        global_lstm: false,
    };
    let mut worst: f64 = 0.0;
    for (name, run) in [
        ("EIMS", run_eims(&history, &config)),
        ("EDMS", run_edms(&history, &config)),
    ] {
        let run = run.map_err(|e| e.to_string())?;
        ensure(run.failures.is_empty(), || format!("{name}: failures {:?}", run.failures))?;
        for s in &run.series {
            let actual = holdout.get(&s.id).unwrap().values();
            let mape = series_mape(&s.forecast, actual, MapeDenominator::Forecast).map_err(|e| e.to_string())?;
            worst = worst.max(mape);
            ensure(mape <= 1e-8, || format!("{name} {}: MAPE {mape:e}", s.id))?;
            for stage in &s.stages {
                let w: Vec<f64> = stage.round.weights.weights.values().copied().collect();
                ensure((w[0] - w[1]).abs() <= 1e-12, || {
                    format!("{name} {} stage {}: weights {w:?}", s.id, stage.stage)
                })?;
            }
        }
    }
    Ok(format!("worst MAPE {worst:.1e}, all stage weights equal"))
}

fn lstm_gradient() -> Outcome {
    const EPS: f64 = 1e-5;
    // Below this magnitude components are compared on the absolute scale.
    const FLOOR: f64 = 1e-6;
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(7919) + 1);
        let mut weights = LstmWeights::init(3, false, seed);
        let mut flat = weights.to_flat();
        for v in flat.iter_mut().filter(|v| **v == 0.0) {
            *v = rng.gen_range(-0.3..0.3);
        }
        weights.set_flat(&flat);
        let mut data = WindowSet::default();
        for _ in 0..4 {
            data.inputs.push((0..5).map(|_| rng.gen_range(-2.0..2.0)).collect());
            data.targets.push(rng.gen_range(-1.0..1.0));
        }
        let (_, grads) = loss_and_gradient(&weights, &data);
        let analytic = grads.to_flat();
        let mut probe = weights.clone();
        let mut err: f64 = 0.0;
        for k in 0..flat.len() {
            let mut p = flat.clone();
            p[k] += EPS;
            probe.set_flat(&p);
            let up = mean_squared_error(&probe, &data);
            p[k] = flat[k] - EPS;
            probe.set_flat(&p);
            let down = mean_squared_error(&probe, &data);
            let numeric = (up - down) / (2.0 * EPS);
            let a = analytic[k];
            err = err.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR));
        }
        ensure(err < 1e-4, || format!("seed {seed}: max relative error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("10 seeds, hidden 3, window 5, worst relative error {worst:.1e}"))
}

fn alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..200 {
        let n = rng.gen_range(1..=20);
        let lengths: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=100)).collect();
        let raw: Vec<Series> = lengths
            .iter()
            .enumerate()
            .map(|(i, &len)| {
                Series::new(format!("s{i}"), Frequency::Annual, 0, (0..len).map(|t| t as f64 + 1.0).collect())
                    .unwrap()
            })
            .collect();
        let out = align_panel(raw).map_err(|e| e.to_string())?;
        let max = *lengths.iter().max().unwrap();
        // exhaustive: every cutoff 1..=max, ties to the longer cutoff
        let mut best = (0, 0);
        for l in 1..=max {
            let points = l * lengths.iter().filter(|&&x| x >= l).count();
            if points >= best.0 {
                best = (points, l);
            }
        }
        let kept = lengths.iter().filter(|&&x| x >= best.1).count();
        ensure(out.cutoff == best.1 && out.panel.len() == kept, || {
            format!("case {case} {lengths:?}: got ({}, {}), brute force ({}, {kept})", out.cutoff, out.panel.len(), best.1)
        })?;
    }
    Ok("200 random length multisets match exhaustive search".into())
}

fn delta_arithmetic() -> Outcome {
    let mut lines = Vec::new();
    for (ims, dms, printed) in [(6.51, 3.21, 50.73), (0.89, 0.32, 64.21)] {
        let d = delta_percent(ims, dms).map_err(|e| e.to_string())?;
        ensure((d - printed).abs() <= 0.6, || format!("({ims}, {dms}) -> {d:.2} vs {printed}"))?;
        lines.push(format!("({ims}, {dms}) -> {d:.2} vs {printed}"));
    }
    Ok(lines.join("; "))
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if let Ok(bytes) = fs::read(&p) {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), bytes);
            }
        }
    }
    out
}

fn run_suite(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let configs = write_suite(dir, &bundled_suite(2024), 2024).map_err(|e| e.to_string())?;
    for c in &configs {
        let config = ExperimentConfig::load(c).map_err(|e| e.to_string())?;
        cmd_run(&config, Method::Both).map_err(|e| format!("{}: {e}", c.display()))?;
    }
    Ok(tree(dir))
}

fn determinism() -> Outcome {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let ta = run_suite(a.path())?;
    let tb = run_suite(b.path())?;
    ensure(ta.keys().eq(tb.keys()), || "artifact sets differ".into())?;
    for (k, v) in &ta {
        ensure(v == &tb[k], || format!("{} differs", k.display()))?;
    }
    let series: usize = bundled_suite(2024).iter().map(|e| e.spec.n_series).sum();
    Ok(format!("{} files, {series} series, identical across two runs", ta.len()))
}

fn holt_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut probes = 0;
    for case in 0..50 {
        let kind = [SynthKind::TrendBreak, SynthKind::Ar1, SynthKind::Geometric][case % 3];
        let len = rng.gen_range(12..80);
        let spec = SynthSpec::new(kind, 1, len, Frequency::Annual, rng.gen());
        let series = generate(&spec).map_err(|e| e.to_string())?.remove(0);
        let fit = fit_holt(&series).map_err(|e| e.to_string())?;
        let best = holt_rss(series.values(), fit.alpha, fit.gamma);
        for _ in 0..100 {
            let (a, g) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let rss = holt_rss(series.values(), a, g);
            ensure(best <= rss, || format!("case {case}: fitted RSS {best} > RSS {rss} at ({a}, {g})"))?;
            probes += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let series = generate(&SynthSpec::new(SynthKind::Affine, 1, 40, Frequency::Annual, seed))
            .map_err(|e| e.to_string())?
            .remove(0);
        let fit = fit_holt(&series).map_err(|e| e.to_string())?;
        for e in holt_one_step_errors(series.values(), fit.alpha, fit.gamma) {
            worst = worst.max(e.abs());
        }
    }
    ensure(worst <= 1e-9, || format!("affine one-step error {worst:e}"))?;
    Ok(format!("{probes} random probes never beat the fit; affine one-step error {worst:.1e}"))
}

fn behavioral() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for seed in 0..10u64 {
        let name = format!("trend-break-{seed}");
        let spec = SynthSpec::new(SynthKind::TrendBreak, 2, 180, Frequency::Monthly, 100 + seed);
        let csv = render_wide_csv(&generate(&spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        fs::write(dir.path().join(format!("{name}.csv")), csv).map_err(|e| e.to_string())?;
        let mut config = config_for(dir.path(), &name, &format!("{name}.csv"), Frequency::Monthly, seed);
        config.run.horizon = Some(72);
        config.run.schedule = Some(vec![12, 60]);
        runs.push(cmd_run(&config, Method::Both).map_err(|e| e.to_string())?.out_dir);
    }
    let merged = cmd_report(&runs, &dir.path().join("report")).map_err(|e| e.to_string())?;
    let mut deltas: Vec<f64> = merged.reports.iter().filter_map(|r| r.delta_percent).collect();
    ensure(deltas.len() == 10, || format!("{} of 10 deltas defined", deltas.len()))?;
    deltas.sort_by(f64::total_cmp);
    let median = 0.5 * (deltas[4] + deltas[5]);
    ensure(median.is_finite(), || "median delta is not finite".into())?;
    let positive = deltas.iter().filter(|d| **d > 0.0).count();
    Ok(format!(
        "median delta {median:.2}% over 10 seeds ({positive}/10 positive; direction reported, not gated)"
    ))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "weight formula", budget: Duration::from_secs(1), check: weight_formula },
        Criterion { id: 2, name: "EDMS with empty schedule equals EIMS", budget: Duration::from_secs(60), check: degeneracy },
        Criterion { id: 3, name: "exactness on affine series", budget: Duration::from_secs(10), check: exactness },
        Criterion { id: 4, name: "LSTM gradient check", budget: Duration::from_secs(30), check: lstm_gradient },
        Criterion { id: 5, name: "panel alignment oracle", budget: Duration::from_secs(5), check: alignment },
        Criterion { id: 6, name: "delta arithmetic", budget: Duration::from_secs(1), check: delta_arithmetic },
        Criterion { id: 7, name: "determinism of the bundled suite", budget: Duration::from_secs(300), check: determinism },
        Criterion { id: 8, name: "Holt oracle", budget: Duration::from_secs(30), check: holt_oracle },
        Criterion { id: 9, name: "trend-break median delta (reported)", budget: Duration::from_secs(600), check: behavioral },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.check)();
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= c.budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.1?}, budget {:?}", c.budget))
            }
        });
        match result {
            Ok(msg) => println!("[PASS] {}. {} ({elapsed:.2?}): {msg}", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {}. {} ({elapsed:.2?}): {msg}", c.id, c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
