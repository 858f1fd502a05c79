//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion NN PASS|FAIL` line (visible with `--nocapture`).

mod common;

use std::time::{Duration, Instant};

use chrono::NaiveDate;
use dayahead_core::dataset::{
    prepare, read_csv, synth_generate, CsvSchema, FeatureConfig, FeatureSets,
    FundamentalsConfig, HourlyPanel, Scenario, ScenarioConfig, Series,
};
use dayahead_core::evaluation::{
    evaluate, gw_test, mae, mae_per_hour, rmae, rmse, rmse_per_hour, stack_records,
    weekly_naive_forecast,
};
use dayahead_core::hpo::{
    best_so_far, configure, objective, optimize, write_history, Dimension, Domain, HyperParams,
    OptimizeConfig, SamplerKind, SearchSpace, ValidationSetup,
};
use dayahead_core::models::{
    forward, init_weights, kf_forward, rnn_forward, Activation, ArchType, BatchInputs, ModelSpec,
    RecurrentBranch,
};
use dayahead_core::numerics::{finite_difference, uniform_init, Matrix, RngState};
use dayahead_core::training::{
    loss, loss_gradients, rolling_forecast, write_forecasts, ForecastRecord, RollingPlan,
    TrainConfig,
};
use dayahead_core::HOURS;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:02} {tag} {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn series_rmse(records: &[ForecastRecord]) -> f64 {
    let (_, a, f) = stack_records(records).unwrap();
    rmse(&a, &f).unwrap()
}

/// Desk-scale settings shared by the ordinal checks.
fn desk_run(fs: &FeatureSets, arch: ArchType, seed: u64) -> f64 {
    let mut spec = ModelSpec::new(arch, fs.rnn_dim(), fs.linear_width);
    spec.hidden = 16;
    spec.seq_len = 1;
    let cfg = TrainConfig {
        epochs_init: 50,
        epochs_all: 10,
        lr_init: 1e-3,
        lr_all: 1e-3,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let n = fs.len();
    let plan = RollingPlan::new(365, 180, n - 30..n);
    let recs = rolling_forecast(fs, &spec, &cfg, &plan, &mut RngState::new(seed)).unwrap();
    series_rmse(&recs)
}

/// 440 calendar days: 7 dropped for lags, ≥ 400 training days, 30 test days.
const DESK_DAYS: usize = 440;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn c01_gradient_correctness() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for &arch in &ArchType::ALL {
        for seed in 0..20u64 {
            let mut rng = RngState::new(1000 + seed);
            let h = 1 + (seed as usize % 4);
            let l = 1 + (seed as usize % 3);
            let d = 1 + (seed as usize * 7 % 10);
            let p = 2 + (seed as usize % 3);
            let spec = ModelSpec {
                hidden: h,
                seq_len: l,
                ..ModelSpec::new(arch, d, p)
            };
            let st = init_weights(&spec, &mut rng, None).unwrap();
            let b = 3;
            let inputs = BatchInputs {
                linear: arch
                    .has_lem()
                    .then(|| uniform_init(&mut rng, b, HOURS * p, 1.0)),
                sequence: arch
                    .has_recurrent()
                    .then(|| (0..l).map(|_| uniform_init(&mut rng, b, d, 1.0)).collect()),
            };
            let targets = uniform_init(&mut rng, b, HOURS, 1.0);
            let l1 = 0.01;
            let (_, grad) = loss_gradients(&st, &spec, &inputs, &targets, l1).unwrap();
            let flat = Matrix::row_vector(&st.flatten());
            let fd = finite_difference(&flat, 1e-6, |x| {
                let s = st.with_flat(x.data());
                let pred = forward(&s, &spec, &inputs).unwrap().combined;
                loss(&pred, &targets, &s, l1)
            });
            for (a, f) in grad.flatten().iter().zip(fd.data()) {
                let rel = (a - f).abs() / a.abs().max(f.abs()).max(1e-6);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    let el = t0.elapsed();
    verdict(
        1,
        "gradient correctness",
        worst < 1e-4 && within(el, 60),
        format!("max relative error {worst:.2e} over {checked} partials, {el:.1?}"),
    );
}

#[test]
fn c02_kf_rnn_equivalence() {
    let mut rng = RngState::new(2);
    let mut identical = 0;
    for k in 0..100usize {
        let h = 1 + k % 8;
        let d = 1 + k % 11;
        let l = 1 + k % 7;
        let branch = RecurrentBranch::random(h, d, &mut rng);
        let seq = uniform_init(&mut rng, l, d, 2.0);
        let h0: Vec<f64> = (0..h).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (ya, ha) = rnn_forward(&branch, &seq, &h0, Activation::Identity, None).unwrap();
        let (yb, hb) = kf_forward(&branch, &seq, &h0, None).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&ya) == bits(&yb) && bits(&ha) == bits(&hb) {
            identical += 1;
        }
    }
    verdict(
        2,
        "KF/RNN equivalence",
        identical == 100,
        format!("{identical}/100 draws bitwise identical"),
    );
}

#[test]
fn c03_linear_exactness() {
    let t0 = Instant::now();
    let fs = common::features(Scenario::Linear, 3, 200);
    let mut spec = ModelSpec::new(ArchType::Lem, fs.rnn_dim(), fs.linear_width);
    spec.use_ols = true;
    spec.ols_alpha = 1.0;
    let cfg = TrainConfig {
        epochs_init: 0,
        epochs_all: 0,
        ..TrainConfig::default()
    };
    let n = fs.len();
    let plan = RollingPlan::new(90, 60, n - 30..n);
    let recs = rolling_forecast(&fs, &spec, &cfg, &plan, &mut RngState::new(3)).unwrap();
    let e = series_rmse(&recs);
    let el = t0.elapsed();
    verdict(
        3,
        "linear exactness oracle",
        e < 1e-4 && recs.len() == 30 && within(el, 30),
        format!("rolling test RMSE {e:.3e} over {} days, {el:.1?}", recs.len()),
    );
}

#[test]
fn c04_decomposition_identity() {
    let fs = common::features(Scenario::Mixed, 4, 160);
    let mut spec = ModelSpec::new(ArchType::LemKfRnn, fs.rnn_dim(), fs.linear_width);
    spec.hidden = 8;
    spec.seq_len = 2;
    let cfg = TrainConfig {
        epochs_init: 5,
        epochs_all: 2,
        ..TrainConfig::default()
    };
    let n = fs.len();
    let plan = RollingPlan::new(60, 30, n - 20..n);
    let recs = rolling_forecast(&fs, &spec, &cfg, &plan, &mut RngState::new(4)).unwrap();
    let mut worst: f64 = 0.0;
    for r in &recs {
        let c = &r.components;
        let (lem, rnn, kf) = (c.lem.as_ref().unwrap(), c.rnn.as_ref().unwrap(), c.kf.as_ref().unwrap());
        for s in 0..HOURS {
            let mu = r.standardization.target_mean()[s];
            let rebuilt = lem[s] + rnn[s] + kf[s] - 2.0 * mu;
            worst = worst.max((rebuilt - r.forecast[s]).abs());
        }
    }
    verdict(
        4,
        "decomposition identity",
        worst <= 1e-10,
        format!("max |combined - (sum of components - 2 mu)| = {worst:.2e} over {} days", recs.len()),
    );
}

fn perturb_after(panel: &HourlyPanel, cutoff: NaiveDate, rng: &mut RngState) -> HourlyPanel {
    let mut out = panel.clone();
    let rows: Vec<usize> = panel
        .timestamps()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.date() > cutoff)
        .map(|(i, _)| i)
        .collect();
    for s in Series::ALL {
        let col = out.series_mut(s);
        for &i in &rows {
            col[i] = col[i] * rng.uniform(0.5, 1.5) + rng.uniform(-10.0, 10.0);
        }
    }
    out
}

#[test]
fn c05_causality_sentinel() {
    let panel = common::panel(Scenario::Realistic, 5, 150);
    let fs = common::features_of(&panel);
    let mut spec = ModelSpec::new(ArchType::LemKfRnn, fs.rnn_dim(), fs.linear_width);
    spec.hidden = 6;
    spec.seq_len = 3;
    let cfg = TrainConfig {
        epochs_init: 3,
        epochs_all: 2,
        ..TrainConfig::default()
    };
    let mut pick = RngState::new(55);
    let mut same = 0;
    let mut taus = Vec::new();
    for _ in 0..5 {
        let tau = pick.uniform(70.0, (fs.len() - 1) as f64) as usize;
        taus.push(tau);
        let plan = RollingPlan::new(60, 30, tau..tau + 1);
        let base = rolling_forecast(&fs, &spec, &cfg, &plan, &mut RngState::new(tau as u64)).unwrap();
        let moved = perturb_after(&panel, fs.dates[tau], &mut pick);
        let fs2 = common::features_of(&moved);
        assert_eq!(fs2.dates[tau], fs.dates[tau]);
        if tau + 1 < fs.len() {
            assert_ne!(fs2.targets.row(tau + 1), fs.targets.row(tau + 1), "perturbation applied");
        }
        let again = rolling_forecast(&fs2, &spec, &cfg, &plan, &mut RngState::new(tau as u64)).unwrap();
        let bits = |r: &ForecastRecord| r.forecast.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&base[0]) == bits(&again[0]) {
            same += 1;
        }
    }
    verdict(
        5,
        "causality sentinel",
        same == 5,
        format!("{same}/5 forecasts byte-identical after perturbing later data (tau = {taus:?})"),
    );
}

#[test]
fn c06_metric_oracles() {
    let mut rng = RngState::new(6);
    let (t, s) = (50, HOURS);
    let a = Matrix::from_fn(t, s, |_, _| rng.uniform(-50.0, 150.0));
    let f = Matrix::from_fn(t, s, |_, _| rng.uniform(-50.0, 150.0));
    let nv = Matrix::from_fn(t, s, |_, _| rng.uniform(-50.0, 150.0));

    let mut se = 0.0;
    let mut ae = 0.0;
    let mut ae_naive = 0.0;
    let mut se_h = vec![0.0; s];
    let mut ae_h = vec![0.0; s];
    for i in 0..t {
        for j in 0..s {
            let e = a[(i, j)] - f[(i, j)];
            se += e * e;
            ae += e.abs();
            se_h[j] += e * e;
            ae_h[j] += e.abs();
            ae_naive += (a[(i, j)] - nv[(i, j)]).abs();
        }
    }
    let n = (t * s) as f64;
    let want_rmse = (se / n).sqrt();
    let want_mae = ae / n;
    let want_rmae = want_mae / (ae_naive / n);
    let mut worst: f64 = 0.0;
    worst = worst.max((rmse(&a, &f).unwrap() - want_rmse).abs());
    worst = worst.max((mae(&a, &f).unwrap() - want_mae).abs());
    worst = worst.max((rmae(mae(&a, &f).unwrap(), mae(&a, &nv).unwrap()).unwrap() - want_rmae).abs());
    for (j, (r, m)) in rmse_per_hour(&a, &f)
        .unwrap()
        .into_iter()
        .zip(mae_per_hour(&a, &f).unwrap())
        .enumerate()
    {
        worst = worst.max((r - (se_h[j] / t as f64).sqrt()).abs());
        worst = worst.max((m - ae_h[j] / t as f64).abs());
    }
    let report = evaluate(&a, &[("naive".into(), nv.clone())], &nv, &[]).unwrap();
    let self_ratio = report.models[0].rmae;
    verdict(
        6,
        "metric oracles",
        worst <= 1e-12 && self_ratio == 1.0,
        format!("max deviation from double-loop oracle {worst:.2e}; naive-vs-itself rMAE = {self_ratio}"),
    );
}

#[test]
fn c07_gw_calibration_and_power() {
    let t0 = Instant::now();
    let mut rng = RngState::new(7);
    let noise = |rng: &mut RngState, t: usize| Matrix::from_fn(t, HOURS, |_, _| rng.standard_normal());
    let mut rejected = 0;
    for _ in 0..500 {
        let a = noise(&mut rng, 200);
        let b = noise(&mut rng, 200);
        if gw_test(&a, &b).unwrap().p_value < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / 500.0;
    let mut detected = 0;
    for _ in 0..100 {
        let a = noise(&mut rng, 200);
        let b = a.add(&noise(&mut rng, 200)).unwrap();
        if gw_test(&a, &b).unwrap().p_value < 0.05 {
            detected += 1;
        }
    }
    let el = t0.elapsed();
    verdict(
        7,
        "GW calibration and power",
        (0.02..=0.09).contains(&rate) && detected >= 95 && within(el, 120),
        format!("null rejection rate {:.1}%, power {detected}/100, {el:.1?}", 100.0 * rate),
    );
}

#[test]
fn c08_nonlinearity_ordinal() {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..20u64 {
        let fs = common::features(Scenario::Nonlinear, seed, DESK_DAYS);
        let rnn = desk_run(&fs, ArchType::Rnn, seed);
        let lem = desk_run(&fs, ArchType::Lem, seed);
        if rnn < lem {
            wins += 1;
        }
        pairs.push(format!("{rnn:.2}/{lem:.2}"));
    }
    let mut per_arch = Vec::new();
    for &arch in &ArchType::ALL {
        let v: Vec<f64> = (0..5u64)
            .map(|seed| desk_run(&common::features(Scenario::Linear, seed, DESK_DAYS), arch, seed))
            .collect();
        per_arch.push((arch, median(v)));
    }
    let best = per_arch.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    let lem = per_arch.iter().find(|(a, _)| *a == ArchType::Lem).unwrap().1;
    let linear_ok = lem <= 1.05 * best;
    let medians: Vec<String> = per_arch
        .iter()
        .map(|(a, m)| format!("{}={m:.3}", a.as_str()))
        .collect();
    verdict(
        8,
        "nonlinearity ordinal check",
        wins >= 16 && linear_ok,
        format!(
            "RNN < LEM on {wins}/20 nonlinear seeds (rnn/lem: {}); linear medians {}",
            pairs.join(" "),
            medians.join(" ")
        ),
    );
}

#[test]
fn c09_hybrid_non_degradation() {
    let t0 = Instant::now();
    let archs = [ArchType::Lem, ArchType::Rnn, ArchType::Kf, ArchType::LemKfRnn];
    let mut runs = vec![Vec::new(); archs.len()];
    for seed in 0..10u64 {
        let fs = common::features(Scenario::Mixed, seed, DESK_DAYS);
        for (k, &arch) in archs.iter().enumerate() {
            runs[k].push(desk_run(&fs, arch, seed));
        }
    }
    let med: Vec<f64> = runs.into_iter().map(median).collect();
    let best_single = med[..3].iter().copied().fold(f64::INFINITY, f64::min);
    let el = t0.elapsed();
    verdict(
        9,
        "hybrid non-degradation",
        med[3] <= 1.02 * best_single && within(el, 600),
        format!(
            "median test RMSE lem={:.3} rnn={:.3} kf={:.3} lem-kf-rnn={:.3} (ratio {:.3}), {el:.1?}",
            med[0],
            med[1],
            med[2],
            med[3],
            med[3] / best_single
        ),
    );
}

#[test]
fn c10_hpo_sanity() {
    let space = SearchSpace::new(vec![Dimension {
        name: "x".into(),
        domain: Domain::Uniform { lo: -10.0, hi: 10.0 },
    }])
    .unwrap();
    let f = |p: &Vec<f64>, _: u64| Ok((p[0] - 3.0).powi(2));
    let mut tpe_wins = 0;
    let mut monotone = true;
    for seed in 0..50u64 {
        let run = |sampler| {
            let cfg = OptimizeConfig {
                budget: 100,
                sampler,
                parallel: 1,
                seed,
                ..OptimizeConfig::default()
            };
            optimize(&space, &cfg, f).unwrap()
        };
        let tpe = run(SamplerKind::Tpe);
        let rnd = run(SamplerKind::Random);
        if tpe.best.objective <= rnd.best.objective {
            tpe_wins += 1;
        }
        for r in [&tpe, &rnd] {
            monotone &= best_so_far(&r.history).windows(2).all(|w| w[1] <= w[0]);
        }
    }
    verdict(
        10,
        "HPO sanity",
        tpe_wins >= 35 && monotone,
        format!("TPE best <= random best in {tpe_wins}/50 paired runs; best-so-far non-increasing: {monotone}"),
    );
}

/// synth → CSV → prepare → tune → backtest → evaluate, all artifacts as bytes.
fn pipeline(seed: u64) -> Vec<(String, Vec<u8>)> {
    let sc = ScenarioConfig::new(Scenario::Realistic, seed, 200);
    let panel = synth_generate(&mut RngState::new(seed), &sc).unwrap();
    let mut csv = Vec::new();
    panel.write_csv(&mut csv).unwrap();
    let panel = read_csv(&csv[..], &CsvSchema::default()).unwrap();
    let (dm, fs) = prepare(&panel, FundamentalsConfig::default(), &FeatureConfig::default()).unwrap();

    let n = fs.len();
    let (validation, test) = (n - 40..n - 30, n - 30..n);
    let base = TrainConfig::default();
    let arch = ArchType::LemKfRnn;
    let fixed = [
        ("hidden", 4.0),
        ("seq_len", 2.0),
        ("init_days", 60.0),
        ("update_days", 30.0),
        ("epochs_init", 5.0),
        ("epochs_all", 2.0),
    ];
    let mut space = SearchSpace::full().for_arch(arch);
    for (k, v) in fixed {
        space = space.with_domain(k, Domain::Categorical(vec![v])).unwrap();
    }
    let setup = ValidationSetup {
        arch,
        validation,
        test_start: test.start,
        base: base.clone(),
    };
    let opt = OptimizeConfig {
        budget: 5,
        seed,
        ..OptimizeConfig::default()
    };
    let result = optimize(&space, &opt, |p, s| {
        objective(&HyperParams::from_point(&space, p), &fs, &setup, s)
    })
    .unwrap();
    let mut trials = Vec::new();
    write_history(&space, &result.history, &mut trials).unwrap();
    let best = HyperParams::from_point(&space, &result.best.point);

    let (spec, cfg, plan) = configure(&best, arch, &fs, &base, test);
    let recs = rolling_forecast(&fs, &spec, &cfg, &plan, &mut RngState::new(seed)).unwrap();
    let mut forecasts = Vec::new();
    write_forecasts(&recs, &mut forecasts).unwrap();

    let (dates, actual, forecast) = stack_records(&recs).unwrap();
    let days: Vec<usize> = recs.iter().map(|r| fs.target_days[r.sample]).collect();
    let naive = weekly_naive_forecast(&dm.price, &days).unwrap();
    let report = evaluate(
        &actual,
        &[("naive".into(), naive.clone()), (arch.label().into(), forecast)],
        &naive,
        &dates,
    )
    .unwrap();
    let mut metrics = Vec::new();
    report.write_metrics(&mut metrics).unwrap();
    let mut gw = Vec::new();
    report.write_gw_matrix(&mut gw).unwrap();
    vec![
        ("synthetic.csv".into(), csv),
        ("trials.csv".into(), trials),
        ("best_params.toml".into(), best.to_toml().unwrap().into_bytes()),
        ("forecasts.csv".into(), forecasts),
        ("metrics.csv".into(), metrics),
        ("gw_pvalues.csv".into(), gw),
    ]
}

#[test]
fn c11_end_to_end_determinism() {
    let a = pipeline(11);
    let b = pipeline(11);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let bytes: usize = a.iter().map(|x| x.1.len()).sum();
    verdict(
        11,
        "end-to-end determinism",
        differing.is_empty() && a.iter().all(|x| !x.1.is_empty()),
        format!("{} artifacts ({bytes} bytes) compared; differing: {differing:?}", a.len()),
    );
}
