use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dayahead_core::dataset::{
    build_features, load_csv, prepare, split_tail, synth_generate, DailyMatrix, FeatureSets,
    ScenarioConfig, SplitRanges,
};
use dayahead_core::evaluation::{evaluate, EvalReport};
use dayahead_core::hpo::{
    configure, objective, optimize, write_history, Domain, HyperParams, OptimizeConfig,
    SearchSpace, ValidationSetup,
};
use dayahead_core::models::Checkpoint;
use dayahead_core::numerics::{Matrix, RngState};
use dayahead_core::training::{rolling_forecast_full, write_forecasts};
use dayahead_core::HOURS;

use crate::config::RunConfig;
use crate::manifest::write_manifest;
use crate::stats::{panel_stats, write_stats};
use crate::table::read_forecasts;

/// Bad user-supplied input that is not a core validation error.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

pub struct Ctx {
    pub cfg: RunConfig,
    pub out_dir: PathBuf,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let p = self.out(name);
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        Ok((p, BufWriter::new(f)))
    }

    fn manifest(&self, cmd: &str, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<()> {
        let m = write_manifest(&self.out_dir, cmd, &self.cfg, inputs, outputs)?;
        log::info!("wrote {}", m.display());
        Ok(())
    }
}

pub fn synth(ctx: &Ctx, scenario: ScenarioConfig) -> Result<()> {
    let mut rng = RngState::new(scenario.seed);
    let panel = synth_generate(&mut rng, &scenario)?;
    let (path, mut w) = ctx.create("synthetic.csv")?;
    panel.write_csv(&mut w)?;
    drop(w);
    println!("{} hourly rows -> {}", panel.len(), path.display());
    ctx.manifest("synth", &[], &[path])
}

pub fn prepare_cmd(ctx: &Ctx, data: &Path) -> Result<()> {
    let panel = load_csv(data, &ctx.cfg.data.schema)?;
    let (dm, fs) = prepare(&panel, ctx.cfg.data.fundamentals, &ctx.cfg.data.features)?;
    let cache = ctx.out("prepared.json");
    std::fs::write(&cache, serde_json::to_string(&dm)?)?;
    let (stats_path, w) = ctx.create("stats.csv")?;
    write_stats(&panel_stats(&panel), w)?;
    println!(
        "{} days, {} forecastable samples ({} .. {})",
        dm.dates.len(),
        fs.len(),
        fs.dates.first().map(|d| d.to_string()).unwrap_or_default(),
        fs.dates.last().map(|d| d.to_string()).unwrap_or_default(),
    );
    ctx.manifest("prepare", &[data.to_path_buf()], &[cache, stats_path])
}

fn load_cache(path: &Path) -> Result<DailyMatrix> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return Err(InputError(format!(
            "{} is a CSV; pass the prepared.json written by `prepare`",
            path.display()
        ))
        .into());
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading prepared data {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing prepared data {}", path.display()))
}

fn features(ctx: &Ctx, data: &Path) -> Result<(DailyMatrix, FeatureSets, SplitRanges)> {
    let dm = load_cache(data)?;
    let fs = build_features(&dm, &ctx.cfg.data.features)?;
    let s = &ctx.cfg.split;
    let ranges = split_tail(fs.len(), s.validation_days, s.test_days)?;
    Ok((dm, fs, ranges))
}

/// Search space for the configured architecture with pinned dimensions and
/// window lengths capped to the history before `first_forecast`.
pub fn tuning_space(cfg: &RunConfig, first_forecast: usize) -> Result<SearchSpace> {
    let mut space = SearchSpace::full().for_arch(cfg.arch);
    let max_seq = match space.dims[space.index_of("seq_len").expect("seq_len")].domain {
        Domain::Int { hi, .. } => hi as usize,
        _ => 1,
    };
    let avail = first_forecast.saturating_sub(max_seq - 1) as i64;
    for name in ["init_days", "update_days"] {
        if let Domain::Int { lo, hi } = space.dims[space.index_of(name).expect(name)].domain {
            if avail < lo {
                return Err(dayahead_core::Error::InsufficientHistory(format!(
                    "{name} needs at least {lo} days before the validation range, {avail} available"
                ))
                .into());
            }
            space = space.with_domain(name, Domain::Int { lo, hi: hi.min(avail) })?;
        }
    }
    for (name, &v) in &cfg.hpo.fix {
        if space.index_of(name).is_none() {
            bail!(InputError(format!("unknown hyperparameter `{name}` in hpo.fix")));
        }
        let d = match space.dims[space.index_of(name).unwrap()].domain {
            Domain::Int { .. } => Domain::Int {
                lo: v as i64,
                hi: v as i64,
            },
            _ => Domain::Categorical(vec![v]),
        };
        space = space.with_domain(name, d)?;
    }
    Ok(space)
}

pub fn tune(ctx: &Ctx, data: &Path, workers: Option<usize>) -> Result<()> {
    let cfg = &ctx.cfg;
    let (_, fs, ranges) = features(ctx, data)?;
    let space = tuning_space(cfg, ranges.validation.start)?;
    let setup = ValidationSetup {
        arch: cfg.arch,
        validation: ranges.validation.clone(),
        test_start: ranges.test.start,
        base: cfg.train.clone(),
    };
    let opt = OptimizeConfig {
        budget: cfg.hpo.budget,
        sampler: cfg.hpo.sampler,
        tpe: cfg.hpo.tpe,
        parallel: cfg.hpo.parallel,
        seed: cfg.seed,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let result = pool.install(|| {
        optimize(&space, &opt, |p, seed| {
            objective(&HyperParams::from_point(&space, p), &fs, &setup, seed)
        })
    })?;
    let (hist_path, w) = ctx.create("trials.csv")?;
    write_history(&space, &result.history, w)?;
    let best = HyperParams::from_point(&space, &result.best.point);
    let best_path = ctx.out("best_params.toml");
    std::fs::write(&best_path, best.to_toml()?)?;
    let failed = result.history.iter().filter(|t| t.objective.is_none()).count();
    println!(
        "{} trials ({failed} failed); best trial {} with validation RMSE {:.4}",
        result.history.len(),
        result.best.id,
        result.best.objective.unwrap_or(f64::NAN)
    );
    ctx.manifest("tune", &[data.to_path_buf()], &[hist_path, best_path])
}

pub fn backtest(ctx: &Ctx, data: &Path, params: Option<&Path>) -> Result<()> {
    let cfg = &ctx.cfg;
    let h = match params {
        Some(p) => HyperParams::from_toml(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => cfg.params.clone(),
    };
    let (_, fs, ranges) = features(ctx, data)?;
    let (spec, train, plan) = configure(&h, cfg.arch, &fs, &cfg.train, ranges.test.clone());
    let mut rng = RngState::new(cfg.seed);
    let result = rolling_forecast_full(&fs, &spec, &train, &plan, &mut rng)?;
    let (fc_path, w) = ctx.create("forecasts.csv")?;
    write_forecasts(&result.records, w)?;
    let ck_path = ctx.out("model.json");
    Checkpoint::new(spec, result.final_state, result.final_standardization).save(&ck_path)?;
    println!(
        "{} test days with {} -> {}",
        result.records.len(),
        cfg.arch.label(),
        fc_path.display()
    );
    let mut inputs = vec![data.to_path_buf()];
    inputs.extend(params.map(Path::to_path_buf));
    ctx.manifest("backtest", &inputs, &[fc_path, ck_path])
}

/// `name=path` or a bare path named after its file stem.
pub fn parse_named(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((n, p)) if !n.is_empty() => (n.to_string(), PathBuf::from(p)),
        _ => {
            let p = PathBuf::from(arg);
            let n = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (n, p)
        }
    }
}

pub fn evaluate_cmd(ctx: &Ctx, data: &Path, forecasts: &[String]) -> Result<EvalReport> {
    if forecasts.is_empty() {
        bail!(InputError("evaluate needs at least one forecast file".into()));
    }
    let dm = load_cache(data)?;
    let mut models: Vec<(String, Matrix)> = Vec::new();
    let mut inputs = vec![data.to_path_buf()];
    let mut reference = None;
    for arg in forecasts {
        let (name, path) = parse_named(arg);
        let t = read_forecasts(&path).map_err(|e| InputError(format!("{}: {e:#}", path.display())))?;
        match &reference {
            None => reference = Some((t.dates.clone(), t.actual.clone())),
            Some((dates, actual)) => {
                if *dates != t.dates || *actual != t.actual {
                    bail!(InputError(format!(
                        "{} covers different days or actuals than the first forecast file",
                        path.display()
                    )));
                }
            }
        }
        if name == "naive" || models.iter().any(|(n, _)| *n == name) {
            bail!(InputError(format!("duplicate model name `{name}`")));
        }
        models.push((name, t.forecast));
        inputs.push(path);
    }
    let (dates, actual) = reference.expect("non-empty");
    let mut naive = Matrix::zeros(dates.len(), HOURS);
    for (r, d) in dates.iter().enumerate() {
        let i = dm
            .dates
            .iter()
            .position(|x| x == d)
            .ok_or_else(|| InputError(format!("{d} is not in the prepared data")))?;
        if i < 7 {
            return Err(dayahead_core::Error::InsufficientHistory(format!(
                "weekly naive forecast for {d} needs 7 earlier days"
            ))
            .into());
        }
        naive.row_mut(r).copy_from_slice(dm.price.row(i - 7));
    }
    models.insert(0, ("naive".to_string(), naive.clone()));
    let report = evaluate(&actual, &models, &naive, &dates)?;
    if report.small_sample {
        log::warn!("only {} evaluation days; GW p-values are approximate", report.days);
    }
    let (m_path, w) = ctx.create("metrics.csv")?;
    report.write_metrics(w)?;
    let (h_path, w) = ctx.create("metrics_hourly.csv")?;
    report.write_per_hour(w)?;
    let (g_path, w) = ctx.create("gw_pvalues.csv")?;
    report.write_gw_matrix(w)?;
    for m in &report.models {
        println!("{:<12} rmse {:>9.4}  mae {:>9.4}  rmae {:.4}", m.name, m.rmse, m.mae, m.rmae);
    }
    ctx.manifest("evaluate", &inputs, &[m_path, h_path, g_path])?;
    Ok(report)
}

pub fn decompose_cmd(ctx: &Ctx, forecasts: &Path) -> Result<()> {
    let t = read_forecasts(forecasts).map_err(|e| InputError(format!("{e:#}")))?;
    let comps = [("lem", &t.lem), ("rnn", &t.rnn), ("kf", &t.kf)];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let fmt = |x: f64| format!("{x:?}");
    let mut header = vec!["date".to_string(), "actual".into(), "combined".into()];
    header.extend(comps.iter().map(|(n, _)| n.to_string()));

    let (d_path, w) = ctx.create("components_daily.csv")?;
    let mut w = csv::Writer::from_writer(w);
    w.write_record(&header)?;
    for (r, d) in t.dates.iter().enumerate() {
        let mut rec = vec![d.to_string(), fmt(mean(t.actual.row(r))), fmt(mean(t.forecast.row(r)))];
        rec.extend(
            comps
                .iter()
                .map(|(_, c)| c.as_ref().map(|m| fmt(mean(m.row(r)))).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    drop(w);

    let (h_path, w) = ctx.create("components_hourly.csv")?;
    let mut w = csv::Writer::from_writer(w);
    header[0] = "hour".into();
    w.write_record(&header)?;
    for s in 0..HOURS {
        let col_mean = |m: &Matrix| mean(&m.column(s));
        let mut rec = vec![s.to_string(), fmt(col_mean(&t.actual)), fmt(col_mean(&t.forecast))];
        rec.extend(
            comps
                .iter()
                .map(|(_, c)| c.as_ref().map(|m| fmt(col_mean(m))).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    drop(w);
    println!("{} days decomposed", t.dates.len());
    ctx.manifest("decompose", &[forecasts.to_path_buf()], &[d_path, h_path])
}
