mod common;

use chrono::{Duration, NaiveDate};
use dayahead_core::dataset::{
    fit_standardizer, normalize_dst, prepare, read_csv, CsvSchema, FeatureConfig,
    FundamentalsConfig, Scenario, Series, StandardizeConfig,
};
use dayahead_core::evaluation::{gw_test, mae, rmse, rmse_per_hour};
use dayahead_core::hpo::{sample_random, sample_tpe, SearchSpace, TpeConfig};
use dayahead_core::models::{forward, init_weights, ArchType, BatchInputs, ModelSpec};
use dayahead_core::numerics::{ols_fit, uniform_init, Matrix, RngState};
use dayahead_core::training::clip_global_norm;
use dayahead_core::HOURS;
use proptest::prelude::*;

fn matrix(rng: &mut RngState, r: usize, c: usize) -> Matrix {
    uniform_init(rng, r, c, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ols_residuals_are_orthogonal(seed in any::<u64>(), p in 1usize..6, extra in 1usize..20, q in 1usize..4) {
        let mut rng = RngState::new(seed);
        let n = p + extra;
        let x = matrix(&mut rng, n, p);
        let y = matrix(&mut rng, n, q);
        let w = ols_fit(&x, &y, 0.0).unwrap();
        let resid = y.sub(&x.matmul(&w).unwrap()).unwrap();
        let xt_r = x.t_matmul(&resid).unwrap();
        let xt_y = x.t_matmul(&y).unwrap();
        prop_assert!(xt_r.max_abs() <= 1e-8 * xt_y.frobenius().max(1e-300));
    }

    #[test]
    fn matmul_is_associative(seed in any::<u64>(), a in 1usize..6, b in 1usize..6, c in 1usize..6, d in 1usize..6) {
        let mut rng = RngState::new(seed);
        let (x, y, z) = (matrix(&mut rng, a, b), matrix(&mut rng, b, c), matrix(&mut rng, c, d));
        let left = x.matmul(&y).unwrap().matmul(&z).unwrap();
        let right = x.matmul(&y.matmul(&z).unwrap()).unwrap();
        prop_assert!(left.sub(&right).unwrap().frobenius() <= 1e-10 * left.frobenius().max(1e-12));
    }

    #[test]
    fn rng_streams_reproduce_and_differ(seed in any::<u64>()) {
        let draw = |s: u64| { let mut r = RngState::new(s); (0..16).map(|_| r.uniform(0.0, 1.0)).collect::<Vec<_>>() };
        prop_assert_eq!(draw(seed), draw(seed));
        prop_assert_ne!(draw(seed), draw(seed.wrapping_add(1)));
    }

    #[test]
    fn clipped_norm_is_bounded(seed in any::<u64>(), c in 0.01f64..10.0, scale in 0.0f64..100.0) {
        let mut rng = RngState::new(seed);
        let mut g = vec![Some(uniform_init(&mut rng, 3, 4, scale)), None, Some(uniform_init(&mut rng, 1, 5, scale))];
        clip_global_norm(&mut g, c);
        let norm = g.iter().flatten().map(|m| m.norm_sq()).sum::<f64>().sqrt();
        prop_assert!(norm <= c + 1e-12);
    }

    #[test]
    fn branches_add_up_exactly(seed in any::<u64>(), arch_ix in 0usize..6, h in 1usize..5, l in 1usize..4) {
        let arch = ArchType::ALL[arch_ix];
        let mut rng = RngState::new(seed);
        let spec = ModelSpec { hidden: h, seq_len: l, ..ModelSpec::new(arch, 5, 3) };
        let st = init_weights(&spec, &mut rng, None).unwrap();
        let inputs = BatchInputs {
            linear: Some(matrix(&mut rng, 4, HOURS * 3)),
            sequence: Some((0..l).map(|_| matrix(&mut rng, 4, 5)).collect()),
        };
        let out = forward(&st, &spec, &inputs).unwrap();
        let again = forward(&st, &spec, &inputs).unwrap();
        prop_assert_eq!(&out.combined, &again.combined);
        let mut sum = Matrix::zeros(4, HOURS);
        for b in [&out.lem, &out.rnn, &out.kf].into_iter().flatten() {
            sum = sum.add(b).unwrap();
        }
        prop_assert_eq!(sum, out.combined);
    }

    #[test]
    fn relu_rnn_is_locally_linear(seed in any::<u64>()) {
        let mut rng = RngState::new(seed);
        let spec = ModelSpec { hidden: 4, seq_len: 2, ..ModelSpec::new(ArchType::Rnn, 6, 2) };
        let st = init_weights(&spec, &mut rng, None).unwrap();
        let base: Vec<Matrix> = (0..2).map(|_| matrix(&mut rng, 1, 6)).collect();
        let dir: Vec<Matrix> = (0..2).map(|_| matrix(&mut rng, 1, 6)).collect();
        let eval = |t: f64| {
            let seq = base.iter().zip(&dir).map(|(b, d)| b.add(&d.scale(t)).unwrap()).collect();
            forward(&st, &spec, &BatchInputs { linear: None, sequence: Some(seq) }).unwrap().combined
        };
        let (y0, y1, y2) = (eval(0.0), eval(1e-7), eval(2e-7));
        let d1 = y1.sub(&y0).unwrap();
        let d2 = y2.sub(&y0).unwrap();
        prop_assert!(d2.sub(&d1.scale(2.0)).unwrap().max_abs() <= 1e-12 + 1e-6 * d2.max_abs());
    }

    #[test]
    fn metric_scale_equivariance(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = RngState::new(seed);
        let a = Matrix::from_fn(40, HOURS, |_, _| rng.standard_normal());
        let b = Matrix::from_fn(40, HOURS, |_, _| rng.standard_normal());
        let zero = Matrix::zeros(40, HOURS);
        let (ra, ma) = (rmse(&zero, &a).unwrap(), mae(&zero, &a).unwrap());
        let (ca, cb) = (a.scale(c), b.scale(c));
        prop_assert!((rmse(&zero, &ca).unwrap() - c * ra).abs() <= 1e-12 * c * ra);
        prop_assert!((mae(&zero, &ca).unwrap() - c * ma).abs() <= 1e-12 * c * ma);
        let p = gw_test(&a, &b).unwrap().p_value;
        let pc = gw_test(&ca, &cb).unwrap().p_value;
        prop_assert!((p - pc).abs() <= 1e-9);
    }

    #[test]
    fn per_hour_rmse_aggregates(seed in any::<u64>(), t in 1usize..30) {
        let mut rng = RngState::new(seed);
        let a = Matrix::from_fn(t, HOURS, |_, _| rng.uniform(-5.0, 5.0));
        let f = Matrix::from_fn(t, HOURS, |_, _| rng.uniform(-5.0, 5.0));
        let overall = rmse(&a, &f).unwrap().powi(2);
        let by_hour = rmse_per_hour(&a, &f).unwrap().iter().map(|r| r * r).sum::<f64>() / HOURS as f64;
        prop_assert!((overall - by_hour).abs() <= 1e-12 * overall.max(1.0));
    }

    #[test]
    fn tpe_proposals_stay_in_bounds(seed in any::<u64>(), n in 0usize..30) {
        let space = SearchSpace::full();
        let mut rng = RngState::new(seed);
        let history: Vec<_> = (0..n).map(|_| {
            let p = sample_random(&space, &mut rng);
            let y = rng.uniform(0.0, 10.0);
            (p, y)
        }).collect();
        let p = sample_tpe(&space, &history, &mut rng, &TpeConfig::default());
        prop_assert!(space.contains(&p));
    }
}

#[test]
fn random_samples_stay_in_bounds() {
    let space = SearchSpace::full();
    let mut rng = RngState::new(17);
    for _ in 0..100_000 {
        assert!(space.contains(&sample_random(&space, &mut rng)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn standardization_ignores_rows_outside_window(seed in any::<u64>(), start in 0usize..40, len in 2usize..40) {
        let fs = common::features(Scenario::Realistic, 3, 100);
        let window = start..start + len;
        let base = fit_standardizer(&fs, window.clone(), StandardizeConfig::default()).unwrap();
        let mut moved = fs.clone();
        let mut rng = RngState::new(seed);
        for i in (0..fs.len()).filter(|i| !window.contains(i)) {
            for m in [&mut moved.rnn, &mut moved.linear, &mut moved.targets] {
                for v in m.row_mut(i) {
                    *v += rng.uniform(-1e3, 1e3);
                }
            }
        }
        let after = fit_standardizer(&moved, window, StandardizeConfig::default()).unwrap();
        prop_assert_eq!(base, after);
    }

    #[test]
    fn regressors_do_not_see_the_target_day(seed in any::<u64>(), pick in 0usize..80) {
        let mut panel = common::panel(Scenario::Realistic, seed % 5, 100);
        let fs = common::features_of(&panel);
        prop_assert_eq!(fs.len(), 100 - FeatureConfig::default().max_lag());
        let i = pick % fs.len();
        let day = fs.dates[i];
        let rows: Vec<usize> = panel.timestamps().iter().enumerate()
            .filter(|(_, t)| t.date() >= day).map(|(k, _)| k).collect();
        // prices and commodity settlements of the target day onwards are unknown at bid time
        for s in [Series::Price, Series::Coal, Series::Gas, Series::Oil, Series::Eua] {
            let col = panel.series_mut(s);
            for &k in &rows {
                col[k] += 1234.5;
            }
        }
        let moved = common::features_of(&panel);
        prop_assert_eq!(fs.rnn.row(i), moved.rnn.row(i));
        prop_assert_eq!(fs.linear.row(i), moved.linear.row(i));
        prop_assert_ne!(fs.targets.row(i), moved.targets.row(i));
    }

    #[test]
    fn dst_normalization_is_idempotent(seed in any::<u64>(), year in 2019i32..2026) {
        let mut rng = RngState::new(seed);
        let mut csv = String::from("timestamp");
        for s in Series::ALL {
            csv += ",";
            csv += s.name();
        }
        csv += "\n";
        for month in [3u32, 10] {
            let start = NaiveDate::from_ymd_opt(year, month, 24).unwrap().and_hms_opt(0, 0, 0).unwrap();
            for h in 0..24 * 10 {
                let utc = start + Duration::hours(h);
                let summer = utc >= last_sunday_1utc(year, 3) && utc < last_sunday_1utc(year, 10);
                let off = if summer { 2 } else { 1 };
                let local = utc + Duration::hours(off);
                csv += &format!("{}+0{off}:00", local.format("%Y-%m-%dT%H:%M:%S"));
                for _ in Series::ALL {
                    csv += &format!(",{}", rng.uniform(0.0, 100.0));
                }
                csv += "\n";
            }
            let panel = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
            let again = normalize_dst(&panel).unwrap();
            prop_assert_eq!(&again, &panel);
            prop_assert_eq!(normalize_dst(&again).unwrap(), again);
            csv.truncate(csv.find('\n').unwrap() + 1);
        }
    }
}

fn last_sunday_1utc(year: i32, month: u32) -> chrono::NaiveDateTime {
    use chrono::Datelike;
    let mut d = NaiveDate::from_ymd_opt(year, month + 1, 1).unwrap() - Duration::days(1);
    while d.weekday() != chrono::Weekday::Sun {
        d -= Duration::days(1);
    }
    d.and_hms_opt(1, 0, 0).unwrap()
}

#[test]
fn dropped_rows_equal_longest_lag() {
    let panel = common::panel(Scenario::Mixed, 1, 60);
    let (dm, fs) = prepare(&panel, FundamentalsConfig::default(), &FeatureConfig::default()).unwrap();
    assert_eq!(dm.dates.len() - fs.len(), 7);
}
