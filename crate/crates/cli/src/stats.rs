use std::io::Write;

use anyhow::Result;
use dayahead_core::dataset::{HourlyPanel, Series};

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesStats {
    pub name: &'static str,
    pub unit: &'static str,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn describe(name: &'static str, unit: &'static str, values: &[f64]) -> SeriesStats {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    SeriesStats {
        name,
        unit,
        count: n,
        mean,
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    }
}

pub fn panel_stats(panel: &HourlyPanel) -> Vec<SeriesStats> {
    Series::ALL
        .iter()
        .map(|&s| describe(s.name(), s.unit(), panel.series(s)))
        .collect()
}

pub fn write_stats<W: Write>(stats: &[SeriesStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "series", "unit", "count", "mean", "std", "min", "q25", "median", "q75", "max",
    ])?;
    for s in stats {
        let f = |x: f64| format!("{x:?}");
        w.write_record([
            s.name.to_string(),
            s.unit.to_string(),
            s.count.to_string(),
            f(s.mean),
            f(s.std),
            f(s.min),
            f(s.q25),
            f(s.median),
            f(s.q75),
            f(s.max),
        ])?;
    }
    w.flush()?;
    Ok(())
}
