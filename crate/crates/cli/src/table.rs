//! Reader for forecast CSVs written by `backtest`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use dayahead_core::numerics::Matrix;
use dayahead_core::HOURS;

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastTable {
    pub dates: Vec<NaiveDate>,
    pub forecast: Matrix,
    pub actual: Matrix,
    pub lem: Option<Matrix>,
    pub rnn: Option<Matrix>,
    pub kf: Option<Matrix>,
}

fn parse_cell(s: &str, line: usize, col: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .with_context(|| format!("line {line}, column `{col}`: not a number: {s:?}"))
}

pub fn read_forecasts(path: &Path) -> Result<ForecastTable> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("opening forecasts {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let names = [
        "date",
        "hour",
        "forecast",
        "actual",
        "lem_component",
        "rnn_component",
        "kf_component",
    ];
    if headers.iter().collect::<Vec<_>>() != names {
        bail!("{}: unexpected header {:?}", path.display(), headers);
    }
    let mut dates = Vec::new();
    let mut cols: [Vec<Option<f64>>; 5] = Default::default();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let date: NaiveDate = rec[0]
            .parse()
            .with_context(|| format!("line {line}: bad date {:?}", &rec[0]))?;
        let hour: usize = rec[1]
            .parse()
            .with_context(|| format!("line {line}: bad hour {:?}", &rec[1]))?;
        if hour != k % HOURS {
            bail!("line {line}: expected hour {}, found {hour}", k % HOURS);
        }
        if hour == 0 {
            dates.push(date);
        } else if dates.last() != Some(&date) {
            bail!("line {line}: date changes within a day");
        }
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse_cell(&rec[c + 2], line, names[c + 2])?);
        }
    }
    let rows = dates.len();
    if rows == 0 || cols[0].len() != rows * HOURS {
        bail!("{}: expected a whole number of 24-hour days", path.display());
    }
    let dense = |c: &[Option<f64>], name: &str| -> Result<Option<Matrix>> {
        if c.iter().all(Option::is_none) {
            return Ok(None);
        }
        let v: Option<Vec<f64>> = c.iter().copied().collect();
        match v {
            Some(v) => Ok(Some(Matrix::from_vec(rows, HOURS, v)?)),
            None => bail!("column `{name}` is only partly filled"),
        }
    };
    Ok(ForecastTable {
        forecast: dense(&cols[0], "forecast")?.context("empty forecast column")?,
        actual: dense(&cols[1], "actual")?.context("empty actual column")?,
        lem: dense(&cols[2], "lem_component")?,
        rnn: dense(&cols[3], "rnn_component")?,
        kf: dense(&cols[4], "kf_component")?,
        dates,
    })
}
