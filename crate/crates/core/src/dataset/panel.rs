//! Hourly market panel: CSV ingestion and daylight-saving repair.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns of the hourly panel, in file order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Price,
    LoadFc,
    WindOnshoreFc,
    WindOffshoreFc,
    SolarFc,
    Coal,
    Gas,
    Oil,
    Eua,
}

impl Series {
    pub const ALL: [Series; 9] = [
        Series::Price,
        Series::LoadFc,
        Series::WindOnshoreFc,
        Series::WindOffshoreFc,
        Series::SolarFc,
        Series::Coal,
        Series::Gas,
        Series::Oil,
        Series::Eua,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Series::Price => "price",
            Series::LoadFc => "load_fc",
            Series::WindOnshoreFc => "wind_onshore_fc",
            Series::WindOffshoreFc => "wind_offshore_fc",
            Series::SolarFc => "solar_fc",
            Series::Coal => "coal",
            Series::Gas => "gas",
            Series::Oil => "oil",
            Series::Eua => "eua",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Series::Price | Series::Gas => "EUR/MWh",
            Series::LoadFc | Series::WindOnshoreFc | Series::WindOffshoreFc | Series::SolarFc => {
                "MWh"
            }
            Series::Coal => "EUR/t",
            Series::Oil => "EUR/bbl",
            Series::Eua => "EUR/tCO2",
        }
    }

    /// Daily series published once a day and forward-filled onto the hourly grid.
    pub fn is_daily(self) -> bool {
        matches!(self, Series::Coal | Series::Gas | Series::Oil | Series::Eua)
    }
}

/// Header names expected in the input CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp: String,
    pub columns: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            columns: Series::ALL.iter().map(|s| s.name().to_string()).collect(),
        }
    }
}

/// Hourly observations on local wall-clock time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyPanel {
    timestamps: Vec<NaiveDateTime>,
    /// One vector per [`Series`], indexed by `Series::index`.
    columns: Vec<Vec<f64>>,
}

impl HourlyPanel {
    pub fn new(timestamps: Vec<NaiveDateTime>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() != Series::ALL.len() {
            return Err(Error::Config(format!(
                "panel needs {} series, got {}",
                Series::ALL.len(),
                columns.len()
            )));
        }
        if let Some(bad) = columns.iter().position(|c| c.len() != timestamps.len()) {
            return Err(Error::Config(format!(
                "series {} has {} rows, expected {}",
                Series::ALL[bad].name(),
                columns[bad].len(),
                timestamps.len()
            )));
        }
        Ok(Self {
            timestamps,
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn series(&self, s: Series) -> &[f64] {
        &self.columns[s.index()]
    }

    pub fn series_mut(&mut self, s: Series) -> &mut [f64] {
        &mut self.columns[s.index()]
    }

    fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Writes the panel in the input CSV layout. Timestamps carry a `+00:00`
    /// offset since the normalised panel has a uniform hourly grid.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["timestamp".to_string()];
        header.extend(Series::ALL.iter().map(|s| s.name().to_string()));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![format!("{}+00:00", self.timestamps[i].format("%Y-%m-%dT%H:%M:%S"))];
            rec.extend(self.columns.iter().map(|c| format_float(c[i])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn format_float(x: f64) -> String {
    // Shortest round-trip representation.
    format!("{x:?}")
}

fn parse_timestamp(s: &str) -> Option<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M%:z"))
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%:z"))
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M%:z"))
        .ok()
}

/// Reads and validates the CSV at `path`, then repairs DST transitions.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<HourlyPanel> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<HourlyPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            column: name.to_string(),
            message: "missing header".into(),
        })
    };
    let ts_idx = find(&schema.timestamp)?;
    if schema.columns.len() != Series::ALL.len() {
        return Err(Error::Config("schema must name all nine series".into()));
    }
    let col_idx: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;

    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); Series::ALL.len()];
    let mut last_seen: Vec<Option<f64>> = vec![None; Series::ALL.len()];
    for (row_no, record) in rdr.records().enumerate() {
        // header is line 1
        let line = row_no + 2;
        let record = record?;
        let raw_ts = record.get(ts_idx).unwrap_or("");
        let ts = parse_timestamp(raw_ts).ok_or_else(|| Error::Parse {
            line,
            column: schema.timestamp.clone(),
            message: format!("invalid ISO-8601 timestamp `{raw_ts}`"),
        })?;
        timestamps.push(ts.naive_local());
        for (k, &ci) in col_idx.iter().enumerate() {
            let series = Series::ALL[k];
            let raw = record.get(ci).unwrap_or("");
            let value = if raw.is_empty() {
                match (series.is_daily(), last_seen[k]) {
                    (true, Some(prev)) => prev,
                    (true, None) => {
                        return Err(Error::Parse {
                            line,
                            column: schema.columns[k].clone(),
                            message: "daily series has no earlier value to forward-fill".into(),
                        })
                    }
                    (false, _) => {
                        return Err(Error::Parse {
                            line,
                            column: schema.columns[k].clone(),
                            message: "missing value".into(),
                        })
                    }
                }
            } else {
                raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    column: schema.columns[k].clone(),
                    message: format!("invalid number `{raw}`"),
                })?
            };
            last_seen[k] = Some(value);
            columns[k].push(value);
        }
    }
    let panel = HourlyPanel::new(timestamps, columns)?;
    normalize_dst(&panel)
}

fn last_sunday(year: i32, month: u32) -> NaiveDate {
    let first_next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid date");
    let mut d = first_next - Duration::days(1);
    while d.weekday() != Weekday::Sun {
        d -= Duration::days(1);
    }
    d
}

/// Local 02:00 on the last Sunday of March: the hour skipped by spring-forward.
pub fn is_spring_forward_hour(t: NaiveDateTime) -> bool {
    t.hour() == 2 && t.minute() == 0 && t.date() == last_sunday(t.year(), 3)
}

/// Local 02:00 on the last Sunday of October: the hour repeated by fall-back.
pub fn is_fall_back_hour(t: NaiveDateTime) -> bool {
    t.hour() == 2 && t.minute() == 0 && t.date() == last_sunday(t.year(), 10)
}

/// Puts the panel on a gap-free, duplicate-free hourly grid.
///
/// The skipped spring-forward hour is linearly interpolated from its
/// neighbours; the repeated fall-back hour becomes the mean of its two
/// observations. Any other gap or duplicate is a [`Error::Gap`].
pub fn normalize_dst(panel: &HourlyPanel) -> Result<HourlyPanel> {
    let n = panel.len();
    if n == 0 {
        return Ok(panel.clone());
    }
    let hour = Duration::hours(1);
    let mut ts = Vec::with_capacity(n);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    ts.push(panel.timestamps[0]);
    rows.push(panel.row(0));
    let mut merged_at: Option<NaiveDateTime> = None;
    let mut repaired = false;

    for i in 1..n {
        let prev = *ts.last().unwrap();
        let cur = panel.timestamps[i];
        let row = panel.row(i);
        let delta = cur - prev;
        if delta == hour {
            ts.push(cur);
            rows.push(row);
        } else if delta == hour * 2 && is_spring_forward_hour(prev + hour) {
            let last = rows.last().unwrap();
            let mid: Vec<f64> = last.iter().zip(&row).map(|(a, b)| 0.5 * (a + b)).collect();
            ts.push(prev + hour);
            rows.push(mid);
            repaired = true;
            ts.push(cur);
            rows.push(row);
        } else if delta.is_zero() && is_fall_back_hour(cur) && merged_at != Some(cur) {
            let last = rows.last_mut().unwrap();
            for (a, b) in last.iter_mut().zip(&row) {
                *a = 0.5 * (*a + b);
            }
            merged_at = Some(cur);
            repaired = true;
        } else {
            return Err(Error::Gap {
                at: cur.to_string(),
                message: format!("{} minutes after previous observation {prev}", delta.num_minutes()),
            });
        }
    }

    if !repaired {
        return Ok(panel.clone());
    }
    let mut columns = vec![Vec::with_capacity(ts.len()); Series::ALL.len()];
    for r in rows {
        for (c, v) in columns.iter_mut().zip(r) {
            c.push(v);
        }
    }
    HourlyPanel::new(ts, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "timestamp,price,load_fc,wind_onshore_fc,wind_offshore_fc,solar_fc,coal,gas,oil,eua\n";

    fn line(ts: &str, price: f64) -> String {
        format!("{ts},{price},50000,10000,2000,0,100,30,70,25\n")
    }

    fn hourly_file(start: NaiveDateTime, hours: usize, offset: &str) -> String {
        let mut s = HEADER.to_string();
        for h in 0..hours {
            let t = start + Duration::hours(h as i64);
            s += &line(&format!("{}{offset}", t.format("%Y-%m-%dT%H:%M:%S")), h as f64);
        }
        s
    }

    fn dt(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M").unwrap()
    }

    #[test]
    fn two_day_file() {
        let csv = hourly_file(dt("2023-01-02T00:00"), 48, "+01:00");
        let p = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(p.len(), 48);
        assert_eq!(p.series(Series::Price)[47], 47.0);
    }

    #[test]
    fn spring_forward_gap_is_repaired() {
        let mut s = HEADER.to_string();
        s += &line("2023-03-26T00:00:00+01:00", 0.0);
        s += &line("2023-03-26T01:00:00+01:00", 10.0);
        s += &line("2023-03-26T03:00:00+02:00", 30.0);
        s += &line("2023-03-26T04:00:00+02:00", 40.0);
        let p = read_csv(s.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p.timestamps()[2], dt("2023-03-26T02:00"));
        assert_eq!(p.series(Series::Price)[2], 20.0);
    }

    #[test]
    fn fall_back_duplicate_is_averaged() {
        let mut s = HEADER.to_string();
        s += &line("2023-10-29T01:00:00+02:00", 5.0);
        s += &line("2023-10-29T02:00:00+02:00", 40.0);
        s += &line("2023-10-29T02:00:00+01:00", 60.0);
        s += &line("2023-10-29T03:00:00+01:00", 7.0);
        let p = read_csv(s.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.series(Series::Price), &[5.0, 50.0, 7.0]);
    }

    #[test]
    fn unexplained_gap_is_an_error() {
        let mut s = HEADER.to_string();
        s += &line("2023-05-01T00:00:00+02:00", 1.0);
        s += &line("2023-05-01T04:00:00+02:00", 2.0);
        assert!(matches!(
            read_csv(s.as_bytes(), &CsvSchema::default()),
            Err(Error::Gap { .. })
        ));
        // a single missing hour away from the DST date is also rejected
        let mut s = HEADER.to_string();
        s += &line("2023-05-01T01:00:00+02:00", 1.0);
        s += &line("2023-05-01T03:00:00+02:00", 2.0);
        assert!(read_csv(s.as_bytes(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn no_dst_events_is_identity_and_idempotent() {
        let csv = hourly_file(dt("2023-03-20T00:00"), 72, "+01:00");
        let p = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
        let q = normalize_dst(&p).unwrap();
        assert_eq!(p, q);

        let mut s = HEADER.to_string();
        s += &line("2023-03-26T01:00:00+01:00", 10.0);
        s += &line("2023-03-26T03:00:00+02:00", 30.0);
        let once = read_csv(s.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(normalize_dst(&once).unwrap(), once);
    }

    #[test]
    fn malformed_rows_report_line_and_column() {
        let mut s = HEADER.to_string();
        s += &line("2023-01-02T00:00:00+01:00", 1.0);
        s += "2023-01-02T01:00:00+01:00,abc,50000,10000,2000,0,100,30,70,25\n";
        match read_csv(s.as_bytes(), &CsvSchema::default()) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "price");
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_ts = format!("{HEADER}yesterday,1,1,1,1,1,1,1,1,1\n");
        assert!(matches!(
            read_csv(bad_ts.as_bytes(), &CsvSchema::default()),
            Err(Error::Parse { line: 2, .. })
        ));
        let missing_header = "timestamp,price\n";
        assert!(read_csv(missing_header.as_bytes(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn daily_series_forward_filled() {
        let mut s = HEADER.to_string();
        s += "2023-01-02T00:00:00+01:00,1,50000,10000,2000,0,100,30,70,25\n";
        s += "2023-01-02T01:00:00+01:00,1,50000,10000,2000,0,,,,\n";
        let p = read_csv(s.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(p.series(Series::Coal), &[100.0, 100.0]);
        assert_eq!(p.series(Series::Eua), &[25.0, 25.0]);

        let mut s = HEADER.to_string();
        s += "2023-01-02T00:00:00+01:00,1,,10000,2000,0,100,30,70,25\n";
        assert!(read_csv(s.as_bytes(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn dst_dates() {
        assert!(is_spring_forward_hour(dt("2023-03-26T02:00")));
        assert!(is_spring_forward_hour(dt("2024-03-31T02:00")));
        assert!(!is_spring_forward_hour(dt("2023-03-19T02:00")));
        assert!(is_fall_back_hour(dt("2024-10-27T02:00")));
    }

    #[test]
    fn csv_round_trip() {
        let csv = hourly_file(dt("2023-01-02T00:00"), 24, "+00:00");
        let p = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
        let mut out = Vec::new();
        p.write_csv(&mut out).unwrap();
        let q = read_csv(out.as_slice(), &CsvSchema::default()).unwrap();
        assert_eq!(p, q);
    }
}
