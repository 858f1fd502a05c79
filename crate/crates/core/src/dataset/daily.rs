//! Daily-by-hour restructuring of the hourly panel.

use chrono::{Datelike, NaiveDate, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use super::panel::{HourlyPanel, Series};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::HOURS;

/// Number of calendar dummies (Mon, Sat, Sun).
pub const CALENDAR_DIM: usize = 3;
/// Number of daily commodity prices (EUA, NGas, Oil, Coal).
pub const FUEL_DIM: usize = 4;

/// Commodity column order inside [`DailyMatrix::fuels`].
pub const FUEL_SERIES: [Series; FUEL_DIM] = [Series::Eua, Series::Gas, Series::Oil, Series::Coal];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FundamentalsConfig {
    /// Keep onshore and offshore wind as separate fundamentals (4 instead of 3).
    #[serde(default)]
    pub separate_wind: bool,
}

impl FundamentalsConfig {
    pub fn dim(&self) -> usize {
        if self.separate_wind {
            4
        } else {
            3
        }
    }
}

/// One row per calendar day, one column per delivery hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyMatrix {
    pub dates: Vec<NaiveDate>,
    /// T×24 prices.
    pub price: Matrix,
    /// T×(24·D_fund), hour-major: column `s·D_fund + f`.
    pub fundamentals: Matrix,
    pub fund_dim: usize,
    /// T×4 daily commodity prices in [`FUEL_SERIES`] order (same-day values).
    pub fuels: Matrix,
    /// T×3 one-hot (Mon, Sat, Sun) of the row's own date.
    pub calendar: Matrix,
}

pub fn calendar_dummies(date: NaiveDate) -> [f64; CALENDAR_DIM] {
    match date.weekday() {
        Weekday::Mon => [1.0, 0.0, 0.0],
        Weekday::Sat => [0.0, 1.0, 0.0],
        Weekday::Sun => [0.0, 0.0, 1.0],
        _ => [0.0, 0.0, 0.0],
    }
}

impl DailyMatrix {
    /// Reshapes a DST-normalised panel. Incomplete first and last days are
    /// dropped; daily commodity values are the mean over the day's hours.
    pub fn from_panel(panel: &HourlyPanel, cfg: FundamentalsConfig) -> Result<Self> {
        let ts = panel.timestamps();
        let mut start = 0;
        while start < ts.len() && ts[start].hour() != 0 {
            start += 1;
        }
        let days = (ts.len() - start) / HOURS;
        if days == 0 {
            return Err(Error::InsufficientHistory(
                "panel contains no complete day".into(),
            ));
        }
        let fund_dim = cfg.dim();
        let mut dates = Vec::with_capacity(days);
        let mut price = Matrix::zeros(days, HOURS);
        let mut fundamentals = Matrix::zeros(days, HOURS * fund_dim);
        let mut fuels = Matrix::zeros(days, FUEL_DIM);
        let mut calendar = Matrix::zeros(days, CALENDAR_DIM);

        let load = panel.series(Series::LoadFc);
        let won = panel.series(Series::WindOnshoreFc);
        let woff = panel.series(Series::WindOffshoreFc);
        let solar = panel.series(Series::SolarFc);
        for d in 0..days {
            let base = start + d * HOURS;
            let date = ts[base].date();
            for s in 0..HOURS {
                let i = base + s;
                if ts[i].date() != date || ts[i].hour() as usize != s {
                    return Err(Error::Gap {
                        at: ts[i].to_string(),
                        message: "panel is not on a regular hourly grid".into(),
                    });
                }
                price[(d, s)] = panel.series(Series::Price)[i];
                let f = if cfg.separate_wind {
                    vec![load[i], won[i], woff[i], solar[i]]
                } else {
                    vec![load[i], won[i] + woff[i], solar[i]]
                };
                for (k, v) in f.into_iter().enumerate() {
                    fundamentals[(d, s * fund_dim + k)] = v;
                }
            }
            for (k, series) in FUEL_SERIES.iter().enumerate() {
                let vals = &panel.series(*series)[base..base + HOURS];
                fuels[(d, k)] = vals.iter().sum::<f64>() / HOURS as f64;
            }
            calendar.row_mut(d).copy_from_slice(&calendar_dummies(date));
            dates.push(date);
        }
        Ok(Self {
            dates,
            price,
            fundamentals,
            fund_dim,
            fuels,
            calendar,
        })
    }

    pub fn days(&self) -> usize {
        self.dates.len()
    }

    /// Copy restricted to days `start..end`.
    pub fn slice_days(&self, start: usize, end: usize) -> Self {
        Self {
            dates: self.dates[start..end].to_vec(),
            price: self.price.slice_rows(start, end),
            fundamentals: self.fundamentals.slice_rows(start, end),
            fund_dim: self.fund_dim,
            fuels: self.fuels.slice_rows(start, end),
            calendar: self.calendar.slice_rows(start, end),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDateTime};

    fn panel(start: &str, hours: usize) -> HourlyPanel {
        let t0 = NaiveDateTime::parse_from_str(start, "%Y-%m-%dT%H:%M").unwrap();
        let ts: Vec<_> = (0..hours).map(|h| t0 + Duration::hours(h as i64)).collect();
        let cols = Series::ALL
            .iter()
            .enumerate()
            .map(|(k, _)| (0..hours).map(|h| (h * 10 + k) as f64).collect())
            .collect();
        HourlyPanel::new(ts, cols).unwrap()
    }

    #[test]
    fn reshapes_complete_days() {
        // starts at 22:00: the partial day is dropped, as is the tail
        let p = panel("2023-01-01T22:00", 2 + 48 + 5);
        let dm = DailyMatrix::from_panel(&p, FundamentalsConfig::default()).unwrap();
        assert_eq!(dm.days(), 2);
        assert_eq!(dm.dates[0], NaiveDate::from_ymd_opt(2023, 1, 2).unwrap());
        assert_eq!(dm.price[(0, 0)], 20.0);
        assert_eq!(dm.price[(1, 23)], (49 * 10) as f64);
        // wind = onshore + offshore
        let i = 2 + 5;
        assert_eq!(dm.fundamentals[(0, 5 * 3 + 1)], ((i * 10 + 2) + (i * 10 + 3)) as f64);
        // 2023-01-02 is a Monday
        assert_eq!(dm.calendar.row(0), &[1.0, 0.0, 0.0]);
        for d in 0..dm.days() {
            let s: f64 = dm.calendar.row(d).iter().sum();
            assert!(s == 0.0 || s == 1.0);
        }
    }

    #[test]
    fn separate_wind_widens_fundamentals() {
        let p = panel("2023-01-02T00:00", 24);
        let dm = DailyMatrix::from_panel(&p, FundamentalsConfig { separate_wind: true }).unwrap();
        assert_eq!(dm.fund_dim, 4);
        assert_eq!(dm.fundamentals.cols(), 96);
    }

    #[test]
    fn calendar_weekend() {
        assert_eq!(calendar_dummies(NaiveDate::from_ymd_opt(2023, 1, 7).unwrap()), [0.0, 1.0, 0.0]);
        assert_eq!(calendar_dummies(NaiveDate::from_ymd_opt(2023, 1, 8).unwrap()), [0.0, 0.0, 1.0]);
        assert_eq!(calendar_dummies(NaiveDate::from_ymd_opt(2023, 1, 4).unwrap()), [0.0, 0.0, 0.0]);
    }
}
