//! Price ingestion and the realized-volatility transform.

use std::io::Read;
use std::path::Path;

use bcglpm_core::nalgebra::DMatrix;
use bcglpm_core::TimeSeriesPanel;
use chrono::NaiveDate;

use crate::error::{AppError, Result};

/// Floor applied to realized volatility before taking logs.
pub const LOG_RV_FLOOR: f64 = 1e-12;

/// Daily price levels, one column per instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceCsv {
    pub dates: Vec<NaiveDate>,
    pub labels: Vec<String>,
    /// T×k price levels, all positive.
    pub prices: DMatrix<f64>,
    /// Rows dropped for missing values.
    pub dropped: usize,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

pub fn ingest_prices(path: &Path) -> Result<PriceCsv> {
    let file = std::fs::File::open(path).map_err(AppError::io(path))?;
    parse_prices(file, path)
}

/// Parses a price table: ISO-8601 dates in the first column, a header row,
/// strictly increasing dates and positive prices. Rows with a blank, `NA` or
/// `NaN` cell are dropped.
pub fn parse_prices<R: Read>(reader: R, path: &Path) -> Result<PriceCsv> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(AppError::csv(path))?.clone();
    if header.len() < 2 {
        return Err(AppError::format(path, "need a date column and at least one price column"));
    }
    let labels: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let k = labels.len();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut dropped = 0;
    for (r, rec) in rdr.records().enumerate() {
        let line = r + 2;
        let rec = rec.map_err(AppError::csv(path))?;
        if rec.len() != k + 1 {
            return Err(AppError::format(path, format!("line {line}: expected {} fields, found {}", k + 1, rec.len())));
        }
        if rec.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|e| AppError::format(path, format!("line {line}: bad date {:?}: {e}", &rec[0])))?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(AppError::format(path, format!("line {line}: date {date} does not follow {prev}")));
            }
        }
        for (c, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| AppError::format(path, format!("line {line}: bad price {cell:?} for {}", labels[c])))?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(AppError::format(path, format!("line {line}: price {v} for {} is not positive", labels[c])));
            }
            values.push(v);
        }
        dates.push(date);
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing values", path.display());
    }
    if dates.is_empty() {
        return Err(AppError::format(path, "no complete rows"));
    }
    let prices = DMatrix::from_row_slice(dates.len(), k, &values);
    Ok(PriceCsv { dates, labels, prices, dropped })
}

/// Squared 100-scaled log returns, optionally logged.
#[derive(Debug, Clone, PartialEq)]
pub struct RvSeries {
    pub dates: Vec<NaiveDate>,
    pub labels: Vec<String>,
    pub values: DMatrix<f64>,
}

/// `RV_t = [100 (log I_t - log I_{t-1})]²`, one row shorter than the input.
/// With `log_rv`, returns `log(max(RV_t, 1e-12))`.
pub fn realized_volatility(prices: &PriceCsv, log_rv: bool) -> Result<RvSeries> {
    let (t, k) = prices.prices.shape();
    if t < 2 {
        return Err(AppError::Config(format!("realized volatility needs at least two rows, got {t}")));
    }
    if prices.prices.iter().any(|p| !(*p > 0.0)) {
        return Err(AppError::Config("prices must be positive".into()));
    }
    let values = DMatrix::from_fn(t - 1, k, |r, c| {
        let ret = 100.0 * (prices.prices[(r + 1, c)].ln() - prices.prices[(r, c)].ln());
        let rv = ret * ret;
        if log_rv {
            rv.max(LOG_RV_FLOOR).ln()
        } else {
            rv
        }
    });
    Ok(RvSeries { dates: prices.dates[1..].to_vec(), labels: prices.labels.clone(), values })
}

impl RvSeries {
    /// Splits columns into endogenous series and the named market indicators.
    pub fn into_panel(self, market: &[String]) -> Result<TimeSeriesPanel> {
        let dates = self.dates.iter().map(|d| d.to_string()).collect();
        let full = TimeSeriesPanel::new(self.values, DMatrix::zeros(0, 0), dates, self.labels)?;
        split_market(&full, market)
    }
}

/// Moves the named columns of `panel.y()` into the market block.
pub fn split_market(panel: &TimeSeriesPanel, market: &[String]) -> Result<TimeSeriesPanel> {
    let labels = panel.labels();
    let mut m_idx = Vec::with_capacity(market.len());
    for name in market {
        let pos = labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| AppError::Config(format!("market column {name:?} not in input")))?;
        if m_idx.contains(&pos) {
            return Err(AppError::Config(format!("market column {name:?} listed twice")));
        }
        m_idx.push(pos);
    }
    if m_idx.is_empty() {
        return Ok(panel.clone());
    }
    let values = panel.y();
    let y_idx: Vec<usize> = (0..labels.len()).filter(|i| !m_idx.contains(i)).collect();
    let t = values.nrows();
    let mut m = DMatrix::from_fn(t, m_idx.len(), |r, c| values[(r, m_idx[c])]);
    if panel.n_market() > 0 {
        m = DMatrix::from_fn(t, m.ncols() + panel.n_market(), |r, c| {
            if c < panel.n_market() { panel.m()[(r, c)] } else { m[(r, c - panel.n_market())] }
        });
    }
    let y = DMatrix::from_fn(t, y_idx.len(), |r, c| values[(r, y_idx[c])]);
    let kept = y_idx.iter().map(|&i| labels[i].clone()).collect();
    Ok(TimeSeriesPanel::new(y, m, panel.dates().to_vec(), kept)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<PriceCsv> {
        parse_prices(s.as_bytes(), Path::new("test.csv"))
    }

    #[test]
    fn three_rows_two_instruments() {
        let p = parse("date,a,b\n2020-01-01,1,2\n2020-01-02,1.5,2\n2020-01-03,2,3\n").unwrap();
        assert_eq!(p.prices.shape(), (3, 2));
        assert_eq!(p.labels, ["a", "b"]);
        assert_eq!(p.dropped, 0);
    }

    #[test]
    fn non_increasing_dates_name_the_line() {
        let err = parse("date,a\n2020-01-02,1\n2020-01-02,2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn blank_cell_drops_row() {
        let p = parse("date,a,b\n2020-01-01,1,2\n2020-01-02,,2\n2020-01-03,2,3\n").unwrap();
        assert_eq!(p.dropped, 1);
        assert_eq!(p.dates.len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("date,a\n2020-01-01,0\n").is_err());
        assert!(parse("date,a\n2020-01-01,-3\n").is_err());
        assert!(parse("date,a\n01/02/2020,1\n").is_err());
        assert!(parse("date,a,b\n2020-01-01,1\n").is_err());
        assert!(parse("date,a\n2020-01-01,abc\n").is_err());
    }

    #[test]
    fn rv_values() {
        let p = parse("date,a\n2020-01-01,100\n2020-01-02,101\n2020-01-03,101\n").unwrap();
        let rv = realized_volatility(&p, false).unwrap();
        let expected = (100.0 * 1.01f64.ln()).powi(2);
        assert!((rv.values[(0, 0)] - expected).abs() < 1e-12);
        assert!((rv.values[(0, 0)] - 0.990_091).abs() < 1e-6);
        assert_eq!(rv.values[(1, 0)], 0.0);
        let log_rv = realized_volatility(&p, true).unwrap();
        assert_eq!(log_rv.values[(1, 0)], LOG_RV_FLOOR.ln());
    }

    #[test]
    fn market_split() {
        let p = parse("date,a,b,m\n2020-01-01,1,2,3\n2020-01-02,2,3,4\n2020-01-03,3,3,5\n").unwrap();
        let panel = realized_volatility(&p, false).unwrap().into_panel(&["m".into()]).unwrap();
        assert_eq!((panel.n_series(), panel.n_market()), (2, 1));
        assert_eq!(panel.labels(), ["a", "b"]);
        let rv = realized_volatility(&p, false).unwrap();
        assert!(rv.clone().into_panel(&["zzz".into()]).is_err());
        assert!(rv.into_panel(&["m".into(), "m".into()]).is_err());
    }
}
