//! CSV files for plotting.
//!
//! Per-replica files have the header `trial,reward,best,moving_avg`;
//! aggregate files have `trial,mean_best,min_best,max_best`. Trials are
//! 1-based and floats carry 9 significant digits.

use std::path::Path;

use super::AggregateRow;
use crate::error::{Error, Result};
use crate::training::{RunHistory, TrialRecord};

pub const HISTORY_HEADER: [&str; 4] = ["trial", "reward", "best", "moving_avg"];
pub const AGGREGATE_HEADER: [&str; 4] = ["trial", "mean_best", "min_best", "max_best"];

/// `x` rounded to 9 significant digits, printed in shortest form.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn write_rows(path: &Path, header: [&str; 4], rows: impl Iterator<Item = [String; 4]>) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn emit_history_csv(history: &RunHistory, path: impl AsRef<Path>) -> Result<()> {
    let rows = history.trials.iter().map(|r| {
        [r.trial.to_string(), format_float(r.reward), format_float(r.best), format_float(r.moving_average)]
    });
    write_rows(path.as_ref(), HISTORY_HEADER, rows)
}

pub fn emit_aggregate_csv(rows: &[AggregateRow], path: impl AsRef<Path>) -> Result<()> {
    let rows = rows.iter().map(|r| {
        [r.trial.to_string(), format_float(r.mean_best), format_float(r.min_best), format_float(r.max_best)]
    });
    write_rows(path.as_ref(), AGGREGATE_HEADER, rows)
}

fn read_rows(path: &Path, header: [&str; 4]) -> Result<Vec<(usize, [f64; 3])>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let found = r.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected header {:?}", path.display(), found)));
    }
    let bad = |field: &str| Error::Config(format!("{}: cannot parse `{field}`", path.display()));
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let trial = record[0].parse().map_err(|_| bad(&record[0]))?;
        let mut vals = [0.0; 3];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = record[i + 1].parse().map_err(|_| bad(&record[i + 1]))?;
        }
        out.push((trial, vals));
    }
    Ok(out)
}

pub fn read_history_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    Ok(read_rows(path.as_ref(), HISTORY_HEADER)?
        .into_iter()
        .map(|(trial, [reward, best, moving_average])| TrialRecord { trial, reward, best, moving_average })
        .collect())
}

pub fn read_aggregate_csv(path: impl AsRef<Path>) -> Result<Vec<AggregateRow>> {
    Ok(read_rows(path.as_ref(), AGGREGATE_HEADER)?
        .into_iter()
        .map(|(trial, [mean_best, min_best, max_best])| AggregateRow { trial, mean_best, min_best, max_best })
        .collect())
}
