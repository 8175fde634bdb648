//! CSV ingestion and export of trial data.
//!
//! A trial file has a header row and one row per subject with columns for
//! follow-up time, event indicator and arm, an optional integer stratum and
//! any number of numeric covariates. Errors carry the 1-based line number of
//! the offending row, counting the header as line 1.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{SubjectRecord, TrialData};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StratumColumn {
    /// Use a column named `stratum` if present, otherwise one stratum.
    Auto,
    Named(String),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CovariateColumns {
    /// Every column named `x<k>`, ordered by `k`.
    Auto,
    Named(Vec<String>),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub time: String,
    pub event: String,
    pub arm: String,
    pub stratum: StratumColumn,
    pub covariates: CovariateColumns,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            event: "event".into(),
            arm: "arm".into(),
            stratum: StratumColumn::Auto,
            covariates: CovariateColumns::Auto,
        }
    }
}

fn auto_covariates(headers: &csv::StringRecord) -> Vec<String> {
    let mut cols: Vec<(u64, String)> = headers
        .iter()
        .filter_map(|h| {
            let k = h.strip_prefix('x')?;
            if k.is_empty() || !k.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some((k.parse().ok()?, h.to_string()))
        })
        .collect();
    cols.sort();
    cols.into_iter().map(|(_, h)| h).collect()
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn number(rec: &csv::StringRecord, idx: usize, row: usize, col: &str) -> Result<f64> {
    rec.get(idx)
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|x| !x.is_nan())
        .ok_or_else(|| Error::NonNumeric {
            row,
            col: col.to_string(),
        })
}

fn event_flag(rec: &csv::StringRecord, idx: usize, row: usize, col: &str) -> Result<bool> {
    let raw = rec.get(idx).unwrap_or("").trim();
    match raw.to_ascii_lowercase().as_str() {
        "true" => return Ok(true),
        "false" => return Ok(false),
        _ => {}
    }
    match number(rec, idx, row, col)? {
        1.0 => Ok(true),
        0.0 => Ok(false),
        x => Err(Error::BadRow {
            row,
            msg: format!("event indicator `{col}` must be 0 or 1, got {x}"),
        }),
    }
}

pub fn read_trial_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<TrialData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let time = column(&headers, &schema.time)?;
    let event = column(&headers, &schema.event)?;
    let arm = column(&headers, &schema.arm)?;
    let stratum = match &schema.stratum {
        StratumColumn::Auto => headers.iter().position(|h| h == "stratum"),
        StratumColumn::Named(name) => Some(column(&headers, name)?),
        StratumColumn::None => None,
    };
    let names = match &schema.covariates {
        CovariateColumns::Auto => auto_covariates(&headers),
        CovariateColumns::Named(names) => names.clone(),
        CovariateColumns::None => vec![],
    };
    let cov_idx = names
        .iter()
        .map(|n| column(&headers, n))
        .collect::<Result<Vec<_>>>()?;

    let mut subjects = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let t = number(&rec, time, row, &schema.time)?;
        if t < 0.0 {
            return Err(Error::NegativeTime { row });
        }
        if !t.is_finite() {
            return Err(Error::NonNumeric {
                row,
                col: schema.time.clone(),
            });
        }
        let e = event_flag(&rec, event, row, &schema.event)?;
        let a = match number(&rec, arm, row, &schema.arm) {
            Ok(0.0) => 0,
            Ok(1.0) => 1,
            _ => return Err(Error::BadArmValue { row }),
        };
        let z = match stratum {
            Some(idx) => {
                let col = &headers[idx];
                let x = number(&rec, idx, row, col)?;
                if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
                    return Err(Error::BadRow {
                        row,
                        msg: format!("stratum `{col}` must be a nonnegative integer, got {x}"),
                    });
                }
                x as u32
            }
            None => 0,
        };
        let mut x = Vec::with_capacity(cov_idx.len());
        for (&idx, name) in cov_idx.iter().zip(&names) {
            let v = number(&rec, idx, row, name)?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row,
                    col: name.clone(),
                });
            }
            x.push(v);
        }
        subjects.push(SubjectRecord::new(t, e, a, z, x));
    }
    TrialData::with_names(subjects, names)
}

pub fn parse_trial_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TrialData> {
    read_trial_csv(File::open(path)?, schema)
}

/// Writes `time,event,arm,stratum` followed by the covariates under their
/// names. Numbers use the shortest representation that parses back exactly.
pub fn write_trial_csv<W: Write>(data: &TrialData, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time", "event", "arm", "stratum"];
    header.extend(data.covariate_names().iter().map(String::as_str));
    w.write_record(&header)?;
    for s in data.subjects() {
        let mut rec = vec![
            s.time.to_string(),
            u8::from(s.event).to_string(),
            s.arm.to_string(),
            s.stratum.to_string(),
        ];
        rec.extend(s.covariates.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
