//! Score tables as CSV: header `index,<attr1>,...,<attrm>`, one row per sample.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An `n × m` score matrix with its attribute manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub attributes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(attributes: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::validation("score table needs at least one attribute"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != attributes.len() {
                return Err(Error::validation(format!(
                    "row {i} has {} scores, expected {}",
                    r.len(),
                    attributes.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("row {i} has a non-finite score")));
            }
        }
        Ok(Self { attributes, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

pub fn write_scores<W: Write>(w: W, table: &ScoreTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["index".to_string()];
    header.extend(table.attributes.iter().cloned());
    out.write_record(&header)?;
    for (i, row) in table.rows.iter().enumerate() {
        // `{}` on f64 prints the shortest string that parses back to the same value.
        let mut record = vec![i.to_string()];
        record.extend(row.iter().map(|v| format!("{v}")));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scores_file(path: impl AsRef<Path>, table: &ScoreTable) -> Result<()> {
    write_scores(File::create(path)?, table)
}

pub fn read_scores<R: Read>(r: R) -> Result<ScoreTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers()?.clone();
    if header.get(0) != Some("index") {
        return Err(Error::validation("scores CSV must start with an 'index' column"));
    }
    let attributes: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if attributes.is_empty() {
        return Err(Error::validation("scores CSV has no attribute columns"));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let index: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("line {line}: bad index '{}'", &record[0])))?;
        if index != i {
            return Err(Error::validation(format!(
                "line {line}: index {index} out of sequence (expected {i})"
            )));
        }
        let row = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::validation(format!("line {line}: bad score '{cell}'"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    ScoreTable::new(attributes, rows)
}

pub fn read_scores_file(path: impl AsRef<Path>) -> Result<ScoreTable> {
    read_scores(File::open(path)?)
}
