//! Ranking datasets as CSV: a header of item labels, one row per observed
//! ranking with `NA` for unranked items, and an optional `freq` column.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ranking::{rankify, Direction, PartialRanking, Ranking, RankingDataset};

pub const FREQ_COLUMN: &str = "freq";

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na")
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(source)
}

pub fn parse_rankings_csv(path: impl AsRef<Path>) -> Result<RankingDataset> {
    let path = path.as_ref();
    read_rankings_csv(File::open(path)?, path)
}

/// Parses from any reader; `path` only labels errors.
pub fn read_rankings_csv<R: Read>(source: R, path: &Path) -> Result<RankingDataset> {
    let mut rdr = reader(source);
    let header = rdr.headers()?.clone();
    let freq_col = header.iter().position(|h| h.eq_ignore_ascii_case(FREQ_COLUMN));
    let items: Vec<String> =
        header.iter().enumerate().filter(|&(i, _)| Some(i) != freq_col).map(|(_, h)| h.to_string()).collect();
    if items.len() < 2 {
        return Err(parse_err(path, 1, format!("need at least 2 item columns, found {}", items.len())));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        let mut ranks = Vec::with_capacity(items.len());
        let mut count = 1u64;
        for (i, cell) in record.iter().enumerate() {
            if Some(i) == freq_col {
                count = cell
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("frequency {cell:?} is not a nonnegative integer")))?;
            } else if is_missing(cell) {
                ranks.push(None);
            } else {
                let r: u32 = cell.parse().map_err(|_| {
                    parse_err(path, line, format!("rank {cell:?} in column {:?} is not an integer", &header[i]))
                })?;
                ranks.push(Some(r));
            }
        }
        let ranking = PartialRanking::new(ranks).map_err(|e| parse_err(path, line, e.to_string()))?;
        rows.push((ranking, count));
    }
    RankingDataset::new(items, rows)
}

pub fn write_rankings_csv(data: &RankingDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut file = File::create(path)?;
    write_rankings(data, &mut file)?;
    file.flush()?;
    Ok(())
}

/// Writes the dataset; the `freq` column appears only when some row repeats.
pub fn write_rankings<W: Write>(data: &RankingDataset, sink: W) -> Result<()> {
    let with_freq = data.rows().iter().any(|r| r.count != 1);
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = data.items().iter().map(String::as_str).collect();
    if with_freq {
        header.push(FREQ_COLUMN);
    }
    w.write_record(&header)?;
    for row in data.rows() {
        let mut fields: Vec<String> =
            row.ranking.ranks().iter().map(|r| r.map_or_else(|| "NA".to_string(), |r| r.to_string())).collect();
        if with_freq {
            fields.push(row.count.to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// A numeric matrix with labelled columns, one row per unit.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_matrix_csv(path: impl AsRef<Path>) -> Result<ValueMatrix> {
    let path = path.as_ref();
    read_matrix_csv(File::open(path)?, path)
}

pub fn read_matrix_csv<R: Read>(source: R, path: &Path) -> Result<ValueMatrix> {
    let mut rdr = reader(source);
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != columns.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", columns.len(), record.len())));
        }
        let row = record
            .iter()
            .zip(&columns)
            .map(|(cell, col)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(path, line, format!("value {cell:?} in column {col:?} is not a finite number"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ValueMatrix { columns, rows })
}

/// Ranks every row of the matrix across its columns.
pub fn rankify_matrix(m: &ValueMatrix, direction: Direction) -> Result<RankingDataset> {
    let rankings = m
        .rows
        .iter()
        .map(|row| rankify(row, direction).map(|r| (PartialRanking::from(r), 1)))
        .collect::<Result<Vec<_>>>()?;
    RankingDataset::new(m.columns.clone(), rankings)
}

/// Full rankings in generation order, one per line, without merging.
pub fn write_ranking_list<W: Write>(items: &[String], rankings: &[Ranking], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(items)?;
    for r in rankings {
        w.write_record(r.ranks().iter().map(u32::to_string))?;
    }
    w.flush()?;
    Ok(())
}
