use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Publication years outside this range are rejected on load.
pub const YEAR_RANGE: (i32, i32) = (1900, 2100);

/// One harvested publication, as stored in the raw-record archive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub title: String,
    // `abstract` is a reserved word in Rust.
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    pub year: i32,
    pub language: String,
}

impl RawRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            record: line.chars().take(60).collect(),
            message: e.to_string(),
        })?;
        if !(YEAR_RANGE.0..=YEAR_RANGE.1).contains(&rec.year) {
            return Err(Error::Parse {
                record: rec.id,
                message: format!("year {} outside [{}, {}]", rec.year, YEAR_RANGE.0, YEAR_RANGE.1),
            });
        }
        Ok(rec)
    }
}

/// Read a JSON-lines archive. Blank lines are skipped; duplicate ids are an error.
pub fn read_archive(path: &Path) -> Result<Vec<RawRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = RawRecord::from_json_line(&line)?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Parse {
                record: rec.id,
                message: "duplicate id".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_archive(path: &Path, records: &[RawRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        buf.extend_from_slice(r.to_json_line().as_bytes());
        buf.push(b'\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MissingAbstract,
    WrongLanguage,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: usize,
    pub dropped: Vec<(String, DropReason)>,
}

impl FilterReport {
    pub fn count(&self, reason: DropReason) -> usize {
        self.dropped.iter().filter(|(_, r)| *r == reason).count()
    }
}

/// Keep records with a nonempty abstract written in `language`, in input order.
pub fn filter_records(records: Vec<RawRecord>, language: &str) -> (Vec<RawRecord>, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = Vec::with_capacity(records.len());
    for rec in records {
        if rec.abstract_text.trim().is_empty() {
            report.dropped.push((rec.id, DropReason::MissingAbstract));
        } else if !rec.language.eq_ignore_ascii_case(language) {
            report.dropped.push((rec.id, DropReason::WrongLanguage));
        } else {
            kept.push(rec);
        }
    }
    report.kept = kept.len();
    (kept, report)
}
