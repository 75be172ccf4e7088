use serde::{Deserialize, Serialize};

use super::text::Document;
use crate::error::{Error, Result};

/// A fixed-width window `[start_year, end_year)` of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    pub index: usize,
    pub start_year: i32,
    pub end_year: i32,
    /// Member ids in corpus order.
    pub doc_ids: Vec<String>,
}

impl Epoch {
    pub fn contains_year(&self, year: i32) -> bool {
        self.start_year <= year && year < self.end_year
    }

    /// Epochs with no documents are kept so indices stay contiguous.
    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.start_year, self.end_year - 1)
    }
}

/// Window geometry. `first_start` / `last_year` default to the corpus'
/// minimum and maximum document year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochLayout {
    pub window_years: i32,
    pub lag_years: i32,
    pub first_start: Option<i32>,
    pub last_year: Option<i32>,
}

impl EpochLayout {
    pub fn new(window_years: i32, lag_years: i32) -> Self {
        Self {
            window_years,
            lag_years,
            first_start: None,
            last_year: None,
        }
    }
}

pub fn slice_epochs(documents: &[Document], window_years: i32, lag_years: i32) -> Result<Vec<Epoch>> {
    slice_epochs_with(documents, &EpochLayout::new(window_years, lag_years))
}

/// Full windows only: a start `s` is kept iff `s + window <= last_year + 1`.
pub fn slice_epochs_with(documents: &[Document], layout: &EpochLayout) -> Result<Vec<Epoch>> {
    let EpochLayout {
        window_years: window,
        lag_years: lag,
        ..
    } = *layout;
    if window < 1 {
        return Err(Error::invalid(format!("window_years must be >= 1, got {window}")));
    }
    if lag < 1 || lag > window {
        return Err(Error::invalid(format!(
            "lag_years must be in [1, window_years={window}], got {lag}"
        )));
    }
    let (Some(min), Some(max)) = (
        documents.iter().map(|d| d.year).min(),
        documents.iter().map(|d| d.year).max(),
    ) else {
        return Err(Error::EmptyCorpus("no documents to slice into epochs".into()));
    };
    let first = layout.first_start.unwrap_or(min);
    let last = layout.last_year.unwrap_or(max);

    let mut epochs = Vec::new();
    let mut start = first;
    while start + window <= last + 1 {
        let end = start + window;
        let doc_ids = documents
            .iter()
            .filter(|d| start <= d.year && d.year < end)
            .map(|d| d.id.clone())
            .collect();
        epochs.push(Epoch {
            index: epochs.len(),
            start_year: start,
            end_year: end,
            doc_ids,
        });
        start += lag;
    }
    Ok(epochs)
}
