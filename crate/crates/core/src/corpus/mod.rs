//! Corpus ingestion: raw records, text preprocessing, the energy-truncated
//! vocabulary and overlapping epoch windows.

mod epoch;
pub mod fetch;
mod record;
mod text;
mod vocab;

pub use epoch::{slice_epochs, slice_epochs_with, Epoch, EpochLayout};
pub use record::{filter_records, read_archive, write_archive, DropReason, FilterReport, RawRecord, YEAR_RANGE};
pub use text::{
    encode, load_lemma_lexicon, load_stopwords, parse_lemma_lexicon, parse_stopwords, preprocess, tokenize, Document,
    PreprocessOptions,
};
pub use vocab::{build_vocabulary, Vocabulary};
