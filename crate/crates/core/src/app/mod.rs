//! Configuration, the staged pipeline over a run directory, and the
//! queries the command line exposes.

mod config;
mod io;
mod pipeline;
mod query;

pub use config::{RunConfig, CONFIG_VERSION};
pub use io::{sha256_file, write_atomic};
pub use pipeline::{
    layout, load_documents, load_epochs, load_run_topics, load_topics, load_vocabulary, run_pipeline, Manifest, Stage,
    StageOutcome, StageRecord, MANIFEST,
};
pub use query::{events_report, find_topic_report, run_report, topics_report, trace_export, Run};
