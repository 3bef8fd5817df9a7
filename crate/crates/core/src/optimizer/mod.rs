//! Adam over the global displacement field.

mod adam;
mod run;

pub use adam::{adam_step, AdamState, DEFAULT_CLIP};
pub use run::{
    csv_row, loss_csv, match_labels, prepare_objective, run_deformation, run_objective, HistoryRow, NoProgress, ProgressSink, RunConfig,
    RunResult, CSV_HEADER,
};
