//! Configuration parsing and result files. Formats are described in
//! `docs/FORMATS.md`.

mod config;
mod output;
mod plots;

pub use config::{parse_config, ChainConfig, RkConfig, RunConfig, CONFIG_SCHEMA_VERSION};
pub use output::{
    fmt_f64, read_gs_text, read_json, read_sweep_csv, sweep_rows, validate_record, write_gs_text, write_json,
    write_sweep_csv, Checkpoint, GsText, ResultRecord, SweepRow, CODE_VERSION, GS_HEADER, RECORD_SCHEMA,
    RECORD_SCHEMA_VERSION, SWEEP_CSV_HEADER,
};
pub use plots::{emit_cut_files, emit_heatmaps, emit_rk_line, RkLinePoint};
