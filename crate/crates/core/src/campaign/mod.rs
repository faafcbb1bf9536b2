//! Measurement campaigns as simulations: sweeps with repeats, summaries,
//! gradient fits, uncertainty budgets and CSV tables.
//!
//! Powers given in dBm refer to the simulated receive plane; IQ power
//! `E|x|²` is read as watts into the reference impedance.

mod config;
mod report;
mod summary;
mod sweep;
mod table;

pub use config::{ChannelModel, InterfererPolicy, SweepConfig, SweepVariable, UncertaintyConfig};
pub use report::{
    budget_from_log, fit_by_order, gradient_spread, point_budgets, write_fits, write_log_budgets,
    write_plot_data, FitMetric, LogBudget, OrderFit, PointBudget, BUDGET_PLOT, EVM_PLOT,
    POWER_PLOT,
};
pub use summary::{summarize, write_summary, GroupKey, SummaryRow, METRICS};
pub use sweep::{link_config, run_sweep, unit_seed, RowStatus, SweepOutcome, SweepRow};
pub use table::{
    emit_csv, fmt_f64, ingest_csv, read_sweep_csv, write_sweep_csv, RawTable, SWEEP_COLUMNS,
    SWEEP_TABLE_VERSION,
};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}
