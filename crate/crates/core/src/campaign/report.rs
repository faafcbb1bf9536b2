//! Gradient fits, channel-power budgets and the plot-data tables.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::config::UncertaintyConfig;
use super::summary::{summarize, GroupKey, SummaryRow};
use super::sweep::SweepRow;
use super::table::{fmt_f64, write_table, write_table_file, RawTable};
use super::watts_to_dbm;
use crate::error::{Error, Result};
use crate::metrics::{fit_gradient, GradientFit};
use crate::uncertainty::{
    channel_power_uncertainty_with, repeat_stats, stats_unchecked, traceable_sinr_with,
    Combination, InstrumentTerms, RepeatStats, UncertaintyBudget,
};

pub const EVM_PLOT: &str = "evm_vs_inv_sqrt_sinr";
pub const POWER_PLOT: &str = "channel_power_vs_sweep";
pub const BUDGET_PLOT: &str = "budget_table";
pub const FIT_TABLE: &str = "gradient_fit";
pub const BUDGET_LOG_TABLE: &str = "repeat_log_budget";

/// EVM column a fit is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMetric {
    #[default]
    NormalizedEvm,
    EvmRms,
}

impl FitMetric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normalized_evm_rms_pct" => Ok(Self::NormalizedEvm),
            "evm_rms_pct" => Ok(Self::EvmRms),
            _ => Err(Error::Config(format!("cannot fit `{s}`"))),
        }
    }

    fn value(self, r: &SweepRow) -> f64 {
        match self {
            Self::NormalizedEvm => r.normalized_evm_rms_pct,
            Self::EvmRms => r.evm_rms_pct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub order: u32,
    pub fit: GradientFit,
}

fn sinr_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `EVM = A/√SINR` per modulation order over every successful row.
pub fn fit_by_order(
    rows: &[SweepRow],
    metric: FitMetric,
    sinr_floor_db: f64,
) -> Result<Vec<OrderFit>> {
    let mut by_order: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status.is_ok()) {
        by_order
            .entry(r.order)
            .or_default()
            .push((sinr_linear(r.sinr_db), metric.value(r)));
    }
    if by_order.is_empty() {
        return Err(Error::InsufficientData("no successful rows to fit".into()));
    }
    by_order
        .into_iter()
        .map(|(order, pts)| {
            Ok(OrderFit {
                order,
                fit: fit_gradient(&pts, sinr_floor_db)?,
            })
        })
        .collect()
}

/// Relative spread `(max − min)/mean` of the fitted gradients.
pub fn gradient_spread(fits: &[OrderFit]) -> f64 {
    let a: Vec<f64> = fits.iter().map(|f| f.fit.a).collect();
    let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / (a.iter().sum::<f64>() / a.len() as f64)
}

pub fn write_fits<W: Write>(out: W, fits: &[OrderFit]) -> Result<()> {
    write_table(
        out,
        FIT_TABLE,
        1,
        &["order", "a", "r_squared", "n_points", "sinr_floor_db"],
        fits.iter().map(|f| {
            vec![
                f.order.to_string(),
                fmt_f64(f.fit.a),
                fmt_f64(f.fit.r_squared),
                f.fit.n_points.to_string(),
                fmt_f64(f.fit.sinr_floor_db),
            ]
        }),
    )
}

/// Channel-power statistics and budgets of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBudget {
    pub sweep_value: f64,
    pub signal: RepeatStats,
    pub interference: RepeatStats,
    pub noise_mean: f64,
    pub signal_budget: Option<UncertaintyBudget>,
    pub interference_budget: Option<UncertaintyBudget>,
    pub sinr_db: f64,
    pub sinr_uncertainty_db: f64,
}

/// Budgets per sweep point, pooling successful rows of every order and
/// sub-frame at that point.
pub fn point_budgets(rows: &[SweepRow], unc: &UncertaintyConfig) -> Result<Vec<PointBudget>> {
    let mut by_point: BTreeMap<u64, (f64, Vec<[f64; 3]>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status.is_ok()) {
        let key = r.sweep_value.to_bits();
        by_point
            .entry(key)
            .or_insert((r.sweep_value, Vec::new()))
            .1
            .push([
                r.channel_power_signal,
                r.channel_power_interference,
                r.channel_power_noise,
            ]);
    }
    let mut out: Vec<PointBudget> = by_point
        .into_values()
        .map(|(v, vals)| {
            let col = |i: usize| {
                let mut c: Vec<f64> = vals.iter().map(|x| x[i]).collect();
                c.sort_by(f64::total_cmp);
                stats_unchecked(&c)
            };
            let (signal, interference, noise) = (col(0), col(1), col(2));
            let budget = |s: &RepeatStats| {
                channel_power_uncertainty_with(s, &unc.terms, unc.combination).ok()
            };
            let signal_budget = budget(&signal);
            let interference_budget = budget(&interference);
            let (sinr_db, sinr_uncertainty_db) = match (&signal_budget, &interference_budget) {
                (Some(sb), Some(ib)) => {
                    traceable_sinr_with(&signal, &interference, noise.mean, sb, ib, unc.combination)
                        .map_or((f64::NAN, f64::NAN), |(s, u)| (s.db, u))
                }
                _ => (f64::NAN, f64::NAN),
            };
            PointBudget {
                sweep_value: v,
                signal,
                interference,
                noise_mean: noise.mean,
                signal_budget,
                interference_budget,
                sinr_db,
                sinr_uncertainty_db,
            }
        })
        .collect();
    out.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value));
    if out.is_empty() {
        return Err(Error::InsufficientData(
            "no successful rows for a budget".into(),
        ));
    }
    Ok(out)
}

fn combination_name(c: Combination) -> &'static str {
    match c {
        Combination::Sum => "sum",
        Combination::Rss => "rss",
    }
}

fn budget_fields(b: &UncertaintyBudget) -> Vec<String> {
    let mut f = vec![fmt_f64(b.repeatability_db)];
    f.extend(b.terms.as_array().iter().map(|&t| fmt_f64(t)));
    f.push(combination_name(b.combination).into());
    f.push(fmt_f64(b.total_db));
    f
}

fn budget_header(lead: &[&'static str]) -> Vec<&'static str> {
    let mut h = lead.to_vec();
    h.extend(["n", "mean_w", "std_w", "expanded_k2_w", "repeatability_db"]);
    h.extend(InstrumentTerms::names());
    h.extend(["combination", "total_db"]);
    h
}

/// Writes the three plot-data tables into `dir` and returns their paths.
pub fn write_plot_data(
    dir: &Path,
    rows: &[SweepRow],
    unc: &UncertaintyConfig,
    metric: FitMetric,
    sinr_floor_db: f64,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let fits: BTreeMap<u32, GradientFit> = {
        let mut by_order: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.status.is_ok()) {
            by_order
                .entry(r.order)
                .or_default()
                .push((sinr_linear(r.sinr_db), metric.value(r)));
        }
        by_order
            .into_iter()
            .filter_map(|(o, p)| fit_gradient(&p, sinr_floor_db).ok().map(|f| (o, f)))
            .collect()
    };

    // Per-point means, with 1/√SINR averaged row by row.
    let summary: Vec<SummaryRow> = summarize(rows, &[GroupKey::Order, GroupKey::SweepValue])?;
    let mut inv: BTreeMap<(u32, u64), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status.is_ok()) {
        inv.entry((r.order, r.sweep_value.to_bits()))
            .or_default()
            .push(sinr_linear(r.sinr_db).sqrt().recip());
    }
    let evm_name = match metric {
        FitMetric::NormalizedEvm => "normalized_evm_rms_pct",
        FitMetric::EvmRms => "evm_rms_pct",
    };
    let evm_path = dir.join(format!("{EVM_PLOT}.csv"));
    write_table_file(
        &evm_path,
        EVM_PLOT,
        1,
        &[
            "order",
            "sweep_value",
            "n",
            "sinr_db_mean",
            "inv_sqrt_sinr_mean",
            "evm_mean_pct",
            "evm_std_pct",
            "evm_expanded_k2_pct",
            "fit_a",
            "fit_r_squared",
            "fit_evm_pct",
        ],
        summary.iter().map(|s| {
            let order = s.key[0] as u32;
            let mut x = inv
                .get(&(order, s.key[1].to_bits()))
                .cloned()
                .unwrap_or_default();
            x.sort_by(f64::total_cmp);
            let x = stats_unchecked(&x).mean;
            let e = s.metric(evm_name).expect("summarized metric");
            let (a, r2) = fits
                .get(&order)
                .map_or((f64::NAN, f64::NAN), |f| (f.a, f.r_squared));
            vec![
                order.to_string(),
                fmt_f64(s.key[1]),
                s.n.to_string(),
                fmt_f64(s.metric("sinr_db").expect("summarized metric").mean),
                fmt_f64(x),
                fmt_f64(e.mean),
                fmt_f64(e.std),
                fmt_f64(e.expanded_k2),
                fmt_f64(a),
                fmt_f64(r2),
                fmt_f64(a * x),
            ]
        }),
    )?;

    let budgets = point_budgets(rows, unc)?;
    let power_path = dir.join(format!("{POWER_PLOT}.csv"));
    let mut header: Vec<String> = vec!["sweep_value".into(), "n".into()];
    for q in ["signal", "interference"] {
        for s in ["mean_w", "std_w", "expanded_k2_w", "mean_dbm"] {
            header.push(format!("{q}_{s}"));
        }
    }
    header.push("noise_mean_w".into());
    write_table_file(
        &power_path,
        POWER_PLOT,
        1,
        &header.iter().map(String::as_str).collect::<Vec<_>>(),
        budgets.iter().map(|b| {
            let mut f = vec![fmt_f64(b.sweep_value), b.signal.n.to_string()];
            for s in [&b.signal, &b.interference] {
                f.extend([
                    fmt_f64(s.mean),
                    fmt_f64(s.std),
                    fmt_f64(s.expanded_k2),
                    fmt_f64(watts_to_dbm(s.mean)),
                ]);
            }
            f.push(fmt_f64(b.noise_mean));
            f
        }),
    )?;

    let budget_path = dir.join(format!("{BUDGET_PLOT}.csv"));
    let mut header = budget_header(&["sweep_value", "quantity"]);
    header.extend(["sinr_db", "sinr_uncertainty_db"]);
    let mut lines = Vec::new();
    for b in &budgets {
        for (q, s, bud) in [
            ("signal", &b.signal, &b.signal_budget),
            ("interference", &b.interference, &b.interference_budget),
        ] {
            if let Some(bud) = bud {
                let mut f = vec![fmt_f64(b.sweep_value), q.to_string(), s.n.to_string()];
                f.extend([fmt_f64(s.mean), fmt_f64(s.std), fmt_f64(s.expanded_k2)]);
                f.extend(budget_fields(bud));
                f.extend([fmt_f64(b.sinr_db), fmt_f64(b.sinr_uncertainty_db)]);
                lines.push(f);
            }
        }
    }
    write_table_file(&budget_path, BUDGET_PLOT, 1, &header, lines)?;
    Ok(vec![evm_path, power_path, budget_path])
}

/// Budget of one group of repeated channel-power readings.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBudget {
    pub group: String,
    pub stats: RepeatStats,
    pub budget: UncertaintyBudget,
}

/// Budgets from a repeat log: a CSV with a `channel_power` column (linear)
/// and an optional `group` column.
pub fn budget_from_log<R: Read>(
    input: R,
    terms: &InstrumentTerms,
    combination: Combination,
) -> Result<Vec<LogBudget>> {
    let t = RawTable::read(input)?;
    let p = t.column("channel_power")?;
    let g = t.has("group").then(|| t.column("group")).transpose()?;
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for i in 0..t.records.len() {
        let name = g.map_or(String::new(), |g| {
            t.records[i].get(g).unwrap_or("").to_string()
        });
        groups
            .entry(name)
            .or_default()
            .push(t.parse(i, p, "channel_power")?);
    }
    if groups.is_empty() {
        return Err(Error::InsufficientData("repeat log has no readings".into()));
    }
    groups
        .into_iter()
        .map(|(group, vals)| {
            let stats = repeat_stats(&vals)?;
            let budget = channel_power_uncertainty_with(&stats, terms, combination)?;
            Ok(LogBudget {
                group,
                stats,
                budget,
            })
        })
        .collect()
}

pub fn write_log_budgets<W: Write>(out: W, budgets: &[LogBudget]) -> Result<()> {
    write_table(
        out,
        BUDGET_LOG_TABLE,
        1,
        &budget_header(&["group"]),
        budgets.iter().map(|b| {
            let mut f = vec![b.group.clone(), b.stats.n.to_string()];
            f.extend([
                fmt_f64(b.stats.mean),
                fmt_f64(b.stats.std),
                fmt_f64(b.stats.expanded_k2),
            ]);
            f.extend(budget_fields(&b.budget));
            f
        }),
    )
}
