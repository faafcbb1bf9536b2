use std::collections::BTreeMap;
use std::io::Write;

use super::sweep::SweepRow;
use super::table::{fmt_f64, write_table};
use crate::error::{Error, Result};
use crate::uncertainty::{stats_unchecked, RepeatStats};

pub const SUMMARY_TABLE: &str = "summary";
pub const SUMMARY_TABLE_VERSION: u32 = 1;

/// Columns a summary can be grouped by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    SweepValue,
    RepeatIndex,
    SubframeIndex,
    Order,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            Self::SweepValue => "sweep_value",
            Self::RepeatIndex => "repeat_index",
            Self::SubframeIndex => "subframe_index",
            Self::Order => "order",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            Self::SweepValue,
            Self::RepeatIndex,
            Self::SubframeIndex,
            Self::Order,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Config(format!("cannot group by `{s}`")))
    }

    fn value(self, r: &SweepRow) -> f64 {
        match self {
            Self::SweepValue => r.sweep_value,
            Self::RepeatIndex => r.repeat_index as f64,
            Self::SubframeIndex => r.subframe_index as f64,
            Self::Order => r.order as f64,
        }
    }
}

/// Metrics summarized per group.
pub const METRICS: [&str; 8] = [
    "channel_power_signal",
    "channel_power_interference",
    "channel_power_noise",
    "sinr_db",
    "evm_rms_pct",
    "normalized_evm_rms_pct",
    "mag_err_rms_pct",
    "phase_err_rms_rad",
];

fn metric_values(r: &SweepRow) -> [f64; 8] {
    let n = r.numeric();
    [n[4], n[5], n[6], n[7], n[8], n[9], n[10], n[11]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Group key values, in `group_by` order.
    pub key: Vec<f64>,
    pub n: usize,
    /// One entry per [`METRICS`] column.
    pub stats: Vec<RepeatStats>,
}

impl SummaryRow {
    pub fn metric(&self, name: &str) -> Option<&RepeatStats> {
        METRICS
            .iter()
            .position(|m| *m == name)
            .map(|i| &self.stats[i])
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Key(Vec<OrdF64>);

#[derive(PartialEq, Eq)]
struct OrdF64(u64);

impl OrdF64 {
    fn new(x: f64) -> Self {
        Self(x.to_bits())
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0)
    }
}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.get().total_cmp(&other.get())
    }
}

/// Mean, n−1 standard deviation and k = 2 expanded uncertainty of every
/// metric per group of successful rows. Groups come out sorted by key; values
/// are sorted before accumulation, so row order cannot change any bit.
pub fn summarize(rows: &[SweepRow], group_by: &[GroupKey]) -> Result<Vec<SummaryRow>> {
    let mut groups: BTreeMap<Key, Vec<[f64; 8]>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status.is_ok()) {
        let key = Key(group_by.iter().map(|k| OrdF64::new(k.value(r))).collect());
        groups.entry(key).or_default().push(metric_values(r));
    }
    if groups.is_empty() {
        return Err(Error::InsufficientData(
            "no successful rows to summarize".into(),
        ));
    }
    Ok(groups
        .into_iter()
        .map(|(key, vals)| {
            let stats = (0..METRICS.len())
                .map(|m| {
                    let mut col: Vec<f64> = vals.iter().map(|v| v[m]).collect();
                    col.sort_by(f64::total_cmp);
                    stats_unchecked(&col)
                })
                .collect();
            SummaryRow {
                key: key.0.iter().map(OrdF64::get).collect(),
                n: vals.len(),
                stats,
            }
        })
        .collect())
}

pub fn summary_header(group_by: &[GroupKey]) -> Vec<String> {
    let mut h: Vec<String> = group_by.iter().map(|k| k.name().to_string()).collect();
    h.push("n".into());
    for m in METRICS {
        for s in ["mean", "std", "expanded_k2"] {
            h.push(format!("{m}_{s}"));
        }
    }
    h
}

pub fn write_summary<W: Write>(
    out: W,
    group_by: &[GroupKey],
    summary: &[SummaryRow],
) -> Result<()> {
    let header = summary_header(group_by);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        out,
        SUMMARY_TABLE,
        SUMMARY_TABLE_VERSION,
        &header,
        summary.iter().map(|s| {
            let mut f: Vec<String> = s.key.iter().map(|&k| fmt_f64(k)).collect();
            f.push(s.n.to_string());
            for st in &s.stats {
                f.extend([fmt_f64(st.mean), fmt_f64(st.std), fmt_f64(st.expanded_k2)]);
            }
            f
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::sweep::RowStatus;

    fn row(v: f64, order: u32, evm: f64) -> SweepRow {
        SweepRow {
            sweep_value: v,
            repeat_index: 0,
            subframe_index: 0,
            order,
            status: RowStatus::Ok,
            channel_power_signal: 1.0,
            channel_power_interference: 0.1,
            channel_power_noise: 0.0,
            sinr_db: 10.0,
            evm_rms_pct: evm / 10.0,
            normalized_evm_rms_pct: evm,
            mag_err_rms_pct: 0.0,
            phase_err_rms_rad: 0.0,
        }
    }

    #[test]
    fn single_row_group_has_zero_spread() {
        let s = summarize(&[row(1.0, 4, 3.0)], &[GroupKey::SweepValue]).unwrap();
        let e = s[0].metric("normalized_evm_rms_pct").unwrap();
        assert_eq!((e.mean, e.std, s[0].n), (3.0, 0.0, 1));
    }

    #[test]
    fn identical_rows_have_zero_expanded_uncertainty() {
        let s = summarize(&[row(1.0, 4, 3.0); 5], &[GroupKey::Order]).unwrap();
        assert!(s[0].stats.iter().all(|st| st.expanded_k2 == 0.0));
    }

    #[test]
    fn groups_are_split_and_sorted() {
        let rows = [
            row(2.0, 16, 1.0),
            row(1.0, 4, 2.0),
            row(2.0, 4, 3.0),
            row(1.0, 4, 4.0),
        ];
        let s = summarize(&rows, &[GroupKey::SweepValue, GroupKey::Order]).unwrap();
        let keys: Vec<Vec<f64>> = s.iter().map(|r| r.key.clone()).collect();
        assert_eq!(keys, vec![vec![1.0, 4.0], vec![2.0, 4.0], vec![2.0, 16.0]]);
        assert_eq!(s[0].metric("normalized_evm_rms_pct").unwrap().mean, 3.0);
    }

    #[test]
    fn skipped_rows_are_ignored() {
        let mut bad = row(1.0, 4, f64::NAN);
        bad.status = RowStatus::SkippedInfeasible;
        assert!(matches!(
            summarize(&[bad], &[]),
            Err(Error::InsufficientData(_))
        ));
        let s = summarize(&[bad, row(1.0, 4, 2.0)], &[]).unwrap();
        assert_eq!(s[0].n, 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            summarize(&[], &[GroupKey::Order]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn unknown_group_key() {
        assert!(GroupKey::parse("colour").is_err());
        assert_eq!(GroupKey::parse("order").unwrap(), GroupKey::Order);
    }
}
