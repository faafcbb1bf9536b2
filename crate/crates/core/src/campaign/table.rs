//! Versioned CSV tables.
//!
//! Every table starts with a `# otalink <kind> v<N>` line followed by a fixed
//! header row. Floats are written in their shortest round-trip form, so
//! emit → ingest reproduces every bit.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::sweep::{RowStatus, SweepRow};
use crate::error::{Error, Result};

pub const SWEEP_TABLE: &str = "sweep_rows";
pub const SWEEP_TABLE_VERSION: u32 = 1;

pub const SWEEP_COLUMNS: [&str; 13] = [
    "sweep_value",
    "repeat_index",
    "subframe_index",
    "order",
    "status",
    "channel_power_signal",
    "channel_power_interference",
    "channel_power_noise",
    "sinr_db",
    "evm_rms_pct",
    "normalized_evm_rms_pct",
    "mag_err_rms_pct",
    "phase_err_rms_rad",
];

pub fn version_line(kind: &str, version: u32) -> String {
    format!("# otalink {kind} v{version}")
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes a versioned table of pre-formatted fields.
pub fn write_table<W: Write>(
    out: W,
    kind: &str,
    version: u32,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", version_line(kind, version))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_file(
    path: &Path,
    kind: &str,
    version: u32,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    write_table(File::create(path)?, kind, version, header, rows)
}

fn sweep_fields(r: &SweepRow) -> Vec<String> {
    let n = r.numeric();
    let mut f = Vec::with_capacity(SWEEP_COLUMNS.len());
    f.push(fmt_f64(r.sweep_value));
    f.push(r.repeat_index.to_string());
    f.push(r.subframe_index.to_string());
    f.push(r.order.to_string());
    f.push(r.status.as_str().to_string());
    f.extend(n[4..].iter().map(|&x| fmt_f64(x)));
    f
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_table(
        out,
        SWEEP_TABLE,
        SWEEP_TABLE_VERSION,
        &SWEEP_COLUMNS,
        rows.iter().map(sweep_fields),
    )
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_sweep_csv(File::create(path)?, rows)
}

pub fn ingest_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_sweep_csv(File::open(path)?)
}

/// A parsed table: header names and raw records.
pub struct RawTable {
    index: HashMap<String, usize>,
    pub records: Vec<csv::StringRecord>,
}

impl RawTable {
    /// Reads a CSV with a header row; `#` lines are comments.
    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(input);
        let index = rdr
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        let records = rdr.records().collect::<std::result::Result<_, _>>()?;
        Ok(Self { index, records })
    }

    pub fn has(&self, column: &str) -> bool {
        self.index.contains_key(column)
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::Format {
            column: name.to_string(),
            message: "column is missing".into(),
        })
    }

    pub fn parse<T: std::str::FromStr>(&self, row: usize, column: usize, name: &str) -> Result<T> {
        let text = self.records[row].get(column).unwrap_or("");
        text.parse().map_err(|_| Error::Format {
            column: name.to_string(),
            message: format!("cannot parse `{text}` on data row {}", row + 1),
        })
    }
}

fn check_version<R: BufRead>(input: &mut R, kind: &str, version: u32) -> Result<()> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let expected = version_line(kind, version);
    if first.trim_end() != expected {
        return Err(Error::Format {
            column: "#version".into(),
            message: format!("expected `{expected}`, found `{}`", first.trim_end()),
        });
    }
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut input = BufReader::new(input);
    check_version(&mut input, SWEEP_TABLE, SWEEP_TABLE_VERSION)?;
    let t = RawTable::read(input)?;
    let idx: Vec<usize> = SWEEP_COLUMNS
        .iter()
        .map(|c| t.column(c))
        .collect::<Result<_>>()?;
    let mut extra: Vec<&str> = t.columns().filter(|c| !SWEEP_COLUMNS.contains(c)).collect();
    extra.sort_unstable();
    if let Some(c) = extra.first() {
        return Err(Error::Format {
            column: c.to_string(),
            message: "unexpected column".into(),
        });
    }
    (0..t.records.len())
        .map(|i| {
            let f = |k: usize| t.parse::<f64>(i, idx[k], SWEEP_COLUMNS[k]);
            let u = |k: usize| t.parse::<u32>(i, idx[k], SWEEP_COLUMNS[k]);
            let status_text = t.records[i].get(idx[4]).unwrap_or("");
            let status = RowStatus::parse(status_text).ok_or_else(|| Error::Format {
                column: "status".into(),
                message: format!("unknown status `{status_text}` on data row {}", i + 1),
            })?;
            Ok(SweepRow {
                sweep_value: f(0)?,
                repeat_index: u(1)?,
                subframe_index: u(2)?,
                order: u(3)?,
                status,
                channel_power_signal: f(5)?,
                channel_power_interference: f(6)?,
                channel_power_noise: f(7)?,
                sinr_db: f(8)?,
                evm_rms_pct: f(9)?,
                normalized_evm_rms_pct: f(10)?,
                mag_err_rms_pct: f(11)?,
                phase_err_rms_rad: f(12)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> SweepRow {
        SweepRow {
            sweep_value: v,
            repeat_index: 3,
            subframe_index: 1,
            order: 64,
            status: RowStatus::Ok,
            channel_power_signal: 1.0 / 3.0,
            channel_power_interference: 1e-300,
            channel_power_noise: 0.0,
            sinr_db: -0.1,
            evm_rms_pct: 2.5e-7,
            normalized_evm_rms_pct: 12345.678901234567,
            mag_err_rms_pct: f64::MIN_POSITIVE,
            phase_err_rms_rad: std::f64::consts::PI,
        }
    }

    #[test]
    fn shortest_form_round_trips() {
        for x in [
            0.1,
            1.0 / 3.0,
            1e-300,
            5e-324,
            1e300,
            -2.5e-7,
            123456789.123,
            0.0,
            -0.0,
            f64::INFINITY,
        ] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
        assert_eq!(fmt_f64(99.25), "99.25");
        assert!(fmt_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn round_trip_in_memory() {
        let mut rows = vec![row(30.0), row(-0.5)];
        rows[1].status = RowStatus::SkippedInfeasible;
        rows[1].sinr_db = f64::NAN;
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let back = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back.iter().zip(&rows).all(|(a, b)| a.same_bits(b)));
    }

    #[test]
    fn missing_column_is_named() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[row(1.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for broken in [
            text.replace(",sinr_db,", ",sinr,"),
            text.replace(",sinr_db,", ","),
        ] {
            match read_sweep_csv(broken.as_bytes()) {
                Err(Error::Format { column, .. }) => assert_eq!(column, "sinr_db"),
                other => panic!("{other:?}"),
            }
        }
        let extra = text.replace("phase_err_rms_rad", "phase_err_rms_rad,comment");
        assert!(
            matches!(read_sweep_csv(extra.as_bytes()), Err(Error::Format { column, .. }) if column == "comment")
        );
    }

    #[test]
    fn version_is_checked() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[row(1.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(" v1", " v9");
        assert!(
            matches!(read_sweep_csv(text.as_bytes()), Err(Error::Format { column, .. }) if column == "#version")
        );
    }

    #[test]
    fn bad_value_names_its_column() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[row(1.0)]).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace(",64,", ",sixty-four,");
        assert!(
            matches!(read_sweep_csv(text.as_bytes()), Err(Error::Format { column, .. }) if column == "order")
        );
    }
}
