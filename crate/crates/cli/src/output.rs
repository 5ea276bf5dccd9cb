//! CSV and raw snapshot writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fracac::diagnostics::fmt_f64;
use fracac::{Field, GridSpec};

use crate::config::{parse_list, parse_scalar};
use crate::error::{CliError, CliResult};

/// Per-step scalar diagnostic; row 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub rows: Vec<(usize, f64, f64)>,
}

impl TimeSeries {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.2).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,time,value\n");
        for &(step, time, value) in &self.rows {
            let _ = writeln!(out, "{step},{},{}", fmt_f64(time), fmt_f64(value));
        }
        out
    }
}

pub fn write_text(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Sidecar description of a raw field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub a: f64,
    pub b: f64,
    pub h: Vec<f64>,
    pub time: f64,
}

impl SnapshotHeader {
    pub fn new(grid: &GridSpec, time: f64) -> Self {
        Self {
            dim: grid.dim(),
            shape: grid.interior(),
            a: grid.a(),
            b: grid.b(),
            h: grid.h().to_vec(),
            time,
        }
    }

    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        format!(
            "dim = {}\nshape = {}\na = {}\nb = {}\nh = {}\ntime = {}\n",
            self.dim,
            join(self.shape.iter().map(|n| n.to_string()).collect()),
            fmt_f64(self.a),
            fmt_f64(self.b),
            join(self.h.iter().map(|&h| fmt_f64(h)).collect()),
            fmt_f64(self.time),
        )
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut dim = None;
        let mut shape = None;
        let mut a = None;
        let mut b = None;
        let mut h = None;
        let mut time = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("bad snapshot header line '{line}'")))?;
            match k.trim() {
                "dim" => dim = Some(parse_scalar(v)?),
                "shape" => shape = Some(parse_list(v)?),
                "a" => a = Some(parse_scalar(v)?),
                "b" => b = Some(parse_scalar(v)?),
                "h" => h = Some(parse_list(v)?),
                "time" => time = Some(parse_scalar(v)?),
                other => return Err(CliError::Config(format!("unknown snapshot header key '{other}'"))),
            }
        }
        let missing = |k: &str| CliError::Config(format!("snapshot header lacks '{k}'"));
        Ok(Self {
            dim: dim.ok_or_else(|| missing("dim"))?,
            shape: shape.ok_or_else(|| missing("shape"))?,
            a: a.ok_or_else(|| missing("a"))?,
            b: b.ok_or_else(|| missing("b"))?,
            h: h.ok_or_else(|| missing("h"))?,
            time: time.ok_or_else(|| missing("time"))?,
        })
    }
}

/// Writes `<stem>.bin` (little-endian f64, first axis fastest) and `<stem>.txt`.
pub fn write_snapshot(dir: &Path, stem: &str, field: &Field, header: &SnapshotHeader) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.bin"));
    let bytes: Vec<u8> = field.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&bin, bytes)?;
    fs::write(dir.join(format!("{stem}.txt")), header.to_text())?;
    Ok(bin)
}

pub fn read_snapshot(bin: &Path) -> CliResult<(SnapshotHeader, Field)> {
    let header = SnapshotHeader::parse(&fs::read_to_string(bin.with_extension("txt"))?)?;
    let bytes = fs::read(bin)?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Config(format!("{} is not a whole number of f64", bin.display())));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = Field::from_vec(&header.shape, data)?;
    Ok((header, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_csv() {
        let s = TimeSeries {
            rows: vec![(0, 0.0, 0.5), (1, 0.1, 0.25)],
        };
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,time,value");
        let cells: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(cells[0], "1");
        assert_eq!(cells[1].parse::<f64>().unwrap(), 0.1);
        assert_eq!(cells[2].parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn snapshot_roundtrip() {
        let dir = std::env::temp_dir().join(format!("fracac-snap-{}", std::process::id()));
        let grid = GridSpec::new(-1.0, 1.0, vec![5, 7]).unwrap();
        let field = Field::from_fn(&grid, |x| x[0] * 3.0 + x[1] / 7.0);
        let header = SnapshotHeader::new(&grid, 0.3);
        let bin = write_snapshot(&dir, "t", &field, &header).unwrap();
        let (h2, f2) = read_snapshot(&bin).unwrap();
        assert_eq!(h2, header);
        assert_eq!(f2, field);
        assert_eq!(fs::metadata(&bin).unwrap().len(), 8 * 24);
        fs::remove_dir_all(dir).unwrap();
    }
}
