use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::engine::ScanResult;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapQuantity {
    Phase,
    Field,
    Truth,
    Discrepancy,
    Flag,
}

impl MapQuantity {
    pub fn name(self) -> &'static str {
        match self {
            MapQuantity::Phase => "phase",
            MapQuantity::Field => "field",
            MapQuantity::Truth => "truth",
            MapQuantity::Discrepancy => "discrepancy",
            MapQuantity::Flag => "flag",
        }
    }
}

impl FromStr for MapQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "phase" => MapQuantity::Phase,
            "field" => MapQuantity::Field,
            "truth" => MapQuantity::Truth,
            "discrepancy" => MapQuantity::Discrepancy,
            "flag" => MapQuantity::Flag,
            _ => return Err(invalid("quantity", format!("unknown map quantity `{s}`"))),
        })
    }
}

/// Row-major (y, x) map.
#[derive(Clone, Debug, PartialEq)]
pub struct Map2D {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

pub fn render_map(r: &ScanResult, q: MapQuantity) -> Map2D {
    let values = match q {
        MapQuantity::Phase => r.phase.clone(),
        MapQuantity::Field => r.field.clone(),
        MapQuantity::Truth => r.truth.clone(),
        MapQuantity::Discrepancy => r.discrepancy.clone(),
        MapQuantity::Flag => r.flagged.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    };
    Map2D {
        nx: r.nx(),
        ny: r.ny(),
        values,
    }
}

/// `key=value` description of the map layout followed by the scan metadata
/// and any warnings.
pub fn scan_sidecar(r: &ScanResult, q: MapQuantity) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format=f64-le-row-major-x-fastest");
    let _ = writeln!(s, "quantity={}", q.name());
    let _ = writeln!(s, "nx={}", r.nx());
    let _ = writeln!(s, "ny={}", r.ny());
    let _ = writeln!(s, "x_start={}", r.x[0]);
    let _ = writeln!(s, "x_step={}", r.x_step);
    let _ = writeln!(s, "y_start={}", r.y[0]);
    let _ = writeln!(s, "y_step={}", r.y_step);
    for (k, v) in &r.metadata {
        let _ = writeln!(s, "{k}={v}");
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning={w}");
    }
    s
}

/// Tab-separated line-scan table (first row of a raster).
pub fn scan_table(r: &ScanResult) -> String {
    let mut s = String::from("x\tphase\tfield\ttruth\tdiscrepancy\tflag\n");
    for i in 0..r.nx() {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.x[i],
            r.phase[i],
            r.field[i],
            r.truth[i],
            r.discrepancy[i],
            u8::from(r.flagged[i])
        );
    }
    s
}

/// Writes `<stem>.bin` and `<stem>.txt` (sidecar plus `extra`), and for line
/// scans `<stem>.tsv`. Returns the paths written.
pub fn write_scan(r: &ScanResult, q: MapQuantity, dir: &Path, stem: &str, extra: &str) -> Result<Vec<PathBuf>> {
    let map = render_map(r, q);
    let mut bytes = Vec::with_capacity(map.values.len() * 8);
    for v in &map.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let bin = dir.join(format!("{stem}.bin"));
    let txt = dir.join(format!("{stem}.txt"));
    fs::write(&bin, bytes)?;
    fs::write(&txt, scan_sidecar(r, q) + extra)?;
    let mut out = vec![bin, txt];
    if r.ny() == 1 {
        let tsv = dir.join(format!("{stem}.tsv"));
        fs::write(&tsv, scan_table(r))?;
        out.push(tsv);
    }
    Ok(out)
}
