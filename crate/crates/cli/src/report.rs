//! Artifact serialization: decimal formatting, CSV assembly, checksums, and
//! the bundle manifest. All output is deterministic: same inputs, same bytes.

use crate::{CliError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Formats to `digits` significant digits, round half to even (inherited
/// from the standard float formatter), expanded to plain decimal notation
/// for the exponent range that covers every artifact value. Exact zero
/// prints as "0".
pub fn sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = match sci.split_once('e') {
        Some(pair) => pair,
        None => return sci,
    };
    let exp: i32 = exp.parse().expect("exponent from float formatter");
    if !(-9..=15).contains(&exp) {
        return sci;
    }
    let neg = mantissa.starts_with('-');
    let digits_only: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let d = digits_only.len() as i32;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits_only);
    } else if exp + 1 >= d {
        out.push_str(&digits_only);
        for _ in 0..(exp + 1 - d) {
            out.push('0');
        }
    } else {
        let cut = (exp + 1) as usize;
        out.push_str(&digits_only[..cut]);
        out.push('.');
        out.push_str(&digits_only[cut..]);
    }
    out
}

/// Default artifact precision.
pub fn sig6(v: f64) -> String {
    sig(v, 6)
}

/// A value cell with an optional significance star appended.
pub fn starred(v: f64, star: bool) -> String {
    let mut s = sig6(v);
    if star {
        s.push('*');
    }
    s
}

pub fn opt(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}

/// One named CSV artifact.
#[derive(Debug, Clone)]
pub struct TableArtifact {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TableArtifact {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        TableArtifact {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.columns).expect("header");
        for row in &self.rows {
            w.write_record(row).expect("row");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
    }

    /// Column index by name; panics on unknown name (programmer error).
    pub fn column(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column {name} in {}", self.name))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub generator: Generator,
    pub seed: u64,
    pub data: DataRecord,
    pub resolved: ResolvedSettings,
    pub stages: Vec<StageRecord>,
    pub artifacts: Vec<ArtifactRecord>,
    /// The configuration as parsed (defaults filled in).
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Generator {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataRecord {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
    pub start: String,
    pub end: String,
}

/// Settings the pipeline resolved at run time (auto selections, chosen
/// specifications). Everything needed to re-run with pinned values.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResolvedSettings {
    pub causality_k: Option<usize>,
    pub causality_d_max: Option<usize>,
    pub ardl_spec: Option<String>,
    pub ardl_reverse_spec: Option<String>,
    pub bounds_source: Option<String>,
    pub bounds_note: Option<String>,
    pub hac_bandwidth: Option<usize>,
    pub irf_method: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits_across_magnitudes() {
        assert_eq!(sig6(-305.874_9), "-305.875");
        assert_eq!(sig6(1.999_193), "1.99919");
        assert_eq!(sig6(0.025_310), "0.0253100");
        assert_eq!(sig6(1637.147), "1637.15");
        assert_eq!(sig6(0.9432), "0.943200");
        assert_eq!(sig6(-0.0567), "-0.0567000");
        assert_eq!(sig6(13.53), "13.5300");
        assert_eq!(sig6(123456789.0), "123457000");
        assert_eq!(sig6(0.000001234567), "0.00000123457");
    }

    #[test]
    fn zero_and_specials() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(f64::NAN), "nan");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn ties_round_to_even() {
        // 1.25 and 1.75 are exactly representable; the mantissa tie goes to
        // the even digit in both directions.
        assert_eq!(sig(1.25, 2), "1.2");
        assert_eq!(sig(1.75, 2), "1.8");
        assert_eq!(sig(-1.25, 2), "-1.2");
        assert_eq!(sig(2.5, 1), "2");
        assert_eq!(sig(3.5, 1), "4");
    }

    #[test]
    fn extreme_exponents_stay_scientific() {
        assert_eq!(sig6(1.0e30), "1.00000e30");
        assert_eq!(sig6(1.0e-30), "1.00000e-30");
    }

    #[test]
    fn rounding_can_bump_the_exponent() {
        // 999999.5 rounds up to 1.00000e6, which must expand cleanly.
        assert_eq!(sig6(999_999.5), "1000000");
        assert_eq!(sig6(0.099_999_99), "0.100000");
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let mut t = TableArtifact::new("x.csv", &["a", "b"]);
        t.push(vec!["ARDL(1,7)".into(), sig6(1.0)]);
        let csv = t.to_csv();
        assert!(csv.contains("\"ARDL(1,7)\""), "{csv}");
    }

    #[test]
    fn starred_appends_marker() {
        assert_eq!(starred(-2.42, false), "-2.42000");
        assert_eq!(starred(0.26, true), "0.260000*");
    }

    #[test]
    fn checksum_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
