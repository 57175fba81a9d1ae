//! Snapshot download: fetch a CSV from a URL, refuse non-delimited content
//! (HTML error pages and portals), and report the checksum of what was
//! written. Never overwrites an existing file, so a bundled snapshot cannot
//! be clobbered by a refetch.

use crate::report::sha256_hex;
use crate::{CliError, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct FetchReport {
    pub sha256: String,
    pub bytes: usize,
    pub lines: usize,
}

/// Validates that a payload looks like delimited text: decodes as UTF-8,
/// does not open with markup, and the first non-empty line contains a
/// field delimiter.
pub fn check_delimited(bytes: &[u8]) -> Result<()> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| CliError::SchemaError("payload is not UTF-8 text".into()))?;
    let head = text.trim_start();
    if head.is_empty() {
        return Err(CliError::SchemaError("payload is empty".into()));
    }
    let lowered = head[..head.len().min(256)].to_ascii_lowercase();
    if lowered.starts_with('<') || lowered.contains("<html") || lowered.contains("<!doctype") {
        return Err(CliError::SchemaError(
            "payload starts with markup, expected delimited text".into(),
        ));
    }
    let first_line = head.lines().next().unwrap_or_default();
    if !first_line.contains(',') && !first_line.contains(';') && !first_line.contains('\t') {
        return Err(CliError::SchemaError(format!(
            "first line has no field delimiter: {:?}",
            &first_line[..first_line.len().min(80)]
        )));
    }
    Ok(())
}

pub fn write_checked(bytes: &[u8], out: &Path) -> Result<FetchReport> {
    check_delimited(bytes)?;
    if out.exists() {
        return Err(CliError::Fetch(format!(
            "refusing to overwrite existing file {}",
            out.display()
        )));
    }
    crate::report::write_file(out, bytes)?;
    let text = std::str::from_utf8(bytes).expect("validated utf8");
    Ok(FetchReport {
        sha256: sha256_hex(bytes),
        bytes: bytes.len(),
        lines: text.lines().count(),
    })
}

pub fn fetch(url: &str, out: &Path) -> Result<FetchReport> {
    let response = reqwest::blocking::get(url).map_err(|e| CliError::Fetch(e.to_string()))?;
    let status = response.status();
    if !status.is_success() {
        return Err(CliError::Fetch(format!("{url}: HTTP {status}")));
    }
    let bytes = response
        .bytes()
        .map_err(|e| CliError::Fetch(e.to_string()))?
        .to_vec();
    write_checked(&bytes, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_csv_payloads() {
        assert!(check_delimited(b"date,dubai,gasus\n1992M01,15.49,1.63\n").is_ok());
        assert!(check_delimited(b"a;b\n1;2\n").is_ok());
    }

    #[test]
    fn rejects_markup_and_unstructured_text() {
        assert!(matches!(
            check_delimited(b"<!DOCTYPE html><html><body>Sign in</body></html>"),
            Err(CliError::SchemaError(_))
        ));
        assert!(matches!(
            check_delimited(b"  <html><head></head></html>"),
            Err(CliError::SchemaError(_))
        ));
        assert!(matches!(
            check_delimited(b"plain sentence with no delimiter\nmore text"),
            Err(CliError::SchemaError(_))
        ));
        assert!(matches!(check_delimited(b""), Err(CliError::SchemaError(_))));
        assert!(matches!(
            check_delimited(&[0xff, 0xfe, 0x00]),
            Err(CliError::SchemaError(_))
        ));
    }

    #[test]
    fn never_overwrites_an_existing_file() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("snapshot.csv");
        std::fs::write(&out, "date,v\n1992M01,1\n").unwrap();
        let err = write_checked(b"date,v\n1992M01,2\n", &out).unwrap_err();
        assert!(matches!(err, CliError::Fetch(_)));
        // Original content intact.
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "date,v\n1992M01,1\n");
    }

    #[test]
    fn writes_and_reports_checksum() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("fresh.csv");
        let payload = b"date,v\n1992M01,1\n1992M02,2\n";
        let report = write_checked(payload, &out).unwrap();
        assert_eq!(report.bytes, payload.len());
        assert_eq!(report.lines, 3);
        assert_eq!(report.sha256, crate::report::sha256_hex(payload));
        assert!(out.exists());
    }
}
