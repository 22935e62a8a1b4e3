//! Output records, their CSV and JSON encodings, and all-or-nothing file
//! writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::{Error, Result};

/// Floats in CSV carry 17 significant digits.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub trait Record: Serialize {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    #[serde(rename = "K")]
    pub k: f64,
    pub branch_id: usize,
    pub class: &'static str,
    pub re_omega: f64,
    pub im_omega: f64,
    pub re_za: f64,
    pub im_za: f64,
    pub re_zb: f64,
    pub im_zb: f64,
    pub abs_za: f64,
    pub abs_zb: f64,
    pub residual: f64,
    pub region: String,
}

impl Record for SpectrumRow {
    const HEADER: &'static [&'static str] = &[
        "K", "branch_id", "class", "re_omega", "im_omega", "re_za", "im_za", "re_zb", "im_zb", "abs_za", "abs_zb",
        "residual", "region",
    ];

    fn fields(&self) -> Vec<String> {
        let mut v = vec![float(self.k), self.branch_id.to_string(), self.class.to_string()];
        for x in [
            self.re_omega,
            self.im_omega,
            self.re_za,
            self.im_za,
            self.re_zb,
            self.im_zb,
            self.abs_za,
            self.abs_zb,
            self.residual,
        ] {
            v.push(float(x));
        }
        v.push(self.region.clone());
        v
    }
}

/// One continuum band at one `K`; infinite ends are `inf` in CSV and
/// `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumRow {
    #[serde(rename = "K")]
    pub k: f64,
    pub label: &'static str,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    #[serde(skip)]
    pub lo_raw: f64,
    #[serde(skip)]
    pub hi_raw: f64,
}

impl ContinuumRow {
    pub fn new(k: f64, label: &'static str, lo: f64, hi: f64) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        ContinuumRow {
            k,
            label,
            lo: finite(lo),
            hi: finite(hi),
            lo_raw: lo,
            hi_raw: hi,
        }
    }
}

impl Record for ContinuumRow {
    const HEADER: &'static [&'static str] = &["K", "label", "lo", "hi"];

    fn fields(&self) -> Vec<String> {
        vec![float(self.k), self.label.to_string(), float(self.lo_raw), float(self.hi_raw)]
    }
}

/// A failed phase has `error` set and no numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpRow {
    pub phi_over_pi: f64,
    pub ratio_ep: Option<f64>,
    pub k_ep_over_pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// CSV marker for a failed phase.
pub const EP_ERROR: &str = "error";

impl Record for EpRow {
    const HEADER: &'static [&'static str] = &["phi_over_pi", "ratio_ep", "k_ep_over_pi"];

    fn fields(&self) -> Vec<String> {
        let cell = |x: Option<f64>| x.map_or_else(|| EP_ERROR.to_string(), float);
        vec![float(self.phi_over_pi), cell(self.ratio_ep), cell(self.k_ep_over_pi)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoteRow {
    #[serde(rename = "K")]
    pub k: f64,
    pub branch: &'static str,
    pub re_omega: f64,
    pub im_omega: f64,
}

impl Record for AsymptoteRow {
    const HEADER: &'static [&'static str] = &["K", "branch", "re_omega", "im_omega"];

    fn fields(&self) -> Vec<String> {
        vec![float(self.k), self.branch.to_string(), float(self.re_omega), float(self.im_omega)]
    }
}

pub fn render<R: Record>(rows: &[R], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut s = R::HEADER.join(",");
            s.push('\n');
            for r in rows {
                s.push_str(&r.fields().join(","));
                s.push('\n');
            }
            Ok(s)
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Files produced by one command, written only once everything has been
/// computed. A failed write removes whatever was already written.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `stem.<ext>` rendered in `format`.
    pub fn add<R: Record>(&mut self, stem: &str, rows: &[R], format: Format) -> Result<()> {
        let name = format!("{stem}.{}", format.extension());
        self.files.push((name, render(rows, format)?));
        Ok(())
    }

    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        let write_err = |path: &Path, source| Error::Write {
            path: path.to_owned(),
            source,
        };
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
        let mut done: Vec<PathBuf> = Vec::new();
        let mut result = Ok(());
        for (name, content) in &self.files {
            let path = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            let step = fs::write(&tmp, content)
                .and_then(|_| fs::rename(&tmp, &path))
                .map_err(|e| write_err(&path, e));
            if let Err(e) = step {
                let _ = fs::remove_file(&tmp);
                result = Err(e);
                break;
            }
            done.push(path);
        }
        match result {
            Ok(()) => Ok(done),
            Err(e) => {
                for p in &done {
                    let _ = fs::remove_file(p);
                }
                Err(e)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.0), "-2.0000000000000000e0");
        assert_eq!(float(f64::INFINITY), "inf");
        let x = 1.0 / 3.0;
        assert_eq!(float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_and_json_agree() {
        let rows = [ContinuumRow::new(1.0, "UU", -1.5, f64::INFINITY)];
        let csv = render(&rows, Format::Csv).unwrap();
        assert_eq!(csv.lines().next(), Some("K,label,lo,hi"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",inf"));
        let json: serde_json::Value = serde_json::from_str(&render(&rows, Format::Json).unwrap()).unwrap();
        assert_eq!(json[0]["label"], "UU");
        assert!(json[0]["hi"].is_null());
        assert_eq!(json[0]["lo"], -1.5);
    }

    #[test]
    fn ep_error_rows() {
        let row = EpRow {
            phi_over_pi: 0.3,
            ratio_ep: None,
            k_ep_over_pi: None,
            error: Some("bracket".into()),
        };
        assert_eq!(row.fields()[1], EP_ERROR);
    }

    #[test]
    fn failed_commit_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = OutputSet::new();
        set.add("a", &[AsymptoteRow { k: 1.0, branch: "x", re_omega: 0.0, im_omega: 0.0 }], Format::Csv)
            .unwrap();
        // A directory in the way makes the second rename fail.
        fs::create_dir(dir.path().join("b.csv")).unwrap();
        fs::write(dir.path().join("b.csv").join("keep"), "").unwrap();
        set.add("b", &[AsymptoteRow { k: 1.0, branch: "x", re_omega: 0.0, im_omega: 0.0 }], Format::Csv)
            .unwrap();
        assert!(set.commit(dir.path()).is_err());
        assert!(!dir.path().join("a.csv").exists());
        assert!(!dir.path().join(".b.csv.partial").exists());
    }
}
