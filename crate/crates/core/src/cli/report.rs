//! Comparison tables over result files.

use std::fmt::Write as _;
use std::path::Path;

use super::run::{SCAN_HEADER, SUMMARY_HEADER};
use crate::error::{Error, Result};
use crate::HARTREE_TO_KCAL_PER_MOL;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub method: String,
    pub energy: f64,
    pub exact: Option<f64>,
    pub cnots: Option<usize>,
}

/// `E_high − E_low` in kcal/mol.
pub fn barrier_kcal(e_high: f64, e_low: f64) -> f64 {
    (e_high - e_low) * HARTREE_TO_KCAL_PER_MOL
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::parse(line, format!("bad number '{s}'")))
}

fn opt_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<Option<T>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        num(s, line).map(Some)
    }
}

/// Reads rows from a `summary.csv` or `scan.csv` produced by a run.
pub fn parse_result_file(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty result file"))?;
    let scan = match header.trim() {
        SUMMARY_HEADER => false,
        SCAN_HEADER => true,
        other => return Err(Error::parse(1, format!("unrecognized header '{other}'"))),
    };
    let width = header.split(',').count();
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != width {
                return Err(Error::parse(i + 1, format!("expected {width} fields, got {}", f.len())));
            }
            Ok(if scan {
                ReportRow {
                    label: f[0].to_string(),
                    method: "scan".into(),
                    energy: num(f[1], i + 1)?,
                    exact: opt_num(f[2], i + 1)?,
                    cnots: opt_num(f[7], i + 1)?,
                }
            } else {
                ReportRow {
                    label: f[0].to_string(),
                    method: f[1].to_string(),
                    energy: num(f[2], i + 1)?,
                    exact: opt_num(f[3], i + 1)?,
                    cnots: opt_num(f[5], i + 1)?,
                }
            })
        })
        .collect()
}

pub fn read_result_files<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<ReportRow>> {
    if paths.is_empty() {
        return Err(Error::Config("report needs at least one result file".into()));
    }
    let mut rows = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
        rows.extend(parse_result_file(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?);
    }
    Ok(rows)
}

/// Aligned table of energies, errors and CNOTs, followed by every pairwise energy
/// difference `row_j − row_i` (j > i) in kcal/mol.
pub fn report(rows: &[ReportRow]) -> String {
    let mut s = String::new();
    writeln!(s, "# Hartree to kcal/mol: {HARTREE_TO_KCAL_PER_MOL}").unwrap();
    let w = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(3);
    let wm = rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
    writeln!(s, "{:<3} {:<w$} {:<wm$} {:>18} {:>18} {:>12} {:>7}", "#", "tag", "method", "energy", "exact", "error", "cnots")
        .unwrap();
    for (i, r) in rows.iter().enumerate() {
        let exact = r.exact.map(|e| format!("{e:.10}")).unwrap_or_else(|| "-".into());
        let err = r.exact.map(|e| format!("{:.3e}", r.energy - e)).unwrap_or_else(|| "-".into());
        let cnots = r.cnots.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
        writeln!(s, "{i:<3} {:<w$} {:<wm$} {:>18.10} {exact:>18} {err:>12} {cnots:>7}", r.label, r.method, r.energy)
            .unwrap();
    }
    if rows.len() >= 2 {
        writeln!(s, "\n# energy differences (kcal/mol)").unwrap();
        writeln!(s, "{:>4} {:>4} {:>12} {:>12}", "from", "to", "method", "exact").unwrap();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let m = barrier_kcal(rows[j].energy, rows[i].energy);
                let e = match (rows[j].exact, rows[i].exact) {
                    (Some(a), Some(b)) => format!("{:.3}", barrier_kcal(a, b)),
                    _ => "-".into(),
                };
                writeln!(s, "{i:>4} {j:>4} {m:>12.3} {e:>12}").unwrap();
            }
        }
    }
    s
}
