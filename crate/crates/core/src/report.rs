//! JSON and CSV serialization of results, with provenance.
//!
//! JSON documents wrap a result in an envelope carrying the tool name,
//! version, command, seed and the resolved configuration. CSV output starts
//! with a single `#` comment line holding the same provenance, followed by a
//! header row and data rows; numbers use the shortest round-trip
//! representation, so identical runs give identical bytes.

use std::io::Write;

use serde::Serialize;

use crate::eigensolve::EigenPair;
use crate::error::Result;
use crate::inequalities::{FKReport, IdentityReport, LiebReport};
use crate::membrane::{OptimizationResult, SweepTable};
use crate::refine::RefinementStudy;
use crate::{Real, VERSION};

pub const TOOL: &str = "fracmem";

#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: Option<u64>,
    pub config: &'a C,
    pub result: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'a str, seed: Option<u64>, config: &'a C, result: &'a R) -> Self {
        Envelope {
            tool: TOOL,
            version: VERSION,
            command,
            seed,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The `#` line that opens CSV output.
    pub fn provenance_line(&self) -> Result<String> {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        Ok(format!(
            "# {} {} command={} seed={} config={}",
            self.tool,
            self.version,
            self.command,
            seed,
            serde_json::to_string(self.config)?
        ))
    }
}

/// Types that flatten into CSV rows under a fixed header.
pub trait CsvRows {
    fn header() -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

fn num<T: Real>(x: T) -> String {
    format!("{x}")
}

fn cells(list: &[usize]) -> String {
    list.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

/// Header plus the rows of every item, optionally preceded by a provenance
/// comment line.
pub fn write_csv<R: CsvRows, W: Write>(items: &[R], provenance: Option<&str>, mut out: W) -> Result<()> {
    if let Some(line) = provenance {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header())?;
    for item in items {
        for row in item.rows() {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// [`write_csv`] into a string.
pub fn csv_string<R: CsvRows>(items: &[R], provenance: Option<&str>) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(items, provenance, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

impl<T: Real> CsvRows for EigenPair<T> {
    fn header() -> Vec<&'static str> {
        vec!["lambda", "residual", "iterations", "degenerate", "cells"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            num(self.lambda),
            num(self.residual),
            self.iterations.to_string(),
            self.degenerate.to_string(),
            self.vector.mask().len().to_string(),
        ]]
    }
}

impl<T: Real> CsvRows for OptimizationResult<T> {
    fn header() -> Vec<&'static str> {
        vec!["lambda", "k", "c_snapped", "start_id", "converged", "rounds", "d_cells"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            num(self.lambda),
            self.k.to_string(),
            num(self.c_snapped),
            self.start_id.to_string(),
            self.converged.to_string(),
            self.trace.len().to_string(),
            cells(self.d.cells()),
        ]]
    }
}

impl<T: Real> CsvRows for SweepTable<T> {
    fn header() -> Vec<&'static str> {
        vec!["alpha", "c", "k", "lambda"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (i, &a) in self.alphas.iter().enumerate() {
            for (j, &c) in self.cs.iter().enumerate() {
                rows.push(vec![num(a), num(c), self.cells[j].to_string(), num(self.lambda[i][j])]);
            }
        }
        rows
    }
}

impl<T: Real> CsvRows for FKReport<T> {
    fn header() -> Vec<&'static str> {
        vec![
            "lambda_omega",
            "lambda_ball",
            "gap",
            "h",
            "cells",
            "k",
            "chain_symmetrized",
            "chain_holds",
            "within_slack",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            num(self.lambda_omega),
            num(self.lambda_ball),
            num(self.gap),
            num(self.h),
            self.cells.to_string(),
            self.k.to_string(),
            num(self.chain_symmetrized),
            self.chain_holds.to_string(),
            self.within_slack.to_string(),
        ]]
    }
}

impl<T: Real> CsvRows for LiebReport<T> {
    fn header() -> Vec<&'static str> {
        vec![
            "k0",
            "k1",
            "overlap",
            "c_x",
            "lambda_intersection",
            "strict",
            "lambda_dirichlet",
            "lambda_upper",
            "lambda_sum",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.records
            .iter()
            .map(|r| {
                vec![
                    r.k[0].to_string(),
                    r.k[1].to_string(),
                    num(r.overlap),
                    num(r.c_x),
                    r.lambda_intersection.map_or_else(String::new, num),
                    r.strict.to_string(),
                    num(r.lambda_dirichlet),
                    num(r.lambda_upper),
                    num(self.lambda_sum),
                ]
            })
            .collect()
    }
}

impl<T: Real> CsvRows for IdentityReport<T> {
    fn header() -> Vec<&'static str> {
        vec!["j1", "j2", "j3", "lhs", "rhs", "defect", "window", "shifts"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            num(self.j1),
            num(self.j2),
            num(self.j3),
            num(self.lhs),
            num(self.rhs),
            num(self.defect),
            self.window.to_string(),
            self.shifts.to_string(),
        ]]
    }
}

impl<T: Real> CsvRows for RefinementStudy<T> {
    fn header() -> Vec<&'static str> {
        vec!["h", "lambda", "extrapolated", "order"]
    }

    /// One row per cell size; the extrapolation of the triple ending at a
    /// row is reported on that row.
    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.hs.len())
            .map(|i| {
                let (e, p) = if i >= 2 {
                    (num(self.extrapolated[i - 2]), num(self.orders[i - 2]))
                } else {
                    (String::new(), String::new())
                };
                vec![num(self.hs[i]), num(self.lambdas[i]), e, p]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::RefinementStudy;

    #[test]
    fn csv_layout_and_provenance() {
        let study = RefinementStudy {
            hs: vec![0.5, 0.25, 0.125],
            lambdas: vec![1.0, 1.5, 1.75],
            extrapolated: vec![2.0],
            orders: vec![1.0],
        };
        let cfg = serde_json::json!({"s": 0.5});
        let env = Envelope::new("sweep", Some(7), &cfg, &study);
        let line = env.provenance_line().unwrap();
        let text = csv_string(std::slice::from_ref(&study), Some(&line)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# fracmem {VERSION} command=sweep seed=7 config={{\"s\":0.5}}"));
        assert_eq!(lines[1], "h,lambda,extrapolated,order");
        assert_eq!(lines[2], "0.5,1,,");
        assert_eq!(lines[4], "0.125,1.75,2,1");
        let json: serde_json::Value = serde_json::from_str(&env.to_json().unwrap()).unwrap();
        assert_eq!(json["version"], VERSION);
        assert_eq!(json["result"]["extrapolated"][0], 2.0);
    }
}
