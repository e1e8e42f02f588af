//! Per-part similarity tables with dataset-level aggregate rows.
//!
//! CSV layout:
//!
//! ```text
//! part_id,cosine,correlation,psnr_db,ssim
//! test01,...
//! MEDIAN 14 parts,...
//! STD 14 parts,...
//! ```
//!
//! Non-finite cells (identical images give an infinite PSNR) are left out of
//! that column's aggregates; a trailing `#` line records how many.

use std::fmt::Write as _;

use super::stats::{median, population_std};
use super::MetricError;

/// Column names of the image-similarity table.
pub const IMAGE_COLUMNS: [&str; 4] = ["cosine", "correlation", "psnr_db", "ssim"];
/// Column names of the spectrum-similarity table.
pub const SPECTRUM_COLUMNS: [&str; 2] = ["cosine", "r_squared"];

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityRow {
    pub part_id: String,
    pub cosine: f64,
    pub correlation: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

/// Table of named numeric columns plus median and population-std rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    pub median: Vec<f64>,
    pub std: Vec<f64>,
    /// Per column, how many non-finite cells were left out of the aggregates.
    pub excluded: Vec<usize>,
}

/// Image-similarity table.
pub type SimilarityReport = MetricTable;

impl MetricTable {
    pub fn new(columns: &[&str], rows: Vec<(String, Vec<f64>)>) -> Result<Self, MetricError> {
        if rows.is_empty() {
            return Err(MetricError::InvalidInput(
                "report needs at least one row".into(),
            ));
        }
        let k = columns.len();
        if let Some((id, _)) = rows.iter().find(|(_, v)| v.len() != k) {
            return Err(MetricError::InvalidInput(format!(
                "row {id} does not have {k} values"
            )));
        }
        let mut med = Vec::with_capacity(k);
        let mut std = Vec::with_capacity(k);
        let mut excluded = Vec::with_capacity(k);
        for c in 0..k {
            let finite: Vec<f64> = rows
                .iter()
                .map(|(_, v)| v[c])
                .filter(|v| v.is_finite())
                .collect();
            excluded.push(rows.len() - finite.len());
            if finite.is_empty() {
                // every cell non-finite: report the shared value
                med.push(rows[0].1[c]);
                std.push(0.0);
            } else {
                med.push(median(&finite));
                std.push(population_std(&finite));
            }
        }
        Ok(Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
            median: med,
            std,
            excluded,
        })
    }

    pub fn median_label(&self) -> String {
        format!("MEDIAN {} parts", self.rows.len())
    }

    pub fn std_label(&self) -> String {
        format!("STD {} parts", self.rows.len())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("part_id");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        let mut row = |label: &str, vals: &[f64]| {
            s.push_str(label);
            for v in vals {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        };
        for (id, vals) in &self.rows {
            row(id, vals);
        }
        row(&self.median_label(), &self.median);
        row(&self.std_label(), &self.std);
        for (c, &n) in self.columns.iter().zip(&self.excluded) {
            if n > 0 {
                writeln!(
                    s,
                    "# {c} aggregates exclude {n} rows with non-finite values"
                )
                .unwrap();
            }
        }
        s
    }
}

/// Aggregates image-similarity rows into the cosine / correlation / PSNR / SSIM table.
pub fn aggregate_report(rows: &[SimilarityRow]) -> Result<SimilarityReport, MetricError> {
    MetricTable::new(
        &IMAGE_COLUMNS,
        rows.iter()
            .map(|r| {
                (
                    r.part_id.clone(),
                    vec![r.cosine, r.correlation, r.psnr_db, r.ssim],
                )
            })
            .collect(),
    )
}

/// One real-vs-generated comparison of a named feature.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureComparison {
    pub part_id: String,
    pub feature: String,
    pub real: f64,
    pub generated: f64,
}

/// Feature CSV: `part_id,feature_name,real,generated,abs_diff`.
pub fn feature_csv(rows: &[FeatureComparison]) -> String {
    let mut s = String::from("part_id,feature_name,real,generated,abs_diff\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.part_id,
            r.feature,
            r.real,
            r.generated,
            (r.real - r.generated).abs()
        )
        .unwrap();
    }
    s
}
