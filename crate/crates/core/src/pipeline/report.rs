use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "variant,budget_fraction,seed,epoch,lr,loss_sup,loss_cr,test_cer,p_cer";
pub const SUMMARY_HEADER: &str = "variant,budget_fraction,seed,final_cer";

/// One per-epoch line of a training report; `None` fields are written empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub variant: String,
    pub budget_fraction: f64,
    pub seed: u64,
    pub epoch: usize,
    pub lr: Option<f64>,
    pub loss_sup: Option<f64>,
    pub loss_cr: Option<f64>,
    pub test_cer: Option<f64>,
    pub p_cer: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variant: String,
    pub budget_fraction: f64,
    pub seed: u64,
    pub final_cer: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingReport {
    pub rows: Vec<EpochRow>,
    pub summary: SummaryRow,
}

impl TrainingReport {
    /// The report as CSV text, header included.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(REPORT_HEADER.split(','))?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Rows with the variant column blanked, for comparing runs that differ
    /// only in their label.
    pub fn unlabeled_rows(&self) -> Vec<EpochRow> {
        self.rows
            .iter()
            .map(|r| EpochRow {
                variant: String::new(),
                ..r.clone()
            })
            .collect()
    }
}

pub fn write_report(path: &Path, report: &TrainingReport) -> Result<()> {
    std::fs::write(path, report.to_csv()?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<EpochRow>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, REPORT_HEADER, path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<EpochRow>, _>>()?)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(SUMMARY_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, SUMMARY_HEADER, path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?)
}

fn check_header(found: &csv::StringRecord, want: &str, path: &Path) -> Result<()> {
    if found.iter().collect::<Vec<_>>().join(",") != want {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("expected header '{want}'"),
        });
    }
    Ok(())
}

/// Median of the finite values, averaging the middle pair for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Budget × variant grid of median final CER over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotTable {
    pub budgets: Vec<f64>,
    pub variants: Vec<String>,
    /// `cells[budget][variant]`
    pub cells: Vec<Vec<Option<f64>>>,
}

impl PivotTable {
    pub fn get(&self, budget: f64, variant: &str) -> Option<f64> {
        let b = self.budgets.iter().position(|&x| x == budget)?;
        let v = self.variants.iter().position(|x| x == variant)?;
        self.cells[b][v]
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["budget_fraction".to_string()];
        header.extend(self.variants.iter().cloned());
        w.write_record(&header)?;
        for (b, row) in self.budgets.iter().zip(&self.cells) {
            let mut rec = vec![b.to_string()];
            rec.extend(row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Groups summary rows by `(budget, variant)` and takes the median over
/// seeds. Budgets ascend; variants keep first-seen order.
pub fn pivot_summaries(rows: &[SummaryRow]) -> PivotTable {
    let mut budgets: Vec<f64> = Vec::new();
    let mut variants: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(u64, String), Vec<f64>> = BTreeMap::new();
    for r in rows {
        if !budgets.contains(&r.budget_fraction) {
            budgets.push(r.budget_fraction);
        }
        if !variants.contains(&r.variant) {
            variants.push(r.variant.clone());
        }
        groups
            .entry((r.budget_fraction.to_bits(), r.variant.clone()))
            .or_default()
            .push(r.final_cer);
    }
    budgets.sort_by(f64::total_cmp);
    let cells = budgets
        .iter()
        .map(|b| {
            variants
                .iter()
                .map(|v| groups.get(&(b.to_bits(), v.clone())).and_then(|xs| median(xs)))
                .collect()
        })
        .collect();
    PivotTable {
        budgets,
        variants,
        cells,
    }
}
