use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Condition, EvalError, MetricRecord};

pub const METRICS: [&str; 4] = ["f0_rmse_cents", "duration_mae_seconds", "voicing_f1", "boundary_jump_cents"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition: Condition,
    pub metric: String,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub records: Vec<MetricRecord>,
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Mean, median and count of every metric per condition, conditions in their
/// declared order. Absent values are left out of the count.
pub fn report(records: &[MetricRecord]) -> Result<Report, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let mut by_condition: BTreeMap<Condition, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        by_condition.entry(r.condition).or_default().push(r);
    }
    let mut rows = Vec::new();
    for (condition, group) in by_condition {
        for metric in METRICS {
            let mut values: Vec<f64> = group.iter().filter_map(|r| r.metric(metric)).collect();
            values.sort_by(f64::total_cmp);
            // Summing the sorted values keeps the mean independent of record order.
            let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
            rows.push(ReportRow {
                condition,
                metric: metric.to_string(),
                mean,
                median: median(&values),
                count: values.len(),
            });
        }
    }
    let mut records = records.to_vec();
    records.sort_by(|a, b| (a.case, a.condition).cmp(&(b.case, b.condition)));
    Ok(Report { rows, records })
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("row serializes");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("report.csv"), self.to_csv())
    }

    pub fn row(&self, condition: Condition, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.condition == condition && r.metric == metric)
    }
}
