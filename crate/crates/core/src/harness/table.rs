use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::eval::MetricsReport;

/// Per-(dataset, model) summary of test MAE across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub maes: Vec<f64>,
    pub failures: usize,
}

impl CellStats {
    pub fn mean(&self) -> Option<f64> {
        (!self.maes.is_empty()).then(|| self.maes.iter().sum::<f64>() / self.maes.len() as f64)
    }

    /// Sample standard deviation; zero for a single value.
    pub fn std(&self) -> Option<f64> {
        let m = self.mean()?;
        let n = self.maes.len();
        if n < 2 {
            return Some(0.0);
        }
        Some((self.maes.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt())
    }
}

/// Datasets as rows, models as columns, mean test MAE per cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub cells: BTreeMap<(String, String), CellStats>,
    /// Footnotes printed under the text table.
    pub notes: Vec<String>,
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

impl ResultsTable {
    /// Builds the table from successful reports plus `(dataset, model)` pairs
    /// of failed runs. Row and column order follow first appearance.
    pub fn from_reports(reports: &[MetricsReport], failures: &[(String, String)]) -> Self {
        let mut t = ResultsTable::default();
        let items = reports
            .iter()
            .map(|r| (r.dataset.as_str(), r.model.as_str(), Some(r.mae)))
            .chain(failures.iter().map(|(d, m)| (d.as_str(), m.as_str(), None)));
        for (d, m, mae) in items {
            push_unique(&mut t.datasets, d);
            push_unique(&mut t.models, m);
            let cell = t
                .cells
                .entry((d.to_string(), m.to_string()))
                .or_insert_with(|| CellStats { maes: Vec::new(), failures: 0 });
            match mae {
                Some(v) => cell.maes.push(v),
                None => cell.failures += 1,
            }
        }
        t
    }

    pub fn cell(&self, dataset: &str, model: &str) -> Option<&CellStats> {
        self.cells.get(&(dataset.to_string(), model.to_string()))
    }

    pub fn mean(&self, dataset: &str, model: &str) -> Option<f64> {
        self.cell(dataset, model)?.mean()
    }

    /// Models attaining the smallest mean MAE in `dataset`'s row; all of them on ties.
    pub fn best_in_row(&self, dataset: &str) -> Vec<&str> {
        let means: Vec<(&str, f64)> =
            self.models.iter().filter_map(|m| self.mean(dataset, m).map(|v| (m.as_str(), v))).collect();
        let Some(min) = means.iter().map(|(_, v)| *v).min_by(f64::total_cmp) else {
            return Vec::new();
        };
        means.into_iter().filter(|(_, v)| *v == min).map(|(m, _)| m).collect()
    }

    fn multi_seed(&self) -> bool {
        self.cells.values().any(|c| c.maes.len() + c.failures > 1)
    }

    fn text_cell(&self, dataset: &str, model: &str) -> String {
        let Some(c) = self.cell(dataset, model) else {
            return "-".into();
        };
        let mut s = match (c.mean(), c.std()) {
            (Some(m), Some(sd)) if self.multi_seed() => format!("{m:.4} ± {sd:.4}"),
            (Some(m), _) => format!("{m:.4}"),
            _ => "FAILED".into(),
        };
        if self.best_in_row(dataset).contains(&model) {
            s.push('*');
        }
        if c.failures > 0 && !c.maes.is_empty() {
            let _ = write!(s, " ({} failed)", c.failures);
        }
        s
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut header = vec!["dataset".to_string()];
        header.extend(self.models.iter().cloned());
        let mut rows = vec![header];
        for d in &self.datasets {
            let mut row = vec![d.clone()];
            row.extend(self.models.iter().map(|m| self.text_cell(d, m)));
            rows.push(row);
        }
        let ncol = rows[0].len();
        let widths: Vec<usize> =
            (0..ncol).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::from("Test MAE");
        out.push_str(if self.multi_seed() { " (mean ± std over seeds)" } else { "" });
        out.push_str("; * marks the best model per row\n\n");
        for row in &rows {
            let cells: Vec<String> =
                row.iter().zip(&widths).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                let _ = writeln!(out, "note: {n}");
            }
        }
        out
    }

    /// One line per (dataset, model) cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,model,n_ok,n_failed,mean_mae,std_mae,best\n");
        for d in &self.datasets {
            let best = self.best_in_row(d);
            for m in &self.models {
                let Some(c) = self.cell(d, m) else { continue };
                let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
                let _ = writeln!(
                    out,
                    "{d},{m},{},{},{},{},{}",
                    c.maes.len(),
                    c.failures,
                    fmt(c.mean()),
                    fmt(c.std()),
                    best.contains(&m.as_str())
                );
            }
        }
        out
    }
}
