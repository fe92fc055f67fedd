use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use super::{DatasetError, TabularDataset};
use crate::matrix::Matrix;
use crate::rng;

/// Rows kept from the motor-claims table.
pub const CAR_INSURANCE_ROWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvSchema {
    /// freMTPL2 frequency table at the load path, joined on `IDpol` with the
    /// severity table at `severity_path`.
    CarInsurance { severity_path: PathBuf },
    /// US health-insurance charges table.
    HealthInsurance,
}

impl CsvSchema {
    pub fn dataset_name(&self) -> &'static str {
        match self {
            CsvSchema::CarInsurance { .. } => "car_insurance",
            CsvSchema::HealthInsurance => "health_insurance",
        }
    }
}

const CAR_NUMERIC: [&str; 6] = ["Exposure", "VehPower", "VehAge", "DrivAge", "BonusMalus", "Density"];
const CAR_CATEGORICAL: [&str; 4] = ["Area", "VehBrand", "VehGas", "Region"];
const HEALTH_NUMERIC: [&str; 3] = ["age", "bmi", "children"];
const HEALTH_CATEGORICAL: [&str; 3] = ["sex", "smoker", "region"];

struct Table {
    path: PathBuf,
    columns: HashMap<String, usize>,
    header: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(clean).map(str::to_string).collect();
        let columns = header.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Self { path: path.to_path_buf(), columns, header, rows })
    }

    fn require(&self, expected: &[&str]) -> Result<(), DatasetError> {
        if expected.iter().all(|c| self.columns.contains_key(*c)) {
            return Ok(());
        }
        Err(DatasetError::Schema {
            path: self.path.clone(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.header.clone(),
        })
    }

    fn cell<'a>(&self, rec: &'a csv::StringRecord, column: &str) -> &'a str {
        clean(rec.get(self.columns[column]).unwrap_or(""))
    }

    fn number(&self, row: usize, column: &str) -> Result<f64, DatasetError> {
        let (line, rec) = &self.rows[row];
        let raw = self.cell(rec, column);
        raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| DatasetError::Parse {
            path: self.path.clone(),
            line: *line,
            column: column.to_string(),
            value: raw.to_string(),
        })
    }

    /// Sorted levels of a categorical column.
    fn levels(&self, column: &str) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|(_, r)| self.cell(r, column)).collect();
        set.into_iter().map(str::to_string).collect()
    }
}

/// Strips whitespace and the single quotes some exports wrap around strings.
fn clean(s: &str) -> &str {
    s.trim().trim_matches('\'').trim()
}

/// Builds feature rows: numeric columns as-is, then each categorical column
/// as indicators for every level but the first (sorted) one.
fn encode(
    table: &Table,
    rows: &[usize],
    numeric: &[&str],
    categorical: &[&str],
    mut numeric_map: impl FnMut(&str, f64) -> f64,
) -> Result<(Matrix, Vec<String>), DatasetError> {
    let levels: Vec<Vec<String>> = categorical.iter().map(|c| table.levels(c)).collect();
    let mut names: Vec<String> = numeric.iter().map(|s| s.to_string()).collect();
    for (c, lv) in categorical.iter().zip(&levels) {
        names.extend(lv.iter().skip(1).map(|l| format!("{c}_{l}")));
    }
    let d = names.len();
    let mut data = Vec::with_capacity(rows.len() * d);
    for &r in rows {
        for c in numeric {
            data.push(numeric_map(c, table.number(r, c)?));
        }
        let rec = &table.rows[r].1;
        for (c, lv) in categorical.iter().zip(&levels) {
            let v = table.cell(rec, c);
            data.extend(lv.iter().skip(1).map(|l| if l == v { 1.0 } else { 0.0 }));
        }
    }
    Ok((Matrix::new(rows.len(), d, data).expect("row width"), names))
}

/// Loads one of the two public insurance datasets and applies the default
/// 60/20/20 split.
pub fn load_csv_dataset(path: &Path, schema: &CsvSchema, seed: u64) -> Result<TabularDataset, DatasetError> {
    match schema {
        CsvSchema::HealthInsurance => load_health(path, seed),
        CsvSchema::CarInsurance { severity_path } => load_car(path, severity_path, seed),
    }
}

fn load_health(path: &Path, seed: u64) -> Result<TabularDataset, DatasetError> {
    let table = Table::read(path)?;
    let mut expected: Vec<&str> = HEALTH_NUMERIC.to_vec();
    expected.extend(HEALTH_CATEGORICAL);
    expected.push("charges");
    table.require(&expected)?;
    let rows: Vec<usize> = (0..table.rows.len()).collect();
    let (x, names) = encode(&table, &rows, &HEALTH_NUMERIC, &HEALTH_CATEGORICAL, |_, v| v)?;
    let y = rows.iter().map(|&r| table.number(r, "charges")).collect::<Result<Vec<_>, _>>()?;
    TabularDataset::from_parts("health_insurance", x, y, names, seed)
}

fn load_car(freq_path: &Path, severity_path: &Path, seed: u64) -> Result<TabularDataset, DatasetError> {
    let freq = Table::read(freq_path)?;
    let mut expected = vec!["IDpol"];
    expected.extend(CAR_NUMERIC);
    expected.extend(CAR_CATEGORICAL);
    freq.require(&expected)?;
    let sev = Table::read(severity_path)?;
    sev.require(&["IDpol", "ClaimAmount"])?;

    // IDpol is sometimes exported as a float ("1.0").
    let mut totals: HashMap<i64, f64> = HashMap::new();
    for r in 0..sev.rows.len() {
        let id = sev.number(r, "IDpol")?.round() as i64;
        *totals.entry(id).or_insert(0.0) += sev.number(r, "ClaimAmount")?;
    }

    let mut rows: Vec<usize> = (0..freq.rows.len()).collect();
    if rows.len() > CAR_INSURANCE_ROWS {
        rows.shuffle(&mut rng::stream(seed, "car_insurance_subsample"));
        rows.truncate(CAR_INSURANCE_ROWS);
        rows.sort_unstable();
    }
    let (x, names) = encode(&freq, &rows, &CAR_NUMERIC, &CAR_CATEGORICAL, |c, v| {
        if c == "Exposure" {
            v.min(1.0)
        } else {
            v
        }
    })?;
    let y = rows
        .iter()
        .map(|&r| Ok(totals.get(&(freq.number(r, "IDpol")?.round() as i64)).copied().unwrap_or(0.0)))
        .collect::<Result<Vec<_>, DatasetError>>()?;
    TabularDataset::from_parts("car_insurance", x, y, names, seed)
}
