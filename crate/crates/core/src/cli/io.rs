use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::error::{CliError, CliResult};
use crate::model::{Dataset, SubjectData};

/// Column names of the two dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Columns {
    pub id: String,
    pub time: String,
    pub response: String,
    pub event_time: String,
    pub status: String,
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            id: "id".into(),
            time: "time".into(),
            response: "y".into(),
            event_time: "event_time".into(),
            status: "status".into(),
        }
    }
}

/// Location and layout of a dataset on disk. Covariate columns are taken
/// from the model specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub longitudinal: PathBuf,
    pub survival: PathBuf,
    #[serde(default)]
    pub columns: Columns,
    /// Numeric codes for text-valued columns, keyed by column name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub codes: BTreeMap<String, BTreeMap<String, f64>>,
    /// Model the natural logarithm of the response column.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub log_response: bool,
}

/// A value given inline or as the path of a JSON file holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Inline<T> {
    Path(PathBuf),
    Value(T),
}

impl<T: DeserializeOwned + Clone> Inline<T> {
    pub fn load(&self, base: &Path) -> CliResult<T> {
        match self {
            Inline::Value(v) => Ok(v.clone()),
            Inline::Path(p) => read_json(&base.join(p)),
        }
    }
}

/// Shortest representation that parses back to the same double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Config(format!(
            "{}: field `{field}`: {}",
            path.display(),
            e.inner()
        ))
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> CliResult<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::data_file(path, e))?;
        let header = r
            .headers()
            .map_err(|e| CliError::data_file(path, e))?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::data_file(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    fn column(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data_file(&self.path, format!("missing column `{name}`")))
    }
}

struct Parser<'a> {
    codes: &'a BTreeMap<String, BTreeMap<String, f64>>,
}

impl Parser<'_> {
    fn value(&self, table: &Table, row: usize, col: usize, id: &str) -> CliResult<f64> {
        let name = &table.header[col];
        let text = &table.rows[row][col];
        if let Some(v) = self.codes.get(name).and_then(|m| m.get(text)) {
            return Ok(*v);
        }
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                CliError::Data(format!(
                    "{} line {}: subject {id}: cannot read `{text}` in column `{name}`",
                    table.path.display(),
                    row + 2
                ))
            })
    }
}

/// Reads a long-format measurement file and a one-row-per-subject survival
/// file. Subjects keep the survival-file order; measurements keep file order.
pub fn read_dataset(
    cfg: &DataConfig,
    base: &Path,
    long_covariates: &[String],
    surv_covariates: &[String],
) -> CliResult<Dataset> {
    let parser = Parser { codes: &cfg.codes };
    let long = Table::read(&base.join(&cfg.longitudinal))?;
    let surv = Table::read(&base.join(&cfg.survival))?;
    let c = &cfg.columns;

    let (l_id, l_time, l_y) = (
        long.column(&c.id)?,
        long.column(&c.time)?,
        long.column(&c.response)?,
    );
    let l_cov = long_covariates
        .iter()
        .map(|n| long.column(n))
        .collect::<CliResult<Vec<_>>>()?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut measured: Vec<(String, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for row in 0..long.rows.len() {
        let id = long.rows[row][l_id].to_string();
        let t = parser.value(&long, row, l_time, &id)?;
        let mut y = parser.value(&long, row, l_y, &id)?;
        if cfg.log_response {
            if !(y > 0.0) {
                return Err(CliError::Data(format!(
                    "subject {id}: response {y} has no logarithm"
                )));
            }
            y = y.ln();
        }
        let cov = l_cov
            .iter()
            .map(|&k| parser.value(&long, row, k, &id))
            .collect::<CliResult<Vec<_>>>()?;
        let k = *index.entry(id.clone()).or_insert_with(|| {
            measured.push((id.clone(), Vec::new(), Vec::new(), cov.clone()));
            measured.len() - 1
        });
        let entry = &mut measured[k];
        if entry.3 != cov {
            return Err(CliError::Data(format!(
                "subject {id}: longitudinal covariates vary between rows"
            )));
        }
        entry.1.push(t);
        entry.2.push(y);
    }

    let (s_id, s_time, s_status) = (
        surv.column(&c.id)?,
        surv.column(&c.event_time)?,
        surv.column(&c.status)?,
    );
    let s_cov = surv_covariates
        .iter()
        .map(|n| surv.column(n))
        .collect::<CliResult<Vec<_>>>()?;
    let mut seen = vec![false; measured.len()];
    let mut subjects = Vec::with_capacity(surv.rows.len());
    for row in 0..surv.rows.len() {
        let id = surv.rows[row][s_id].to_string();
        let Some(&k) = index.get(&id) else {
            return Err(CliError::Data(format!(
                "subject {id}: no longitudinal measurements"
            )));
        };
        if std::mem::replace(&mut seen[k], true) {
            return Err(CliError::Data(format!(
                "subject {id}: more than one survival record"
            )));
        }
        let event_time = parser.value(&surv, row, s_time, &id)?;
        let event = match parser.value(&surv, row, s_status, &id)? {
            v if v == 0.0 => false,
            v if v == 1.0 => true,
            v => {
                return Err(CliError::Data(format!(
                    "subject {id}: status must be 0 or 1, got {v}"
                )))
            }
        };
        let surv_cov = s_cov
            .iter()
            .map(|&j| parser.value(&surv, row, j, &id))
            .collect::<CliResult<Vec<_>>>()?;
        let (_, times, y, long_cov) = measured[k].clone();
        subjects.push(SubjectData {
            id,
            times,
            y,
            long_covariates: long_cov,
            surv_covariates: surv_cov,
            event_time,
            event,
        });
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(CliError::Data(format!(
            "subject {}: no survival record",
            measured[k].0
        )));
    }
    let data = Dataset::new(subjects);
    data.validate(None)?;
    Ok(data)
}

/// Writes `longitudinal.csv` and `survival.csv` with the default column
/// names.
pub fn write_dataset(
    dir: &Path,
    data: &Dataset,
    long_covariates: &[String],
    surv_covariates: &[String],
) -> CliResult<()> {
    let c = Columns::default();
    let mut header: Vec<&str> = vec![&c.id, &c.time, &c.response];
    header.extend(long_covariates.iter().map(String::as_str));
    let rows = data.subjects.iter().flat_map(|s| {
        s.times.iter().zip(&s.y).map(move |(t, y)| {
            let mut r = vec![s.id.clone(), fmt_f64(*t), fmt_f64(*y)];
            r.extend(s.long_covariates.iter().map(|v| fmt_f64(*v)));
            r
        })
    });
    write_csv(&dir.join("longitudinal.csv"), &header, rows)?;

    let mut header: Vec<&str> = vec![&c.id, &c.event_time, &c.status];
    header.extend(surv_covariates.iter().map(String::as_str));
    let rows = data.subjects.iter().map(|s| {
        let mut r = vec![
            s.id.clone(),
            fmt_f64(s.event_time),
            (s.event as u8).to_string(),
        ];
        r.extend(s.surv_covariates.iter().map(|v| fmt_f64(*v)));
        r
    });
    write_csv(&dir.join("survival.csv"), &header, rows)
}
