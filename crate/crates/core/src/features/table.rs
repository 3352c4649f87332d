//! Delimited feature files: a header `source_id,label,<feature names...>`
//! followed by one row per clip with values in fusion order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub source_id: String,
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(feature_names: Vec<String>) -> Self {
        Self {
            feature_names,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        if row.values.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                found: row.values.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        let data = self.rows.iter().flat_map(|r| r.values.iter().copied()).collect();
        DenseMatrix::new(data, self.rows.len(), self.dimension()).expect("row widths checked on push")
    }

    /// Projects the table onto the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureTable> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::MissingColumn(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            feature_names: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    source_id: r.source_id.clone(),
                    label: r.label.clone(),
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                })
                .collect(),
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(file)
    }

    pub fn write_to<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["source_id".to_string(), "label".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.source_id.clone(), row.label.clone()];
            // `Display` for f64 prints the shortest string that parses back exactly.
            record.extend(row.values.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<feature table>", e))?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file)
    }

    pub fn read_from<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("source_id") {
            return Err(Error::MissingColumn("source_id".into()));
        }
        if header.get(1) != Some("label") {
            return Err(Error::MissingColumn("label".into()));
        }
        let mut table = FeatureTable::new(header.iter().skip(2).map(str::to_string).collect());
        if table.feature_names.is_empty() {
            return Err(Error::Parse("feature file has no feature columns".into()));
        }
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let values = record
                .iter()
                .skip(2)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::Parse(format!("row {}: bad feature value {v:?}", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(FeatureRow {
                source_id: record[0].to_string(),
                label: record[1].to_string(),
                values,
            })?;
        }
        Ok(table)
    }
}
