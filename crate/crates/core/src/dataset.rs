//! Columnar record tables with discrete (state-labelled) and continuous columns,
//! plus CSV reading and writing.
//!
//! Discrete cells hold a state index into the column's domain, or `None` when
//! the CSV cell is empty. Continuous cells use `NaN` for missing values.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use thiserror::Error;

use crate::graph::NetworkSpec;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{column}` row {row}: `{value}` is not in the column domain")]
    ValueOutOfDomain {
        column: String,
        row: usize,
        value: String,
    },
    #[error("column `{column}` has {found} rows, table has {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("column `{column}` row {row}: cannot parse `{value}` as a number")]
    NotNumeric {
        column: String,
        row: usize,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteColumn {
    pub name: String,
    pub states: Vec<String>,
    pub values: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Discrete(DiscreteColumn),
    Continuous(ContinuousColumn),
}

impl Column {
    pub fn name(&self) -> &str {
        match self {
            Column::Discrete(c) => &c.name,
            Column::Continuous(c) => &c.name,
        }
    }

    fn len(&self) -> usize {
        match self {
            Column::Discrete(c) => c.values.len(),
            Column::Continuous(c) => c.values.len(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Discrete(c) => c.values[row].map_or(String::new(), |s| c.states[s].clone()),
            Column::Continuous(c) => {
                let v = c.values[row];
                if v.is_nan() {
                    String::new()
                } else {
                    v.to_string()
                }
            }
        }
    }
}

/// Declared domains for discrete CSV columns. Columns absent from the schema
/// are read as continuous when every non-empty cell parses as a number and as
/// discrete with sorted inferred labels otherwise.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub discrete: BTreeMap<String, Vec<String>>,
}

impl CsvSchema {
    pub fn from_spec(spec: &NetworkSpec) -> Self {
        Self {
            discrete: spec
                .nodes
                .iter()
                .map(|n| (n.name.clone(), n.states.clone()))
                .collect(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, states: Vec<String>) -> Self {
        self.discrete.insert(name.into(), states);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetTable {
    n_rows: usize,
    columns: Vec<Column>,
}

impl DatasetTable {
    pub fn new(n_rows: usize) -> Self {
        Self {
            n_rows,
            columns: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    fn check_new(&self, name: &str, len: usize) -> Result<(), DatasetError> {
        if self.columns.iter().any(|c| c.name() == name) {
            return Err(DatasetError::DuplicateColumn(name.to_string()));
        }
        if len != self.n_rows {
            return Err(DatasetError::LengthMismatch {
                column: name.to_string(),
                expected: self.n_rows,
                found: len,
            });
        }
        Ok(())
    }

    pub fn push_discrete(
        &mut self,
        name: impl Into<String>,
        states: Vec<String>,
        values: Vec<Option<usize>>,
    ) -> Result<(), DatasetError> {
        let name = name.into();
        self.check_new(&name, values.len())?;
        if let Some((row, bad)) = values
            .iter()
            .enumerate()
            .find_map(|(r, v)| v.filter(|&s| s >= states.len()).map(|s| (r, s)))
        {
            return Err(DatasetError::ValueOutOfDomain {
                column: name,
                row,
                value: bad.to_string(),
            });
        }
        self.columns.push(Column::Discrete(DiscreteColumn {
            name,
            states,
            values,
        }));
        Ok(())
    }

    pub fn push_continuous(
        &mut self,
        name: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<(), DatasetError> {
        let name = name.into();
        self.check_new(&name, values.len())?;
        self.columns
            .push(Column::Continuous(ContinuousColumn { name, values }));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn discrete(&self, name: &str) -> Result<&DiscreteColumn, DatasetError> {
        match self.column(name) {
            Some(Column::Discrete(c)) => Ok(c),
            _ => Err(DatasetError::MissingColumn(name.to_string())),
        }
    }

    pub fn continuous(&self, name: &str) -> Result<&ContinuousColumn, DatasetError> {
        match self.column(name) {
            Some(Column::Continuous(c)) => Ok(c),
            _ => Err(DatasetError::MissingColumn(name.to_string())),
        }
    }

    /// Replaces an existing column of the same name or appends a new one.
    pub fn upsert(&mut self, column: Column) -> Result<(), DatasetError> {
        if column.len() != self.n_rows {
            return Err(DatasetError::LengthMismatch {
                column: column.name().to_string(),
                expected: self.n_rows,
                found: column.len(),
            });
        }
        match self.columns.iter_mut().find(|c| c.name() == column.name()) {
            Some(slot) => *slot = column,
            None => self.columns.push(column),
        }
        Ok(())
    }

    /// New table holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DatasetTable {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Discrete(d) => Column::Discrete(DiscreteColumn {
                    name: d.name.clone(),
                    states: d.states.clone(),
                    values: rows.iter().map(|&r| d.values[r]).collect(),
                }),
                Column::Continuous(d) => Column::Continuous(ContinuousColumn {
                    name: d.name.clone(),
                    values: rows.iter().map(|&r| d.values[r]).collect(),
                }),
            })
            .collect();
        DatasetTable {
            n_rows: rows.len(),
            columns,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(self.columns.iter().map(Column::name))
            .expect("in-memory write");
        for row in 0..self.n_rows {
            w.write_record(self.columns.iter().map(|c| c.cell(row)))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, schema)
    }

    pub fn from_csv_str(text: &str, schema: &CsvSchema) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers: Vec<String> = reader.headers()?.iter().map(String::from).collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for record in reader.records() {
            let record = record?;
            for (k, field) in record.iter().enumerate() {
                cells[k].push(field.to_string());
            }
        }
        let n_rows = cells.first().map_or(0, Vec::len);
        let mut seen = HashSet::new();
        let mut table = DatasetTable::new(n_rows);
        for (name, column) in headers.into_iter().zip(cells) {
            if !seen.insert(name.clone()) {
                return Err(DatasetError::DuplicateColumn(name));
            }
            if let Some(states) = schema.discrete.get(&name) {
                let values = parse_labels(&name, &column, states)?;
                table.push_discrete(name, states.clone(), values)?;
            } else if column
                .iter()
                .all(|c| c.is_empty() || c.parse::<f64>().is_ok())
            {
                let values = column
                    .iter()
                    .map(|c| {
                        if c.is_empty() {
                            f64::NAN
                        } else {
                            c.parse().unwrap()
                        }
                    })
                    .collect();
                table.push_continuous(name, values)?;
            } else {
                let states: Vec<String> = column
                    .iter()
                    .filter(|c| !c.is_empty())
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let values = parse_labels(&name, &column, &states)?;
                table.push_discrete(name, states, values)?;
            }
        }
        Ok(table)
    }
}

fn parse_labels(
    name: &str,
    cells: &[String],
    states: &[String],
) -> Result<Vec<Option<usize>>, DatasetError> {
    cells
        .iter()
        .enumerate()
        .map(|(row, c)| {
            if c.is_empty() {
                return Ok(None);
            }
            states.iter().position(|s| s == c).map(Some).ok_or_else(|| {
                DatasetError::ValueOutOfDomain {
                    column: name.to_string(),
                    row,
                    value: c.clone(),
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|k| k.to_string()).collect()
    }

    #[test]
    fn csv_round_trip_preserves_order_and_missing_cells() {
        let mut t = DatasetTable::new(3);
        t.push_continuous("score", vec![0.1, f64::NAN, 1.0 / 3.0])
            .unwrap();
        t.push_discrete("S", labels(4), vec![Some(3), None, Some(0)])
            .unwrap();
        t.push_discrete(
            "group",
            vec!["a".into(), "b".into()],
            vec![Some(1), Some(0), Some(1)],
        )
        .unwrap();
        let text = t.to_csv_string();
        assert!(text.starts_with("score,S,group\n"));
        let schema = CsvSchema::default().with("S", labels(4));
        let back = DatasetTable::from_csv_str(&text, &schema).unwrap();
        assert_eq!(back.to_csv_string(), text);
        assert_eq!(back.continuous("score").unwrap().values[2], 1.0 / 3.0);
        assert_eq!(
            back.discrete("S").unwrap().values,
            vec![Some(3), None, Some(0)]
        );
        assert_eq!(back.discrete("group").unwrap().states, vec!["a", "b"]);
    }

    #[test]
    fn out_of_domain_label_is_rejected() {
        let schema = CsvSchema::default().with("S", labels(2));
        let err = DatasetTable::from_csv_str("S\n0\n7\n", &schema).unwrap_err();
        assert!(matches!(err, DatasetError::ValueOutOfDomain { row: 1, .. }));
    }

    #[test]
    fn length_and_duplicate_checks() {
        let mut t = DatasetTable::new(2);
        assert!(t.push_continuous("x", vec![1.0]).is_err());
        t.push_continuous("x", vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            t.push_continuous("x", vec![1.0, 2.0]),
            Err(DatasetError::DuplicateColumn(_))
        ));
        assert!(t
            .push_discrete("d", labels(2), vec![Some(2), None])
            .is_err());
    }

    #[test]
    fn header_only_csv_is_an_empty_table() {
        let schema = CsvSchema::default().with("A", labels(2));
        let t = DatasetTable::from_csv_str("A,B\n", &schema).unwrap();
        assert_eq!(t.n_rows(), 0);
        assert!(t.discrete("A").is_ok());
    }
}
