//! Typed tabular data model for flow records.
//!
//! A [`Dataset`] is an immutable, column-typed table with a binary label
//! column (0 = normal, 1 = attack). Row order is significant: the sequential
//! SF transform depends on it. All transforms return new datasets.

mod csv_io;
mod folds;

pub use csv_io::{infer_schema, load_csv, write_csv, write_csv_to, write_schema, LabelMap};
pub use folds::{split_folds, split_folds_blocks, FoldMode, FoldPlan};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Role of a column within a schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
    Identifier,
    Timestamp,
}

impl ColumnKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Label => "label",
            ColumnKind::Identifier => "identifier",
            ColumnKind::Timestamp => "timestamp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            "label" => Ok(ColumnKind::Label),
            "identifier" => Ok(ColumnKind::Identifier),
            "timestamp" => Ok(ColumnKind::Timestamp),
            other => Err(Error::Schema(format!("unknown column kind `{other}`"))),
        }
    }
}

/// Name and kind of one column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

/// Ordered column schema with exactly one label column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<ColumnSchema>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        let mut label_count = 0;
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if c.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(c.name.clone()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
            if c.kind == ColumnKind::Label {
                label_count += 1;
            }
        }
        if label_count != 1 {
            return Err(Error::Schema(format!(
                "schema must declare exactly one label column, found {label_count}"
            )));
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn label_name(&self) -> &str {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::Label)
            .map(|c| c.name.as_str())
            .expect("schema invariant: one label column")
    }
}

/// Cell storage of a non-label column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    /// Parsed real values.
    Numeric(Vec<f64>),
    /// Raw categorical strings, not yet interned.
    Strings(Vec<String>),
    /// Interned categorical codes plus the code -> string table,
    /// assigned in first-appearance order.
    Codes { codes: Vec<u32>, table: Vec<String> },
}

impl ColumnValues {
    fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Strings(v) => v.len(),
            ColumnValues::Codes { codes, .. } => codes.len(),
        }
    }
}

/// One non-label column: schema entry plus cell data.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: ColumnValues,
}

impl Column {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True for columns trees should split one-code-vs-rest.
    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    /// Unified numeric view: the value itself, or the categorical code.
    ///
    /// Panics on raw string columns; encode with
    /// [`Dataset::encode_categories`] first.
    pub fn value(&self, row: usize) -> f64 {
        match &self.values {
            ColumnValues::Numeric(v) => v[row],
            ColumnValues::Codes { codes, .. } => codes[row] as f64,
            ColumnValues::Strings(_) => {
                panic!("column `{}` holds raw strings; encode it first", self.name)
            }
        }
    }

    pub fn numeric_slice(&self) -> Option<&[f64]> {
        match &self.values {
            ColumnValues::Numeric(v) => Some(v),
            _ => None,
        }
    }

    pub fn code_slice(&self) -> Option<&[u32]> {
        match &self.values {
            ColumnValues::Codes { codes, .. } => Some(codes),
            _ => None,
        }
    }

    pub fn code_table(&self) -> Option<&[String]> {
        match &self.values {
            ColumnValues::Codes { table, .. } => Some(table),
            _ => None,
        }
    }

    /// Original string of a categorical cell.
    pub fn decode(&self, row: usize) -> Option<&str> {
        match &self.values {
            ColumnValues::Strings(v) => Some(v[row].as_str()),
            ColumnValues::Codes { codes, table } => Some(table[codes[row] as usize].as_str()),
            ColumnValues::Numeric(_) => None,
        }
    }

    fn select_rows(&self, rows: &[usize]) -> Column {
        let values = match &self.values {
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnValues::Strings(v) => {
                ColumnValues::Strings(rows.iter().map(|&r| v[r].clone()).collect())
            }
            ColumnValues::Codes { codes, table } => ColumnValues::Codes {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                table: table.clone(),
            },
        };
        Column {
            name: self.name.clone(),
            kind: self.kind,
            values,
        }
    }
}

/// Immutable column-typed table with a binary label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    labels: Vec<u8>,
    label_name: String,
}

impl Dataset {
    /// Assemble a dataset from columns and labels, checking length and
    /// label-range invariants.
    pub fn new(columns: Vec<Column>, label_name: impl Into<String>, labels: Vec<u8>) -> Result<Self> {
        let rows = labels.len();
        for c in &columns {
            if c.len() != rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, labels have {rows}",
                    c.name,
                    c.len()
                )));
            }
            if c.kind == ColumnKind::Label {
                return Err(Error::Schema(format!(
                    "column `{}` declared as label must be passed as the label vector",
                    c.name
                )));
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Label(format!("label value {bad} outside {{0,1}}")));
        }
        let mut seen = std::collections::HashSet::new();
        let label_name = label_name.into();
        seen.insert(label_name.clone());
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
        }
        Ok(Dataset {
            columns,
            labels,
            label_name,
        })
    }

    pub fn builder() -> DatasetBuilder {
        DatasetBuilder::default()
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn attack_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// All non-label columns, in schema order.
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Columns models train on: numeric and categorical kinds.
    /// Identifier and timestamp columns are flagged, never modeled.
    pub fn feature_columns(&self) -> Vec<&Column> {
        self.columns
            .iter()
            .filter(|c| matches!(c.kind, ColumnKind::Numeric | ColumnKind::Categorical))
            .collect()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.feature_columns()
            .iter()
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Full ordered schema (features first, label last).
    pub fn schema(&self) -> Schema {
        let mut cols: Vec<ColumnSchema> = self
            .columns
            .iter()
            .map(|c| ColumnSchema {
                name: c.name.clone(),
                kind: c.kind,
            })
            .collect();
        cols.push(ColumnSchema {
            name: self.label_name.clone(),
            kind: ColumnKind::Label,
        });
        Schema::new(cols).expect("dataset columns form a valid schema")
    }

    /// Drop every column flagged as an identifier. Row order, labels, and
    /// all other columns are preserved.
    pub fn drop_identifiers(&self) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .filter(|c| c.kind != ColumnKind::Identifier)
                .cloned()
                .collect(),
            labels: self.labels.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Intern every raw string column into integer codes (first-appearance
    /// order), retaining the code table. Already-encoded and numeric columns
    /// pass through unchanged, so the operation is idempotent.
    pub fn encode_categories(&self) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| match &c.values {
                ColumnValues::Strings(raw) => {
                    let (codes, table) = intern(raw);
                    Column {
                        name: c.name.clone(),
                        kind: c.kind,
                        values: ColumnValues::Codes { codes, table },
                    }
                }
                _ => c.clone(),
            })
            .collect();
        Dataset {
            columns,
            labels: self.labels.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// True when every column is usable as a numeric feature view.
    pub fn is_encoded(&self) -> bool {
        self.columns
            .iter()
            .all(|c| !matches!(c.values, ColumnValues::Strings(_)))
    }

    /// New dataset containing the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| c.select_rows(rows)).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            label_name: self.label_name.clone(),
        }
    }

    /// New dataset restricted to the named feature columns (given order);
    /// the label is always carried through.
    pub fn select_features(&self, names: &[impl AsRef<str>]) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let col = self
                .column(name)
                .ok_or_else(|| Error::Argument(format!("no column named `{name}`")))?;
            columns.push(col.clone());
        }
        Ok(Dataset {
            columns,
            labels: self.labels.clone(),
            label_name: self.label_name.clone(),
        })
    }

    /// Replace or insert a column, returning a new dataset.
    pub fn with_column(&self, column: Column) -> Result<Dataset> {
        if column.len() != self.n_rows() {
            return Err(Error::Argument(format!(
                "column `{}` has {} rows, dataset has {}",
                column.name,
                column.len(),
                self.n_rows()
            )));
        }
        let mut columns = self.columns.clone();
        match columns.iter().position(|c| c.name == column.name) {
            Some(i) => columns[i] = column,
            None => columns.push(column),
        }
        Ok(Dataset {
            columns,
            labels: self.labels.clone(),
            label_name: self.label_name.clone(),
        })
    }

    /// Remove a column by name, returning a new dataset.
    pub fn without_column(&self, name: &str) -> Result<Dataset> {
        if self.column(name).is_none() {
            return Err(Error::Argument(format!("no column named `{name}`")));
        }
        Ok(Dataset {
            columns: self
                .columns
                .iter()
                .filter(|c| c.name != name)
                .cloned()
                .collect(),
            labels: self.labels.clone(),
            label_name: self.label_name.clone(),
        })
    }
}

fn intern(raw: &[String]) -> (Vec<u32>, Vec<String>) {
    let mut table: Vec<String> = Vec::new();
    let mut index: std::collections::HashMap<String, u32> = std::collections::HashMap::new();
    let mut codes = Vec::with_capacity(raw.len());
    for s in raw {
        let code = *index.entry(s.clone()).or_insert_with(|| {
            table.push(s.clone());
            (table.len() - 1) as u32
        });
        codes.push(code);
    }
    (codes, table)
}

/// Incremental [`Dataset`] construction for generators and tests.
#[derive(Default)]
pub struct DatasetBuilder {
    columns: Vec<Column>,
    labels: Option<(String, Vec<u8>)>,
}

impl DatasetBuilder {
    pub fn numeric(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.columns.push(Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            values: ColumnValues::Numeric(values),
        });
        self
    }

    /// Raw categorical column; intern with [`Dataset::encode_categories`].
    pub fn categorical<S: Into<String>>(mut self, name: impl Into<String>, values: Vec<S>) -> Self {
        self.columns.push(Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            values: ColumnValues::Strings(values.into_iter().map(Into::into).collect()),
        });
        self
    }

    /// Categorical column already interned as codes.
    pub fn coded(
        mut self,
        name: impl Into<String>,
        codes: Vec<u32>,
        table: Vec<String>,
    ) -> Self {
        self.columns.push(Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            values: ColumnValues::Codes { codes, table },
        });
        self
    }

    pub fn identifier<S: Into<String>>(mut self, name: impl Into<String>, values: Vec<S>) -> Self {
        self.columns.push(Column {
            name: name.into(),
            kind: ColumnKind::Identifier,
            values: ColumnValues::Strings(values.into_iter().map(Into::into).collect()),
        });
        self
    }

    pub fn timestamp<S: Into<String>>(mut self, name: impl Into<String>, values: Vec<S>) -> Self {
        self.columns.push(Column {
            name: name.into(),
            kind: ColumnKind::Timestamp,
            values: ColumnValues::Strings(values.into_iter().map(Into::into).collect()),
        });
        self
    }

    pub fn labels(mut self, name: impl Into<String>, labels: Vec<u8>) -> Self {
        self.labels = Some((name.into(), labels));
        self
    }

    pub fn build(self) -> Result<Dataset> {
        let (name, labels) = self
            .labels
            .ok_or_else(|| Error::Schema("builder needs a label column".into()))?;
        Dataset::new(self.columns, name, labels)
    }
}

#[cfg(test)]
mod tests;
