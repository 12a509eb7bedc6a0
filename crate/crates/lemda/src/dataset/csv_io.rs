//! CSV ingestion and the plain-text schema sidecar format.
//!
//! Schema files hold one `name=kind` pair per line; blank lines and `#`
//! comments are ignored. CSV files are UTF-8 with a header row; quoted
//! fields are accepted. Header order does not need to match the schema:
//! columns are matched by name and materialized in schema order.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use super::{Column, ColumnKind, ColumnSchema, ColumnValues, Dataset, Schema};
use crate::{Error, Result};

/// Strings that mark the normal and attack classes in a label column.
/// Real datasets disagree on these, so they are configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub normal: String,
    pub attack: String,
}

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap {
            normal: "0".into(),
            attack: "1".into(),
        }
    }
}

impl LabelMap {
    pub fn new(normal: impl Into<String>, attack: impl Into<String>) -> Self {
        LabelMap {
            normal: normal.into(),
            attack: attack.into(),
        }
    }

    fn map(&self, raw: &str, row: usize) -> Result<u8> {
        if raw == self.normal {
            Ok(0)
        } else if raw == self.attack {
            Ok(1)
        } else {
            Err(Error::Label(format!(
                "row {row}: label `{raw}` is neither `{}` nor `{}`",
                self.normal, self.attack
            )))
        }
    }
}

impl Schema {
    /// Parse the `name=kind` sidecar format.
    pub fn parse(text: &str) -> Result<Schema> {
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, kind) = line.split_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected `name=kind`", lineno + 1))
            })?;
            columns.push(ColumnSchema {
                name: name.trim().to_string(),
                kind: ColumnKind::parse(kind.trim())?,
            });
        }
        Schema::new(columns)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in self.columns() {
            out.push_str(&c.name);
            out.push('=');
            out.push_str(c.kind.as_str());
            out.push('\n');
        }
        out
    }
}

/// Write a schema sidecar next to a CSV file.
pub fn write_schema(schema: &Schema, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, schema.to_text()).map_err(|e| Error::io(path, e))
}

/// Load a CSV file against a declared schema.
///
/// Numeric cells are parsed as reals (missing or malformed cells are
/// rejected, not imputed); categorical, identifier, and timestamp cells are
/// interned as codes; label cells are mapped through `labels`.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, labels: &LabelMap) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(Error::from)?;

    let header = reader.headers().map_err(Error::from)?.clone();
    let file_index: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, name)| (name.trim(), i))
        .collect();

    // Column positions in file order, schema order out.
    let mut positions = Vec::with_capacity(schema.columns().len());
    for c in schema.columns() {
        let pos = file_index.get(c.name.as_str()).ok_or_else(|| {
            Error::Schema(format!("declared column `{}` missing from header", c.name))
        })?;
        positions.push(*pos);
    }
    for name in file_index.keys() {
        if !schema.columns().iter().any(|c| c.name == *name) {
            return Err(Error::Schema(format!(
                "file column `{name}` is not declared in the schema"
            )));
        }
    }

    enum Cells {
        Numeric(Vec<f64>),
        Interned {
            codes: Vec<u32>,
            table: Vec<String>,
            index: HashMap<String, u32>,
        },
        Label(Vec<u8>),
    }

    let mut cells: Vec<Cells> = schema
        .columns()
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => Cells::Numeric(Vec::new()),
            ColumnKind::Label => Cells::Label(Vec::new()),
            _ => Cells::Interned {
                codes: Vec::new(),
                table: Vec::new(),
                index: HashMap::new(),
            },
        })
        .collect();

    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(Error::from)?;
        for (slot, (c, &pos)) in schema.columns().iter().zip(&positions).enumerate() {
            let raw = record.get(pos).unwrap_or("").trim();
            match &mut cells[slot] {
                Cells::Numeric(values) => {
                    let v: f64 = raw.parse().map_err(|_| Error::Parse {
                        row: row + 1,
                        column: c.name.clone(),
                        message: format!("`{raw}` is not a number"),
                    })?;
                    values.push(v);
                }
                Cells::Interned {
                    codes,
                    table,
                    index,
                } => {
                    let code = *index.entry(raw.to_string()).or_insert_with(|| {
                        table.push(raw.to_string());
                        (table.len() - 1) as u32
                    });
                    codes.push(code);
                }
                Cells::Label(values) => values.push(labels.map(raw, row + 1)?),
            }
        }
    }

    let mut columns = Vec::new();
    let mut label_values = Vec::new();
    for (c, data) in schema.columns().iter().zip(cells) {
        match data {
            Cells::Numeric(values) => columns.push(Column {
                name: c.name.clone(),
                kind: c.kind,
                values: ColumnValues::Numeric(values),
            }),
            Cells::Interned { codes, table, .. } => columns.push(Column {
                name: c.name.clone(),
                kind: c.kind,
                values: ColumnValues::Codes { codes, table },
            }),
            Cells::Label(values) => label_values = values,
        }
    }
    Dataset::new(columns, schema.label_name(), label_values)
}

/// Write a dataset as CSV (features in column order, label last).
/// Floats use the shortest round-trip representation, so equal datasets
/// produce byte-identical files.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_csv_to(d, &mut out, labels).map_err(|e| Error::io(path, e))
}

/// [`write_csv`] into any writer (e.g. stdout).
pub fn write_csv_to(d: &Dataset, out: &mut impl Write, labels: &LabelMap) -> std::io::Result<()> {
    let mut header: Vec<String> = d.columns().iter().map(|c| c.name.clone()).collect();
    header.push(d.label_name().to_string());
    writeln!(out, "{}", header.join(","))?;

    for row in 0..d.n_rows() {
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        for c in d.columns() {
            let field = match &c.values {
                ColumnValues::Numeric(v) => format!("{}", v[row]),
                ColumnValues::Strings(v) => v[row].clone(),
                ColumnValues::Codes { codes, table } => table[codes[row] as usize].clone(),
            };
            fields.push(field);
        }
        fields.push(if d.labels()[row] == 1 {
            labels.attack.clone()
        } else {
            labels.normal.clone()
        });
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Build a schema for an unknown CSV by sniffing cell types.
///
/// `label` names the label column; `identifiers` are flagged instead of
/// modeled. Every other column becomes numeric if its first `sample_rows`
/// cells all parse as numbers, categorical otherwise.
pub fn infer_schema(
    path: impl AsRef<Path>,
    label: &str,
    identifiers: &[&str],
    sample_rows: usize,
) -> Result<Schema> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(Error::from)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(Error::from)?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let mut numeric_ok = vec![true; header.len()];
    for record in reader.records().take(sample_rows) {
        let record = record.map_err(Error::from)?;
        for (i, field) in record.iter().enumerate() {
            if i < numeric_ok.len() && numeric_ok[i] && field.trim().parse::<f64>().is_err() {
                numeric_ok[i] = false;
            }
        }
    }

    let columns = header
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let kind = if name == label {
                ColumnKind::Label
            } else if identifiers.contains(&name.as_str()) {
                ColumnKind::Identifier
            } else if numeric_ok[i] {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            };
            ColumnSchema {
                name: name.clone(),
                kind,
            }
        })
        .collect();
    Schema::new(columns)
}
