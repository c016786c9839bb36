//! Rows of categorical cells, CSV input/output and row-level transformations.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::schema::{Attribute, CategoricalSchema};
use crate::DataError;

/// A category index, or `None` for a missing value.
pub type Cell = Option<u32>;

/// Sentinel for a missing cell.
pub const MISSING: Cell = None;

/// Reserved CSV column holding row weights.
pub const WEIGHT_COLUMN: &str = "weight";

/// Categorical rows over a fixed schema. Cells are stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: CategoricalSchema,
    cells: Vec<Cell>,
    weights: Option<Vec<Option<f64>>>,
}

impl Dataset {
    pub fn new(schema: CategoricalSchema, rows: Vec<Vec<Cell>>) -> Result<Self, DataError> {
        let k = schema.n_attributes();
        let mut cells = Vec::with_capacity(rows.len() * k);
        for row in rows {
            if row.len() != k {
                return Err(DataError::Format(format!(
                    "row has {} cells, schema has {k} attributes",
                    row.len()
                )));
            }
            cells.extend(row);
        }
        Self::from_cells(schema, cells, None)
    }

    /// Builds a dataset from row-major cells and optional per-row weights.
    pub fn from_cells(
        schema: CategoricalSchema,
        cells: Vec<Cell>,
        weights: Option<Vec<Option<f64>>>,
    ) -> Result<Self, DataError> {
        let k = schema.n_attributes();
        if cells.len() % k != 0 {
            return Err(DataError::Format(format!(
                "{} cells do not divide into rows of {k}",
                cells.len()
            )));
        }
        let counts = schema.category_counts();
        for (i, cell) in cells.iter().enumerate() {
            if let Some(c) = cell {
                let a = i % k;
                if *c as usize >= counts[a] {
                    return Err(DataError::SchemaViolation {
                        row: i / k,
                        attribute: schema.attribute(a).name.clone(),
                        detail: format!("category index {c} out of {} categories", counts[a]),
                    });
                }
            }
        }
        if let Some(w) = &weights {
            if w.len() != cells.len() / k {
                return Err(DataError::Format(format!(
                    "{} weights for {} rows",
                    w.len(),
                    cells.len() / k
                )));
            }
        }
        Ok(Self {
            schema,
            cells,
            weights,
        })
    }

    pub fn empty(schema: CategoricalSchema) -> Self {
        Self {
            schema,
            cells: Vec::new(),
            weights: None,
        }
    }

    pub fn schema(&self) -> &CategoricalSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len() / self.schema.n_attributes()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.n_attributes()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        let k = self.n_attributes();
        &self.cells[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[Cell]> + '_ {
        self.cells.chunks_exact(self.n_attributes())
    }

    pub fn cell(&self, row: usize, attribute: usize) -> Cell {
        self.cells[row * self.n_attributes() + attribute]
    }

    /// All values of one attribute, in row order.
    pub fn column(&self, attribute: usize) -> impl Iterator<Item = Cell> + '_ {
        self.rows().map(move |r| r[attribute])
    }

    pub fn weights(&self) -> Option<&[Option<f64>]> {
        self.weights.as_deref()
    }

    pub fn with_weights(mut self, weights: Vec<Option<f64>>) -> Result<Self, DataError> {
        if weights.len() != self.n_rows() {
            return Err(DataError::Format(format!(
                "{} weights for {} rows",
                weights.len(),
                self.n_rows()
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn has_missing(&self) -> bool {
        self.cells.iter().any(Option::is_none)
    }

    /// Copies the listed rows, in order. Weights are carried along.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let k = self.n_attributes();
        let mut cells = Vec::with_capacity(indices.len() * k);
        for &i in indices {
            cells.extend_from_slice(self.row(i));
        }
        let weights = self
            .weights
            .as_ref()
            .map(|w| indices.iter().map(|&i| w[i]).collect());
        Dataset {
            schema: self.schema.clone(),
            cells,
            weights,
        }
    }

    /// Reads a comma-separated table with a header row.
    ///
    /// Without a schema, categories are inferred from the observed labels in
    /// lexicographic order. Empty cells become [`MISSING`]; a column named
    /// [`WEIGHT_COLUMN`] supplies row weights.
    pub fn load_csv(path: &Path, schema: Option<&CategoricalSchema>) -> Result<Self, DataError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file, schema)
    }

    pub fn read_csv(
        reader: impl Read,
        schema: Option<&CategoricalSchema>,
    ) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let weight_col = headers.iter().position(|h| h == WEIGHT_COLUMN);
        let attr_cols: Vec<usize> = (0..headers.len())
            .filter(|&i| Some(i) != weight_col)
            .collect();
        if attr_cols.is_empty() {
            return Err(DataError::Format("no attribute columns".into()));
        }

        let mut raw: Vec<Vec<String>> = Vec::new();
        let mut weights: Vec<Option<f64>> = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| match e.kind() {
                csv::ErrorKind::UnequalLengths { .. } => {
                    DataError::Format(format!("ragged row {}: {e}", line + 1))
                }
                _ => DataError::Csv(e),
            })?;
            raw.push(
                attr_cols
                    .iter()
                    .map(|&c| record[c].trim().to_string())
                    .collect(),
            );
            if let Some(wc) = weight_col {
                weights.push(record[wc].trim().parse::<f64>().ok());
            }
        }

        let names: Vec<&str> = attr_cols.iter().map(|&c| headers[c].as_str()).collect();
        let schema = match schema {
            Some(s) => {
                if s.n_attributes() != names.len() {
                    return Err(DataError::Format(format!(
                        "file has {} attribute columns, schema has {}",
                        names.len(),
                        s.n_attributes()
                    )));
                }
                s.clone()
            }
            None => infer_schema(&names, &raw)?,
        };
        // Columns may appear in any order relative to the schema.
        let positions: Vec<usize> = schema
            .attributes()
            .iter()
            .map(|a| {
                names.iter().position(|n| *n == a.name).ok_or_else(|| {
                    DataError::Format(format!("column {:?} not found in header", a.name))
                })
            })
            .collect::<Result<_, _>>()?;

        let mut cells = Vec::with_capacity(raw.len() * schema.n_attributes());
        for (r, row) in raw.iter().enumerate() {
            for (a, &pos) in positions.iter().enumerate() {
                let label = &row[pos];
                if label.is_empty() {
                    cells.push(MISSING);
                    continue;
                }
                let attr = schema.attribute(a);
                let idx = attr
                    .index_of(label)
                    .ok_or_else(|| DataError::SchemaViolation {
                        row: r,
                        attribute: attr.name.clone(),
                        detail: format!("unknown label {label:?}"),
                    })?;
                cells.push(Some(idx));
            }
        }
        let weights = weight_col.map(|_| weights);
        Self::from_cells(schema, cells, weights)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), DataError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), DataError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self
            .schema
            .attributes()
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        if self.weights.is_some() {
            header.push(WEIGHT_COLUMN);
        }
        wtr.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for (i, row) in self.rows().enumerate() {
            record.clear();
            for (a, cell) in row.iter().enumerate() {
                record.push(match cell {
                    Some(c) => self.schema.attribute(a).categories[*c as usize].clone(),
                    None => String::new(),
                });
            }
            if let Some(w) = &self.weights {
                record.push(w[i].map(|v| v.to_string()).unwrap_or_default());
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Duplicates each row `round(weight)` times and drops the weights.
    pub fn replicate_by_weight(&self) -> Result<Dataset, DataError> {
        let weights = self
            .weights
            .as_ref()
            .ok_or_else(|| DataError::Validation("dataset has no weights".into()))?;
        let mut indices = Vec::new();
        for (i, w) in weights.iter().enumerate() {
            let w = w.ok_or_else(|| DataError::Validation(format!("row {i} has no weight")))?;
            if !w.is_finite() || w < 0.0 {
                return Err(DataError::Validation(format!(
                    "row {i} has invalid weight {w}"
                )));
            }
            indices.extend(std::iter::repeat_n(i, w.round() as usize));
        }
        let mut out = self.select_rows(&indices);
        out.weights = None;
        Ok(out)
    }

    /// Uniform sample without replacement of `round(fraction * n)` rows.
    pub fn sample_fraction(&self, fraction: f64, seed: u64) -> Result<Dataset, DataError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(DataError::Validation(format!(
                "sample fraction {fraction} outside (0, 1]"
            )));
        }
        if self.is_empty() {
            return Err(DataError::Validation(
                "cannot sample an empty dataset".into(),
            ));
        }
        let n = self.n_rows();
        let count = ((fraction * n as f64).round() as usize).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = index::sample(&mut rng, n, count).into_vec();
        Ok(self.select_rows(&picked))
    }

    /// Distinct full rows, with missing cells compared as their own value.
    pub fn unique_combinations(&self) -> BTreeSet<Vec<Cell>> {
        self.rows().map(<[Cell]>::to_vec).collect()
    }

    /// Deletes every row of `n_remove` distinct full combinations chosen
    /// uniformly at random.
    pub fn remove_combinations(&self, n_remove: usize, seed: u64) -> Result<Dataset, DataError> {
        let combos: Vec<Vec<Cell>> = self.unique_combinations().into_iter().collect();
        if n_remove >= combos.len() {
            return Err(DataError::Validation(format!(
                "cannot remove {n_remove} of {} unique combinations",
                combos.len()
            )));
        }
        if n_remove == 0 {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let removed: HashSet<&[Cell]> = index::sample(&mut rng, combos.len(), n_remove)
            .into_iter()
            .map(|i| combos[i].as_slice())
            .collect();
        let keep: Vec<usize> = self
            .rows()
            .enumerate()
            .filter(|(_, r)| !removed.contains(r))
            .map(|(i, _)| i)
            .collect();
        Ok(self.select_rows(&keep))
    }

    /// Row counts per distinct full combination.
    pub fn combination_counts(&self) -> BTreeMap<Vec<Cell>, usize> {
        let mut counts = BTreeMap::new();
        for r in self.rows() {
            *counts.entry(r.to_vec()).or_insert(0) += 1;
        }
        counts
    }
}

fn infer_schema(names: &[&str], raw: &[Vec<String>]) -> Result<CategoricalSchema, DataError> {
    let attributes = names
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let labels: BTreeSet<&str> = raw
                .iter()
                .map(|r| r[a].as_str())
                .filter(|l| !l.is_empty())
                .collect();
            Attribute::new(*name, labels)
        })
        .collect();
    CategoricalSchema::new(attributes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> CategoricalSchema {
        CategoricalSchema::new(vec![
            Attribute::new("a", ["x", "y", "z"]),
            Attribute::new("b", ["p", "q"]),
        ])
        .unwrap()
    }

    #[test]
    fn loads_missing_cell() {
        let text = "a,b\nx,p\ny,\nz,q\n";
        let d = Dataset::read_csv(text.as_bytes(), None).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.cells.iter().filter(|c| c.is_none()).count(), 1);
        assert_eq!(d.cell(1, 1), MISSING);
        assert_eq!(d.schema(), &schema());
    }

    #[test]
    fn inferred_categories_are_lexicographic() {
        let text = "a,b\nz,q\nx,p\ny,p\n";
        let d = Dataset::read_csv(text.as_bytes(), None).unwrap();
        assert_eq!(d.schema().attribute(0).categories, vec!["x", "y", "z"]);
        assert_eq!(d.row(0), &[Some(2), Some(1)]);
    }

    #[test]
    fn unknown_label_under_schema_is_violation() {
        let text = "a,b\nx,p\nw,q\n";
        let err = Dataset::read_csv(text.as_bytes(), Some(&schema())).unwrap_err();
        assert!(
            matches!(err, DataError::SchemaViolation { row: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn ragged_rows_are_format_errors() {
        let text = "a,b\nx,p\ny\n";
        let err = Dataset::read_csv(text.as_bytes(), None).unwrap_err();
        assert!(matches!(err, DataError::Format(_)), "{err}");
    }

    #[test]
    fn weight_column_is_reserved() {
        let text = "a,weight,b\nx,3,p\ny,1,q\n";
        let d = Dataset::read_csv(text.as_bytes(), None).unwrap();
        assert_eq!(d.n_attributes(), 2);
        assert_eq!(d.weights().unwrap(), &[Some(3.0), Some(1.0)]);
        let r = d.replicate_by_weight().unwrap();
        assert_eq!(r.n_rows(), 4);
        assert!(r.weights().is_none());
        assert_eq!(r.row(2), &[Some(0), Some(0)]);
        assert_eq!(r.row(3), &[Some(1), Some(1)]);
    }

    #[test]
    fn unit_weights_replicate_to_identity() {
        let d = Dataset::new(schema(), vec![vec![Some(0), Some(1)], vec![Some(2), None]])
            .unwrap()
            .with_weights(vec![Some(1.0), Some(1.0)])
            .unwrap();
        let r = d.replicate_by_weight().unwrap();
        assert_eq!(r.cells, d.cells);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let d = Dataset::new(schema(), vec![vec![Some(0), Some(1)]])
            .unwrap()
            .with_weights(vec![Some(-1.0)])
            .unwrap();
        assert!(matches!(
            d.replicate_by_weight(),
            Err(DataError::Validation(_))
        ));
    }

    #[test]
    fn csv_round_trip_with_missing_and_weights() {
        let d = Dataset::new(schema(), vec![vec![Some(0), None], vec![Some(2), Some(1)]])
            .unwrap()
            .with_weights(vec![Some(2.5), None])
            .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), Some(&schema())).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn sample_fraction_bounds() {
        let d = Dataset::new(schema(), vec![vec![Some(0), Some(0)]]).unwrap();
        assert!(d.sample_fraction(0.0, 1).is_err());
        assert!(d.sample_fraction(1.5, 1).is_err());
        assert!(Dataset::empty(schema()).sample_fraction(0.5, 1).is_err());
    }

    #[test]
    fn remove_zero_combinations_is_identity() {
        let d = Dataset::new(
            schema(),
            vec![vec![Some(0), Some(0)], vec![Some(1), Some(1)]],
        )
        .unwrap();
        assert_eq!(d.remove_combinations(0, 9).unwrap(), d);
        assert!(d.remove_combinations(2, 9).is_err());
    }
}
