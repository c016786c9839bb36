//! One-hot encoding with a companion missing-value mask, and decoding back
//! to categories.
//!
//! A present cell becomes a one-hot block; a missing cell becomes an all-zero
//! block, and the mask carries zeros over exactly that block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::dataset::{Cell, Dataset};
use crate::schema::CategoricalSchema;
use crate::DataError;

/// One-hot rows; each attribute block sums to 1, or to 0 when missing.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedMatrix(pub Tensor);

/// Binary matrix of the same shape as the encoding, 0 over missing blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskMatrix(pub Tensor);

impl EncodedMatrix {
    pub fn tensor(&self) -> &Tensor {
        &self.0
    }
}

impl MaskMatrix {
    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        MaskMatrix(Tensor::filled(rows, cols, 1.0))
    }

    /// Number of (row, attribute) blocks that are masked out.
    pub fn zero_blocks(&self, schema: &CategoricalSchema) -> usize {
        let offsets = schema.offsets();
        (0..self.0.rows())
            .map(|r| {
                let row = self.0.row(r);
                offsets.iter().filter(|&&o| row[o] == 0.0).count()
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Argmax,
    #[default]
    Sample,
}

impl std::str::FromStr for DecodeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "argmax" => Ok(DecodeMode::Argmax),
            "sample" => Ok(DecodeMode::Sample),
            other => Err(format!("unknown decode mode {other:?} (argmax | sample)")),
        }
    }
}

pub fn encode(d: &Dataset) -> (EncodedMatrix, MaskMatrix) {
    let schema = d.schema();
    let width = schema.total_width();
    let offsets = schema.offsets();
    let counts = schema.category_counts();
    let mut x = Tensor::zeros(d.n_rows(), width);
    let mut y = Tensor::filled(d.n_rows(), width, 1.0);
    for (r, row) in d.rows().enumerate() {
        let (xr, yr) = (x.row_mut(r), y.row_mut(r));
        for (a, cell) in row.iter().enumerate() {
            match cell {
                Some(c) => xr[offsets[a] + *c as usize] = 1.0,
                None => yr[offsets[a]..offsets[a] + counts[a]].fill(0.0),
            }
        }
    }
    (EncodedMatrix(x), MaskMatrix(y))
}

/// Turns per-block probability rows into categories.
///
/// `Argmax` takes the largest entry of each block (lowest index on ties);
/// `Sample` draws a category with probability proportional to the entries.
pub fn decode(
    e: &Tensor,
    schema: &CategoricalSchema,
    mode: DecodeMode,
    seed: u64,
) -> Result<Dataset, DataError> {
    const SUM_TOLERANCE: f64 = 1e-6;
    if e.cols() != schema.total_width() {
        return Err(DataError::Decode(format!(
            "matrix width {} does not match schema width {}",
            e.cols(),
            schema.total_width()
        )));
    }
    let offsets = schema.offsets();
    let counts = schema.category_counts();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<Cell> = Vec::with_capacity(e.rows() * counts.len());
    for r in 0..e.rows() {
        let row = e.row(r);
        for (a, (&o, &w)) in offsets.iter().zip(&counts).enumerate() {
            let block = &row[o..o + w];
            if block.iter().any(|v| !(*v >= 0.0)) {
                return Err(DataError::Decode(format!(
                    "row {r}, attribute {a}: negative or non-finite entry"
                )));
            }
            let total: f64 = block.iter().sum();
            if total <= 0.0 {
                return Err(DataError::Decode(format!(
                    "row {r}, attribute {a}: all-zero block"
                )));
            }
            if total > 1.0 + SUM_TOLERANCE {
                return Err(DataError::Decode(format!(
                    "row {r}, attribute {a}: block sums to {total}"
                )));
            }
            let idx = match mode {
                DecodeMode::Argmax => {
                    let mut best = 0;
                    for (i, &v) in block.iter().enumerate() {
                        if v > block[best] {
                            best = i;
                        }
                    }
                    best
                }
                DecodeMode::Sample => {
                    let u: f64 = rng.gen::<f64>() * total;
                    let mut acc = 0.0;
                    let mut chosen = None;
                    for (i, &v) in block.iter().enumerate() {
                        acc += v;
                        if u < acc && v > 0.0 {
                            chosen = Some(i);
                            break;
                        }
                    }
                    // Rounding can leave u just above the running sum.
                    chosen.unwrap_or_else(|| block.iter().rposition(|&v| v > 0.0).unwrap_or(0))
                }
            };
            cells.push(Some(idx as u32));
        }
    }
    Dataset::from_cells(schema.clone(), cells, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Attribute;

    fn schema() -> CategoricalSchema {
        CategoricalSchema::new(vec![
            Attribute::new("a", ["0", "1", "2"]),
            Attribute::new("b", ["0", "1"]),
        ])
        .unwrap()
    }

    #[test]
    fn missing_block_zeroed_in_data_and_mask() {
        let d = Dataset::new(schema(), vec![vec![Some(1), None]]).unwrap();
        let (x, y) = encode(&d);
        assert_eq!(x.0.data(), &[0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(y.0.data(), &[1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn complete_data_gives_all_ones_mask() {
        let d = Dataset::new(
            schema(),
            vec![vec![Some(2), Some(0)], vec![Some(0), Some(1)]],
        )
        .unwrap();
        let (_, y) = encode(&d);
        assert!(y.0.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn decode_inverts_one_hot_in_both_modes() {
        let d = Dataset::new(
            schema(),
            vec![vec![Some(2), Some(0)], vec![Some(0), Some(1)]],
        )
        .unwrap();
        let (x, _) = encode(&d);
        for mode in [DecodeMode::Argmax, DecodeMode::Sample] {
            assert_eq!(decode(&x.0, d.schema(), mode, 3).unwrap(), d);
        }
    }

    #[test]
    fn argmax_picks_largest_and_lowest_on_ties() {
        let s = CategoricalSchema::new(vec![Attribute::new("a", ["0", "1"])]).unwrap();
        let e = Tensor::new(2, 2, vec![0.2, 0.8, 0.5, 0.5]).unwrap();
        let d = decode(&e, &s, DecodeMode::Argmax, 0).unwrap();
        assert_eq!(d.row(0), &[Some(1)]);
        assert_eq!(d.row(1), &[Some(0)]);
    }

    #[test]
    fn sampling_even_block_is_fair() {
        let s = CategoricalSchema::new(vec![Attribute::new("a", ["0", "1"])]).unwrap();
        let n = 10_000;
        let e = Tensor::from_fn(n, 2, |_, _| 0.5);
        let d = decode(&e, &s, DecodeMode::Sample, 11).unwrap();
        let zeros = d.column(0).filter(|c| *c == Some(0)).count();
        let freq = zeros as f64 / n as f64;
        // 4 standard deviations of Binomial(10000, 0.5) is 0.02.
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn all_zero_block_cannot_be_decoded() {
        let e = Tensor::new(1, 5, vec![0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            decode(&e, &schema(), DecodeMode::Argmax, 0),
            Err(DataError::Decode(_))
        ));
    }

    #[test]
    fn wrong_width_is_rejected() {
        let e = Tensor::zeros(1, 4);
        assert!(decode(&e, &schema(), DecodeMode::Argmax, 0).is_err());
    }
}
