//! Categorical attribute vocabulary and its encoding layout.

use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::DataError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub categories: Vec<String>,
}

impl Attribute {
    pub fn new(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Self {
            name: name.into(),
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<u32> {
        self.categories
            .iter()
            .position(|c| c == label)
            .map(|i| i as u32)
    }
}

/// Ordered attributes, each with an ordered list of category labels.
///
/// The order fixes the one-hot layout: attribute blocks appear left to right
/// in schema order and categories within a block in label order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDoc", into = "SchemaDoc")]
pub struct CategoricalSchema {
    attributes: Vec<Attribute>,
}

#[derive(Serialize, Deserialize)]
struct SchemaDoc {
    attributes: Vec<Attribute>,
}

impl TryFrom<SchemaDoc> for CategoricalSchema {
    type Error = DataError;

    fn try_from(doc: SchemaDoc) -> Result<Self, DataError> {
        CategoricalSchema::new(doc.attributes)
    }
}

impl From<CategoricalSchema> for SchemaDoc {
    fn from(s: CategoricalSchema) -> Self {
        SchemaDoc {
            attributes: s.attributes,
        }
    }
}

impl CategoricalSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self, DataError> {
        if attributes.is_empty() {
            return Err(DataError::Schema("schema has no attributes".into()));
        }
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(DataError::Schema(format!(
                    "duplicate attribute name {:?}",
                    attr.name
                )));
            }
            if attr.categories.len() < 2 {
                return Err(DataError::Schema(format!(
                    "attribute {:?} needs at least 2 categories",
                    attr.name
                )));
            }
            let mut labels = HashSet::new();
            for c in &attr.categories {
                if !labels.insert(c.as_str()) {
                    return Err(DataError::Schema(format!(
                        "duplicate category {c:?} in attribute {:?}",
                        attr.name
                    )));
                }
            }
        }
        Ok(Self { attributes })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn require_index(&self, name: &str) -> Result<usize, DataError> {
        self.index_of(name)
            .ok_or_else(|| DataError::UnknownAttribute(name.to_string()))
    }

    pub fn category_counts(&self) -> Vec<usize> {
        self.attributes.iter().map(Attribute::len).collect()
    }

    /// Width of the one-hot encoding: the total number of categories.
    pub fn total_width(&self) -> usize {
        self.attributes.iter().map(Attribute::len).sum()
    }

    /// Column offset of each attribute block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.attributes
            .iter()
            .map(|a| {
                let o = acc;
                acc += a.len();
                o
            })
            .collect()
    }

    /// Block widths in attribute order.
    pub fn layout(&self) -> Arc<[usize]> {
        self.category_counts().into()
    }

    /// Canonical JSON text.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        serde_json::from_str(text).map_err(|e| DataError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// SHA-256 over the compact JSON encoding.
    pub fn digest(&self) -> [u8; 32] {
        let compact = serde_json::to_vec(self).expect("schema serializes");
        Sha256::digest(compact).into()
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CategoricalSchema {
        CategoricalSchema::new(vec![
            Attribute::new("age", ["young", "mid", "old"]),
            Attribute::new("sex", ["f", "m"]),
        ])
        .unwrap()
    }

    #[test]
    fn widths_and_offsets() {
        let s = sample();
        assert_eq!(s.total_width(), 5);
        assert_eq!(s.offsets(), vec![0, 3]);
        assert_eq!(&*s.layout(), &[3, 2]);
    }

    #[test]
    fn rejects_bad_vocabularies() {
        assert!(CategoricalSchema::new(vec![Attribute::new("a", ["x"])]).is_err());
        assert!(CategoricalSchema::new(vec![Attribute::new("a", ["x", "x"])]).is_err());
        assert!(CategoricalSchema::new(vec![
            Attribute::new("a", ["x", "y"]),
            Attribute::new("a", ["x", "y"]),
        ])
        .is_err());
        assert!(CategoricalSchema::from_json(
            r#"{"attributes":[{"name":"a","categories":["x"]}]}"#
        )
        .is_err());
    }

    #[test]
    fn json_round_trip_keeps_digest() {
        let s = sample();
        let back = CategoricalSchema::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.digest(), s.digest());
        let other = CategoricalSchema::new(vec![
            Attribute::new("age", ["young", "old", "mid"]),
            Attribute::new("sex", ["f", "m"]),
        ])
        .unwrap();
        assert_ne!(other.digest(), s.digest());
    }
}
