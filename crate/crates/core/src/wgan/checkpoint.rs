//! Single-file checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "PSWGANCK" | version u32 | schema digest [32]
//! config  u64 length + JSON
//! schema  u64 length + JSON
//! tensors u32 count, then per tensor:
//!         u32 name length + UTF-8 name | u64 rows | u64 cols | rows*cols f64
//! SHA-256 of everything above [32]
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::nets::{CriticNet, GeneratorNet};
use super::train::TrainingConfig;
use super::WganError;
use crate::autodiff::Tensor;
use crate::schema::CategoricalSchema;

const MAGIC: &[u8; 8] = b"PSWGANCK";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub generator: GeneratorNet,
    pub critic: CriticNet,
    pub config: TrainingConfig,
    pub schema: CategoricalSchema,
}

impl Checkpoint {
    /// Fails unless `schema` is the one the networks were trained on.
    pub fn require_schema(&self, schema: &CategoricalSchema) -> Result<(), WganError> {
        if schema.digest() != self.schema.digest() {
            return Err(WganError::Incompatible(format!(
                "checkpoint schema {} does not match {}",
                self.schema.digest_hex(),
                schema.digest_hex()
            )));
        }
        Ok(())
    }
}

pub fn save_checkpoint(
    generator: &GeneratorNet,
    critic: &CriticNet,
    config: &TrainingConfig,
    path: &Path,
) -> Result<(), WganError> {
    let schema = generator.schema();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&schema.digest());
    let config_json = serde_json::to_vec(config).expect("config serializes");
    write_blob(&mut out, &config_json);
    write_blob(&mut out, schema.to_json().as_bytes());
    let params: Vec<_> = generator
        .params
        .iter()
        .chain(critic.params.iter())
        .collect();
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.value.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(p.value.cols() as u64).to_le_bytes());
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let checksum = Sha256::digest(&out);
    out.extend_from_slice(&checksum);
    fs::write(path, out)?;
    Ok(())
}

fn write_blob(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(bytes);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WganError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| WganError::Format("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, WganError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<usize, WganError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| WganError::Format("length out of range".into()))
    }

    fn blob(&mut self) -> Result<&'a [u8], WganError> {
        let n = self.u64()?;
        self.take(n)
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, WganError> {
    let bytes = fs::read(path)?;
    if bytes.len() < MAGIC.len() + 4 + 32 + 32 {
        return Err(WganError::Format("truncated checkpoint".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(WganError::Format("not a checkpoint file".into()));
    }
    if Sha256::digest(body).as_slice() != checksum {
        return Err(WganError::Format("checksum mismatch".into()));
    }
    let mut r = Reader {
        bytes: body,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != VERSION {
        return Err(WganError::Format(format!("unsupported version {version}")));
    }
    let digest: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let config: TrainingConfig = serde_json::from_slice(r.blob()?)
        .map_err(|e| WganError::Format(format!("config record: {e}")))?;
    let schema_text = std::str::from_utf8(r.blob()?)
        .map_err(|_| WganError::Format("schema is not UTF-8".into()))?;
    let schema = CategoricalSchema::from_json(schema_text)
        .map_err(|e| WganError::Format(format!("schema record: {e}")))?;
    if schema.digest() != digest {
        return Err(WganError::Format(
            "schema digest does not match embedded schema".into(),
        ));
    }

    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| WganError::Format("tensor name is not UTF-8".into()))?
            .to_string();
        let rows = r.u64()?;
        let cols = r.u64()?;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| WganError::Format("tensor too large".into()))?;
        let data = r
            .take(n)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push((name, Tensor::new(rows, cols, data)?));
    }
    if r.pos != body.len() {
        return Err(WganError::Format("trailing bytes".into()));
    }

    let mut generator = GeneratorNet::new(
        schema.clone(),
        config.latent_dim,
        config.hidden_units,
        config.hidden_layers,
        0,
    );
    let mut critic = CriticNet::new(
        schema.total_width(),
        config.hidden_units,
        config.hidden_layers,
        0,
    );
    let n_gen = generator.params.len();
    if tensors.len() != n_gen + critic.params.len() {
        return Err(WganError::Format(format!(
            "{} tensors, expected {}",
            tensors.len(),
            n_gen + critic.params.len()
        )));
    }
    let critic_tensors = tensors.split_off(n_gen);
    generator
        .params
        .load_values(tensors)
        .map_err(|e| WganError::Format(e.to_string()))?;
    critic
        .params
        .load_values(critic_tensors)
        .map_err(|e| WganError::Format(e.to_string()))?;
    Ok(Checkpoint {
        generator,
        critic,
        config,
        schema,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::DecodeMode;
    use crate::schema::Attribute;
    use crate::wgan::generate_population;

    fn setup() -> (GeneratorNet, CriticNet, TrainingConfig) {
        let schema = CategoricalSchema::new(vec![
            Attribute::new("a", ["x", "y"]),
            Attribute::new("b", ["p", "q", "r"]),
        ])
        .unwrap();
        let config = TrainingConfig {
            latent_dim: 3,
            hidden_units: 4,
            ..TrainingConfig::default()
        };
        let g = GeneratorNet::new(schema, 3, 4, 2, 1);
        let d = CriticNet::new(5, 4, 2, 2);
        (g, d, config)
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (g, d, c) = setup();
        save_checkpoint(&g, &d, &c, &path).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        for (a, b) in ck.generator.params.iter().zip(g.params.iter()) {
            assert_eq!(a.value, b.value);
        }
        assert_eq!(ck.config, c);
        let x = generate_population(&g, 50, DecodeMode::Sample, 4).unwrap();
        let y = generate_population(&ck.generator, 50, DecodeMode::Sample, 4).unwrap();
        assert_eq!(x, y);
        assert!(ck.require_schema(g.schema()).is_ok());
    }

    #[test]
    fn corruption_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (g, d, c) = setup();
        save_checkpoint(&g, &d, &c, &path).unwrap();
        let good = fs::read(&path).unwrap();
        for i in [0, 12, good.len() / 2, good.len() - 1] {
            let mut bad = good.clone();
            bad[i] ^= 0x40;
            fs::write(&path, &bad).unwrap();
            assert!(
                matches!(load_checkpoint(&path), Err(WganError::Format(_))),
                "byte {i}"
            );
        }
        fs::write(&path, &good[..good.len() - 10]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(WganError::Format(_))));
    }

    #[test]
    fn other_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (g, d, c) = setup();
        save_checkpoint(&g, &d, &c, &path).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        let other = CategoricalSchema::new(vec![
            Attribute::new("a", ["x", "y"]),
            Attribute::new("b", ["p", "q", "s"]),
        ])
        .unwrap();
        assert!(matches!(
            ck.require_schema(&other),
            Err(WganError::Incompatible(_))
        ));
    }
}
