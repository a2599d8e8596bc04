use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Model, Params};
use super::PipelineConfig;
use crate::error::{Error, Result};
use crate::moments::{is_json, ByteReader, LAYOUT_VERSION};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ZCK1";

/// Everything needed to rebuild a trained pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layout_version: u32,
    pub config: PipelineConfig,
    pub class_names: Vec<String>,
    pub params: Params,
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    layout_version: u32,
    config: PipelineConfig,
    class_names: Vec<String>,
}

impl Checkpoint {
    pub fn new(config: PipelineConfig, class_names: Vec<String>, params: Params) -> Self {
        Self { layout_version: LAYOUT_VERSION, config, class_names, params }
    }

    /// Validates the checkpoint and rebuilds its model.
    pub fn model(&self) -> Result<Model> {
        if self.layout_version != LAYOUT_VERSION {
            return Err(Error::LayoutMismatch {
                expected: LAYOUT_VERSION.to_string(),
                found: self.layout_version.to_string(),
            });
        }
        let model = Model::new(self.config, self.class_names.len())?;
        model.check_params(&self.params)?;
        if self.params.kernels.iter().any(|k| k.iter().zip(model.kernel_mask()).any(|(v, keep)| !keep && *v != 0.0)) {
            return Err(Error::UnmaskedKernel);
        }
        Ok(model)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&BinaryHeader {
            layout_version: self.layout_version,
            config: self.config,
            class_names: self.class_names.clone(),
        })?;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.params.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Tensor shapes follow from the header, so the payload carries raw values only.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = ByteReader::new(bytes);
        if rd.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("missing ZCK1 magic".into()));
        }
        let len = rd.u64()? as usize;
        let header: BinaryHeader = serde_json::from_slice(rd.take(len)?)?;
        let model = Model::new(header.config, header.class_names.len())?;
        let mut params = model.zero_params();
        for t in params.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&rd.f64_vec(n)?);
        }
        rd.finish()?;
        let ck = Checkpoint {
            layout_version: header.layout_version,
            config: header.config,
            class_names: header.class_names,
            params,
        };
        ck.model()?;
        Ok(ck)
    }
}

/// Writes JSON for a `.json` extension and binary otherwise.
pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    if is_json(path) {
        fs::write(path, serde_json::to_string(ck)?)?;
    } else {
        fs::write(path, ck.to_bytes()?)?;
    }
    Ok(())
}

/// Reads either format and validates it against its configuration.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(CHECKPOINT_MAGIC) {
        return Checkpoint::from_bytes(&bytes);
    }
    let ck: Checkpoint = serde_json::from_slice(&bytes)?;
    ck.model()?;
    Ok(ck)
}
