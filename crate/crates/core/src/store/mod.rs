//! On-disk and in-memory data model: manifests, prediction tensors, labels.

pub mod dten;
pub mod manifest;
pub mod tensor;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

pub use manifest::{load_manifest, save_manifest, BenchmarkManifest, ModelMeta, FORMAT_VERSION};
pub use tensor::{
    accuracy, accuracy_of, argmax, correctness, load_tensor, CorrectnessVector, PredictionTensor,
    ROW_SUM_TOLERANCE,
};

use crate::error::Result;
use crate::par;

/// Anything that can hand out a model's tensor by id.
pub trait TensorSource: Sync {
    fn tensor(&self, model_id: &str) -> Result<Arc<PredictionTensor>>;
}

/// Fetches several tensors, possibly in parallel, preserving order.
pub fn fetch_all(source: &dyn TensorSource, ids: &[String]) -> Result<Vec<Arc<PredictionTensor>>> {
    par::try_map_range(ids.len(), |i| source.tensor(&ids[i]))
}

/// A manifest with every tensor held in memory.
#[derive(Debug, Clone)]
pub struct Population {
    pub manifest: BenchmarkManifest,
    tensors: BTreeMap<String, Arc<PredictionTensor>>,
}

impl Population {
    pub fn new(manifest: BenchmarkManifest, tensors: Vec<PredictionTensor>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in tensors {
            manifest.model(&t.model_id)?;
            tensor::check_shape(&t, &manifest)?;
            map.insert(t.model_id.clone(), Arc::new(t));
        }
        for m in &manifest.models {
            if !map.contains_key(&m.model_id) {
                return Err(crate::Error::UnknownModel(m.model_id.clone()));
            }
        }
        Ok(Population {
            manifest,
            tensors: map,
        })
    }

    /// Loads the manifest at `path` and every tensor it registers.
    pub fn load(path: &Path) -> Result<Self> {
        let manifest = load_manifest(path)?;
        let ids = manifest.model_ids();
        let tensors = par::try_map_range(ids.len(), |i| load_tensor(&manifest, &ids[i]))?;
        Self::new(manifest, tensors)
    }

    /// Writes the manifest to `dir/manifest.json` and tensors to their registered paths.
    pub fn save(&self, dir: &Path) -> Result<()> {
        save_manifest(&self.manifest, &dir.join("manifest.json"))?;
        for m in &self.manifest.models {
            self.tensors[&m.model_id].save(&dir.join(&m.tensor_path))?;
        }
        Ok(())
    }

    pub fn tensors_in_order(&self) -> Vec<Arc<PredictionTensor>> {
        self.manifest
            .models
            .iter()
            .map(|m| Arc::clone(&self.tensors[&m.model_id]))
            .collect()
    }
}

impl TensorSource for Population {
    fn tensor(&self, model_id: &str) -> Result<Arc<PredictionTensor>> {
        self.tensors
            .get(model_id)
            .cloned()
            .ok_or_else(|| crate::Error::UnknownModel(model_id.to_string()))
    }
}

/// Lazily loads tensors from disk, caching each one after first use.
pub struct DiskTensors<'a> {
    manifest: &'a BenchmarkManifest,
    cache: Mutex<BTreeMap<String, Arc<PredictionTensor>>>,
}

impl<'a> DiskTensors<'a> {
    pub fn new(manifest: &'a BenchmarkManifest) -> Self {
        DiskTensors {
            manifest,
            cache: Mutex::new(BTreeMap::new()),
        }
    }
}

impl TensorSource for DiskTensors<'_> {
    fn tensor(&self, model_id: &str) -> Result<Arc<PredictionTensor>> {
        if let Some(t) = self.cache.lock().unwrap().get(model_id) {
            return Ok(Arc::clone(t));
        }
        let t = Arc::new(load_tensor(self.manifest, model_id)?);
        self.cache
            .lock()
            .unwrap()
            .insert(model_id.to_string(), Arc::clone(&t));
        Ok(t)
    }
}
