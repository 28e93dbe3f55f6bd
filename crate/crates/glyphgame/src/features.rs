//! Candidate feature vectors and datasets.
//!
//! A dataset is either generated synthetically (well-separated class
//! prototypes plus Gaussian noise) or loaded from a binary "GLYF"
//! feature file produced by an external feature extractor.
//!
//! File format (little-endian):
//!   magic "GLYF" | u32 version=1 | u32 count | u32 dim
//!   then per item: u32 item_id | u32 class_id | dim × f32 values
//!
//! Values are stored as f32; synthetic generation quantizes through
//! f32 so write → load round-trips exactly.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{streams, RngStream};

pub const FEATURE_MAGIC: &[u8; 4] = b"GLYF";
pub const FEATURE_VERSION: u32 = 1;

/// One candidate item: a feature vector with its item and class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVec {
    pub values: Vec<f64>,
    pub item_id: u32,
    pub class_id: u32,
}

/// An immutable collection of feature vectors.
///
/// `per_class` is the guaranteed minimum number of items per class
/// (exact for synthetic datasets).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    items: Vec<FeatureVec>,
    num_classes: usize,
    per_class: usize,
    dim: usize,
}

impl Dataset {
    pub fn from_items(items: Vec<FeatureVec>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput("dataset has no items".into()));
        }
        let dim = items[0].values.len();
        let mut ids = std::collections::BTreeSet::new();
        let mut class_counts: BTreeMap<u32, usize> = BTreeMap::new();
        for it in &items {
            if it.values.len() != dim {
                return Err(Error::Shape(format!(
                    "item {} has dim {}, expected {}",
                    it.item_id,
                    it.values.len(),
                    dim
                )));
            }
            if !ids.insert(it.item_id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate item id {}",
                    it.item_id
                )));
            }
            *class_counts.entry(it.class_id).or_insert(0) += 1;
        }
        let num_classes = items.iter().map(|i| i.class_id).max().unwrap() as usize + 1;
        let per_class = class_counts.values().copied().min().unwrap_or(0);
        Ok(Dataset {
            items,
            num_classes,
            per_class,
            dim,
        })
    }

    pub fn items(&self) -> &[FeatureVec] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn per_class(&self) -> usize {
        self.per_class
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Item ids of every member of `class`.
    pub fn class_members(&self, class: u32) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.class_id == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Distinct class ids present, ascending.
    pub fn classes(&self) -> Vec<u32> {
        let mut cs: Vec<u32> = self.items.iter().map(|i| i.class_id).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }
}

/// Generate a dataset of `num_classes` Gaussian clusters around
/// uniformly drawn prototypes in [−1,1]^d, rejecting prototype sets
/// with pairwise distance below 0.5·√d.
pub fn generate_synthetic_dataset(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes < 2 {
        return Err(Error::Config(format!(
            "synthetic dataset needs ≥ 2 classes, got {num_classes}"
        )));
    }
    if per_class < 1 {
        return Err(Error::Config("per_class must be ≥ 1".into()));
    }
    if dim < 2 {
        return Err(Error::Config(format!(
            "feature dim must be ≥ 2, got {dim}"
        )));
    }
    if noise_sigma.is_nan() || noise_sigma < 0.0 {
        return Err(Error::Config(format!(
            "noise_sigma must be ≥ 0, got {noise_sigma}"
        )));
    }

    let mut rng = RngStream::new(seed, streams::DATASET);
    let min_dist = 0.5 * (dim as f64).sqrt();
    let mut prototypes: Vec<Vec<f64>> = Vec::with_capacity(num_classes);
    let mut rejections = 0usize;
    while prototypes.len() < num_classes {
        let cand: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let ok = prototypes.iter().all(|p| euclidean(p, &cand) >= min_dist);
        if ok {
            prototypes.push(cand);
        } else {
            rejections += 1;
            if rejections > 10_000 {
                return Err(Error::Config(format!(
                    "could not place {num_classes} prototypes at separation {min_dist:.3} \
                     after 10000 rejections; increase the feature dim"
                )));
            }
        }
    }

    let mut items = Vec::with_capacity(num_classes * per_class);
    for (class, proto) in prototypes.iter().enumerate() {
        for j in 0..per_class {
            let values: Vec<f64> = proto
                .iter()
                .map(|&p| (p + rng.normal(noise_sigma)) as f32 as f64)
                .collect();
            items.push(FeatureVec {
                values,
                item_id: (class * per_class + j) as u32,
                class_id: class as u32,
            });
        }
    }
    Dataset::from_items(items)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Serialize a dataset to GLYF bytes.
pub fn dataset_to_bytes(dataset: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + dataset.len() * (8 + dataset.dim() * 4));
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&(dataset.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dataset.dim() as u32).to_le_bytes());
    for it in dataset.items() {
        out.extend_from_slice(&it.item_id.to_le_bytes());
        out.extend_from_slice(&it.class_id.to_le_bytes());
        for &v in &it.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Parse GLYF bytes into a dataset, rejecting malformed headers,
/// truncated payloads, non-finite values, and duplicate item ids.
pub fn dataset_from_bytes(bytes: &[u8]) -> Result<Dataset> {
    let mut r = crate::binio::Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != FEATURE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            msg: format!(
                "bad magic {:?}, expected {:?}",
                magic,
                &FEATURE_MAGIC[..]
            ),
        });
    }
    let version = r.u32("version")?;
    if version != FEATURE_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FEATURE_VERSION,
        });
    }
    let count = r.u32("item count")? as usize;
    let dim = r.u32("feature dim")? as usize;
    if count == 0 {
        return Err(Error::Parse {
            offset: 8,
            msg: "feature file contains zero items".into(),
        });
    }
    if dim == 0 {
        return Err(Error::Parse {
            offset: 12,
            msg: "feature dim is zero".into(),
        });
    }
    // Reject absurd headers before allocating.
    let need = count
        .checked_mul(8 + dim * 4)
        .and_then(|n| n.checked_add(16));
    match need {
        Some(n) if n <= bytes.len() => {}
        _ => {
            return Err(Error::Parse {
                offset: 8,
                msg: format!(
                    "header claims {count} items of dim {dim}, but file has {} bytes",
                    bytes.len()
                ),
            });
        }
    }

    let mut items = Vec::with_capacity(count);
    for idx in 0..count {
        let item_id = r.u32("item id")?;
        let class_id = r.u32("class id")?;
        let mut values = Vec::with_capacity(dim);
        for d in 0..dim {
            let at = r.pos();
            let v = r.f32("feature value")?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    offset: at,
                    msg: format!("non-finite value in item {idx} dim {d}"),
                });
            }
            values.push(v as f64);
        }
        items.push(FeatureVec {
            values,
            item_id,
            class_id,
        });
    }
    r.expect_end()?;
    Dataset::from_items(items).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::Parse {
            offset: 16,
            msg,
        },
        other => other,
    })
}

pub fn write_feature_file(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset_to_bytes(dataset))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    dataset_from_bytes(&bytes)
}
