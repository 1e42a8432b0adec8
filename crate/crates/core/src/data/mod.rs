//! Dataset model: per-modality embedding matrices with multi-hot labels,
//! the train/retrieval/query split, and modality concatenation.

mod embx;
mod manifest;
mod synthetic;

use std::collections::HashSet;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, FormatError, Result};

pub use embx::{read_embedding_file, read_embeddings, write_embedding_file, write_embeddings};
pub use manifest::SplitManifest;
pub use synthetic::generate_synthetic;

/// Per-modality width used throughout the reference configuration
/// (image and text embeddings are both 512-D).
pub const DEFAULT_MODALITY_DIM: usize = 512;

pub fn default_modality_dims() -> Vec<usize> {
    vec![DEFAULT_MODALITY_DIM, DEFAULT_MODALITY_DIM]
}

/// A collection of samples, each with one embedding per modality plus a
/// multi-hot label row.
///
/// Features are kept at storage precision (`f32`); everything downstream
/// works in `f64`. A set with `category_count == 0` is unlabeled; otherwise
/// every label row must have at least one bit set.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    modality_dims: Vec<usize>,
    features: Vec<Array2<f32>>,
    labels: Array2<u8>,
    ids: Vec<u64>,
}

impl EmbeddingSet {
    pub fn new(
        modality_dims: Vec<usize>,
        features: Vec<Array2<f32>>,
        labels: Array2<u8>,
        ids: Vec<u64>,
    ) -> Result<Self, FormatError> {
        let set = Self {
            modality_dims,
            features,
            labels,
            ids,
        };
        set.validate()?;
        Ok(set)
    }

    /// An empty set with the given layout.
    pub fn empty(modality_dims: Vec<usize>, category_count: usize) -> Self {
        let features = modality_dims.iter().map(|&d| Array2::zeros((0, d))).collect();
        Self {
            modality_dims,
            features,
            labels: Array2::zeros((0, category_count)),
            ids: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        if self.modality_dims.is_empty() {
            return Err(FormatError::Inconsistent("no modalities".into()));
        }
        if self.features.len() != self.modality_dims.len() {
            return Err(FormatError::Inconsistent(format!(
                "{} feature matrices for {} modalities",
                self.features.len(),
                self.modality_dims.len()
            )));
        }
        let count = self.ids.len();
        for (m, (feat, &dim)) in self.features.iter().zip(&self.modality_dims).enumerate() {
            if dim == 0 {
                return Err(FormatError::Inconsistent(format!("modality {m} has dim 0")));
            }
            if feat.dim() != (count, dim) {
                return Err(FormatError::Inconsistent(format!(
                    "modality {m} is {:?}, expected ({count}, {dim})",
                    feat.dim()
                )));
            }
            if let Some(((row, col), _)) = feat.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(FormatError::NonFinite { modality: m, row, col });
            }
        }
        if self.labels.nrows() != count {
            return Err(FormatError::Inconsistent(format!(
                "{} label rows for {count} samples",
                self.labels.nrows()
            )));
        }
        if let Some(((row, col), &value)) = self.labels.indexed_iter().find(|(_, &v)| v > 1) {
            return Err(FormatError::InvalidLabel { row, col, value });
        }
        if self.category_count() > 0 {
            if let Some(row) = self.labels.rows().into_iter().position(|r| r.iter().all(|&v| v == 0)) {
                return Err(FormatError::EmptyLabelRow { row });
            }
        }
        let mut seen = HashSet::with_capacity(count);
        for &id in &self.ids {
            if !seen.insert(id) {
                return Err(FormatError::DuplicateId(id));
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn modality_dims(&self) -> &[usize] {
        &self.modality_dims
    }

    /// Width of the concatenated feature vector.
    pub fn concat_dim(&self) -> usize {
        self.modality_dims.iter().sum()
    }

    pub fn category_count(&self) -> usize {
        self.labels.ncols()
    }

    pub fn is_unlabeled(&self) -> bool {
        self.category_count() == 0
    }

    pub fn features(&self, modality: usize) -> ArrayView2<'_, f32> {
        self.features[modality].view()
    }

    pub fn labels(&self) -> ArrayView2<'_, u8> {
        self.labels.view()
    }

    pub fn label_row(&self, index: usize) -> ArrayView1<'_, u8> {
        self.labels.row(index)
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Concatenates the modalities of one sample in declared order.
    pub fn concat_modalities(&self, index: usize) -> Result<ConcatFeature> {
        if index >= self.sample_count() {
            return Err(Error::IndexOutOfRange {
                index,
                count: self.sample_count(),
            });
        }
        let mut v = Vec::with_capacity(self.concat_dim());
        for feat in &self.features {
            v.extend(feat.row(index).iter().map(|&x| x as f64));
        }
        Ok(ConcatFeature(Array1::from(v)))
    }

    /// Concatenated features for rows `start..end` as a `(end - start) × n`
    /// matrix. With `normalize`, each modality block is scaled to unit L2
    /// norm first (all-zero blocks stay zero).
    pub fn concat_rows(&self, start: usize, end: usize, normalize: bool) -> Array2<f64> {
        let n = self.concat_dim();
        let mut out = Array2::zeros((end - start, n));
        let mut offset = 0;
        for (feat, &dim) in self.features.iter().zip(&self.modality_dims) {
            let src = feat.slice(s![start..end, ..]);
            let mut dst = out.slice_mut(s![.., offset..offset + dim]);
            for (mut drow, srow) in dst.rows_mut().into_iter().zip(src.rows()) {
                drow.zip_mut_with(&srow, |d, &s| *d = s as f64);
                if normalize {
                    let norm = drow.dot(&drow).sqrt();
                    if norm > 0.0 {
                        drow.mapv_inplace(|v| v / norm);
                    }
                }
            }
            offset += dim;
        }
        out
    }

    /// All samples as one `sample_count × n` matrix.
    pub fn concat_all(&self, normalize: bool) -> Array2<f64> {
        self.concat_rows(0, self.sample_count(), normalize)
    }
}

/// The multi-view feature vector fed to the fusion module:
/// per-modality embeddings laid end to end.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcatFeature(pub Array1<f64>);

impl ConcatFeature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }
}

impl From<Vec<f64>> for ConcatFeature {
    fn from(v: Vec<f64>) -> Self {
        ConcatFeature(Array1::from(v))
    }
}

/// Train / retrieval / query roles. Queries are ranked against the
/// retrieval set; the model only ever sees the training set.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: EmbeddingSet,
    pub retrieval: EmbeddingSet,
    pub query: EmbeddingSet,
    category_count: usize,
}

impl DatasetSplit {
    pub fn new(
        train: EmbeddingSet,
        retrieval: EmbeddingSet,
        query: EmbeddingSet,
        category_count: usize,
    ) -> Result<Self, FormatError> {
        if category_count == 0 {
            return Err(FormatError::Inconsistent("category_count must be positive".into()));
        }
        for (name, set) in [("train", &train), ("retrieval", &retrieval), ("query", &query)] {
            if set.category_count() != category_count {
                return Err(FormatError::Inconsistent(format!(
                    "{name} set has {} categories, split declares {category_count}",
                    set.category_count()
                )));
            }
            if set.modality_dims() != train.modality_dims() {
                return Err(FormatError::Inconsistent(format!(
                    "{name} set has modality dims {:?}, train has {:?}",
                    set.modality_dims(),
                    train.modality_dims()
                )));
            }
        }
        let retrieval_ids: HashSet<u64> = retrieval.ids().iter().copied().collect();
        if let Some(&id) = query.ids().iter().find(|id| retrieval_ids.contains(id)) {
            return Err(FormatError::Inconsistent(format!(
                "id {id} appears in both query and retrieval sets"
            )));
        }
        Ok(Self {
            train,
            retrieval,
            query,
            category_count,
        })
    }

    pub fn category_count(&self) -> usize {
        self.category_count
    }

    pub fn modality_dims(&self) -> &[usize] {
        self.train.modality_dims()
    }
}
