//! Seeded Gaussian-cluster data standing in for real embedding datasets.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DatasetSplit, EmbeddingSet};
use crate::error::{Error, Result};

/// Draws one random unit-norm center per class and modality, then
/// `per_class` samples of `center + N(0, noise_sigma²)` per class.
///
/// Per class, the first `max(1, per_class / 10)` samples become queries
/// (none when `per_class == 1`) and the rest form the retrieval set. Every
/// other retrieval sample is also placed in the training set, so training
/// is a subset of retrieval and queries are never seen during training.
/// Sample ids are `class * per_class + j`; labels are one-hot.
pub fn generate_synthetic(
    class_count: usize,
    per_class: usize,
    modality_dims: &[usize],
    noise_sigma: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if class_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "class_count must be at least 2, got {class_count}"
        )));
    }
    if per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be positive".into()));
    }
    if modality_dims.is_empty() || modality_dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "modality dims must be non-empty and positive, got {modality_dims:?}"
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise_sigma must be finite and non-negative, got {noise_sigma}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<Vec<f64>>> = (0..class_count)
        .map(|_| modality_dims.iter().map(|&d| unit_vector(&mut rng, d)).collect())
        .collect();

    let query_per_class = if per_class >= 2 { (per_class / 10).max(1) } else { 0 };

    let mut builders = [(); 3].map(|_| SetBuilder::new(modality_dims, class_count));
    let [train, retrieval, query] = &mut builders;
    for (class, class_centers) in centers.iter().enumerate() {
        for j in 0..per_class {
            let features: Vec<Vec<f32>> = class_centers
                .iter()
                .map(|center| {
                    center
                        .iter()
                        .map(|&c| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            (c + noise_sigma * z) as f32
                        })
                        .collect()
                })
                .collect();
            let id = (class * per_class + j) as u64;
            if j < query_per_class {
                query.push(id, class, &features);
            } else {
                if (j - query_per_class) % 2 == 0 {
                    train.push(id, class, &features);
                }
                retrieval.push(id, class, &features);
            }
        }
    }

    let [train, retrieval, query] = builders.map(SetBuilder::build);
    Ok(DatasetSplit::new(train?, retrieval?, query?, class_count)?)
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

struct SetBuilder {
    dims: Vec<usize>,
    categories: usize,
    features: Vec<Vec<f32>>,
    labels: Vec<u8>,
    ids: Vec<u64>,
}

impl SetBuilder {
    fn new(dims: &[usize], categories: usize) -> Self {
        Self {
            dims: dims.to_vec(),
            categories,
            features: vec![Vec::new(); dims.len()],
            labels: Vec::new(),
            ids: Vec::new(),
        }
    }

    fn push(&mut self, id: u64, class: usize, features: &[Vec<f32>]) {
        for (dst, src) in self.features.iter_mut().zip(features) {
            dst.extend_from_slice(src);
        }
        let mut row = vec![0u8; self.categories];
        row[class] = 1;
        self.labels.extend_from_slice(&row);
        self.ids.push(id);
    }

    fn build(self) -> Result<EmbeddingSet> {
        let count = self.ids.len();
        let features = self
            .features
            .into_iter()
            .zip(&self.dims)
            .map(|(v, &d)| Array2::from_shape_vec((count, d), v).expect("row widths match dims"))
            .collect();
        let labels = Array2::from_shape_vec((count, self.categories), self.labels).expect("one label row per sample");
        Ok(EmbeddingSet::new(self.dims, features, labels, self.ids)?)
    }
}
