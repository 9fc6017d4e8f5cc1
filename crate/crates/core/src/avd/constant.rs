//! Constant-factor approximation of `d_k`: a nearest lifted quorum ball under
//! the product norm.

use crate::avd::{clusters_for, real_member, Target};
use crate::error::{Error, Result};
use crate::geom::{dist, PointSet, Transform};
use crate::knn_query::{KnnConfig, KnnQueryStructure};
use crate::quorum::QuorumClustering;

/// `(1+eps)` with `eps = sqrt(2) - 1` keeps the Euclidean answer a `sqrt(2)`-ANN.
const LIFTED_EPS: f64 = std::f64::consts::SQRT_2 - 1.0;

#[derive(Debug, Clone)]
pub struct ConstantFactor {
    clustering: QuorumClustering,
    lifted: KnnQueryStructure,
    witness: Vec<usize>,
    k: usize,
    transform: Transform,
}

impl ConstantFactor {
    pub fn build(ps: &PointSet, k: usize, seed: u64) -> Result<Self> {
        let (padded, clustering) = clusters_for(ps, Target::Count(k))?;
        let d = ps.dim();
        let mut coords = Vec::with_capacity(clustering.len() * (d + 1));
        for c in &clustering.clusters {
            coords.extend_from_slice(&c.center);
            coords.push(c.radius);
        }
        let lifted_ps = PointSet::from_coords(d + 1, coords, None)?;
        let lifted = KnnQueryStructure::build_with(&lifted_ps, KnnConfig { seed, ..KnnConfig::default() })?;
        let fallback = ps.real_indices()[0];
        let witness = clustering
            .clusters
            .iter()
            .map(|c| real_member(&padded, &c.members).unwrap_or(fallback))
            .collect();
        Ok(ConstantFactor { clustering, lifted, witness, k, transform: ps.transform().clone() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn clustering(&self) -> &QuorumClustering {
        &self.clustering
    }

    pub fn dim(&self) -> usize {
        self.lifted.points().dim() - 1
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// `(dist(q, c_j) + r_j, witness)` for the lifted ball `j` found by the 2-ANN search.
    pub fn query(&self, q: &[f64]) -> Result<(f64, usize)> {
        let d = self.dim();
        if q.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: q.len(), line: None });
        }
        let mut lq = q.to_vec();
        lq.push(0.0);
        let a = self.lifted.knn_distance(&lq, 1, LIFTED_EPS)?;
        let c = &self.clustering.clusters[a.witness];
        Ok((dist(q, &c.center) + c.radius, self.witness[a.witness]))
    }
}
