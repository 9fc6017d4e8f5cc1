//! Approximate k-order Voronoi diagrams.
//!
//! [`constant`] holds the small constant-factor structure over lifted quorum
//! balls; [`kavd`] the `(1+eps)` sketch; [`point_avd`] the ordinary AVD used on
//! the lifted balls; [`format`] the binary container.

pub mod constant;
pub mod format;
pub mod kavd;
pub mod point_avd;

pub use constant::ConstantFactor;
pub use kavd::{build_kavd, build_kavd_weighted, CellRecord, KAvdSketch, KavdConfig, KavdStats, Target};
pub use point_avd::{build_point_avd, AvdMode, PointAvd};

use crate::error::{Error, Result};
use crate::geom::PointSet;
use crate::quorum::{quorum_cluster, quorum_cluster_weighted, QuorumClustering};

/// Real member of a cluster, falling back to any real point when the cluster is all padding.
pub(crate) fn real_member(ps: &PointSet, members: &[usize]) -> Option<usize> {
    members.iter().copied().find(|&m| !ps.is_synthetic(m))
}

/// Pads to a multiple of `k` and clusters, or clusters by weight.
pub(crate) fn clusters_for(ps: &PointSet, target: Target) -> Result<(PointSet, QuorumClustering)> {
    match target {
        Target::Count(k) => {
            if k == 0 || k > ps.real_count() {
                return Err(Error::InvalidArgument(format!("k = {k} outside [1, {}]", ps.real_count())));
            }
            let padded = ps.pad_to_multiple(k)?;
            let q = quorum_cluster(&padded, k)?;
            Ok((padded, q))
        }
        Target::Weight(tau) => {
            let q = quorum_cluster_weighted(ps, tau)?;
            Ok((ps.clone(), q))
        }
    }
}
