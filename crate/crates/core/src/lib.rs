//! Sublinear-space sketches for proximity search.
//!
//! The crate answers `(1+eps)`-approximate `k`-th nearest neighbor distance
//! queries through an approximate k-order Voronoi diagram whose size depends
//! on `n / k`, estimates distance-based densities, and provides sampling-based
//! estimators. Every structure is checked against the exact routines in
//! [`oracle`].
//!
//! Inputs are normalized first ([`geom::PointSet::normalize`]) so that the data
//! lies in `[1/2, 1/2 + 1/n]^d` and queries live in `[0,1]^d`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accept;
pub mod avd;
pub mod cquadtree;
pub mod density;
pub mod error;
pub mod geom;
pub mod io;
pub mod knn_query;
pub mod oracle;
pub mod quorum;
pub mod sampling;

pub use error::{Error, Result};
pub use geom::{Point, PointSet};
