//! Multipole acceleration of the boundary operators.
//!
//! Replaces the dense Galerkin matrices with matrix-free operators: exact
//! near-field blocks plus truncated solid-harmonic expansions for well
//! separated parts of the element pair space, organized by an octree over
//! element centroids. Matching configurations make the accelerated apply
//! agree with dense assembly to the expansion truncation error while costing
//! close to linear time in the element count.

pub mod harmonics;
pub mod octree;
mod operator;

pub use octree::{build_octree, Octree, OctreeNode};
pub use operator::{build_fmm_system, fmm_operator, FmmOperator, FmmParts, FmmStats};

use thiserror::Error;

use crate::assembly::AssemblyError;

#[derive(Debug, Error)]
pub enum FmmError {
    #[error("multipole configuration: {0}")]
    Configuration(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Tuning knobs of the accelerated operators.
#[derive(Debug, Clone)]
pub struct FmmConfig {
    /// Octree leaves hold at most this many elements (coincident element
    /// centroids excepted).
    pub leaf_capacity: usize,
    /// Expansion degree L; (L+1)^2 coefficients per node. The far-field
    /// error decays like (2 theta - 1)^-(L+1).
    pub expansion_order: usize,
    /// Node pairs become far once their center distance exceeds theta times
    /// the sum of the node radii. Must exceed 1.
    pub theta: f64,
    /// Tree depth limit; splitting stops here even over capacity.
    pub max_depth: usize,
}

impl Default for FmmConfig {
    fn default() -> Self {
        FmmConfig {
            leaf_capacity: 32,
            expansion_order: 10,
            theta: 2.0,
            max_depth: 20,
        }
    }
}

impl FmmConfig {
    pub fn validate(&self) -> Result<(), FmmError> {
        if self.expansion_order < 2 {
            return Err(FmmError::Configuration(format!(
                "expansion order {} is below the minimum of 2",
                self.expansion_order
            )));
        }
        if self.leaf_capacity == 0 {
            return Err(FmmError::Configuration(
                "leaf capacity must be at least 1".into(),
            ));
        }
        if !(self.theta > 1.0) {
            return Err(FmmError::Configuration(format!(
                "separation parameter theta = {} must exceed 1",
                self.theta
            )));
        }
        if self.max_depth == 0 {
            return Err(FmmError::Configuration(
                "tree depth limit must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
