//! Shared immutable setup: grid, eigenpair and discrete operator.

use std::sync::Arc;

use crate::domain::{eigenpair_on, first_eigenpair, BallDomain, Eigenpair, GridSpec, PolarGrid};
use crate::error::Result;
use crate::operator::Operator;

#[derive(Debug, Clone)]
pub struct Lab {
    pub grid: Arc<PolarGrid>,
    pub eigen: Arc<Eigenpair>,
    pub op: Arc<Operator>,
}

impl Lab {
    /// Grids with at least 256 radial nodes go through the checked eigenpair
    /// path; coarser grids (tests, refinement studies) skip the check.
    pub fn new(spec: GridSpec) -> Result<Self> {
        let grid = Arc::new(PolarGrid::new(spec)?);
        let domain = grid.domain;
        let eigen = if grid.m() >= 256 {
            first_eigenpair(&domain, &grid)?
        } else {
            eigenpair_on(&domain, &grid)?
        };
        let op = Arc::new(Operator::new(grid.clone()));
        Ok(Lab { grid, eigen: Arc::new(eigen), op })
    }

    pub fn default_disk() -> Result<Self> {
        Self::new(GridSpec::default_disk())
    }

    pub fn domain(&self) -> BallDomain {
        self.grid.domain
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.eigen.eval(r)
    }

    /// phi at every grid node.
    pub fn phi_field(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.len()).map(|n| self.eigen.phi[g.ring_of(n)]).collect()
    }
}
