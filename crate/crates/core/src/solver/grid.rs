//! Masked Cartesian grids over a domain's bounding box.

use serde::{Deserialize, Serialize};

use crate::domain::SpatialDomain;
use crate::error::{invalid, Result};

/// Largest supported spatial dimension for the finite-difference kernel.
pub const MAX_DIM: usize = 3;

/// Minimum interior nodes along every axis.
pub const MIN_INTERIOR_PER_AXIS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lattice {
    /// Nodes `lo + i h`, `i = 0..=N`; box faces carry nodes.
    Vertex,
    /// Nodes `lo + (i - 1/2) h`, `i = 0..=N+1`; one ghost layer outside
    /// each face, so box faces fall between nodes.
    CellCentred,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Debug)]
pub struct Grid {
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
    spacing: Vec<f64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    lattice: Lattice,
    kind: Vec<NodeKind>,
    /// Nearest boundary point per boundary node (empty otherwise).
    projection: Vec<Vec<f64>>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

/// Serializable description of a grid, for manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: Vec<usize>,
    pub spacing: Vec<f64>,
    pub lattice: Lattice,
    pub interior_nodes: usize,
    pub boundary_nodes: usize,
    pub max_projection_distance: f64,
}

impl Grid {
    /// `cells[i]` cells along axis `i` of the bounding box.
    pub fn new(domain: &SpatialDomain, cells: &[usize], lattice: Lattice) -> Result<Self> {
        let n = domain.dim();
        if n > MAX_DIM {
            return Err(invalid(format!("the solver supports n <= {MAX_DIM}, got {n}")));
        }
        if cells.len() != n || cells.contains(&0) {
            return Err(invalid(format!("need {n} positive cell counts, got {cells:?}")));
        }
        let (lo, hi) = domain.bounding_box();
        let spacing: Vec<f64> = (0..n).map(|i| (hi[i] - lo[i]) / cells[i] as f64).collect();
        let dims: Vec<usize> = cells
            .iter()
            .map(|&c| match lattice {
                Lattice::Vertex => c + 1,
                Lattice::CellCentred => c + 2,
            })
            .collect();
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let total: usize = dims.iter().product();
        let mut grid = Grid {
            n,
            lo,
            hi,
            cells: cells.to_vec(),
            spacing,
            dims,
            strides,
            lattice,
            kind: vec![NodeKind::Exterior; total],
            projection: vec![Vec::new(); total],
            interior: Vec::new(),
            boundary: Vec::new(),
        };
        grid.classify(domain)?;
        Ok(grid)
    }

    /// Same cell count along every axis.
    pub fn uniform(domain: &SpatialDomain, cells: usize, lattice: Lattice) -> Result<Self> {
        Self::new(domain, &vec![cells; domain.dim()], lattice)
    }

    fn classify(&mut self, domain: &SpatialDomain) -> Result<()> {
        let total = self.kind.len();
        let hmin = self.min_spacing();
        let mut multi = vec![0usize; self.n];
        // Interior: strictly inside and away from the array edge.
        for idx in 0..total {
            self.unravel(idx, &mut multi);
            let on_edge = multi.iter().zip(&self.dims).any(|(&m, &d)| m == 0 || m + 1 == d);
            let x = self.coords(idx);
            if !on_edge && domain.signed_distance(&x) < -1e-12 * hmin {
                self.kind[idx] = NodeKind::Interior;
            }
        }
        // Boundary: any non-interior node in the 3^n block of an interior node.
        let offsets = self.block_offsets();
        let interior: Vec<usize> = (0..total).filter(|&i| self.kind[i] == NodeKind::Interior).collect();
        for &idx in &interior {
            for off in &offsets {
                let j = (idx as isize + off) as usize;
                if self.kind[j] == NodeKind::Exterior {
                    self.kind[j] = NodeKind::Boundary;
                }
            }
        }
        self.boundary = (0..total).filter(|&i| self.kind[i] == NodeKind::Boundary).collect();
        for &idx in &self.boundary {
            self.projection[idx] = domain.nearest_boundary_point(&self.coords(idx));
        }
        self.interior = interior;
        for axis in 0..self.n {
            let mut seen = vec![false; self.dims[axis]];
            for &idx in &self.interior {
                self.unravel(idx, &mut multi);
                seen[multi[axis]] = true;
            }
            let count = seen.iter().filter(|&&s| s).count();
            if count < MIN_INTERIOR_PER_AXIS {
                return Err(invalid(format!(
                    "grid resolves only {count} interior node positions along axis {axis}; need {MIN_INTERIOR_PER_AXIS}"
                )));
            }
        }
        Ok(())
    }

    /// Flat offsets of the `3^n` block around a node, excluding the node.
    fn block_offsets(&self) -> Vec<isize> {
        let mut out = vec![0isize];
        for axis in 0..self.n {
            let s = self.strides[axis] as isize;
            out = out.iter().flat_map(|&o| [o - s, o, o + s]).collect();
        }
        out.retain(|&o| o != 0);
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_empty()
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kind[idx]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Projection onto `∂Ω` of a boundary node.
    pub fn projection(&self, idx: usize) -> Option<&[f64]> {
        (self.kind[idx] == NodeKind::Boundary).then(|| self.projection[idx].as_slice())
    }

    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for axis in 0..self.n {
            out[axis] = idx / self.strides[axis];
            idx %= self.strides[axis];
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.coords_into(idx, &mut out);
        out
    }

    pub fn coords_into(&self, mut idx: usize, out: &mut [f64]) {
        for axis in 0..self.n {
            let m = idx / self.strides[axis];
            idx %= self.strides[axis];
            let shift = match self.lattice {
                Lattice::Vertex => 0.0,
                Lattice::CellCentred => -0.5,
            };
            out[axis] = self.lo[axis] + (m as f64 + shift) * self.spacing[axis];
        }
    }

    /// Node index nearest to `x` among non-exterior nodes.
    pub fn nearest_active(&self, x: &[f64]) -> Option<usize> {
        self.interior
            .iter()
            .chain(&self.boundary)
            .copied()
            .min_by(|&a, &b| {
                let da = dist2(&self.coords(a), x);
                let db = dist2(&self.coords(b), x);
                da.total_cmp(&db)
            })
    }

    /// Largest distance from a boundary node to its projection.
    pub fn max_projection_distance(&self) -> f64 {
        self.boundary
            .iter()
            .map(|&i| dist2(&self.coords(i), &self.projection[i]).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            cells: self.cells.clone(),
            spacing: self.spacing.clone(),
            lattice: self.lattice,
            interior_nodes: self.interior.len(),
            boundary_nodes: self.boundary.len(),
            max_projection_distance: self.max_projection_distance(),
        }
    }

    /// Whether `other` has the same node layout.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.lattice == other.lattice && self.cells == other.cells && self.lo == other.lo && self.hi == other.hi
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
