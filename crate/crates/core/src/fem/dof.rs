//! Global numbering of the MINI unknowns and velocity Dirichlet data.
//!
//! Full layout: `[2N nodal velocities (interleaved x, y)] [2E bubbles] [N pressures]`.
//! The condensed layout drops the bubble block: `[2N velocities] [N pressures]`.
//! Nodal velocity indices coincide in both layouts.

use std::collections::BTreeMap;

use super::sparse::SparseSystem;
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DofLayout {
    nodes: usize,
    elements: usize,
    fixed: BTreeMap<usize, f64>,
}

impl DofLayout {
    pub fn new(mesh: &Mesh2D) -> Self {
        DofLayout {
            nodes: mesh.node_count(),
            elements: mesh.triangle_count(),
            fixed: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn element_count(&self) -> usize {
        self.elements
    }

    pub fn velocity(&self, node: usize, comp: usize) -> usize {
        2 * node + comp
    }

    pub fn bubble(&self, element: usize, comp: usize) -> usize {
        2 * self.nodes + 2 * element + comp
    }

    pub fn pressure(&self, node: usize) -> usize {
        2 * self.nodes + 2 * self.elements + node
    }

    pub fn condensed_pressure(&self, node: usize) -> usize {
        2 * self.nodes + node
    }

    pub fn full_len(&self) -> usize {
        3 * self.nodes + 2 * self.elements
    }

    pub fn condensed_len(&self) -> usize {
        3 * self.nodes
    }

    /// Prescribed nodal velocity values keyed by velocity index.
    pub fn fixed(&self) -> &BTreeMap<usize, f64> {
        &self.fixed
    }

    /// Prescribes one velocity component at a node lying on an inflow, wall or
    /// free edge.
    pub fn constrain(&mut self, mesh: &Mesh2D, node: usize, comp: usize, value: f64) -> Result<()> {
        if node >= self.nodes || comp > 1 {
            return Err(Error::InvalidArgument(format!(
                "velocity dof ({node}, {comp}) is out of range"
            )));
        }
        let on_dirichlet = mesh.boundary().iter().any(|e| {
            e.nodes.contains(&node) && matches!(e.tag, BoundaryTag::Inflow | BoundaryTag::Wall | BoundaryTag::Free)
        });
        if !on_dirichlet {
            return Err(Error::InvalidArgument(format!(
                "node {node} does not lie on an inflow, wall or free edge; \
                 its velocity cannot be prescribed"
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite boundary value at node {node}"
            )));
        }
        self.fixed.insert(self.velocity(node, comp), value);
        Ok(())
    }
}

/// Imposes the layout's velocity Dirichlet data on a full or condensed system.
pub fn apply_dirichlet(system: &mut SparseSystem, layout: &DofLayout) -> Result<()> {
    let n = system.dim();
    if n != layout.full_len() && n != layout.condensed_len() {
        return Err(Error::Mismatch(format!(
            "system of size {n} matches neither layout ({} full, {} condensed)",
            layout.full_len(),
            layout.condensed_len()
        )));
    }
    system.constrain(layout.fixed());
    Ok(())
}
