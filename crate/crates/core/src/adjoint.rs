//! Adjoint of the dissipated energy with respect to the flow state.
//!
//! The adjoint operator is the transpose of the state Jacobian at `y`, and
//! the load is the energy derivative `4 nu int eps(y) : eps(phi)`. The
//! adjoint velocity vanishes wherever the state velocity is prescribed.

use crate::fem::element::{mat_vec, viscous_block, LOCAL, VEL};
use crate::fem::sparse::{norm, SparseMatrix, DEFAULT_TOL};
use crate::fem::{saddle_element, solve_mixed, Condensation, DofLayout, ElementSystem, MiniSpace};
use crate::flow::{newton_element, FlowConfig, FlowModel, FlowState, MixedField};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::{Error, Result};

/// Adjoint velocity `v` and pressure `q` in the state layout.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointState {
    pub field: MixedField,
}

impl AdjointState {
    pub fn velocity(&self, node: usize) -> [f64; 2] {
        self.field.velocity(node)
    }

    pub fn pressure(&self, node: usize) -> f64 {
        self.field.pressure(node)
    }
}

/// Homogeneous Dirichlet data on inflow, wall and free nodes.
pub fn adjoint_layout(mesh: &Mesh2D) -> Result<DofLayout> {
    let mut layout = DofLayout::new(mesh);
    let mut on = vec![false; mesh.node_count()];
    for tag in [BoundaryTag::Inflow, BoundaryTag::Wall, BoundaryTag::Free] {
        for (o, t) in on.iter_mut().zip(mesh.nodes_on(tag)) {
            *o |= t;
        }
    }
    for v in (0..mesh.node_count()).filter(|&v| on[v]) {
        layout.constrain(mesh, v, 0, 0.0)?;
        layout.constrain(mesh, v, 1, 0.0)?;
    }
    Ok(layout)
}

/// Element matrix of the state linearization at `y` (no load).
fn jacobian_element(space: &MiniSpace, t: usize, config: &FlowConfig, y: &[f64]) -> ElementSystem {
    let mut es = match config.model {
        FlowModel::NavierStokes => newton_element(space, t, config.viscosity, y),
        FlowModel::Stokes => {
            let pts = space.points(t);
            saddle_element(pts, &viscous_block(pts, config.viscosity))
        }
    };
    es.rhs = [0.0; LOCAL];
    es
}

fn adjoint_element(space: &MiniSpace, t: usize, config: &FlowConfig, y: &[f64]) -> ElementSystem {
    let mut es = jacobian_element(space, t, config, y).transposed();
    let a = viscous_block(space.points(t), config.viscosity);
    let ay = mat_vec(&a, &space.local_velocity(t, y));
    for i in 0..VEL {
        es.rhs[i] = 2.0 * ay[i];
    }
    es
}

fn check(mesh: &Mesh2D, state: &FlowState) -> Result<()> {
    if state.field.matches(mesh) {
        Ok(())
    } else {
        Err(Error::Mismatch("state belongs to another mesh".into()))
    }
}

pub fn solve_adjoint(mesh: &Mesh2D, state: &FlowState, config: &FlowConfig) -> Result<AdjointState> {
    config.validate()?;
    check(mesh, state)?;
    let space = MiniSpace::new(mesh);
    let layout = adjoint_layout(mesh)?;
    let y = state.field.values();
    let x = solve_mixed(
        &space,
        &layout,
        |t| adjoint_element(&space, t, config, y),
        &vec![0.0; 2 * mesh.node_count()],
        Condensation::Condensed,
        DEFAULT_TOL,
    )
    .map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!("adjoint operator: {msg}")),
        other => other,
    })?;
    Ok(AdjointState {
        field: MixedField::from_values(mesh, x)?,
    })
}

fn assemble(space: &MiniSpace, n: usize, element: impl Fn(usize) -> ElementSystem) -> SparseMatrix {
    let mut m = SparseMatrix::new(n);
    for t in 0..space.element_count() {
        let es = element(t);
        let map = space.full_map(t);
        for i in 0..LOCAL {
            for j in 0..LOCAL {
                m.push(map[i], map[j], es.matrix[i][j]);
            }
        }
    }
    m
}

/// Assembled state Jacobian at `state` in the full layout, before constraints.
pub fn state_jacobian(mesh: &Mesh2D, state: &FlowState, config: &FlowConfig) -> Result<SparseMatrix> {
    check(mesh, state)?;
    let space = MiniSpace::new(mesh);
    let y = state.field.values();
    Ok(assemble(&space, state.field.values().len(), |t| {
        jacobian_element(&space, t, config, y)
    }))
}

/// Assembled adjoint operator in the full layout, before constraints.
pub fn adjoint_operator(mesh: &Mesh2D, state: &FlowState, config: &FlowConfig) -> Result<SparseMatrix> {
    check(mesh, state)?;
    let space = MiniSpace::new(mesh);
    let y = state.field.values();
    Ok(assemble(&space, state.field.values().len(), |t| {
        adjoint_element(&space, t, config, y)
    }))
}

/// Adjoint residual on every row; on Dirichlet rows it is the boundary reaction.
pub(crate) fn raw_adjoint_residual(space: &MiniSpace, config: &FlowConfig, y: &[f64], v: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; v.len()];
    for t in 0..space.element_count() {
        let es = adjoint_element(space, t, config, y);
        let map = space.full_map(t);
        for i in 0..LOCAL {
            let kv: f64 = (0..LOCAL).map(|j| es.matrix[i][j] * v[map[j]]).sum();
            r[map[i]] += kv - es.rhs[i];
        }
    }
    r
}

/// Norm of the adjoint residual with Dirichlet rows removed.
pub fn adjoint_residual(mesh: &Mesh2D, state: &FlowState, adj: &AdjointState, config: &FlowConfig) -> Result<f64> {
    check(mesh, state)?;
    if !adj.field.matches(mesh) {
        return Err(Error::Mismatch("adjoint belongs to another mesh".into()));
    }
    let space = MiniSpace::new(mesh);
    let layout = adjoint_layout(mesh)?;
    let mut r = raw_adjoint_residual(&space, config, state.field.values(), adj.field.values());
    for &i in layout.fixed().keys() {
        r[i] = 0.0;
    }
    Ok(norm(&r))
}
