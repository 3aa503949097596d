//! Boundary shape gradient of the dissipated energy and the volume multiplier.

use serde::{Deserialize, Serialize};

use crate::adjoint::{raw_adjoint_residual, AdjointState};
use crate::fem::element::strain;
use crate::fem::MiniSpace;
use crate::flow::{raw_residual, traction_load, FlowConfig, FlowState};
use crate::mesh::{BoundaryTag, DisplacementField, Mesh2D};
use crate::{Error, Result};

/// How the density `2 nu [eps(y):eps(v) - |eps(y)|^2]` is evaluated at a
/// free-boundary node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientRecovery {
    /// Area-weighted mean of the element integrals over the node's triangles.
    ElementAverage,
    /// Tangential wall tractions recovered from the state and adjoint
    /// residuals on the Dirichlet rows. On a no-slip wall the density equals
    /// `(tau_y tau_v - tau_y^2) / nu`.
    #[default]
    BoundaryFlux,
}

/// Gradient density, unit outward normal and trapezoidal weight per free node.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGradient {
    pub nodes: Vec<usize>,
    pub density: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl BoundaryGradient {
    /// Free nodes, normals and weights with zero density.
    pub fn zeros(mesh: &Mesh2D) -> Result<Self> {
        let normals = mesh.boundary_normals(BoundaryTag::Free)?;
        let mut weight = vec![0.0; mesh.node_count()];
        for e in mesh.oriented_boundary().iter().filter(|e| e.tag == BoundaryTag::Free) {
            let half = 0.5 * mesh.edge_length(e);
            weight[e.from] += half;
            weight[e.to] += half;
        }
        Ok(BoundaryGradient {
            nodes: normals.iter().map(|&(i, _)| i).collect(),
            density: vec![0.0; normals.len()],
            weights: normals.iter().map(|&(i, _)| weight[i]).collect(),
            normals: normals.into_iter().map(|(_, n)| n).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Density shifted by a constant multiplier.
    pub fn with_multiplier(&self, l: f64) -> Self {
        let mut g = self.clone();
        for d in &mut g.density {
            *d += l;
        }
        g
    }

    /// Discrete `L2(free boundary)` norm of the density.
    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.density)
            .map(|(w, g)| w * g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn boundary_length(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Shape gradient with element-average recovery.
pub fn shape_gradient(mesh: &Mesh2D, state: &FlowState, adj: &AdjointState, nu: f64) -> Result<BoundaryGradient> {
    let mut grad = BoundaryGradient::zeros(mesh)?;
    check(mesh, state, adj)?;
    let space = MiniSpace::new(mesh);
    let mut num = vec![0.0; mesh.node_count()];
    let mut den = vec![0.0; mesh.node_count()];
    let free = mesh.nodes_on(BoundaryTag::Free);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !tri.iter().any(|&v| free[v]) {
            continue;
        }
        let y = space.local_velocity(t, state.field.values());
        let v = space.local_velocity(t, adj.field.values());
        let mut integral = 0.0;
        for bp in space.points(t) {
            let ey = strain(bp, &y);
            let ev = strain(bp, &v);
            let yv = ey[0][0] * ev[0][0] + 2.0 * ey[0][1] * ev[0][1] + ey[1][1] * ev[1][1];
            let yy = ey[0][0] * ey[0][0] + 2.0 * ey[0][1] * ey[0][1] + ey[1][1] * ey[1][1];
            integral += bp.weight * 2.0 * nu * (yv - yy);
        }
        let area = space.geometry(t).area;
        for &node in tri.iter().filter(|&&v| free[v]) {
            num[node] += integral;
            den[node] += area;
        }
    }
    for (g, &i) in grad.density.iter_mut().zip(&grad.nodes) {
        *g = num[i] / den[i];
    }
    Ok(grad)
}

/// Shape gradient with the selected recovery.
pub fn shape_gradient_with(
    mesh: &Mesh2D,
    state: &FlowState,
    adj: &AdjointState,
    config: &FlowConfig,
    recovery: GradientRecovery,
) -> Result<BoundaryGradient> {
    match recovery {
        GradientRecovery::ElementAverage => shape_gradient(mesh, state, adj, config.viscosity),
        GradientRecovery::BoundaryFlux => flux_gradient(mesh, state, adj, config),
    }
}

fn flux_gradient(
    mesh: &Mesh2D,
    state: &FlowState,
    adj: &AdjointState,
    config: &FlowConfig,
) -> Result<BoundaryGradient> {
    let mut grad = BoundaryGradient::zeros(mesh)?;
    check(mesh, state, adj)?;
    let space = MiniSpace::new(mesh);
    let load = traction_load(mesh, &config.traction);
    let y = state.field.values();
    let ry = raw_residual(&space, &load, config.viscosity, config.model, y);
    let rv = raw_adjoint_residual(&space, config, y, adj.field.values());
    // reactions are distributed over every Dirichlet edge touching the node
    let mut measure = vec![0.0; mesh.node_count()];
    for e in mesh
        .oriented_boundary()
        .iter()
        .filter(|e| e.tag != BoundaryTag::Outflow)
    {
        let half = 0.5 * mesh.edge_length(e);
        measure[e.from] += half;
        measure[e.to] += half;
    }
    let nu = config.viscosity;
    for (k, &i) in grad.nodes.iter().enumerate() {
        let n = grad.normals[k];
        let tangent = [-n[1], n[0]];
        let w = measure[i];
        let tau_y = (ry[2 * i] * tangent[0] + ry[2 * i + 1] * tangent[1]) / w;
        let r_v = (rv[2 * i] * tangent[0] + rv[2 * i + 1] * tangent[1]) / w;
        // adjoint reaction = tau_v - 2 tau_y
        grad.density[k] = (tau_y * r_v + tau_y * tau_y) / nu;
    }
    Ok(grad)
}

fn check(mesh: &Mesh2D, state: &FlowState, adj: &AdjointState) -> Result<()> {
    if state.field.matches(mesh) && adj.field.matches(mesh) {
        Ok(())
    } else {
        Err(Error::Mismatch("state or adjoint belongs to another mesh".into()))
    }
}

/// `sum_i w_i g_i (V_i . n_i)`.
pub fn eulerian_derivative(grad: &BoundaryGradient, v: &DisplacementField) -> f64 {
    grad.nodes
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let vi = v.vectors()[i];
            let n = grad.normals[k];
            grad.weights[k] * grad.density[k] * (vi[0] * n[0] + vi[1] * n[1])
        })
        .sum()
}

/// Multiplier making the weighted mean of `g + l` vanish.
pub fn balance_multiplier(grad: &BoundaryGradient) -> f64 {
    let wg: f64 = grad.weights.iter().zip(&grad.density).map(|(w, g)| w * g).sum();
    -wg / grad.boundary_length()
}

/// `(l_k + l) / 2 + eps |V_k - V_target| / V_target`.
pub fn update_multiplier(l_k: f64, l: f64, volume: f64, target: f64, epsilon: f64) -> f64 {
    (l_k + l) / 2.0 + epsilon * (volume - target).abs() / target
}
