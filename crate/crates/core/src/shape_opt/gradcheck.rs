//! Finite-difference verification of the boundary shape derivative.

use crate::adjoint::solve_adjoint;
use crate::flow::{dissipated_energy, solve_flow, FlowConfig};
use crate::mesh::{DisplacementField, Mesh2D};
use crate::Result;

use super::gradient::{eulerian_derivative, shape_gradient_with, GradientRecovery};
use super::smoothing::solve_helmholtz;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckRow {
    pub t: f64,
    pub j_plus: f64,
    pub j_minus: f64,
    /// `(J(+t) - J(-t)) / 2t`.
    pub central_difference: f64,
    /// `|fd - analytic| / |analytic|`, or the absolute gap when the analytic value is zero.
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub energy: f64,
    pub analytic: f64,
    pub rows: Vec<GradCheckRow>,
    /// `log(e_k / e_{k+1}) / log(t_k / t_{k+1})` for consecutive rows.
    pub observed_orders: Vec<f64>,
}

impl GradCheckReport {
    pub fn last_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.relative_error)
    }

    /// Errors shrink monotonically with `t`.
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].relative_error < w[0].relative_error)
    }
}

/// Central differences of `J` under `deform(mesh, v, +-t)` with full re-solves,
/// compared with the boundary expression of the derivative.
pub fn gradient_check(
    mesh: &Mesh2D,
    flow: &FlowConfig,
    v: &DisplacementField,
    ts: &[f64],
    recovery: GradientRecovery,
) -> Result<GradCheckReport> {
    let state = solve_flow(mesh, flow, None)?;
    let energy = dissipated_energy(mesh, &state, flow.viscosity);
    let adj = solve_adjoint(mesh, &state, flow)?;
    let grad = shape_gradient_with(mesh, &state, &adj, flow, recovery)?;
    let analytic = eulerian_derivative(&grad, v);

    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut j = [0.0; 2];
        for (slot, sign) in j.iter_mut().zip([1.0, -1.0]) {
            let moved = mesh.deform(v, sign * t)?;
            let s = solve_flow(&moved, flow, Some(&state))?;
            *slot = dissipated_energy(&moved, &s, flow.viscosity);
        }
        let fd = (j[0] - j[1]) / (2.0 * t);
        let gap = (fd - analytic).abs();
        rows.push(GradCheckRow {
            t,
            j_plus: j[0],
            j_minus: j[1],
            central_difference: fd,
            relative_error: if analytic != 0.0 { gap / analytic.abs() } else { gap },
        });
    }
    let observed_orders = rows
        .windows(2)
        .map(|w| (w[0].relative_error / w[1].relative_error).ln() / (w[0].t / w[1].t).ln())
        .collect();
    Ok(GradCheckReport {
        energy,
        analytic,
        rows,
        observed_orders,
    })
}

/// `chi(r) cos(mode theta) e_r` about `center`, with `chi = 1` for
/// `r <= r0`, a smooth cosine ramp to zero at `r1`, and zero beyond.
pub fn radial_field(mesh: &Mesh2D, center: [f64; 2], r0: f64, r1: f64, mode: u32) -> Result<DisplacementField> {
    let vectors = mesh
        .nodes()
        .iter()
        .map(|p| {
            let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
            let r = dx.hypot(dy);
            if r >= r1 || r == 0.0 {
                return [0.0, 0.0];
            }
            let chi = if r <= r0 {
                1.0
            } else {
                let s = (r - r0) / (r1 - r0);
                0.5 * (1.0 + (std::f64::consts::PI * s).cos())
            };
            let a = chi * (mode as f64 * dy.atan2(dx)).cos();
            [a * dx / r, a * dy / r]
        })
        .collect();
    DisplacementField::new(mesh, vectors)
}

/// Smooth extension of `amplitude(x) n` from the free boundary into the
/// domain, obtained from the smoothing operator; vanishes on fixed boundaries.
pub fn smoothed_normal_field(mesh: &Mesh2D, amplitude: impl Fn([f64; 2]) -> f64) -> Result<DisplacementField> {
    let grad = super::gradient::BoundaryGradient::zeros(mesh)?;
    let mut load = vec![[0.0; 2]; mesh.node_count()];
    let fixed = mesh.fixed_nodes();
    for (k, &i) in grad.nodes.iter().enumerate() {
        if fixed[i] {
            continue;
        }
        let a = grad.weights[k] * amplitude(mesh.nodes()[i]);
        load[i] = [a * grad.normals[k][0], a * grad.normals[k][1]];
    }
    let d = solve_helmholtz(mesh, &fixed, &load)?;
    // normalize to unit maximum displacement
    let max = d.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    DisplacementField::new_clamped(mesh, d.iter().map(|v| [v[0] * scale, v[1] * scale]).collect())
}
