//! Steady Stokes and Navier–Stokes solvers with velocity data on inflow,
//! no-slip on walls and the free boundary, prescribed traction on outflow,
//! plus the dissipated energy `2 nu int |eps(y)|^2`.

use serde::{Deserialize, Serialize};

use crate::fem::element::{
    convection_blocks_into, convection_vector, divergence_block, mat_vec, strain, velocity_gradient, viscous_block, VEL,
};
use crate::fem::quadrature::gauss_legendre_unit;
use crate::fem::sparse::{norm, DEFAULT_TOL};
use crate::fem::{saddle_element, solve_mixed, Condensation, DofLayout, ElementSystem, MiniSpace};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::{Error, Result};

/// Coordinate a boundary polynomial is evaluated in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    X,
    #[default]
    Y,
}

/// Vector-valued boundary data `(sum a_k s^k, sum b_k s^k)`, ascending powers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Profile {
    pub coeffs_x: Vec<f64>,
    pub coeffs_y: Vec<f64>,
    pub variable: Variable,
}

impl Profile {
    pub fn new(coeffs_x: Vec<f64>, coeffs_y: Vec<f64>, variable: Variable) -> Self {
        Profile {
            coeffs_x,
            coeffs_y,
            variable,
        }
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        let s = match self.variable {
            Variable::X => p[0],
            Variable::Y => p[1],
        };
        let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &a| acc * s + a);
        [horner(&self.coeffs_x), horner(&self.coeffs_y)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs_x.iter().chain(&self.coeffs_y).all(|&c| c == 0.0)
    }

    fn validate(&self, path: &str) -> Result<()> {
        for (name, c) in [("coeffs_x", &self.coeffs_x), ("coeffs_y", &self.coeffs_y)] {
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::config(format!("{path}.{name}[{i}]"), "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowModel {
    Stokes,
    #[default]
    NavierStokes,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Residual reduction relative to the residual of the lifted boundary data.
    pub tol: f64,
    pub max_iters: usize,
    /// Number of viscosity doublings walked down when direct Newton fails.
    pub continuation_steps: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iters: 25,
            continuation_steps: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub viscosity: f64,
    #[serde(default)]
    pub model: FlowModel,
    #[serde(default)]
    pub inflow: Profile,
    #[serde(default)]
    pub traction: Profile,
    #[serde(default)]
    pub newton: NewtonConfig,
}

impl FlowConfig {
    pub fn new(viscosity: f64) -> Self {
        FlowConfig {
            viscosity,
            model: FlowModel::default(),
            inflow: Profile::default(),
            traction: Profile::default(),
            newton: NewtonConfig::default(),
        }
    }

    /// Checks the numeric invariants; errors carry the JSON path under `flow`.
    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity > 0.0 && self.viscosity.is_finite()) {
            return Err(Error::config("flow.viscosity", "must be positive and finite"));
        }
        if !(self.newton.tol > 0.0 && self.newton.tol.is_finite()) {
            return Err(Error::config("flow.newton.tol", "must be positive"));
        }
        if self.newton.max_iters == 0 {
            return Err(Error::config("flow.newton.max_iters", "must be at least 1"));
        }
        if self.newton.continuation_steps > 40 {
            return Err(Error::config("flow.newton.continuation_steps", "must not exceed 40"));
        }
        self.inflow.validate("flow.inflow")?;
        self.traction.validate("flow.traction")
    }
}

/// Coefficients of a mixed MINI field in the full layout
/// `[2N nodal velocity][2E bubble][N pressure]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedField {
    nodes: usize,
    elements: usize,
    values: Vec<f64>,
}

impl MixedField {
    pub fn zeros(mesh: &Mesh2D) -> Self {
        let nodes = mesh.node_count();
        let elements = mesh.triangle_count();
        MixedField {
            nodes,
            elements,
            values: vec![0.0; 3 * nodes + 2 * elements],
        }
    }

    pub fn from_values(mesh: &Mesh2D, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::zeros(mesh);
        if values.len() != f.values.len() {
            return Err(Error::Mismatch(format!(
                "{} coefficients given, layout needs {}",
                values.len(),
                f.values.len()
            )));
        }
        f.values = values;
        Ok(f)
    }

    pub fn matches(&self, mesh: &Mesh2D) -> bool {
        self.nodes == mesh.node_count() && self.elements == mesh.triangle_count()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn velocity(&self, node: usize) -> [f64; 2] {
        [self.values[2 * node], self.values[2 * node + 1]]
    }

    pub fn bubble(&self, element: usize) -> [f64; 2] {
        let o = 2 * self.nodes + 2 * element;
        [self.values[o], self.values[o + 1]]
    }

    pub fn pressure(&self, node: usize) -> f64 {
        self.values[2 * self.nodes + 2 * self.elements + node]
    }

    /// Nodal and bubble velocity coefficients.
    pub fn velocity_part(&self) -> &[f64] {
        &self.values[..2 * self.nodes + 2 * self.elements]
    }

    pub fn pressure_part(&self) -> &[f64] {
        &self.values[2 * self.nodes + 2 * self.elements..]
    }

    pub fn velocity_norm(&self) -> f64 {
        norm(self.velocity_part())
    }

    pub fn pressure_norm(&self) -> f64 {
        norm(self.pressure_part())
    }
}

/// Newton diagnostics attached to a flow solution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    /// Linear solves performed, over all continuation levels.
    pub iterations: usize,
    /// Relative residuals at the target viscosity, one per Newton step.
    pub residuals: Vec<f64>,
    /// Viscosity levels visited before the target (0 when direct Newton worked).
    pub continuation_levels: usize,
}

/// Discrete velocity and pressure.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub field: MixedField,
    pub report: NewtonReport,
}

impl FlowState {
    pub fn velocity(&self, node: usize) -> [f64; 2] {
        self.field.velocity(node)
    }

    pub fn pressure(&self, node: usize) -> f64 {
        self.field.pressure(node)
    }
}

fn require_outflow(mesh: &Mesh2D) -> Result<()> {
    if mesh.has_tag(BoundaryTag::Outflow) {
        Ok(())
    } else {
        Err(Error::MissingTag(BoundaryTag::Outflow))
    }
}

/// Velocity Dirichlet data of the state: the inflow profile on inflow nodes,
/// zero on wall and free nodes (which win at shared corners).
pub fn state_layout(mesh: &Mesh2D, config: &FlowConfig) -> Result<DofLayout> {
    let mut layout = DofLayout::new(mesh);
    let wall = mesh.nodes_on(BoundaryTag::Wall);
    let free = mesh.nodes_on(BoundaryTag::Free);
    for v in mesh.tag_nodes(BoundaryTag::Inflow) {
        let g = if wall[v] || free[v] {
            [0.0, 0.0]
        } else {
            config.inflow.eval(mesh.nodes()[v])
        };
        layout.constrain(mesh, v, 0, g[0])?;
        layout.constrain(mesh, v, 1, g[1])?;
    }
    for v in (0..mesh.node_count()).filter(|&v| wall[v] || free[v]) {
        layout.constrain(mesh, v, 0, 0.0)?;
        layout.constrain(mesh, v, 1, 0.0)?;
    }
    Ok(layout)
}

/// `int_{outflow} h . w ds` at the nodal velocity unknowns (length `2N`).
pub fn traction_load(mesh: &Mesh2D, traction: &Profile) -> Vec<f64> {
    let mut load = vec![0.0; 2 * mesh.node_count()];
    if traction.is_zero() {
        return load;
    }
    let gl = gauss_legendre_unit();
    for e in mesh
        .oriented_boundary()
        .iter()
        .filter(|e| e.tag == BoundaryTag::Outflow)
    {
        let a = mesh.nodes()[e.from];
        let b = mesh.nodes()[e.to];
        let len = mesh.edge_length(e);
        for &(s, w) in &gl {
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let h = traction.eval(p);
            for (node, phi) in [(e.from, 1.0 - s), (e.to, s)] {
                load[2 * node] += w * len * phi * h[0];
                load[2 * node + 1] += w * len * phi * h[1];
            }
        }
    }
    load
}

fn stokes_element(space: &MiniSpace, t: usize, nu: f64) -> ElementSystem {
    let pts = space.points(t);
    saddle_element(pts, &viscous_block(pts, nu))
}

/// Newton system at `y` written for the new iterate:
/// `(A + N(y) + N'(y)) y_new - D^T p_new = c(y) + f`, since `N(y) y = N'(y) y = c(y)`.
pub(crate) fn newton_element(space: &MiniSpace, t: usize, nu: f64, y: &[f64]) -> ElementSystem {
    let pts = space.points(t);
    let yl = space.local_velocity(t, y);
    let mut k = viscous_block(pts, nu);
    convection_blocks_into(pts, &yl, &mut k);
    let mut es = saddle_element(pts, &k);
    es.rhs[..VEL].copy_from_slice(&convection_vector(pts, &yl));
    es
}

/// Linear Stokes solve (convection dropped).
pub fn solve_stokes(mesh: &Mesh2D, config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    require_outflow(mesh)?;
    let space = MiniSpace::new(mesh);
    let layout = state_layout(mesh, config)?;
    let load = traction_load(mesh, &config.traction);
    let x = solve_mixed(
        &space,
        &layout,
        |t| stokes_element(&space, t, config.viscosity),
        &load,
        Condensation::Condensed,
        DEFAULT_TOL,
    )?;
    Ok(FlowState {
        field: MixedField::from_values(mesh, x)?,
        report: NewtonReport {
            iterations: 1,
            ..NewtonReport::default()
        },
    })
}

/// Solves the model selected in `config`.
pub fn solve_flow(mesh: &Mesh2D, config: &FlowConfig, guess: Option<&FlowState>) -> Result<FlowState> {
    match config.model {
        FlowModel::Stokes => solve_stokes(mesh, config),
        FlowModel::NavierStokes => solve_navier_stokes_from(mesh, config, guess),
    }
}

pub fn solve_navier_stokes(mesh: &Mesh2D, config: &FlowConfig) -> Result<FlowState> {
    solve_navier_stokes_from(mesh, config, None)
}

/// Newton iteration from `guess` (or from the Stokes solution), falling back to
/// viscosity continuation when the direct iteration fails.
pub fn solve_navier_stokes_from(mesh: &Mesh2D, config: &FlowConfig, guess: Option<&FlowState>) -> Result<FlowState> {
    config.validate()?;
    require_outflow(mesh)?;
    if let Some(g) = guess {
        if !g.field.matches(mesh) {
            return Err(Error::Mismatch("initial guess belongs to another mesh".into()));
        }
    }
    let space = MiniSpace::new(mesh);
    let layout = state_layout(mesh, config)?;
    let load = traction_load(mesh, &config.traction);
    let nu = config.viscosity;

    let start = match guess {
        Some(g) => g.field.values.clone(),
        None => solve_stokes(mesh, config)?.field.values,
    };
    let direct = newton(&space, &layout, &load, config, nu, start);
    let mut trace = match direct {
        Ok((x, report)) => {
            return Ok(FlowState {
                field: MixedField::from_values(mesh, x)?,
                report,
            })
        }
        Err(trace) => trace,
    };

    let steps = config.newton.continuation_steps;
    if steps == 0 {
        return Err(Error::NewtonDiverged { trace });
    }
    let mut x = solve_stokes(mesh, config)?.field.values;
    let mut iterations = trace.len();
    for level in 0..=steps {
        let nu_level = nu * f64::powi(2.0, (steps - level) as i32);
        match newton(&space, &layout, &load, config, nu_level, x.clone()) {
            Ok((next, report)) => {
                iterations += report.iterations;
                x = next;
                if level == steps {
                    return Ok(FlowState {
                        field: MixedField::from_values(mesh, x)?,
                        report: NewtonReport {
                            iterations,
                            residuals: report.residuals,
                            continuation_levels: steps,
                        },
                    });
                }
            }
            Err(t) => {
                trace.extend(t);
                return Err(Error::NewtonDiverged { trace });
            }
        }
    }
    unreachable!("the final continuation level returns")
}

/// Runs Newton at viscosity `nu`. On failure returns the residual trace.
fn newton(
    space: &MiniSpace,
    layout: &DofLayout,
    load: &[f64],
    config: &FlowConfig,
    nu: f64,
    mut x: Vec<f64>,
) -> std::result::Result<(Vec<f64>, NewtonReport), Vec<f64>> {
    let reference = lifted_residual(space, layout, load, nu, FlowModel::NavierStokes);
    let scale = if reference > 0.0 { reference } else { 1.0 };
    let mut residuals = Vec::new();
    for _ in 0..config.newton.max_iters {
        let y = x.clone();
        let next = solve_mixed(
            space,
            layout,
            |t| newton_element(space, t, nu, &y),
            load,
            Condensation::Condensed,
            DEFAULT_TOL,
        );
        let Ok(next) = next else {
            residuals.push(f64::NAN);
            return Err(residuals);
        };
        x = next;
        let r = residual_vector(space, layout, load, nu, FlowModel::NavierStokes, &x);
        let rel = norm(&r) / scale;
        residuals.push(rel);
        if !rel.is_finite() || rel > 1e8 {
            return Err(residuals);
        }
        if rel <= config.newton.tol {
            return Ok((
                x,
                NewtonReport {
                    iterations: residuals.len(),
                    residuals,
                    continuation_levels: 0,
                },
            ));
        }
    }
    Err(residuals)
}

/// Residual of the discrete state equations with Dirichlet rows removed.
fn residual_vector(
    space: &MiniSpace,
    layout: &DofLayout,
    load: &[f64],
    nu: f64,
    model: FlowModel,
    x: &[f64],
) -> Vec<f64> {
    let mut r = raw_residual(space, load, nu, model, x);
    for &i in layout.fixed().keys() {
        r[i] = 0.0;
    }
    r
}

/// Residual on every row. On Dirichlet rows this is the consistent boundary
/// reaction `int sigma(y, p) n . phi_i ds`.
pub(crate) fn raw_residual(space: &MiniSpace, load: &[f64], nu: f64, model: FlowModel, x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; x.len()];
    for t in 0..space.element_count() {
        let pts = space.points(t);
        let yl = space.local_velocity(t, x);
        let pl = space.local_pressure(t, x);
        let mut rv = mat_vec(&viscous_block(pts, nu), &yl);
        if model == FlowModel::NavierStokes {
            for (a, b) in rv.iter_mut().zip(convection_vector(pts, &yl)) {
                *a += b;
            }
        }
        let d = divergence_block(pts);
        let map = space.full_map(t);
        for j in 0..VEL {
            let dtp: f64 = (0..3).map(|k| d[k][j] * pl[k]).sum();
            r[map[j]] += rv[j] - dtp;
        }
        for k in 0..3 {
            let dy: f64 = (0..VEL).map(|j| d[k][j] * yl[j]).sum();
            r[map[8 + k]] -= dy;
        }
    }
    for (ri, l) in r.iter_mut().zip(load) {
        *ri -= l;
    }
    r
}

fn lifted_residual(space: &MiniSpace, layout: &DofLayout, load: &[f64], nu: f64, model: FlowModel) -> f64 {
    let mut x = vec![0.0; layout.full_len()];
    for (&i, &g) in layout.fixed() {
        x[i] = g;
    }
    norm(&residual_vector(space, layout, load, nu, model, &x))
}

/// Euclidean norm of the nonlinear residual (Dirichlet rows excluded) for the
/// model selected in `config`.
pub fn residual_norm(mesh: &Mesh2D, state: &FlowState, config: &FlowConfig) -> Result<f64> {
    if !state.field.matches(mesh) {
        return Err(Error::Mismatch("state belongs to another mesh".into()));
    }
    let space = MiniSpace::new(mesh);
    let layout = state_layout(mesh, config)?;
    let load = traction_load(mesh, &config.traction);
    Ok(norm(&residual_vector(
        &space,
        &layout,
        &load,
        config.viscosity,
        config.model,
        state.field.values(),
    )))
}

/// `2 nu int |eps(y)|^2`, bubble strains included.
pub fn dissipated_energy(mesh: &Mesh2D, state: &FlowState, nu: f64) -> f64 {
    let space = MiniSpace::new(mesh);
    let x = state.field.values();
    let mut total = 0.0;
    for t in 0..space.element_count() {
        let yl = space.local_velocity(t, x);
        for bp in space.points(t) {
            let e = strain(bp, &yl);
            total += bp.weight * (e[0][0] * e[0][0] + 2.0 * e[0][1] * e[0][1] + e[1][1] * e[1][1]);
        }
    }
    2.0 * nu * total
}

/// `|u - u_h|_{H^1}` against an exact velocity gradient `G[i][j] = du_i/dx_j`.
pub fn velocity_h1_error(mesh: &Mesh2D, state: &FlowState, exact_gradient: impl Fn([f64; 2]) -> [[f64; 2]; 2]) -> f64 {
    let space = MiniSpace::new(mesh);
    let rule = crate::fem::QuadratureRule::degree4();
    let mut total = 0.0;
    for t in 0..space.element_count() {
        let yl = space.local_velocity(t, state.field.values());
        for (bp, bary) in space.points(t).iter().zip(rule.points()) {
            let g = velocity_gradient(bp, &yl);
            let e = exact_gradient(space.geometry(t).point(*bary));
            for i in 0..2 {
                for j in 0..2 {
                    total += bp.weight * (g[i][j] - e[i][j]).powi(2);
                }
            }
        }
    }
    total.sqrt()
}

/// `||p - p_h||_{L^2}`.
pub fn pressure_l2_error(mesh: &Mesh2D, state: &FlowState, exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let space = MiniSpace::new(mesh);
    let rule = crate::fem::QuadratureRule::degree4();
    let mut total = 0.0;
    for t in 0..space.element_count() {
        let pl = space.local_pressure(t, state.field.values());
        for (bp, bary) in space.points(t).iter().zip(rule.points()) {
            let ph: f64 = (0..3).map(|k| bp.value[k] * pl[k]).sum();
            total += bp.weight * (ph - exact(space.geometry(t).point(*bary))).powi(2);
        }
    }
    total.sqrt()
}
