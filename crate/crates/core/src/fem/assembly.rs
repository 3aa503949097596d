//! Global assembly over a mesh and the mixed (velocity, pressure) solve driver.

use super::condense::{condense_bubbles, BubbleRecovery, ElementSystem};
use super::dof::{apply_dirichlet, DofLayout};
use super::element::{
    basis_points, convection_blocks, convection_vector, divergence_block, viscous_block, BasisPoint, TriangleGeometry,
    LOCAL, VEL,
};
use super::quadrature::QuadratureRule;
use super::sparse::{solve_linear, SparseMatrix, SparseSystem};
use crate::mesh::Mesh2D;
use crate::{Error, Result};

/// Per-element geometry and basis tabulation of the MINI space on a mesh.
#[derive(Clone, Debug)]
pub struct MiniSpace<'m> {
    mesh: &'m Mesh2D,
    geometry: Vec<TriangleGeometry>,
    points: Vec<Vec<BasisPoint>>,
}

impl<'m> MiniSpace<'m> {
    pub fn new(mesh: &'m Mesh2D) -> Self {
        let rule = QuadratureRule::degree4();
        let geometry: Vec<_> = (0..mesh.triangle_count())
            .map(|t| TriangleGeometry::new(mesh.triangle_nodes(t)))
            .collect();
        let points = geometry.iter().map(|g| basis_points(g, &rule)).collect();
        MiniSpace { mesh, geometry, points }
    }

    pub fn mesh(&self) -> &'m Mesh2D {
        self.mesh
    }

    pub fn layout(&self) -> DofLayout {
        DofLayout::new(self.mesh)
    }

    pub fn element_count(&self) -> usize {
        self.geometry.len()
    }

    pub fn geometry(&self, t: usize) -> &TriangleGeometry {
        &self.geometry[t]
    }

    pub fn points(&self, t: usize) -> &[BasisPoint] {
        &self.points[t]
    }

    /// Global index of each local unknown in the full layout.
    pub fn full_map(&self, t: usize) -> [usize; LOCAL] {
        let n = self.mesh.node_count();
        let e = self.element_count();
        let tri = self.mesh.triangles()[t];
        let mut map = [0; LOCAL];
        for (f, &v) in tri.iter().enumerate() {
            map[2 * f] = 2 * v;
            map[2 * f + 1] = 2 * v + 1;
            map[8 + f] = 2 * n + 2 * e + v;
        }
        map[6] = 2 * n + 2 * t;
        map[7] = 2 * n + 2 * t + 1;
        map
    }

    /// Global index of each kept local unknown in the condensed layout.
    pub fn condensed_map(&self, t: usize) -> [usize; 9] {
        let n = self.mesh.node_count();
        let tri = self.mesh.triangles()[t];
        let mut map = [0; 9];
        for (f, &v) in tri.iter().enumerate() {
            map[2 * f] = 2 * v;
            map[2 * f + 1] = 2 * v + 1;
            map[6 + f] = 2 * n + v;
        }
        map
    }

    /// Local velocity coefficients (hats then bubble) from a full-layout vector.
    pub fn local_velocity(&self, t: usize, x: &[f64]) -> [f64; VEL] {
        let map = self.full_map(t);
        std::array::from_fn(|i| x[map[i]])
    }

    pub fn local_pressure(&self, t: usize, x: &[f64]) -> [f64; 3] {
        let map = self.full_map(t);
        std::array::from_fn(|k| x[map[8 + k]])
    }

    /// Number of velocity unknowns, nodal and bubble.
    pub fn velocity_len(&self) -> usize {
        2 * self.mesh.node_count() + 2 * self.element_count()
    }
}

/// `2 nu int eps(u) : eps(w)` over the velocity unknowns `[2N nodal][2E bubble]`.
pub fn assemble_viscous(space: &MiniSpace, nu: f64) -> SparseMatrix {
    let mut m = SparseMatrix::new(space.velocity_len());
    for t in 0..space.element_count() {
        let a = viscous_block(space.points(t), nu);
        scatter_velocity(&mut m, &space.full_map(t), &a);
    }
    m
}

/// `int q div u`: one row per pressure node, one column per velocity unknown.
pub fn assemble_divergence(space: &MiniSpace) -> SparseMatrix {
    let n = space.mesh().node_count();
    let mut m = SparseMatrix::rect(n, space.velocity_len());
    for t in 0..space.element_count() {
        let d = divergence_block(space.points(t));
        let map = space.full_map(t);
        let tri = space.mesh().triangles()[t];
        for k in 0..3 {
            for j in 0..VEL {
                m.push(tri[k], map[j], d[k][j]);
            }
        }
    }
    m
}

/// The two linearizations `N(y)` and `N'(y)` of the convection term, where
/// `y` is a full-layout (or velocity-only) vector.
pub fn assemble_convection(space: &MiniSpace, y: &[f64]) -> (SparseMatrix, SparseMatrix) {
    let mut n = SparseMatrix::new(space.velocity_len());
    let mut np = SparseMatrix::new(space.velocity_len());
    for t in 0..space.element_count() {
        let yl = space.local_velocity(t, y);
        let (a, b) = convection_blocks(space.points(t), &yl);
        let map = space.full_map(t);
        scatter_velocity(&mut n, &map, &a);
        scatter_velocity(&mut np, &map, &b);
    }
    (n, np)
}

/// Assembled nonlinear convection vector `int (Dy . y) . w`.
pub fn convection_load(space: &MiniSpace, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.velocity_len()];
    for t in 0..space.element_count() {
        let c = convection_vector(space.points(t), &space.local_velocity(t, y));
        for (&g, v) in space.full_map(t).iter().zip(c) {
            out[g] += v;
        }
    }
    out
}

fn scatter_velocity(m: &mut SparseMatrix, map: &[usize; LOCAL], a: &[[f64; VEL]; VEL]) {
    for i in 0..VEL {
        for j in 0..VEL {
            m.push(map[i], map[j], a[i][j]);
        }
    }
}

/// Whether bubbles are eliminated element by element before the global solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condensation {
    Condensed,
    Full,
}

/// Solves a mixed problem given element systems, an additional nodal
/// velocity load (length `2N`, e.g. boundary tractions) and the layout's
/// Dirichlet data. Returns the full-layout solution.
pub fn solve_mixed(
    space: &MiniSpace,
    layout: &DofLayout,
    element: impl Fn(usize) -> ElementSystem,
    nodal_load: &[f64],
    mode: Condensation,
    tol: f64,
) -> Result<Vec<f64>> {
    let nn = space.mesh().node_count();
    if nodal_load.len() != 2 * nn {
        return Err(Error::Mismatch(format!(
            "nodal load has {} entries, expected {}",
            nodal_load.len(),
            2 * nn
        )));
    }
    match mode {
        Condensation::Full => {
            let mut sys = SparseSystem::new(layout.full_len());
            sys.tol = tol;
            for t in 0..space.element_count() {
                let es = element(t);
                let map = space.full_map(t);
                for i in 0..LOCAL {
                    for j in 0..LOCAL {
                        sys.matrix.push(map[i], map[j], es.matrix[i][j]);
                    }
                    sys.rhs[map[i]] += es.rhs[i];
                }
            }
            for (r, l) in sys.rhs.iter_mut().zip(nodal_load) {
                *r += l;
            }
            apply_dirichlet(&mut sys, layout)?;
            solve_linear(&sys)
        }
        Condensation::Condensed => {
            let mut sys = SparseSystem::new(layout.condensed_len());
            sys.tol = tol;
            let mut recovery: Vec<BubbleRecovery> = Vec::with_capacity(space.element_count());
            for t in 0..space.element_count() {
                let (kc, fc, rec) =
                    condense_bubbles(&element(t)).map_err(|e| Error::Singular(format!("element {t}: {e}")))?;
                let map = space.condensed_map(t);
                for i in 0..9 {
                    for j in 0..9 {
                        sys.matrix.push(map[i], map[j], kc[i][j]);
                    }
                    sys.rhs[map[i]] += fc[i];
                }
                recovery.push(rec);
            }
            for (r, l) in sys.rhs.iter_mut().zip(nodal_load) {
                *r += l;
            }
            apply_dirichlet(&mut sys, layout)?;
            let xc = solve_linear(&sys)?;
            let mut x = vec![0.0; layout.full_len()];
            x[..2 * nn].copy_from_slice(&xc[..2 * nn]);
            for v in 0..nn {
                x[layout.pressure(v)] = xc[layout.condensed_pressure(v)];
            }
            for (t, rec) in recovery.iter().enumerate() {
                let map = space.condensed_map(t);
                let kept: [f64; 9] = std::array::from_fn(|r| xc[map[r]]);
                let b = rec.recover(&kept);
                x[layout.bubble(t, 0)] = b[0];
                x[layout.bubble(t, 1)] = b[1];
            }
            Ok(x)
        }
    }
}

/// Local Stokes-type block `[[K, -D^T], [-D, 0]]` from a velocity block `K`.
pub fn saddle_element(points: &[BasisPoint], k: &[[f64; VEL]; VEL]) -> ElementSystem {
    let d = divergence_block(points);
    let mut es = ElementSystem::zeros();
    for i in 0..VEL {
        es.matrix[i][..VEL].copy_from_slice(&k[i]);
    }
    for p in 0..3 {
        for j in 0..VEL {
            es.matrix[8 + p][j] = -d[p][j];
            es.matrix[j][8 + p] = -d[p][j];
        }
    }
    es
}
