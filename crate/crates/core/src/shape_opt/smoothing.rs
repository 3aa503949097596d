//! H1 smoothing of the boundary gradient: `-lap d + d = 0` with the gradient
//! as Neumann data, solved componentwise with P1 elements.

use crate::fem::sparse::{solve_linear, SparseMatrix, SparseSystem};
use crate::mesh::{signed_area, DisplacementField, Mesh2D};
use crate::{Error, Result};

use super::gradient::BoundaryGradient;

/// Scalar P1 matrix of `int grad u . grad w + u w`.
pub fn helmholtz_matrix(mesh: &Mesh2D) -> SparseMatrix {
    let mut m = SparseMatrix::new(mesh.node_count());
    for tri in mesh.triangles() {
        let p = tri.map(|v| mesh.nodes()[v]);
        let area = signed_area(p[0], p[1], p[2]);
        let grads: [[f64; 2]; 3] = std::array::from_fn(|i| {
            let a = p[(i + 1) % 3];
            let b = p[(i + 2) % 3];
            [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)]
        });
        for i in 0..3 {
            for j in 0..3 {
                let stiff = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                let mass = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                m.push(tri[i], tri[j], stiff + mass);
            }
        }
    }
    m
}

/// Solves the vector problem with `d = 0` where `fixed` is set and the nodal
/// loads `load` (already integrated against the hat functions) elsewhere.
pub fn solve_helmholtz(mesh: &Mesh2D, fixed: &[bool], load: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let n = mesh.node_count();
    if fixed.len() != n || load.len() != n {
        return Err(Error::Mismatch("smoothing data does not match the mesh".into()));
    }
    let k = helmholtz_matrix(mesh);
    let mut sys = SparseSystem::new(2 * n);
    for &(i, j, v) in k.entries() {
        sys.matrix.push(2 * i, 2 * j, v);
        sys.matrix.push(2 * i + 1, 2 * j + 1, v);
    }
    for (i, f) in load.iter().enumerate() {
        sys.rhs[2 * i] = f[0];
        sys.rhs[2 * i + 1] = f[1];
    }
    let constrained = fixed
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .flat_map(|(i, _)| [(2 * i, 0.0), (2 * i + 1, 0.0)])
        .collect();
    sys.constrain(&constrained);
    let x = solve_linear(&sys)?;
    Ok((0..n).map(|i| [x[2 * i], x[2 * i + 1]]).collect())
}

/// Descent direction for a gradient that already includes the multiplier:
/// Neumann load `-w_i (g_i + l) n_i` on free nodes, zero on fixed boundaries.
pub fn smooth_descent(mesh: &Mesh2D, total: &BoundaryGradient) -> Result<DisplacementField> {
    let mut load = vec![[0.0; 2]; mesh.node_count()];
    for (k, &i) in total.nodes.iter().enumerate() {
        let s = -total.weights[k] * total.density[k];
        load[i] = [s * total.normals[k][0], s * total.normals[k][1]];
    }
    let fixed = mesh.fixed_nodes();
    for (l, _) in load.iter_mut().zip(&fixed).filter(|(_, &f)| f) {
        *l = [0.0, 0.0];
    }
    let d = solve_helmholtz(mesh, &fixed, &load)?;
    DisplacementField::new_clamped(mesh, d)
}

/// `(a, b)_{H1}` of two nodal vector fields on `mesh`.
pub fn h1_inner(mesh: &Mesh2D, a: &DisplacementField, b: &DisplacementField) -> f64 {
    let k = helmholtz_matrix(mesh);
    let (av, bv) = (a.vectors(), b.vectors());
    k.entries()
        .iter()
        .map(|&(i, j, v)| v * (av[i][0] * bv[j][0] + av[i][1] * bv[j][1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_channel, gen_rect_with_hole, BoundaryTag};
    use crate::shape_opt::gradient::eulerian_derivative;

    #[test]
    fn zero_gradient_gives_zero_field() {
        let (m, _) = gen_rect_with_hole([-0.5, -0.5, 1.5, 0.5], [0.0, 0.0], 0.2, 32).unwrap();
        let g = BoundaryGradient::zeros(&m).unwrap();
        let d = smooth_descent(&m, &g).unwrap();
        assert_eq!(d.max_norm(), 0.0);
    }

    #[test]
    fn strip_matches_hyperbolic_profile() {
        // -d'' + d = 0, d(0) = 0, d'(1) = -c  =>  d = -c sinh(x) / cosh(1)
        let c = 0.8;
        let mut errors = Vec::new();
        for nx in [8, 16, 32] {
            let m = gen_channel(1.0, 0.1, nx, 1).unwrap();
            let fixed: Vec<bool> = m.nodes().iter().map(|p| p[0] == 0.0).collect();
            let mut load = vec![[0.0; 2]; m.node_count()];
            for e in m.oriented_boundary().iter().filter(|e| e.tag == BoundaryTag::Outflow) {
                let half = 0.5 * m.edge_length(e);
                load[e.from][0] -= c * half;
                load[e.to][0] -= c * half;
            }
            let d = solve_helmholtz(&m, &fixed, &load).unwrap();
            let err = m
                .nodes()
                .iter()
                .zip(&d)
                .map(|(p, di)| (di[0] + c * p[0].sinh() / 1f64.cosh()).abs() + di[1].abs())
                .fold(0.0, f64::max);
            errors.push(err);
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
        assert!(errors[2] < 1e-3);
    }

    #[test]
    fn smoothed_direction_is_a_descent_direction() {
        let (m, _) = gen_rect_with_hole([-0.5, -0.5, 1.5, 0.5], [0.0, 0.0], 0.2, 32).unwrap();
        let mut g = BoundaryGradient::zeros(&m).unwrap();
        for k in 0..g.len() {
            let n = g.normals[k];
            g.density[k] = 1.0 + n[0] - 0.5 * n[1] * n[1];
        }
        let d = smooth_descent(&m, &g).unwrap();
        let dg = eulerian_derivative(&g, &d);
        assert!(dg < 0.0);
        // dG(d) = -(d, d)_{H1}
        assert!((dg + h1_inner(&m, &d, &d)).abs() < 1e-12 * dg.abs());
        for (v, f) in d.vectors().iter().zip(m.fixed_nodes()) {
            if f {
                assert_eq!(*v, [0.0, 0.0]);
            }
        }
    }
}
