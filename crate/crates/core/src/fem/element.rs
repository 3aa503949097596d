//! MINI element kernels on a single triangle.
//!
//! Local velocity unknowns are ordered `2 * f + c` where `f` is the scalar
//! basis function (`0..3` the vertex hats, `3` the bubble) and `c` the
//! component. The full local element system appends the three vertex
//! pressures, giving [`LOCAL`] unknowns.

use super::quadrature::QuadratureRule;

/// Velocity unknowns per element (3 vertices + bubble, 2 components).
pub const VEL: usize = 8;
/// Velocity + pressure unknowns per element.
pub const LOCAL: usize = 11;

pub type VelMatrix = [[f64; VEL]; VEL];

#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = vertices;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let area = 0.5 * det;
        // grad lambda_i = rot90(opposite edge) / (2 area)
        let g = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
        TriangleGeometry {
            vertices,
            area,
            grad_lambda: [g(b, c), g(c, a), g(a, b)],
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let [a, b, c] = self.vertices;
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }
}

/// Values and gradients of the hats and the bubble `27 l0 l1 l2` at one point.
#[derive(Clone, Copy, Debug)]
pub struct BasisPoint {
    pub value: [f64; 4],
    pub grad: [[f64; 2]; 4],
    /// Quadrature weight already scaled to the physical triangle.
    pub weight: f64,
}

pub fn mini_basis(geo: &TriangleGeometry, bary: [f64; 3], weight: f64) -> BasisPoint {
    let [l0, l1, l2] = bary;
    let gl = geo.grad_lambda;
    let bubble_grad = [
        27.0 * (l1 * l2 * gl[0][0] + l0 * l2 * gl[1][0] + l0 * l1 * gl[2][0]),
        27.0 * (l1 * l2 * gl[0][1] + l0 * l2 * gl[1][1] + l0 * l1 * gl[2][1]),
    ];
    BasisPoint {
        value: [l0, l1, l2, 27.0 * l0 * l1 * l2],
        grad: [gl[0], gl[1], gl[2], bubble_grad],
        weight: 2.0 * geo.area * weight,
    }
}

/// Basis evaluations at every point of `rule`.
pub fn basis_points(geo: &TriangleGeometry, rule: &QuadratureRule) -> Vec<BasisPoint> {
    rule.points()
        .iter()
        .zip(rule.weights())
        .map(|(&p, &w)| mini_basis(geo, p, w))
        .collect()
}

/// Velocity value at a point from local coefficients.
pub fn velocity(bp: &BasisPoint, u: &[f64; VEL]) -> [f64; 2] {
    let mut v = [0.0; 2];
    for f in 0..4 {
        v[0] += bp.value[f] * u[2 * f];
        v[1] += bp.value[f] * u[2 * f + 1];
    }
    v
}

/// `G[i][j] = d u_i / d x_j`.
pub fn velocity_gradient(bp: &BasisPoint, u: &[f64; VEL]) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for f in 0..4 {
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] += u[2 * f + i] * bp.grad[f][j];
            }
        }
    }
    g
}

/// Symmetric gradient `(Du + Du^T) / 2`.
pub fn strain(bp: &BasisPoint, u: &[f64; VEL]) -> [[f64; 2]; 2] {
    let g = velocity_gradient(bp, u);
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

pub fn contract(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// `2 nu * int eps(u) : eps(w)`, row = test function, column = trial function.
pub fn viscous_block(points: &[BasisPoint], nu: f64) -> VelMatrix {
    let mut m = [[0.0; VEL]; VEL];
    for bp in points {
        for b in 0..4 {
            for a in 0..4 {
                let gg = bp.grad[a][0] * bp.grad[b][0] + bp.grad[a][1] * bp.grad[b][1];
                for d in 0..2 {
                    for c in 0..2 {
                        let delta = if c == d { gg } else { 0.0 };
                        m[2 * b + d][2 * a + c] += bp.weight * nu * (delta + bp.grad[a][d] * bp.grad[b][c]);
                    }
                }
            }
        }
    }
    m
}

/// `int lambda_k div u`, row = vertex pressure `k`, column = velocity unknown.
pub fn divergence_block(points: &[BasisPoint]) -> [[f64; VEL]; 3] {
    let mut m = [[0.0; VEL]; 3];
    for bp in points {
        for k in 0..3 {
            for a in 0..4 {
                for c in 0..2 {
                    m[k][2 * a + c] += bp.weight * bp.value[k] * bp.grad[a][c];
                }
            }
        }
    }
    m
}

/// Linearizations of the convection term at `y`:
/// `N[w][u] = int (Du . y) . w` and `N'[w][u] = int (Dy . u) . w`.
pub fn convection_blocks(points: &[BasisPoint], y: &[f64; VEL]) -> (VelMatrix, VelMatrix) {
    let mut n = [[0.0; VEL]; VEL];
    let mut np = [[0.0; VEL]; VEL];
    for bp in points {
        let yv = velocity(bp, y);
        let dy = velocity_gradient(bp, y);
        for b in 0..4 {
            let wb = bp.weight * bp.value[b];
            for a in 0..4 {
                let adv = yv[0] * bp.grad[a][0] + yv[1] * bp.grad[a][1];
                for c in 0..2 {
                    n[2 * b + c][2 * a + c] += wb * adv;
                    for d in 0..2 {
                        np[2 * b + d][2 * a + c] += wb * bp.value[a] * dy[d][c];
                    }
                }
            }
        }
    }
    (n, np)
}

/// Adds the Newton linearization `N(y) + N'(y)` to `k`.
pub fn convection_blocks_into(points: &[BasisPoint], y: &[f64; VEL], k: &mut VelMatrix) {
    let (n, np) = convection_blocks(points, y);
    for i in 0..VEL {
        for j in 0..VEL {
            k[i][j] += n[i][j] + np[i][j];
        }
    }
}

/// `int (Dy . y) . w` for every local test function `w`.
pub fn convection_vector(points: &[BasisPoint], y: &[f64; VEL]) -> [f64; VEL] {
    let mut out = [0.0; VEL];
    for bp in points {
        let yv = velocity(bp, y);
        let dy = velocity_gradient(bp, y);
        let conv = [dy[0][0] * yv[0] + dy[0][1] * yv[1], dy[1][0] * yv[0] + dy[1][1] * yv[1]];
        for b in 0..4 {
            out[2 * b] += bp.weight * bp.value[b] * conv[0];
            out[2 * b + 1] += bp.weight * bp.value[b] * conv[1];
        }
    }
    out
}

pub fn mat_vec(m: &VelMatrix, x: &[f64; VEL]) -> [f64; VEL] {
    let mut out = [0.0; VEL];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> TriangleGeometry {
        TriangleGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    }

    fn strain_of_hat(grad: [f64; 2], comp: usize) -> [[f64; 2]; 2] {
        // u = lambda e_comp, Du has row `comp` equal to grad
        let mut du = [[0.0; 2]; 2];
        du[comp] = grad;
        [
            [du[0][0], 0.5 * (du[0][1] + du[1][0])],
            [0.5 * (du[0][1] + du[1][0]), du[1][1]],
        ]
    }

    #[test]
    fn p1_viscous_block_matches_tensor_contraction() {
        let geo = reference();
        let pts = basis_points(&geo, &QuadratureRule::degree4());
        let nu = 0.7;
        let m = viscous_block(&pts, nu);
        let grads = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..3 {
            for c in 0..2 {
                for b in 0..3 {
                    for d in 0..2 {
                        let eu = strain_of_hat(grads[a], c);
                        let ew = strain_of_hat(grads[b], d);
                        let expect = 2.0 * nu * 0.5 * contract(&eu, &ew);
                        let got = m[2 * b + d][2 * a + c];
                        assert!((got - expect).abs() < 1e-14, "({b},{d})x({a},{c}): {got} vs {expect}");
                    }
                }
            }
        }
        // one entry by hand: u = w = lambda_0 e_x, eps:eps = 1 + 1/2
        assert!((m[0][0] - 2.0 * nu * 0.5 * 1.5).abs() < 1e-14);
    }

    #[test]
    fn viscous_block_is_symmetric_and_linear_in_nu() {
        let geo = TriangleGeometry::new([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]]);
        let pts = basis_points(&geo, &QuadratureRule::degree4());
        let m1 = viscous_block(&pts, 1.0);
        let m2 = viscous_block(&pts, 2.0);
        for i in 0..VEL {
            for j in 0..VEL {
                assert!((m1[i][j] - m1[j][i]).abs() < 1e-14);
                assert_eq!(m2[i][j], 2.0 * m1[i][j]);
            }
        }
    }

    #[test]
    fn rigid_motions_are_in_the_kernel() {
        let geo = TriangleGeometry::new([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]]);
        let pts = basis_points(&geo, &QuadratureRule::degree4());
        let m = viscous_block(&pts, 1.0);
        let rotation = |p: [f64; 2]| [-p[1], p[0]];
        let mut u = [0.0; VEL];
        for a in 0..3 {
            let v = rotation(geo.vertices[a]);
            u[2 * a] = v[0];
            u[2 * a + 1] = v[1];
        }
        for x in mat_vec(&m, &u) {
            assert!(x.abs() < 1e-14);
        }
    }

    #[test]
    fn bubble_and_hats_decouple_in_the_viscous_form() {
        let geo = TriangleGeometry::new([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]]);
        let pts = basis_points(&geo, &QuadratureRule::degree4());
        let m = viscous_block(&pts, 1.0);
        for i in 0..6 {
            for j in 6..8 {
                assert!(m[i][j].abs() < 1e-13, "{i},{j}: {}", m[i][j]);
            }
        }
    }

    #[test]
    fn bubble_peaks_at_centroid() {
        let geo = reference();
        let bp = mini_basis(&geo, [1.0 / 3.0; 3], 0.0);
        assert!((bp.value[3] - 1.0).abs() < 1e-15);
        assert!(bp.grad[3][0].abs() < 1e-15 && bp.grad[3][1].abs() < 1e-15);
    }

    #[test]
    fn constant_advection_by_hand() {
        // y = (c, 0) constant, u = x e_x on the reference triangle:
        // (Du . y) . w = c * w_x, so N u tested with lambda_k e_x = c * area / 3
        let geo = reference();
        let pts = basis_points(&geo, &QuadratureRule::degree4());
        let c = 0.8;
        let mut y = [0.0; VEL];
        for a in 0..3 {
            y[2 * a] = c;
        }
        let mut u = [0.0; VEL];
        for a in 0..3 {
            u[2 * a] = geo.vertices[a][0];
        }
        let (n, np) = convection_blocks(&pts, &y);
        let nu = mat_vec(&n, &u);
        for a in 0..3 {
            assert!((nu[2 * a] - c * 0.5 / 3.0).abs() < 1e-15);
            assert!(nu[2 * a + 1].abs() < 1e-15);
        }
        // bubble test function: c * int b = c * area * 9 / 20
        assert!((nu[6] - c * 0.5 * 9.0 / 20.0).abs() < 1e-14);
        // Dy = 0, so the second linearization vanishes
        for row in np {
            for x in row {
                assert_eq!(x, 0.0);
            }
        }
    }

    #[test]
    fn divergence_of_linear_field() {
        let geo = TriangleGeometry::new([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]]);
        let pts = basis_points(&geo, &QuadratureRule::degree4());
        let d = divergence_block(&pts);
        // u = (x, -y): div u = 0
        let mut u = [0.0; VEL];
        for a in 0..3 {
            u[2 * a] = geo.vertices[a][0];
            u[2 * a + 1] = -geo.vertices[a][1];
        }
        for row in d {
            let s: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!(s.abs() < 1e-14);
        }
        // u = (x, 0): sum over k of int lambda_k * 1 = area
        for a in 0..3 {
            u[2 * a + 1] = 0.0;
        }
        let total: f64 = d
            .iter()
            .map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        assert!((total - geo.area).abs() < 1e-14);
    }
}
