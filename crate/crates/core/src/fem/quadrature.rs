//! Triangle and segment quadrature.

/// Symmetric rule on the reference triangle `{x, y >= 0, x + y <= 1}`.
///
/// Points are barycentric triples; weights sum to the reference area 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

impl QuadratureRule {
    /// Six-point degree-4 rule (Dunavant).
    pub fn degree4() -> Self {
        const A1: f64 = 0.445_948_490_915_964_886_32;
        const W1: f64 = 0.223_381_589_678_011_465_70;
        const A2: f64 = 0.091_576_213_509_770_743_460;
        const W2: f64 = 0.109_951_743_655_321_867_64;
        let b1 = 1.0 - 2.0 * A1;
        let b2 = 1.0 - 2.0 * A2;
        let points = vec![
            [b1, A1, A1],
            [A1, b1, A1],
            [A1, A1, b1],
            [b2, A2, A2],
            [A2, b2, A2],
            [A2, A2, b2],
        ];
        let weights = [W1, W1, W1, W2, W2, W2].iter().map(|w| 0.5 * w).collect();
        QuadratureRule {
            points,
            weights,
            degree: 4,
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Four-point Gauss–Legendre nodes and weights on `[0, 1]` (exact to degree 7).
pub fn gauss_legendre_unit() -> [(f64, f64); 4] {
    const X1: f64 = 0.339_981_043_584_856_264_8;
    const X2: f64 = 0.861_136_311_594_052_575_2;
    const W1: f64 = 0.652_145_154_862_546_142_6;
    const W2: f64 = 0.347_854_845_137_453_857_4;
    [
        (0.5 * (1.0 - X2), 0.5 * W2),
        (0.5 * (1.0 - X1), 0.5 * W1),
        (0.5 * (1.0 + X1), 0.5 * W1),
        (0.5 * (1.0 + X2), 0.5 * W2),
    ]
}
