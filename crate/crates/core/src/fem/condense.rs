//! Element-level static condensation of the bubble unknowns.

use super::element::LOCAL;
use crate::{Error, Result};

/// Local indices kept after condensation: six nodal velocities, three pressures.
pub const KEPT: [usize; 9] = [0, 1, 2, 3, 4, 5, 8, 9, 10];
/// Local indices of the two bubble coefficients.
pub const BUBBLE: [usize; 2] = [6, 7];

/// Local 11x11 matrix and load, ordered as in [`super::element`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementSystem {
    pub matrix: [[f64; LOCAL]; LOCAL],
    pub rhs: [f64; LOCAL],
}

impl ElementSystem {
    pub fn zeros() -> Self {
        ElementSystem {
            matrix: [[0.0; LOCAL]; LOCAL],
            rhs: [0.0; LOCAL],
        }
    }

    pub fn transposed(&self) -> Self {
        let mut t = *self;
        for i in 0..LOCAL {
            for j in 0..LOCAL {
                t.matrix[i][j] = self.matrix[j][i];
            }
        }
        t
    }
}

/// Data needed to rebuild the bubble coefficients once the kept unknowns are known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleRecovery {
    inv_bb: [[f64; 2]; 2],
    k_bo: [[f64; 9]; 2],
    f_b: [f64; 2],
}

impl BubbleRecovery {
    /// Bubble coefficients `K_bb^{-1} (f_b - K_bo x_o)` for kept values `x_o`.
    pub fn recover(&self, kept: &[f64; 9]) -> [f64; 2] {
        let mut r = self.f_b;
        for (ri, row) in r.iter_mut().zip(&self.k_bo) {
            *ri -= row.iter().zip(kept).map(|(a, b)| a * b).sum::<f64>();
        }
        [
            self.inv_bb[0][0] * r[0] + self.inv_bb[0][1] * r[1],
            self.inv_bb[1][0] * r[0] + self.inv_bb[1][1] * r[1],
        ]
    }
}

/// Schur complement onto [`KEPT`].
pub fn condense_bubbles(sys: &ElementSystem) -> Result<([[f64; 9]; 9], [f64; 9], BubbleRecovery)> {
    let k = &sys.matrix;
    let [b0, b1] = BUBBLE;
    let (a, b, c, d) = (k[b0][b0], k[b0][b1], k[b1][b0], k[b1][b1]);
    let det = a * d - b * c;
    let scale = a.abs().max(d.abs());
    if !(det.abs() > 1e-14 * scale * scale) {
        return Err(Error::Singular(format!("bubble block is singular (det {det:e})")));
    }
    let inv_bb = [[d / det, -b / det], [-c / det, a / det]];

    let mut k_bo = [[0.0; 9]; 2];
    let mut k_ob = [[0.0; 2]; 9];
    for (r, &i) in KEPT.iter().enumerate() {
        for (s, &j) in BUBBLE.iter().enumerate() {
            k_bo[s][r] = k[j][i];
            k_ob[r][s] = k[i][j];
        }
    }
    let f_b = [sys.rhs[b0], sys.rhs[b1]];

    // K_ob K_bb^{-1}
    let mut w = [[0.0; 2]; 9];
    for r in 0..9 {
        for s in 0..2 {
            w[r][s] = k_ob[r][0] * inv_bb[0][s] + k_ob[r][1] * inv_bb[1][s];
        }
    }
    let mut kc = [[0.0; 9]; 9];
    let mut fc = [0.0; 9];
    for (r, &i) in KEPT.iter().enumerate() {
        for (s, &j) in KEPT.iter().enumerate() {
            kc[r][s] = k[i][j] - w[r][0] * k_bo[0][s] - w[r][1] * k_bo[1][s];
        }
        fc[r] = sys.rhs[i] - w[r][0] * f_b[0] - w[r][1] * f_b[1];
    }
    Ok((kc, fc, BubbleRecovery { inv_bb, k_bo, f_b }))
}
