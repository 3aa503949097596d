//! Step-size heuristic driven by the H1 alignment of consecutive directions.

use serde::{Deserialize, Serialize};

use super::smoothing::h1_inner;
use crate::mesh::{DisplacementField, Mesh2D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepRule {
    pub decrease: f64,
    pub increase: f64,
    /// Normalized H1 inner product above which the step grows.
    pub align_threshold: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            decrease: 0.5,
            increase: 1.2,
            align_threshold: 0.9,
            min: 0.0,
            max: f64::INFINITY,
        }
    }
}

impl StepRule {
    pub fn clamp(&self, h: f64) -> f64 {
        h.clamp(self.min, self.max)
    }
}

/// Next step from the current one, the new and previous directions and
/// whether the last move inverted an element.
pub fn step_control(
    mesh: &Mesh2D,
    h: f64,
    d_k: &DisplacementField,
    d_prev: Option<&DisplacementField>,
    inverted: bool,
    rule: &StepRule,
) -> f64 {
    if inverted {
        return rule.clamp(rule.decrease * h);
    }
    let Some(prev) = d_prev else {
        return rule.clamp(h);
    };
    let ip = h1_inner(mesh, d_k, prev);
    if ip < 0.0 {
        return rule.clamp(rule.decrease * h);
    }
    let denom = (h1_inner(mesh, d_k, d_k) * h1_inner(mesh, prev, prev)).sqrt();
    if denom > 0.0 && ip / denom > rule.align_threshold {
        return rule.clamp(rule.increase * h);
    }
    rule.clamp(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_channel;

    fn field(mesh: &Mesh2D, s: f64) -> DisplacementField {
        // interior-only bump; gen_channel has no free edges, so build by hand
        let fixed = mesh.fixed_nodes();
        let v = mesh
            .nodes()
            .iter()
            .zip(&fixed)
            .map(|(p, &f)| if f { [0.0, 0.0] } else { [s * p[0], s * p[1]] })
            .collect();
        DisplacementField::new(mesh, v).unwrap()
    }

    #[test]
    fn aligned_opposed_and_inverted() {
        let m = gen_channel(2.0, 1.0, 6, 4).unwrap();
        let rule = StepRule {
            min: 1e-3,
            max: 10.0,
            ..StepRule::default()
        };
        let d = field(&m, 1.0);
        assert_eq!(step_control(&m, 1.0, &d, Some(&d), false, &rule), 1.2);
        assert_eq!(step_control(&m, 1.0, &d, Some(&field(&m, -1.0)), false, &rule), 0.5);
        assert_eq!(step_control(&m, 1.0, &d, Some(&d), true, &rule), 0.5);
        assert_eq!(step_control(&m, 9.0, &d, Some(&d), false, &rule), 10.0);
        assert_eq!(step_control(&m, 1.5e-3, &d, None, true, &rule), 1e-3);
        assert_eq!(step_control(&m, 2.0, &d, None, false, &rule), 2.0);
    }

    #[test]
    fn weakly_aligned_keeps_step() {
        let m = gen_channel(2.0, 1.0, 6, 4).unwrap();
        let fixed = m.fixed_nodes();
        let a = DisplacementField::new(
            &m,
            m.nodes()
                .iter()
                .zip(&fixed)
                .map(|(_, &f)| if f { [0.0; 2] } else { [1.0, 0.0] })
                .collect(),
        )
        .unwrap();
        let b = DisplacementField::new(
            &m,
            m.nodes()
                .iter()
                .zip(&fixed)
                .map(|(_, &f)| if f { [0.0; 2] } else { [1.0, 1.0] })
                .collect(),
        )
        .unwrap();
        // cosine 1/sqrt(2) lies between 0 and the threshold
        assert_eq!(step_control(&m, 1.0, &a, Some(&b), false, &StepRule::default()), 1.0);
    }
}
