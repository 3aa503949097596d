//! Volume-constrained gradient descent on the free boundary.

use serde::{Deserialize, Serialize};

use crate::adjoint::solve_adjoint;
use crate::flow::{dissipated_energy, solve_flow, FlowConfig, FlowState};
use crate::mesh::{DisplacementField, Mesh2D};
use crate::{Error, Result};

use super::gradient::{
    balance_multiplier, eulerian_derivative, shape_gradient_with, update_multiplier, GradientRecovery,
};
use super::smoothing::{h1_inner, smooth_descent};
use super::step::{step_control, StepRule};

/// Form of the volume correction added to the averaged multiplier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeFeedback {
    /// `+ eps |V_k - V| / V`: always raises the multiplier, which shrinks the domain.
    #[default]
    Absolute,
    /// `+ eps (V_k - V) / V`: pulls the volume back toward the target from either side.
    Signed,
}

impl VolumeFeedback {
    pub fn update(self, l_k: f64, l: f64, volume: f64, target: f64, epsilon: f64) -> f64 {
        match self {
            VolumeFeedback::Absolute => update_multiplier(l_k, l, volume, target, epsilon),
            VolumeFeedback::Signed => (l_k + l) / 2.0 + epsilon * (volume - target) / target,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimConfig {
    pub step0: f64,
    /// Starting multiplier; the balancing multiplier of the first gradient when absent.
    pub multiplier0: Option<f64>,
    pub epsilon: f64,
    pub volume_feedback: VolumeFeedback,
    /// Defaults to the volume of the initial mesh.
    pub target_volume: Option<f64>,
    pub max_iters: usize,
    pub step_bounds: [f64; 2],
    pub step_decrease: f64,
    pub step_increase: f64,
    pub align_threshold: f64,
    /// Consecutive rejected attempts tolerated before the run stops.
    pub max_retries: usize,
    pub recovery: GradientRecovery,
}

impl Default for OptimConfig {
    fn default() -> Self {
        let rule = StepRule::default();
        OptimConfig {
            step0: 1.0,
            multiplier0: None,
            epsilon: 0.0,
            volume_feedback: VolumeFeedback::default(),
            target_volume: None,
            max_iters: 60,
            step_bounds: [1e-8, 1e8],
            step_decrease: rule.decrease,
            step_increase: rule.increase,
            align_threshold: rule.align_threshold,
            max_retries: 8,
            recovery: GradientRecovery::default(),
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.step_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(Error::config(
                "optimize.step_bounds",
                "expected 0 <= h_min <= h_max, both finite",
            ));
        }
        if !(self.step0 > 0.0 && self.step0 >= lo && self.step0 <= hi) {
            return Err(Error::config(
                "optimize.step0",
                "must be positive and inside step_bounds",
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::config("optimize.epsilon", "must be finite and non-negative"));
        }
        if let Some(v) = self.target_volume {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config("optimize.target_volume", "must be positive"));
            }
        }
        if let Some(l) = self.multiplier0 {
            if !l.is_finite() {
                return Err(Error::config("optimize.multiplier0", "must be finite"));
            }
        }
        if !(self.step_decrease > 0.0 && self.step_decrease < 1.0) {
            return Err(Error::config("optimize.step_decrease", "must lie in (0, 1)"));
        }
        if !(self.step_increase >= 1.0 && self.step_increase.is_finite()) {
            return Err(Error::config("optimize.step_increase", "must be at least 1"));
        }
        if !(-1.0..=1.0).contains(&self.align_threshold) {
            return Err(Error::config("optimize.align_threshold", "must lie in [-1, 1]"));
        }
        if self.max_retries == 0 {
            return Err(Error::config("optimize.max_retries", "must be at least 1"));
        }
        Ok(())
    }

    pub fn step_rule(&self) -> StepRule {
        StepRule {
            decrease: self.step_decrease,
            increase: self.step_increase,
            align_threshold: self.align_threshold,
            min: self.step_bounds[0],
            max: self.step_bounds[1],
        }
    }
}

/// Why an attempted move was thrown away.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    InvertedElement,
    NewtonDiverged,
    EnergyIncrease,
}

/// One attempted move. `energy` and `volume` describe the accepted mesh, or
/// the trial mesh of a rejected move when it could be evaluated (NaN otherwise).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub volume: f64,
    /// Multiplier used for this move's descent direction.
    pub multiplier: f64,
    pub step: f64,
    /// `L2` norm of the raw gradient density on the free boundary.
    pub grad_norm: f64,
    pub newton_iters: usize,
    pub accepted: bool,
    pub rejection: Option<Rejection>,
    /// `dG(d)` of the multiplier-augmented gradient along the descent field.
    pub descent: f64,
}

#[derive(Clone, Debug)]
pub struct OptimReport {
    pub initial_energy: f64,
    pub initial_volume: f64,
    pub target_volume: f64,
    pub history: Vec<IterationRecord>,
    pub mesh: Mesh2D,
    pub state: FlowState,
    /// Set when the retry cap stopped the run before the budget was used.
    pub terminated_early: bool,
}

impl OptimReport {
    pub fn final_energy(&self) -> f64 {
        self.history
            .iter()
            .rev()
            .find(|r| r.accepted)
            .map_or(self.initial_energy, |r| r.energy)
    }

    /// `1 - J_final / J_0`.
    pub fn reduction(&self) -> f64 {
        if self.initial_energy == 0.0 {
            0.0
        } else {
            1.0 - self.final_energy() / self.initial_energy
        }
    }

    /// Largest `|V_k - V_target| / V_target` over the accepted meshes.
    pub fn max_volume_drift(&self) -> f64 {
        self.history
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.volume)
            .chain([self.initial_volume])
            .map(|v| (v - self.target_volume).abs() / self.target_volume)
            .fold(0.0, f64::max)
    }
}

enum Trial {
    Accepted(Mesh2D, FlowState, f64),
    Rejected(Rejection, f64, f64, usize),
}

fn trial(
    mesh: &Mesh2D,
    d: &DisplacementField,
    h: f64,
    flow: &FlowConfig,
    state: &FlowState,
    energy: f64,
) -> Result<Trial> {
    let moved = match mesh.deform(d, h) {
        Ok(m) => m,
        Err(Error::InvertedElement { .. }) => {
            return Ok(Trial::Rejected(Rejection::InvertedElement, f64::NAN, f64::NAN, 0))
        }
        Err(e) => return Err(e),
    };
    let volume = moved.volume();
    let s = match solve_flow(&moved, flow, Some(state)) {
        Ok(s) => s,
        Err(Error::NewtonDiverged { trace }) => {
            return Ok(Trial::Rejected(
                Rejection::NewtonDiverged,
                f64::NAN,
                volume,
                trace.len(),
            ))
        }
        Err(e) => return Err(e),
    };
    let j = dissipated_energy(&moved, &s, flow.viscosity);
    if j > energy {
        return Ok(Trial::Rejected(
            Rejection::EnergyIncrease,
            j,
            volume,
            s.report.iterations,
        ));
    }
    Ok(Trial::Accepted(moved, s, j))
}

/// Runs the descent for `config.max_iters` attempted moves.
///
/// Each outer step solves the adjoint, forms `g + l_k`, smooths it into a
/// descent field and tries to move the mesh; a rejected attempt halves the
/// step and retries with the same field. The multiplier is updated from the
/// balancing value of the current gradient after every accepted move.
pub fn optimize(mesh: &Mesh2D, flow: &FlowConfig, config: &OptimConfig) -> Result<OptimReport> {
    flow.validate()?;
    config.validate()?;
    let rule = config.step_rule();
    let mut mesh = mesh.clone();
    let mut state = solve_flow(&mesh, flow, None)?;
    let mut energy = dissipated_energy(&mesh, &state, flow.viscosity);
    let initial_energy = energy;
    let initial_volume = mesh.volume();
    let target = config.target_volume.unwrap_or(initial_volume);

    let mut history = Vec::new();
    let mut multiplier = config.multiplier0;
    let mut h = rule.clamp(config.step0);
    let mut prev: Option<DisplacementField> = None;
    let mut terminated_early = false;

    'outer: while history.len() < config.max_iters {
        let adj = solve_adjoint(&mesh, &state, flow)?;
        let grad = shape_gradient_with(&mesh, &state, &adj, flow, config.recovery)?;
        let balance = balance_multiplier(&grad);
        let l_k = *multiplier.get_or_insert(balance);
        let total = grad.with_multiplier(l_k);
        let d = smooth_descent(&mesh, &total)?;
        let descent = eulerian_derivative(&total, &d);
        let dd = h1_inner(&mesh, &d, &d);
        if descent > 1e-10 * dd.max(f64::MIN_POSITIVE) + f64::MIN_POSITIVE {
            return Err(Error::InvalidArgument(format!(
                "smoothed field is not a descent direction: dG = {descent:e}, |d|^2 = {dd:e}"
            )));
        }
        h = step_control(&mesh, h, &d, prev.as_ref(), false, &rule);
        let grad_norm = grad.norm();
        let mut rejected = 0;
        loop {
            if history.len() >= config.max_iters {
                break 'outer;
            }
            let iter = history.len() + 1;
            match trial(&mesh, &d, h, flow, &state, energy)? {
                Trial::Accepted(m, s, j) => {
                    history.push(IterationRecord {
                        iter,
                        energy: j,
                        volume: m.volume(),
                        multiplier: l_k,
                        step: h,
                        grad_norm,
                        newton_iters: s.report.iterations,
                        accepted: true,
                        rejection: None,
                        descent,
                    });
                    multiplier =
                        Some(
                            config
                                .volume_feedback
                                .update(l_k, balance, mesh.volume(), target, config.epsilon),
                        );
                    mesh = m;
                    state = s;
                    energy = j;
                    prev = Some(d);
                    break;
                }
                Trial::Rejected(why, j, volume, newton_iters) => {
                    history.push(IterationRecord {
                        iter,
                        energy: j,
                        volume,
                        multiplier: l_k,
                        step: h,
                        grad_norm,
                        newton_iters,
                        accepted: false,
                        rejection: Some(why),
                        descent,
                    });
                    rejected += 1;
                    if rejected >= config.max_retries {
                        terminated_early = history.len() < config.max_iters;
                        break 'outer;
                    }
                    h = step_control(&mesh, h, &d, None, true, &rule);
                }
            }
        }
    }

    Ok(OptimReport {
        initial_energy,
        initial_volume,
        target_volume: target,
        history,
        mesh,
        state,
        terminated_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Profile, Variable};
    use crate::mesh::gen_rect_with_hole;

    fn body(res: usize) -> Mesh2D {
        gen_rect_with_hole([-0.5, -0.5, 1.5, 0.5], [0.0, 0.0], 0.2, res)
            .unwrap()
            .0
    }

    fn flow(nu: f64) -> FlowConfig {
        let mut c = FlowConfig::new(nu);
        c.inflow = Profile::new(vec![-0.05, 0.0, 0.2], vec![], Variable::Y);
        c
    }

    #[test]
    fn zero_budget_returns_initial_mesh() {
        let m = body(16);
        let cfg = OptimConfig {
            max_iters: 0,
            ..OptimConfig::default()
        };
        let r = optimize(&m, &flow(5e-3), &cfg).unwrap();
        assert!(r.history.is_empty());
        assert_eq!(r.mesh, m);
        assert_eq!(r.reduction(), 0.0);
    }

    #[test]
    fn homogeneous_data_does_not_move() {
        let m = body(16);
        let cfg = OptimConfig {
            max_iters: 3,
            epsilon: 0.1,
            ..OptimConfig::default()
        };
        let r = optimize(&m, &FlowConfig::new(0.01), &cfg).unwrap();
        assert_eq!(r.history.len(), 3);
        assert!(r
            .history
            .iter()
            .all(|h| h.accepted && h.energy == 0.0 && h.multiplier == 0.0));
        assert_eq!(r.mesh, m);
    }

    #[test]
    fn oversized_step_is_rejected_then_halved() {
        let m = body(24);
        let cfg = OptimConfig {
            step0: 1e6,
            max_iters: 40,
            max_retries: 40,
            ..OptimConfig::default()
        };
        let r = optimize(&m, &flow(5e-3), &cfg).unwrap();
        let first = &r.history[0];
        assert!(!first.accepted);
        assert_eq!(first.rejection, Some(Rejection::InvertedElement));
        assert!(first.energy.is_nan());
        let accepted = r.history.iter().position(|h| h.accepted).unwrap();
        for w in r.history[..=accepted].windows(2) {
            assert_eq!(w[1].step, 0.5 * w[0].step);
        }
        assert!(r.final_energy() < r.initial_energy);
    }

    #[test]
    fn accepted_energies_do_not_increase() {
        let m = body(24);
        let cfg = OptimConfig {
            step0: 20.0,
            step_bounds: [1e-6, 40.0],
            max_iters: 8,
            ..OptimConfig::default()
        };
        let r = optimize(&m, &flow(5e-3), &cfg).unwrap();
        let mut last = r.initial_energy;
        for h in r.history.iter().filter(|h| h.accepted) {
            assert!(h.energy <= last);
            assert!(h.descent <= 0.0);
            last = h.energy;
        }
        assert!(r.final_energy() < r.initial_energy);
    }

    #[test]
    fn validation_paths() {
        let bad = |c: OptimConfig| match c.validate() {
            Err(Error::Config { path, .. }) => path,
            other => panic!("{other:?}"),
        };
        let d = OptimConfig::default();
        assert!(d.validate().is_ok());
        assert_eq!(
            bad(OptimConfig {
                step0: 0.0,
                ..d.clone()
            }),
            "optimize.step0"
        );
        assert_eq!(
            bad(OptimConfig {
                step0: 2.0,
                step_bounds: [0.0, 1.0],
                ..d.clone()
            }),
            "optimize.step0"
        );
        assert_eq!(
            bad(OptimConfig {
                epsilon: -1.0,
                ..d.clone()
            }),
            "optimize.epsilon"
        );
        assert_eq!(
            bad(OptimConfig {
                target_volume: Some(0.0),
                ..d.clone()
            }),
            "optimize.target_volume"
        );
        assert_eq!(
            bad(OptimConfig {
                step_bounds: [2.0, 1.0],
                ..d.clone()
            }),
            "optimize.step_bounds"
        );
        assert_eq!(
            bad(OptimConfig {
                step_decrease: 1.0,
                ..d.clone()
            }),
            "optimize.step_decrease"
        );
        assert_eq!(bad(OptimConfig { max_retries: 0, ..d }), "optimize.max_retries");
    }

    #[test]
    fn feedback_forms_agree_above_target() {
        let a = VolumeFeedback::Absolute.update(1.0, 2.0, 2.0, 1.9, 0.1);
        let s = VolumeFeedback::Signed.update(1.0, 2.0, 2.0, 1.9, 0.1);
        assert_eq!(a, s);
        let below = VolumeFeedback::Signed.update(1.0, 2.0, 1.8, 1.9, 0.1);
        assert!((below - (1.5 - 0.1 * 0.1 / 1.9)).abs() < 1e-15);
    }
}
