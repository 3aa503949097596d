//! Property-based invariants across the public API.

use adjflow::cli::config::parse_config;
use adjflow::cli::export::{history_csv, HISTORY_HEADER};
use adjflow::fem::QuadratureRule;
use adjflow::flow::{dissipated_energy, solve_flow, FlowConfig, FlowModel, Profile, Variable};
use adjflow::mesh::{gen_channel, gen_rect_with_hole, load_mesh, save_mesh, BoundaryTag, DisplacementField, Mesh2D};
use adjflow::shape_opt::{
    balance_multiplier, step_control, update_multiplier, BoundaryGradient, IterationRecord, StepRule, VolumeFeedback,
};
use proptest::prelude::*;

fn integrate(rule: &QuadratureRule, tri: [[f64; 2]; 3], f: &impl Fn(f64, f64) -> f64) -> f64 {
    let area =
        0.5 * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]));
    rule.points()
        .iter()
        .zip(rule.weights())
        .map(|(l, w)| {
            let x = l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0];
            let y = l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1];
            2.0 * area.abs() * w * f(x, y)
        })
        .sum()
}

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn channel() -> Mesh2D {
    gen_channel(3.0, 1.0, 9, 3).unwrap()
}

fn body() -> Mesh2D {
    gen_rect_with_hole([-0.5, -0.5, 1.5, 0.5], [0.0, 0.0], 0.2, 24)
        .unwrap()
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // A rule exact to degree 4 gives the same value on a triangle and on its
    // four midpoint children.
    #[test]
    fn quadrature_agrees_with_refinement(
        pts in prop::array::uniform6(-2.0f64..2.0),
        c in prop::array::uniform6(-1.0f64..1.0),
        a in 0i32..=4,
    ) {
        let tri = [[pts[0], pts[1]], [pts[2], pts[3]], [pts[4], pts[5]]];
        let area2 = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
        prop_assume!(area2.abs() > 1e-2);
        let b = 4 - a;
        let f = |x: f64, y: f64| c[0] + c[1] * x + c[2] * y * x + c[3] * x.powi(a) * y.powi(b) + c[4] * y.powi(4) + c[5] * x.powi(3);
        let rule = QuadratureRule::degree4();
        let whole = integrate(&rule, tri, &f);
        let (m01, m12, m20) = (mid(tri[0], tri[1]), mid(tri[1], tri[2]), mid(tri[2], tri[0]));
        let parts: f64 = [[tri[0], m01, m20], [m01, tri[1], m12], [m20, m12, tri[2]], [m01, m12, m20]]
            .iter()
            .map(|t| integrate(&rule, *t, &f))
            .sum();
        prop_assert!((whole - parts).abs() <= 1e-11 * (1.0 + whole.abs()), "{whole} vs {parts}");
    }

    // Closed boundary: int n ds = 0 and int x.n ds = 2 |Omega|.
    #[test]
    fn boundary_closes_channel(len in 0.5f64..4.0, h in 0.2f64..2.0, nx in 1usize..12, ny in 1usize..6) {
        let m = gen_channel(len, h, nx, ny).unwrap();
        let (mut sx, mut sy, mut flux) = (0.0, 0.0, 0.0);
        for e in m.oriented_boundary() {
            let n = m.edge_normal(e);
            let l = m.edge_length(e);
            let c = mid(m.nodes()[e.from], m.nodes()[e.to]);
            prop_assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
            sx += n[0] * l;
            sy += n[1] * l;
            flux += (c[0] * n[0] + c[1] * n[1]) * l;
        }
        prop_assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        prop_assert!((flux - 2.0 * m.volume()).abs() < 1e-11);
        prop_assert!((m.volume() - len * h).abs() < 1e-12 * len * h);
    }

    #[test]
    fn mesh_json_round_trip(jitter in prop::collection::vec(-0.02f64..0.02, 80)) {
        let base = channel();
        let nodes: Vec<[f64; 2]> = base
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, p)| if base.fixed_nodes()[i] { *p } else { [p[0] + jitter[2 * i], p[1] + jitter[2 * i + 1]] })
            .collect();
        let m = base.with_nodes(nodes).unwrap();
        prop_assert_eq!(load_mesh(&save_mesh(&m)).unwrap(), m);
    }

    // Moving there and back restores the nodes; fixed nodes never move.
    #[test]
    fn deform_is_reversible(v in prop::collection::vec(-1.0f64..1.0, 2000), t in 0.0f64..0.002) {
        let m = body();
        assert!(m.node_count() <= 1000);
        let vectors = (0..m.node_count()).map(|i| [v[2 * i], v[2 * i + 1]]).collect();
        let d = DisplacementField::new_clamped(&m, vectors).unwrap();
        let moved = m.deform(&d, t);
        prop_assume!(moved.is_ok());
        let moved = moved.unwrap();
        let fixed = m.fixed_nodes();
        for (i, (p, q)) in m.nodes().iter().zip(moved.nodes()).enumerate() {
            if fixed[i] {
                prop_assert_eq!(p, q);
            }
        }
        let back = moved.deform(&d, -t).unwrap();
        for (p, q) in m.nodes().iter().zip(back.nodes()) {
            prop_assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
        }
        let still = m.deform(&d, 0.0).unwrap();
        prop_assert_eq!(still.nodes(), m.nodes());
    }

    #[test]
    fn balanced_multiplier_is_neutral(density in prop::collection::vec(-1e3f64..1e3, 256)) {
        let mut g = BoundaryGradient::zeros(&body()).unwrap();
        let n = g.len();
        g.density = density[..n].to_vec();
        let l = balance_multiplier(&g);
        let shifted = g.with_multiplier(l);
        let net: f64 = shifted.weights.iter().zip(&shifted.density).map(|(w, d)| w * d).sum();
        let scale: f64 = g.weights.iter().zip(&g.density).map(|(w, d)| (w * d).abs()).sum();
        prop_assert!(net.abs() <= 1e-12 * scale.max(1.0), "{net}");
    }

    #[test]
    fn multiplier_feedback(lk in -1.0f64..1.0, l in -1.0f64..1.0, v in 1.0f64..3.0, vt in 1.0f64..3.0, eps in 0.0f64..1.0) {
        let abs = update_multiplier(lk, l, v, vt, eps);
        let mean = 0.5 * (lk + l);
        prop_assert!(abs >= mean);
        prop_assert_eq!(VolumeFeedback::Absolute.update(lk, l, v, vt, eps), abs);
        let signed = VolumeFeedback::Signed.update(lk, l, v, vt, eps);
        // a larger multiplier shrinks the domain, so the signed form pushes toward the target
        prop_assert!((signed - mean) * (v - vt) >= 0.0);
        prop_assert!(((signed - mean).abs() - (abs - mean)).abs() <= 1e-14);
    }

    #[test]
    fn step_stays_in_bounds(
        h in 1e-6f64..1e3,
        a in prop::collection::vec(-1.0f64..1.0, 80),
        b in prop::collection::vec(-1.0f64..1.0, 80),
        inverted in any::<bool>(),
    ) {
        let m = channel();
        let field = |v: &[f64]| {
            DisplacementField::new_clamped(&m, (0..m.node_count()).map(|i| [v[2 * i], v[2 * i + 1]]).collect()).unwrap()
        };
        let rule = StepRule { min: 1e-3, max: 50.0, ..StepRule::default() };
        let (da, db) = (field(&a), field(&b));
        let next = step_control(&m, h, &da, Some(&db), inverted, &rule);
        prop_assert!((rule.min..=rule.max).contains(&next));
        if inverted {
            prop_assert_eq!(next, rule.clamp(0.5 * h));
        } else {
            prop_assert!([rule.clamp(0.5 * h), rule.clamp(h), rule.clamp(1.2 * h)].contains(&next));
        }
        prop_assert_eq!(step_control(&m, h, &da, Some(&da), false, &rule), rule.clamp(1.2 * h));
    }

    #[test]
    fn history_rows_parse_back(
        energy in any::<f64>(),
        volume in -1e6f64..1e6,
        multiplier in any::<f64>(),
        step in 0.0f64..1e9,
        grad in 0.0f64..1e3,
        newton in 0usize..100,
        accepted in any::<bool>(),
    ) {
        prop_assume!(energy.is_finite() && multiplier.is_finite());
        let r = IterationRecord {
            iter: 7,
            energy,
            volume,
            multiplier,
            step,
            grad_norm: grad,
            newton_iters: newton,
            accepted,
            rejection: None,
            descent: 0.0,
        };
        let csv = history_csv(&[r]);
        let mut lines = csv.lines();
        prop_assert_eq!(lines.next(), Some(HISTORY_HEADER));
        let f: Vec<&str> = lines.next().unwrap().split(',').collect();
        prop_assert_eq!(f.len(), 8);
        let nums: Vec<f64> = f[1..6].iter().map(|x| x.parse().unwrap()).collect();
        prop_assert_eq!(nums, vec![energy, volume, multiplier, step, grad]);
        prop_assert_eq!(f[6].parse::<usize>().unwrap(), newton);
        prop_assert_eq!(f[7].parse::<bool>().unwrap(), accepted);
    }

    #[test]
    fn config_serialization_round_trips(nu in 1e-6f64..10.0, coeffs in prop::collection::vec(-5.0f64..5.0, 0..4)) {
        let json = serde_json::json!({
            "mesh": {"generator": {"kind": "channel", "length": 3, "height": 1, "nx": 6, "ny": 2}},
            "flow": {"viscosity": nu, "inflow": {"coeffs_x": coeffs}}
        });
        let c = parse_config(json.to_string().as_bytes()).unwrap();
        prop_assert_eq!(c.flow.viscosity, nu);
        let again = parse_config(&serde_json::to_vec(&c).unwrap()).unwrap();
        prop_assert_eq!(again, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // The Stokes problem is linear in its data; the velocity does not depend on nu
    // under pure Dirichlet driving, so J is linear in nu.
    #[test]
    fn stokes_scaling(s in -3.0f64..3.0, nu in 0.05f64..5.0) {
        let m = channel();
        let mut c = FlowConfig::new(1.0);
        c.model = FlowModel::Stokes;
        c.inflow = Profile::new(vec![0.0, 1.0, -1.0], vec![], Variable::Y);
        let base = solve_flow(&m, &c, None).unwrap();
        let j1 = dissipated_energy(&m, &base, 1.0);

        let mut scaled = c.clone();
        scaled.inflow = Profile::new(vec![0.0, s, -s], vec![], Variable::Y);
        let ys = solve_flow(&m, &scaled, None).unwrap();
        for (a, b) in base.field.velocity_part().iter().zip(ys.field.velocity_part()) {
            prop_assert!((s * a - b).abs() <= 1e-10);
        }
        prop_assert!((dissipated_energy(&m, &ys, 1.0) - s * s * j1).abs() <= 1e-10 * (1.0 + j1));

        let mut viscous = c.clone();
        viscous.viscosity = nu;
        let yn = solve_flow(&m, &viscous, None).unwrap();
        prop_assert!((dissipated_energy(&m, &yn, nu) - nu * j1).abs() <= 1e-10 * nu * j1);
        prop_assert!(m.has_tag(BoundaryTag::Outflow));
    }
}
