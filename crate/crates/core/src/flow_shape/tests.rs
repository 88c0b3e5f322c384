use std::f64::consts::PI;

use super::*;
use crate::grid::{rasterize, GridDomain, Primitive};

fn cut_annulus(n: usize) -> (ShapeMask, ShapeMask) {
    let d = GridDomain::square(-1.0, 1.0, n).unwrap();
    let h = d.h();
    let ring = Primitive::annulus(&[0.0, 0.0], 0.4, 0.8);
    let cut = Primitive::rect(&[0.0, -1.01 * h], &[1.0, 1.01 * h]);
    let full = rasterize(&ring, &d).unwrap();
    let open = rasterize(&ring.clone().minus(cut), &d).unwrap();
    (open, full)
}

#[test]
fn square_and_disk_values() {
    let sq = ShapeMask::full(GridDomain::vertex_aligned(0.0, PI, 64, 2).unwrap());
    let l = evaluate_shape_functional(&sq, &FunctionalSpec::lambda(1)).unwrap();
    assert!((l - 2.0).abs() < 0.02, "{l}");

    let d = GridDomain::square(-1.05, 1.05, 448).unwrap();
    let disk = rasterize(&Primitive::ball(&[0.0, 0.0], 1.0), &d).unwrap();
    let e = evaluate_shape_functional(&disk, &FunctionalSpec::energy()).unwrap();
    // staircase boundaries converge at first order
    assert!((e + PI / 8.0).abs() < 0.01 * PI / 8.0, "{e}");

    let empty = ShapeMask::empty(d);
    assert_eq!(
        evaluate_shape_functional(&empty, &FunctionalSpec::energy()).unwrap(),
        0.0
    );
    assert!(matches!(
        evaluate_shape_functional(&empty, &FunctionalSpec::lambda(1)),
        Err(Error::EmptyMask(_))
    ));
}

#[test]
fn penalties_are_added() {
    let d = GridDomain::square(-1.0, 1.0, 32).unwrap();
    let m = rasterize(&Primitive::ball(&[0.0, 0.0], 0.5), &d).unwrap();
    let st = measure_stats(&m);
    let v = evaluate_shape_functional(&m, &FunctionalSpec::zero().with_penalties(2.0, 0.5)).unwrap();
    assert!((v - 2.0 * st.volume - 0.5 * st.perimeter).abs() < 1e-12);
}

#[test]
fn ball_reference_values() {
    assert_eq!(ball_flow_reference(1.0, 2, 0.0).unwrap(), 1.0);
    let lam = unit_ball_lambda1(2).unwrap();
    assert!((lam - 5.783186).abs() < 1e-3, "{lam}");
    let r = ball_flow_reference(1.0, 2, 0.1).unwrap();
    let expect = (1.0 + 12.0 * lam * 0.1 / (4.0 * PI * PI)).powf(1.0 / 6.0);
    assert!((r - expect).abs() < 1e-12);
    assert!((r - 1.02736).abs() < 1e-4, "{r}");
    // increasing and concave
    let ts: Vec<f64> = (0..50).map(|i| 0.02 * i as f64).collect();
    let rs: Vec<f64> = ts.iter().map(|&t| ball_flow_reference(1.0, 2, t).unwrap()).collect();
    assert!(rs.windows(2).all(|w| w[1] > w[0]));
    assert!(rs.windows(3).all(|w| w[2] - w[1] <= w[1] - w[0] + 1e-15));
    // the closed form solves R' = rhs(R)
    let (t, dt) = (0.3, 1e-6);
    let num =
        (ball_flow_reference(1.0, 2, t + dt).unwrap() - ball_flow_reference(1.0, 2, t - dt).unwrap()) / (2.0 * dt);
    let rhs = ball_flow_rhs(ball_flow_reference(1.0, 2, t).unwrap(), 2).unwrap();
    assert!((num - rhs).abs() < 1e-6 * rhs);
    // d = 1: λ₁(B₁) = π²/4
    assert!((unit_ball_lambda1(1).unwrap() - PI * PI / 4.0).abs() < 1e-4);
}

#[test]
fn radial_step_is_stationary() {
    let lam = unit_ball_lambda1(2).unwrap();
    for eps in [1e-3, 1e-2] {
        let ball = RadialShape::ball(&[0.0, 0.0], 1.0).unwrap();
        let s = mm_step_radial(&FunctionalSpec::lambda(1), &ball, eps, 2.0).unwrap();
        let r = s.shape.outer_radius();
        assert!(r > 1.0);
        let force = 2.0 * lam / r.powi(3);
        let balance = PI * PI / eps * (r * r - 1.0) * 2.0 * r;
        assert!(
            (balance - force).abs() <= 1e-3 * force,
            "eps {eps}: {balance} vs {force}"
        );
    }
}

#[test]
fn tiny_epsilon_returns_input() {
    let ball = RadialShape::ball(&[0.0, 0.0], 1.0).unwrap();
    let s = mm_step_radial(&FunctionalSpec::lambda(1), &ball, 1e-14, 2.0).unwrap();
    assert!((s.shape.outer_radius() - 1.0).abs() < 1e-6);

    let d = GridDomain::square(-1.0, 1.0, 24).unwrap();
    let m = rasterize(&Primitive::ball(&[0.0, 0.0], 0.5), &d).unwrap();
    let g = mm_step_shape(&FunctionalSpec::lambda(1), &m, 1e-12, &GreedyParams::default()).unwrap();
    assert_eq!(g.mask, m);
}

#[test]
fn radial_ball_flow_tracks_closed_form() {
    let errors: Vec<f64> = [4e-3, 2e-3]
        .iter()
        .map(|&eps| {
            let d = GridDomain::square(-2.0, 2.0, 16).unwrap();
            let cfg = ShapeFlowConfig::new(FunctionalSpec::lambda(1), eps, 0.05, Strategy::Radial);
            let start = ShapeStart::Radial {
                shape: RadialShape::ball(&[0.0, 0.0], 1.0).unwrap(),
                domain: d,
            };
            let t = run_shape_flow(&cfg, start).unwrap();
            assert!(t.flow.failure.is_none());
            let inv = t.invariants().unwrap();
            assert!(inv.all(), "{inv:?}");
            let shapes = t.radial.as_ref().unwrap();
            let radii: Vec<f64> = shapes.iter().map(|s| s.outer_radius()).collect();
            assert!(radii.windows(2).all(|w| w[1] >= w[0]));
            let l = t.lambda1_series();
            assert!(l.windows(2).all(|w| w[1] <= w[0]));
            assert!(t.jumps.is_empty());
            radii
                .iter()
                .zip(&t.flow.times)
                .map(|(&r, &tt)| {
                    let exact = ball_flow_reference(1.0, 2, tt).unwrap();
                    (r - exact).abs() / exact
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[0] < 0.02 && errors[1] < errors[0], "{errors:?}");
}

#[test]
fn remark_fixture_has_one_jump() {
    let d = GridDomain::square(-3.0, 3.0, 24).unwrap();
    let shape = RadialShape::new(&[0.0, 0.0], vec![(0.0, 1.0), (1.2, 2.2)]).unwrap();
    let mut cfg = ShapeFlowConfig::new(FunctionalSpec::lambda(1), 0.05, 1.0, Strategy::Radial);
    cfg.radial_bound = Some(3.0);
    let t = run_shape_flow(&cfg, ShapeStart::Radial { shape, domain: d }).unwrap();
    assert!(t.flow.failure.is_none());
    assert_eq!(t.jumps.len(), 1, "{:?} {:?}", t.jumps, t.lambda1_series());
    let j = t.jumps[0];
    assert!(j.before > 4.0 && j.after < 1.3, "{j:?}");
    assert_eq!(t.components.first(), Some(&2));
    assert_eq!(t.components.last(), Some(&1));
    assert!(t.invariants().unwrap().all());
}

#[test]
fn greedy_fills_the_cut_first() {
    let (open, full) = cut_annulus(40);
    let cut: Vec<usize> = full.iter_inside().filter(|&k| !open.contains(k)).collect();
    assert!(!cut.is_empty());
    let spec = FunctionalSpec::lambda(1);
    let s = mm_step_shape(&spec, &open, 10.0, &GreedyParams::default()).unwrap();
    let first = &s.batches[0];
    assert!(first.iter().all(|k| cut.contains(k)), "{first:?} vs {cut:?}");
    assert!(s.seam_fills >= 1);
    assert!(open.is_subset_of(&s.mask).unwrap());
    let l0 = evaluate_shape_functional(&open, &spec).unwrap();
    let l1 = s.evaluation.value;
    assert!(l1 < l0);
    assert!(component_count(&s.mask) <= component_count(&open));
}

#[test]
fn greedy_flow_is_a_chain() {
    let d = GridDomain::square(-1.0, 1.0, 24).unwrap();
    let m0 = rasterize(&Primitive::ball(&[0.0, 0.0], 0.4), &d).unwrap();
    let cfg = ShapeFlowConfig::new(FunctionalSpec::lambda(1), 0.05, 0.1, Strategy::Greedy);
    let t = run_shape_flow(&cfg, m0.clone()).unwrap();
    assert!(t.flow.failure.is_none());
    assert_eq!(t.len(), 3);
    let inv = t.invariants().unwrap();
    assert!(inv.all(), "{inv:?}");
    assert!(t.flow.max_energy_residual() <= 1e-10);
    assert!(t.volumes.last().unwrap() > &m0.volume());
    assert!(t.max_normal_derivative_sq.iter().all(|s| s.is_some()));
    assert!(!t.superset_restriction_with_penalty);
}

#[test]
fn energy_flow_with_volume_penalty() {
    let d = GridDomain::square(-1.0, 1.0, 20).unwrap();
    let m0 = rasterize(&Primitive::ball(&[0.0, 0.0], 0.4), &d).unwrap();
    let spec = FunctionalSpec::energy().with_penalties(0.05, 0.0);
    let cfg = ShapeFlowConfig::new(spec, 0.1, 0.2, Strategy::Greedy);
    let t = run_shape_flow(&cfg, m0).unwrap();
    assert!(t.superset_restriction_with_penalty);
    assert!(t.invariants().unwrap().all());
}

#[test]
fn zero_functional_is_constant() {
    let d = GridDomain::square(-1.0, 1.0, 16).unwrap();
    let m0 = rasterize(&Primitive::ball(&[0.0, 0.0], 0.5), &d).unwrap();
    let cfg = ShapeFlowConfig::new(FunctionalSpec::zero(), 0.1, 0.3, Strategy::Greedy);
    let t = run_shape_flow(&cfg, m0.clone()).unwrap();
    assert!(t.flow.states.iter().all(|s| *s == m0));
    assert!(t.flow.values.iter().all(|&v| v == 0.0));
}

#[test]
fn config_validation() {
    let bad = ShapeFlowConfig::new(FunctionalSpec::volume(), 0.1, 1.0, Strategy::Greedy);
    assert!(bad.validate().is_err());
    let bad = ShapeFlowConfig::new(FunctionalSpec::lambda(1), 0.0, 1.0, Strategy::Greedy);
    assert!(bad.validate().is_err());
    let json = r#"{"epsilon": 0.1, "horizon": 1.0, "functional": {"kind": {"type": "energy"}}, "bogus": 1}"#;
    assert!(serde_json::from_str::<ShapeFlowConfig>(json).is_err());
    let json = r#"{"epsilon": 0.1, "horizon": 1.0, "functional": {"kind": {"type": "energy"}}, "strategy": "radial"}"#;
    let c: ShapeFlowConfig = serde_json::from_str(json).unwrap();
    assert_eq!(c.strategy, Strategy::Radial);
    assert_eq!(c.greedy, GreedyParams::default());
}

#[test]
fn jump_detection() {
    let times: Vec<f64> = (0..6).map(|i| i as f64).collect();
    let smooth = [5.0, 4.9, 4.8, 4.7, 4.6, 4.5];
    assert!(detect_jumps(&smooth, &times).is_empty());
    let jumpy = [5.0, 4.9, 4.8, 1.2, 1.15, 1.1];
    let j = detect_jumps(&jumpy, &times);
    assert_eq!(j.len(), 1);
    assert_eq!(j[0].state, 3);
    let flat = [2.0; 6];
    assert!(detect_jumps(&flat, &times).is_empty());
}

#[test]
fn radial_shape_geometry() {
    let s = RadialShape::new(&[0.0, 0.0], vec![(1.2, 2.2), (0.0, 1.0)]).unwrap();
    assert_eq!(s.shells[0], (0.0, 1.0));
    assert!((s.volume() - PI * (1.0 + 2.2 * 2.2 - 1.44)).abs() < 1e-12);
    assert_eq!(s.components(), 2);
    let p = Primitive::union(vec![
        Primitive::ball(&[0.0, 0.0], 1.0),
        Primitive::annulus(&[0.0, 0.0], 1.2, 2.2),
    ]);
    assert_eq!(RadialShape::from_primitive(&p).unwrap(), s);
    assert!(RadialShape::new(&[0.0, 0.0], vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
}
