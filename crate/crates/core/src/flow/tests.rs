use super::*;
use crate::catalog;
use crate::fields::{AnalyticVectorField, FieldSystem, WeightedField};
use crate::series::TruncatedSeries;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight() -> FlowOptions {
    FlowOptions { jacobian: true, param_jacobian: true, ..FlowOptions::default() }
}

#[test]
fn coordinate_flow() {
    let s = catalog::coordinate(&[0.0, 0.0], 4, 2.0).unwrap();
    let r = exp_map(&s, &[1.0, 0.0], &[0.0, 0.0], &FlowOptions::default()).unwrap();
    assert!(r.success);
    assert!((r.endpoint[0] - 1.0).abs() < 1e-14 && r.endpoint[1].abs() < 1e-14);
}

#[test]
fn rotation_flow_is_a_circle() {
    let s = catalog::rotation(&[0.0, 0.0], 4, 2.0).unwrap();
    let r = exp_map(&s, &[1.0], &[1.0, 0.0], &tight()).unwrap();
    assert!((r.endpoint[0] - 1.0f64.cos()).abs() < 1e-9);
    assert!((r.endpoint[1] - 1.0f64.sin()).abs() < 1e-9);
    // the Jacobian of a rotation is the rotation itself
    let j = r.jacobian.unwrap();
    assert!((j.get(0, 0) - 1.0f64.cos()).abs() < 1e-9 && (j.get(1, 0) - 1.0f64.sin()).abs() < 1e-9);
}

#[test]
fn heisenberg_flow_from_origin() {
    let s = catalog::heisenberg(&[0.0; 3], 4, 2.0).unwrap();
    let a = [0.3, -0.7, 0.2];
    let r = exp_map(&s, &a, &[0.0; 3], &FlowOptions::default()).unwrap();
    for i in 0..3 {
        assert!((r.endpoint[i] - a[i]).abs() < 1e-10);
    }
}

#[test]
fn leaving_the_box_is_reported() {
    let s = catalog::coordinate(&[0.0], 2, 1.0).unwrap();
    let opts = FlowOptions { bounds: Some(Bounds::around(&[0.0], 0.5)), ..FlowOptions::default() };
    let r = exp_map(&s, &[2.0], &[0.0], &opts).unwrap();
    assert!(!r.success);
    assert_eq!(r.escape_reason, Some(EscapeReason::LeftBox));
    // a blow-up x' = x² from 1 has no solution on [0, 1]
    let f = AnalyticVectorField::from_polynomial("sq", &[0.0], 2, 1.0, &[vec![(1.0, vec![2])]]).unwrap();
    let s = FieldSystem::unweighted(vec![f]).unwrap();
    let r = exp_map(&s, &[2.0], &[1.0], &FlowOptions::default()).unwrap();
    assert!(!r.success);
}

#[test]
fn phi_taylor_examples() {
    let s = catalog::coordinate(&[0.5, -1.0], 3, 2.0).unwrap();
    let phi = phi_taylor(&s, &[0, 1], &[0.5, -1.0], 4, 1.0).unwrap();
    assert_eq!(phi[0].taylor_coeff(&[0, 0]), 0.5);
    assert_eq!(phi[0].taylor_coeff(&[1, 0]), 1.0);
    assert_eq!(phi[1].taylor_coeff(&[0, 1]), 1.0);
    assert!(phi[0]
        .sub(&TruncatedSeries::constant(2, 4, 1.0, 0.5))
        .unwrap()
        .sub(&TruncatedSeries::variable(2, 4, 1.0, 0))
        .unwrap()
        .is_zero());

    let g = catalog::grushin_triple(&[1.0, 0.0], 6, 2.0).unwrap();
    let phi = phi_taylor(&g, &[0, 1], &[1.0, 0.0], 6, 1.0).unwrap();
    let want0 = TruncatedSeries::from_taylor_terms(2, 6, 1.0, [(&[0u32, 0][..], 1.0), (&[1, 0][..], 1.0)]).unwrap();
    let want1 = TruncatedSeries::from_taylor_terms(2, 6, 1.0, [(&[0u32, 1][..], 1.0), (&[1, 1][..], 0.5)]).unwrap();
    assert!(phi[0].max_abs_diff(&want0) < 1e-15);
    assert!(phi[1].max_abs_diff(&want1) < 1e-15);

    let r = catalog::rotation(&[0.0, 0.0], 8, 2.0).unwrap();
    let phi = phi_taylor(&r, &[0], &[1.0, 0.0], 8, 1.0).unwrap();
    let mut f = 1.0;
    for k in 0..=8u32 {
        if k > 0 {
            f *= k as f64;
        }
        let (c, s) = match k % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        assert!((phi[0].taylor_coeff(&[k]) - c / f).abs() < 1e-15);
        assert!((phi[1].taylor_coeff(&[k]) - s / f).abs() < 1e-15);
    }
}

#[test]
fn phi_taylor_matches_flow_to_order() {
    let s = catalog::rotation(&[0.0, 0.0], 8, 2.0).unwrap();
    let m = 4;
    let phi = phi_taylor(&s, &[0], &[1.0, 0.0], m, 1.0).unwrap();
    let flow = Flow::new(&s);
    let mut logs = Vec::new();
    for &t in &[0.2, 0.1, 0.05] {
        let r = flow.exp(&[t], &[1.0, 0.0], &FlowOptions::default()).unwrap();
        let err = (0..2).map(|i| (phi[i].evaluate(&[t]).unwrap() - r.endpoint[i]).abs()).fold(0.0, f64::max);
        logs.push((t.ln(), err.ln()));
    }
    let slope = (logs[0].1 - logs[2].1) / (logs[0].0 - logs[2].0);
    assert!(slope >= m as f64 + 0.5, "slope {slope}");
}

fn grid(n: usize, half: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for k in 0..per_axis {
                let v = -half + 2.0 * half * k as f64 / (per_axis - 1) as f64;
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

#[test]
fn pullback_examples() {
    let s = catalog::coordinate(&[0.0, 0.0], 3, 2.0).unwrap();
    let chart = NumericChart::new(&s, &[0, 1], &[0.0, 0.0], FlowOptions::default()).unwrap();
    let pts = grid(2, 0.3, 3);
    let y = pullback_numeric(&chart, s.field(1), &pts).unwrap();
    for v in y {
        assert!(v[0].abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
    }

    let g = catalog::grushin_triple(&[1.0, 0.0], 4, 2.0).unwrap();
    let chart = NumericChart::new(&g, &[0, 1], &[1.0, 0.0], FlowOptions::default()).unwrap();
    let y = pullback_numeric(&chart, g.field(1), &pts).unwrap();
    for (t, v) in pts.iter().zip(&y) {
        assert!(v[0].abs() < 1e-8);
        assert!((v[1] - (1.0 + t[0]) / (1.0 + t[0] / 2.0)).abs() < 1e-8);
    }

    let h = catalog::heisenberg(&[0.0; 3], 4, 2.0).unwrap();
    let chart = NumericChart::new(&h, &[0, 1, 2], &[0.0; 3], FlowOptions::default()).unwrap();
    let pts = grid(3, 0.2, 3);
    for j in 0..3 {
        let y = pullback_numeric(&chart, h.field(j), &pts).unwrap();
        for (t, v) in pts.iter().zip(&y) {
            let x = h.field(j).evaluate(t);
            for i in 0..3 {
                assert!((v[i] - x[i]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn chart_inversion_round_trip() {
    let g = catalog::grushin_triple(&[1.0, 0.0], 4, 2.0).unwrap();
    let chart = NumericChart::new(&g, &[0, 1], &[1.0, 0.0], FlowOptions::default()).unwrap();
    let t = [0.2, -0.15];
    let (p, _) = chart.eval(&t).unwrap();
    let back = chart.invert(&p, &[0.0, 0.0]).unwrap();
    assert!((back[0] - t[0]).abs() < 1e-9 && (back[1] - t[1]).abs() < 1e-9);
}

#[test]
fn analytic_norm_examples() {
    let r = 0.7;
    let s = catalog::coordinate(&[0.0, 0.0], 4, 2.0).unwrap();
    let x = TruncatedSeries::variable(2, 4, 2.0, 0);
    let samples = grid(2, 1.0 / 2f64.sqrt(), 5);
    let n = analytic_norms(&x, &s, &[0.0, 0.0], r, 4, &samples).unwrap();
    assert!((n.ax_norm - r).abs() < 1e-15);
    assert!((n.nelson_partial - (1.0 / 2f64.sqrt() + r)).abs() < 1e-12);

    let s = catalog::coordinate(&[0.0], 4, 2.0).unwrap();
    let x2 = TruncatedSeries::from_taylor_terms(1, 4, 2.0, [(&[2u32][..], 1.0)]).unwrap();
    let n = analytic_norms(&x2, &s, &[0.0], r, 4, &[vec![0.0]]).unwrap();
    assert!((n.ax_norm - r * r).abs() < 1e-15);
}

fn random_system(rng: &mut ChaCha8Rng) -> FieldSystem {
    let dim = rng.gen_range(1..=3);
    let q = rng.gen_range(1..=3);
    let mons: Vec<Vec<u32>> = crate::series::monomials(dim, 2).chunks(dim).map(|c| c.to_vec()).collect();
    let fields = (0..q)
        .map(|j| {
            let comps: Vec<Vec<(f64, Vec<u32>)>> =
                (0..dim).map(|_| mons.iter().map(|e| (rng.gen_range(-0.5..0.5), e.clone())).collect()).collect();
            let f =
                AnalyticVectorField::from_polynomial(alloc::format!("V{j}"), &vec![0.0; dim], 2, 2.0, &comps).unwrap();
            WeightedField::new(f, vec![1]).unwrap()
        })
        .collect();
    FieldSystem::new(fields).unwrap()
}

#[test]
fn group_law_and_jacobian_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = tight();
    let tol = 1e-10f64;
    let mut checked = 0;
    while checked < 20 {
        let s = random_system(&mut rng);
        let (n, q) = (s.ambient_dim(), s.q());
        let a: Vec<f64> = (0..q).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let flow = Flow::new(&s);
        let (sf, tf) = (0.4, 0.6);
        let sa: Vec<f64> = a.iter().map(|v| v * sf).collect();
        let ta: Vec<f64> = a.iter().map(|v| v * tf).collect();
        let once = flow.exp(&a, &x0, &opts).unwrap();
        if !once.success {
            continue;
        }
        let first = flow.exp(&sa, &x0, &opts).unwrap();
        let second = flow.exp(&ta, &first.endpoint, &opts).unwrap();
        let scale = once.endpoint.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            assert!((second.endpoint[i] - once.endpoint[i]).abs() <= 10.0 * tol * scale);
        }
        let jac = once.jacobian.as_ref().unwrap();
        let h = 1e-6;
        for k in 0..n {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[k] += h;
            xm[k] -= h;
            let p = flow.exp(&a, &xp, &opts).unwrap().endpoint;
            let m = flow.exp(&a, &xm, &opts).unwrap().endpoint;
            for i in 0..n {
                let fd = (p[i] - m[i]) / (2.0 * h);
                assert!((fd - jac.get(i, k)).abs() <= 1e-5f64.max(10.0 * tol));
            }
        }
        checked += 1;
    }
}

#[test]
fn control_paths_are_admissible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let p = ControlPath::sample(&mut rng, 3, 8);
        assert_eq!(p.pieces.len(), 8);
        assert!(p.is_admissible());
    }
}

#[test]
fn segment_and_disc_volumes() {
    let s = catalog::coordinate(&[0.0], 2, 4.0).unwrap();
    let opts = BallOptions { n_paths: 4000, cell_size: 0.02, ..BallOptions::default() };
    let b = reachable_set(&s, &[0.0], &[0.3], &opts).unwrap();
    assert!((b.volume_lower / 0.6 - 1.0).abs() < 0.05, "{}", b.volume_lower);
    assert!(b.volume_lower <= b.volume_upper);

    let s = catalog::coordinate(&[0.0, 0.0], 2, 4.0).unwrap();
    let opts = BallOptions { n_paths: 20_000, cell_size: 1.0 / 16.0, ..BallOptions::default() };
    let d = 0.25;
    let b = reachable_set(&s, &[0.0, 0.0], &[d], &opts).unwrap();
    let area = core::f64::consts::PI * d * d;
    assert!((b.volume_lower / area - 1.0).abs() < 0.10, "{} vs {area}", b.volume_lower);
}

#[test]
fn grushin_ball_scaling_and_monotonicity() {
    let s = catalog::grushin_triple(&[0.0, 0.0], 2, 4.0).unwrap();
    let opts = BallOptions { n_paths: 6000, cell_size: 1.0 / 16.0, ..BallOptions::default() };
    let deltas = [0.4, 0.2, 0.1];
    let balls: Vec<BallEstimate> =
        deltas.iter().map(|d| reachable_set(&s, &[0.0, 0.0], &[*d], &opts).unwrap()).collect();
    let slope = (balls[0].volume_lower.ln() - balls[2].volume_lower.ln()) / (0.4f64.ln() - 0.1f64.ln());
    assert!((slope - 3.0).abs() <= 0.2, "slope {slope}");
    for w in balls.windows(2) {
        assert!(w[1].volume_lower <= w[0].volume_upper);
    }
    // self-consistency: every endpoint is inside the dilated occupancy
    let sampler = BallSampler::new(&s, &[0.0, 0.0], &[0.2], &opts).unwrap();
    let est = sampler.finish(sampler.sample(0..2000)).unwrap();
    assert!(est.endpoints.iter().all(|p| sampler.contains(&est, p)));
}

#[test]
fn split_sampling_is_deterministic() {
    let s = catalog::grushin_pair(&[1.0, 0.0], 2, 4.0).unwrap();
    let opts = BallOptions { n_paths: 300, ..BallOptions::default() };
    let sampler = BallSampler::new(&s, &[1.0, 0.0], &[0.2], &opts).unwrap();
    let whole = sampler.finish(sampler.sample(0..300)).unwrap();
    let split = sampler.finish(sampler.sample(0..120).merge(sampler.sample(120..300))).unwrap();
    assert_eq!(whole, split);
}

#[test]
fn leaf_ball_in_chart_coordinates() {
    let s = catalog::rotation(&[0.0, 0.0], 2, 4.0).unwrap();
    let opts = BallOptions { n_paths: 2000, cell_size: 0.02, ..BallOptions::default() };
    let b = reachable_set(&s, &[1.5, 0.0], &[0.2], &opts).unwrap();
    assert_eq!(b.binning, Binning::Chart);
    // arc of angle ±δ at radius 1.5
    assert!((b.volume_lower / (2.0 * 0.2 * 1.5) - 1.0).abs() < 0.05, "{}", b.volume_lower);
    let origin = reachable_set(&s, &[0.0, 0.0], &[0.2], &opts).unwrap();
    assert_eq!(origin.dim, 0);
    assert_eq!(origin.volume_lower, 1.0);
}
