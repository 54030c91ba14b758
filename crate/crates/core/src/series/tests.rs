use super::*;
use alloc::vec;
use proptest::prelude::*;

fn s(dim: usize, m: usize, r: f64, terms: &[(&[u32], f64)]) -> TruncatedSeries {
    TruncatedSeries::from_terms(dim, m, r, terms.iter().copied()).unwrap()
}

#[test]
fn difference_of_squares() {
    let a = s(1, 2, 1.0, &[(&[0], 1.0), (&[1], 1.0)]);
    let b = s(1, 2, 1.0, &[(&[0], 1.0), (&[1], -1.0)]);
    let p = a.mul(&b).unwrap();
    assert_eq!(p.taylor_coeff(&[0]), 1.0);
    assert_eq!(p.taylor_coeff(&[1]), 0.0);
    assert_eq!(p.taylor_coeff(&[2]), -1.0);
}

#[test]
fn square_of_t_hits_norm_equality() {
    let t = TruncatedSeries::variable(1, 4, 2.0, 0);
    let t2 = t.mul(&t).unwrap();
    assert_eq!(t2.coeff(&[2]), 2.0);
    assert!((t2.a_norm() - 4.0).abs() < 1e-15);
    assert!((t2.a_norm() - t.a_norm().powi(2)).abs() < 1e-15);
}

#[test]
fn norms_of_simple_series() {
    assert_eq!(TruncatedSeries::variable(1, 3, 0.5, 0).a_norm(), 0.5);
    let e = TruncatedSeries::exp_1d(10, 1.0);
    let partial: f64 = (0..=10).map(|k| 1.0 / crate::factorial(k)).sum();
    assert!((e.a_norm() - partial).abs() < 1e-15);
    assert!((e.a_norm() - core::f64::consts::E).abs() < 1e-7);
    assert_eq!(TruncatedSeries::zero(3, 4, 1.0).a_norm(), 0.0);
}

#[test]
fn mismatched_operands_fail() {
    let a = TruncatedSeries::zero(2, 3, 1.0);
    let b = TruncatedSeries::zero(3, 3, 1.0);
    assert!(matches!(a.add(&b), Err(Error::Structure(_))));
    let c = TruncatedSeries::zero(2, 3, 0.5);
    assert!(matches!(a.mul(&c), Err(Error::Structure(_))));
    let d = TruncatedSeries::zero(2, 2, 1.0);
    assert_eq!(a.mul(&d).unwrap().max_degree(), 2);
}

#[test]
fn argument_scaling() {
    let t = TruncatedSeries::variable(1, 4, 1.0, 0);
    let half = t.scale_argument(0.5).unwrap();
    assert_eq!(half.taylor_coeff(&[1]), 0.5);
    assert_eq!(half.a_norm(), 0.5 * t.a_norm());
    let t2 = t.mul(&t).unwrap().scale_argument(0.5).unwrap();
    assert_eq!(t2.taylor_coeff(&[2]), 0.25);
    let one = TruncatedSeries::exp_1d(4, 1.0).scale_argument(0.0).unwrap();
    assert_eq!(one, TruncatedSeries::constant(1, 4, 1.0, 1.0));
    assert!(matches!(t.scale_argument(1.5), Err(Error::Domain(_))));
}

#[test]
fn ray_average_on_monomials() {
    let f = s(1, 5, 1.0, &[(&[0], 3.0), (&[1], 1.0), (&[3], 6.0)]);
    let g = f.ray_average();
    assert_eq!(g.taylor_coeff(&[0]), 3.0);
    assert_eq!(g.taylor_coeff(&[1]), 0.5);
    assert_eq!(g.taylor_coeff(&[3]), 0.25);
}

#[test]
fn derivatives() {
    let t2 = s(1, 4, 1.0, &[(&[2], 2.0)]);
    let d = t2.differentiate(0);
    assert_eq!(d.taylor_coeff(&[1]), 2.0);
    assert_eq!(d.max_degree(), 3);
    let e = TruncatedSeries::exp_1d(8, 1.0);
    assert!(e.differentiate(0).max_abs_diff(&TruncatedSeries::exp_1d(7, 1.0)) < 1e-15);
    // derivative bound with r = 1, s = 1/2 on t²: the sup over m is attained at m = 0, 1
    let factor = (0..=4).map(|m| 0.5f64.powi(m) * (m as f64 + 1.0)).fold(0.0, f64::max);
    assert_eq!(factor, 1.0);
    assert_eq!(d.a_norm_at(0.5), 1.0);
    assert!(d.a_norm_at(0.5) <= factor * t2.a_norm() + 1e-15);
}

#[test]
fn composition_examples() {
    let u2 = s(1, 6, 1.0, &[(&[2], 2.0)]);
    let phi = s(1, 6, 1.0, &[(&[1], 1.0), (&[2], 2.0)]);
    let c = u2.compose(&[phi]).unwrap();
    let expect = [0.0, 0.0, 1.0, 2.0, 1.0, 0.0, 0.0];
    for (k, e) in expect.iter().enumerate() {
        assert_eq!(c.taylor_coeff(&[k as u32]), *e);
    }
    // 1/u expanded at 1, composed with 1 + t
    let geo: Vec<(Vec<u32>, f64)> = (0..=6).map(|k| (vec![k], (-1.0f64).powi(k as i32))).collect();
    let inv = TruncatedSeries::from_taylor_terms(1, 6, 1.0, geo.iter().map(|(a, c)| (a.as_slice(), *c))).unwrap();
    let phi = s(1, 6, 1.0, &[(&[0], 1.0), (&[1], 1.0)]);
    let g = inv.compose_at(&[1.0], &[phi.clone()]).unwrap();
    assert!(g.max_abs_diff(&inv) < 1e-15);
    assert!(matches!(inv.compose(&[phi]), Err(Error::Domain(_))));
}

#[test]
fn identity_composition_and_recentering() {
    let f = s(2, 4, 1.0, &[(&[1, 0], 1.0), (&[1, 2], 2.0), (&[0, 3], 6.0)]);
    let id: Vec<_> = (0..2).map(|j| TruncatedSeries::variable(2, 4, 1.0, j)).collect();
    assert!(f.compose(&id).unwrap().max_abs_diff(&f) < 1e-15);
    let g = f.recenter(&[0.5, -0.25]).unwrap();
    for p in [[0.1, 0.2], [-0.3, 0.05]] {
        let a = g.evaluate(&p).unwrap();
        let b = f.evaluate(&[p[0] + 0.5, p[1] - 0.25]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn evaluation() {
    let e = TruncatedSeries::exp_1d(10, 1.0);
    assert!((e.evaluate(&[1.0]).unwrap() - core::f64::consts::E).abs() < 1e-7);
    let t2 = s(1, 3, 1.0, &[(&[2], 2.0)]);
    assert_eq!(t2.evaluate(&[3.0]).unwrap(), 9.0);
    assert_eq!(t2.evaluate_flagged(&[3.0]).unwrap(), (9.0, true));
    assert!(t2.evaluate(&[1.0, 2.0]).is_err());
}

#[test]
fn exp_and_reciprocal() {
    let t = TruncatedSeries::variable(1, 8, 1.0, 0);
    assert!(t.exp().unwrap().max_abs_diff(&TruncatedSeries::exp_1d(8, 1.0)) < 1e-15);
    let one_plus = t.add(&TruncatedSeries::constant(1, 8, 1.0, 1.0)).unwrap();
    let r = one_plus.reciprocal().unwrap();
    for k in 0..=8u32 {
        assert!((r.taylor_coeff(&[k]) - (-1.0f64).powi(k as i32)).abs() < 1e-14);
    }
}

fn arb_series(dim: usize, m: usize, r: f64) -> impl Strategy<Value = TruncatedSeries> {
    let len = len_upto(dim, m);
    proptest::collection::vec((-2.0f64..2.0, proptest::bool::weighted(0.4)), len).prop_map(move |v| {
        let dense = v.into_iter().map(|(c, keep)| if keep { c } else { 0.0 }).collect();
        TruncatedSeries::from_dense(dim, m, r, dense)
    })
}

proptest! {
    #[test]
    fn submultiplicative(f in arb_series(2, 6, 0.8), g in arb_series(2, 6, 0.8)) {
        let p = f.mul(&g).unwrap();
        let bound = f.a_norm() * g.a_norm();
        prop_assert!(p.a_norm() <= bound + 1e-12 * bound.max(1.0));
    }

    #[test]
    fn norm_is_absolutely_homogeneous(f in arb_series(3, 4, 1.3), c in -5.0f64..5.0) {
        let lhs = f.scale(c).a_norm();
        prop_assert!((lhs - c.abs() * f.a_norm()).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn scaled_argument_contracts(f in arb_series(2, 5, 1.0), s in 0.0f64..=1.0) {
        let mut f = f;
        f.dense_mut()[0] = 0.0;
        prop_assert!(f.scale_argument(s).unwrap().a_norm() <= s * f.a_norm() + 1e-14);
        prop_assert_eq!(f.scale_argument(1.0).unwrap(), f);
    }

    #[test]
    fn ray_average_is_linear(f in arb_series(2, 5, 1.0), g in arb_series(2, 5, 1.0), c in -3.0f64..3.0) {
        let lhs = f.add(&g.scale(c)).unwrap().ray_average();
        let rhs = f.ray_average().add(&g.ray_average().scale(c)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn composition_is_associative(
        f in arb_series(1, 5, 1.0),
        g in arb_series(1, 5, 1.0),
        h in arb_series(1, 5, 1.0),
    ) {
        let mut g = g;
        let mut h = h;
        g.dense_mut()[0] = 0.0;
        h.dense_mut()[0] = 0.0;
        let left = f.compose(&[g.clone()]).unwrap().compose(&[h.clone()]).unwrap();
        let right = f.compose(&[g.compose(&[h]).unwrap()]).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-10 * (1.0 + left.max_abs_coeff()));
    }

    #[test]
    fn neumann_identity(entries in proptest::collection::vec(arb_series(2, 4, 0.3), 4)) {
        let mut entries = entries;
        for e in &mut entries {
            e.dense_mut()[0] = 0.0;
            *e = e.scale(0.1);
        }
        let a = SeriesMatrix::new(2, 2, entries).unwrap();
        let inv = a.neumann_inverse_of_i_plus().unwrap();
        let id = SeriesMatrix::identity(2, 2, 4, 0.3);
        let prod = id.add(&a).unwrap().mul(&inv).unwrap();
        prop_assert!(prod.max_abs_diff(&id) < 1e-15);
    }

    #[test]
    fn sampled_comega_norm_below_weighted_norm(f in arb_series(2, 5, 1.0)) {
        let r = 1.0;
        let mut pts = Vec::new();
        for i in 0..=10 {
            for j in 0..=10 {
                let t = [-r / 2.0 + r * i as f64 / 10.0, -r / 2.0 + r * j as f64 / 10.0];
                if t[0] * t[0] + t[1] * t[1] <= r * r / 4.0 {
                    pts.push(t.to_vec());
                }
            }
        }
        prop_assert!(f.comega_norm_sampled(r / 2.0, &pts) <= f.a_norm_at(r) + 1e-12);
    }
}
