use super::*;
use alloc::vec;
use alloc::vec::Vec;
use proptest::prelude::*;

type Poly = Vec<(f64, Vec<u32>)>;

fn field(name: &str, center: &[f64], m: usize, comps: &[Poly]) -> AnalyticVectorField {
    AnalyticVectorField::from_polynomial(name, center, m, 1.0, comps).unwrap()
}

fn grushin_triple(center: &[f64], m: usize) -> FieldSystem {
    let x1 = field("X1", center, m, &[vec![(1.0, vec![0, 0])], vec![]]);
    let x2 = field("X2", center, m, &[vec![], vec![(1.0, vec![1, 0])]]);
    let x3 = field("X3", center, m, &[vec![], vec![(1.0, vec![0, 0])]]);
    FieldSystem::unweighted(vec![x1, x2, x3]).unwrap()
}

fn heisenberg(m: usize) -> FieldSystem {
    let c = [0.0, 0.0, 0.0];
    let x1 = field("X1", &c, m, &[vec![(1.0, vec![0, 0, 0])], vec![], vec![(-0.5, vec![0, 1, 0])]]);
    let x2 = field("X2", &c, m, &[vec![], vec![(1.0, vec![0, 0, 0])], vec![(0.5, vec![1, 0, 0])]]);
    let x3 = field("X3", &c, m, &[vec![], vec![], vec![(1.0, vec![0, 0, 0])]]);
    FieldSystem::new(vec![
        WeightedField::new(x1, vec![1]).unwrap(),
        WeightedField::new(x2, vec![1]).unwrap(),
        WeightedField::new(x3, vec![2]).unwrap(),
    ])
    .unwrap()
}

#[test]
fn bracket_examples() {
    let c = [0.3, -0.2];
    let dx = field("dx", &c, 6, &[vec![(1.0, vec![0, 0])], vec![]]);
    let xdy = field("xdy", &c, 6, &[vec![], vec![(1.0, vec![1, 0])]]);
    let dy = field("dy", &c, 6, &[vec![], vec![(1.0, vec![0, 0])]]);
    let b = dx.lie_bracket(&xdy).unwrap();
    assert!(b.max_abs_diff(&dy) < 1e-15);

    let h = heisenberg(6);
    let b = h.field(0).lie_bracket(h.field(1)).unwrap();
    assert!(b.max_abs_diff(h.field(2)) < 1e-15);

    let other = field("o", &[0.0, 0.0], 6, &[vec![(1.0, vec![0, 0])], vec![]]);
    assert!(matches!(dx.lie_bracket(&other), Err(Error::Structure(_))));
}

#[test]
fn minors_examples() {
    let g = grushin_triple(&[1.0, 0.0], 4);
    assert_eq!(wedge_minors(&[g.field(0), g.field(1)], &[1.0, 0.0]), vec![1.0]);
    let rot = field("rot", &[0.0, 0.0], 4, &[vec![(-1.0, vec![0, 1])], vec![(1.0, vec![1, 0])]]);
    assert_eq!(wedge_minors(&[&rot], &[2.0, 3.0]), vec![-3.0, 2.0]);
    let id: Vec<AnalyticVectorField> = (0..3)
        .map(|i| {
            let mut comps = vec![vec![], vec![], vec![]];
            comps[i] = vec![(1.0, vec![0, 0, 0])];
            field("e", &[0.0; 3], 3, &comps)
        })
        .collect();
    let refs: Vec<&AnalyticVectorField> = id.iter().collect();
    assert_eq!(wedge_minors(&refs, &[0.1, 0.2, 0.3]), vec![1.0]);
}

#[test]
fn wedge_ratio_examples() {
    let g = grushin_triple(&[1.0, 0.0], 4);
    let r = wedge_ratio(&g, &[0, 2], &[0, 1], &[1.0, 0.0], 1e-10).unwrap();
    assert!((r.ratio - 1.0).abs() < 1e-15);
    let r = wedge_ratio(&g, &[0, 2], &[0, 1], &[0.5, 0.0], 1e-10).unwrap();
    assert!((r.ratio - 2.0).abs() < 1e-15);
    let r = wedge_ratio(&g, &[1, 0], &[0, 1], &[0.5, 0.0], 1e-10).unwrap();
    assert!((r.ratio + 1.0).abs() < 1e-15);
    assert!(matches!(wedge_ratio(&g, &[0, 2], &[0, 1], &[0.0, 0.0], 1e-10), Err(Error::Rank(_))));
}

#[test]
fn tangency_failure_is_reported() {
    // in R^3, X1 = ∂x, X2 = ∂y, X3 = ∂z; the planes (1,2) and (1,3) differ
    let c = [0.0; 3];
    let e = |i: usize| {
        let mut comps = vec![vec![], vec![], vec![]];
        comps[i] = vec![(1.0, vec![0, 0, 0])];
        field("e", &c, 3, &comps)
    };
    let sys = FieldSystem::unweighted(vec![e(0), e(1), e(2)]).unwrap();
    assert!(matches!(wedge_ratio(&sys, &[0, 2], &[0, 1], &c, 1e-8), Err(Error::Tangency { .. })));
}

#[test]
fn j0_selection_examples() {
    let g = grushin_triple(&[1.0, 0.0], 4);
    let s = select_j0(&g, &[1.0, 0.0], 1.0).unwrap();
    assert_eq!((s.j0.clone(), s.n), (vec![0, 1], 2));
    let s = select_j0(&g, &[0.1, 0.0], 1.0).unwrap();
    assert_eq!(s.j0, vec![0, 2]);
    let h = heisenberg(4);
    assert_eq!(select_j0(&h, &[0.0; 3], 1.0).unwrap().j0, vec![0, 1, 2]);
    let rot = field("rot", &[0.0, 0.0], 4, &[vec![(-1.0, vec![0, 1])], vec![(1.0, vec![1, 0])]]);
    let sys = FieldSystem::unweighted(vec![rot]).unwrap();
    assert_eq!(select_j0(&sys, &[0.0, 0.0], 1.0), Err(Error::DegeneratePoint));
    assert_eq!(select_j0(&sys, &[1.0, 0.0], 1.0).unwrap().n, 1);
}

#[test]
fn forced_j0_zeta_check() {
    let g = grushin_triple(&[0.1, 0.0], 4);
    // (1,2) has minor 0.1 while (1,3) has 1, so the ratio is 10
    assert!(check_zeta(&g, &[0, 1], &[0.1, 0.0], 1.0, 1e-10).is_err());
    assert!((check_zeta(&g, &[0, 1], &[0.1, 0.0], 0.05, 1e-10).unwrap() - 10.0).abs() < 1e-12);
}

fn weighted(f: AnalyticVectorField, d: u32) -> WeightedField {
    WeightedField::new(f, vec![d]).unwrap()
}

#[test]
fn closure_examples() {
    let c = [0.0, 0.0];
    let v1 = weighted(field("dx", &c, 8, &[vec![(1.0, vec![0, 0])], vec![]]), 1);
    let v2 = weighted(field("xdy", &c, 8, &[vec![], vec![(1.0, vec![1, 0])]]), 1);
    let sys = bracket_closure(&[v1.clone(), v2.clone()], 3, ClosureOptions::default()).unwrap();
    assert_eq!(sys.q(), 3);
    assert_eq!(sys.degree(2), &[2]);
    let dy = field("dy", &c, 5, &[vec![], vec![(1.0, vec![0, 0])]]);
    assert!(sys.field(2).max_abs_diff(&dy) < 1e-15);

    let h = heisenberg(8);
    let gens = [h.fields()[0].clone(), h.fields()[1].clone()];
    let sys = bracket_closure(&gens, 2, ClosureOptions::default()).unwrap();
    let degs: Vec<u32> = sys.fields().iter().map(|f| f.degree[0]).collect();
    assert_eq!(degs, vec![1, 1, 2]);

    let sys = bracket_closure(&[v1], 5, ClosureOptions::default()).unwrap();
    assert_eq!(sys.q(), 1);
    assert!(bracket_closure(&[v2], 0, ClosureOptions::default()).is_err());
}

#[test]
fn multi_parameter_closure_adds_componentwise() {
    let c = [0.0, 0.0];
    let v1 = WeightedField::new(field("dx", &c, 8, &[vec![(1.0, vec![0, 0])], vec![]]), vec![1, 0]).unwrap();
    let v2 = WeightedField::new(field("xdy", &c, 8, &[vec![], vec![(1.0, vec![1, 0])]]), vec![0, 1]).unwrap();
    let sys = bracket_closure(&[v1, v2], 1, ClosureOptions::default()).unwrap();
    assert_eq!(sys.q(), 3);
    assert_eq!(sys.degree(2), &[1, 1]);
}

#[test]
fn closure_rank_stability() {
    let c = [0.0, 0.0];
    let v1 = weighted(field("dx", &c, 8, &[vec![(1.0, vec![0, 0])], vec![]]), 1);
    let v2 = weighted(field("xdy", &c, 8, &[vec![], vec![(1.0, vec![1, 0])]]), 1);
    let (_, rank) = closure_rank_check(&[v1.clone(), v2.clone()], 2, &c, ClosureOptions::default()).unwrap();
    assert_eq!(rank, 2);
    assert!(matches!(
        closure_rank_check(&[v1, v2], 1, &c, ClosureOptions::default()),
        Err(Error::DepthTooSmall { rank_m: 1, rank_next: 2 })
    ));
}

#[test]
fn heisenberg_structure_is_exact() {
    let h = heisenberg(6);
    let s = fit_structure_coeffs(&h, &FitOptions::around(&[0.0; 3], 0.5, 2)).unwrap();
    assert!(s.max_residual < 1e-12, "{}", s.max_residual);
    assert!((s.get(0, 1, 2).constant_term() - 1.0).abs() < 1e-10);
    assert!((s.get(1, 0, 2).constant_term() + 1.0).abs() < 1e-10);
    assert!(s.get(0, 1, 0).max_abs_coeff() < 1e-10);
}

#[test]
fn grushin_pair_structure_fits_reciprocal() {
    let c = [1.0, 0.0];
    let x1 = field("X1", &c, 8, &[vec![(1.0, vec![0, 0])], vec![]]);
    let x2 = field("X2", &c, 8, &[vec![], vec![(1.0, vec![1, 0])]]);
    let sys = FieldSystem::unweighted(vec![x1, x2]).unwrap();
    let opts = FitOptions {
        box_lo: vec![0.8, -0.2],
        box_hi: vec![1.2, 0.2],
        poly_degree: 6,
        degree_filter: false,
        tol: 1e-6,
        ridge: 1e-12,
    };
    let s = fit_structure_coeffs(&sys, &opts).unwrap();
    assert!(s.max_residual <= 1e-6, "{}", s.max_residual);
    assert!(s.verify_residual <= 10.0 * s.max_residual);
    // c_{1,2}^2 ≈ 1/x
    for x in [0.85, 1.0, 1.15] {
        let v = s.get(0, 1, 1).evaluate(&[x - 1.0, 0.0]).unwrap();
        assert!((v - 1.0 / x).abs() < 1e-5);
    }
    let tight = FitOptions { poly_degree: 1, tol: 1e-8, ..opts };
    assert!(matches!(fit_structure_coeffs(&sys, &tight), Err(Error::FiniteGeneration { .. })));
}

#[test]
fn commuting_fields_have_zero_structure() {
    let c = [0.2, 0.1];
    let x1 = field("X1", &c, 4, &[vec![(1.0, vec![0, 0])], vec![]]);
    let x2 = field("X2", &c, 4, &[vec![], vec![(1.0, vec![0, 0])]]);
    let sys = FieldSystem::unweighted(vec![x1, x2]).unwrap();
    let s = fit_structure_coeffs(&sys, &FitOptions::around(&c, 0.3, 3)).unwrap();
    assert_eq!(s.max_residual, 0.0);
    assert!(s.max_abs_coeff() < 1e-14);
}

#[test]
fn cramer_examples() {
    let center = [1.0, 0.0];
    let g = grushin_triple(&center, 8);
    let s = fit_structure_coeffs(&g, &FitOptions::around(&center, 0.2, 3)).unwrap();
    let g = g.with_structure(s).unwrap();
    let sel = select_j0(&g, &center, 1.0).unwrap();
    let data = cramer_reduce(&g, &sel.j0, &sel.pivot_rows, None).unwrap();
    // b̃_3 = (0, 1/x) around x = 1
    assert!(data.btilde(2, 0).max_abs_coeff() < 1e-15);
    for k in 0..=8u32 {
        let expect = (-1.0f64).powi(k as i32);
        assert!((data.btilde(2, 1).taylor_coeff(&[k, 0]) - expect).abs() < 1e-12);
    }
    assert_eq!(data.btilde(0, 0).constant_term(), 1.0);
    assert!(data.btilde(0, 1).is_zero());
    // ĉ_{1,2}^2 = 1/x regardless of how the fit split the relation
    for k in 0..=8u32 {
        let expect = (-1.0f64).powi(k as i32);
        assert!((data.chat(0, 1, 1).taylor_coeff(&[k, 0]) - expect).abs() < 1e-8, "k={k}");
    }
    let pts = vec![vec![0.9, 0.1], vec![1.1, -0.05], vec![1.0, 0.0]];
    assert!(verify_cramer(&g, &data, &pts) < 1e-6);

    let h = heisenberg(6);
    let s = StructureCoefficients::from_constants(3, 3, 6, 1.0, &[(0, 1, 2, 1.0)]);
    let h = h.with_structure(s).unwrap();
    let data = cramer_reduce(&h, &[0, 1, 2], &[0, 1, 2], None).unwrap();
    assert_eq!(data.chat(0, 1, 2).constant_term(), 1.0);
    assert_eq!(data.chat(1, 0, 2).constant_term(), -1.0);
}

#[test]
fn lie_derivative_of_wedge_heisenberg() {
    let s = StructureCoefficients::from_constants(3, 3, 4, 1.0, &[(0, 1, 2, 1.0)]);
    // Lie_{X1}(X2 ∧ X1) with q = 3, n = 2: [X1, X2] = X3 in slot 0 gives X3 ∧ X1 = −X1 ∧ X3
    let g = lie_derivative_of_wedge(&s, 0, &[1, 0]);
    assert_eq!(g.len(), 1);
    assert_eq!(g[0].0, vec![0, 2]);
    assert_eq!(g[0].1.constant_term(), -1.0);
}

fn arb_poly_field(center: [f64; 2]) -> impl Strategy<Value = AnalyticVectorField> {
    proptest::collection::vec(-1.0f64..1.0, 12).prop_map(move |c| {
        let exps = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
        let comp = |o: usize| -> Poly { exps.iter().enumerate().map(|(i, e)| (c[o + i], e.to_vec())).collect() };
        field("r", &center, 6, &[comp(0), comp(6)])
    })
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric_and_bilinear(
        x in arb_poly_field([0.1, 0.2]),
        y in arb_poly_field([0.1, 0.2]),
        z in arb_poly_field([0.1, 0.2]),
        a in -2.0f64..2.0,
    ) {
        prop_assert!(x.lie_bracket(&x).unwrap().max_abs_coeff() == 0.0);
        let xy = x.lie_bracket(&y).unwrap();
        let yx = y.lie_bracket(&x).unwrap();
        prop_assert!(xy.axpy(1.0, &yx).unwrap().max_abs_coeff() < 1e-13);
        let lhs = x.axpy(a, &z).unwrap().lie_bracket(&y).unwrap();
        let rhs = xy.axpy(a, &z.lie_bracket(&y).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn jacobi_identity(
        x in arb_poly_field([0.0, 0.0]),
        y in arb_poly_field([0.0, 0.0]),
        z in arb_poly_field([0.0, 0.0]),
    ) {
        let t1 = x.lie_bracket(&y.lie_bracket(&z).unwrap()).unwrap();
        let t2 = y.lie_bracket(&z.lie_bracket(&x).unwrap()).unwrap();
        let t3 = z.lie_bracket(&x.lie_bracket(&y).unwrap()).unwrap();
        let sum = t1.axpy(1.0, &t2).unwrap().axpy(1.0, &t3).unwrap();
        prop_assert!(sum.max_abs_coeff() < 1e-12);
    }

    #[test]
    fn wedge_ratios_are_reciprocal(x in 0.2f64..2.0, y in -1.0f64..1.0) {
        let g = grushin_triple(&[1.0, 0.0], 4);
        let p = [x, y];
        let a = wedge_ratio(&g, &[0, 2], &[0, 1], &p, 1e-10).unwrap().ratio;
        let b = wedge_ratio(&g, &[0, 1], &[0, 2], &p, 1e-10).unwrap().ratio;
        prop_assert!((a * b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn selected_j0_dominates(x in -2.0f64..2.0, y in -1.0f64..1.0, s in 0.1f64..10.0) {
        let g = grushin_triple(&[0.0, 0.0], 4);
        let p = [x, y];
        let sel = select_j0(&g, &p, 1.0).unwrap();
        for t in crate::k_subsets(3, 2) {
            let r = wedge_ratio(&g, &t, &sel.j0, &p, 1e-8).unwrap().ratio;
            prop_assert!(r.abs() <= 1.0 + 1e-10);
        }
        let scaled = g.scaled(&[s, s, s]).unwrap();
        prop_assert_eq!(select_j0(&scaled, &p, 1.0).unwrap().j0, sel.j0);
    }
}
