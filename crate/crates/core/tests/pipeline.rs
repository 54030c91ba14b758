use adchart_core::adapt::{build_adapted_chart, density_series, euclidean_density_data, ChartConfig};
use adchart_core::catalog;
use adchart_core::scaling::{dilate, lambda};
use adchart_core::series::TruncatedSeries;

fn cfg() -> ChartConfig {
    ChartConfig { verify_points: 0, ..ChartConfig::default() }
}

#[test]
fn heisenberg_charts_agree_at_every_base_point() {
    // left-invariant fields: the chart data cannot depend on the base point
    let sys = catalog::heisenberg(&[0.0; 3], 6, 1.0).unwrap();
    let at_origin = build_adapted_chart(&sys, &[0.0; 3], &cfg()).unwrap();
    for x0 in [[0.4, -0.3, 0.2], [-0.25, 0.5, -0.6]] {
        let ch = build_adapted_chart(&sys, &x0, &cfg()).unwrap();
        assert_eq!(ch.j0, at_origin.j0);
        let a = ch.a.with_radius(at_origin.eta1);
        assert!(a.max_abs_diff(&at_origin.a) <= 1e-10);
    }
}

#[test]
fn coordinate_chart_is_a_translation() {
    let x0 = [0.3, -0.7];
    let sys = catalog::coordinate(&[0.0, 0.0], 5, 2.0).unwrap();
    let ch = build_adapted_chart(&sys, &x0, &cfg()).unwrap();
    assert_eq!(ch.a.max_abs_coeff(), 0.0);
    for (i, phi) in ch.phi.iter().enumerate() {
        let t = [0.05, -0.02];
        assert!((phi.evaluate(&t).unwrap() - (x0[i] + t[i])).abs() < 1e-14);
    }
    let dd = density_series(&ch, &euclidean_density_data(&ch).unwrap()).unwrap();
    assert!(dd.h.unwrap().max_abs_diff(&TruncatedSeries::constant(2, 5, ch.eta1, 1.0)) <= 1e-14);
}

#[test]
fn heisenberg_lambda_is_delta_to_the_fourth() {
    let sys = catalog::heisenberg(&[0.0; 3], 4, 1.0).unwrap();
    for d in [0.5, 0.1, 0.02] {
        let lam = lambda(&sys, &[0.0; 3], &[d]).unwrap();
        assert!((lam.value / d.powi(4) - 1.0).abs() <= 1e-13);
        assert_eq!(lam.argmax, [0, 1, 2]);
    }
    // dilation multiplies the degree-2 field by δ²
    let dil = dilate(&sys, &[0.5]).unwrap();
    assert_eq!(dil.field(2).evaluate(&[0.0; 3]), vec![0.0, 0.0, 0.25]);
    assert!(dilate(&sys, &[1.5]).is_err());
}
