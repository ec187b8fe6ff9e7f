use std::f64::consts::PI;

use flowdepth::contour::{run_contour, spearman, ContourMetric, ContourRow, DEFAULT_L2_GRID};

fn value_at(rows: &[ContourRow], a: f64, b: f64, c: f64) -> f64 {
    rows.iter()
        .find(|r| (r.a - a).abs() < 1e-12 && (r.b - b).abs() < 1e-12 && (r.c - c).abs() < 1e-12)
        .unwrap()
        .value
}

/// `‖x + (c₁ sin 2πx + c₂ sin 4πx)/(7π) − x‖_{L²}` by orthogonality of the sines.
fn l2_oracle(r: &ContourRow) -> f64 {
    let (c1, c2) = (r.a - r.c, r.b - r.c);
    ((c1 * c1 + c2 * c2) / 2.0).sqrt() / (7.0 * PI)
}

#[test]
fn figure_fields() {
    let flow = run_contour(60, ContourMetric::Flow, DEFAULT_L2_GRID).unwrap();
    let l2 = run_contour(60, ContourMetric::L2, DEFAULT_L2_GRID).unwrap();
    assert_eq!(flow.len(), 1891);
    let third = 20.0 / 60.0;
    assert_eq!(value_at(&flow, third, third, third), 0.0);
    assert_eq!(value_at(&l2, third, third, third), 0.0);
    let fig1 = 2.0 * (9.0f64 / 5.0).ln();
    assert!((value_at(&flow, 1.0, 0.0, 0.0) - fig1).abs() < 1e-4);
    for r in &l2 {
        assert!((r.value - l2_oracle(r)).abs() < 1e-8);
    }
    let fv: Vec<f64> = flow.iter().map(|r| r.value).collect();
    let lv: Vec<f64> = l2.iter().map(|r| r.value).collect();
    let rho = spearman(&fv, &lv);
    println!("rank correlation of flow and L² fields: {rho:.4}");
    assert!(rho < 0.99);
}
