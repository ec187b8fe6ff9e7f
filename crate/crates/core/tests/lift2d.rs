use flowdepth::lift2d::{lift_flow, verify_factorization, LiftConfig, LiftTarget};

fn configs() -> [LiftConfig; 2] {
    [
        LiftConfig::new(LiftTarget::Square, (-1.0, 1.0), Some(0.5), Some(0.3)).unwrap(),
        LiftConfig::new(LiftTarget::Sin3, (-1.0, 1.0), Some(0.5), Some(0.2)).unwrap(),
    ]
}

fn test_grid(n: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = [
                -2.0 + 4.0 * (i as f64 + 0.5) / n as f64,
                -2.0 + 4.0 * (j as f64 + 0.5) / n as f64,
            ];
            if p[0].hypot(p[1]) <= 2.0 {
                pts.push(p);
            }
        }
    }
    pts
}

#[test]
fn factorization_is_exact_on_k() {
    for cfg in configs() {
        let r = verify_factorization(&cfg, 1000).unwrap();
        assert!(r.sup_error < 1e-7, "{}: {:e}", cfg.target, r.sup_error);
        assert!(r.segment_margin > 0.0);
    }
}

#[test]
fn isotopy_is_injective_and_stays_in_the_ball() {
    for cfg in configs() {
        let pts = test_grid(50);
        let imgs: Vec<[f64; 2]> = pts.iter().map(|&p| lift_flow(&cfg, 1.0, p)).collect();
        for q in &imgs {
            assert!(q[0].hypot(q[1]) <= 2.0 + 1e-9);
        }
        // the field is vertical, so only points sharing a column can collide
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let d_in = (pts[a][0] - pts[b][0]).hypot(pts[a][1] - pts[b][1]);
                let d_out = (imgs[a][0] - imgs[b][0]).hypot(imgs[a][1] - imgs[b][1]);
                if d_in >= 1e-3 {
                    assert!(d_out > 1e-9);
                }
            }
        }
    }
}

#[test]
fn backward_flow_recovers_points() {
    for cfg in configs() {
        for p in test_grid(20) {
            let q = lift_flow(&cfg, 1.0, p);
            let back = lift_flow(&cfg, -1.0, q);
            assert!((back[0] - p[0]).hypot(back[1] - p[1]) < 1e-7, "{p:?} -> {back:?}");
        }
    }
}
