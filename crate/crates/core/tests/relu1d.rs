use flowdepth::core1d::{compose, log_slope, tv_step_difference, uniform_nodes};
use flowdepth::relu1d::{
    complexity, distance, geodesic_length, geodesic_point, legacy_upper_bound, sampled_distance, SampledPair,
};
use flowdepth::{MapSpec, MonotonePwl, SmoothMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pwl(rng: &mut impl Rng, max_segments: usize) -> MonotonePwl {
    let k = rng.random_range(1..=max_segments);
    let mut xs: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.01..0.99)).collect();
    let mut ys: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.01..0.99)).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    ys.truncate(xs.len());
    while ys.len() < xs.len() {
        ys.push(0.995);
    }
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    xs.truncate(ys.len());
    let mut fx = vec![0.0];
    fx.extend(xs);
    fx.push(1.0);
    let mut fy = vec![0.0];
    fy.extend(ys);
    fy.push(1.0);
    MonotonePwl::new(fx, fy).unwrap()
}

fn pwl_strategy() -> impl Strategy<Value = MonotonePwl> {
    any::<u64>().prop_map(|seed| random_pwl(&mut ChaCha8Rng::seed_from_u64(seed), 8))
}

fn pw(p: &MonotonePwl) -> MapSpec {
    MapSpec::Pwl(p.clone())
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let (a, b, c) = (
            random_pwl(&mut rng, 8),
            random_pwl(&mut rng, 8),
            random_pwl(&mut rng, 8),
        );
        let (a, b, c) = (pw(&a), pw(&b), pw(&c));
        let ab = distance(&a, &b).unwrap();
        assert_eq!(ab, distance(&b, &a).unwrap());
        let ac = distance(&a, &c).unwrap();
        let bc = distance(&b, &c).unwrap();
        assert!(ab + bc - ac >= -1e-12);
        assert_eq!(distance(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn identity_of_indiscernibles_for_step_functions() {
    // a refined copy of the same map has the same log-slopes, hence distance 0
    let p = SmoothMap::Fig2.to_pwl(10).unwrap();
    let refined = MonotonePwl::from_fn_at(uniform_nodes(40), |x| p.eval(x)).unwrap();
    assert!(distance(&pw(&p), &pw(&refined)).unwrap() < 1e-12);
    let q = SmoothMap::Fig2.to_pwl(11).unwrap();
    assert!(distance(&pw(&p), &pw(&q)).unwrap() > 1e-3);
}

#[test]
fn legacy_bound_dominates_on_registry() {
    for m in SmoothMap::registry() {
        let s = MapSpec::Smooth(m);
        assert!(
            complexity(&s).unwrap() <= legacy_upper_bound(&s).unwrap() + 1e-12,
            "{m}"
        );
    }
}

#[test]
fn geodesic_length_matches_closed_form() {
    let id = MapSpec::identity();
    let e = MapSpec::Smooth(SmoothMap::ExpMap);
    let len = geodesic_length(&id, &e, 64, 4096).unwrap();
    assert!((len - 1.0).abs() < 1e-2, "{len}");
    let f = MapSpec::Smooth(SmoothMap::Fig1);
    let len = geodesic_length(&id, &f, 64, 1 << 14).unwrap();
    assert!((len - 2.0 * (9.0f64 / 5.0).ln()).abs() < 2e-2, "{len}");
}

#[test]
fn geodesic_length_is_deterministic() {
    let a = MapSpec::Smooth(SmoothMap::Fig3);
    let b = MapSpec::Smooth(SmoothMap::EpsQuad(0.5));
    let first = geodesic_length(&a, &b, 16, 512).unwrap();
    for _ in 0..3 {
        assert_eq!(first.to_bits(), geodesic_length(&a, &b, 16, 512).unwrap().to_bits());
    }
}

#[test]
fn geodesic_metric_speed() {
    // compare γ_t against γ_0 on the same nodes; smooth-vs-pwl distances would
    // mostly measure the discretization sawtooth
    let pairs = [
        (SmoothMap::Identity, SmoothMap::ExpMap),
        (SmoothMap::Identity, SmoothMap::Fig1),
        (SmoothMap::Fig2, SmoothMap::Fig3),
        (SmoothMap::EpsQuad(1.0), SmoothMap::Osc(2)),
    ];
    for (a, b) in pairs {
        let (a, b) = (MapSpec::Smooth(a), MapSpec::Smooth(b));
        let total = distance(&a, &b).unwrap();
        let g0 = pw(&geodesic_point(&a, &b, 0.0, 4096).unwrap());
        for t in [0.25, 0.5, 0.75] {
            let gt = pw(&geodesic_point(&a, &b, t, 4096).unwrap());
            let d = distance(&g0, &gt).unwrap();
            assert!(
                (d - t * total).abs() < 1e-3,
                "{} {} t={t}: {d} vs {}",
                a.label(),
                b.label(),
                t * total
            );
        }
    }
}

#[test]
fn sampled_distance_converges_from_below() {
    let id = MapSpec::identity();
    let e = MapSpec::Smooth(SmoothMap::ExpMap);
    let full = distance(&id, &e).unwrap();
    let mut prev = 0.0;
    for j in 1..=10 {
        let m = (1usize << j) + 1;
        let d = sampled_distance(&SampledPair::uniform(&id, &e, m).unwrap());
        assert!(d >= prev - 1e-12);
        assert!(d <= full + 1e-12);
        prev = d;
    }
}

/// Random search over refined pwl interpolants of the samples. Every candidate
/// pair is a valid interpolating pair, so its exact distance bounds the finite
/// sample distance from above.
#[test]
fn closed_form_is_never_beaten_by_refined_interpolants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for instance in 0..10 {
        let m = rng.random_range(3..=8);
        let p1 = random_pwl(&mut rng, 6);
        let p2 = random_pwl(&mut rng, 6);
        let nodes = uniform_nodes(m - 1);
        let pair = SampledPair::from_maps(&pw(&p1), &pw(&p2), nodes.clone()).unwrap();
        let closed = sampled_distance(&pair);

        // base candidate: pwl interpolants through the samples themselves
        let base1 = MonotonePwl::new(nodes.clone(), pair.x().to_vec()).unwrap();
        let base2 = MonotonePwl::new(nodes.clone(), pair.y().to_vec()).unwrap();
        let attained = distance(&pw(&base1), &pw(&base2)).unwrap();
        assert!((attained - closed).abs() < 1e-12, "instance {instance}");

        let mut best = attained;
        for _ in 0..400 {
            let (q1, q2) = refine_pair(&mut rng, &nodes, pair.x(), pair.y());
            let d = distance(&pw(&q1), &pw(&q2)).unwrap();
            assert!(d >= closed - 1e-12, "instance {instance}: {d} < {closed}");
            best = best.min(d);
        }
        assert!(best >= closed - 1e-12);
    }
}

fn refine_pair(rng: &mut impl Rng, nodes: &[f64], x: &[f64], y: &[f64]) -> (MonotonePwl, MonotonePwl) {
    let mut zs = vec![0.0];
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for i in 0..nodes.len() - 1 {
        let extra = rng.random_range(0..3);
        let mut fr: Vec<f64> = (0..extra).map(|_| rng.random_range(0.05..0.95)).collect();
        fr.sort_by(f64::total_cmp);
        fr.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut gx: Vec<f64> = (0..fr.len()).map(|_| rng.random_range(0.05..0.95)).collect();
        let mut gy: Vec<f64> = (0..fr.len()).map(|_| rng.random_range(0.05..0.95)).collect();
        gx.sort_by(f64::total_cmp);
        gy.sort_by(f64::total_cmp);
        for ((f, a), b) in fr.iter().zip(&gx).zip(&gy) {
            zs.push(nodes[i] + f * (nodes[i + 1] - nodes[i]));
            xs.push(x[i] + a * (x[i + 1] - x[i]));
            ys.push(y[i] + b * (y[i + 1] - y[i]));
        }
        zs.push(nodes[i + 1]);
        xs.push(x[i + 1]);
        ys.push(y[i + 1]);
    }
    let fix = |v: &mut Vec<f64>| {
        for i in 1..v.len() {
            if v[i] <= v[i - 1] {
                v[i] = v[i - 1] + 1e-9;
            }
        }
        let last = v.len() - 1;
        v[last] = 1.0;
    };
    fix(&mut xs);
    fix(&mut ys);
    (
        MonotonePwl::new(zs.clone(), xs).unwrap(),
        MonotonePwl::new(zs, ys).unwrap(),
    )
}

proptest! {
    #[test]
    fn right_invariance(a in pwl_strategy(), b in pwl_strategy(), phi in pwl_strategy()) {
        let d = distance(&pw(&a), &pw(&b)).unwrap();
        let ap = a.compose(&phi).unwrap();
        let bp = b.compose(&phi).unwrap();
        let dp = distance(&pw(&ap), &pw(&bp)).unwrap();
        prop_assert!((d - dp).abs() < 1e-9 * (1.0 + d), "{} vs {}", d, dp);
    }

    #[test]
    fn compositional_triangle_inequality(a in pwl_strategy(), b in pwl_strategy()) {
        let c = compose(&a, &b).unwrap();
        let lhs = complexity(&pw(&c)).unwrap();
        let rhs = complexity(&pw(&a)).unwrap() + complexity(&pw(&b)).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn complexity_below_legacy_bound(a in pwl_strategy()) {
        prop_assert!(complexity(&pw(&a)).unwrap() <= legacy_upper_bound(&pw(&a)).unwrap() + 1e-12);
    }

    #[test]
    fn step_difference_triangle(a in pwl_strategy(), b in pwl_strategy(), c in pwl_strategy()) {
        let (la, lb, lc) = (log_slope(&a).unwrap(), log_slope(&b).unwrap(), log_slope(&c).unwrap());
        prop_assert!(
            tv_step_difference(&la, &lc) <= tv_step_difference(&la, &lb) + tv_step_difference(&lb, &lc) + 1e-12
        );
    }
}
