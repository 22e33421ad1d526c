use std::sync::OnceLock;

use meanx_core::{
    build_graph, in_delta_2, in_delta_inf, iterative_extension_eval, parse_mean, period,
    EnvelopeEstimator, EnvelopeKind, FamilyWindow, GeneratorDescriptor, GiniParams, IncidenceGraph,
    IndexFamily, Interval, IterationConfig, MeanDescriptor,
};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn positive_vec(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.6f64..4.6, min..=max)
        .prop_map(|v| v.into_iter().map(f64::exp).collect())
}

/// Parameters printed exactly by `{}`: multiples of 1/4.
fn quarter() -> impl Strategy<Value = f64> {
    (-16i32..=16).prop_map(|k| k as f64 / 4.0)
}

fn generator_text() -> impl Strategy<Value = String> {
    prop_oneof![
        quarter().prop_map(|r| format!("power:{r}")),
        Just("log".to_string()),
        quarter()
            .prop_filter("exp needs a ≠ 0", |a| *a != 0.0)
            .prop_map(|a| format!("exp:{a}")),
    ]
}

fn mean_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        quarter().prop_map(|r| format!("power:{r}")),
        generator_text().prop_map(|g| format!("qa:{g}")),
        (quarter(), quarter()).prop_map(|(r, s)| format!("gini:{r},{s}")),
        Just("min".to_string()),
        Just("max".to_string()),
    ];
    leaf.prop_recursive(3, 8, 1, |inner| {
        prop_oneof![
            (generator_text(), inner.clone()).prop_map(|(g, m)| format!("conj({g},{m})")),
            inner.prop_map(|m| format!("ext({m})")),
        ]
    })
}

fn gini_params() -> impl Strategy<Value = GiniParams> {
    (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(r, s)| GiniParams::new(r, s).unwrap())
}

fn digraph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=6).prop_flat_map(|n| {
        let edges = prop::collection::vec((1..=n, 1..=n), 0..=n * n);
        (Just(n), edges)
    })
}

fn sqrt_product(a: f64, b: f64) -> f64 {
    (a.ln() * 0.5 + b.ln() * 0.5).exp()
}

proptest! {
    #[test]
    fn descriptor_text_round_trips(text in mean_text()) {
        // ext() of a non-strict base is rejected; everything else must parse
        if let Ok(m) = parse_mean(&text) {
            // `log` is printed in its canonical form
            prop_assert_eq!(m.to_string(), text.replace("log", "power:0"));
            prop_assert_eq!(parse_mean(&m.to_string()).unwrap(), m);
        } else {
            prop_assert!(text.contains("ext("));
        }
    }

    #[test]
    fn power_and_gini_means_lie_between_extremes(
        r in -6.0f64..6.0, s in -6.0f64..6.0, x in positive_vec(1, 6)
    ) {
        let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
        for m in [MeanDescriptor::power(r).unwrap(), MeanDescriptor::gini(r, s).unwrap()] {
            let v = m.eval(&x).unwrap();
            prop_assert!(lo * (1.0 - 1e-14) <= v && v <= hi * (1.0 + 1e-14), "{} at {:?} = {}", m, x, v);
        }
    }

    #[test]
    fn gini_is_symmetric_in_its_parameters(
        r in -6.0f64..6.0, s in -6.0f64..6.0, x in positive_vec(2, 6)
    ) {
        let a = MeanDescriptor::gini(r, s).unwrap().eval(&x).unwrap();
        let b = MeanDescriptor::gini(s, r).unwrap().eval(&x).unwrap();
        prop_assert!(close(a, b, 1e-13));
    }

    #[test]
    fn opposite_gini_parameters_give_the_geometric_mean_of_two(
        r in 0.01f64..8.0, a in 1e-3f64..1e3, b in 1e-3f64..1e3
    ) {
        let v = MeanDescriptor::gini(r, -r).unwrap().eval(&[a, b]).unwrap();
        prop_assert!(close(v, sqrt_product(a, b), 1e-12), "{} vs {}", v, sqrt_product(a, b));
    }

    #[test]
    fn affine_change_of_generator_keeps_the_mean(
        r in prop_oneof![-2.0f64..-0.25, 0.25f64..2.0],
        alpha in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0],
        beta in -1.0f64..1.0,
        x in positive_vec(2, 5),
    ) {
        let g = GeneratorDescriptor::custom(
            "affine",
            move |t: f64| alpha * t.powf(r) + beta,
            move |u: f64| ((u - beta) / alpha).powf(1.0 / r),
            Interval::positive(),
            alpha * r > 0.0,
        ).unwrap();
        let a = MeanDescriptor::quasi_arithmetic(g).eval(&x).unwrap();
        let b = MeanDescriptor::power(r).unwrap().eval(&x).unwrap();
        prop_assert!(close(a, b, 1e-8), "{} vs {}", a, b);
    }

    #[test]
    fn period_ignores_vertex_labels((n, edges) in digraph(), shift in 0usize..6) {
        let relabel = |v: usize| (v - 1 + shift) % n + 1;
        let g = IncidenceGraph::from_edges(n, edges.clone()).unwrap();
        let h = IncidenceGraph::from_edges(n, edges.iter().map(|&(u, v)| (relabel(u), relabel(v)))).unwrap();
        prop_assert_eq!(period(&g).ok(), period(&h).ok());
    }

    #[test]
    fn graph_edges_follow_the_family(p in 1usize..6, seed in prop::collection::vec(prop::collection::vec(0usize..100, 1..4), 6)) {
        let alpha: Vec<Vec<usize>> = seed[..p].iter().map(|row| row.iter().map(|k| k % p + 1).collect()).collect();
        let fam = IndexFamily::new(p, alpha.clone()).unwrap();
        let g = build_graph(&fam);
        for (i, row) in alpha.iter().enumerate() {
            for &j in row {
                prop_assert!(g.edges().contains(&(j, i + 1)));
            }
        }
        prop_assert!(g.edges().len() <= alpha.iter().map(Vec::len).sum());
    }

    #[test]
    fn region_predicates_ignore_parameter_order(a in gini_params(), b in gini_params()) {
        prop_assert_eq!(in_delta_2(a, b), in_delta_2(a.swapped(), b.swapped()));
        prop_assert_eq!(in_delta_inf(a, b), in_delta_inf(a.swapped(), b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn delta_inf_lies_inside_delta_2(a in gini_params(), b in gini_params()) {
        if in_delta_inf(a, b) {
            prop_assert!(in_delta_2(a, b), "{:?} {:?}", a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extension_is_symmetric_and_bounded(
        r in -3.0f64..3.0, s in -3.0f64..3.0, x in positive_vec(3, 4), rot in 0usize..4
    ) {
        let cfg = IterationConfig::default();
        let m = MeanDescriptor::gini(r, s).unwrap();
        let v = iterative_extension_eval(&m, &x, &cfg).unwrap().value;
        let mut y = x.clone();
        y.rotate_left(rot % x.len());
        let w = iterative_extension_eval(&m, &y, &cfg).unwrap().value;
        prop_assert!(close(v, w, 1e-11));
        let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
        prop_assert!(lo <= v && v <= hi);
    }
}

fn estimator() -> &'static EnvelopeEstimator {
    static EST: OnceLock<EnvelopeEstimator> = OnceLock::new();
    EST.get_or_init(|| {
        let m = parse_mean("gini:2,-1").unwrap();
        EnvelopeEstimator::new(m, FamilyWindow::default(), IterationConfig::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn envelopes_sandwich_the_mean_and_grow_with_x(
        x in positive_vec(2, 3), bumps in prop::collection::vec(1.0f64..3.0, 3)
    ) {
        let est = estimator();
        let v = est.mean().eval(&x).unwrap();
        let tol = 1e-9 * v.max(1.0);
        let at = |x: &[f64], k| est.estimate(x, k).unwrap().value;
        let (lo, hi) = (at(&x, EnvelopeKind::LocalLower), at(&x, EnvelopeKind::LocalUpper));
        prop_assert!(lo <= v + tol && v <= hi + tol, "{} <= {} <= {}", lo, v, hi);
        let y: Vec<f64> = x.iter().zip(&bumps).map(|(t, b)| t * b).collect();
        for k in [EnvelopeKind::LocalLower, EnvelopeKind::LocalUpper] {
            let (a, b) = (at(&x, k), at(&y, k));
            prop_assert!(a <= b + 1e-9 * b.max(1.0), "{}: {} at {:?} vs {} at {:?}", k, a, x, b, y);
        }
    }
}
