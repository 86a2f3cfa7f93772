use enn_core::datagen::{generate, label_point, true_fraction};
use enn_core::gates::*;
use enn_core::graph::*;
use enn_core::stats::summarize;
use enn_core::{Network, ProducerParams};
use proptest::prelude::*;

fn layer(params: &[(f64, Vec<f64>, f64)], fan_in: usize) -> Vec<Node<f64>> {
    params
        .iter()
        .map(|(a, al, p)| Node::new(ProducerParams::new(*a, al.clone(), *p).unwrap(), (0..fan_in).collect(), None).unwrap())
        .collect()
}

/// A random dense 2-3-3-1 economy.
fn small_economy() -> impl Strategy<Value = Vec<Vec<(f64, Vec<f64>, f64)>>> {
    let node = |n: usize| (0.2f64..5.0, prop::collection::vec(0.02f64..0.3, n), 0.2f64..1.0);
    (
        prop::collection::vec(node(2), 3),
        prop::collection::vec(node(3), 3),
        prop::collection::vec(node(3), 1),
    )
        .prop_map(|(a, b, c)| vec![a, b, c])
}

fn build(spec: &[Vec<(f64, Vec<f64>, f64)>]) -> LayeredEconomy<f64> {
    let mut fan = 2;
    let layers = spec
        .iter()
        .map(|l| {
            let out = layer(l, fan);
            fan = l.len();
            out
        })
        .collect();
    LayeredEconomy::new(2, layers).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn forward_is_pure(spec in small_economy(), l in prop::collection::vec(-3.0f64..3.0, 2)) {
        let e = build(&spec);
        prop_assert_eq!(forward(&e, &l).unwrap(), forward(&e, &l).unwrap());
    }

    #[test]
    fn later_layers_do_not_touch_earlier(
        spec in small_economy(),
        l in prop::collection::vec(-3.0f64..3.0, 2),
        k in 0usize..3,
        a in 0.2f64..5.0,
    ) {
        let mut e = build(&spec);
        let before = forward(&e, &l).unwrap();
        let old = e.layers()[k][0].params().clone();
        e.set_params(k, 0, ProducerParams::new(a, old.alpha().to_vec(), old.price()).unwrap()).unwrap();
        let after = forward(&e, &l).unwrap();
        for j in 0..k {
            prop_assert_eq!(&before[j], &after[j]);
        }
    }

    #[test]
    fn negation_pairing(q1 in 0.0f64..=100.0, q2 in 0.0f64..=100.0, k in 1u8..=3) {
        prop_assert_eq!(label_point(2 * k, q1, q2).unwrap(), !label_point(2 * k - 1, q1, q2).unwrap());
    }

    #[test]
    fn generated_labels_match_regions(kind in 1u8..=6, seed in any::<u64>()) {
        let d = generate(kind, 100, seed).unwrap();
        prop_assert_eq!(d.periods.len(), 100);
        for p in &d.periods {
            prop_assert!((0.0..=100.0).contains(&p.q_steel) && (0.0..=100.0).contains(&p.q_brass));
            prop_assert_eq!(p.label, label_point(kind, p.q_steel, p.q_brass).unwrap());
        }
    }

    // near ln p4 = 0, where Y4 does not underflow
    #[test]
    fn switch_is_exclusive(l3 in -12.0f64..12.0, l4 in -0.02f64..0.02) {
        let s = switching_forward(&not_gate::<f64>(), l3, l4).unwrap();
        prop_assert!((s.y3 == 0.0) != (s.y4 == 0.0));
        match s.produced {
            Product::Three => prop_assert_eq!(s.l4, 0.0),
            Product::Four => prop_assert_eq!(s.l3, 0.0),
        }
    }

    #[test]
    fn t_is_scale_invariant(
        init in prop::collection::vec(0.0f64..1.0, 2..30),
        shift in prop::collection::vec(-0.2f64..0.4, 30),
    ) {
        let fin: Vec<f64> = init.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let r = summarize(&init, &fin).unwrap();
        let pct = |v: &[f64]| v.iter().map(|x| x * 100.0).collect::<Vec<_>>();
        let s = summarize(&pct(&init), &pct(&fin)).unwrap();
        prop_assert!((s.mean - 100.0 * r.mean).abs() <= 1e-9 * s.mean.abs().max(1.0));
        if let (Some(a), Some(b)) = (r.t, s.t) {
            if a.is_finite() {
                prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn statistics_ignore_trial_order(
        init in prop::collection::vec(0.0f64..1.0, 3..20),
        rot in 0usize..20,
    ) {
        let fin: Vec<f64> = init.iter().enumerate().map(|(i, a)| a + 0.01 * i as f64).collect();
        let r = summarize(&init, &fin).unwrap();
        let k = rot % init.len();
        let (mut i2, mut f2) = (init.clone(), fin.clone());
        i2.rotate_left(k);
        f2.rotate_left(k);
        let s = summarize(&i2, &f2).unwrap();
        prop_assert!((r.mean - s.mean).abs() < 1e-12);
        prop_assert!((r.t.unwrap() - s.t.unwrap()).abs() < 1e-9 * r.t.unwrap().abs().max(1.0));
    }
}

#[test]
fn swapping_halves_inverts_the_ratio() {
    let hidden = |a: f64| Node::new(ProducerParams::new(a, vec![0.4], 1.0).unwrap(), vec![0], None).unwrap();
    let fin = |a: f64, inputs: Vec<usize>| Node::new(ProducerParams::new(a, vec![0.2, 0.3], 1.0).unwrap(), inputs, None).unwrap();
    let e = LayeredEconomy::new(
        1,
        vec![
            vec![hidden(2.0), hidden(0.5), hidden(3.0), hidden(0.7)],
            vec![fin(1.3, vec![0, 1]), fin(0.9, vec![2, 3])],
        ],
    )
    .unwrap();
    let s = LayeredEconomy::new(
        1,
        vec![
            vec![hidden(3.0), hidden(0.7), hidden(2.0), hidden(0.5)],
            vec![fin(0.9, vec![0, 1]), fin(1.3, vec![2, 3])],
        ],
    )
    .unwrap();
    for lp in [-4.0, 0.0, 2.5] {
        let r = labor_leisure_ratio(&e, lp).unwrap();
        let q = labor_leisure_ratio(&s, lp).unwrap();
        assert!((r * q - 1.0).abs() < 1e-12);
    }
}

#[test]
fn some_hotdog_model_is_nonmonotone() {
    let grid = default_grid::<f64>(2001);
    let best = (1..=4)
        .map(|m| derivative_sign_changes(&sweep(&build_hotdog_model::<f64>(m).unwrap(), &grid).unwrap().ratio))
        .max()
        .unwrap();
    assert!(best >= 2, "max sign changes {best}");
}

#[test]
fn monte_carlo_areas() {
    for kind in [1u8, 3, 5] {
        let d = generate(kind, 100_000, 11).unwrap();
        let frac = d.periods.iter().filter(|p| p.label).count() as f64 / 1e5;
        let want = true_fraction(kind).unwrap();
        let sigma = (want * (1.0 - want) / 1e5).sqrt();
        assert!((frac - want).abs() < 3.0 * sigma, "kind {kind}: {frac} vs {want}");
    }
}

#[test]
fn nand_table_and_price_increase_witness() {
    let mut n = Network::standard();
    assert!(verify_gates(&mut n).unwrap().passed());
    // raising ln p3 from FALSE to TRUE raises Y3 from zero: an input-price
    // increase that raises some output
    let psi = not_gate::<f64>();
    let lo = switching_forward(&psi, -10.0, 0.0).unwrap();
    let hi = switching_forward(&psi, -4.54e-5, 0.0).unwrap();
    assert!(hi.y3 > lo.y3);
}
