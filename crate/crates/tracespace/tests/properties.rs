mod common;

use std::collections::BTreeSet;

use num::Rational64;
use proptest::prelude::*;

use tracespace::absint::{self, Edge, Effect, EquationSystem, Ext, Interval};
use tracespace::geometry::{build_holes, point_forbidden};
use tracespace::index_poset::{
    enumerate_dead, enumerate_dead_with, is_alive, boxes_of, mask, max_alive, schedulings, DeadOptions, SchedMatrix,
    Variant,
};
use tracespace::lang::{normalize, parse};
use tracespace::oracle::{self, brute_dead, grid_alive};
use tracespace::shadow::{self, shadow_of, Labels, Shadow};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

fn small_program() -> impl Strategy<Value = String> {
    any::<u64>().prop_map(|s| common::random_program(s, 20_000.0))
}

/// Every matrix over the mask, for grids small enough to list.
fn all_masked(g: &tracespace::geometry::HoleGrid) -> Vec<SchedMatrix> {
    let m = mask(g);
    let bits: Vec<(usize, usize)> = m.ones_iter().collect();
    if bits.len() > 12 {
        return vec![];
    }
    (0..1u32 << bits.len())
        .map(|k| {
            let mut x = SchedMatrix::zeros(g.l(), g.n);
            for (b, &(i, j)) in bits.iter().enumerate() {
                x.set(i, j, k >> b & 1 == 1);
            }
            x
        })
        .collect()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn parse_display_roundtrip(text in small_program()) {
        let src = parse(&text).unwrap();
        let again = parse(&src.to_string()).unwrap();
        prop_assert_eq!(src, again);
    }

    #[test]
    fn dead_matches_brute_force(text in small_program()) {
        let (alt, caps) = common::load(&text);
        let g = build_holes(&alt.threads, &caps).unwrap();
        prop_assume!(g.l() <= 6 && g.n <= 4);
        let fast = enumerate_dead(&g);
        prop_assert_eq!(&fast, &brute_dead(&g).unwrap());
        let sorted = enumerate_dead_with(&g, DeadOptions { sort_dims: true, parallel: false });
        prop_assert_eq!(fast, sorted);
    }

    #[test]
    fn scheduling_count_matches_run_classes(text in small_program()) {
        let (alt, caps) = common::load(&text);
        let report = schedulings(&alt, &caps).unwrap();
        let runs = oracle::enumerate_runs(&alt, &caps, oracle::DEFAULT_RUN_CAP).unwrap();
        prop_assert_eq!(report.count, oracle::equiv_classes(&alt, &caps, &runs), "{}", text);
        prop_assert_eq!(report.count, oracle::count_classes(&alt, &caps), "{}", text);
    }

    #[test]
    fn representatives_are_legal_runs(text in small_program()) {
        let (alt, caps) = common::load(&text);
        let report = schedulings(&alt, &caps).unwrap();
        let runs = oracle::enumerate_runs(&alt, &caps, oracle::DEFAULT_RUN_CAP).unwrap();
        let complete: BTreeSet<Vec<String>> = runs.iter().filter(|r| r.complete).map(|r| r.render(&alt)).collect();
        for c in &report.components {
            prop_assert!(complete.contains(&c.representative), "{} {:?}", text, c.representative);
        }
    }

    #[test]
    fn maximal_alive_is_sound_and_maximal(text in small_program()) {
        let (alt, caps) = common::load(&text);
        let g = build_holes(&alt.threads, &caps).unwrap();
        let dead = enumerate_dead(&g);
        let exact = max_alive(&g, &dead, Variant::Exact);
        let m = mask(&g);
        for x in &exact {
            prop_assert!(grid_alive(&g, x), "{} {}", text, x);
            for (i, j) in m.ones_iter() {
                if !x.get(i, j) {
                    prop_assert!(!grid_alive(&g, &x.with(i, j, true)), "{} {} not maximal", text, x);
                }
            }
        }
        let sup = max_alive(&g, &dead, Variant::Superset);
        prop_assert!(exact.iter().all(|x| sup.contains(x)));
    }

    #[test]
    fn aliveness_agrees_with_grid_and_is_monotone(text in small_program()) {
        let (alt, caps) = common::load(&text);
        let g = build_holes(&alt.threads, &caps).unwrap();
        let all = all_masked(&g);
        let alive: Vec<bool> = all.iter().map(|x| grid_alive(&g, x)).collect();
        // extension boxes cover every hole only when no row is zero
        for (x, &a) in all.iter().zip(&alive).filter(|(x, _)| !x.has_zero_row()) {
            prop_assert_eq!(is_alive(&boxes_of(&g, x), g.n), a, "{} {}", text, x);
        }
        for (x, &ax) in all.iter().zip(&alive) {
            for (y, &ay) in all.iter().zip(&alive) {
                if x.le(y) && ay {
                    prop_assert!(ax, "{} {} <= {}", text, x, y);
                }
            }
        }
    }

    #[test]
    fn holes_are_overcommitted_points(text in small_program()) {
        let (alt, caps) = common::load(&text);
        let g = build_holes(&alt.threads, &caps).unwrap();
        let dims: Vec<u32> = g.lengths.iter().map(|l| 4 * l + 1).collect();
        let total: u32 = dims.iter().product();
        prop_assume!(total <= 40_000);
        for idx in 0..total {
            let mut r = idx;
            let p: Vec<u32> = dims.iter().map(|d| { let x = r % d; r /= d; x }).collect();
            let q: Vec<Rational64> = p.iter().map(|&x| Rational64::new(x as i64, 4)).collect();
            prop_assert_eq!(point_forbidden(&g, &q), oracle::overcommitted(&alt, &caps, &p), "{} {:?}", text, p);
        }
    }
}

fn looping_programs() -> Vec<String> {
    vec![
        "(P(a).V(a))* | (P(a).V(a))*".into(),
        "(P(a).P(b).V(a).V(b))* | (P(b).P(a).V(b).V(a))*".into(),
        "(P(a).V(a).P(b).V(b))* | (P(b).V(b).P(a).V(a))*".into(),
        "#cap a 2\n(P(a).V(a))* | (P(a).V(a))* | (P(a).V(a))*".into(),
        "(P(a).V(a))* | (P(b).V(b))*".into(),
    ]
}

#[test]
fn automaton_reductions_preserve_language() {
    for text in looping_programs() {
        let src = parse(&text).unwrap();
        let alt = normalize(&src.program).unwrap().remove(0);
        let a = shadow::automaton_of(&alt, &src.capacities(), Labels::Maximal).unwrap();
        let d = shadow::determinize(&a);
        let m = shadow::minimize(&d);
        assert_eq!(shadow::accepted_words(&a, 6), shadow::accepted_words(&d, 6), "{text}");
        assert_eq!(shadow::accepted_words(&d, 6), shadow::accepted_words(&m, 6), "{text}");
        assert!(m.states.len() <= d.states.len());
        let again = shadow::determinize(&d);
        assert_eq!((again.states.len(), again.transitions.len()), (d.states.len(), d.transitions.len()));
        let mm = shadow::minimize(&m);
        assert_eq!((mm.states.len(), mm.transitions.len()), (m.states.len(), m.transitions.len()));
        for (s, _, _, _) in &d.transitions {
            assert!(*s < d.states.len());
        }
        let mut seen = BTreeSet::new();
        for &(s, j, l, _) in &d.transitions {
            assert!(seen.insert((s, j, l)), "{text}: nondeterministic");
        }
    }
}

#[test]
fn shadows_drop_glue_dimension() {
    for text in looping_programs() {
        let src = parse(&text).unwrap();
        let alt = normalize(&src.program).unwrap().remove(0);
        let a = shadow::automaton_of(&alt, &src.capacities(), Labels::Maximal).unwrap();
        for st in &a.states {
            let sh = st.shadow.as_ref().unwrap();
            for j in 0..a.n {
                let s = shadow_of(sh, j);
                assert!(s.boxes.iter().all(|b| b.special_dim() != Some(j)));
                assert_eq!(shadow_of(&s, j), s);
                assert_eq!(shadow::shadow_union(&s, &Shadow::default()), s);
            }
        }
    }
}

fn int(a: i64, b: i64) -> Interval {
    Interval::Range(Ext::Fin(num::BigRational::from_integer(a.into())), Ext::Fin(num::BigRational::from_integer(b.into())))
}

fn random_system(seed: u64, effects: &[&str]) -> EquationSystem {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(1..=4);
    let incoming = (0..ns)
        .map(|_| {
            (0..rng.gen_range(0..=3))
                .map(|_| Edge {
                    src: rng.gen_range(0..ns),
                    effect: Effect::parse(effects[rng.gen_range(0..effects.len())]).unwrap(),
                })
                .collect()
        })
        .collect();
    EquationSystem { init: [("a".to_string(), int(0, 1))].into(), incoming, entry: None, warnings: vec![] }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn absint_post_fixpoint(seed in any::<u64>(), lo in -3i64..=0, hi in 1i64..=3) {
        let sys = random_system(seed, &["a:=a-1", "a:=a/2", "a:=a*-1", "a:=a+2", "a:=3", ""]);
        let sol = absint::solve(&sys, 3, 2);
        prop_assert!(sys.is_post_fixpoint(&sol));
        // a solution for a larger initial value is still sound for the smaller one
        let bigger = EquationSystem { init: [("a".to_string(), int(lo, hi))].into(), ..sys.clone() };
        let sol2 = absint::solve(&bigger, 3, 2);
        prop_assert!(bigger.is_post_fixpoint(&sol2));
        prop_assert!(sys.is_post_fixpoint(&sol2));
    }

    #[test]
    fn least_fixpoint_is_monotone_in_init(seed in any::<u64>(), lo in -3i64..=0, hi in 1i64..=3) {
        let sys = random_system(seed, &["a:=a*-1", "a:=3", "a:=-2", "a:=a/2", ""]);
        let bigger = EquationSystem { init: [("a".to_string(), int(lo, hi))].into(), ..sys.clone() };
        let (x, y) = (absint::solve(&sys, usize::MAX, 0), absint::solve(&bigger, usize::MAX, 0));
        for (x, y) in x.iter().zip(&y) {
            let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
            prop_assert!(x["a"].le(&y["a"]), "{} !<= {}", x["a"], y["a"]);
        }
    }

    #[test]
    fn widening_is_exact_on_finite_chains(seed in any::<u64>()) {
        // endpoints stay in {0, ±1, ±2, ±3}, so no state changes more than 12 times
        let sys = random_system(seed, &["a:=a*-1", "a:=3", "a:=-2", ""]);
        let widened = absint::solve(&sys, 0, 0);
        let plain = absint::solve(&sys, usize::MAX, 0);
        prop_assert_eq!(widened.len(), plain.len());
        prop_assert!(sys.is_post_fixpoint(&plain));
        // the plain iteration is the least fixpoint; widening may only lose precision
        for (w, p) in widened.iter().zip(&plain) {
            prop_assert!(p.as_ref().unwrap()["a"].le(&w.as_ref().unwrap()["a"]));
        }
        let delayed = absint::solve(&sys, 16, 0);
        prop_assert_eq!(delayed, plain);
    }
}
