//! Property tests of structural invariants.

use arak_core::contour::Contour;
use arak_core::geometry::{ConvexDomain, Point};
use arak_core::gibbs::ModelParams;
use arak_core::graphical::ContourInstance;
use arak_core::harness::RunConfig;
use arak_core::metropolis::{acceptance_from_terms, LoopTerms};
use proptest::prelude::*;

fn triangle() -> impl Strategy<Value = Contour> {
    (-2.0..2.0f64, -2.0..2.0f64, 0.05..1.0f64, 0.05..1.0f64, 0.3..2.8f64).prop_filter_map(
        "degenerate",
        |(x, y, r1, r2, a)| {
            let p = Point::new(x, y);
            Contour::new(vec![p, p + Point::new(r1, 0.0), p + Point::unit(a) * r2], None).ok()
        },
    )
}

fn instance() -> impl Strategy<Value = (Contour, f64, f64)> {
    (triangle(), -3.0..0.0f64, 0.01..2.0f64).prop_map(|(c, b, l)| (c, b, b + l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contour_json_roundtrip(c in triangle()) {
        let s = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(serde_json::from_str::<Contour>(&s).unwrap(), c);
    }

    #[test]
    fn intersection_is_symmetric(a in triangle(), b in triangle()) {
        prop_assert_eq!(a.intersects(&b), b.intersects(&a));
        prop_assert!(a.intersects(&a));
    }

    #[test]
    fn ancestor_relation_is_acyclic_and_matches_its_definition(raw in prop::collection::vec(instance(), 2..12)) {
        let v: Vec<ContourInstance> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (contour, birth, death))| ContourInstance { id: i as u64, contour, birth, death })
            .collect();
        for x in &v {
            for y in &v {
                let want = x.id != y.id
                    && (x.birth, x.id) < (y.birth, y.id)
                    && x.death > y.birth
                    && x.contour.intersects(&y.contour);
                prop_assert_eq!(x.is_ancestor_of(y), want);
                prop_assert!(!(x.is_ancestor_of(y) && y.is_ancestor_of(x)));
            }
        }
    }

    #[test]
    fn acceptance_is_a_probability(
        alpha in -1.0..3.0f64, beta in -1.0..3.0f64,
        area in 0.0..4.0f64, length in 0.0..10.0f64, sym in 0.0..4.0f64,
    ) {
        let params = ModelParams::new(alpha, beta, 1.0, 1.0).unwrap();
        let t = LoopTerms { area_new_black: area, length_new: length, area_sym: sym, length_sym: length };
        let p = acceptance_from_terms(&t, &params).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn config_values_survive_text_roundtrip(beta in 0.0..10.0f64, seed in any::<u64>(), samples in 1usize..10_000) {
        let text = format!("beta = {beta}\nseed = {seed}\nsamples = {samples}\n");
        let c = RunConfig::from_kv(&text).unwrap();
        prop_assert_eq!(c.beta, Some(beta));
        prop_assert_eq!(c.seed, seed);
        prop_assert_eq!(c.samples, samples);
    }

    #[test]
    fn clipped_length_never_exceeds_length(c in triangle(), h in 0.1..3.0f64) {
        let w = ConvexDomain::square(h).unwrap();
        let inside = c.length_in(&w);
        prop_assert!(inside <= c.length() + 1e-12);
        prop_assert_eq!(inside > 0.0, inside > 0.0 && c.meets(&w));
    }
}
