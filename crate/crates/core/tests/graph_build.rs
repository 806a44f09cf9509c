mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{edu_registry, insurance_registry, mixed_registry, random_records, rec};
use hetrec_core::ga::GeneLayout;
use hetrec_core::{build_graph, EdgeKey, WeightVector};

#[test]
fn shipped_schemas_have_the_expected_gene_counts() {
    let edu = edu_registry();
    assert_eq!(edu.interactions().len(), 10);
    assert_eq!(GeneLayout::directed(&edu).gene_count(), 20);
    assert_eq!(GeneLayout::undirected(&edu).gene_count(), 10);
    let ins = insurance_registry();
    assert_eq!(ins.interactions().len(), 9);
    assert_eq!(GeneLayout::directed(&ins).gene_count(), 18);
}

#[test]
fn repeated_and_composite_interactions() {
    let reg = mixed_registry();
    let records = vec![
        rec("u1", "i1", "item", "buy", 1),
        rec("u1", "i1", "item", "buy", 2),
        rec("u1", "i1", "item", "click", 3),
    ];
    let g = build_graph(&records, &reg).unwrap();
    assert_eq!(g.edge_count(), 2);
    assert_eq!(
        g.canonical_dump(),
        "edge item/i1 user/u1 buy:in+click:in\nedge user/u1 item/i1 buy:out+click:out\n"
    );

    // A composite edge weighs the sum of its parts.
    let mut w: std::collections::BTreeMap<EdgeKey, f64> =
        reg.edge_keys().iter().map(|k| (k.clone(), 1.0)).collect();
    w.insert(EdgeKey::out("buy"), 0.25);
    w.insert(EdgeKey::out("click"), 0.5);
    let w = WeightVector::new(w).unwrap();
    let u = g.find("user", "u1").unwrap();
    let (_, t) = g.out_edges(u).next().unwrap();
    assert_eq!(hetrec_core::resolve_weight(t, &w).unwrap(), 0.75);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn record_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reg = mixed_registry();
        let mut records = random_records(&mut rng, 30);
        let a = build_graph(&records, &reg).unwrap();
        records.shuffle(&mut rng);
        let b = build_graph(&records, &reg).unwrap();
        prop_assert_eq!(a.canonical_dump(), b.canonical_dump());
        prop_assert_eq!(a.vertices(), b.vertices());
    }

    #[test]
    fn edges_are_one_per_ordered_pair(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reg = mixed_registry();
        let records = random_records(&mut rng, 30);
        let g = build_graph(&records, &reg).unwrap();

        let mut pairs = BTreeSet::new();
        for r in &records {
            let def = reg.interaction(&r.interaction).unwrap();
            let src = (def.source.clone(), r.user_id.clone());
            let dst = (r.object_tag.clone(), r.object_id.clone());
            pairs.insert((src.clone(), dst.clone()));
            if def.two_way {
                pairs.insert((dst, src));
            }
        }
        prop_assert_eq!(g.edge_count(), pairs.len());
        let out: usize = (0..g.vertex_count()).map(|v| g.out_degree(v)).sum();
        let inn: usize = (0..g.vertex_count()).map(|v| g.in_degree(v)).sum();
        prop_assert_eq!(out, pairs.len());
        prop_assert_eq!(inn, pairs.len());
        for v in 0..g.vertex_count() {
            for (t, _) in g.out_edges(v) {
                prop_assert_ne!(t, v);
            }
        }
    }
}
