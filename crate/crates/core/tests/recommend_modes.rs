mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{insurance_registry, random_graph, rec};
use hetrec_core::baselines::InteractionView;
use hetrec_core::{
    build_graph, FilterRule, GraphRecommender, RecommendMode, RecommendationRequest, SolverConfig, WeightVector,
};

fn purchases() -> BTreeSet<String> {
    BTreeSet::from(["purchase".to_string()])
}

fn insurance_toy() -> Vec<hetrec_core::InteractionRecord> {
    let bought = [
        ("u1", "a"),
        ("u1", "c"),
        ("u2", "a"),
        ("u2", "b"),
        ("u3", "b"),
        ("u4", "a"),
        ("u4", "c"),
        ("u5", "b"),
        ("u5", "c"),
    ];
    bought
        .iter()
        .enumerate()
        .map(|(i, (u, item))| rec(u, item, "item", "purchase", i as i64))
        .collect()
}

fn insurance_request(user: &str) -> RecommendationRequest {
    RecommendationRequest {
        user: user.into(),
        user_tag: "user".into(),
        target_tag: "item".into(),
        k: 3,
        mode: RecommendMode::Neighbors { count: 4 },
        filters: vec![
            FilterRule::ExcludeInteracted {
                interactions: purchases(),
            },
            // Coverage `c` can only be added on top of base product `a`.
            FilterRule::RequirePrerequisite {
                prerequisites: BTreeMap::from([("c".to_string(), "a".to_string())]),
                interactions: purchases(),
            },
        ],
    }
}

#[test]
fn coverage_needs_its_base_product() {
    let reg = insurance_registry();
    let records = insurance_toy();
    let g = build_graph(&records, &reg).unwrap();
    let view = InteractionView::from_records(&records, &reg).unwrap();
    let w = WeightVector::uniform(&reg, 1.0).unwrap();
    let rec = GraphRecommender::new(&g, &w, &view, SolverConfig::new(0.4)).unwrap();

    // u3 owns b only: a is voted by u1, u2, u4; c is dropped for lack of a.
    let list = rec.recommend(&insurance_request("u3")).unwrap();
    assert_eq!(list.ids(), vec!["a"]);
    assert_eq!(list.items[0].score, 3.0);

    // u2 owns a and b: c is voted by u1, u4, u5.
    let list = rec.recommend(&insurance_request("u2")).unwrap();
    assert_eq!(list.ids(), vec!["c"]);
    assert_eq!(list.items[0].score, 3.0);

    // Without the prerequisite rule u3 would also be offered c.
    let mut req = insurance_request("u3");
    req.filters.truncate(1);
    let list = rec.recommend(&req).unwrap();
    assert_eq!(list.ids(), vec!["a", "c"]);
}

#[test]
fn cyclic_prerequisites_are_rejected() {
    let mut req = insurance_request("u1");
    req.filters = vec![FilterRule::RequirePrerequisite {
        prerequisites: BTreeMap::from([("a".to_string(), "c".to_string()), ("c".to_string(), "a".to_string())]),
        interactions: purchases(),
    }];
    assert!(req.validate().is_err());
}

fn lists_for(
    g: &hetrec_core::HeterogeneousGraph,
    w: &WeightVector,
    view: &InteractionView,
    mode: RecommendMode,
) -> Vec<Vec<String>> {
    let rec = GraphRecommender::new(g, w, view, SolverConfig::new(0.3)).unwrap();
    g.vertices_with_tag("user")
        .iter()
        .map(|&u| {
            let req = RecommendationRequest {
                user: g.vertex(u).id.clone(),
                user_tag: "user".into(),
                target_tag: "item".into(),
                k: 5,
                mode,
                filters: vec![],
            };
            rec.recommend(&req).unwrap().ids().iter().map(|s| s.to_string()).collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lists_survive_weight_scaling(seed in any::<u64>(), c in prop::sample::select(vec![0.1, 10.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 25);
        let view = InteractionView::from_records(&g.records, &g.registry).unwrap();
        let scaled = g.weights.scaled(c).unwrap();
        for mode in [RecommendMode::Direct, RecommendMode::Neighbors { count: 3 }] {
            prop_assert_eq!(
                lists_for(&g.graph, &g.weights, &view, mode),
                lists_for(&g.graph, &scaled, &view, mode)
            );
        }
    }

    #[test]
    fn direct_lists_are_sorted_filtered_and_led_by_the_argmax(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 25);
        let view = InteractionView::from_records(&g.records, &g.registry).unwrap();
        let rec = GraphRecommender::new(&g.graph, &g.weights, &view, SolverConfig::new(0.3)).unwrap();
        for &u in g.graph.vertices_with_tag("user") {
            let user = g.graph.vertex(u).id.clone();
            let req = RecommendationRequest {
                user: user.clone(),
                user_tag: "user".into(),
                target_tag: "item".into(),
                k: 4,
                mode: RecommendMode::Direct,
                filters: vec![FilterRule::ExcludeInteracted { interactions: BTreeSet::new() }],
            };
            let list = rec.recommend(&req).unwrap();
            prop_assert!(list.len() <= 4);
            for pair in list.items.windows(2) {
                prop_assert!(pair[0].score >= pair[1].score - 1e-12);
            }
            for item in &list.items {
                prop_assert!(!view.has_interacted(&user, "item", &item.id, &BTreeSet::new()));
            }
            let pi = rec.scores(&req).unwrap();
            let best = g.graph.vertices_with_tag("item").iter()
                .filter(|&&v| !view.has_interacted(&user, "item", &g.graph.vertex(v).id, &BTreeSet::new()))
                .map(|&v| pi.scores[v])
                .fold(f64::NEG_INFINITY, f64::max);
            if let Some(top) = list.items.first() {
                prop_assert!((top.score - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn neighbor_scores_never_exceed_neighbor_count(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 25);
        let view = InteractionView::from_records(&g.records, &g.registry).unwrap();
        for list in lists_for(&g.graph, &g.weights, &view, RecommendMode::Neighbors { count: n }) {
            let distinct: BTreeSet<_> = list.iter().collect();
            prop_assert_eq!(distinct.len(), list.len());
        }
        let rec = GraphRecommender::new(&g.graph, &g.weights, &view, SolverConfig::new(0.3)).unwrap();
        for &u in g.graph.vertices_with_tag("user") {
            let req = RecommendationRequest {
                user: g.graph.vertex(u).id.clone(),
                user_tag: "user".into(),
                target_tag: "item".into(),
                k: 10,
                mode: RecommendMode::Neighbors { count: n },
                filters: vec![],
            };
            for item in rec.recommend(&req).unwrap().items {
                prop_assert!(item.score >= 1.0 && item.score <= n as f64);
            }
        }
    }
}

#[test]
fn unknown_user_is_a_data_error() {
    let reg = insurance_registry();
    let records = insurance_toy();
    let g = build_graph(&records, &reg).unwrap();
    let view = InteractionView::from_records(&records, &reg).unwrap();
    let w = WeightVector::uniform(&reg, 1.0).unwrap();
    let rec = GraphRecommender::new(&g, &w, &view, SolverConfig::new(0.4)).unwrap();
    let err = rec.recommend(&insurance_request("nobody")).unwrap_err();
    assert_eq!(err.class(), hetrec_core::ErrorClass::Data);
}
