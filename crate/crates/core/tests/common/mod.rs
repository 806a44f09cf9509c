#![allow(dead_code)]

use std::path::PathBuf;

use chrono::{DateTime, TimeZone, Utc};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use hetrec_core::io::read_schema;
use hetrec_core::{
    build_graph, register_schema, EdgeKey, EdgeTypeRegistry, HeterogeneousGraph, InteractionDef, InteractionRecord,
    Schema, WeightVector,
};

pub fn ts(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_600_000_000 + secs, 0).unwrap()
}

pub fn rec(user: &str, object: &str, tag: &str, interaction: &str, secs: i64) -> InteractionRecord {
    InteractionRecord::new(user, object, tag, interaction, ts(secs))
}

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn edu_registry() -> EdgeTypeRegistry {
    register_schema(&read_schema(&configs_dir().join("educational/schema.json")).unwrap()).unwrap()
}

pub fn insurance_registry() -> EdgeTypeRegistry {
    register_schema(&read_schema(&configs_dir().join("insurance/schema.json")).unwrap()).unwrap()
}

/// The worked example: three users, two courses, a post, a comment and a
/// university.
pub fn figure_one() -> Vec<InteractionRecord> {
    vec![
        rec("u1", "c1", "course", "follow_course", 1),
        rec("u2", "c2", "course", "follow_course", 2),
        rec("u1", "u2", "user", "follow_user", 3),
        rec("u3", "u2", "user", "follow_user", 4),
        rec("u2", "p1", "post", "create_post", 5),
        rec("u1", "m1", "comment", "create_comment", 6),
        rec("m1", "p1", "post", "comment_under_post", 7),
        rec("u3", "m1", "comment", "like_comment", 8),
        rec("u1", "uni1", "university", "join_university", 9),
    ]
}

pub fn def(name: &str, source: &str, target: &str, two_way: bool) -> InteractionDef {
    InteractionDef {
        name: name.into(),
        source: source.into(),
        target: target.into(),
        two_way,
    }
}

/// Small mixed schema with one-way interactions (so some vertices dangle)
/// and an object-to-object relation.
pub fn mixed_registry() -> EdgeTypeRegistry {
    register_schema(&Schema {
        user_tag: "user".into(),
        tags: vec!["user".into(), "item".into(), "page".into()],
        interactions: vec![
            def("buy", "user", "item", true),
            def("view", "user", "page", true),
            def("click", "user", "item", true),
            def("follow", "user", "user", false),
            def("links", "page", "item", false),
        ],
    })
    .unwrap()
}

pub struct RandomGraph {
    pub registry: EdgeTypeRegistry,
    pub records: Vec<InteractionRecord>,
    pub graph: HeterogeneousGraph,
    pub weights: WeightVector,
}

pub fn random_weights<R: Rng>(registry: &EdgeTypeRegistry, rng: &mut R) -> WeightVector {
    WeightVector::new(
        registry
            .edge_keys()
            .iter()
            .map(|k| (k.clone(), rng.gen_range(0.01..=2.0)))
            .collect(),
    )
    .unwrap()
}

/// Random records over the mixed schema, at most `max_vertices` vertices.
pub fn random_records<R: Rng>(rng: &mut R, max_vertices: usize) -> Vec<InteractionRecord> {
    let users = rng.gen_range(2..=(max_vertices / 2).max(2));
    let rest = max_vertices.saturating_sub(users).max(2);
    let items = rng.gen_range(1..rest);
    let pages = (rest - items).min(rng.gen_range(0..=rest));
    let n_records = rng.gen_range(1..=3 * max_vertices);
    let mut out = Vec::new();
    for i in 0..n_records {
        let u = format!("u{}", rng.gen_range(0..users));
        let t = i as i64;
        match rng.gen_range(0..5) {
            0 | 1 => out.push(rec(&u, &format!("i{}", rng.gen_range(0..items)), "item", ["buy", "click"][rng.gen_range(0..2)], t)),
            2 if pages > 0 => out.push(rec(&u, &format!("p{}", rng.gen_range(0..pages)), "page", "view", t)),
            3 => {
                let v = format!("u{}", rng.gen_range(0..users));
                if v != u {
                    out.push(rec(&u, &v, "user", "follow", t));
                }
            }
            4 if pages > 0 => out.push(rec(
                &format!("p{}", rng.gen_range(0..pages)),
                &format!("i{}", rng.gen_range(0..items)),
                "item",
                "links",
                t,
            )),
            _ => {}
        }
    }
    if out.is_empty() {
        out.push(rec("u0", "i0", "item", "buy", 0));
    }
    out
}

pub fn random_graph<R: Rng>(rng: &mut R, max_vertices: usize) -> RandomGraph {
    let registry = mixed_registry();
    let records = random_records(rng, max_vertices);
    let graph = build_graph(&records, &registry).unwrap();
    let weights = random_weights(&registry, rng);
    RandomGraph {
        registry,
        records,
        graph,
        weights,
    }
}

fn edge_weight(parts: &[EdgeKey], weights: &WeightVector) -> f64 {
    parts.iter().map(|k| weights.get(k).unwrap()).sum()
}

/// Row-stochastic transition matrix, dangling rows left at zero.
pub fn dense_transition(graph: &HeterogeneousGraph, weights: &WeightVector) -> DMatrix<f64> {
    let n = graph.vertex_count();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, t) in graph.out_edges(i) {
            p[(i, j)] += edge_weight(t.parts(), weights);
        }
        let total: f64 = p.row(i).sum();
        if total > 0.0 {
            p.row_mut(i).scale_mut(1.0 / total);
        }
    }
    p
}

/// Direct solve of `(I - (1 - alpha) P'^T) pi = alpha e_s`, where `P'`
/// sends dangling rows back to the source.
pub fn oracle_ppr(p: &DMatrix<f64>, source: usize, alpha: f64) -> Vec<f64> {
    let n = p.nrows();
    let mut pt = p.clone();
    for i in 0..n {
        if pt.row(i).sum() == 0.0 {
            pt[(i, source)] = 1.0;
        }
    }
    let a = DMatrix::identity(n, n) - pt.transpose() * (1.0 - alpha);
    let mut b = DVector::zeros(n);
    b[source] = alpha;
    a.lu().solve(&b).expect("restart system is non-singular").iter().copied().collect()
}

/// Fraction of `walks` restart walks ending at each vertex: each step stops
/// with probability `alpha`, otherwise follows an out-edge, or jumps to the
/// source from a dangling vertex.
pub fn monte_carlo_ppr<R: Rng>(p: &DMatrix<f64>, source: usize, alpha: f64, walks: usize, rng: &mut R) -> Vec<f64> {
    let n = p.nrows();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            (0..n)
                .filter(|&j| p[(i, j)] > 0.0)
                .map(|j| {
                    acc += p[(i, j)];
                    (j, acc)
                })
                .collect()
        })
        .collect();
    let mut hits = vec![0usize; n];
    for _ in 0..walks {
        let mut v = source;
        while rng.gen::<f64>() >= alpha {
            let row = &rows[v];
            v = if row.is_empty() {
                source
            } else {
                let x = rng.gen::<f64>() * row.last().unwrap().1;
                row.iter().find(|&&(_, c)| x < c).map_or(row.last().unwrap().0, |&(j, _)| j)
            };
        }
        hits[v] += 1;
    }
    hits.into_iter().map(|h| h as f64 / walks as f64).collect()
}

/// Edu-shaped synthetic log: users follow courses over time, plus social and
/// content activity. Every user follows at least one course.
pub fn synthetic_edu<R: Rng>(rng: &mut R, users: usize, courses: usize) -> Vec<InteractionRecord> {
    let mut out = Vec::new();
    let mut t = 0i64;
    let mut tick = |rng: &mut R| {
        t += rng.gen_range(1..600);
        t
    };
    let course_ids: Vec<String> = (0..courses).map(|c| format!("c{c}")).collect();
    for u in 0..users {
        let me = format!("u{u}");
        let uni = format!("uni{}", u % 3);
        out.push(rec(&me, &uni, "university", "join_university", tick(rng)));
        // Courses cluster by university so the graph carries signal.
        let home: Vec<&String> = course_ids.iter().skip(u % 3).step_by(3).collect();
        for _ in 0..rng.gen_range(1..5) {
            let c = if rng.gen_bool(0.75) && !home.is_empty() {
                home.choose(rng).unwrap().to_string()
            } else {
                course_ids.choose(rng).unwrap().clone()
            };
            out.push(rec(&me, &c, "course", "follow_course", tick(rng)));
        }
        if rng.gen_bool(0.5) {
            let other = format!("u{}", rng.gen_range(0..users));
            if other != me {
                out.push(rec(&me, &other, "user", "follow_user", tick(rng)));
            }
        }
        if rng.gen_bool(0.3) {
            let post = format!("p{u}");
            out.push(rec(&me, &post, "post", "create_post", tick(rng)));
            let comment = format!("m{u}");
            out.push(rec(&me, &comment, "comment", "create_comment", tick(rng)));
            out.push(rec(&comment, &post, "post", "comment_under_post", tick(rng)));
        }
        if rng.gen_bool(0.3) {
            let res = format!("r{}", rng.gen_range(0..users / 2 + 1));
            out.push(rec(&me, &res, "resource", "rate_resource", tick(rng)));
        }
    }
    out.shuffle(rng);
    out
}

/// Insurance-shaped synthetic log: purchases of items and clicks on items
/// and services, spread over time.
pub fn synthetic_insurance<R: Rng>(rng: &mut R, users: usize, items: usize, services: usize) -> Vec<InteractionRecord> {
    let sections = ["ecommerce", "account", "claims", "information"];
    let mut out = Vec::new();
    for u in 0..users {
        let me = format!("u{u}");
        for _ in 0..rng.gen_range(1..4) {
            let t = rng.gen_range(0..1_000_000);
            out.push(rec(&me, &format!("i{}", rng.gen_range(0..items)), "item", "purchase", t));
        }
        for _ in 0..rng.gen_range(0..6) {
            let t = rng.gen_range(0..1_000_000);
            let s = sections.choose(rng).unwrap();
            if rng.gen_bool(0.5) {
                out.push(rec(&me, &format!("i{}", rng.gen_range(0..items)), "item", &format!("{s}_item"), t));
            } else {
                out.push(rec(&me, &format!("s{}", rng.gen_range(0..services)), "service", &format!("{s}_service"), t));
            }
        }
    }
    out
}
