//! Typed interaction graph.
//!
//! Users and content objects become vertices tagged with their type; every
//! logged interaction becomes a directed edge from the acting vertex to the
//! object (`Out`) and, for two-way interactions, a reverse edge (`In`).
//! Distinct interactions on the same ordered pair collapse into a single edge
//! whose type is the composite of its constituents; its weight is their sum.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexTag(String);

impl VertexTag {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Schema("vertex tag must be non-empty".into()));
        }
        Ok(VertexTag(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Out,
    In,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Out => "out",
            Direction::In => "in",
        }
    }
}

/// One (interaction, direction) pair: the unit that carries a weight.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub interaction: String,
    pub direction: Direction,
}

impl EdgeKey {
    pub fn new(interaction: impl Into<String>, direction: Direction) -> Self {
        EdgeKey {
            interaction: interaction.into(),
            direction,
        }
    }

    pub fn out(interaction: impl Into<String>) -> Self {
        Self::new(interaction, Direction::Out)
    }

    pub fn inbound(interaction: impl Into<String>) -> Self {
        Self::new(interaction, Direction::In)
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.interaction, self.direction.as_str())
    }
}

impl FromStr for EdgeKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, dir) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::Config(format!("edge key `{s}` is not of the form <interaction>:<out|in>")))?;
        let direction = match dir {
            "out" => Direction::Out,
            "in" => Direction::In,
            other => {
                return Err(Error::Config(format!(
                    "edge key `{s}`: direction must be `out` or `in`, got `{other}`"
                )))
            }
        };
        if name.is_empty() {
            return Err(Error::Config(format!("edge key `{s}` has an empty interaction name")));
        }
        Ok(EdgeKey::new(name, direction))
    }
}

/// The type of a built edge. A singleton in the common case; composite when
/// several distinct interactions connect the same ordered pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeType {
    parts: Vec<EdgeKey>,
}

impl EdgeType {
    pub fn single(key: EdgeKey) -> Self {
        EdgeType { parts: vec![key] }
    }

    /// Builds a (possibly composite) type. Constituents are sorted and deduplicated.
    pub fn composite(parts: impl IntoIterator<Item = EdgeKey>) -> Result<Self> {
        let parts: BTreeSet<EdgeKey> = parts.into_iter().collect();
        if parts.is_empty() {
            return Err(Error::Schema("edge type needs at least one constituent".into()));
        }
        Ok(EdgeType {
            parts: parts.into_iter().collect(),
        })
    }

    pub fn parts(&self) -> &[EdgeKey] {
        &self.parts
    }

    pub fn is_composite(&self) -> bool {
        self.parts.len() > 1
    }

    /// Shared direction of all constituents, if they agree.
    pub fn direction(&self) -> Option<Direction> {
        let first = self.parts[0].direction;
        self.parts
            .iter()
            .all(|p| p.direction == first)
            .then_some(first)
    }

    pub fn involves(&self, interaction: &str) -> bool {
        self.parts.iter().any(|p| p.interaction == interaction)
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, part) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{part}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionDef {
    pub name: String,
    pub source: String,
    pub target: String,
    #[serde(default = "default_two_way")]
    pub two_way: bool,
}

fn default_two_way() -> bool {
    true
}

/// On-disk schema document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_user_tag")]
    pub user_tag: String,
    pub tags: Vec<String>,
    pub interactions: Vec<InteractionDef>,
}

fn default_user_tag() -> String {
    "user".to_string()
}

/// Registered vertex tags and edge types.
#[derive(Debug, Clone)]
pub struct EdgeTypeRegistry {
    user_tag: VertexTag,
    tags: BTreeSet<VertexTag>,
    defs: Vec<InteractionDef>,
    by_name: HashMap<String, usize>,
    keys: Vec<EdgeKey>,
}

/// Validates interaction definitions and produces the edge-type registry.
///
/// Two-way interactions contribute an `Out` and an `In` edge type; one-way
/// interactions contribute only `Out`. Registry order follows definition
/// order, which is also the gene order used by the optimizer.
pub fn register_schema(schema: &Schema) -> Result<EdgeTypeRegistry> {
    let mut tags = BTreeSet::new();
    for t in &schema.tags {
        let tag = VertexTag::new(t.clone())?;
        if !tags.insert(tag) {
            return Err(Error::Schema(format!("duplicate vertex tag `{t}`")));
        }
    }
    let user_tag = VertexTag::new(schema.user_tag.clone())?;
    if !schema.interactions.is_empty() && !tags.contains(&user_tag) {
        return Err(Error::Schema(format!(
            "user tag `{user_tag}` is not among the declared tags"
        )));
    }

    let mut by_name = HashMap::new();
    let mut keys = Vec::new();
    for (i, def) in schema.interactions.iter().enumerate() {
        if def.name.is_empty() || def.name.contains(':') || def.name.contains('+') {
            return Err(Error::Schema(format!(
                "interaction name `{}` must be non-empty and free of `:` and `+`",
                def.name
            )));
        }
        for tag in [&def.source, &def.target] {
            if !tags.iter().any(|t| t.as_str() == tag) {
                return Err(Error::Schema(format!(
                    "interaction `{}` references unknown tag `{tag}`",
                    def.name
                )));
            }
        }
        if by_name.insert(def.name.clone(), i).is_some() {
            return Err(Error::Schema(format!("duplicate interaction `{}`", def.name)));
        }
        keys.push(EdgeKey::out(&def.name));
        if def.two_way {
            keys.push(EdgeKey::inbound(&def.name));
        }
    }

    Ok(EdgeTypeRegistry {
        user_tag,
        tags,
        defs: schema.interactions.clone(),
        by_name,
        keys,
    })
}

impl EdgeTypeRegistry {
    pub fn user_tag(&self) -> &VertexTag {
        &self.user_tag
    }

    pub fn tags(&self) -> impl Iterator<Item = &VertexTag> {
        self.tags.iter()
    }

    pub fn interactions(&self) -> &[InteractionDef] {
        &self.defs
    }

    pub fn interaction(&self, name: &str) -> Option<&InteractionDef> {
        self.by_name.get(name).map(|&i| &self.defs[i])
    }

    /// Every registered (interaction, direction) pair in canonical order.
    pub fn edge_keys(&self) -> &[EdgeKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: &EdgeKey) -> bool {
        self.interaction(&key.interaction)
            .is_some_and(|d| key.direction == Direction::Out || d.two_way)
    }
}

/// One logged event. For object-to-object relations (e.g. a comment placed
/// under a post) `user_id` holds the source object's id; its tag comes from
/// the interaction's declared source tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub user_id: String,
    pub object_id: String,
    pub object_tag: String,
    pub interaction: String,
    pub timestamp: DateTime<Utc>,
}

impl InteractionRecord {
    pub fn new(
        user_id: impl Into<String>,
        object_id: impl Into<String>,
        object_tag: impl Into<String>,
        interaction: impl Into<String>,
        timestamp: DateTime<Utc>,
    ) -> Self {
        InteractionRecord {
            user_id: user_id.into(),
            object_id: object_id.into(),
            object_tag: object_tag.into(),
            interaction: interaction.into(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    pub tag: VertexTag,
    pub index: usize,
}

/// Immutable typed graph with a compressed out-adjacency.
#[derive(Debug, Clone)]
pub struct HeterogeneousGraph {
    vertices: Vec<Vertex>,
    lookup: HashMap<(VertexTag, String), usize>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    edge_type_ids: Vec<usize>,
    edge_types: Vec<EdgeType>,
    in_degree: Vec<usize>,
    by_tag: BTreeMap<VertexTag, Vec<usize>>,
}

type Endpoint<'a> = (VertexTag, &'a str);

/// Resolved endpoint tags of a record under a registry.
fn endpoints<'a>(
    record: &'a InteractionRecord,
    registry: &'a EdgeTypeRegistry,
) -> Result<(&'a InteractionDef, Endpoint<'a>, Endpoint<'a>)> {
    let def = registry.interaction(&record.interaction).ok_or_else(|| {
        Error::Data(format!("unregistered interaction `{}`", record.interaction))
    })?;
    if record.object_tag != def.target {
        return Err(Error::Data(format!(
            "interaction `{}` targets tag `{}`, record has object tag `{}`",
            def.name, def.target, record.object_tag
        )));
    }
    if record.user_id.is_empty() || record.object_id.is_empty() {
        return Err(Error::Data(format!(
            "empty vertex id in `{}` record",
            record.interaction
        )));
    }
    if def.source == def.target && record.user_id == record.object_id {
        return Err(Error::Data(format!(
            "self-loop: `{}` {}/{} onto itself",
            def.name, def.source, record.user_id
        )));
    }
    let src = (VertexTag(def.source.clone()), record.user_id.as_str());
    let dst = (VertexTag(def.target.clone()), record.object_id.as_str());
    Ok((def, src, dst))
}

/// Builds the graph from interaction records.
///
/// Vertex indices follow lexicographic (tag, id) order, so any permutation of
/// the same records yields the same graph. Repeated identical interactions on
/// a pair are kept once.
pub fn build_graph(
    records: &[InteractionRecord],
    registry: &EdgeTypeRegistry,
) -> Result<HeterogeneousGraph> {
    let mut keys: BTreeSet<(VertexTag, &str)> = BTreeSet::new();
    let mut resolved = Vec::with_capacity(records.len());
    for record in records {
        let (def, src, dst) = endpoints(record, registry)?;
        keys.insert(src.clone());
        keys.insert(dst.clone());
        resolved.push((def, src, dst));
    }

    let mut vertices = Vec::with_capacity(keys.len());
    let mut lookup = HashMap::with_capacity(keys.len());
    let mut by_tag: BTreeMap<VertexTag, Vec<usize>> = BTreeMap::new();
    for (index, (tag, id)) in keys.into_iter().enumerate() {
        lookup.insert((tag.clone(), id.to_string()), index);
        by_tag.entry(tag.clone()).or_default().push(index);
        vertices.push(Vertex {
            id: id.to_string(),
            tag,
            index,
        });
    }

    let mut pairs: BTreeMap<(usize, usize), BTreeSet<EdgeKey>> = BTreeMap::new();
    for (def, src, dst) in resolved {
        let s = lookup[&(src.0, src.1.to_string())];
        let t = lookup[&(dst.0, dst.1.to_string())];
        pairs
            .entry((s, t))
            .or_default()
            .insert(EdgeKey::out(&def.name));
        if def.two_way {
            pairs
                .entry((t, s))
                .or_default()
                .insert(EdgeKey::inbound(&def.name));
        }
    }

    let n = vertices.len();
    let mut offsets = vec![0usize; n + 1];
    let mut targets = Vec::with_capacity(pairs.len());
    let mut edge_type_ids = Vec::with_capacity(pairs.len());
    let mut interned: BTreeMap<Vec<EdgeKey>, usize> = BTreeMap::new();
    let mut edge_types = Vec::new();
    let mut in_degree = vec![0usize; n];
    for ((s, t), parts) in pairs {
        let parts: Vec<EdgeKey> = parts.into_iter().collect();
        let id = *interned.entry(parts.clone()).or_insert_with(|| {
            edge_types.push(EdgeType { parts });
            edge_types.len() - 1
        });
        offsets[s + 1] += 1;
        targets.push(t);
        edge_type_ids.push(id);
        in_degree[t] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }

    Ok(HeterogeneousGraph {
        vertices,
        lookup,
        offsets,
        targets,
        edge_type_ids,
        edge_types,
        in_degree,
        by_tag,
    })
}

impl HeterogeneousGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> &Vertex {
        &self.vertices[index]
    }

    pub fn find(&self, tag: &str, id: &str) -> Option<usize> {
        self.lookup
            .get(&(VertexTag(tag.to_string()), id.to_string()))
            .copied()
    }

    /// Vertex indices carrying `tag`, ascending.
    pub fn vertices_with_tag(&self, tag: &str) -> &[usize] {
        self.by_tag
            .get(&VertexTag(tag.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Out-neighbors of `v` with their edge types.
    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = (usize, &EdgeType)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.edge_type_ids[range])
            .map(move |(&t, &e)| (t, &self.edge_types[e]))
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_degree[v]
    }

    /// Distinct edge types present in the graph.
    pub fn edge_types(&self) -> &[EdgeType] {
        &self.edge_types
    }

    pub(crate) fn csr(&self) -> (&[usize], &[usize], &[usize]) {
        (&self.offsets, &self.targets, &self.edge_type_ids)
    }

    /// Line-oriented dump, one `edge <tag>/<id> <tag>/<id> <type>` per edge,
    /// sorted lexicographically.
    pub fn canonical_dump(&self) -> String {
        let mut lines: Vec<String> = (0..self.vertex_count())
            .flat_map(|s| {
                self.out_edges(s).map(move |(t, ty)| {
                    let (a, b) = (&self.vertices[s], &self.vertices[t]);
                    format!("edge {}/{} {}/{} {}", a.tag, a.id, b.tag, b.id, ty)
                })
            })
            .collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

/// Positive weight per (interaction, direction).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: BTreeMap<EdgeKey, f64>,
}

impl WeightVector {
    pub fn new(weights: BTreeMap<EdgeKey, f64>) -> Result<Self> {
        for (key, &value) in &weights {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidWeight {
                    key: key.to_string(),
                    value,
                });
            }
        }
        Ok(WeightVector { weights })
    }

    /// Every registered edge type at the same weight.
    pub fn uniform(registry: &EdgeTypeRegistry, value: f64) -> Result<Self> {
        Self::new(registry.edge_keys().iter().map(|k| (k.clone(), value)).collect())
    }

    pub fn get(&self, key: &EdgeKey) -> Option<f64> {
        self.weights.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EdgeKey, f64)> {
        self.weights.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.weights.iter().map(|(k, &v)| (k.clone(), v * factor)).collect())
    }

    /// Fails when some registered edge type has no weight.
    pub fn check_covers(&self, registry: &EdgeTypeRegistry) -> Result<()> {
        match registry.edge_keys().iter().find(|k| !self.weights.contains_key(k)) {
            Some(k) => Err(Error::MissingWeight(k.to_string())),
            None => Ok(()),
        }
    }
}

/// Weight of a (possibly composite) edge type: the sum of its constituents.
pub fn resolve_weight(edge_type: &EdgeType, weights: &WeightVector) -> Result<f64> {
    edge_type.parts().iter().try_fold(0.0, |acc, key| {
        weights
            .get(key)
            .map(|w| acc + w)
            .ok_or_else(|| Error::MissingWeight(key.to_string()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(secs: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_600_000_000 + secs, 0).unwrap()
    }

    fn def(name: &str, source: &str, target: &str, two_way: bool) -> InteractionDef {
        InteractionDef {
            name: name.into(),
            source: source.into(),
            target: target.into(),
            two_way,
        }
    }

    fn schema(defs: Vec<InteractionDef>) -> Schema {
        Schema {
            user_tag: "user".into(),
            tags: vec!["user".into(), "course".into(), "post".into(), "comment".into()],
            interactions: defs,
        }
    }

    fn social() -> EdgeTypeRegistry {
        register_schema(&schema(vec![
            def("follow_course", "user", "course", true),
            def("follow_user", "user", "user", false),
            def("create_post", "user", "post", true),
            def("like_post", "user", "post", true),
            def("comment_under_post", "comment", "post", true),
        ]))
        .unwrap()
    }

    #[test]
    fn two_way_interaction_registers_both_directions() {
        let reg = register_schema(&schema(vec![def("follow_course", "user", "course", true)])).unwrap();
        assert_eq!(
            reg.edge_keys(),
            &[EdgeKey::out("follow_course"), EdgeKey::inbound("follow_course")]
        );
    }

    #[test]
    fn one_way_interaction_registers_out_only() {
        let reg = social();
        assert!(reg.contains(&EdgeKey::out("follow_user")));
        assert!(!reg.contains(&EdgeKey::inbound("follow_user")));
        assert_eq!(reg.len(), 9);
    }

    #[test]
    fn empty_schema_gives_empty_registry() {
        let reg = register_schema(&schema(vec![])).unwrap();
        assert!(reg.is_empty());
    }

    #[test]
    fn schema_errors() {
        let dup = schema(vec![
            def("follow_course", "user", "course", true),
            def("follow_course", "user", "course", false),
        ]);
        assert!(matches!(register_schema(&dup), Err(Error::Schema(_))));
        let unknown = schema(vec![def("rate", "user", "resource", true)]);
        assert!(matches!(register_schema(&unknown), Err(Error::Schema(_))));
        let mut empty_tag = schema(vec![]);
        empty_tag.tags.push(String::new());
        assert!(register_schema(&empty_tag).is_err());
    }

    #[test]
    fn empty_records_give_empty_graph() {
        let g = build_graph(&[], &social()).unwrap();
        assert_eq!(g.vertex_count(), 0);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.canonical_dump(), "");
    }

    #[test]
    fn single_follow_gives_two_edges() {
        let recs = [InteractionRecord::new("u1", "c1", "course", "follow_course", ts(0))];
        let g = build_graph(&recs, &social()).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(
            g.canonical_dump(),
            "edge course/c1 user/u1 follow_course:in\nedge user/u1 course/c1 follow_course:out\n"
        );
    }

    #[test]
    fn distinct_interactions_on_a_pair_become_composite() {
        let recs = [
            InteractionRecord::new("u", "p", "post", "create_post", ts(0)),
            InteractionRecord::new("u", "p", "post", "like_post", ts(1)),
        ];
        let g = build_graph(&recs, &social()).unwrap();
        assert_eq!(g.edge_count(), 2);
        let u = g.find("user", "u").unwrap();
        let (_, ty) = g.out_edges(u).next().unwrap();
        assert!(ty.is_composite());
        assert_eq!(ty.to_string(), "create_post:out+like_post:out");
        assert_eq!(ty.direction(), Some(Direction::Out));

        let mut w = BTreeMap::new();
        w.insert(EdgeKey::out("create_post"), 1.11);
        w.insert(EdgeKey::out("like_post"), 1.27);
        let w = WeightVector::new(w).unwrap();
        assert!((resolve_weight(ty, &w).unwrap() - 2.38).abs() < 1e-12);
    }

    #[test]
    fn repeated_identical_interaction_is_deduplicated() {
        let recs = [
            InteractionRecord::new("u", "c", "course", "follow_course", ts(0)),
            InteractionRecord::new("u", "c", "course", "follow_course", ts(5)),
        ];
        let g = build_graph(&recs, &social()).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.edge_types().iter().all(|t| !t.is_composite()));
    }

    #[test]
    fn one_way_follow_has_no_reverse_edge() {
        let recs = [InteractionRecord::new("a", "b", "user", "follow_user", ts(0))];
        let g = build_graph(&recs, &social()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.canonical_dump(), "edge user/a user/b follow_user:out\n");
    }

    #[test]
    fn object_object_relation_uses_declared_source_tag() {
        let recs = [InteractionRecord::new("m1", "p1", "post", "comment_under_post", ts(0))];
        let g = build_graph(&recs, &social()).unwrap();
        assert!(g.find("comment", "m1").is_some());
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn build_errors() {
        let reg = social();
        let unregistered = [InteractionRecord::new("u", "x", "course", "teach", ts(0))];
        assert!(matches!(build_graph(&unregistered, &reg), Err(Error::Data(_))));
        let self_loop = [InteractionRecord::new("u", "u", "user", "follow_user", ts(0))];
        assert!(matches!(build_graph(&self_loop, &reg), Err(Error::Data(_))));
        let wrong_tag = [InteractionRecord::new("u", "p", "course", "like_post", ts(0))];
        assert!(build_graph(&wrong_tag, &reg).is_err());
    }

    #[test]
    fn resolve_singletons() {
        let mut w = BTreeMap::new();
        w.insert(EdgeKey::out("follow_course"), 0.73);
        w.insert(EdgeKey::inbound("follow_course"), 1.0);
        let w = WeightVector::new(w).unwrap();
        let out = EdgeType::single(EdgeKey::out("follow_course"));
        assert_eq!(resolve_weight(&out, &w).unwrap(), 0.73);
        let inbound = EdgeType::single(EdgeKey::inbound("follow_course"));
        assert_eq!(resolve_weight(&inbound, &w).unwrap(), 1.0);
        let missing = EdgeType::single(EdgeKey::out("like_post"));
        assert!(matches!(resolve_weight(&missing, &w), Err(Error::MissingWeight(_))));
    }

    #[test]
    fn weights_must_be_positive() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let mut w = BTreeMap::new();
            w.insert(EdgeKey::out("x"), bad);
            assert!(WeightVector::new(w).is_err());
        }
    }

    #[test]
    fn edge_key_parsing() {
        assert_eq!("like_post:in".parse::<EdgeKey>().unwrap(), EdgeKey::inbound("like_post"));
        assert!("like_post".parse::<EdgeKey>().is_err());
        assert!("like_post:up".parse::<EdgeKey>().is_err());
    }
}
