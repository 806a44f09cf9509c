//! Non-graph reference recommenders: global popularity and user-based
//! nearest neighbors over binarized interaction sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::Result;
use crate::graph::{EdgeTypeRegistry, InteractionRecord};
use crate::recommend::{
    by_score_then_id, passes_filters, rank_key, rank_by_neighbor_frequency, RankedItem, RankedList,
    RecommendationRequest,
};

type ObjectKey = (String, String);

/// Per-user binarized interaction sets and per-object interaction counts,
/// derived from training records. Only records whose source is a user count.
#[derive(Debug, Clone, Default)]
pub struct InteractionView {
    user_tag: String,
    users: BTreeMap<String, BTreeMap<ObjectKey, BTreeSet<String>>>,
    objects: BTreeMap<ObjectKey, usize>,
}

impl InteractionView {
    pub fn from_records(records: &[InteractionRecord], registry: &EdgeTypeRegistry) -> Result<Self> {
        let user_tag = registry.user_tag().as_str().to_string();
        let mut users: BTreeMap<String, BTreeMap<ObjectKey, BTreeSet<String>>> = BTreeMap::new();
        let mut objects: BTreeMap<ObjectKey, usize> = BTreeMap::new();
        for r in records {
            let def = registry.interaction(&r.interaction).ok_or_else(|| {
                crate::Error::Data(format!("unregistered interaction `{}`", r.interaction))
            })?;
            let obj = (r.object_tag.clone(), r.object_id.clone());
            if def.source != user_tag {
                objects.entry(obj).or_insert(0);
                objects.entry((def.source.clone(), r.user_id.clone())).or_insert(0);
                continue;
            }
            let fresh = users
                .entry(r.user_id.clone())
                .or_default()
                .entry(obj.clone())
                .or_default()
                .insert(r.interaction.clone());
            let count = objects.entry(obj).or_insert(0);
            if fresh {
                *count += 1;
            }
        }
        Ok(InteractionView {
            user_tag,
            users,
            objects,
        })
    }

    pub fn user_tag(&self) -> &str {
        &self.user_tag
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.users.keys().map(String::as_str)
    }

    pub fn contains_user(&self, user: &str) -> bool {
        self.users.contains_key(user)
    }

    /// Whether `user` interacted with `tag/item` through one of
    /// `interactions` (through anything when the set is empty).
    pub fn has_interacted(&self, user: &str, tag: &str, item: &str, interactions: &BTreeSet<String>) -> bool {
        let Some(objs) = self.users.get(user) else {
            return false;
        };
        match objs.get(&(tag.to_string(), item.to_string())) {
            Some(done) if interactions.is_empty() => !done.is_empty(),
            Some(done) => done.iter().any(|i| interactions.contains(i)),
            None => false,
        }
    }

    /// Ids of `tag` objects the user interacted with, ascending.
    pub fn items_of<'a>(&'a self, user: &str, tag: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.users
            .get(user)
            .into_iter()
            .flat_map(move |objs| objs.keys().filter(move |(t, _)| t == tag).map(|(_, id)| id.as_str()))
    }

    fn objects_of(&self, user: &str) -> Option<&BTreeMap<ObjectKey, BTreeSet<String>>> {
        self.users.get(user)
    }

    /// Interaction count of every known `tag` object (distinct user,
    /// interaction pairs), ascending by id.
    pub fn popularity(&self, tag: &str) -> impl Iterator<Item = (&str, usize)> + '_ {
        let tag = tag.to_string();
        self.objects
            .iter()
            .filter(move |((t, _), _)| *t == tag)
            .map(|((_, id), &n)| (id.as_str(), n))
    }

    /// Cosine similarity between two users' binarized interaction sets.
    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let (Some(x), Some(y)) = (self.objects_of(a), self.objects_of(b)) else {
            return 0.0;
        };
        if x.is_empty() || y.is_empty() {
            return 0.0;
        }
        let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
        let shared = small.keys().filter(|k| large.contains_key(*k)).count();
        shared as f64 / ((x.len() as f64).sqrt() * (y.len() as f64).sqrt())
    }
}

/// Items of the target tag by global interaction count.
pub fn most_popular(view: &InteractionView, request: &RecommendationRequest) -> RankedList {
    let mut items: Vec<RankedItem> = view
        .popularity(&request.target_tag)
        .filter(|(id, _)| passes_filters(&request.filters, view, &request.user, &request.target_tag, id))
        .map(|(id, n)| RankedItem {
            id: id.to_string(),
            score: n as f64,
        })
        .collect();
    items.sort_by(by_score_then_id);
    items.truncate(request.k);
    RankedList { items }
}

/// User-based kNN. Users without training interactions get the popularity
/// list.
pub fn ubknn_recommend(view: &InteractionView, request: &RecommendationRequest, neighbors: usize) -> RankedList {
    let Some(mine) = view.objects_of(&request.user).filter(|m| !m.is_empty()) else {
        log::debug!("ubknn: cold user `{}`, using popularity", request.user);
        return most_popular(view, request);
    };

    // Only users sharing at least one object can have non-zero similarity.
    let mut overlap: HashMap<&str, usize> = HashMap::new();
    for (other, objs) in &view.users {
        if *other == request.user {
            continue;
        }
        let (small, large) = if mine.len() <= objs.len() { (mine, objs) } else { (objs, mine) };
        let shared = small.keys().filter(|k| large.contains_key(*k)).count();
        if shared > 0 {
            overlap.insert(other.as_str(), shared);
        }
    }
    let norm = (mine.len() as f64).sqrt();
    let mut sims: Vec<(&str, f64)> = overlap
        .into_iter()
        .map(|(u, shared)| (u, shared as f64 / (norm * (view.users[u].len() as f64).sqrt())))
        .collect();
    sims.sort_by(|a, b| rank_key(b.1).cmp(&rank_key(a.1)).then_with(|| a.0.cmp(b.0)));
    sims.truncate(neighbors);

    rank_by_neighbor_frequency(view, request, sims.into_iter())
}
