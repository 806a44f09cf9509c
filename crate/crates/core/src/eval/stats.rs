use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeTypeRegistry, InteractionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub users: usize,
    pub objects: usize,
    pub interactions: usize,
    /// `1 - interactions / (users * objects)`.
    pub sparsity: f64,
    pub per_type: BTreeMap<String, usize>,
}

/// Users are distinct actors carrying the user tag; objects are every other
/// distinct (tag, id) that appears in the log.
pub fn dataset_stats(records: &[InteractionRecord], registry: &EdgeTypeRegistry) -> Result<DatasetStats> {
    if records.is_empty() {
        return Err(Error::Data("no interaction records".into()));
    }
    let user_tag = registry.user_tag().as_str();
    let mut users = BTreeSet::new();
    let mut objects = BTreeSet::new();
    let mut per_type = BTreeMap::new();
    for r in records {
        let def = registry
            .interaction(&r.interaction)
            .ok_or_else(|| Error::Data(format!("unregistered interaction `{}`", r.interaction)))?;
        if def.source == user_tag {
            users.insert(r.user_id.as_str());
        } else {
            objects.insert((def.source.as_str(), r.user_id.as_str()));
        }
        if r.object_tag != user_tag {
            objects.insert((r.object_tag.as_str(), r.object_id.as_str()));
        }
        *per_type.entry(r.interaction.clone()).or_insert(0) += 1;
    }
    let cells = users.len() as f64 * objects.len() as f64;
    let sparsity = if cells > 0.0 { 1.0 - records.len() as f64 / cells } else { 0.0 };
    Ok(DatasetStats {
        users: users.len(),
        objects: objects.len(),
        interactions: records.len(),
        sparsity,
        per_type,
    })
}

impl DatasetStats {
    /// Plain-text table: one row per interaction type with its share.
    pub fn table(&self) -> String {
        let width = self.per_type.keys().map(String::len).max().unwrap_or(0).max(11);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>7}", "interaction", "count", "share");
        for (name, &n) in &self.per_type {
            let share = 100.0 * n as f64 / self.interactions as f64;
            let _ = writeln!(out, "{name:<width$}  {n:>9}  {share:>6.2}%");
        }
        let _ = writeln!(
            out,
            "\nusers {}  objects {}  interactions {}  sparsity {:.3}",
            self.users, self.objects, self.interactions, self.sparsity
        );
        out
    }
}
