//! Train / validation / test partitions.
//!
//! Test cases are cut per user: once a user's held-out interaction is chosen,
//! every record that user made at or after its timestamp leaves the training
//! data. Validation cases come from the training remainder by the same rule.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeTypeRegistry, InteractionRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub user: String,
    pub truth: BTreeSet<String>,
    pub cut: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSplit {
    /// Everything available for fitting the final model.
    pub train: Vec<InteractionRecord>,
    /// `train` with validation cases held out, used to tune weights.
    pub fit_train: Vec<InteractionRecord>,
    pub validation: Vec<EvalCase>,
    pub test: Vec<EvalCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Each user's latest target interaction, for users with more than one.
    LeaveOneOut { interaction: String, target_tag: String },
    /// The latest `fraction` of target-interaction events, an event being
    /// all of one user's target records sharing a timestamp.
    Temporal {
        interaction: String,
        target_tag: String,
        fraction: f64,
    },
}

impl SplitSpec {
    pub fn interaction(&self) -> &str {
        match self {
            SplitSpec::LeaveOneOut { interaction, .. } | SplitSpec::Temporal { interaction, .. } => interaction,
        }
    }

    pub fn target_tag(&self) -> &str {
        match self {
            SplitSpec::LeaveOneOut { target_tag, .. } | SplitSpec::Temporal { target_tag, .. } => target_tag,
        }
    }

    fn holdout(&self, records: &[InteractionRecord], registry: &EdgeTypeRegistry) -> Result<Holdout> {
        match self {
            SplitSpec::LeaveOneOut { interaction, target_tag } => {
                leave_one_out(records, interaction, target_tag, registry)
            }
            SplitSpec::Temporal {
                interaction,
                target_tag,
                fraction,
            } => temporal(records, interaction, target_tag, *fraction, registry),
        }
    }

    /// Test cases from `records`, validation cases from what remains. Fails
    /// when no test case can be formed; an empty validation set is allowed.
    pub fn split(&self, records: &[InteractionRecord], registry: &EdgeTypeRegistry) -> Result<EvalSplit> {
        let test = self.holdout(records, registry)?;
        if test.cases.is_empty() {
            return Err(Error::Data(format!(
                "no user qualifies for a `{}` test case",
                self.interaction()
            )));
        }
        let (fit_train, validation) = self.validation_from(&test.train, registry)?;
        Ok(EvalSplit {
            train: test.train,
            fit_train,
            validation,
            test: test.cases,
        })
    }

    /// Applies the test rule to training data to carve out validation cases.
    pub fn validation_from(
        &self,
        train: &[InteractionRecord],
        registry: &EdgeTypeRegistry,
    ) -> Result<(Vec<InteractionRecord>, Vec<EvalCase>)> {
        match self.holdout(train, registry) {
            Ok(h) => Ok((h.train, h.cases)),
            Err(Error::Data(msg)) => {
                log::warn!("no validation cases: {msg}");
                Ok((train.to_vec(), Vec::new()))
            }
            Err(e) => Err(e),
        }
    }
}

struct Holdout {
    train: Vec<InteractionRecord>,
    cases: Vec<EvalCase>,
}

fn user_sourced(record: &InteractionRecord, registry: &EdgeTypeRegistry) -> Result<bool> {
    let def = registry
        .interaction(&record.interaction)
        .ok_or_else(|| Error::Data(format!("unregistered interaction `{}`", record.interaction)))?;
    Ok(def.source == registry.user_tag().as_str())
}

/// Input positions ordered by timestamp; equal timestamps keep input order.
fn chronological(records: &[InteractionRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| records[i].timestamp);
    order
}

fn is_target(r: &InteractionRecord, interaction: &str, target_tag: &str) -> bool {
    r.interaction == interaction && r.object_tag == target_tag
}

/// Drops user-made records at or after that user's cut.
fn purge(
    records: &[InteractionRecord],
    cuts: &HashMap<&str, DateTime<Utc>>,
    registry: &EdgeTypeRegistry,
) -> Result<Vec<InteractionRecord>> {
    let mut kept = Vec::with_capacity(records.len());
    for r in records {
        let leaks = match cuts.get(r.user_id.as_str()) {
            Some(&cut) => r.timestamp >= cut && user_sourced(r, registry)?,
            None => false,
        };
        if !leaks {
            kept.push(r.clone());
        }
    }
    Ok(kept)
}

fn leave_one_out(
    records: &[InteractionRecord],
    interaction: &str,
    target_tag: &str,
    registry: &EdgeTypeRegistry,
) -> Result<Holdout> {
    let mut per_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in chronological(records) {
        let r = &records[i];
        if is_target(r, interaction, target_tag) && user_sourced(r, registry)? {
            per_user.entry(r.user_id.as_str()).or_default().push(i);
        }
    }

    let mut cases = Vec::new();
    let mut cuts = HashMap::new();
    for (user, idx) in per_user.into_iter().filter(|(_, v)| v.len() > 1) {
        let last = &records[*idx.last().expect("non-empty")];
        cuts.insert(user, last.timestamp);
        cases.push(EvalCase {
            user: user.to_string(),
            truth: BTreeSet::from([last.object_id.clone()]),
            cut: last.timestamp,
        });
    }
    if cases.is_empty() {
        return Err(Error::Data(format!(
            "no user has more than one `{interaction}` interaction"
        )));
    }
    Ok(Holdout {
        train: purge(records, &cuts, registry)?,
        cases,
    })
}

/// Ceiling of `fraction * n`, tolerant to representation error in the product.
fn test_event_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

fn temporal(
    records: &[InteractionRecord],
    interaction: &str,
    target_tag: &str,
    fraction: f64,
    registry: &EdgeTypeRegistry,
) -> Result<Holdout> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must lie in (0, 1), got {fraction}")));
    }
    let mut events: BTreeMap<(DateTime<Utc>, &str), BTreeSet<String>> = BTreeMap::new();
    for r in records {
        if is_target(r, interaction, target_tag) && user_sourced(r, registry)? {
            events
                .entry((r.timestamp, r.user_id.as_str()))
                .or_default()
                .insert(r.object_id.clone());
        }
    }
    if events.len() < 2 {
        return Err(Error::Data(format!(
            "need at least two `{interaction}` events, found {}",
            events.len()
        )));
    }

    let n_test = test_event_count(fraction, events.len());
    let skip = events.len() - n_test;
    let mut cases = Vec::with_capacity(n_test);
    let mut cuts: HashMap<&str, DateTime<Utc>> = HashMap::new();
    for ((ts, user), items) in events.into_iter().skip(skip) {
        cuts.entry(user).and_modify(|c| *c = (*c).min(ts)).or_insert(ts);
        cases.push(EvalCase {
            user: user.to_string(),
            truth: items,
            cut: ts,
        });
    }
    cases.sort_by(|a, b| (&a.user, a.cut).cmp(&(&b.user, b.cut)));
    Ok(Holdout {
        train: purge(records, &cuts, registry)?,
        cases,
    })
}

pub fn split_leave_one_out(
    records: &[InteractionRecord],
    interaction: &str,
    target_tag: &str,
    registry: &EdgeTypeRegistry,
) -> Result<EvalSplit> {
    SplitSpec::LeaveOneOut {
        interaction: interaction.to_string(),
        target_tag: target_tag.to_string(),
    }
    .split(records, registry)
}

pub fn split_temporal(
    records: &[InteractionRecord],
    interaction: &str,
    target_tag: &str,
    fraction: f64,
    registry: &EdgeTypeRegistry,
) -> Result<EvalSplit> {
    SplitSpec::Temporal {
        interaction: interaction.to_string(),
        target_tag: target_tag.to_string(),
        fraction,
    }
    .split(records, registry)
}

/// Training records made by a case's user at or after that case's cut.
pub fn leakage_violations<'a>(
    train: &'a [InteractionRecord],
    cases: &[EvalCase],
    registry: &EdgeTypeRegistry,
) -> Result<Vec<&'a InteractionRecord>> {
    let mut earliest: HashMap<&str, DateTime<Utc>> = HashMap::new();
    for c in cases {
        earliest
            .entry(c.user.as_str())
            .and_modify(|t| *t = (*t).min(c.cut))
            .or_insert(c.cut);
    }
    let mut bad = Vec::new();
    for r in train {
        if let Some(&cut) = earliest.get(r.user_id.as_str()) {
            if r.timestamp >= cut && user_sourced(r, registry)? {
                bad.push(r);
            }
        }
    }
    Ok(bad)
}

/// Seeded uniform sample of `round(fraction * n)` records, in input order.
pub fn subsample_training(records: &[InteractionRecord], fraction: f64, seed: u64) -> Result<Vec<InteractionRecord>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("sample fraction must lie in (0, 1], got {fraction}")));
    }
    if fraction == 1.0 {
        return Ok(records.to_vec());
    }
    let keep = (fraction * records.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, records.len(), keep).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| records[i].clone()).collect())
}
