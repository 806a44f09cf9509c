//! Top-k ranking metrics and per-model reports.
//!
//! A case may carry several relevant items (co-purchases). Hits count if any
//! relevant item is in the top k; reciprocal rank uses the first relevant one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::split::EvalCase;

fn check(truth: &BTreeSet<String>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("cutoff k must be at least 1".into()));
    }
    if truth.is_empty() {
        return Err(Error::Data("empty ground-truth set".into()));
    }
    Ok(())
}

fn first_hit(ranked: &[&str], truth: &BTreeSet<String>, k: usize) -> Option<usize> {
    ranked.iter().take(k).position(|id| truth.contains(*id))
}

pub fn reciprocal_rank_at_k(ranked: &[&str], truth: &BTreeSet<String>, k: usize) -> Result<f64> {
    check(truth, k)?;
    Ok(first_hit(ranked, truth, k).map_or(0.0, |r| 1.0 / (r + 1) as f64))
}

pub fn hit_at_k(ranked: &[&str], truth: &BTreeSet<String>, k: usize) -> Result<f64> {
    check(truth, k)?;
    Ok(if first_hit(ranked, truth, k).is_some() { 1.0 } else { 0.0 })
}

/// Binary-relevance nDCG with a log2 discount.
pub fn ndcg_at_k(ranked: &[&str], truth: &BTreeSet<String>, k: usize) -> Result<f64> {
    check(truth, k)?;
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| truth.contains(**id))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..truth.len().min(k)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    Ok(dcg / ideal)
}

pub fn average_precision_at_k(ranked: &[&str], truth: &BTreeSet<String>, k: usize) -> Result<f64> {
    check(truth, k)?;
    let mut hits = 0usize;
    let mut total = 0.0;
    for (i, id) in ranked.iter().take(k).enumerate() {
        if truth.contains(*id) {
            hits += 1;
            total += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(total / truth.len().min(k) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffScore {
    pub cutoff: usize,
    pub rr: f64,
    pub hit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: String,
    pub cut: chrono::DateTime<chrono::Utc>,
    pub fallback: bool,
    pub scores: Vec<CutoffScore>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mrr: f64,
    pub hr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub evaluated: usize,
    /// Cases answered by the popularity fallback because the user is unknown
    /// to the model.
    pub fallbacks: usize,
    pub metrics: BTreeMap<usize, Aggregate>,
    #[serde(skip)]
    pub per_user: Vec<UserMetrics>,
}

impl MetricsReport {
    /// Scores ranked lists against their cases at every cutoff. Aggregation
    /// sums over (user, cut) order so the result does not depend on the
    /// evaluation order.
    pub fn build(
        model: &str,
        cases: &[EvalCase],
        lists: &[(Vec<String>, bool)],
        cutoffs: &[usize],
    ) -> Result<Self> {
        if cases.len() != lists.len() {
            return Err(Error::Data(format!(
                "{} cases but {} ranked lists",
                cases.len(),
                lists.len()
            )));
        }
        if cutoffs.is_empty() {
            return Err(Error::Config("no cutoffs configured".into()));
        }
        let mut per_user = cases
            .iter()
            .zip(lists)
            .map(|(case, (list, fallback))| {
                let ranked: Vec<&str> = list.iter().map(String::as_str).collect();
                let scores = cutoffs
                    .iter()
                    .map(|&k| {
                        Ok(CutoffScore {
                            cutoff: k,
                            rr: reciprocal_rank_at_k(&ranked, &case.truth, k)?,
                            hit: hit_at_k(&ranked, &case.truth, k)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(UserMetrics {
                    user: case.user.clone(),
                    cut: case.cut,
                    fallback: *fallback,
                    scores,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        per_user.sort_by(|a, b| (&a.user, a.cut).cmp(&(&b.user, b.cut)));

        let n = per_user.len().max(1) as f64;
        let metrics = cutoffs
            .iter()
            .enumerate()
            .map(|(ci, &k)| {
                let (rr, hit) = per_user
                    .iter()
                    .fold((0.0, 0.0), |(r, h), u| (r + u.scores[ci].rr, h + u.scores[ci].hit));
                (k, Aggregate { mrr: rr / n, hr: hit / n })
            })
            .collect();
        Ok(MetricsReport {
            model: model.to_string(),
            evaluated: per_user.len(),
            fallbacks: per_user.iter().filter(|u| u.fallback).count(),
            metrics,
            per_user,
        })
    }

    pub fn mrr(&self, k: usize) -> Option<f64> {
        self.metrics.get(&k).map(|a| a.mrr)
    }

    pub fn hr(&self, k: usize) -> Option<f64> {
        self.metrics.get(&k).map(|a| a.hr)
    }
}
