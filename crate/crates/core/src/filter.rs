//! Top-K significance and M/A range filters.
//!
//! Both filters take any gene set over a dataset, so a tracked set can be
//! refined by further filtering.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Dataset, DatasetId, GeneRecord};
use crate::selection::{Origin, Selection, SelectionSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("invalid filter: {reason}")]
    InvalidFilter { reason: String },
    #[error("unknown gene {name:?}")]
    UnknownGene { name: String },
    #[error("selection belongs to dataset {found}, expected {expected}")]
    MixedDatasets { expected: DatasetId, found: DatasetId },
}

impl FilterError {
    pub fn code(&self) -> &'static str {
        match self {
            FilterError::InvalidFilter { .. } => "InvalidFilter",
            FilterError::UnknownGene { .. } => "UnknownGene",
            FilterError::MixedDatasets { .. } => "MixedDatasets",
        }
    }
}

/// Ranking direction for top-K. `Ascending` puts the smallest p-values
/// (most significant genes) first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    Inside,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub m_min: f64,
    pub m_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub mode: RangeMode,
}

impl RangeSpec {
    fn inside(&self, r: &GeneRecord) -> bool {
        self.m_min <= r.m && r.m <= self.m_max && self.a_min <= r.a && r.a <= self.a_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSpec {
    TopK {
        k: usize,
        #[serde(default)]
        order: RankOrder,
    },
    Range(RangeSpec),
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), FilterError> {
        match self {
            FilterSpec::TopK { .. } => Ok(()),
            FilterSpec::Range(r) => {
                let bounds = [r.m_min, r.m_max, r.a_min, r.a_max];
                if bounds.iter().any(|v| v.is_nan()) {
                    return Err(FilterError::InvalidFilter {
                        reason: "range bounds must not be NaN".into(),
                    });
                }
                if r.m_min > r.m_max || r.a_min > r.a_max {
                    return Err(FilterError::InvalidFilter {
                        reason: format!(
                            "empty range: m [{}, {}], a [{}, {}]",
                            r.m_min, r.m_max, r.a_min, r.a_max
                        ),
                    });
                }
                Ok(())
            }
        }
    }
}

fn resolve<'d>(d: &'d Dataset, input: &BTreeSet<String>) -> Result<Vec<&'d GeneRecord>, FilterError> {
    input
        .iter()
        .map(|name| {
            d.get(name).ok_or_else(|| FilterError::UnknownGene { name: name.clone() })
        })
        .collect()
}

fn top_k_of(mut ranked: Vec<(f64, &str)>, k: usize, order: RankOrder) -> BTreeSet<String> {
    let cmp = |x: &(f64, &str), y: &(f64, &str)| -> Ordering {
        let by_p = match order {
            RankOrder::Ascending => x.0.total_cmp(&y.0),
            RankOrder::Descending => y.0.total_cmp(&x.0),
        };
        by_p.then_with(|| x.1.cmp(y.1))
    };
    if k == 0 {
        return BTreeSet::new();
    }
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, cmp);
        ranked.truncate(k);
    }
    ranked.into_iter().map(|(_, name)| name.to_owned()).collect()
}

/// Keeps the first `k` genes ranked by p-value, ties broken by name. Genes
/// with a missing p-value are never ranked.
pub fn filter_top_k(
    d: &Dataset,
    input: &BTreeSet<String>,
    k: usize,
    order: RankOrder,
) -> Result<BTreeSet<String>, FilterError> {
    let ranked = resolve(d, input)?
        .into_iter()
        .filter_map(|r| r.p.get().map(|p| (p, r.name.as_str())))
        .collect();
    Ok(top_k_of(ranked, k, order))
}

/// Inside keeps genes within the inclusive bounds; Outside keeps the rest of
/// the input.
pub fn filter_range(
    d: &Dataset,
    input: &BTreeSet<String>,
    spec: &RangeSpec,
) -> Result<BTreeSet<String>, FilterError> {
    FilterSpec::Range(*spec).validate()?;
    let want_inside = spec.mode == RangeMode::Inside;
    Ok(resolve(d, input)?
        .into_iter()
        .filter(|r| spec.inside(r) == want_inside)
        .map(|r| r.name.clone())
        .collect())
}

/// Applies `spec` to a stored selection, or to the whole dataset when
/// `source` is `None`.
pub fn apply_filter(
    d: &Dataset,
    source: Option<&SelectionSet>,
    spec: &FilterSpec,
) -> Result<Selection, FilterError> {
    spec.validate()?;
    let members = match source {
        Some(s) => {
            if &s.dataset_id != d.id() {
                return Err(FilterError::MixedDatasets {
                    expected: d.id().clone(),
                    found: s.dataset_id.clone(),
                });
            }
            match spec {
                FilterSpec::TopK { k, order } => filter_top_k(d, &s.members, *k, *order)?,
                FilterSpec::Range(r) => filter_range(d, &s.members, r)?,
            }
        }
        None => match spec {
            FilterSpec::TopK { k, order } => {
                let ranked = d
                    .records()
                    .iter()
                    .filter_map(|r| r.p.get().map(|p| (p, r.name.as_str())))
                    .collect();
                top_k_of(ranked, *k, *order)
            }
            FilterSpec::Range(r) => {
                let want_inside = r.mode == RangeMode::Inside;
                d.records()
                    .iter()
                    .filter(|rec| r.inside(rec) == want_inside)
                    .map(|rec| rec.name.clone())
                    .collect()
            }
        },
    };
    Ok(Selection {
        dataset_id: d.id().clone(),
        members,
        origin: Origin::Filter {
            spec: spec.clone(),
            source: source.map(|s| s.id.clone()),
        },
    })
}
