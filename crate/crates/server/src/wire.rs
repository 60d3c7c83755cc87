//! JSON request and response bodies.

use serde::{Deserialize, Serialize};

use maplot_core::filter::FilterSpec;
use maplot_core::ingest::{dataset_summary, ClassCounts, Dataset, DatasetId, DatasetSummary, IngestReport};
use maplot_core::ma::{classify, shade, BaseColor, Classification, Palette, SignificanceLevel};
use maplot_core::selection::{BoxRegion, CombineOp, Origin, Polygon, SelectionId, SelectionSet};
use maplot_core::session::{SessionId, SessionState};

use crate::error::ApiError;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub dataset_id: DatasetId,
    pub report: IngestReport,
    pub summary: DatasetSummary,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct AlphaQuery {
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PageQuery {
    pub alpha: Option<f64>,
    #[serde(default)]
    pub page: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadeView {
    pub base: BaseColor,
    pub intensity: f64,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointView {
    pub name: String,
    pub a: f64,
    pub m: f64,
    pub p: Option<f64>,
    pub classification: Classification,
    pub shade: ShadeView,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracked: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsPage {
    pub dataset_id: DatasetId,
    pub alpha: f64,
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub pages: usize,
    pub points: Vec<PointView>,
}

impl PointsPage {
    pub fn build(
        d: &Dataset,
        alpha: SignificanceLevel,
        page: usize,
        page_size: usize,
        depth: f64,
        palette: &Palette,
        session: Option<&SessionState>,
    ) -> PointsPage {
        let page_size = page_size.max(1);
        let total = d.len();
        let points = d
            .records()
            .iter()
            .skip(page.saturating_mul(page_size))
            .take(page_size)
            .map(|r| {
                let class = classify(r.point(), r.p, alpha);
                let sc = shade(class, r.p, alpha, depth);
                PointView {
                    name: r.name.clone(),
                    a: r.a,
                    m: r.m,
                    p: r.p.get(),
                    classification: class,
                    shade: ShadeView {
                        base: sc.base,
                        intensity: sc.intensity,
                        color: palette.color(sc).hex(),
                    },
                    tracked: session.map(|s| s.tracked().contains(&r.name)),
                }
            })
            .collect();
        PointsPage {
            dataset_id: d.id().clone(),
            alpha: alpha.value(),
            total,
            page,
            page_size,
            pages: total.div_ceil(page_size),
            points,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SearchQuery {
    #[serde(default)]
    pub q: String,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub total: usize,
    pub matches: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub dataset_id: DatasetId,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetAlpha {
    pub alpha: f64,
}

/// Selection gestures as sent by clients. Geometry is validated after
/// decoding so that bad shapes report a selection error, not a parse error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionRequest {
    Lasso {
        vertices: Vec<[f64; 2]>,
    },
    Box {
        a_min: f64,
        a_max: f64,
        m_min: f64,
        m_max: f64,
    },
    Search {
        query: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pick: Option<String>,
    },
    Tracked,
}

impl SelectionRequest {
    pub fn into_origin(self) -> Result<Origin, ApiError> {
        Ok(match self {
            SelectionRequest::Lasso { vertices } => Origin::Lasso {
                polygon: Polygon::new(vertices.into_iter().map(|[a, m]| (a, m)).collect())?,
            },
            SelectionRequest::Box {
                a_min,
                a_max,
                m_min,
                m_max,
            } => Origin::Box {
                region: BoxRegion::new(a_min, a_max, m_min, m_max)?,
            },
            SelectionRequest::Search { query, pick } => Origin::Search { query, pick },
            SelectionRequest::Tracked => Origin::Tracked,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSelection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub request: SelectionRequest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombineRequest {
    pub op: CombineOp,
    pub ids: Vec<SelectionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterRequest {
    pub spec: FilterSpec,
    /// Filters the whole dataset when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SelectionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackRequest {
    pub selection_id: SelectionId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Notes {
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionBrief {
    pub id: SelectionId,
    pub label: String,
    pub kind: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionView {
    pub id: SelectionId,
    pub label: String,
    pub origin: Origin,
    pub size: usize,
    pub members: Vec<String>,
}

impl From<&SelectionSet> for SelectionView {
    fn from(s: &SelectionSet) -> Self {
        SelectionView {
            id: s.id.clone(),
            label: s.label.clone(),
            origin: s.origin.clone(),
            size: s.members.len(),
            members: s.members.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: SessionId,
    pub dataset_id: DatasetId,
    pub alpha: f64,
    pub counts: ClassCounts,
    pub selections: Vec<SelectionBrief>,
    pub tracked: Vec<String>,
    pub notes_bytes: usize,
    pub events: usize,
}

impl SessionSummary {
    pub fn new(s: &SessionState, d: &Dataset) -> Self {
        SessionSummary {
            id: s.id().clone(),
            dataset_id: s.dataset_id().clone(),
            alpha: s.alpha().value(),
            counts: dataset_summary(d, s.alpha()).counts,
            selections: s
                .selections()
                .map(|sel| SelectionBrief {
                    id: sel.id.clone(),
                    label: sel.label.clone(),
                    kind: sel.origin.kind().to_owned(),
                    size: sel.members.len(),
                })
                .collect(),
            tracked: s.tracked().iter().cloned().collect(),
            notes_bytes: s.notes().len(),
            events: s.events().len(),
        }
    }
}

/// Body of every mutating session endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationResponse {
    pub session: SessionSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionView>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CsvQuery {
    /// Defaults to the tracked set.
    pub selection: Option<SelectionId>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ViewportQuery {
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub m_min: Option<f64>,
    pub m_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ImportQuery {
    /// Also replay the bundled event log and reject the bundle if it does
    /// not reproduce the stored state.
    #[serde(default)]
    pub verify: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceInfo {
    pub alpha_presets: Vec<f64>,
    pub default_alpha: f64,
    pub shade_depth: f64,
    pub page_size: usize,
    pub max_rows: usize,
    pub palette: Palette,
}
