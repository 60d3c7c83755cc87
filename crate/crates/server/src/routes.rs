use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tower_http::cors::CorsLayer;
use uuid::Uuid;

use maplot_core::export::{export_csv, export_session, import_session, render_svg, SvgOptions, Viewport};
use maplot_core::ingest::{dataset_summary, parse_csv, Dataset, DatasetId, DatasetSummary};
use maplot_core::ma::{Palette, SignificanceLevel};
use maplot_core::selection::{search_names, Origin, SelectionId};
use maplot_core::session::{SessionId, SessionState};

use crate::error::ApiError;
use crate::state::AppState;
use crate::wire::*;

/// JSON body extractor whose rejections use the service error format.
pub struct ApiJson<T>(pub T);

impl<T, S> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rej) if rej.status() == StatusCode::PAYLOAD_TOO_LARGE => Err(payload_too_large()),
            Err(rej) => Err(ApiError::bad_request(rej.body_text())),
        }
    }
}

/// Query string extractor with the service error format.
pub struct ApiQuery<T>(pub T);

impl<T, S> FromRequestParts<S> for ApiQuery<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _state: &S) -> Result<Self, ApiError> {
        Query::<T>::try_from_uri(&parts.uri)
            .map(|Query(v)| ApiQuery(v))
            .map_err(|rej| ApiError::bad_request(rej.body_text()))
    }
}

fn payload_too_large() -> ApiError {
    ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "PayloadTooLarge", "request body exceeds the size limit")
}

fn body(body: Result<Bytes, BytesRejection>) -> Result<Bytes, ApiError> {
    body.map_err(|rej| {
        if rej.status() == StatusCode::PAYLOAD_TOO_LARGE {
            payload_too_large()
        } else {
            ApiError::bad_request(rej.body_text())
        }
    })
}

fn alpha_or_default(alpha: Option<f64>) -> Result<SignificanceLevel, ApiError> {
    Ok(SignificanceLevel::new(alpha.unwrap_or(DEFAULT_ALPHA))?)
}

fn attachment(content_type: &'static str, filename: String, body: impl IntoResponse) -> Response {
    (
        [
            (header::CONTENT_TYPE, content_type.to_owned()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{filename}\"")),
        ],
        body,
    )
        .into_response()
}

pub fn router(state: AppState) -> Router {
    let limit = state.config().max_upload_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/api/config", get(service_info))
        .route("/api/datasets", post(upload_dataset))
        .route("/api/datasets/{id}/summary", get(summary))
        .route("/api/datasets/{id}/points", get(dataset_points))
        .route("/api/datasets/{id}/search", get(search))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/import", post(import))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/alpha", put(set_alpha))
        .route("/api/sessions/{id}/points", get(session_points))
        .route("/api/sessions/{id}/selections", post(add_selection))
        .route("/api/sessions/{id}/selections/{sel}", get(get_selection))
        .route("/api/sessions/{id}/combine", post(combine))
        .route("/api/sessions/{id}/filter", post(filter))
        .route("/api/sessions/{id}/track", post(track))
        .route("/api/sessions/{id}/expand", post(expand))
        .route("/api/sessions/{id}/notes", get(get_notes).put(set_notes))
        .route("/api/sessions/{id}/export/csv", get(export_csv_route))
        .route("/api/sessions/{id}/export/session", get(export_session_route))
        .route("/api/sessions/{id}/export/svg", get(export_svg))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(DefaultBodyLimit::max(limit))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::not_found("NotFound", "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed on this route")
}

async fn health() -> &'static str {
    "ok"
}

async fn service_info(State(state): State<AppState>) -> Json<ServiceInfo> {
    let c = state.config();
    Json(ServiceInfo {
        alpha_presets: SignificanceLevel::PRESETS.to_vec(),
        default_alpha: DEFAULT_ALPHA,
        shade_depth: c.shade_depth,
        page_size: c.page_size,
        max_rows: c.max_rows,
        palette: Palette::default(),
    })
}

async fn upload_dataset(
    State(state): State<AppState>,
    raw: Result<Bytes, BytesRejection>,
) -> Result<(StatusCode, Json<UploadResponse>), ApiError> {
    let raw = body(raw)?;
    let options = state.config().ingest_options();
    let (dataset, report) = tokio::task::spawn_blocking(move || parse_csv(&raw, &options))
        .await
        .expect("ingest task panicked")?;
    let dataset = state.insert_dataset(dataset);
    tracing::info!(dataset = %dataset.id(), genes = dataset.len(), "dataset uploaded");
    let summary = dataset_summary(&dataset, alpha_or_default(None)?);
    Ok((
        StatusCode::CREATED,
        Json(UploadResponse {
            dataset_id: dataset.id().clone(),
            report,
            summary,
        }),
    ))
}

async fn summary(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<AlphaQuery>,
) -> Result<Json<DatasetSummary>, ApiError> {
    let d = state.dataset(&DatasetId::from(id.as_str()))?;
    Ok(Json(dataset_summary(&d, alpha_or_default(q.alpha)?)))
}

async fn dataset_points(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<PageQuery>,
) -> Result<Json<PointsPage>, ApiError> {
    let d = state.dataset(&DatasetId::from(id.as_str()))?;
    let c = state.config();
    let alpha = alpha_or_default(q.alpha)?;
    Ok(Json(PointsPage::build(
        &d,
        alpha,
        q.page,
        c.page_size,
        c.shade_depth,
        &Palette::default(),
        None,
    )))
}

async fn search(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<SearchQuery>,
) -> Result<Json<SearchResponse>, ApiError> {
    let d = state.dataset(&DatasetId::from(id.as_str()))?;
    let hits = search_names(&d, &q.q);
    let total = hits.len();
    let matches = hits
        .into_iter()
        .take(q.limit.unwrap_or(usize::MAX))
        .map(str::to_owned)
        .collect();
    Ok(Json(SearchResponse {
        query: q.q,
        total,
        matches,
    }))
}

async fn create_session(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateSession>,
) -> Result<(StatusCode, Json<MutationResponse>), ApiError> {
    let d = state.dataset(&req.dataset_id)?;
    let id = SessionId(format!("s-{}", Uuid::new_v4().simple()));
    let s = SessionState::new(id, &d, req.alpha.unwrap_or(DEFAULT_ALPHA))?;
    state.persist(&s, &d);
    let response = MutationResponse {
        session: SessionSummary::new(&s, &d),
        selection: None,
    };
    state.insert_session(s);
    Ok((StatusCode::CREATED, Json(response)))
}

async fn import(
    State(state): State<AppState>,
    ApiQuery(q): ApiQuery<ImportQuery>,
    raw: Result<Bytes, BytesRejection>,
) -> Result<(StatusCode, Json<MutationResponse>), ApiError> {
    let raw = body(raw)?;
    let bundle = import_session(&raw)?;
    if q.verify {
        bundle.verify_replay()?;
    }
    let (session, d) = state.import(bundle);
    let s = session.read();
    state.persist(&s, &d);
    Ok((
        StatusCode::CREATED,
        Json(MutationResponse {
            session: SessionSummary::new(&s, &d),
            selection: None,
        }),
    ))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionSummary>, ApiError> {
    let (session, d) = state.session_with_dataset(&SessionId(id))?;
    let s = session.read();
    Ok(Json(SessionSummary::new(&s, &d)))
}

/// Runs `f` on the session under its write lock, persists the result and
/// builds the standard mutation response.
fn mutate<F>(state: &AppState, id: String, f: F) -> Result<Json<MutationResponse>, ApiError>
where
    F: FnOnce(&mut SessionState, &Dataset) -> Result<Option<SelectionView>, ApiError>,
{
    let (session, d) = state.session_with_dataset(&SessionId(id))?;
    let mut s = session.write();
    let selection = f(&mut s, &d)?;
    state.persist(&s, &d);
    Ok(Json(MutationResponse {
        session: SessionSummary::new(&s, &d),
        selection,
    }))
}

async fn set_alpha(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<SetAlpha>,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&state, id, |s, _| {
        s.set_alpha(req.alpha)?;
        Ok(None)
    })
}

async fn session_points(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<PageQuery>,
) -> Result<Json<PointsPage>, ApiError> {
    let (session, d) = state.session_with_dataset(&SessionId(id))?;
    let s = session.read();
    let alpha = match q.alpha {
        Some(a) => SignificanceLevel::new(a)?,
        None => s.alpha(),
    };
    let c = state.config();
    Ok(Json(PointsPage::build(
        &d,
        alpha,
        q.page,
        c.page_size,
        c.shade_depth,
        &Palette::default(),
        Some(&s),
    )))
}

fn add(s: &mut SessionState, d: &Dataset, origin: Origin, label: Option<String>) -> Result<Option<SelectionView>, ApiError> {
    Ok(Some(SelectionView::from(s.add_selection(d, origin, label)?)))
}

async fn add_selection(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<CreateSelection>,
) -> Result<Json<MutationResponse>, ApiError> {
    let origin = req.request.into_origin()?;
    mutate(&state, id, |s, d| add(s, d, origin, req.label))
}

async fn get_selection(
    State(state): State<AppState>,
    Path((id, sel)): Path<(String, String)>,
) -> Result<Json<SelectionView>, ApiError> {
    let session = state.session(&SessionId(id))?;
    let s = session.read();
    let set = s.selection(&SelectionId(sel))?;
    Ok(Json(SelectionView::from(set)))
}

async fn combine(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<CombineRequest>,
) -> Result<Json<MutationResponse>, ApiError> {
    let origin = Origin::Combine {
        op: req.op,
        inputs: req.ids,
    };
    mutate(&state, id, |s, d| add(s, d, origin, req.label))
}

async fn filter(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<FilterRequest>,
) -> Result<Json<MutationResponse>, ApiError> {
    let origin = Origin::Filter {
        spec: req.spec,
        source: req.source,
    };
    mutate(&state, id, |s, d| add(s, d, origin, req.label))
}

async fn track(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<TrackRequest>,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&state, id, |s, _| {
        s.track(&req.selection_id)?;
        Ok(None)
    })
}

async fn expand(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<TrackRequest>,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&state, id, |s, _| {
        s.expand_tracked(&req.selection_id)?;
        Ok(None)
    })
}

async fn get_notes(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Notes>, ApiError> {
    let session = state.session(&SessionId(id))?;
    let notes = session.read().notes().to_owned();
    Ok(Json(Notes { notes }))
}

async fn set_notes(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<Notes>,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&state, id, |s, _| {
        s.set_notes(req.notes)?;
        Ok(None)
    })
}

async fn export_csv_route(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<CsvQuery>,
) -> Result<Response, ApiError> {
    let (session, d) = state.session_with_dataset(&SessionId(id))?;
    let s = session.read();
    let (genes, stem) = match &q.selection {
        Some(sel) => (&s.selection(sel)?.members, sel.as_str().to_owned()),
        None => (s.tracked(), "tracked".to_owned()),
    };
    let csv = export_csv(&d, genes)?;
    Ok(attachment("text/csv; charset=utf-8", format!("{stem}.csv"), csv))
}

async fn export_session_route(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let (session, d) = state.session_with_dataset(&SessionId(id))?;
    let s = session.read();
    let bytes = export_session(&s, &d);
    Ok(attachment("application/json", format!("{}.json", s.id()), bytes))
}

async fn export_svg(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<ViewportQuery>,
) -> Result<Response, ApiError> {
    let (session, d) = state.session_with_dataset(&SessionId(id))?;
    let viewport = match (q.a_min, q.a_max, q.m_min, q.m_max) {
        (None, None, None, None) => None,
        (Some(a0), Some(a1), Some(m0), Some(m1)) => Some(Viewport::new(a0, a1, m0, m1)?),
        _ => {
            return Err(ApiError::bad_request(
                "viewport needs all of a_min, a_max, m_min and m_max",
            ))
        }
    };
    let opts = SvgOptions {
        shade_depth: state.config().shade_depth,
        ..SvgOptions::default()
    };
    let s = session.read();
    let svg = render_svg(&d, &s, viewport, &opts);
    Ok(attachment("image/svg+xml", format!("{}.svg", s.id()), svg))
}
