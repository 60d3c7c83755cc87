//! Analytic engine behind the interactive MA plot.
//!
//! The crate is organised along the analysis loop:
//!
//! - [`ma`]: M/A values, significance classes and the shade ramp
//! - [`ingest`]: CSV parsing into an immutable [`Dataset`]
//! - [`selection`]: lasso, box and name-search selections and their combination
//! - [`filter`]: top-K and M/A range filters
//! - [`session`]: the mutable analysis state (alpha, selections, tracked genes, notes)
//! - [`export`]: gene CSV, JSON session bundle and SVG rendering
//!
//! Everything except [`SessionState`] is immutable once built, and all
//! operations are plain functions over borrowed data.

pub mod export;
pub mod filter;
pub mod ingest;
pub mod ma;
pub mod selection;
pub mod session;

pub use export::{export_csv, export_session, import_session, render_svg, SessionBundle, SvgOptions, Viewport};
pub use filter::{apply_filter, filter_range, filter_top_k, FilterSpec, RangeMode, RangeSpec, RankOrder};
pub use ingest::{dataset_summary, parse_csv, Dataset, DatasetId, DatasetSummary, GeneRecord, IngestOptions, IngestReport};
pub use ma::{classify, compute_ma, shade, Classification, Intensity, MaPoint, PValue, ShadedColor, SignificanceLevel};
pub use selection::{
    combine, point_in_polygon, search_names, select_box, select_lasso, select_search, BoxRegion, CombineOp, Origin,
    Polygon, Selection, SelectionId, SelectionSet,
};
pub use session::{Action, Event, SessionId, SessionState};
