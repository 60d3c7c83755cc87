//! Gene-list CSV, the JSON session bundle, and the static SVG plot.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Dataset, DatasetId, GeneRecord};
use crate::ma::{classify, shade, Classification, Palette, DEFAULT_SHADE_DEPTH};
use crate::session::{SessionError, SessionState};

pub const BUNDLE_FORMAT: &str = "maplot-session";
pub const BUNDLE_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExportError {
    #[error("unknown gene {name:?}")]
    UnknownGene { name: String },
    #[error("unsupported bundle version {version}")]
    UnsupportedVersion { version: String },
    #[error("corrupt bundle at {path}: {reason}")]
    CorruptBundle { path: String, reason: String },
    #[error("invalid viewport: {reason}")]
    InvalidViewport { reason: String },
}

impl ExportError {
    pub fn code(&self) -> &'static str {
        match self {
            ExportError::UnknownGene { .. } => "UnknownGene",
            ExportError::UnsupportedVersion { .. } => "UnsupportedVersion",
            ExportError::CorruptBundle { .. } => "CorruptBundle",
            ExportError::InvalidViewport { .. } => "InvalidViewport",
        }
    }
}

/// Shortest decimal text that parses back to exactly `v`. Very large and
/// very small magnitudes use exponent notation.
pub fn format_number(v: f64) -> String {
    let mag = v.abs();
    if v != 0.0 && !(1e-5..1e16).contains(&mag) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Writes `name,m,a,pvalue` rows for `genes` in dataset order. A missing
/// p-value is an empty field. The output parses back with `parse_csv`.
pub fn export_csv(d: &Dataset, genes: &BTreeSet<String>) -> Result<Vec<u8>, ExportError> {
    if let Some(name) = genes.iter().find(|n| !d.contains(n)) {
        return Err(ExportError::UnknownGene { name: name.clone() });
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| ExportError::CorruptBundle {
        path: "csv".into(),
        reason: e.to_string(),
    };
    w.write_record(["name", "m", "a", "pvalue"]).map_err(io)?;
    for r in d.records().iter().filter(|r| genes.contains(&r.name)) {
        let p = r.p.get().map(format_number).unwrap_or_default();
        w.write_record([r.name.as_str(), &format_number(r.m), &format_number(r.a), &p])
            .map_err(io)?;
    }
    w.into_inner().map_err(|e| ExportError::CorruptBundle {
        path: "csv".into(),
        reason: e.to_string(),
    })
}

#[derive(Serialize)]
struct BundleOut<'a> {
    format: &'static str,
    version: u64,
    dataset: DatasetOut<'a>,
    session: &'a SessionState,
}

#[derive(Serialize)]
struct DatasetOut<'a> {
    id: &'a DatasetId,
    records: &'a [GeneRecord],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleIn {
    format: String,
    #[allow(dead_code)]
    version: u64,
    dataset: DatasetIn,
    session: SessionState,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetIn {
    id: DatasetId,
    records: Vec<GeneRecord>,
}

/// A session together with the dataset it analyses.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBundle {
    pub dataset: Dataset,
    pub session: SessionState,
}

impl SessionBundle {
    /// Re-runs the bundled event log and checks that it reproduces the
    /// bundled state.
    pub fn verify_replay(&self) -> Result<(), SessionError> {
        let replayed = SessionState::replay(self.session.id().clone(), &self.dataset, self.session.events())?;
        let same_order = replayed
            .selections()
            .map(|s| &s.id)
            .eq(self.session.selections().map(|s| &s.id));
        if replayed != self.session || !same_order {
            return Err(SessionError::InvalidEventLog {
                index: self.session.events().len(),
                reason: "replaying the log does not reproduce the bundled state".into(),
            });
        }
        Ok(())
    }
}

/// Serializes the session and its dataset as one JSON document.
pub fn export_session(s: &SessionState, d: &Dataset) -> Vec<u8> {
    let out = BundleOut {
        format: BUNDLE_FORMAT,
        version: BUNDLE_VERSION,
        dataset: DatasetOut {
            id: d.id(),
            records: d.records(),
        },
        session: s,
    };
    let mut bytes = serde_json::to_vec_pretty(&out).expect("session state is always serializable");
    bytes.push(b'\n');
    bytes
}

pub fn import_session(bytes: &[u8]) -> Result<SessionBundle, ExportError> {
    let corrupt = |path: &str, reason: String| ExportError::CorruptBundle {
        path: path.to_owned(),
        reason,
    };
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| corrupt("$", e.to_string()))?;
    match value.get("version") {
        Some(v) if v.as_u64() == Some(BUNDLE_VERSION) => {}
        Some(v) => {
            return Err(ExportError::UnsupportedVersion {
                version: v.to_string(),
            })
        }
        None => return Err(corrupt("version", "missing field".into())),
    }
    // Decode from the bytes, not the `Value`, whose maps would reorder the
    // session's selections.
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let bundle: BundleIn = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        corrupt(&path, e.into_inner().to_string())
    })?;
    if bundle.format != BUNDLE_FORMAT {
        return Err(corrupt("format", format!("expected {BUNDLE_FORMAT:?}")));
    }
    let dataset = Dataset::from_records(bundle.dataset.records)
        .map_err(|e| corrupt(&format!("dataset.records[{}]", e.index), e.reason))?;
    if dataset.id() != &bundle.dataset.id {
        return Err(corrupt("dataset.id", "does not match record content".into()));
    }
    bundle
        .session
        .validate_against(&dataset)
        .map_err(|(path, reason)| corrupt(&path, reason))?;
    Ok(SessionBundle {
        dataset,
        session: bundle.session,
    })
}

/// Visible region of the plot, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub a_min: f64,
    pub a_max: f64,
    pub m_min: f64,
    pub m_max: f64,
}

impl Viewport {
    pub fn new(a_min: f64, a_max: f64, m_min: f64, m_max: f64) -> Result<Viewport, ExportError> {
        let finite = [a_min, a_max, m_min, m_max].iter().all(|v| v.is_finite());
        if !finite || a_min >= a_max || m_min >= m_max {
            return Err(ExportError::InvalidViewport {
                reason: format!("a [{a_min}, {a_max}], m [{m_min}, {m_max}]"),
            });
        }
        Ok(Viewport {
            a_min,
            a_max,
            m_min,
            m_max,
        })
    }

    /// Data extent padded by 5%, with the M range symmetric about zero so the
    /// reference line is always visible.
    pub fn fit(d: &Dataset) -> Viewport {
        let (mut a_lo, mut a_hi, mut m_abs) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for r in d.records() {
            a_lo = a_lo.min(r.a);
            a_hi = a_hi.max(r.a);
            m_abs = m_abs.max(r.m.abs());
        }
        if a_lo > a_hi {
            (a_lo, a_hi) = (0.0, 1.0);
        }
        let pad = if a_hi > a_lo { 0.05 * (a_hi - a_lo) } else { 1.0 };
        let m_half = if m_abs > 0.0 { 1.05 * m_abs } else { 1.0 };
        Viewport {
            a_min: a_lo - pad,
            a_max: a_hi + pad,
            m_min: -m_half,
            m_max: m_half,
        }
    }

    pub fn contains(&self, a: f64, m: f64) -> bool {
        self.a_min <= a && a <= self.a_max && self.m_min <= m && m <= self.m_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    pub marker_radius: f64,
    pub shade_depth: f64,
    pub palette: Palette,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            width: 800.0,
            height: 600.0,
            marker_radius: 3.0,
            shade_depth: DEFAULT_SHADE_DEPTH,
            palette: Palette::default(),
        }
    }
}

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 52.0;

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|f| f * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Renders the MA plot. Genes outside the viewport are omitted; tracked
/// genes are drawn last with a green outline.
pub fn render_svg(d: &Dataset, s: &SessionState, viewport: Option<Viewport>, opts: &SvgOptions) -> String {
    let vp = viewport.unwrap_or_else(|| Viewport::fit(d));
    let (w, h) = (opts.width, opts.height);
    let (pw, ph) = (w - MARGIN_LEFT - MARGIN_RIGHT, h - MARGIN_TOP - MARGIN_BOTTOM);
    let x = |a: f64| MARGIN_LEFT + (a - vp.a_min) / (vp.a_max - vp.a_min) * pw;
    let y = |m: f64| MARGIN_TOP + (vp.m_max - m) / (vp.m_max - vp.m_min) * ph;
    let (left, right, top, bottom) = (MARGIN_LEFT, MARGIN_LEFT + pw, MARGIN_TOP, MARGIN_TOP + ph);

    let mut out = String::with_capacity(256 + d.len() * 120);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(
        out,
        "<defs><clipPath id=\"plot-area\"><rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{pw:.2}\" height=\"{ph:.2}\"/></clipPath></defs>"
    );
    let _ = writeln!(out, "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>");

    out.push_str("<g class=\"axes\" stroke=\"#333333\" fill=\"#333333\">\n");
    let _ = writeln!(out, "<line class=\"x-axis\" x1=\"{left:.2}\" y1=\"{bottom:.2}\" x2=\"{right:.2}\" y2=\"{bottom:.2}\"/>");
    let _ = writeln!(out, "<line class=\"y-axis\" x1=\"{left:.2}\" y1=\"{top:.2}\" x2=\"{left:.2}\" y2=\"{bottom:.2}\"/>");
    for t in ticks(vp.a_min, vp.a_max, 6) {
        let tx = x(t);
        let _ = writeln!(
            out,
            "<line class=\"tick\" x1=\"{tx:.2}\" y1=\"{bottom:.2}\" x2=\"{tx:.2}\" y2=\"{:.2}\"/><text stroke=\"none\" x=\"{tx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            bottom + 5.0,
            bottom + 18.0,
            tick_label(t)
        );
    }
    for t in ticks(vp.m_min, vp.m_max, 6) {
        let ty = y(t);
        let _ = writeln!(
            out,
            "<line class=\"tick\" x1=\"{:.2}\" y1=\"{ty:.2}\" x2=\"{left:.2}\" y2=\"{ty:.2}\"/><text stroke=\"none\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            left - 5.0,
            left - 8.0,
            ty + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        "<text class=\"axis-label x\" stroke=\"none\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\">A</text>",
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        out,
        "<text class=\"axis-label y\" stroke=\"none\" x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 {:.2})\">M</text>",
        top + ph / 2.0,
        top + ph / 2.0
    );
    out.push_str("</g>\n");

    if vp.m_min <= 0.0 && 0.0 <= vp.m_max {
        let y0 = y(0.0);
        let _ = writeln!(
            out,
            "<line class=\"m-zero\" x1=\"{left:.2}\" y1=\"{y0:.2}\" x2=\"{right:.2}\" y2=\"{y0:.2}\" stroke=\"#555555\" stroke-dasharray=\"4 3\"/>"
        );
    }

    let alpha = s.alpha();
    let outline = opts.palette.tracked_outline.hex();
    let marker = |out: &mut String, r: &GeneRecord, tracked: bool| {
        let class = classify(r.point(), r.p, alpha);
        let fill = opts.palette.color(shade(class, r.p, alpha, opts.shade_depth)).hex();
        let _ = write!(
            out,
            "<circle class=\"gene {}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{}\" fill=\"{fill}\" data-name=\"{}\"",
            class.as_str(),
            x(r.a),
            y(r.m),
            opts.marker_radius,
            xml_escape(&r.name)
        );
        if tracked {
            let _ = write!(out, " stroke=\"{outline}\" stroke-width=\"1.5\"");
        }
        out.push_str("/>\n");
    };
    let visible = d.records().iter().filter(|r| vp.contains(r.a, r.m));
    out.push_str("<g class=\"markers\" clip-path=\"url(#plot-area)\">\n");
    for r in visible.clone().filter(|r| !s.tracked().contains(&r.name)) {
        marker(&mut out, r, false);
    }
    out.push_str("</g>\n<g class=\"tracked\" clip-path=\"url(#plot-area)\">\n");
    for r in visible.filter(|r| s.tracked().contains(&r.name)) {
        marker(&mut out, r, true);
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"legend\">\n");
    let legend = [
        (Classification::Up, "up", opts.palette.red.1),
        (Classification::Down, "down", opts.palette.blue.1),
        (Classification::NotSignificant, "not significant", opts.palette.grey),
        (Classification::MissingP, "missing p", opts.palette.yellow),
    ];
    for (i, (class, label, color)) in legend.iter().enumerate() {
        let ly = top + 6.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect class=\"swatch {}\" x=\"{:.2}\" y=\"{ly:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{:.2}\">{label}</text>",
            class.as_str(),
            right - 110.0,
            color.hex(),
            right - 94.0,
            ly + 9.0
        );
    }
    let _ = writeln!(
        out,
        "<text class=\"alpha\" x=\"{:.2}\" y=\"{:.2}\">p &lt; {}</text>",
        right - 110.0,
        top + 80.0,
        format_number(alpha.value())
    );
    out.push_str("</g>\n</svg>\n");
    out
}
