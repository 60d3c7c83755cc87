//! CSV ingestion into an immutable [`Dataset`].
//!
//! Two column layouts are recognised from the header row:
//!
//! | layout        | required columns                              |
//! |---------------|-----------------------------------------------|
//! | raw           | `name, intensity_r, intensity_g, pvalue`      |
//! | precomputed   | `name, m, a, pvalue`                          |
//!
//! Header matching ignores case and surrounding whitespace. Accepted
//! synonyms: `gene`, `gene_name` for `name`; `log2foldchange` for `m`;
//! `avg_expr`, `basemean_log2` for `a`; `padj`, `p` for `pvalue`. When several
//! columns map to the same role the one listed first wins (`pvalue` before
//! `padj` before `p`) and the rest are reported as ignored.
//!
//! A p-value cell that is empty or one of `NA`, `na`, `NaN` is read as missing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ma::{classify, compute_ma, ma_from_raw, Classification, Intensity, MaPoint, PValue, SignificanceLevel};

pub const DEFAULT_MAX_ROWS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("no usable header: expected {{name, intensity_r, intensity_g, pvalue}} or {{name, m, a, pvalue}}; missing {missing:?}")]
    SchemaError { missing: Vec<String>, found: Vec<String> },
    #[error("line {line}: duplicate gene name {name:?} (first seen on line {first_line})")]
    DuplicateGeneName {
        name: String,
        line: usize,
        first_line: usize,
    },
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: {column} must be positive, got {value}")]
    NonPositiveIntensity {
        line: usize,
        column: String,
        value: f64,
    },
    #[error("line {line}: p-value {value} outside [0, 1]")]
    PValueOutOfRange { line: usize, value: f64 },
    #[error("dataset exceeds the limit of {limit} rows")]
    TooManyRows { limit: usize },
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::SchemaError { .. } => "SchemaError",
            IngestError::DuplicateGeneName { .. } => "DuplicateGeneName",
            IngestError::MalformedRow { .. } => "MalformedRow",
            IngestError::NonPositiveIntensity { .. } => "NonPositiveIntensity",
            IngestError::PValueOutOfRange { .. } => "PValueOutOfRange",
            IngestError::TooManyRows { .. } => "TooManyRows",
        }
    }

    /// 1-based line of the offending row, when the error concerns one row.
    pub fn line(&self) -> Option<usize> {
        match self {
            IngestError::DuplicateGeneName { line, .. }
            | IngestError::MalformedRow { line, .. }
            | IngestError::NonPositiveIntensity { line, .. }
            | IngestError::PValueOutOfRange { line, .. } => Some(*line),
            IngestError::SchemaError { .. } | IngestError::TooManyRows { .. } => None,
        }
    }
}

/// A record that fails dataset invariants when built outside the CSV path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("record {index}: {reason}")]
pub struct InvalidRecord {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DatasetId(String);

impl DatasetId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for DatasetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DatasetId {
    fn from(s: &str) -> Self {
        DatasetId(s.to_owned())
    }
}

/// Intensities after any pseudocount has been applied, so that
/// `compute_ma(r, g)` reproduces the record's point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawIntensities {
    pub r: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneRecord {
    pub name: String,
    pub m: f64,
    pub a: f64,
    pub p: PValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawIntensities>,
}

impl GeneRecord {
    pub fn point(&self) -> MaPoint {
        MaPoint { m: self.m, a: self.a }
    }
}

/// Ordered, immutable collection of genes with unique names.
///
/// The id is derived from the content (names, M, A and p in order), so the
/// same table always receives the same id.
#[derive(Debug, Clone)]
pub struct Dataset {
    id: DatasetId,
    records: Vec<GeneRecord>,
    name_index: HashMap<String, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.records == other.records
    }
}

impl Dataset {
    pub fn from_records(records: Vec<GeneRecord>) -> Result<Dataset, InvalidRecord> {
        let mut name_index = HashMap::with_capacity(records.len());
        for (index, rec) in records.iter().enumerate() {
            let bad = |reason: String| InvalidRecord { index, reason };
            if rec.name.is_empty() || rec.name.trim() != rec.name {
                return Err(bad(format!("invalid gene name {:?}", rec.name)));
            }
            if !rec.m.is_finite() || !rec.a.is_finite() {
                return Err(bad("M and A must be finite".into()));
            }
            if let Some(raw) = rec.raw {
                let expected = ma_from_raw(raw.r, raw.g, 0.0).map_err(|e| bad(e.to_string()))?;
                let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
                if !close(expected.m, rec.m) || !close(expected.a, rec.a) {
                    return Err(bad("M/A disagree with raw intensities".into()));
                }
            }
            if name_index.insert(rec.name.clone(), index).is_some() {
                return Err(bad(format!("duplicate gene name {:?}", rec.name)));
            }
        }
        Ok(Dataset {
            id: content_id(&records),
            records,
            name_index,
        })
    }

    pub fn id(&self) -> &DatasetId {
        &self.id
    }

    pub fn records(&self) -> &[GeneRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.name_index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&GeneRecord> {
        self.position(name).map(|i| &self.records[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.name_index.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.name.as_str())
    }
}

fn content_id(records: &[GeneRecord]) -> DatasetId {
    let mut h = Sha256::new();
    for r in records {
        h.update(r.name.as_bytes());
        h.update([0u8]);
        h.update(r.m.to_bits().to_le_bytes());
        h.update(r.a.to_bits().to_le_bytes());
        match r.p.get() {
            Some(p) => {
                h.update([1u8]);
                h.update(p.to_bits().to_le_bytes());
            }
            None => h.update([0u8]),
        }
    }
    let digest = h.finalize();
    DatasetId(format!("ds-{}", hex::encode(&digest[..8])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Added to both raw intensities before taking logs. Zero disables it.
    pub pseudocount: f64,
    pub max_rows: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            pseudocount: 0.0,
            max_rows: DEFAULT_MAX_ROWS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Raw,
    Precomputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub schema: Schema,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Role {
    Name,
    M,
    A,
    PValue,
    IntensityR,
    IntensityG,
}

const SYNONYMS: &[(Role, &[&str])] = &[
    (Role::Name, &["name", "gene", "gene_name"]),
    (Role::M, &["m", "log2foldchange"]),
    (Role::A, &["a", "avg_expr", "basemean_log2"]),
    (Role::PValue, &["pvalue", "padj", "p"]),
    (Role::IntensityR, &["intensity_r"]),
    (Role::IntensityG, &["intensity_g"]),
];

fn canonical(role: Role) -> &'static str {
    SYNONYMS.iter().find(|(r, _)| *r == role).unwrap().1[0]
}

struct Columns {
    schema: Schema,
    name: usize,
    pvalue: usize,
    first: usize,
    second: usize,
}

fn resolve_columns(header: &[String], warnings: &mut Vec<String>) -> Result<Columns, IngestError> {
    let normalized: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let mut chosen: HashMap<Role, usize> = HashMap::new();
    for (role, names) in SYNONYMS {
        let pick = names
            .iter()
            .find_map(|syn| normalized.iter().position(|h| h == syn));
        if let Some(idx) = pick {
            chosen.insert(*role, idx);
        }
    }
    let has = |r: Role| chosen.contains_key(&r);
    let base = has(Role::Name) && has(Role::PValue);
    let schema = if base && has(Role::IntensityR) && has(Role::IntensityG) {
        Schema::Raw
    } else if base && has(Role::M) && has(Role::A) {
        Schema::Precomputed
    } else {
        let raw_missing: Vec<Role> = [Role::Name, Role::IntensityR, Role::IntensityG, Role::PValue]
            .into_iter()
            .filter(|r| !has(*r))
            .collect();
        let pre_missing: Vec<Role> = [Role::Name, Role::M, Role::A, Role::PValue]
            .into_iter()
            .filter(|r| !has(*r))
            .collect();
        let closest = if pre_missing.len() <= raw_missing.len() {
            pre_missing
        } else {
            raw_missing
        };
        return Err(IngestError::SchemaError {
            missing: closest.into_iter().map(|r| canonical(r).to_owned()).collect(),
            found: header.to_vec(),
        });
    };
    let used: Vec<Role> = match schema {
        Schema::Raw => vec![Role::Name, Role::IntensityR, Role::IntensityG, Role::PValue],
        Schema::Precomputed => vec![Role::Name, Role::M, Role::A, Role::PValue],
    };
    for (idx, h) in header.iter().enumerate() {
        if !used.iter().any(|r| chosen[r] == idx) {
            warnings.push(format!("ignored column {:?}", h));
        }
    }
    let (first, second) = match schema {
        Schema::Raw => (chosen[&Role::IntensityR], chosen[&Role::IntensityG]),
        Schema::Precomputed => (chosen[&Role::M], chosen[&Role::A]),
    };
    Ok(Columns {
        schema,
        name: chosen[&Role::Name],
        pvalue: chosen[&Role::PValue],
        first,
        second,
    })
}

fn parse_number(cell: &str, column: &str, line: usize) -> Result<f64, IngestError> {
    let v: f64 = cell.trim().parse().map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("{column}: expected a number, got {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(IngestError::MalformedRow {
            line,
            reason: format!("{column}: value must be finite, got {cell:?}"),
        });
    }
    Ok(v)
}

fn parse_pvalue(cell: &str, line: usize) -> Result<PValue, IngestError> {
    let cell = cell.trim();
    if matches!(cell, "" | "NA" | "na" | "NaN") {
        return Ok(PValue::MISSING);
    }
    let v: f64 = cell.parse().map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("pvalue: expected a number, got {cell:?}"),
    })?;
    PValue::new(v).map_err(|_| IngestError::PValueOutOfRange { line, value: v })
}

/// Maps record byte offsets to 1-based line numbers. The offsets reported by
/// the csv reader may point at the preceding terminator or at skipped blank
/// lines, so leading CR/LF bytes are stepped over first. Offsets must be
/// queried in increasing order.
struct LineCounter<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> LineCounter<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        LineCounter { bytes, pos: 0, line: 1 }
    }

    fn line_at(&mut self, offset: usize) -> usize {
        let mut start = offset.min(self.bytes.len());
        while start < self.bytes.len() && matches!(self.bytes[start], b'\r' | b'\n') {
            start += 1;
        }
        if start >= self.pos {
            self.line += self.bytes[self.pos..start].iter().filter(|&&b| b == b'\n').count();
            self.pos = start;
        }
        self.line
    }
}

pub fn parse_csv(bytes: &[u8], options: &IngestOptions) -> Result<(Dataset, IngestReport), IngestError> {
    let bytes = bytes.strip_prefix(b"\xef\xbb\xbf").unwrap_or(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut rows = reader.byte_records();

    let to_strings = |rec: &csv::ByteRecord, line: usize| -> Result<Vec<String>, IngestError> {
        rec.iter()
            .map(|f| {
                std::str::from_utf8(f)
                    .map(str::to_owned)
                    .map_err(|_| IngestError::MalformedRow {
                        line,
                        reason: "invalid UTF-8".into(),
                    })
            })
            .collect()
    };
    let mut lines = LineCounter::new(bytes);
    let csv_err = |e: csv::Error, lines: &mut LineCounter| {
        let line = e.position().map(|p| lines.line_at(p.byte() as usize)).unwrap_or(0);
        IngestError::MalformedRow {
            line,
            reason: e.to_string(),
        }
    };

    let header = match rows.next() {
        Some(rec) => {
            let rec = rec.map_err(|e| csv_err(e, &mut lines))?;
            to_strings(&rec, 1)?
        }
        None => {
            return Err(IngestError::SchemaError {
                missing: vec!["name".into(), "m".into(), "a".into(), "pvalue".into()],
                found: vec![],
            })
        }
    };
    let mut warnings = Vec::new();
    let cols = resolve_columns(&header, &mut warnings)?;

    let mut records = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for rec in rows {
        let rec = rec.map_err(|e| csv_err(e, &mut lines))?;
        let line = rec.position().map(|p| lines.line_at(p.byte() as usize)).unwrap_or(0);
        if records.len() == options.max_rows {
            return Err(IngestError::TooManyRows {
                limit: options.max_rows,
            });
        }
        if rec.len() != header.len() {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let fields = to_strings(&rec, line)?;
        let name = fields[cols.name].trim().to_owned();
        if name.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty gene name".into(),
            });
        }
        let p = parse_pvalue(&fields[cols.pvalue], line)?;
        let (point, raw) = match cols.schema {
            Schema::Precomputed => {
                let m = parse_number(&fields[cols.first], "m", line)?;
                let a = parse_number(&fields[cols.second], "a", line)?;
                (MaPoint { m, a }, None)
            }
            Schema::Raw => {
                let r = parse_number(&fields[cols.first], "intensity_r", line)?;
                let g = parse_number(&fields[cols.second], "intensity_g", line)?;
                let positive = |v: f64, column: &str| {
                    Intensity::with_pseudocount(v, options.pseudocount).map_err(|_| {
                        IngestError::NonPositiveIntensity {
                            line,
                            column: column.to_owned(),
                            value: v,
                        }
                    })
                };
                let r = positive(r, "intensity_r")?;
                let g = positive(g, "intensity_g")?;
                let raw = RawIntensities {
                    r: r.value(),
                    g: g.value(),
                };
                (compute_ma(r, g), Some(raw))
            }
        };
        if let Some(&first_line) = first_seen.get(&name) {
            return Err(IngestError::DuplicateGeneName {
                name,
                line,
                first_line,
            });
        }
        first_seen.insert(name.clone(), line);
        records.push(GeneRecord {
            name,
            m: point.m,
            a: point.a,
            p,
            raw,
        });
    }

    let rows = records.len();
    // Every invariant from_records checks was enforced row by row above.
    let dataset = Dataset::from_records(records).map_err(|e| IngestError::MalformedRow {
        line: 0,
        reason: e.to_string(),
    })?;
    Ok((
        dataset,
        IngestReport {
            rows,
            schema: cols.schema,
            warnings,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub up: usize,
    pub down: usize,
    pub not_significant: usize,
    pub missing_p: usize,
}

impl ClassCounts {
    pub fn add(&mut self, c: Classification) {
        match c {
            Classification::Up => self.up += 1,
            Classification::Down => self.down += 1,
            Classification::NotSignificant => self.not_significant += 1,
            Classification::MissingP => self.missing_p += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub genes: usize,
    pub alpha: f64,
    pub counts: ClassCounts,
    pub m_extent: Option<Extent>,
    pub a_extent: Option<Extent>,
}

fn widen(e: &mut Option<Extent>, v: f64) {
    match e {
        Some(x) => {
            x.min = x.min.min(v);
            x.max = x.max.max(v);
        }
        None => *e = Some(Extent { min: v, max: v }),
    }
}

pub fn dataset_summary(d: &Dataset, alpha: SignificanceLevel) -> DatasetSummary {
    let mut counts = ClassCounts::default();
    let mut m_extent = None;
    let mut a_extent = None;
    for r in d.records() {
        counts.add(classify(r.point(), r.p, alpha));
        if r.m.is_finite() && r.a.is_finite() {
            widen(&mut m_extent, r.m);
            widen(&mut a_extent, r.a);
        }
    }
    DatasetSummary {
        genes: d.len(),
        alpha: alpha.value(),
        counts,
        m_extent,
        a_extent,
    }
}
