//! Gene selections from lasso polygons, boxes and name search, and the three
//! ways of combining them.
//!
//! Plot coordinates are `(a, m)`: A on the x-axis, M on the y-axis.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::FilterSpec;
use crate::ingest::{Dataset, DatasetId};

/// Distance from an edge within which a point counts as on the boundary.
pub const BOUNDARY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("degenerate polygon: {reason}")]
    DegeneratePolygon { reason: String },
    #[error("invalid box: a range [{a_min}, {a_max}], m range [{m_min}, {m_max}]")]
    InvalidBox {
        a_min: f64,
        a_max: f64,
        m_min: f64,
        m_max: f64,
    },
    #[error("selections belong to different datasets ({first} and {other})")]
    MixedDatasets { first: DatasetId, other: DatasetId },
    #[error("combine needs at least one input selection")]
    EmptyCombine,
    #[error("unknown gene {name:?}")]
    UnknownGene { name: String },
}

impl SelectionError {
    pub fn code(&self) -> &'static str {
        match self {
            SelectionError::DegeneratePolygon { .. } => "DegeneratePolygon",
            SelectionError::InvalidBox { .. } => "InvalidBox",
            SelectionError::MixedDatasets { .. } => "MixedDatasets",
            SelectionError::EmptyCombine => "EmptyCombine",
            SelectionError::UnknownGene { .. } => "UnknownGene",
        }
    }
}

/// Closed polygon with at least three vertices that are not all collinear.
/// Self-intersections are allowed and resolved by the even-odd rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Polygon {
    vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Polygon, SelectionError> {
        if vertices.iter().any(|(a, m)| !a.is_finite() || !m.is_finite()) {
            return Err(SelectionError::DegeneratePolygon {
                reason: "vertex coordinates must be finite".into(),
            });
        }
        if vertices.len() < 3 {
            return Err(SelectionError::DegeneratePolygon {
                reason: format!("need at least 3 vertices, got {}", vertices.len()),
            });
        }
        if all_collinear(&vertices) {
            return Err(SelectionError::DegeneratePolygon {
                reason: "all vertices are collinear".into(),
            });
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

impl TryFrom<Vec<[f64; 2]>> for Polygon {
    type Error = SelectionError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Polygon::new(v.into_iter().map(|[a, m]| (a, m)).collect())
    }
}

impl From<Polygon> for Vec<[f64; 2]> {
    fn from(p: Polygon) -> Self {
        p.vertices.into_iter().map(|(a, m)| [a, m]).collect()
    }
}

fn all_collinear(v: &[(f64, f64)]) -> bool {
    let origin = v[0];
    let Some(&far) = v
        .iter()
        .max_by(|p, q| dist2(origin, **p).total_cmp(&dist2(origin, **q)))
    else {
        return true;
    };
    let len2 = dist2(origin, far);
    if len2 == 0.0 {
        return true;
    }
    let (dx, dy) = (far.0 - origin.0, far.1 - origin.1);
    // Normalised cross product is the perpendicular distance from the line.
    v.iter().all(|p| {
        let cross = dx * (p.1 - origin.1) - dy * (p.0 - origin.0);
        cross.abs() / len2.sqrt() <= BOUNDARY_EPSILON
    })
}

fn dist2(p: (f64, f64), q: (f64, f64)) -> f64 {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    dx * dx + dy * dy
}

fn segment_distance(p: (f64, f64), s: (f64, f64), e: (f64, f64)) -> f64 {
    let (dx, dy) = (e.0 - s.0, e.1 - s.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - s.0) * dx + (p.1 - s.1) * dy) / len2).clamp(0.0, 1.0)
    };
    dist2(p, (s.0 + t * dx, s.1 + t * dy)).sqrt()
}

/// Even-odd ray casting. Points within [`BOUNDARY_EPSILON`] of an edge are
/// inside.
pub fn point_in_polygon(p: (f64, f64), poly: &Polygon) -> bool {
    let (x, y) = p;
    let mut inside = false;
    for ((xi, yi), (xj, yj)) in poly.edges() {
        let near_box = x >= xi.min(xj) - BOUNDARY_EPSILON
            && x <= xi.max(xj) + BOUNDARY_EPSILON
            && y >= yi.min(yj) - BOUNDARY_EPSILON
            && y <= yi.max(yj) + BOUNDARY_EPSILON;
        if near_box && segment_distance(p, (xi, yi), (xj, yj)) <= BOUNDARY_EPSILON {
            return true;
        }
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
    }
    inside
}

/// Bounding box of the polygon grown by [`BOUNDARY_EPSILON`]; nothing
/// outside it can be inside the polygon.
fn padded_bounds(poly: &Polygon) -> (f64, f64, f64, f64) {
    let (mut a0, mut a1, mut m0, mut m1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(a, m) in poly.vertices() {
        a0 = a0.min(a);
        a1 = a1.max(a);
        m0 = m0.min(m);
        m1 = m1.max(m);
    }
    let e = BOUNDARY_EPSILON;
    (a0 - e, a1 + e, m0 - e, m1 + e)
}

/// Axis-aligned rectangle in plot coordinates, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxFields")]
pub struct BoxRegion {
    pub a_min: f64,
    pub a_max: f64,
    pub m_min: f64,
    pub m_max: f64,
}

#[derive(Deserialize)]
struct BoxFields {
    a_min: f64,
    a_max: f64,
    m_min: f64,
    m_max: f64,
}

impl TryFrom<BoxFields> for BoxRegion {
    type Error = SelectionError;

    fn try_from(f: BoxFields) -> Result<Self, Self::Error> {
        BoxRegion::new(f.a_min, f.a_max, f.m_min, f.m_max)
    }
}

impl BoxRegion {
    pub fn new(a_min: f64, a_max: f64, m_min: f64, m_max: f64) -> Result<BoxRegion, SelectionError> {
        let finite = [a_min, a_max, m_min, m_max].iter().all(|v| v.is_finite());
        if !finite || a_min > a_max || m_min > m_max {
            return Err(SelectionError::InvalidBox {
                a_min,
                a_max,
                m_min,
                m_max,
            });
        }
        Ok(BoxRegion {
            a_min,
            a_max,
            m_min,
            m_max,
        })
    }

    pub fn contains(&self, a: f64, m: f64) -> bool {
        self.a_min <= a && a <= self.a_max && self.m_min <= m && m <= self.m_max
    }

    /// The same rectangle as a counter-clockwise polygon.
    pub fn to_polygon(&self) -> Result<Polygon, SelectionError> {
        Polygon::new(vec![
            (self.a_min, self.m_min),
            (self.a_max, self.m_min),
            (self.a_max, self.m_max),
            (self.a_min, self.m_max),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    /// Union.
    KeepAll,
    /// Genes present in at least two inputs.
    KeepMultiples,
    /// Genes present in exactly one input.
    KeepSingles,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelectionId(pub String);

impl SelectionId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SelectionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// How a selection was produced. Re-evaluating the origin against the same
/// dataset and session state reproduces the members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Lasso {
        polygon: Polygon,
    },
    Box {
        region: BoxRegion,
    },
    /// All partial matches of `query`, or only `pick` when the user chose one
    /// entry from the result list.
    Search {
        query: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pick: Option<String>,
    },
    Combine {
        op: CombineOp,
        inputs: Vec<SelectionId>,
    },
    /// `source: None` filters the whole dataset.
    Filter {
        spec: FilterSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<SelectionId>,
    },
    /// The current tracked set, captured so it can take part in combines
    /// and filters.
    Tracked,
}

impl Origin {
    pub fn kind(&self) -> &'static str {
        match self {
            Origin::Lasso { .. } => "lasso",
            Origin::Box { .. } => "box",
            Origin::Search { .. } => "search",
            Origin::Combine { .. } => "combine",
            Origin::Filter { .. } => "filter",
            Origin::Tracked => "tracked",
        }
    }
}

/// Result of a selection operation before it is named and stored in a
/// session.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub dataset_id: DatasetId,
    pub members: BTreeSet<String>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSet {
    pub id: SelectionId,
    pub label: String,
    pub dataset_id: DatasetId,
    pub members: BTreeSet<String>,
    pub origin: Origin,
}

impl Selection {
    pub fn into_set(self, id: SelectionId, label: String) -> SelectionSet {
        SelectionSet {
            id,
            label,
            dataset_id: self.dataset_id,
            members: self.members,
            origin: self.origin,
        }
    }
}

/// Genes of every classification, missing p included, are eligible.
pub fn select_lasso(d: &Dataset, poly: &Polygon) -> Selection {
    let (a0, a1, m0, m1) = padded_bounds(poly);
    let members = d
        .records()
        .iter()
        .filter(|r| a0 <= r.a && r.a <= a1 && m0 <= r.m && r.m <= m1)
        .filter(|r| point_in_polygon((r.a, r.m), poly))
        .map(|r| r.name.clone())
        .collect();
    Selection {
        dataset_id: d.id().clone(),
        members,
        origin: Origin::Lasso {
            polygon: poly.clone(),
        },
    }
}

pub fn select_box(d: &Dataset, region: &BoxRegion) -> Selection {
    let members = d
        .records()
        .iter()
        .filter(|r| region.contains(r.a, r.m))
        .map(|r| r.name.clone())
        .collect();
    Selection {
        dataset_id: d.id().clone(),
        members,
        origin: Origin::Box { region: *region },
    }
}

/// Case-insensitive substring search, ordered by match position then name.
/// An empty query matches nothing.
pub fn search_names<'d>(d: &'d Dataset, query: &str) -> Vec<&'d str> {
    if query.is_empty() {
        return Vec::new();
    }
    let needle = query.to_lowercase();
    let mut hits: Vec<(usize, &str)> = d
        .names()
        .filter_map(|name| name.to_lowercase().find(&needle).map(|pos| (pos, name)))
        .collect();
    hits.sort_unstable();
    hits.into_iter().map(|(_, name)| name).collect()
}

/// Promotes search results to a selection: all hits, or just `pick`.
pub fn select_search(d: &Dataset, query: &str, pick: Option<&str>) -> Result<Selection, SelectionError> {
    let members = match pick {
        Some(name) if d.contains(name) => BTreeSet::from([name.to_owned()]),
        Some(name) => {
            return Err(SelectionError::UnknownGene {
                name: name.to_owned(),
            })
        }
        None => search_names(d, query).into_iter().map(str::to_owned).collect(),
    };
    Ok(Selection {
        dataset_id: d.id().clone(),
        members,
        origin: Origin::Search {
            query: query.to_owned(),
            pick: pick.map(str::to_owned),
        },
    })
}

/// Membership-count combination of one or more sets.
pub fn combine_members<'a, I>(sets: I, op: CombineOp) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a BTreeSet<String>>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for set in sets {
        for name in set {
            *counts.entry(name.as_str()).or_default() += 1;
        }
    }
    let keep = |n: usize| match op {
        CombineOp::KeepAll => n >= 1,
        CombineOp::KeepMultiples => n >= 2,
        CombineOp::KeepSingles => n == 1,
    };
    counts
        .into_iter()
        .filter(|&(_, n)| keep(n))
        .map(|(name, _)| name.to_owned())
        .collect()
}

pub fn combine(sets: &[&SelectionSet], op: CombineOp) -> Result<Selection, SelectionError> {
    let first = sets.first().ok_or(SelectionError::EmptyCombine)?;
    if let Some(other) = sets.iter().find(|s| s.dataset_id != first.dataset_id) {
        return Err(SelectionError::MixedDatasets {
            first: first.dataset_id.clone(),
            other: other.dataset_id.clone(),
        });
    }
    Ok(Selection {
        dataset_id: first.dataset_id.clone(),
        members: combine_members(sets.iter().map(|s| &s.members), op),
        origin: Origin::Combine {
            op,
            inputs: sets.iter().map(|s| s.id.clone()).collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::GeneRecord;
    use crate::ma::PValue;
    use proptest::prelude::*;

    fn dataset(points: &[(&str, f64, f64)]) -> Dataset {
        Dataset::from_records(
            points
                .iter()
                .map(|&(name, a, m)| GeneRecord {
                    name: name.into(),
                    m,
                    a,
                    p: PValue::MISSING,
                    raw: None,
                })
                .collect(),
        )
        .unwrap()
    }

    fn set(id: &str, names: &[&str]) -> SelectionSet {
        SelectionSet {
            id: SelectionId(id.into()),
            label: id.into(),
            dataset_id: DatasetId::from("ds"),
            members: names.iter().map(|s| s.to_string()).collect(),
            origin: Origin::Tracked,
        }
    }

    fn names(s: &BTreeSet<String>) -> Vec<&str> {
        s.iter().map(String::as_str).collect()
    }

    /// Winding number by summing signed angles; independent of the crossing
    /// parity used by `point_in_polygon`.
    fn winding_by_angles(p: (f64, f64), v: &[(f64, f64)]) -> i32 {
        let mut total = 0.0;
        for i in 0..v.len() {
            let (x1, y1) = (v[i].0 - p.0, v[i].1 - p.1);
            let (x2, y2) = (v[(i + 1) % v.len()].0 - p.0, v[(i + 1) % v.len()].1 - p.1);
            total += (x1 * y2 - y1 * x2).atan2(x1 * x2 + y1 * y2);
        }
        (total / std::f64::consts::TAU).round() as i32
    }

    fn square() -> Polygon {
        Polygon::new(vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]).unwrap()
    }

    #[test]
    fn square_examples() {
        assert!(point_in_polygon((1.0, 1.0), &square()));
        assert!(!point_in_polygon((3.0, 1.0), &square()));
        assert!(point_in_polygon((2.0, 1.0), &square()));
        assert!(point_in_polygon((0.0, 0.0), &square()));
        assert!(point_in_polygon((1.0, 2.0 + 5e-10), &square()));
        assert!(!point_in_polygon((1.0, 2.0 + 1e-6), &square()));
    }

    #[test]
    fn concave_notch() {
        let v = vec![(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (2.0, 1.0), (0.0, 4.0)];
        // Oracle, checked against a 400x400 raster count of the notch below.
        assert_eq!(winding_by_angles((2.0, 3.0), &v), 0);
        let poly = Polygon::new(v).unwrap();
        assert!(!point_in_polygon((2.0, 3.0), &poly));
        assert!(point_in_polygon((2.0, 0.5), &poly));
        assert_eq!(winding_by_angles((0.5, 3.0), &poly.vertices), 1);
        assert!(point_in_polygon((0.5, 3.0), &poly));
        assert!(!point_in_polygon((1.0, 3.0), &poly));
    }

    #[test]
    fn winding_oracle_matches_raster_area() {
        // The notched polygon has area 16 - 0.5 * 4 * 3 = 10.
        let v = vec![(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (2.0, 1.0), (0.0, 4.0)];
        let n = 400;
        let cell = 4.0 / n as f64;
        let mut inside = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = ((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
                if winding_by_angles(p, &v) != 0 {
                    inside += 1;
                }
            }
        }
        let area = inside as f64 * cell * cell;
        assert!((area - 10.0).abs() < 0.02, "raster area {area}");
    }

    #[test]
    fn degenerate_polygons() {
        let err = Polygon::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap_err();
        assert_eq!(err.code(), "DegeneratePolygon");
        let err = Polygon::new(vec![(0.0, 0.0), (1.0, 1.0), (3.0, 3.0), (2.0, 2.0)]).unwrap_err();
        assert_eq!(err.code(), "DegeneratePolygon");
        let err = Polygon::new(vec![(1.0, 1.0); 4]).unwrap_err();
        assert_eq!(err.code(), "DegeneratePolygon");
        let err = Polygon::new(vec![(0.0, 0.0), (1.0, f64::NAN), (0.0, 1.0)]).unwrap_err();
        assert_eq!(err.code(), "DegeneratePolygon");
        assert!(serde_json::from_str::<Polygon>("[[0,0],[1,1]]").is_err());
    }

    #[test]
    fn self_intersecting_lasso_uses_even_odd() {
        // Bow tie: two triangles meeting at (1, 1).
        let bow = Polygon::new(vec![(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)]).unwrap();
        assert!(point_in_polygon((0.3, 1.0), &bow));
        assert!(point_in_polygon((1.7, 1.0), &bow));
        assert!(!point_in_polygon((1.0, 0.2), &bow));
        // Pentagram: the centre has winding number 2, so even-odd leaves it out.
        let star: Vec<(f64, f64)> = (0..5)
            .map(|k| {
                let t = std::f64::consts::FRAC_PI_2 + (k * 2) as f64 * std::f64::consts::TAU / 5.0;
                (t.cos(), t.sin())
            })
            .collect();
        assert_eq!(winding_by_angles((0.0, 0.0), &star).abs(), 2);
        assert!(!point_in_polygon((0.0, 0.0), &Polygon::new(star).unwrap()));
    }

    #[test]
    fn lasso_examples() {
        let d = dataset(&[("g1", 1.0, 1.0), ("g2", 5.0, 0.0)]);
        let s = select_lasso(&d, &square());
        assert_eq!(names(&s.members), ["g1"]);
        let far = Polygon::new(vec![(10.0, 10.0), (11.0, 10.0), (11.0, 11.0)]).unwrap();
        assert!(select_lasso(&d, &far).members.is_empty());
    }

    #[test]
    fn lasso_octagon_cluster() {
        let octagon: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 8.0;
                (5.0 + 3.0 * t.cos(), 3.0 * t.sin())
            })
            .collect();
        // Cluster on a circle of radius 1.5, well inside the inscribed radius.
        let mut pts: Vec<(String, f64, f64)> = (0..10)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 10.0 + 0.1;
                (format!("c{k}"), 5.0 + 1.5 * t.cos(), 1.5 * t.sin())
            })
            .collect();
        for (_, a, m) in &pts {
            assert_eq!(winding_by_angles((*a, *m), &octagon).abs(), 1);
        }
        pts.push(("out1".into(), 9.0, 0.0));
        pts.push(("out2".into(), 5.0, -3.5));
        let refs: Vec<(&str, f64, f64)> = pts.iter().map(|(n, a, m)| (n.as_str(), *a, *m)).collect();
        let d = dataset(&refs);
        let s = select_lasso(&d, &Polygon::new(octagon).unwrap());
        assert_eq!(s.members.len(), 10);
        assert!(s.members.iter().all(|n| n.starts_with('c')));
    }

    #[test]
    fn box_examples() {
        let b = BoxRegion::new(0.0, 2.0, -1.0, 1.0).unwrap();
        assert!(b.contains(1.0, 0.0));
        assert!(b.contains(2.0, 0.0));
        assert!(!b.contains(2.0001, 0.0));
        assert_eq!(BoxRegion::new(2.0, 0.0, 0.0, 1.0).unwrap_err().code(), "InvalidBox");
        assert!(serde_json::from_str::<BoxRegion>(r#"{"a_min":1,"a_max":0,"m_min":0,"m_max":1}"#).is_err());
    }

    #[test]
    fn search_examples() {
        let d = dataset(&[("TP53", 0.0, 0.0), ("BRCA2", 0.0, 0.0), ("BRCA1", 0.0, 0.0), ("xbrca", 0.0, 0.0)]);
        assert_eq!(search_names(&d, "brca"), ["BRCA1", "BRCA2", "xbrca"]);
        assert_eq!(search_names(&d, "53"), ["TP53"]);
        assert!(search_names(&d, "").is_empty());
        let s = select_search(&d, "brca", Some("BRCA2")).unwrap();
        assert_eq!(names(&s.members), ["BRCA2"]);
        assert_eq!(select_search(&d, "x", Some("NOPE")).unwrap_err().code(), "UnknownGene");
    }

    #[test]
    fn combine_examples() {
        let a = set("A", &["g1", "g2"]);
        let b = set("B", &["g2", "g3"]);
        let run = |sets: &[&SelectionSet], op| combine(sets, op).unwrap().members;
        assert_eq!(names(&run(&[&a, &b], CombineOp::KeepAll)), ["g1", "g2", "g3"]);
        assert_eq!(names(&run(&[&a, &b], CombineOp::KeepMultiples)), ["g2"]);
        assert_eq!(names(&run(&[&a, &b], CombineOp::KeepSingles)), ["g1", "g3"]);
        assert_eq!(run(&[&a], CombineOp::KeepAll), a.members);
        assert!(run(&[&a], CombineOp::KeepMultiples).is_empty());
        assert_eq!(run(&[&a], CombineOp::KeepSingles), a.members);

        let c = set("C", &["g2", "g4"]);
        let multi = run(&[&a, &b, &c], CombineOp::KeepMultiples);
        let single = run(&[&a, &b, &c], CombineOp::KeepSingles);
        assert!(multi.contains("g2") && !single.contains("g2"));

        assert_eq!(combine(&[], CombineOp::KeepAll).unwrap_err().code(), "EmptyCombine");
        let mut other = set("D", &["g1"]);
        other.dataset_id = DatasetId::from("elsewhere");
        assert_eq!(combine(&[&a, &other], CombineOp::KeepAll).unwrap_err().code(), "MixedDatasets");
    }

    proptest! {
        #[test]
        fn combine_matches_count_oracle(
            raw in proptest::collection::vec(proptest::collection::btree_set(0u8..16, 0..10), 1..5)
        ) {
            let sets: Vec<SelectionSet> = raw
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let n: Vec<String> = s.iter().map(|g| format!("g{g}")).collect();
                    let r: Vec<&str> = n.iter().map(String::as_str).collect();
                    set(&format!("s{i}"), &r)
                })
                .collect();
            let refs: Vec<&SelectionSet> = sets.iter().collect();
            for g in 0u8..16 {
                let name = format!("g{g}");
                let count = raw.iter().filter(|s| s.contains(&g)).count();
                let all = combine(&refs, CombineOp::KeepAll).unwrap().members;
                let multi = combine(&refs, CombineOp::KeepMultiples).unwrap().members;
                let single = combine(&refs, CombineOp::KeepSingles).unwrap().members;
                prop_assert_eq!(all.contains(&name), count >= 1);
                prop_assert_eq!(multi.contains(&name), count >= 2);
                prop_assert_eq!(single.contains(&name), count == 1);
            }
        }

        #[test]
        fn search_results_contain_query(q in "[a-cA-C0-9]{0,2}") {
            let d = dataset(&[("aBc1", 0.0, 0.0), ("cab2", 0.0, 0.0), ("C0", 0.0, 0.0), ("ABCABC", 0.0, 0.0)]);
            let hits = search_names(&d, &q);
            for h in &hits {
                prop_assert!(h.to_lowercase().contains(&q.to_lowercase()));
            }
            prop_assert_eq!(hits, search_names(&d, &q));
        }
    }
}
