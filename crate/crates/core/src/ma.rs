//! M/A statistics, significance classification and the diverging shade ramp.
//!
//! For a gene with intensities `r` and `g` in the two conditions:
//!
//! - `M = log2(r / g)`, the log fold change (y-axis)
//! - `A = 0.5 * log2(r * g)`, the mean log expression (x-axis)
//!
//! Both are computed as sums of per-condition logs so that products of very
//! large or very small intensities never overflow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest p-value used when shading; a reported `p = 0` would otherwise map
/// to an infinite number of decades.
pub const SHADE_P_FLOOR: f64 = 1e-300;

/// Default number of decades between `alpha` and the darkest shade.
pub const DEFAULT_SHADE_DEPTH: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaError {
    #[error("intensity must be positive, got {value}")]
    NonPositiveIntensity { value: f64 },
    #[error("p-value must lie in [0, 1], got {value}")]
    PValueOutOfRange { value: f64 },
    #[error("significance level must lie in (0, 1], got {value}")]
    AlphaOutOfRange { value: f64 },
}

impl MaError {
    pub fn code(&self) -> &'static str {
        match self {
            MaError::NonPositiveIntensity { .. } => "NonPositiveIntensity",
            MaError::PValueOutOfRange { .. } => "PValueOutOfRange",
            MaError::AlphaOutOfRange { .. } => "AlphaOutOfRange",
        }
    }
}

/// A strictly positive signal intensity or read count.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Intensity(f64);

impl Intensity {
    pub fn new(value: f64) -> Result<Self, MaError> {
        if value.is_finite() && value > 0.0 {
            Ok(Intensity(value))
        } else {
            Err(MaError::NonPositiveIntensity { value })
        }
    }

    /// Adds `pseudocount` before validating. A pseudocount of zero is the
    /// same as [`Intensity::new`].
    pub fn with_pseudocount(raw: f64, pseudocount: f64) -> Result<Self, MaError> {
        Intensity::new(raw + pseudocount).map_err(|_| MaError::NonPositiveIntensity { value: raw })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Intensity {
    type Error = MaError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Intensity::new(value)
    }
}

impl From<Intensity> for f64 {
    fn from(i: Intensity) -> f64 {
        i.0
    }
}

/// Position of one gene on the plot: `a` on the x-axis, `m` on the y-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaPoint {
    pub m: f64,
    pub a: f64,
}

pub fn compute_ma(r: Intensity, g: Intensity) -> MaPoint {
    let lr = r.0.log2();
    let lg = g.0.log2();
    MaPoint {
        m: lr - lg,
        a: 0.5 * (lr + lg),
    }
}

/// Convenience for raw numbers: applies the pseudocount, validates, computes.
pub fn ma_from_raw(r: f64, g: f64, pseudocount: f64) -> Result<MaPoint, MaError> {
    Ok(compute_ma(
        Intensity::with_pseudocount(r, pseudocount)?,
        Intensity::with_pseudocount(g, pseudocount)?,
    ))
}

/// A p-value in `[0, 1]`, or missing.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "Option<f64>", into = "Option<f64>")]
pub struct PValue(Option<f64>);

impl PValue {
    pub const MISSING: PValue = PValue(None);

    pub fn new(value: f64) -> Result<Self, MaError> {
        if (0.0..=1.0).contains(&value) {
            Ok(PValue(Some(value)))
        } else {
            Err(MaError::PValueOutOfRange { value })
        }
    }

    pub fn get(self) -> Option<f64> {
        self.0
    }

    pub fn is_missing(self) -> bool {
        self.0.is_none()
    }
}

impl TryFrom<Option<f64>> for PValue {
    type Error = MaError;

    fn try_from(value: Option<f64>) -> Result<Self, Self::Error> {
        match value {
            Some(v) => PValue::new(v),
            None => Ok(PValue::MISSING),
        }
    }
}

impl From<PValue> for Option<f64> {
    fn from(p: PValue) -> Option<f64> {
        p.0
    }
}

/// Significance threshold `alpha` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SignificanceLevel(f64);

impl SignificanceLevel {
    /// Slider presets offered by the UI.
    pub const PRESETS: [f64; 3] = [0.01, 0.05, 0.1];

    pub fn new(alpha: f64) -> Result<Self, MaError> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(SignificanceLevel(alpha))
        } else {
            Err(MaError::AlphaOutOfRange { value: alpha })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SignificanceLevel {
    type Error = MaError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        SignificanceLevel::new(value)
    }
}

impl From<SignificanceLevel> for f64 {
    fn from(s: SignificanceLevel) -> f64 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Up,
    Down,
    NotSignificant,
    MissingP,
}

impl Classification {
    pub const ALL: [Classification; 4] = [
        Classification::Up,
        Classification::Down,
        Classification::NotSignificant,
        Classification::MissingP,
    ];

    pub fn is_significant(self) -> bool {
        matches!(self, Classification::Up | Classification::Down)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Up => "up",
            Classification::Down => "down",
            Classification::NotSignificant => "not_significant",
            Classification::MissingP => "missing_p",
        }
    }
}

/// Significance uses the strict test `p < alpha`; a gene sitting exactly on
/// `M = 0` has no direction and is never significant.
pub fn classify(point: MaPoint, p: PValue, alpha: SignificanceLevel) -> Classification {
    match p.0 {
        None => Classification::MissingP,
        Some(p) if p < alpha.0 && point.m > 0.0 => Classification::Up,
        Some(p) if p < alpha.0 && point.m < 0.0 => Classification::Down,
        Some(_) => Classification::NotSignificant,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseColor {
    Red,
    Blue,
    Grey,
    Yellow,
}

impl From<Classification> for BaseColor {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Up => BaseColor::Red,
            Classification::Down => BaseColor::Blue,
            Classification::NotSignificant => BaseColor::Grey,
            Classification::MissingP => BaseColor::Yellow,
        }
    }
}

/// Base hue plus a darkness in `[0, 1]`. Grey and yellow are never shaded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadedColor {
    pub base: BaseColor,
    pub intensity: f64,
}

pub fn shade(
    classification: Classification,
    p: PValue,
    alpha: SignificanceLevel,
    depth: f64,
) -> ShadedColor {
    let base = BaseColor::from(classification);
    let intensity = match (base, p.0) {
        (BaseColor::Red | BaseColor::Blue, Some(p)) => {
            let p = p.max(SHADE_P_FLOOR);
            ((alpha.0.log10() - p.log10()) / depth).clamp(0.0, 1.0)
        }
        _ => 0.0,
    };
    ShadedColor { base, intensity }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
        Rgb(mix(self.0, other.0), mix(self.1, other.1), mix(self.2, other.2))
    }
}

/// Concrete colours for the four classes. Red and blue are linear ramps from
/// the light endpoint (intensity 0) to the dark endpoint (intensity 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub red: (Rgb, Rgb),
    pub blue: (Rgb, Rgb),
    pub grey: Rgb,
    pub yellow: Rgb,
    pub tracked_outline: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            red: (Rgb(0xfc, 0x92, 0x72), Rgb(0x67, 0x00, 0x0d)),
            blue: (Rgb(0x9e, 0xca, 0xe1), Rgb(0x08, 0x30, 0x6b)),
            grey: Rgb(0xbd, 0xbd, 0xbd),
            yellow: Rgb(0xf2, 0xc8, 0x0f),
            tracked_outline: Rgb(0x00, 0xa6, 0x3c),
        }
    }
}

impl Palette {
    pub fn color(&self, shade: ShadedColor) -> Rgb {
        let t = shade.intensity.clamp(0.0, 1.0);
        match shade.base {
            BaseColor::Red => self.red.0.lerp(self.red.1, t),
            BaseColor::Blue => self.blue.0.lerp(self.blue.1, t),
            BaseColor::Grey => self.grey,
            BaseColor::Yellow => self.yellow,
        }
    }
}
