//! Shooting and viewing geometry, and the depth map between them.
//!
//! A [`Geometry`] is the triple (interaxial `b`, convergence distance `H`,
//! convergence-plane width `W`). The same type describes a camera rig and a
//! viewing room: for a room, `b` is the viewer's eye interocular, `H` the
//! distance to the screen and `W` the screen width.
//!
//! A point at depth `Z` in front of the rig lands on the convergence plane
//! with disparity
//!
//! ```text
//! d = (b / W) (Z - H) / Z
//! ```
//!
//! expressed as a fraction of `W`. Shown on a screen with an extra
//! horizontal shift `d0`, it is perceived at
//!
//! ```text
//! Z' = H' / (1 - (W' / b') (d + d0))
//! ```
//!
//! which is a homography in depth. When `d + d0` reaches `b'/W'` the eyes are
//! parallel (`Z' = ∞`); beyond it they diverge.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for equality checks on closed-form quantities.
pub const REL_TOL: f64 = 1e-9;
/// Absolute floor used together with [`REL_TOL`].
pub const ABS_TOL: f64 = 1e-12;

/// `a == b` within [`REL_TOL`] (relative) or [`ABS_TOL`] (absolute).
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()) + ABS_TOL
}

/// Whether disparity `s` sits on the parallel-gaze limit `limit`.
pub(crate) fn at_limit(s: f64, limit: f64) -> bool {
    (s - limit).abs() <= REL_TOL * limit.abs()
}

/// Interaxial, convergence distance and convergence-plane width, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    #[serde(rename = "interocular_m")]
    interocular: f64,
    #[serde(rename = "convergence_distance_m")]
    distance: f64,
    #[serde(rename = "screen_width_m")]
    width: f64,
}

impl Geometry {
    pub fn new(interocular: f64, distance: f64, width: f64) -> Result<Self> {
        if !(interocular >= 0.0 && interocular.is_finite()) {
            return Err(Error::InvalidGeometry {
                field: "interocular_m",
                value: interocular,
                reason: "must be finite and >= 0",
            });
        }
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::InvalidGeometry {
                field: "convergence_distance_m",
                value: distance,
                reason: "must be finite and > 0",
            });
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidGeometry {
                field: "screen_width_m",
                value: width,
                reason: "must be finite and > 0",
            });
        }
        Ok(Self {
            interocular,
            distance,
            width,
        })
    }

    /// Interaxial (rig) or interocular (viewer) distance `b`.
    pub fn interocular(&self) -> f64 {
        self.interocular
    }

    /// Convergence (screen) distance `H`.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Convergence-plane (screen) width `W`.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Disparity of a point at infinity, `b / W`. For a viewing geometry this
    /// is the parallel-gaze limit.
    pub fn infinity_disparity(&self) -> f64 {
        self.interocular / self.width
    }

    /// All three lengths multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.interocular * k, self.distance * k, self.width * k)
    }

    pub fn with_interocular(&self, b: f64) -> Result<Self> {
        Self::new(b, self.distance, self.width)
    }

    pub fn with_width(&self, w: f64) -> Result<Self> {
        Self::new(self.interocular, self.distance, w)
    }
}

impl<'de> Deserialize<'de> for Geometry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            interocular_m: f64,
            convergence_distance_m: f64,
            screen_width_m: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        Geometry::new(raw.interocular_m, raw.convergence_distance_m, raw.screen_width_m)
            .map_err(de::Error::custom)
    }
}

/// Distance from the optical-center baseline, positive in front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Depth {
    Finite(f64),
    Infinite,
}

impl Depth {
    /// Accepts any positive value; `f64::INFINITY` maps to [`Depth::Infinite`].
    pub fn new(z: f64) -> Result<Self> {
        if z == f64::INFINITY {
            Ok(Depth::Infinite)
        } else if z > 0.0 && z.is_finite() {
            Ok(Depth::Finite(z))
        } else {
            Err(Error::NonPositiveDepth(z))
        }
    }

    /// Meters, with `f64::INFINITY` for [`Depth::Infinite`].
    pub fn meters(self) -> f64 {
        match self {
            Depth::Finite(z) => z,
            Depth::Infinite => f64::INFINITY,
        }
    }

    /// `1 / Z` in diopters, zero at infinity.
    pub fn diopters(self) -> f64 {
        match self {
            Depth::Finite(z) => 1.0 / z,
            Depth::Infinite => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Depth::Infinite)
    }

    fn validated(self) -> Result<f64> {
        match self {
            Depth::Finite(z) if z > 0.0 && z.is_finite() => Ok(z),
            Depth::Finite(z) => Err(Error::NonPositiveDepth(z)),
            Depth::Infinite => Ok(f64::INFINITY),
        }
    }
}

impl PartialOrd for Depth {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.meters().partial_cmp(&other.meters())
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(z) => write!(f, "{z}"),
            Depth::Infinite => f.write_str("infinity"),
        }
    }
}

impl From<Depth> for Perceived {
    fn from(d: Depth) -> Self {
        Perceived::At(d)
    }
}

impl Serialize for Depth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Depth::Finite(z) => serializer.serialize_f64(*z),
            Depth::Infinite => serializer.serialize_str("infinity"),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrWord {
    Number(f64),
    Word(String),
}

impl<'de> Deserialize<'de> for Depth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match NumberOrWord::deserialize(deserializer)? {
            NumberOrWord::Number(z) => Depth::new(z).map_err(de::Error::custom),
            NumberOrWord::Word(w) if is_infinity_word(&w) => Ok(Depth::Infinite),
            NumberOrWord::Word(w) => Err(de::Error::custom(format!(
                "expected a positive depth in meters or \"infinity\", got \"{w}\""
            ))),
        }
    }
}

fn is_infinity_word(w: &str) -> bool {
    matches!(w, "infinity" | "inf" | "Infinity" | "∞")
}

/// Where a displayed point is seen, or divergence when the eyes would have
/// to turn outwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perceived {
    At(Depth),
    Divergent,
}

impl Perceived {
    pub fn depth(self) -> Option<Depth> {
        match self {
            Perceived::At(d) => Some(d),
            Perceived::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, Perceived::Divergent)
    }

    /// The token used in CSV exports: meters, `infinity` or `divergent`.
    pub fn token(self) -> String {
        match self {
            Perceived::At(d) => d.to_string(),
            Perceived::Divergent => "divergent".to_owned(),
        }
    }
}

impl fmt::Display for Perceived {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl Serialize for Perceived {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Perceived::At(d) => d.serialize(serializer),
            Perceived::Divergent => serializer.serialize_str("divergent"),
        }
    }
}

impl<'de> Deserialize<'de> for Perceived {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match NumberOrWord::deserialize(deserializer)? {
            NumberOrWord::Number(z) => Depth::new(z)
                .map(Perceived::At)
                .map_err(de::Error::custom),
            NumberOrWord::Word(w) if w == "divergent" => Ok(Perceived::Divergent),
            NumberOrWord::Word(w) if is_infinity_word(&w) => Ok(Perceived::At(Depth::Infinite)),
            NumberOrWord::Word(w) => Err(de::Error::custom(format!(
                "expected meters, \"infinity\" or \"divergent\", got \"{w}\""
            ))),
        }
    }
}

/// Where scene infinity ends up in the viewing space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Infinity is seen at infinity.
    OrthoInfinite,
    /// Points short of infinity already reach infinity; the far scene diverges.
    HyperInfinite,
    /// Infinity is seen at a finite distance.
    HypoInfinite,
}

/// Disparity (fraction of `W`) of a point at depth `z` under rig `g`.
pub fn disparity_from_depth(g: &Geometry, z: Depth) -> Result<f64> {
    let z = z.validated()?;
    if g.interocular == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(g.infinity_disparity());
    }
    Ok(g.infinity_disparity() * ((z - g.distance) / z))
}

/// Depth that produces disparity `d` under rig `g`; inverse of
/// [`disparity_from_depth`].
pub fn depth_from_disparity(g: &Geometry, d: f64) -> Result<Depth> {
    if !d.is_finite() {
        return Err(Error::param("disparity_frac", "must be finite"));
    }
    if g.interocular == 0.0 {
        return if d == 0.0 {
            Err(Error::AmbiguousDepth)
        } else {
            Err(Error::param(
                "disparity_frac",
                "a zero-interaxial rig only produces zero disparity",
            ))
        };
    }
    let limit = g.infinity_disparity();
    if at_limit(d, limit) {
        return Ok(Depth::Infinite);
    }
    if d > limit {
        return Err(Error::DisparityBeyondInfinity { disparity: d, limit });
    }
    Ok(Depth::Finite(g.distance / (1.0 - d / limit)))
}

/// Perceived depth of screen disparity `d` shown with extra shift `d0`.
///
/// Fails only for a zero-interocular viewer shown non-zero disparity.
pub fn perceived_depth(view: &Geometry, d: f64, d0: f64) -> Result<Perceived> {
    let s = d + d0;
    if !s.is_finite() {
        return Err(Error::param("disparity_frac", "must be finite"));
    }
    if view.interocular == 0.0 {
        return if s == 0.0 {
            Ok(Perceived::At(Depth::Finite(view.distance)))
        } else {
            Err(Error::FlatViewer(s))
        };
    }
    let limit = view.infinity_disparity();
    if at_limit(s, limit) {
        return Ok(Perceived::At(Depth::Infinite));
    }
    if s > limit {
        return Ok(Perceived::Divergent);
    }
    let denom = 1.0 - s / limit;
    if denom <= 0.0 {
        // s is below the limit but within rounding of it
        return Ok(Perceived::At(Depth::Infinite));
    }
    Ok(Perceived::At(Depth::Finite(view.distance / denom)))
}

/// The map from scene depth to perceived depth for one rig, one room and one
/// image shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMapping {
    pub source: Geometry,
    pub target: Geometry,
    #[serde(rename = "shift_frac")]
    pub shift: f64,
    /// Scene depth seen at infinity; beyond it the eyes diverge.
    #[serde(rename = "pole_depth_m")]
    pub pole_depth: Option<Depth>,
    #[serde(rename = "infinity_image_m")]
    pub infinity_image: Perceived,
    pub classification: Classification,
}

impl DepthMapping {
    pub fn map(&self, z: Depth) -> Result<Perceived> {
        let d = disparity_from_depth(&self.source, z)?;
        perceived_depth(&self.target, d, self.shift)
    }

    /// Depth magnification at the screen plane, `∂Z'/∂Z` at `Z = H`.
    pub fn screen_plane_slope(&self) -> f64 {
        screen_plane_slope(&self.source, &self.target)
    }
}

/// Builds the depth map for rig `shoot`, room `view` and shift `d0`.
pub fn build_mapping(shoot: &Geometry, view: &Geometry, d0: f64) -> Result<DepthMapping> {
    if !d0.is_finite() {
        return Err(Error::param("shift_frac", "must be finite"));
    }
    let infinity_image = perceived_depth(view, shoot.infinity_disparity(), d0)?;
    let classification = match infinity_image {
        Perceived::At(Depth::Infinite) => Classification::OrthoInfinite,
        Perceived::At(Depth::Finite(_)) => Classification::HypoInfinite,
        Perceived::Divergent => Classification::HyperInfinite,
    };
    let pole_depth = if infinity_image.is_divergent() && shoot.interocular > 0.0 {
        Some(depth_from_disparity(shoot, view.infinity_disparity() - d0)?)
    } else {
        None
    };
    Ok(DepthMapping {
        source: *shoot,
        target: *view,
        shift: d0,
        pole_depth,
        infinity_image,
        classification,
    })
}

pub fn map_depth(m: &DepthMapping, z: Depth) -> Result<Perceived> {
    m.map(z)
}

/// `∂Z'/∂Z` at `Z = H` with no shift: `(b / (H W)) (H' W' / b')`.
pub fn screen_plane_slope(shoot: &Geometry, view: &Geometry) -> f64 {
    (shoot.interocular / (shoot.distance * shoot.width))
        * (view.distance * view.width / view.interocular)
}

/// Depth magnification over width magnification at the screen plane,
/// `(b H') / (b' H)`. Equal to one exactly when `b / H = b' / H'`.
pub fn roundness_factor(shoot: &Geometry, view: &Geometry) -> f64 {
    (shoot.interocular / view.interocular) * (view.distance / shoot.distance)
}

/// Nearness factor `N = H' / Z'`: 0 at infinity, 1 on the screen.
pub fn nearness_factor(view: &Geometry, z_perceived: Depth) -> f64 {
    match z_perceived {
        Depth::Finite(z) => view.distance / z,
        Depth::Infinite => 0.0,
    }
}

/// Returns the scale `W'/W` when `view` is `shoot` scaled uniformly.
pub fn is_homothetic(shoot: &Geometry, view: &Geometry) -> Option<f64> {
    let k = view.width / shoot.width;
    let baselines_match = if shoot.interocular == 0.0 || view.interocular == 0.0 {
        shoot.interocular == view.interocular
    } else {
        approx_eq(view.interocular / shoot.interocular, k)
    };
    (baselines_match && approx_eq(view.distance / shoot.distance, k)).then_some(k)
}
