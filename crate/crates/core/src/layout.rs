//! Floating window (proscenium) masks and subtitle depth placement.
//!
//! Masking a strip of width `m` (fraction of the screen width) on one edge of
//! one eye's image gives that window edge a crossed disparity of `-m`, which
//! floats the edge towards the viewer. An object nearer than the window edge
//! that touches the edge is cut off in only one eye: a window violation.
//! Only the left and right edges are checked; contact with the top or bottom
//! edge is tolerated.

use serde::{Deserialize, Serialize};

use crate::comfort::{angular_disparity, ComfortLimits};
use crate::error::{Error, Result};
use crate::geometry::{perceived_depth, Depth, Geometry, Perceived};
use crate::project::ShotRecord;

fn full_opacity() -> f64 {
    1.0
}

/// Per-side masks, as fractions of the screen width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSpec {
    /// Floats the left window edge.
    pub left_edge_mask: f64,
    /// Floats the right window edge.
    pub right_edge_mask: f64,
    /// Mask edge opacity. Carried for renderers; no geometric effect.
    #[serde(default = "full_opacity")]
    pub opacity: f64,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self {
            left_edge_mask: 0.0,
            right_edge_mask: 0.0,
            opacity: 1.0,
        }
    }
}

impl MaskSpec {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        let mask = Self {
            left_edge_mask: left,
            right_edge_mask: right,
            opacity: 1.0,
        };
        mask.validate()?;
        Ok(mask)
    }

    pub fn symmetric(m: f64) -> Self {
        Self {
            left_edge_mask: m,
            right_edge_mask: m,
            opacity: 1.0,
        }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left_edge_mask,
            Side::Right => self.right_edge_mask,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [
            ("left_edge_mask", self.left_edge_mask),
            ("right_edge_mask", self.right_edge_mask),
        ] {
            check_mask(name, m)?;
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::param("opacity", format!("must lie in [0, 1], got {}", self.opacity)));
        }
        Ok(())
    }
}

fn check_mask(name: &str, m: f64) -> Result<()> {
    if !(0.0..0.5).contains(&m) {
        return Err(Error::param(name, format!("must lie in [0, 0.5), got {m}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    fn border(self, f: &crate::project::FrameStats) -> Option<f64> {
        match self {
            Side::Left => f.left_border_min_frac,
            Side::Right => f.right_border_min_frac,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowViolation {
    pub frame: usize,
    pub side: Side,
    /// Displayed disparity of the offending object.
    pub object_disparity_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub left_edge_depth_m: Depth,
    pub right_edge_depth_m: Depth,
    pub violations: Vec<WindowViolation>,
}

/// Perceived depth of a window edge masked by `mask`:
/// `H' / (1 + (W'/b') mask)`.
pub fn window_depth(mask: f64, view: &Geometry) -> Result<Depth> {
    check_mask("mask", mask)?;
    match perceived_depth(view, -mask, 0.0)? {
        Perceived::At(z) => Ok(z),
        Perceived::Divergent => unreachable!("crossed disparity cannot diverge"),
    }
}

/// Lists every frame and side where an object nearer than the window edge
/// touches that edge.
pub fn check_window(shot: &ShotRecord, mask: &MaskSpec, view: &Geometry) -> Result<WindowReport> {
    mask.validate()?;
    let mut violations = Vec::new();
    for (frame, stats) in shot.frames.iter().enumerate() {
        for side in [Side::Left, Side::Right] {
            let border = side.border(stats).ok_or_else(|| Error::MissingBorderStats {
                shot: shot.id.clone(),
                frame,
                side: side.name(),
            })?;
            let d = shot.display_disparity(border);
            if d < -mask.get(side) {
                violations.push(WindowViolation {
                    frame,
                    side,
                    object_disparity_frac: d,
                });
            }
        }
    }
    Ok(WindowReport {
        left_edge_depth_m: window_depth(mask.left_edge_mask, view)?,
        right_edge_depth_m: window_depth(mask.right_edge_mask, view)?,
        violations,
    })
}

/// Smallest per-side masks that clear every violation of `shot`: each edge is
/// floated exactly to the nearest object touching it.
pub fn fix_window(shot: &ShotRecord, view: &Geometry) -> Result<MaskSpec> {
    let mut mask = MaskSpec::default();
    for (frame, stats) in shot.frames.iter().enumerate() {
        for side in [Side::Left, Side::Right] {
            let border = side.border(stats).ok_or_else(|| Error::MissingBorderStats {
                shot: shot.id.clone(),
                frame,
                side: side.name(),
            })?;
            let need = -shot.display_disparity(border);
            let slot = match side {
                Side::Left => &mut mask.left_edge_mask,
                Side::Right => &mut mask.right_edge_mask,
            };
            if need > *slot {
                *slot = need;
            }
        }
    }
    mask.validate()?;
    // the window must be placeable in this room
    window_depth(mask.left_edge_mask.max(mask.right_edge_mask), view)?;
    Ok(mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubtitleRegion {
    SpeakerAdjacent,
    Bottom,
    Top,
}

/// Nearest scene disparity in each candidate subtitle region.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_adjacent_min_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom_min_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_min_frac: Option<f64>,
}

impl RegionStats {
    /// Regions in preference order.
    fn candidates(&self) -> impl Iterator<Item = (SubtitleRegion, f64)> {
        [
            (SubtitleRegion::SpeakerAdjacent, self.speaker_adjacent_min_frac),
            (SubtitleRegion::Bottom, self.bottom_min_frac),
            (SubtitleRegion::Top, self.top_min_frac),
        ]
        .into_iter()
        .filter_map(|(r, m)| m.map(|m| (r, m)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitlePlan {
    pub region: SubtitleRegion,
    pub disparity_frac: f64,
    pub rationale: String,
    /// Set when the title's disparity falls outside the comfort zone.
    pub flagged: bool,
}

/// Places a title at the speaker's depth in the first region where nothing
/// is nearer; otherwise pulls it forward to the least-crowded region's
/// nearest content.
pub fn place_subtitle(
    speaker_disparity: f64,
    regions: &RegionStats,
    view: &Geometry,
    limits: &ComfortLimits,
) -> Result<SubtitlePlan> {
    if !speaker_disparity.is_finite() {
        return Err(Error::param("speaker_disparity_frac", "must be finite"));
    }
    if regions.candidates().next().is_none() {
        return Err(Error::param("regions", "at least one region is required"));
    }
    if let Some((_, m)) = regions.candidates().find(|(_, m)| !m.is_finite()) {
        return Err(Error::param("regions", format!("region minimum {m} is not finite")));
    }

    let (region, disparity, rationale) =
        match regions.candidates().find(|&(_, min)| speaker_disparity <= min) {
            Some((region, _)) => (
                region,
                speaker_disparity,
                "title at the speaker's depth; nothing in the region is nearer".to_owned(),
            ),
            None => {
                let (region, min) = regions
                    .candidates()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("at least one region");
                (
                    region,
                    min,
                    format!(
                        "scene content nearer than the speaker in every region; title pulled forward from {speaker_disparity} to {min}"
                    ),
                )
            }
        };

    let angle = angular_disparity(view, disparity);
    let flagged = angle.abs() > limits.percival_deg;
    let rationale = if flagged {
        format!("{rationale}; {angle:.3}° is outside the ±{}° comfort zone", limits.percival_deg)
    } else {
        rationale
    };
    Ok(SubtitlePlan {
        region,
        disparity_frac: disparity,
        rationale,
        flagged,
    })
}
