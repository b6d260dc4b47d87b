//! Synthetic disparity statistics for analytic scenes: fronto-parallel
//! planes at known depths, optionally dollying between two depths over the
//! shot. Used to author fixtures; real projects ingest measured statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{disparity_from_depth, Depth, Geometry};
use crate::layout::MaskSpec;
use crate::project::{FrameStats, ShotRecord};

fn full_width() -> f64 {
    1.0
}

fn default_border_band() -> f64 {
    0.05
}

fn unit_scale() -> f64 {
    1.0
}

/// A plane spanning `[x_min, x_max]` of the frame width (0 = left edge).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub z_m: Depth,
    /// Depth on the last frame; the plane moves linearly in depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_end_m: Option<Depth>,
    #[serde(default)]
    pub x_min: f64,
    #[serde(default = "full_width")]
    pub x_max: f64,
    #[serde(default)]
    pub subject: bool,
}

impl PlaneSpec {
    pub fn at(z: Depth) -> Self {
        Self {
            z_m: z,
            z_end_m: None,
            x_min: 0.0,
            x_max: 1.0,
            subject: false,
        }
    }

    pub fn spanning(mut self, x_min: f64, x_max: f64) -> Self {
        self.x_min = x_min;
        self.x_max = x_max;
        self
    }

    pub fn moving_to(mut self, z_end: Depth) -> Self {
        self.z_end_m = Some(z_end);
        self
    }

    pub fn as_subject(mut self) -> Self {
        self.subject = true;
        self
    }

    fn depth_at(&self, t: f64) -> Depth {
        match (self.z_m, self.z_end_m) {
            (Depth::Finite(a), Some(Depth::Finite(b))) => Depth::Finite(a + (b - a) * t),
            (z, Some(end)) if z != end && t >= 1.0 => end,
            (z, _) => z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthShot {
    pub id: String,
    pub shoot: Geometry,
    pub fps: f64,
    pub frame_count: usize,
    #[serde(default)]
    pub shift_frac: f64,
    #[serde(default = "unit_scale")]
    pub image_scale: f64,
    pub planes: Vec<PlaneSpec>,
    /// A plane reaching within this fraction of an edge counts as touching it.
    #[serde(default = "default_border_band")]
    pub border_band_frac: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskSpec>,
}

/// Statistics of one frame given each plane's depth.
fn frame_stats(shoot: &Geometry, planes: &[(PlaneSpec, Depth)], band: f64) -> Result<FrameStats> {
    let mut d = Vec::with_capacity(planes.len());
    for (p, z) in planes {
        d.push((p, disparity_from_depth(shoot, *z)?));
    }
    let min = d.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let max = d.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    // an edge no plane reaches shows the farthest content
    let edge = |touches: &dyn Fn(&PlaneSpec) -> bool| {
        d.iter()
            .filter(|(p, _)| touches(p))
            .map(|x| x.1)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
            .unwrap_or(max)
    };
    let left = edge(&|p| p.x_min <= band);
    let right = edge(&|p| p.x_max >= 1.0 - band);
    let mut stats = FrameStats::new(min, max).with_borders(left, right);
    if let Some((_, s)) = d.iter().find(|(p, _)| p.subject) {
        stats = stats.with_subject(*s);
    }
    Ok(stats)
}

/// Builds a shot record whose statistics follow exactly from the planes.
pub fn synth_shot(spec: &SynthShot) -> Result<ShotRecord> {
    if spec.planes.is_empty() {
        return Err(Error::param("planes", "at least one plane is required"));
    }
    if !(0.0..0.5).contains(&spec.border_band_frac) {
        return Err(Error::param("border_band_frac", "must be in [0, 0.5)"));
    }
    for (i, p) in spec.planes.iter().enumerate() {
        if !(0.0 <= p.x_min && p.x_min < p.x_max && p.x_max <= 1.0) {
            return Err(Error::param(
                format!("planes[{i}]"),
                format!("need 0 <= x_min < x_max <= 1, got {}..{}", p.x_min, p.x_max),
            ));
        }
    }
    let mut frames = Vec::with_capacity(spec.frame_count);
    for k in 0..spec.frame_count {
        let t = if spec.frame_count > 1 {
            k as f64 / (spec.frame_count - 1) as f64
        } else {
            0.0
        };
        let at: Vec<(PlaneSpec, Depth)> = spec.planes.iter().map(|p| (*p, p.depth_at(t))).collect();
        frames.push(frame_stats(&spec.shoot, &at, spec.border_band_frac)?);
    }
    let mut shot = ShotRecord::new(spec.id.clone(), spec.shoot, spec.fps, frames);
    shot.shift_frac = spec.shift_frac;
    shot.image_scale = spec.image_scale;
    shot.mask = spec.mask;
    shot.validate()?;
    Ok(shot)
}
