//! Cut-softening shift schedules.
//!
//! Before a cut the outgoing shot is slowly shifted so its subject drifts to
//! the midpoint between the two subjects' disparities; the incoming shot
//! starts at that midpoint and drifts back to its own framing. The viewer's
//! vergence never has to jump at the cut.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::comfort::{ComfortLimits, ComfortReport, Probe};
use crate::error::{Error, Result};
use crate::geometry::{roundness_factor, Geometry};
use crate::project::ShotRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampProfile {
    #[default]
    Linear,
    /// Smoothstep; same endpoints as linear.
    EaseInOut,
}

impl RampProfile {
    fn weight(self, u: f64) -> f64 {
        match self {
            RampProfile::Linear => u,
            RampProfile::EaseInOut => u * u * (3.0 - 2.0 * u),
        }
    }
}

fn default_ramp_seconds() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutSpec {
    /// Outgoing subject disparity at the cut.
    pub d1_frac: f64,
    /// Incoming subject disparity at the cut.
    pub d2_frac: f64,
    #[serde(default = "default_ramp_seconds")]
    pub ramp_seconds: f64,
    pub fps: f64,
    #[serde(default)]
    pub profile: RampProfile,
}

impl CutSpec {
    pub fn new(d1: f64, d2: f64, fps: f64) -> Self {
        Self {
            d1_frac: d1,
            d2_frac: d2,
            ramp_seconds: 1.0,
            fps,
            profile: RampProfile::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d1_frac.is_finite() && self.d2_frac.is_finite()) {
            return Err(Error::param("d1_frac/d2_frac", "must be finite"));
        }
        if !(self.ramp_seconds > 0.0 && self.ramp_seconds.is_finite()) {
            return Err(Error::param("ramp_seconds", format!("must be > 0, got {}", self.ramp_seconds)));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::param("fps", format!("must be > 0, got {}", self.fps)));
        }
        Ok(())
    }

    /// Frames per ramp, at least two so both endpoints are sampled.
    pub fn ramp_frames(&self) -> usize {
        ((self.ramp_seconds * self.fps).round() as usize).max(2)
    }
}

/// Shift applied to one frame. Outgoing frames are numbered `-n..=-1`
/// relative to the cut; incoming frames `0..n`, frame 0 being the first
/// frame after the cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameShift {
    pub frame: i64,
    pub shift_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampSide {
    Outgoing,
    Incoming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPlan {
    pub outgoing: Vec<FrameShift>,
    pub incoming: Vec<FrameShift>,
    pub meet_disparity_frac: f64,
}

impl TransitionPlan {
    /// `side,frame_index,d0` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,frame_index,d0\n");
        for (side, shifts) in [("outgoing", &self.outgoing), ("incoming", &self.incoming)] {
            for s in shifts {
                let _ = writeln!(out, "{side},{},{}", s.frame, s.shift_frac);
            }
        }
        out
    }

    pub fn frames(&self) -> impl Iterator<Item = (RampSide, FrameShift)> + '_ {
        self.outgoing
            .iter()
            .map(|s| (RampSide::Outgoing, *s))
            .chain(self.incoming.iter().map(|s| (RampSide::Incoming, *s)))
    }
}

/// Linear (or eased) shift ramps on either side of a cut.
pub fn plan_transition(spec: &CutSpec) -> Result<TransitionPlan> {
    spec.validate()?;
    let n = spec.ramp_frames();
    let out_end = (spec.d2_frac - spec.d1_frac) / 2.0;
    let in_start = (spec.d1_frac - spec.d2_frac) / 2.0;
    let last = (n - 1) as f64;

    let outgoing = (0..n)
        .map(|k| FrameShift {
            frame: k as i64 - n as i64,
            // `+ 0.0` folds -0.0 into 0.0
            shift_frac: out_end * spec.profile.weight(k as f64 / last) + 0.0,
        })
        .collect();
    let incoming = (0..n)
        .map(|k| FrameShift {
            frame: k as i64,
            shift_frac: in_start * (1.0 - spec.profile.weight(k as f64 / last)) + 0.0,
        })
        .collect();

    Ok(TransitionPlan {
        outgoing,
        incoming,
        meet_disparity_frac: (spec.d1_frac + spec.d2_frac) / 2.0,
    })
}

/// Re-checks comfort on every planned frame of both shots with the planned
/// shift applied on top of each shot's own shift.
pub fn validate_transition(
    plan: &TransitionPlan,
    outgoing: &ShotRecord,
    incoming: &ShotRecord,
    view: &Geometry,
    limits: &ComfortLimits,
) -> Result<ComfortReport> {
    limits.validate()?;
    let mut probes = Vec::with_capacity(4 * (plan.outgoing.len() + plan.incoming.len()));
    for (side, shift) in plan.frames() {
        let (shot, index) = match side {
            RampSide::Outgoing => (outgoing, outgoing.frames.len() as i64 + shift.frame),
            RampSide::Incoming => (incoming, shift.frame),
        };
        let stats = usize::try_from(index)
            .ok()
            .and_then(|i| shot.frames.get(i))
            .ok_or_else(|| Error::MissingFrameStats {
                shot: shot.id.clone(),
                frame: index,
            })?;
        for (what, d) in [("min", stats.min_disparity_frac), ("max", stats.max_disparity_frac)] {
            let label = format!("{}[{index}].{what}", shot.id);
            probes.push(Probe::new(view, label, shot.display_disparity(d) + shift.shift_frac)?);
        }
    }
    let roundness = roundness_factor(&outgoing.shoot, view).min(roundness_factor(&incoming.shoot, view));
    Ok(ComfortReport::from_probes(probes, roundness, limits))
}
