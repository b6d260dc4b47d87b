//! Rig solver: picks interaxial, convergence distance, convergence-plane
//! width and image shift for a target room, scene and roundness.
//!
//! The subject goes on the screen plane (`H = z_subject`) and the interaxial
//! follows the depth consistency rule scaled by the target roundness,
//! `b = roundness * b' * H / H'`. If the comfort checks do not pass, an
//! image shift is tried first (when allowed), then the interaxial is shrunk
//! by bisection. Every comfort constraint is monotone in `b` at fixed `H`,
//! `W` and shift, so the feasible interaxials form an interval `[0, b*]`.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::comfort::{assess, Check, ComfortLimits, ComfortReport, SceneRange, Status};
use crate::error::{Error, Result};
use crate::geometry::{roundness_factor, Depth, Geometry, Perceived};

/// Bisection steps on the interaxial. 32 halvings of any interaxial below
/// 4 km leave a bracket under 1e-6 m.
pub const BASELINE_ITERATIONS: u32 = 32;
const SHIFT_ITERATIONS: u32 = 60;

/// Width of the convergence plane: fixed by framing, or left to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FieldWidth {
    #[default]
    Free,
    Fixed(f64),
}

impl Serialize for FieldWidth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            FieldWidth::Free => serializer.serialize_str("free"),
            FieldWidth::Fixed(w) => serializer.serialize_f64(*w),
        }
    }
}

impl<'de> Deserialize<'de> for FieldWidth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Width(f64),
            Word(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Width(w) => Ok(FieldWidth::Fixed(w)),
            Repr::Word(w) if w == "free" => Ok(FieldWidth::Free),
            Repr::Word(w) => Err(de::Error::custom(format!(
                "expected a width in meters or \"free\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveScene {
    pub z_near_m: Depth,
    pub z_subject_m: Depth,
    pub z_far_m: Depth,
}

fn unit_roundness() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub view: Geometry,
    pub scene: SolveScene,
    #[serde(default = "unit_roundness")]
    pub target_roundness: f64,
    #[serde(default)]
    pub field_width_at_subject_m: FieldWidth,
    #[serde(default)]
    pub limits: ComfortLimits,
    #[serde(default)]
    pub allow_shift: bool,
    /// Pins the convergence distance instead of using the subject distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_distance_m: Option<f64>,
}

impl SolveRequest {
    pub fn new(view: Geometry, z_near: Depth, z_subject: Depth, z_far: Depth) -> Self {
        Self {
            view,
            scene: SolveScene {
                z_near_m: z_near,
                z_subject_m: z_subject,
                z_far_m: z_far,
            },
            target_roundness: 1.0,
            field_width_at_subject_m: FieldWidth::Free,
            limits: ComfortLimits::default(),
            allow_shift: false,
            convergence_distance_m: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        let s = &self.scene;
        SceneRange::new(s.z_near_m, s.z_far_m)?;
        if !(s.z_near_m <= s.z_subject_m && s.z_subject_m <= s.z_far_m) {
            return Err(Error::param(
                "scene",
                format!(
                    "need z_near_m <= z_subject_m <= z_far_m, got {} / {} / {}",
                    s.z_near_m, s.z_subject_m, s.z_far_m
                ),
            ));
        }
        if self.view.interocular() <= 0.0 {
            return Err(Error::param("view.interocular_m", "must be > 0"));
        }
        if !(self.target_roundness > 0.0 && self.target_roundness.is_finite()) {
            return Err(Error::param(
                "target_roundness",
                format!("must be > 0, got {}", self.target_roundness),
            ));
        }
        if self.target_roundness < self.limits.min_roundness {
            return Err(Error::param(
                "target_roundness",
                format!(
                    "{} is below limits.min_roundness ({})",
                    self.target_roundness, self.limits.min_roundness
                ),
            ));
        }
        if let FieldWidth::Fixed(w) = self.field_width_at_subject_m {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param("field_width_at_subject_m", format!("must be > 0, got {w}")));
            }
        }
        match (self.convergence_distance_m, s.z_subject_m) {
            (Some(h), _) if !(h > 0.0 && h.is_finite()) => Err(Error::param(
                "convergence_distance_m",
                format!("must be finite and > 0, got {h}"),
            )),
            (None, Depth::Infinite) => Err(Error::param(
                "scene.z_subject_m",
                "a subject at infinity cannot sit on the screen plane; pin convergence_distance_m",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub shoot: Geometry,
    pub shift_frac: f64,
    pub achieved_roundness: f64,
    pub report: ComfortReport,
    /// Relaxations applied to reach a passing report, in order.
    pub adjustments: Vec<String>,
}

/// Every check except roundness passes; roundness is what the solver trades.
fn comfortable(report: &ComfortReport) -> bool {
    report
        .verdicts
        .iter()
        .all(|v| v.check == Check::Roundness || v.status == Status::Pass)
}

fn failing_checks(report: &ComfortReport) -> String {
    let names: Vec<String> = report
        .verdicts
        .iter()
        .filter(|v| v.check != Check::Roundness && v.status != Status::Pass)
        .map(|v| format!("{:?}", v.check).to_lowercase())
        .collect();
    names.join(" + ")
}

struct Problem<'a> {
    req: &'a SolveRequest,
    scene: SceneRange,
    distance: f64,
    width: f64,
}

impl Problem<'_> {
    fn rig(&self, b: f64) -> Result<Geometry> {
        Geometry::new(b, self.distance, self.width)
    }

    fn report(&self, b: f64, d0: f64) -> Result<ComfortReport> {
        assess(&self.rig(b)?, &self.req.view, d0, &self.scene, &self.req.limits)
    }

    /// Which way the shift would have to move: (`needs_more`, `needs_less`).
    fn pressure(&self, b: f64, d0: f64) -> Result<(bool, bool)> {
        let report = self.report(b, d0)?;
        let limits = &self.req.limits;
        let screen = self.req.view.distance();
        let (mut more, mut less) = (false, false);
        for p in &report.probes {
            let z = match p.perceived_m {
                Perceived::Divergent => {
                    less = true;
                    continue;
                }
                Perceived::At(z) => z,
            };
            let a = p.angular_disparity_deg;
            // percival_deg <= fusion_deg, so this covers fusion as well
            if a > limits.percival_deg {
                more = true;
            }
            if a < -limits.percival_deg {
                less = true;
            }
            if p.diopter_conflict.is_some_and(|c| c > limits.dof_diopters) {
                if z.meters() < screen {
                    more = true;
                } else {
                    less = true;
                }
            }
        }
        Ok((more, less))
    }

    /// Smallest-magnitude shift that makes interaxial `b` comfortable.
    fn find_shift(&self, b: f64) -> Result<Option<f64>> {
        let (more, less) = self.pressure(b, 0.0)?;
        match (more, less) {
            (false, false) => Ok(Some(0.0)),
            (true, true) => Ok(None),
            (true, false) => {
                // past this shift the far end of the scene diverges
                let far = self.report(b, 0.0)?.probes.iter().map(|p| p.disparity_frac).fold(f64::NEG_INFINITY, f64::max);
                let upper = self.req.view.infinity_disparity() - far;
                if !(upper > 0.0) || self.pressure(b, upper)?.0 {
                    return Ok(None);
                }
                let (mut lo, mut hi) = (0.0, upper);
                for _ in 0..SHIFT_ITERATIONS {
                    let mid = 0.5 * (lo + hi);
                    if self.pressure(b, mid)?.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok((!self.pressure(b, hi)?.1).then_some(hi))
            }
            (false, true) => {
                let spread = self
                    .report(b, 0.0)?
                    .probes
                    .iter()
                    .map(|p| p.disparity_frac.abs())
                    .fold(0.0, f64::max);
                let lower = -(spread + 0.5);
                if self.pressure(b, lower)?.1 {
                    return Ok(None);
                }
                let (mut lo, mut hi) = (lower, 0.0);
                for _ in 0..SHIFT_ITERATIONS {
                    let mid = 0.5 * (lo + hi);
                    if self.pressure(b, mid)?.1 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Ok((!self.pressure(b, lo)?.0).then_some(lo))
            }
        }
    }

    /// A comfortable shift for interaxial `b`, if any.
    fn attempt(&self, b: f64) -> Result<Option<f64>> {
        if comfortable(&self.report(b, 0.0)?) {
            return Ok(Some(0.0));
        }
        if !self.req.allow_shift {
            return Ok(None);
        }
        self.find_shift(b)
    }
}

/// Solves for a rig that passes every comfort check.
pub fn solve(req: &SolveRequest) -> Result<SolveResult> {
    req.validate()?;
    let view = &req.view;
    let distance = match (req.convergence_distance_m, req.scene.z_subject_m) {
        (Some(h), _) => h,
        (None, Depth::Finite(z)) => z,
        (None, Depth::Infinite) => unreachable!("rejected by validate"),
    };
    let target_b = req.target_roundness * view.interocular() * distance / view.distance();
    let width = match req.field_width_at_subject_m {
        FieldWidth::Fixed(w) => w,
        FieldWidth::Free => target_b * view.width() / view.interocular(),
    };
    let problem = Problem {
        req,
        scene: SceneRange::new(req.scene.z_near_m, req.scene.z_far_m)?,
        distance,
        width,
    };

    let mut adjustments = Vec::new();
    let (b, d0) = match problem.attempt(target_b)? {
        Some(d0) => (target_b, d0),
        None => {
            let binding = failing_checks(&problem.report(target_b, 0.0)?);
            let mut best = problem.attempt(0.0)?.ok_or_else(|| Error::Infeasible {
                binding: format!("{binding} fails even with a zero interaxial"),
            })?;
            let (mut lo, mut hi) = (0.0, target_b);
            for _ in 0..BASELINE_ITERATIONS {
                let mid = 0.5 * (lo + hi);
                match problem.attempt(mid)? {
                    Some(d0) => {
                        lo = mid;
                        best = d0;
                    }
                    None => hi = mid,
                }
            }
            let achieved = roundness_factor(&problem.rig(lo)?, view);
            if achieved < req.limits.min_roundness {
                return Err(Error::Infeasible {
                    binding: format!(
                        "clearing {binding} needs interaxial {lo:.6} m, roundness {achieved:.4} below min_roundness {}",
                        req.limits.min_roundness
                    ),
                });
            }
            adjustments.push(format!(
                "interaxial reduced from {target_b:.6} m to {lo:.6} m to clear {binding}; roundness {} -> {achieved:.6}",
                req.target_roundness
            ));
            (lo, best)
        }
    };
    if d0 != 0.0 {
        adjustments.push(format!("image shift d0 = {d0:.6} to bring the scene into the comfort zone"));
    }

    let shoot = problem.rig(b)?;
    let report = problem.report(b, d0)?;
    debug_assert_eq!(report.worst(), Status::Pass);
    Ok(SolveResult {
        shoot,
        shift_frac: d0,
        achieved_roundness: roundness_factor(&shoot, view),
        report,
        adjustments,
    })
}

/// Largest interaxial for convergence-plane width `width` and shift `d0` that
/// keeps scene infinity at or inside parallel gaze: `b/W + d0 <= b'/W'`.
pub fn max_baseline_no_divergence(view: &Geometry, width: f64, d0: f64) -> Result<f64> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::param("width_m", format!("must be > 0, got {width}")));
    }
    let limit = view.infinity_disparity();
    if d0 >= limit || crate::geometry::at_limit(d0, limit) {
        return Err(Error::Infeasible {
            binding: format!("shift {d0} alone reaches the divergence limit {limit}"),
        });
    }
    Ok((limit - d0) * width)
}
