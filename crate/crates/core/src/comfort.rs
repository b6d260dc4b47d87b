//! Viewer comfort diagnostics.
//!
//! Turns displayed disparities into the quantities comfort rules are stated
//! in: vergence angles (degrees), accommodation/vergence mismatch (diopters)
//! and roundness. [`assess`] probes the near and far ends of a scene plus the
//! convergence plane and grades every check.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    disparity_from_depth, nearness_factor, perceived_depth, roundness_factor,
    Depth, Geometry, Perceived,
};

/// Comfort thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComfortLimits {
    /// Half-width of the eye's depth of field.
    pub dof_diopters: f64,
    /// Largest comfortable angular disparity (Percival's zone).
    pub percival_deg: f64,
    /// Largest fusible angular disparity.
    pub fusion_deg: f64,
    /// Disparity range considered easy to view; reported, not graded.
    pub easy_arcmin: f64,
    /// Smallest acceptable roundness factor.
    pub min_roundness: f64,
}

impl Default for ComfortLimits {
    fn default() -> Self {
        Self {
            dof_diopters: 0.2,
            percival_deg: 1.0,
            fusion_deg: 2.0,
            easy_arcmin: 35.0,
            min_roundness: 0.2,
        }
    }
}

impl ComfortLimits {
    /// Limits that only divergence can breach.
    pub fn unbounded() -> Self {
        Self {
            dof_diopters: f64::INFINITY,
            percival_deg: f64::INFINITY,
            fusion_deg: f64::INFINITY,
            easy_arcmin: f64::INFINITY,
            min_roundness: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dof_diopters", self.dof_diopters),
            ("percival_deg", self.percival_deg),
            ("fusion_deg", self.fusion_deg),
            ("easy_arcmin", self.easy_arcmin),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.min_roundness >= 0.0 && self.min_roundness.is_finite()) {
            return Err(Error::param(
                "min_roundness",
                format!("must be finite and >= 0, got {}", self.min_roundness),
            ));
        }
        if self.percival_deg > self.fusion_deg {
            return Err(Error::param(
                "percival_deg",
                format!(
                    "must not exceed fusion_deg ({} > {})",
                    self.percival_deg, self.fusion_deg
                ),
            ));
        }
        Ok(())
    }
}

/// In-focus depth interval around a focus distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusRange {
    #[serde(rename = "near_m")]
    pub near: Depth,
    #[serde(rename = "far_m")]
    pub far: Depth,
}

impl FocusRange {
    pub fn contains(&self, z: Depth) -> bool {
        self.near <= z && z <= self.far
    }
}

/// Depth range in focus at `distance` for a depth of field of `dof` diopters.
pub fn focus_range(distance: Depth, dof: f64) -> Result<FocusRange> {
    let z = match distance {
        Depth::Finite(z) if z > 0.0 && z.is_finite() => z,
        other => {
            return Err(Error::param(
                "distance_m",
                format!("focus distance must be finite and positive, got {other}"),
            ))
        }
    };
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::param("dof_diopters", format!("must be positive, got {dof}")));
    }
    let near = 1.0 / (1.0 / z + dof);
    let far_diopters = 1.0 / z - dof;
    let far = if far_diopters <= 0.0 {
        Depth::Infinite
    } else {
        Depth::Finite(1.0 / far_diopters)
    };
    Ok(FocusRange {
        near: Depth::Finite(near),
        far,
    })
}

/// Vergence change, in degrees, between fixating the screen and fixating a
/// point shown with screen disparity `d_display`.
///
/// Positive for crossed (in front of the screen) disparities. The vergence
/// angle for a physical screen parallax `p = d W'` is `2 atan((b' - p) / 2H')`,
/// which equals `2 atan(b' / 2Z')` for the perceived depth `Z'` and keeps
/// going negative past parallel gaze.
pub fn angular_disparity(view: &Geometry, d_display: f64) -> f64 {
    let b = view.interocular();
    let h2 = 2.0 * view.distance();
    let parallax = d_display * view.width();
    (2.0 * ((b - parallax) / h2).atan() - 2.0 * (b / h2).atan()).to_degrees()
}

/// Accommodation/vergence mismatch `|1/Z' - 1/H'|` in diopters.
pub fn diopter_conflict(view: &Geometry, z_perceived: Depth) -> f64 {
    (z_perceived.diopters() - 1.0 / view.distance()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    /// Process exit code: 0 pass, 1 warn, 2 fail.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Warn => 1,
            Status::Fail => 2,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Divergence,
    Fusion,
    Percival,
    DepthOfField,
    Roundness,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::Divergence,
        Check::Fusion,
        Check::Percival,
        Check::DepthOfField,
        Check::Roundness,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: Check,
    pub status: Status,
    pub message: String,
}

/// One displayed disparity and what it does to the viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    /// Disparity on screen, shift included.
    pub disparity_frac: f64,
    pub perceived_m: Perceived,
    pub angular_disparity_deg: f64,
    /// `None` when the probe is divergent.
    pub diopter_conflict: Option<f64>,
    pub nearness: Option<f64>,
}

impl Probe {
    pub fn new(view: &Geometry, label: impl Into<String>, d_display: f64) -> Result<Self> {
        let perceived_m = perceived_depth(view, d_display, 0.0)?;
        let depth = perceived_m.depth();
        Ok(Self {
            label: label.into(),
            disparity_frac: d_display,
            perceived_m,
            angular_disparity_deg: angular_disparity(view, d_display),
            diopter_conflict: depth.map(|z| diopter_conflict(view, z)),
            nearness: depth.map(|z| nearness_factor(view, z)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComfortReport {
    pub probes: Vec<Probe>,
    pub divergent: bool,
    pub roundness: f64,
    /// Spread between the most crossed and most uncrossed probe.
    pub angular_range_arcmin: f64,
    pub verdicts: Vec<Verdict>,
}

impl ComfortReport {
    pub fn worst(&self) -> Status {
        self.verdicts
            .iter()
            .map(|v| v.status)
            .max()
            .unwrap_or(Status::Pass)
    }

    pub fn verdict(&self, check: Check) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn status(&self, check: Check) -> Status {
        self.verdict(check).map_or(Status::Pass, |v| v.status)
    }

    /// Grades a set of displayed-disparity probes.
    pub fn from_probes(probes: Vec<Probe>, roundness: f64, limits: &ComfortLimits) -> Self {
        let divergent_labels: Vec<&str> = probes
            .iter()
            .filter(|p| p.perceived_m.is_divergent())
            .map(|p| p.label.as_str())
            .collect();
        let divergent = !divergent_labels.is_empty();

        let mut verdicts = Vec::with_capacity(Check::ALL.len());
        verdicts.push(if divergent {
            Verdict {
                check: Check::Divergence,
                status: Status::Fail,
                message: format!("eyes diverge at {}", divergent_labels.join(", ")),
            }
        } else {
            pass(Check::Divergence, "no displayed disparity exceeds the eye separation")
        });

        let widest = probes
            .iter()
            .max_by(|a, b| a.angular_disparity_deg.abs().total_cmp(&b.angular_disparity_deg.abs()));
        let (widest_label, widest_deg) = widest
            .map(|p| (p.label.as_str(), p.angular_disparity_deg))
            .unwrap_or(("-", 0.0));
        verdicts.push(grade(
            Check::Fusion,
            widest_deg.abs() > limits.fusion_deg,
            Status::Fail,
            format!(
                "largest angular disparity {widest_deg:.4}° at {widest_label} (fusion limit {}°)",
                limits.fusion_deg
            ),
        ));
        verdicts.push(grade(
            Check::Percival,
            widest_deg.abs() > limits.percival_deg,
            Status::Warn,
            format!(
                "largest angular disparity {widest_deg:.4}° at {widest_label} (comfort zone ±{}°)",
                limits.percival_deg
            ),
        ));

        let worst_conflict = probes
            .iter()
            .filter_map(|p| p.diopter_conflict.map(|c| (p.label.as_str(), c)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let (conflict_label, conflict) = worst_conflict.unwrap_or(("-", 0.0));
        verdicts.push(grade(
            Check::DepthOfField,
            conflict > limits.dof_diopters,
            Status::Warn,
            format!(
                "largest accommodation/vergence mismatch {conflict:.4} D at {conflict_label} (depth of field ±{} D)",
                limits.dof_diopters
            ),
        ));

        verdicts.push(grade(
            Check::Roundness,
            roundness < limits.min_roundness,
            Status::Warn,
            format!("roundness {roundness:.4} (minimum {})", limits.min_roundness),
        ));

        let (lo, hi) = probes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.angular_disparity_deg), hi.max(p.angular_disparity_deg))
        });
        let angular_range_arcmin = if probes.is_empty() { 0.0 } else { (hi - lo) * 60.0 };

        Self {
            probes,
            divergent,
            roundness,
            angular_range_arcmin,
            verdicts,
        }
    }
}

fn pass(check: Check, message: &str) -> Verdict {
    Verdict {
        check,
        status: Status::Pass,
        message: message.to_owned(),
    }
}

fn grade(check: Check, breached: bool, on_breach: Status, message: String) -> Verdict {
    Verdict {
        check,
        status: if breached { on_breach } else { Status::Pass },
        message,
    }
}

/// Scene depth interval to check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRange {
    pub z_near_m: Depth,
    pub z_far_m: Depth,
}

impl SceneRange {
    pub fn new(z_near: Depth, z_far: Depth) -> Result<Self> {
        let range = Self {
            z_near_m: z_near,
            z_far_m: z_far,
        };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if let Depth::Finite(z) = self.z_near_m {
            if !(z > 0.0 && z.is_finite()) {
                return Err(Error::NonPositiveDepth(z));
            }
        }
        if let Depth::Finite(z) = self.z_far_m {
            if !(z > 0.0 && z.is_finite()) {
                return Err(Error::NonPositiveDepth(z));
            }
        }
        if self.z_near_m > self.z_far_m {
            return Err(Error::param(
                "scene",
                format!("z_near_m ({}) exceeds z_far_m ({})", self.z_near_m, self.z_far_m),
            ));
        }
        Ok(())
    }
}

/// Comfort report for a scene shot with `shoot`, shown in `view` with shift
/// `d0`. Probes the near end, the convergence plane and the far end.
pub fn assess(
    shoot: &Geometry,
    view: &Geometry,
    d0: f64,
    scene: &SceneRange,
    limits: &ComfortLimits,
) -> Result<ComfortReport> {
    scene.validate()?;
    limits.validate()?;
    if !d0.is_finite() {
        return Err(Error::param("shift_frac", "must be finite"));
    }
    let mut probes = Vec::with_capacity(3);
    for (label, z) in [
        ("z_near", scene.z_near_m),
        ("screen", Depth::Finite(shoot.distance())),
        ("z_far", scene.z_far_m),
    ] {
        let d = disparity_from_depth(shoot, z)?;
        probes.push(Probe::new(view, label, d + d0)?);
    }
    Ok(ComfortReport::from_probes(probes, roundness_factor(shoot, view), limits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g(b: f64, h: f64, w: f64) -> Geometry {
        Geometry::new(b, h, w).unwrap()
    }

    #[test]
    fn focus_range_worked_numbers() {
        let r = focus_range(Depth::Finite(16.0), 0.2).unwrap();
        assert_relative_eq!(r.near.meters(), 3.8095238095, max_relative = 1e-9);
        assert_eq!(r.far, Depth::Infinite);

        let r = focus_range(Depth::Finite(3.0), 0.3).unwrap();
        assert_relative_eq!(r.near.meters(), 1.5789473684, max_relative = 1e-9);
        assert_relative_eq!(r.far.meters(), 30.0, max_relative = 1e-9);

        let r = focus_range(Depth::Finite(3.5), 0.2).unwrap();
        assert_relative_eq!(r.near.meters(), 2.0588235294, max_relative = 1e-9);
        assert_relative_eq!(r.far.meters(), 11.6666666667, max_relative = 1e-9);
    }

    #[test]
    fn focus_range_rejects_bad_input() {
        assert!(focus_range(Depth::Infinite, 0.2).is_err());
        assert!(focus_range(Depth::Finite(3.0), 0.0).is_err());
        assert!(focus_range(Depth::Finite(-3.0), 0.2).is_err());
    }

    #[test]
    fn angular_examples() {
        let room = g(0.065, 15.0, 10.0);
        assert_eq!(angular_disparity(&room, 0.0), 0.0);
        let screen_vergence = (2.0 * (0.065f64 / 30.0).atan()).to_degrees();
        assert_relative_eq!(angular_disparity(&room, 0.0065), -screen_vergence, max_relative = 1e-12);
        assert_relative_eq!(angular_disparity(&room, 0.0065), -0.248281, epsilon = 1e-6);
        assert_relative_eq!(angular_disparity(&room, -0.0065), 0.248279, epsilon = 1e-6);
        // past parallel gaze the angle keeps falling
        assert!(angular_disparity(&room, 0.008) < -screen_vergence);
    }

    #[test]
    fn small_angle_approximation_within_one_percent() {
        let room = g(0.065, 15.0, 10.0);
        for i in 1..100 {
            let parallax = 0.1 * room.distance() * f64::from(i) / 100.0;
            for p in [parallax, -parallax] {
                let exact = angular_disparity(&room, p / room.width());
                let approx = (-p / room.distance()).to_degrees();
                assert!(((approx - exact) / exact).abs() < 0.01, "p={p}");
            }
        }
    }

    #[test]
    fn diopter_examples() {
        let room = g(0.065, 15.0, 10.0);
        assert_eq!(diopter_conflict(&room, Depth::Finite(15.0)), 0.0);
        assert_relative_eq!(diopter_conflict(&room, Depth::Infinite), 1.0 / 15.0);
        assert_relative_eq!(diopter_conflict(&room, Depth::Finite(5.91)), 0.1025381, epsilon = 1e-7);
    }

    #[test]
    fn homothetic_scene_in_focus_passes() {
        let room = g(0.065, 15.0, 10.0);
        let fr = focus_range(Depth::Finite(15.0), 0.2).unwrap();
        let scene = SceneRange::new(fr.near, fr.far).unwrap();
        let report = assess(&room, &room, 0.0, &scene, &ComfortLimits::default()).unwrap();
        assert_eq!(report.worst(), Status::Pass, "{report:#?}");
        assert_eq!(report.verdicts.len(), Check::ALL.len());
    }

    #[test]
    fn hyperstereo_far_content_fails_divergence() {
        let scene = SceneRange::new(Depth::Finite(10.0), Depth::Infinite).unwrap();
        let report = assess(
            &g(0.13, 15.0, 10.0),
            &g(0.065, 15.0, 10.0),
            0.0,
            &scene,
            &ComfortLimits::default(),
        )
        .unwrap();
        assert!(report.divergent);
        assert_eq!(report.status(Check::Divergence), Status::Fail);
        assert_eq!(report.worst(), Status::Fail);
    }

    #[test]
    fn roundness_quarter_warns_only_above_its_floor() {
        let rig = g(0.065, 16.0, 10.0);
        let room = g(0.065, 4.0, 2.5);
        let scene = SceneRange::new(Depth::Finite(15.0), Depth::Finite(17.0)).unwrap();
        let report = assess(&rig, &room, 0.0, &scene, &ComfortLimits::default()).unwrap();
        assert_eq!(report.roundness, 0.25);
        assert_eq!(report.status(Check::Roundness), Status::Pass);

        let strict = ComfortLimits {
            min_roundness: 0.3,
            ..ComfortLimits::default()
        };
        let report = assess(&rig, &room, 0.0, &scene, &strict).unwrap();
        assert_eq!(report.status(Check::Roundness), Status::Warn);
    }

    #[test]
    fn invalid_scene_and_limits() {
        let room = g(0.065, 15.0, 10.0);
        assert!(SceneRange::new(Depth::Finite(20.0), Depth::Finite(10.0)).is_err());
        let bad = SceneRange {
            z_near_m: Depth::Infinite,
            z_far_m: Depth::Finite(3.0),
        };
        assert!(assess(&room, &room, 0.0, &bad, &ComfortLimits::default()).is_err());
        let limits = ComfortLimits {
            percival_deg: 3.0,
            ..ComfortLimits::default()
        };
        assert!(limits.validate().is_err());
    }

    #[test]
    fn limits_deserialize_with_defaults() {
        let l: ComfortLimits = serde_json::from_str(r#"{"dof_diopters":0.3}"#).unwrap();
        assert_eq!(l.dof_diopters, 0.3);
        assert_eq!(l.fusion_deg, 2.0);
        assert!(serde_json::from_str::<ComfortLimits>(r#"{"dof":0.3}"#).is_err());
    }
}
