//! Shot metadata documents and whole-project analysis.
//!
//! A project document is JSON: one viewing geometry, comfort limits, a list
//! of shots with per-frame disparity statistics, and the cuts between shots.
//! Disparities are width fractions (`*_frac` fields); a shot that carries
//! `image_width_px` may give them in pixels instead (`*_px` fields), and they
//! are converted on load.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comfort::{ComfortLimits, ComfortReport, Probe, Status};
use crate::error::{Error, Result};
use crate::geometry::{roundness_factor, Geometry};
use crate::layout::{check_window, fix_window, MaskSpec, WindowReport};
use crate::transitions::{plan_transition, validate_transition, CutSpec, RampProfile};

/// Disparity statistics of one frame, in width fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameStats {
    pub min_disparity_frac: f64,
    pub max_disparity_frac: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left_border_min_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right_border_min_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject_disparity_frac: Option<f64>,
}

impl FrameStats {
    pub fn new(min: f64, max: f64) -> Self {
        Self {
            min_disparity_frac: min,
            max_disparity_frac: max,
            left_border_min_frac: None,
            right_border_min_frac: None,
            subject_disparity_frac: None,
        }
    }

    pub fn with_borders(mut self, left: f64, right: f64) -> Self {
        self.left_border_min_frac = Some(left);
        self.right_border_min_frac = Some(right);
        self
    }

    pub fn with_subject(mut self, subject: f64) -> Self {
        self.subject_disparity_frac = Some(subject);
        self
    }
}

/// One shot: its rig, how it is placed on screen, and per-frame statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub id: String,
    pub shoot: Geometry,
    /// Horizontal image shift applied to the whole shot.
    pub shift_frac: f64,
    /// Image scaling; multiplies every disparity.
    pub image_scale: f64,
    pub fps: f64,
    pub frames: Vec<FrameStats>,
    /// Floating-window masks in use, if any.
    pub mask: Option<MaskSpec>,
}

impl ShotRecord {
    pub fn new(id: impl Into<String>, shoot: Geometry, fps: f64, frames: Vec<FrameStats>) -> Self {
        Self {
            id: id.into(),
            shoot,
            shift_frac: 0.0,
            image_scale: 1.0,
            fps,
            frames,
            mask: None,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Disparity on screen of a recorded disparity `d`.
    pub fn display_disparity(&self, d: f64) -> f64 {
        self.image_scale * d + self.shift_frac
    }

    /// Smallest and largest recorded disparity over all frames.
    pub fn disparity_extent(&self) -> Option<(f64, f64)> {
        self.frames.iter().fold(None, |acc, f| {
            let (lo, hi) = acc.unwrap_or((f.min_disparity_frac, f.max_disparity_frac));
            Some((lo.min(f.min_disparity_frac), hi.max(f.max_disparity_frac)))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let record = format!("shot `{}`", self.id);
        if self.id.trim().is_empty() {
            return Err(Error::schema("shot", "id", "must not be empty"));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::schema(&record, "fps", format!("must be > 0, got {}", self.fps)));
        }
        if !self.shift_frac.is_finite() {
            return Err(Error::schema(&record, "shift_frac", "must be finite"));
        }
        if !(self.image_scale > 0.0 && self.image_scale.is_finite()) {
            return Err(Error::schema(
                &record,
                "image_scale",
                format!("must be > 0, got {}", self.image_scale),
            ));
        }
        if let Some(mask) = &self.mask {
            mask.validate()
                .map_err(|e| Error::schema(&record, "mask", e.to_string()))?;
        }
        for (i, f) in self.frames.iter().enumerate() {
            let at = format!("{record} frame {i}");
            let values = [
                ("min_disparity_frac", Some(f.min_disparity_frac)),
                ("max_disparity_frac", Some(f.max_disparity_frac)),
                ("left_border_min_frac", f.left_border_min_frac),
                ("right_border_min_frac", f.right_border_min_frac),
                ("subject_disparity_frac", f.subject_disparity_frac),
            ];
            for (field, v) in values {
                if let Some(v) = v {
                    if !v.is_finite() {
                        return Err(Error::schema(&at, field, "must be finite"));
                    }
                }
            }
            if f.min_disparity_frac > f.max_disparity_frac {
                return Err(Error::schema(
                    &at,
                    "min_disparity_frac",
                    format!(
                        "exceeds max_disparity_frac ({} > {})",
                        f.min_disparity_frac, f.max_disparity_frac
                    ),
                ));
            }
            for (field, border) in [
                ("left_border_min_frac", f.left_border_min_frac),
                ("right_border_min_frac", f.right_border_min_frac),
            ] {
                if let Some(b) = border {
                    if b < f.min_disparity_frac {
                        return Err(Error::schema(
                            &at,
                            field,
                            format!("is below the frame minimum ({b} < {})", f.min_disparity_frac),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ShotWire<'a> {
    id: &'a str,
    shoot: &'a Geometry,
    shift_frac: f64,
    image_scale: f64,
    fps: f64,
    frame_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<&'a MaskSpec>,
    frames: &'a [FrameStats],
}

impl<'de> Deserialize<'de> for ShotRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawShot::deserialize(deserializer)?;
        let record = format!("shot `{}`", raw.id);
        let shot = raw.into_record(record).map_err(serde::de::Error::custom)?;
        shot.validate().map_err(serde::de::Error::custom)?;
        Ok(shot)
    }
}

impl Serialize for ShotRecord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ShotWire {
            id: &self.id,
            shoot: &self.shoot,
            shift_frac: self.shift_frac,
            image_scale: self.image_scale,
            fps: self.fps,
            frame_count: self.frames.len(),
            mask: self.mask.as_ref(),
            frames: &self.frames,
        }
        .serialize(serializer)
    }
}

fn one() -> f64 {
    1.0
}

fn default_ramp_seconds() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    min_disparity_frac: Option<f64>,
    max_disparity_frac: Option<f64>,
    left_border_min_frac: Option<f64>,
    right_border_min_frac: Option<f64>,
    subject_disparity_frac: Option<f64>,
    min_disparity_px: Option<f64>,
    max_disparity_px: Option<f64>,
    left_border_min_px: Option<f64>,
    right_border_min_px: Option<f64>,
    subject_disparity_px: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShot {
    id: String,
    shoot: Geometry,
    #[serde(default)]
    shift_frac: f64,
    #[serde(default = "one")]
    image_scale: f64,
    fps: f64,
    frame_count: usize,
    image_width_px: Option<f64>,
    mask: Option<MaskSpec>,
    #[serde(default)]
    frames: Vec<RawFrame>,
}

impl RawShot {
    fn into_record(self, record: String) -> Result<ShotRecord> {
        if self.frame_count != self.frames.len() {
            return Err(Error::schema(
                &record,
                "frame_count",
                format!("is {} but {} frames are listed", self.frame_count, self.frames.len()),
            ));
        }
        let px_width = match self.image_width_px {
            Some(w) if w > 0.0 && w.is_finite() => Some(w),
            Some(w) => {
                return Err(Error::schema(&record, "image_width_px", format!("must be > 0, got {w}")))
            }
            None => None,
        };
        let mut frames = Vec::with_capacity(self.frames.len());
        for (i, raw) in self.frames.into_iter().enumerate() {
            let at = format!("{record} frame {i}");
            let pick = |name: &str, frac: Option<f64>, px: Option<f64>| -> Result<Option<f64>> {
                match (frac, px) {
                    (Some(_), Some(_)) => Err(Error::schema(
                        &at,
                        format!("{name}_frac"),
                        format!("give either {name}_frac or {name}_px, not both"),
                    )),
                    (Some(f), None) => Ok(Some(f)),
                    (None, Some(p)) => match px_width {
                        Some(w) => Ok(Some(p / w)),
                        None => Err(Error::schema(
                            &at,
                            format!("{name}_px"),
                            "pixel disparities need the shot's image_width_px",
                        )),
                    },
                    (None, None) => Ok(None),
                }
            };
            let min = pick("min_disparity", raw.min_disparity_frac, raw.min_disparity_px)?
                .ok_or_else(|| Error::schema(&at, "min_disparity_frac", "missing"))?;
            let max = pick("max_disparity", raw.max_disparity_frac, raw.max_disparity_px)?
                .ok_or_else(|| Error::schema(&at, "max_disparity_frac", "missing"))?;
            frames.push(FrameStats {
                min_disparity_frac: min,
                max_disparity_frac: max,
                left_border_min_frac: pick("left_border_min", raw.left_border_min_frac, raw.left_border_min_px)?,
                right_border_min_frac: pick("right_border_min", raw.right_border_min_frac, raw.right_border_min_px)?,
                subject_disparity_frac: pick("subject_disparity", raw.subject_disparity_frac, raw.subject_disparity_px)?,
            });
        }
        Ok(ShotRecord {
            id: self.id,
            shoot: self.shoot,
            shift_frac: self.shift_frac,
            image_scale: self.image_scale,
            fps: self.fps,
            frames,
            mask: self.mask,
        })
    }
}

/// A cut between two shots of the document, by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutRef {
    pub from: String,
    pub to: String,
    #[serde(default = "default_ramp_seconds")]
    pub ramp_seconds: f64,
    #[serde(default)]
    pub profile: RampProfile,
    /// Outgoing subject disparity; defaults to the last frame's subject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1_frac: Option<f64>,
    /// Incoming subject disparity; defaults to the first frame's subject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2_frac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectDoc {
    pub view: Geometry,
    pub limits: ComfortLimits,
    pub shots: Vec<ShotRecord>,
    pub cuts: Vec<CutRef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    view: Geometry,
    #[serde(default)]
    limits: ComfortLimits,
    #[serde(default)]
    shots: Vec<RawShot>,
    #[serde(default)]
    cuts: Vec<CutRef>,
}

impl ProjectDoc {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema("document", path, e.into_inner().to_string())
        })?;
        let shots = raw
            .shots
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let record = format!("shots[{i}] (`{}`)", s.id);
                s.into_record(record)
            })
            .collect::<Result<Vec<_>>>()?;
        let doc = ProjectDoc {
            view: raw.view,
            limits: raw.limits,
            shots,
            cuts: raw.cuts,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("project documents serialize")
    }

    pub fn shot(&self, id: &str) -> Option<&ShotRecord> {
        self.shots.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        self.limits
            .validate()
            .map_err(|e| Error::schema("document", "limits", e.to_string()))?;
        let mut seen = HashSet::new();
        for shot in &self.shots {
            shot.validate()?;
            if !seen.insert(shot.id.as_str()) {
                return Err(Error::schema(format!("shot `{}`", shot.id), "id", "duplicate shot id"));
            }
        }
        for (i, cut) in self.cuts.iter().enumerate() {
            let record = format!("cuts[{i}]");
            for (field, id) in [("from", &cut.from), ("to", &cut.to)] {
                if self.shot(id).is_none() {
                    return Err(Error::schema(&record, field, format!("unknown shot id `{id}`")));
                }
            }
            self.cut_spec(cut)
                .map_err(|e| Error::schema(&record, "d1_frac/d2_frac", e.to_string()))?;
        }
        Ok(())
    }

    /// Resolves a cut to its shift-ramp specification.
    pub fn cut_spec(&self, cut: &CutRef) -> Result<CutSpec> {
        let from = self
            .shot(&cut.from)
            .ok_or_else(|| Error::param("from", format!("unknown shot id `{}`", cut.from)))?;
        let to = self
            .shot(&cut.to)
            .ok_or_else(|| Error::param("to", format!("unknown shot id `{}`", cut.to)))?;
        let d1 = match cut.d1_frac {
            Some(d) => d,
            None => from
                .frames
                .last()
                .and_then(|f| f.subject_disparity_frac)
                .map(|d| from.display_disparity(d))
                .ok_or_else(|| {
                    Error::param("d1_frac", format!("shot `{}` has no subject disparity on its last frame", from.id))
                })?,
        };
        let d2 = match cut.d2_frac {
            Some(d) => d,
            None => to
                .frames
                .first()
                .and_then(|f| f.subject_disparity_frac)
                .map(|d| to.display_disparity(d))
                .ok_or_else(|| {
                    Error::param("d2_frac", format!("shot `{}` has no subject disparity on its first frame", to.id))
                })?,
        };
        let spec = CutSpec {
            d1_frac: d1,
            d2_frac: d2,
            ramp_seconds: cut.ramp_seconds,
            fps: from.fps,
            profile: cut.profile,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Loads and validates a project document.
pub fn ingest(path: impl AsRef<Path>) -> Result<ProjectDoc> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ProjectDoc::from_json_str(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotAnalysis {
    pub id: String,
    pub status: Status,
    pub comfort: ComfortReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowReport>,
    /// Smallest masks clearing every window violation, when there are any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggested_mask: Option<MaskSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutAnalysis {
    pub from: String,
    pub to: String,
    pub status: Status,
    pub spec: CutSpec,
    pub meet_disparity_frac: f64,
    pub ramp_frames: usize,
    pub validation: ComfortReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub worst: Status,
    pub exit_code: i32,
    pub shots: Vec<ShotAnalysis>,
    pub cuts: Vec<CutAnalysis>,
}

/// Comfort of one shot over all its frames.
pub fn analyze_shot(shot: &ShotRecord, view: &Geometry, limits: &ComfortLimits) -> Result<ShotAnalysis> {
    let mut probes = Vec::with_capacity(2);
    if let Some((lo, hi)) = shot.disparity_extent() {
        probes.push(Probe::new(view, format!("{}.min", shot.id), shot.display_disparity(lo))?);
        probes.push(Probe::new(view, format!("{}.max", shot.id), shot.display_disparity(hi))?);
    }
    let comfort = ComfortReport::from_probes(probes, roundness_factor(&shot.shoot, view), limits);

    let has_borders = !shot.frames.is_empty()
        && shot
            .frames
            .iter()
            .all(|f| f.left_border_min_frac.is_some() && f.right_border_min_frac.is_some());
    let (window, suggested_mask) = if has_borders {
        let mask = shot.mask.unwrap_or_default();
        let report = check_window(shot, &mask, view)?;
        let fix = if report.violations.is_empty() {
            None
        } else {
            Some(fix_window(shot, view)?)
        };
        (Some(report), fix)
    } else {
        (None, None)
    };

    let window_status = if suggested_mask.is_some() {
        Status::Warn
    } else {
        Status::Pass
    };
    Ok(ShotAnalysis {
        id: shot.id.clone(),
        status: comfort.worst().max(window_status),
        comfort,
        window,
        suggested_mask,
    })
}

/// Per-shot comfort, per-cut transition validation and window checks.
pub fn analyze(doc: &ProjectDoc) -> Result<AnalysisReport> {
    let shots = doc
        .shots
        .iter()
        .map(|shot| analyze_shot(shot, &doc.view, &doc.limits))
        .collect::<Result<Vec<_>>>()?;

    let mut cuts = Vec::with_capacity(doc.cuts.len());
    for cut in &doc.cuts {
        let spec = doc.cut_spec(cut)?;
        let plan = plan_transition(&spec)?;
        let from = doc.shot(&cut.from).expect("validated cut");
        let to = doc.shot(&cut.to).expect("validated cut");
        let validation = validate_transition(&plan, from, to, &doc.view, &doc.limits)?;
        cuts.push(CutAnalysis {
            from: cut.from.clone(),
            to: cut.to.clone(),
            status: validation.worst(),
            spec,
            meet_disparity_frac: plan.meet_disparity_frac,
            ramp_frames: plan.outgoing.len(),
            validation,
        });
    }

    let worst = shots
        .iter()
        .map(|s| s.status)
        .chain(cuts.iter().map(|c| c.status))
        .max()
        .unwrap_or(Status::Pass);
    Ok(AnalysisReport {
        worst,
        exit_code: worst.exit_code(),
        shots,
        cuts,
    })
}
