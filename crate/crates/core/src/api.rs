//! Request and response bodies of the `/v1` evaluation API, with pure
//! handlers. The HTTP service and the CLI both go through these, so the two
//! produce identical output for identical input.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::comfort::{assess, ComfortLimits, ComfortReport, SceneRange};
use crate::curve::{tabulate, CurveRow};
use crate::error::{Error, Result};
use crate::geometry::{
    build_mapping, is_homothetic, roundness_factor, screen_plane_slope, Depth, DepthMapping, Geometry,
};
use crate::layout::{
    check_window, fix_window, place_subtitle, window_depth, MaskSpec, RegionStats, SubtitlePlan,
    WindowReport,
};
use crate::project::{analyze as analyze_doc, AnalysisReport, ProjectDoc, ShotRecord};
use crate::remap::RemapCurve;
use crate::solver::{solve as solve_rig, SolveRequest, SolveResult};
use crate::transitions::{plan_transition, validate_transition, CutSpec, TransitionPlan};

pub const API_VERSION: &str = "v1";

/// Parses a request body, naming the offending field on failure.
pub fn parse<T: DeserializeOwned>(body: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "(body)".to_owned() } else { path };
        Error::schema("request", path, e.into_inner().to_string())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        let field = match e {
            Error::Schema { field, .. } => Some(field.clone()),
            Error::InvalidParameter { name, .. } => Some(name.clone()),
            Error::InvalidGeometry { field, .. } => Some((*field).to_owned()),
            _ => None,
        };
        Self {
            error: e.to_string(),
            field,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub api: String,
}

pub fn health() -> Health {
    Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        api: API_VERSION.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub shoot: Geometry,
    pub view: Geometry,
    #[serde(default)]
    pub shift_frac: f64,
    #[serde(default)]
    pub z_samples_m: Vec<Depth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub mapping: DepthMapping,
    pub roundness: f64,
    pub screen_plane_slope: f64,
    /// Uniform scale factor when the rig is a scaled copy of the room.
    pub homothetic_scale: Option<f64>,
    pub rows: Vec<CurveRow>,
}

pub fn evaluate(req: &EvaluateRequest) -> Result<EvaluateResponse> {
    Ok(EvaluateResponse {
        mapping: build_mapping(&req.shoot, &req.view, req.shift_frac)?,
        roundness: roundness_factor(&req.shoot, &req.view),
        screen_plane_slope: screen_plane_slope(&req.shoot, &req.view),
        homothetic_scale: is_homothetic(&req.shoot, &req.view),
        rows: tabulate(&req.shoot, &req.view, req.shift_frac, &req.z_samples_m)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessRequest {
    pub shoot: Geometry,
    pub view: Geometry,
    #[serde(default)]
    pub shift_frac: f64,
    pub scene: SceneRange,
    #[serde(default)]
    pub limits: ComfortLimits,
}

pub fn assess_scene(req: &AssessRequest) -> Result<ComfortReport> {
    assess(&req.shoot, &req.view, req.shift_frac, &req.scene, &req.limits)
}

pub fn solve(req: &SolveRequest) -> Result<SolveResult> {
    solve_rig(req)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemapRequest {
    pub curve: RemapCurve,
    #[serde(default)]
    pub d_in_frac: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemapResponse {
    pub curve: RemapCurve,
    pub d_out_frac: Vec<f64>,
}

pub fn remap(req: &RemapRequest) -> Result<RemapResponse> {
    if let Some(d) = req.d_in_frac.iter().find(|d| !d.is_finite()) {
        return Err(Error::param("d_in_frac", format!("{d} is not finite")));
    }
    Ok(RemapResponse {
        curve: req.curve.clone(),
        d_out_frac: req.d_in_frac.iter().map(|&d| req.curve.apply(d)).collect(),
    })
}

/// Shots, room and limits for checking a planned transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionContext {
    pub view: Geometry,
    #[serde(default)]
    pub limits: ComfortLimits,
    pub outgoing: ShotRecord,
    pub incoming: ShotRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRequest {
    pub cut: CutSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<TransitionContext>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionResponse {
    pub plan: TransitionPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ComfortReport>,
}

pub fn transition(req: &TransitionRequest) -> Result<TransitionResponse> {
    let plan = plan_transition(&req.cut)?;
    let validation = match &req.validate {
        Some(ctx) => Some(validate_transition(&plan, &ctx.outgoing, &ctx.incoming, &ctx.view, &ctx.limits)?),
        None => None,
    };
    Ok(TransitionResponse { plan, validation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubtitleRequest {
    pub speaker_disparity_frac: f64,
    pub regions: RegionStats,
}

/// Window operations: check or fix a shot's masks, and place a subtitle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowRequest {
    pub view: Geometry,
    #[serde(default)]
    pub limits: ComfortLimits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot: Option<ShotRecord>,
    /// Masks to check; the shot's own masks (or none) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtitle: Option<SubtitleRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<WindowReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_mask: Option<MaskSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_report: Option<WindowReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subtitle: Option<SubtitlePlan>,
}

pub fn window(req: &WindowRequest) -> Result<WindowResponse> {
    let mut resp = WindowResponse {
        report: None,
        fixed_mask: None,
        fixed_report: None,
        subtitle: None,
    };
    if let Some(shot) = &req.shot {
        let mask = req.mask.or(shot.mask).unwrap_or_default();
        resp.report = Some(check_window(shot, &mask, &req.view)?);
        let fixed = fix_window(shot, &req.view)?;
        resp.fixed_report = Some(check_window(shot, &fixed, &req.view)?);
        resp.fixed_mask = Some(fixed);
    } else if let Some(mask) = req.mask {
        mask.validate()?;
        resp.report = Some(WindowReport {
            left_edge_depth_m: window_depth(mask.left_edge_mask, &req.view)?,
            right_edge_depth_m: window_depth(mask.right_edge_mask, &req.view)?,
            violations: Vec::new(),
        });
    }
    if let Some(sub) = &req.subtitle {
        resp.subtitle = Some(place_subtitle(sub.speaker_disparity_frac, &sub.regions, &req.view, &req.limits)?);
    }
    if resp.report.is_none() && resp.subtitle.is_none() {
        return Err(Error::param("request", "give a shot, a mask or a subtitle"));
    }
    Ok(resp)
}

/// Whole-project analysis of a project document given as JSON text.
pub fn analyze(body: &str) -> Result<AnalysisReport> {
    analyze_doc(&ProjectDoc::from_json_str(body)?)
}

/// Canonical JSON text of a response: pretty-printed, keys in declaration
/// order, trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("responses serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Classification;

    #[test]
    fn evaluate_roundness_quarter() {
        let body = r#"{
            "shoot": {"interocular_m": 0.065, "convergence_distance_m": 16, "screen_width_m": 10},
            "view": {"interocular_m": 0.065, "convergence_distance_m": 4, "screen_width_m": 10}
        }"#;
        let resp = evaluate(&parse(body).unwrap()).unwrap();
        assert_eq!(resp.roundness, 0.25);
    }

    #[test]
    fn evaluate_hyperstereo_pole() {
        let body = r#"{
            "shoot": {"interocular_m": 0.13, "convergence_distance_m": 15, "screen_width_m": 10},
            "view": {"interocular_m": 0.065, "convergence_distance_m": 15, "screen_width_m": 10},
            "z_samples_m": [10, 40, "infinity"]
        }"#;
        let resp = evaluate(&parse(body).unwrap()).unwrap();
        assert_eq!(resp.mapping.classification, Classification::HyperInfinite);
        assert_eq!(resp.mapping.pole_depth, Some(Depth::Finite(30.0)));
        let json = to_json(&resp);
        assert!(json.contains("\"divergent\""), "{json}");
    }

    #[test]
    fn solve_third_scale() {
        let body = r#"{
            "view": {"interocular_m": 0.065, "convergence_distance_m": 15, "screen_width_m": 10},
            "scene": {"z_near_m": 2.5, "z_subject_m": 5, "z_far_m": "infinity"}
        }"#;
        let resp = solve(&parse(body).unwrap()).unwrap();
        assert_eq!(resp.shoot.distance(), 5.0);
        assert!((resp.shoot.width() - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_requests_name_the_field() {
        let err = parse::<EvaluateRequest>(
            r#"{"shoot": {"interocular_m": 0.065, "convergence_distance_m": -1, "screen_width_m": 10},
                "view": {"interocular_m": 0.065, "convergence_distance_m": 15, "screen_width_m": 10}}"#,
        )
        .unwrap_err();
        let body = ErrorBody::from(&err);
        assert_eq!(body.field.as_deref(), Some("shoot"), "{body:?}");
        let err = parse::<RemapRequest>(r#"{"curve": {"family": "interpolate", "t": "x"}}"#).unwrap_err();
        assert!(ErrorBody::from(&err).field.unwrap().starts_with("curve"));
        assert!(parse::<EvaluateRequest>("not json").is_err());
    }

    #[test]
    fn window_needs_something_to_do() {
        let body = r#"{"view": {"interocular_m": 0.065, "convergence_distance_m": 15, "screen_width_m": 10}}"#;
        assert!(window(&parse(body).unwrap()).is_err());
        let body = r#"{"view": {"interocular_m": 0.065, "convergence_distance_m": 15, "screen_width_m": 10},
                       "mask": {"left_edge_mask": 0.01, "right_edge_mask": 0.0}}"#;
        let resp = window(&parse(body).unwrap()).unwrap();
        assert_eq!(resp.report.unwrap().right_edge_depth_m, Depth::Finite(15.0));
    }
}
