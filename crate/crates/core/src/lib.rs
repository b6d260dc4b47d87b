//! Stereoscopic shot geometry.
//!
//! Maps a shooting geometry (camera interaxial, convergence distance,
//! convergence-plane width) onto a viewing geometry (eye interocular, screen
//! distance, screen width), and builds the planning tools that sit on top of
//! that map: comfort diagnostics, disparity transfer curves, cut-softening
//! shift schedules, floating-window masks, subtitle depths and a rig solver.
//!
//! Conventions used throughout the crate:
//!
//! - lengths are meters, angles are degrees, accommodation is in diopters;
//! - disparities are signed fractions of the convergence-plane (or screen)
//!   width, positive behind the screen (uncrossed), negative in front;
//! - infinity is a regular [`Depth`] value, and a disparity that would make
//!   the eyes diverge evaluates to [`Perceived::Divergent`] rather than an
//!   error.

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod comfort;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod layout;
pub mod project;
pub mod remap;
pub mod solver;
pub mod synth;
pub mod transitions;

pub use comfort::{
    angular_disparity, assess, diopter_conflict, focus_range, Check, ComfortLimits, ComfortReport,
    FocusRange, Probe, SceneRange, Status, Verdict,
};
pub use error::{Error, Result};
pub use geometry::{
    build_mapping, depth_from_disparity, disparity_from_depth, is_homothetic, map_depth,
    nearness_factor, perceived_depth, roundness_factor, Classification, Depth, DepthMapping,
    Geometry, Perceived,
};
pub use layout::{
    check_window, fix_window, place_subtitle, window_depth, MaskSpec, RegionStats, Side,
    SubtitlePlan, SubtitleRegion, WindowReport, WindowViolation,
};
pub use curve::{log_samples, tabulate, CurveRow};
pub use project::{
    analyze, analyze_shot, ingest, AnalysisReport, CutAnalysis, CutRef, FrameStats, ProjectDoc,
    ShotAnalysis, ShotRecord,
};
pub use remap::{Band, CurveSpec, RemapCurve};
pub use solver::{max_baseline_no_divergence, solve, FieldWidth, SolveRequest, SolveResult};
pub use synth::{synth_shot, PlaneSpec, SynthShot};
pub use transitions::{
    plan_transition, validate_transition, CutSpec, FrameShift, RampProfile, RampSide, TransitionPlan,
};
