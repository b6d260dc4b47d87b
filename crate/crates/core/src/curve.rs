//! Tabulated perceived-depth curves (real depth against perceived depth) for
//! external plotting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::comfort::{angular_disparity, diopter_conflict};
use crate::error::{Error, Result};
use crate::geometry::{disparity_from_depth, perceived_depth, Depth, Geometry, Perceived};

pub const CSV_HEADER: &str =
    "z_m,perceived_m,disparity_frac,display_disparity_frac,angular_disparity_deg,diopter_conflict";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub z_m: Depth,
    pub perceived_m: Perceived,
    pub disparity_frac: f64,
    pub display_disparity_frac: f64,
    pub angular_disparity_deg: f64,
    /// `None` when the eyes diverge.
    pub diopter_conflict: Option<f64>,
}

impl CurveRow {
    pub fn is_divergent(&self) -> bool {
        self.perceived_m.is_divergent()
    }
}

/// One row per sample depth. Samples must be positive and strictly ascending.
pub fn tabulate(shoot: &Geometry, view: &Geometry, d0: f64, samples: &[Depth]) -> Result<Vec<CurveRow>> {
    if !d0.is_finite() {
        return Err(Error::param("shift_frac", "must be finite"));
    }
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::param(
                "z_samples",
                format!("must be strictly ascending; sample {} ({}) follows {}", i + 1, w[1], w[0]),
            ));
        }
    }
    samples
        .iter()
        .map(|&z| {
            let d = disparity_from_depth(shoot, z)?;
            let display = d + d0;
            let perceived = perceived_depth(view, d, d0)?;
            Ok(CurveRow {
                z_m: z,
                perceived_m: perceived,
                disparity_frac: d,
                display_disparity_frac: display,
                angular_disparity_deg: angular_disparity(view, display),
                diopter_conflict: perceived.depth().map(|zp| diopter_conflict(view, zp)),
            })
        })
        .collect()
}

/// `n` depths spaced evenly in log-depth from `z_min` to `z_max` inclusive.
pub fn log_samples(z_min: f64, z_max: f64, n: usize) -> Result<Vec<Depth>> {
    if !(z_min > 0.0 && z_min < z_max && z_max.is_finite()) {
        return Err(Error::param("z_samples", format!("need 0 < z_min < z_max < inf, got {z_min}..{z_max}")));
    }
    if n < 2 {
        return Err(Error::param("z_samples", "need at least 2 samples"));
    }
    let (a, b) = (z_min.ln(), z_max.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut out: Vec<Depth> = (0..n)
        .map(|i| Depth::Finite((a + step * i as f64).exp()))
        .collect();
    out[0] = Depth::Finite(z_min);
    out[n - 1] = Depth::Finite(z_max);
    Ok(out)
}

pub fn to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let conflict = r.diopter_conflict.map_or_else(|| "divergent".to_string(), |c| c.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.z_m,
            r.perceived_m.token(),
            r.disparity_frac,
            r.display_disparity_frac,
            r.angular_disparity_deg,
            conflict
        );
    }
    out
}
