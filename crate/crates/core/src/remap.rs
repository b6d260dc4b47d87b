//! Disparity transfer curves.
//!
//! A [`RemapCurve`] maps an input disparity to an output disparity (both as
//! width fractions). Curves stand in for post-production geometry changes
//! without touching pixels: a horizontal shift, a virtual camera part-way
//! along the baseline, a remap that makes perceived depth proportional to
//! scene depth, or a multi-rig composite where each depth band keeps its own
//! effective baseline.
//!
//! Every constructor guarantees a monotone non-decreasing transfer.

use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{disparity_from_depth, Depth, Geometry};

/// One depth band of a multi-rig composite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    /// Near edge; `0` means "from the rig".
    pub z_min_m: f64,
    pub z_max_m: Depth,
    /// Effective baseline of the band relative to the rig's.
    pub baseline_scale: f64,
}

/// Construction parameters of a curve, tagged by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Identity,
    Shift {
        shift_frac: f64,
    },
    Interpolate {
        t: f64,
    },
    DepthProportional {
        shoot: Geometry,
        view: Geometry,
    },
    PiecewiseDepth {
        shoot: Geometry,
        bands: Vec<Band>,
    },
    Lut {
        #[serde(default)]
        breakpoints: Vec<[f64; 2]>,
    },
}

impl CurveSpec {
    pub fn family(&self) -> &'static str {
        match self {
            CurveSpec::Identity => "identity",
            CurveSpec::Shift { .. } => "shift",
            CurveSpec::Interpolate { .. } => "interpolate",
            CurveSpec::DepthProportional { .. } => "depth_proportional",
            CurveSpec::PiecewiseDepth { .. } => "piecewise_depth",
            CurveSpec::Lut { .. } => "lut",
        }
    }
}

/// Piecewise-linear table with linear extrapolation past both ends.
#[derive(Debug, Clone, PartialEq)]
struct Table {
    points: Vec<(f64, f64)>,
    below_slope: f64,
    above_slope: f64,
    /// End segments pass through the origin (`y = slope * x`).
    proportional: bool,
}

impl Table {
    fn eval(&self, d: f64) -> f64 {
        let pts = &self.points;
        let (x0, y0) = pts[0];
        if d <= x0 {
            return match (d == x0, self.proportional) {
                (true, _) => y0,
                (false, true) => self.below_slope * d,
                (false, false) => y0 + self.below_slope * (d - x0),
            };
        }
        let (xn, yn) = pts[pts.len() - 1];
        if d >= xn {
            return match (d == xn, self.proportional) {
                (true, _) => yn,
                (false, true) => self.above_slope * d,
                (false, false) => yn + self.above_slope * (d - xn),
            };
        }
        // first index with x > d; d lies in [pts[i-1].x, pts[i].x)
        let i = pts.partition_point(|&(x, _)| x <= d);
        let (xa, ya) = pts[i - 1];
        let (xb, yb) = pts[i];
        if d == xa {
            return ya;
        }
        ya + (yb - ya) * ((d - xa) / (xb - xa))
    }
}

/// A monotone disparity transfer `d_in -> d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct RemapCurve {
    spec: CurveSpec,
    table: Option<Table>,
}

impl RemapCurve {
    pub fn identity() -> Self {
        Self {
            spec: CurveSpec::Identity,
            table: None,
        }
    }

    /// Adds `shift` to every disparity.
    pub fn shift(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::param("shift_frac", "must be finite"));
        }
        Ok(Self {
            spec: CurveSpec::Shift { shift_frac: shift },
            table: None,
        })
    }

    /// A virtual right camera at fraction `t` of the baseline from the left
    /// camera: disparities scale by `t`.
    pub fn interpolate(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param("t", format!("must lie in [0, 1], got {t}")));
        }
        Ok(Self {
            spec: CurveSpec::Interpolate { t },
            table: None,
        })
    }

    /// Remap that makes perceived depth `(H'/H) Z` for every scene depth.
    ///
    /// In width-fraction units this is the single scale `(b'/W') / (b/W)`:
    /// scene infinity `b/W` lands exactly on parallel gaze `b'/W'`.
    pub fn depth_proportional(shoot: &Geometry, view: &Geometry) -> Result<Self> {
        if shoot.interocular() <= 0.0 {
            return Err(Error::param("shoot.interocular_m", "must be > 0"));
        }
        if view.interocular() <= 0.0 {
            return Err(Error::param("view.interocular_m", "must be > 0"));
        }
        Ok(Self {
            spec: CurveSpec::DepthProportional {
                shoot: *shoot,
                view: *view,
            },
            table: None,
        })
    }

    /// Multi-rig composite: inside each band disparities scale by the band's
    /// baseline factor; gaps between bands are bridged linearly.
    pub fn multirig(bands: &[Band], shoot: &Geometry) -> Result<Self> {
        let table = multirig_table(bands, shoot)?;
        Ok(Self {
            spec: CurveSpec::PiecewiseDepth {
                shoot: *shoot,
                bands: bands.to_vec(),
            },
            table: Some(table),
        })
    }

    /// Look-up table with linear interpolation between breakpoints, and
    /// linear extrapolation with the end segments' slopes.
    pub fn lut(breakpoints: &[(f64, f64)]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::param("breakpoints", "a lut needs at least two breakpoints"));
        }
        for (i, &(x, y)) in breakpoints.iter().enumerate() {
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::param("breakpoints", format!("breakpoint {i} is not finite")));
            }
        }
        for (i, w) in breakpoints.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::param(
                    "breakpoints",
                    format!("d_in must be strictly increasing (breakpoint {})", i + 1),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::param(
                    "breakpoints",
                    format!("d_out decreases at breakpoint {}", i + 1),
                ));
            }
        }
        let slope = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (b.0 - a.0);
        let n = breakpoints.len();
        Ok(Self {
            spec: CurveSpec::Lut {
                breakpoints: breakpoints.iter().map(|&(x, y)| [x, y]).collect(),
            },
            table: Some(Table {
                points: breakpoints.to_vec(),
                below_slope: slope(breakpoints[0], breakpoints[1]),
                above_slope: slope(breakpoints[n - 2], breakpoints[n - 1]),
                proportional: false,
            }),
        })
    }

    pub fn from_spec(spec: CurveSpec) -> Result<Self> {
        match spec {
            CurveSpec::Identity => Ok(Self::identity()),
            CurveSpec::Shift { shift_frac } => Self::shift(shift_frac),
            CurveSpec::Interpolate { t } => Self::interpolate(t),
            CurveSpec::DepthProportional { shoot, view } => Self::depth_proportional(&shoot, &view),
            CurveSpec::PiecewiseDepth { shoot, bands } => Self::multirig(&bands, &shoot),
            CurveSpec::Lut { breakpoints } => {
                let pts: Vec<(f64, f64)> = breakpoints.iter().map(|p| (p[0], p[1])).collect();
                Self::lut(&pts)
            }
        }
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn family(&self) -> &'static str {
        self.spec.family()
    }

    /// Explicit breakpoints of table-backed families.
    pub fn breakpoints(&self) -> Option<&[(f64, f64)]> {
        self.table.as_ref().map(|t| t.points.as_slice())
    }

    pub fn apply(&self, d_in: f64) -> f64 {
        match &self.spec {
            CurveSpec::Identity => d_in,
            CurveSpec::Shift { shift_frac } => d_in + shift_frac,
            CurveSpec::Interpolate { t } => t * d_in,
            CurveSpec::DepthProportional { shoot, view } => {
                view.infinity_disparity() * (d_in / shoot.infinity_disparity())
            }
            CurveSpec::PiecewiseDepth { .. } | CurveSpec::Lut { .. } => self
                .table
                .as_ref()
                .expect("table families always carry a table")
                .eval(d_in),
        }
    }

    /// CSV export: a `#` line carrying the family and parameters as JSON,
    /// then `d_in,d_out` rows. Table families write their breakpoints;
    /// closed-form families are sampled at `samples`.
    pub fn to_csv(&self, samples: &[f64]) -> String {
        let mut params = serde_json::to_value(&self.spec).expect("curve specs serialize");
        if let CurveSpec::Lut { .. } = self.spec {
            if let Some(obj) = params.as_object_mut() {
                obj.remove("breakpoints");
            }
        }
        let mut out = format!("# {params}\nd_in,d_out\n");
        let rows: Vec<(f64, f64)> = match self.breakpoints() {
            Some(points) => points.to_vec(),
            None => samples.iter().map(|&d| (d, self.apply(d))).collect(),
        };
        for (d_in, d_out) in rows {
            let _ = writeln!(out, "{d_in},{d_out}");
        }
        out
    }

    /// Reads a curve written by [`RemapCurve::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Csv("missing `# {family...}` header line".into()))?;
        let mut spec: CurveSpec = serde_json::from_str(header.trim())?;
        let body: String = lines.collect::<Vec<_>>().join("\n");
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(body.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["d_in", "d_out"] {
            return Err(Error::Csv(format!("expected header `d_in,d_out`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for record in reader.deserialize::<(f64, f64)>() {
            rows.push(record?);
        }
        if let CurveSpec::Lut { breakpoints } = &mut spec {
            if breakpoints.is_empty() {
                *breakpoints = rows.iter().map(|&(x, y)| [x, y]).collect();
            }
        }
        Self::from_spec(spec)
    }
}

impl Serialize for RemapCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.spec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RemapCurve {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let spec = CurveSpec::deserialize(deserializer)?;
        RemapCurve::from_spec(spec).map_err(serde::de::Error::custom)
    }
}

fn multirig_table(bands: &[Band], shoot: &Geometry) -> Result<Table> {
    if bands.is_empty() {
        return Err(Error::param("bands", "at least one band is required"));
    }
    if shoot.interocular() <= 0.0 {
        return Err(Error::param("shoot.interocular_m", "must be > 0"));
    }
    for (i, band) in bands.iter().enumerate() {
        if !(band.z_min_m >= 0.0 && band.z_min_m.is_finite()) {
            return Err(Error::param(
                format!("bands[{i}].z_min_m"),
                format!("must be finite and >= 0, got {}", band.z_min_m),
            ));
        }
        if !(Depth::Finite(band.z_min_m) < band.z_max_m) {
            return Err(Error::param(
                format!("bands[{i}].z_max_m"),
                format!("must exceed z_min_m ({} <= {})", band.z_max_m, band.z_min_m),
            ));
        }
        if !(band.baseline_scale >= 0.0 && band.baseline_scale.is_finite()) {
            return Err(Error::param(
                format!("bands[{i}].baseline_scale"),
                format!("must be finite and >= 0, got {}", band.baseline_scale),
            ));
        }
    }
    for (i, w) in bands.windows(2).enumerate() {
        if Depth::Finite(w[1].z_min_m) < w[0].z_max_m {
            return Err(Error::OverlappingBands {
                first: i,
                second: i + 1,
            });
        }
    }

    // per band: disparity interval [lo, hi]; lo is None for a band starting at the rig
    let mut spans = Vec::with_capacity(bands.len());
    for band in bands {
        let lo = if band.z_min_m == 0.0 {
            None
        } else {
            Some(disparity_from_depth(shoot, Depth::Finite(band.z_min_m))?)
        };
        let hi = disparity_from_depth(shoot, band.z_max_m)?;
        spans.push((lo, hi, band.baseline_scale));
    }

    let mut points: Vec<(f64, f64)> = Vec::with_capacity(2 * bands.len());
    for (i, &(lo, hi, scale)) in spans.iter().enumerate() {
        if let Some(lo) = lo {
            let out = scale * lo;
            if let Some(&(px, py)) = points.last() {
                if out < py {
                    return Err(Error::NonMonotoneBands {
                        first: i - 1,
                        second: i,
                        upper: py,
                        lower: out,
                    });
                }
                if lo == px {
                    if out != py {
                        return Err(Error::param(
                            "bands",
                            format!(
                                "bands {} and {i} meet at disparity {lo} but map it to {py} and {out}",
                                i - 1
                            ),
                        ));
                    }
                } else {
                    points.push((lo, out));
                }
            } else {
                points.push((lo, out));
            }
        }
        points.push((hi, scale * hi));
    }

    Ok(Table {
        points,
        below_slope: spans[0].2,
        above_slope: spans[spans.len() - 1].2,
        proportional: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{perceived_depth, Perceived};
    use approx::assert_relative_eq;

    fn g(b: f64, h: f64, w: f64) -> Geometry {
        Geometry::new(b, h, w).unwrap()
    }

    fn band(z_min: f64, z_max: f64, scale: f64) -> Band {
        Band {
            z_min_m: z_min,
            z_max_m: Depth::new(z_max).unwrap(),
            baseline_scale: scale,
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(RemapCurve::identity().apply(0.004), 0.004);
        assert_relative_eq!(RemapCurve::shift(0.002).unwrap().apply(0.004), 0.006, max_relative = 1e-15);
        assert_eq!(RemapCurve::interpolate(1.0).unwrap().apply(0.00325), 0.00325);
        assert_eq!(RemapCurve::interpolate(0.0).unwrap().apply(0.00325), 0.0);
        assert_eq!(RemapCurve::interpolate(0.5).unwrap().apply(0.00325), 0.001625);
        assert!(RemapCurve::interpolate(1.5).is_err());
    }

    #[test]
    fn depth_proportional_maps_infinity_to_parallel_gaze() {
        let shoot = g(0.13, 15.0, 10.0);
        let view = g(0.065, 15.0, 10.0);
        let c = RemapCurve::depth_proportional(&shoot, &view).unwrap();
        assert_eq!(c.apply(0.013), 0.0065);
        assert_eq!(c.apply(0.0), 0.0);
        assert_eq!(
            perceived_depth(&view, c.apply(shoot.infinity_disparity()), 0.0).unwrap(),
            Perceived::At(Depth::Infinite)
        );
        let same = RemapCurve::depth_proportional(&view, &view).unwrap();
        assert_eq!(same.apply(0.003), 0.003);
    }

    #[test]
    fn single_unit_band_is_identity() {
        let shoot = g(0.065, 15.0, 10.0);
        let c = RemapCurve::multirig(&[band(0.0, f64::INFINITY, 1.0)], &shoot).unwrap();
        for d in [-0.5, -0.01, 0.0, 0.003, 0.0065, 0.02] {
            assert_eq!(c.apply(d), d);
        }
    }

    #[test]
    fn far_band_doubles_slope() {
        let shoot = g(0.065, 15.0, 10.0);
        let c = RemapCurve::multirig(
            &[band(0.0, 15.0, 1.0), band(15.0, f64::INFINITY, 2.0)],
            &shoot,
        )
        .unwrap();
        let d_near = disparity_from_depth(&shoot, Depth::Finite(8.0)).unwrap();
        let d_far = disparity_from_depth(&shoot, Depth::Finite(40.0)).unwrap();
        assert_relative_eq!(c.apply(d_near), d_near, max_relative = 1e-12);
        assert_relative_eq!(c.apply(d_far), 2.0 * d_far, max_relative = 1e-12);
    }

    #[test]
    fn zero_scale_band_is_flat() {
        let shoot = g(0.065, 15.0, 10.0);
        let c = RemapCurve::multirig(
            &[band(0.0, 10.0, 1.0), band(10.0, 20.0, 0.0), band(25.0, f64::INFINITY, 1.0)],
            &shoot,
        );
        // band 0 ends at a negative disparity; a zero-scale band starting there jumps up to 0
        assert!(c.is_err());

        let c = RemapCurve::multirig(&[band(12.0, 20.0, 0.0), band(25.0, f64::INFINITY, 1.0)], &shoot)
            .unwrap();
        let a = disparity_from_depth(&shoot, Depth::Finite(13.0)).unwrap();
        let b = disparity_from_depth(&shoot, Depth::Finite(19.0)).unwrap();
        assert_eq!(c.apply(a), 0.0);
        assert_eq!(c.apply(b), 0.0);
    }

    #[test]
    fn overlapping_and_non_monotone_bands() {
        let shoot = g(0.065, 15.0, 10.0);
        assert_eq!(
            RemapCurve::multirig(&[band(0.0, 20.0, 1.0), band(18.0, 30.0, 1.0)], &shoot),
            Err(Error::OverlappingBands { first: 0, second: 1 })
        );
        let err = RemapCurve::multirig(&[band(16.0, 20.0, 3.0), band(21.0, 30.0, 1.0)], &shoot)
            .unwrap_err();
        assert!(matches!(err, Error::NonMonotoneBands { first: 0, second: 1, .. }), "{err}");
    }

    #[test]
    fn lut_interpolates_and_extrapolates() {
        let c = RemapCurve::lut(&[(-0.01, -0.005), (0.0, 0.0), (0.01, 0.02)]).unwrap();
        assert_eq!(c.apply(0.0), 0.0);
        assert_relative_eq!(c.apply(0.005), 0.01, max_relative = 1e-12);
        assert_relative_eq!(c.apply(-0.02), -0.01, max_relative = 1e-12);
        assert_relative_eq!(c.apply(0.02), 0.04, max_relative = 1e-12);
        assert!(RemapCurve::lut(&[(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(RemapCurve::lut(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let shoot = g(0.065, 15.0, 10.0);
        let curves = [
            RemapCurve::shift(0.002).unwrap(),
            RemapCurve::depth_proportional(&g(0.13, 15.0, 10.0), &shoot).unwrap(),
            RemapCurve::multirig(&[band(0.0, 15.0, 1.0), band(15.0, f64::INFINITY, 2.0)], &shoot)
                .unwrap(),
            RemapCurve::lut(&[(-0.01, -0.02), (0.01, 0.01)]).unwrap(),
        ];
        for c in curves {
            let text = c.to_csv(&[-0.01, 0.0, 0.01]);
            assert!(text.starts_with("# {") && text.contains("\"family\":"), "{text}");
            let back = RemapCurve::from_csv(&text).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn json_round_trip_validates() {
        let c: RemapCurve = serde_json::from_str(r#"{"family":"interpolate","t":0.25}"#).unwrap();
        assert_eq!(c.apply(0.004), 0.001);
        assert!(serde_json::from_str::<RemapCurve>(r#"{"family":"interpolate","t":2}"#).is_err());
    }
}
