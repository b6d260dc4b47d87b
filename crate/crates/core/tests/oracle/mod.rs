//! Brute-force two-ray stereo simulator, independent of the closed forms in
//! the library.
//!
//! Shooting: two pinhole cameras at `x = -b/2` and `x = +b/2` on the `z = 0`
//! line, converging on the plane `z = H`, which is `W` wide. A scene point is
//! projected onto that plane along the ray from each camera; its image
//! position is the hit point divided by `W`.
//!
//! Viewing: the two images are blown up to the screen `W'` wide at `z = H'`,
//! each shifted by half the extra shift `d0` (left image left, right image
//! right), and the ray from each eye through its image point is intersected
//! with the other one.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seen {
    At(f64),
    Infinity,
    Divergent,
}

#[derive(Debug, Clone, Copy)]
pub struct Rig {
    pub b: f64,
    pub h: f64,
    pub w: f64,
}

/// Where the ray from `origin` towards `target` (or along `dir` for a point
/// at infinity) meets the plane `z = plane_z`.
fn hit_plane(origin: (f64, f64), dir: (f64, f64), plane_z: f64) -> f64 {
    let t = (plane_z - origin.1) / dir.1;
    origin.0 + t * dir.0
}

/// Normalized image positions (left, right) of scene point `(x, z)`; `z =
/// inf` is the point at infinity straight ahead.
pub fn project(rig: Rig, x: f64, z: f64) -> (f64, f64) {
    let cams = [(-rig.b / 2.0, 0.0), (rig.b / 2.0, 0.0)];
    let pos = cams.map(|c| {
        let dir = if z.is_infinite() { (0.0, 1.0) } else { (x - c.0, z - c.1) };
        hit_plane(c, dir, rig.h) / rig.w
    });
    (pos[0], pos[1])
}

/// Intersects the eye rays through screen points `ml` and `mr` (meters).
pub fn triangulate(view: Rig, ml: f64, mr: f64) -> Seen {
    let el = (-view.b / 2.0, 0.0);
    let er = (view.b / 2.0, 0.0);
    // el + s * u = er + t * v
    let u = (ml - el.0, view.h);
    let v = (mr - er.0, view.h);
    let det = u.0 * -v.1 - u.1 * -v.0;
    let rhs = (er.0 - el.0, er.1 - el.1);
    // gaze closer to parallel than one part in 1e9 of the eye separation
    // counts as parallel, the library's documented tolerance
    if det.abs() <= 1e-9 * view.b * view.h {
        return Seen::Infinity;
    }
    let s = (rhs.0 * -v.1 - rhs.1 * -v.0) / det;
    if s < 0.0 {
        // the rays meet behind the viewer: the eyes would have to diverge
        return Seen::Divergent;
    }
    Seen::At(el.1 + s * u.1)
}

/// Perceived depth of scene point `(x, z)` shot with `shoot`, shown in
/// `view` with extra shift `d0`.
pub fn simulate(shoot: Rig, view: Rig, d0: f64, x: f64, z: f64) -> Seen {
    let (ul, ur) = project(shoot, x, z);
    let ml = (ul - d0 / 2.0) * view.w;
    let mr = (ur + d0 / 2.0) * view.w;
    triangulate(view, ml, mr)
}

/// Disparity fraction measured on the convergence plane.
pub fn disparity(shoot: Rig, x: f64, z: f64) -> f64 {
    let (ul, ur) = project(shoot, x, z);
    ur - ul
}
