//! Coordinate conversions between equirectangular pixels, spherical angles,
//! cube-map faces and head-orientation quaternions.
//!
//! Conventions:
//! - `theta` is the azimuth in `[-pi, pi]`, `phi` the elevation in `[-pi/2, pi/2]`.
//! - Pixel `x` grows with `theta`; pixel `y = 0` is `phi = -pi/2`.
//! - The gaze reference vector is `+x`, so the identity orientation looks at
//!   the frame center. Datasets with other axis conventions must be rotated
//!   before ingestion.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equirectangular frame size in pixels. Width is always twice the height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDims {
    pub width: u32,
    pub height: u32,
}

impl FrameDims {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::InvalidConfig(format!(
                "frame must be non-empty with width = 2 * height, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn w(&self) -> f64 {
        self.width as f64
    }

    pub fn h(&self) -> f64 {
        self.height as f64
    }

    pub fn contains(&self, p: EquirectPoint) -> bool {
        p.x >= 0.0 && p.x < self.w() && p.y >= 0.0 && p.y < self.h()
    }

    /// Wraps `x` onto `[0, width)` and clamps `y` into `[0, height)`.
    pub fn normalize(&self, p: EquirectPoint) -> EquirectPoint {
        EquirectPoint {
            x: wrap_below(p.x, self.w()),
            y: clamp_below(p.y, self.h()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub rho: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn unit(theta: f64, phi: f64) -> Self {
        Self {
            rho: 1.0,
            theta,
            phi,
        }
    }

    /// Unit direction vector.
    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [cp * ct, cp * st, sp]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EquirectPoint {
    pub x: f64,
    pub y: f64,
}

impl EquirectPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Cube faces in tie-break precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CubeFace {
    Front,
    Right,
    Back,
    Left,
    Top,
    Bottom,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::Front,
        CubeFace::Right,
        CubeFace::Back,
        CubeFace::Left,
        CubeFace::Top,
        CubeFace::Bottom,
    ];

    /// (normal, in-face u axis, in-face v axis).
    fn basis(self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        match self {
            CubeFace::Front => ([1., 0., 0.], [0., 1., 0.], [0., 0., 1.]),
            CubeFace::Right => ([0., 1., 0.], [-1., 0., 0.], [0., 0., 1.]),
            CubeFace::Back => ([-1., 0., 0.], [0., -1., 0.], [0., 0., 1.]),
            CubeFace::Left => ([0., -1., 0.], [1., 0., 0.], [0., 0., 1.]),
            CubeFace::Top => ([0., 0., 1.], [0., 1., 0.], [-1., 0., 0.]),
            CubeFace::Bottom => ([0., 0., -1.], [0., 1., 0.], [1., 0., 0.]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubemapPoint {
    pub face: CubeFace,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub timestamp: f64,
}

impl HeadQuaternion {
    pub fn new(w: f64, x: f64, y: f64, z: f64, timestamp: f64) -> Self {
        Self {
            w,
            x,
            y,
            z,
            timestamp,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

const UNIT_TOL: f64 = 1e-6;
const RENORMALIZE_TOL: f64 = 1e-3;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn wrap_below(v: f64, period: f64) -> f64 {
    let r = v.rem_euclid(period);
    // rem_euclid may round up to `period` for tiny negative inputs
    if r >= period {
        0.0
    } else {
        r
    }
}

fn clamp_below(v: f64, upper: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else if v >= upper {
        upper.next_down()
    } else {
        v
    }
}

pub fn cartesian_to_spherical(cx: f64, cy: f64, cz: f64) -> Result<SphericalPoint> {
    let rho = (cx * cx + cy * cy + cz * cz).sqrt();
    if rho == 0.0 || !rho.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "cannot take direction of ({cx}, {cy}, {cz})"
        )));
    }
    // atan2(0, 0) is 0 on the poles
    let theta = cy.atan2(cx);
    let phi = (cz / rho).clamp(-1.0, 1.0).asin();
    Ok(SphericalPoint { rho, theta, phi })
}

/// Angles of a pixel without a bounds check. Used internally where points
/// may sit a rounding error outside the frame.
pub(crate) fn pixel_angles(p: EquirectPoint, dims: FrameDims) -> (f64, f64) {
    let theta = (2.0 * p.x / dims.w() - 1.0) * PI;
    let phi = (p.y / dims.h() - 0.5) * PI;
    (theta, phi)
}

pub fn equirect_to_spherical(p: EquirectPoint, dims: FrameDims) -> Result<SphericalPoint> {
    if !dims.contains(p) {
        return Err(Error::OutOfFrame {
            x: p.x,
            y: p.y,
            width: dims.width,
            height: dims.height,
        });
    }
    let (theta, phi) = pixel_angles(p, dims);
    Ok(SphericalPoint {
        rho: dims.w() / TAU,
        theta,
        phi,
    })
}

/// Inverse of [`equirect_to_spherical`]. `x` wraps at the seam, `y` at the
/// bottom pole is pulled just inside the frame.
pub fn spherical_to_equirect(s: SphericalPoint, dims: FrameDims) -> EquirectPoint {
    let x = (s.theta / PI + 1.0) * 0.5 * dims.w();
    let y = (s.phi / PI + 0.5) * dims.h();
    dims.normalize(EquirectPoint { x, y })
}

pub fn spherical_to_cubemap(s: SphericalPoint, face_size: f64) -> CubemapPoint {
    let d = s.direction();
    let mut best = CubeFace::Front;
    let mut best_val = f64::NEG_INFINITY;
    for face in CubeFace::ALL {
        let val = dot(d, face.basis().0);
        // strict: earlier faces win ties
        if val > best_val {
            best = face;
            best_val = val;
        }
    }
    let (normal, u_axis, v_axis) = best.basis();
    let depth = dot(d, normal);
    let a = dot(d, u_axis) / depth;
    let b = dot(d, v_axis) / depth;
    let to_px = |t: f64| clamp_below((t + 1.0) * 0.5 * face_size, face_size);
    CubemapPoint {
        face: best,
        u: to_px(a),
        v: to_px(b),
    }
}

/// Inverse of [`spherical_to_cubemap`]; the radius is reported as `2 * size`.
pub fn cubemap_to_spherical(c: CubemapPoint, face_size: f64) -> SphericalPoint {
    let a = 2.0 * c.u / face_size - 1.0;
    let b = 2.0 * c.v / face_size - 1.0;
    let (n, u, v) = c.face.basis();
    let d = [
        n[0] + a * u[0] + b * v[0],
        n[1] + a * u[1] + b * v[1],
        n[2] + a * u[2] + b * v[2],
    ];
    let s = cartesian_to_spherical(d[0], d[1], d[2]).expect("face normal is never zero");
    SphericalPoint {
        rho: 2.0 * face_size,
        ..s
    }
}

pub fn quaternion_to_viewport(q: HeadQuaternion, dims: FrameDims) -> Result<EquirectPoint> {
    let norm = q.norm();
    let (w, x, y, z) = if (norm - 1.0).abs() <= UNIT_TOL {
        (q.w, q.x, q.y, q.z)
    } else if (norm - 1.0).abs() <= RENORMALIZE_TOL {
        log::warn!("renormalizing head quaternion with norm {norm}");
        (q.w / norm, q.x / norm, q.y / norm, q.z / norm)
    } else {
        return Err(Error::InvalidQuaternion { norm });
    };
    // first column of the rotation matrix == R * (1, 0, 0)
    let gx = 1.0 - 2.0 * (y * y + z * z);
    let gy = 2.0 * (x * y + w * z);
    let gz = 2.0 * (x * z - w * y);
    let s = cartesian_to_spherical(gx, gy, gz)?;
    Ok(spherical_to_equirect(s, dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn dims() -> FrameDims {
        FrameDims::new(3840, 1920).unwrap()
    }

    #[test]
    fn frame_dims_must_be_two_to_one() {
        assert!(FrameDims::new(3840, 1920).is_ok());
        assert!(FrameDims::new(3840, 2160).is_err());
        assert!(FrameDims::new(0, 0).is_err());
    }

    #[test]
    fn cartesian_axis_pole_and_diagonal() {
        let s = cartesian_to_spherical(1.0, 0.0, 0.0).unwrap();
        assert_eq!((s.rho, s.theta, s.phi), (1.0, 0.0, 0.0));

        let s = cartesian_to_spherical(0.0, 0.0, 1.0).unwrap();
        assert_eq!(s.theta, 0.0);
        assert_abs_diff_eq!(s.phi, FRAC_PI_2);

        let s = cartesian_to_spherical(1.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(s.rho, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.theta, FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(s.phi, 0.0);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        assert!(matches!(
            cartesian_to_spherical(0.0, 0.0, 0.0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn equirect_center_and_origin() {
        let d = dims();
        let s = equirect_to_spherical(EquirectPoint::new(1920.0, 960.0), d).unwrap();
        assert_eq!((s.theta, s.phi), (0.0, 0.0));
        assert_abs_diff_eq!(s.rho, 3840.0 / TAU);

        let s = equirect_to_spherical(EquirectPoint::new(0.0, 0.0), d).unwrap();
        assert_eq!((s.theta, s.phi), (-PI, -FRAC_PI_2));

        let p = spherical_to_equirect(SphericalPoint::unit(0.0, 0.0), d);
        assert_eq!((p.x, p.y), (1920.0, 960.0));
        let p = spherical_to_equirect(SphericalPoint::unit(-PI, -FRAC_PI_2), d);
        assert_eq!((p.x, p.y), (0.0, 0.0));
    }

    #[test]
    fn out_of_frame_rejected() {
        let d = dims();
        for p in [(-1.0, 5.0), (3840.0, 5.0), (5.0, 1920.0), (5.0, -0.5)] {
            assert!(matches!(
                equirect_to_spherical(EquirectPoint::new(p.0, p.1), d),
                Err(Error::OutOfFrame { .. })
            ));
        }
    }

    #[test]
    fn cubemap_front_and_top_centers() {
        let c = spherical_to_cubemap(SphericalPoint::unit(0.0, 0.0), 512.0);
        assert_eq!(c.face, CubeFace::Front);
        assert_eq!((c.u, c.v), (256.0, 256.0));

        let c = spherical_to_cubemap(SphericalPoint::unit(0.0, FRAC_PI_2), 512.0);
        assert_eq!(c.face, CubeFace::Top);
        assert_abs_diff_eq!(c.u, 256.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.v, 256.0, epsilon = 1e-9);
    }

    #[test]
    fn cubemap_off_axis_matches_plane_projection() {
        // hit point on the plane x = rho is (rho, rho tan(theta), rho tan(phi) sec(theta))
        let (theta, phi) = (PI / 6.0, PI / 6.0);
        let a = theta.tan();
        let b = phi.tan() / theta.cos();
        assert!(b.abs() < 1.0);
        let size = 1000.0;
        let c = spherical_to_cubemap(SphericalPoint::unit(theta, phi), size);
        assert_eq!(c.face, CubeFace::Front);
        assert_abs_diff_eq!(c.u, (a + 1.0) / 2.0 * size, epsilon = 1e-9);
        assert_abs_diff_eq!(c.v, (b + 1.0) / 2.0 * size, epsilon = 1e-9);

        let back = cubemap_to_spherical(c, size);
        assert_abs_diff_eq!(back.theta, theta, epsilon = 1e-12);
        assert_abs_diff_eq!(back.phi, phi, epsilon = 1e-12);
        assert_eq!(back.rho, 2.0 * size);
    }

    #[test]
    fn steep_elevation_always_top_or_bottom() {
        for i in 0..100 {
            let theta = -PI + TAU * i as f64 / 100.0;
            assert_eq!(
                spherical_to_cubemap(SphericalPoint::unit(theta, FRAC_PI_4 + 1e-6), 1.0).face,
                CubeFace::Top
            );
            assert_eq!(
                spherical_to_cubemap(SphericalPoint::unit(theta, -FRAC_PI_4 - 1e-6), 1.0).face,
                CubeFace::Bottom
            );
        }
    }

    #[test]
    fn face_ties_follow_precedence() {
        // theta = pi/4 is equidistant from front and right
        let c = spherical_to_cubemap(SphericalPoint::unit(FRAC_PI_4, 0.0), 1.0);
        assert!(matches!(c.face, CubeFace::Front | CubeFace::Right));
        let c = spherical_to_cubemap(SphericalPoint::unit(0.0, FRAC_PI_4), 1.0);
        assert!(matches!(c.face, CubeFace::Front | CubeFace::Top));
    }

    /// Hamilton-product rotation, independent of the matrix path.
    fn rotate(q: (f64, f64, f64, f64), v: [f64; 3]) -> [f64; 3] {
        let mul = |a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)| {
            (
                a.0 * b.0 - a.1 * b.1 - a.2 * b.2 - a.3 * b.3,
                a.0 * b.1 + a.1 * b.0 + a.2 * b.3 - a.3 * b.2,
                a.0 * b.2 - a.1 * b.3 + a.2 * b.0 + a.3 * b.1,
                a.0 * b.3 + a.1 * b.2 - a.2 * b.1 + a.3 * b.0,
            )
        };
        let conj = (q.0, -q.1, -q.2, -q.3);
        let r = mul(mul(q, (0.0, v[0], v[1], v[2])), conj);
        [r.1, r.2, r.3]
    }

    #[test]
    fn quaternion_identity_is_frame_center() {
        let p = quaternion_to_viewport(HeadQuaternion::new(1., 0., 0., 0., 0.), dims()).unwrap();
        assert_eq!((p.x, p.y), (1920.0, 960.0));
    }

    #[test]
    fn quaternion_yaw_pi_lands_on_seam() {
        let q = (0.0, 0.0, 0.0, 1.0);
        let g = rotate(q, [1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-12);
        let p = quaternion_to_viewport(HeadQuaternion::new(q.0, q.1, q.2, q.3, 0.0), dims())
            .unwrap();
        assert!(p.x < 1e-6 || p.x > 3840.0 - 1e-6, "x = {}", p.x);
        assert_abs_diff_eq!(p.y, 960.0, epsilon = 1e-9);
    }

    #[test]
    fn quaternion_pitch_half_pi_hits_top_row() {
        let h = FRAC_PI_4;
        let q = (h.cos(), 0.0, h.sin(), 0.0);
        let g = rotate(q, [1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(g[2], -1.0, epsilon = 1e-12);
        let p = quaternion_to_viewport(HeadQuaternion::new(q.0, q.1, q.2, q.3, 0.0), dims())
            .unwrap();
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-4);
    }

    #[test]
    fn quaternion_matches_hamilton_rotation() {
        let raw: (f64, f64, f64, f64) = (0.3, -0.5, 0.7, 0.2);
        let n = (raw.0 * raw.0 + raw.1 * raw.1 + raw.2 * raw.2 + raw.3 * raw.3).sqrt();
        let q = (raw.0 / n, raw.1 / n, raw.2 / n, raw.3 / n);
        let g = rotate(q, [1.0, 0.0, 0.0]);
        let expected = spherical_to_equirect(cartesian_to_spherical(g[0], g[1], g[2]).unwrap(), dims());
        let got = quaternion_to_viewport(HeadQuaternion::new(q.0, q.1, q.2, q.3, 0.0), dims())
            .unwrap();
        assert_abs_diff_eq!(got.x, expected.x, epsilon = 1e-9);
        assert_abs_diff_eq!(got.y, expected.y, epsilon = 1e-9);
    }

    #[test]
    fn quaternion_norm_handling() {
        let slightly_off = HeadQuaternion::new(1.0005, 0.0, 0.0, 0.0, 0.0);
        let p = quaternion_to_viewport(slightly_off, dims()).unwrap();
        assert_eq!((p.x, p.y), (1920.0, 960.0));
        let bad = HeadQuaternion::new(2.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            quaternion_to_viewport(bad, dims()),
            Err(Error::InvalidQuaternion { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn double_cover(w in -1.0f64..1.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
                let n = (w * w + x * x + y * y + z * z).sqrt();
                prop_assume!(n > 1e-3);
                let q = HeadQuaternion::new(w / n, x / n, y / n, z / n, 0.0);
                let neg = HeadQuaternion::new(-q.w, -q.x, -q.y, -q.z, 0.0);
                let a = quaternion_to_viewport(q, dims()).unwrap();
                let b = quaternion_to_viewport(neg, dims()).unwrap();
                prop_assert!((a.x - b.x).abs() < 1e-6 || (a.x - b.x).abs() > 3840.0 - 1e-6);
                prop_assert!((a.y - b.y).abs() < 1e-6);
            }

            #[test]
            fn rho_is_input_norm(cx in -1e3f64..1e3, cy in -1e3f64..1e3, cz in -1e3f64..1e3) {
                let n = (cx * cx + cy * cy + cz * cz).sqrt();
                prop_assume!(n > 1e-9);
                let s = cartesian_to_spherical(cx, cy, cz).unwrap();
                prop_assert!((s.rho - n).abs() <= 1e-12 * n);
                prop_assert!(s.theta.abs() <= PI && s.phi.abs() <= FRAC_PI_2);
            }
        }
    }
}
