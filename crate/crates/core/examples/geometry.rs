//! Projections between the equirectangular frame, the sphere and the cubemap,
//! and head orientation to viewport.

use vp360::error::Result;
use vp360::geometry::{
    cubemap_to_spherical, equirect_to_spherical, quaternion_to_viewport, spherical_to_cubemap, spherical_to_equirect,
    EquirectPoint, FrameDims, HeadQuaternion,
};

fn main() -> Result<()> {
    let dims = FrameDims::new(3840, 1920)?;
    let face = 960.0;

    for p in [
        EquirectPoint::new(1920.0, 960.0),
        EquirectPoint::new(0.0, 960.0),
        EquirectPoint::new(3000.0, 200.0),
        EquirectPoint::new(500.0, 1900.0),
    ] {
        let s = equirect_to_spherical(p, dims)?;
        let c = spherical_to_cubemap(s, face);
        let back = spherical_to_equirect(cubemap_to_spherical(c, face), dims);
        println!(
            "({:7.1}, {:6.1}) -> theta {:+.4} phi {:+.4} -> {:?} ({:6.1}, {:6.1}) -> ({:7.1}, {:6.1})",
            p.x, p.y, s.theta, s.phi, c.face, c.u, c.v, back.x, back.y
        );
    }

    // a quarter turn of yaw moves the viewport a quarter of the frame
    let h = std::f64::consts::FRAC_PI_4;
    for (name, q) in [
        ("identity", HeadQuaternion::new(1.0, 0.0, 0.0, 0.0, 0.0)),
        ("yaw +90", HeadQuaternion::new(h.cos(), 0.0, 0.0, h.sin(), 0.0)),
        ("pitch +45", HeadQuaternion::new((h / 2.0).cos(), 0.0, -(h / 2.0).sin(), 0.0, 0.0)),
    ] {
        let v = quaternion_to_viewport(q, dims)?;
        println!("{name:>9}: viewport ({:.1}, {:.1})", v.x, v.y);
    }
    Ok(())
}
