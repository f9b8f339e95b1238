//! Small vector-geometry helpers shared across modules.

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// Two unit vectors completing `axis` to a right-handed orthonormal triad
/// (e1, e2, axis). Uses z-hat as the reference direction, falling back to
/// x-hat when `axis` is (anti)parallel to z.
pub fn orthonormal_complement(axis: &Vec3) -> (Vec3, Vec3) {
    let n = axis.normalize();
    let zhat = Vec3::new(0.0, 0.0, 1.0);
    let reference = if n.cross(&zhat).norm() < 1e-10 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        zhat
    };
    let e1 = reference.cross(&n).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Distance from `point` to the segment [a, b].
pub fn distance_point_segment(point: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (point - a).norm();
    }
    let t = ((point - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (point - (a + ab * t)).norm()
}

/// Distance from `point` to a circle of radius `radius` centred at
/// `center` with unit normal `axis`.
pub fn distance_point_circle(point: &Vec3, center: &Vec3, axis: &Vec3, radius: f64) -> f64 {
    let d = point - center;
    let z = d.dot(axis);
    let rho = (d - axis * z).norm();
    ((rho - radius).powi(2) + z * z).sqrt()
}
