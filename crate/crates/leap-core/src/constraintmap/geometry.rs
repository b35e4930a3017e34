//! Collision volumes and closed-form distance queries.
//!
//! Shapes are capsules (robot links), half-space planes (floor), and
//! axis-aligned boxes (platforms, obstacles). All pair queries return the
//! separation between *surfaces*, the closest surface points, and the unit
//! direction pushing the first shape away from the second.

use nalgebra::{Isometry3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::Real;

/// Collision volume in its attachment frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape<T: Real> {
    /// Segment from `a` to `b` inflated by `radius`. `a == b` degenerates
    /// to a sphere.
    Capsule {
        a: Vector3<T>,
        b: Vector3<T>,
        radius: T,
    },
    /// Half-space `normal . x <= offset` (solid side below the surface).
    Plane { normal: Vector3<T>, offset: T },
    /// Axis-aligned box given by corner-to-corner bounds.
    Aabb { min: Vector3<T>, max: Vector3<T> },
}

impl<T: Real> Shape<T> {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Shape::Capsule { a, b, radius } => {
                if *radius <= T::zero() {
                    return Err("capsule radius must be positive".into());
                }
                if !(a.iter().all(|v| v.is_finite()) && b.iter().all(|v| v.is_finite())) {
                    return Err("capsule endpoints must be finite".into());
                }
                Ok(())
            }
            Shape::Plane { normal, .. } => {
                if normal.norm() <= T::zero() {
                    return Err("plane normal must be nonzero".into());
                }
                Ok(())
            }
            Shape::Aabb { min, max } => {
                for k in 0..3 {
                    if min[k] >= max[k] {
                        return Err("aabb min must be strictly below max".into());
                    }
                }
                Ok(())
            }
        }
    }
}

/// Named collision volume attached to a robot body or to the world.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollisionGeom<T: Real> {
    pub name: String,
    #[serde(flatten)]
    pub shape: Shape<T>,
}

/// Result of a pair distance query.
#[derive(Clone, Debug)]
pub struct PairDistance<T: Real> {
    /// Surface-to-surface separation; clamped to zero under penetration.
    pub rho: T,
    /// Closest point on the first shape's surface (world frame).
    pub point_a: Vector3<T>,
    /// Closest point on the second shape's surface (world frame).
    pub point_b: Vector3<T>,
    /// Unit direction of repulsion for the first shape (points from B to A).
    pub direction: Unit<Vector3<T>>,
    /// Set when the shapes overlap deeper than the surface clamp.
    pub penetrating: bool,
}

/// Closest point on segment `[a, b]` to point `p`.
fn segment_point_closest<T: Real>(a: &Vector3<T>, b: &Vector3<T>, p: &Vector3<T>) -> Vector3<T> {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= T::default_epsilon() {
        return *a;
    }
    let t = (p - a).dot(&ab) / len2;
    let t = t.clamp(T::zero(), T::one());
    a + ab * t
}

/// Closest points between segments `[p1,q1]` and `[p2,q2]`.
///
/// Standard clamped-parameter algorithm; handles degenerate and parallel
/// segments.
fn segment_segment_closest<T: Real>(
    p1: &Vector3<T>,
    q1: &Vector3<T>,
    p2: &Vector3<T>,
    q2: &Vector3<T>,
) -> (Vector3<T>, Vector3<T>) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let eps = T::default_epsilon();

    let (mut s, mut t);
    if a <= eps && e <= eps {
        return (*p1, *p2);
    }
    if a <= eps {
        return (*p1, segment_point_closest(p2, q2, p1));
    }
    {
        let c = d1.dot(&r);
        if e <= eps {
            return (segment_point_closest(p1, q1, p2), *p2);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            s = if denom > eps {
                ((b * f - c * e) / denom).clamp(T::zero(), T::one())
            } else {
                T::zero()
            };
            t = (b * s + f) / e;
            if t < T::zero() {
                t = T::zero();
                s = (-c / a).clamp(T::zero(), T::one());
            } else if t > T::one() {
                t = T::one();
                s = ((b - c) / a).clamp(T::zero(), T::one());
            }
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

/// Closest point inside an AABB to `p` (identity when `p` is inside).
fn aabb_clamp<T: Real>(min: &Vector3<T>, max: &Vector3<T>, p: &Vector3<T>) -> Vector3<T> {
    Vector3::new(
        p.x.clamp(min.x, max.x),
        p.y.clamp(min.y, max.y),
        p.z.clamp(min.z, max.z),
    )
}

/// Minimizes point-to-box distance over a segment with a golden-section
/// search; the objective is convex in the segment parameter.
fn segment_aabb_closest<T: Real>(
    a: &Vector3<T>,
    b: &Vector3<T>,
    min: &Vector3<T>,
    max: &Vector3<T>,
) -> (Vector3<T>, Vector3<T>) {
    let dist2 = |t: T| {
        let p = a + (b - a) * t;
        (p - aabb_clamp(min, max, &p)).norm_squared()
    };
    let inv_phi: T = nalgebra::convert(0.618_033_988_749_894_9_f64);
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut x1 = hi - (hi - lo) * inv_phi;
    let mut x2 = lo + (hi - lo) * inv_phi;
    let (mut f1, mut f2) = (dist2(x1), dist2(x2));
    let tol: T = nalgebra::convert(1e-12_f64);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * inv_phi;
            f1 = dist2(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * inv_phi;
            f2 = dist2(x2);
        }
    }
    let t = (lo + hi) / (T::one() + T::one());
    let p = a + (b - a) * t;
    (p, aabb_clamp(min, max, &p))
}

fn finish_capsule_pair<T: Real>(
    on_axis_a: Vector3<T>,
    radius_a: T,
    on_other: Vector3<T>,
    radius_b: T,
    fallback_dir: Vector3<T>,
) -> PairDistance<T> {
    let delta = on_axis_a - on_other;
    let center_dist = delta.norm();
    let dir = if center_dist > nalgebra::convert(1e-12_f64) {
        Unit::new_normalize(delta)
    } else {
        Unit::new_normalize(fallback_dir)
    };
    let rho = center_dist - radius_a - radius_b;
    PairDistance {
        rho: rho.max(T::zero()),
        point_a: on_axis_a - dir.into_inner() * radius_a,
        point_b: on_other + dir.into_inner() * radius_b,
        direction: dir,
        penetrating: rho < T::zero(),
    }
}

/// Surface distance between two posed shapes.
///
/// Supported pairs: capsule-capsule, capsule-plane, capsule-aabb (either
/// order). Plane and box shapes are environment-side and are not paired
/// with each other.
pub fn pair_distance<T: Real>(
    shape_a: &Shape<T>,
    pose_a: &Isometry3<T>,
    shape_b: &Shape<T>,
    pose_b: &Isometry3<T>,
) -> Option<PairDistance<T>> {
    use Shape::*;
    match (shape_a, shape_b) {
        (
            Capsule {
                a: a1,
                b: b1,
                radius: r1,
            },
            Capsule {
                a: a2,
                b: b2,
                radius: r2,
            },
        ) => {
            let (p1, q1) = (pose_a * nalgebra::Point3::from(*a1), pose_a * nalgebra::Point3::from(*b1));
            let (p2, q2) = (pose_b * nalgebra::Point3::from(*a2), pose_b * nalgebra::Point3::from(*b2));
            let (c1, c2) =
                segment_segment_closest(&p1.coords, &q1.coords, &p2.coords, &q2.coords);
            Some(finish_capsule_pair(c1, *r1, c2, *r2, Vector3::z()))
        }
        (Capsule { a, b, radius }, Plane { normal, offset }) => {
            let n = Unit::new_normalize(pose_b.transform_vector(normal));
            let offset_w = *offset + n.dot(&pose_b.translation.vector);
            let pa = (pose_a * nalgebra::Point3::from(*a)).coords;
            let pb = (pose_a * nalgebra::Point3::from(*b)).coords;
            let da = n.dot(&pa) - offset_w;
            let db = n.dot(&pb) - offset_w;
            let (on_axis, d) = if da <= db { (pa, da) } else { (pb, db) };
            let rho = d - *radius;
            Some(PairDistance {
                rho: rho.max(T::zero()),
                point_a: on_axis - n.into_inner() * *radius,
                point_b: on_axis - n.into_inner() * d,
                direction: n,
                penetrating: rho < T::zero(),
            })
        }
        (Capsule { a, b, radius }, Aabb { min, max }) => {
            // Boxes are world-axis-aligned; only their translation applies.
            let shift = pose_b.translation.vector;
            let pa = (pose_a * nalgebra::Point3::from(*a)).coords - shift;
            let pb = (pose_a * nalgebra::Point3::from(*b)).coords - shift;
            let (on_axis, on_box) = segment_aabb_closest(&pa, &pb, min, max);
            let mut out = finish_capsule_pair(
                on_axis + shift,
                *radius,
                on_box + shift,
                T::zero(),
                Vector3::z(),
            );
            // Deep penetration (axis inside the box) keeps rho at zero.
            if (on_axis - on_box).norm() <= T::default_epsilon() {
                out.penetrating = true;
                out.rho = T::zero();
            }
            Some(out)
        }
        (Plane { .. }, Capsule { .. }) | (Aabb { .. }, Capsule { .. }) => {
            let swapped = pair_distance(shape_b, pose_b, shape_a, pose_a)?;
            Some(PairDistance {
                rho: swapped.rho,
                point_a: swapped.point_b,
                point_b: swapped.point_a,
                direction: Unit::new_unchecked(-swapped.direction.into_inner()),
                penetrating: swapped.penetrating,
            })
        }
        _ => None,
    }
}
