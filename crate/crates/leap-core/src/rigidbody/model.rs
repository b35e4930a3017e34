//! Kinematic-tree model and the robot description file.
//!
//! Coordinate layout: `q = [base position (3), base angles (3), joints]`
//! with the base angles following the convention in [`crate::math`].
//! Every non-base body is connected to its parent by one hinge joint, so
//! the joint coordinate of body `i >= 1` is `5 + i`.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraintmap::geometry::CollisionGeom;
use crate::math::rotation_zyx;
use crate::Real;

/// Default joint-limit activation margin: 5 degrees.
pub const DEFAULT_ACTIVATION_MARGIN: f64 = 5.0 * std::f64::consts::PI / 180.0;

#[derive(Clone, Debug)]
pub enum JointKind<T: Real> {
    /// Free-floating 6-DoF mobilization (body 0 only).
    FreeBase,
    /// Hinge about `axis` (unit, in the child body frame).
    Hinge {
        axis: Unit<Vector3<T>>,
        limits: [T; 2],
        activation_margin: T,
        actuated: bool,
    },
}

#[derive(Clone, Debug)]
pub struct Body<T: Real> {
    pub name: String,
    /// Index of the parent body; 0 points at the base. Unused for body 0.
    pub parent: usize,
    pub joint: JointKind<T>,
    /// Joint anchor in the parent body frame.
    pub origin_in_parent: Vector3<T>,
    /// Fixed mount rotation applied before the hinge.
    pub rotation_in_parent: Rotation3<T>,
    pub mass: T,
    /// Inertia about the body COM, in the body frame.
    pub inertia_com: Matrix3<T>,
    /// Body COM in the body frame.
    pub com_offset: Vector3<T>,
    pub collision_geoms: Vec<CollisionGeom<T>>,
}

/// Collision pair registry from the robot description: explicit allow
/// lists of geometry names. Environment pairs reference world geometry
/// declared by the scenario (e.g. `"floor"`).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CollisionPairs {
    #[serde(default)]
    pub self_pairs: Vec<(String, String)>,
    #[serde(default)]
    pub environment_pairs: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct RobotModel<T: Real> {
    pub name: String,
    bodies: Vec<Body<T>>,
    /// Coordinate indices (>= 6) driven by actuators, ascending.
    actuated: Vec<usize>,
    pub collision_pairs: CollisionPairs,
    /// Name of the body that carries the support foot.
    pub support_body: String,
    /// Support foot corner points in the support body frame.
    pub foot_corners: Vec<Vector3<T>>,
}

impl<T: Real> RobotModel<T> {
    pub fn bodies(&self) -> &[Body<T>] {
        &self.bodies
    }

    pub fn body(&self, index: usize) -> &Body<T> {
        &self.bodies[index]
    }

    pub fn body_index(&self, name: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.name == name)
    }

    pub fn n_bodies(&self) -> usize {
        self.bodies.len()
    }

    /// Total generalized-coordinate count (6 + joints).
    pub fn nq(&self) -> usize {
        5 + self.bodies.len()
    }

    pub fn n_joints(&self) -> usize {
        self.bodies.len() - 1
    }

    /// Coordinate index of body `i`'s hinge (`i >= 1`).
    pub fn joint_coord(&self, body: usize) -> usize {
        debug_assert!(body >= 1);
        5 + body
    }

    /// Body carrying the hinge of coordinate `coord` (`coord >= 6`).
    pub fn coord_body(&self, coord: usize) -> usize {
        debug_assert!(coord >= 6);
        coord - 5
    }

    pub fn actuated_coords(&self) -> &[usize] {
        &self.actuated
    }

    pub fn total_mass(&self) -> T {
        self.bodies
            .iter()
            .fold(T::zero(), |acc, b| acc + b.mass)
    }

    /// Walks `body` and its ancestors up to the base, inclusive.
    pub fn chain_to_base(&self, body: usize) -> Vec<usize> {
        let mut chain = vec![body];
        let mut b = body;
        while b != 0 {
            b = self.bodies[b].parent;
            chain.push(b);
        }
        chain
    }

    /// Finds the body index owning a named collision geometry.
    pub fn geom_owner(&self, geom_name: &str) -> Option<(usize, usize)> {
        for (bi, body) in self.bodies.iter().enumerate() {
            if let Some(gi) = body
                .collision_geoms
                .iter()
                .position(|g| g.name == geom_name)
            {
                return Some((bi, gi));
            }
        }
        None
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("robot file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("robot file: {0}")]
    Io(#[from] std::io::Error),
    #[error("body {body}: {message}")]
    Invalid { body: String, message: String },
    #[error("{0}")]
    Structure(String),
}

fn invalid(body: &str, message: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        body: body.to_string(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Description file (plain f64; converted to the working scalar on load)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointFile {
    pub kind: String,
    #[serde(default)]
    pub axis: Option<[f64; 3]>,
    /// Hinge limits in degrees, `[lower, upper]`.
    #[serde(default)]
    pub limits_deg: Option<[f64; 2]>,
    /// Activation margin in degrees (default 5).
    #[serde(default)]
    pub activation_margin_deg: Option<f64>,
    #[serde(default = "default_true")]
    pub actuated: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyFile {
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    pub joint: JointFile,
    #[serde(default)]
    pub origin_in_parent: [f64; 3],
    /// Fixed mount rotation as (rx, ry, rz) in degrees.
    #[serde(default)]
    pub rpy_in_parent_deg: [f64; 3],
    pub mass: f64,
    /// Either `[ixx, iyy, izz]` or `[ixx, iyy, izz, ixy, ixz, iyz]`.
    pub inertia_com: Vec<f64>,
    #[serde(default)]
    pub com_offset: [f64; 3],
    #[serde(default)]
    pub collision: Vec<CollisionGeom<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobotFile {
    pub name: String,
    pub bodies: Vec<BodyFile>,
    #[serde(default)]
    pub collision_pairs: CollisionPairs,
    pub support_body: String,
    /// Foot corner contact points in the support body frame.
    pub foot_corners: Vec<[f64; 3]>,
}

impl RobotFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn inertia_from_entries(body: &str, entries: &[f64]) -> Result<Matrix3<f64>, ModelError> {
    match entries.len() {
        3 => Ok(Matrix3::from_diagonal(&Vector3::new(
            entries[0], entries[1], entries[2],
        ))),
        6 => Ok(Matrix3::new(
            entries[0], entries[3], entries[4], //
            entries[3], entries[1], entries[5], //
            entries[4], entries[5], entries[2],
        )),
        n => Err(invalid(
            body,
            format!("inertia_com must have 3 or 6 entries, got {n}"),
        )),
    }
}

fn validate_inertia(body: &str, inertia: &Matrix3<f64>) -> Result<(), ModelError> {
    let sym = (inertia - inertia.transpose()).abs().max();
    if sym > 1e-9 {
        return Err(invalid(body, "inertia_com must be symmetric"));
    }
    let eig = inertia.symmetric_eigenvalues();
    let mut principal: Vec<f64> = eig.iter().copied().collect();
    principal.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if principal[0] <= 0.0 {
        return Err(invalid(
            body,
            format!("inertia_com must be positive definite (min eigenvalue {:.3e})", principal[0]),
        ));
    }
    // triangle inequalities on principal moments
    if principal[2] > principal[0] + principal[1] + 1e-9 {
        return Err(invalid(
            body,
            "inertia_com violates the triangle inequality on principal moments",
        ));
    }
    Ok(())
}

impl<T: Real> RobotModel<T> {
    /// Builds and validates a model from parsed description data.
    pub fn from_file(file: &RobotFile) -> Result<Self, ModelError> {
        if file.bodies.is_empty() {
            return Err(ModelError::Structure("robot has no bodies".into()));
        }
        let names: Vec<&str> = file.bodies.iter().map(|b| b.name.as_str()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ModelError::Structure(format!("duplicate body name {n:?}")));
            }
        }

        let mut bodies = Vec::with_capacity(file.bodies.len());
        let mut actuated = Vec::new();
        let mut total_mass = 0.0;
        for (i, bf) in file.bodies.iter().enumerate() {
            let parent = match (&bf.parent, i) {
                (None, 0) => 0,
                (None, _) => {
                    return Err(invalid(&bf.name, "only the first body may omit a parent"))
                }
                (Some(_), 0) => {
                    return Err(invalid(&bf.name, "the first body must be the floating base"))
                }
                (Some(p), _) => {
                    let idx = names[..i]
                        .iter()
                        .position(|n| n == p)
                        .ok_or_else(||

                            invalid(&bf.name, format!("parent {p:?} must be declared earlier (tree order)")))?;
                    idx
                }
            };

            let joint = match bf.joint.kind.as_str() {
                "free" => {
                    if i != 0 {
                        return Err(invalid(&bf.name, "free joint is only valid on the base"));
                    }
                    JointKind::FreeBase
                }
                "hinge" => {
                    if i == 0 {
                        return Err(invalid(&bf.name, "the base must use a free joint"));
                    }
                    let axis = bf.joint.axis.ok_or_else(|| {
                        invalid(&bf.name, "hinge joint requires an axis")
                    })?;
                    let axis = Vector3::from(axis);
                    if axis.norm() < 1e-9 {
                        return Err(invalid(&bf.name, "hinge axis must be nonzero"));
                    }
                    let limits = bf.joint.limits_deg.ok_or_else(|| {
                        invalid(&bf.name, "hinge joint requires limits_deg")
                    })?;
                    if limits[0] >= limits[1] {
                        return Err(invalid(&bf.name, "joint limits must satisfy lower < upper"));
                    }
                    let margin = bf
                        .joint
                        .activation_margin_deg
                        .map(|d| d.to_radians())
                        .unwrap_or(DEFAULT_ACTIVATION_MARGIN);
                    if bf.joint.actuated {
                        actuated.push(5 + i);
                    }
                    JointKind::Hinge {
                        axis: Unit::new_normalize(axis.map(|v| nalgebra::convert(v))),
                        limits: [
                            nalgebra::convert(limits[0].to_radians()),
                            nalgebra::convert(limits[1].to_radians()),
                        ],
                        activation_margin: nalgebra::convert(margin),
                        actuated: bf.joint.actuated,
                    }
                }
                other => {
                    return Err(invalid(
                        &bf.name,
                        format!("unknown joint kind {other:?} (expected free|hinge)"),
                    ))
                }
            };

            if bf.mass <= 0.0 {
                return Err(invalid(&bf.name, "mass must be positive"));
            }
            total_mass += bf.mass;
            let inertia = inertia_from_entries(&bf.name, &bf.inertia_com)?;
            validate_inertia(&bf.name, &inertia)?;
            for geom in &bf.collision {
                geom.shape
                    .validate()
                    .map_err(|m| invalid(&bf.name, format!("collision {:?}: {m}", geom.name)))?;
            }

            let rpy = Vector3::new(
                bf.rpy_in_parent_deg[0].to_radians(),
                bf.rpy_in_parent_deg[1].to_radians(),
                bf.rpy_in_parent_deg[2].to_radians(),
            );
            bodies.push(Body {
                name: bf.name.clone(),
                parent,
                joint,
                origin_in_parent: Vector3::from(bf.origin_in_parent).map(|v| nalgebra::convert(v)),
                rotation_in_parent: rotation_zyx(&rpy.map(|v| nalgebra::convert(v))),
                mass: nalgebra::convert(bf.mass),
                inertia_com: inertia.map(|v| nalgebra::convert(v)),
                com_offset: Vector3::from(bf.com_offset).map(|v| nalgebra::convert(v)),
                collision_geoms: bf
                    .collision
                    .iter()
                    .map(|g| CollisionGeom {
                        name: g.name.clone(),
                        shape: convert_shape(&g.shape),
                    })
                    .collect(),
            });
        }

        if total_mass <= 0.0 {
            return Err(ModelError::Structure("total mass must be positive".into()));
        }

        let model = RobotModel {
            name: file.name.clone(),
            bodies,
            actuated,
            collision_pairs: file.collision_pairs.clone(),
            support_body: file.support_body.clone(),
            foot_corners: file
                .foot_corners
                .iter()
                .map(|c| Vector3::from(*c).map(|v| nalgebra::convert(v)))
                .collect(),
        };

        if model.body_index(&model.support_body).is_none() {
            return Err(ModelError::Structure(format!(
                "support_body {:?} is not a declared body",
                model.support_body
            )));
        }
        if model.foot_corners.is_empty() {
            return Err(ModelError::Structure(
                "foot_corners must list at least one contact point".into(),
            ));
        }
        for (a, b) in &model.collision_pairs.self_pairs {
            let (ba, _) = model
                .geom_owner(a)
                .ok_or_else(|| ModelError::Structure(format!("self pair references unknown geom {a:?}")))?;
            let (bb, _) = model
                .geom_owner(b)
                .ok_or_else(|| ModelError::Structure(format!("self pair references unknown geom {b:?}")))?;
            if ba == bb || model.body(ba).parent == bb || model.body(bb).parent == ba {
                return Err(ModelError::Structure(format!(
                    "self pair ({a:?}, {b:?}) must join non-consecutive links"
                )));
            }
        }
        for (a, _env) in &model.collision_pairs.environment_pairs {
            if model.geom_owner(a).is_none() {
                return Err(ModelError::Structure(format!(
                    "environment pair references unknown robot geom {a:?}"
                )));
            }
        }
        Ok(model)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_file(&RobotFile::from_json(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn convert_shape<T: Real>(shape: &crate::constraintmap::geometry::Shape<f64>) -> crate::constraintmap::geometry::Shape<T> {
    use crate::constraintmap::geometry::Shape;
    match shape {
        Shape::Capsule { a, b, radius } => Shape::Capsule {
            a: a.map(|v| nalgebra::convert(v)),
            b: b.map(|v| nalgebra::convert(v)),
            radius: nalgebra::convert(*radius),
        },
        Shape::Plane { normal, offset } => Shape::Plane {
            normal: normal.map(|v| nalgebra::convert(v)),
            offset: nalgebra::convert(*offset),
        },
        Shape::Aabb { min, max } => Shape::Aabb {
            min: min.map(|v| nalgebra::convert(v)),
            max: max.map(|v| nalgebra::convert(v)),
        },
    }
}
