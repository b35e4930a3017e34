//! Launch and landing programs over the aggregate centroid: direct
//! transcription with forward-Euler dynamics, friction-pyramid and
//! center-of-pressure constraints, solved by sequential convexification
//! of the bilinear momentum-rate row.
//!
//! Per-knot decision variables: COM position / velocity / acceleration,
//! angular momentum and its rate, the resultant contact force, and the
//! center of pressure (2 coordinates on the support surface).

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::trajopt::qp::{QpProblem, QpSolve, SolverReport};
use crate::Real;

pub const VARS_PER_KNOT: usize = 20;

#[derive(Debug, Error)]
pub enum TrajoptError {
    #[error("program is too short: need at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("solver failed: {status:?} after {iterations} iterations (primal {primal:.3e})")]
    Solver {
        status: crate::trajopt::qp::SolveStatus,
        iterations: usize,
        primal: f64,
    },
    #[error("convexification stalled: momentum-rate residual {residual:.3e} after {rounds} rounds")]
    ConvexificationStalled { residual: f64, rounds: usize },
    #[error(
        "inertia band cannot produce the required rotation: need {needed:.3} about axis {axis}, \
         achievable range [{lo:.3}, {hi:.3}] rad"
    )]
    InfeasibleInertiaBand {
        axis: usize,
        needed: f64,
        lo: f64,
        hi: f64,
    },
    #[error("flight program stalled: feasibility {feasibility:.3e} after {iterations} SQP iterations")]
    FlightStalled { feasibility: f64, iterations: usize },
}

/// Convex support region on a horizontal surface: halfplane rows
/// `a . (px, py) <= b`, the surface height, and an interior point.
#[derive(Clone, Debug)]
pub struct SupportPolygon<T: Real> {
    pub rows: Vec<(Vector2<T>, T)>,
    pub z: T,
    pub center: Vector2<T>,
}

impl<T: Real> SupportPolygon<T> {
    /// Axis-aligned rectangle centered at `center` with the given half
    /// extents, lying at height `z`.
    pub fn rectangle(center: Vector2<T>, half_x: T, half_y: T, z: T) -> Self {
        SupportPolygon {
            rows: vec![
                (Vector2::new(T::one(), T::zero()), center.x + half_x),
                (Vector2::new(-T::one(), T::zero()), -(center.x - half_x)),
                (Vector2::new(T::zero(), T::one()), center.y + half_y),
                (Vector2::new(T::zero(), -T::one()), -(center.y - half_y)),
            ],
            z,
            center,
        }
    }

    pub fn max_violation(&self, p: &Vector2<T>) -> T {
        self.rows
            .iter()
            .fold(T::zero(), |m, (a, b)| m.max(a.dot(p) - *b))
    }
}

/// Boundary state of the centroid.
#[derive(Clone, Debug)]
pub struct CentroidBoundary<T: Real> {
    pub x: Vector3<T>,
    pub xd: Vector3<T>,
    pub h: Vector3<T>,
}

/// Launch-shaped program (the landing program shares the structure with
/// swapped boundaries).
#[derive(Clone, Debug)]
pub struct LaunchProgram<T: Real> {
    pub n_knots: usize,
    pub dt: T,
    pub mass: T,
    /// Gravity magnitude; the field acts along -z.
    pub gravity: T,
    /// Friction-pyramid coefficient.
    pub friction: T,
    pub support: SupportPolygon<T>,
    pub start: CentroidBoundary<T>,
    pub end: CentroidBoundary<T>,
    pub com_min: Vector3<T>,
    pub com_max: Vector3<T>,
    /// Tiny quadratic pull of the CoP toward the polygon center; keeps the
    /// KKT system well conditioned along force-free directions. Default
    /// 1e-4 (negligible against the force cost, which is of order 1e5).
    pub cop_regularization: T,
}

/// Solved knot arrays. `p` carries the support height as its z entry.
#[derive(Clone, Debug)]
pub struct CentroidTrajectory<T: Real> {
    pub dt: T,
    pub x: Vec<Vector3<T>>,
    pub xd: Vec<Vector3<T>>,
    pub xdd: Vec<Vector3<T>>,
    pub h: Vec<Vector3<T>>,
    pub hd: Vec<Vector3<T>>,
    pub f: Vec<Vector3<T>>,
    pub p: Vec<Vector3<T>>,
}

impl<T: Real> CentroidTrajectory<T> {
    pub fn duration(&self) -> T {
        self.dt * nalgebra::convert((self.x.len() - 1) as f64)
    }
}

/// Builds a launch program from a takeoff target.
pub fn transcribe_launch<T: Real>(
    start: CentroidBoundary<T>,
    takeoff: CentroidBoundary<T>,
    mass: T,
    gravity: T,
    friction: T,
    support: SupportPolygon<T>,
    com_box: (Vector3<T>, Vector3<T>),
    n_knots: usize,
    dt: T,
) -> Result<LaunchProgram<T>, TrajoptError> {
    if n_knots < 2 {
        return Err(TrajoptError::TooFewKnots(n_knots));
    }
    Ok(LaunchProgram {
        n_knots,
        dt,
        mass,
        gravity,
        friction,
        support,
        start,
        end: takeoff,
        com_min: com_box.0,
        com_max: com_box.1,
        cop_regularization: nalgebra::convert(1e-4_f64),
    })
}

/// Landing program: initial state is the touchdown state, final state is
/// rest (zero velocity and momentum) with the COM above the support.
pub fn transcribe_landing<T: Real>(
    touchdown: CentroidBoundary<T>,
    rest_com: Vector3<T>,
    mass: T,
    gravity: T,
    friction: T,
    support: SupportPolygon<T>,
    com_box: (Vector3<T>, Vector3<T>),
    n_knots: usize,
    dt: T,
) -> Result<LaunchProgram<T>, TrajoptError> {
    if n_knots < 2 {
        return Err(TrajoptError::TooFewKnots(n_knots));
    }
    Ok(LaunchProgram {
        n_knots,
        dt,
        mass,
        gravity,
        friction,
        support,
        start: touchdown,
        end: CentroidBoundary {
            x: rest_com,
            xd: Vector3::zeros(),
            h: Vector3::zeros(),
        },
        com_min: com_box.0,
        com_max: com_box.1,
        cop_regularization: nalgebra::convert(1e-4_f64),
    })
}

#[derive(Clone, Debug)]
pub struct ConvexifyOptions {
    pub max_rounds: usize,
    /// Target on the true bilinear momentum-rate residual.
    pub residual_tol: f64,
}

impl Default for ConvexifyOptions {
    fn default() -> Self {
        ConvexifyOptions {
            max_rounds: 12,
            residual_tol: 1e-9,
        }
    }
}

struct Reference<T: Real> {
    x: Vec<Vector3<T>>,
    f: Vec<Vector3<T>>,
    p: Vec<Vector2<T>>,
}

fn skew_rows<T: Real>(v: &Vector3<T>) -> [[T; 3]; 3] {
    [
        [T::zero(), -v.z, v.y],
        [v.z, T::zero(), -v.x],
        [-v.y, v.x, T::zero()],
    ]
}

/// Assembles the QP for one convexification round. The momentum-rate row
/// `hd = (p - x) x f` is linearized about the reference:
/// `hd - [p_ref - x_ref]x f + [f_ref]x p - [f_ref]x x = [f_ref]x (p_ref - x_ref)`.
fn assemble<T: Real>(prog: &LaunchProgram<T>, reference: &Reference<T>) -> QpProblem<T> {
    let n_k = prog.n_knots;
    let n = n_k * VARS_PER_KNOT;
    let n_eq = 9 * (n_k - 1) + 6 * n_k + 18;
    let n_ineq = (5 + prog.support.rows.len() + 6) * n_k;
    let mut qp = QpProblem::new(n, n_eq, n_ineq);

    let base = |k: usize| k * VARS_PER_KNOT;
    let (ix, ixd, ixdd, ih, ihd, iff, ip) = (0, 3, 6, 9, 12, 15, 18);

    // cost: sum |f|^2 + tiny CoP centering
    for k in 0..n_k {
        for c in 0..3 {
            qp.q.push(base(k) + iff + c, base(k) + iff + c, nalgebra::convert(2.0_f64));
        }
        let two_reg = prog.cop_regularization + prog.cop_regularization;
        for c in 0..2 {
            qp.q.push(base(k) + ip + c, base(k) + ip + c, two_reg);
            qp.c[base(k) + ip + c] = -two_reg * prog.support.center[c];
        }
    }

    let mut eq = 0usize;

    // forward-Euler chains
    for k in 0..n_k - 1 {
        for c in 0..3 {
            // x[k+1] - x[k] - dt xd[k] = 0
            qp.a.push(eq + c, base(k + 1) + ix + c, T::one());
            qp.a.push(eq + c, base(k) + ix + c, -T::one());
            qp.a.push(eq + c, base(k) + ixd + c, -prog.dt);
            // xd[k+1] - xd[k] - dt xdd[k] = 0
            qp.a.push(eq + 3 + c, base(k + 1) + ixd + c, T::one());
            qp.a.push(eq + 3 + c, base(k) + ixd + c, -T::one());
            qp.a.push(eq + 3 + c, base(k) + ixdd + c, -prog.dt);
            // h[k+1] - h[k] - dt hd[k] = 0
            qp.a.push(eq + 6 + c, base(k + 1) + ih + c, T::one());
            qp.a.push(eq + 6 + c, base(k) + ih + c, -T::one());
            qp.a.push(eq + 6 + c, base(k) + ihd + c, -prog.dt);
        }
        eq += 9;
    }

    // per-knot dynamics
    for k in 0..n_k {
        // m xdd - f = m g_vec
        for c in 0..3 {
            qp.a.push(eq + c, base(k) + ixdd + c, prog.mass);
            qp.a.push(eq + c, base(k) + iff + c, -T::one());
        }
        qp.b[eq + 2] = -prog.mass * prog.gravity;
        eq += 3;

        // linearized momentum rate
        let arm = Vector3::new(
            reference.p[k].x - reference.x[k].x,
            reference.p[k].y - reference.x[k].y,
            prog.support.z - reference.x[k].z,
        );
        let arm_hat = skew_rows(&arm);
        let f_hat = skew_rows(&reference.f[k]);
        let rhs = reference.f[k].cross(&arm); // [f_ref]x (p_ref - x_ref)
        for r in 0..3 {
            qp.a.push(eq + r, base(k) + ihd + r, T::one());
            for c in 0..3 {
                // - [arm]x f
                qp.a.push(eq + r, base(k) + iff + c, -arm_hat[r][c]);
                // - [f_ref]x x ... sign: + [f_ref]x p - [f_ref]x x
                qp.a.push(eq + r, base(k) + ix + c, -f_hat[r][c]);
            }
            for c in 0..2 {
                qp.a.push(eq + r, base(k) + ip + c, f_hat[r][c]);
            }
            // constants: [f_ref]x (p_ref - x_ref) with p_ref z = support z,
            // minus the fixed p_z column contribution.
            let arm_ref_cross = rhs[r];
            let fixed_pz = f_hat[r][2] * prog.support.z;
            qp.b[eq + r] = arm_ref_cross - fixed_pz;
        }
        eq += 3;
    }

    // boundaries
    for c in 0..3 {
        qp.a.push(eq + c, ix + c, T::one());
        qp.b[eq + c] = prog.start.x[c];
        qp.a.push(eq + 3 + c, ixd + c, T::one());
        qp.b[eq + 3 + c] = prog.start.xd[c];
        qp.a.push(eq + 6 + c, ih + c, T::one());
        qp.b[eq + 6 + c] = prog.start.h[c];
        let last = base(n_k - 1);
        qp.a.push(eq + 9 + c, last + ix + c, T::one());
        qp.b[eq + 9 + c] = prog.end.x[c];
        qp.a.push(eq + 12 + c, last + ixd + c, T::one());
        qp.b[eq + 12 + c] = prog.end.xd[c];
        qp.a.push(eq + 15 + c, last + ih + c, T::one());
        qp.b[eq + 15 + c] = prog.end.h[c];
    }
    eq += 18;
    debug_assert_eq!(eq, qp.a.nrows);

    // inequalities
    let mut ineq = 0usize;
    for k in 0..n_k {
        // friction pyramid: |f_x| <= mu f_z, |f_y| <= mu f_z, f_z >= 0
        for (cx, sign) in [(0usize, T::one()), (0, -T::one()), (1, T::one()), (1, -T::one())] {
            qp.g.push(ineq, base(k) + iff + cx, sign);
            qp.g.push(ineq, base(k) + iff + 2, -prog.friction);
            qp.h[ineq] = T::zero();
            ineq += 1;
        }
        qp.g.push(ineq, base(k) + iff + 2, -T::one());
        qp.h[ineq] = T::zero();
        ineq += 1;

        // CoP inside the support polygon
        for (a, b) in &prog.support.rows {
            qp.g.push(ineq, base(k) + ip, a.x);
            qp.g.push(ineq, base(k) + ip + 1, a.y);
            qp.h[ineq] = *b;
            ineq += 1;
        }

        // COM path box
        for c in 0..3 {
            qp.g.push(ineq, base(k) + ix + c, T::one());
            qp.h[ineq] = prog.com_max[c];
            ineq += 1;
            qp.g.push(ineq, base(k) + ix + c, -T::one());
            qp.h[ineq] = -prog.com_min[c];
            ineq += 1;
        }
    }
    debug_assert_eq!(ineq, qp.g.nrows);
    qp
}

fn extract<T: Real>(prog: &LaunchProgram<T>, x: &[T]) -> CentroidTrajectory<T> {
    let grab3 = |k: usize, off: usize| {
        let b = k * VARS_PER_KNOT + off;
        Vector3::new(x[b], x[b + 1], x[b + 2])
    };
    let n_k = prog.n_knots;
    CentroidTrajectory {
        dt: prog.dt,
        x: (0..n_k).map(|k| grab3(k, 0)).collect(),
        xd: (0..n_k).map(|k| grab3(k, 3)).collect(),
        xdd: (0..n_k).map(|k| grab3(k, 6)).collect(),
        h: (0..n_k).map(|k| grab3(k, 9)).collect(),
        hd: (0..n_k).map(|k| grab3(k, 12)).collect(),
        f: (0..n_k).map(|k| grab3(k, 15)).collect(),
        p: (0..n_k)
            .map(|k| {
                let b = k * VARS_PER_KNOT + 18;
                Vector3::new(x[b], x[b + 1], prog.support.z)
            })
            .collect(),
    }
}

fn bilinear_residual<T: Real>(traj: &CentroidTrajectory<T>) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..traj.x.len() {
        let arm = traj.p[k] - traj.x[k];
        let r = traj.hd[k] - arm.cross(&traj.f[k]);
        worst = worst.max(r.amax().as_f64());
    }
    worst
}

/// Solves the program by iterating QPs that linearize the momentum-rate
/// cross product about the previous solution, warm-started from the
/// static reference (weight support at the polygon center).
pub fn solve_program<T: Real>(
    prog: &LaunchProgram<T>,
    solver: &dyn QpSolve<T>,
    opts: &ConvexifyOptions,
) -> Result<(CentroidTrajectory<T>, SolverReport), TrajoptError> {
    let n_k = prog.n_knots;
    let weight = prog.mass * prog.gravity;
    let mut reference = Reference {
        x: (0..n_k)
            .map(|k| {
                let t: T = nalgebra::convert(k as f64 / (n_k - 1) as f64);
                prog.start.x + (prog.end.x - prog.start.x) * t
            })
            .collect(),
        f: vec![Vector3::new(T::zero(), T::zero(), weight); n_k],
        p: vec![prog.support.center; n_k],
    };

    let mut last_residual = f64::INFINITY;
    for round in 0..opts.max_rounds {
        let qp = assemble(prog, &reference);
        let out = solver.solve(&qp);
        if !out.report.is_optimal() {
            return Err(TrajoptError::Solver {
                status: out.report.status,
                iterations: out.report.iterations,
                primal: out.report.primal_residual,
            });
        }
        let traj = extract(prog, &out.x);
        let residual = bilinear_residual(&traj);
        if residual <= opts.residual_tol {
            return Ok((traj, out.report));
        }
        reference = Reference {
            x: traj.x.clone(),
            f: traj.f.clone(),
            p: traj.p.iter().map(|p| Vector2::new(p.x, p.y)).collect(),
        };
        last_residual = residual;
        let _ = round;
    }
    Err(TrajoptError::ConvexificationStalled {
        residual: last_residual,
        rounds: opts.max_rounds,
    })
}

/// Independent constraint audit: walks the solved knot arrays and checks
/// every constraint family of the program numerically, without reference
/// to the QP matrices.
#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    /// Worst residual over linear-dynamics, integration, and the bilinear
    /// momentum-rate rows.
    pub dynamics: f64,
    pub friction: f64,
    pub cop: f64,
    pub path: f64,
    pub boundary: f64,
}

impl AuditReport {
    pub fn passes(&self, dynamics_tol: f64, constraint_tol: f64) -> bool {
        self.dynamics <= dynamics_tol
            && self.boundary <= dynamics_tol
            && self.friction <= constraint_tol
            && self.cop <= constraint_tol
            && self.path <= constraint_tol
    }

    pub fn worst(&self) -> f64 {
        self.dynamics
            .max(self.friction)
            .max(self.cop)
            .max(self.path)
            .max(self.boundary)
    }
}

pub fn audit_program<T: Real>(prog: &LaunchProgram<T>, traj: &CentroidTrajectory<T>) -> AuditReport {
    let mut report = AuditReport::default();
    let n_k = traj.x.len();
    let dt = traj.dt.as_f64();
    let m = prog.mass.as_f64();
    let g = prog.gravity.as_f64();

    for k in 0..n_k {
        // m xdd = f + m g_vec
        let lin = traj.xdd[k].map(|v| v.as_f64() * m) - traj.f[k].map(|v| v.as_f64())
            + Vector3::new(0.0, 0.0, m * g);
        report.dynamics = report.dynamics.max(lin.amax());
        // hd = (p - x) x f
        let arm = (traj.p[k] - traj.x[k]).map(|v| v.as_f64());
        let hd = traj.hd[k].map(|v| v.as_f64()) - arm.cross(&traj.f[k].map(|v| v.as_f64()));
        report.dynamics = report.dynamics.max(hd.amax());

        if k + 1 < n_k {
            let gap_x = (traj.x[k + 1] - traj.x[k] - traj.xd[k] * traj.dt).map(|v| v.as_f64());
            let gap_v = (traj.xd[k + 1] - traj.xd[k] - traj.xdd[k] * traj.dt).map(|v| v.as_f64());
            let gap_h = (traj.h[k + 1] - traj.h[k] - traj.hd[k] * traj.dt).map(|v| v.as_f64());
            report.dynamics = report
                .dynamics
                .max(gap_x.amax())
                .max(gap_v.amax())
                .max(gap_h.amax());
        }

        let f = traj.f[k].map(|v| v.as_f64());
        let mu = prog.friction.as_f64();
        report.friction = report
            .friction
            .max(f.x.abs() - mu * f.z)
            .max(f.y.abs() - mu * f.z)
            .max(-f.z);
        report.cop = report
            .cop
            .max(prog.support.max_violation(&Vector2::new(traj.p[k].x, traj.p[k].y)).as_f64());
        for c in 0..3 {
            report.path = report
                .path
                .max(traj.x[k][c].as_f64() - prog.com_max[c].as_f64())
                .max(prog.com_min[c].as_f64() - traj.x[k][c].as_f64());
        }
    }
    let _ = dt;

    let b_err = |a: &Vector3<T>, b: &Vector3<T>| (a - b).amax().as_f64();
    report.boundary = b_err(&traj.x[0], &prog.start.x)
        .max(b_err(&traj.xd[0], &prog.start.xd))
        .max(b_err(&traj.h[0], &prog.start.h))
        .max(b_err(&traj.x[n_k - 1], &prog.end.x))
        .max(b_err(&traj.xd[n_k - 1], &prog.end.xd))
        .max(b_err(&traj.h[n_k - 1], &prog.end.h));
    report
}
