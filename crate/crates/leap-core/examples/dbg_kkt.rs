// debug: compare banded KKT path vs dense solve on a small launch QP
use leap_core::trajopt::launch::*;
use leap_core::trajopt::qp::*;
use leap_core::trajopt::{InteriorPointSolver, IpmOptions};
use nalgebra::{DMatrix, DVector, Vector2, Vector3};

fn main() {
    let x0 = Vector3::new(0.0, 0.0, 0.75);
    let b = CentroidBoundary { x: x0, xd: Vector3::zeros(), h: Vector3::zeros() };
    let prog = transcribe_launch(
        b.clone(), b.clone(), 30.0, 9.81, 0.8,
        SupportPolygon::rectangle(Vector2::zeros(), 0.08, 0.05, 0.0),
        (Vector3::new(-2.0,-2.0,0.2), Vector3::new(2.0,2.0,2.5)),
        4, 0.01).unwrap();
    // assemble one round manually via solve (expose?) - instead directly build QP via a tiny IPM run with dense reference check.
    // Rebuild the same QP by calling the internal assemble through solve? Not public.
    // Instead: test the IPM on a手 small structured QP mimicking the pattern:
    // min |f|^2 st m*a - f = -mg ; v' = v + dt a ; x' = x + dt v ; boundaries; f_z >= 0
    let n_k = 4usize;
    let dt = 0.01;
    let m = 30.0; let g = 9.81;
    let per = 4; // x, v, a, f  (1-D version)
    let n = n_k * per;
    let mut qp = QpProblem::<f64>::new(n, 2*(n_k-1) + n_k + 4, n_k);
    let ix = |k: usize| k*per; let iv = |k: usize| k*per+1; let ia = |k: usize| k*per+2; let iff = |k: usize| k*per+3;
    for k in 0..n_k { qp.q.push(iff(k), iff(k), 2.0); }
    let mut eq = 0;
    for k in 0..n_k-1 {
        qp.a.push(eq, ix(k+1), 1.0); qp.a.push(eq, ix(k), -1.0); qp.a.push(eq, iv(k), -dt); eq+=1;
        qp.a.push(eq, iv(k+1), 1.0); qp.a.push(eq, iv(k), -1.0); qp.a.push(eq, ia(k), -dt); eq+=1;
    }
    for k in 0..n_k { qp.a.push(eq, ia(k), m); qp.a.push(eq, iff(k), -1.0); qp.b[eq] = -m*g; eq+=1; }
    qp.a.push(eq, ix(0), 1.0); qp.b[eq] = 0.75; eq+=1;
    qp.a.push(eq, iv(0), 1.0); qp.b[eq] = 0.0; eq+=1;
    qp.a.push(eq, ix(n_k-1), 1.0); qp.b[eq] = 0.75; eq+=1;
    qp.a.push(eq, iv(n_k-1), 1.0); qp.b[eq] = 0.0; eq+=1;
    for k in 0..n_k { qp.g.push(k, iff(k), -1.0); qp.h[k] = 0.0; }

    let solver = InteriorPointSolver::<f64>::default();
    let out = solver.solve(&qp);
    println!("status {:?} it {} pri {:.3e} dual {:.3e} comp {:.3e}", out.report.status, out.report.iterations, out.report.primal_residual, out.report.dual_residual, out.report.complementarity);
    println!("f = {:?}", (0..n_k).map(|k| out.x[iff(k)]).collect::<Vec<_>>());
    println!("expected f = {}", m*g);
}
