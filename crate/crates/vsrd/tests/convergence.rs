//! Mesh refinement against manufactured solutions.

use vsrd::discretization::assemble;
use vsrd::geometry::{build_mesh, GeometrySpec};
use vsrd::model::{GenericParams, ModelSpec};
use vsrd::sparse::{CsrMatrix, SparseLu};

fn exact(r: f64) -> f64 {
    (std::f64::consts::PI * r * r).cos()
}

// −Δ cos(πr²); the radial derivative vanishes at r = 1
fn forcing(r: f64) -> f64 {
    use std::f64::consts::PI;
    let s = PI * r * r;
    4.0 * PI * s.sin() + 4.0 * PI * PI * r * r * s.cos()
}

fn one_species() -> ModelSpec {
    ModelSpec::Generic(GenericParams { rates: vec![vec![0.0]], diffusion: vec![1.0] })
}

/// Weighted L² error of the zero-mean Neumann solve `−𝓛u = M f`.
fn steady_error(n: usize) -> f64 {
    let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.25, n, 4 * n)).unwrap();
    let op = assemble(&one_species(), &mesh).unwrap();
    let nc = op.dim();
    // bordered system [−𝓛 m; mᵀ 0]
    let mut t: Vec<(usize, usize, f64)> = op.matrix.iter().map(|(i, j, v)| (i, j, -v)).collect();
    for (k, &m) in op.mass.iter().enumerate() {
        t.push((k, nc, m));
        t.push((nc, k, m));
    }
    let mut rhs: Vec<f64> = mesh.cells.iter().map(|c| c.area * forcing(c.r_mid)).collect();
    rhs.push(0.0);
    let sol = SparseLu::factor(&CsrMatrix::from_triplets(nc + 1, nc + 1, &t)).unwrap().solve(&rhs).unwrap();
    let total: f64 = op.mass.iter().sum();
    let mean_exact = mesh.cells.iter().map(|c| c.area * exact(c.r_mid)).sum::<f64>() / total;
    mesh.cells.iter().zip(&sol).map(|(c, u)| c.area * (u - (exact(c.r_mid) - mean_exact)).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn steady_neumann_problem_converges_at_order_at_least_one_and_a_half() {
    let errors: Vec<f64> = [8, 16, 32].iter().map(|&n| steady_error(n)).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.5, "errors {errors:?}, order {order}");
    }
}

/// `u = e^{−t} cos(πr²)` with source `e^{−t}(−Δ cos(πr²) − cos(πr²))`,
/// integrated by Crank–Nicolson to `t = 0.5` with `dt ∝ h`.
fn transient_error(n: usize) -> f64 {
    let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.25, n, 4 * n)).unwrap();
    let op = assemble(&one_species(), &mesh).unwrap();
    let dt = 0.05 / n as f64;
    let steps = (0.5 / dt).round() as usize;
    let lhs = SparseLu::factor(&op.matrix.scaled_plus_diag(-0.5 * dt, 1.0, &op.mass)).unwrap();
    let explicit = op.matrix.scaled_plus_diag(0.5 * dt, 1.0, &op.mass);
    let g: Vec<f64> = mesh.cells.iter().map(|c| c.area * (forcing(c.r_mid) - exact(c.r_mid))).collect();
    let mut u: Vec<f64> = mesh.cells.iter().map(|c| exact(c.r_mid)).collect();
    for k in 0..steps {
        let decay = (-(k as f64 + 0.5) * dt).exp();
        let mut rhs = explicit.mul_vec(&u);
        rhs.iter_mut().zip(&g).for_each(|(r, gi)| *r += dt * decay * gi);
        u = lhs.solve(&rhs).unwrap();
    }
    let t = steps as f64 * dt;
    mesh.cells.iter().zip(&u).map(|(c, x)| c.area * (x - (-t).exp() * exact(c.r_mid)).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn transient_manufactured_solution_converges() {
    let errors: Vec<f64> = [8, 16, 32].iter().map(|&n| transient_error(n)).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.5, "errors {errors:?}, order {order}");
    }
}
