//! Weighted Poincaré and trace constants as discrete generalized eigenvalues.
//!
//! For a weight `w > 0` the weighted Dirichlet form is
//! `K_w(U) = Σ_faces T_f ⟨w⟩_f (U_a − U_b)²` with the arithmetic face mean,
//! and the weighted mass is `M_w = diag(|cell| w)`. These are exactly the
//! forms produced by the entropy dissipation of a diffusing species, so the
//! constants bound the discrete dissipation without any consistency error.

use faer::Mat;

use crate::dense;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryLabel, CompartmentMesh};
use crate::sparse::{CsrMatrix, SparseLu};

/// Largest problem size solved with a dense eigensolver.
pub const DENSE_LIMIT: usize = 1200;

/// Weighted stiffness (as edge list) and weighted mass on one compartment.
#[derive(Debug, Clone)]
pub struct WeightedForm {
    pub edges: Vec<(usize, usize, f64)>,
    pub mass: Vec<f64>,
}

impl WeightedForm {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.edges.iter().map(|&(a, b, k)| k * (u[a] - u[b]).powi(2)).sum()
    }

    /// `Σ M_k (u_k − ū)²` with the `M`-weighted mean `ū`.
    pub fn oscillation(&self, u: &[f64]) -> f64 {
        let total: f64 = self.mass.iter().sum();
        let mean = self.mass.iter().zip(u).map(|(m, x)| m * x).sum::<f64>() / total;
        self.mass.iter().zip(u).map(|(m, x)| m * (x - mean).powi(2)).sum()
    }

    fn stiffness_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(4 * self.edges.len());
        for &(a, b, k) in &self.edges {
            t.extend([(a, a, k), (b, b, k), (a, b, -k), (b, a, -k)]);
        }
        t
    }

    fn dense_stiffness(&self) -> Mat<f64> {
        let n = self.dim();
        let mut k = Mat::zeros(n, n);
        for (i, j, v) in self.stiffness_triplets() {
            k[(i, j)] += v;
        }
        k
    }

    /// Factored `[K a; aᵀ 0]` with `a = M·1`. Solving with right side `[f; 0]`
    /// minimizes `½xᵀKx − fᵀx` over `aᵀx = 0`.
    fn bordered(&self) -> Result<SparseLu> {
        let n = self.dim();
        let mut t = self.stiffness_triplets();
        for (k, &m) in self.mass.iter().enumerate() {
            t.push((k, n, m));
            t.push((n, k, m));
        }
        SparseLu::factor(&CsrMatrix::from_triplets(n + 1, n + 1, &t))
    }
}

fn bordered_solve(lu: &SparseLu, f: &[f64]) -> Result<Vec<f64>> {
    let mut rhs = f.to_vec();
    rhs.push(0.0);
    let mut x = lu.solve(&rhs)?;
    x.pop();
    Ok(x)
}

fn check_weight(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::LayoutMismatch { expected: n, got: w.len() });
    }
    if w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::EigensolveFailure("weight must be strictly positive".into()));
    }
    Ok(())
}

/// Weighted form of a volume compartment.
pub fn volume_form(mesh: &CompartmentMesh, w: &[f64]) -> Result<WeightedForm> {
    check_weight(w, mesh.n_cells())?;
    let edges = mesh.faces.iter().map(|f| (f.a, f.b, f.transmissibility * 0.5 * (w[f.a] + w[f.b]))).collect();
    let mass = mesh.cells.iter().zip(w).map(|(c, x)| c.area * x).collect();
    Ok(WeightedForm { edges, mass })
}

/// Weighted form of a boundary curve, `w` given per segment of that curve.
pub fn surface_form(mesh: &CompartmentMesh, label: BoundaryLabel, closed: bool, w: &[f64]) -> Result<WeightedForm> {
    let segs = mesh.boundary(label)?;
    check_weight(w, segs.len())?;
    let edges = mesh.surface_faces(label, closed)?.iter().map(|f| (f.a, f.b, f.transmissibility * 0.5 * (w[f.a] + w[f.b]))).collect();
    let mass = segs.iter().zip(w).map(|((_, s), x)| s.length * x).collect();
    Ok(WeightedForm { edges, mass })
}

/// Second smallest eigenvalue of the pencil `(K, M)`.
pub fn poincare_constant(form: &WeightedForm) -> Result<f64> {
    let n = form.dim();
    if n < 2 {
        return Err(Error::EigensolveFailure("need at least two unknowns".into()));
    }
    if n <= DENSE_LIMIT {
        poincare_dense(form)
    } else {
        poincare_subspace(form)
    }
}

pub fn poincare_dense(form: &WeightedForm) -> Result<f64> {
    let n = form.dim();
    let k = form.dense_stiffness();
    let s: Vec<f64> = form.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let a = Mat::from_fn(n, n, |i, j| s[i] * k[(i, j)] * s[j]);
    let ev = dense::sym_eigenvalues(&a)?;
    if ev[0].abs() > 1e-8 * ev[n - 1].abs() {
        return Err(Error::EigensolveFailure(format!("pencil has no null vector (smallest eigenvalue {:e})", ev[0])));
    }
    Ok(ev[1])
}

fn m_orthonormalize(cols: &mut [Vec<f64>], mass: &[f64]) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(mass).map(|((x, y), m)| x * y * m).sum::<f64>();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let (head, tail) = cols.split_at_mut(j);
                let c = dot(&head[i], &tail[0]);
                for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                    *x -= c * y;
                }
            }
        }
        let nrm = dot(&cols[j], &cols[j]).sqrt();
        for x in cols[j].iter_mut() {
            *x /= nrm;
        }
    }
}

/// Block subspace iteration on the constrained inverse `G M` with
/// Rayleigh–Ritz projection; scales to large meshes.
pub fn poincare_subspace(form: &WeightedForm) -> Result<f64> {
    const BLOCK: usize = 8;
    let n = form.dim();
    let p = BLOCK.min(n - 1);
    let lu = form.bordered()?;
    let mut cols: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..n).map(|i| ((i * (2 * j + 3) + j * j) as f64 * 0.618_033_988_75).fract() - 0.5).collect())
        .collect();
    let mut last = f64::INFINITY;
    for _ in 0..2000 {
        for c in cols.iter_mut() {
            let f: Vec<f64> = c.iter().zip(&form.mass).map(|(x, m)| x * m).collect();
            *c = bordered_solve(&lu, &f)?;
        }
        m_orthonormalize(&mut cols, &form.mass);
        let kr = Mat::from_fn(p, p, |a, b| {
            form.edges.iter().map(|&(i, j, k)| k * (cols[a][i] - cols[a][j]) * (cols[b][i] - cols[b][j])).sum::<f64>()
        });
        let (vals, vecs) = dense::sym_eigen(&kr)?;
        let rotated: Vec<Vec<f64>> = (0..p).map(|a| (0..n).map(|i| (0..p).map(|b| cols[b][i] * vecs[(b, a)]).sum()).collect()).collect();
        cols = rotated;
        let est = vals[0];
        if (est - last).abs() <= 1e-13 * est.abs() {
            return Ok(est);
        }
        last = est;
    }
    Err(Error::EigensolveFailure("subspace iteration did not converge".into()))
}

/// Largest `T` with `K_w(U) ≥ T Σ_s b_s (U_{c(s)} − Ū)²`, `Ū` the volume mean
/// weighted by `M_w`. `trace` lists `(cell, b_s)` pairs.
pub fn trace_constant(form: &WeightedForm, trace: &[(usize, f64)]) -> Result<f64> {
    let nb = trace.len();
    if nb == 0 {
        return Err(Error::EigensolveFailure("empty boundary".into()));
    }
    let lu = form.bordered()?;
    let n = form.dim();
    let mut g = Vec::with_capacity(nb);
    for &(c, _) in trace {
        let mut f = vec![0.0; n];
        f[c] = 1.0;
        g.push(bordered_solve(&lu, &f)?);
    }
    let z = Mat::from_fn(nb, nb, |s, t| {
        let (gs, gt) = (&g[s], &g[t]);
        let v = 0.5 * (gs[trace[t].0] + gt[trace[s].0]);
        trace[s].1.sqrt() * v * trace[t].1.sqrt()
    });
    let ev = dense::sym_eigenvalues(&z)?;
    let mu = ev[nb - 1];
    if !(mu > 0.0) {
        return Err(Error::EigensolveFailure("trace operator has no positive eigenvalue".into()));
    }
    Ok(1.0 / mu)
}

/// Which part of a mesh a Poincaré constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshPart {
    Volume,
    Surface { label: BoundaryLabel, closed: bool },
}

/// Weighted Poincaré constant of a compartment.
pub fn weighted_poincare(mesh: &CompartmentMesh, part: MeshPart, weight: &[f64]) -> Result<f64> {
    let form = match part {
        MeshPart::Volume => volume_form(mesh, weight)?,
        MeshPart::Surface { label, closed } => surface_form(mesh, label, closed, weight)?,
    };
    poincare_constant(&form)
}

/// Weighted trace constant of a volume weight onto a boundary curve.
pub fn weighted_trace(mesh: &CompartmentMesh, volume_weight: &[f64], boundary: BoundaryLabel) -> Result<f64> {
    let form = volume_form(mesh, volume_weight)?;
    let trace: Vec<(usize, f64)> = mesh.boundary(boundary)?.iter().map(|(_, s)| (s.cell, s.length * volume_weight[s.cell])).collect();
    trace_constant(&form, &trace)
}
