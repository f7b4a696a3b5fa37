//! Positive equilibria of `𝓛 u = 0` with prescribed total mass.
//!
//! Two independent routes are provided. [`equilibrium_kernel`] solves the
//! bordered system where one (redundant) row of `𝓛` is replaced by the mass
//! constraint. The Picard routes sweep over species blocks, solving each
//! block's elliptic problem with the other blocks frozen, and renormalize the
//! mass after every sweep.

use serde::Serialize;

use crate::discretization::{nucleus_area, CoupledOperator};
use crate::error::{Error, Result};
use crate::geometry::BoundaryLabel;
use crate::model::{JakParams, ModelSpec};
use crate::sparse::{CsrMatrix, SparseLu};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesBounds {
    pub species: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumProfile {
    pub state: Vec<f64>,
    pub mass: f64,
    /// Smallest and largest entry over all degrees of freedom.
    pub bounds: (f64, f64),
    pub species_bounds: Vec<SpeciesBounds>,
    /// `‖𝓛 u‖∞ / (‖𝓛‖∞ ‖u‖∞)`.
    pub residual: f64,
    pub method: String,
    pub iterations: usize,
}

impl EquilibriumProfile {
    fn new(op: &CoupledOperator, state: Vec<f64>, method: &str, iterations: usize) -> Self {
        let lu = op.matrix.mul_vec(&state);
        let un = state.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let residual = lu.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (op.matrix.norm_inf() * un).max(f64::MIN_POSITIVE);
        let bounds = state.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let species_bounds = op
            .layout
            .blocks
            .iter()
            .map(|b| {
                let s = &state[b.range()];
                SpeciesBounds {
                    species: b.species.clone(),
                    min: s.iter().cloned().fold(f64::INFINITY, f64::min),
                    max: s.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        Self { mass: op.total_mass(&state), state, bounds, species_bounds, residual, method: method.into(), iterations }
    }

    pub fn species<'a>(&'a self, op: &CoupledOperator, name: &str) -> &'a [f64] {
        op.layout.slice(&self.state, name).expect("species in layout")
    }

    pub fn to_json(&self, op: &CoupledOperator) -> serde_json::Value {
        let species: serde_json::Map<String, serde_json::Value> =
            op.layout.blocks.iter().map(|b| (b.species.clone(), serde_json::json!(&self.state[b.range()]))).collect();
        serde_json::json!({
            "schema_version": crate::SCHEMA_VERSION,
            "model": op.spec.kind(),
            "method": self.method,
            "iterations": self.iterations,
            "mass": self.mass,
            "bounds": {"min": self.bounds.0, "max": self.bounds.1},
            "species_bounds": self.species_bounds,
            "residual": self.residual,
            "species": species,
        })
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {mass} must be positive")));
    }
    Ok(())
}

/// Equilibrium from the bordered kernel system.
pub fn equilibrium_kernel(op: &CoupledOperator, mass: f64) -> Result<EquilibriumProfile> {
    check_mass(mass)?;
    let n = op.dim();
    // Rows of 𝓛 sum to zero, so any single row is redundant and can carry a
    // normalization instead.
    let bordered_solve = |row: usize, weights: &[f64]| -> Result<Vec<f64>> {
        let mut t: Vec<(usize, usize, f64)> = op.matrix.iter().filter(|&(i, _, _)| i != row).collect();
        t.extend(weights.iter().enumerate().map(|(j, &w)| (row, j, w)));
        let mut rhs = vec![0.0; n];
        rhs[row] = 1.0;
        SparseLu::factor(&CsrMatrix::from_triplets(n, n, &t))?.solve(&rhs)
    };
    let u = bordered_solve(0, &op.mass).map_err(|_| Error::KernelDimensionError)?;
    // A second normalization with different weights: on a one-dimensional
    // kernel both solutions lie on the same ray.
    let skew: Vec<f64> = op.mass.iter().enumerate().map(|(k, m)| m * (1.5 + (k as f64).sin())).collect();
    let v = bordered_solve(n - 1, &skew).map_err(|_| Error::KernelDimensionError)?;
    let (mu, mv) = (op.total_mass(&u), op.total_mass(&v));
    if !(mu.is_finite() && mv.is_finite() && mu != 0.0 && mv != 0.0) {
        return Err(Error::KernelDimensionError);
    }
    let u: Vec<f64> = u.iter().map(|x| x * mass / mu).collect();
    let v: Vec<f64> = v.iter().map(|x| x * mass / mv).collect();
    if weighted_l2_distance(op, &u, &v) > 1e-8 * weighted_l2_norm(op, &u) {
        return Err(Error::KernelDimensionError);
    }
    let p = EquilibriumProfile::new(op, u, "kernel", 1);
    if !(p.residual <= 1e-8) {
        return Err(Error::KernelDimensionError);
    }
    if p.bounds.0 <= 1e-14 * p.bounds.1 {
        return Err(Error::SignChangeError);
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    /// Stop when successive sweeps differ by less than `tol` in relative
    /// weighted L².
    pub tol: f64,
    pub max_iter: usize,
    /// Starting state; uniform when absent.
    pub initial: Option<Vec<f64>>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 100_000, initial: None }
    }
}

/// `‖a − b‖_M` where `‖v‖_M² = Σ M_k v_k²`.
pub fn weighted_l2_distance(op: &CoupledOperator, a: &[f64], b: &[f64]) -> f64 {
    op.mass.iter().zip(a.iter().zip(b)).map(|(m, (x, y))| m * (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn weighted_l2_norm(op: &CoupledOperator, a: &[f64]) -> f64 {
    op.mass.iter().zip(a).map(|(m, x)| m * x * x).sum::<f64>().sqrt()
}

/// One species block: factored `−𝓛_gg` and the rows of `𝓛` coupling it to the
/// rest of the state.
struct BlockSolver {
    range: std::ops::Range<usize>,
    lu: SparseLu,
    coupling: CsrMatrix,
}

impl BlockSolver {
    fn new(op: &CoupledOperator, range: std::ops::Range<usize>) -> Result<Self> {
        let (s, len, n) = (range.start, range.len(), op.dim());
        let mut diag = Vec::new();
        let mut off = Vec::new();
        for i in range.clone() {
            for (j, v) in op.matrix.row(i) {
                if range.contains(&j) {
                    diag.push((i - s, j - s, -v));
                } else {
                    off.push((i - s, j, v));
                }
            }
        }
        let lu = SparseLu::factor(&CsrMatrix::from_triplets(len, len, &diag))?;
        Ok(Self { range, lu, coupling: CsrMatrix::from_triplets(len, n, &off) })
    }

    fn update(&self, u: &mut [f64]) -> Result<()> {
        let rhs = self.coupling.mul_vec(u);
        let x = self.lu.solve(&rhs)?;
        u[self.range.clone()].copy_from_slice(&x);
        Ok(())
    }
}

fn initial_state(op: &CoupledOperator, mass: f64, opts: &PicardOptions) -> Result<Vec<f64>> {
    let u = match &opts.initial {
        Some(u) => {
            op.layout.check(u)?;
            u.clone()
        }
        None => op.uniform_state(mass),
    };
    Ok(u)
}

fn renormalize(op: &CoupledOperator, u: &mut [f64], mass: f64) -> Result<()> {
    let m = op.total_mass(u);
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::ZeroMass);
    }
    for v in u.iter_mut() {
        *v *= mass / m;
    }
    Ok(())
}

fn iterate<F>(op: &CoupledOperator, mass: f64, opts: &PicardOptions, method: &str, mut sweep: F) -> Result<EquilibriumProfile>
where
    F: FnMut(&mut [f64]) -> Result<()>,
{
    check_mass(mass)?;
    let mut u = initial_state(op, mass, opts)?;
    renormalize(op, &mut u, mass)?;
    for it in 1..=opts.max_iter {
        let prev = u.clone();
        sweep(&mut u)?;
        renormalize(op, &mut u, mass)?;
        let change = weighted_l2_distance(op, &u, &prev) / weighted_l2_norm(op, &u);
        if change <= opts.tol {
            return Ok(EquilibriumProfile::new(op, u, method, it));
        }
    }
    Err(Error::NoConvergence(opts.max_iter))
}

/// Block Gauss–Seidel over `L`, `P`, `ℓ`, `p` with mass renormalization.
///
/// Each block equation `−𝓛_gg x_g = Σ_{h≠g} 𝓛_gh x_h` is the discrete form of
/// one linear elliptic problem with frozen sources. Using fresh values inside
/// a sweep matters: the block coupling graph is bipartite, so the Jacobi
/// variant has an eigenvalue at −1 and oscillates.
pub fn equilibrium_picard_lgl(op: &CoupledOperator, mass: f64, opts: &PicardOptions) -> Result<EquilibriumProfile> {
    if !matches!(op.spec, ModelSpec::Lgl(_)) {
        return Err(Error::GeometryMismatch("Lgl Picard iteration needs the Lgl model".into()));
    }
    let blocks: Vec<BlockSolver> = op.layout.blocks.iter().map(|b| BlockSolver::new(op, b.range())).collect::<Result<_>>()?;
    iterate(op, mass, opts, "picard", |u| {
        for b in &blocks {
            b.update(u)?;
        }
        Ok(())
    })
}

/// Nuclear species `(u₂, …, u₇)` at equilibrium from the envelope integrals
/// `I₀ = ∫u₀ dS`, `I₁ = ∫u₁ dS`.
pub fn equilibrium_jak_closed_form_ode(p: &JakParams, envelope_length: f64, i0: f64, i1: f64) -> [f64; 6] {
    let tail = p.r_imp2 * i1 / (p.r_delay * envelope_length);
    let u2 = p.r_imp2 * i1 / (p.r_exp * envelope_length) + p.r_imp * i0 / (p.r_exp * envelope_length);
    [u2, tail, tail, tail, tail, tail]
}

/// Total mass expressed through the cytoplasmic profile alone.
pub fn jak_reduced_mass(p: &JakParams, envelope_length: f64, nucleus_area: f64, cyt_integral: f64, i0: f64, i1: f64) -> f64 {
    let c0 = p.r_imp / (p.r_exp * envelope_length);
    let c1 = 5.0 * p.r_imp2 / (p.r_delay * envelope_length) + p.r_imp2 / (p.r_exp * envelope_length);
    cyt_integral + nucleus_area * (c0 * i0 + c1 * i1)
}

/// Envelope integrals `(∫u₀ dS, ∫u₁ dS)` by midpoint quadrature.
pub fn jak_envelope_integrals(op: &CoupledOperator, u: &[f64]) -> Result<(f64, f64)> {
    let nc = op.mesh.n_cells();
    let inner = op.mesh.boundary(BoundaryLabel::Inner)?;
    let i0 = inner.iter().map(|(_, s)| s.length * u[s.cell]).sum();
    let i1 = inner.iter().map(|(_, s)| s.length * u[nc + s.cell]).sum();
    Ok((i0, i1))
}

/// Picard iteration on `(u₀, u₁)` with the nuclear species eliminated through
/// their closed forms, so `u₀` sees a nonlocal source on the envelope.
pub fn equilibrium_picard_jak(op: &CoupledOperator, mass: f64, opts: &PicardOptions) -> Result<EquilibriumProfile> {
    let p = match &op.spec {
        ModelSpec::Jak(p) => *p,
        _ => return Err(Error::GeometryMismatch("JAK Picard iteration needs the JAK model".into())),
    };
    let nc = op.mesh.n_cells();
    let env = op.mesh.boundary_measure(BoundaryLabel::Inner)?;
    let nuc = nucleus_area(&op.mesh)?;
    let b0 = BlockSolver::new(op, 0..nc)?;
    let b1 = BlockSolver::new(op, nc..2 * nc)?;
    let fill_ode = |u: &mut [f64]| -> Result<()> {
        let (i0, i1) = jak_envelope_integrals(op, u)?;
        u[2 * nc..].copy_from_slice(&equilibrium_jak_closed_form_ode(&p, env, i0, i1));
        Ok(())
    };
    let mut opts = opts.clone();
    if let Some(u) = opts.initial.as_mut() {
        op.layout.check(u)?;
        fill_ode(u)?;
    }
    let mut profile = iterate(op, mass, &opts, "picard", |u| {
        fill_ode(u)?;
        b0.update(u)?;
        b1.update(u)?;
        fill_ode(u)?;
        let (i0, i1) = jak_envelope_integrals(op, u)?;
        let cyt: f64 = (0..2 * nc).map(|k| op.mass[k] * u[k]).sum();
        let reduced = jak_reduced_mass(&p, env, nuc, cyt, i0, i1);
        if !(reduced > 0.0) {
            return Err(Error::ZeroMass);
        }
        for v in u.iter_mut() {
            *v *= mass / reduced;
        }
        Ok(())
    })?;
    profile.method = "picard".into();
    Ok(profile)
}

/// Dispatches to the Picard route matching the model.
pub fn equilibrium_picard(op: &CoupledOperator, mass: f64, opts: &PicardOptions) -> Result<EquilibriumProfile> {
    match op.spec {
        ModelSpec::Lgl(_) => equilibrium_picard_lgl(op, mass, opts),
        ModelSpec::Jak(_) => equilibrium_picard_jak(op, mass, opts),
        ModelSpec::Generic(_) => Err(Error::GeometryMismatch("no Picard route for the generic model".into())),
    }
}
