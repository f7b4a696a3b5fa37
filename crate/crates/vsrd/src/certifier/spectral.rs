//! Dense reference quantities for small meshes.

use faer::Mat;

use crate::dense;
use crate::discretization::CoupledOperator;
use crate::error::{Error, Result};

const DENSE_MAX: usize = 3000;

fn check_size(n: usize) -> Result<()> {
    if n > DENSE_MAX {
        return Err(Error::EigensolveFailure(format!("{n} unknowns exceed the dense limit {DENSE_MAX}")));
    }
    Ok(())
}

/// Smallest `−Re μ` over the nonzero eigenvalues `μ` of `M⁻¹𝓛`.
pub fn generator_spectral_gap(op: &CoupledOperator) -> Result<f64> {
    let n = op.dim();
    check_size(n)?;
    let l = op.matrix.to_dense();
    let a = Mat::from_fn(n, n, |i, j| l[(i, j)] / op.mass[i]);
    let ev = dense::general_eigenvalues(&a)?;
    let scale = ev.iter().map(|(re, im)| re.hypot(*im)).fold(0.0, f64::max);
    let mut zero = 0;
    let mut gap = f64::INFINITY;
    for (re, im) in ev {
        if re.hypot(im) <= 1e-10 * scale {
            zero += 1;
        } else {
            gap = gap.min(-re);
        }
    }
    if zero != 1 {
        return Err(Error::KernelDimensionError);
    }
    Ok(gap)
}

/// Largest `λ` with `D(u − w | w) ≥ λ E(u − w | w)` for all `u` of the same
/// mass as `w`: the smallest eigenvalue of the symmetrized dissipation on the
/// mass-preserving subspace.
pub fn optimal_eed_rate(op: &CoupledOperator, w: &[f64]) -> Result<f64> {
    let n = op.dim();
    check_size(n)?;
    op.layout.check(w)?;
    if w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonpositiveEquilibrium);
    }
    let l = op.matrix.to_dense();
    // f = B^{1/2} e with B = diag(M/w); D = eᵀ S e, S = −(W⁻¹𝓛 + 𝓛ᵀW⁻¹)
    let b: Vec<f64> = op.mass.iter().zip(w).map(|(m, x)| (m / x).sqrt()).collect();
    let s = Mat::from_fn(n, n, |i, j| -(l[(i, j)] / w[i] + l[(j, i)] / w[j]) / (b[i] * b[j]));
    let constraint: Vec<f64> = op.mass.iter().zip(&b).map(|(m, bi)| m / bi).collect();
    let q = dense::orthogonal_complement(&constraint);
    let r = q.transpose() * &s * &q;
    let sym = Mat::from_fn(n - 1, n - 1, |i, j| 0.5 * (r[(i, j)] + r[(j, i)]));
    Ok(dense::sym_eigenvalues(&sym)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::assemble;
    use crate::entropy::{entropy_dissipation_raw, relative_entropy_raw};
    use crate::equilibrium::equilibrium_kernel;
    use crate::geometry::{build_mesh, GeometrySpec};
    use crate::model::{GenericParams, LglParams, ModelSpec};

    #[test]
    fn symmetric_two_species_gap_matches_hand_computation() {
        // fast diffusion, so the reaction mode is the slowest: c' = [[-k, k], [k, -k]] c has gap 2k
        let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.25, 4, 4)).unwrap();
        let spec = ModelSpec::Generic(GenericParams { rates: vec![vec![0.0, 1.5], vec![1.5, 0.0]], diffusion: vec![100.0, 100.0] });
        let op = assemble(&spec, &mesh).unwrap();
        let g = generator_spectral_gap(&op).unwrap();
        assert!((g - 3.0).abs() < 1e-10, "{g}");
        let w = vec![1.0; op.dim()];
        // E decays at twice the slowest mode for a self-adjoint generator
        assert!((optimal_eed_rate(&op, &w).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn eed_rate_bounds_random_states() {
        let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.3, 4, 6)).unwrap();
        let op = assemble(&ModelSpec::Lgl(LglParams { alpha: 0.5, sigma: 2.0, ..Default::default() }), &mesh).unwrap();
        let eq = equilibrium_kernel(&op, 1.0).unwrap();
        let lam = optimal_eed_rate(&op, &eq.state).unwrap();
        assert!(lam > 0.0);
        let total: f64 = op.mass.iter().sum();
        for seed in 0..50u64 {
            let mut u: Vec<f64> = (0..op.dim()).map(|k| eq.state[k] * (1.0 + 0.9 * (((k as u64 * 7919 + seed * 104729) % 1000) as f64 / 500.0 - 1.0))).collect();
            let shift = (op.total_mass(&u) - 1.0) / total;
            u.iter_mut().for_each(|x| *x -= shift);
            let e = relative_entropy_raw(&op, &u, &eq.state).unwrap();
            let d = entropy_dissipation_raw(&op, &u, &eq.state).unwrap();
            assert!(d >= lam * e * (1.0 - 1e-9), "{d} < {lam} * {e}");
        }
    }
}
