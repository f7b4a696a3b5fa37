//! Quadratic relative entropy and its dissipation.
//!
//! With `w` the equilibrium and `x = (u − w)/w`,
//!
//! ```text
//! E(u − w | w) = Σ_k M_k (u_k − w_k)² / w_k
//! D(u − w | w) = Σ_transfers rate · w_from · (x_from − x_to)²
//! ```
//!
//! Because `𝓛 w = 0`, `D = −2 xᵀ 𝓛 (u − w)` and `dE/dt = −D` exactly for the
//! semi-discrete system. A diffusive face contributes both directions, which
//! yields the usual `2 d ⟨w⟩_face |Δx|²` with the arithmetic face mean.

use serde::Serialize;

use crate::discretization::{CoupledOperator, Term};
use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};

fn check(op: &CoupledOperator, u: &[f64], w: &[f64]) -> Result<()> {
    op.layout.check(u)?;
    op.layout.check(w)?;
    if w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonpositiveEquilibrium);
    }
    Ok(())
}

/// `E(u − w | w)`.
pub fn relative_entropy(op: &CoupledOperator, u: &[f64], eq: &EquilibriumProfile) -> Result<f64> {
    relative_entropy_raw(op, u, &eq.state)
}

pub fn relative_entropy_raw(op: &CoupledOperator, u: &[f64], w: &[f64]) -> Result<f64> {
    check(op, u, w)?;
    Ok(op.mass.iter().zip(u.iter().zip(w)).map(|(m, (a, b))| m * (a - b) * (a - b) / b).sum())
}

/// `E(u | w) = Σ M_k u_k² / w_k`, which equals the total mass at `u = w`.
pub fn relative_entropy_unshifted(op: &CoupledOperator, u: &[f64], eq: &EquilibriumProfile) -> Result<f64> {
    check(op, u, &eq.state)?;
    Ok(op.mass.iter().zip(u.iter().zip(&eq.state)).map(|(m, (a, b))| m * a * a / b).sum())
}

/// Dissipation split by kind of transfer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DissipationTerms {
    pub diffusion: f64,
    pub reaction: f64,
    pub exchange: f64,
}

impl DissipationTerms {
    pub fn total(&self) -> f64 {
        self.diffusion + self.reaction + self.exchange
    }
}

pub fn dissipation_terms(op: &CoupledOperator, u: &[f64], w: &[f64]) -> Result<DissipationTerms> {
    check(op, u, w)?;
    let mut d = DissipationTerms::default();
    for t in &op.transfers {
        let dx = u[t.from] / w[t.from] - u[t.to] / w[t.to];
        let v = t.rate * w[t.from] * dx * dx;
        match t.term {
            Term::Diffusion => d.diffusion += v,
            Term::Reaction => d.reaction += v,
            Term::Exchange => d.exchange += v,
        }
    }
    Ok(d)
}

/// `D(u − w | w)` summed over transfers.
pub fn entropy_dissipation(op: &CoupledOperator, u: &[f64], eq: &EquilibriumProfile) -> Result<f64> {
    Ok(dissipation_terms(op, u, &eq.state)?.total())
}

pub fn entropy_dissipation_raw(op: &CoupledOperator, u: &[f64], w: &[f64]) -> Result<f64> {
    Ok(dissipation_terms(op, u, w)?.total())
}

/// `−2 xᵀ 𝓛 (u − w)` computed from the assembled matrix.
pub fn dissipation_quadratic_form(op: &CoupledOperator, u: &[f64], w: &[f64]) -> Result<f64> {
    check(op, u, w)?;
    let e: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - b).collect();
    let le = op.matrix.mul_vec(&e);
    Ok(-2.0 * e.iter().zip(w).zip(&le).map(|((ei, wi), li)| ei / wi * li).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    pub t: f64,
    pub entropy: f64,
    pub dissipation: f64,
    pub mass: f64,
}

pub fn report(op: &CoupledOperator, t: f64, u: &[f64], eq: &EquilibriumProfile) -> Result<EntropyReport> {
    Ok(EntropyReport { t, entropy: relative_entropy(op, u, eq)?, dissipation: entropy_dissipation(op, u, eq)?, mass: op.total_mass(u) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// `−slope` of `ln E` against `t`.
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares exponential rate over the trailing half of the samples with
/// `E > 1e-30`.
pub fn fit_decay_rate(reports: &[EntropyReport]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = reports.iter().filter(|r| r.entropy > 1e-30).map(|r| (r.t, r.entropy.ln())).collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientData(format!("{} usable samples, need 10", pts.len())));
    }
    let tail = &pts[pts.len() / 2..];
    let n = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = tail.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = tail.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if stt == 0.0 {
        return Err(Error::InsufficientData("all samples at the same time".into()));
    }
    let slope = sty / stt;
    let syy: f64 = tail.iter().map(|p| (p.1 - my).powi(2)).sum();
    let res: f64 = tail.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - res / syy } else { 1.0 };
    Ok(DecayFit { rate: -slope, r_squared, samples: tail.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::assemble;
    use crate::equilibrium::equilibrium_kernel;
    use crate::geometry::{build_mesh, GeometrySpec};
    use crate::model::{JakParams, LglParams, ModelSpec};
    use crate::timestepper::Stepper;
    use crate::timestepper::Scheme;
    use proptest::prelude::*;

    fn ops() -> Vec<CoupledOperator> {
        let disk = build_mesh(&GeometrySpec::disk(1.0, 0.3, 4, 8)).unwrap();
        let ann = build_mesh(&GeometrySpec::annulus(0.4, 1.0, 4, 8)).unwrap();
        vec![
            assemble(&ModelSpec::Lgl(LglParams { sigma: 2.0, xi: 0.7, ..Default::default() }), &disk).unwrap(),
            assemble(&ModelSpec::Jak(JakParams { r_delay: 2.0, ..Default::default() }), &ann).unwrap(),
        ]
    }

    #[test]
    fn entropy_identities_at_equilibrium() {
        for op in ops() {
            let eq = equilibrium_kernel(&op, 1.7).unwrap();
            assert_eq!(relative_entropy(&op, &eq.state, &eq).unwrap(), 0.0);
            assert!((relative_entropy_unshifted(&op, &eq.state, &eq).unwrap() - 1.7).abs() < 1e-12);
            let twice: Vec<f64> = eq.state.iter().map(|v| 2.0 * v).collect();
            assert!((relative_entropy(&op, &twice, &eq).unwrap() - 1.7).abs() < 1e-12);
            assert!(entropy_dissipation(&op, &eq.state, &eq).unwrap().abs() < 1e-14);
            assert!(entropy_dissipation(&op, &twice, &eq).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_equilibrium_is_rejected() {
        let op = &ops()[0];
        let w = vec![0.0; op.dim()];
        assert_eq!(relative_entropy_raw(op, &w, &w), Err(Error::NonpositiveEquilibrium));
    }

    #[test]
    fn fit_examples() {
        let mk = |f: &dyn Fn(f64) -> f64| (0..40).map(|i| i as f64 * 0.1).map(|t| EntropyReport { t, entropy: f(t), dissipation: 0.0, mass: 1.0 }).collect::<Vec<_>>();
        let fit = fit_decay_rate(&mk(&|t| (-3.0 * t).exp())).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-8);
        assert!(fit.r_squared > 0.999_999);
        assert_eq!(fit_decay_rate(&mk(&|_| 2.0)).unwrap().rate, 0.0);
        assert!(matches!(fit_decay_rate(&mk(&|_| 0.0)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn discrete_dissipation_identity_holds_to_first_order_in_dt() {
        for op in ops() {
            let eq = equilibrium_kernel(&op, 1.0).unwrap();
            let u0: Vec<f64> = eq.state.iter().enumerate().map(|(k, w)| w * (1.0 + 0.5 * ((3 * k) as f64).sin())).collect();
            let defect = |dt: f64| {
                let u1 = Stepper::new(&op, dt, Scheme::ImplicitEuler).unwrap().step(&u0).unwrap();
                let de = (relative_entropy(&op, &u1, &eq).unwrap() - relative_entropy(&op, &u0, &eq).unwrap()) / dt;
                (de + entropy_dissipation(&op, &u1, &eq).unwrap()).abs()
            };
            let ratio = defect(1e-5) / defect(5e-6);
            assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    proptest! {
        #[test]
        fn transfer_sum_matches_matrix_form(seed in proptest::collection::vec(0.1f64..3.0, 64)) {
            for op in ops() {
                let eq = equilibrium_kernel(&op, 1.0).unwrap();
                let u: Vec<f64> = (0..op.dim()).map(|k| seed[k % 64] * eq.state[k]).collect();
                let a = entropy_dissipation(&op, &u, &eq).unwrap();
                let b = dissipation_quadratic_form(&op, &u, &eq.state).unwrap();
                prop_assert!(a >= 0.0);
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
            }
        }
    }
}
