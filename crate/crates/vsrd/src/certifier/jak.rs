//! Rate certificate for the annulus model with nuclear ODE species.
//!
//! The entropy splits additively into the cytoplasmic fluctuations and the
//! reduced state `ū` where `u₀, u₁` are replaced by their weighted means.
//! Half of the dissipation controls the fluctuations through the Poincaré
//! constants (`L₁`); the other half, through the trace constants, dominates
//! `L₂` times the dissipation of `ū`, which in turn controls `E(ū)` through the
//! eight-species averaged network (`L₀`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::constants::{weighted_poincare, weighted_trace, MeshPart};
use super::{averaged_gap, check_equilibrium, CertificateInputs, CertifyMode, GapRecord, RateCertificate};
use crate::discretization::{nucleus_area, CoupledOperator};
use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::geometry::BoundaryLabel;
use crate::model::{JakParams, ModelKind, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JakInputs {
    pub params: JakParams,
    pub p_u0: f64,
    pub p_u1: f64,
    pub t_sigma_u0: f64,
    pub t_sigma_u1: f64,
    pub t_s_u0: f64,
    pub t_s_u1: f64,
    /// `min u₁/u₀` over the cell membrane.
    pub min_u1_over_u0: f64,
    /// `∫ u₀ dσ` over the cell membrane.
    pub int_sigma_u0: f64,
    /// `∫ u₀ dS`, `∫ u₁ dS` over the nuclear envelope.
    pub int_s_u0: f64,
    pub int_s_u1: f64,
    pub u2: f64,
    pub membrane_length: f64,
    pub envelope_length: f64,
    pub l0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JakConstants {
    pub t_mu: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub lambda: f64,
    pub lambda_literal: f64,
}

impl JakInputs {
    /// Boundary rates per unit length: activation on the membrane, import,
    /// second import and export on the envelope.
    pub fn effective_rates(&self) -> (f64, f64, f64, f64) {
        let p = &self.params;
        (p.r_act * p.p_jak / self.membrane_length, p.r_imp / self.envelope_length, p.r_imp2 / self.envelope_length, p.r_exp / self.envelope_length)
    }

    pub fn constants(&self) -> JakConstants {
        let p = &self.params;
        let (a, g, s, k) = self.effective_rates();
        let t_mu = self.t_sigma_u0.min(self.t_sigma_u1).min(self.t_s_u0).min(self.t_s_u1);
        let (d0t, d1t) = (p.d0 * t_mu, p.d1 * t_mu);
        let c1 = d0t.min(d1t * self.min_u1_over_u0).min(a) / 3.0;
        let c2 = 0.5 * d0t.min(g);
        let c3 = 0.5 * d1t.min(s);
        let l2 = 0.5 * (c1 / a).min(c2 / (2.0 * g)).min(c2 * self.int_s_u0 / (2.0 * k * self.u2 * self.envelope_length)).min(c3 / s).min(1.0);
        let l1 = (p.d0 * self.p_u0).min(p.d1 * self.p_u1);
        let lambda = l1.min(self.l0 * l2);

        let d = p.d0.min(p.d1);
        let ab = p.r_act * p.p_jak;
        let c1l = d * t_mu / 3.0 * 1f64.min(ab).min(self.min_u1_over_u0);
        let c2l = 0.5 * (d * t_mu).min(p.r_imp);
        let c3l = 0.5 * (d * t_mu).min(p.r_imp2);
        let l2l = 0.5 * (c1l / ab).min(c2l / (2.0 * p.r_imp)).min(c2l * self.int_s_u0 / (2.0 * p.r_exp * self.u2 * self.envelope_length)).min(c3l / p.r_imp2).min(1.0);
        let lambda_literal = (d * self.p_u0.min(self.p_u1)).min(self.l0 * l2l);
        JakConstants { t_mu, c1, c2, c3, l0: self.l0, l1, l2, lambda, lambda_literal }
    }
}

/// Averaged network on `(ū₀, ū₁, u₂, …, u₇)` with weights `∫u₀, ∫u₁, |Ω_nuc| uᵢ`.
pub fn jak_gap(p: &JakParams, inputs_w: &[f64; 8], ode: &[f64], int_sigma_u0: f64, int_s_u0: f64, int_s_u1: f64, membrane_length: f64, envelope_length: f64) -> Result<GapRecord> {
    let a = p.r_act * p.p_jak / membrane_length;
    let mut edges = vec![
        (0, 1, a * int_sigma_u0),
        (1, 3, p.r_imp2 / envelope_length * int_s_u1),
        (0, 2, p.r_imp / envelope_length * int_s_u0 + p.r_exp * ode[0]),
    ];
    for i in 3..7 {
        edges.push((i, i + 1, p.r_delay * ode[i - 2]));
    }
    edges.push((7, 2, p.r_delay * ode[5]));
    averaged_gap(&["u0", "u1", "u2", "u3", "u4", "u5", "u6", "u7"], inputs_w.to_vec(), &edges)
}

/// Certified rate `λ₁ = min{L₁, L₀ L₂}` for the annulus model.
pub fn certify_jak(op: &CoupledOperator, eq: &EquilibriumProfile) -> Result<RateCertificate> {
    let params = match &op.spec {
        ModelSpec::Jak(p) => *p,
        _ => return Err(Error::GeometryMismatch("the JAK certificate needs the JAK model".into())),
    };
    check_equilibrium(op, eq)?;
    let mesh = &op.mesh;
    let nc = mesh.n_cells();
    let (u0, u1, ode) = (&eq.state[..nc], &eq.state[nc..2 * nc], &eq.state[2 * nc..]);
    let outer = mesh.boundary(BoundaryLabel::Outer)?;
    let inner = mesh.boundary(BoundaryLabel::Inner)?;
    let membrane_length = mesh.boundary_measure(BoundaryLabel::Outer)?;
    let envelope_length = mesh.boundary_measure(BoundaryLabel::Inner)?;
    let nuc = nucleus_area(mesh)?;

    let p_u0 = weighted_poincare(mesh, MeshPart::Volume, u0)?;
    let p_u1 = weighted_poincare(mesh, MeshPart::Volume, u1)?;
    let t_sigma_u0 = weighted_trace(mesh, u0, BoundaryLabel::Outer)?;
    let t_sigma_u1 = weighted_trace(mesh, u1, BoundaryLabel::Outer)?;
    let t_s_u0 = weighted_trace(mesh, u0, BoundaryLabel::Inner)?;
    let t_s_u1 = weighted_trace(mesh, u1, BoundaryLabel::Inner)?;
    let min_u1_over_u0 = outer.iter().map(|(_, s)| u1[s.cell] / u0[s.cell]).fold(f64::INFINITY, f64::min);
    let int_sigma_u0: f64 = outer.iter().map(|(_, s)| s.length * u0[s.cell]).sum();
    let int_s_u0: f64 = inner.iter().map(|(_, s)| s.length * u0[s.cell]).sum();
    let int_s_u1: f64 = inner.iter().map(|(_, s)| s.length * u1[s.cell]).sum();

    let mut w = [0.0; 8];
    w[0] = mesh.integrate_volume(u0);
    w[1] = mesh.integrate_volume(u1);
    for i in 0..6 {
        w[i + 2] = nuc * ode[i];
    }
    let gap = jak_gap(&params, &w, ode, int_sigma_u0, int_s_u0, int_s_u1, membrane_length, envelope_length)?;
    let inputs = JakInputs {
        params,
        p_u0,
        p_u1,
        t_sigma_u0,
        t_sigma_u1,
        t_s_u0,
        t_s_u1,
        min_u1_over_u0,
        int_sigma_u0,
        int_s_u0,
        int_s_u1,
        u2: ode[0],
        membrane_length,
        envelope_length,
        l0: gap.value,
    };
    let c = inputs.constants();
    if !(c.lambda > 0.0 && c.lambda.is_finite()) {
        return Err(Error::EigensolveFailure(format!("non-positive rate {}", c.lambda)));
    }
    let map = |v: &[(&str, f64)]| v.iter().map(|(k, x)| (k.to_string(), *x)).collect::<BTreeMap<_, _>>();
    Ok(RateCertificate {
        schema_version: crate::SCHEMA_VERSION,
        model_kind: ModelKind::Jak,
        mode: CertifyMode::Standard,
        mesh: mesh.spec,
        poincare: map(&[("P_u0", p_u0), ("P_u1", p_u1)]),
        trace: map(&[("T_sigma_u0", t_sigma_u0), ("T_sigma_u1", t_sigma_u1), ("T_S_u0", t_s_u0), ("T_S_u1", t_s_u1), ("T_mu", c.t_mu)]),
        gap,
        epsilons: BTreeMap::new(),
        omega: None,
        omega_normalized: None,
        etas: BTreeMap::new(),
        jak: Some(c),
        supremum_ratios: map(&[("min u1/u0 on membrane", min_u1_over_u0)]),
        grid: None,
        inputs: CertificateInputs::Jak(inputs),
        lambda: c.lambda,
        lambda_literal: c.lambda_literal,
        notes: vec![
            "boundary rates are taken per unit length: r_act*p_jak/|membrane|, r_imp/|envelope|, r_imp2/|envelope|, r_exp/|envelope|".into(),
            "C1 uses min{D0*T_mu, D1*T_mu*min(u1/u0), r_act*p_jak/|membrane|}/3".into(),
        ],
    })
}
