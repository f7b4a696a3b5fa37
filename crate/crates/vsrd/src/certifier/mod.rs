//! Certified exponential decay rates for the discrete systems.
//!
//! A certificate bounds `D(u − w | w) ≥ λ E(u − w | w)` for every state with the
//! equilibrium's mass, which gives `E(t) ≤ E(0) e^{−λt}` along the
//! semi-discrete flow. Every constant is computed on the actual mesh, so the
//! rate is a statement about the discrete system.

pub mod constants;
mod grid;
mod jak;
mod lgl;
mod spectral;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discretization::CoupledOperator;
use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::model::{ModelKind, ModelSpec};
use crate::network::{gap_constant_constructive, ConstructiveGap, ReactionNetwork};

pub use constants::{weighted_poincare, weighted_trace, MeshPart};
pub use jak::{certify_jak, JakConstants, JakInputs};
pub use lgl::{certify_lgl, LglInputs};
pub use spectral::{generator_spectral_gap, optimal_eed_rate};

/// Logarithmic grid used for every `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    pub points: usize,
    pub min: f64,
    pub max: f64,
}

impl Default for EpsilonGrid {
    fn default() -> Self {
        Self { points: 40, min: 1e-4, max: 0.9 }
    }
}

impl EpsilonGrid {
    pub fn validate(&self) -> Result<()> {
        if self.points < 1 || !(self.min > 0.0 && self.max < 1.0 && self.min <= self.max) {
            return Err(Error::InvalidParameter(format!("epsilon grid {self:?} must satisfy 0 < min ≤ max < 1")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let (a, b) = (self.min.ln(), self.max.ln());
        (0..self.points).map(|k| (a + (b - a) * k as f64 / (self.points - 1) as f64).exp()).collect()
    }
}

/// `Standard` drops the `p → P` exchange term and recovers its averaged part by
/// the triangle inequality. `Sharp` keeps the term through a trace bound for
/// `P` on the active arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMode {
    #[default]
    Standard,
    Sharp,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CertifyOptions {
    #[serde(default)]
    pub grid: EpsilonGrid,
    #[serde(default)]
    pub mode: CertifyMode,
}

/// Edge of the averaged network, `k` being the full symmetric coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEdge {
    pub from: String,
    pub to: String,
    pub k: f64,
}

/// Gap constant of the averaged network together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    /// `η_c / max W`.
    pub value: f64,
    pub species: Vec<String>,
    pub weights: Vec<f64>,
    pub edges: Vec<GapEdge>,
    pub constructive: ConstructiveGap,
}

/// Gap of `Σ_e k_e (y_i − y_j)² ≥ K Σ W_i y_i²` on `Σ W_i y_i = 0`.
pub(crate) fn averaged_gap(species: &[&str], weights: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<GapRecord> {
    let n = species.len();
    let mut rates = vec![vec![0.0; n]; n];
    for &(i, j, k) in edges {
        rates[i][j] += 0.5 * k;
        rates[j][i] += 0.5 * k;
    }
    let names: Vec<String> = species.iter().map(|s| s.to_string()).collect();
    let net = ReactionNetwork::with_species(names.clone(), rates)?;
    let constructive = gap_constant_constructive(&net, &weights)?;
    let max_w = weights.iter().cloned().fold(0.0, f64::max);
    Ok(GapRecord {
        value: constructive.eta / max_w,
        edges: edges.iter().map(|&(i, j, k)| GapEdge { from: names[i].clone(), to: names[j].clone(), k }).collect(),
        species: names,
        weights,
        constructive,
    })
}

/// Everything needed to re-evaluate the rate formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateInputs {
    Lgl(LglInputs),
    Jak(JakInputs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub mode: CertifyMode,
    pub mesh: GeometrySpec,
    pub poincare: BTreeMap<String, f64>,
    pub trace: BTreeMap<String, f64>,
    pub gap: GapRecord,
    pub epsilons: BTreeMap<String, f64>,
    pub omega: Option<f64>,
    /// `ω` divided by the `p → P` coefficient of the averaged network.
    pub omega_normalized: Option<f64>,
    pub etas: BTreeMap<String, f64>,
    pub jak: Option<JakConstants>,
    pub supremum_ratios: BTreeMap<String, f64>,
    pub grid: Option<EpsilonGrid>,
    pub inputs: CertificateInputs,
    pub lambda: f64,
    /// Closing formula read literally at the same constants. Not a bound;
    /// kept for comparison.
    pub lambda_literal: f64,
    pub notes: Vec<String>,
}

impl RateCertificate {
    /// Re-evaluates the rate from the stored inputs and `ε`'s.
    pub fn recompute_lambda(&self) -> Result<f64> {
        match &self.inputs {
            CertificateInputs::Lgl(inp) => {
                let e = |k: &str| self.epsilons.get(k).copied().ok_or_else(|| Error::InvalidParameter(format!("certificate lacks {k}")));
                let eps = lgl::Epsilons { e1: e("eps1")?, e2: e("eps2")?, e3: e("eps3")?, e4: e("eps4")?, e5: self.epsilons.get("eps5").copied(), e6: e("eps6")? };
                Ok(inp.evaluate(&eps, self.mode).map(|v| v.lambda).unwrap_or(f64::NEG_INFINITY))
            }
            CertificateInputs::Jak(inp) => Ok(inp.constants().lambda),
        }
    }

    /// Every named constant must be strictly positive and finite.
    pub fn all_positive(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        self.poincare.values().chain(self.trace.values()).chain(self.etas.values()).chain(self.epsilons.values()).chain(self.supremum_ratios.values()).all(|&v| ok(v))
            && ok(self.gap.value)
            && ok(self.lambda)
            && self.omega.map_or(true, ok)
            && self.jak.as_ref().map_or(true, |j| [j.c1, j.c2, j.c3, j.l1, j.l2, j.t_mu].into_iter().all(ok))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("certificate serializes")
    }
}

/// Certificate for the model of `op`.
pub fn certify(op: &CoupledOperator, eq: &EquilibriumProfile, opts: &CertifyOptions) -> Result<RateCertificate> {
    match op.spec {
        ModelSpec::Lgl(_) => certify_lgl(op, eq, opts),
        ModelSpec::Jak(_) => certify_jak(op, eq),
        ModelSpec::Generic(_) => Err(Error::InvalidParameter("certificates are available for the lgl and jak models".into())),
    }
}

pub(crate) fn check_equilibrium(op: &CoupledOperator, eq: &EquilibriumProfile) -> Result<()> {
    op.layout.check(&eq.state)?;
    if eq.state.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonpositiveEquilibrium);
    }
    Ok(())
}

pub(crate) fn max_ratio(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs.map(|(a, b)| a / b).fold(0.0, f64::max)
}
