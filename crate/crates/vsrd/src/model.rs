//! Model parameters and the layout of the flat state vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryLabel;
use crate::network::ReactionNetwork;

/// Rates and diffusivities of the Lgl system.
///
/// Volume species `L`, `P`; surface species `ℓ` on the whole boundary and
/// `p` on the active arc `Γ₂`. Reactions: `L → P` at `beta`, `P → L` at
/// `alpha`, `L → ℓ` at `lambda`, `ℓ → L` at `gamma`, `ℓ → p` at `sigma`
/// (on `Γ₂` only), `p → P` at `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LglParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub xi: f64,
    /// Volume diffusion of `L`.
    pub d_l: f64,
    /// Volume diffusion of `P`.
    pub d_p: f64,
    /// Surface diffusion of `ℓ`.
    pub d_ls: f64,
    /// Surface diffusion of `p`.
    pub d_ps: f64,
}

impl Default for LglParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, gamma: 1.0, lambda: 1.0, sigma: 1.0, xi: 1.0, d_l: 1.0, d_p: 1.0, d_ls: 1.0, d_ps: 1.0 }
    }
}

/// Rates and diffusivities of the JAK2/STAT5 system.
///
/// `u0`, `u1` diffuse in the cytoplasm; `u2..u7` are well-mixed nuclear
/// species. Boundary fluxes are normalized by the lengths of the membrane and
/// nuclear envelope, and the nuclear ODEs by the nuclear area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JakParams {
    pub r_act: f64,
    pub p_jak: f64,
    pub r_imp: f64,
    pub r_exp: f64,
    pub r_imp2: f64,
    pub r_delay: f64,
    #[serde(default = "one")]
    pub d0: f64,
    #[serde(default = "one")]
    pub d1: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for JakParams {
    fn default() -> Self {
        Self { r_act: 1.0, p_jak: 1.0, r_imp: 1.0, r_exp: 1.0, r_imp2: 1.0, r_delay: 1.0, d0: 1.0, d1: 1.0 }
    }
}

/// Linear network `c_t = 𝔻Δc + Ac` with homogeneous Neumann conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericParams {
    /// `rates[i][j]` is the rate from species `j` to species `i`.
    pub rates: Vec<Vec<f64>>,
    pub diffusion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Lgl(LglParams),
    Jak(JakParams),
    Generic(GenericParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lgl,
    Jak,
    Generic,
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Lgl(_) => ModelKind::Lgl,
            ModelSpec::Jak(_) => ModelKind::Jak,
            ModelSpec::Generic(_) => ModelKind::Generic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} must be positive")))
            }
        };
        match self {
            ModelSpec::Lgl(p) => {
                for (n, v) in [
                    ("alpha", p.alpha),
                    ("beta", p.beta),
                    ("gamma", p.gamma),
                    ("lambda", p.lambda),
                    ("sigma", p.sigma),
                    ("xi", p.xi),
                    ("d_l", p.d_l),
                    ("d_p", p.d_p),
                    ("d_ls", p.d_ls),
                    ("d_ps", p.d_ps),
                ] {
                    positive(n, v)?;
                }
            }
            ModelSpec::Jak(p) => {
                for (n, v) in [
                    ("r_act", p.r_act),
                    ("p_jak", p.p_jak),
                    ("r_imp", p.r_imp),
                    ("r_exp", p.r_exp),
                    ("r_imp2", p.r_imp2),
                    ("r_delay", p.r_delay),
                    ("d0", p.d0),
                    ("d1", p.d1),
                ] {
                    positive(n, v)?;
                }
            }
            ModelSpec::Generic(g) => {
                ReactionNetwork::new(g.rates.clone())?;
                if g.diffusion.len() != g.rates.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} diffusion coefficients for {} species",
                        g.diffusion.len(),
                        g.rates.len()
                    )));
                }
                if g.diffusion.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(Error::InvalidParameter("diffusion coefficients must be nonnegative".into()));
                }
                if !g.diffusion.iter().any(|&d| d > 0.0) {
                    return Err(Error::InvalidParameter("at least one diffusion coefficient must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Compartment {
    Volume,
    Surface(BoundaryLabel),
    /// Well-mixed scalar living in the nucleus.
    Ode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub species: String,
    pub compartment: Compartment,
    pub offset: usize,
    pub len: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Maps `(species, cell)` to offsets in the flat state vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    pub blocks: Vec<Block>,
}

impl Layout {
    pub fn new(parts: Vec<(String, Compartment, usize)>) -> Self {
        let mut offset = 0;
        let blocks = parts
            .into_iter()
            .map(|(species, compartment, len)| {
                let b = Block { species, compartment, offset, len };
                offset += len;
                b
            })
            .collect();
        Self { blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, species: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.species == species)
    }

    pub fn index(&self, species: &str, cell: usize) -> Option<usize> {
        self.block(species).filter(|b| cell < b.len).map(|b| b.offset + cell)
    }

    pub fn slice<'a>(&self, u: &'a [f64], species: &str) -> Option<&'a [f64]> {
        self.block(species).map(|b| &u[b.range()])
    }

    pub fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::LayoutMismatch { expected: self.len(), got: u.len() });
        }
        Ok(())
    }
}

/// Flat vector of degrees of freedom ordered by a [`Layout`].
pub type StateVector = Vec<f64>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_offsets() {
        let l = Layout::new(vec![("a".into(), Compartment::Volume, 3), ("b".into(), Compartment::Ode, 1)]);
        assert_eq!(l.len(), 4);
        assert_eq!(l.index("b", 0), Some(3));
        assert_eq!(l.index("a", 3), None);
        assert!(l.check(&[0.0; 3]).is_err());
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::Lgl(LglParams::default()).validate().is_ok());
        let bad = ModelSpec::Jak(JakParams { r_exp: 0.0, ..Default::default() });
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter(_))));
        let no_diffusion = ModelSpec::Generic(GenericParams { rates: vec![vec![0.0, 1.0], vec![1.0, 0.0]], diffusion: vec![0.0, 0.0] });
        assert!(no_diffusion.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = ModelSpec::Jak(JakParams::default());
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"kind\":\"jak\""));
        assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), s);
    }
}
