//! θ-schemes for `M du/dt = 𝓛 u` with a single sparse factorization per run.

use serde::{Deserialize, Serialize};

use crate::discretization::CoupledOperator;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseLu};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Unconditionally positive and entropy-stable.
    #[default]
    ImplicitEuler,
    /// Second order; positivity is not guaranteed.
    CrankNicolson,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_stride")]
    pub output_every: usize,
}

fn default_stride() -> usize {
    1
}

impl TimeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidParameter(format!("t_end = {} must be at least dt = {}", self.t_end, self.dt)));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidParameter("output_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// Factored `(M − θ dt 𝓛)` together with the explicit part `M + (1−θ) dt 𝓛`.
#[derive(Debug)]
pub struct Stepper<'a> {
    op: &'a CoupledOperator,
    dt: f64,
    lu: SparseLu,
    explicit: Option<CsrMatrix>,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a CoupledOperator, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        let theta = scheme.theta();
        let lhs = op.matrix.scaled_plus_diag(-theta * dt, 1.0, &op.mass);
        let lu = SparseLu::factor(&lhs)?;
        let explicit = (theta < 1.0).then(|| op.matrix.scaled_plus_diag((1.0 - theta) * dt, 1.0, &op.mass));
        Ok(Self { op, dt, lu, explicit })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.op.layout.check(u)?;
        let rhs = match &self.explicit {
            Some(b) => b.mul_vec(u),
            None => u.iter().zip(&self.op.mass).map(|(v, m)| v * m).collect(),
        };
        self.lu.solve(&rhs)
    }
}

/// One implicit Euler step.
pub fn step(op: &CoupledOperator, u: &[f64], dt: f64) -> Result<Vec<f64>> {
    Stepper::new(op, dt, Scheme::ImplicitEuler)?.step(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: Vec<f64>,
}

/// Advances `u0` to `t_end`, calling `observe(t, u)` at the initial time, every
/// `output_every` steps and at the final time.
pub fn run_with<F>(op: &CoupledOperator, u0: &[f64], spec: &TimeSpec, mut observe: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    spec.validate()?;
    op.layout.check(u0)?;
    let stepper = Stepper::new(op, spec.dt, spec.scheme)?;
    let n = spec.n_steps();
    let mut u = u0.to_vec();
    observe(0.0, &u)?;
    for k in 1..=n {
        u = stepper.step(&u)?;
        if k % spec.output_every == 0 || k == n {
            observe(k as f64 * spec.dt, &u)?;
        }
    }
    Ok(u)
}

/// Collects the observed states of [`run_with`].
pub fn run(op: &CoupledOperator, u0: &[f64], spec: &TimeSpec) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    run_with(op, u0, spec, |t, u| {
        out.push(Snapshot { t, state: u.to_vec() });
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::assemble;
    use crate::geometry::{build_mesh, GeometrySpec};
    use crate::model::{GenericParams, JakParams, LglParams, ModelSpec};

    fn lgl() -> CoupledOperator {
        let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.25, 5, 8)).unwrap();
        assemble(&ModelSpec::Lgl(LglParams { sigma: 3.0, xi: 0.4, ..Default::default() }), &mesh).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let op = lgl();
        let u = step(&op, &vec![0.0; op.dim()], 0.1).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn implicit_euler_preserves_nonnegativity() {
        let op = lgl();
        for k in 0..op.dim() {
            let mut u = vec![0.0; op.dim()];
            u[k] = 1.0;
            let v = step(&op, &u, 0.5).unwrap();
            assert!(v.iter().all(|&x| x >= -1e-13), "spike at {k}");
        }
    }

    #[test]
    fn mass_is_conserved_for_both_schemes() {
        let mesh = build_mesh(&GeometrySpec::annulus(0.3, 1.0, 4, 8)).unwrap();
        let op = assemble(&ModelSpec::Jak(JakParams::default()), &mesh).unwrap();
        let u0: Vec<f64> = (0..op.dim()).map(|k| 1.0 + (k % 3) as f64).collect();
        let m0 = op.total_mass(&u0);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let traj = run(&op, &u0, &TimeSpec { t_end: 1.0, dt: 0.01, scheme, output_every: 10 }).unwrap();
            assert_eq!(traj.len(), 11);
            assert!(traj.windows(2).all(|w| w[0].t < w[1].t));
            for s in &traj {
                assert!((op.total_mass(&s.state) - m0).abs() <= 1e-12 * m0);
            }
        }
    }

    #[test]
    fn homogeneous_equilibrium_is_stationary() {
        let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.25, 4, 8)).unwrap();
        let spec = ModelSpec::Generic(GenericParams { rates: vec![vec![0.0, 1.0], vec![1.0, 0.0]], diffusion: vec![1.0, 1.0] });
        let op = assemble(&spec, &mesh).unwrap();
        let u0 = vec![1.0; op.dim()];
        let traj = run(&op, &u0, &TimeSpec { t_end: 1.0, dt: 0.1, scheme: Scheme::ImplicitEuler, output_every: 1 }).unwrap();
        for s in traj {
            assert!(s.state.iter().all(|v| (v - 1.0).abs() < 1e-13));
        }
    }

    #[test]
    fn time_spec_validation() {
        let bad = |dt: f64, t_end: f64| TimeSpec { t_end, dt, scheme: Scheme::ImplicitEuler, output_every: 1 }.validate().is_err();
        assert!(bad(0.0, 1.0));
        assert!(bad(-1.0, 1.0));
        assert!(bad(0.5, 0.1));
        assert!(!bad(0.1, 1.0));
    }

    #[test]
    fn convergence_orders_in_dt() {
        let op = lgl();
        let u0: Vec<f64> = (0..op.dim()).map(|k| 1.0 + ((k * 7) % 5) as f64).collect();
        let end = |dt: f64, scheme| {
            let s = TimeSpec { t_end: 0.5, dt, scheme, output_every: 1000 };
            run_with(&op, &u0, &s, |_, _| Ok(())).unwrap()
        };
        let reference = end(1e-4, Scheme::CrankNicolson);
        let err = |u: Vec<f64>| u.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let (e1, e2) = (err(end(0.02, Scheme::ImplicitEuler)), err(end(0.01, Scheme::ImplicitEuler)));
        assert!(e1 / e2 > 1.8, "euler ratio {}", e1 / e2);
        let (c1, c2) = (err(end(0.02, Scheme::CrankNicolson)), err(end(0.01, Scheme::CrankNicolson)));
        assert!(c1 / c2 > 3.5, "cn ratio {}", c1 / c2);
    }
}
