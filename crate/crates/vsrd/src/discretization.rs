//! Finite-volume assembly of the coupled operator `M du/dt = 𝓛 u`.
//!
//! Every diffusive flux, reaction and boundary exchange is a [`Transfer`]:
//! mass moves from one degree of freedom to another at a rate proportional to
//! the donor value. A transfer adds `+rate` at `(to, from)` and `−rate` at
//! `(from, from)`, so each column of `𝓛` sums to zero and all off-diagonal
//! entries are nonnegative by construction.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryLabel, CompartmentMesh, Shape};
use crate::model::{Compartment, GenericParams, JakParams, Layout, LglParams, ModelSpec};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Diffusion,
    Reaction,
    Exchange,
}

/// Linear flux `rate · u[from]` carried from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transfer {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub term: Term,
}

/// Assembled system `M du/dt = 𝓛 u`.
#[derive(Debug, Clone)]
pub struct CoupledOperator {
    pub spec: ModelSpec,
    pub mesh: CompartmentMesh,
    pub matrix: CsrMatrix,
    /// Diagonal of `M`: cell areas, segment lengths, nuclear area.
    pub mass: Vec<f64>,
    pub layout: Layout,
    pub transfers: Vec<Transfer>,
}

/// Area of the nucleus, the disk bounded by the inner circle.
pub fn nucleus_area(mesh: &CompartmentMesh) -> Result<f64> {
    match mesh.spec.shape {
        Shape::Annulus { r_in, .. } => Ok(PI * r_in * r_in),
        _ => Err(Error::GeometryMismatch("nucleus requires an annulus".into())),
    }
}

struct Builder {
    transfers: Vec<Transfer>,
}

impl Builder {
    fn push(&mut self, from: usize, to: usize, rate: f64, term: Term) {
        if rate != 0.0 {
            self.transfers.push(Transfer { from, to, rate, term });
        }
    }

    fn volume_diffusion(&mut self, mesh: &CompartmentMesh, offset: usize, d: f64) {
        for f in &mesh.faces {
            self.push(offset + f.a, offset + f.b, d * f.transmissibility, Term::Diffusion);
            self.push(offset + f.b, offset + f.a, d * f.transmissibility, Term::Diffusion);
        }
    }

    fn surface_diffusion(&mut self, mesh: &CompartmentMesh, label: BoundaryLabel, closed: bool, offset: usize, d: f64) -> Result<()> {
        for f in mesh.surface_faces(label, closed)? {
            self.push(offset + f.a, offset + f.b, d * f.transmissibility, Term::Diffusion);
            self.push(offset + f.b, offset + f.a, d * f.transmissibility, Term::Diffusion);
        }
        Ok(())
    }
}

fn lgl_layout(mesh: &CompartmentMesh) -> Result<Layout> {
    let nc = mesh.n_cells();
    let ng = mesh.boundary(BoundaryLabel::Gamma)?.len();
    let n2 = mesh.boundary(BoundaryLabel::Gamma2)?.len();
    Ok(Layout::new(vec![
        ("L".into(), Compartment::Volume, nc),
        ("P".into(), Compartment::Volume, nc),
        ("l".into(), Compartment::Surface(BoundaryLabel::Gamma), ng),
        ("p".into(), Compartment::Surface(BoundaryLabel::Gamma2), n2),
    ]))
}

fn assemble_lgl(p: &LglParams, mesh: &CompartmentMesh) -> Result<(Layout, Vec<f64>, Vec<Transfer>)> {
    if !mesh.is_disk() {
        return Err(Error::GeometryMismatch("the Lgl model lives on a disk".into()));
    }
    let layout = lgl_layout(mesh)?;
    let nc = mesh.n_cells();
    let gamma = mesh.boundary(BoundaryLabel::Gamma)?;
    let gamma2 = mesh.boundary(BoundaryLabel::Gamma2)?;
    let (ol, op, os, ops) = (0, nc, 2 * nc, 2 * nc + gamma.len());

    let mut mass = Vec::with_capacity(layout.len());
    for _ in 0..2 {
        mass.extend(mesh.cells.iter().map(|c| c.area));
    }
    mass.extend(gamma.iter().map(|(_, s)| s.length));
    mass.extend(gamma2.iter().map(|(_, s)| s.length));

    let mut b = Builder { transfers: Vec::new() };
    b.volume_diffusion(mesh, ol, p.d_l);
    b.volume_diffusion(mesh, op, p.d_p);
    b.surface_diffusion(mesh, BoundaryLabel::Gamma, true, os, p.d_ls)?;
    b.surface_diffusion(mesh, BoundaryLabel::Gamma2, false, ops, p.d_ps)?;
    for (k, c) in mesh.cells.iter().enumerate() {
        b.push(ol + k, op + k, p.beta * c.area, Term::Reaction);
        b.push(op + k, ol + k, p.alpha * c.area, Term::Reaction);
    }
    for (k, s) in &gamma {
        b.push(ol + s.cell, os + k, p.lambda * s.length, Term::Exchange);
        b.push(os + k, ol + s.cell, p.gamma * s.length, Term::Exchange);
    }
    for (j, (k, s)) in gamma2.iter().enumerate() {
        b.push(os + k, ops + j, p.sigma * s.length, Term::Exchange);
        b.push(ops + j, op + s.cell, p.xi * s.length, Term::Exchange);
    }
    Ok((layout, mass, b.transfers))
}

fn assemble_jak(p: &JakParams, mesh: &CompartmentMesh) -> Result<(Layout, Vec<f64>, Vec<Transfer>)> {
    if !mesh.is_annulus() {
        return Err(Error::GeometryMismatch("the JAK2/STAT5 model lives on an annulus".into()));
    }
    let nc = mesh.n_cells();
    let mut parts = vec![("u0".into(), Compartment::Volume, nc), ("u1".into(), Compartment::Volume, nc)];
    for i in 2..8 {
        parts.push((format!("u{i}"), Compartment::Ode, 1));
    }
    let layout = Layout::new(parts);
    let ode = |i: usize| 2 * nc + i - 2;
    let nuc = nucleus_area(mesh)?;
    let outer = mesh.boundary(BoundaryLabel::Outer)?;
    let inner = mesh.boundary(BoundaryLabel::Inner)?;
    let cyt_len = mesh.boundary_measure(BoundaryLabel::Outer)?;
    let nuc_len = mesh.boundary_measure(BoundaryLabel::Inner)?;

    let mut mass = Vec::with_capacity(layout.len());
    for _ in 0..2 {
        mass.extend(mesh.cells.iter().map(|c| c.area));
    }
    mass.extend(std::iter::repeat(nuc).take(6));

    let mut b = Builder { transfers: Vec::new() };
    b.volume_diffusion(mesh, 0, p.d0);
    b.volume_diffusion(mesh, nc, p.d1);
    let act = p.r_act * p.p_jak / cyt_len;
    for (_, s) in &outer {
        b.push(s.cell, nc + s.cell, act * s.length, Term::Exchange);
    }
    for (_, s) in &inner {
        let w = s.length / nuc_len;
        b.push(s.cell, ode(2), p.r_imp * w, Term::Exchange);
        b.push(ode(2), s.cell, p.r_exp * w, Term::Exchange);
        b.push(nc + s.cell, ode(3), p.r_imp2 * w, Term::Exchange);
    }
    for i in 3..7 {
        b.push(ode(i), ode(i + 1), p.r_delay, Term::Reaction);
    }
    b.push(ode(7), ode(2), p.r_delay, Term::Reaction);
    Ok((layout, mass, b.transfers))
}

fn assemble_generic(g: &GenericParams, mesh: &CompartmentMesh) -> Result<(Layout, Vec<f64>, Vec<Transfer>)> {
    let n = g.rates.len();
    let nc = mesh.n_cells();
    let layout = Layout::new((0..n).map(|i| (format!("c{i}"), Compartment::Volume, nc)).collect());
    let mass = (0..n).flat_map(|_| mesh.cells.iter().map(|c| c.area)).collect();
    let mut b = Builder { transfers: Vec::new() };
    for (i, &d) in g.diffusion.iter().enumerate() {
        b.volume_diffusion(mesh, i * nc, d);
    }
    for (k, c) in mesh.cells.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    b.push(j * nc + k, i * nc + k, g.rates[i][j] * c.area, Term::Reaction);
                }
            }
        }
    }
    Ok((layout, mass, b.transfers))
}

/// Matrix of a transfer list: `+rate` at `(to, from)`, `−rate` at `(from, from)`.
pub fn transfer_matrix(n: usize, transfers: &[Transfer]) -> CsrMatrix {
    let mut t = Vec::with_capacity(2 * transfers.len());
    for tr in transfers {
        t.push((tr.to, tr.from, tr.rate));
        t.push((tr.from, tr.from, -tr.rate));
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// Assembles `𝓛` and `M` for a model on a mesh.
pub fn assemble(spec: &ModelSpec, mesh: &CompartmentMesh) -> Result<CoupledOperator> {
    spec.validate()?;
    let (layout, mass, transfers) = match spec {
        ModelSpec::Lgl(p) => assemble_lgl(p, mesh)?,
        ModelSpec::Jak(p) => assemble_jak(p, mesh)?,
        ModelSpec::Generic(g) => assemble_generic(g, mesh)?,
    };
    let matrix = transfer_matrix(layout.len(), &transfers);
    let op = CoupledOperator { spec: spec.clone(), mesh: mesh.clone(), matrix, mass, layout, transfers };
    let worst = op.conservation_defect();
    if worst > 1e-13 {
        return Err(Error::NonConservative(worst));
    }
    Ok(op)
}

impl CoupledOperator {
    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Largest column sum of `𝓛` relative to the largest entry in that column.
    pub fn conservation_defect(&self) -> f64 {
        let sums = self.matrix.column_sums();
        let mut scale = vec![0.0f64; self.dim()];
        for (_, j, v) in self.matrix.iter() {
            scale[j] = scale[j].max(v.abs());
        }
        sums.iter().zip(&scale).map(|(s, c)| if *c > 0.0 { s.abs() / c } else { s.abs() }).fold(0.0, f64::max)
    }

    /// `M⁻¹ 𝓛 u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.layout.check(u)?;
        let mut y = self.matrix.mul_vec(u);
        for (yi, m) in y.iter_mut().zip(&self.mass) {
            *yi /= m;
        }
        Ok(y)
    }

    /// Conserved total `1ᵀ M u`.
    pub fn total_mass(&self, u: &[f64]) -> f64 {
        self.mass.iter().zip(u).map(|(m, v)| m * v).sum()
    }

    /// Mass carried by each species block.
    pub fn species_masses(&self, u: &[f64]) -> Vec<(String, f64)> {
        self.layout
            .blocks
            .iter()
            .map(|b| (b.species.clone(), b.range().map(|k| self.mass[k] * u[k]).sum()))
            .collect()
    }

    /// Spatially uniform state (per compartment) with total mass `mass`.
    pub fn uniform_state(&self, mass: f64) -> Vec<f64> {
        let total: f64 = self.mass.iter().sum();
        vec![mass / total; self.dim()]
    }

    pub fn write_matrix_market<W: Write>(&self, w: W) -> io::Result<()> {
        self.matrix.write_matrix_market(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, GeometrySpec};
    use proptest::prelude::*;

    fn lgl_op(n: usize) -> CoupledOperator {
        let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.25, n, n)).unwrap();
        assemble(&ModelSpec::Lgl(LglParams { alpha: 0.7, beta: 1.3, gamma: 0.9, lambda: 1.1, sigma: 2.0, xi: 0.5, ..Default::default() }), &mesh).unwrap()
    }

    fn jak_op(nr: usize, nt: usize) -> CoupledOperator {
        let mesh = build_mesh(&GeometrySpec::annulus(0.4, 1.0, nr, nt)).unwrap();
        assemble(&ModelSpec::Jak(JakParams { r_act: 1.5, p_jak: 0.8, r_imp: 1.2, r_exp: 0.7, r_imp2: 0.9, r_delay: 1.1, d0: 1.0, d1: 0.6 }), &mesh).unwrap()
    }

    #[test]
    fn columns_sum_to_zero_and_matrix_is_metzler() {
        for op in [lgl_op(6), jak_op(5, 8)] {
            assert!(op.conservation_defect() <= 1e-13);
            for (i, j, v) in op.matrix.iter() {
                if i != j {
                    assert!(v >= 0.0);
                }
            }
        }
    }

    #[test]
    fn geometry_mismatch() {
        let disk = build_mesh(&GeometrySpec::disk(1.0, 0.25, 4, 8)).unwrap();
        assert!(matches!(assemble(&ModelSpec::Jak(JakParams::default()), &disk), Err(Error::GeometryMismatch(_))));
        let ann = build_mesh(&GeometrySpec::annulus(0.5, 1.0, 4, 8)).unwrap();
        assert!(matches!(assemble(&ModelSpec::Lgl(LglParams::default()), &ann), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn pure_neumann_laplacian_kills_constants() {
        let mesh = build_mesh(&GeometrySpec::disk(1.0, 0.25, 6, 12)).unwrap();
        let spec = ModelSpec::Generic(GenericParams { rates: vec![vec![0.0]], diffusion: vec![1.0] });
        let op = assemble(&spec, &mesh).unwrap();
        let y = op.apply(&vec![2.5; op.dim()]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn jak_u2_row_matches_hand_expansion() {
        // four segments on the nuclear envelope
        let op = jak_op(4, 4);
        let JakParams { r_imp, r_exp, r_delay, .. } = match op.spec {
            ModelSpec::Jak(p) => p,
            _ => unreachable!(),
        };
        let nuc = nucleus_area(&op.mesh).unwrap();
        let r_in = 0.4;
        let env = 2.0 * PI * r_in;
        let i2 = op.layout.index("u2", 0).unwrap();
        let i7 = op.layout.index("u7", 0).unwrap();
        let u: Vec<f64> = (0..op.dim()).map(|k| 1.0 + 0.1 * (k as f64).sin()).collect();
        let du = op.apply(&u).unwrap()[i2];
        let seg_len = env / 4.0;
        let quad: f64 = (0..4).map(|j| u[j] * seg_len).sum();
        let want = -r_exp / nuc * u[i2] + r_delay / nuc * u[i7] + r_imp / (nuc * env) * quad;
        assert!((du - want).abs() < 1e-13, "{du} vs {want}");
    }

    #[test]
    fn apply_checks_layout_and_is_linear() {
        let op = lgl_op(4);
        assert!(matches!(op.apply(&[1.0]), Err(Error::LayoutMismatch { .. })));
        assert!(op.apply(&vec![0.0; op.dim()]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matrix_market_dump_has_nnz_lines() {
        let op = jak_op(4, 4);
        let mut buf = Vec::new();
        op.write_matrix_market(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), op.matrix.nnz() + 2);
    }

    proptest! {
        #[test]
        fn mass_rate_vanishes(seed in proptest::collection::vec(-1.0f64..1.0, 200)) {
            for op in [lgl_op(5), jak_op(4, 6)] {
                let u: Vec<f64> = (0..op.dim()).map(|k| seed[k % seed.len()] * (1.0 + k as f64 * 1e-3)).collect();
                let lu = op.matrix.mul_vec(&u);
                let s: f64 = lu.iter().sum();
                let un = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                prop_assert!(s.abs() <= 1e-13 * op.matrix.norm_inf() * un * op.dim() as f64);
            }
        }

        #[test]
        fn metzler_sign_on_nonnegative_states(seed in proptest::collection::vec(0.0f64..1.0, 200), zero in 0usize..1000) {
            let op = lgl_op(4);
            let mut u: Vec<f64> = (0..op.dim()).map(|k| seed[k % seed.len()]).collect();
            let k = zero % op.dim();
            u[k] = 0.0;
            prop_assert!(op.apply(&u).unwrap()[k] >= 0.0);
        }
    }
}
