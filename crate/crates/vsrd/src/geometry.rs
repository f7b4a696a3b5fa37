//! Structured polar meshes for disks and annuli, plus a 1D interval mesh.
//!
//! Volume cells are exact annular sectors `[r₋, r₊] × [θ₋, θ₊]` indexed ring
//! by ring (`k = ring · n_θ + sector`). Every boundary circle carries one arc
//! segment per boundary cell, so surface and volume meshes are conforming.
//! On a disk the innermost ring touches the origin through a face of zero
//! length, which therefore carries no flux.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disk { radius: f64 },
    Annulus { r_in: f64, r_out: f64 },
    Interval { length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Fraction of the disk boundary occupied by `Γ₂`.
    #[serde(default = "default_gamma2_fraction")]
    pub gamma2_fraction: f64,
    pub n_r: usize,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

fn default_gamma2_fraction() -> f64 {
    0.25
}

fn default_n_theta() -> usize {
    16
}

impl GeometrySpec {
    pub fn disk(radius: f64, gamma2_fraction: f64, n_r: usize, n_theta: usize) -> Self {
        Self { shape: Shape::Disk { radius }, gamma2_fraction, n_r, n_theta }
    }

    pub fn annulus(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Self {
        Self { shape: Shape::Annulus { r_in, r_out }, gamma2_fraction: default_gamma2_fraction(), n_r, n_theta }
    }

    pub fn interval(length: f64, n: usize) -> Self {
        Self { shape: Shape::Interval { length }, gamma2_fraction: default_gamma2_fraction(), n_r: n, n_theta: 1 }
    }

    /// Same geometry with both resolutions multiplied by `2^level`.
    pub fn refined(&self, level: u32) -> Self {
        let f = 1usize << level;
        let n_theta = if matches!(self.shape, Shape::Interval { .. }) { self.n_theta } else { self.n_theta * f };
        Self { n_r: self.n_r * f, n_theta, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidGeometry(format!("{name} = {v} must be positive")))
            }
        };
        if self.n_r < 4 {
            return Err(Error::InvalidResolution(format!("n_r = {} must be at least 4", self.n_r)));
        }
        match self.shape {
            Shape::Disk { radius } => {
                positive("radius", radius)?;
                if !(self.gamma2_fraction > 0.0 && self.gamma2_fraction < 1.0) {
                    return Err(Error::InvalidGeometry(format!("gamma2_fraction = {} must lie in (0, 1)", self.gamma2_fraction)));
                }
            }
            Shape::Annulus { r_in, r_out } => {
                positive("r_in", r_in)?;
                positive("r_out", r_out)?;
                if r_in >= r_out {
                    return Err(Error::InvalidGeometry(format!("r_in = {r_in} must be smaller than r_out = {r_out}")));
                }
            }
            Shape::Interval { length } => return positive("length", length),
        }
        if self.n_theta < 4 {
            return Err(Error::InvalidResolution(format!("n_theta = {} must be at least 4", self.n_theta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryLabel {
    /// Whole boundary circle of a disk.
    Gamma,
    /// Passive arc of a disk boundary.
    Gamma1,
    /// Active arc of a disk boundary.
    Gamma2,
    /// Outer circle of an annulus (cell membrane).
    Outer,
    /// Inner circle of an annulus (nuclear envelope).
    Inner,
}

impl std::str::FromStr for BoundaryLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(Self::Gamma),
            "gamma1" => Ok(Self::Gamma1),
            "gamma2" => Ok(Self::Gamma2),
            "outer" | "cyt" => Ok(Self::Outer),
            "inner" | "nuc" => Ok(Self::Inner),
            other => Err(Error::UnknownBoundary(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub centroid: [f64; 2],
    pub area: f64,
    pub r_mid: f64,
}

/// Interface between cells `a` and `b`; the diffusive flux from `a` to `b`
/// is `d · transmissibility · (u_a − u_b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Face {
    pub a: usize,
    pub b: usize,
    pub transmissibility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub midpoint: [f64; 2],
    pub length: f64,
    /// Adjacent volume cell.
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circle {
    pub radius: f64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompartmentMesh {
    pub spec: GeometrySpec,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    /// Boundary circle of a disk, or the outer circle of an annulus.
    pub outer: Option<Circle>,
    /// Inner circle of an annulus.
    pub inner: Option<Circle>,
    /// Segment range of `outer` forming `Γ₂` (disk only).
    pub gamma2: Range<usize>,
}

impl CompartmentMesh {
    pub fn build(spec: &GeometrySpec) -> Result<Self> {
        spec.validate()?;
        match spec.shape {
            Shape::Interval { length } => Ok(Self::interval(spec, length)),
            Shape::Disk { radius } => Ok(Self::polar(spec, 0.0, radius)),
            Shape::Annulus { r_in, r_out } => Ok(Self::polar(spec, r_in, r_out)),
        }
    }

    fn interval(spec: &GeometrySpec, length: f64) -> Self {
        let n = spec.n_r;
        let h = length / n as f64;
        let cells = (0..n).map(|i| Cell { centroid: [(i as f64 + 0.5) * h, 0.0], area: h, r_mid: (i as f64 + 0.5) * h }).collect();
        let faces = (0..n - 1).map(|i| Face { a: i, b: i + 1, transmissibility: 1.0 / h }).collect();
        Self { spec: *spec, cells, faces, outer: None, inner: None, gamma2: 0..0 }
    }

    fn polar(spec: &GeometrySpec, r0: f64, r1: f64) -> Self {
        let (nr, nt) = (spec.n_r, spec.n_theta);
        let dr = (r1 - r0) / nr as f64;
        let dt = 2.0 * PI / nt as f64;
        let idx = |i: usize, j: usize| i * nt + j;
        let mut cells = Vec::with_capacity(nr * nt);
        for i in 0..nr {
            let (rm, rp) = (r0 + i as f64 * dr, r0 + (i + 1) as f64 * dr);
            let rc = 0.5 * (rm + rp);
            let area = 0.5 * (rp * rp - rm * rm) * dt;
            for j in 0..nt {
                let th = (j as f64 + 0.5) * dt;
                cells.push(Cell { centroid: [rc * th.cos(), rc * th.sin()], area, r_mid: rc });
            }
        }
        let mut faces = Vec::new();
        for i in 0..nr {
            let rc = cells[idx(i, 0)].r_mid;
            for j in 0..nt {
                faces.push(Face { a: idx(i, j), b: idx(i, (j + 1) % nt), transmissibility: dr / (rc * dt) });
                if i + 1 < nr {
                    let rf = r0 + (i + 1) as f64 * dr;
                    faces.push(Face { a: idx(i, j), b: idx(i + 1, j), transmissibility: rf * dt / dr });
                }
            }
        }
        let circle = |radius: f64, ring: usize| Circle {
            radius,
            segments: (0..nt)
                .map(|j| {
                    let th = (j as f64 + 0.5) * dt;
                    Segment { midpoint: [radius * th.cos(), radius * th.sin()], length: radius * dt, cell: idx(ring, j) }
                })
                .collect(),
        };
        let outer = Some(circle(r1, nr - 1));
        let (inner, gamma2) = match spec.shape {
            Shape::Annulus { .. } => (Some(circle(r0, 0)), 0..0),
            _ => {
                let m = ((spec.gamma2_fraction * nt as f64).round() as usize).clamp(1, nt - 1);
                (None, 0..m)
            }
        };
        Self { spec: *spec, cells, faces, outer, inner, gamma2 }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn volume_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn integrate_volume(&self, u: &[f64]) -> f64 {
        self.cells.iter().zip(u).map(|(c, v)| c.area * v).sum()
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.spec.shape, Shape::Disk { .. })
    }

    pub fn is_annulus(&self) -> bool {
        matches!(self.spec.shape, Shape::Annulus { .. })
    }

    /// Segments of a boundary (or arc) together with their indices on the
    /// underlying circle.
    pub fn boundary(&self, label: BoundaryLabel) -> Result<Vec<(usize, Segment)>> {
        let missing = || Error::UnknownBoundary(format!("{label:?} on {:?} mesh", self.spec.shape));
        let (circle, range) = match label {
            BoundaryLabel::Gamma | BoundaryLabel::Gamma1 | BoundaryLabel::Gamma2 if self.is_disk() => {
                let c = self.outer.as_ref().ok_or_else(missing)?;
                let n = c.segments.len();
                let r = match label {
                    BoundaryLabel::Gamma => 0..n,
                    BoundaryLabel::Gamma2 => self.gamma2.clone(),
                    _ => self.gamma2.end..n,
                };
                (c, r)
            }
            BoundaryLabel::Outer if self.is_annulus() => {
                let c = self.outer.as_ref().ok_or_else(missing)?;
                (c, 0..c.segments.len())
            }
            BoundaryLabel::Inner => {
                let c = self.inner.as_ref().ok_or_else(missing)?;
                (c, 0..c.segments.len())
            }
            _ => return Err(missing()),
        };
        Ok(range.map(|k| (k, circle.segments[k])).collect())
    }

    pub fn boundary_measure(&self, label: BoundaryLabel) -> Result<f64> {
        Ok(self.boundary(label)?.iter().map(|(_, s)| s.length).sum())
    }

    /// Surface faces between consecutive segments of a boundary, with
    /// transmissibility `1/h`. A closed boundary wraps around; an open arc has
    /// no face across its endpoints (zero flux).
    pub fn surface_faces(&self, label: BoundaryLabel, closed: bool) -> Result<Vec<Face>> {
        let segs = self.boundary(label)?;
        let n = segs.len();
        let mut faces = Vec::new();
        let pairs = if closed { n } else { n.saturating_sub(1) };
        for k in 0..pairs {
            let (a, b) = (k, (k + 1) % n);
            if a == b {
                continue;
            }
            let h = 0.5 * (segs[a].1.length + segs[b].1.length);
            faces.push(Face { a, b, transmissibility: 1.0 / h });
        }
        Ok(faces)
    }

    /// Export view with a schema version for external tools.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": crate::SCHEMA_VERSION,
            "spec": self.spec,
            "cells": self.cells,
            "faces": self.faces,
            "outer": self.outer,
            "inner": self.inner,
            "gamma2": [self.gamma2.start, self.gamma2.end],
        })
    }
}

/// Free function form of [`CompartmentMesh::build`].
pub fn build_mesh(spec: &GeometrySpec) -> Result<CompartmentMesh> {
    CompartmentMesh::build(spec)
}

/// Second-difference Laplace–Beltrami operator on a boundary curve, acting on
/// the segment values of that boundary in order.
pub fn surface_laplacian_stencil(mesh: &CompartmentMesh, label: &str, closed: bool) -> Result<CsrMatrix> {
    let label: BoundaryLabel = label.parse()?;
    let segs = mesh.boundary(label)?;
    let faces = mesh.surface_faces(label, closed)?;
    let mut t = Vec::with_capacity(4 * faces.len());
    for f in &faces {
        let (la, lb) = (segs[f.a].1.length, segs[f.b].1.length);
        t.push((f.a, f.b, f.transmissibility / la));
        t.push((f.a, f.a, -f.transmissibility / la));
        t.push((f.b, f.a, f.transmissibility / lb));
        t.push((f.b, f.b, -f.transmissibility / lb));
    }
    Ok(CsrMatrix::from_triplets(segs.len(), segs.len(), &t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn disk_area_and_circumference_are_exact() {
        let m = build_mesh(&GeometrySpec::disk(1.0, 0.25, 8, 16)).unwrap();
        assert!(rel(m.volume_measure(), PI) < 1e-10);
        assert!(rel(m.boundary_measure(BoundaryLabel::Gamma).unwrap(), 2.0 * PI) < 1e-10);
        assert_eq!(m.boundary(BoundaryLabel::Gamma2).unwrap().len(), 4);
        assert_eq!(m.boundary(BoundaryLabel::Gamma1).unwrap().len(), 12);
    }

    #[test]
    fn annulus_area_is_exact() {
        for (nr, nt) in [(4, 4), (7, 13), (32, 32)] {
            let m = build_mesh(&GeometrySpec::annulus(0.5, 1.0, nr, nt)).unwrap();
            assert!(rel(m.volume_measure(), 0.75 * PI) < 1e-10);
            assert!(rel(m.boundary_measure(BoundaryLabel::Inner).unwrap(), PI) < 1e-10);
            assert!(rel(m.boundary_measure(BoundaryLabel::Outer).unwrap(), 2.0 * PI) < 1e-10);
        }
    }

    #[test]
    fn segments_touch_boundary_cells() {
        let m = build_mesh(&GeometrySpec::annulus(0.3, 1.0, 5, 8)).unwrap();
        for (_, s) in m.boundary(BoundaryLabel::Inner).unwrap() {
            assert!(s.cell < 8);
        }
        for (_, s) in m.boundary(BoundaryLabel::Outer).unwrap() {
            assert!(s.cell >= 32);
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(build_mesh(&GeometrySpec::annulus(1.0, 0.5, 8, 8)), Err(Error::InvalidGeometry(_))));
        assert!(matches!(build_mesh(&GeometrySpec::disk(1.0, 0.25, 3, 8)), Err(Error::InvalidResolution(_))));
        assert!(matches!(build_mesh(&GeometrySpec::disk(1.0, 1.0, 8, 8)), Err(Error::InvalidGeometry(_))));
        let m = build_mesh(&GeometrySpec::disk(1.0, 0.5, 8, 8)).unwrap();
        assert!(matches!(surface_laplacian_stencil(&m, "inner", true), Err(Error::UnknownBoundary(_))));
        assert!(matches!(surface_laplacian_stencil(&m, "bogus", true), Err(Error::UnknownBoundary(_))));
    }

    #[test]
    fn stencil_annihilates_constants() {
        let m = build_mesh(&GeometrySpec::disk(2.0, 0.3, 6, 20)).unwrap();
        for (label, closed) in [("gamma", true), ("gamma2", false), ("gamma1", false)] {
            let l = surface_laplacian_stencil(&m, label, closed).unwrap();
            let y = l.mul_vec(&vec![3.0; l.nrows()]);
            assert!(y.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn closed_stencil_has_cosine_eigenpair() {
        let radius = 1.7;
        let mut errs = Vec::new();
        for nt in [32usize, 64] {
            let m = build_mesh(&GeometrySpec::disk(radius, 0.25, 4, nt)).unwrap();
            let l = surface_laplacian_stencil(&m, "gamma", true).unwrap();
            let dt = 2.0 * PI / nt as f64;
            let u: Vec<f64> = (0..nt).map(|j| ((j as f64 + 0.5) * dt).cos()).collect();
            let y = l.mul_vec(&u);
            let err = y.iter().zip(&u).map(|(a, b)| (a + b / (radius * radius)).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 1e-2);
        assert!(errs[0] / errs[1] > 3.5);
    }

    #[test]
    fn open_stencil_on_linear_function() {
        let m = build_mesh(&GeometrySpec::disk(1.0, 0.5, 4, 16)).unwrap();
        let l = surface_laplacian_stencil(&m, "gamma2", false).unwrap();
        let n = l.nrows();
        let h = 2.0 * PI / 16.0;
        let u: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
        let y = l.mul_vec(&u);
        for v in &y[1..n - 1] {
            assert!(v.abs() < 1e-12);
        }
        // mirror ghost at each end: one-sided difference divided by h
        assert!((y[0] - 1.0 / h).abs() < 1e-12);
        assert!((y[n - 1] + 1.0 / h).abs() < 1e-12);
    }

    #[test]
    fn row_sums_vanish() {
        let m = build_mesh(&GeometrySpec::disk(1.0, 0.4, 5, 10)).unwrap();
        for (label, closed) in [("gamma", true), ("gamma2", false)] {
            let l = surface_laplacian_stencil(&m, label, closed).unwrap();
            for i in 0..l.nrows() {
                assert!(l.row(i).map(|(_, v)| v).sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_is_second_order() {
        // ∫ r² over the unit disk is π/2; the midpoint rule error shrinks like h².
        let err = |n: usize| {
            let m = build_mesh(&GeometrySpec::disk(1.0, 0.25, n, n)).unwrap();
            let f: Vec<f64> = m.cells.iter().map(|c| c.centroid[0].powi(2) + c.centroid[1].powi(2)).collect();
            (m.integrate_volume(&f) - PI / 2.0).abs()
        };
        let (e1, e2) = (err(8), err(16));
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn interval_mesh() {
        let m = build_mesh(&GeometrySpec::interval(2.0, 10)).unwrap();
        assert!(rel(m.volume_measure(), 2.0) < 1e-14);
        assert_eq!(m.faces.len(), 9);
        assert!(m.outer.is_none());
    }

    #[test]
    fn refinement_doubles_resolution() {
        let s = GeometrySpec::disk(1.0, 0.25, 8, 16).refined(2);
        assert_eq!((s.n_r, s.n_theta), (32, 64));
    }
}
