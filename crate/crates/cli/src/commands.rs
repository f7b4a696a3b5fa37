use serde_json::json;
use vsrd::certifier::{certify, optimal_eed_rate, RateCertificate};
use vsrd::discretization::{assemble, CoupledOperator};
use vsrd::entropy::{self, EntropyReport};
use vsrd::equilibrium::{equilibrium_kernel, equilibrium_picard, weighted_l2_distance, EquilibriumProfile, PicardOptions};
use vsrd::geometry::{build_mesh, CompartmentMesh};
use vsrd::network::{check_weak_reversibility, gap_constant_constructive, network_equilibrium, ReactionNetwork};
use vsrd::timestepper::{run_with, Scheme};
use vsrd::SCHEMA_VERSION;

use crate::config::{load_network, EquilibriumMethod, RunConfig};
use crate::error::CliError;
use crate::output::{write_gnuplot, write_trajectory, OutDir};
use crate::Common;

/// Largest system on which the exact discrete rate is computed densely.
const EED_CHECK_MAX_DIM: usize = 1500;
const SOUNDNESS_TOL: f64 = 1e-6;

struct Setup {
    cfg: RunConfig,
    mesh: CompartmentMesh,
    op: CoupledOperator,
}

fn setup(common: &Common, level_offset: u32) -> Result<Setup, CliError> {
    let cfg = RunConfig::load(&common.config)?;
    let spec = cfg.geometry.refined(common.mesh_level + level_offset);
    let mesh = build_mesh(&spec)?;
    let op = assemble(&cfg.model, &mesh)?;
    log::info!("assembled {} unknowns on {} cells", op.dim(), mesh.n_cells());
    Ok(Setup { cfg, mesh, op })
}

fn solve_equilibrium(s: &Setup, mass: f64) -> Result<(EquilibriumProfile, Option<f64>), CliError> {
    let picard = |initial: Option<Vec<f64>>| equilibrium_picard(&s.op, mass, &PicardOptions { initial, ..Default::default() });
    Ok(match s.cfg.equilibrium.method {
        EquilibriumMethod::Kernel => (equilibrium_kernel(&s.op, mass)?, None),
        EquilibriumMethod::Picard => (picard(None)?, None),
        EquilibriumMethod::Both => {
            let k = equilibrium_kernel(&s.op, mass)?;
            let p = picard(None)?;
            let d = weighted_l2_distance(&s.op, &k.state, &p.state);
            log::info!("kernel vs Picard distance {d:e}");
            (k, Some(d))
        }
    })
}

pub fn run(common: &Common) -> Result<(), CliError> {
    let s = setup(common, 0)?;
    let time = s.cfg.time()?;
    let u0 = s.cfg.initial.build(&s.op, common.seed)?;
    let mass0 = s.op.total_mass(&u0);
    let (eq, _) = solve_equilibrium(&s, mass0)?;
    let cert = if s.cfg.check_certificate { Some(certify(&s.op, &eq, &s.cfg.certify)?) } else { None };

    let mut rows: Vec<EntropyReport> = Vec::new();
    run_with(&s.op, &u0, &time, |t, u| {
        rows.push(entropy::report(&s.op, t, u, &eq)?);
        Ok(())
    })?;
    let e0 = rows[0].entropy;
    let drift = rows.iter().map(|r| (r.mass - mass0).abs() / mass0).fold(0.0, f64::max);
    let floor = 1e-13 * e0;
    let monotone = rows.windows(2).all(|w| w[1].entropy < w[0].entropy || w[0].entropy <= floor);
    let fit = entropy::fit_decay_rate(&rows).ok();

    let mut soundness = None;
    if let Some(c) = &cert {
        // implicit Euler satisfies E_{n+1}(1 + λ dt) ≤ E_n exactly
        let rate = c.lambda - SOUNDNESS_TOL;
        let bound = |t: f64| match time.scheme {
            Scheme::ImplicitEuler => e0 * (1.0 + rate * time.dt).powf(-t / time.dt),
            Scheme::CrankNicolson => e0 * (-rate * t).exp(),
        };
        let worst = rows.iter().map(|r| r.entropy / bound(r.t)).fold(0.0, f64::max);
        soundness = Some(json!({ "lambda": c.lambda, "worst_ratio_to_bound": worst, "ok": worst <= 1.0 + 1e-9 }));
    }

    let out = OutDir::create(&common.out)?;
    out.write_with("trajectory.csv", |w| write_trajectory(w, &rows, mass0))?;
    out.write_with("decay.gp", |w| write_gnuplot(w, "trajectory.csv", e0, cert.as_ref().map(|c| c.lambda)))?;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "run",
        "model": s.cfg.model.kind(),
        "mesh": { "spec": s.mesh.spec, "cells": s.mesh.n_cells(), "unknowns": s.op.dim() },
        "mesh_level": common.mesh_level,
        "seed": common.seed,
        "time": time,
        "steps": time.n_steps(),
        "initial_entropy": e0,
        "final_entropy": rows.last().map(|r| r.entropy),
        "max_relative_mass_drift": drift,
        "entropy_decreasing": monotone,
        "decay_fit": fit,
        "certificate_check": soundness,
    });
    out.write_json("summary.json", &summary)?;
    if let Some(v) = &soundness {
        if v["ok"] == false {
            return Err(CliError::Soundness(format!("entropy exceeds the certified envelope by a factor {}", v["worst_ratio_to_bound"])));
        }
    }
    Ok(())
}

pub fn equilibrium(common: &Common) -> Result<(), CliError> {
    let s = setup(common, 0)?;
    let u0 = s.cfg.initial.build(&s.op, common.seed)?;
    let (eq, distance) = solve_equilibrium(&s, s.op.total_mass(&u0))?;
    let mut v = eq.to_json(&s.op);
    v["kernel_picard_distance"] = json!(distance);
    OutDir::create(&common.out)?.write_json("equilibrium.json", &v)?;
    Ok(())
}

/// Certificate on one level, checked against the exact discrete rate when
/// the system is small enough for a dense eigensolve.
fn certify_level(common: &Common, offset: u32) -> Result<(Setup, RateCertificate, Option<f64>), CliError> {
    let s = setup(common, offset)?;
    let u0 = s.cfg.initial.build(&s.op, common.seed)?;
    let (eq, _) = solve_equilibrium(&s, s.op.total_mass(&u0))?;
    let c = certify(&s.op, &eq, &s.cfg.certify)?;
    let mut exact = None;
    if s.op.dim() <= EED_CHECK_MAX_DIM {
        let e = optimal_eed_rate(&s.op, &eq.state)?;
        if c.lambda > e * (1.0 + 1e-9) {
            return Err(CliError::Soundness(format!("certified rate {} exceeds the exact discrete rate {e}", c.lambda)));
        }
        exact = Some(e);
    }
    Ok((s, c, exact))
}

pub fn certify_cmd(common: &Common) -> Result<(), CliError> {
    let (base, cert, exact) = certify_level(common, 0)?;
    let mut table = vec![row(common.mesh_level, &base, &cert, exact)];
    for offset in 1..3 {
        let (s, c, e) = certify_level(common, offset)?;
        table.push(row(common.mesh_level + offset, &s, &c, e));
    }
    let out = OutDir::create(&common.out)?;
    let mut v = cert.to_json();
    v["exact_discrete_rate"] = json!(exact);
    out.write_json("certificate.json", &v)?;
    out.write_json("refinement.json", &json!({ "schema_version": SCHEMA_VERSION, "levels": table }))?;
    println!("lambda = {:.6e}", cert.lambda);
    Ok(())
}

fn row(level: u32, s: &Setup, c: &RateCertificate, exact: Option<f64>) -> serde_json::Value {
    json!({
        "mesh_level": level,
        "exact_discrete_rate": exact,
        "n_r": s.mesh.spec.n_r,
        "n_theta": s.mesh.spec.n_theta,
        "lambda": c.lambda,
        "gap": c.gap.value,
        "poincare": c.poincare,
        "trace": c.trace,
    })
}

pub fn network_gap(common: &Common) -> Result<(), CliError> {
    let file = load_network(&common.config)?;
    let net = ReactionNetwork::from_file(&file)?;
    let rev = check_weak_reversibility(&net);
    let equilibrium = network_equilibrium(&net, 1.0)?;
    let weights = file.weights.clone().unwrap_or_else(|| equilibrium.clone());
    let gap = gap_constant_constructive(&net, &weights)?;
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "network": file,
        "weakly_reversible": rev.weakly_reversible,
        "components": rev.components,
        "equilibrium": equilibrium,
        "weights": weights,
        "gap": gap,
    });
    OutDir::create(&common.out)?.write_json("network.json", &v)?;
    println!("eta = {:.6e} (optimal {:.6e})", gap.eta, gap.eta_optimal);
    Ok(())
}

pub fn mesh_export(common: &Common) -> Result<(), CliError> {
    let s = setup(common, 0)?;
    let out = OutDir::create(&common.out)?;
    out.write_json("mesh.json", &s.mesh.to_json())?;
    out.write_with("operator.mtx", |w| s.op.write_matrix_market(w))?;
    Ok(())
}
