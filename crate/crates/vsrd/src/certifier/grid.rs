//! Deterministic argmax of the Lgl rate over a tensor grid of `ε`'s.
//!
//! The rate is a minimum of terms that depend on few `ε`'s each, so the
//! terms are tabulated once and the loops only take minima. Ties keep the
//! lexicographically first tuple.

use rayon::prelude::*;

use super::lgl::{Epsilons, LglInputs};

fn feasible_or(v: f64, ok: bool) -> f64 {
    if ok {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Tuple `(ε₁, ε₂, ε₃, ε₄, ε₆)`.
pub(crate) fn search_standard(inp: &LglInputs, v: &[f64]) -> Option<Epsilons> {
    let n = v.len();
    let h = 0.5 * inp.k0;
    let mut t12 = vec![f64::NEG_INFINITY; n * n];
    for i1 in 0..n {
        for i2 in 0..n {
            let (a, b) = (inp.eta1(v[i1], v[i2]), inp.eta2(v[i1], v[i2]));
            t12[i1 * n + i2] = feasible_or(a.min(b).min(h * v[i1]).min(h * v[i2]), a > 0.0 && b > 0.0);
        }
    }
    let mut t346 = vec![f64::NEG_INFINITY; n * n * n];
    let mut omega = vec![0.0; n * n * n];
    for i3 in 0..n {
        for i4 in 0..n {
            for i6 in 0..n {
                let (e3, e4, e6) = (v[i3], v[i4], v[i6]);
                let (a, b) = (inp.eta3(e3, e4, e6), inp.eta4(e6, None));
                let ok = a > 0.0 && b > 0.0 && inp.trace_l_margin(e3, e4) >= 0.0;
                t346[(i3 * n + i4) * n + i6] = feasible_or(a.min(b).min(h * e3).min(h * e4).min(h * e6), ok);
            }
        }
    }
    for i2 in 0..n {
        for i3 in 0..n {
            for i6 in 0..n {
                omega[(i2 * n + i3) * n + i6] = h * (2.0 * inp.omega_normalized(v[i2], v[i3], v[i6]));
            }
        }
    }
    let per_i1: Vec<(f64, [usize; 5])> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let mut best = (f64::NEG_INFINITY, [usize::MAX; 5]);
            for i2 in 0..n {
                let t = t12[i1 * n + i2];
                if !(t > best.0) {
                    continue;
                }
                for i3 in 0..n {
                    for i4 in 0..n {
                        let row = &t346[(i3 * n + i4) * n..(i3 * n + i4 + 1) * n];
                        let orow = &omega[(i2 * n + i3) * n..(i2 * n + i3 + 1) * n];
                        for i6 in 0..n {
                            let val = t.min(row[i6]).min(orow[i6]);
                            if val > best.0 {
                                best = (val, [i1, i2, i3, i4, i6]);
                            }
                        }
                    }
                }
            }
            best
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, [usize::MAX; 5]);
    for b in per_i1 {
        if b.0 > best.0 {
            best = b;
        }
    }
    let [i1, i2, i3, i4, i6] = best.1;
    (best.0 > 0.0).then(|| Epsilons { e1: v[i1], e2: v[i2], e3: v[i3], e4: v[i4], e5: None, e6: v[i6] })
}

/// Sharp mode separates into `(ε₁, ε₂)` and `(ε₃, ε₄, ε₆)` for each `ε₅`;
/// ties keep the first maximizer of each factor.
pub(crate) fn search_sharp(inp: &LglInputs, v: &[f64]) -> Option<Epsilons> {
    let n = v.len();
    let k = inp.k0;
    let mut f = (f64::NEG_INFINITY, (0, 0));
    for i1 in 0..n {
        for i2 in 0..n {
            let (a, b) = (inp.eta1(v[i1], v[i2]), inp.eta2(v[i1], v[i2]));
            let val = feasible_or(a.min(b).min(k * v[i1]).min(k * v[i2]), a > 0.0 && b > 0.0);
            if val > f.0 {
                f = (val, (i1, i2));
            }
        }
    }
    let per_i5: Vec<(f64, [usize; 3])> = (0..n)
        .into_par_iter()
        .map(|i5| {
            let e5 = v[i5];
            let mut g = (f64::NEG_INFINITY, [usize::MAX; 3]);
            if !(inp.trace_p_margin(e5) >= 0.0) {
                return g;
            }
            for i3 in 0..n {
                for i4 in 0..n {
                    if !(inp.trace_l_margin(v[i3], v[i4]) >= 0.0) {
                        continue;
                    }
                    for i6 in 0..n {
                        let (a, b) = (inp.eta3(v[i3], v[i4], v[i6]), inp.eta4(v[i6], Some(e5)));
                        let val = feasible_or(a.min(b).min(k * v[i3]).min(k * v[i4]).min(k * v[i6]).min(k * e5), a > 0.0 && b > 0.0);
                        if val > g.0 {
                            g = (val, [i3, i4, i6]);
                        }
                    }
                }
            }
            g
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0usize, [0usize; 3]);
    for (i5, g) in per_i5.into_iter().enumerate() {
        let val = f.0.min(g.0);
        if val > best.0 {
            best = (val, i5, g.1);
        }
    }
    let (i1, i2) = f.1;
    let [i3, i4, i6] = best.2;
    (best.0 > 0.0).then(|| Epsilons { e1: v[i1], e2: v[i2], e3: v[i3], e4: v[i4], e5: Some(v[best.1]), e6: v[i6] })
}
