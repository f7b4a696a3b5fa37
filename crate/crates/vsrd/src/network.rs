//! First-order reaction networks: reversibility, equilibria and the
//! finite-dimensional gap constant.
//!
//! A network on `N` species is stored as a matrix `A` where `a_ij` (i ≠ j) is
//! the rate from species `j` to species `i`. The diagonal is always derived so
//! that every column sums to zero, which makes `Σ c_i` conserved by `c' = Ac`.
//!
//! The gap inequality reads
//!
//! ```text
//! Σ_{i<j} (a_ij + a_ji)(c_i − c_j)² ≥ η Σ c_i²   for all c with Σ α_i c_i = 0.
//! ```
//!
//! [`gap_constant_optimal`] returns the best `η` (a restricted eigenvalue) and
//! [`gap_constant_constructive`] the explicit chain bound used by the
//! certifiers.

use std::collections::VecDeque;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReactionNetwork {
    species: Vec<String>,
    rates: Vec<Vec<f64>>,
}

/// On-disk network description. Diagonal entries of `rates` are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub species: Vec<String>,
    pub rates: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl ReactionNetwork {
    /// Builds a network from a full rate matrix; the diagonal is recomputed.
    pub fn new(rates: Vec<Vec<f64>>) -> Result<Self> {
        let names = (0..rates.len()).map(|i| format!("c{i}")).collect();
        Self::with_species(names, rates)
    }

    pub fn with_species(species: Vec<String>, mut rates: Vec<Vec<f64>>) -> Result<Self> {
        let n = rates.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("no species".into()));
        }
        if species.len() != n {
            return Err(Error::InvalidNetwork(format!("{} names for {n} species", species.len())));
        }
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidNetwork(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &a) in row.iter().enumerate() {
                if i != j && !(a.is_finite() && a >= 0.0) {
                    return Err(Error::InvalidNetwork(format!("rate a[{i}][{j}] = {a} must be finite and nonnegative")));
                }
            }
        }
        for j in 0..n {
            let out: f64 = (0..n).filter(|&i| i != j).map(|i| rates[i][j]).sum();
            rates[j][j] = -out;
        }
        Ok(Self { species, rates })
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self> {
        Self::with_species(file.species.clone(), file.rates.clone())
    }

    pub fn from_json(s: &str) -> Result<(Self, Option<Vec<f64>>)> {
        let f: NetworkFile = serde_json::from_str(s).map_err(|e| Error::InvalidNetwork(e.to_string()))?;
        Ok((Self::from_file(&f)?, f.weights))
    }

    pub fn n_species(&self) -> usize {
        self.rates.len()
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    /// `a_ij`, the rate from `j` to `i` (or the derived diagonal when `i == j`).
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i][j]
    }

    pub fn matrix(&self) -> Mat<f64> {
        let n = self.n_species();
        Mat::from_fn(n, n, |i, j| self.rates[i][j])
    }

    /// Symmetrized edge weight `a_ij + a_ji`.
    pub fn symmetric_rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.rates[i][j] + self.rates[j][i]
        }
    }

    /// `Σ_{i<j} (a_ij + a_ji)(c_i − c_j)²`.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        let n = self.n_species();
        let mut q = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = c[i] - c[j];
                q += self.symmetric_rate(i, j) * d * d;
            }
        }
        q
    }

    fn successors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_species()).filter(move |&i| i != j && self.rates[i][j] > 0.0)
    }
}

/// Outcome of the reversibility check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reversibility {
    pub weakly_reversible: bool,
    /// Strongly connected components, each sorted, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
}

/// Tarjan's algorithm on the positive-rate digraph (`j → i` when `a_ij > 0`).
fn strongly_connected_components(net: &ReactionNetwork) -> Vec<Vec<usize>> {
    struct State {
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(net: &ReactionNetwork, v: usize, s: &mut State) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for w in net.successors(v).collect::<Vec<_>>() {
            match s.index[w] {
                None => {
                    visit(net, w, s);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().unwrap();
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }
    let n = net.n_species();
    let mut s = State { index: vec![None; n], low: vec![0; n], on_stack: vec![false; n], stack: Vec::new(), next: 0, out: Vec::new() };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(net, v, &mut s);
        }
    }
    s.out.sort_by_key(|c| c[0]);
    s.out
}

/// A network is weakly reversible when every reaction lies on a directed cycle.
pub fn check_weak_reversibility(net: &ReactionNetwork) -> Reversibility {
    let components = strongly_connected_components(net);
    let mut comp_of = vec![0; net.n_species()];
    for (k, c) in components.iter().enumerate() {
        for &v in c {
            comp_of[v] = k;
        }
    }
    let weakly_reversible = (0..net.n_species()).all(|j| net.successors(j).all(|i| comp_of[i] == comp_of[j]));
    Reversibility { weakly_reversible, components }
}

fn require_single_component(net: &ReactionNetwork) -> Result<()> {
    let r = check_weak_reversibility(net);
    if r.components.len() != 1 {
        return Err(Error::DisconnectedNetwork(r.components.len()));
    }
    Ok(())
}

fn check_weights(net: &ReactionNetwork, alpha: &[f64]) -> Result<()> {
    if alpha.len() != net.n_species() {
        return Err(Error::InvalidParameter(format!("{} weights for {} species", alpha.len(), net.n_species())));
    }
    if alpha.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
        return Err(Error::InvalidParameter("weights must be positive".into()));
    }
    Ok(())
}

/// The positive equilibrium `c∞` with `A c∞ = 0` and `Σ c∞ = mass`.
pub fn network_equilibrium(net: &ReactionNetwork, mass: f64) -> Result<Vec<f64>> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {mass} must be positive")));
    }
    let n = net.n_species();
    let (s, v) = dense::svd_right(&net.matrix())?;
    let scale = s.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let tol = scale * 1e-12 * n as f64;
    let dim = s.iter().filter(|&&x| x <= tol).count();
    if dim != 1 {
        return Err(Error::SingularNetwork(dim));
    }
    let k: Vec<f64> = (0..n).map(|i| v[(i, n - 1)]).collect();
    let total: f64 = k.iter().sum();
    if total == 0.0 {
        return Err(Error::NonPositiveKernel);
    }
    let c: Vec<f64> = k.iter().map(|x| x / total * mass).collect();
    let cmax = c.iter().cloned().fold(0.0, f64::max);
    if c.iter().any(|&x| x <= 1e-13 * cmax) {
        return Err(Error::NonPositiveKernel);
    }
    Ok(c)
}

/// Graph Laplacian of the symmetrized rates, so that `cᵀ L c` equals
/// [`ReactionNetwork::quadratic_form`].
pub fn symmetric_laplacian(net: &ReactionNetwork) -> Mat<f64> {
    let n = net.n_species();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let s = net.symmetric_rate(i, j);
                l[(i, j)] = -s;
                l[(i, i)] += s;
            }
        }
    }
    l
}

/// Largest `η` with `Σ_{i<j}(a_ij+a_ji)(c_i−c_j)² ≥ η|c|²` on `αᵀc = 0`.
pub fn gap_constant_optimal(net: &ReactionNetwork, alpha: &[f64]) -> Result<f64> {
    check_weights(net, alpha)?;
    let n = net.n_species();
    if n == 1 {
        return Err(Error::InvalidNetwork("a single species leaves only c = 0 on the constraint plane".into()));
    }
    require_single_component(net)?;
    let q = dense::orthogonal_complement(alpha);
    let l = symmetric_laplacian(net);
    let restricted = q.transpose() * &l * &q;
    let sym = Mat::from_fn(n - 1, n - 1, |i, j| 0.5 * (restricted[(i, j)] + restricted[(j, i)]));
    let eta = dense::sym_eigenvalues(&sym)?[0];
    if !(eta > 0.0) {
        return Err(Error::DisconnectedNetwork(1));
    }
    Ok(eta)
}

/// The path used to bound `(c_i − c_j)²` by edge differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub from: usize,
    pub to: usize,
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructiveGap {
    /// `min(eta_chain, eta_optimal)`.
    pub eta: f64,
    /// The chain bound before clamping.
    pub eta_chain: f64,
    pub eta_optimal: f64,
    pub zeta: f64,
    /// Edge `(i, j)` attaining the minimum of `s_ij / load_ij`.
    pub bottleneck: (usize, usize),
    pub chains: Vec<Chain>,
}

fn shortest_path(net: &ReactionNetwork, from: usize, to: usize) -> Option<Vec<usize>> {
    let n = net.n_species();
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for w in 0..n {
            if !seen[w] && net.symmetric_rate(v, w) > 0.0 {
                seen[w] = true;
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Explicit chain bound for the gap constant.
///
/// Each pair `(i, j)` is joined by a shortest path of length `len` in the
/// support graph, and Cauchy–Schwarz gives `(c_i − c_j)² ≤ len Σ_path Δ²`.
/// Summing over pairs, every edge `e` carries `load_e = Σ len` over the pairs
/// routed through it, so the left side dominates `ζ Σ_{i<j}(c_i − c_j)²` with
/// `ζ = min_e s_e / load_e`. On the constraint plane
/// `Σ_{i<j}(c_i − c_j)² ≥ (Σα)² / (2(N−1) max α²) |c|²`.
pub fn gap_constant_constructive(net: &ReactionNetwork, alpha: &[f64]) -> Result<ConstructiveGap> {
    let eta_optimal = gap_constant_optimal(net, alpha)?;
    let n = net.n_species();
    let mut load = vec![vec![0.0f64; n]; n];
    let mut chains = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let path = shortest_path(net, i, j).ok_or(Error::DisconnectedNetwork(2))?;
            let len = (path.len() - 1) as f64;
            for w in path.windows(2) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                load[a][b] += len;
            }
            chains.push(Chain { from: i, to: j, path });
        }
    }
    let mut zeta = f64::INFINITY;
    let mut bottleneck = (0, 0);
    for a in 0..n {
        for b in a + 1..n {
            if load[a][b] > 0.0 {
                let z = net.symmetric_rate(a, b) / load[a][b];
                if z < zeta {
                    zeta = z;
                    bottleneck = (a, b);
                }
            }
        }
    }
    let sum_alpha: f64 = alpha.iter().sum();
    let max_alpha = alpha.iter().cloned().fold(0.0, f64::max);
    let eta_chain = zeta * sum_alpha * sum_alpha / (2.0 * (n as f64 - 1.0) * max_alpha * max_alpha);
    Ok(ConstructiveGap { eta: eta_chain.min(eta_optimal), eta_chain, eta_optimal, zeta, bottleneck, chains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn net(rates: Vec<Vec<f64>>) -> ReactionNetwork {
        ReactionNetwork::new(rates).unwrap()
    }

    fn reachable(adj: &[Vec<bool>], from: usize) -> Vec<bool> {
        let n = adj.len();
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for v in 0..n {
                if seen[v] {
                    for w in 0..n {
                        if adj[v][w] && !seen[w] {
                            seen[w] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        seen
    }

    #[test]
    fn scc_matches_reachability_on_all_small_digraphs() {
        for n in 1..=4usize {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
            for mask in 0u32..(1 << pairs.len()) {
                let mut rates = vec![vec![0.0; n]; n];
                let mut adj = vec![vec![false; n]; n];
                for (k, &(i, j)) in pairs.iter().enumerate() {
                    if mask & (1 << k) != 0 {
                        rates[i][j] = 1.0;
                        adj[j][i] = true;
                    }
                }
                let r = check_weak_reversibility(&net(rates));
                let reach: Vec<Vec<bool>> = (0..n).map(|v| reachable(&adj, v)).collect();
                for v in 0..n {
                    for w in 0..n {
                        let same = r.components.iter().any(|c| c.contains(&v) && c.contains(&w));
                        assert_eq!(same, reach[v][w] && reach[w][v]);
                    }
                }
                let oracle = (0..n).all(|j| (0..n).all(|i| !adj[j][i] || reach[i][j]));
                assert_eq!(r.weakly_reversible, oracle);
            }
        }
    }

    #[test]
    fn reversibility_examples() {
        let r = check_weak_reversibility(&net(vec![vec![0.0, 1.0], vec![1.0, 0.0]]));
        assert!(r.weakly_reversible);
        assert_eq!(r.components.len(), 1);
        assert!(!check_weak_reversibility(&net(vec![vec![0.0, 0.0], vec![1.0, 0.0]])).weakly_reversible);
        // L, P, l, p with L->P, P->L, L->l, l->L, l->p, p->P
        let mut a = vec![vec![0.0; 4]; 4];
        for (to, from) in [(1, 0), (0, 1), (2, 0), (0, 2), (3, 2), (1, 3)] {
            a[to][from] = 1.0;
        }
        let r = check_weak_reversibility(&net(a));
        assert!(r.weakly_reversible);
        assert_eq!(r.components, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn diagonal_is_recomputed() {
        let n = net(vec![vec![7.0, 1.0], vec![2.0, 7.0]]);
        assert_eq!(n.rate(0, 0), -2.0);
        assert_eq!(n.rate(1, 1), -1.0);
    }

    #[test]
    fn equilibrium_examples() {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(&network_equilibrium(&net(vec![vec![0.0, 1.0], vec![1.0, 0.0]]), 2.0).unwrap(), &[1.0, 1.0]));
        let three = net(vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert!(close(&network_equilibrium(&three, 3.0).unwrap(), &[1.0, 1.0, 1.0]));
        assert!(close(&network_equilibrium(&net(vec![vec![0.0, 1.0], vec![2.0, 0.0]]), 3.0).unwrap(), &[1.0, 2.0]));
    }

    #[test]
    fn equilibrium_errors() {
        let one_way = net(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(network_equilibrium(&one_way, 1.0), Err(Error::NonPositiveKernel));
        let split = net(vec![vec![0.0; 2]; 2]);
        assert_eq!(network_equilibrium(&split, 1.0), Err(Error::SingularNetwork(2)));
    }

    #[test]
    fn optimal_gap_of_two_cycle_is_four() {
        let g = gap_constant_optimal(&net(vec![vec![0.0, 1.0], vec![1.0, 0.0]]), &[1.0, 1.0]).unwrap();
        assert!((g - 4.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_gap_matches_laplacian_spectrum_for_unit_weights() {
        let three = net(vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let g = gap_constant_optimal(&three, &[1.0; 3]).unwrap();
        let ev = dense::sym_eigenvalues(&symmetric_laplacian(&three)).unwrap();
        assert!(ev[0].abs() < 1e-12);
        assert!((g - ev[1]).abs() < 1e-12);
        assert!((g - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constructive_gap_examples() {
        let two = net(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let c = gap_constant_constructive(&two, &[1.0, 1.0]).unwrap();
        assert!((c.zeta - 2.0).abs() < 1e-15);
        assert!(c.eta <= c.eta_optimal + 1e-10);
        assert_eq!(c.chains, vec![Chain { from: 0, to: 1, path: vec![0, 1] }]);

        let chain = net(vec![vec![0.0, 1.0, 0.0], vec![2.0, 0.0, 1.5], vec![0.0, 0.5, 0.0]]);
        let c = gap_constant_constructive(&chain, &[1.0, 2.0, 0.5]).unwrap();
        assert!(c.eta > 0.0 && c.eta_chain <= c.eta_optimal + 1e-10);
        assert_eq!(c.chains[1].path, vec![0, 1, 2]);
    }

    #[test]
    fn single_species_is_invalid() {
        let one = net(vec![vec![0.0]]);
        assert!(matches!(gap_constant_optimal(&one, &[1.0]), Err(Error::InvalidNetwork(_))));
        assert!(matches!(gap_constant_constructive(&one, &[1.0]), Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn multiple_components_are_rejected() {
        let one_way = net(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(gap_constant_optimal(&one_way, &[1.0, 1.0]), Err(Error::DisconnectedNetwork(2)));
    }

    #[test]
    fn json_round_trip() {
        let (n, w) = ReactionNetwork::from_json(r#"{"species":["a","b"],"rates":[[9,1],[2,9]],"weights":[1,3]}"#).unwrap();
        assert_eq!(n.species(), &["a".to_string(), "b".to_string()]);
        assert_eq!(n.rate(1, 0), 2.0);
        assert_eq!(n.rate(0, 0), -2.0);
        assert_eq!(w, Some(vec![1.0, 3.0]));
        assert!(ReactionNetwork::from_json(r#"{"species":["a"],"rates":[[0,1]]}"#).is_err());
    }

    fn strongly_connected() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (2usize..=6).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.05f64..3.0, n),
                proptest::collection::vec(proptest::option::weighted(0.4, 0.05f64..3.0), n * n),
                proptest::collection::vec(0.1f64..5.0, n),
            )
                .prop_map(move |(cycle, extra, alpha)| {
                    let mut a = vec![vec![0.0; n]; n];
                    for k in 0..n {
                        a[(k + 1) % n][k] += cycle[k];
                    }
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                if let Some(x) = extra[i * n + j] {
                                    a[i][j] += x;
                                }
                            }
                        }
                    }
                    (a, alpha)
                })
        })
    }

    proptest! {
        #[test]
        fn gaps_bound_the_quadratic_form((rates, alpha) in strongly_connected(), seed in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let n = net(rates);
            let g = gap_constant_constructive(&n, &alpha).unwrap();
            prop_assert!(g.eta > 0.0);
            prop_assert!(g.eta_chain <= g.eta_optimal * (1.0 + 1e-10) + 1e-10);
            let k = n.n_species();
            let mut c: Vec<f64> = seed[..k].to_vec();
            let aa: f64 = alpha.iter().map(|a| a * a).sum();
            let proj: f64 = c.iter().zip(&alpha).map(|(x, a)| x * a).sum::<f64>() / aa;
            for (x, a) in c.iter_mut().zip(&alpha) { *x -= proj * a; }
            let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-6);
            for x in c.iter_mut() { *x /= norm; }
            let q = n.quadratic_form(&c);
            prop_assert!(q >= g.eta_optimal - 1e-10);
            prop_assert!(q >= g.eta_chain - 1e-10);
        }

        #[test]
        fn equilibrium_is_in_kernel((rates, _alpha) in strongly_connected(), mass in 0.1f64..10.0) {
            let n = net(rates);
            let c = network_equilibrium(&n, mass).unwrap();
            let a = n.matrix();
            let an = (0..c.len()).map(|i| (0..c.len()).map(|j| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
            let cn = c.iter().cloned().fold(0.0, f64::max);
            for i in 0..c.len() {
                let r: f64 = (0..c.len()).map(|j| a[(i, j)] * c[j]).sum();
                prop_assert!(r.abs() <= 1e-12 * an * cn);
            }
            prop_assert!((c.iter().sum::<f64>() - mass).abs() <= 1e-12 * mass);
        }
    }
}
