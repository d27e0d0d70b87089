//! α²-integrals over adopted trees and the limiting moments they sum to.
//!
//! `J_α(π)` integrates `Π α²(|x_a − x_b|)` over one variable per tree node, one
//! factor per tree edge. Eliminating a leaf replaces it by a factor on its
//! parent, so the whole integral is evaluated by passing messages from the
//! leaves to the root on a discretized `[0, 1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nc_partitions::{
    adopted_graph, catalan, enumerate_nc_pair_partitions, AdoptedGraph, PairPartition,
    MAX_ENUMERATION_ORDER,
};
use crate::weights::{is_phi_constant, CellKernel, PhiReport, WeightFn};

/// Largest `k` accepted by [`j_alpha_bruteforce`].
pub const MAX_BRUTEFORCE_ORDER: usize = 6;
/// Largest grid accepted by [`j_alpha_bruteforce`].
pub const MAX_BRUTEFORCE_GRID: usize = 64;
/// Sub-cells per grid cell (in each direction) for the brute-force edge factor.
pub const BRUTEFORCE_REFINEMENT: usize = 16;

/// Tree integrator for one `(weight, grid)` pair. The kernel matrix is built
/// once and shared by every partition evaluated with it.
#[derive(Debug, Clone)]
pub struct TreeIntegrator {
    grid_n: usize,
    kernel: Vec<f64>,
    /// Message sent by a leaf: the cell averages of φ.
    leaf_message: Vec<f64>,
}

impl TreeIntegrator {
    pub fn new(w: &WeightFn, grid_n: usize) -> Result<Self> {
        let cells = CellKernel::new(w, grid_n)?;
        Ok(Self {
            grid_n,
            kernel: cells.dense(),
            leaf_message: cells.row_means(),
        })
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    /// `φ₀`, which is also `J_α` of the single-block partition.
    pub fn phi0(&self) -> f64 {
        self.leaf_message.iter().sum::<f64>() / self.grid_n as f64
    }

    pub fn j_alpha(&self, pi: &PairPartition) -> Result<f64> {
        let graph = adopted_graph(pi)?;
        Ok(self.integrate_tree(&graph, 0))
    }

    /// Integrates over `graph`, eliminating leaves toward `root`. Any root gives
    /// the same value up to rounding.
    pub fn integrate_tree(&self, graph: &AdoptedGraph, root: usize) -> f64 {
        let n = self.grid_n;
        let adj = graph.adjacency();
        let mut parent = vec![usize::MAX; graph.node_count];
        let mut order = Vec::with_capacity(graph.node_count);
        let mut stack = vec![root];
        parent[root] = root;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in &adj[v] {
                if parent[c] == usize::MAX {
                    parent[c] = v;
                    stack.push(c);
                }
            }
        }

        // products[v]: pointwise product of the messages v has received so far.
        let mut products: Vec<Option<Vec<f64>>> = vec![None; graph.node_count];
        for &v in order.iter().rev() {
            if v == root {
                continue;
            }
            let message = match products[v].take() {
                None => self.leaf_message.clone(),
                Some(prod) => self.apply_kernel(&prod),
            };
            let p = parent[v];
            match &mut products[p] {
                slot @ None => *slot = Some(message),
                Some(acc) => acc.iter_mut().zip(&message).for_each(|(a, m)| *a *= m),
            }
        }
        match &products[root] {
            Some(prod) => prod.iter().sum::<f64>() / n as f64,
            None => 1.0,
        }
    }

    /// `(K v)(a) / n`: one leaf-elimination step.
    fn apply_kernel(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid_n;
        let scale = 1.0 / n as f64;
        self.kernel
            .chunks_exact(n)
            .map(|row| dot(row, v) * scale)
            .collect()
    }

    /// `Σ_{π ∈ NC₂(k)} J_α(π)` for even `k`, 0 for odd `k`. Partition integrals
    /// may be evaluated in parallel; the sum is taken in enumeration order.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if k % 2 == 1 {
            return Ok(0.0);
        }
        if k > MAX_ENUMERATION_ORDER {
            return Err(Error::out_of_range("k", k, "<= 16 for even k"));
        }
        if k == 0 {
            return Ok(1.0);
        }
        let partitions = enumerate_nc_pair_partitions(k)?;
        let values = self.map_partitions(&partitions)?;
        Ok(values.iter().sum())
    }

    #[cfg(feature = "parallel")]
    fn map_partitions(&self, partitions: &[PairPartition]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        partitions.par_iter().map(|pi| self.j_alpha(pi)).collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn map_partitions(&self, partitions: &[PairPartition]) -> Result<Vec<f64>> {
        partitions.iter().map(|pi| self.j_alpha(pi)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `J_α(π)` by leaf-to-root message passing on a `grid_n`-cell grid.
pub fn j_alpha(pi: &PairPartition, w: &WeightFn, grid_n: usize) -> Result<f64> {
    TreeIntegrator::new(w, grid_n)?.j_alpha(pi)
}

/// `J_α(π)` as a direct nested sum over all `k/2 + 1` node variables.
///
/// Independent of the message-passing path: the edge factor is the plain
/// midpoint average of `α²` over `16 × 16` sub-cells of each cell pair, and
/// every grid assignment of the node variables is enumerated.
pub fn j_alpha_bruteforce(pi: &PairPartition, w: &WeightFn, grid_n: usize) -> Result<f64> {
    if pi.k() > MAX_BRUTEFORCE_ORDER {
        return Err(Error::out_of_range("k", pi.k(), "<= 6 for brute force"));
    }
    if grid_n == 0 || grid_n > MAX_BRUTEFORCE_GRID {
        return Err(Error::out_of_range("grid_n", grid_n, "1..=64 for brute force"));
    }
    let graph = adopted_graph(pi)?;
    let n = grid_n;
    let s = BRUTEFORCE_REFINEMENT;
    let fine = (n * s) as f64;
    let mut edge = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for i in 0..s {
                let x = ((a * s + i) as f64 + 0.5) / fine;
                for j in 0..s {
                    let y = ((b * s + j) as f64 + 0.5) / fine;
                    let v = w.eval((x - y).abs());
                    acc += v * v;
                }
            }
            edge[a * n + b] = acc / (s * s) as f64;
        }
    }

    // Each edge is charged when its larger endpoint is assigned.
    let nodes = graph.node_count;
    let mut back_edges = vec![Vec::new(); nodes];
    for &(a, b) in &graph.edges {
        back_edges[b].push(a);
    }
    let mut assignment = vec![0usize; nodes];
    let total = nested_sum(0, 1.0, &mut assignment, &back_edges, &edge, n);
    Ok(total / (n as f64).powi(nodes as i32))
}

fn nested_sum(
    node: usize,
    partial: f64,
    assignment: &mut [usize],
    back_edges: &[Vec<usize>],
    edge: &[f64],
    n: usize,
) -> f64 {
    if node == assignment.len() {
        return partial;
    }
    let mut sum = 0.0;
    for cell in 0..n {
        assignment[node] = cell;
        let factor: f64 = back_edges[node]
            .iter()
            .map(|&other| edge[assignment[other] * n + cell])
            .product();
        sum += nested_sum(node + 1, partial * factor, assignment, back_edges, edge, n);
    }
    sum
}

/// `μ_k`, optionally divided by `φ₀^{k/2}` (the scaling that makes `μ₂ = 1`).
pub fn theoretical_moment(k: usize, w: &WeightFn, grid_n: usize, normalized: bool) -> Result<f64> {
    if k % 2 == 1 {
        return Ok(0.0);
    }
    if k > MAX_ENUMERATION_ORDER {
        return Err(Error::out_of_range("k", k, "<= 16 for even k"));
    }
    let integrator = TreeIntegrator::new(w, grid_n)?;
    let raw = integrator.moment(k)?;
    Ok(if normalized {
        raw / integrator.phi0().powi(k as i32 / 2)
    } else {
        raw
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEntry {
    pub k: usize,
    pub mu: f64,
    /// `C_{k/2}` for even `k`, 0 for odd `k`.
    pub catalan: f64,
}

impl MomentEntry {
    pub fn gap(&self) -> f64 {
        self.mu - self.catalan
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub weight: WeightFn,
    pub grid_n: usize,
    pub normalized: bool,
    pub phi0: f64,
    pub entries: Vec<MomentEntry>,
}

impl MomentTable {
    pub fn get(&self, k: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.mu)
    }
}

/// Moments `μ_1 … μ_{k_max}` sharing one kernel.
pub fn moment_table(
    k_max: usize,
    w: &WeightFn,
    grid_n: usize,
    normalized: bool,
) -> Result<MomentTable> {
    if k_max > MAX_ENUMERATION_ORDER {
        return Err(Error::out_of_range("k_max", k_max, "1..=16"));
    }
    let integrator = TreeIntegrator::new(w, grid_n)?;
    let phi0 = integrator.phi0();
    let entries = (1..=k_max)
        .map(|k| {
            let raw = integrator.moment(k)?;
            let mu = if normalized && k % 2 == 0 {
                raw / phi0.powi(k as i32 / 2)
            } else {
                raw
            };
            let catalan = if k % 2 == 0 {
                catalan(k / 2)? as f64
            } else {
                0.0
            };
            Ok(MomentEntry { k, mu, catalan })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentTable {
        weight: w.clone(),
        grid_n,
        normalized,
        phi0,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SclReport {
    /// Whether φ is constant, i.e. whether the rescaled ensemble obeys the
    /// semicircle law.
    pub verdict: bool,
    pub phi_report: PhiReport,
    /// Normalized `μ₄ − 2`; strictly positive when φ is not constant.
    pub moment_gap: f64,
}

pub fn scl_verdict(w: &WeightFn, tol: f64, grid_n: usize) -> Result<SclReport> {
    let phi_report = is_phi_constant(w, tol, grid_n)?;
    let mu4 = theoretical_moment(4, w, grid_n, true)?;
    Ok(SclReport {
        verdict: phi_report.constant_verdict,
        phi_report,
        moment_gap: mu4 - 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(k: usize, blocks: &[(usize, usize)]) -> PairPartition {
        PairPartition::from_blocks(k, blocks).unwrap()
    }

    // ∫φ² for band(ρ), ρ < 1/2, from the piecewise closed form of φ.
    fn band_phi_sq_integral(rho: f64) -> f64 {
        4.0 * rho * rho - 10.0 * rho.powi(3) / 3.0
    }

    #[test]
    fn analytic_band_oracle_matches_plain_riemann_sum() {
        // ∫φ² via a 2-D midpoint sum over (x, y) of the closed-form φ.
        let rho: f64 = 0.25;
        let n = 4000;
        let phi = |x: f64| {
            if x < rho {
                x + rho
            } else if x < 1.0 - rho {
                2.0 * rho
            } else {
                1.0 + rho - x
            }
        };
        let mut acc = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            acc += phi(x).powi(2);
        }
        assert!((acc / n as f64 - band_phi_sq_integral(rho)).abs() < 1e-6);
        assert!((band_phi_sq_integral(rho) - 0.197917).abs() < 1e-6);
    }

    #[test]
    fn wigner_weight_gives_one() {
        let w = WeightFn::constant(1.0).unwrap();
        for pi in enumerate_nc_pair_partitions(8).unwrap() {
            assert_eq!(j_alpha(&pi, &w, 64).unwrap(), 1.0);
        }
    }

    #[test]
    fn periodic_band_gives_power_of_two_rho() {
        for rho in [0.1, 0.3] {
            let w = WeightFn::periodic_band(rho).unwrap();
            let integrator = TreeIntegrator::new(&w, 512).unwrap();
            for k in [2, 4, 6] {
                for pi in enumerate_nc_pair_partitions(k).unwrap() {
                    let j = integrator.j_alpha(&pi).unwrap();
                    assert!((j - (2.0 * rho).powi(k as i32 / 2)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn band_b2_partitions_give_phi_squared_integral() {
        let w = WeightFn::band(0.25).unwrap();
        let expected = band_phi_sq_integral(0.25);
        let j1 = j_alpha(&pp(4, &[(1, 2), (3, 4)]), &w, 2048).unwrap();
        let j2 = j_alpha(&pp(4, &[(1, 4), (2, 3)]), &w, 2048).unwrap();
        assert!((j1 - expected).abs() < 2e-3);
        assert!((j2 - expected).abs() < 2e-3);
        assert!((j1 - j2).abs() < 1e-12);
    }

    #[test]
    fn crossing_partitions_are_rejected() {
        let w = WeightFn::constant(1.0).unwrap();
        let crossing = pp(4, &[(1, 3), (2, 4)]);
        assert_eq!(j_alpha(&crossing, &w, 64), Err(Error::Crossing));
        assert_eq!(j_alpha_bruteforce(&crossing, &w, 16), Err(Error::Crossing));
    }

    #[test]
    fn bruteforce_examples_and_guards() {
        let one = WeightFn::constant(1.0).unwrap();
        assert!((j_alpha_bruteforce(&pp(2, &[(1, 2)]), &one, 32).unwrap() - 1.0).abs() < 1e-12);

        let per = WeightFn::periodic_band(0.3).unwrap();
        let pi2 = pp(4, &[(1, 4), (2, 3)]);
        assert!((j_alpha_bruteforce(&pi2, &per, 64).unwrap() - 0.36).abs() < 5e-3);

        let band = WeightFn::band(0.25).unwrap();
        let pi1 = pp(4, &[(1, 2), (3, 4)]);
        let brute = j_alpha_bruteforce(&pi1, &band, 64).unwrap();
        assert!((brute - j_alpha(&pi1, &band, 64).unwrap()).abs() < 5e-3);

        let eight = enumerate_nc_pair_partitions(8).unwrap();
        assert!(j_alpha_bruteforce(&eight[0], &one, 16).is_err());
        assert!(j_alpha_bruteforce(&pi1, &one, 65).is_err());
    }

    #[test]
    fn leaf_elimination_order_does_not_matter() {
        let weights = [
            WeightFn::band(0.3).unwrap(),
            WeightFn::piecewise_constant(vec![0.2, 0.5], vec![1.0, -0.7, 0.4]).unwrap(),
        ];
        for w in &weights {
            let integrator = TreeIntegrator::new(w, 128).unwrap();
            for pi in enumerate_nc_pair_partitions(8).unwrap() {
                let graph = adopted_graph(&pi).unwrap();
                let reference = integrator.integrate_tree(&graph, 0);
                for root in 1..graph.node_count {
                    let v = integrator.integrate_tree(&graph, root);
                    assert!((v - reference).abs() <= 1e-12, "{pi} root {root}");
                }
            }
        }
    }

    #[test]
    fn moments_for_wigner_and_odd_orders() {
        let one = WeightFn::constant(1.0).unwrap();
        assert_eq!(theoretical_moment(4, &one, 256, false).unwrap(), 2.0);
        let band = WeightFn::band(0.25).unwrap();
        assert_eq!(theoretical_moment(5, &band, 256, true).unwrap(), 0.0);
        assert!(theoretical_moment(18, &one, 256, false).is_err());
        assert!(theoretical_moment(4, &one, 32, false).is_err());
    }

    #[test]
    fn normalized_band_fourth_moment() {
        let rho = 0.25;
        let w = WeightFn::band(rho).unwrap();
        let expected = 2.0 * band_phi_sq_integral(rho) / (2.0 * rho - rho * rho).powi(2);
        assert!((expected - 2.0680).abs() < 1e-4);
        let mu4 = theoretical_moment(4, &w, 2048, true).unwrap();
        assert!((mu4 - expected).abs() < 1e-3);
        let periodic = WeightFn::periodic_band(rho).unwrap();
        assert!((theoretical_moment(4, &periodic, 2048, true).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn moment_table_entries() {
        let w = WeightFn::band(0.3).unwrap();
        let table = moment_table(6, &w, 256, true).unwrap();
        assert_eq!(table.entries.len(), 6);
        for e in &table.entries {
            if e.k % 2 == 1 {
                assert_eq!(e.mu, 0.0);
                assert_eq!(e.catalan, 0.0);
            }
        }
        assert!((table.get(2).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(table.get(6).unwrap(), theoretical_moment(6, &w, 256, true).unwrap());
        assert!(moment_table(17, &w, 256, true).is_err());
    }

    #[test]
    fn scl_verdicts() {
        let per = scl_verdict(&WeightFn::periodic_band(0.3).unwrap(), 1e-3, 1024).unwrap();
        assert!(per.verdict);
        assert!(per.moment_gap.abs() < 1e-9);

        let band = scl_verdict(&WeightFn::band(0.25).unwrap(), 1e-3, 2048).unwrap();
        assert!(!band.verdict);
        assert!((band.moment_gap - 0.068).abs() < 2e-3);

        let one = scl_verdict(&WeightFn::constant(1.0).unwrap(), 1e-3, 256).unwrap();
        assert!(one.verdict);
        assert_eq!(one.moment_gap, 0.0);
    }
}
