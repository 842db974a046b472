//! Random coupling structures: general SBM, assortative KSBM and the
//! two-level hierarchical KSBM.
//!
//! Nodes are numbered `0..N` and community `r` owns the contiguous block
//! `r*m .. (r+1)*m`. All generators consume their random stream in row-major
//! node order, so a `(params, seed)` pair always yields the same graph.

use std::ops::Range;

use log::warn;
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KsbmError, Result};
use crate::rng;

/// Balanced assignment of `n*m` nodes to `n` communities of `m` nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    n: usize,
    m: usize,
    labels: Vec<usize>,
}

impl CommunityAssignment {
    pub fn balanced(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(KsbmError::param("community count and size must be >= 1"));
        }
        let labels = (0..n * m).map(|i| i / m).collect();
        Ok(Self { n, m, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total node count `N = n*m`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn members(&self, community: usize) -> Range<usize> {
        community * self.m..(community + 1) * self.m
    }

    /// Merges each run of `group` consecutive communities into one.
    pub fn coarsen(&self, group: usize) -> Result<Self> {
        if group == 0 || !self.n.is_multiple_of(group) {
            return Err(KsbmError::param(format!(
                "cannot group {} communities in runs of {group}",
                self.n
            )));
        }
        Self::balanced(self.n / group, self.m * group)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Sbm,
    Assortative,
    Hierarchical,
}

/// Parameters of the two-level hierarchical KSBM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalSpec {
    /// Fine-grained community count.
    pub n1: usize,
    /// Coarse-grained community count; must divide `n1`.
    pub n2: usize,
    /// Intra-coarse edge ratio in `(0, 1]`.
    pub r: f64,
    /// Nodes per fine community.
    pub m: usize,
}

impl HierarchicalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 < 2 || self.m == 0 {
            return Err(KsbmError::param("hierarchical KSBM needs n1 >= 1, n2 >= 2, m >= 1"));
        }
        if !self.n1.is_multiple_of(self.n2) {
            return Err(KsbmError::param(format!("n2 = {} does not divide n1 = {}", self.n2, self.n1)));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(KsbmError::param(format!("edge ratio r = {} not in (0, 1]", self.r)));
        }
        Ok(())
    }

    /// Fine communities per coarse community.
    pub fn group(&self) -> usize {
        self.n1 / self.n2
    }

    /// Intra-coarse, inter-fine edges added per node: `floor(r*m*(n2-1))`.
    pub fn intra_coarse_edges(&self) -> usize {
        (self.r * self.m as f64 * (self.n2 - 1) as f64 + 1e-9).floor() as usize
    }
}

/// Directed adjacency plus weighted coupling over a community assignment.
///
/// The coupling is also kept in compressed row form so the Kuramoto vector
/// field only visits nonzero entries.
#[derive(Clone, Debug)]
pub struct CouplingGraph {
    adjacency: Array2<bool>,
    coupling: Array2<f64>,
    communities: CommunityAssignment,
    kind: GraphKind,
    seed: u64,
    hierarchy: Option<HierarchicalSpec>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl CouplingGraph {
    /// Assembles a graph, checking `C_ij != 0 => A_ij = 1` and no self-loops.
    pub fn from_parts(
        adjacency: Array2<bool>,
        coupling: Array2<f64>,
        communities: CommunityAssignment,
        kind: GraphKind,
        seed: u64,
        hierarchy: Option<HierarchicalSpec>,
    ) -> Result<Self> {
        let n = communities.len();
        if adjacency.dim() != (n, n) || coupling.dim() != (n, n) {
            return Err(KsbmError::param(format!(
                "adjacency {:?} / coupling {:?} do not match {n} nodes",
                adjacency.dim(),
                coupling.dim()
            )));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            if adjacency[[i, i]] {
                return Err(KsbmError::param(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let c = coupling[[i, j]];
                if !c.is_finite() {
                    return Err(KsbmError::param(format!("non-finite coupling at ({i}, {j})")));
                }
                if c != 0.0 {
                    if !adjacency[[i, j]] {
                        return Err(KsbmError::param(format!("coupling without edge at ({i}, {j})")));
                    }
                    cols.push(j);
                    weights.push(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            adjacency,
            coupling,
            communities,
            kind,
            seed,
            hierarchy,
            row_ptr,
            cols,
            weights,
        })
    }

    pub fn node_count(&self) -> usize {
        self.communities.len()
    }

    pub fn adjacency(&self) -> &Array2<bool> {
        &self.adjacency
    }

    pub fn coupling(&self) -> &Array2<f64> {
        &self.coupling
    }

    pub fn communities(&self) -> &CommunityAssignment {
        &self.communities
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hierarchy(&self) -> Option<&HierarchicalSpec> {
        self.hierarchy.as_ref()
    }

    /// Coarse-level assignment for hierarchical graphs.
    pub fn coarse_communities(&self) -> Option<CommunityAssignment> {
        let spec = self.hierarchy?;
        self.communities.coarsen(spec.group()).ok()
    }

    /// Nonzero couplings `(j, C_ij)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.weights[span].iter().copied())
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&a| a).count()
    }

    /// Realized edge density of every community block (self-pairs excluded).
    pub fn block_densities(&self) -> Array2<f64> {
        let n = self.communities.n();
        let m = self.communities.m();
        let mut counts = Array2::<f64>::zeros((n, n));
        for ((i, j), &a) in self.adjacency.indexed_iter() {
            if a {
                counts[[i / m, j / m]] += 1.0;
            }
        }
        for r in 0..n {
            for s in 0..n {
                let pairs = if r == s { m * (m - 1) } else { m * m };
                counts[[r, s]] = if pairs == 0 { 0.0 } else { counts[[r, s]] / pairs as f64 };
            }
        }
        counts
    }

    /// Mean nonzero coupling of every community block (0 where the block is empty).
    pub fn block_couplings(&self) -> Array2<f64> {
        let n = self.communities.n();
        let m = self.communities.m();
        let mut sums = Array2::<f64>::zeros((n, n));
        let mut counts = Array2::<f64>::zeros((n, n));
        for i in 0..self.node_count() {
            for (j, c) in self.row(i) {
                sums[[i / m, j / m]] += c;
                counts[[i / m, j / m]] += 1.0;
            }
        }
        ndarray::Zip::from(&mut sums).and(&counts).for_each(|s, &c| {
            if c > 0.0 {
                *s /= c;
            }
        });
        sums
    }
}

fn check_probability_matrix(p: &Array2<f64>, n: usize, what: &str) -> Result<()> {
    if p.dim() != (n, n) {
        return Err(KsbmError::param(format!("{what} must be {n}x{n}, got {:?}", p.dim())));
    }
    Ok(())
}

/// General SBM: every off-diagonal entry `A_ij` is an independent
/// Bernoulli(`P[φ(i), φ(j)]`) draw and `C̃_ij = C[φ(i), φ(j)] * A_ij`.
pub fn generate_sbm(
    n: usize,
    m: usize,
    probabilities: &Array2<f64>,
    community_coupling: &Array2<f64>,
    seed: u64,
) -> Result<CouplingGraph> {
    let communities = CommunityAssignment::balanced(n, m)?;
    check_probability_matrix(probabilities, n, "probability matrix")?;
    check_probability_matrix(community_coupling, n, "community coupling matrix")?;
    if let Some(bad) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(KsbmError::param(format!("edge probability {bad} outside [0, 1]")));
    }
    let total = n * m;
    let mut rng = rng::stream(seed, rng::STREAM_GRAPH);
    let mut adjacency = Array2::from_elem((total, total), false);
    let mut coupling = Array2::zeros((total, total));
    for i in 0..total {
        for j in 0..total {
            if i == j {
                continue;
            }
            let (r, s) = (i / m, j / m);
            let u: f64 = rng.random();
            if u < probabilities[[r, s]] {
                adjacency[[i, j]] = true;
                coupling[[i, j]] = community_coupling[[r, s]];
            }
        }
    }
    CouplingGraph::from_parts(adjacency, coupling, communities, GraphKind::Sbm, seed, None)
}

fn symmetric_uniform(adjacency: &mut Array2<bool>, i: usize, j: usize) {
    adjacency[[i, j]] = true;
    adjacency[[j, i]] = true;
}

fn uniform_coupling(adjacency: &Array2<bool>, kappa: f64) -> Array2<f64> {
    let total = adjacency.nrows() as f64;
    adjacency.mapv(|a| if a { kappa / total } else { 0.0 })
}

/// Assortative KSBM: complete communities plus, for every node, one edge to
/// a uniformly chosen node of another community. Edge presence is symmetric
/// and every nonzero coupling equals `κ/N`.
pub fn generate_assortative(n: usize, m: usize, kappa: f64, seed: u64) -> Result<CouplingGraph> {
    if n < 2 {
        return Err(KsbmError::param("assortative KSBM needs at least two communities"));
    }
    if !kappa.is_finite() {
        return Err(KsbmError::param("coupling strength must be finite"));
    }
    let communities = CommunityAssignment::balanced(n, m)?;
    let total = n * m;
    let mut adjacency = Array2::from_elem((total, total), false);
    for r in 0..n {
        for i in communities.members(r) {
            for j in communities.members(r) {
                if i != j {
                    adjacency[[i, j]] = true;
                }
            }
        }
    }
    let mut rng = rng::stream(seed, rng::STREAM_GRAPH);
    let outside = m * (n - 1);
    for i in 0..total {
        let own = i / m;
        let k = rng.random_range(0..outside);
        let j = if k < own * m { k } else { k + m };
        symmetric_uniform(&mut adjacency, i, j);
    }
    let coupling = uniform_coupling(&adjacency, kappa);
    CouplingGraph::from_parts(adjacency, coupling, communities, GraphKind::Assortative, seed, None)
}

/// Hierarchical KSBM: complete fine communities; each node gets
/// `floor(r*m*(n2-1))` edges to uniform nodes of other fine communities in
/// its coarse community, then one edge to a uniform node outside its coarse
/// community. Coarse community `q` holds fine communities
/// `q*g .. (q+1)*g` with `g = n1/n2`.
pub fn generate_hierarchical(spec: &HierarchicalSpec, kappa: f64, seed: u64) -> Result<CouplingGraph> {
    spec.validate()?;
    if !kappa.is_finite() {
        return Err(KsbmError::param("coupling strength must be finite"));
    }
    let HierarchicalSpec { n1, m, .. } = *spec;
    let group = spec.group();
    let intra_edges = spec.intra_coarse_edges();
    if intra_edges == 0 {
        warn!(
            "degenerate hierarchical spec: r*m*(n2-1) = {} < 1, no intra-coarse edges added",
            spec.r * m as f64 * (spec.n2 - 1) as f64
        );
    } else if group == 1 {
        return Err(KsbmError::param(
            "intra-coarse edges requested but each coarse community holds a single fine community",
        ));
    }
    let communities = CommunityAssignment::balanced(n1, m)?;
    let total = n1 * m;
    let coarse_size = group * m;
    let mut adjacency = Array2::from_elem((total, total), false);
    for r in 0..n1 {
        for i in communities.members(r) {
            for j in communities.members(r) {
                if i != j {
                    adjacency[[i, j]] = true;
                }
            }
        }
    }
    let mut rng = rng::stream(seed, rng::STREAM_GRAPH);
    let sibling_count = m * (group - 1);
    let outside_count = total - coarse_size;
    for i in 0..total {
        let fine = i / m;
        let coarse_start = (fine / group) * coarse_size;
        let fine_offset = (fine % group) * m;
        for _ in 0..intra_edges {
            let k = rng.random_range(0..sibling_count);
            let k = if k < fine_offset { k } else { k + m };
            symmetric_uniform(&mut adjacency, i, coarse_start + k);
        }
        let k = rng.random_range(0..outside_count);
        let j = if k < coarse_start { k } else { k + coarse_size };
        symmetric_uniform(&mut adjacency, i, j);
    }
    let coupling = uniform_coupling(&adjacency, kappa);
    CouplingGraph::from_parts(
        adjacency,
        coupling,
        communities,
        GraphKind::Hierarchical,
        seed,
        Some(*spec),
    )
}

/// Exact pairwise inter-community link probability of the assortative KSBM,
/// `2/(m(n-1)) - 1/(m²(n-1)²)`.
pub fn assortative_edge_probability(n: usize, m: usize) -> Result<f64> {
    if n < 2 || m == 0 {
        return Err(KsbmError::param("edge probability needs n >= 2 and m >= 1"));
    }
    let q = 1.0 / (m as f64 * (n - 1) as f64);
    Ok(2.0 * q - q * q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sbm_all_ones_is_complete() {
        let g = generate_sbm(2, 2, &Array2::ones((2, 2)), &Array2::ones((2, 2)), 7).unwrap();
        for ((i, j), &a) in g.adjacency().indexed_iter() {
            assert_eq!(a, i != j);
        }
        assert_eq!(g.edge_count(), 12);
    }

    #[test]
    fn sbm_all_zeros_is_empty() {
        let g = generate_sbm(3, 4, &Array2::zeros((3, 3)), &Array2::ones((3, 3)), 7).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn sbm_rejects_bad_probability() {
        let mut p = Array2::from_elem((2, 2), 0.5);
        p[[0, 1]] = 1.5;
        assert!(matches!(
            generate_sbm(2, 3, &p, &Array2::ones((2, 2)), 0),
            Err(KsbmError::Parameter(_))
        ));
    }

    #[test]
    fn assortative_blocks_complete_and_couplings_uniform() {
        let (n, m, kappa) = (3, 33, 100.0);
        let g = generate_assortative(n, m, kappa, 11).unwrap();
        let a = g.adjacency();
        for i in 0..n * m {
            assert!(!a[[i, i]]);
            let intra_in = g.communities().members(i / m).filter(|&j| a[[j, i]]).count();
            assert_eq!(intra_in, m - 1);
            let inter = (0..n * m).filter(|&j| j / m != i / m && (a[[i, j]] || a[[j, i]])).count();
            assert!(inter >= 1);
            for j in 0..n * m {
                assert_eq!(a[[i, j]], a[[j, i]]);
                let c = g.coupling()[[i, j]];
                assert!(c == 0.0 || c == kappa / (n * m) as f64);
            }
        }
    }

    #[test]
    fn assortative_two_singletons_forced() {
        let g = generate_assortative(2, 1, 1.0, 3).unwrap();
        assert!(g.adjacency()[[0, 1]] && g.adjacency()[[1, 0]]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn assortative_needs_two_communities() {
        assert!(generate_assortative(1, 5, 1.0, 0).is_err());
    }

    #[test]
    fn edge_probability_values() {
        assert_abs_diff_eq!(assortative_edge_probability(3, 33).unwrap(), 0.030073461891643, epsilon = 1e-12);
        assert_eq!(assortative_edge_probability(2, 1).unwrap(), 1.0);
        let expected = 2.0 / 165.0 - 1.0 / (165.0f64 * 165.0);
        assert_abs_diff_eq!(assortative_edge_probability(6, 33).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn hierarchical_edge_counts_and_grouping() {
        let spec = HierarchicalSpec { n1: 9, n2: 3, r: 0.1 / (9.0 / 3.0 - 1.0), m: 33 };
        assert_eq!(spec.intra_coarse_edges(), 3);
        let g = generate_hierarchical(&spec, 300.0, 5).unwrap();
        let coarse = g.coarse_communities().unwrap();
        assert_eq!(coarse.n(), 3);
        // coarse q holds fine communities 3q, 3q+1, 3q+2
        for i in 0..g.node_count() {
            assert_eq!(coarse.label(i), g.communities().label(i) / 3);
        }
        let a = g.adjacency();
        for i in 0..g.node_count() {
            let fine = g.communities().label(i);
            let q = coarse.label(i);
            for j in g.communities().members(fine) {
                assert_eq!(a[[i, j]], i != j);
            }
            let outside = (0..g.node_count()).filter(|&j| coarse.label(j) != q && a[[i, j]]).count();
            assert!(outside >= 1);
            let siblings = (0..g.node_count())
                .filter(|&j| coarse.label(j) == q && g.communities().label(j) != fine && a[[i, j]])
                .count();
            assert!(siblings >= 1);
        }
    }

    #[test]
    fn hierarchical_degenerate_ratio_keeps_coarse_links() {
        let spec = HierarchicalSpec { n1: 6, n2: 2, r: 0.001, m: 4 };
        assert_eq!(spec.intra_coarse_edges(), 0);
        let g = generate_hierarchical(&spec, 1.0, 1).unwrap();
        let coarse = g.coarse_communities().unwrap();
        let a = g.adjacency();
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                if a[[i, j]] && coarse.label(i) == coarse.label(j) {
                    assert_eq!(g.communities().label(i), g.communities().label(j));
                }
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = generate_assortative(3, 10, 5.0, 99).unwrap();
        let b = generate_assortative(3, 10, 5.0, 99).unwrap();
        assert_eq!(a.adjacency(), b.adjacency());
        let c = generate_assortative(3, 10, 5.0, 100).unwrap();
        assert_ne!(a.adjacency(), c.adjacency());
    }

    #[test]
    fn coupling_without_edge_rejected() {
        let comm = CommunityAssignment::balanced(1, 2).unwrap();
        let adj = Array2::from_elem((2, 2), false);
        let mut c = Array2::zeros((2, 2));
        c[[0, 1]] = 1.0;
        assert!(CouplingGraph::from_parts(adj, c, comm, GraphKind::Sbm, 0, None).is_err());
    }
}
