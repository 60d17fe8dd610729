//! Simple undirected graphs on `{0..n-1}` and the graph side of the theory:
//! convexity graphs, cliques, perfectness, SPN completability and the two
//! theta numbers.

mod bounds;
mod cliques;
mod cycles;
mod theta;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::SymMatrix;

pub use bounds::{clique_bounds, spn_completable_exactness, CliqueBounds, CliqueRow, CompletableVerdict};
pub use cliques::{max_weight_clique, maximal_cliques, CLIQUE_CAP_N};
pub use cycles::{is_perfect, is_spn_completable, OddHole, CYCLE_CAP_N};
pub use theta::{theta, theta_prime, theta_solution, ThetaKind};

/// Largest vertex count representable (adjacency rows are `u64` masks).
pub const GRAPH_MAX_N: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Vec<u64>,
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph needs at least one vertex"));
        }
        if n > GRAPH_MAX_N {
            return Err(Error::CapExceeded {
                what: "graph vertices",
                size: n,
                cap: GRAPH_MAX_N,
            });
        }
        Ok(Self { n, adj: vec![0; n] })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Ok(Self::empty(n)?.complement())
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    /// Builds a graph from 0-based pairs; duplicates are merged, loops and
    /// out-of-range endpoints rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(invalid(format!("edge ({i}, {j}) outside 0..{n}")));
            }
            if i == j {
                return Err(invalid(format!("loop at vertex {i}")));
            }
            g.adj[i] |= 1 << j;
            g.adj[j] |= 1 << i;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i] >> j & 1 == 1
    }

    /// Neighbourhood of `i` as a bit mask.
    pub fn neighbors(&self, i: usize) -> u64 {
        self.adj[i]
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn complement(&self) -> Self {
        let full = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let adj = (0..self.n).map(|i| !self.adj[i] & full & !(1 << i)).collect();
        Self { n: self.n, adj }
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(a, &i)| vertices[a + 1..].iter().all(|&j| self.has_edge(i, j)))
    }

    pub(crate) fn is_clique_mask(&self, mask: u64) -> bool {
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            if (mask & !(1 << i)) & !self.adj[i] != 0 {
                return false;
            }
        }
        true
    }

    /// Relabels vertices: vertex `i` of the result is vertex `perm[i]` here.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        crate::matrix::check_permutation(perm, self.n)?;
        let edges: Vec<_> = (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_edge(perm[i], perm[j]))
            .collect();
        Self::from_edges(self.n, &edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphFile::from(self)).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: GraphFile =
            serde_json::from_str(text).map_err(|e| invalid(format!("graph JSON: {e}")))?;
        f.try_into()
    }

    /// Graphviz rendering with 1-based labels.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph G {\n");
        for i in 0..self.n {
            s.push_str(&format!("  {};\n", i + 1));
        }
        for (i, j) in self.edges() {
            s.push_str(&format!("  {} -- {};\n", i + 1, j + 1));
        }
        s.push_str("}\n");
        s
    }
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let e: Vec<_> = self.edges().iter().map(|&(i, j)| (i + 1, j + 1)).collect();
        write!(f, "Graph(n={}, edges={e:?})", self.n)
    }
}

/// Exchange format: `{"n": 5, "edges": [[1, 2], ...]}` with 1-based vertices.
#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl From<&Graph> for GraphFile {
    fn from(g: &Graph) -> Self {
        Self {
            n: g.n,
            edges: g.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        let mut edges = Vec::with_capacity(f.edges.len());
        for [i, j] in f.edges {
            if i == 0 || j == 0 {
                return Err(invalid("graph vertices are 1-based"));
            }
            edges.push((i - 1, j - 1));
        }
        Graph::from_edges(f.n, &edges)
    }
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        GraphFile::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

/// Edge `(i, j)` iff `2 Q_ij < Q_ii + Q_jj`, compared exactly.
pub fn convexity_graph(q: &SymMatrix) -> Result<Graph> {
    let n = q.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if 2.0 * q.get(i, j) < q.get(i, i) + q.get(j, j) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

pub(crate) fn mask_to_vec(mask: u64) -> Vec<usize> {
    (0..64).filter(|&j| mask >> j & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn one_based(g: &Graph) -> Vec<(usize, usize)> {
        g.edges().iter().map(|&(i, j)| (i + 1, j + 1)).collect()
    }

    #[test]
    fn convexity_graphs_of_examples() {
        let g = convexity_graph(&fixtures::example1()).unwrap();
        assert_eq!(one_based(&g), vec![(1, 2), (1, 5), (2, 3), (3, 4), (4, 5)]);
        let g = convexity_graph(&fixtures::example3()).unwrap();
        assert_eq!(one_based(&g), vec![(4, 5)]);
        let g = convexity_graph(&SymMatrix::ones(4)).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = convexity_graph(&fixtures::example6()).unwrap();
        assert_eq!(
            one_based(&g),
            vec![(1, 2), (1, 3), (1, 5), (2, 3), (3, 4), (4, 5)]
        );
        assert_eq!(convexity_graph(&fixtures::example5()).unwrap(), Graph::complete(5).unwrap());
    }

    #[test]
    fn complement_and_cliques() {
        let c5 = Graph::cycle(5).unwrap();
        let cc = c5.complement();
        assert_eq!(cc.edge_count(), 5);
        assert_eq!(cc.complement(), c5);
        assert!(Graph::complete(4).unwrap().is_clique(&[0, 1, 2, 3]));
        assert!(!c5.is_clique(&[0, 1, 2]));
        assert!(c5.is_clique_mask(0b11));
    }

    #[test]
    fn json_and_dot() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let s = g.to_json();
        assert_eq!(s, r#"{"n":4,"edges":[[1,2],[3,4]]}"#);
        assert_eq!(Graph::from_json(&s).unwrap(), g);
        assert!(Graph::from_json(r#"{"n":2,"edges":[[0,1]]}"#).is_err());
        assert!(Graph::from_json(r#"{"n":2,"edges":[[1,1]]}"#).is_err());
        assert!(Graph::from_json(r#"{"n":2,"edges":[[1,3]]}"#).is_err());
        assert!(g.to_dot().contains("3 -- 4;"));
    }
}
