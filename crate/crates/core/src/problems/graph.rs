use std::fmt;

use crate::error::{Error, Result};

/// Brute-force enumeration limit for permutation-based operations.
pub const MAX_BRUTE_FORCE_VERTICES: usize = 8;

/// Simple undirected graph stored as a dense symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![false; n * n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Builds the graph whose edge `k` (in [`vertex_pairs`] order) is present
    /// iff bit `k` of `mask` is set.
    pub fn from_edge_mask(n: usize, mask: u64) -> Self {
        let mut g = Self::empty(n);
        for (k, (u, v)) in vertex_pairs(n).into_iter().enumerate() {
            if mask >> k & 1 == 1 {
                g.set(u, v, true);
            }
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        Self::from_edge_mask(n, u64::MAX)
    }

    pub fn path(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 1..n {
            g.set(i - 1, i, true);
        }
        g
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) outside a {}-vertex graph",
                self.n
            )));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
        }
        self.set(u, v, true);
        Ok(())
    }

    fn set(&mut self, u: usize, v: usize, value: bool) {
        self.adj[u * self.n + v] = value;
        self.adj[v * self.n + u] = value;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        vertex_pairs(self.n)
            .into_iter()
            .filter(|&(u, v)| self.has_edge(u, v))
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| self.has_edge(v, u)).count()
    }

    pub fn degree_multiset(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.n).map(|v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }

    /// Upper-triangle adjacency bits, edge `k` of [`vertex_pairs`] at bit `k`.
    pub fn edge_mask(&self) -> u64 {
        vertex_pairs(self.n)
            .into_iter()
            .enumerate()
            .filter(|&(_, (u, v))| self.has_edge(u, v))
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}{:?}", self.n, self.edges())
    }
}

/// Vertex pairs `(u, v)` with `u < v` in lexicographic order.
pub fn vertex_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect()
}

/// A bijection on `{0, .., n-1}` given by its image array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &i in &image {
            if i >= n || seen[i] {
                return Err(Error::InvalidGraph(format!(
                    "{image:?} is not a permutation"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (i, &p) in self.image.iter().enumerate() {
            inv[p] = i;
        }
        Self { image: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        Self {
            image: other.image.iter().map(|&i| self.image[i]).collect(),
        }
    }
}

/// All permutations of `n` points in lexicographic order of their image
/// arrays; entry `i` is the `i`-th permutation used to index tags.
pub fn permutations_lex(n: usize) -> Vec<Permutation> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![Permutation {
        image: current.clone(),
    }];
    loop {
        // Standard next-permutation step.
        let Some(i) = (1..current.len())
            .rev()
            .find(|&i| current[i - 1] < current[i])
        else {
            return out;
        };
        let j = (i..current.len())
            .rev()
            .find(|&j| current[j] > current[i - 1])
            .expect("successor");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(Permutation {
            image: current.clone(),
        });
    }
}

/// Relabels `g` so that edge `{u, v}` becomes `{p(u), p(v)}`.
pub fn apply_permutation(g: &Graph, p: &Permutation) -> Result<Graph> {
    if p.len() != g.n() {
        return Err(Error::InvalidGraph(format!(
            "permutation of {} points applied to a {}-vertex graph",
            p.len(),
            g.n()
        )));
    }
    let mut h = Graph::empty(g.n());
    for (u, v) in g.edges() {
        h.set(p.apply(u), p.apply(v), true);
    }
    Ok(h)
}

/// `|Aut(G)|` by enumerating all `n!` permutations.
pub fn automorphism_count(g: &Graph) -> Result<u64> {
    if g.n() > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::GraphTooLarge {
            n: g.n(),
            max: MAX_BRUTE_FORCE_VERTICES,
        });
    }
    let edges = g.edges();
    let count = permutations_lex(g.n())
        .iter()
        .filter(|p| {
            edges
                .iter()
                .all(|&(u, v)| g.has_edge(p.apply(u), p.apply(v)))
        })
        .count();
    Ok(count as u64)
}

/// The rigid graph on `n` vertices with the smallest edge mask, if any.
pub fn find_rigid_graph(n: usize) -> Result<Option<Graph>> {
    if n > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::GraphTooLarge {
            n,
            max: MAX_BRUTE_FORCE_VERTICES,
        });
    }
    let pairs = n * n.saturating_sub(1) / 2;
    for mask in 0..1u64 << pairs {
        let g = Graph::from_edge_mask(n, mask);
        if automorphism_count(&g)? == 1 {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}
