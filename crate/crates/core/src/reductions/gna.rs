//! Graph non-automorphism as closeness to the maximally mixed state.
//!
//! Index register `L` has `q_L = ⌈log₂ n!⌉` qubits and `N = 2^{q_L}`
//! basis states. Index `i < n!` is tagged with `(0, π_i(G))`, the edge mask
//! of the `i`-th permutation (lexicographic) applied to `G`; index
//! `i ≥ n!` is tagged with `(1, i)`. The state
//! `N^{-1/2} Σ_i |i⟩|tag_i⟩` traced down to `L` is the tag Gram matrix
//! over `N`, block diagonal with one all-ones block per distinct tag.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::circuits::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::problems::{
    apply_permutation, automorphism_count, factorial, permutations_lex, Graph, QsciInstance,
    StateSource, MAX_BRUTE_FORCE_VERTICES,
};
use crate::qcore::{c, check_cap, dim_cap, DensityOperator};

pub const GNA_ALPHA: f64 = 0.0;
pub const GNA_BETA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct GnaOrbitSummary {
    pub n: usize,
    pub q_l: usize,
    /// Multiplicity of each distinct tag, largest first; sums to `2^{q_L}`.
    pub block_sizes: Vec<usize>,
    /// `1 − K / 2^{q_L}` for `K` distinct tags.
    pub distance: f64,
}

impl GnaOrbitSummary {
    pub fn distinct_tags(&self) -> usize {
        self.block_sizes.len()
    }
}

#[derive(Debug, Clone)]
pub struct GnaReduction {
    pub instance: QsciInstance,
    pub summary: GnaOrbitSummary,
    pub output_state: DensityOperator,
    /// The preparation circuit, when it fits under the dimension cap.
    pub circuit: Option<Circuit>,
}

fn check_graph(g: &Graph) -> Result<()> {
    if g.n() == 0 {
        return Err(Error::InvalidGraph("graph has no vertices".into()));
    }
    if g.n() > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::GraphTooLarge {
            n: g.n(),
            max: MAX_BRUTE_FORCE_VERTICES,
        });
    }
    Ok(())
}

fn index_qubits(n: usize) -> usize {
    let f = factorial(n);
    (u64::BITS - (f - 1).leading_zeros()) as usize
}

/// Width of the tag register: one flag qubit plus a payload wide enough for
/// either an edge mask or an index.
fn tag_qubits(n: usize) -> usize {
    1 + (n * (n - 1) / 2).max(index_qubits(n))
}

/// `tag_i` for every index `i < 2^{q_L}`, as `flag << payload | payload`.
pub fn gna_tags(g: &Graph) -> Result<Vec<u64>> {
    check_graph(g)?;
    let n = g.n();
    let q_l = index_qubits(n);
    let payload = tag_qubits(n) - 1;
    let mut tags: Vec<u64> = permutations_lex(n)
        .iter()
        .map(|p| apply_permutation(g, p).map(|h| h.edge_mask()))
        .collect::<Result<_>>()?;
    let flag = 1u64 << payload;
    tags.extend((tags.len() as u64..1u64 << q_l).map(|i| flag | i));
    Ok(tags)
}

/// Distinct-tag multiplicities and the resulting distance from `I/2^{q_L}`.
pub fn gna_orbit_summary(g: &Graph) -> Result<GnaOrbitSummary> {
    let tags = gna_tags(g)?;
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &t in &tags {
        *counts.entry(t).or_default() += 1;
    }
    let mut block_sizes: Vec<usize> = counts.into_values().collect();
    block_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let total = tags.len();
    let distance = (total - block_sizes.len()) as f64 / total as f64;
    Ok(GnaOrbitSummary {
        n: g.n(),
        q_l: index_qubits(g.n()),
        block_sizes,
        distance,
    })
}

/// The reduced state on `L`: `ρ_ij = [tag_i = tag_j] / 2^{q_L}`.
pub fn gna_output_state(g: &Graph) -> Result<DensityOperator> {
    let q_l = index_qubits(g.n().max(1));
    check_cap(q_l)?;
    let tags = gna_tags(g)?;
    let w = 1.0 / tags.len() as f64;
    let m = DMatrix::from_fn(tags.len(), tags.len(), |i, j| {
        if tags[i] == tags[j] {
            c(w, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(DensityOperator::from_matrix_unchecked(m))
}

/// STATEPREP of `N^{-1/2} Σ_i |i⟩|tag_i⟩` with `L` as the output register.
pub fn gna_circuit(g: &Graph) -> Result<Circuit> {
    check_graph(g)?;
    let q_l = index_qubits(g.n());
    let w = tag_qubits(g.n());
    check_cap(q_l + w)?;
    let tags = gna_tags(g)?;
    let amp = c(1.0 / (tags.len() as f64).sqrt(), 0.0);
    let mut amplitudes = vec![c(0.0, 0.0); 1 << (q_l + w)];
    for (i, &t) in tags.iter().enumerate() {
        amplitudes[(i << w) | t as usize] = amp;
    }
    let gate = Gate::StatePrep {
        targets: (0..q_l + w).collect(),
        amplitudes,
    };
    Circuit::new(q_l + w, q_l, vec![gate])
}

/// `(0, 1/4)` instance: rigid graphs give exactly `I/2^{q_L}`, graphs with a
/// non-trivial automorphism are at distance at least 1/4.
///
/// The instance is circuit-backed when the full preparation fits under the
/// dimension cap and state-backed otherwise.
pub fn gna_to_qsci(g: &Graph) -> Result<GnaReduction> {
    let summary = gna_orbit_summary(g)?;
    let output_state = gna_output_state(g)?;
    let circuit = if summary.q_l + tag_qubits(g.n()) <= dim_cap() {
        Some(gna_circuit(g)?)
    } else {
        None
    };
    let source = match &circuit {
        Some(c) => StateSource::Circuit(c.clone()),
        None => StateSource::State(output_state.clone()),
    };
    Ok(GnaReduction {
        instance: QsciInstance::new(GNA_ALPHA, GNA_BETA, source)?,
        summary,
        output_state,
        circuit,
    })
}

#[derive(Debug, Clone)]
pub struct GnaSweepEntry {
    pub graph: Graph,
    pub automorphisms: u64,
    pub summary: GnaOrbitSummary,
}

/// Every labelled graph on `n` vertices, in edge-mask order.
pub fn gna_sweep(n: usize, exec: Execution) -> Result<Vec<GnaSweepEntry>> {
    check_graph(&Graph::empty(n))?;
    let pairs = n * (n - 1) / 2;
    par::map_indexed(exec, 1 << pairs, |mask| {
        let graph = Graph::from_edge_mask(n, mask as u64);
        Ok(GnaSweepEntry {
            automorphisms: automorphism_count(&graph)?,
            summary: gna_orbit_summary(&graph)?,
            graph,
        })
    })
    .into_iter()
    .collect()
}
