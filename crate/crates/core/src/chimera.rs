//! Chimera-style hardware graph, chain embeddings of a complete bipartite RBM,
//! lowering of logical Ising problems to physical ones, and chain-break
//! resolution.
//!
//! A Chimera grid is made of unit cells holding two shores of four qubits.
//! Vertical qubits (shore 0) couple to every horizontal qubit (shore 1) of the
//! same cell and to the vertical qubit with the same index in the cell below;
//! horizontal qubits couple to their twin in the cell to the right.
//!
//! The RBM layout gives visible unit `i` a vertical chain running down column
//! `i / 4` of a block of cells and hidden unit `j` a horizontal chain along row
//! `j / 4`. Every visible/hidden pair then meets in exactly one cell. A 16+16
//! machine takes a 4x4 block: 128 qubits, chains of four.
//!
//! Physical problems use the hardware sign convention
//! `H = sum J_ab s_a s_b + sum h_a s_a`, so the chain coupling `J_C < 0` is
//! ferromagnetic.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::ising::{IsingProblem, SpinConfig};

pub type QubitId = usize;

pub const SHORE: usize = 4;

/// Fault list shipped for the default 2048-qubit chip.
pub const DEFAULT_FAULTS: &str = include_str!("../fixtures/faulty_qubits.txt");

#[derive(Clone, Debug)]
pub struct HardwareGraph {
    rows: usize,
    cols: usize,
    adjacency: Vec<Vec<QubitId>>,
    faulty: BTreeSet<QubitId>,
}

impl HardwareGraph {
    pub fn chimera(rows: usize, cols: usize) -> Self {
        let n = rows * cols * 2 * SHORE;
        let mut g = Self {
            rows,
            cols,
            adjacency: vec![Vec::new(); n],
            faulty: BTreeSet::new(),
        };
        for r in 0..rows {
            for c in 0..cols {
                for k in 0..SHORE {
                    for k2 in 0..SHORE {
                        g.add_edge(g.qubit(r, c, 0, k), g.qubit(r, c, 1, k2));
                    }
                    if r + 1 < rows {
                        g.add_edge(g.qubit(r, c, 0, k), g.qubit(r + 1, c, 0, k));
                    }
                    if c + 1 < cols {
                        g.add_edge(g.qubit(r, c, 1, k), g.qubit(r, c + 1, 1, k));
                    }
                }
            }
        }
        for adj in &mut g.adjacency {
            adj.sort_unstable();
        }
        g
    }

    /// A graph given by an explicit edge list (no cell structure).
    pub fn from_edges(n: usize, edges: &[(QubitId, QubitId)]) -> Result<Self> {
        let mut g = Self {
            rows: 0,
            cols: 0,
            adjacency: vec![Vec::new(); n],
            faulty: BTreeSet::new(),
        };
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::param("edge", format!("({a}, {b}) is invalid for {n} qubits")));
            }
            if !g.has_edge(a, b) {
                g.add_edge(a, b);
            }
        }
        for adj in &mut g.adjacency {
            adj.sort_unstable();
        }
        Ok(g)
    }

    /// Complete bipartite graph between `0..n_v` and `n_v..n_v + n_h`.
    pub fn complete_bipartite(n_v: usize, n_h: usize) -> Self {
        let edges: Vec<_> = (0..n_v)
            .flat_map(|i| (0..n_h).map(move |j| (i, n_v + j)))
            .collect();
        Self::from_edges(n_v + n_h, &edges).expect("valid edges")
    }

    /// 16x16 cells (2048 qubits) with the shipped fault list.
    pub fn default_chip() -> Self {
        let faults = parse_fault_list(DEFAULT_FAULTS).expect("fixture parses");
        Self::chimera(16, 16)
            .with_faults(faults)
            .expect("fixture ids are in range")
    }

    pub fn with_faults(mut self, faults: impl IntoIterator<Item = QubitId>) -> Result<Self> {
        for q in faults {
            if q >= self.n_qubits() {
                return Err(Error::param("faulty qubit", format!("{q} out of range")));
            }
            self.faulty.insert(q);
        }
        Ok(self)
    }

    fn add_edge(&mut self, a: QubitId, b: QubitId) {
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_qubits(&self) -> usize {
        self.adjacency.len()
    }

    pub fn qubit(&self, row: usize, col: usize, side: usize, k: usize) -> QubitId {
        ((row * self.cols + col) * 2 + side) * SHORE + k
    }

    /// `(row, col, side, k)` of a Chimera qubit.
    pub fn coords(&self, q: QubitId) -> (usize, usize, usize, usize) {
        let k = q % SHORE;
        let side = (q / SHORE) % 2;
        let cell = q / (2 * SHORE);
        (cell / self.cols.max(1), cell % self.cols.max(1), side, k)
    }

    pub fn neighbors(&self, q: QubitId) -> &[QubitId] {
        &self.adjacency[q]
    }

    pub fn has_edge(&self, a: QubitId, b: QubitId) -> bool {
        self.adjacency[a].binary_search(&b).is_ok() || self.adjacency[a].contains(&b)
    }

    pub fn is_faulty(&self, q: QubitId) -> bool {
        self.faulty.contains(&q)
    }

    pub fn faulty(&self) -> &BTreeSet<QubitId> {
        &self.faulty
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Newline-separated qubit ids; `#` starts a comment.
pub fn parse_fault_list(text: &str) -> Result<Vec<QubitId>> {
    text.lines()
        .enumerate()
        .filter_map(|(n, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some((n + 1, l))
        })
        .map(|(ln, l)| {
            l.parse::<QubitId>()
                .map_err(|_| Error::parse(ln, format!("bad qubit id `{l}`")))
        })
        .collect()
}

pub fn fault_list_text(g: &HardwareGraph) -> String {
    g.faulty.iter().map(|q| format!("{q}\n")).collect()
}

#[derive(Clone, Debug, PartialEq)]
struct CopyLinks {
    chain_edges: Vec<(QubitId, QubitId)>,
    /// Physical edges for visible `i` / hidden `j`, indexed `i * n_h + j`.
    pair_edges: Vec<Vec<(QubitId, QubitId)>>,
}

/// Chains of physical qubits for every logical unit (visible first), placed
/// in one or more disjoint copies.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    n_v: usize,
    n_h: usize,
    chain_coupling: f64,
    copies: Vec<Vec<Vec<QubitId>>>,
    links: Vec<CopyLinks>,
}

impl Embedding {
    /// Validates and indexes explicit chains. Each copy lists one chain per
    /// logical unit.
    pub fn from_chains(
        g: &HardwareGraph,
        n_v: usize,
        n_h: usize,
        copies: Vec<Vec<Vec<QubitId>>>,
        chain_coupling: f64,
    ) -> Result<Self> {
        if !(chain_coupling <= 0.0 && chain_coupling.is_finite()) {
            return Err(Error::param(
                "chain_coupling",
                format!("must be finite and <= 0, got {chain_coupling}"),
            ));
        }
        if copies.is_empty() {
            return Err(Error::Embedding("no copies".into()));
        }
        let mut used = BTreeSet::new();
        let mut links = Vec::with_capacity(copies.len());
        for (k, chains) in copies.iter().enumerate() {
            check_len("chains per copy", n_v + n_h, chains.len())?;
            for (u, chain) in chains.iter().enumerate() {
                if chain.is_empty() {
                    return Err(Error::Embedding(format!("copy {k}: unit {u} has an empty chain")));
                }
                for &q in chain {
                    if q >= g.n_qubits() {
                        return Err(Error::Embedding(format!("qubit {q} out of range")));
                    }
                    if g.is_faulty(q) {
                        return Err(Error::Embedding(format!(
                            "copy {k}: unit {u} uses faulty qubit {q}"
                        )));
                    }
                    if !used.insert(q) {
                        return Err(Error::Embedding(format!("qubit {q} used twice")));
                    }
                }
                if !chain_connected(g, chain) {
                    return Err(Error::Embedding(format!(
                        "copy {k}: chain of unit {u} is not connected"
                    )));
                }
            }
            let mut chain_edges = Vec::new();
            for chain in chains {
                for (x, &a) in chain.iter().enumerate() {
                    for &b in &chain[x + 1..] {
                        if g.has_edge(a, b) {
                            chain_edges.push((a, b));
                        }
                    }
                }
            }
            let mut pair_edges = Vec::with_capacity(n_v * n_h);
            for i in 0..n_v {
                for j in 0..n_h {
                    let mut edges = Vec::new();
                    for &a in &chains[i] {
                        for &b in &chains[n_v + j] {
                            if g.has_edge(a, b) {
                                edges.push((a, b));
                            }
                        }
                    }
                    pair_edges.push(edges);
                }
            }
            links.push(CopyLinks {
                chain_edges,
                pair_edges,
            });
        }
        Ok(Self {
            n_v,
            n_h,
            chain_coupling,
            copies,
            links,
        })
    }

    /// One copy, one qubit per unit, on the complete bipartite graph.
    pub fn identity(n_v: usize, n_h: usize) -> Self {
        let g = HardwareGraph::complete_bipartite(n_v, n_h);
        let chains = (0..n_v + n_h).map(|q| vec![q]).collect();
        Self::from_chains(&g, n_v, n_h, vec![chains], 0.0).expect("identity embedding is valid")
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn n_units(&self) -> usize {
        self.n_v + self.n_h
    }

    pub fn chain_coupling(&self) -> f64 {
        self.chain_coupling
    }

    pub fn n_copies(&self) -> usize {
        self.copies.len()
    }

    pub fn chains(&self, copy: usize) -> &[Vec<QubitId>] {
        &self.copies[copy]
    }

    pub fn qubits_per_copy(&self, copy: usize) -> usize {
        self.copies[copy].iter().map(Vec::len).sum()
    }

    pub fn chain_edges(&self, copy: usize) -> &[(QubitId, QubitId)] {
        &self.links[copy].chain_edges
    }

    pub fn pair_edges(&self, copy: usize, i: usize, j: usize) -> &[(QubitId, QubitId)] {
        &self.links[copy].pair_edges[i * self.n_h + j]
    }

    /// True when every visible/hidden pair has a physical edge in every copy.
    pub fn covers_complete_bipartite(&self) -> bool {
        self.links
            .iter()
            .all(|l| l.pair_edges.iter().all(|e| !e.is_empty()))
    }

    /// Same chains with a different chain coupling.
    pub fn with_chain_coupling(mut self, j_c: f64) -> Result<Self> {
        if !(j_c <= 0.0 && j_c.is_finite()) {
            return Err(Error::param("chain_coupling", format!("must be <= 0, got {j_c}")));
        }
        self.chain_coupling = j_c;
        Ok(self)
    }

    /// Only the first `n` copies.
    pub fn truncated(mut self, n: usize) -> Self {
        let n = n.clamp(1, self.copies.len());
        self.copies.truncate(n);
        self.links.truncate(n);
        self
    }

    /// Lines of `logical_id: q1 q2 q3 q4 [copy k]`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, chains) in self.copies.iter().enumerate() {
            for (u, chain) in chains.iter().enumerate() {
                let qs: Vec<String> = chain.iter().map(|q| q.to_string()).collect();
                let _ = writeln!(s, "{u}: {} [copy {k}]", qs.join(" "));
            }
        }
        s
    }
}

fn chain_connected(g: &HardwareGraph, chain: &[QubitId]) -> bool {
    let mut seen = vec![false; chain.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for (y, &q) in chain.iter().enumerate() {
            if !seen[y] && g.has_edge(chain[x], q) {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Places as many disjoint copies of the block layout as the faults allow,
/// scanning block origins row-major and keeping every window that is
/// fault-free and does not overlap an earlier copy.
pub fn embed_rbm(g: &HardwareGraph, n_v: usize, n_h: usize, j_c: f64) -> Result<Embedding> {
    if n_v == 0 || n_h == 0 {
        return Err(Error::param("n_v/n_h", "both layers need at least one unit"));
    }
    let block_cols = n_v.div_ceil(SHORE);
    let block_rows = n_h.div_ceil(SHORE);
    if g.rows() < block_rows || g.cols() < block_cols {
        return Err(Error::Placement {
            reason: format!(
                "a {n_v}+{n_h} machine needs {block_rows}x{block_cols} cells, graph has {}x{}",
                g.rows(),
                g.cols()
            ),
            blocking: Vec::new(),
        });
    }
    let layout = |r0: usize, c0: usize| -> Vec<Vec<QubitId>> {
        let mut chains = Vec::with_capacity(n_v + n_h);
        for i in 0..n_v {
            let (cc, k) = (i / SHORE, i % SHORE);
            chains.push((0..block_rows).map(|rr| g.qubit(r0 + rr, c0 + cc, 0, k)).collect());
        }
        for j in 0..n_h {
            let (rr, k) = (j / SHORE, j % SHORE);
            chains.push((0..block_cols).map(|cc| g.qubit(r0 + rr, c0 + cc, 1, k)).collect());
        }
        chains
    };

    let mut occupied = vec![false; g.rows() * g.cols()];
    let mut copies = Vec::new();
    for r0 in 0..=g.rows() - block_rows {
        for c0 in 0..=g.cols() - block_cols {
            let cells = (r0..r0 + block_rows).flat_map(|r| (c0..c0 + block_cols).map(move |c| (r, c)));
            if cells.clone().any(|(r, c)| occupied[r * g.cols() + c]) {
                continue;
            }
            let chains = layout(r0, c0);
            if chains.iter().flatten().any(|&q| g.is_faulty(q)) {
                continue;
            }
            for (r, c) in cells {
                occupied[r * g.cols() + c] = true;
            }
            copies.push(chains);
        }
    }
    if copies.is_empty() {
        return Err(Error::Placement {
            reason: "every candidate block contains a faulty qubit".into(),
            blocking: g.faulty().iter().copied().collect(),
        });
    }
    Embedding::from_chains(g, n_v, n_h, copies, j_c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coupler {
    pub a: usize,
    pub b: usize,
    pub value: f64,
    pub chain: bool,
}

/// One copy of a lowered problem over local qubit indices. Local index order
/// is chain by chain: unit 0's qubits, then unit 1's, and so on.
#[derive(Clone, Debug, PartialEq)]
pub struct CopyProblem {
    pub qubits: Vec<QubitId>,
    /// Local indices of each unit's chain.
    pub chains: Vec<Vec<usize>>,
    pub fields: Vec<f64>,
    pub couplers: Vec<Coupler>,
    /// `J_C` times the number of chain edges: the chain energy of a
    /// configuration with unanimous chains.
    pub chain_offset: f64,
}

impl CopyProblem {
    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// `sum J s_a s_b + sum h s_a`.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        let mut e: f64 = self
            .fields
            .iter()
            .zip(spins)
            .map(|(h, &s)| h * s as f64)
            .sum();
        for c in &self.couplers {
            e += c.value * (spins[c.a] * spins[c.b]) as f64;
        }
        e
    }

    /// Physical spins with every chain set to its unit's logical spin.
    pub fn spread(&self, logical: &[i8]) -> Vec<i8> {
        let mut out = vec![0; self.n_qubits()];
        for (chain, &s) in self.chains.iter().zip(logical) {
            for &q in chain {
                out[q] = s;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalProblem {
    pub n_v: usize,
    pub n_h: usize,
    pub chain_coupling: f64,
    pub copies: Vec<CopyProblem>,
}

impl PhysicalProblem {
    pub fn n_units(&self) -> usize {
        self.n_v + self.n_h
    }

    pub fn n_copies(&self) -> usize {
        self.copies.len()
    }
}

/// Splits every logical field equally over its chain and every logical
/// coupling equally over the physical edges joining the two chains; chain
/// edges get `J_C`. Signs flip into the hardware convention, so unanimous
/// configurations satisfy `E_phys = H_logical + chain_offset`.
pub fn lower_problem(p: &IsingProblem, e: &Embedding) -> Result<PhysicalProblem> {
    check_len("logical visible units", e.n_v(), p.n_v)?;
    check_len("logical hidden units", e.n_h(), p.n_h)?;
    let mut copies = Vec::with_capacity(e.n_copies());
    for k in 0..e.n_copies() {
        let chains_hw = e.chains(k);
        let mut qubits = Vec::with_capacity(e.qubits_per_copy(k));
        let mut chains = Vec::with_capacity(chains_hw.len());
        for chain in chains_hw {
            chains.push((qubits.len()..qubits.len() + chain.len()).collect::<Vec<_>>());
            qubits.extend_from_slice(chain);
        }
        let local = |q: QubitId| qubits.iter().position(|&x| x == q).expect("qubit in copy");

        let mut fields = vec![0.0; qubits.len()];
        for (u, chain) in chains.iter().enumerate() {
            let share = -p.fields[u] / chain.len() as f64;
            for &q in chain {
                fields[q] = share;
            }
        }
        let mut couplers = Vec::new();
        for &(a, b) in e.chain_edges(k) {
            couplers.push(Coupler {
                a: local(a),
                b: local(b),
                value: e.chain_coupling(),
                chain: true,
            });
        }
        let chain_offset = e.chain_coupling() * couplers.len() as f64;
        for c in &p.couplings {
            let j = c.j - p.n_v;
            let edges = e.pair_edges(k, c.i, j);
            if edges.is_empty() {
                return Err(Error::Embedding(format!(
                    "copy {k}: no physical edge between chains of visible {} and hidden {j}",
                    c.i
                )));
            }
            let share = -c.value / edges.len() as f64;
            for &(a, b) in edges {
                couplers.push(Coupler {
                    a: local(a),
                    b: local(b),
                    value: share,
                    chain: false,
                });
            }
        }
        copies.push(CopyProblem {
            qubits,
            chains,
            fields,
            couplers,
            chain_offset,
        });
    }
    Ok(PhysicalProblem {
        n_v: p.n_v,
        n_h: p.n_h,
        chain_coupling: e.chain_coupling(),
        copies,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChainPolicy {
    #[default]
    MajorityVote,
    Discard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalSample {
    pub copy: usize,
    /// Local qubit order of the copy.
    pub spins: Vec<i8>,
}

impl PhysicalSample {
    pub fn break_flags(&self, chains: &[Vec<usize>]) -> Vec<bool> {
        chains
            .iter()
            .map(|c| c.iter().any(|&q| self.spins[q] != self.spins[c[0]]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResolution {
    /// `None` when the sample was discarded.
    pub spins: Option<SpinConfig>,
    pub breaks: usize,
}

/// Reads logical spins off the chains of one copy.
pub fn resolve_chains<R: Rng + ?Sized>(
    sample: &PhysicalSample,
    chains: &[Vec<usize>],
    policy: ChainPolicy,
    rng: &mut R,
) -> ChainResolution {
    let mut breaks = 0;
    let mut logical = Vec::with_capacity(chains.len());
    for chain in chains {
        let sum: i32 = chain.iter().map(|&q| sample.spins[q] as i32).sum();
        if sum.unsigned_abs() as usize != chain.len() {
            breaks += 1;
        }
        let s = match sum.signum() {
            0 => {
                if rng.random::<bool>() {
                    1
                } else {
                    -1
                }
            }
            x => x as i8,
        };
        logical.push(s);
    }
    let spins = match policy {
        ChainPolicy::Discard if breaks > 0 => None,
        _ => Some(SpinConfig { s: logical }),
    };
    ChainResolution { spins, breaks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{config_to_spins, to_ising};
    use crate::rbm::test_support::random_rbm;
    use crate::rbm::BinaryConfig;
    use crate::rng::stream;

    #[test]
    fn chimera_structure() {
        let g = HardwareGraph::chimera(16, 16);
        assert_eq!(g.n_qubits(), 2048);
        // 16 intra-cell couplers per cell plus inter-cell couplers
        assert_eq!(g.edge_count(), 256 * 16 + 2 * 15 * 16 * 4);
        for q in 0..g.n_qubits() {
            for &n in g.neighbors(q) {
                assert!(g.neighbors(n).contains(&q));
            }
        }
        let q = g.qubit(3, 5, 1, 2);
        assert_eq!(g.coords(q), (3, 5, 1, 2));
    }

    #[test]
    fn fault_free_chip_holds_sixteen_copies() {
        let e = embed_rbm(&HardwareGraph::chimera(16, 16), 16, 16, -1.0).unwrap();
        assert_eq!(e.n_copies(), 16);
        for k in 0..16 {
            assert_eq!(e.qubits_per_copy(k), 128);
            assert!(e.chains(k).iter().all(|c| c.len() == 4));
        }
        assert!(e.covers_complete_bipartite());
    }

    #[test]
    fn default_fixture_holds_eight_copies() {
        let g = HardwareGraph::default_chip();
        assert!(!g.faulty().is_empty());
        let e = embed_rbm(&g, 16, 16, -1.0).unwrap();
        assert_eq!(e.n_copies(), 8);
        for k in 0..8 {
            for chain in e.chains(k) {
                assert!(chain.iter().all(|&q| !g.is_faulty(q)));
            }
        }
    }

    #[test]
    fn too_small_graph_fails() {
        let err = embed_rbm(&HardwareGraph::chimera(2, 2), 16, 16, -1.0).unwrap_err();
        assert!(matches!(err, Error::Placement { .. }));
        let g = HardwareGraph::chimera(4, 4).with_faults([0]).unwrap();
        match embed_rbm(&g, 16, 16, -1.0).unwrap_err() {
            Error::Placement { blocking, .. } => assert_eq!(blocking, vec![0]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn invalid_chains_rejected() {
        let g = HardwareGraph::chimera(1, 1);
        // two vertical qubits of one cell are not adjacent
        let bad = vec![vec![vec![0, 1], vec![4]]];
        assert!(Embedding::from_chains(&g, 1, 1, bad, -1.0).is_err());
        let g2 = g.clone().with_faults([4]).unwrap();
        assert!(Embedding::from_chains(&g2, 1, 1, vec![vec![vec![0], vec![4]]], -1.0).is_err());
        assert!(Embedding::from_chains(&g, 1, 1, vec![vec![vec![0], vec![0]]], -1.0).is_err());
        assert!(Embedding::from_chains(&g, 1, 1, vec![vec![vec![0], vec![4]]], 0.5).is_err());
    }

    #[test]
    fn embedding_text_lines() {
        let e = embed_rbm(&HardwareGraph::chimera(4, 4), 16, 16, -1.0).unwrap();
        let text = e.to_text();
        assert_eq!(text.lines().count(), 32);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("0: ") && first.ends_with("[copy 0]"));
        assert_eq!(first.split_whitespace().count(), 7);
    }

    #[test]
    fn fault_list_parsing() {
        assert_eq!(parse_fault_list("# c\n3\n\n17 # x\n").unwrap(), vec![3, 17]);
        assert!(parse_fault_list("abc").is_err());
        let g = HardwareGraph::default_chip();
        assert_eq!(parse_fault_list(&fault_list_text(&g)).unwrap().len(), g.faulty().len());
    }

    #[test]
    fn zero_problem_lowers_to_chain_edges_only() {
        let e = embed_rbm(&HardwareGraph::chimera(4, 4), 16, 16, -1.0).unwrap();
        let p = lower_problem(&IsingProblem::zeros(16, 16), &e).unwrap();
        let copy = &p.copies[0];
        assert!(copy.fields.iter().all(|&h| h == 0.0));
        for c in &copy.couplers {
            if c.chain {
                assert_eq!(c.value, -1.0);
            } else {
                assert_eq!(c.value, 0.0);
            }
        }
        assert_eq!(copy.couplers.iter().filter(|c| c.chain).count(), 32 * 3);
    }

    #[test]
    fn coupling_split_over_two_edges() {
        // visible chain {0, 1}, hidden chain {2, 3}; edges 0-2 and 1-3 join them
        let g = HardwareGraph::from_edges(4, &[(0, 1), (2, 3), (0, 2), (1, 3)]).unwrap();
        let e = Embedding::from_chains(&g, 1, 1, vec![vec![vec![0, 1], vec![2, 3]]], -1.0).unwrap();
        let mut p = IsingProblem::zeros(1, 1);
        p.couplings[0].value = 0.08;
        let phys = lower_problem(&p, &e).unwrap();
        let shares: Vec<f64> = phys.copies[0]
            .couplers
            .iter()
            .filter(|c| !c.chain)
            .map(|c| c.value)
            .collect();
        assert_eq!(shares.len(), 2);
        for s in shares {
            assert!((s.abs() - 0.04).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_edge_is_an_error() {
        let g = HardwareGraph::from_edges(2, &[]).unwrap();
        let e = Embedding::from_chains(&g, 1, 1, vec![vec![vec![0], vec![1]]], 0.0).unwrap();
        assert!(lower_problem(&IsingProblem::zeros(1, 1), &e).is_err());
    }

    #[test]
    fn unanimous_energy_identity() {
        let e = embed_rbm(&HardwareGraph::default_chip(), 16, 16, -1.0).unwrap();
        let rbm = random_rbm(16, 16, 2.0, 21);
        let p = to_ising(&rbm, 0.32).unwrap();
        let phys = lower_problem(&p, &e).unwrap();
        let mut rng = stream(3);
        for t in 0..1000 {
            let idx: u64 = rng.random::<u64>() & ((1 << 32) - 1);
            let cfg = BinaryConfig::from_index(idx, 16, 16);
            let spins = config_to_spins(&cfg).unwrap();
            let logical = p.energy(&spins).unwrap();
            let copy = &phys.copies[t % phys.n_copies()];
            let physical = copy.energy(&copy.spread(&spins.s));
            assert!((physical - copy.chain_offset - logical).abs() < 1e-10);
        }
    }

    #[test]
    fn chain_resolution() {
        let chains = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        let mut rng = stream(1);
        let s = PhysicalSample {
            copy: 0,
            spins: vec![1, 1, 1, 1, -1, -1, -1, -1],
        };
        let r = resolve_chains(&s, &chains, ChainPolicy::MajorityVote, &mut rng);
        assert_eq!(r.spins.unwrap().s, vec![1, -1]);
        assert_eq!(r.breaks, 0);

        let s = PhysicalSample {
            copy: 0,
            spins: vec![1, 1, 1, -1, -1, -1, -1, -1],
        };
        assert_eq!(s.break_flags(&chains), vec![true, false]);
        let r = resolve_chains(&s, &chains, ChainPolicy::MajorityVote, &mut rng);
        assert_eq!(r.spins.unwrap().s, vec![1, -1]);
        assert_eq!(r.breaks, 1);
        let r = resolve_chains(&s, &chains, ChainPolicy::Discard, &mut rng);
        assert!(r.spins.is_none());
        assert_eq!(r.breaks, 1);
    }

    #[test]
    fn tie_breaks_use_a_fair_coin() {
        let chains = vec![vec![0, 1, 2, 3]];
        let s = PhysicalSample {
            copy: 0,
            spins: vec![1, 1, -1, -1],
        };
        let mut rng = stream(5);
        let n = 20_000;
        let ups = (0..n)
            .filter(|_| {
                resolve_chains(&s, &chains, ChainPolicy::MajorityVote, &mut rng)
                    .spins
                    .unwrap()
                    .s[0]
                    == 1
            })
            .count();
        assert!((ups as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn injected_break_rate_is_reported() {
        let e = embed_rbm(&HardwareGraph::chimera(4, 4), 16, 16, -1.0).unwrap();
        let phys = lower_problem(&IsingProblem::zeros(16, 16), &e).unwrap();
        let chains = &phys.copies[0].chains;
        let mut rng = stream(8);
        let (samples, rate) = (2000, 0.1);
        let mut injected = 0usize;
        let mut reported = 0usize;
        for _ in 0..samples {
            let logical: Vec<i8> = (0..32).map(|_| if rng.random() { 1 } else { -1 }).collect();
            let mut spins = phys.copies[0].spread(&logical);
            for chain in chains {
                if rng.random::<f64>() < rate {
                    spins[chain[rng.random_range(0..4)]] *= -1;
                    injected += 1;
                }
            }
            let s = PhysicalSample { copy: 0, spins };
            reported += resolve_chains(&s, chains, ChainPolicy::MajorityVote, &mut rng).breaks;
        }
        assert_eq!(reported, injected);
        let observed = reported as f64 / (samples * 32) as f64;
        assert!((observed - rate).abs() < 0.01);
    }
}
