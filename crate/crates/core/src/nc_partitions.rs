//! Non-crossing pair partitions and their adopted sequences.
//!
//! A pair partition of `{1, …, k}` is stored as a partner array: `partner[i]`
//! is the (0-based) index paired with `i`. Every non-crossing pair partition
//! determines, up to relabeling, exactly one closed walk of length `k` whose
//! consecutive steps trace a rooted tree with `k/2 + 1` nodes. That walk is the
//! adopted sequence; its edge set is the adopted graph.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `k` accepted by [`enumerate_nc_pair_partitions`] (C₈ = 1430 partitions).
pub const MAX_ENUMERATION_ORDER: usize = 16;

/// Largest index accepted by [`catalan`].
pub const MAX_CATALAN_INDEX: usize = 30;

/// The `m`-th Catalan number `binom(2m, m) / (m + 1)`, exact.
pub fn catalan(m: usize) -> Result<u64> {
    if m > MAX_CATALAN_INDEX {
        return Err(Error::out_of_range("m", m, "0..=30"));
    }
    // C_{j+1} = C_j * 2(2j+1) / (j+2); the division is always exact.
    let mut c: u128 = 1;
    for j in 0..m as u128 {
        c = c * 2 * (2 * j + 1) / (j + 2);
    }
    Ok(c as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PairPartition {
    partner: Vec<usize>,
}

impl PairPartition {
    /// Builds a partition from a 0-based partner array.
    pub fn from_partner(partner: Vec<usize>) -> Result<Self> {
        let k = partner.len();
        if k == 0 || k % 2 != 0 {
            return Err(Error::InvalidPartition(format!(
                "length {k} is not a positive even number"
            )));
        }
        for (i, &p) in partner.iter().enumerate() {
            if p >= k {
                return Err(Error::InvalidPartition(format!(
                    "partner of {} is {}, outside 1..={k}",
                    i + 1,
                    p + 1
                )));
            }
            if p == i || partner[p] != i {
                return Err(Error::InvalidPartition(format!(
                    "index {} is not paired consistently",
                    i + 1
                )));
            }
        }
        Ok(Self { partner })
    }

    /// Builds a partition of `{1, …, k}` from 1-based blocks.
    pub fn from_blocks(k: usize, blocks: &[(usize, usize)]) -> Result<Self> {
        let mut partner = vec![usize::MAX; k];
        for &(a, b) in blocks {
            if a == 0 || b == 0 || a > k || b > k {
                return Err(Error::InvalidPartition(format!(
                    "block {{{a},{b}}} outside 1..={k}"
                )));
            }
            if partner[a - 1] != usize::MAX || partner[b - 1] != usize::MAX {
                return Err(Error::InvalidPartition(format!(
                    "block {{{a},{b}}} reuses an index"
                )));
            }
            partner[a - 1] = b - 1;
            partner[b - 1] = a - 1;
        }
        if partner.contains(&usize::MAX) {
            return Err(Error::InvalidPartition("some index is unpaired".into()));
        }
        Self::from_partner(partner)
    }

    pub fn k(&self) -> usize {
        self.partner.len()
    }

    pub fn partner(&self) -> &[usize] {
        &self.partner
    }

    /// Blocks as 0-based `(smaller, larger)` pairs, ordered by the smaller index.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(i, &p)| i < p)
            .map(|(i, &p)| (i, p))
    }

    /// Removes the block `{m, m+1}` (0-based, non-wrapping) and shifts every
    /// later index down by two.
    fn remove_adjacent_block(&self, m: usize) -> PairPartition {
        debug_assert_eq!(self.partner[m], m + 1);
        let shift = |a: usize| if a > m + 1 { a - 2 } else { a };
        let partner = self
            .partner
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != m && i != m + 1)
            .map(|(_, &p)| shift(p))
            .collect();
        PairPartition { partner }
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, (a, b)) in self.blocks().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{{{},{}}}", a + 1, b + 1)?;
        }
        f.write_str("}")
    }
}

fn check_order(k: usize) -> Result<()> {
    if k % 2 != 0 {
        return Err(Error::OddOrder(k));
    }
    if !(2..=MAX_ENUMERATION_ORDER).contains(&k) {
        return Err(Error::out_of_range("k", k, "2..=16"));
    }
    Ok(())
}

/// All non-crossing pair partitions of `{1, …, k}`, in lexicographic order of
/// their partner arrays.
pub fn enumerate_nc_pair_partitions(k: usize) -> Result<Vec<PairPartition>> {
    check_order(k)?;
    let mut out = Vec::with_capacity(catalan(k / 2)? as usize);
    let mut partner = vec![usize::MAX; k];
    fill_nc(&mut partner, 0, k, &mut |p| {
        out.push(PairPartition {
            partner: p.to_vec(),
        })
    });
    Ok(out)
}

// Index `start` pairs with some `j` leaving an even-sized gap in between;
// the gap and the remainder are filled independently. Iterating `j` upward and
// recursing into the gap before the remainder yields lexicographic order.
fn fill_nc(partner: &mut [usize], start: usize, end: usize, emit: &mut dyn FnMut(&[usize])) {
    if start == end {
        emit(partner);
        return;
    }
    if partner[start] != usize::MAX {
        fill_nc(partner, start + 1, end, emit);
        return;
    }
    let region_end = (start..end)
        .find(|&i| i > start && partner[i] != usize::MAX)
        .unwrap_or(end);
    let mut j = start + 1;
    while j < region_end {
        partner[start] = j;
        partner[j] = start;
        fill_nc(partner, start + 1, end, emit);
        partner[start] = usize::MAX;
        partner[j] = usize::MAX;
        j += 2;
    }
}

/// True iff no two blocks `{a, c}`, `{b, d}` satisfy `a < b < c < d`.
pub fn is_noncrossing(pi: &PairPartition) -> bool {
    // Blocks opened and not yet closed form a stack; a crossing closes a block
    // that is not the innermost open one.
    let mut open = Vec::with_capacity(pi.k() / 2);
    for (i, &p) in pi.partner.iter().enumerate() {
        if p > i {
            open.push(i);
        } else if open.pop() != Some(p) {
            return false;
        }
    }
    true
}

fn require_noncrossing(pi: &PairPartition) -> Result<()> {
    if is_noncrossing(pi) {
        Ok(())
    } else {
        Err(Error::Crossing)
    }
}

/// The smallest 1-based `m` with `{m, m+1}` a block; the wrapping block
/// `{k, 1}` is considered last.
pub fn find_leaf_block(pi: &PairPartition) -> Result<usize> {
    require_noncrossing(pi)?;
    let k = pi.k();
    (0..k)
        .find(|&i| pi.partner[i] == (i + 1) % k)
        .map(|i| i + 1)
        .ok_or(Error::Crossing)
}

/// A π-adopted sequence, labeled by order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AdoptedSequence {
    labels: Vec<usize>,
}

impl AdoptedSequence {
    /// Wraps arbitrary labels, relabeling them by first appearance.
    pub fn new(labels: &[usize]) -> Self {
        Self {
            labels: canonical_labels(labels),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn node_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }
}

impl fmt::Display for AdoptedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|&&(from, _)| from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((l, to));
                to
            }
        })
        .collect()
}

/// Constructs the adopted sequence by peeling the leftmost block `{m, m+1}`,
/// building the walk for the smaller partition and re-inserting a fresh leaf
/// node between two visits of its parent.
pub fn build_adopted_sequence(pi: &PairPartition) -> Result<AdoptedSequence> {
    require_noncrossing(pi)?;
    Ok(AdoptedSequence::new(&adopted_raw(pi)))
}

fn adopted_raw(pi: &PairPartition) -> Vec<usize> {
    let k = pi.k();
    if k == 2 {
        return vec![0, 1];
    }
    // A non-crossing partition always has a non-wrapping adjacent block.
    let m = (0..k - 1)
        .find(|&i| pi.partner[i] == i + 1)
        .expect("non-crossing partition has an adjacent block");
    let reduced = adopted_raw(&pi.remove_adjacent_block(m));
    let fresh = reduced.iter().max().unwrap() + 1;
    // The parent is the node visited right after the leaf, cyclically.
    let parent = reduced[m % reduced.len()];
    let mut seq = Vec::with_capacity(k);
    seq.extend_from_slice(&reduced[..m]);
    seq.push(parent);
    seq.push(fresh);
    seq.extend_from_slice(&reduced[m..]);
    seq
}

/// Checks the recursive adopted-sequence definition together with the closed
/// form `g_m = g_{m+l+1}`, `g_{m+1} = g_{m+l}` for every block `{m, m+l}`.
pub fn verify_adopted(pi: &PairPartition, seq: &AdoptedSequence) -> bool {
    let k = pi.k();
    if seq.k() != k || !is_noncrossing(pi) {
        return false;
    }
    if distinct(seq.labels()) != k / 2 + 1 {
        return false;
    }
    let g = seq.labels();
    let closed_form = pi.blocks().all(|(m, e)| {
        let l = e - m;
        l == 1 || (g[m] == g[(e + 1) % k] && g[m + 1] == g[e])
    });
    closed_form && verify_recursive(pi, g)
}

fn distinct(labels: &[usize]) -> usize {
    labels.iter().collect::<BTreeSet<_>>().len()
}

fn verify_recursive(pi: &PairPartition, g: &[usize]) -> bool {
    let k = pi.k();
    if k == 2 {
        return g[0] != g[1];
    }
    for m in 0..k {
        if pi.partner[m] != (m + 1) % k {
            continue;
        }
        let leaf = (m + 1) % k;
        if g[m] != g[(m + 2) % k] {
            return false;
        }
        if g.iter().enumerate().any(|(s, &v)| s != leaf && v == g[leaf]) {
            return false;
        }
        if m + 1 < k {
            // g_m = g_{m+2}, so dropping positions m and m+1 leaves the same
            // values as dropping the leaf and the parent's second visit, while
            // keeping positions aligned with the relabeled partition.
            let reduced: Vec<usize> = g
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != m && s != m + 1)
                .map(|(_, &v)| v)
                .collect();
            if !verify_recursive(&pi.remove_adjacent_block(m), &reduced) {
                return false;
            }
        }
    }
    true
}

/// The tree traced by an adopted sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdoptedGraph {
    pub node_count: usize,
    /// Unordered edges stored as `(smaller, larger)` node ids, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl AdoptedGraph {
    pub fn from_sequence(seq: &AdoptedSequence) -> Self {
        let g = seq.labels();
        let k = g.len();
        let edges: BTreeSet<(usize, usize)> = (0..k)
            .map(|m| {
                let (a, b) = (g[m], g[(m + 1) % k]);
                (a.min(b), a.max(b))
            })
            .collect();
        Self {
            node_count: seq.node_count(),
            edges: edges.into_iter().collect(),
        }
    }

    /// Neighbour lists indexed by node id.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_tree(&self) -> bool {
        if self.node_count == 0 || self.edges.len() + 1 != self.node_count {
            return false;
        }
        if self.edges.iter().any(|&(a, b)| a == b || b >= self.node_count) {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

impl fmt::Display for AdoptedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, b)) in self.edges.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{{{a},{b}}}")?;
        }
        f.write_str("}")
    }
}

pub fn adopted_graph(pi: &PairPartition) -> Result<AdoptedGraph> {
    Ok(AdoptedGraph::from_sequence(&build_adopted_sequence(pi)?))
}
