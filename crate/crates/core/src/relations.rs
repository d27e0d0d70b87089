//! Equivalence relations on index pairs that control which matrix entries are
//! coupled.
//!
//! Two entries in the same class share one primitive random value, multiplied
//! by the sign attached to each pair. Entries in different classes are
//! independent. Indices are 0-based in the API and 1-based in table files.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`condition_counts`].
pub const MAX_COUNT_DIMENSION: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PairClass {
    pub id: u64,
    /// `+1` or `-1`.
    pub sign: i8,
}

impl PairClass {
    fn plus(id: u64) -> Self {
        Self { id, sign: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceRelation {
    /// `[(p,q)] = {(p,q), (q,p)}`.
    Wigner { n: usize },
    /// The `2·half`-dimensional block matrix `(A B; Bᵀ ±A)` with `A` symmetric
    /// and `B` unconstrained; `minus` flips the sign of the lower-right copy.
    Block { half: usize, minus: bool },
    /// Explicit class table, row-major over the `n × n` index square.
    Table { n: usize, classes: Vec<PairClass> },
}

pub fn wigner_relation(n: usize) -> EquivalenceRelation {
    EquivalenceRelation::Wigner { n }
}

/// Relation of the block matrix `(A B; Bᵀ ±A)` of total dimension `2n`.
pub fn block_relation(n: usize, minus: bool) -> EquivalenceRelation {
    EquivalenceRelation::Block { half: n, minus }
}

impl EquivalenceRelation {
    /// Dimension `N` of the index square `{0..N}²`.
    pub fn size(&self) -> usize {
        match self {
            EquivalenceRelation::Wigner { n } | EquivalenceRelation::Table { n, .. } => *n,
            EquivalenceRelation::Block { half, .. } => 2 * half,
        }
    }

    /// Class and sign of the pair `(p, q)`; both indices must be below `size()`.
    pub fn class_of(&self, p: usize, q: usize) -> PairClass {
        match self {
            EquivalenceRelation::Wigner { n } => {
                let (lo, hi) = (p.min(q) as u64, p.max(q) as u64);
                PairClass::plus(lo * *n as u64 + hi)
            }
            EquivalenceRelation::Block { half, minus } => {
                let n = *half;
                let (bp, rp) = (p / n, p % n);
                let (bq, rq) = (q / n, q % n);
                let nn = n as u64;
                match (bp, bq) {
                    (0, 1) => PairClass::plus(nn * nn + rp as u64 * nn + rq as u64),
                    (1, 0) => PairClass::plus(nn * nn + rq as u64 * nn + rp as u64),
                    _ => {
                        let (lo, hi) = (rp.min(rq) as u64, rp.max(rq) as u64);
                        let sign = if bp == 1 && *minus { -1 } else { 1 };
                        PairClass {
                            id: lo * nn + hi,
                            sign,
                        }
                    }
                }
            }
            EquivalenceRelation::Table { n, classes } => classes[p * n + q],
        }
    }

    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_table_str(&text)
    }

    /// Parses lines `p q class_id sign` (1-based indices, sign `1`/`-1`).
    /// A pair listed in one orientation only is mirrored; every pair of the
    /// square must be covered, and mirrored entries must agree.
    pub fn from_table_str(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidRelation(msg);
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(bad(format!("line {}: expected `p q class_id sign`", lineno + 1)));
            }
            let int = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| bad(format!("line {}: `{s}` is not a non-negative integer", lineno + 1)))
            };
            let (p, q, id) = (int(fields[0])?, int(fields[1])?, int(fields[2])?);
            let sign = match fields[3] {
                "1" | "+1" => 1,
                "-1" => -1,
                s => return Err(bad(format!("line {}: sign `{s}` is not ±1", lineno + 1))),
            };
            if p == 0 || q == 0 {
                return Err(bad(format!("line {}: indices are 1-based", lineno + 1)));
            }
            rows.push((p as usize - 1, q as usize - 1, PairClass { id, sign }));
        }
        let n = rows.iter().map(|&(p, q, _)| p.max(q) + 1).max().unwrap_or(0);
        if n == 0 {
            return Err(bad("empty table".into()));
        }
        let mut classes: Vec<Option<PairClass>> = vec![None; n * n];
        let mut set = |p: usize, q: usize, c: PairClass| -> Result<()> {
            match classes[p * n + q] {
                Some(existing) if existing != c => Err(bad(format!(
                    "pair ({}, {}) assigned conflicting classes",
                    p + 1,
                    q + 1
                ))),
                _ => {
                    classes[p * n + q] = Some(c);
                    Ok(())
                }
            }
        };
        for &(p, q, c) in &rows {
            set(p, q, c)?;
        }
        for &(p, q, c) in &rows {
            set(q, p, c)?;
        }
        let classes = classes
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| bad(format!("pair ({}, {}) is missing", i / n + 1, i % n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EquivalenceRelation::Table { n, classes })
    }

    /// Checks `class_of(p,q) = class_of(q,p)` including sign on every pair.
    pub fn is_symmetric(&self) -> bool {
        let n = self.size();
        (0..n).all(|p| (p..n).all(|q| self.class_of(p, q) == self.class_of(q, p)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub n: usize,
    pub band: Option<usize>,
    /// `max_p #{(q,r,s) : (p,q) ∼ (r,s)}`.
    pub c1_max: u64,
    /// `max_{p,q,r} #{s : (p,q) ∼ (r,s)}`, the empirical `B`.
    pub c2_max: u64,
    /// `#{(p,q,r) : (p,q) ∼ (q,r), r ≠ p}`.
    pub c3_count: u64,
    /// `c1_max / N²`, or `/ b²` in band mode.
    pub c1_ratio: f64,
    /// `c3_count / N²`, or `/ b²` in band mode.
    pub c3_ratio: f64,
}

/// Exact counts for the three dependence conditions, grouped by class.
pub fn condition_counts(rel: &EquivalenceRelation, band: Option<usize>) -> Result<ConditionReport> {
    let n = rel.size();
    if n == 0 || n > MAX_COUNT_DIMENSION {
        return Err(Error::out_of_range("N", n, "1..=512"));
    }
    if band == Some(0) {
        return Err(Error::out_of_range("band", 0, ">= 1"));
    }

    // Dense class index per pair, class sizes, and per-(class, row) counts.
    let mut dense_id: HashMap<u64, u32> = HashMap::new();
    let mut pair_class = vec![0u32; n * n];
    for p in 0..n {
        for q in 0..n {
            let next = dense_id.len() as u32;
            let id = *dense_id.entry(rel.class_of(p, q).id).or_insert(next);
            pair_class[p * n + q] = id;
        }
    }
    let mut class_size = vec![0u64; dense_id.len()];
    let mut row_count: HashMap<(u32, usize), u64> = HashMap::new();
    for p in 0..n {
        for q in 0..n {
            let c = pair_class[p * n + q];
            class_size[c as usize] += 1;
            *row_count.entry((c, p)).or_insert(0) += 1;
        }
    }

    let c1_max = (0..n)
        .map(|p| {
            (0..n)
                .map(|q| class_size[pair_class[p * n + q] as usize])
                .sum::<u64>()
        })
        .max()
        .unwrap_or(0);
    let c2_max = row_count.values().copied().max().unwrap_or(0);
    let mut c3_count = 0u64;
    for p in 0..n {
        for q in 0..n {
            let c = pair_class[p * n + q];
            let in_row_q = row_count.get(&(c, q)).copied().unwrap_or(0);
            let reverse = u64::from(pair_class[q * n + p] == c);
            c3_count += in_row_q - reverse;
        }
    }

    let denom = match band {
        Some(b) => (b * b) as f64,
        None => (n * n) as f64,
    };
    Ok(ConditionReport {
        n,
        band,
        c1_max,
        c2_max,
        c3_count,
        c1_ratio: c1_max as f64 / denom,
        c3_ratio: c3_count as f64 / denom,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub c1_ratio: f64,
    pub c3_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// `c1_max / N²` strictly decreasing along the sweep.
    pub c1_decreasing: bool,
    /// `c3 / N²` non-increasing along the sweep.
    pub c3_nonincreasing: bool,
}

/// Finite-size evidence for the `o(N²)` conditions: ratios over a sweep of sizes.
/// `build` maps each entry of `ns` to a relation; the reported `n` is the
/// relation's dimension.
pub fn growth_report(
    build: impl Fn(usize) -> EquivalenceRelation,
    ns: &[usize],
) -> Result<GrowthReport> {
    let rows = ns
        .iter()
        .map(|&n| {
            let r = condition_counts(&build(n), None)?;
            Ok(GrowthRow {
                n: r.n,
                c1_ratio: r.c1_ratio,
                c3_ratio: r.c3_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let c1_decreasing = rows.windows(2).all(|w| w[1].c1_ratio < w[0].c1_ratio);
    let c3_nonincreasing = rows.windows(2).all(|w| w[1].c3_ratio <= w[0].c3_ratio);
    Ok(GrowthReport {
        rows,
        c1_decreasing,
        c3_nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(N⁴)/O(N³) scans of the three condition sets.
    fn naive_counts(rel: &EquivalenceRelation) -> (u64, u64, u64) {
        let n = rel.size();
        let same = |a: (usize, usize), b: (usize, usize)| {
            rel.class_of(a.0, a.1).id == rel.class_of(b.0, b.1).id
        };
        let mut c1 = 0;
        for p in 0..n {
            let mut count = 0;
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        count += u64::from(same((p, q), (r, s)));
                    }
                }
            }
            c1 = c1.max(count);
        }
        let mut c2 = 0;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    let count = (0..n).filter(|&s| same((p, q), (r, s))).count() as u64;
                    c2 = c2.max(count);
                }
            }
        }
        let mut c3 = 0;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    c3 += u64::from(r != p && same((p, q), (q, r)));
                }
            }
        }
        (c1, c2, c3)
    }

    #[test]
    fn wigner_classes() {
        let rel = wigner_relation(8);
        assert_eq!(rel.class_of(2, 4), rel.class_of(4, 2));
        assert_ne!(rel.class_of(2, 4).id, rel.class_of(2, 3).id);
        let diag = rel.class_of(1, 1).id;
        let members = (0..8)
            .flat_map(|p| (0..8).map(move |q| (p, q)))
            .filter(|&(p, q)| rel.class_of(p, q).id == diag)
            .count();
        assert_eq!(members, 1);
        assert!(rel.is_symmetric());
    }

    #[test]
    fn block_classes() {
        let n = 5;
        for minus in [false, true] {
            let rel = block_relation(n, minus);
            assert_eq!(rel.size(), 10);
            assert!(rel.is_symmetric());
            for i in 0..n {
                for j in 0..n {
                    let a = rel.class_of(i, j);
                    let copy = rel.class_of(i + n, j + n);
                    assert_eq!(a.id, copy.id);
                    assert_eq!(copy.sign, if minus { -1 } else { 1 });
                    assert_eq!(rel.class_of(i, j + n), rel.class_of(j + n, i));
                    if i != j {
                        assert_ne!(rel.class_of(i, j + n).id, rel.class_of(j, i + n).id);
                    }
                    assert_ne!(rel.class_of(i, j + n).id, a.id);
                }
            }
        }
    }

    #[test]
    fn grouped_counts_match_naive_scan() {
        for rel in [
            wigner_relation(6),
            block_relation(3, true),
            block_relation(4, false),
            EquivalenceRelation::from_table_str(
                "1 1 0 1\n1 2 1 1\n1 3 1 -1\n2 2 2 1\n2 3 3 1\n3 3 0 1\n",
            )
            .unwrap(),
        ] {
            let report = condition_counts(&rel, None).unwrap();
            let (c1, c2, c3) = naive_counts(&rel);
            assert_eq!((report.c1_max, report.c2_max, report.c3_count), (c1, c2, c3));
        }
    }

    #[test]
    fn wigner_condition_values() {
        for n in [8, 64] {
            let r = condition_counts(&wigner_relation(n), None).unwrap();
            assert_eq!(r.c3_count, 0);
            assert_eq!(r.c2_max, 1);
            assert_eq!(r.c1_max, 2 * n as u64 - 1);
            assert!(r.c1_max <= 2 * n as u64);
        }
    }

    #[test]
    fn block_condition_values() {
        let r = condition_counts(&block_relation(32, true), None).unwrap();
        assert!(r.c1_max <= 6 * 64);
        assert!(r.c2_max <= 2);
        assert_eq!(r.c3_count, 0);
    }

    #[test]
    fn band_mode_uses_band_denominator() {
        let r = condition_counts(&wigner_relation(64), Some(8)).unwrap();
        assert_eq!(r.c1_ratio, r.c1_max as f64 / 64.0);
        assert!(condition_counts(&wigner_relation(64), Some(0)).is_err());
        assert!(condition_counts(&wigner_relation(513), None).is_err());
    }

    #[test]
    fn growth_reports() {
        let w = growth_report(wigner_relation, &[32, 64, 128]).unwrap();
        assert!(w.c1_decreasing && w.c3_nonincreasing);
        for row in &w.rows {
            let n = row.n as f64;
            assert!((row.c1_ratio - (2.0 / n - 1.0 / (n * n))).abs() < 1e-15);
            assert_eq!(row.c3_ratio, 0.0);
        }
        let b = growth_report(|n| block_relation(n, true), &[16, 32, 64]).unwrap();
        assert!(b.c1_decreasing);
        assert_eq!(b.rows[2].n, 128);
    }

    #[test]
    fn table_relations() {
        // Pairs given in one orientation are mirrored.
        let rel = EquivalenceRelation::from_table_str(
            "# p q class sign\n1 1 7 1\n1 2 8 -1\n2 2 9 1\n",
        )
        .unwrap();
        assert_eq!(rel.size(), 2);
        assert_eq!(rel.class_of(1, 0), PairClass { id: 8, sign: -1 });
        assert!(rel.is_symmetric());

        assert!(EquivalenceRelation::from_table_str("1 1 0 1\n1 2 1 1\n").is_err());
        assert!(EquivalenceRelation::from_table_str("1 2 1 1\n2 1 1 -1\n1 1 0 1\n2 2 3 1\n").is_err());
        assert!(EquivalenceRelation::from_table_str("1 1 0 2\n").is_err());
        assert!(EquivalenceRelation::from_table_str("0 1 0 1\n").is_err());
        assert!(EquivalenceRelation::from_table_str("").is_err());
    }

    #[test]
    fn class_grouping_is_a_partition() {
        for rel in [wigner_relation(16), block_relation(8, true)] {
            let n = rel.size();
            let mut groups: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
            for p in 0..n {
                for q in 0..n {
                    groups.entry(rel.class_of(p, q).id).or_default().push((p, q));
                }
            }
            let total: usize = groups.values().map(Vec::len).sum();
            assert_eq!(total, n * n);
            for members in groups.values() {
                let id = rel.class_of(members[0].0, members[0].1).id;
                assert!(members.iter().all(|&(p, q)| rel.class_of(p, q).id == id));
            }
        }
    }
}
