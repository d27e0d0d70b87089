//! Seeded sampling of symmetric random matrices.
//!
//! Entry `(i, j)` is `norm · weight(i, j) · sign(i, j) · X_c` where `c` is the
//! class of `(i, j)` under the ensemble's equivalence relation. Each class has
//! its own random stream keyed by `(seed, trial, class id)`, so a sample does
//! not depend on fill order or on which thread produced it.

use std::fmt;
use std::path::Path;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relations::{block_relation, wigner_relation, EquivalenceRelation};
use crate::weights::{self, WeightFn};

/// Words of the ChaCha stream reserved per class (one 64-byte block).
const WORDS_PER_CLASS: u128 = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleKind {
    /// `α(|i − j| / N)` for an arbitrary weight.
    Weighted(WeightFn),
    /// Nonzero where `min(|i − j|, N − |i − j|) ≤ ρN`.
    PeriodicBand { rho: f64 },
    /// Nonzero where `|i − j| ≤ ρN`.
    Band { rho: f64 },
    /// Nonzero where `|i − j| ≤ b_N = max(1, ⌊N^β⌋)`, scaled by `1/√(2 b_N)`.
    SlowBand { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMode {
    #[default]
    None,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDist {
    #[default]
    Rademacher,
    Gaussian,
}

impl std::str::FromStr for EntryDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(EntryDist::Rademacher),
            "gaussian" | "normal" => Ok(EntryDist::Gaussian),
            _ => Err(Error::InvalidEnsemble(format!(
                "unknown entry distribution `{s}` (rademacher, gaussian)"
            ))),
        }
    }
}

/// A fully specified ensemble at one dimension.
///
/// In block mode `n` is the total dimension; the blocks have size `n / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatSpec", into = "FlatSpec")]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub block_mode: BlockMode,
    pub n: usize,
    pub dist: EntryDist,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightField {
    Shorthand(String),
    Full(WeightFn),
}

/// Flat JSON form: `kind`, `rho`, `beta`, `weight`, `block_mode`, `n`, `dist`, `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<WeightField>,
    #[serde(default)]
    block_mode: BlockMode,
    n: usize,
    #[serde(default)]
    dist: EntryDist,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl TryFrom<FlatSpec> for EnsembleSpec {
    type Error = Error;

    fn try_from(f: FlatSpec) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidEnsemble(format!("kind `{}` needs `{name}`", f.kind)))
        };
        let kind = match f.kind.as_str() {
            "wigner" => EnsembleKind::Weighted(WeightFn::constant(1.0)?),
            "weighted" => match f.weight.clone() {
                Some(WeightField::Shorthand(s)) => EnsembleKind::Weighted(WeightFn::parse(&s)?),
                Some(WeightField::Full(w)) => EnsembleKind::Weighted(w.validated()?),
                None => return Err(Error::InvalidEnsemble("kind `weighted` needs `weight`".into())),
            },
            "periodic_band" => EnsembleKind::PeriodicBand {
                rho: need(f.rho, "rho")?,
            },
            "band" => EnsembleKind::Band {
                rho: need(f.rho, "rho")?,
            },
            "slow_band" => EnsembleKind::SlowBand {
                beta: need(f.beta, "beta")?,
            },
            other => {
                return Err(Error::InvalidEnsemble(format!(
                    "unknown kind `{other}` (wigner, weighted, periodic_band, band, slow_band)"
                )))
            }
        };
        EnsembleSpec::new(kind, f.block_mode, f.n, f.dist, f.seed)
    }
}

impl From<EnsembleSpec> for FlatSpec {
    fn from(s: EnsembleSpec) -> Self {
        let (kind, rho, beta, weight) = match s.kind {
            EnsembleKind::Weighted(w) => ("weighted", None, None, Some(WeightField::Full(w))),
            EnsembleKind::PeriodicBand { rho } => ("periodic_band", Some(rho), None, None),
            EnsembleKind::Band { rho } => ("band", Some(rho), None, None),
            EnsembleKind::SlowBand { beta } => ("slow_band", None, Some(beta), None),
        };
        FlatSpec {
            kind: kind.into(),
            rho,
            beta,
            weight,
            block_mode: s.block_mode,
            n: s.n,
            dist: s.dist,
            seed: s.seed,
        }
    }
}

impl EnsembleSpec {
    pub fn new(
        kind: EnsembleKind,
        block_mode: BlockMode,
        n: usize,
        dist: EntryDist,
        seed: u64,
    ) -> Result<Self> {
        match &kind {
            EnsembleKind::PeriodicBand { rho } | EnsembleKind::Band { rho } => {
                if !(0.0..=1.0).contains(rho) {
                    return Err(Error::out_of_range("rho", rho, "[0, 1]"));
                }
            }
            EnsembleKind::SlowBand { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::out_of_range("beta", beta, "(0, 1)"));
                }
            }
            EnsembleKind::Weighted(_) => {}
        }
        if n < 2 {
            return Err(Error::out_of_range("n", n, ">= 2"));
        }
        if block_mode != BlockMode::None && n % 2 == 1 {
            return Err(Error::InvalidEnsemble(format!(
                "block ensembles need an even total dimension, got n = {n}"
            )));
        }
        Ok(Self {
            kind,
            block_mode,
            n,
            dist,
            seed,
        })
    }

    /// The Wigner ensemble `α ≡ 1`.
    pub fn wigner(n: usize, seed: u64) -> Result<Self> {
        Self::new(
            EnsembleKind::Weighted(WeightFn::constant(1.0)?),
            BlockMode::None,
            n,
            EntryDist::Rademacher,
            seed,
        )
    }

    /// Parses `[block:|block-minus:]<kind>[:<param>][:rademacher|:gaussian]` with
    /// kinds `wigner`, `band:ρ`, `periodic:ρ`, `slow:β` and `weighted:<weight spec>`.
    pub fn from_shorthand(text: &str, n: usize, seed: u64) -> Result<Self> {
        let mut rest = text.trim();
        let mut block_mode = BlockMode::None;
        if let Some(r) = rest.strip_prefix("block-minus:") {
            block_mode = BlockMode::Minus;
            rest = r;
        } else if let Some(r) = rest.strip_prefix("block:") {
            block_mode = BlockMode::Plus;
            rest = r;
        }
        let mut dist = EntryDist::Rademacher;
        if let Some((head, last)) = rest.rsplit_once(':') {
            if let Ok(d) = last.parse::<EntryDist>() {
                dist = d;
                rest = head;
            }
        } else if let Ok(d) = rest.parse::<EntryDist>() {
            return Err(Error::InvalidEnsemble(format!("`{d:?}` is not an ensemble kind")));
        }
        let (kind, param) = match rest.split_once(':') {
            Some((k, p)) => (k, Some(p)),
            None => (rest, None),
        };
        let number = |name: &str| -> Result<f64> {
            let p = param.ok_or_else(|| {
                Error::InvalidEnsemble(format!("`{kind}` needs a parameter ({kind}:<{name}>)"))
            })?;
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidEnsemble(format!("`{p}` is not a number")))
        };
        let kind = match kind {
            "wigner" => {
                if param.is_some() {
                    return Err(Error::InvalidEnsemble("`wigner` takes no parameter".into()));
                }
                EnsembleKind::Weighted(WeightFn::constant(1.0)?)
            }
            "band" => EnsembleKind::Band { rho: number("rho")? },
            "periodic" | "periodic_band" => EnsembleKind::PeriodicBand { rho: number("rho")? },
            "slow" | "slow_band" => EnsembleKind::SlowBand {
                beta: number("beta")?,
            },
            "weighted" => {
                let w = param.ok_or_else(|| {
                    Error::InvalidEnsemble("`weighted` needs a weight (weighted:<weight>)".into())
                })?;
                EnsembleKind::Weighted(WeightFn::parse(w)?)
            }
            other => {
                return Err(Error::InvalidEnsemble(format!(
                    "unknown ensemble `{other}` (wigner, band, periodic, slow, weighted)"
                )))
            }
        };
        Self::new(kind, block_mode, n, dist, seed)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidEnsemble(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble specs always serialize")
    }

    /// Same ensemble at another dimension.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.kind.clone(), self.block_mode, n, self.dist, self.seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn relation(&self) -> EquivalenceRelation {
        match self.block_mode {
            BlockMode::None => wigner_relation(self.n),
            BlockMode::Plus => block_relation(self.n / 2, false),
            BlockMode::Minus => block_relation(self.n / 2, true),
        }
    }

    /// `b_N` for slow band ensembles.
    pub fn bandwidth(&self) -> Option<usize> {
        match self.kind {
            EnsembleKind::SlowBand { beta } => Some(slow_bandwidth(self.n, beta)),
            _ => None,
        }
    }

    pub fn normalization(&self) -> f64 {
        match self.bandwidth() {
            Some(b) => 1.0 / (2.0 * b as f64).sqrt(),
            None => 1.0 / (self.n as f64).sqrt(),
        }
    }

    /// Deterministic factor multiplying entry `(i, j)` before normalization.
    pub fn weight_factor(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        let d = i.abs_diff(j);
        match &self.kind {
            EnsembleKind::Weighted(w) => w.eval(d as f64 / n as f64),
            EnsembleKind::PeriodicBand { rho } => indicator((d.min(n - d) as f64) <= rho * n as f64),
            EnsembleKind::Band { rho } => indicator(d as f64 <= rho * n as f64),
            EnsembleKind::SlowBand { beta } => indicator(d <= slow_bandwidth(n, *beta)),
        }
    }

    /// The weight whose φ₀ rescales this ensemble to unit second moment; `None`
    /// for slow band ensembles, which are already normalized.
    pub fn weight_fn(&self) -> Option<WeightFn> {
        match &self.kind {
            EnsembleKind::Weighted(w) => Some(w.clone()),
            EnsembleKind::PeriodicBand { rho } => Some(WeightFn::PeriodicBand { rho: *rho }),
            EnsembleKind::Band { rho } => Some(WeightFn::Band { rho: *rho }),
            EnsembleKind::SlowBand { .. } => None,
        }
    }

    /// `φ₀` of the limiting weight (1 for slow band).
    pub fn phi0(&self, grid_n: usize) -> Result<f64> {
        match self.weight_fn() {
            Some(w) => weights::phi0(&w, grid_n),
            None => Ok(1.0),
        }
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.block_mode {
            BlockMode::None => {}
            BlockMode::Plus => f.write_str("block:")?,
            BlockMode::Minus => f.write_str("block-minus:")?,
        }
        match &self.kind {
            EnsembleKind::Weighted(WeightFn::Constant { c }) if *c == 1.0 => f.write_str("wigner")?,
            EnsembleKind::Weighted(w) => write!(f, "weighted:{w}")?,
            EnsembleKind::PeriodicBand { rho } => write!(f, "periodic:{rho}")?,
            EnsembleKind::Band { rho } => write!(f, "band:{rho}")?,
            EnsembleKind::SlowBand { beta } => write!(f, "slow:{beta}")?,
        }
        if self.dist == EntryDist::Gaussian {
            f.write_str(":gaussian")?;
        }
        write!(f, " (n = {})", self.n)
    }
}

/// `max(1, ⌊N^β⌋)`. The small offset keeps exact powers such as `1024^0.7 = 128`
/// from rounding down.
pub fn slow_bandwidth(n: usize, beta: f64) -> usize {
    ((n as f64).powf(beta) + 1e-9).floor().max(1.0) as usize
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Key of one primitive random value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trial: u64,
    pub class_id: u64,
}

/// The random streams of one `(seed, trial)`; each class reads from its own
/// block of the ChaCha8 keystream.
#[derive(Debug, Clone)]
pub struct EntryStream {
    rng: ChaCha8Rng,
}

impl EntryStream {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self { rng }
    }

    pub fn value(&mut self, dist: EntryDist, class_id: u64) -> f64 {
        self.rng.set_word_pos(class_id as u128 * WORDS_PER_CLASS);
        match dist {
            EntryDist::Rademacher => {
                if self.rng.next_u32() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::Gaussian => {
                // Box-Muller; u1 lies in (0, 1] so the logarithm is finite.
                let u1 = 1.0 - unit_f64(self.rng.next_u64());
                let u2 = unit_f64(self.rng.next_u64());
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
        }
    }
}

/// Uniform on `[0, 1)` from the top 53 bits.
fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn sample_entry_value(dist: EntryDist, key: StreamKey) -> f64 {
    EntryStream::new(key.seed, key.trial).value(dist, key.class_id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub entries: Array2<f64>,
}

impl MatrixSample {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().sum()
    }
}

impl From<Array2<f64>> for MatrixSample {
    fn from(entries: Array2<f64>) -> Self {
        Self { entries }
    }
}

/// Draws trial number `trial` of the ensemble.
pub fn sample_matrix(spec: &EnsembleSpec, trial: u64) -> MatrixSample {
    let n = spec.n;
    let rel = spec.relation();
    let norm = spec.normalization();
    let mut stream = EntryStream::new(spec.seed, trial);
    let mut entries = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let w = spec.weight_factor(i, j);
            if w == 0.0 {
                continue;
            }
            let class = rel.class_of(i, j);
            let x = stream.value(spec.dist, class.id);
            let v = norm * w * f64::from(class.sign) * x;
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    MatrixSample { entries }
}
