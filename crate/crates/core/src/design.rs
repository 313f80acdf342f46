//! The bipartite design data model.
//!
//! A design has `k` primary nodes `0..k` and an ordered list of redundant
//! nodes, each given by the set of primary nodes it is wired to. Designs are
//! alphabet-agnostic: the alphabet size `q` only enters when a design is
//! verified.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest `k` accepted by [`symmetrize`] unless the caller raises it.
pub const DEFAULT_SYMMETRIZE_MAX_K: usize = 5;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DesignFile", into = "DesignFile")]
pub struct BipartiteDesign {
    k: usize,
    redundant: Vec<Vec<usize>>,
}

/// On-disk shape: `{"k":3,"redundant":[[0,1],[1,2]]}`.
#[derive(Serialize, Deserialize)]
struct DesignFile {
    k: usize,
    redundant: Vec<Vec<usize>>,
}

impl TryFrom<DesignFile> for BipartiteDesign {
    type Error = Error;

    fn try_from(file: DesignFile) -> Result<Self> {
        BipartiteDesign::new(file.k, file.redundant)
    }
}

impl From<BipartiteDesign> for DesignFile {
    fn from(g: BipartiteDesign) -> Self {
        DesignFile {
            k: g.k,
            redundant: g.redundant,
        }
    }
}

impl BipartiteDesign {
    /// Builds a design, sorting each neighbor set. Rejects `k = 0`, empty
    /// neighbor sets, out-of-range indices and an index repeated within one set.
    pub fn new(k: usize, redundant: Vec<Vec<usize>>) -> Result<Self> {
        if k == 0 {
            return Err(invalid("a design needs at least one primary node"));
        }
        let mut sets = Vec::with_capacity(redundant.len());
        for (v, mut set) in redundant.into_iter().enumerate() {
            if set.is_empty() {
                return Err(invalid(format!("redundant node {v} has no neighbors")));
            }
            set.sort_unstable();
            if let Some(&bad) = set.iter().find(|&&u| u >= k) {
                return Err(invalid(format!(
                    "redundant node {v} references primary node {bad}, but k = {k}"
                )));
            }
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid(format!(
                    "redundant node {v} lists a primary node twice"
                )));
            }
            sets.push(set);
        }
        Ok(BipartiteDesign { k, redundant: sets })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of redundant nodes.
    pub fn m(&self) -> usize {
        self.redundant.len()
    }

    /// Number of edges.
    pub fn edges(&self) -> usize {
        self.redundant.iter().map(Vec::len).sum()
    }

    pub fn redundant(&self) -> &[Vec<usize>] {
        &self.redundant
    }

    /// Degree of every primary node.
    pub fn primary_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.k];
        for set in &self.redundant {
            for &u in set {
                deg[u] += 1;
            }
        }
        deg
    }

    /// Redundant neighbors of every primary node.
    pub fn primary_neighborhoods(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.k];
        for (v, set) in self.redundant.iter().enumerate() {
            for &u in set {
                nb[u].push(v);
            }
        }
        nb
    }

    /// The neighbor sets sorted, i.e. the multiset that identifies the design.
    pub fn sorted_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = self.redundant.clone();
        sets.sort();
        sets
    }

    /// Neighbor sets as bitmasks. Only meaningful for `k <= 64`.
    pub fn masks(&self) -> Vec<u64> {
        self.redundant
            .iter()
            .map(|set| set.iter().fold(0u64, |acc, &u| acc | (1 << u)))
            .collect()
    }

    /// Applies a relabeling of primary nodes: node `i` becomes `perm[i]`.
    pub fn permute_primaries(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k || !is_permutation(perm) {
            return Err(invalid("not a permutation of the primary nodes"));
        }
        let sets = self
            .redundant
            .iter()
            .map(|set| set.iter().map(|&u| perm[u]).collect())
            .collect();
        BipartiteDesign::new(self.k, sets)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("design serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter()
        .all(|&p| p < perm.len() && !std::mem::replace(&mut seen[p], true))
}

impl PartialEq for BipartiteDesign {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.m() == other.m()
            && self.sorted_sets() == other.sorted_sets()
    }
}

impl Eq for BipartiteDesign {}

impl Hash for BipartiteDesign {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.k.hash(state);
        self.sorted_sets().hash(state);
    }
}

impl fmt::Display for BipartiteDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} m={} E={} [", self.k, self.m(), self.edges())?;
        for (i, set) in self.redundant.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{{{}}}", set.iter().join(","))?;
        }
        write!(f, "]")
    }
}

/// An assignment of alphabet symbols `0..q` to a list of nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Labeling {
    symbols: Vec<usize>,
    q: usize,
}

impl Labeling {
    pub fn new(symbols: Vec<usize>, q: usize) -> Result<Self> {
        if q < 2 {
            return Err(invalid("alphabet size must be at least 2"));
        }
        if let Some(&bad) = symbols.iter().find(|&&x| x >= q) {
            return Err(invalid(format!("symbol {bad} is outside the alphabet 0..{q}")));
        }
        Ok(Labeling { symbols, q })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of nodes carrying each symbol.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.q];
        for &x in &self.symbols {
            c[x] += 1;
        }
        c
    }
}

/// A `(wiring complexity, redundancy)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradePoint {
    pub epsilon: f64,
    pub rho: f64,
}

impl TradePoint {
    pub fn new(epsilon: f64, rho: f64) -> Self {
        TradePoint { epsilon, rho }
    }
}

/// Exact counterpart of [`TradePoint`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactTradePoint {
    pub epsilon: BigRational,
    pub rho: BigRational,
}

impl ExactTradePoint {
    pub fn to_f64(&self) -> TradePoint {
        TradePoint {
            epsilon: self.epsilon.to_f64().unwrap_or(f64::NAN),
            rho: self.rho.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// `k` disjoint copies of `K(1, t)`.
pub fn make_repetition(k: usize, t: usize) -> Result<BipartiteDesign> {
    if k == 0 || t == 0 {
        return Err(invalid("repetition design needs k >= 1 and t >= 1"));
    }
    let sets = (0..k)
        .flat_map(|u| std::iter::repeat_n(vec![u], t))
        .collect();
    BipartiteDesign::new(k, sets)
}

/// The complete bipartite graph `K(k, r)`.
pub fn make_complete(k: usize, r: usize) -> Result<BipartiteDesign> {
    if k == 0 || r == 0 {
        return Err(invalid("complete design needs k >= 1 and r >= 1"));
    }
    let all: Vec<usize> = (0..k).collect();
    BipartiteDesign::new(k, vec![all; r])
}

/// Merge of `S(k, s)` over the multiset `sizes`: one redundant node per
/// `s`-subset, blocks emitted in the order given.
pub fn make_subset(k: usize, sizes: &[usize]) -> Result<BipartiteDesign> {
    if k == 0 {
        return Err(invalid("subset design needs k >= 1"));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s == 0 || s > k) {
        return Err(invalid(format!("subset size {s} is outside [1, {k}]")));
    }
    let sets = sizes
        .iter()
        .flat_map(|&s| (0..k).combinations(s))
        .collect();
    BipartiteDesign::new(k, sets)
}

/// `S(3,2) ∨ S(3,3)`: three pairs plus the full triple.
pub fn hamming_block() -> BipartiteDesign {
    make_subset(3, &[2, 3]).expect("valid sizes")
}

/// Disjoint union. Primary indices of later designs are shifted past earlier ones.
pub fn copy_designs(designs: &[BipartiteDesign]) -> Result<BipartiteDesign> {
    if designs.is_empty() {
        return Err(invalid("cannot copy an empty list of designs"));
    }
    let mut offset = 0;
    let mut sets = Vec::new();
    for g in designs {
        sets.extend(
            g.redundant
                .iter()
                .map(|set| set.iter().map(|&u| u + offset).collect::<Vec<_>>()),
        );
        offset += g.k;
    }
    BipartiteDesign::new(offset, sets)
}

/// Identifies the primary nodes of designs on a common `k`.
pub fn merge_designs(designs: &[BipartiteDesign]) -> Result<BipartiteDesign> {
    let first = designs
        .first()
        .ok_or_else(|| invalid("cannot merge an empty list of designs"))?;
    if let Some(g) = designs.iter().find(|g| g.k != first.k) {
        return Err(invalid(format!(
            "cannot merge designs with k = {} and k = {}",
            first.k, g.k
        )));
    }
    let sets = designs
        .iter()
        .flat_map(|g| g.redundant.iter().cloned())
        .collect();
    BipartiteDesign::new(first.k, sets)
}

/// Merge of every primary-permuted copy of `g`, one per element of the
/// symmetric group, in lexicographic permutation order.
pub fn symmetrize(g: &BipartiteDesign, max_k: usize) -> Result<BipartiteDesign> {
    if g.k > max_k {
        return Err(Error::BudgetExceeded {
            budget: max_k as u64,
            context: format!("symmetrize needs k! copies and k = {} exceeds the limit", g.k),
        });
    }
    let copies = (0..g.k)
        .permutations(g.k)
        .map(|perm| g.permute_primaries(&perm))
        .collect::<Result<Vec<_>>>()?;
    merge_designs(&copies)
}

/// Returns `{s: n_s}` when every `s`-subset of primaries occurs exactly
/// `n_s` times among degree-`s` redundant nodes, for every degree present.
pub fn is_permutation_invariant(g: &BipartiteDesign) -> Option<BTreeMap<usize, usize>> {
    let mut by_degree: BTreeMap<usize, BTreeMap<&[usize], usize>> = BTreeMap::new();
    for set in &g.redundant {
        *by_degree
            .entry(set.len())
            .or_default()
            .entry(set.as_slice())
            .or_default() += 1;
    }
    let mut witness = BTreeMap::new();
    for (s, counts) in by_degree {
        let expected = binomial(g.k, s);
        if counts.len() as u128 != expected {
            return None;
        }
        let mut values = counts.values();
        let n = *values.next()?;
        if values.any(|&c| c != n) {
            return None;
        }
        witness.insert(s, n);
    }
    Some(witness)
}

/// `(E / kt, m / kt)`.
pub fn metrics(g: &BipartiteDesign, t: usize) -> Result<TradePoint> {
    Ok(metrics_exact(g, t)?.to_f64())
}

pub fn metrics_exact(g: &BipartiteDesign, t: usize) -> Result<ExactTradePoint> {
    if t == 0 {
        return Err(invalid("metrics need t >= 1"));
    }
    let kt = BigInt::from(g.k * t);
    Ok(ExactTradePoint {
        epsilon: BigRational::new(BigInt::from(g.edges()), kt.clone()),
        rho: BigRational::new(BigInt::from(g.m()), kt),
    })
}

pub(crate) fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
