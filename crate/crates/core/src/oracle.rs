//! Exact verification of small designs.
//!
//! Every question here reduces to the same inner problem: for a fixed primary
//! labeling, find the redundant labeling that maximizes the smallest number of
//! same-label neighbors over primary nodes. It is solved by branch and bound
//! with three reductions that never change the optimum:
//!
//! * redundant nodes with identical neighborhoods are interchangeable, so only
//!   the number of them receiving each label matters;
//! * a redundant node is never given a label absent from its neighborhood,
//!   since moving it to a present label cannot hurt;
//! * relabeling the alphabet maps optima to optima, so primary labelings are
//!   enumerated as restricted growth strings.
//!
//! Work is counted in visited search nodes. Exceeding the budget is an error,
//! never a negative answer.

use std::collections::{BTreeMap, HashMap, HashSet};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{BipartiteDesign, Labeling};
use crate::error::{invalid, Error, Result};

/// Default number of search nodes one oracle call may visit.
pub const DEFAULT_BUDGET: u64 = 20_000_000;

/// Largest primary labeling table [`certify`] will materialize.
const MAX_CERTIFIED_LABELINGS: usize = 1 << 16;

/// Number of primary nodes each primary node shares with `t` same-label
/// neighbors: the smallest same-label neighbor count over primary nodes.
pub fn correction_level(
    g: &BipartiteDesign,
    primary: &Labeling,
    redundant: &Labeling,
) -> Result<usize> {
    if primary.len() != g.k() || redundant.len() != g.m() {
        return Err(invalid("labeling lengths do not match the design"));
    }
    let mut hits = vec![0usize; g.k()];
    for (set, &y) in g.redundant().iter().zip(redundant.symbols()) {
        for &u in set {
            if primary.symbols()[u] == y {
                hits[u] += 1;
            }
        }
    }
    Ok(hits.into_iter().min().unwrap_or(0))
}

struct Counter {
    used: u64,
    budget: u64,
}

impl Counter {
    fn new(budget: u64) -> Self {
        Counter { used: 0, budget }
    }

    #[inline]
    fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.budget {
            Err(Error::BudgetExceeded {
                budget: self.budget,
                context: "exhaustive correction search".into(),
            })
        } else {
            Ok(())
        }
    }
}

/// Redundant nodes grouped by neighborhood.
struct Instance {
    k: usize,
    q: usize,
    /// `(members, multiplicity)` per distinct neighborhood.
    groups: Vec<(Vec<usize>, u32)>,
    degree: Vec<u32>,
}

impl Instance {
    fn from_masks(k: usize, q: usize, masks: &[u64]) -> Self {
        let mut counts: BTreeMap<u64, u32> = BTreeMap::new();
        for &mask in masks {
            *counts.entry(mask).or_default() += 1;
        }
        let mut degree = vec![0u32; k];
        let groups = counts
            .into_iter()
            .map(|(mask, mult)| {
                let members: Vec<usize> = (0..k).filter(|&u| mask >> u & 1 == 1).collect();
                for &u in &members {
                    degree[u] += mult;
                }
                (members, mult)
            })
            .collect();
        Instance {
            k,
            q,
            groups,
            degree,
        }
    }

    fn from_design(g: &BipartiteDesign, q: usize) -> Result<Self> {
        check_alphabet(q)?;
        if g.k() > 64 {
            return Err(invalid("exhaustive verification supports at most 64 primary nodes"));
        }
        Ok(Self::from_masks(g.k(), q, &g.masks()))
    }

    /// Best achievable minimum for one primary labeling, stopping early once
    /// `cap` is reached.
    fn best(&self, x: &[u8], cap: u32, counter: &mut Counter) -> Result<u32> {
        let mut matches = vec![0u32; self.k];
        let mut free = Vec::new();
        for (members, mult) in &self.groups {
            let mut by_label: Vec<(u8, Vec<usize>)> = Vec::new();
            for &u in members {
                match by_label.iter_mut().find(|(l, _)| *l == x[u]) {
                    Some((_, list)) => list.push(u),
                    None => by_label.push((x[u], vec![u])),
                }
            }
            if by_label.len() == 1 {
                // Only one useful label: the assignment is forced.
                for &u in members {
                    matches[u] += mult;
                }
            } else {
                free.push((by_label.into_iter().map(|(_, v)| v).collect::<Vec<_>>(), *mult));
            }
        }
        free.sort_by_key(|(opts, mult)| {
            std::cmp::Reverse(*mult as usize * opts.iter().map(Vec::len).sum::<usize>())
        });

        // suffix[g][u]: multiplicity still undecided at primary u from group g on.
        let mut suffix = vec![vec![0u32; self.k]; free.len() + 1];
        for gi in (0..free.len()).rev() {
            suffix[gi] = suffix[gi + 1].clone();
            for members in &free[gi].0 {
                for &u in members {
                    suffix[gi][u] += free[gi].1;
                }
            }
        }

        let mut search = MaxMin {
            free: &free,
            suffix: &suffix,
            matches,
            best: -1,
            cap: cap as i64,
            counter,
        };
        search.group(0)?;
        Ok(search.best.max(0) as u32)
    }

    /// Lexicographically first redundant labeling reaching `target` under the
    /// original node order, or `None` if the target is out of reach.
    fn lex_witness(
        &self,
        masks: &[u64],
        x: &[u8],
        target: u32,
        counter: &mut Counter,
    ) -> Result<Option<Vec<u8>>> {
        let m = masks.len();
        let members: Vec<Vec<usize>> = masks
            .iter()
            .map(|&mask| (0..self.k).filter(|&u| mask >> u & 1 == 1).collect())
            .collect();
        let mut rest = vec![vec![0u32; self.k]; m + 1];
        for v in (0..m).rev() {
            rest[v] = rest[v + 1].clone();
            for &u in &members[v] {
                rest[v][u] += 1;
            }
        }
        let mut state = LexSearch {
            q: self.q as u8,
            x,
            members: &members,
            rest: &rest,
            target,
            matches: vec![0; self.k],
            labels: vec![0; m],
            counter,
        };
        if state.feasible(0) && state.dfs(0)? {
            Ok(Some(state.labels))
        } else {
            Ok(None)
        }
    }
}

struct MaxMin<'a> {
    free: &'a [(Vec<Vec<usize>>, u32)],
    suffix: &'a [Vec<u32>],
    matches: Vec<u32>,
    best: i64,
    cap: i64,
    counter: &'a mut Counter,
}

impl MaxMin<'_> {
    fn done(&self) -> bool {
        self.best >= self.cap
    }

    fn group(&mut self, gi: usize) -> Result<()> {
        if self.done() {
            return Ok(());
        }
        self.counter.tick()?;
        let bound = self
            .matches
            .iter()
            .zip(&self.suffix[gi])
            .map(|(a, b)| a + b)
            .min()
            .unwrap_or(0) as i64;
        if bound <= self.best {
            return Ok(());
        }
        if gi == self.free.len() {
            self.best = bound;
            return Ok(());
        }
        // Give the most to the label whose members are currently worst off.
        let opts = &self.free[gi].0;
        let mut order: Vec<usize> = (0..opts.len()).collect();
        order.sort_by_key(|&o| opts[o].iter().map(|&u| self.matches[u]).min());
        self.split(gi, &order, 0, self.free[gi].1)
    }

    fn split(&mut self, gi: usize, order: &[usize], oi: usize, remaining: u32) -> Result<()> {
        let members = &self.free[gi].0[order[oi]];
        if oi + 1 == order.len() {
            self.apply(members, remaining, true);
            let r = self.group(gi + 1);
            self.apply(members, remaining, false);
            return r;
        }
        for amount in (0..=remaining).rev() {
            self.apply(members, amount, true);
            let r = self.split(gi, order, oi + 1, remaining - amount);
            self.apply(members, amount, false);
            r?;
            if self.done() {
                break;
            }
        }
        Ok(())
    }

    #[inline]
    fn apply(&mut self, members: &[usize], amount: u32, add: bool) {
        for &u in members {
            if add {
                self.matches[u] += amount;
            } else {
                self.matches[u] -= amount;
            }
        }
    }
}

struct LexSearch<'a> {
    q: u8,
    x: &'a [u8],
    members: &'a [Vec<usize>],
    rest: &'a [Vec<u32>],
    target: u32,
    matches: Vec<u32>,
    labels: Vec<u8>,
    counter: &'a mut Counter,
}

impl LexSearch<'_> {
    fn feasible(&self, v: usize) -> bool {
        self.matches
            .iter()
            .zip(&self.rest[v])
            .all(|(a, b)| a + b >= self.target)
    }

    fn dfs(&mut self, v: usize) -> Result<bool> {
        self.counter.tick()?;
        if v == self.members.len() {
            return Ok(true);
        }
        for label in 0..self.q {
            for &u in &self.members[v] {
                if self.x[u] == label {
                    self.matches[u] += 1;
                }
            }
            let ok = self.feasible(v + 1) && self.dfs(v + 1)?;
            for &u in &self.members[v] {
                if self.x[u] == label {
                    self.matches[u] -= 1;
                }
            }
            if ok {
                self.labels[v] = label;
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn check_alphabet(q: usize) -> Result<()> {
    if !(2..=255).contains(&q) {
        return Err(invalid("alphabet size must lie in [2, 255]"));
    }
    Ok(())
}

/// Calls `f` on every primary labeling of length `k` over `q` symbols in
/// restricted-growth form, stopping when `f` returns `false`.
fn for_each_rgs(
    k: usize,
    q: usize,
    f: &mut dyn FnMut(&[u8]) -> Result<bool>,
) -> Result<bool> {
    fn rec(
        x: &mut Vec<u8>,
        k: usize,
        q: usize,
        used: usize,
        f: &mut dyn FnMut(&[u8]) -> Result<bool>,
    ) -> Result<bool> {
        if x.len() == k {
            return f(x);
        }
        for label in 0..(used + 1).min(q) {
            x.push(label as u8);
            let go_on = rec(x, k, q, used.max(label + 1), f)?;
            x.pop();
            if !go_on {
                return Ok(false);
            }
        }
        Ok(true)
    }
    rec(&mut Vec::with_capacity(k), k, q, 0, f)
}

/// Best correction for one primary labeling, with the lexicographically first
/// redundant labeling that attains it.
pub fn best_correction(
    g: &BipartiteDesign,
    primary: &Labeling,
    budget: u64,
) -> Result<(usize, Labeling)> {
    let q = primary.q();
    let inst = Instance::from_design(g, q)?;
    if primary.len() != g.k() {
        return Err(invalid("primary labeling length differs from k"));
    }
    let x: Vec<u8> = primary.symbols().iter().map(|&s| s as u8).collect();
    let mut counter = Counter::new(budget);
    let t = inst.best(&x, u32::MAX, &mut counter)?;
    let labels = inst
        .lex_witness(&g.masks(), &x, t, &mut counter)?
        .expect("the optimum is attainable");
    let witness = Labeling::new(labels.into_iter().map(usize::from).collect(), q)?;
    Ok((t as usize, witness))
}

/// Largest `t` for which `g` is `t`-defect correcting over `q` symbols.
pub fn design_t(g: &BipartiteDesign, q: usize, budget: u64) -> Result<usize> {
    let inst = Instance::from_design(g, q)?;
    let mut running = inst.degree.iter().copied().min().unwrap_or(0);
    if running == 0 {
        return Ok(0);
    }
    let mut counter = Counter::new(budget);
    for_each_rgs(g.k(), q, &mut |x| {
        running = running.min(inst.best(x, running, &mut counter)?);
        Ok(running > 0)
    })?;
    Ok(running as usize)
}

/// Whether `g` corrects `t` defects over `q` symbols.
pub fn is_t_correcting(g: &BipartiteDesign, q: usize, t: usize, budget: u64) -> Result<bool> {
    let inst = Instance::from_design(g, q)?;
    correcting(&inst, &g.masks(), t as u32, budget)
}

fn correcting(inst: &Instance, masks: &[u64], t: u32, budget: u64) -> Result<bool> {
    if t == 0 {
        return Ok(true);
    }
    if !passes_necessary_conditions(inst.k, inst.q, masks, t) {
        return Ok(false);
    }
    let mut counter = Counter::new(budget);
    let mut ok = true;
    for_each_rgs(inst.k, inst.q, &mut |x| {
        ok = inst.best(x, t, &mut counter)? >= t;
        Ok(ok)
    })?;
    Ok(ok)
}

/// Cheap refutations. Any `b <= q` primary nodes can be labeled pairwise
/// differently, and then each needs `t` neighbors of its own, so together they
/// need `b * t` distinct redundant neighbors. With `b = 2` this says two
/// primary nodes of degree exactly `t` must have disjoint neighborhoods.
fn passes_necessary_conditions(k: usize, q: usize, masks: &[u64], t: u32) -> bool {
    let mut degree = vec![0u32; k];
    for &mask in masks {
        for (u, d) in degree.iter_mut().enumerate() {
            *d += (mask >> u & 1) as u32;
        }
    }
    if degree.iter().any(|&d| d < t) {
        return false;
    }
    for a in 0..k {
        for b in a + 1..k {
            if degree[a] == t && degree[b] == t {
                let pair = 1u64 << a | 1u64 << b;
                if masks.iter().any(|&m| m & pair == pair) {
                    return false;
                }
            }
        }
    }
    if k <= 20 {
        for subset in 1u64..(1u64 << k) {
            let b = subset.count_ones();
            if b < 2 || b as usize > q {
                continue;
            }
            let covered = masks.iter().filter(|&&m| m & subset != 0).count() as u32;
            if covered < b * t {
                return false;
            }
        }
    }
    true
}

/// Proof that a design corrects `t` defects: one redundant labeling per
/// primary labeling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectionCertificate {
    pub t: usize,
    pub q: usize,
    pub witnesses: Option<BTreeMap<Labeling, Labeling>>,
}

impl CorrectionCertificate {
    /// Re-checks every stored witness against the definition and that no
    /// primary labeling is missing.
    pub fn verify(&self, g: &BipartiteDesign) -> bool {
        let Some(witnesses) = &self.witnesses else {
            return false;
        };
        let expected = (self.q as u128).checked_pow(g.k() as u32);
        if expected != Some(witnesses.len() as u128) {
            return false;
        }
        witnesses.iter().all(|(x, y)| {
            x.q() == self.q
                && correction_level(g, x, y).is_ok_and(|level| level >= self.t)
        })
    }
}

/// Computes `design_t` together with a witness for every primary labeling.
pub fn certify(g: &BipartiteDesign, q: usize, budget: u64) -> Result<CorrectionCertificate> {
    let t = design_t(g, q, budget)?;
    let total = (q as u128).checked_pow(g.k() as u32).unwrap_or(u128::MAX);
    if total > MAX_CERTIFIED_LABELINGS as u128 {
        return Err(Error::BudgetExceeded {
            budget: MAX_CERTIFIED_LABELINGS as u64,
            context: format!("a certificate would list {total} primary labelings"),
        });
    }
    let inst = Instance::from_design(g, q)?;
    let masks = g.masks();
    let mut counter = Counter::new(budget);
    let mut witnesses = BTreeMap::new();
    for x in (0..g.k()).map(|_| 0..q as u8).multi_cartesian_product() {
        let y = inst
            .lex_witness(&masks, &x, t as u32, &mut counter)?
            .expect("design_t is attainable for every primary labeling");
        witnesses.insert(
            Labeling::new(x.into_iter().map(usize::from).collect(), q)?,
            Labeling::new(y.into_iter().map(usize::from).collect(), q)?,
        );
    }
    Ok(CorrectionCertificate {
        t,
        q,
        witnesses: Some(witnesses),
    })
}

/// Size limits for [`search_min_edges`].
#[derive(Clone, Debug)]
pub struct SearchLimits {
    pub max_k: usize,
    pub max_m: usize,
    pub max_q: usize,
    /// Per oracle call.
    pub budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_k: 5,
            max_m: 8,
            max_q: 4,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub e_min: usize,
    /// First entry of `all_witnesses`.
    pub witness: BipartiteDesign,
    /// One representative per isomorphism class attaining `e_min`.
    pub all_witnesses: Vec<BipartiteDesign>,
    /// Number of distinct isomorphism classes sent to the oracle.
    pub designs_checked: usize,
}

/// Primary relabelings as lookup tables over neighborhood masks.
struct PermTables {
    tables: Vec<Vec<u16>>,
}

impl PermTables {
    fn new(k: usize) -> Self {
        let tables = (0..k)
            .permutations(k)
            .map(|perm| {
                (0..1u32 << k)
                    .map(|mask| {
                        (0..k)
                            .filter(|&u| mask >> u & 1 == 1)
                            .fold(0u16, |acc, u| acc | 1 << perm[u])
                    })
                    .collect()
            })
            .collect();
        PermTables { tables }
    }

    /// Smallest sorted mask list over all relabelings.
    fn canonical(&self, masks: &[u16]) -> Vec<u16> {
        let mut best: Option<Vec<u16>> = None;
        let mut buf = Vec::with_capacity(masks.len());
        for table in &self.tables {
            buf.clear();
            buf.extend(masks.iter().map(|&m| table[m as usize]));
            buf.sort_unstable();
            if best.as_ref().is_none_or(|b| buf < *b) {
                best = Some(buf.clone());
            }
        }
        best.unwrap_or_default()
    }
}

/// Canonical form of a design under primary relabeling: the smallest sorted
/// list of neighborhood masks. Two designs are isomorphic iff their canonical
/// forms agree.
pub fn canonical_form(g: &BipartiteDesign) -> Result<Vec<u16>> {
    if g.k() > 8 {
        return Err(invalid("canonical forms are limited to k <= 8"));
    }
    let masks: Vec<u16> = g.masks().into_iter().map(|m| m as u16).collect();
    Ok(PermTables::new(g.k()).canonical(&masks))
}

fn design_from_masks(k: usize, masks: &[u16]) -> BipartiteDesign {
    let sets = masks
        .iter()
        .map(|&m| (0..k).filter(|&u| m >> u & 1 == 1).collect())
        .collect();
    BipartiteDesign::new(k, sets).expect("masks are non-empty and in range")
}

/// Fewest edges of any `t`-correcting design on `k` primary and `m` redundant
/// nodes over `q` symbols.
///
/// Correctability survives adding edges, so the search walks down from the
/// complete design one edge at a time and only expands designs that still
/// correct. The last non-empty level is the minimum.
pub fn search_min_edges(
    k: usize,
    m: usize,
    t: usize,
    q: usize,
    limits: &SearchLimits,
) -> Result<SearchOutcome> {
    check_alphabet(q)?;
    if k == 0 || m == 0 || t == 0 {
        return Err(invalid("search needs k, m and t at least 1"));
    }
    if k > limits.max_k || m > limits.max_m || q > limits.max_q || k > 8 {
        return Err(Error::BudgetExceeded {
            budget: limits.budget,
            context: format!(
                "search limited to k <= {}, m <= {}, q <= {}",
                limits.max_k.min(8),
                limits.max_m,
                limits.max_q
            ),
        });
    }
    let perms = PermTables::new(k);
    let check = |masks: &[u16]| -> Result<bool> {
        let wide: Vec<u64> = masks.iter().map(|&m| m as u64).collect();
        let inst = Instance::from_masks(k, q, &wide);
        correcting(&inst, &wide, t as u32, limits.budget)
    };

    let full = ((1u32 << k) - 1) as u16;
    let complete = vec![full; m];
    let mut checked = 1;
    if !check(&complete)? {
        return Err(Error::Infeasible(format!(
            "no design with k = {k}, m = {m} corrects {t} defects over {q} symbols"
        )));
    }

    let mut level = vec![complete];
    let mut edges = k * m;
    loop {
        let mut seen: HashSet<Vec<u16>> = HashSet::new();
        let mut candidates = Vec::new();
        for masks in &level {
            for (j, &mask) in masks.iter().enumerate() {
                if mask.count_ones() < 2 || (j > 0 && masks[j - 1] == mask) {
                    continue;
                }
                for u in 0..k {
                    if mask >> u & 1 == 0 {
                        continue;
                    }
                    let mut child = masks.clone();
                    child[j] = mask & !(1 << u);
                    let canon = perms.canonical(&child);
                    if seen.insert(canon.clone()) {
                        candidates.push(canon);
                    }
                }
            }
        }
        checked += candidates.len();
        let verdicts: Vec<Result<bool>> = candidates.par_iter().map(|c| check(c)).collect();
        let mut next = Vec::new();
        for (candidate, verdict) in candidates.into_iter().zip(verdicts) {
            if verdict? {
                next.push(candidate);
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
        edges -= 1;
    }

    level.sort();
    let all_witnesses: Vec<BipartiteDesign> =
        level.iter().map(|masks| design_from_masks(k, masks)).collect();
    Ok(SearchOutcome {
        e_min: edges,
        witness: all_witnesses[0].clone(),
        all_witnesses,
        designs_checked: checked,
    })
}

/// Number of isomorphism classes among the given designs.
pub fn count_isomorphism_classes(designs: &[BipartiteDesign]) -> Result<usize> {
    let mut classes: HashMap<Vec<u16>, ()> = HashMap::new();
    for g in designs {
        classes.insert(canonical_form(g)?, ());
    }
    Ok(classes.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{hamming_block, make_complete, make_repetition, make_subset};

    const B: u64 = DEFAULT_BUDGET;

    fn lab(x: &[usize], q: usize) -> Labeling {
        Labeling::new(x.to_vec(), q).unwrap()
    }

    /// Plain enumeration of all redundant labelings.
    fn brute_best(g: &BipartiteDesign, x: &Labeling) -> (usize, Vec<usize>) {
        let q = x.q();
        let mut best = (0, vec![0; g.m()]);
        let mut first = true;
        for y in (0..g.m()).map(|_| 0..q).multi_cartesian_product() {
            let level = correction_level(g, x, &lab(&y, q)).unwrap();
            if first || level > best.0 {
                best = (level, y);
                first = false;
            }
        }
        if g.m() == 0 {
            best.0 = correction_level(g, x, &lab(&[], q)).unwrap();
        }
        best
    }

    fn brute_design_t(g: &BipartiteDesign, q: usize) -> usize {
        (0..g.k())
            .map(|_| 0..q)
            .multi_cartesian_product()
            .map(|x| brute_best(g, &lab(&x, q)).0)
            .min()
            .unwrap()
    }

    #[test]
    fn hamming_block_corrects_two() {
        let h = hamming_block();
        let (t, w) = best_correction(&h, &lab(&[0, 1, 1], 2), B).unwrap();
        assert_eq!(t, 2);
        assert!(correction_level(&h, &lab(&[0, 1, 1], 2), &w).unwrap() >= 2);
        assert_eq!(design_t(&h, 2, B).unwrap(), 2);
        assert!(is_t_correcting(&h, 2, 2, B).unwrap());
        assert!(!is_t_correcting(&h, 2, 3, B).unwrap());
    }

    #[test]
    fn single_primary_node() {
        let g = make_repetition(1, 4).unwrap();
        let (t, w) = best_correction(&g, &lab(&[2], 3), B).unwrap();
        assert_eq!(t, 4);
        assert_eq!(w.symbols(), &[2, 2, 2, 2]);
    }

    #[test]
    fn witness_is_lexicographically_first_maximizer() {
        let designs = [
            make_subset(3, &[2]).unwrap(),
            hamming_block(),
            BipartiteDesign::new(4, vec![vec![0, 1], vec![1, 2, 3], vec![3], vec![0, 3]]).unwrap(),
        ];
        for g in &designs {
            for x in (0..g.k()).map(|_| 0..2).multi_cartesian_product() {
                let x = lab(&x, 2);
                let (t, w) = best_correction(g, &x, B).unwrap();
                let (bt, bw) = brute_best(g, &x);
                assert_eq!((t, w.symbols().to_vec()), (bt, bw), "{g} under {x:?}");
            }
        }
    }

    #[test]
    fn subset_pairs_frozen_values() {
        let g = make_subset(3, &[2]).unwrap();
        // pairs {0,1},{0,2},{1,2} under (0,0,1): node 2 only gets {0,2} or {1,2}
        let (t, _) = best_correction(&g, &lab(&[0, 0, 1], 2), B).unwrap();
        assert_eq!(t, 1);
        assert_eq!(design_t(&g, 2, B).unwrap(), 1);
    }

    #[test]
    fn complete_designs() {
        assert_eq!(design_t(&make_complete(3, 4).unwrap(), 2, B).unwrap(), 2);
        assert_eq!(design_t(&make_complete(4, 3).unwrap(), 3, B).unwrap(), 1);
        assert_eq!(design_t(&make_complete(2, 6).unwrap(), 3, B).unwrap(), 3);
    }

    #[test]
    fn repetition_corrects_over_any_alphabet() {
        for q in 2..5 {
            assert!(is_t_correcting(&make_repetition(2, 3).unwrap(), q, 3, B).unwrap());
        }
        assert_eq!(design_t(&make_repetition(2, 3).unwrap(), 2, B).unwrap(), 3);
    }

    #[test]
    fn matches_brute_force_on_small_designs() {
        let designs = [
            make_subset(4, &[3]).unwrap(),
            BipartiteDesign::new(3, vec![vec![0, 1], vec![0, 1, 2]]).unwrap(),
            BipartiteDesign::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap(),
            BipartiteDesign::new(4, vec![vec![0, 1], vec![2, 3], vec![0, 1, 2, 3]]).unwrap(),
        ];
        for g in &designs {
            for q in 2..4 {
                assert_eq!(design_t(g, q, B).unwrap(), brute_design_t(g, q), "{g} q={q}");
            }
        }
        assert_eq!(design_t(&make_subset(4, &[3]).unwrap(), 2, B).unwrap(), 1);
    }

    #[test]
    fn ternary_two_cycle_design() {
        let g =
            BipartiteDesign::new(4, vec![vec![0, 1], vec![2, 3], vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(design_t(&g, 3, B).unwrap(), 1);
    }

    #[test]
    fn budget_is_an_error_not_a_verdict() {
        let g = make_subset(4, &[2, 2, 3]).unwrap();
        assert!(matches!(design_t(&g, 2, 3), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(
            is_t_correcting(&g, 2, 1, 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn certificate_round_trip() {
        let cert = certify(&hamming_block(), 2, B).unwrap();
        assert_eq!(cert.t, 2);
        assert_eq!(cert.witnesses.as_ref().unwrap().len(), 8);
        assert!(cert.verify(&hamming_block()));
        let mut forged = cert.clone();
        forged.t = 3;
        assert!(!forged.verify(&hamming_block()));
    }

    #[test]
    fn small_searches() {
        let lim = SearchLimits::default();
        let out = search_min_edges(3, 2, 1, 2, &lim).unwrap();
        assert_eq!(out.e_min, 5);
        assert!(is_t_correcting(&out.witness, 2, 1, B).unwrap());

        let out = search_min_edges(3, 4, 2, 2, &lim).unwrap();
        assert_eq!(out.e_min, 9);
        assert!(out
            .all_witnesses
            .iter()
            .any(|w| canonical_form(w).unwrap() == canonical_form(&hamming_block()).unwrap()));

        assert!(matches!(search_min_edges(3, 1, 1, 2, &lim), Err(Error::Infeasible(_))));
        assert!(matches!(
            search_min_edges(6, 2, 1, 2, &lim),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn canonical_form_detects_isomorphism() {
        let a = BipartiteDesign::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let b = BipartiteDesign::new(3, vec![vec![0, 2], vec![0, 1]]).unwrap();
        let c = BipartiteDesign::new(3, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(canonical_form(&a).unwrap(), canonical_form(&b).unwrap());
        assert_ne!(canonical_form(&a).unwrap(), canonical_form(&c).unwrap());
        assert_eq!(count_isomorphism_classes(&[a, b, c]).unwrap(), 2);
    }
}
