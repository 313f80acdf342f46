//! Finite-k functionals for merged subset designs.
//!
//! For a subset design with `k` primary nodes, the neighborhood of a random
//! redundant node of degree `s` is a uniform `s`-subset, so under a primary
//! labeling with label counts `k_1..k_q` its label counts (its *type*) are
//! multivariate hypergeometric. `F_k` is the worst case over label counts of
//! the best fractional relabeling of types; `F_{k,n}` restricts the fractions
//! to multiples of `1/n`. All data here is exact.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::design::binomial;
use crate::error::{invalid, Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::rational::{self, int};

/// A finitely supported distribution of redundant-node degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeDistribution {
    support: Vec<usize>,
    probs: Vec<BigRational>,
}

impl SizeDistribution {
    /// Requires distinct degrees `>= 1`, non-negative masses and an exact
    /// total of one. Zero-mass degrees are dropped; the rest are sorted.
    pub fn new(support: Vec<usize>, probs: Vec<BigRational>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(invalid("support and probabilities differ in length"));
        }
        let total: BigRational = probs.iter().cloned().sum();
        if !total.is_one() {
            return Err(invalid(format!(
                "probabilities sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Self::build(support, probs)
    }

    /// Scales non-negative weights to total one.
    pub fn normalized(support: Vec<usize>, weights: Vec<BigRational>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(invalid("support and weights differ in length"));
        }
        let total: BigRational = weights.iter().cloned().sum();
        if !total.is_positive() {
            return Err(invalid("weights must have a positive total"));
        }
        let probs = weights.into_iter().map(|w| w / total.clone()).collect();
        Self::build(support, probs)
    }

    /// Normalizes float weights, each taken at its exact binary value.
    pub fn from_f64_weights(support: Vec<usize>, weights: &[f64]) -> Result<Self> {
        let exact = weights
            .iter()
            .map(|&w| rational::from_f64(w))
            .collect::<Result<Vec<_>>>()?;
        Self::normalized(support, exact)
    }

    /// Unit mass at `s`.
    pub fn point(s: usize) -> Result<Self> {
        Self::new(vec![s], vec![BigRational::one()])
    }

    /// Degree proportions of the subset design on `k` primary nodes with
    /// one block per entry of `sizes`, weighted by redundant-node counts.
    pub fn from_subset_sizes(k: usize, sizes: &[usize]) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0 || s > k) {
            return Err(invalid(format!("subset sizes must lie in [1, {k}]")));
        }
        let mut counts: BTreeMap<usize, u128> = BTreeMap::new();
        for &s in sizes {
            *counts.entry(s).or_default() += binomial(k, s);
        }
        let (support, weights) = counts
            .into_iter()
            .map(|(s, c)| (s, BigRational::from_integer(BigInt::from(c))))
            .unzip();
        Self::normalized(support, weights)
    }

    fn build(support: Vec<usize>, probs: Vec<BigRational>) -> Result<Self> {
        let mut pairs: Vec<(usize, BigRational)> = Vec::new();
        for (s, p) in support.into_iter().zip(probs) {
            if s == 0 {
                return Err(invalid("degrees must be at least 1"));
            }
            if p.is_negative() {
                return Err(invalid("probabilities must be non-negative"));
            }
            if pairs.iter().any(|(t, _)| *t == s) {
                return Err(invalid(format!("degree {s} listed twice")));
            }
            if !p.is_zero() {
                pairs.push((s, p));
            }
        }
        if pairs.is_empty() {
            return Err(invalid("empty support"));
        }
        pairs.sort_by_key(|(s, _)| *s);
        let (support, probs) = pairs.into_iter().unzip();
        Ok(SizeDistribution { support, probs })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(rational::to_f64).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.support.iter().copied().zip(&self.probs)
    }

    pub fn max_degree(&self) -> usize {
        *self.support.last().expect("support is non-empty")
    }

    /// `E[S^r]`.
    pub fn moment(&self, r: u32) -> BigRational {
        self.iter()
            .map(|(s, p)| p * int(s.pow(r) as i64))
            .sum()
    }

    pub fn mean(&self) -> BigRational {
        self.moment(1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for SizeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .iter()
            .map(|(s, p)| format!("{s}:{}", rational::format(p)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct SizeDistributionFile {
    support: Vec<usize>,
    probs: Vec<serde_json::Value>,
}

impl Serialize for SizeDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SizeDistributionFile {
            support: self.support.clone(),
            probs: self
                .probs
                .iter()
                .map(|p| serde_json::Value::String(rational::format(p)))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SizeDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = SizeDistributionFile::deserialize(deserializer)?;
        let probs = file
            .probs
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => rational::parse(s),
                serde_json::Value::Number(n) => rational::parse(&n.to_string()),
                _ => Err(Error::Parse("probabilities must be strings or numbers".into())),
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        SizeDistribution::new(file.support, probs).map_err(D::Error::custom)
    }
}

/// Label counts among a redundant node's neighbors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeVector {
    pub counts: Vec<usize>,
}

impl TypeVector {
    pub fn new(counts: Vec<usize>) -> Self {
        TypeVector { counts }
    }

    pub fn degree(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of labels that actually occur.
    pub fn labels_present(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Label counts among the `k` primary nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CompositionPX {
    pub counts: Vec<usize>,
}

impl CompositionPX {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.iter().sum::<usize>() == 0 {
            return Err(invalid("a composition needs at least one primary node"));
        }
        Ok(CompositionPX { counts })
    }

    pub fn k(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn q(&self) -> usize {
        self.counts.len()
    }

    pub fn px(&self) -> Vec<BigRational> {
        let k = self.k() as i64;
        self.counts
            .iter()
            .map(|&c| rational::frac(c as i64, k))
            .collect()
    }
}

/// All vectors of `q` non-negative integers summing to `s`, in lexicographic
/// order.
pub fn type_vectors(s: usize, q: usize) -> Vec<TypeVector> {
    fn rec(prefix: &mut Vec<usize>, left: usize, q: usize, out: &mut Vec<TypeVector>) {
        if prefix.len() + 1 == q {
            prefix.push(left);
            out.push(TypeVector::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(prefix, left - c, q, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if q > 0 {
        rec(&mut Vec::with_capacity(q), s, q, &mut out);
    }
    out
}

fn big_binomial(n: usize, r: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(binomial(n, r)))
}

/// `P[type = l]` when `s` of the `k` primary nodes are drawn without
/// replacement.
pub fn hypergeom_pmf(
    l: &TypeVector,
    s: usize,
    k: usize,
    px: &CompositionPX,
) -> Result<BigRational> {
    if s > k {
        return Err(invalid(format!("cannot draw {s} of {k} primary nodes")));
    }
    if px.k() != k || l.counts.len() != px.q() {
        return Err(invalid("type, composition and k are inconsistent"));
    }
    if l.degree() != s {
        return Err(invalid("type counts do not sum to the degree"));
    }
    let numer = l
        .counts
        .iter()
        .zip(&px.counts)
        .fold(BigRational::one(), |acc, (&lj, &kj)| acc * big_binomial(kj, lj));
    Ok(numer / big_binomial(k, s))
}

fn multinomial_coefficient(l: &TypeVector) -> BigRational {
    let mut left = l.degree();
    let mut acc = BigRational::one();
    for &c in &l.counts {
        acc *= big_binomial(left, c);
        left -= c;
    }
    acc
}

/// `P[type = l]` when `s` labels are drawn independently from `px`.
pub fn multinomial_pmf(l: &TypeVector, s: usize, px: &[f64]) -> Result<f64> {
    if l.degree() != s || l.counts.len() != px.len() {
        return Err(invalid("type does not match the degree or alphabet"));
    }
    let coef = multinomial_coefficient(l).to_f64().unwrap_or(f64::INFINITY);
    Ok(l.counts
        .iter()
        .zip(px)
        .fold(coef, |acc, (&c, &p)| acc * p.powi(c as i32)))
}

pub fn multinomial_pmf_exact(l: &TypeVector, s: usize, px: &[BigRational]) -> Result<BigRational> {
    if l.degree() != s || l.counts.len() != px.len() {
        return Err(invalid("type does not match the degree or alphabet"));
    }
    Ok(l.counts.iter().zip(px).fold(multinomial_coefficient(l), |acc, (&c, p)| {
        acc * num_traits::pow(p.clone(), c)
    }))
}

/// Exact total variation between drawing `s` labels with and without
/// replacement.
pub fn tv_hypergeom_multinomial(s: usize, k: usize, px: &CompositionPX) -> Result<BigRational> {
    if s > k {
        return Err(invalid(format!("cannot draw {s} of {k} primary nodes")));
    }
    let probs = px.px();
    let mut total = BigRational::zero();
    for l in type_vectors(s, px.q()) {
        let h = hypergeom_pmf(&l, s, k, px)?;
        let m = multinomial_pmf_exact(&l, s, &probs)?;
        total += (h - m).abs();
    }
    Ok(total / int(2))
}

/// Largest `k` that [`f_k`] enumerates for a given alphabet.
pub fn max_k_for(q: usize) -> usize {
    match q {
        2 => 12,
        3 => 8,
        _ => 6,
    }
}

/// Primary label counts up to relabeling: non-increasing positive parts.
pub fn sorted_compositions(k: usize, q: usize) -> Vec<CompositionPX> {
    fn rec(prefix: &mut Vec<usize>, left: usize, cap: usize, q: usize, out: &mut Vec<CompositionPX>) {
        if left == 0 {
            out.push(CompositionPX {
                counts: prefix.clone(),
            });
            return;
        }
        if prefix.len() == q {
            return;
        }
        for part in (1..=left.min(cap)).rev() {
            prefix.push(part);
            rec(prefix, left - part, part, q, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), k, k, q, &mut out);
    out
}

/// A type that mixes labels, with its useful labels and their weights.
#[derive(Clone, Debug)]
pub struct MixedType {
    pub ty: TypeVector,
    /// `(label, weight)` for labels present in the type.
    pub options: Vec<(usize, BigRational)>,
}

/// The inner problem for one composition: maximize over fractional
/// relabelings `y` the smallest `base[j] + sum of weight * y` over labels.
#[derive(Clone, Debug)]
pub struct InnerProblem {
    pub composition: CompositionPX,
    /// Contribution of single-label types, which always keep their label.
    pub base: Vec<BigRational>,
    pub mixed: Vec<MixedType>,
}

impl InnerProblem {
    /// Weights `(k / k_j) * P_S(s) * P[type] * l_j`.
    pub fn new(ps: &SizeDistribution, composition: &CompositionPX) -> Result<Self> {
        let k = composition.k();
        let r = composition.q();
        let mut base = vec![BigRational::zero(); r];
        let mut mixed = Vec::new();
        for (s, p) in ps.iter() {
            for ty in type_vectors(s, r) {
                if ty.counts.iter().zip(&composition.counts).any(|(l, c)| l > c) {
                    continue;
                }
                let mass = p * hypergeom_pmf(&ty, s, k, composition)?;
                let options: Vec<(usize, BigRational)> = ty
                    .counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l > 0)
                    .map(|(j, &l)| {
                        (
                            j,
                            mass.clone() * int((k * l) as i64) / int(composition.counts[j] as i64),
                        )
                    })
                    .collect();
                if options.len() == 1 {
                    base[options[0].0] += options[0].1.clone();
                } else {
                    mixed.push(MixedType { ty, options });
                }
            }
        }
        Ok(InnerProblem {
            composition: composition.clone(),
            base,
            mixed,
        })
    }

    /// Per-label value of a relabeling, `y[i][o]` matching `mixed[i].options[o]`.
    pub fn label_values(&self, y: &[Vec<BigRational>]) -> Vec<BigRational> {
        let mut values = self.base.clone();
        for (t, ys) in self.mixed.iter().zip(y) {
            for ((j, w), v) in t.options.iter().zip(ys) {
                values[*j] += w.clone() * v.clone();
            }
        }
        values
    }

    pub fn value_of(&self, y: &[Vec<BigRational>]) -> BigRational {
        self.label_values(y)
            .into_iter()
            .min()
            .expect("at least one label")
    }

    /// Exact LP optimum and an optimal vertex.
    pub fn solve(&self) -> Result<(BigRational, Vec<Vec<BigRational>>)> {
        if self.mixed.is_empty() {
            return Ok((self.value_of(&[]), Vec::new()));
        }
        let mut offsets = Vec::with_capacity(self.mixed.len());
        let mut n_vars = 1;
        for t in &self.mixed {
            offsets.push(n_vars);
            n_vars += t.options.len();
        }
        let mut objective = vec![BigRational::zero(); n_vars];
        objective[0] = BigRational::one();
        let mut lp = LinearProgram::new(Sense::Maximize, objective);
        for j in 0..self.composition.q() {
            let mut row = vec![BigRational::zero(); n_vars];
            row[0] = BigRational::one();
            for (t, &off) in self.mixed.iter().zip(&offsets) {
                for (o, (label, w)) in t.options.iter().enumerate() {
                    if *label == j {
                        row[off + o] = -w.clone();
                    }
                }
            }
            lp.add_constraint(row, Relation::Le, self.base[j].clone());
        }
        for (t, &off) in self.mixed.iter().zip(&offsets) {
            let mut row = vec![BigRational::zero(); n_vars];
            for o in 0..t.options.len() {
                row[off + o] = BigRational::one();
            }
            lp.add_constraint(row, Relation::Le, BigRational::one());
        }
        let sol = lp.solve()?;
        let y = self
            .mixed
            .iter()
            .zip(&offsets)
            .map(|(t, &off)| sol.x[off..off + t.options.len()].to_vec())
            .collect();
        Ok((sol.objective, y))
    }

    /// Number of ways to split `n` units over each type's options.
    fn grid_size(&self, n: usize) -> u128 {
        self.mixed.iter().fold(1u128, |acc, t| {
            acc.saturating_mul(binomial(n + t.options.len() - 1, t.options.len() - 1))
        })
    }

    /// Exact optimum over relabelings in multiples of `1/n`.
    fn grid_optimum(&self, n: usize) -> BigRational {
        // Handing out every unit never hurts since weights are non-negative.
        let splits: Vec<Vec<Vec<usize>>> = self
            .mixed
            .iter()
            .map(|t| {
                type_vectors(n, t.options.len())
                    .into_iter()
                    .map(|v| v.counts)
                    .collect()
            })
            .collect();
        let scale = int(n as i64);
        let mut best: Option<BigRational> = None;
        let mut values = self.base.clone();
        grid_rec(&self.mixed, &splits, &scale, 0, &mut values, &mut best);
        best.expect("grid is non-empty")
    }

    /// Rounds an LP optimizer to multiples of `1/n` by largest remainders.
    /// Each label loses less than `E[S]/n`.
    fn rounded(&self, y: &[Vec<BigRational>], n: usize) -> Vec<Vec<BigRational>> {
        let nn = int(n as i64);
        y.iter()
            .map(|ys| {
                let mut units: Vec<BigRational> = ys.iter().map(|v| v * &nn).collect();
                let used: BigRational = units.iter().cloned().sum();
                // Top up unused mass on the first option.
                units[0] += &nn - used;
                let mut floors: Vec<BigInt> = units.iter().map(|u| u.floor().to_integer()).collect();
                let mut left = n as i64 - floors.iter().map(|f| f.to_i64().unwrap_or(0)).sum::<i64>();
                let mut order: Vec<usize> = (0..units.len()).collect();
                order.sort_by(|&a, &b| {
                    let ra = &units[a] - BigRational::from_integer(floors[a].clone());
                    let rb = &units[b] - BigRational::from_integer(floors[b].clone());
                    rb.cmp(&ra).then(a.cmp(&b))
                });
                for &o in order.iter().cycle() {
                    if left <= 0 {
                        break;
                    }
                    floors[o] += 1;
                    left -= 1;
                }
                floors
                    .into_iter()
                    .map(|f| BigRational::from_integer(f) / &nn)
                    .collect()
            })
            .collect()
    }
}

fn grid_rec(
    mixed: &[MixedType],
    splits: &[Vec<Vec<usize>>],
    scale: &BigRational,
    i: usize,
    values: &mut Vec<BigRational>,
    best: &mut Option<BigRational>,
) {
    if i == mixed.len() {
        let v = values.iter().min().cloned().expect("at least one label");
        if best.as_ref().is_none_or(|b| v > *b) {
            *best = Some(v);
        }
        return;
    }
    for split in &splits[i] {
        let deltas: Vec<(usize, BigRational)> = mixed[i]
            .options
            .iter()
            .zip(split)
            .filter(|(_, &c)| c > 0)
            .map(|((j, w), &c)| (*j, w * int(c as i64) / scale))
            .collect();
        for (j, d) in &deltas {
            values[*j] += d;
        }
        grid_rec(mixed, splits, scale, i + 1, values, best);
        for (j, d) in &deltas {
            values[*j] -= d;
        }
    }
}

fn check_fk_args(ps: &SizeDistribution, k: usize, q: usize) -> Result<()> {
    if q < 2 {
        return Err(invalid("alphabet size must be at least 2"));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if ps.max_degree() > k {
        return Err(invalid(format!(
            "degree {} exceeds k = {k}",
            ps.max_degree()
        )));
    }
    if k > max_k_for(q) {
        return Err(Error::BudgetExceeded {
            budget: max_k_for(q) as u64,
            context: format!("composition enumeration for k = {k}, q = {q}"),
        });
    }
    Ok(())
}

/// `F_k` with the minimizing composition and the optimal relabeling there.
#[derive(Clone, Debug)]
pub struct FkSolution {
    pub value: BigRational,
    pub composition: CompositionPX,
    pub problem: InnerProblem,
    pub relabeling: Vec<Vec<BigRational>>,
    /// Inner optimum for every composition considered.
    pub per_composition: Vec<(CompositionPX, BigRational)>,
}

pub fn f_k_detailed(ps: &SizeDistribution, k: usize, q: usize) -> Result<FkSolution> {
    check_fk_args(ps, k, q)?;
    let solved = sorted_compositions(k, q)
        .par_iter()
        .map(|c| {
            let problem = InnerProblem::new(ps, c)?;
            let (value, y) = problem.solve()?;
            Ok((problem, value, y))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_composition = solved
        .iter()
        .map(|(p, v, _)| (p.composition.clone(), v.clone()))
        .collect();
    // First minimizer in enumeration order.
    let (problem, value, relabeling) = solved
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one composition");
    Ok(FkSolution {
        value,
        composition: problem.composition.clone(),
        problem,
        relabeling,
        per_composition,
    })
}

pub fn f_k(ps: &SizeDistribution, k: usize, q: usize) -> Result<BigRational> {
    Ok(f_k_detailed(ps, k, q)?.value)
}

/// Threshold for exact enumeration of grid relabelings.
const GRID_MAX_TYPES: usize = 6;
const GRID_MAX_N: usize = 6;
const GRID_MAX_POINTS: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FknValue {
    pub value: BigRational,
    /// `false` when the value is only the rounding lower bound.
    pub exact: bool,
}

pub fn f_kn(ps: &SizeDistribution, k: usize, n: usize, q: usize) -> Result<FknValue> {
    check_fk_args(ps, k, q)?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let per = sorted_compositions(k, q)
        .par_iter()
        .map(|c| {
            let problem = InnerProblem::new(ps, c)?;
            let small = problem.mixed.len() <= GRID_MAX_TYPES
                && n <= GRID_MAX_N
                && problem.grid_size(n) <= GRID_MAX_POINTS;
            if small {
                Ok((problem.grid_optimum(n), true))
            } else {
                let (_, y) = problem.solve()?;
                Ok((problem.value_of(&problem.rounded(&y, n)), false))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let value = per.iter().map(|(v, _)| v.clone()).min().expect("non-empty");
    // Exact when an exactly solved composition attains the minimum, since
    // the others can only be larger than their lower bounds.
    let exact = per.iter().any(|(v, e)| *e && *v == value);
    Ok(FknValue { value, exact })
}

/// Bounds on the defects corrected by `n` merged copies of a subset design.
#[derive(Clone, Debug)]
pub struct Sandwich {
    pub lower: BigRational,
    pub upper: BigRational,
    pub lower_exact: bool,
    pub m: usize,
    pub ps: SizeDistribution,
}

pub fn subset_t_sandwich(k: usize, sizes: &[usize], n: usize, q: usize) -> Result<Sandwich> {
    if sizes.is_empty() {
        return Err(invalid("at least one subset size is needed"));
    }
    let ps = SizeDistribution::from_subset_sizes(k, sizes)?;
    let m = n * sizes.iter().map(|&s| binomial(k, s) as usize).sum::<usize>();
    let scale = rational::frac(m as i64, k as i64);
    let fkn = f_kn(&ps, k, n, q)?;
    let fk = f_k(&ps, k, q)?;
    Ok(Sandwich {
        lower: &scale * fkn.value,
        upper: scale * fk,
        lower_exact: fkn.exact,
        m,
        ps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn comp(c: &[usize]) -> CompositionPX {
        CompositionPX::new(c.to_vec()).unwrap()
    }

    fn ty(c: &[usize]) -> TypeVector {
        TypeVector::new(c.to_vec())
    }

    #[test]
    fn hypergeometric_values() {
        assert_eq!(hypergeom_pmf(&ty(&[1, 0]), 1, 2, &comp(&[1, 1])).unwrap(), frac(1, 2));
        assert_eq!(hypergeom_pmf(&ty(&[2, 1]), 3, 3, &comp(&[2, 1])).unwrap(), frac(1, 1));
        assert_eq!(hypergeom_pmf(&ty(&[1, 1]), 2, 4, &comp(&[2, 2])).unwrap(), frac(2, 3));
        assert_eq!(hypergeom_pmf(&ty(&[3, 0]), 3, 4, &comp(&[2, 2])).unwrap(), frac(0, 1));
        assert!(hypergeom_pmf(&ty(&[3, 0]), 3, 2, &comp(&[1, 1])).is_err());
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial_pmf(&ty(&[4, 0]), 4, &[1.0, 0.0]).unwrap(), 1.0);
        assert!((multinomial_pmf(&ty(&[1, 1]), 2, &[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        let p = [frac(2, 3), frac(1, 3)];
        assert_eq!(multinomial_pmf_exact(&ty(&[2, 1]), 3, &p).unwrap(), frac(4, 9));
        assert!(multinomial_pmf(&ty(&[2, 1]), 2, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn pmfs_sum_to_one() {
        for (s, c) in [(2, vec![2, 2]), (3, vec![3, 1, 2]), (4, vec![1, 4])] {
            let px = comp(&c);
            let k = px.k();
            let h: BigRational = type_vectors(s, px.q())
                .iter()
                .map(|l| hypergeom_pmf(l, s, k, &px).unwrap())
                .sum();
            let m: BigRational = type_vectors(s, px.q())
                .iter()
                .map(|l| multinomial_pmf_exact(l, s, &px.px()).unwrap())
                .sum();
            assert!(h.is_one() && m.is_one());
        }
    }

    #[test]
    fn total_variation() {
        assert!(tv_hypergeom_multinomial(1, 5, &comp(&[3, 2])).unwrap().is_zero());
        // hypergeometric puts all mass on (1,1); multinomial puts 1/2 there
        assert_eq!(tv_hypergeom_multinomial(2, 2, &comp(&[1, 1])).unwrap(), frac(1, 2));
        assert!(tv_hypergeom_multinomial(3, 2, &comp(&[1, 1])).is_err());
    }

    #[test]
    fn compositions_up_to_symmetry() {
        let c: Vec<Vec<usize>> = sorted_compositions(4, 2).into_iter().map(|c| c.counts).collect();
        assert_eq!(c, vec![vec![4], vec![3, 1], vec![2, 2]]);
        assert_eq!(sorted_compositions(6, 3).len(), 7);
    }

    #[test]
    fn f_k_known_values() {
        let p3 = SizeDistribution::point(3).unwrap();
        let sol = f_k_detailed(&p3, 3, 2).unwrap();
        assert_eq!(sol.value, frac(3, 2));
        assert_eq!(sol.composition.counts, vec![2, 1]);

        for (k, q) in [(1, 2), (4, 2), (5, 3), (3, 4)] {
            let p1 = SizeDistribution::point(1).unwrap();
            assert_eq!(f_k(&p1, k, q).unwrap(), frac(1, 1), "k={k} q={q}");
        }

        let hamming = SizeDistribution::from_subset_sizes(3, &[2, 3]).unwrap();
        assert_eq!(hamming.probs(), &[frac(3, 4), frac(1, 4)]);
        assert_eq!(f_k(&hamming, 3, 2).unwrap(), frac(3, 2));

        let mix = SizeDistribution::new(vec![1, 2, 3], vec![frac(3, 7), frac(3, 7), frac(1, 7)])
            .unwrap();
        let f = f_k(&mix, 3, 2).unwrap();
        assert_eq!(f, frac(9, 7));
        assert_eq!(mix.mean() / &f, frac(12, 9));
        assert_eq!(BigRational::one() / f, frac(7, 9));
    }

    #[test]
    fn f_k_rejects_large_support() {
        let p4 = SizeDistribution::point(4).unwrap();
        assert!(f_k(&p4, 3, 2).is_err());
        assert!(matches!(f_k(&p4, 40, 2), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn f_kn_values() {
        let p1 = SizeDistribution::point(1).unwrap();
        for n in 1..4 {
            let v = f_kn(&p1, 4, n, 2).unwrap();
            assert_eq!(v, FknValue { value: frac(1, 1), exact: true });
        }
        let p3 = SizeDistribution::point(3).unwrap();
        let v = f_kn(&p3, 3, 2, 2).unwrap();
        assert!(v.exact);
        assert!(v.value <= frac(3, 2) && v.value >= frac(0, 1));

        // k = 2, s = 2, n = 1: composition (1,1) has one mixed type (1,1)
        // with weight 2 per label; whole-unit labeling gives min(2, 0) = 0.
        let p2 = SizeDistribution::point(2).unwrap();
        assert_eq!(f_kn(&p2, 2, 1, 2).unwrap(), FknValue { value: frac(0, 1), exact: true });
        assert_eq!(f_kn(&p2, 2, 2, 2).unwrap().value, frac(1, 1));
        assert_eq!(f_k(&p2, 2, 2).unwrap(), frac(1, 1));
    }

    #[test]
    fn rounding_branch_respects_bound() {
        let ps = SizeDistribution::new(vec![2, 3, 4], vec![frac(1, 3), frac(1, 3), frac(1, 3)])
            .unwrap();
        let fk = f_k(&ps, 8, 2).unwrap();
        for n in [1, 2, 4, 7] {
            let v = f_kn(&ps, 8, n, 2).unwrap();
            assert!(v.value <= fk);
            assert!(v.value >= &fk - ps.mean() / int(n as i64));
        }
    }

    #[test]
    fn threshold_structure_binary() {
        let ps = SizeDistribution::new(vec![2, 3, 5], vec![frac(1, 2), frac(1, 4), frac(1, 4)])
            .unwrap();
        for comp in sorted_compositions(6, 2).into_iter().filter(|c| c.q() == 2) {
            let p = InnerProblem::new(&ps, &comp).unwrap();
            let (_, y) = p.solve().unwrap();
            let mut split_ratios: Vec<BigRational> = p
                .mixed
                .iter()
                .zip(&y)
                .filter(|(_, ys)| ys.iter().any(|v| v.is_positive() && *v < BigRational::one()))
                .map(|(t, _)| frac(t.ty.counts[0] as i64, t.ty.degree() as i64))
                .collect();
            split_ratios.dedup();
            assert!(split_ratios.len() <= 1, "{comp:?}: {split_ratios:?}");
        }
    }

    #[test]
    fn sandwich_values() {
        let h = subset_t_sandwich(3, &[2, 3], 1, 2).unwrap();
        assert_eq!(h.m, 4);
        assert_eq!(h.upper, frac(2, 1));
        assert!(h.lower <= frac(2, 1));

        for n in 1..4 {
            let s = subset_t_sandwich(4, &[1], n, 2).unwrap();
            assert_eq!(s.lower, int(n as i64));
            assert_eq!(s.upper, int(n as i64));
        }
    }

    #[test]
    fn size_distribution_validation_and_json() {
        assert!(SizeDistribution::new(vec![1, 2], vec![frac(1, 2), frac(1, 3)]).is_err());
        assert!(SizeDistribution::new(vec![0], vec![frac(1, 1)]).is_err());
        assert!(SizeDistribution::new(vec![2, 2], vec![frac(1, 2), frac(1, 2)]).is_err());
        let ps = SizeDistribution::new(vec![3, 1], vec![frac(1, 4), frac(3, 4)]).unwrap();
        assert_eq!(ps.support(), &[1, 3]);
        assert_eq!(ps.mean(), frac(3, 2));
        let json = ps.to_json();
        assert_eq!(json, r#"{"support":[1,3],"probs":["3/4","1/4"]}"#);
        assert_eq!(SizeDistribution::from_json(&json).unwrap(), ps);
        let decimal = SizeDistribution::from_json(r#"{"support":[1,3],"probs":[0.75,"0.25"]}"#);
        assert_eq!(decimal.unwrap(), ps);
        assert!(SizeDistribution::from_json(r#"{"support":[1],"probs":["1/2"]}"#).is_err());
    }
}
