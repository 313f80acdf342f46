//! The asymptotic functional `F(P_S)` and numerical bounds on its region.
//!
//! As the number of corrected defects grows, a degree distribution `P_S`
//! achieves the point `(E[S] / F, 1 / F)`. For a binary alphabet the inner
//! maximization has a threshold solution and is evaluated in closed form; for
//! larger alphabets it is a small LP. The outer minimization over primary
//! label frequencies is non-convex and is done by grid search plus local
//! refinement.
//!
//! The converse side bounds `max F` over distributions of fixed mean through a
//! finite dual LP whose constraints are checked rigorously beyond the horizon
//! it was solved on.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::design::TradePoint;
use crate::error::{invalid, Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::rational;
use crate::regions::{CurveKind, RegionCurve};
use crate::subset_eval::{type_vectors, SizeDistribution};

pub const DEFAULT_LAMBDA_TOL: f64 = 1e-4;
pub const DEFAULT_PX_GRID: f64 = 1.0 / 200.0;

/// Feasibility tolerance shared by the float computations.
pub const FEAS_TOL: f64 = 1e-9;

fn binomial_pmf(n: usize, k: usize, lambda: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if lambda <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if lambda >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n as u64, k as u64) + k as f64 * lambda.ln() + (n - k) as f64 * (-lambda).ln_1p())
        .exp()
}

/// Largest point mass of `Bino(s - 1, lambda)`.
pub fn psi(s: usize, lambda: f64) -> f64 {
    assert!(s >= 1, "psi needs s >= 1");
    let n = s - 1;
    if n == 0 || lambda <= 0.0 || lambda >= 1.0 {
        return 1.0;
    }
    let mode = (((n + 1) as f64 * lambda).floor() as usize).min(n);
    [mode.saturating_sub(1), mode, (mode + 1).min(n)]
        .into_iter()
        .map(|k| binomial_pmf(n, k, lambda))
        .fold(0.0, f64::max)
}

/// `(s / 2) (1 + psi(s, lambda))`.
pub fn phi(s: usize, lambda: f64) -> f64 {
    s as f64 / 2.0 * (1.0 + psi(s, lambda))
}

/// Binary relabeling rule: label 0 when the share of label-0 neighbors
/// exceeds `gamma`, label 1 below it, and a fraction `mu[s]` of degree-`s`
/// types at exactly `gamma` go to label 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub gamma: f64,
    pub mu: BTreeMap<usize, f64>,
}

impl ThresholdPolicy {
    /// Fraction of type `(l0, l1)` given label 0.
    pub fn label0_fraction(&self, l0: usize, l1: usize) -> f64 {
        let s = l0 + l1;
        if s == 0 {
            return 0.0;
        }
        let share = l0 as f64 / s as f64;
        if (share - self.gamma).abs() <= 1e-12 {
            self.mu.get(&s).copied().unwrap_or(0.0)
        } else if share > self.gamma {
            1.0
        } else {
            0.0
        }
    }
}

/// Degree distribution in float form with types grouped by label-0 share.
#[derive(Clone, Debug)]
struct BinaryTypes {
    mean: f64,
    /// Classes of equal share `l0 / s`, decreasing, excluding share 0.
    classes: Vec<((usize, usize), Vec<BinaryType>)>,
}

#[derive(Clone, Debug)]
struct BinaryType {
    s: usize,
    l0: usize,
    /// `P_S(s) * s`.
    weight: f64,
}

impl BinaryTypes {
    fn new(ps: &[(usize, f64)]) -> Self {
        let mut by_share: BTreeMap<(usize, usize), Vec<BinaryType>> = BTreeMap::new();
        let mut mean = 0.0;
        for &(s, p) in ps {
            mean += p * s as f64;
            for l0 in 1..=s {
                let g = num_integer::gcd(l0, s);
                by_share.entry((l0 / g, s / g)).or_default().push(BinaryType {
                    s,
                    l0,
                    weight: p * s as f64,
                });
            }
        }
        let mut classes: Vec<_> = by_share.into_iter().collect();
        classes.sort_by(|((a, b), _), ((c, d), _)| (c * b).cmp(&(a * d)));
        BinaryTypes { mean, classes }
    }

    /// Inner maximum at `lambda = P_X(0)`, plus the split class and fraction.
    ///
    /// With `L_0 ~ Bino(S, lambda)`, sending a type to label 0 adds
    /// `P_S(s) P[l0] l0 / lambda = P_S(s) s P[Bino(s-1) = l0-1]` to the label-0
    /// side and removes `P_S(s) s P[Bino(s-1) = l0]` from the label-1 side.
    /// Filling by decreasing share is a fractional knapsack, optimal until
    /// the two sides cross.
    fn inner(&self, lambda: f64) -> (f64, Option<(usize, f64)>) {
        if lambda <= 0.0 || lambda >= 1.0 {
            return (self.mean, None);
        }
        let (mut a, mut b) = (0.0, self.mean);
        for (ci, (_, members)) in self.classes.iter().enumerate() {
            let (mut gain, mut loss) = (0.0, 0.0);
            for t in members {
                gain += t.weight * binomial_pmf(t.s - 1, t.l0 - 1, lambda);
                loss += t.weight * binomial_pmf(t.s - 1, t.l0, lambda);
            }
            if a + gain <= b - loss {
                a += gain;
                b -= loss;
            } else {
                let theta = (b - a) / (gain + loss);
                return (a + theta * gain, Some((ci, theta)));
            }
        }
        (a, None)
    }

    fn policy(&self, lambda: f64) -> ThresholdPolicy {
        if lambda <= 0.0 {
            return ThresholdPolicy { gamma: 0.0, mu: BTreeMap::new() };
        }
        if lambda >= 1.0 {
            return ThresholdPolicy {
                gamma: 1.0,
                mu: self.classes.first().map_or_else(BTreeMap::new, |(_, m)| {
                    m.iter().map(|t| (t.s, 1.0)).collect()
                }),
            };
        }
        match self.inner(lambda).1 {
            Some((ci, theta)) => {
                let ((num, den), members) = &self.classes[ci];
                ThresholdPolicy {
                    gamma: *num as f64 / *den as f64,
                    mu: members.iter().map(|t| (t.s, theta)).collect(),
                }
            }
            None => ThresholdPolicy { gamma: 0.0, mu: BTreeMap::new() },
        }
    }
}

fn float_support(ps: &SizeDistribution) -> Vec<(usize, f64)> {
    ps.support().iter().copied().zip(ps.probs_f64()).collect()
}

/// `min{ E[(L_0/lambda) f], E[(L_1/(1-lambda)) (1-f)] }` for an arbitrary
/// relabeling rule `f(l0, l1)`, by direct summation over types.
pub fn binary_objective(
    ps: &SizeDistribution,
    lambda: f64,
    f: &dyn Fn(usize, usize) -> f64,
) -> f64 {
    let (mut a, mut b) = (0.0, 0.0);
    for (s, p) in float_support(ps) {
        for l0 in 0..=s {
            let mass = p * binomial_pmf(s, l0, lambda);
            let y = f(l0, s - l0);
            a += mass * l0 as f64 * y;
            b += mass * (s - l0) as f64 * (1.0 - y);
        }
    }
    let a = if lambda > 0.0 { a / lambda } else { f64::INFINITY };
    let b = if lambda < 1.0 { b / (1.0 - lambda) } else { f64::INFINITY };
    a.min(b)
}

/// Inner maximum of the binary functional at a fixed `lambda`.
pub fn binary_inner(ps: &SizeDistribution, lambda: f64) -> f64 {
    BinaryTypes::new(&float_support(ps)).inner(lambda).0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FBinary {
    pub value: f64,
    /// Minimizing label-0 frequency, in `[0, 1/2]` by symmetry.
    pub lambda: f64,
    pub policy: ThresholdPolicy,
    /// Grid step of the outer search.
    pub resolution: f64,
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iterations: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iterations {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn f_binary_types(types: &BinaryTypes, lambda_tol: f64, parallel: bool) -> (f64, f64) {
    // Swapping the two labels maps lambda to 1 - lambda.
    let steps = (0.5 / lambda_tol).ceil().max(1.0) as usize;
    let at = |i: usize| 0.5 * i as f64 / steps as f64;
    let values: Vec<f64> = if parallel {
        (0..=steps).into_par_iter().map(|i| types.inner(at(i)).0).collect()
    } else {
        (0..=steps).map(|i| types.inner(at(i)).0).collect()
    };
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let lo = at(best.saturating_sub(1));
    let hi = at((best + 1).min(steps));
    let (lambda, refined) = golden_min(|l| types.inner(l).0, lo, hi, 60);
    if refined < values[best] {
        (refined, lambda)
    } else {
        (values[best], at(best))
    }
}

/// The binary functional: outer grid over `lambda` with step `lambda_tol`,
/// golden-section refinement around the best grid point.
pub fn f_binary(ps: &SizeDistribution, lambda_tol: f64) -> Result<FBinary> {
    if !(lambda_tol > 0.0 && lambda_tol <= 0.5) {
        return Err(invalid("lambda tolerance must lie in (0, 1/2]"));
    }
    let types = BinaryTypes::new(&float_support(ps));
    let (value, lambda) = f_binary_types(&types, lambda_tol, true);
    Ok(FBinary {
        value,
        lambda,
        policy: types.policy(lambda),
        resolution: lambda_tol,
    })
}

/// Inner max-min for a general alphabet at label frequencies `px`, solved
/// as a float LP with multinomial type probabilities.
pub fn general_inner(ps: &SizeDistribution, px: &[f64]) -> Result<f64> {
    let present: Vec<usize> = (0..px.len()).filter(|&j| px[j] > 0.0).collect();
    let r = present.len();
    if r == 0 {
        return Err(invalid("label frequencies must have positive mass"));
    }
    let p: Vec<f64> = present.iter().map(|&j| px[j]).collect();
    let mut base = vec![0.0; r];
    let mut mixed: Vec<Vec<(usize, f64)>> = Vec::new();
    for (s, ps_s) in float_support(ps) {
        for ty in type_vectors(s, r) {
            let mass = ps_s * crate::subset_eval::multinomial_pmf(&ty, s, &p)?;
            if mass == 0.0 {
                continue;
            }
            let options: Vec<(usize, f64)> = ty
                .counts
                .iter()
                .enumerate()
                .filter(|(_, &l)| l > 0)
                .map(|(j, &l)| (j, mass * l as f64 / p[j]))
                .collect();
            if options.len() == 1 {
                base[options[0].0] += options[0].1;
            } else {
                mixed.push(options);
            }
        }
    }
    if mixed.is_empty() {
        return Ok(base.into_iter().fold(f64::INFINITY, f64::min));
    }
    let n_vars = 1 + mixed.iter().map(Vec::len).sum::<usize>();
    let mut objective = vec![0.0; n_vars];
    objective[0] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    let mut rows = vec![vec![0.0; n_vars]; r];
    let mut simplex_rows = Vec::with_capacity(mixed.len());
    let mut col = 1;
    for options in &mixed {
        let mut row = vec![0.0; n_vars];
        for &(j, w) in options {
            rows[j][col] = -w;
            row[col] = 1.0;
            col += 1;
        }
        simplex_rows.push(row);
    }
    for (j, mut row) in rows.into_iter().enumerate() {
        row[0] = 1.0;
        lp.add_constraint(row, Relation::Le, base[j]);
    }
    for row in simplex_rows {
        lp.add_constraint(row, Relation::Le, 1.0);
    }
    Ok(lp.solve()?.objective)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FGeneral {
    pub value: f64,
    pub px: Vec<f64>,
    pub resolution: f64,
}

/// Non-increasing vectors of `q` multiples of `1/total` summing to one.
fn sorted_simplex(total: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: usize, cap: usize, q: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == q {
            if left <= cap {
                prefix.push(left);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        let slots = q - prefix.len();
        for part in (0..=left.min(cap)).rev() {
            if part * slots < left {
                break;
            }
            prefix.push(part);
            rec(prefix, left - part, part, q, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), total, total, q, &mut out);
    out
}

/// The functional for an alphabet of size `q`: grid over label frequencies
/// (up to relabeling) followed by pairwise pattern search.
pub fn f_general(ps: &SizeDistribution, q: usize, px_grid: f64) -> Result<FGeneral> {
    if q < 2 {
        return Err(invalid("alphabet size must be at least 2"));
    }
    if !(px_grid > 0.0 && px_grid <= 0.5) {
        return Err(invalid("grid resolution must lie in (0, 1/2]"));
    }
    let total = (1.0 / px_grid).round().max(1.0) as usize;
    let grid = sorted_simplex(total, q);
    let values = grid
        .par_iter()
        .map(|cell| {
            let px: Vec<f64> = cell.iter().map(|&c| c as f64 / total as f64).collect();
            Ok((general_inner(ps, &px)?, px))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut best, mut px) = values
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("grid is non-empty");

    let mut step = px_grid;
    while step > px_grid / 256.0 {
        let mut improved = false;
        for i in 0..q {
            for j in 0..q {
                if i == j || px[j] < step {
                    continue;
                }
                let mut cand = px.clone();
                cand[i] += step;
                cand[j] -= step;
                let v = general_inner(ps, &cand)?;
                if v < best - FEAS_TOL {
                    best = v;
                    px = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(FGeneral {
        value: best,
        px,
        resolution: px_grid,
    })
}

/// The label-0 frequencies of the dual program: `1/2` and `j / (2j + 1)`.
pub fn lambda_grid(n: usize) -> Vec<f64> {
    std::iter::once(0.5)
        .chain((1..n).map(|j| j as f64 / (2 * j + 1) as f64))
        .collect()
}

/// A feasible point of the dual program for mean `c`, certifying
/// `max F(P_S) <= Z` over all `P_S` with `E[S] = c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualCertificate {
    pub c: f64,
    #[serde(rename = "pi")]
    pub pis: Vec<f64>,
    pub eta: f64,
    pub mu: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub n: usize,
    pub s0: usize,
}

impl DualCertificate {
    fn lambdas(&self) -> Vec<f64> {
        lambda_grid(self.n)
    }

    /// `sum_i pi_i psi(s, lambda_i) / 2`.
    fn load(&self, s: usize, lambdas: &[f64]) -> f64 {
        self.pis
            .iter()
            .zip(lambdas)
            .map(|(p, &l)| 0.5 * p * psi(s, l))
            .sum()
    }

    /// Slack of the constraint at degree `s` (non-negative when it holds).
    pub fn slack(&self, s: usize) -> f64 {
        self.eta + self.mu / s as f64 - self.load(s, &self.lambdas())
    }

    /// Checks every constraint for `s` in `1..=up_to` and the variable signs.
    pub fn audit(&self, up_to: usize) -> bool {
        let lambdas = self.lambdas();
        let sum: f64 = self.pis.iter().sum();
        self.pis.iter().all(|&p| p >= -FEAS_TOL)
            && self.eta >= -FEAS_TOL
            && self.mu >= -FEAS_TOL
            && (sum - 1.0).abs() <= FEAS_TOL
            && (1..=up_to).all(|s| self.load(s, &lambdas) <= self.eta + self.mu / s as f64 + FEAS_TOL)
    }

    /// Whether the constraints hold for every `s > s0`.
    ///
    /// `psi(s, lambda)` never increases in `s`, since each point mass of
    /// `Bino(n + 1)` averages two point masses of `Bino(n)`. So on `[a, b]`
    /// the load is at most its value at `a` while the right-hand side is at
    /// least `eta + mu / b`, and once the load drops to `eta` it stays there.
    pub fn tail_holds(&self) -> bool {
        let lambdas = self.lambdas();
        let rhs = |s: usize| self.eta + self.mu / s as f64 + FEAS_TOL;
        let start = self.s0 + 1;
        let mut end = start.max(2);
        while self.load(end, &lambdas) > self.eta + FEAS_TOL {
            if end > 1 << 40 {
                return false;
            }
            end *= 2;
        }
        let mut stack = vec![(start, end)];
        while let Some((a, b)) = stack.pop() {
            if self.load(a, &lambdas) <= rhs(b) {
                continue;
            }
            if b - a <= 16 {
                if (a..=b).any(|s| self.load(s, &lambdas) > rhs(s)) {
                    return false;
                }
                continue;
            }
            let mid = a + (b - a) / 2;
            stack.push((a, mid));
            stack.push((mid + 1, b));
        }
        true
    }

    /// Converse point `(c / Z, 1 / Z)`.
    pub fn point(&self) -> TradePoint {
        TradePoint::new(self.c / self.z, 1.0 / self.z)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialization cannot fail")
    }
}

/// Horizon used when none is given.
pub fn default_horizon(c: f64, n: usize) -> usize {
    10 * (c.ceil() as usize).max(2 * n)
}

/// Solves the dual program restricted to `s <= s0`.
pub fn solve_dual(c: f64, n: usize, s0: usize) -> Result<DualCertificate> {
    if c < 1.0 || n == 0 || s0 == 0 {
        return Err(invalid("the dual program needs c >= 1, n >= 1 and s0 >= 1"));
    }
    let lambdas = lambda_grid(n);
    let mut objective = vec![0.0; n + 2];
    objective[n] = c;
    objective[n + 1] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    for s in 1..=s0 {
        let mut row: Vec<f64> = lambdas.iter().map(|&l| 0.5 * psi(s, l)).collect();
        row.push(-1.0);
        row.push(-1.0 / s as f64);
        lp.add_constraint(row, Relation::Le, 0.0);
    }
    let mut sum = vec![1.0; n];
    sum.extend([0.0, 0.0]);
    lp.add_constraint(sum, Relation::Eq, 1.0);
    let sol = lp.solve()?;
    let (eta, mu) = (sol.x[n].max(0.0), sol.x[n + 1].max(0.0));
    Ok(DualCertificate {
        c,
        pis: sol.x[..n].iter().map(|v| v.max(0.0)).collect(),
        eta,
        mu,
        z: c / 2.0 + eta * c + mu,
        n,
        s0,
    })
}

/// Number of times the horizon is doubled before giving up.
const HORIZON_DOUBLINGS: usize = 4;

/// Dual certificate for one mean, doubling the horizon until the tail check
/// passes.
pub fn dual_certificate(c: f64, n: usize, s0: Option<usize>) -> Result<DualCertificate> {
    let mut horizon = s0.unwrap_or_else(|| default_horizon(c, n));
    for _ in 0..=HORIZON_DOUBLINGS {
        let cert = solve_dual(c, n, horizon)?;
        if cert.tail_holds() {
            return Ok(cert);
        }
        horizon *= 2;
    }
    Err(Error::TailCheck(format!(
        "constraints beyond the horizon fail for c = {c} even at s0 = {}",
        horizon / 2
    )))
}

/// Lower bound on the asymptotic region: one converse point per mean in
/// `c_grid`.
pub fn lower_bound_curve(
    c_grid: &[f64],
    n: usize,
    s0: Option<usize>,
) -> Result<(RegionCurve, Vec<DualCertificate>)> {
    if c_grid.iter().any(|&c| c < 1.0 || !c.is_finite()) {
        return Err(invalid("every mean must be finite and at least 1"));
    }
    let certs = c_grid
        .par_iter()
        .map(|&c| dual_certificate(c, n, s0))
        .collect::<Result<Vec<_>>>()?;
    let curve = RegionCurve::new(
        CurveKind::Converse,
        format!("dual bound n={n}"),
        certs.iter().map(DualCertificate::point).collect(),
    )
    .with_meta("n", n);
    Ok((curve, certs))
}

/// Optimal degree distribution of the primal program for mean `c`: the
/// largest `t` with `c/2 + E[S psi(S, lambda_i)]/2 >= t` for every grid
/// `lambda_i`, over distributions on `1..=s0`.
pub fn primal_size_distribution(c: f64, n: usize, s0: usize) -> Result<SizeDistribution> {
    if c < 1.0 || (s0 as f64) < c {
        return Err(invalid("need 1 <= c <= s0"));
    }
    let lambdas = lambda_grid(n);
    let mut objective = vec![0.0; s0 + 1];
    objective[s0] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for &l in &lambdas {
        let mut row: Vec<f64> = (1..=s0).map(|s| -(s as f64) / 2.0 * psi(s, l)).collect();
        row.push(1.0);
        lp.add_constraint(row, Relation::Le, c / 2.0);
    }
    let mut mean: Vec<f64> = (1..=s0).map(|s| s as f64).collect();
    mean.push(0.0);
    lp.add_constraint(mean, Relation::Eq, c);
    let mut mass = vec![1.0; s0];
    mass.push(0.0);
    lp.add_constraint(mass, Relation::Eq, 1.0);
    let sol = lp.solve()?;
    let (support, weights): (Vec<usize>, Vec<f64>) = (1..=s0)
        .zip(&sol.x[..s0])
        .filter(|(_, &p)| p > 1e-12)
        .map(|(s, &p)| (s, p))
        .unzip();
    SizeDistribution::from_f64_weights(support, &weights)
}

/// A near-optimal degree distribution of a given mean, with its point as
/// published to two decimals.
#[derive(Clone, Copy, Debug)]
pub struct KnownRow {
    pub mean: f64,
    pub support: &'static [usize],
    pub probs: &'static [&'static str],
    pub point: (f64, f64),
}

const fn row(
    mean: f64,
    support: &'static [usize],
    probs: &'static [&'static str],
    point: (f64, f64),
) -> KnownRow {
    KnownRow { mean, support, probs, point }
}

/// Seeds for the achievable search at integer means 2 through 8.
pub const KNOWN_ACHIEVABLE: [KnownRow; 7] = [
    row(2.0, &[1, 3, 4, 5], &["0.62", "0.21", "0.10", "0.07"], (1.24, 0.61)),
    row(3.0, &[1, 3, 4, 5], &["0.24", "0.41", "0.20", "0.14"], (1.35, 0.45)),
    row(4.0, &[3, 4, 5, 6, 7], &["0.52", "0.21", "0.13", "0.02", "0.12"], (1.42, 0.35)),
    row(5.0, &[3, 4, 5, 7], &["0.31", "0.23", "0.28", "0.18"], (1.40, 0.29)),
    row(6.0, &[5, 6, 7, 9], &["0.45", "0.31", "0.14", "0.10"], (1.47, 0.29)),
    row(7.0, &[5, 6, 7, 8, 9], &["0.35", "0.01", "0.13", "0.32", "0.19"], (1.53, 0.22)),
    row(8.0, &[7, 8, 9, 11], &["0.40", "0.36", "0.16", "0.08"], (1.56, 0.19)),
];

/// The `KNOWN_ACHIEVABLE` entry as an exact distribution, rescaled when the
/// listed masses do not total one.
pub fn known_distribution(index: usize) -> Result<SizeDistribution> {
    let known = KNOWN_ACHIEVABLE
        .get(index)
        .ok_or_else(|| invalid("no such entry"))?;
    let weights = known
        .probs
        .iter()
        .map(|m| rational::parse(m))
        .collect::<Result<Vec<_>>>()?;
    SizeDistribution::normalized(known.support.to_vec(), weights)
}

#[derive(Clone, Debug)]
pub struct Achievable {
    pub ps: SizeDistribution,
    pub f: f64,
    pub point: TradePoint,
}

/// Moves mass toward one end of the support until the mean equals `c`.
fn repair_mean(support: &[usize], p: &mut [f64], c: f64) {
    let total: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= total;
    }
    let mean: f64 = support.iter().zip(p.iter()).map(|(&s, &v)| s as f64 * v).sum();
    let (target, alpha) = if mean < c {
        let hi = support.len() - 1;
        (hi, (c - mean) / (support[hi] as f64 - mean))
    } else if mean > c {
        (0, (mean - c) / (mean - support[0] as f64))
    } else {
        return;
    };
    for v in p.iter_mut() {
        *v *= 1.0 - alpha;
    }
    p[target] += alpha;
}

/// Search iterations per starting point.
const SEARCH_ITERATIONS: usize = 700;
/// Outer grid step while searching; the winner is re-evaluated finely.
const SEARCH_LAMBDA_TOL: f64 = 2e-3;

fn local_search(support: &[usize], start: Vec<f64>, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let eval = |p: &[f64]| {
        let ps: Vec<(usize, f64)> = support
            .iter()
            .copied()
            .zip(p.iter().copied())
            .filter(|(_, v)| *v > 0.0)
            .collect();
        f_binary_types(&BinaryTypes::new(&ps), SEARCH_LAMBDA_TOL, false).0
    };
    let mut p = start;
    let mut best = eval(&p);
    if support.len() < 3 {
        return (p, best);
    }
    let mut scale = 0.05;
    let mut failures = 0;
    for _ in 0..SEARCH_ITERATIONS {
        let mut idx = [0usize; 3];
        for slot in 0..3 {
            loop {
                let i = rng.random_range(0..support.len());
                if !idx[..slot].contains(&i) {
                    idx[slot] = i;
                    break;
                }
            }
        }
        idx.sort_unstable();
        let (s1, s2, s3) = (
            support[idx[0]] as f64,
            support[idx[1]] as f64,
            support[idx[2]] as f64,
        );
        // Keeps both total mass and mean fixed.
        let dir = [s3 - s2, s1 - s3, s2 - s1];
        let norm = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let step = scale * rng.random_range(-1.0..1.0) / norm;
        let mut cand = p.clone();
        for (i, d) in idx.iter().zip(dir) {
            cand[*i] += step * d;
        }
        if cand.iter().any(|&v| v < 0.0) {
            for v in cand.iter_mut() {
                if *v < 0.0 && *v > -1e-12 {
                    *v = 0.0;
                }
            }
            if cand.iter().any(|&v| v < 0.0) {
                failures += 1;
                continue;
            }
        }
        let v = eval(&cand);
        if v > best {
            best = v;
            p = cand;
            failures = 0;
        } else {
            failures += 1;
            if failures >= 40 {
                scale = (scale * 0.5).max(1e-5);
                failures = 0;
            }
        }
    }
    (p, best)
}

/// Seeded local search for a degree distribution of mean `c` with large
/// `F`, returning it with its point `(c / F, 1 / F)`.
///
/// Starting points: a known distribution when `c` matches one, the optimum
/// of the primal program, and `restarts` random distributions on the degrees
/// within `support_width` of `c`. Every move shifts mass among three degrees
/// along the one direction that preserves both total mass and mean.
pub fn achievable_search(
    c: f64,
    support_width: usize,
    restarts: usize,
    seed: u64,
) -> Result<Achievable> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(invalid("the mean must be at least 1"));
    }
    if c <= 1.0 + 1e-12 {
        let ps = SizeDistribution::point(1)?;
        return Ok(Achievable {
            ps,
            f: 1.0,
            point: TradePoint::new(1.0, 1.0),
        });
    }
    let lo = (c.floor() as usize).saturating_sub(support_width).max(1);
    let hi = c.ceil() as usize + support_width;
    let mut window: Vec<usize> = (lo..=hi).collect();

    let mut starts: Vec<SizeDistribution> = Vec::new();
    for (i, known) in KNOWN_ACHIEVABLE.iter().enumerate() {
        if (known.mean - c).abs() < 1e-9 {
            starts.push(known_distribution(i)?);
        }
    }
    if let Ok(ps) = primal_size_distribution(c, 10, default_horizon(c, 10)) {
        starts.push(ps);
    }
    for s in starts.iter().flat_map(|ps| ps.support().to_vec()) {
        if !window.contains(&s) {
            window.push(s);
        }
    }
    window.sort_unstable();

    let mut seeds: Vec<Vec<f64>> = starts
        .iter()
        .map(|ps| {
            window
                .iter()
                .map(|s| {
                    ps.iter()
                        .find(|(t, _)| t == s)
                        .map_or(0.0, |(_, p)| rational::to_f64(p))
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        // Random masses on the window around c.
        let near: Vec<f64> = window
            .iter()
            .map(|&s| {
                if s >= lo && s <= hi {
                    rng.random_range(0.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        seeds.push(near);
    }
    for p in &mut seeds {
        repair_mean(&window, p, c);
    }

    let results: Vec<(Vec<f64>, f64)> = seeds
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9 * (i as u64 + 1)));
            local_search(&window, p, &mut rng)
        })
        .collect();

    let mut best: Option<Achievable> = None;
    for (p, _) in results {
        let (support, weights): (Vec<usize>, Vec<f64>) = window
            .iter()
            .copied()
            .zip(p)
            .filter(|(_, v)| *v > 1e-12)
            .unzip();
        let ps = SizeDistribution::from_f64_weights(support, &weights)?;
        let f = f_binary(&ps, DEFAULT_LAMBDA_TOL)?.value;
        let mean = rational::to_f64(&ps.mean());
        let candidate = Achievable {
            point: TradePoint::new(mean / f, 1.0 / f),
            ps,
            f,
        };
        if best.as_ref().is_none_or(|b| candidate.f.total_cmp(&b.f) == Ordering::Greater) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one starting point"))
}

/// `(E[S] / F, 1 / F)` for the binary functional.
pub fn binary_point(ps: &SizeDistribution, lambda_tol: f64) -> Result<TradePoint> {
    let f = f_binary(ps, lambda_tol)?.value;
    if f.is_zero() {
        return Err(Error::Infeasible("F vanished".into()));
    }
    Ok(TradePoint::new(rational::to_f64(&ps.mean()) / f, 1.0 / f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn psi_and_phi_values() {
        assert_eq!(psi(1, 0.3), 1.0);
        assert_eq!(phi(1, 0.3), 1.0);
        assert!((psi(3, 0.5) - 0.5).abs() < 1e-15);
        assert!((phi(3, 0.5) - 2.25).abs() < 1e-15);
        assert!(psi(10_000, 0.5) < 0.01);
        assert_eq!(psi(5, 0.0), 1.0);
    }

    #[test]
    fn psi_is_non_increasing_in_s() {
        for &l in &[0.5, 1.0 / 3.0, 0.4, 0.45, 0.1] {
            let mut prev = psi(1, l);
            for s in 2..400 {
                let cur = psi(s, l);
                assert!(cur <= prev * (1.0 + 1e-12), "s={s} lambda={l}");
                prev = cur;
            }
        }
    }

    #[test]
    fn binary_singletons() {
        let p1 = SizeDistribution::point(1).unwrap();
        let f = f_binary(&p1, 1e-3).unwrap();
        assert!((f.value - 1.0).abs() < 1e-9);
        assert!((binary_inner(&p1, 0.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_inner_matches_direct_summation() {
        let ps = SizeDistribution::new(vec![2, 3, 6], vec![frac(1, 2), frac(1, 3), frac(1, 6)])
            .unwrap();
        let types = BinaryTypes::new(&float_support(&ps));
        for &l in &[0.1, 0.25, 0.4, 0.5] {
            let (v, _) = types.inner(l);
            let policy = types.policy(l);
            let direct = binary_objective(&ps, l, &|a, b| policy.label0_fraction(a, b));
            assert!((v - direct).abs() < 1e-12, "lambda={l}: {v} vs {direct}");
        }
    }

    #[test]
    fn pair_design_against_two_dimensional_grid() {
        // P_S(2) = 1, evaluated by a brute grid over lambda and a
        // label-0 fraction for the mixed type (1,1).
        let ps = SizeDistribution::point(2).unwrap();
        let mut brute = f64::INFINITY;
        for i in 1..1000 {
            let l = i as f64 / 1000.0;
            let mut inner = 0.0f64;
            for j in 0..=1000 {
                let x = j as f64 / 1000.0;
                let f = |a: usize, b: usize| match (a, b) {
                    (2, 0) => 1.0,
                    (1, 1) => x,
                    _ => 0.0,
                };
                inner = inner.max(binary_objective(&ps, l, &f));
            }
            brute = brute.min(inner);
        }
        let f = f_binary(&ps, 1e-4).unwrap().value;
        assert!((f - brute).abs() < 2e-3, "{f} vs {brute}");
        // at lambda = 1/2 both sides equal 1 + x... the value is 3/2
        assert!((f - 1.5).abs() < 1e-6);
    }

    #[test]
    fn general_agrees_with_binary() {
        let ps = SizeDistribution::new(vec![1, 3, 4], vec![frac(1, 2), frac(1, 4), frac(1, 4)])
            .unwrap();
        let b = f_binary(&ps, 1e-4).unwrap().value;
        let g = f_general(&ps, 2, 1.0 / 200.0).unwrap().value;
        assert!((b - g).abs() < 1e-4, "{b} vs {g}");
    }

    #[test]
    fn general_singletons() {
        let p1 = SizeDistribution::point(1).unwrap();
        for q in 2..4 {
            let v = f_general(&p1, q, 1.0 / 20.0).unwrap().value;
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dual_certificate_is_feasible() {
        let cert = dual_certificate(2.0, 10, None).unwrap();
        assert!(cert.audit(4 * cert.s0));
        assert!(cert.tail_holds());
        assert!(cert.z >= 1.0);
        let json: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
        for key in ["c", "pi", "eta", "mu", "Z"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn dual_at_unit_mean() {
        let cert = dual_certificate(1.0, 5, None).unwrap();
        assert!((cert.z - 1.0).abs() < 1e-9);
        let p = cert.point();
        assert!((p.epsilon - 1.0).abs() < 1e-9 && (p.rho - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_grid_values() {
        let g = lambda_grid(4);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 0.5);
        assert!((g[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g[3] - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn repair_hits_the_mean() {
        let support = [1, 2, 5];
        let mut p = vec![0.2, 0.3, 0.5];
        repair_mean(&support, &mut p, 2.0);
        let mean: f64 = support.iter().zip(&p).map(|(&s, &v)| s as f64 * v).sum();
        assert!((mean - 2.0).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn achievable_unit_mean() {
        let a = achievable_search(1.0, 2, 1, 7).unwrap();
        assert_eq!(a.point, TradePoint::new(1.0, 1.0));
        assert!(achievable_search(0.5, 2, 1, 7).is_err());
    }

    #[test]
    fn known_table_normalizes() {
        for i in 0..KNOWN_ACHIEVABLE.len() {
            let ps = known_distribution(i).unwrap();
            let total: num_rational::BigRational = ps.probs().iter().cloned().sum();
            assert_eq!(total, frac(1, 1));
        }
    }
}
