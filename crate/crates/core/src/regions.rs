//! Boundaries of redundancy/wiring trade-off regions.
//!
//! Every region here is closed upward in both coordinates, so it is described
//! by its lower-left boundary: vertices sorted by increasing `epsilon`, with an
//! implied vertical ray above the first vertex and a horizontal ray to the
//! right of the last one.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{ExactTradePoint, TradePoint};
use crate::error::{invalid, Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::rational::{self, frac, int};
use crate::subset_eval::{f_k, SizeDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Achievable,
    Converse,
    Exact,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Achievable => "achievable",
            CurveKind::Converse => "converse",
            CurveKind::Exact => "exact",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionCurve {
    pub kind: CurveKind,
    pub label: String,
    pub points: Vec<TradePoint>,
    /// Exact vertices when they are known.
    #[serde(skip)]
    pub exact_points: Option<Vec<ExactTradePoint>>,
    pub metadata: BTreeMap<String, String>,
}

/// Slack for float comparisons between curves.
const CURVE_TOL: f64 = 1e-9;

impl RegionCurve {
    /// Sorts vertices by `epsilon`, breaking ties by decreasing `rho`.
    pub fn new(kind: CurveKind, label: impl Into<String>, mut points: Vec<TradePoint>) -> Self {
        points.sort_by(|a, b| {
            a.epsilon
                .total_cmp(&b.epsilon)
                .then(b.rho.total_cmp(&a.rho))
        });
        RegionCurve {
            kind,
            label: label.into(),
            points,
            exact_points: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_exact(kind: CurveKind, label: impl Into<String>, exact: Vec<ExactTradePoint>) -> Self {
        let mut exact = exact;
        exact.sort_by(|a, b| a.epsilon.cmp(&b.epsilon).then(b.rho.cmp(&a.rho)));
        let mut curve = Self::new(kind, label, exact.iter().map(|p| p.to_f64()).collect());
        curve.exact_points = Some(exact);
        curve
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    /// Height of the boundary at `epsilon`, or `None` left of the first
    /// vertex where the region has no points.
    pub fn rho_at(&self, epsilon: f64) -> Option<f64> {
        let first = self.points.first()?;
        if epsilon < first.epsilon - CURVE_TOL {
            return None;
        }
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if epsilon <= b.epsilon {
                if b.epsilon - a.epsilon <= CURVE_TOL {
                    return Some(b.rho);
                }
                let s = ((epsilon - a.epsilon) / (b.epsilon - a.epsilon)).clamp(0.0, 1.0);
                return Some(a.rho + s * (b.rho - a.rho));
            }
        }
        Some(self.points.last()?.rho)
    }

    /// Whether a point lies in the region bounded by this curve.
    pub fn contains(&self, p: TradePoint) -> bool {
        self.rho_at(p.epsilon)
            .is_some_and(|rho| p.rho >= rho - CURVE_TOL)
    }

    /// Convexity of the region: `rho` never increases and consecutive edges
    /// only turn counter-clockwise.
    pub fn is_convex(&self) -> bool {
        let p = &self.points;
        let monotone = p.windows(2).all(|w| w[1].rho <= w[0].rho + CURVE_TOL);
        let turns = p.windows(3).all(|w| {
            let (a, b, c) = (w[0], w[1], w[2]);
            let cross = (b.epsilon - a.epsilon) * (c.rho - b.rho)
                - (b.rho - a.rho) * (c.epsilon - b.epsilon);
            cross >= -CURVE_TOL
        });
        monotone && turns
    }
}

/// `%.12g`-style formatting: 12 significant digits, no trailing zeros.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes curves as CSV with header `epsilon,rho,kind,label`.
pub fn write_csv<W: Write>(curves: &[RegionCurve], mut out: W) -> Result<()> {
    writeln!(out, "epsilon,rho,kind,label")?;
    for curve in curves {
        let label = if curve.label.contains([',', '"', '\n']) {
            format!("\"{}\"", curve.label.replace('"', "\"\""))
        } else {
            curve.label.clone()
        };
        for p in &curve.points {
            writeln!(
                out,
                "{},{},{},{}",
                format_sig(p.epsilon, 12),
                format_sig(p.rho, 12),
                curve.kind.as_str(),
                label
            )?;
        }
    }
    Ok(())
}

pub fn csv_string(curves: &[RegionCurve]) -> String {
    let mut buf = Vec::new();
    write_csv(curves, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

fn exact_point(epsilon: BigRational, rho: BigRational) -> ExactTradePoint {
    ExactTradePoint { epsilon, rho }
}

/// Mixing repetition designs with complete designs: the segment from `(1,1)`
/// to `(q,0)`.
pub fn region_interp(q: usize) -> Result<RegionCurve> {
    if q < 2 {
        return Err(invalid("alphabet size must be at least 2"));
    }
    Ok(RegionCurve::from_exact(
        CurveKind::Achievable,
        format!("interpolation q={q}"),
        vec![
            exact_point(int(1), int(1)),
            exact_point(int(q as i64), int(0)),
        ],
    )
    .with_meta("q", q))
}

/// The exact binary region for one or two defects.
pub fn region_finite_t_binary(t: usize) -> Result<RegionCurve> {
    if !(1..=2).contains(&t) {
        return Err(Error::RegionUnknown(format!(
            "the binary region is only known for t = 1 and t = 2, not t = {t}"
        )));
    }
    Ok(RegionCurve::from_exact(
        CurveKind::Exact,
        format!("binary t={t}"),
        vec![exact_point(int(1), int(1)), exact_point(int(2), int(0))],
    )
    .with_meta("q", 2)
    .with_meta("t", t))
}

/// The exact ternary region for a single defect, `epsilon >= max(1, 3 - 2 rho)`.
pub fn region_q3_t1() -> RegionCurve {
    RegionCurve::from_exact(
        CurveKind::Exact,
        "ternary t=1",
        vec![exact_point(int(1), int(1)), exact_point(int(3), int(0))],
    )
    .with_meta("q", 3)
    .with_meta("t", 1)
}

/// Accuracy of the rationalized logarithms in the covering program.
const LOG_DENOMINATOR: i64 = 1_000_000_000_000;

/// `log_q(n)` as a rational: exact when `n` is a power of `q`, otherwise
/// rounded to `1e-12`.
fn log_rational(q: usize, n: usize) -> BigRational {
    let (mut v, mut e) = (1usize, 0i64);
    while v < n {
        v *= q;
        e += 1;
    }
    if v == n {
        return int(e);
    }
    rational::rationalize((n as f64).ln() / (q as f64).ln(), LOG_DENOMINATOR)
}

/// Smallest wiring complexity allowed by the covering argument at redundancy
/// `rho`, as an exact LP over the distribution of primary degrees `t..qt`.
pub fn covering_bound_exact(q: usize, t: usize, rho: &BigRational) -> Result<BigRational> {
    if q < 2 || t == 0 {
        return Err(invalid("covering bound needs q >= 2 and t >= 1"));
    }
    if rho.is_negative() {
        return Err(invalid("redundancy must be non-negative"));
    }
    let degrees: Vec<usize> = (t..=q * t).collect();
    let objective = degrees
        .iter()
        .map(|&j| frac(j as i64, t as i64))
        .collect();
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    lp.add_constraint(vec![BigRational::one(); degrees.len()], Relation::Eq, int(1));
    let coverage = degrees
        .iter()
        .map(|&j| {
            if j == t {
                -int(t as i64 - 1)
            } else {
                log_rational(q, j / t)
            }
        })
        .collect();
    lp.add_constraint(coverage, Relation::Ge, int(1) - rho * int(t as i64));
    match lp.solve() {
        Ok(sol) => Ok(sol.objective),
        Err(Error::LpInfeasible) => unreachable!("all mass on degree qt is always feasible"),
        Err(e) => Err(e),
    }
}

pub fn covering_bound(q: usize, t: usize, rho: f64) -> Result<f64> {
    Ok(rational::to_f64(&covering_bound_exact(q, t, &rational::from_f64(rho)?)?))
}

/// The covering bound sampled at `points` values of `rho` in `[0, rho_max]`.
pub fn covering_curve(q: usize, t: usize, rho_max: f64, points: usize) -> Result<RegionCurve> {
    let points = points.max(2);
    let samples = (0..points)
        .into_par_iter()
        .map(|i| {
            let rho = rho_max * i as f64 / (points - 1) as f64;
            Ok(TradePoint::new(covering_bound(q, t, rho)?, rho))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(
        RegionCurve::new(CurveKind::Converse, format!("covering q={q} t={t}"), samples)
            .with_meta("q", q)
            .with_meta("t", t),
    )
}

fn cross(o: &ExactTradePoint, a: &ExactTradePoint, b: &ExactTradePoint) -> BigRational {
    (&a.epsilon - &o.epsilon) * (&b.rho - &o.rho) - (&a.rho - &o.rho) * (&b.epsilon - &o.epsilon)
}

/// Vertices of the lower-left boundary of the upward closure of the convex
/// hull of `points`. Collinear points are dropped.
pub fn lower_left_hull(points: &[ExactTradePoint]) -> Vec<ExactTradePoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.epsilon.cmp(&b.epsilon).then(a.rho.cmp(&b.rho)));
    sorted.dedup();
    let mut hull: Vec<ExactTradePoint> = Vec::new();
    for p in sorted {
        while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive() {
            hull.pop();
        }
        hull.push(p);
    }
    // Keep the part that still descends.
    let lowest = hull
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.rho.cmp(&b.1.rho).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    hull.truncate(lowest + 1);
    hull
}

/// Compositions of `total` into `parts` non-negative parts.
fn grid_points(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: usize, parts: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == parts {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(prefix, left - c, parts, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), total, parts, &mut out);
    out
}

/// `(E[S] / F_k, 1 / F_k)` for one degree distribution.
pub fn finite_k_point(ps: &SizeDistribution, k: usize, q: usize) -> Result<ExactTradePoint> {
    let f = f_k(ps, k, q)?;
    if !f.is_positive() {
        return Err(Error::Infeasible("F_k vanished".into()));
    }
    Ok(exact_point(ps.mean() / &f, BigRational::one() / f))
}

/// Achievable region for `k` primary nodes as the number of defects grows:
/// every degree distribution on `1..=k` with masses in multiples of
/// `1/grid` is evaluated and the lower-left hull is returned.
pub fn region_rinfty_k(k: usize, q: usize, grid: usize, budget: u64) -> Result<RegionCurve> {
    if k == 0 || grid == 0 {
        return Err(invalid("k and the grid denominator must be positive"));
    }
    let cells = grid_points(grid, k);
    if cells.len() as u64 > budget {
        return Err(Error::BudgetExceeded {
            budget,
            context: format!("{} degree distributions on the grid", cells.len()),
        });
    }
    let support: Vec<usize> = (1..=k).collect();
    let points = cells
        .par_iter()
        .map(|cell| {
            let weights = cell
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect();
            let ps = SizeDistribution::normalized(support.clone(), weights)?;
            finite_k_point(&ps, k, q)
        })
        .collect::<Result<Vec<_>>>()?;
    let hull = lower_left_hull(&points);
    Ok(
        RegionCurve::from_exact(CurveKind::Achievable, format!("finite k={k} q={q}"), hull)
            .with_meta("k", k)
            .with_meta("q", q)
            .with_meta("grid", format!("1/{grid}")),
    )
}

/// Adaptive wiring, fixed-wiring defect correction with one defect, and
/// non-adaptive redundancy, side by side.
pub fn region_scenarios(q: usize) -> Result<Vec<RegionCurve>> {
    if q < 2 {
        return Err(invalid("alphabet size must be at least 2"));
    }
    let single = |eps: i64| vec![exact_point(int(eps), BigRational::zero())];
    let middle = match q {
        2 => region_finite_t_binary(1)?,
        3 => region_q3_t1(),
        _ => region_interp(q)?,
    };
    Ok(vec![
        RegionCurve::from_exact(CurveKind::Exact, format!("adaptive q={q}"), single(1))
            .with_meta("q", q),
        middle,
        RegionCurve::from_exact(
            CurveKind::Exact,
            format!("non-adaptive q={q}"),
            single(q as i64),
        )
        .with_meta("q", q),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(e: BigRational, r: BigRational) -> ExactTradePoint {
        exact_point(e, r)
    }

    #[test]
    fn interpolation_curves() {
        let c = region_interp(2).unwrap();
        assert_eq!(c.points, vec![TradePoint::new(1.0, 1.0), TradePoint::new(2.0, 0.0)]);
        let c3 = region_interp(3).unwrap();
        assert!((c3.rho_at(2.0).unwrap() - 0.5).abs() < 1e-12);
        let c4 = region_interp(4).unwrap();
        // epsilon = 4 - 3 rho
        assert!((c4.rho_at(2.5).unwrap() - 0.5).abs() < 1e-12);
        assert!(region_interp(1).is_err());
        assert_eq!(c.rho_at(0.5), None);
        assert_eq!(c.rho_at(7.0), Some(0.0));
    }

    #[test]
    fn finite_t_regions() {
        assert_eq!(
            region_finite_t_binary(1).unwrap().points,
            region_finite_t_binary(2).unwrap().points
        );
        assert!(matches!(region_finite_t_binary(3), Err(Error::RegionUnknown(_))));
        let q3 = region_q3_t1();
        assert_eq!(q3.rho_at(3.0), Some(0.0));
        assert_eq!(q3.rho_at(1.0), Some(1.0));
        assert!((q3.rho_at(2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn covering_small_cases() {
        assert_eq!(covering_bound(2, 1, 0.5).unwrap(), 1.5);
        assert_eq!(covering_bound(2, 2, 0.0).unwrap(), 2.0);
        assert_eq!(covering_bound(2, 2, 3.0).unwrap(), 1.0);
        assert!(covering_bound(2, 1, -0.1).is_err());
        // q = 3, t = 1 at rho = 0 needs every primary at degree 3
        assert_eq!(covering_bound(3, 1, 0.0).unwrap(), 3.0);
        assert_eq!(log_rational(2, 4), int(2));
        assert_eq!(log_rational(3, 1), int(0));
        let l = rational::to_f64(&log_rational(2, 3));
        assert!((l - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn covering_curve_is_convex() {
        for (q, t) in [(2, 1), (2, 3), (3, 2)] {
            let c = covering_curve(q, t, 1.5, 31).unwrap();
            // sampled along rho, so view it as a region boundary
            assert!(c.is_convex(), "q={q} t={t}");
        }
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = vec![
            ep(int(1), int(1)),
            ep(frac(5, 4), frac(5, 6)),
            ep(frac(3, 2), frac(2, 3)),
            ep(int(2), frac(2, 3)),
            ep(frac(3, 2), int(1)),
            ep(frac(7, 4), frac(2, 3)),
        ];
        let hull = lower_left_hull(&pts);
        assert_eq!(hull, vec![ep(int(1), int(1)), ep(frac(3, 2), frac(2, 3))]);
        assert_eq!(lower_left_hull(&[ep(int(1), int(1))]).len(), 1);
    }

    #[test]
    fn finite_k_region_small() {
        let r1 = region_rinfty_k(1, 2, 5, 1_000_000).unwrap();
        assert_eq!(r1.points, vec![TradePoint::new(1.0, 1.0)]);
        let r3 = region_rinfty_k(3, 2, 12, 1_000_000).unwrap();
        assert_eq!(
            r3.exact_points.unwrap(),
            vec![ep(int(1), int(1)), ep(frac(3, 2), frac(2, 3))]
        );
        assert!(matches!(
            region_rinfty_k(3, 2, 84, 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn scenario_lines() {
        let s = region_scenarios(2).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].points, vec![TradePoint::new(1.0, 0.0)]);
        assert_eq!(s[2].points, vec![TradePoint::new(2.0, 0.0)]);
        let s5 = region_scenarios(5).unwrap();
        assert_eq!(s5[0].points[0].epsilon, 1.0);
        assert_eq!(s5[2].points[0].epsilon, 5.0);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(1.5, 12), "1.5");
        assert_eq!(format_sig(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_sig(12.0 / 9.0, 12), "1.33333333333");
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(1e-7, 12), "1e-07");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_sig(-0.25, 12), "-0.25");
    }

    #[test]
    fn csv_layout() {
        let csv = csv_string(&[region_interp(2).unwrap()]);
        assert_eq!(
            csv,
            "epsilon,rho,kind,label\n1,1,achievable,interpolation q=2\n2,0,achievable,interpolation q=2\n"
        );
    }

    #[test]
    fn convexity_test_rejects_reflex_vertex() {
        let bad = RegionCurve::new(
            CurveKind::Achievable,
            "bad",
            vec![
                TradePoint::new(1.0, 1.0),
                TradePoint::new(1.5, 0.9),
                TradePoint::new(2.0, 0.0),
            ],
        );
        assert!(!bad.is_convex());
        assert!(region_finite_t_binary(1).unwrap().is_convex());
    }
}
