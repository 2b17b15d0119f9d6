//! Structure of optimal solutions: piecewise-constant rates, the
//! instantaneous LP pair they solve, non-degeneracy, and linearization.
//!
//! Inside `(0, T)` an optimal pair moves with piecewise-constant rates
//! `u(t)`, `p(T - t)`. On each maximal interval the rates solve a dual pair
//! of small LPs whose sign pattern is fixed by the supports of `u` and `p`,
//! and the objective slope `c' u` is non-increasing across intervals. Under
//! the general-position assumption on `c` against `[A' I]`, the density part
//! of the optimal solution is unique, which makes rate detection stable
//! across refinement levels.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::discretization::Partition;
use crate::lp::{Direction, LpProblem, Relation, SignRestriction};
use crate::matrix::{dot, max_abs, Matrix};
use crate::model::{MeasureSolution, ProblemData};

/// Absolute floor for rate comparisons.
const RATE_MERGE_FLOOR: f64 = 1e-8;
/// Support classification threshold, relative to `1 + ||rate||_inf`.
const SUPPORT_THRESHOLD: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub enum StructureError {
    NonMonotoneSlope { t: f64, rise: f64 },
    IndexOutOfRange { index: usize, limit: usize },
    InfeasibleResult { violation: f64 },
    Dimension(String),
}

impl core::fmt::Display for StructureError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StructureError::NonMonotoneSlope { t, rise } => write!(
                f,
                "objective slope rises by {rise} at t = {t}; the input pair is not near-optimal"
            ),
            StructureError::IndexOutOfRange { index, limit } => {
                write!(f, "support index {index} out of range (limit {limit})")
            }
            StructureError::InfeasibleResult { violation } => {
                write!(f, "linearized measure infeasible by {violation}")
            }
            StructureError::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
        }
    }
}

impl core::error::Error for StructureError {}

/// Index sets of the non-zero rate components: `J_set` for the control,
/// `K_set` for the dual control at the mirrored time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSets {
    pub j_set: Vec<usize>,
    pub k_set: Vec<usize>,
}

/// A maximal interval on which both rates are constant.
#[derive(Clone, Debug, PartialEq)]
pub struct RateInterval {
    pub t_lo: f64,
    pub t_hi: f64,
    pub u_rate: Vec<f64>,
    pub p_rate: Vec<f64>,
    pub support: SupportSets,
    /// `c' u` on the interval; non-increasing across consecutive intervals.
    pub objective_slope: f64,
    /// Components too close to the support threshold to classify cleanly.
    pub borderline: Vec<usize>,
}

/// Detects the maximal constant-rate intervals of a near-optimal pair.
///
/// The dual rates are aligned by time reversal, adjacent intervals whose
/// rate vectors agree within `tol` (relative, floored at `1e-8`) merge, and
/// the slope sequence is checked to be non-increasing within `10 * tol`.
pub fn detect_rate_intervals(
    p: &ProblemData,
    primal: &MeasureSolution,
    dual: &MeasureSolution,
    tol: f64,
) -> Result<Vec<RateInterval>, StructureError> {
    if primal.dim() != p.num_controls() || dual.dim() != p.num_constraints() {
        return Err(StructureError::Dimension(format!(
            "pair has dimensions {}/{}, expected {}/{}",
            primal.dim(),
            dual.dim(),
            p.num_controls(),
            p.num_constraints()
        )));
    }
    let t_end = p.horizon;

    // Merge the primal grid with the reversed dual grid.
    let mut pts: Vec<f64> = primal.partition.breakpoints().to_vec();
    pts.extend(dual.partition.breakpoints().iter().map(|s| t_end - s));
    pts.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    pts.dedup();

    let mut intervals: Vec<RateInterval> = Vec::new();
    for w in pts.windows(2) {
        let (lo, hi) = (w[0].max(0.0), w[1].min(t_end));
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let u_rate = primal.density_at(mid);
        let p_rate = dual.density_at(t_end - mid);

        if let Some(last) = intervals.last_mut() {
            if rates_match(&last.u_rate, &u_rate, tol) && rates_match(&last.p_rate, &p_rate, tol) {
                last.t_hi = hi;
                continue;
            }
        }
        let (support, borderline) = classify_support(&u_rate, &p_rate);
        let objective_slope = dot(&p.c, &u_rate);
        intervals.push(RateInterval {
            t_lo: lo,
            t_hi: hi,
            u_rate,
            p_rate,
            support,
            objective_slope,
            borderline,
        });
    }

    let slope_tol = 10.0 * tol * (1.0 + max_abs(&p.c));
    for w in intervals.windows(2) {
        let rise = w[1].objective_slope - w[0].objective_slope;
        if rise > slope_tol {
            return Err(StructureError::NonMonotoneSlope {
                t: w[1].t_lo,
                rise,
            });
        }
    }
    Ok(intervals)
}

fn rates_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = 1.0 + max_abs(a).max(max_abs(b));
    let threshold = (tol * scale).max(RATE_MERGE_FLOOR);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= threshold)
}

fn classify_support(u: &[f64], p: &[f64]) -> (SupportSets, Vec<usize>) {
    let mut borderline = Vec::new();
    let u_threshold = SUPPORT_THRESHOLD * (1.0 + max_abs(u));
    let p_threshold = SUPPORT_THRESHOLD * (1.0 + max_abs(p));
    let j_set: Vec<usize> = u
        .iter()
        .enumerate()
        .filter_map(|(j, &v)| {
            if (v - u_threshold).abs() <= 0.1 * u_threshold {
                borderline.push(j);
            }
            (v > u_threshold).then_some(j)
        })
        .collect();
    let k_set: Vec<usize> = p
        .iter()
        .enumerate()
        .filter_map(|(k, &v)| (v > p_threshold).then_some(k))
        .collect();
    (SupportSets { j_set, k_set }, borderline)
}

/// The instantaneous LP pair for a support pattern:
///
/// ```text
/// max c' u               min b' p
/// s.t. A u + xdot = b    s.t. A' p - qdot = c
/// ```
///
/// with `u` zero off `J_set` and non-negative on it, `xdot` free off
/// `K_set` and non-negative on it, and the mirrored pattern on the dual.
pub fn build_rates_lp_pair(
    p: &ProblemData,
    support: &SupportSets,
) -> Result<(LpProblem, LpProblem), StructureError> {
    let k = p.num_constraints();
    let j = p.num_controls();
    if let Some(&bad) = support.j_set.iter().find(|&&idx| idx >= j) {
        return Err(StructureError::IndexOutOfRange { index: bad, limit: j });
    }
    if let Some(&bad) = support.k_set.iter().find(|&&idx| idx >= k) {
        return Err(StructureError::IndexOutOfRange { index: bad, limit: k });
    }
    let in_j = membership(j, &support.j_set);
    let in_k = membership(k, &support.k_set);

    // Rates-LP: variables (u, xdot).
    let matrix = Matrix::from_fn(k, j + k, |r, c| {
        if c < j {
            p.a[(r, c)]
        } else if c - j == r {
            1.0
        } else {
            0.0
        }
    });
    let mut objective = p.c.clone();
    objective.extend(core::iter::repeat(0.0).take(k));
    let mut restrictions: Vec<SignRestriction> = (0..j)
        .map(|idx| {
            if in_j[idx] {
                SignRestriction::NonNegative
            } else {
                SignRestriction::Zero
            }
        })
        .collect();
    restrictions.extend((0..k).map(|idx| {
        if in_k[idx] {
            SignRestriction::NonNegative
        } else {
            SignRestriction::Free
        }
    }));
    let primal_lp = LpProblem {
        direction: Direction::Maximize,
        objective,
        matrix,
        rhs: p.b.clone(),
        relations: vec![Relation::Eq; k],
        restrictions,
    };

    // Rates-LP*: variables (p, qdot).
    let matrix = Matrix::from_fn(j, k + j, |r, c| {
        if c < k {
            p.a[(c, r)]
        } else if c - k == r {
            -1.0
        } else {
            0.0
        }
    });
    let mut objective = p.b.clone();
    objective.extend(core::iter::repeat(0.0).take(j));
    let mut restrictions: Vec<SignRestriction> = (0..k)
        .map(|idx| {
            if in_k[idx] {
                SignRestriction::NonNegative
            } else {
                SignRestriction::Zero
            }
        })
        .collect();
    restrictions.extend((0..j).map(|idx| {
        if in_j[idx] {
            SignRestriction::NonNegative
        } else {
            SignRestriction::Free
        }
    }));
    let dual_lp = LpProblem {
        direction: Direction::Minimize,
        objective,
        matrix,
        rhs: p.c.clone(),
        relations: vec![Relation::Eq; j],
        restrictions,
    };

    Ok((primal_lp, dual_lp))
}

fn membership(len: usize, set: &[usize]) -> Vec<bool> {
    let mut flags = vec![false; len];
    for &idx in set {
        flags[idx] = true;
    }
    flags
}

/// Detailed result of [`verify_rates_pair`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatesCheck {
    pub passed: bool,
    /// Worst violation of the sign pattern on `(u, xdot, p, qdot)`.
    pub sign_violation: f64,
    /// Complementary slackness residual `|qdot' u| + |xdot' p|`.
    pub cs_residual: f64,
    /// `|c' u - b' p|`: zero certifies joint optimality for the pair.
    pub objective_gap: f64,
}

/// Checks that an interval's rates solve the instantaneous LP pair for its
/// support pattern: slopes exist with the right signs, rate-level
/// complementary slackness holds, and the two objectives agree (which, with
/// feasibility, certifies optimality for both LPs).
pub fn verify_rates_pair(p: &ProblemData, interval: &RateInterval, tol: f64) -> RatesCheck {
    let u = &interval.u_rate;
    let pr = &interval.p_rate;
    let in_j = membership(p.num_controls(), &interval.support.j_set);
    let in_k = membership(p.num_constraints(), &interval.support.k_set);

    let au = p.a.mul_vec(u);
    let xdot: Vec<f64> = p.b.iter().zip(&au).map(|(b, au)| b - au).collect();
    let atp = p.a.tr_mul_vec(pr);
    let qdot: Vec<f64> = atp.iter().zip(&p.c).map(|(a, c)| a - c).collect();

    let mut sign_violation = 0.0f64;
    for (idx, &v) in u.iter().enumerate() {
        sign_violation = sign_violation.max(if in_j[idx] { -v } else { v.abs() });
    }
    for (idx, &v) in pr.iter().enumerate() {
        sign_violation = sign_violation.max(if in_k[idx] { -v } else { v.abs() });
    }
    for (idx, &v) in xdot.iter().enumerate() {
        if in_k[idx] {
            sign_violation = sign_violation.max(-v);
        }
    }
    for (idx, &v) in qdot.iter().enumerate() {
        if in_j[idx] {
            sign_violation = sign_violation.max(-v);
        }
    }

    let cs_residual = dot(&qdot, u).abs() + dot(&xdot, pr).abs();
    let objective_gap = (dot(&p.c, u) - dot(&p.b, pr)).abs();

    let scale = 1.0
        + max_abs(u)
        + max_abs(pr)
        + max_abs(&p.b)
        + max_abs(&p.c);
    RatesCheck {
        passed: sign_violation <= tol * scale
            && cs_residual <= tol * scale * scale
            && objective_gap <= tol * scale * scale,
        sign_violation,
        cs_residual,
        objective_gap,
    }
}

/// General-position check: `true` when `c` is not a linear combination of
/// fewer than `J` columns of `[A' I]`.
///
/// All subsets of `J - 1` columns are enumerated (after a randomized
/// pre-check for an early exit); membership of `c` in each span is decided
/// by Gaussian elimination with a relative threshold.
pub fn check_nondegeneracy(a: &Matrix, c: &[f64]) -> Result<bool, StructureError> {
    let k = a.rows();
    let j = a.cols();
    if c.len() != j {
        return Err(StructureError::Dimension(format!(
            "c has length {}, expected {j}",
            c.len()
        )));
    }
    // Columns of [A' I]: the first K are rows of A, the rest unit vectors.
    let column = |idx: usize| -> Vec<f64> {
        if idx < k {
            (0..j).map(|r| a[(idx, r)]).collect()
        } else {
            let mut e = vec![0.0; j];
            e[idx - k] = 1.0;
            e
        }
    };
    let total = k + j;
    let pick = j - 1;

    if pick == 0 {
        // Span of the empty set: c must not itself be (numerically) zero.
        let threshold = 1e-10 * (1.0 + a.max_abs());
        return Ok(max_abs(c) > threshold);
    }
    if pick > total {
        return Ok(true);
    }

    // Randomized pre-check: 20 samples, early exit on a hit.
    let mut rng = SplitMix64::new(0x5eed_c01d_cafe_f00d);
    for _ in 0..20 {
        let subset = random_subset(&mut rng, total, pick);
        if in_span(&subset, &column, c, j) {
            return Ok(false);
        }
    }

    let mut subset: Vec<usize> = (0..pick).collect();
    loop {
        if in_span(&subset, &column, c, j) {
            return Ok(false);
        }
        // Next combination in lexicographic order.
        let mut i = pick;
        loop {
            if i == 0 {
                return Ok(true);
            }
            i -= 1;
            if subset[i] != i + total - pick {
                break;
            }
        }
        subset[i] += 1;
        for idx in i + 1..pick {
            subset[idx] = subset[idx - 1] + 1;
        }
    }
}

/// Decides `c in span(columns)` by eliminating `[S | c]` and testing whether
/// any row keeps a residual in the `c` column after `S` is exhausted.
fn in_span(subset: &[usize], column: &impl Fn(usize) -> Vec<f64>, c: &[f64], j: usize) -> bool {
    let width = subset.len() + 1;
    let mut m: Vec<Vec<f64>> = (0..j)
        .map(|r| {
            let mut row: Vec<f64> = subset.iter().map(|&idx| column(idx)[r]).collect();
            row.push(c[r]);
            row
        })
        .collect();
    let scale: f64 = m
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let threshold = 1e-10 * (1.0 + scale);

    let mut pivot_row = 0;
    for col in 0..width - 1 {
        let Some(best) = (pivot_row..j)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("finite"))
        else {
            break;
        };
        if m[best][col].abs() <= threshold {
            continue;
        }
        m.swap(pivot_row, best);
        for r in 0..j {
            if r != pivot_row && m[r][col].abs() > 0.0 {
                let f = m[r][col] / m[pivot_row][col];
                for cc in col..width {
                    let sub = f * m[pivot_row][cc];
                    m[r][cc] -= sub;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == j {
            break;
        }
    }
    // c lies in the span exactly when no eliminated row retains mass in the
    // last column.
    m.iter()
        .skip(pivot_row)
        .all(|row| row[width - 1].abs() <= threshold)
}

struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

fn random_subset(rng: &mut SplitMix64, total: usize, pick: usize) -> Vec<usize> {
    // Partial Fisher-Yates over the index range.
    let mut pool: Vec<usize> = (0..total).collect();
    for i in 0..pick {
        let r = i + (rng.next() as usize) % (total - i);
        pool.swap(i, r);
    }
    let mut subset = pool[..pick].to_vec();
    subset.sort_unstable();
    subset
}

/// Replaces the density by the linear interpolant of the cumulative control
/// at the given breakpoints, keeping the endpoint atoms.
///
/// At an optimum whose slope-change points are among the breakpoints this
/// preserves the objective; feasibility of the result is always re-checked.
pub fn piecewise_linearize(
    p: &ProblemData,
    sol: &MeasureSolution,
    breakpoints: &[f64],
) -> Result<MeasureSolution, StructureError> {
    let t_end = p.horizon;
    let mut bps: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_end)
        .collect();
    bps.push(0.0);
    bps.push(t_end);
    bps.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    bps.dedup();
    let part = Partition::from_breakpoints(bps)
        .map_err(|e| StructureError::Dimension(format!("{e}")))?;

    let nodes = part.breakpoints();
    let n = part.num_intervals();
    let mut densities = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = (nodes[i], nodes[i + 1]);
        // Cumulative value without the end atom so that the atom at T stays
        // an atom.
        let u_lo = sol.cumulative_at(lo, false);
        let u_hi = sol.cumulative_at(hi, false);
        let len = hi - lo;
        let d: Vec<f64> = u_hi
            .iter()
            .zip(&u_lo)
            .map(|(h, l)| ((h - l) / len).max(0.0))
            .collect();
        densities.push(d);
    }
    let linearized = MeasureSolution::new(
        sol.atom_start.clone(),
        part,
        densities,
        sol.atom_end.clone(),
    )
    .map_err(|e| StructureError::Dimension(format!("{e}")))?;

    let feas = p
        .feasibility_of(&linearized, 1e-9 * (1.0 + linearized.max_abs()))
        .map_err(|e| StructureError::Dimension(format!("{e}")))?;
    if !feas.feasible {
        return Err(StructureError::InfeasibleResult {
            violation: feas.worst_violation,
        });
    }
    Ok(linearized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp;

    fn p2() -> ProblemData {
        ProblemData::new(
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            vec![1.0],
            vec![1.0],
            vec![0.0],
            vec![1.0],
            1.0,
        )
        .unwrap()
    }

    fn p2_pair() -> (MeasureSolution, MeasureSolution) {
        let part = Partition::from_breakpoints(vec![0.0, 1.0]).unwrap();
        let primal =
            MeasureSolution::new(vec![1.0], part.clone(), vec![vec![1.0]], vec![0.0]).unwrap();
        let dual = MeasureSolution::new(vec![0.0], part, vec![vec![1.0]], vec![0.0]).unwrap();
        (primal, dual)
    }

    #[test]
    fn p2_single_interval() {
        let (primal, dual) = p2_pair();
        let intervals = detect_rate_intervals(&p2(), &primal, &dual, 1e-6).unwrap();
        assert_eq!(intervals.len(), 1);
        let iv = &intervals[0];
        assert_eq!((iv.t_lo, iv.t_hi), (0.0, 1.0));
        assert_eq!(iv.u_rate, vec![1.0]);
        assert_eq!(iv.p_rate, vec![1.0]);
        assert_eq!(iv.objective_slope, 1.0);
        assert_eq!(iv.support.j_set, vec![0]);
        assert_eq!(iv.support.k_set, vec![0]);
        assert!(verify_rates_pair(&p2(), iv, 1e-6).passed);
    }

    #[test]
    fn zero_rate_interval_verifies() {
        // P1's optimal pair has all mass in atoms; rates vanish.
        let p1 = ProblemData::new(
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            vec![1.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
            1.0,
        )
        .unwrap();
        let part = Partition::from_breakpoints(vec![0.0, 1.0]).unwrap();
        let primal =
            MeasureSolution::new(vec![1.0], part.clone(), vec![vec![0.0]], vec![0.0]).unwrap();
        let dual = MeasureSolution::new(vec![1.0], part, vec![vec![0.0]], vec![0.0]).unwrap();
        let intervals = detect_rate_intervals(&p1, &primal, &dual, 1e-6).unwrap();
        assert_eq!(intervals.len(), 1);
        assert_eq!(intervals[0].u_rate, vec![0.0]);
        assert!(verify_rates_pair(&p1, &intervals[0], 1e-6).passed);
    }

    #[test]
    fn perturbed_rate_fails_verification() {
        let (primal, dual) = p2_pair();
        let mut iv = detect_rate_intervals(&p2(), &primal, &dual, 1e-6)
            .unwrap()
            .remove(0);
        iv.u_rate = vec![0.5];
        let check = verify_rates_pair(&p2(), &iv, 1e-6);
        assert!(!check.passed);
        assert!(check.objective_gap > 0.4);
    }

    #[test]
    fn rates_pair_values_agree() {
        let p = p2();
        let support = SupportSets {
            j_set: vec![0],
            k_set: vec![0],
        };
        let (lp_p, lp_d) = build_rates_lp_pair(&p, &support).unwrap();
        let vp = lp::solve(&lp_p).unwrap();
        let vd = lp::solve(&lp_d).unwrap();
        assert!((vp.objective_value - 1.0).abs() < 1e-9);
        assert!((vd.objective_value - 1.0).abs() < 1e-9);

        // Dualizing the primal rates LP gives the dual one mathematically:
        // same optimal value.
        let built = lp::dual(&lp_p).unwrap();
        let vb = lp::solve(&built).unwrap();
        assert!((vb.objective_value - vd.objective_value).abs() < 1e-9);
    }

    #[test]
    fn empty_supports_force_zero_rates() {
        let p = p2();
        let support = SupportSets {
            j_set: vec![],
            k_set: vec![],
        };
        let (lp_p, lp_d) = build_rates_lp_pair(&p, &support).unwrap();
        let vp = lp::solve(&lp_p).unwrap();
        assert_eq!(vp.status, lp::LpStatus::Optimal);
        assert_eq!(vp.objective_value, 0.0);
        let vd = lp::solve(&lp_d).unwrap();
        assert_eq!(vd.status, lp::LpStatus::Optimal);
        assert_eq!(vd.objective_value, 0.0);

        let bad = SupportSets {
            j_set: vec![5],
            k_set: vec![],
        };
        assert!(matches!(
            build_rates_lp_pair(&p, &bad),
            Err(StructureError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn nondegeneracy_small_cases() {
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(check_nondegeneracy(&a, &[1.0]).unwrap());
        assert!(!check_nondegeneracy(&a, &[0.0]).unwrap());

        // K = J = 2 identity: [A' I] = [e1 e2 e1 e2]; c = (1, 1) is not
        // parallel to any single column.
        let a = Matrix::identity(2);
        assert!(check_nondegeneracy(&a, &[1.0, 1.0]).unwrap());
        // c parallel to a column is degenerate.
        assert!(!check_nondegeneracy(&a, &[1.0, 0.0]).unwrap());
    }

    #[test]
    fn linearize_merges_equal_slopes() {
        let p = p2();
        // Two equal-density pieces merge into one linear piece.
        let sol = MeasureSolution::new(
            vec![1.0],
            Partition::from_breakpoints(vec![0.0, 0.5, 1.0]).unwrap(),
            vec![vec![1.0], vec![1.0]],
            vec![0.0],
        )
        .unwrap();
        let lin = piecewise_linearize(&p, &sol, &[0.0, 1.0]).unwrap();
        assert_eq!(lin.densities.len(), 1);
        assert!((lin.densities[0][0] - 1.0).abs() < 1e-12);
        let before = p.objective_of(&sol).unwrap();
        let after = p.objective_of(&lin).unwrap();
        assert!((before - after).abs() <= 1e-9 * (1.0 + before.abs()));

        // Already-linear solutions are unchanged.
        let (primal, _) = p2_pair();
        let lin = piecewise_linearize(&p, &primal, &[0.0, 1.0]).unwrap();
        assert_eq!(lin.densities.len(), 1);
        assert_eq!(lin.densities[0], primal.densities[0]);
    }

    #[test]
    fn slope_monotonicity_enforced() {
        let p = p2();
        // A pair whose primal density rises over time cannot be optimal.
        let primal = MeasureSolution::new(
            vec![0.0],
            Partition::from_breakpoints(vec![0.0, 0.5, 1.0]).unwrap(),
            vec![vec![0.2], vec![1.0]],
            vec![0.0],
        )
        .unwrap();
        let dual = MeasureSolution::new(
            vec![0.0],
            Partition::from_breakpoints(vec![0.0, 1.0]).unwrap(),
            vec![vec![1.0]],
            vec![0.0],
        )
        .unwrap();
        assert!(matches!(
            detect_rate_intervals(&p, &primal, &dual, 1e-6),
            Err(StructureError::NonMonotoneSlope { .. })
        ));
    }
}
