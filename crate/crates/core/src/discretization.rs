//! Finite LP discretizations of M-CLP over a time partition.
//!
//! For a partition `0 = t_0 < ... < t_N = T` four linear programs matter:
//!
//! * `dclp1`: the primal discretization, whose value bounds the M-CLP value
//!   from below. Objective weights use interval midpoints, which makes the
//!   LP objective the exact closed-form integral of the extended measure.
//! * `dclp2`: the dual-side discretization, bounding from above.
//! * the modified pair `mdclp`/`mdclp*`: same constraints with endpoint
//!   objective weights. These two are exact LP duals of each other, and
//!   their optima price the discretization error: with
//!   `epsilon = T / (2N)`, the a-priori bound
//!   `V(dclp2) - V(dclp1) <= upsilon(N) * epsilon` holds where
//!   `upsilon(N) = c' sum(dU*) - b' sum(dP*)`.
//!
//! LP variables are the interval increments `dU^i` rather than the rates;
//! rates are recovered as `dU^i / (t_i - t_{i-1})`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{self, Direction, LpError, LpOutcome, LpProblem, LpStatus, Relation, SignRestriction};
use crate::matrix::{dot, Matrix};
use crate::model::ProblemData;

#[derive(Clone, Debug, PartialEq)]
pub enum DiscretizationError {
    Invalid(String),
    NotEquidistant,
    InfeasiblePrimal,
    InfeasibleDual,
    NegativeUpsilon { upsilon: f64 },
    Lp(LpError),
}

impl core::fmt::Display for DiscretizationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DiscretizationError::Invalid(msg) => write!(f, "invalid partition or data: {msg}"),
            DiscretizationError::NotEquidistant => {
                write!(f, "the modified LP pair requires an equidistant partition")
            }
            DiscretizationError::InfeasiblePrimal => write!(f, "primal side infeasible"),
            DiscretizationError::InfeasibleDual => write!(f, "dual side infeasible"),
            DiscretizationError::NegativeUpsilon { upsilon } => {
                write!(f, "gap predictor upsilon = {upsilon} is negative beyond tolerance")
            }
            DiscretizationError::Lp(e) => write!(f, "LP solve failed: {e}"),
        }
    }
}

impl core::error::Error for DiscretizationError {}

impl From<LpError> for DiscretizationError {
    fn from(e: LpError) -> Self {
        DiscretizationError::Lp(e)
    }
}

/// A partition of `[0, T]` into `N` intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    breakpoints: Vec<f64>,
    equidistant: bool,
    epsilon: Option<f64>,
}

impl Partition {
    /// The even partition into `n` intervals; `epsilon = horizon / (2n)`.
    pub fn equidistant(horizon: f64, n: usize) -> Result<Self, DiscretizationError> {
        if n == 0 {
            return Err(DiscretizationError::Invalid("need at least one interval".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(DiscretizationError::Invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let mut breakpoints: Vec<f64> =
            (0..n).map(|k| horizon * k as f64 / n as f64).collect();
        breakpoints.push(horizon);
        Ok(Partition {
            breakpoints,
            equidistant: true,
            epsilon: Some(horizon / (2.0 * n as f64)),
        })
    }

    pub fn from_breakpoints(breakpoints: Vec<f64>) -> Result<Self, DiscretizationError> {
        if breakpoints.len() < 2 {
            return Err(DiscretizationError::Invalid(
                "need at least two breakpoints".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(DiscretizationError::Invalid(format!(
                "first breakpoint must be exactly 0, got {}",
                breakpoints[0]
            )));
        }
        if !breakpoints.iter().all(|v| v.is_finite()) {
            return Err(DiscretizationError::Invalid("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DiscretizationError::Invalid(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let horizon = *breakpoints.last().expect("non-empty");
        let n = breakpoints.len() - 1;
        let equidistant = breakpoints
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - horizon * k as f64 / n as f64).abs() <= 1e-12 * horizon);
        Ok(Partition {
            breakpoints,
            equidistant,
            epsilon: if equidistant {
                Some(horizon / (2.0 * n as f64))
            } else {
                None
            },
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty")
    }

    pub fn is_equidistant(&self) -> bool {
        self.equidistant
    }

    /// Half interval length `T / (2N)`; present only for equidistant grids.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    pub fn length(&self, i: usize) -> f64 {
        self.breakpoints[i + 1] - self.breakpoints[i]
    }

    /// Index of the interval containing `t`: breakpoints resolve rightwards,
    /// `T` to the last interval.
    pub fn interval_index(&self, t: f64) -> usize {
        let n = self.num_intervals();
        match self
            .breakpoints
            .binary_search_by(|bp| bp.partial_cmp(&t).expect("finite breakpoints"))
        {
            Ok(idx) => idx.min(n - 1),
            Err(idx) => idx.saturating_sub(1).min(n - 1),
        }
    }

    /// The same grid seen from the other end of the horizon: breakpoints
    /// `T - t_{N-k}`. Dual-side solutions live on this partition.
    pub fn reversed(&self) -> Partition {
        let horizon = self.horizon();
        let mut breakpoints: Vec<f64> = self
            .breakpoints
            .iter()
            .rev()
            .map(|&t| horizon - t)
            .collect();
        breakpoints[0] = 0.0;
        let n = breakpoints.len() - 1;
        breakpoints[n] = horizon;
        Partition {
            breakpoints,
            equidistant: self.equidistant,
            epsilon: self.epsilon,
        }
    }
}

/// A solution of `dclp1` (or, on the dual side and in dual time, of
/// `dclp2`): endpoint atoms, interval increments, slacks, and the LP value.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSolution {
    pub atom_start: Vec<f64>,
    pub increments: Vec<Vec<f64>>,
    pub atom_end: Vec<f64>,
    /// Slack of the row at time 0 (`x^0`, or `q^N` on the dual side).
    pub slack_start: Vec<f64>,
    /// Slacks at the interior/right breakpoints (`x^1 .. x^N`).
    pub slack_mid: Vec<Vec<f64>>,
    /// Slack of the final row including the end atom (`x^N` bold / `q^0`).
    pub slack_end: Vec<f64>,
    pub value: f64,
}

impl DiscreteSolution {
    pub fn dim(&self) -> usize {
        self.atom_start.len()
    }

    /// Most negative component across atoms, increments and slacks (0 when
    /// everything is non-negative).
    pub fn worst_negativity(&self) -> f64 {
        let mut worst = 0.0f64;
        let all = self
            .atom_start
            .iter()
            .chain(&self.atom_end)
            .chain(self.increments.iter().flatten())
            .chain(&self.slack_start)
            .chain(self.slack_mid.iter().flatten())
            .chain(&self.slack_end);
        for v in all {
            worst = worst.max(-v);
        }
        worst
    }
}

/// Objective weight of an increment on `(lo, hi)`: `gamma + (T - mid) c`.
fn midpoint_weight(p: &ProblemData, j: usize, lo: f64, hi: f64) -> f64 {
    p.gamma[j] + p.c[j] * (p.horizon - 0.5 * (lo + hi))
}

/// The primal discretization over `part` as an LP in the increments.
///
/// Variables `(u^0, dU^1 .. dU^N, u^N)`, all non-negative; row block `n`
/// states `A (u^0 + sum of dU up to n) <= beta + b t_n`, with one extra block
/// for time 0 and one including the end atom. On equidistant grids the
/// constraint matrix realizes the repeated/staircase/summed block layout.
pub fn build_dclp1(p: &ProblemData, part: &Partition) -> Result<LpProblem, DiscretizationError> {
    check_horizon(p, part)?;
    let k = p.num_constraints();
    let j = p.num_controls();
    let n = part.num_intervals();
    let bp = part.breakpoints();

    let matrix = Matrix::from_fn(k * (n + 2), j * (n + 2), |r, c| {
        let rb = r / k;
        let cb = c / j;
        let a = p.a[(r % k, c % j)];
        let present = match cb {
            0 => true,
            cb if cb <= n => rb >= cb,
            _ => rb == n + 1,
        };
        if present {
            a
        } else {
            0.0
        }
    });

    let mut rhs = Vec::with_capacity(k * (n + 2));
    rhs.extend_from_slice(&p.beta);
    for block in 1..=n {
        let t = bp[block];
        rhs.extend(p.beta.iter().zip(&p.b).map(|(beta, b)| beta + b * t));
    }
    rhs.extend(
        p.beta
            .iter()
            .zip(&p.b)
            .map(|(beta, b)| beta + b * p.horizon),
    );

    let mut objective = Vec::with_capacity(j * (n + 2));
    objective.extend(
        p.gamma
            .iter()
            .zip(&p.c)
            .map(|(g, c)| g + c * p.horizon),
    );
    for i in 1..=n {
        let (lo, hi) = (bp[i - 1], bp[i]);
        objective.extend((0..j).map(|idx| midpoint_weight(p, idx, lo, hi)));
    }
    objective.extend_from_slice(&p.gamma);

    Ok(LpProblem {
        direction: Direction::Maximize,
        objective,
        matrix,
        rhs,
        relations: vec![Relation::Le; k * (n + 2)],
        restrictions: vec![SignRestriction::NonNegative; j * (n + 2)],
    })
}

/// The dual-side discretization: minimize over `(p^N, dP^1 .. dP^N, p^0)`
/// with `>=` rows mirroring [`build_dclp1`].
pub fn build_dclp2(p: &ProblemData, part: &Partition) -> Result<LpProblem, DiscretizationError> {
    check_horizon(p, part)?;
    let k = p.num_constraints();
    let j = p.num_controls();
    let n = part.num_intervals();
    let bp = part.breakpoints();

    let matrix = Matrix::from_fn(j * (n + 2), k * (n + 2), |r, c| {
        let rb = r / j;
        let cb = c / k;
        let a = p.a[(c % k, r % j)];
        let present = match cb {
            0 => true,
            cb if cb <= n => (rb >= 1 && rb <= n && cb >= rb) || rb == n + 1,
            _ => rb == n + 1,
        };
        if present {
            a
        } else {
            0.0
        }
    });

    let mut rhs = Vec::with_capacity(j * (n + 2));
    rhs.extend_from_slice(&p.gamma);
    for block in 1..=n {
        let t = bp[block - 1];
        rhs.extend(
            p.gamma
                .iter()
                .zip(&p.c)
                .map(|(g, c)| g + c * (p.horizon - t)),
        );
    }
    rhs.extend(
        p.gamma
            .iter()
            .zip(&p.c)
            .map(|(g, c)| g + c * p.horizon),
    );

    let mut objective = Vec::with_capacity(k * (n + 2));
    objective.extend(
        p.beta
            .iter()
            .zip(&p.b)
            .map(|(beta, b)| beta + b * p.horizon),
    );
    for i in 1..=n {
        let (lo, hi) = (bp[i - 1], bp[i]);
        let mid = 0.5 * (lo + hi);
        objective.extend(p.beta.iter().zip(&p.b).map(move |(beta, b)| beta + b * mid));
    }
    objective.extend_from_slice(&p.beta);

    Ok(LpProblem {
        direction: Direction::Minimize,
        objective,
        matrix,
        rhs,
        relations: vec![Relation::Ge; j * (n + 2)],
        restrictions: vec![SignRestriction::NonNegative; k * (n + 2)],
    })
}

/// The modified pair: `dclp1` constraints with left-endpoint objective
/// weights `gamma + (T - t_{i-1}) c`, and `dclp2` constraints with
/// right-endpoint weights `beta + t_i b`. The two are LP duals of each other
/// (checked entry for entry in debug builds).
pub fn build_mdclp_pair(
    p: &ProblemData,
    part: &Partition,
) -> Result<(LpProblem, LpProblem), DiscretizationError> {
    if !part.is_equidistant() {
        return Err(DiscretizationError::NotEquidistant);
    }
    let j = p.num_controls();
    let k = p.num_constraints();
    let n = part.num_intervals();
    let bp = part.breakpoints();

    let mut primal = build_dclp1(p, part)?;
    for i in 1..=n {
        let t = bp[i - 1];
        for idx in 0..j {
            primal.objective[j * i + idx] = p.gamma[idx] + p.c[idx] * (p.horizon - t);
        }
    }

    let mut dual = build_dclp2(p, part)?;
    for i in 1..=n {
        let t = bp[i];
        for idx in 0..k {
            dual.objective[k * i + idx] = p.beta[idx] + p.b[idx] * t;
        }
    }

    debug_assert!(
        mdclp_pair_is_dual(&primal, &dual, k, j, n),
        "modified discretization pair must be an LP dual pair"
    );
    Ok((primal, dual))
}

/// Entry-for-entry check that `lp::dual(primal)` equals `dual` after the
/// block reordering (the dual's variables appear as `p^0, dP, p^N` in row
/// order while `dclp2` orders them `p^N, dP, p^0`, and likewise for rows).
fn mdclp_pair_is_dual(primal: &LpProblem, dual_lp: &LpProblem, k: usize, j: usize, n: usize) -> bool {
    let built = match lp::dual(primal) {
        Ok(d) => d,
        Err(_) => return false,
    };
    let col_perm = |c: usize| -> usize {
        if c < k {
            (n + 1) * k + c
        } else if c < (n + 1) * k {
            c
        } else {
            c - (n + 1) * k
        }
    };
    let row_perm = |r: usize| -> usize {
        if r < j {
            (n + 1) * j + r
        } else if r < (n + 1) * j {
            r
        } else {
            r - (n + 1) * j
        }
    };
    if built.direction != dual_lp.direction {
        return false;
    }
    for r in 0..built.matrix.rows() {
        if built.rhs[r] != dual_lp.rhs[row_perm(r)] || built.relations[r] != dual_lp.relations[row_perm(r)] {
            return false;
        }
        for c in 0..built.matrix.cols() {
            if built.matrix[(r, c)] != dual_lp.matrix[(row_perm(r), col_perm(c))] {
                return false;
            }
        }
    }
    for c in 0..built.objective.len() {
        if built.objective[c] != dual_lp.objective[col_perm(c)]
            || built.restrictions[c] != dual_lp.restrictions[col_perm(c)]
        {
            return false;
        }
    }
    true
}

/// A-priori discretization gap data from the modified pair's optima.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapBound {
    pub upsilon: f64,
    pub prior_bound: f64,
}

/// `upsilon(N) = c' sum(dU*) - b' sum(dP*)` and the bound `upsilon * epsilon`.
///
/// `upsilon` is non-negative up to solver tolerance whenever the inputs are
/// optimal for the modified pair; a clearly negative value signals
/// sub-optimal inputs and is reported as an error.
pub fn gap_bound(
    c: &[f64],
    b: &[f64],
    delta_u: &[Vec<f64>],
    delta_p: &[Vec<f64>],
    epsilon: f64,
) -> Result<GapBound, DiscretizationError> {
    let mut u_term = 0.0;
    for du in delta_u {
        if du.len() != c.len() {
            return Err(DiscretizationError::Invalid(
                "increment dimension does not match c".into(),
            ));
        }
        u_term += dot(c, du);
    }
    let mut p_term = 0.0;
    for dp in delta_p {
        if dp.len() != b.len() {
            return Err(DiscretizationError::Invalid(
                "increment dimension does not match b".into(),
            ));
        }
        p_term += dot(b, dp);
    }
    let upsilon = u_term - p_term;
    let scale = 1.0 + u_term.abs() + p_term.abs();
    if upsilon < -1e-8 * scale {
        return Err(DiscretizationError::NegativeUpsilon { upsilon });
    }
    Ok(GapBound {
        upsilon,
        prior_bound: upsilon * epsilon,
    })
}

/// One refinement level's certified bracket: a-posteriori values of the two
/// discretizations plus the a-priori predictor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapCertificate {
    pub v_low: f64,
    pub v_high: f64,
    pub posterior_gap: f64,
    pub upsilon: f64,
    pub prior_bound: f64,
}

impl GapCertificate {
    pub fn new(v_low: f64, v_high: f64, bound: GapBound) -> Self {
        GapCertificate {
            v_low,
            v_high,
            posterior_gap: v_high - v_low,
            upsilon: bound.upsilon,
            prior_bound: bound.prior_bound,
        }
    }
}

/// Horizon-wide value bounds derived from the single-interval modified pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoarseBounds {
    pub v_lower: f64,
    pub v_upper: f64,
}

/// Solves the modified pair on the one-interval partition and assembles the
/// bounds `V_L <= V(mdclp(pi^N)) <= V_U` valid for every `N`.
pub fn coarse_bounds(p: &ProblemData) -> Result<CoarseBounds, DiscretizationError> {
    let part = Partition::equidistant(p.horizon, 1)?;
    let (md1, md2) = build_mdclp_pair(p, &part)?;
    let out1 = lp::solve(&md1)?;
    let out2 = lp::solve(&md2)?;
    match out1.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(DiscretizationError::InfeasiblePrimal),
        LpStatus::Unbounded => return Err(DiscretizationError::InfeasibleDual),
    }
    match out2.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(DiscretizationError::InfeasibleDual),
        LpStatus::Unbounded => return Err(DiscretizationError::InfeasiblePrimal),
    }

    let j = p.num_controls();
    let k = p.num_constraints();
    let t_end = p.horizon;
    let (u0, du, ut) = (
        &out1.primal[0..j],
        &out1.primal[j..2 * j],
        &out1.primal[2 * j..3 * j],
    );
    let mut v_lower = dot(&p.gamma, du) + dot(&p.gamma, ut);
    for idx in 0..j {
        v_lower += (p.gamma[idx] + p.c[idx] * t_end) * u0[idx];
        let c = p.c[idx];
        let correction = c.max(0.0) * (t_end / 2.0) - (-c).max(0.0) * t_end;
        v_lower += correction * du[idx];
    }

    let (pn, dp, p0) = (
        &out2.primal[0..k],
        &out2.primal[k..2 * k],
        &out2.primal[2 * k..3 * k],
    );
    let mut v_upper = dot(&p.beta, dp) + dot(&p.beta, p0);
    for idx in 0..k {
        v_upper += (p.beta[idx] + p.b[idx] * t_end) * pn[idx];
        let b = p.b[idx];
        let correction = b.max(0.0) * t_end - (-b).max(0.0) * (t_end / 2.0);
        v_upper += correction * dp[idx];
    }

    Ok(CoarseBounds { v_lower, v_upper })
}

/// Splits an optimal `dclp1` outcome into atoms, increments and slacks.
pub fn discrete_from_dclp1(
    p: &ProblemData,
    part: &Partition,
    outcome: &LpOutcome,
) -> Result<DiscreteSolution, DiscretizationError> {
    if outcome.status != LpStatus::Optimal {
        return Err(DiscretizationError::Invalid(
            "discrete extraction requires an optimal LP outcome".into(),
        ));
    }
    let j = p.num_controls();
    let n = part.num_intervals();
    if outcome.primal.len() != j * (n + 2) {
        return Err(DiscretizationError::Invalid(format!(
            "LP solution has {} entries, expected {}",
            outcome.primal.len(),
            j * (n + 2)
        )));
    }
    let bp = part.breakpoints();
    let atom_start = outcome.primal[0..j].to_vec();
    let increments: Vec<Vec<f64>> = (1..=n)
        .map(|i| outcome.primal[j * i..j * (i + 1)].to_vec())
        .collect();
    let atom_end = outcome.primal[j * (n + 1)..j * (n + 2)].to_vec();

    let mut cumulative = atom_start.clone();
    let slack_start = slack_row(p, &cumulative, 0.0);
    let mut slack_mid = Vec::with_capacity(n);
    for i in 0..n {
        for (acc, d) in cumulative.iter_mut().zip(&increments[i]) {
            *acc += d;
        }
        slack_mid.push(slack_row(p, &cumulative, bp[i + 1]));
    }
    for (acc, d) in cumulative.iter_mut().zip(&atom_end) {
        *acc += d;
    }
    let slack_end = slack_row(p, &cumulative, p.horizon);

    Ok(DiscreteSolution {
        atom_start,
        increments,
        atom_end,
        slack_start,
        slack_mid,
        slack_end,
        value: outcome.objective_value,
    })
}

/// Splits an optimal `dclp2` outcome into a dual-time discrete solution on
/// the reversed partition: the atom at dual time 0 is `p^N`, interval `k`
/// carries `dP^{N-k+1}`, and the atom at dual time `T` is `p^0`.
pub fn discrete_from_dclp2(
    p: &ProblemData,
    part: &Partition,
    outcome: &LpOutcome,
) -> Result<(Partition, DiscreteSolution), DiscretizationError> {
    if outcome.status != LpStatus::Optimal {
        return Err(DiscretizationError::Invalid(
            "discrete extraction requires an optimal LP outcome".into(),
        ));
    }
    let k = p.num_constraints();
    let n = part.num_intervals();
    if outcome.primal.len() != k * (n + 2) {
        return Err(DiscretizationError::Invalid(format!(
            "LP solution has {} entries, expected {}",
            outcome.primal.len(),
            k * (n + 2)
        )));
    }
    let dual_part = part.reversed();
    let dual_data = p.dual();
    let bp = dual_part.breakpoints();

    let atom_start = outcome.primal[0..k].to_vec();
    // dP^i belongs to primal interval i; in dual time the intervals appear
    // in reverse order.
    let increments: Vec<Vec<f64>> = (0..n)
        .map(|idx| {
            let i = n - idx;
            outcome.primal[k * i..k * (i + 1)].to_vec()
        })
        .collect();
    let atom_end = outcome.primal[k * (n + 1)..k * (n + 2)].to_vec();

    let mut cumulative = atom_start.clone();
    let slack_start = slack_row(&dual_data, &cumulative, 0.0);
    let mut slack_mid = Vec::with_capacity(n);
    for i in 0..n {
        for (acc, d) in cumulative.iter_mut().zip(&increments[i]) {
            *acc += d;
        }
        slack_mid.push(slack_row(&dual_data, &cumulative, bp[i + 1]));
    }
    for (acc, d) in cumulative.iter_mut().zip(&atom_end) {
        *acc += d;
    }
    let slack_end = slack_row(&dual_data, &cumulative, dual_part.horizon());

    Ok((
        dual_part,
        DiscreteSolution {
            atom_start,
            increments,
            atom_end,
            slack_start,
            slack_mid,
            slack_end,
            value: outcome.objective_value,
        },
    ))
}

fn slack_row(p: &ProblemData, cumulative: &[f64], t: f64) -> Vec<f64> {
    let au = p.a.mul_vec(cumulative);
    p.beta
        .iter()
        .zip(&p.b)
        .zip(&au)
        .map(|((beta, b), au)| beta + b * t - au)
        .collect()
}

fn check_horizon(p: &ProblemData, part: &Partition) -> Result<(), DiscretizationError> {
    if (part.horizon() - p.horizon).abs() > 1e-12 * (1.0 + p.horizon) {
        return Err(DiscretizationError::Invalid(format!(
            "partition horizon {} does not match problem horizon {}",
            part.horizon(),
            p.horizon
        )));
    }
    Ok(())
}
