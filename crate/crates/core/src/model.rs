//! The M-CLP instance and measure-valued solutions.
//!
//! A solution is a vector measure on `[0, T]`: an atom at 0, a
//! piecewise-constant density over a partition of `(0, T)`, and an atom at
//! `T`. Its cumulative value `U(t)` is right continuous (atoms are included
//! at their time) with `U(0-) = 0`. Objectives, slacks, feasibility and the
//! complementary-slackness pairing are all evaluated in closed form; no
//! quadrature is involved.
//!
//! Solutions of the dual problem are stored in dual time: their `t = 0` is
//! primal time `T`. Every cross evaluation performs the reversal internally.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::discretization::Partition;
use crate::matrix::{dot, max_abs, Matrix};

/// Constant-coefficient M-CLP instance `(A, beta, b, gamma, c, T)`.
///
/// `A` is `K x J`; `beta`, `b` have length `K`; `gamma`, `c` length `J`.
/// The same data implicitly defines the symmetric dual problem, reachable in
/// primal form through [`ProblemData::dual`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemData {
    pub a: Matrix,
    pub beta: Vec<f64>,
    pub b: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c: Vec<f64>,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    DimensionMismatch(String),
    TOutOfRange { t: f64, horizon: f64 },
    Invalid(String),
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            ModelError::TOutOfRange { t, horizon } => {
                write!(f, "time {t} outside [0, {horizon}]")
            }
            ModelError::Invalid(msg) => write!(f, "invalid data: {msg}"),
        }
    }
}

impl core::error::Error for ModelError {}

impl ProblemData {
    pub fn new(
        a: Matrix,
        beta: Vec<f64>,
        b: Vec<f64>,
        gamma: Vec<f64>,
        c: Vec<f64>,
        horizon: f64,
    ) -> Result<Self, ModelError> {
        let data = ProblemData {
            a,
            beta,
            b,
            gamma,
            c,
            horizon,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let (k, j) = (self.a.rows(), self.a.cols());
        if k == 0 || j == 0 {
            return Err(ModelError::Invalid("A must be at least 1x1".into()));
        }
        if self.beta.len() != k || self.b.len() != k {
            return Err(ModelError::DimensionMismatch(format!(
                "beta/b have lengths {}/{}, expected {k}",
                self.beta.len(),
                self.b.len()
            )));
        }
        if self.gamma.len() != j || self.c.len() != j {
            return Err(ModelError::DimensionMismatch(format!(
                "gamma/c have lengths {}/{}, expected {j}",
                self.gamma.len(),
                self.c.len()
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(ModelError::Invalid(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !self.a.is_finite()
            || !self
                .beta
                .iter()
                .chain(&self.b)
                .chain(&self.gamma)
                .chain(&self.c)
                .all(|v| v.is_finite())
        {
            return Err(ModelError::Invalid("non-finite entry".into()));
        }
        Ok(())
    }

    /// Number of constraint rows `K`.
    pub fn num_constraints(&self) -> usize {
        self.a.rows()
    }

    /// Number of control components `J`.
    pub fn num_controls(&self) -> usize {
        self.a.cols()
    }

    /// The symmetric dual, rewritten in primal (max, `<=`) form:
    /// `(-A', -gamma, -c, -beta, -b, T)` where `'` is transposition.
    ///
    /// The value of the returned problem is the negation of the dual value,
    /// and applying `dual` twice reproduces the original data exactly.
    pub fn dual(&self) -> ProblemData {
        let at = self.a.transpose();
        ProblemData {
            a: Matrix::from_fn(at.rows(), at.cols(), |i, j| -at[(i, j)]),
            beta: self.gamma.iter().map(|v| -v).collect(),
            b: self.c.iter().map(|v| -v).collect(),
            gamma: self.beta.iter().map(|v| -v).collect(),
            c: self.b.iter().map(|v| -v).collect(),
            horizon: self.horizon,
        }
    }

    /// Objective value of a measure solution, in closed form: the atom at 0
    /// is weighted by `gamma + c T`, each density piece by its interval
    /// length times `gamma + (T - midpoint) c`, and the atom at `T` by
    /// `gamma`.
    pub fn objective_of(&self, sol: &MeasureSolution) -> Result<f64, ModelError> {
        self.check_solution_dims(sol, self.num_controls())?;
        let t_end = self.horizon;
        let head: Vec<f64> = self
            .gamma
            .iter()
            .zip(&self.c)
            .map(|(g, c)| g + c * t_end)
            .collect();
        let mut value = dot(&head, &sol.atom_start) + dot(&self.gamma, &sol.atom_end);
        let bp = sol.partition.breakpoints();
        for (n, density) in sol.densities.iter().enumerate() {
            let (lo, hi) = (bp[n], bp[n + 1]);
            let len = hi - lo;
            let mid = 0.5 * (lo + hi);
            let weighted: f64 = self
                .gamma
                .iter()
                .zip(&self.c)
                .zip(density)
                .map(|((g, c), d)| (g + c * (t_end - mid)) * d)
                .sum();
            value += len * weighted;
        }
        Ok(value)
    }

    /// Cumulative control and slack at time `t`: `U(t)` (right continuous)
    /// and `x(t) = beta + b t - A U(t)`.
    ///
    /// For solutions of [`ProblemData::dual`] the same formula yields the
    /// dual slack `q(t) = A' P(t) - gamma - c t` in dual time.
    pub fn slack_at(&self, sol: &MeasureSolution, t: f64) -> Result<TrajectoryPoint, ModelError> {
        self.check_solution_dims(sol, self.num_controls())?;
        let tol = 1e-12 * (1.0 + self.horizon);
        if t < -tol || t > self.horizon + tol {
            return Err(ModelError::TOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let t = t.clamp(0.0, self.horizon);
        let cumulative = sol.cumulative_at(t, true);
        let slack = self.slack_for(&cumulative, t);
        Ok(TrajectoryPoint {
            t,
            cumulative,
            slack,
        })
    }

    fn slack_for(&self, cumulative: &[f64], t: f64) -> Vec<f64> {
        let au = self.a.mul_vec(cumulative);
        self.beta
            .iter()
            .zip(&self.b)
            .zip(&au)
            .map(|((beta, b), au)| beta + b * t - au)
            .collect()
    }

    /// Feasibility check. The slack is piecewise linear between breakpoints,
    /// so it suffices to examine the breakpoints themselves, the left limit
    /// at `T` (before the final atom), and the monotonicity of the measure.
    pub fn feasibility_of(
        &self,
        sol: &MeasureSolution,
        tol: f64,
    ) -> Result<MeasureFeasibility, ModelError> {
        self.check_solution_dims(sol, self.num_controls())?;
        let mut worst = 0.0f64;
        let mut worst_t = 0.0f64;
        let bp = sol.partition.breakpoints();
        let t_end = self.horizon;

        let record = |violation: f64, t: f64, worst: &mut f64, worst_t: &mut f64| {
            if violation > *worst {
                *worst = violation;
                *worst_t = t;
            }
        };

        // The measure itself must be non-negative and non-decreasing.
        for (j, v) in sol.atom_start.iter().enumerate() {
            let _ = j;
            record(-v, 0.0, &mut worst, &mut worst_t);
        }
        for (n, density) in sol.densities.iter().enumerate() {
            for v in density {
                record(-v, bp[n], &mut worst, &mut worst_t);
            }
        }
        for v in &sol.atom_end {
            record(-v, t_end, &mut worst, &mut worst_t);
        }

        // Slack at every breakpoint, plus the left limit at T.
        for &t in bp.iter() {
            let slack = self.slack_for(&sol.cumulative_at(t, false), t);
            for v in &slack {
                record(-v, t, &mut worst, &mut worst_t);
            }
        }
        let slack_end = self.slack_for(&sol.cumulative_at(t_end, true), t_end);
        for v in &slack_end {
            record(-v, t_end, &mut worst, &mut worst_t);
        }

        Ok(MeasureFeasibility {
            feasible: worst <= tol,
            worst_violation: worst,
            worst_t,
        })
    }

    /// The complementary-slackness pairing of a primal solution `U` and a
    /// dual solution `P` (in dual time):
    ///
    /// ```text
    /// integral of x(T - t)' dP(t)  +  integral of q(T - t)' dU(t)
    /// ```
    ///
    /// Both integrals are exact: atoms pair with point slacks, and on every
    /// merged interval the integrand is a linear slack times a constant
    /// density, which the trapezoid rule integrates exactly. For feasible
    /// pairs the result equals the dual objective minus the primal objective,
    /// and it vanishes precisely on jointly optimal pairs.
    pub fn complementary_slackness_residual(
        &self,
        primal: &MeasureSolution,
        dual: &MeasureSolution,
    ) -> Result<f64, ModelError> {
        self.check_solution_dims(primal, self.num_controls())?;
        self.check_solution_dims(dual, self.num_constraints())?;
        let t_end = self.horizon;
        let dual_data = self.dual();

        // x(t) with control over the end atom; q likewise in dual time.
        let x_at = |t: f64, include_end: bool| -> Vec<f64> {
            self.slack_for(&primal.cumulative_at(t, include_end), t)
        };
        let q_at = |s: f64, include_end: bool| -> Vec<f64> {
            dual_data.slack_for(&dual.cumulative_at(s, include_end), s)
        };

        // Atom contributions. P's atom at dual time 0 sees x(T) (after the
        // primal end atom), its atom at dual time T sees x(0); symmetrically
        // for U's atoms against q.
        let mut total = 0.0;
        total += dot(&x_at(t_end, true), &dual.atom_start);
        total += dot(&x_at(0.0, true), &dual.atom_end);
        total += dot(&q_at(t_end, true), &primal.atom_start);
        total += dot(&q_at(0.0, true), &primal.atom_end);

        // Merge the primal grid with the time-reversed dual grid.
        let mut pts: Vec<f64> = primal.partition.breakpoints().to_vec();
        pts.extend(dual.partition.breakpoints().iter().map(|s| t_end - s));
        pts.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup();

        for w in pts.windows(2) {
            let (lo, hi) = (w[0].max(0.0), w[1].min(t_end));
            if hi <= lo {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let u_density = primal.density_at(mid);
            let p_density = dual.density_at(t_end - mid);

            // q(T - t)' u over t in (lo, hi): endpoints approached from
            // inside the interval, so the end atoms never leak in.
            let q_hi = q_at(t_end - lo, t_end - lo < t_end);
            let q_lo = q_at(t_end - hi, true);
            let avg_q: Vec<f64> = q_hi.iter().zip(&q_lo).map(|(a, b)| 0.5 * (a + b)).collect();
            total += (hi - lo) * dot(&avg_q, &u_density);

            // x(T - s)' p over the mirrored dual interval, integrated in
            // primal time.
            let x_lo = x_at(lo, true);
            let x_hi = x_at(hi, hi < t_end);
            let avg_x: Vec<f64> = x_lo.iter().zip(&x_hi).map(|(a, b)| 0.5 * (a + b)).collect();
            total += (hi - lo) * dot(&avg_x, &p_density);
        }
        Ok(total)
    }

    fn check_solution_dims(&self, sol: &MeasureSolution, expected: usize) -> Result<(), ModelError> {
        if sol.dim() != expected {
            return Err(ModelError::DimensionMismatch(format!(
                "solution has dimension {}, expected {expected}",
                sol.dim()
            )));
        }
        let sol_t = sol.partition.horizon();
        if (sol_t - self.horizon).abs() > 1e-12 * (1.0 + self.horizon) {
            return Err(ModelError::DimensionMismatch(format!(
                "solution horizon {sol_t} does not match problem horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// A measure-valued control: atom at 0, piecewise-constant density inside,
/// atom at `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSolution {
    pub atom_start: Vec<f64>,
    pub partition: Partition,
    pub densities: Vec<Vec<f64>>,
    pub atom_end: Vec<f64>,
}

impl MeasureSolution {
    pub fn new(
        atom_start: Vec<f64>,
        partition: Partition,
        densities: Vec<Vec<f64>>,
        atom_end: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let dim = atom_start.len();
        if atom_end.len() != dim {
            return Err(ModelError::DimensionMismatch(format!(
                "atom_end has length {}, expected {dim}",
                atom_end.len()
            )));
        }
        if densities.len() != partition.num_intervals() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} density pieces for {} intervals",
                densities.len(),
                partition.num_intervals()
            )));
        }
        if let Some(bad) = densities.iter().find(|d| d.len() != dim) {
            return Err(ModelError::DimensionMismatch(format!(
                "density piece has length {}, expected {dim}",
                bad.len()
            )));
        }
        let all = atom_start
            .iter()
            .chain(&atom_end)
            .chain(densities.iter().flatten());
        let mut scale = 0.0f64;
        for v in all.clone() {
            if !v.is_finite() {
                return Err(ModelError::Invalid("non-finite component".into()));
            }
            scale = scale.max(v.abs());
        }
        let neg_tol = 1e-9 * (1.0 + scale);
        if let Some(v) = all.clone().find(|v| **v < -neg_tol) {
            return Err(ModelError::Invalid(format!(
                "negative component {v} in a measure solution"
            )));
        }
        Ok(MeasureSolution {
            atom_start,
            partition,
            densities,
            atom_end,
        })
    }

    /// The zero measure on `[0, horizon]`.
    pub fn zero(dim: usize, horizon: f64) -> Self {
        let partition = Partition::from_breakpoints(vec![0.0, horizon])
            .expect("two-point partition is valid");
        MeasureSolution {
            atom_start: vec![0.0; dim],
            partition,
            densities: vec![vec![0.0; dim]],
            atom_end: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.atom_start.len()
    }

    /// Right-continuous cumulative value `U(t)`; the atom at `T` is added
    /// only when `include_end_atom` (callers evaluating the left limit
    /// `U(T-)` pass `false`).
    pub fn cumulative_at(&self, t: f64, include_end_atom: bool) -> Vec<f64> {
        let bp = self.partition.breakpoints();
        let mut u = self.atom_start.clone();
        for (n, density) in self.densities.iter().enumerate() {
            let (lo, hi) = (bp[n], bp[n + 1]);
            if t >= hi {
                for (acc, d) in u.iter_mut().zip(density) {
                    *acc += d * (hi - lo);
                }
            } else if t > lo {
                for (acc, d) in u.iter_mut().zip(density) {
                    *acc += d * (t - lo);
                }
                break;
            } else {
                break;
            }
        }
        if include_end_atom && t >= self.partition.horizon() {
            for (acc, a) in u.iter_mut().zip(&self.atom_end) {
                *acc += a;
            }
        }
        u
    }

    /// Total mass `U(T)` including both atoms.
    pub fn total(&self) -> Vec<f64> {
        self.cumulative_at(self.partition.horizon(), true)
    }

    /// Density vector on the interval containing `t` (breakpoints resolve to
    /// the interval on their right, `T` to the last interval).
    pub fn density_at(&self, t: f64) -> Vec<f64> {
        let idx = self.partition.interval_index(t);
        self.densities[idx].clone()
    }

    pub fn total_mass(&self) -> f64 {
        self.total().iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut scale = max_abs(&self.atom_start).max(max_abs(&self.atom_end));
        for d in &self.densities {
            scale = scale.max(max_abs(d));
        }
        scale
    }
}

/// Snapshot of the trajectory at one time: cumulative control and slack.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub cumulative: Vec<f64>,
    pub slack: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureFeasibility {
    pub feasible: bool,
    pub worst_violation: f64,
    pub worst_t: f64,
}
