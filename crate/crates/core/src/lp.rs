//! Dense linear programming with equality or inequality rows and per-variable
//! sign restrictions.
//!
//! The solver is a two-phase primal simplex on the full dense tableau with
//! Dantzig pricing, falling back to Bland's rule once too many degenerate
//! pivots accumulate. It reports the primal point, the row duals for the
//! original row orientation, the final basis, and a certificate when the
//! problem is infeasible (Farkas vector) or unbounded (improving ray).
//!
//! Every linear program posed by the rest of this crate runs through
//! [`solve`]; the shapes stay small enough that dense tableau updates are the
//! simplest robust choice.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{dot, max_abs, Matrix};

/// Feasibility tolerance, relative to `1 + ||rhs||_inf`.
pub const TOL_FEAS: f64 = 1e-9;
/// Objective agreement tolerance, relative to `1 + |value|`.
pub const TOL_OBJ: f64 = 1e-8;
/// Entries below this magnitude are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::Maximize => Direction::Minimize,
            Direction::Minimize => Direction::Maximize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Per-variable sign restriction: fixed at zero, non-negative, or free.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignRestriction {
    Zero,
    NonNegative,
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
    pub relations: Vec<Relation>,
    pub restrictions: Vec<SignRestriction>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve`].
///
/// For `Optimal`, `primal` and `dual` are the optimal points. For
/// `Unbounded`, `primal` is a feasible point and `certificate` the improving
/// ray. For `Infeasible`, `certificate` is a Farkas vector `y` (one entry per
/// row, signed for the original row orientation) with `y^T A` compatible with
/// the sign restrictions and `y^T rhs < 0`.
#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective_value: f64,
    /// Basic columns, one per row: `j < n` is a structural variable, `n + i`
    /// the slack (or redundant-row marker) of row `i`.
    pub basis: Vec<usize>,
    pub certificate: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpError {
    Malformed(String),
    NumericalFailure(String),
}

impl core::fmt::Display for LpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LpError::Malformed(msg) => write!(f, "malformed problem: {msg}"),
            LpError::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl core::error::Error for LpError {}

impl LpProblem {
    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let m = self.num_rows();
        let n = self.num_vars();
        if self.matrix.rows() != m || (m > 0 && self.matrix.cols() != n) {
            return Err(LpError::Malformed(format!(
                "matrix is {}x{}, expected {}x{}",
                self.matrix.rows(),
                self.matrix.cols(),
                m,
                n
            )));
        }
        if self.relations.len() != m {
            return Err(LpError::Malformed(format!(
                "{} relations for {} rows",
                self.relations.len(),
                m
            )));
        }
        if self.restrictions.len() != n {
            return Err(LpError::Malformed(format!(
                "{} restrictions for {} variables",
                self.restrictions.len(),
                n
            )));
        }
        if !self.matrix.is_finite()
            || !self.rhs.iter().all(|v| v.is_finite())
            || !self.objective.iter().all(|v| v.is_finite())
        {
            return Err(LpError::Malformed("non-finite entry".into()));
        }
        Ok(())
    }
}

/// Builds the standard dual under the zero / non-negative / free convention.
///
/// For a maximization: a `<=` row becomes a non-negative dual variable, an
/// `=` row a free one, and a `>=` row is negated first (its dual variable
/// multiplies the negated data). A non-negative primal variable becomes a
/// `>=` dual row, a free variable an `=` row, and a zero-fixed variable
/// contributes no dual row. Minimization is handled symmetrically, so
/// `dual(dual(lp))` reproduces `lp` exactly whenever `lp` uses the canonical
/// orientations (`<=`/`=` under max, `>=`/`=` under min) and has no
/// zero-fixed variables.
pub fn dual(lp: &LpProblem) -> Result<LpProblem, LpError> {
    lp.validate()?;
    let m = lp.num_rows();
    let n = lp.num_vars();

    // Sign normalizing each row to the orientation canonical for the primal
    // direction; rows already canonical keep +1.
    let row_sign: Vec<f64> = lp
        .relations
        .iter()
        .map(|rel| match (lp.direction, rel) {
            (Direction::Maximize, Relation::Ge) | (Direction::Minimize, Relation::Le) => -1.0,
            _ => 1.0,
        })
        .collect();

    let dual_restrictions: Vec<SignRestriction> = lp
        .relations
        .iter()
        .map(|rel| match rel {
            Relation::Eq => SignRestriction::Free,
            _ => SignRestriction::NonNegative,
        })
        .collect();

    let dual_objective: Vec<f64> = lp
        .rhs
        .iter()
        .zip(&row_sign)
        .map(|(b, s)| b * s)
        .collect();

    let kept: Vec<usize> = (0..n)
        .filter(|&j| lp.restrictions[j] != SignRestriction::Zero)
        .collect();

    let matrix = Matrix::from_fn(kept.len(), m, |r, i| row_sign[i] * lp.matrix[(i, kept[r])]);
    let rhs: Vec<f64> = kept.iter().map(|&j| lp.objective[j]).collect();
    let relations: Vec<Relation> = kept
        .iter()
        .map(|&j| match (lp.direction, lp.restrictions[j]) {
            (_, SignRestriction::Free) => Relation::Eq,
            (Direction::Maximize, _) => Relation::Ge,
            (Direction::Minimize, _) => Relation::Le,
        })
        .collect();

    Ok(LpProblem {
        direction: lp.direction.flipped(),
        objective: dual_objective,
        matrix,
        rhs,
        relations,
        restrictions: dual_restrictions,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColKind {
    /// Structural column; `negated` marks the negative half of a free split.
    Structural { orig: usize, negated: bool },
    Slack { row: usize },
    Artificial { row: usize },
}

/// Internal standard form `max c x, A x = b, x >= 0, b >= 0` plus the
/// simplex tableau state.
struct Tableau {
    m: usize,
    n_cols: usize,
    /// `(m + 1) x (n_cols + 1)`: row `m` holds reduced costs, the last column
    /// the basic values / objective.
    tab: Vec<f64>,
    basis: Vec<usize>,
    kind: Vec<ColKind>,
    /// Column allowed to enter the basis in the current phase.
    enterable: Vec<bool>,
    /// Per row: the column that started as that row's identity column, so the
    /// final tableau exposes the basis inverse there.
    id_col: Vec<usize>,
    flip: Vec<f64>,
    rhs_scale: f64,
    iterations: usize,
    degenerate_pivots: usize,
    bland: bool,
}

impl Tableau {
    fn width(&self) -> usize {
        self.n_cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.tab[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.n_cols)
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let w = self.width();
        let piv = self.tab[prow * w + pcol];
        let inv = 1.0 / piv;
        for v in &mut self.tab[prow * w..(prow + 1) * w] {
            *v *= inv;
        }
        self.tab[prow * w + pcol] = 1.0;
        for r in 0..=self.m {
            if r == prow {
                continue;
            }
            let factor = self.tab[r * w + pcol];
            if factor == 0.0 {
                continue;
            }
            let (base, pivot_row) = if r < prow {
                let (head, tail) = self.tab.split_at_mut(prow * w);
                (&mut head[r * w..(r + 1) * w], &tail[..w])
            } else {
                let (head, tail) = self.tab.split_at_mut(r * w);
                (&mut tail[..w], &head[prow * w..(prow + 1) * w])
            };
            for (x, p) in base.iter_mut().zip(pivot_row) {
                *x -= factor * p;
            }
            self.tab[r * w + pcol] = 0.0;
        }
        self.basis[prow] = pcol;
    }

    /// Rebuilds the reduced-cost row for the given column costs.
    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.width();
        for c in 0..=self.n_cols {
            self.tab[self.m * w + c] = if c < self.n_cols { costs[c] } else { 0.0 };
        }
        for r in 0..self.m {
            let cb = costs[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let (head, tail) = self.tab.split_at_mut(self.m * w);
            let row = &head[r * w..(r + 1) * w];
            for (obj, v) in tail[..w].iter_mut().zip(row) {
                *obj -= cb * v;
            }
        }
    }

    /// Runs simplex iterations until optimal or unbounded.
    fn run(&mut self, cost_scale: f64, max_iterations: usize) -> Result<Option<usize>, LpError> {
        let rc_tol = 1e-9 * (1.0 + cost_scale);
        let degen_tol = 1e-11 * self.rhs_scale;
        let w = self.width();
        loop {
            let obj_row = &self.tab[self.m * w..self.m * w + self.n_cols];
            let entering = if self.bland {
                obj_row
                    .iter()
                    .enumerate()
                    .find(|(c, rc)| self.enterable[*c] && **rc > rc_tol)
                    .map(|(c, _)| c)
            } else {
                let mut best = None;
                let mut best_rc = rc_tol;
                for (c, &rc) in obj_row.iter().enumerate() {
                    if self.enterable[c] && rc > best_rc {
                        best_rc = rc;
                        best = Some(c);
                    }
                }
                best
            };
            let Some(pcol) = entering else {
                return Ok(None);
            };

            let mut prow: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.m {
                let a = self.at(r, pcol);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    let better = match prow {
                        None => true,
                        Some(cur) => {
                            ratio < best_ratio - 1e-12 * self.rhs_scale
                                || (ratio < best_ratio + 1e-12 * self.rhs_scale
                                    && self.basis[r] < self.basis[cur])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        prow = Some(r);
                    }
                }
            }
            let Some(prow) = prow else {
                return Ok(Some(pcol));
            };

            if best_ratio.abs() <= degen_tol {
                self.degenerate_pivots += 1;
                if !self.bland && self.degenerate_pivots > 3 * (self.m + self.n_cols) {
                    self.bland = true;
                }
            }
            self.pivot(prow, pcol);
            self.iterations += 1;
            if self.iterations > max_iterations {
                return Err(LpError::NumericalFailure(format!(
                    "iteration cap {max_iterations} exceeded"
                )));
            }
        }
    }

    /// Row multipliers `y = c_B B^{-1}` read off the initial identity columns.
    fn multipliers(&self, costs: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                (0..self.m)
                    .map(|r| costs[self.basis[r]] * self.at(r, self.id_col[i]))
                    .sum()
            })
            .collect()
    }
}

/// Solves the linear program, returning status plus primal, dual, basis and
/// certificates.
pub fn solve(lp: &LpProblem) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let m = lp.num_rows();
    let n = lp.num_vars();
    let maximize = lp.direction == Direction::Maximize;
    let sense = if maximize { 1.0 } else { -1.0 };

    // Columns of the internal standard form: structural splits first, then
    // one slack per inequality row, then artificials as needed.
    let mut kind: Vec<ColKind> = Vec::new();
    for j in 0..n {
        match lp.restrictions[j] {
            SignRestriction::Zero => {}
            SignRestriction::NonNegative => {
                kind.push(ColKind::Structural { orig: j, negated: false });
            }
            SignRestriction::Free => {
                kind.push(ColKind::Structural { orig: j, negated: false });
                kind.push(ColKind::Structural { orig: j, negated: true });
            }
        }
    }
    let mut slack_col = vec![usize::MAX; m];
    for i in 0..m {
        if lp.relations[i] != Relation::Eq {
            slack_col[i] = kind.len();
            kind.push(ColKind::Slack { row: i });
        }
    }

    let flip: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let slack_sign: Vec<f64> = (0..m)
        .map(|i| {
            let s = match lp.relations[i] {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => 0.0,
            };
            s * flip[i]
        })
        .collect();

    // Rows whose slack cannot serve as the initial basic variable get an
    // artificial column.
    let first_artificial = kind.len();
    let mut id_col = vec![usize::MAX; m];
    for i in 0..m {
        if slack_sign[i] > 0.0 {
            id_col[i] = slack_col[i];
        } else {
            id_col[i] = kind.len();
            kind.push(ColKind::Artificial { row: i });
        }
    }
    let n_artificial = kind.len() - first_artificial;
    let n_cols = kind.len();

    let rhs_scale = 1.0 + max_abs(&lp.rhs);
    let mut t = Tableau {
        m,
        n_cols,
        tab: vec![0.0; (m + 1) * (n_cols + 1)],
        basis: id_col.clone(),
        kind: kind.clone(),
        enterable: vec![true; n_cols],
        id_col,
        flip,
        rhs_scale,
        iterations: 0,
        degenerate_pivots: 0,
        bland: false,
    };
    let w = t.width();
    for (c, k) in kind.iter().enumerate() {
        match *k {
            ColKind::Structural { orig, negated } => {
                let sign = if negated { -1.0 } else { 1.0 };
                for i in 0..m {
                    t.tab[i * w + c] = t.flip[i] * sign * lp.matrix[(i, orig)];
                }
            }
            ColKind::Slack { row } => {
                t.tab[row * w + c] = slack_sign[row];
            }
            ColKind::Artificial { row } => {
                t.tab[row * w + c] = 1.0;
            }
        }
    }
    for i in 0..m {
        t.tab[i * w + n_cols] = t.flip[i] * lp.rhs[i];
    }

    let max_iterations = 20_000 + 500 * (m + n_cols);
    let feas_tol = TOL_FEAS * rhs_scale;

    // Phase one: minimize the artificial mass.
    if n_artificial > 0 {
        for c in first_artificial..n_cols {
            t.enterable[c] = false;
        }
        let mut costs1 = vec![0.0; n_cols];
        for c in first_artificial..n_cols {
            costs1[c] = -1.0;
        }
        t.set_costs(&costs1);
        let unbounded = t.run(1.0, max_iterations)?;
        debug_assert!(unbounded.is_none(), "phase one is bounded by construction");
        // The objective row's rhs carries -z; phase one maximizes -(sum of
        // artificials), so the residual infeasibility is exactly that entry.
        let infeasibility = t.rhs(m);
        if infeasibility > feas_tol {
            let y = t.multipliers(&costs1);
            let certificate: Vec<f64> = (0..m).map(|i| t.flip[i] * y[i]).collect();
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                dual: Vec::new(),
                objective_value: f64::NAN,
                basis: Vec::new(),
                certificate: Some(certificate),
                iterations: t.iterations,
            });
        }
        // Drive leftover artificials out of the basis where possible;
        // rows where no pivot exists are redundant and keep a zero-level
        // artificial.
        for r in 0..m {
            if matches!(t.kind[t.basis[r]], ColKind::Artificial { .. }) {
                if let Some(c) = (0..first_artificial)
                    .find(|&c| t.at(r, c).abs() > PIVOT_TOL)
                {
                    t.pivot(r, c);
                }
            }
        }
    }

    // Phase two with the real costs.
    let mut costs2 = vec![0.0; n_cols];
    for (c, k) in kind.iter().enumerate() {
        if let ColKind::Structural { orig, negated } = *k {
            let sign = if negated { -1.0 } else { 1.0 };
            costs2[c] = sense * sign * lp.objective[orig];
        }
        if c >= first_artificial {
            t.enterable[c] = false;
        }
    }
    t.set_costs(&costs2);
    let cost_scale = max_abs(&costs2);
    let unbounded_col = t.run(cost_scale, max_iterations)?;

    let extract_primal = |t: &Tableau| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for r in 0..t.m {
            if let ColKind::Structural { orig, negated } = t.kind[t.basis[r]] {
                let sign = if negated { -1.0 } else { 1.0 };
                x[orig] += sign * t.rhs(r);
            }
        }
        x
    };

    if let Some(pcol) = unbounded_col {
        let primal = extract_primal(&t);
        let mut ray = vec![0.0; n];
        if let ColKind::Structural { orig, negated } = t.kind[pcol] {
            ray[orig] += if negated { -1.0 } else { 1.0 };
        }
        for r in 0..m {
            if let ColKind::Structural { orig, negated } = t.kind[t.basis[r]] {
                let sign = if negated { -1.0 } else { 1.0 };
                ray[orig] -= sign * t.at(r, pcol);
            }
        }
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            primal,
            dual: Vec::new(),
            objective_value: if maximize { f64::INFINITY } else { f64::NEG_INFINITY },
            basis: Vec::new(),
            certificate: Some(ray),
            iterations: t.iterations,
        });
    }

    let primal = extract_primal(&t);
    let y = t.multipliers(&costs2);
    let dual: Vec<f64> = (0..m).map(|i| sense * t.flip[i] * y[i]).collect();
    let objective_value = dot(&lp.objective, &primal);

    let basis: Vec<usize> = t
        .basis
        .iter()
        .map(|&c| match t.kind[c] {
            ColKind::Structural { orig, .. } => orig,
            ColKind::Slack { row } | ColKind::Artificial { row } => n + row,
        })
        .collect();

    let outcome = LpOutcome {
        status: LpStatus::Optimal,
        primal,
        dual,
        objective_value,
        basis,
        certificate: None,
        iterations: t.iterations,
    };
    check_optimal(lp, &outcome)?;
    Ok(outcome)
}

/// Sanity checks an optimal outcome: primal feasibility, dual objective
/// agreement, and complementary slackness.
fn check_optimal(lp: &LpProblem, out: &LpOutcome) -> Result<(), LpError> {
    let feas_tol = TOL_FEAS * (1.0 + max_abs(&lp.rhs));
    let ax = lp.matrix.mul_vec(&out.primal);
    let mut worst = 0.0f64;
    for i in 0..lp.num_rows() {
        let r = ax[i] - lp.rhs[i];
        let viol = match lp.relations[i] {
            Relation::Le => r,
            Relation::Ge => -r,
            Relation::Eq => r.abs(),
        };
        worst = worst.max(viol);
    }
    for j in 0..lp.num_vars() {
        match lp.restrictions[j] {
            SignRestriction::NonNegative => worst = worst.max(-out.primal[j]),
            SignRestriction::Zero => worst = worst.max(out.primal[j].abs()),
            SignRestriction::Free => {}
        }
    }
    if worst > 100.0 * feas_tol {
        return Err(LpError::NumericalFailure(format!(
            "primal violation {worst:.3e} after optimal termination"
        )));
    }
    let dual_value = dot(&lp.rhs, &out.dual);
    let tol = TOL_OBJ * (1.0 + out.objective_value.abs());
    if (dual_value - out.objective_value).abs() > 100.0 * tol {
        return Err(LpError::NumericalFailure(format!(
            "duality gap {:.3e} after optimal termination",
            dual_value - out.objective_value
        )));
    }
    Ok(())
}
