//! Embedding of separated continuous linear programs.
//!
//! An SCLP instance
//!
//! ```text
//! max  integral of (gamma + (T - t) c)' u(t) + d' x(t) dt
//! s.t. integral of G u over [0, t]  +  F x(t)  <=  alpha + a t
//!      H u(t) <= b,    u(t), x(t) >= 0
//! ```
//!
//! extends to an M-CLP over the stacked control
//! `[U_ctrl; U_slack; X_pos; X_neg]`, where `U_ctrl` integrates `u`,
//! `U_slack` the slack of `H u <= b`, and the state splits into
//! non-decreasing parts `x = X_pos - X_neg`. The extension has the same
//! objective value; when an optimal measure of the extension is absolutely
//! continuous in the `U_ctrl` and `U_slack` blocks it translates back to an
//! SCLP solution, again value-preserving. Optimal measures with endpoint
//! atoms in those blocks witness SCLP instances without bounded optimal
//! controls and are refused.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::extension::{PiecewiseConstant, PiecewiseLinear};
use crate::matrix::{dot, Matrix};
use crate::model::{MeasureSolution, ProblemData};

/// SCLP instance data. `g` is `K1 x J1`, `f` is `K1 x J2`, `h` is
/// `K2 x J1`; `J2` or `K2` may be zero (empty state or rate constraints).
#[derive(Clone, Debug, PartialEq)]
pub struct SclpData {
    pub g: Matrix,
    pub f: Matrix,
    pub h: Matrix,
    pub alpha: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SclpError {
    Dimension(String),
    AtomsPresent { mass: f64 },
    Invalid(String),
}

impl core::fmt::Display for SclpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SclpError::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            SclpError::AtomsPresent { mass } => write!(
                f,
                "control blocks carry atom mass {mass}; the solution is not absolutely \
                 continuous and cannot be translated"
            ),
            SclpError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for SclpError {}

impl SclpData {
    pub fn validate(&self) -> Result<(), SclpError> {
        let k1 = self.g.rows();
        let j1 = self.g.cols();
        let j2 = self.f.cols();
        let k2 = self.h.rows();
        if k1 == 0 || j1 == 0 {
            return Err(SclpError::Invalid("G must be at least 1x1".into()));
        }
        if self.f.rows() != k1 && j2 > 0 {
            return Err(SclpError::Dimension(format!(
                "F has {} rows, expected {k1}",
                self.f.rows()
            )));
        }
        if self.h.cols() != j1 && k2 > 0 {
            return Err(SclpError::Dimension(format!(
                "H has {} columns, expected {j1}",
                self.h.cols()
            )));
        }
        let want = [
            (self.alpha.len(), k1, "alpha"),
            (self.a.len(), k1, "a"),
            (self.b.len(), k2, "b"),
            (self.gamma.len(), j1, "gamma"),
            (self.c.len(), j1, "c"),
            (self.d.len(), j2, "d"),
        ];
        for (got, expected, name) in want {
            if got != expected {
                return Err(SclpError::Dimension(format!(
                    "{name} has length {got}, expected {expected}"
                )));
            }
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(SclpError::Invalid(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn num_controls(&self) -> usize {
        self.g.cols()
    }

    pub fn num_states(&self) -> usize {
        self.f.cols()
    }

    pub fn num_rate_rows(&self) -> usize {
        self.h.rows()
    }
}

/// Builds the M-CLP extension with row blocks `(K1, J2, K2, K2)` and column
/// blocks `(J1, K2, J2, J2)`:
///
/// ```text
///      [ G   0   F  -F ]            beta* = (alpha, 0, 0, 0)
/// A =  [ 0   0  -I   I ]            b*    = (a, 0, b, -b)
///      [ H   I   0   0 ]            gamma*= (gamma, 0, 0, 0)
///      [-H  -I   0   0 ]            c*    = (c, 0, d, -d)
/// ```
///
/// The state-cost `d` sits in the `(T - t)`-weighted slot: the objective
/// contribution of the split state is the exact partial integration of
/// `d' x(t) dt`, which is what makes the extension value-preserving.
pub fn sclp_to_mclp(s: &SclpData) -> Result<ProblemData, SclpError> {
    s.validate()?;
    let k1 = s.g.rows();
    let j1 = s.g.cols();
    let j2 = s.f.cols();
    let k2 = s.h.rows();

    let rows = k1 + j2 + 2 * k2;
    let cols = j1 + k2 + 2 * j2;
    let matrix = Matrix::from_fn(rows, cols, |r, c| {
        // Row blocks: dynamics (K1), state sign (J2), rate cap (K2, twice).
        if r < k1 {
            if c < j1 {
                s.g[(r, c)]
            } else if c < j1 + k2 {
                0.0
            } else if c < j1 + k2 + j2 {
                s.f[(r, c - j1 - k2)]
            } else {
                -s.f[(r, c - j1 - k2 - j2)]
            }
        } else if r < k1 + j2 {
            let rr = r - k1;
            if c >= j1 + k2 && c < j1 + k2 + j2 {
                if c - j1 - k2 == rr {
                    -1.0
                } else {
                    0.0
                }
            } else if c >= j1 + k2 + j2 {
                if c - j1 - k2 - j2 == rr {
                    1.0
                } else {
                    0.0
                }
            } else {
                0.0
            }
        } else {
            let (rr, sign) = if r < k1 + j2 + k2 {
                (r - k1 - j2, 1.0)
            } else {
                (r - k1 - j2 - k2, -1.0)
            };
            if c < j1 {
                sign * s.h[(rr, c)]
            } else if c < j1 + k2 {
                if c - j1 == rr {
                    sign
                } else {
                    0.0
                }
            } else {
                0.0
            }
        }
    });

    let mut beta = s.alpha.clone();
    beta.extend(core::iter::repeat(0.0).take(j2 + 2 * k2));
    let mut b = s.a.clone();
    b.extend(core::iter::repeat(0.0).take(j2));
    b.extend_from_slice(&s.b);
    b.extend(s.b.iter().map(|v| -v));

    let mut gamma = s.gamma.clone();
    gamma.extend(core::iter::repeat(0.0).take(k2 + 2 * j2));
    let mut c = s.c.clone();
    c.extend(core::iter::repeat(0.0).take(k2));
    c.extend_from_slice(&s.d);
    c.extend(s.d.iter().map(|v| -v));

    ProblemData::new(matrix, beta, b, gamma, c, s.horizon)
        .map_err(|e| SclpError::Invalid(format!("{e}")))
}

/// An SCLP solution recovered from a measure: step control `u`, piecewise
/// linear state `x`, and the SCLP objective value.
///
/// The state nodes are the post-jump values; a jump of the split state at
/// `T` shows up in the final node but is excluded from the objective
/// integral, which uses the left limit there.
#[derive(Clone, Debug)]
pub struct SclpSolution {
    pub control: PiecewiseConstant,
    pub state: PiecewiseLinear,
    pub objective: f64,
}

/// Translates a measure solving the M-CLP extension back to an SCLP
/// solution: `u` is the density of the control block, `x` the difference of
/// the split state blocks. Requires the control and rate-slack blocks to be
/// atom free (within `tol`, relative to the total mass).
pub fn mclp_solution_to_sclp(
    s: &SclpData,
    sol: &MeasureSolution,
    tol: f64,
) -> Result<SclpSolution, SclpError> {
    s.validate()?;
    let j1 = s.num_controls();
    let j2 = s.num_states();
    let k2 = s.num_rate_rows();
    let dim = j1 + k2 + 2 * j2;
    if sol.dim() != dim {
        return Err(SclpError::Dimension(format!(
            "measure has dimension {}, expected {dim}",
            sol.dim()
        )));
    }

    let total_mass: f64 = sol.total().iter().sum();
    let atom_mass: f64 = sol.atom_start[..j1 + k2]
        .iter()
        .chain(&sol.atom_end[..j1 + k2])
        .sum();
    if atom_mass > tol * (1.0 + total_mass) {
        return Err(SclpError::AtomsPresent { mass: atom_mass });
    }

    let part = sol.partition.clone();
    let n = part.num_intervals();
    let control_values: Vec<Vec<f64>> = sol
        .densities
        .iter()
        .map(|d| d[..j1].to_vec())
        .collect();
    let control = PiecewiseConstant::new(control_values, part.clone())
        .map_err(|e| SclpError::Invalid(format!("{e}")))?;

    let bp = part.breakpoints();
    let state_at = |t: f64, include_end: bool| -> Vec<f64> {
        let cum = sol.cumulative_at(t, include_end);
        (0..j2)
            .map(|r| cum[j1 + k2 + r] - cum[j1 + k2 + j2 + r])
            .collect()
    };
    let mut state_nodes: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for (i, &t) in bp.iter().enumerate() {
        state_nodes.push(state_at(t, i == n));
    }
    let state = PiecewiseLinear::new(state_nodes, part.clone())
        .map_err(|e| SclpError::Invalid(format!("{e}")))?;

    // SCLP objective: closed form for the control term, trapezoid (exact on
    // the piecewise linear state) for the d-term with the pre-atom value at
    // T.
    let t_end = s.horizon;
    let mut objective = 0.0;
    for (i, values) in control.values().iter().enumerate() {
        let (lo, hi) = part.interval(i);
        let len = hi - lo;
        let mid = 0.5 * (lo + hi);
        let weighted: f64 = s
            .gamma
            .iter()
            .zip(&s.c)
            .zip(values)
            .map(|((g, c), u)| (g + c * (t_end - mid)) * u)
            .sum();
        objective += len * weighted;
    }
    if j2 > 0 {
        for i in 0..n {
            let (lo, hi) = part.interval(i);
            let x_lo = state_at(lo, false);
            let x_hi = state_at(hi, false);
            let avg: Vec<f64> = x_lo.iter().zip(&x_hi).map(|(a, b)| 0.5 * (a + b)).collect();
            objective += (hi - lo) * dot(&s.d, &avg);
        }
    }

    Ok(SclpSolution {
        control,
        state,
        objective,
    })
}

/// Reads the blocks of an extension back into SCLP data (inverse of
/// [`sclp_to_mclp`] given the block sizes).
pub fn mclp_to_sclp_blocks(
    p: &ProblemData,
    j1: usize,
    j2: usize,
    k2: usize,
) -> Result<SclpData, SclpError> {
    let k1 = p
        .num_constraints()
        .checked_sub(j2 + 2 * k2)
        .ok_or_else(|| SclpError::Dimension("row blocks exceed matrix".into()))?;
    if p.num_controls() != j1 + k2 + 2 * j2 || k1 == 0 {
        return Err(SclpError::Dimension(
            "column blocks do not match the matrix".into(),
        ));
    }
    let g = Matrix::from_fn(k1, j1, |r, c| p.a[(r, c)]);
    let f = Matrix::from_fn(k1, j2, |r, c| p.a[(r, j1 + k2 + c)]);
    let h = Matrix::from_fn(k2, j1, |r, c| p.a[(k1 + j2 + r, c)]);
    Ok(SclpData {
        g,
        f,
        h,
        alpha: p.beta[..k1].to_vec(),
        a: p.b[..k1].to_vec(),
        b: p.b[k1 + j2..k1 + j2 + k2].to_vec(),
        gamma: p.gamma[..j1].to_vec(),
        c: p.c[..j1].to_vec(),
        d: p.c[j1 + k2..j1 + k2 + j2].to_vec(),
        horizon: p.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Partition;

    fn p2_as_sclp() -> SclpData {
        SclpData {
            g: Matrix::from_rows(&[vec![1.0]]).unwrap(),
            f: Matrix::zeros(1, 0),
            h: Matrix::zeros(0, 1),
            alpha: vec![1.0],
            a: vec![1.0],
            b: vec![],
            gamma: vec![0.0],
            c: vec![1.0],
            d: vec![],
            horizon: 1.0,
        }
    }

    #[test]
    fn empty_blocks_collapse_to_p2() {
        let p = sclp_to_mclp(&p2_as_sclp()).unwrap();
        assert_eq!(p.a.rows(), 1);
        assert_eq!(p.a.cols(), 1);
        assert_eq!(p.a[(0, 0)], 1.0);
        assert_eq!(p.beta, vec![1.0]);
        assert_eq!(p.b, vec![1.0]);
        assert_eq!(p.gamma, vec![0.0]);
        assert_eq!(p.c, vec![1.0]);
        assert_eq!(p.horizon, 1.0);
    }

    #[test]
    fn full_blocks_shape_and_signs() {
        let s = SclpData {
            g: Matrix::from_rows(&[vec![2.0]]).unwrap(),
            f: Matrix::from_rows(&[vec![3.0]]).unwrap(),
            h: Matrix::from_rows(&[vec![5.0]]).unwrap(),
            alpha: vec![1.0],
            a: vec![0.5],
            b: vec![7.0],
            gamma: vec![0.25],
            c: vec![0.125],
            d: vec![11.0],
            horizon: 2.0,
        };
        let p = sclp_to_mclp(&s).unwrap();
        assert_eq!(p.a.rows(), 4);
        assert_eq!(p.a.cols(), 4);
        let expected = [
            [2.0, 0.0, 3.0, -3.0],
            [0.0, 0.0, -1.0, 1.0],
            [5.0, 1.0, 0.0, 0.0],
            [-5.0, -1.0, 0.0, 0.0],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(p.a[(r, c)], expected[r][c], "entry ({r}, {c})");
            }
        }
        assert_eq!(p.beta, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.b, vec![0.5, 0.0, 7.0, -7.0]);
        assert_eq!(p.gamma, vec![0.25, 0.0, 0.0, 0.0]);
        assert_eq!(p.c, vec![0.125, 0.0, 11.0, -11.0]);

        // Block round trip.
        let back = mclp_to_sclp_blocks(&p, 1, 1, 1).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn translation_of_density_solution() {
        let s = p2_as_sclp();
        let part = Partition::from_breakpoints(vec![0.0, 1.0]).unwrap();
        let sol = MeasureSolution::new(vec![0.0], part, vec![vec![1.0]], vec![0.0]).unwrap();
        let back = mclp_solution_to_sclp(&s, &sol, 1e-7).unwrap();
        assert_eq!(back.control.value_at(0.5), &[1.0]);
        // integral of (1 - t) dt = 0.5.
        assert!((back.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn atom_bearing_solution_is_refused() {
        let s = p2_as_sclp();
        let part = Partition::from_breakpoints(vec![0.0, 1.0]).unwrap();
        let sol = MeasureSolution::new(vec![1.0], part, vec![vec![1.0]], vec![0.0]).unwrap();
        assert!(matches!(
            mclp_solution_to_sclp(&s, &sol, 1e-7),
            Err(SclpError::AtomsPresent { .. })
        ));
    }

    #[test]
    fn zero_solution_translates_to_zero() {
        let s = p2_as_sclp();
        let sol = MeasureSolution::zero(1, 1.0);
        let back = mclp_solution_to_sclp(&s, &sol, 1e-7).unwrap();
        assert_eq!(back.objective, 0.0);
    }

    #[test]
    fn state_atoms_translate_with_value() {
        // State-block atoms are allowed: x jumps are measurable controls on
        // the SCLP side. G = [1], F = [1], d = 1, gamma = c = 0, T = 2,
        // alpha = 1, a = 0: SCLP optimum is u = 0, x = 1 with value 2; the
        // extension optimum puts an atom of X_pos at 0.
        let s = SclpData {
            g: Matrix::from_rows(&[vec![1.0]]).unwrap(),
            f: Matrix::from_rows(&[vec![1.0]]).unwrap(),
            h: Matrix::zeros(0, 1),
            alpha: vec![1.0],
            a: vec![0.0],
            b: vec![],
            gamma: vec![0.0],
            c: vec![0.0],
            d: vec![1.0],
            horizon: 2.0,
        };
        let ext = sclp_to_mclp(&s).unwrap();
        // Measure: atom 1 in the X_pos block at time 0, nothing else.
        let part = Partition::from_breakpoints(vec![0.0, 2.0]).unwrap();
        let sol = MeasureSolution::new(
            vec![0.0, 1.0, 0.0],
            part,
            vec![vec![0.0, 0.0, 0.0]],
            vec![0.0, 0.0, 0.0],
        )
        .unwrap();
        assert!(ext.feasibility_of(&sol, 1e-9).unwrap().feasible);
        // Extension objective: (T - 0) * d * 1 = 2.
        assert!((ext.objective_of(&sol).unwrap() - 2.0).abs() < 1e-12);
        let back = mclp_solution_to_sclp(&s, &sol, 1e-7).unwrap();
        assert_eq!(back.state.value_at(1.0), vec![1.0]);
        assert!((back.objective - 2.0).abs() < 1e-12, "got {}", back.objective);
    }
}
