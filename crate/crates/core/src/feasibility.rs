//! Feasibility and strict feasibility of M-CLP via a finite test LP.
//!
//! M-CLP is feasible exactly when the test LP over `(u, U)` is feasible: the
//! test LP checks the constraint at the two corners `t = 0` and `t = T`, and
//! the straight-line control `U(t) = u + (t / T) U` interpolates any witness
//! into a feasible measure. The strict (Slater) margin is the largest
//! uniform slack `alpha` achievable in both corner inequalities; a positive
//! margin is the hypothesis under which refinement is guaranteed to close
//! the duality gap.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::discretization::Partition;
use crate::lp::{self, Direction, LpError, LpProblem, LpStatus, Relation, SignRestriction};
use crate::matrix::{max_abs, Matrix};
use crate::model::{MeasureSolution, ProblemData};

/// Outcome of [`check_feasibility`].
///
/// `strict_margin` is the optimal value of the margin LP: positive means
/// strictly feasible, `f64::INFINITY` means the margin is unbounded.
/// `witness` is a test-LP-feasible pair `(u, U)` when feasible; `certificate`
/// a Farkas vector for the test LP rows when not.
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub strict_margin: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub certificate: Option<Vec<f64>>,
}

impl FeasibilityReport {
    pub fn strictly_feasible(&self) -> bool {
        self.feasible && self.strict_margin > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeasibilityError {
    InfeasibleWitness { violation: f64 },
    Dimension(String),
}

impl core::fmt::Display for FeasibilityError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FeasibilityError::InfeasibleWitness { violation } => {
                write!(f, "witness violates the test LP by {violation}")
            }
            FeasibilityError::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
        }
    }
}

impl core::error::Error for FeasibilityError {}

/// The test LP: `max (gamma + c T)' u + gamma' U` subject to `A u <= beta`
/// and `A u + A U <= beta + b T` with `u, U >= 0`.
pub fn build_test_lp(p: &ProblemData) -> LpProblem {
    let k = p.num_constraints();
    let j = p.num_controls();
    let matrix = Matrix::from_fn(2 * k, 2 * j, |r, c| {
        let a = p.a[(r % k, c % j)];
        if r < k && c >= j {
            0.0
        } else {
            a
        }
    });
    let mut rhs = p.beta.clone();
    rhs.extend(
        p.beta
            .iter()
            .zip(&p.b)
            .map(|(beta, b)| beta + b * p.horizon),
    );
    let mut objective: Vec<f64> = p
        .gamma
        .iter()
        .zip(&p.c)
        .map(|(g, c)| g + c * p.horizon)
        .collect();
    objective.extend_from_slice(&p.gamma);
    LpProblem {
        direction: Direction::Maximize,
        objective,
        matrix,
        rhs,
        relations: vec![Relation::Le; 2 * k],
        restrictions: vec![SignRestriction::NonNegative; 2 * j],
    }
}

/// The margin LP: `max alpha` with `A u + alpha <= beta`,
/// `A u + A U + alpha <= beta + b T`, `(u, U) >= 0` and `alpha` free. Always
/// feasible; its value is the strict-feasibility margin.
fn build_margin_lp(p: &ProblemData) -> LpProblem {
    let k = p.num_constraints();
    let j = p.num_controls();
    let matrix = Matrix::from_fn(2 * k, 2 * j + 1, |r, c| {
        if c == 2 * j {
            1.0
        } else if r < k && c >= j {
            0.0
        } else {
            p.a[(r % k, c % j)]
        }
    });
    let mut rhs = p.beta.clone();
    rhs.extend(
        p.beta
            .iter()
            .zip(&p.b)
            .map(|(beta, b)| beta + b * p.horizon),
    );
    let mut objective = vec![0.0; 2 * j + 1];
    objective[2 * j] = 1.0;
    let mut restrictions = vec![SignRestriction::NonNegative; 2 * j + 1];
    restrictions[2 * j] = SignRestriction::Free;
    LpProblem {
        direction: Direction::Maximize,
        objective,
        matrix,
        rhs,
        relations: vec![Relation::Le; 2 * k],
        restrictions,
    }
}

/// Decides feasibility from the test LP and computes the Slater margin from
/// the margin LP.
pub fn check_feasibility(p: &ProblemData) -> Result<FeasibilityReport, LpError> {
    let j = p.num_controls();
    let test = lp::solve(&build_test_lp(p))?;
    let margin_out = lp::solve(&build_margin_lp(p))?;
    let strict_margin = match margin_out.status {
        LpStatus::Optimal => margin_out.objective_value,
        LpStatus::Unbounded => f64::INFINITY,
        LpStatus::Infeasible => {
            return Err(LpError::NumericalFailure(
                "margin LP reported infeasible but is feasible by construction".into(),
            ))
        }
    };
    match test.status {
        LpStatus::Optimal | LpStatus::Unbounded => {
            let witness = (
                test.primal[0..j].to_vec(),
                test.primal[j..2 * j].to_vec(),
            );
            Ok(FeasibilityReport {
                feasible: true,
                strict_margin,
                witness: Some(witness),
                certificate: None,
            })
        }
        LpStatus::Infeasible => Ok(FeasibilityReport {
            feasible: false,
            strict_margin,
            witness: None,
            certificate: test.certificate,
        }),
    }
}

/// Turns a test-LP witness `(u, U)` into the straight-line feasible measure:
/// atom `u` at time 0 and constant density `U / T` on `(0, T)`.
pub fn test_solution_to_measure(
    p: &ProblemData,
    u: &[f64],
    big_u: &[f64],
) -> Result<MeasureSolution, FeasibilityError> {
    let j = p.num_controls();
    if u.len() != j || big_u.len() != j {
        return Err(FeasibilityError::Dimension(format!(
            "witness has lengths {}/{}, expected {j}",
            u.len(),
            big_u.len()
        )));
    }
    // Validate the witness against the test LP rows.
    let scale = 1.0 + max_abs(&p.beta) + max_abs(&p.b) * p.horizon;
    let tol = 1e-9 * scale * (1.0 + max_abs(u).max(max_abs(big_u)));
    let au = p.a.mul_vec(u);
    let a_sum = {
        let total: Vec<f64> = u.iter().zip(big_u).map(|(a, b)| a + b).collect();
        p.a.mul_vec(&total)
    };
    let mut violation = 0.0f64;
    for i in 0..p.num_constraints() {
        violation = violation.max(au[i] - p.beta[i]);
        violation = violation.max(a_sum[i] - p.beta[i] - p.b[i] * p.horizon);
    }
    for v in u.iter().chain(big_u) {
        violation = violation.max(-v);
    }
    if violation > tol {
        return Err(FeasibilityError::InfeasibleWitness { violation });
    }

    let partition = Partition::from_breakpoints(vec![0.0, p.horizon])
        .expect("two-point partition is valid");
    let density: Vec<f64> = big_u.iter().map(|v| v.max(0.0) / p.horizon).collect();
    let atom: Vec<f64> = u.iter().map(|v| v.max(0.0)).collect();
    MeasureSolution::new(atom, partition, vec![density], vec![0.0; j])
        .map_err(|e| FeasibilityError::Dimension(format!("{e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve;

    fn p(a: f64, beta: f64, b: f64, gamma: f64, c: f64) -> ProblemData {
        ProblemData::new(
            Matrix::from_rows(&[vec![a]]).unwrap(),
            vec![beta],
            vec![b],
            vec![gamma],
            vec![c],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn test_lp_values() {
        // P1: max u s.t. u <= 1, u + U <= 1.
        let out = solve(&build_test_lp(&p(1.0, 1.0, 0.0, 1.0, 0.0))).unwrap();
        assert!((out.objective_value - 1.0).abs() < 1e-12);
        // P2: objective weight of U is zero, value 1.
        let out = solve(&build_test_lp(&p(1.0, 1.0, 1.0, 0.0, 1.0))).unwrap();
        assert!((out.objective_value - 1.0).abs() < 1e-12);
        // P3: u >= 0 against u <= -1.
        let out = solve(&build_test_lp(&p(1.0, -1.0, 0.0, 0.0, 0.0))).unwrap();
        assert_eq!(out.status, LpStatus::Infeasible);
    }

    #[test]
    fn margins() {
        // P2 is strictly feasible with margin 1 (alpha <= min(beta, beta + bT)
        // at u = U = 0 and A >= 0 means larger u cannot help).
        let rep = check_feasibility(&p(1.0, 1.0, 1.0, 0.0, 1.0)).unwrap();
        assert!(rep.feasible);
        assert!((rep.strict_margin - 1.0).abs() < 1e-9);
        assert!(rep.strictly_feasible());

        // P4 is feasible but not strictly: alpha <= -u <= 0.
        let rep = check_feasibility(&p(1.0, 0.0, 1.0, 0.0, 0.0)).unwrap();
        assert!(rep.feasible);
        assert!(rep.strict_margin.abs() <= 1e-9);

        // Dual side of P2 has unbounded margin.
        let rep = check_feasibility(&p(1.0, 1.0, 1.0, 0.0, 1.0).dual()).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.strict_margin, f64::INFINITY);

        // P3 is infeasible and carries a certificate.
        let rep = check_feasibility(&p(1.0, -1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(!rep.feasible);
        assert!(rep.certificate.is_some());
        assert!(rep.strict_margin < 0.0);
    }

    #[test]
    fn margin_shift_identity() {
        // Replacing beta by beta - alpha0 shifts the margin down by alpha0.
        let base = ProblemData::new(
            Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.25, 1.0]]).unwrap(),
            vec![2.0, 1.0],
            vec![0.5, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            1.0,
        )
        .unwrap();
        let m0 = check_feasibility(&base).unwrap().strict_margin;
        let alpha0 = 0.375;
        let shifted = ProblemData::new(
            base.a.clone(),
            base.beta.iter().map(|v| v - alpha0).collect(),
            base.b.clone(),
            base.gamma.clone(),
            base.c.clone(),
            base.horizon,
        )
        .unwrap();
        let m1 = check_feasibility(&shifted).unwrap().strict_margin;
        assert!(
            (m0 - alpha0 - m1).abs() <= 1e-9 * (1.0 + m0.abs()),
            "margin {m0} shifted to {m1}"
        );
    }

    #[test]
    fn witness_to_measure() {
        let p1 = p(1.0, 1.0, 0.0, 1.0, 0.0);
        let sol = test_solution_to_measure(&p1, &[1.0], &[0.0]).unwrap();
        assert!(p1.feasibility_of(&sol, 1e-9).unwrap().feasible);
        assert!((p1.objective_of(&sol).unwrap() - 1.0).abs() < 1e-12);

        let p2 = p(1.0, 1.0, 1.0, 0.0, 1.0);
        let sol = test_solution_to_measure(&p2, &[1.0], &[1.0]).unwrap();
        assert!(p2.feasibility_of(&sol, 1e-9).unwrap().feasible);
        assert!((p2.objective_of(&sol).unwrap() - 1.5).abs() < 1e-12);

        // The zero witness works whenever beta >= 0.
        let sol = test_solution_to_measure(&p2, &[0.0], &[0.0]).unwrap();
        assert!(p2.feasibility_of(&sol, 1e-9).unwrap().feasible);

        // An infeasible witness is refused.
        assert!(matches!(
            test_solution_to_measure(&p1, &[2.0], &[0.0]),
            Err(FeasibilityError::InfeasibleWitness { .. })
        ));
    }
}
