//! Shared helpers for the integration suites: an independent brute-force LP
//! oracle and deterministic random instance generators.

#![allow(dead_code)]

use mclp_core::lp::{Direction, LpProblem, Relation, SignRestriction};
use mclp_core::matrix::Matrix;
use mclp_core::model::ProblemData;
use rand::Rng;

/// Box bound added to the oracle so every feasible LP has a vertex; optima
/// touching the box flag unboundedness.
pub const ORACLE_BOX: f64 = 9876.54321;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleResult {
    Infeasible,
    Optimal { value: f64, hits_box: bool },
}

/// Brute-force vertex enumeration for small LPs with non-negative variables:
/// every vertex of the boxed feasible set is the solution of `n` tight
/// constraints chosen among rows, sign bounds and box bounds.
pub fn brute_force_lp(lp: &LpProblem) -> OracleResult {
    let m = lp.num_rows();
    let n = lp.num_vars();
    assert!(
        lp.restrictions
            .iter()
            .all(|r| *r == SignRestriction::NonNegative),
        "oracle assumes non-negative variables"
    );

    // Constraint list: (coefficients, rhs, relation).
    let mut rows: Vec<(Vec<f64>, f64, Relation)> = Vec::new();
    for i in 0..m {
        rows.push((lp.matrix.row(i).to_vec(), lp.rhs[i], lp.relations[i]));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), 0.0, Relation::Ge));
        rows.push((e, ORACLE_BOX, Relation::Le));
    }
    let total = rows.len();

    let feas_tol = 1e-7 * (1.0 + ORACLE_BOX);
    let mut best: Option<(f64, bool)> = None;
    let maximize = lp.direction == Direction::Maximize;

    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        // Solve the tight system of the chosen constraints.
        let system: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve_square(system, rhs) {
            let feasible = rows.iter().all(|(a, b, rel)| {
                let lhs: f64 = a.iter().zip(&x).map(|(a, x)| a * x).sum();
                match rel {
                    Relation::Le => lhs <= b + feas_tol,
                    Relation::Ge => lhs >= b - feas_tol,
                    Relation::Eq => (lhs - b).abs() <= feas_tol,
                }
            });
            if feasible {
                let value: f64 = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
                let hits_box = x.iter().any(|&v| v >= ORACLE_BOX - 1e-4);
                let better = match best {
                    None => true,
                    Some((cur, _)) => {
                        if maximize {
                            value > cur
                        } else {
                            value < cur
                        }
                    }
                };
                if better {
                    best = Some((value, hits_box));
                }
            }
        }

        // Next combination.
        let mut i = n;
        loop {
            if i == 0 {
                return match best {
                    None => OracleResult::Infeasible,
                    Some((value, hits_box)) => OracleResult::Optimal { value, hits_box },
                };
            }
            i -= 1;
            if subset[i] != i + total - n {
                break;
            }
        }
        subset[i] += 1;
        for idx in i + 1..n {
            subset[idx] = subset[idx - 1] + 1;
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` on (near) singular
/// systems.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| {
            m[a][col]
                .abs()
                .partial_cmp(&m[b][col].abs())
                .expect("finite")
        })?;
        if m[pivot][col].abs() < 1e-9 * scale {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..n {
                    let sub = f * m[col][c];
                    m[r][c] -= sub;
                }
                let sub = f * rhs[col];
                rhs[r] -= sub;
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Random LP with non-negative variables and mixed row relations, small
/// enough for the vertex oracle.
pub fn random_small_lp(rng: &mut impl Rng) -> LpProblem {
    let m = rng.gen_range(1..=5);
    let n = rng.gen_range(1..=5);
    let matrix = Matrix::from_fn(m, n, |_, _| rng.gen_range(-2.0..2.0));
    let relations = (0..m)
        .map(|_| match rng.gen_range(0..4) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        })
        .collect();
    LpProblem {
        direction: if rng.gen_bool(0.5) {
            Direction::Maximize
        } else {
            Direction::Minimize
        },
        objective: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        matrix,
        rhs: (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        relations,
        restrictions: vec![SignRestriction::NonNegative; n],
    }
}

/// A random feasible point of the test-LP region of `p`: the region is
/// explored by optimizing a random objective over it (an unbounded direction
/// still yields the feasible point the solver stops at).
pub fn random_test_lp_point(rng: &mut impl Rng, p: &ProblemData) -> Option<(Vec<f64>, Vec<f64>)> {
    let j = p.num_controls();
    let mut lp = mclp_core::feasibility::build_test_lp(p);
    lp.objective = (0..2 * j).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let out = mclp_core::lp::solve(&lp).ok()?;
    match out.status {
        mclp_core::lp::LpStatus::Infeasible => None,
        _ => Some((out.primal[..j].to_vec(), out.primal[j..2 * j].to_vec())),
    }
}

/// Unconstrained random instance: mixed feasibility.
pub fn random_instance(rng: &mut impl Rng, k_max: usize, j_max: usize) -> ProblemData {
    let k = rng.gen_range(1..=k_max);
    let j = rng.gen_range(1..=j_max);
    ProblemData::new(
        Matrix::from_fn(k, j, |_, _| rng.gen_range(-2.0..2.0)),
        (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        (0..j).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        (0..j).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        1.0,
    )
    .expect("generated data is well-formed")
}

/// Random instance that is strictly feasible on both sides with margin at
/// least `margin` (zero witness on the primal, a constructed positive dual
/// witness).
pub fn random_strictly_feasible(
    rng: &mut impl Rng,
    k_max: usize,
    j_max: usize,
    margin: f64,
) -> ProblemData {
    let k = rng.gen_range(1..=k_max);
    let j = rng.gen_range(1..=j_max);
    let a = Matrix::from_fn(k, j, |_, _| rng.gen_range(-2.0..2.0));

    // Primal margin via the zero witness: beta and beta + b T stay above
    // margin.
    let beta: Vec<f64> = (0..k)
        .map(|_| rng.gen_range(margin + 0.05..2.0))
        .collect();
    let b: Vec<f64> = beta
        .iter()
        .map(|beta| {
            let lo = margin + 0.05 - beta;
            rng.gen_range(lo.max(-1.0)..1.0)
        })
        .collect();

    // Dual margin via a strictly positive witness (p, P):
    // A' p >= gamma + margin and A' (p + P) >= gamma + c + margin.
    let p_bar: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let p_big: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let at_p = a.tr_mul_vec(&p_bar);
    let at_big = a.tr_mul_vec(&p_big);
    let gamma: Vec<f64> = at_p
        .iter()
        .map(|v| v - margin - rng.gen_range(0.0..0.5))
        .collect();
    let c: Vec<f64> = at_p
        .iter()
        .zip(&at_big)
        .zip(&gamma)
        .map(|((ap, abig), g)| ap + abig - g - margin - rng.gen_range(0.0..0.5))
        .collect();

    ProblemData::new(a, beta, b, gamma, c, 1.0).expect("generated data is well-formed")
}
