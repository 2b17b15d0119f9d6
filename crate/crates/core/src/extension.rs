//! Conversions between discrete LP solutions and measure solutions.
//!
//! A feasible discrete solution extends to a feasible measure with the same
//! objective value (atoms at the endpoints, increment over interval length
//! as density inside), and a feasible measure restricts to a feasible
//! discrete solution by integrating its density over each interval. The two
//! maps are mutually inverse on step densities whose breakpoints lie in the
//! partition.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::discretization::{DiscreteSolution, Partition};
use crate::model::{MeasureSolution, ProblemData};

#[derive(Clone, Debug, PartialEq)]
pub enum ExtensionError {
    LengthMismatch { expected: usize, got: usize },
    InfeasibleDiscrete { violation: f64 },
    InfeasibleMeasure { violation: f64 },
    Invalid(String),
}

impl core::fmt::Display for ExtensionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ExtensionError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} value vectors, got {got}")
            }
            ExtensionError::InfeasibleDiscrete { violation } => {
                write!(f, "discrete solution infeasible by {violation}")
            }
            ExtensionError::InfeasibleMeasure { violation } => {
                write!(f, "measure infeasible by {violation}")
            }
            ExtensionError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for ExtensionError {}

/// Step function on a partition: value `values[i]` on `[t_i, t_{i+1})`, with
/// the last interval's value at `t = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    partition: Partition,
    values: Vec<Vec<f64>>,
}

impl PiecewiseConstant {
    pub fn new(values: Vec<Vec<f64>>, partition: Partition) -> Result<Self, ExtensionError> {
        if values.len() != partition.num_intervals() {
            return Err(ExtensionError::LengthMismatch {
                expected: partition.num_intervals(),
                got: values.len(),
            });
        }
        Ok(PiecewiseConstant { partition, values })
    }

    pub fn value_at(&self, t: f64) -> &[f64] {
        &self.values[self.partition.interval_index(t)]
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Piecewise linear interpolant of `N + 1` node values on a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    partition: Partition,
    values: Vec<Vec<f64>>,
}

impl PiecewiseLinear {
    pub fn new(values: Vec<Vec<f64>>, partition: Partition) -> Result<Self, ExtensionError> {
        if values.len() != partition.num_intervals() + 1 {
            return Err(ExtensionError::LengthMismatch {
                expected: partition.num_intervals() + 1,
                got: values.len(),
            });
        }
        Ok(PiecewiseLinear { partition, values })
    }

    /// Linear interpolation; node values are reproduced exactly.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let bp = self.partition.breakpoints();
        if let Some(idx) = bp.iter().position(|&b| b == t) {
            return self.values[idx].clone();
        }
        let i = self.partition.interval_index(t);
        let (lo, hi) = self.partition.interval(i);
        let w = (t - lo) / (hi - lo);
        self.values[i]
            .iter()
            .zip(&self.values[i + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Extends a feasible discrete solution to the measure with the same
/// objective value: atoms at the endpoints, density `increment / length`
/// inside.
pub fn extend_discrete(
    sol: &DiscreteSolution,
    part: &Partition,
) -> Result<MeasureSolution, ExtensionError> {
    let n = part.num_intervals();
    if sol.increments.len() != n {
        return Err(ExtensionError::LengthMismatch {
            expected: n,
            got: sol.increments.len(),
        });
    }
    let scale = 1.0 + sol.value.abs();
    let violation = sol.worst_negativity();
    if violation > 1e-8 * scale {
        return Err(ExtensionError::InfeasibleDiscrete { violation });
    }
    // Solver-scale negatives pass through untouched so that restriction
    // inverts the extension bit for bit.
    let densities: Vec<Vec<f64>> = sol
        .increments
        .iter()
        .enumerate()
        .map(|(i, inc)| {
            let len = part.length(i);
            inc.iter().map(|v| v / len).collect()
        })
        .collect();
    MeasureSolution::new(
        sol.atom_start.clone(),
        part.clone(),
        densities,
        sol.atom_end.clone(),
    )
    .map_err(|e| ExtensionError::Invalid(format!("{e}")))
}

/// Restricts a feasible measure to the discrete solution of the partition:
/// increments are the integrals of the density over each interval, atoms map
/// to atoms, and slacks are re-evaluated at the breakpoints.
pub fn restrict_measure(
    p: &ProblemData,
    sol: &MeasureSolution,
    part: &Partition,
) -> Result<DiscreteSolution, ExtensionError> {
    let feas = p
        .feasibility_of(sol, 1e-9 * (1.0 + sol.max_abs()))
        .map_err(|e| ExtensionError::Invalid(format!("{e}")))?;
    if !feas.feasible {
        return Err(ExtensionError::InfeasibleMeasure {
            violation: feas.worst_violation,
        });
    }

    let n = part.num_intervals();
    let j = sol.dim();
    let sol_bp = sol.partition.breakpoints();
    let mut increments: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = part.interval(i);
        let mut inc = vec![0.0; j];
        for (s, density) in sol.densities.iter().enumerate() {
            let (slo, shi) = (sol_bp[s], sol_bp[s + 1]);
            let a = slo.max(lo);
            let b = shi.min(hi);
            if b > a {
                let overlap = b - a;
                for (acc, d) in inc.iter_mut().zip(density) {
                    *acc += d * overlap;
                }
            }
        }
        increments.push(inc);
    }

    let atom_start = sol.atom_start.clone();
    let atom_end = sol.atom_end.clone();

    let slack_at = |cum: &[f64], t: f64| -> Vec<f64> {
        let au = p.a.mul_vec(cum);
        p.beta
            .iter()
            .zip(&p.b)
            .zip(&au)
            .map(|((beta, b), au)| beta + b * t - au)
            .collect()
    };
    let bp = part.breakpoints();
    let mut cumulative = atom_start.clone();
    let slack_start = slack_at(&cumulative, 0.0);
    let mut slack_mid = Vec::with_capacity(n);
    for i in 0..n {
        for (acc, d) in cumulative.iter_mut().zip(&increments[i]) {
            *acc += d;
        }
        slack_mid.push(slack_at(&cumulative, bp[i + 1]));
    }
    for (acc, d) in cumulative.iter_mut().zip(&atom_end) {
        *acc += d;
    }
    let slack_end = slack_at(&cumulative, part.horizon());

    // Objective in the discretization's own closed form.
    let t_end = p.horizon;
    let mut value = 0.0;
    for (idx, v) in atom_start.iter().enumerate() {
        value += (p.gamma[idx] + p.c[idx] * t_end) * v;
    }
    for (i, inc) in increments.iter().enumerate() {
        let (lo, hi) = part.interval(i);
        let mid = 0.5 * (lo + hi);
        for (idx, v) in inc.iter().enumerate() {
            value += (p.gamma[idx] + p.c[idx] * (t_end - mid)) * v;
        }
    }
    for (idx, v) in atom_end.iter().enumerate() {
        value += p.gamma[idx] * v;
    }

    Ok(DiscreteSolution {
        atom_start,
        increments,
        atom_end,
        slack_start,
        slack_mid,
        slack_end,
        value,
    })
}
