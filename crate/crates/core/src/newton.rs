//! Damped Newton iteration shared by the two subproblems.

use crate::error::{Error, NewtonStep, Result};
use crate::fem::solver::norm;
use crate::fem::Constraints;

/// Stopping and damping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once the increment norm drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Halvings searching for a residual decrease before the largest
    /// admissible step is taken regardless.
    pub max_backtracks: usize,
}

/// Outcome of a converged Newton solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    /// Corrections applied with an increment above the tolerance.
    pub iterations: usize,
    /// Residual norm before, and increment norm of, every linear solve.
    pub history: Vec<NewtonStep>,
    /// Damping factors used for each correction.
    pub damping: Vec<f64>,
}

/// A nonlinear system in condensed form.
pub trait Linearization {
    /// Condensed residual at `x`.
    fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    /// Condensed residual at `x`, preparing the Jacobian at `x` for [`Self::solve`].
    fn linearize(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    /// Solves `J d = rhs` with the last prepared Jacobian.
    fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>>;
}

fn trial_norm(r: Result<Vec<f64>>) -> Result<f64> {
    match r {
        Ok(r) => Ok(norm(&r)),
        Err(Error::LimitExceeded { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Limit on halvings spent only to regain admissibility.
const MAX_ADMISSIBLE_HALVINGS: usize = 60;

fn shifted<'t>(trial: &'t mut [f64], x: &[f64], delta: &[f64], omega: f64) -> &'t [f64] {
    trial.iter_mut().zip(x.iter().zip(delta)).for_each(|(t, (xi, di))| *t = xi + omega * di);
    trial
}

/// Runs Newton from `x`, which must already satisfy the constraints;
/// `increments` carries the matching homogeneous constraints.
pub fn newton<L: Linearization>(
    problem: &mut L,
    x: &mut [f64],
    increments: &Constraints,
    opts: &NewtonOptions,
    label: &'static str,
) -> Result<NewtonReport> {
    let mut report = NewtonReport::default();
    let mut r = problem.linearize(x)?;
    let mut rn = norm(&r);
    let mut trial = vec![0.0; x.len()];
    for _ in 0..opts.max_iter {
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut delta = problem.solve(&rhs)?;
        increments.distribute(&mut delta);
        let dn = norm(&delta);
        report.history.push(NewtonStep {
            residual: rn,
            increment: dn,
        });
        if !dn.is_finite() {
            return Err(Error::Solver(format!("{label}: non-finite Newton increment")));
        }
        if dn <= opts.tol {
            x.iter_mut().zip(&delta).for_each(|(xi, di)| *xi += di);
            return Ok(report);
        }

        // Halvings that only bring the trial back into the admissible set
        // do not count against the descent budget.
        let mut omega = 1.0;
        let mut tn = trial_norm(problem.residual(&shifted(&mut trial, x, &delta, omega)))?;
        let mut halvings = 0;
        while !tn.is_finite() && halvings < MAX_ADMISSIBLE_HALVINGS {
            omega *= 0.5;
            halvings += 1;
            tn = trial_norm(problem.residual(&shifted(&mut trial, x, &delta, omega)))?;
        }
        if !tn.is_finite() {
            log::warn!("{label}: every damped step leaves the admissible set");
            return Err(Error::LimitExceeded { monitor: f64::INFINITY });
        }
        let largest = omega;
        let mut accepted = None;
        for k in 0..=opts.max_backtracks {
            if k > 0 {
                omega *= 0.5;
                tn = trial_norm(problem.residual(&shifted(&mut trial, x, &delta, omega)))?;
            }
            if tn < rn {
                accepted = Some(omega);
                break;
            }
        }
        let omega = accepted.unwrap_or_else(|| {
            log::warn!("{label}: line search exhausted, taking the step {largest:e}");
            largest
        });
        x.iter_mut().zip(&delta).for_each(|(xi, di)| *xi += omega * di);
        report.iterations += 1;
        report.damping.push(omega);
        r = problem.linearize(x)?;
        rn = norm(&r);
    }
    Err(Error::NonConvergence {
        solver: label,
        history: report.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{DofMap, FieldKind};
    use crate::mesh::QuadMesh;

    /// Diagonal system `x_i^3 + x_i - b_i = 0`.
    struct Cubic {
        b: Vec<f64>,
        jac: Vec<f64>,
    }

    impl Linearization for Cubic {
        fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(x.iter().zip(&self.b).map(|(x, b)| x * x * x + x - b).collect())
        }
        fn linearize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
            self.jac = x.iter().map(|x| 3.0 * x * x + 1.0).collect();
            self.residual(x)
        }
        fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
            Ok(rhs.iter().zip(&self.jac).map(|(r, j)| r / j).collect())
        }
    }

    #[test]
    fn converges_quadratically_on_a_cubic() {
        let mesh = QuadMesh::unit_square();
        let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
        let cons = Constraints::hanging_only(&dofs);
        let b = vec![2.0, 10.0, 30.0, 0.5];
        let mut p = Cubic { b: b.clone(), jac: vec![] };
        let mut x = vec![0.0; 4];
        let opts = NewtonOptions {
            tol: 1e-12,
            max_iter: 50,
            max_backtracks: 8,
        };
        let rep = newton(&mut p, &mut x, &cons, &opts, "cubic").unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi * xi * xi + xi - bi).abs() < 1e-10);
        }
        let h = &rep.history;
        let n = h.len();
        assert!(n < 30);
        assert!(h[n - 1].increment < 1e-3 * h[n - 2].increment);
    }

    #[test]
    fn reports_non_convergence() {
        let mesh = QuadMesh::unit_square();
        let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
        let cons = Constraints::hanging_only(&dofs);
        let mut p = Cubic { b: vec![1e6; 4], jac: vec![] };
        let mut x = vec![0.0; 4];
        let opts = NewtonOptions {
            tol: 1e-14,
            max_iter: 2,
            max_backtracks: 8,
        };
        match newton(&mut p, &mut x, &cons, &opts, "cubic") {
            Err(Error::NonConvergence { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
