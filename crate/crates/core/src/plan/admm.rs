//! Operator-splitting (ADMM) solver for the dense QP class produced by the
//! trajectory planner: minimize `0.5 xᵀPx + qᵀx` over `l ≤ Ax ≤ u`.
//!
//! The splitting, relaxation, and termination follow the standard
//! operator-splitting QP scheme: one quasi-definite KKT factorization up
//! front, then cheap triangular solves per iteration.

use nalgebra::{DMatrix, DVector};

use super::qp::QpProblem;
use super::PlanError;

const SIGMA: f64 = 1e-6;
const ALPHA: f64 = 1.6;
const RHO_BASE: f64 = 0.1;
const RHO_EQ_SCALE: f64 = 1e3;
const CHECK_INTERVAL: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    /// Primal solution.
    pub x: DVector<f64>,
    /// Projected constraint values (`Ax` after projection onto `[l, u]`).
    pub z: DVector<f64>,
    /// Dual multipliers.
    pub y: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Solves the QP to the given residual tolerance.
pub fn solve_qp(qp: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution, PlanError> {
    qp.validate()?;
    let n = qp.num_vars();
    let m = qp.num_constraints();

    // Per-row step sizes: equality rows get a much stiffer rho.
    let rho: DVector<f64> = DVector::from_fn(m, |i, _| {
        if qp.l[i] == qp.u[i] {
            RHO_BASE * RHO_EQ_SCALE
        } else {
            RHO_BASE
        }
    });

    // Quasi-definite KKT matrix, factored once.
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&qp.p);
    for i in 0..n {
        kkt[(i, i)] += SIGMA;
    }
    kkt.view_mut((0, n), (n, m)).copy_from(&qp.a.transpose());
    kkt.view_mut((n, 0), (m, n)).copy_from(&qp.a);
    for i in 0..m {
        kkt[(n + i, n + i)] = -1.0 / rho[i];
    }
    let lu = kkt.lu();

    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(m);
    let mut y = DVector::zeros(m);
    let mut rhs = DVector::zeros(n + m);
    let mut prim_res = f64::INFINITY;
    let mut dual_res = f64::INFINITY;

    for iter in 1..=max_iter {
        for i in 0..n {
            rhs[i] = SIGMA * x[i] - qp.q[i];
        }
        for i in 0..m {
            rhs[n + i] = z[i] - y[i] / rho[i];
        }
        let sol = lu.solve(&rhs).ok_or(PlanError::NonConvex(0.0))?;
        let x_tilde = sol.rows(0, n).into_owned();
        let nu = sol.rows(n, m).into_owned();

        // z_tilde = z + (nu - y) / rho
        let mut z_tilde = z.clone();
        for i in 0..m {
            z_tilde[i] += (nu[i] - y[i]) / rho[i];
        }

        let x_next = &x_tilde * ALPHA + &x * (1.0 - ALPHA);
        let mut z_relaxed: DVector<f64> = DVector::zeros(m);
        for i in 0..m {
            z_relaxed[i] = ALPHA * z_tilde[i] + (1.0 - ALPHA) * z[i];
        }
        let mut z_next: DVector<f64> = DVector::zeros(m);
        for i in 0..m {
            let unprojected: f64 = z_relaxed[i] + y[i] / rho[i];
            z_next[i] = unprojected.clamp(qp.l[i], qp.u[i]);
        }
        for i in 0..m {
            y[i] += rho[i] * (z_relaxed[i] - z_next[i]);
        }
        x = x_next;
        z = z_next;

        if iter % CHECK_INTERVAL == 0 || iter == max_iter {
            let ax = &qp.a * &x;
            let px = &qp.p * &x;
            let aty = qp.a.transpose() * &y;
            prim_res = (&ax - &z).abs().max();
            dual_res = (&px + &qp.q + &aty).abs().max();
            let prim_scale = ax.abs().max().max(z.abs().max());
            let dual_scale = px.abs().max().max(aty.abs().max()).max(qp.q.abs().max());
            if prim_res <= tol + tol * prim_scale && dual_res <= tol + tol * dual_scale {
                return Ok(QpSolution {
                    x,
                    z,
                    y,
                    status: QpStatus::Solved,
                    iterations: iter,
                    primal_residual: prim_res,
                    dual_residual: dual_res,
                });
            }
        }
    }

    Ok(QpSolution {
        x,
        z,
        y,
        status: QpStatus::MaxIterations,
        iterations: max_iter,
        primal_residual: prim_res,
        dual_residual: dual_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_qp(p: Vec<f64>, q: Vec<f64>, l: Vec<f64>, u: Vec<f64>) -> QpProblem {
        let n = q.len();
        QpProblem {
            p: DMatrix::from_diagonal(&DVector::from_vec(p)),
            q: DVector::from_vec(q),
            a: DMatrix::identity(n, n),
            l: DVector::from_vec(l),
            u: DVector::from_vec(u),
        }
    }

    #[test]
    fn active_box_bound_by_hand_kkt() {
        // min 0.5 x^2 - 4x on [-1, 1]: unconstrained optimum 4, so x* = 1.
        let qp = box_qp(vec![1.0], vec![-4.0], vec![-1.0], vec![1.0]);
        let sol = solve_qp(&qp, 1e-8, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "{}", sol.x[0]);
    }

    #[test]
    fn equality_constrained_qp_matches_dense_kkt_solve() {
        // min 0.5 xPx + qx s.t. Ax = b with random-ish fixed data.
        let p = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let q = DVector::from_vec(vec![-1.0, 2.0, 0.3]);
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0]);
        let qp = QpProblem {
            p: p.clone(),
            q: q.clone(),
            a: a.clone(),
            l: b.clone(),
            u: b.clone(),
        };
        let sol = solve_qp(&qp, 1e-9, 20_000).unwrap();

        let mut kkt = DMatrix::zeros(4, 4);
        kkt.view_mut((0, 0), (3, 3)).copy_from(&p);
        kkt.view_mut((0, 3), (3, 1)).copy_from(&a.transpose());
        kkt.view_mut((3, 0), (1, 3)).copy_from(&a);
        let mut rhs = DVector::zeros(4);
        rhs.rows_mut(0, 3).copy_from(&(-&q));
        rhs[3] = b[0];
        let exact = kkt.lu().solve(&rhs).unwrap();
        for i in 0..3 {
            assert!((sol.x[i] - exact[i]).abs() < 1e-6, "x[{i}]");
        }
    }

    #[test]
    fn kkt_residuals_reported_below_tolerance() {
        let qp = box_qp(
            vec![2.0, 3.0, 1.0, 5.0],
            vec![1.0, -2.0, 0.5, -4.0],
            vec![-1.0, -1.0, -0.2, 0.0],
            vec![1.0, 0.5, 0.2, 2.0],
        );
        let sol = solve_qp(&qp, 1e-6, 10_000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!(sol.primal_residual <= 1e-6 + 1e-6 * 10.0);
        assert!(sol.dual_residual <= 1e-6 + 1e-6 * 10.0);
    }

    #[test]
    fn non_psd_p_is_detected() {
        let mut qp = box_qp(vec![1.0, 1.0], vec![0.0, 0.0], vec![-1.0, -1.0], vec![1.0, 1.0]);
        qp.p[(0, 0)] = -1.0;
        assert!(matches!(solve_qp(&qp, 1e-6, 100), Err(PlanError::NonConvex(_))));
        // Asymmetry is also rejected.
        let mut qp2 = box_qp(vec![1.0, 1.0], vec![0.0, 0.0], vec![-1.0, -1.0], vec![1.0, 1.0]);
        qp2.p[(0, 1)] = 0.5;
        assert!(solve_qp(&qp2, 1e-6, 100).is_err());
    }

    #[test]
    fn projected_z_respects_bounds_exactly() {
        let qp = box_qp(vec![1.0, 1.0], vec![-10.0, 10.0], vec![-0.3, -0.3], vec![0.7, 0.7]);
        let sol = solve_qp(&qp, 1e-8, 4000).unwrap();
        for i in 0..2 {
            assert!(sol.z[i] >= qp.l[i] && sol.z[i] <= qp.u[i]);
        }
        assert!((sol.z[0] - 0.7).abs() < 1e-9);
        assert!((sol.z[1] + 0.3).abs() < 1e-9);
    }
}
