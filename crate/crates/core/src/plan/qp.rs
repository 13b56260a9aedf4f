use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x2};

use super::field::CollisionLin;
use super::ocp::{ControlVec, OcpSpec, State};
use super::PlanError;

/// Dense QP in operator-splitting form: minimize `0.5 zᵀPz + qᵀz` subject to
/// `l ≤ Az ≤ u` (equality rows have `l = u`).
#[derive(Clone, Debug)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

impl QpProblem {
    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.l.len()
    }

    /// Symmetry and positive-semidefiniteness check (the latter via a ridged
    /// Cholesky factorization).
    pub fn validate(&self) -> Result<(), PlanError> {
        let n = self.num_vars();
        if self.p.nrows() != n
            || self.p.ncols() != n
            || self.a.ncols() != n
            || self.a.nrows() != self.num_constraints()
            || self.u.len() != self.num_constraints()
        {
            return Err(PlanError::Dimension(format!(
                "P {}x{}, q {}, A {}x{}, bounds {}/{}",
                self.p.nrows(),
                self.p.ncols(),
                n,
                self.a.nrows(),
                self.a.ncols(),
                self.l.len(),
                self.u.len()
            )));
        }
        let sym_err = (&self.p - self.p.transpose()).abs().max();
        if sym_err > 1e-9 {
            return Err(PlanError::Dimension(format!(
                "P is not symmetric (max asymmetry {sym_err})"
            )));
        }
        let scale = self.p.diagonal().abs().max().max(1.0);
        let ridge = 1e-9 * scale;
        let mut ridged = self.p.clone();
        for i in 0..n {
            ridged[(i, i)] += ridge;
        }
        if ridged.cholesky().is_none() {
            return Err(PlanError::NonConvex(ridge));
        }
        Ok(())
    }
}

/// Variable layout of an assembled trajectory QP.
///
/// `z = [Δx_1..Δx_{T+1} | Δu_0..Δu_T | s_1..s_{T+1}]`; the initial state is
/// fixed so it carries no decision variables, and slack variables exist only
/// when collision linearizations are supplied with a positive penalty
/// weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QpLayout {
    pub horizon: usize,
    pub has_slacks: bool,
}

impl QpLayout {
    pub fn nx(&self) -> usize {
        3 * (self.horizon + 1)
    }

    pub fn nu(&self) -> usize {
        2 * (self.horizon + 1)
    }

    pub fn ns(&self) -> usize {
        if self.has_slacks {
            self.horizon + 1
        } else {
            0
        }
    }

    pub fn num_vars(&self) -> usize {
        self.nx() + self.nu() + self.ns()
    }

    /// Offset of `Δx_t` for `t` in `1..=T+1`.
    pub fn ix(&self, t: usize) -> usize {
        3 * (t - 1)
    }

    /// Offset of `Δu_t` for `t` in `0..=T`.
    pub fn iu(&self, t: usize) -> usize {
        self.nx() + 2 * t
    }

    /// Offset of the slack for state `t` in `1..=T+1`.
    pub fn is(&self, t: usize) -> usize {
        self.nx() + self.nu() + (t - 1)
    }

    /// Extracts `(Δx, Δu, s)` blocks from a solution vector.
    pub fn split(&self, z: &DVector<f64>) -> (Vec<State>, Vec<ControlVec>, Vec<f64>) {
        let t_max = self.horizon + 1;
        let mut dx = Vec::with_capacity(t_max);
        for t in 1..=t_max {
            let o = self.ix(t);
            dx.push(State::new(z[o], z[o + 1], z[o + 2]));
        }
        let mut du = Vec::with_capacity(self.horizon + 1);
        for t in 0..=self.horizon {
            let o = self.iu(t);
            du.push(ControlVec::new(z[o], z[o + 1]));
        }
        let mut s = Vec::new();
        if self.has_slacks {
            for t in 1..=t_max {
                s.push(z[self.is(t)]);
            }
        }
        (dx, du, s)
    }
}

/// Builds the convexified trajectory QP around `(states, controls)`.
///
/// Quadratic terms expand the convex costs at the shifted point; the
/// collision penalty enters as linearized hinge rows `s_t ≥ -(d̄_t + ḡᵀΔx_t)`,
/// `s_t ≥ 0` with objective weight `w4`, and the trust region adds
/// `ρ_x‖Δx‖² + ρ_u‖Δu‖²`. `Δ = 0` is always feasible.
pub fn assemble_qp(
    spec: &OcpSpec,
    states: &[State],
    controls: &[ControlVec],
    dynamics: &[(Matrix3<f64>, Matrix3x2<f64>)],
    collisions: Option<&[CollisionLin]>,
    rho_x: f64,
    rho_u: f64,
) -> Result<(QpProblem, QpLayout), PlanError> {
    let t_h = spec.horizon;
    if states.len() != t_h + 2 || controls.len() != t_h + 1 || dynamics.len() != t_h + 1 {
        return Err(PlanError::Dimension(format!(
            "horizon {t_h} with {} states, {} controls, {} linearizations",
            states.len(),
            controls.len(),
            dynamics.len()
        )));
    }
    let collisions = match collisions {
        Some(c) if spec.weights[3] > 0.0 => {
            if c.len() != t_h + 1 {
                return Err(PlanError::Dimension(format!(
                    "expected {} collision linearizations, got {}",
                    t_h + 1,
                    c.len()
                )));
            }
            Some(c)
        }
        _ => None,
    };
    let layout = QpLayout {
        horizon: t_h,
        has_slacks: collisions.is_some(),
    };
    let n = layout.num_vars();
    let m = 3 * (t_h + 1) + 2 * (t_h + 1) + 2 * layout.ns();

    let mut p = DMatrix::zeros(n, n);
    let mut q = DVector::zeros(n);
    let mut a = DMatrix::zeros(m, n);
    let mut l = DVector::from_element(m, f64::NEG_INFINITY);
    let mut u = DVector::from_element(m, f64::INFINITY);

    let [w1, w2, w3, w4] = spec.weights;

    // Goal tracking and the state trust region.
    for t in 1..=t_h + 1 {
        let o = layout.ix(t);
        let e = spec.goal_error(&states[t]);
        for i in 0..3 {
            p[(o + i, o + i)] += 2.0 * (w1 * spec.q[i] + rho_x);
            q[o + i] += 2.0 * w1 * spec.q[i] * e[i];
        }
    }
    // Control energy, slew coupling, and the control trust region.
    for t in 0..=t_h {
        let o = layout.iu(t);
        for i in 0..2 {
            p[(o + i, o + i)] += 2.0 * (w2 * spec.r[i] + rho_u);
            q[o + i] += 2.0 * w2 * spec.r[i] * controls[t][i];
        }
    }
    for t in 1..=t_h {
        let (oa, ob) = (layout.iu(t - 1), layout.iu(t));
        let diff = controls[t] - controls[t - 1];
        for i in 0..2 {
            p[(oa + i, oa + i)] += 2.0 * w3;
            p[(ob + i, ob + i)] += 2.0 * w3;
            p[(oa + i, ob + i)] -= 2.0 * w3;
            p[(ob + i, oa + i)] -= 2.0 * w3;
            q[ob + i] += 2.0 * w3 * diff[i];
            q[oa + i] -= 2.0 * w3 * diff[i];
        }
    }
    if let Some(coll) = collisions {
        for t in 1..=t_h + 1 {
            q[layout.is(t)] += w4;
        }
        let _ = coll;
    }

    // Linearized dynamics equalities.
    let mut row = 0;
    for t in 0..=t_h {
        let (a_t, b_t) = &dynamics[t];
        let o_next = layout.ix(t + 1);
        for i in 0..3 {
            a[(row + i, o_next + i)] = 1.0;
            l[row + i] = 0.0;
            u[row + i] = 0.0;
        }
        if t >= 1 {
            let o_cur = layout.ix(t);
            for i in 0..3 {
                for j in 0..3 {
                    a[(row + i, o_cur + j)] = -a_t[(i, j)];
                }
            }
        }
        let o_u = layout.iu(t);
        for i in 0..3 {
            for j in 0..2 {
                a[(row + i, o_u + j)] = -b_t[(i, j)];
            }
        }
        row += 3;
    }
    // Control box on the shifted controls.
    for t in 0..=t_h {
        let o = layout.iu(t);
        for i in 0..2 {
            a[(row, o + i)] = 1.0;
            l[row] = spec.u_min[i] - controls[t][i];
            u[row] = spec.u_max[i] - controls[t][i];
            row += 1;
        }
    }
    // Slack nonnegativity and hinge rows.
    if let Some(coll) = collisions {
        for t in 1..=t_h + 1 {
            a[(row, layout.is(t))] = 1.0;
            l[row] = 0.0;
            row += 1;
        }
        for t in 1..=t_h + 1 {
            let lin = &coll[t - 1];
            let ox = layout.ix(t);
            a[(row, layout.is(t))] = 1.0;
            for j in 0..3 {
                a[(row, ox + j)] = lin.grad[j];
            }
            l[row] = -lin.distance;
            row += 1;
        }
    }
    debug_assert_eq!(row, m);

    Ok((QpProblem { p, q, a, l, u }, layout))
}
