//! Dense convex QP solver (Goldfarb–Idnani dual active set).
//!
//! Solves `min ½ xᵀ G x + gᵀ x` subject to `C x + c ≥ 0`, with `G` symmetric
//! positive definite. Rows of `C` are the constraint normals.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per constraint row, zero for inactive rows.
    pub multipliers: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpError {
    /// `G` is not positive definite.
    NotConvex,
    /// The constraints admit no solution.
    Infeasible,
    /// Iteration cap reached, usually from cycling on degenerate data.
    IterationLimit,
}

struct Factors {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    r_norm: f64,
}

impl Factors {
    /// Appends the direction `d = Jᵀ n` of a new constraint, restoring the
    /// triangular structure with Givens rotations. Returns false when the
    /// constraint is linearly dependent on the active ones.
    fn add(&mut self, d: &mut DVector<f64>, iq: &mut usize) -> bool {
        let n = d.len();
        for jj in ((*iq + 1)..n).rev() {
            let (mut cc, mut ss) = (d[jj - 1], d[jj]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[jj] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[jj - 1] = -h;
            } else {
                d[jj - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, jj - 1)];
                let t2 = self.j[(k, jj)];
                self.j[(k, jj - 1)] = t1 * cc + t2 * ss;
                self.j[(k, jj)] = xny * (t1 + self.j[(k, jj - 1)]) - t2;
            }
        }
        *iq += 1;
        for i in 0..*iq {
            self.r[(i, *iq - 1)] = d[i];
        }
        let diag = d[*iq - 1].abs();
        if diag <= f64::EPSILON * self.r_norm {
            return false;
        }
        self.r_norm = self.r_norm.max(diag);
        true
    }

    /// Removes active constraint `l` from the working set.
    fn remove(&mut self, active: &mut [usize], u: &mut DVector<f64>, iq: &mut usize, l: usize) {
        let n = self.j.nrows();
        let Some(qq) = active[..*iq].iter().position(|&a| a == l) else { return };
        for i in qq..*iq - 1 {
            active[i] = active[i + 1];
            u[i] = u[i + 1];
            for k in 0..n {
                self.r[(k, i)] = self.r[(k, i + 1)];
            }
        }
        active[*iq - 1] = active[*iq];
        u[*iq - 1] = u[*iq];
        active[*iq] = 0;
        u[*iq] = 0.0;
        for k in 0..*iq {
            self.r[(k, *iq - 1)] = 0.0;
        }
        *iq -= 1;
        if *iq == 0 {
            return;
        }
        for jj in qq..*iq {
            let (mut cc, mut ss) = (self.r[(jj, jj)], self.r[(jj + 1, jj)]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(jj + 1, jj)] = 0.0;
            if cc < 0.0 {
                self.r[(jj, jj)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(jj, jj)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in (jj + 1)..*iq {
                let t1 = self.r[(jj, k)];
                let t2 = self.r[(jj + 1, k)];
                self.r[(jj, k)] = t1 * cc + t2 * ss;
                self.r[(jj + 1, k)] = xny * (t1 + self.r[(jj, k)]) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, jj)];
                let t2 = self.j[(k, jj + 1)];
                self.j[(k, jj)] = t1 * cc + t2 * ss;
                self.j[(k, jj + 1)] = xny * (self.j[(k, jj)] + t1) - t2;
            }
        }
    }
}

/// Solves the QP. `c_mat` is `m × n`, `c_vec` has length `m`.
pub fn solve_qp(g_mat: &DMatrix<f64>, g_vec: &DVector<f64>, c_mat: &DMatrix<f64>, c_vec: &DVector<f64>) -> Result<QpSolution, QpError> {
    let n = g_vec.len();
    let m = c_vec.len();
    assert_eq!(g_mat.shape(), (n, n));
    assert_eq!(c_mat.shape(), (m, n));

    let chol = g_mat.clone().cholesky().ok_or(QpError::NotConvex)?;
    let l_inv_t = chol
        .l()
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotConvex)?;
    let mut f = Factors { j: l_inv_t, r: DMatrix::zeros(n, n), r_norm: 1.0 };

    let mut x = -chol.solve(g_vec);
    let mut objective = 0.5 * g_vec.dot(&x);

    let mut active = vec![0usize; n + 1];
    let mut u = DVector::zeros(n + 1);
    let mut iq = 0usize;
    let mut is_active = vec![false; m];
    let mut excluded = vec![false; m];

    let row = |i: usize| c_mat.row(i).transpose();
    let slack = |x: &DVector<f64>, i: usize| c_mat.row(i).dot(&x.transpose()) + c_vec[i];
    let scale = 1.0 + c_vec.amax() + c_mat.amax();
    let tol = 1e-12 * scale;
    let max_iter = 50 * (m + n) + 100;
    let mut iterations = 0;

    loop {
        iterations += 1;
        if iterations > max_iter {
            return Err(QpError::IterationLimit);
        }
        let active_old: Vec<usize> = active[..iq].to_vec();
        let u_old: Vec<f64> = u.as_slice()[..iq].to_vec();
        let x_old = x.clone();

        // Most violated inactive constraint.
        let mut ip = None;
        let mut worst = -tol;
        for i in 0..m {
            if is_active[i] || excluded[i] {
                continue;
            }
            let s = slack(&x, i);
            if s < worst {
                worst = s;
                ip = Some(i);
            }
        }
        let Some(ip) = ip else {
            let mut multipliers = DVector::zeros(m);
            for k in 0..iq {
                multipliers[active[k]] = u[k];
            }
            return Ok(QpSolution { x, multipliers, objective, iterations });
        };

        let np = row(ip);
        u[iq] = 0.0;
        active[iq] = ip;
        let mut s_p = worst;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit);
            }
            let mut d = f.j.transpose() * &np;
            let z = f.j.columns(iq, n - iq) * d.rows(iq, n - iq);
            let r = if iq > 0 {
                f.r.view((0, 0), (iq, iq))
                    .into_owned()
                    .solve_upper_triangular(&d.rows(0, iq).into_owned())
                    .unwrap_or_else(|| DVector::zeros(iq))
            } else {
                DVector::zeros(0)
            };

            // Partial step: largest dual step keeping multipliers nonnegative.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for k in 0..iq {
                if r[k] > 0.0 && u[k] / r[k] < t1 {
                    t1 = u[k] / r[k];
                    drop = Some(active[k]);
                }
            }
            // Full step: makes the new constraint active.
            let zn = z.dot(&np);
            let t2 = if z.norm_squared() > f64::EPSILON * f64::EPSILON * scale && zn.abs() > 0.0 {
                -s_p / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }

            if !t2.is_finite() {
                for k in 0..iq {
                    u[k] -= t * r[k];
                }
                u[iq] += t;
                let l = drop.expect("finite partial step has a blocking constraint");
                is_active[l] = false;
                f.remove(&mut active, &mut u, &mut iq, l);
                continue;
            }

            x += &z * t;
            objective += t * zn * (0.5 * t + u[iq]);
            for k in 0..iq {
                u[k] -= t * r[k];
            }
            u[iq] += t;

            if t == t2 {
                if f.add(&mut d, &mut iq) {
                    is_active[ip] = true;
                } else {
                    // Dependent constraint: roll back and never pick it again.
                    excluded[ip] = true;
                    f.remove(&mut active, &mut u, &mut iq, ip);
                    is_active.iter_mut().for_each(|a| *a = false);
                    for (k, &a) in active_old.iter().enumerate() {
                        active[k] = a;
                        is_active[a] = true;
                        u[k] = u_old[k];
                    }
                    x = x_old;
                }
                break;
            }

            let l = drop.expect("partial step has a blocking constraint");
            is_active[l] = false;
            f.remove(&mut active, &mut u, &mut iq, l);
            s_p = slack(&x, ip);
        }
    }
}
