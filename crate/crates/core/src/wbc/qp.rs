//! Dense convex QP by the dual active-set method of Goldfarb and Idnani.
//!
//! Solves `min ½ xᵀHx + gᵀx` subject to `A_eq x = b_eq` and `A_in x ≤ b_in`.
//! The method starts from the unconstrained minimizer and adds violated
//! constraints one at a time, so it needs no feasible starting point and
//! detects infeasibility directly. The factorization `J = L⁻ᵀ Q` and the
//! triangular `R` are updated with Givens rotations as constraints enter and
//! leave. A positive semidefinite `H` is handled with proximal-point outer
//! iterations on `H + ρI`.

use nalgebra::{DMatrix, DVector};

use super::WbcError;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        hessian: DMatrix<f64>,
        gradient: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
        a_in: DMatrix<f64>,
        b_in: DVector<f64>,
    ) -> Result<Self, WbcError> {
        let n = gradient.len();
        let dims = [
            ("hessian rows", hessian.nrows(), n),
            ("hessian cols", hessian.ncols(), n),
            ("a_eq cols", a_eq.ncols(), n),
            ("b_eq", b_eq.len(), a_eq.nrows()),
            ("a_in cols", a_in.ncols(), n),
            ("b_in", b_in.len(), a_in.nrows()),
        ];
        for (what, got, expected) in dims {
            if got != expected {
                return Err(WbcError::Qp(format!("{what}: expected {expected}, got {got}")));
            }
        }
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-12 * hessian.amax().max(1.0) {
            return Err(WbcError::Qp(format!("hessian not symmetric (max gap {asym:e})")));
        }
        Ok(Self {
            hessian,
            gradient,
            a_eq,
            b_eq,
            a_in,
            b_in,
        })
    }

    /// Problem with inequalities only.
    pub fn inequality(
        hessian: DMatrix<f64>,
        gradient: DVector<f64>,
        a_in: DMatrix<f64>,
        b_in: DVector<f64>,
    ) -> Result<Self, WbcError> {
        let n = gradient.len();
        Self::new(hessian, gradient, DMatrix::zeros(0, n), DVector::zeros(0), a_in, b_in)
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.gradient.dot(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::MaxIterations => "max_iter",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// `ν` in `Hx + g + A_eqᵀν + A_inᵀμ = 0`.
    pub eq_multipliers: DVector<f64>,
    /// `μ ≥ 0`, zero for inactive rows.
    pub in_multipliers: DVector<f64>,
    /// Active inequality rows, ascending.
    pub active: Vec<usize>,
    /// Max-norm of stationarity, primal, dual and complementarity violations.
    pub kkt_residual: f64,
    pub status: QpStatus,
    pub iterations: usize,
    /// On infeasibility, weights `(y_eq, y_in)` with `y_in ≥ 0`,
    /// `A_eqᵀy_eq + A_inᵀy_in ≈ 0` and `b_eqᵀy_eq + b_inᵀy_in < 0`.
    pub certificate: Option<(DVector<f64>, DVector<f64>)>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Max-norm KKT violation of `(x, ν, μ)` for `problem`.
pub fn kkt_residual(problem: &QpProblem, x: &DVector<f64>, nu: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    let stat = &problem.hessian * x + &problem.gradient + problem.a_eq.transpose() * nu + problem.a_in.transpose() * mu;
    let mut r = stat.amax();
    if !problem.b_eq.is_empty() {
        r = r.max((&problem.a_eq * x - &problem.b_eq).amax());
    }
    let slack = &problem.b_in - &problem.a_in * x;
    for i in 0..slack.len() {
        r = r.max(-slack[i]).max(-mu[i]).max((mu[i] * slack[i]).abs());
    }
    r
}

pub fn solve_qp(problem: &QpProblem, tolerance: f64, max_iterations: usize) -> QpSolution {
    let n = problem.dim();
    let h = &problem.hessian;
    let scale = h.diagonal().amax().max(1.0);
    if let Some(l) = h.clone().cholesky() {
        let diag = l.l_dirty().diagonal();
        if diag.min().powi(2) > 1e-12 * scale {
            return finish(
                problem,
                dual_active_set(problem, &l.l(), &problem.gradient, tolerance, max_iterations),
            );
        }
    }
    // Semidefinite: proximal point on H + ρI.
    let rho = 1e-6 * scale;
    let reg = h + DMatrix::identity(n, n) * rho;
    let l = reg.cholesky().expect("H + ρI is positive definite").l();
    let mut x = DVector::zeros(n);
    let mut total = 0;
    let mut last = None;
    for _ in 0..500 {
        let g = &problem.gradient - &x * rho;
        let raw = dual_active_set(problem, &l, &g, tolerance, max_iterations.saturating_sub(total).max(1));
        total += raw.iterations;
        if raw.status != QpStatus::Optimal {
            return finish(problem, raw);
        }
        let step = (&raw.x - &x).amax();
        x = raw.x.clone();
        last = Some(raw);
        if step < 0.1 * tolerance {
            break;
        }
    }
    let mut raw = last.expect("at least one proximal iteration");
    raw.iterations = total;
    finish(problem, raw)
}

struct Raw {
    x: DVector<f64>,
    nu: DVector<f64>,
    mu: DVector<f64>,
    status: QpStatus,
    iterations: usize,
    certificate: Option<(DVector<f64>, DVector<f64>)>,
}

fn finish(problem: &QpProblem, raw: Raw) -> QpSolution {
    let active: Vec<usize> = (0..raw.mu.len()).filter(|&i| raw.mu[i] > 0.0).collect();
    let kkt = kkt_residual(problem, &raw.x, &raw.nu, &raw.mu);
    QpSolution {
        x: raw.x,
        eq_multipliers: raw.nu,
        in_multipliers: raw.mu,
        active,
        kkt_residual: kkt,
        status: raw.status,
        iterations: raw.iterations,
        certificate: raw.certificate,
    }
}

/// Constraint in the solver's `nᵀx + c ≥ 0` form.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Row {
    Eq(usize),
    In(usize),
}

struct Factor {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    r_norm: f64,
    /// Number of active constraints.
    iq: usize,
}

impl Factor {
    fn d(&self, np: &DVector<f64>) -> DVector<f64> {
        self.j.tr_mul(np)
    }

    fn z(&self, d: &DVector<f64>) -> DVector<f64> {
        let n = self.j.nrows();
        let iq = self.iq;
        self.j.columns(iq, n - iq) * d.rows(iq, n - iq)
    }

    fn r_step(&self, d: &DVector<f64>) -> DVector<f64> {
        let iq = self.iq;
        let mut r = DVector::zeros(iq);
        for i in (0..iq).rev() {
            let mut sum = 0.0;
            for k in i + 1..iq {
                sum += self.r[(i, k)] * r[k];
            }
            r[i] = (d[i] - sum) / self.r[(i, i)];
        }
        r
    }

    /// Append a constraint whose transformed normal is `d`; false when it is
    /// linearly dependent on the active set.
    fn add(&mut self, mut d: DVector<f64>) -> bool {
        let n = self.j.nrows();
        let iq = self.iq;
        if iq >= n {
            return false;
        }
        for j in (iq + 1..n).rev() {
            let (cc, ss) = (d[j - 1], d[j]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[j] = 0.0;
            let (mut cc, mut ss) = (cc / h, ss / h);
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[j - 1] = -h;
            } else {
                d[j - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, j - 1)];
                let t2 = self.j[(k, j)];
                self.j[(k, j - 1)] = t1 * cc + t2 * ss;
                self.j[(k, j)] = xny * (t1 + self.j[(k, j - 1)]) - t2;
            }
        }
        // Rotations act only on the free columns of J, so a rejected row
        // leaves the active factorization valid.
        if d[iq].abs() <= f64::EPSILON * self.r_norm {
            return false;
        }
        for i in 0..=iq {
            self.r[(i, iq)] = d[i];
        }
        self.r_norm = self.r_norm.max(d[iq].abs());
        self.iq += 1;
        true
    }

    /// Remove active position `qq`, shifting later columns left.
    fn remove(&mut self, qq: usize) {
        let n = self.j.nrows();
        let iq = self.iq;
        for i in qq..iq - 1 {
            for k in 0..n.min(self.r.nrows()) {
                self.r[(k, i)] = self.r[(k, i + 1)];
            }
        }
        for k in 0..self.r.nrows() {
            self.r[(k, iq - 1)] = 0.0;
        }
        self.iq -= 1;
        let iq = self.iq;
        for j in qq..iq {
            let (cc, ss) = (self.r[(j, j)], self.r[(j + 1, j)]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            let (mut cc, mut ss) = (cc / h, ss / h);
            self.r[(j + 1, j)] = 0.0;
            if cc < 0.0 {
                self.r[(j, j)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(j, j)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in j + 1..iq {
                let t1 = self.r[(j, k)];
                let t2 = self.r[(j + 1, k)];
                self.r[(j, k)] = t1 * cc + t2 * ss;
                self.r[(j + 1, k)] = xny * (t1 + self.r[(j, k)]) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, j)];
                let t2 = self.j[(k, j + 1)];
                self.j[(k, j)] = t1 * cc + t2 * ss;
                self.j[(k, j + 1)] = xny * (self.j[(k, j)] + t1) - t2;
            }
        }
    }
}

fn dual_active_set(problem: &QpProblem, l: &DMatrix<f64>, g: &DVector<f64>, tol: f64, max_iter: usize) -> Raw {
    let n = problem.dim();
    let p = problem.a_eq.nrows();
    let m = problem.a_in.nrows();
    // Solver form: equality i is a_iᵀx − b_i = 0; inequality i is
    // −a_iᵀx + b_i ≥ 0.
    let normal = |row: Row| -> DVector<f64> {
        match row {
            Row::Eq(i) => problem.a_eq.row(i).transpose(),
            Row::In(i) => -problem.a_in.row(i).transpose(),
        }
    };
    let slack = |row: Row, x: &DVector<f64>| -> f64 {
        match row {
            Row::Eq(i) => problem.a_eq.row(i).dot(&x.transpose()) - problem.b_eq[i],
            Row::In(i) => problem.b_in[i] - problem.a_in.row(i).dot(&x.transpose()),
        }
    };

    let lt = l.transpose();
    let j0 = lt
        .clone()
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .expect("Cholesky factor is nonsingular");
    let mut fac = Factor {
        j: j0,
        r: DMatrix::zeros(n, n),
        r_norm: 1.0,
        iq: 0,
    };
    let llt = nalgebra::Cholesky::pack_dirty(l.clone());
    let mut x = -llt.solve(g);
    let mut active: Vec<Row> = Vec::with_capacity(n);
    // Multipliers of the active set plus one slot for the candidate.
    let mut u: Vec<f64> = Vec::with_capacity(n + 1);
    let mut iterations = 0;

    let fail = |x: DVector<f64>, status: QpStatus, iterations: usize, cert: Option<(DVector<f64>, DVector<f64>)>| Raw {
        x,
        nu: DVector::zeros(p),
        mu: DVector::zeros(m),
        status,
        iterations,
        certificate: cert,
    };

    for i in 0..p {
        let np = normal(Row::Eq(i));
        let d = fac.d(&np);
        let z = fac.z(&d);
        let r = fac.r_step(&d);
        let zn = z.dot(&np);
        if z.norm_squared() <= f64::EPSILON || !fac.add(d) {
            // Dependent on earlier rows: consistent only if already met.
            if slack(Row::Eq(i), &x).abs() > tol * (1.0 + problem.b_eq[i].abs()) {
                return fail(x, QpStatus::Infeasible, iterations, None);
            }
            continue;
        }
        let t2 = -slack(Row::Eq(i), &x) / zn;
        x += &z * t2;
        for (k, uk) in u.iter_mut().enumerate() {
            *uk -= t2 * r[k];
        }
        u.push(t2);
        active.push(Row::Eq(i));
    }

    // Rows excluded after a failed (degenerate) add, reset on each new pass.
    let mut excluded = vec![false; m];
    'outer: loop {
        iterations += 1;
        if iterations > max_iter {
            return fail(x, QpStatus::MaxIterations, iterations - 1, None);
        }
        let is_active = |i: usize, active: &[Row]| active.contains(&Row::In(i));
        // Most violated row, lowest index on ties.
        let mut ip = None;
        let mut worst = -tol;
        for (i, &skip) in excluded.iter().enumerate().take(m) {
            if skip || is_active(i, &active) {
                continue;
            }
            let s = slack(Row::In(i), &x);
            if s < worst {
                worst = s;
                ip = Some(i);
            }
        }
        let Some(ip) = ip else {
            break 'outer;
        };
        let np = normal(Row::In(ip));
        let mut sp = slack(Row::In(ip), &x);
        let mut u_cand = 0.0;
        let saved = (
            x.clone(),
            active.clone(),
            u.clone(),
            fac.j.clone(),
            fac.r.clone(),
            fac.iq,
            fac.r_norm,
        );

        loop {
            let d = fac.d(&np);
            let z = fac.z(&d);
            let r = fac.r_step(&d);
            // Partial step: the first active inequality whose multiplier hits 0.
            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for k in 0..active.len() {
                if let Row::In(_) = active[k] {
                    if r[k] > 0.0 && u[k] / r[k] < t1 {
                        t1 = u[k] / r[k];
                        drop_at = Some(k);
                    }
                }
            }
            let zn = z.dot(&np);
            let t2 = if z.norm_squared() > f64::EPSILON && zn.abs() > 0.0 {
                -sp / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                // n_p is a nonnegative combination of active normals that
                // cannot be met: dual ray.
                let mut y_eq = DVector::zeros(p);
                let mut y_in = DVector::zeros(m);
                y_in[ip] = 1.0;
                for (k, row) in active.iter().enumerate() {
                    match *row {
                        Row::Eq(i) => y_eq[i] = r[k],
                        Row::In(i) => y_in[i] = -r[k],
                    }
                }
                return fail(x, QpStatus::Infeasible, iterations, Some((y_eq, y_in)));
            }
            iterations += 1;
            if iterations > max_iter {
                return fail(x, QpStatus::MaxIterations, iterations - 1, None);
            }
            if t2.is_finite() {
                x += &z * t;
            }
            for (k, uk) in u.iter_mut().enumerate() {
                *uk -= t * r[k];
            }
            u_cand += t;
            if t == t2 {
                if fac.add(d) {
                    active.push(Row::In(ip));
                    u.push(u_cand);
                    excluded.iter_mut().for_each(|e| *e = false);
                    continue 'outer;
                }
                // Numerically dependent: restore and skip this row.
                let (sx, sa, su, sj, sr, siq, srn) = saved;
                x = sx;
                active = sa;
                u = su;
                fac.j = sj;
                fac.r = sr;
                fac.iq = siq;
                fac.r_norm = srn;
                excluded[ip] = true;
                continue 'outer;
            }
            let k = drop_at.expect("partial step has a blocking row");
            active.remove(k);
            u.remove(k);
            fac.remove(k);
            sp = slack(Row::In(ip), &x);
        }
    }

    let mut nu = DVector::zeros(p);
    let mut mu = DVector::zeros(m);
    for (k, row) in active.iter().enumerate() {
        match *row {
            Row::Eq(i) => nu[i] = -u[k],
            Row::In(i) => mu[i] = u[k],
        }
    }
    Raw {
        x,
        nu,
        mu,
        status: QpStatus::Optimal,
        iterations,
        certificate: None,
    }
}
