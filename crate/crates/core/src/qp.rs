//! Dense convex quadratic programming.
//!
//! ```text
//! minimize    1/2 x^T Q x + c^T x
//! subject to  A x  = b      : y
//!             G x <= h      : z >= 0
//! ```
//!
//! with `Q` positive semidefinite. Multipliers follow the Lagrangian
//! `f + y^T (A x - b) + z^T (G x - h)`, so stationarity reads
//! `Q x + c + A^T y + G^T z = 0` and the sensitivity of the optimal value to
//! `b_k` is `-y_k`.
//!
//! The solver is a Mehrotra predictor-corrector interior-point method on the
//! reduced KKT system. A converged iterate is then polished: the constraints
//! with `s_i < z_i` are taken as the active set and the equality-constrained
//! KKT system is solved directly, which recovers vertex-exact primal values
//! and multipliers whenever the guess is consistent. When the interior-point
//! method stalls, an elastic phase-one LP decides between infeasibility and a
//! numerical failure.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

/// Sparse linear row `sum_k coef_k x_{idx_k}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinRow(pub Vec<(usize, f64)>);

impl LinRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(j, v)| v * x[j]).sum()
    }
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub n: usize,
    pub q: DMatrix<f64>,
    pub c: Vec<f64>,
    pub eq: Vec<LinRow>,
    pub b: Vec<f64>,
    pub ineq: Vec<LinRow>,
    pub h: Vec<f64>,
}

impl QpProblem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            q: DMatrix::zeros(n, n),
            c: vec![0.0; n],
            eq: Vec::new(),
            b: Vec::new(),
            ineq: Vec::new(),
            h: Vec::new(),
        }
    }

    pub fn add_eq(&mut self, row: LinRow, rhs: f64) -> usize {
        self.eq.push(row);
        self.b.push(rhs);
        self.eq.len() - 1
    }

    pub fn add_le(&mut self, row: LinRow, rhs: f64) -> usize {
        self.ineq.push(row);
        self.h.push(rhs);
        self.ineq.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        0.5 * xv.dot(&(&self.q * &xv)) + self.c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    fn check(&self) -> Result<()> {
        let bad_idx = |rows: &[LinRow]| rows.iter().flat_map(|r| &r.0).any(|&(j, _)| j >= self.n);
        if self.q.nrows() != self.n
            || self.q.ncols() != self.n
            || self.c.len() != self.n
            || self.eq.len() != self.b.len()
            || self.ineq.len() != self.h.len()
            || bad_idx(&self.eq)
            || bad_idx(&self.ineq)
        {
            return Err(Error::Usage("inconsistent QP dimensions".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QpSettings {
    pub max_iter: usize,
    /// Relative tolerance on residuals and complementarity.
    pub tol: f64,
    /// Polish the interior-point solution on its guessed active set.
    pub polish: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            max_iter: 80,
            tol: 1e-10,
            polish: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Inequality multipliers, `>= 0`.
    pub z: Vec<f64>,
    /// Inequality slacks `h - G x`.
    pub s: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub polished: bool,
}

impl QpSolution {
    /// Indices of inequalities whose slack is below `tol`.
    pub fn active_set(&self, tol: f64) -> Vec<usize> {
        self.s
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= tol)
            .map(|(i, _)| i)
            .collect()
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Residuals {
    rd: Vec<f64>,
    re: Vec<f64>,
    ri: Vec<f64>,
}

fn residuals(p: &QpProblem, x: &[f64], y: &[f64], z: &[f64], s: &[f64]) -> Residuals {
    let xv = DVector::from_column_slice(x);
    let qx = &p.q * &xv;
    let mut rd: Vec<f64> = (0..p.n).map(|j| qx[j] + p.c[j]).collect();
    for (row, &yk) in p.eq.iter().zip(y) {
        for &(j, v) in &row.0 {
            rd[j] += v * yk;
        }
    }
    for (row, &zk) in p.ineq.iter().zip(z) {
        for &(j, v) in &row.0 {
            rd[j] += v * zk;
        }
    }
    let re = p.eq.iter().zip(&p.b).map(|(r, b)| r.dot(x) - b).collect();
    let ri = p
        .ineq
        .iter()
        .zip(&p.h)
        .zip(s)
        .map(|((r, h), s)| r.dot(x) + s - h)
        .collect();
    Residuals { rd, re, ri }
}

/// Solve `K v = rhs` with one round of iterative refinement against `exact`.
fn solve_refined(
    lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    exact: &DMatrix<f64>,
    rhs: &DVector<f64>,
    rounds: usize,
) -> Option<DVector<f64>> {
    let mut v = lu.solve(rhs)?;
    for _ in 0..rounds {
        let r = rhs - exact * &v;
        let dv = lu.solve(&r)?;
        v += dv;
    }
    if v.iter().all(|t| t.is_finite()) {
        Some(v)
    } else {
        None
    }
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&a, &d)| -a / d)
        .fold(1.0, f64::min)
}

enum IpmOutcome {
    Converged(QpSolution),
    Stalled,
}

/// Solve a convex QP. Returns [`Error::Infeasible`] when the constraints
/// admit no point, [`Error::Numerical`] when the method fails otherwise.
pub fn solve(p: &QpProblem, settings: &QpSettings) -> Result<QpSolution> {
    p.check()?;
    match interior_point(p, settings) {
        IpmOutcome::Converged(mut sol) => {
            if settings.polish && !p.ineq.is_empty() {
                if let Some(polished) = polish(p, &sol, settings.tol) {
                    sol = polished;
                }
            }
            Ok(sol)
        }
        IpmOutcome::Stalled => {
            let violation = phase_one(p)?;
            let scale = 1.0 + norm_inf(&p.b).max(norm_inf(&p.h));
            if violation > 1e-7 * scale {
                Err(Error::Infeasible(format!(
                    "constraints violated by at least {violation:.3e}"
                )))
            } else {
                Err(Error::Numerical(
                    "interior-point method stalled on a feasible problem".into(),
                ))
            }
        }
    }
}

/// Scaled KKT residual below which a stalled iterate is still accepted.
const NEAR_CONVERGED: f64 = 1e-7;

fn interior_point(p: &QpProblem, settings: &QpSettings) -> IpmOutcome {
    let n = p.n;
    let me = p.eq.len();
    let mi = p.ineq.len();
    let dim = n + me;
    const REG: f64 = 1e-11;

    let build_kkt = |w: &[f64]| -> DMatrix<f64> {
        let mut k = DMatrix::zeros(dim, dim);
        k.view_mut((0, 0), (n, n)).copy_from(&p.q);
        for (row, &wi) in p.ineq.iter().zip(w) {
            for &(a, va) in &row.0 {
                for &(b, vb) in &row.0 {
                    k[(a, b)] += wi * va * vb;
                }
            }
        }
        for (r, row) in p.eq.iter().enumerate() {
            for &(j, v) in &row.0 {
                k[(n + r, j)] += v;
                k[(j, n + r)] += v;
            }
        }
        k
    };
    let regularize = |mut k: DMatrix<f64>, reg: f64| {
        for j in 0..n {
            k[(j, j)] += reg;
        }
        for r in 0..me {
            k[(n + r, n + r)] -= reg;
        }
        k
    };
    // Escalate the static regularization until the factorization is usable.
    let factorize = |k: &DMatrix<f64>| -> Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
        let scale = (0..dim).fold(1.0f64, |m, j| m.max(k[(j, j)].abs()));
        let mut reg = REG;
        for _ in 0..6 {
            let lu = LU::new(regularize(k.clone(), reg));
            if lu.is_invertible() && lu.u().diagonal().iter().all(|d| d.is_finite()) {
                return Some(lu);
            }
            reg = (reg * 1e3).max(REG * scale);
        }
        None
    };

    // Initial point: least-squares fit to the constraints with unit weights.
    let k0 = build_kkt(&vec![1.0; mi]);
    let mut rhs0 = DVector::zeros(dim);
    for j in 0..n {
        rhs0[j] = -p.c[j];
    }
    for (row, &h) in p.ineq.iter().zip(&p.h) {
        for &(j, v) in &row.0 {
            rhs0[j] += v * h;
        }
    }
    for r in 0..me {
        rhs0[n + r] = p.b[r];
    }
    let Some(v0) = factorize(&k0).and_then(|lu0| solve_refined(&lu0, &k0, &rhs0, 2)) else {
        return IpmOutcome::Stalled;
    };
    let mut x: Vec<f64> = v0.rows(0, n).iter().copied().collect();
    let mut y: Vec<f64> = vec![0.0; me];
    let mut s: Vec<f64> = p
        .ineq
        .iter()
        .zip(&p.h)
        .map(|(r, h)| h - r.dot(&x))
        .collect();
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    if smin < 1.0 {
        let shift = 1.0 - smin.min(0.0);
        s.iter_mut().for_each(|v| *v += shift);
    }
    let mut z: Vec<f64> = vec![1.0; mi];

    let scale_p = 1.0 + norm_inf(&p.b).max(norm_inf(&p.h));
    let scale_d = 1.0 + norm_inf(&p.c);

    let mut best: Option<(f64, QpSolution)> = None;
    for iter in 0..settings.max_iter {
        let res = residuals(p, &x, &y, &z, &s);
        let gap: f64 = s.iter().zip(&z).map(|(a, b)| a * b).sum();
        let pobj = p.objective(&x);
        let pres = norm_inf(&res.re).max(norm_inf(&res.ri));
        let dres = norm_inf(&res.rd);
        let merit = (pres / scale_p)
            .max(dres / scale_d)
            .max(gap / (1.0 + pobj.abs()));
        if best
            .as_ref()
            .is_none_or(|b: &(f64, QpSolution)| merit < b.0)
        {
            best = Some((
                merit,
                QpSolution {
                    objective: pobj,
                    x: x.clone(),
                    y: y.clone(),
                    z: z.clone(),
                    s: s.clone(),
                    iterations: iter,
                    polished: false,
                },
            ));
        }
        if pres <= settings.tol * scale_p
            && dres <= settings.tol * scale_d
            && gap <= settings.tol * (1.0 + pobj.abs())
        {
            return IpmOutcome::Converged(QpSolution {
                objective: pobj,
                x,
                y,
                z,
                s,
                iterations: iter,
                polished: false,
            });
        }
        let big = norm_inf(&x).max(norm_inf(&y)).max(norm_inf(&z));
        if !big.is_finite() || big > 1e13 {
            break;
        }

        let w: Vec<f64> = z.iter().zip(&s).map(|(z, s)| z / s).collect();
        let k = build_kkt(&w);
        let Some(lu) = factorize(&k) else {
            break;
        };

        // Solves [Q A' G'; A 0 0; G 0 -S/Z] (dx, dy, dz) = (a, b, c) through the
        // reduced factorization.
        let solve_full =
            |a: &[f64], b: &[f64], c: &[f64]| -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
                let mut rhs = DVector::zeros(dim);
                for j in 0..n {
                    rhs[j] = a[j];
                }
                for (i, row) in p.ineq.iter().enumerate() {
                    for &(j, v) in &row.0 {
                        rhs[j] += v * w[i] * c[i];
                    }
                }
                for r in 0..me {
                    rhs[n + r] = b[r];
                }
                let v = lu.solve(&rhs)?;
                let dx: Vec<f64> = v.rows(0, n).iter().copied().collect();
                let dy: Vec<f64> = v.rows(n, me).iter().copied().collect();
                let dz: Vec<f64> = p
                    .ineq
                    .iter()
                    .enumerate()
                    .map(|(i, row)| w[i] * (row.dot(&dx) - c[i]))
                    .collect();
                Some((dx, dy, dz))
            };

        // Newton direction for complementarity target `rc`, refined against
        // the unreduced system.
        let newton = |rc: &[f64]| -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
            let a: Vec<f64> = res.rd.iter().map(|v| -v).collect();
            let b: Vec<f64> = res.re.iter().map(|v| -v).collect();
            let c: Vec<f64> = (0..mi).map(|i| -res.ri[i] + rc[i] / z[i]).collect();
            let (mut dx, mut dy, mut dz) = solve_full(&a, &b, &c)?;
            for _ in 0..3 {
                let qdx = &p.q * DVector::from_column_slice(&dx);
                let mut ra: Vec<f64> = (0..n).map(|j| a[j] - qdx[j]).collect();
                for (row, &v) in p.eq.iter().zip(&dy) {
                    for &(j, coef) in &row.0 {
                        ra[j] -= coef * v;
                    }
                }
                for (row, &v) in p.ineq.iter().zip(&dz) {
                    for &(j, coef) in &row.0 {
                        ra[j] -= coef * v;
                    }
                }
                let rb: Vec<f64> =
                    p.eq.iter()
                        .zip(&b)
                        .map(|(row, &bv)| bv - row.dot(&dx))
                        .collect();
                let rcc: Vec<f64> = (0..mi)
                    .map(|i| c[i] - p.ineq[i].dot(&dx) + s[i] / z[i] * dz[i])
                    .collect();
                let (ex, ey, ez) = solve_full(&ra, &rb, &rcc)?;
                dx.iter_mut().zip(&ex).for_each(|(u, e)| *u += e);
                dy.iter_mut().zip(&ey).for_each(|(u, e)| *u += e);
                dz.iter_mut().zip(&ez).for_each(|(u, e)| *u += e);
            }
            let ds: Vec<f64> = (0..mi).map(|i| -res.ri[i] - p.ineq[i].dot(&dx)).collect();
            let all = dx.iter().chain(&dy).chain(&dz);
            if !all.clone().all(|v| v.is_finite()) {
                return None;
            }
            Some((dx, dy, ds, dz))
        };

        if mi == 0 {
            let Some((dx, dy, _, _)) = newton(&[]) else {
                break;
            };
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            y.iter_mut().zip(&dy).for_each(|(a, d)| *a += d);
            continue;
        }

        let mu = gap / mi as f64;
        let rc_aff: Vec<f64> = s.iter().zip(&z).map(|(a, b)| a * b).collect();
        let Some((_, _, ds_a, dz_a)) = newton(&rc_aff) else {
            break;
        };
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff: f64 = (0..mi)
            .map(|i| (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]))
            .sum::<f64>()
            / mi as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc: Vec<f64> = (0..mi)
            .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
            .collect();
        let Some((mut dx, mut dy, mut ds, mut dz)) = newton(&rc) else {
            break;
        };
        let mut alpha = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        if alpha < 0.1 {
            // Short corrector step: fall back to a plain centering direction.
            let rc: Vec<f64> = (0..mi).map(|i| s[i] * z[i] - 0.5 * mu).collect();
            let Some(step) = newton(&rc) else {
                break;
            };
            let a = (0.99 * max_step(&s, &step.2).min(max_step(&z, &step.3))).min(1.0);
            if a > alpha {
                (dx, dy, ds, dz) = step;
                alpha = a;
            }
        }
        if alpha < 1e-12 {
            break;
        }
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += alpha * d);
        y.iter_mut().zip(&dy).for_each(|(a, d)| *a += alpha * d);
        s.iter_mut().zip(&ds).for_each(|(a, d)| *a += alpha * d);
        z.iter_mut().zip(&dz).for_each(|(a, d)| *a += alpha * d);
        // Keep strictly interior against rounding.
        s.iter_mut().for_each(|v| *v = v.max(1e-300));
        z.iter_mut().for_each(|v| *v = v.max(1e-300));
    }
    // Degenerate problems can stall just short of the tolerance once the
    // reduced system loses accuracy; a nearly converged iterate is still
    // useful (the caller polishes it).
    match best {
        Some((merit, sol)) if merit <= NEAR_CONVERGED => IpmOutcome::Converged(sol),
        _ => IpmOutcome::Stalled,
    }
}

/// Re-solve on the active set guessed from the interior-point iterate.
fn polish(p: &QpProblem, sol: &QpSolution, tol: f64) -> Option<QpSolution> {
    let n = p.n;
    let me = p.eq.len();
    let active: Vec<usize> = (0..p.ineq.len()).filter(|&i| sol.s[i] < sol.z[i]).collect();
    let na = active.len();
    let dim = n + me + na;
    let mut k = DMatrix::zeros(dim, dim);
    k.view_mut((0, 0), (n, n)).copy_from(&p.q);
    let mut rhs = DVector::zeros(dim);
    for j in 0..n {
        rhs[j] = -p.c[j];
    }
    let rows =
        p.eq.iter()
            .zip(&p.b)
            .chain(active.iter().map(|&i| (&p.ineq[i], &p.h[i])));
    for (r, (row, &rv)) in rows.enumerate() {
        for &(j, v) in &row.0 {
            k[(n + r, j)] += v;
            k[(j, n + r)] += v;
        }
        rhs[n + r] = rv;
    }
    const DELTA: f64 = 1e-9;
    let mut kreg = k.clone();
    for j in 0..n {
        kreg[(j, j)] += DELTA;
    }
    for r in n..dim {
        kreg[(r, r)] -= DELTA;
    }
    let lu = LU::new(kreg);
    let v = solve_refined(&lu, &k, &rhs, 25)?;

    let x: Vec<f64> = v.rows(0, n).iter().copied().collect();
    let y: Vec<f64> = v.rows(n, me).iter().copied().collect();
    let mut z = vec![0.0; p.ineq.len()];
    for (t, &i) in active.iter().enumerate() {
        z[i] = v[n + me + t];
    }

    let scale_p = 1.0 + norm_inf(&p.b).max(norm_inf(&p.h));
    let scale_d = 1.0 + norm_inf(&p.c).max(norm_inf(&sol.z)).max(norm_inf(&sol.y));
    let s: Vec<f64> = p
        .ineq
        .iter()
        .zip(&p.h)
        .map(|(r, h)| h - r.dot(&x))
        .collect();
    if s.iter().any(|&si| si < -1e-9 * scale_p) || z.iter().any(|&zi| zi < -1e-9 * scale_d) {
        return None;
    }
    let z: Vec<f64> = z.into_iter().map(|v| v.max(0.0)).collect();
    let s: Vec<f64> = s.into_iter().map(|v| v.max(0.0)).collect();
    let res = residuals(p, &x, &y, &z, &s);
    if norm_inf(&res.rd) > 1e-8 * scale_d || norm_inf(&res.re) > 1e-9 * scale_p {
        return None;
    }
    let objective = p.objective(&x);
    if objective > sol.objective + tol.max(1e-12) * (1.0 + sol.objective.abs()) * 10.0 {
        return None;
    }
    Some(QpSolution {
        x,
        y,
        z,
        s,
        objective,
        iterations: sol.iterations,
        polished: true,
    })
}

/// Minimum total constraint violation, via an elastic LP.
fn phase_one(p: &QpProblem) -> Result<f64> {
    let n = p.n;
    let me = p.eq.len();
    let mi = p.ineq.len();
    let nv = n + 2 * me + mi;
    let mut lp = QpProblem::new(nv);
    for j in n..nv {
        lp.c[j] = 1.0;
        lp.add_le(LinRow(vec![(j, -1.0)]), 0.0);
    }
    for (r, (row, &b)) in p.eq.iter().zip(&p.b).enumerate() {
        let mut coefs = row.0.clone();
        coefs.push((n + r, 1.0));
        coefs.push((n + me + r, -1.0));
        lp.add_eq(LinRow(coefs), b);
    }
    for (i, (row, &h)) in p.ineq.iter().zip(&p.h).enumerate() {
        let mut coefs = row.0.clone();
        coefs.push((n + 2 * me + i, -1.0));
        lp.add_le(LinRow(coefs), h);
    }
    // Tiny proximal term keeps otherwise-free original variables bounded.
    for j in 0..n {
        lp.q[(j, j)] = 1e-10;
    }
    let settings = QpSettings {
        max_iter: 120,
        tol: 1e-9,
        polish: false,
    };
    match interior_point(&lp, &settings) {
        IpmOutcome::Converged(sol) => Ok(sol.x[n..].iter().sum()),
        IpmOutcome::Stalled => Err(Error::Numerical(
            "phase-one feasibility problem did not converge".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(c: &[(usize, f64)]) -> LinRow {
        LinRow(c.to_vec())
    }

    #[test]
    fn unconstrained_quadratic() {
        let mut p = QpProblem::new(2);
        p.q[(0, 0)] = 2.0;
        p.q[(1, 1)] = 4.0;
        p.c = vec![-2.0, -8.0];
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn equality_dual_is_marginal_cost() {
        // min 0.01 p^2 + 10 p  s.t. p = 100  => y = -(2*0.01*100 + 10)
        let mut p = QpProblem::new(1);
        p.q[(0, 0)] = 0.02;
        p.c = vec![10.0];
        p.add_eq(row(&[(0, 1.0)]), 100.0);
        p.add_le(row(&[(0, 1.0)]), 200.0);
        p.add_le(row(&[(0, -1.0)]), 0.0);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert!((sol.x[0] - 100.0).abs() < 1e-9);
        assert!((-sol.y[0] - 12.0).abs() < 1e-9);
        assert!((sol.objective - 1100.0).abs() < 1e-7);
    }

    #[test]
    fn active_bound_gets_multiplier() {
        // min (x-3)^2 s.t. x <= 1  => x = 1, z = 4
        let mut p = QpProblem::new(1);
        p.q[(0, 0)] = 2.0;
        p.c = vec![-6.0];
        p.add_le(row(&[(0, 1.0)]), 1.0);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert!(sol.polished);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.z[0] - 4.0).abs() < 1e-10);
        assert_eq!(sol.active_set(1e-9), vec![0]);
    }

    #[test]
    fn degenerate_lp_vertex() {
        // min -x - y  s.t. x + y <= 1, x <= 1, y <= 0, x,y >= 0 (degenerate at (1,0))
        let mut p = QpProblem::new(2);
        p.c = vec![-1.0, -2.0];
        p.add_le(row(&[(0, 1.0), (1, 1.0)]), 1.0);
        p.add_le(row(&[(0, 1.0)]), 1.0);
        p.add_le(row(&[(1, 1.0)]), 0.0);
        p.add_le(row(&[(0, -1.0)]), 0.0);
        p.add_le(row(&[(1, -1.0)]), 0.0);
        let sol = solve(&p, &QpSettings::default()).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_box_is_detected() {
        let mut p = QpProblem::new(1);
        p.q[(0, 0)] = 1.0;
        p.add_le(row(&[(0, 1.0)]), 1.0);
        p.add_le(row(&[(0, -1.0)]), -2.0);
        assert!(matches!(
            solve(&p, &QpSettings::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn infeasible_equality_is_detected() {
        let mut p = QpProblem::new(2);
        p.q[(0, 0)] = 1.0;
        p.q[(1, 1)] = 1.0;
        p.add_eq(row(&[(0, 1.0), (1, 1.0)]), 5.0);
        p.add_le(row(&[(0, 1.0)]), 1.0);
        p.add_le(row(&[(1, 1.0)]), 1.0);
        assert!(matches!(
            solve(&p, &QpSettings::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let mut p = QpProblem::new(1);
        p.add_le(row(&[(3, 1.0)]), 1.0);
        assert!(matches!(
            solve(&p, &QpSettings::default()),
            Err(Error::Usage(_))
        ));
    }
}
