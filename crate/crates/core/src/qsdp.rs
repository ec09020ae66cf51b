//! The stabilized QSDP subproblem and its truncated inner solve.
//!
//! At a frozen `x` the subproblem reads
//!
//! ```text
//! minimize   ⟨c, ξ⟩ + ½⟨Mξ, ξ⟩ + (σ/2)‖Σ‖_F²
//! subject to σ(Σ − T) + 𝒜(x)ξ ⪰ O
//! ```
//!
//! For fixed `ξ` the best feasible `Σ` is `[T − 𝒜(x)ξ/σ]_+`, which leaves the
//! smooth convex function
//!
//! ```text
//! q(ξ) = ⟨c, ξ⟩ + ½⟨Mξ, ξ⟩ + (σ/2)‖[T − 𝒜(x)ξ/σ]_+‖_F²
//! ∇q(ξ) = c + Mξ − 𝒜*(x)[T − 𝒜(x)ξ/σ]_+
//! ```
//!
//! Note `∇q(0) = ∇F(x; σ, y, Z)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{self, DenseMatrix};
use crate::error::{check_dim, Error, InnerFailure, Result};
use crate::model::{a_basis_checked, g_checked, grad_f_checked, jac_g_checked, x_checked, NsdpProblem, Triplet};
use crate::symmat::{eig_sym, psd_project, EigenDecomposition, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemData {
    /// `H + (1/σ)∇g∇gᵀ`, possibly shifted to be positive definite.
    pub m: SymMatrix,
    pub c: Vec<f64>,
    /// `y − g(x)/σ`
    pub s: Vec<f64>,
    /// `Z − X(x)/σ`
    pub t: SymMatrix,
    pub sigma: f64,
    a_basis: Vec<SymMatrix>,
    t_plus: SymMatrix,
}

impl SubproblemData {
    /// Assembles a subproblem directly. `a_basis[i]` is `A_i` at the frozen point.
    pub fn new(
        m: SymMatrix,
        c: Vec<f64>,
        s: Vec<f64>,
        t: SymMatrix,
        sigma: f64,
        a_basis: Vec<SymMatrix>,
    ) -> Result<Self> {
        let n = m.dim();
        check_dim("SubproblemData::c", n, c.len())?;
        check_dim("SubproblemData::A basis", n, a_basis.len())?;
        for a in &a_basis {
            check_dim("SubproblemData::A_i", t.dim(), a.dim())?;
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let t_plus = psd_project(&t)?;
        Ok(Self {
            m,
            c,
            s,
            t,
            sigma,
            a_basis,
            t_plus,
        })
    }

    pub fn n(&self) -> usize {
        self.m.dim()
    }

    pub fn d(&self) -> usize {
        self.t.dim()
    }

    pub fn a_basis(&self) -> &[SymMatrix] {
        &self.a_basis
    }

    /// `[T]_+`
    pub fn t_plus(&self) -> &SymMatrix {
        &self.t_plus
    }

    /// `𝒜(x)u`
    pub fn apply_a(&self, u: &[f64]) -> SymMatrix {
        let mut out = SymMatrix::zeros(self.d());
        for (a, ui) in self.a_basis.iter().zip(u) {
            if *ui != 0.0 {
                out.axpy(*ui, a);
            }
        }
        out
    }

    /// `𝒜*(x)U`
    pub fn apply_a_adj(&self, u: &SymMatrix) -> Vec<f64> {
        self.a_basis.iter().map(|a| a.dot(u)).collect()
    }

    /// `∇q(0)`, which equals `∇F` at the frozen point.
    pub fn merit_gradient(&self) -> Vec<f64> {
        let mut g = self.c.clone();
        dense::axpy(-1.0, &self.apply_a_adj(&self.t_plus), &mut g);
        g
    }
}

/// Builds `M = H + (1/σ)∇g∇gᵀ`, `s = y − g/σ`, `T = Z − X/σ`, `c = ∇f − ∇g s`.
pub fn build_subproblem<P: NsdpProblem + ?Sized>(
    p: &P,
    v: &Triplet,
    h: &SymMatrix,
    sigma: f64,
) -> Result<SubproblemData> {
    v.check(p)?;
    check_dim("H", p.n(), h.dim())?;
    let x = &v.x;
    let g = g_checked(p, x)?;
    let inv = 1.0 / sigma;
    let s: Vec<f64> = v.y.iter().zip(&g).map(|(y, g)| y - inv * g).collect();
    let mut m = h.clone();
    let mut c = grad_f_checked(p, x)?;
    if p.m() > 0 {
        let jac = jac_g_checked(p, x)?;
        add_gram(&mut m, &jac, inv);
        dense::axpy(-1.0, &jac.mul_vec(&s), &mut c);
    }
    let mut t = v.z.clone();
    t.axpy(-inv, &x_checked(p, x)?);
    SubproblemData::new(m, c, s, t, sigma, a_basis_checked(p, x)?)
}

/// `m += alpha · J Jᵀ`
fn add_gram(m: &mut SymMatrix, jac: &DenseMatrix, alpha: f64) {
    let n = jac.rows();
    let cols = jac.cols();
    for i in 0..n {
        let ri = &jac.data()[i * cols..(i + 1) * cols];
        for j in 0..=i {
            let rj = &jac.data()[j * cols..(j + 1) * cols];
            let v = m.get(i, j) + alpha * dense::dot(ri, rj);
            m.set(i, j, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerIterate {
    pub xi: Vec<f64>,
    pub sigma_mat: SymMatrix,
    pub lambda: SymMatrix,
    pub eta: Vec<f64>,
    pub theta: SymMatrix,
    pub omega: SymMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InnerMethod {
    SemismoothNewton,
    BarzilaiBorwein,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationParams {
    pub c1: f64,
    pub c2: f64,
    pub inner_tol: f64,
    pub inner_cap: usize,
    pub method: InnerMethod,
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self {
            c1: 0.5,
            c2: 1e3,
            inner_tol: 1e-10,
            inner_cap: 10_000,
            method: InnerMethod::SemismoothNewton,
        }
    }
}

impl TruncationParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c1 > 0.0
            && self.c1 < 1.0
            && self.c2 > 0.0
            && self.inner_tol > 0.0
            && self.inner_cap > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "truncation parameters out of range: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InnerStatus {
    /// Both truncation tests hold.
    Truncated,
    /// `‖∇q‖ ≤ inner_tol` before the truncation tests were met.
    Converged,
    /// `‖∇q‖` stopped decreasing at its rounding level; only the descent
    /// test holds.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub iterate: InnerIterate,
    pub iterations: usize,
    pub status: InnerStatus,
}

/// Everything known about `q` at one `ξ`.
struct Point {
    xi: Vec<f64>,
    w_eig: EigenDecomposition,
    sigma_mat: SymMatrix,
    a_xi: SymMatrix,
    q: f64,
    eta: Vec<f64>,
    eta_norm: f64,
}

fn evaluate(sub: &SubproblemData, xi: Vec<f64>) -> Result<Point> {
    let a_xi = sub.apply_a(&xi);
    let mut w = sub.t.clone();
    w.axpy(-1.0 / sub.sigma, &a_xi);
    let w_eig = eig_sym(&w)?;
    let sigma_mat = w_eig.positive_part();
    let m_xi = sub.m.mul_vec(&xi);
    let q = dense::dot(&sub.c, &xi)
        + 0.5 * dense::dot(&m_xi, &xi)
        + 0.5 * sub.sigma * sigma_mat.dot(&sigma_mat);
    let mut eta = sub.c.clone();
    dense::axpy(1.0, &m_xi, &mut eta);
    dense::axpy(-1.0, &sub.apply_a_adj(&sigma_mat), &mut eta);
    if !q.is_finite() || !dense::all_finite(&eta) {
        return Err(Error::NonFinite {
            callback: "reduced subproblem",
        });
    }
    let eta_norm = dense::norm(&eta);
    Ok(Point {
        xi,
        w_eig,
        sigma_mat,
        a_xi,
        q,
        eta,
        eta_norm,
    })
}

fn iterate_of(sub: &SubproblemData, pt: &Point) -> InnerIterate {
    // Ω = 𝒜ξ + σ(Σ − T)
    let mut omega = pt.a_xi.clone();
    omega.axpy(sub.sigma, &pt.sigma_mat);
    omega.axpy(-sub.sigma, &sub.t);
    InnerIterate {
        xi: pt.xi.clone(),
        sigma_mat: pt.sigma_mat.clone(),
        lambda: pt.sigma_mat.clone(),
        eta: pt.eta.clone(),
        theta: SymMatrix::zeros(sub.d()),
        omega,
    }
}

pub fn reduced_objective(sub: &SubproblemData, xi: &[f64]) -> Result<f64> {
    check_dim("xi", sub.n(), xi.len())?;
    Ok(evaluate(sub, xi.to_vec())?.q)
}

pub fn reduced_gradient(sub: &SubproblemData, xi: &[f64]) -> Result<Vec<f64>> {
    check_dim("xi", sub.n(), xi.len())?;
    Ok(evaluate(sub, xi.to_vec())?.eta)
}

/// The inner iterate `(ξ, Σ, Λ, η, Θ, Ω)` induced by `ξ`.
pub fn inner_iterate_at(sub: &SubproblemData, xi: &[f64]) -> Result<InnerIterate> {
    check_dim("xi", sub.n(), xi.len())?;
    Ok(iterate_of(sub, &evaluate(sub, xi.to_vec())?))
}

/// `⟨∇F, ξ⟩ ≤ −c1⟨Mξ, ξ⟩ − c1σ‖Λ − [T]_+‖²` and `‖η‖ ≤ c2|⟨∇F, ξ⟩|`.
pub fn truncation_test(
    sub: &SubproblemData,
    it: &InnerIterate,
    grad_f: &[f64],
    trunc: &TruncationParams,
) -> bool {
    descent_test(sub, it, grad_f, trunc) && dense::norm(&it.eta) <= trunc.c2 * dense::dot(grad_f, &it.xi).abs()
}

/// First truncation test alone: `⟨∇F, ξ⟩ ≤ −c1⟨Mξ, ξ⟩ − c1σ‖Λ − [T]_+‖²`.
pub fn descent_test(
    sub: &SubproblemData,
    it: &InnerIterate,
    grad_f: &[f64],
    trunc: &TruncationParams,
) -> bool {
    let gx = dense::dot(grad_f, &it.xi);
    let mut gap = it.lambda.clone();
    gap.axpy(-1.0, &sub.t_plus);
    gx <= -trunc.c1 * sub.m.quad_form(&it.xi) - trunc.c1 * sub.sigma * gap.dot(&gap)
}

/// Generalized Hessian of `q`: `M + (1/σ)𝒜* P'(W) 𝒜` in the `A_i` basis.
fn generalized_hessian(sub: &SubproblemData, pt: &Point) -> SymMatrix {
    let mut v = sub.m.clone();
    let e = &pt.w_eig;
    if e.lambda.iter().all(|l| *l <= 0.0) {
        return v;
    }
    let weights = e.projection_weights();
    let rotated: Vec<Vec<f64>> = sub.a_basis.iter().map(|a| e.rotate_in(a)).collect();
    let weighted: Vec<Vec<f64>> = rotated
        .iter()
        .map(|r| r.iter().zip(&weights).map(|(a, w)| a * w).collect())
        .collect();
    let inv = 1.0 / sub.sigma;
    for i in 0..sub.n() {
        for j in 0..=i {
            let s = dense::dot(&weighted[i], &rotated[j]);
            if s != 0.0 {
                v.set(i, j, v.get(i, j) + inv * s);
            }
        }
    }
    v
}

const ARMIJO: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
/// Iterations without a 1% drop in `‖∇q‖` that count as a stall.
const STALL_WINDOW: usize = 50;
const STALL_RATIO: f64 = 0.99;

/// Backtracking along `dir`. Once `1/σ` is large, decreases in `q` fall
/// below its rounding level, so two gradient-only tests also accept a step:
/// a directional derivative `⟨∇q(ξ + t d), d⟩ ≤ α⟨∇q(ξ), d⟩` (which by
/// convexity certifies the Armijo decrease), or a sufficient drop in `‖∇q‖`.
fn armijo(sub: &SubproblemData, pt: &Point, dir: &[f64]) -> Result<Option<Point>> {
    let slope = dense::dot(&pt.eta, dir);
    if !(slope < 0.0) {
        return Ok(None);
    }
    let mut step = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let mut xi = pt.xi.clone();
        dense::axpy(step, dir, &mut xi);
        let cand = evaluate(sub, xi)?;
        if cand.q <= pt.q + ARMIJO * step * slope
            || dense::dot(&cand.eta, dir) <= ARMIJO * slope
            || cand.eta_norm <= (1.0 - ARMIJO * step) * pt.eta_norm
        {
            return Ok(Some(cand));
        }
        step *= BACKTRACK;
    }
    Ok(None)
}

fn lipschitz_estimate(sub: &SubproblemData) -> f64 {
    let a2: f64 = sub.a_basis.iter().map(|a| a.dot(a)).sum();
    sub.m.norm() + a2 / sub.sigma
}

enum Stop {
    Truncate,
    Converge,
}

fn run(
    sub: &SubproblemData,
    trunc: &TruncationParams,
    grad_f: Option<&[f64]>,
) -> Result<InnerResult> {
    trunc.validate()?;
    if let Some(g) = grad_f {
        check_dim("gradF", sub.n(), g.len())?;
    }
    let mut pt = evaluate(sub, vec![0.0; sub.n()])?;
    if grad_f.is_some_and(|g| g.iter().all(|v| *v == 0.0)) {
        return Ok(InnerResult {
            iterate: iterate_of(sub, &pt),
            iterations: 0,
            status: InnerStatus::Truncated,
        });
    }
    let lip = lipschitz_estimate(sub).max(f64::MIN_POSITIVE);
    let mut bb_step = 1.0 / lip;
    let mut j = 0;
    let mut best = pt.eta_norm;
    let mut since_best = 0;
    loop {
        let mut stop = None;
        if j >= 1 {
            if let Some(g) = grad_f {
                if truncation_test(sub, &iterate_of(sub, &pt), g, trunc) {
                    stop = Some(Stop::Truncate);
                }
            }
        }
        if stop.is_none() && pt.eta_norm <= trunc.inner_tol {
            stop = Some(Stop::Converge);
        }
        if let Some(s) = stop {
            return Ok(InnerResult {
                iterate: iterate_of(sub, &pt),
                iterations: j,
                status: match s {
                    Stop::Truncate => InnerStatus::Truncated,
                    Stop::Converge => InnerStatus::Converged,
                },
            });
        }
        let fail = |pt: &Point| {
            Error::InnerSolver(InnerFailure {
                iterations: j,
                reduced_grad_norm: pt.eta_norm,
                directional: grad_f.map_or(f64::NAN, |g| dense::dot(g, &pt.xi)),
                merit_grad_norm: grad_f.map_or(f64::NAN, dense::norm),
            })
        };
        let stalled = |pt: &Point| -> Option<InnerResult> {
            let it = iterate_of(sub, pt);
            let g = grad_f?;
            (j >= 1 && descent_test(sub, &it, g, trunc)).then_some(InnerResult {
                iterate: it,
                iterations: j,
                status: InnerStatus::Stalled,
            })
        };
        if j == trunc.inner_cap || since_best >= STALL_WINDOW {
            return stalled(&pt).ok_or_else(|| fail(&pt));
        }

        let next = match trunc.method {
            InnerMethod::SemismoothNewton => {
                let newton = generalized_hessian(sub, &pt)
                    .cholesky()
                    .map(|ch| ch.solve(&dense::scaled(-1.0, &pt.eta)));
                let mut cand = match newton {
                    Some(dir) if dense::all_finite(&dir) => armijo(sub, &pt, &dir)?,
                    _ => None,
                };
                if cand.is_none() {
                    cand = armijo(sub, &pt, &dense::scaled(-1.0 / lip, &pt.eta))?;
                }
                cand
            }
            InnerMethod::BarzilaiBorwein => {
                let cand = armijo(sub, &pt, &dense::scaled(-bb_step, &pt.eta))?;
                if let Some(c) = &cand {
                    let s = dense::sub(&c.xi, &pt.xi);
                    let y = dense::sub(&c.eta, &pt.eta);
                    let sy = dense::dot(&s, &y);
                    bb_step = if sy > 0.0 {
                        (dense::dot(&s, &s) / sy).clamp(1e-20, 1e20)
                    } else {
                        1.0 / lip
                    };
                }
                cand
            }
        };
        match next {
            Some(c) => pt = c,
            None => return stalled(&pt).ok_or_else(|| fail(&pt)),
        }
        j += 1;
        if pt.eta_norm < STALL_RATIO * best {
            best = pt.eta_norm;
            since_best = 0;
        } else {
            since_best += 1;
        }
    }
}

/// Algorithm-3 inner loop: iterates from `ξ = 0` and returns the first
/// iterate (from `j = 1` on) meeting both truncation tests against `grad_f`.
pub fn inner_solve(
    sub: &SubproblemData,
    trunc: &TruncationParams,
    grad_f: &[f64],
) -> Result<InnerResult> {
    run(sub, trunc, Some(grad_f))
}

/// Untruncated minimization of `q` to `‖∇q‖ ≤ tol`.
pub fn minimize_reduced(
    sub: &SubproblemData,
    tol: f64,
    cap: usize,
    method: InnerMethod,
) -> Result<InnerResult> {
    let trunc = TruncationParams {
        inner_tol: tol,
        inner_cap: cap,
        method,
        ..TruncationParams::default()
    };
    run(sub, &trunc, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub y_bar: Vec<f64>,
    pub z_bar: SymMatrix,
    pub p: Vec<f64>,
}

/// `p = ξ`, `ȳ = y − (g(x) + ∇g(x)ᵀξ)/σ`, `Z̄ = [Σ]_+`.
pub fn recover_multipliers<P: NsdpProblem + ?Sized>(
    p: &P,
    v: &Triplet,
    sub: &SubproblemData,
    it: &InnerIterate,
) -> Result<Recovered> {
    v.check(p)?;
    check_dim("xi", p.n(), it.xi.len())?;
    let mut y_bar = v.y.clone();
    if p.m() > 0 {
        let mut lin = g_checked(p, &v.x)?;
        dense::axpy(1.0, &jac_g_checked(p, &v.x)?.tr_mul_vec(&it.xi), &mut lin);
        dense::axpy(-1.0 / sub.sigma, &lin, &mut y_bar);
    }
    Ok(Recovered {
        y_bar,
        z_bar: psd_project(&it.sigma_mat)?,
        p: it.xi.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjReport {
    pub r_j: f64,
    /// `⟨∇F, ξ⟩`
    pub directional: f64,
    /// `|⟨∇F, ξ⟩ − (−⟨Mξ, ξ⟩ − σ‖Λ − [T]_+‖² + R_j)|`
    pub identity_residual: f64,
}

/// `R_j = ⟨η,ξ⟩ + ⟨Ω,Λ⟩ − ⟨Ω,[T]_+⟩ + σ⟨Λ−[T]_+, T−[T]_+⟩ − ⟨Λ−[T]_+, Θ⟩`
pub fn compute_rj(sub: &SubproblemData, it: &InnerIterate, grad_f: &[f64]) -> RjReport {
    let tp = &sub.t_plus;
    let mut gap = it.lambda.clone();
    gap.axpy(-1.0, tp);
    let mut t_res = sub.t.clone();
    t_res.axpy(-1.0, tp);
    let r_j = dense::dot(&it.eta, &it.xi) + it.omega.dot(&it.lambda) - it.omega.dot(tp)
        + sub.sigma * gap.dot(&t_res)
        - gap.dot(&it.theta);
    let directional = dense::dot(grad_f, &it.xi);
    let rhs = -sub.m.quad_form(&it.xi) - sub.sigma * gap.dot(&gap) + r_j;
    RjReport {
        r_j,
        directional,
        identity_residual: (directional - rhs).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merit::{grad_merit_f, MeritContext};
    use crate::model::tests::scalar_problem;
    use crate::model::CallbackProblem;

    /// f = x, X(x) = x at x = 1, Z = 0, σ = 0.1, H = 1.
    fn one_d() -> SubproblemData {
        let p = scalar_problem();
        let v = Triplet::new(vec![1.0], vec![], SymMatrix::zeros(1));
        build_subproblem(&p, &v, &SymMatrix::identity(1), 0.1).unwrap()
    }

    #[test]
    fn build_examples() {
        let sub = one_d();
        assert_eq!(sub.m.get(0, 0), 1.0);
        assert_eq!(sub.t.get(0, 0), -10.0);
        assert_eq!(sub.c, [1.0]);

        // g(x) = x with a dummy constant block
        let p = CallbackProblem::new(1, 1, |_| 0.0, |_| vec![0.0], |_| SymMatrix::identity(1))
            .with_g(1, |x| vec![x[0]], |_| DenseMatrix::from_row_major(1, 1, vec![1.0]));
        let v = Triplet::new(vec![0.5], vec![0.0], SymMatrix::zeros(1));
        let sub = build_subproblem(&p, &v, &SymMatrix::identity(1), 1.0).unwrap();
        assert_eq!(sub.m.get(0, 0), 2.0);

        let p = scalar_problem();
        let v = Triplet::new(vec![0.0], vec![], SymMatrix::zeros(1));
        let sub = build_subproblem(&p, &v, &SymMatrix::identity(1), 0.1).unwrap();
        assert_eq!(sub.t, SymMatrix::zeros(1));
    }

    #[test]
    fn reduced_examples() {
        let sub = one_d();
        assert_eq!(reduced_objective(&sub, &[0.0]).unwrap(), 0.0);
        assert_eq!(reduced_gradient(&sub, &[0.0]).unwrap(), [1.0]);
        assert_eq!(reduced_gradient(&sub, &[-1.0]).unwrap(), [0.0]);
        let r = minimize_reduced(&sub, 1e-12, 100, InnerMethod::SemismoothNewton).unwrap();
        assert!((r.iterate.xi[0] + 1.0).abs() < 1e-12);
        let r = minimize_reduced(&sub, 1e-12, 1000, InnerMethod::BarzilaiBorwein).unwrap();
        assert!((r.iterate.xi[0] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn merit_gradient_is_reduced_gradient_at_zero() {
        let sub = one_d();
        let p = scalar_problem();
        let ctx = MeritContext::new(0.1, vec![], SymMatrix::zeros(1)).unwrap();
        assert_eq!(sub.merit_gradient(), grad_merit_f(&p, &[1.0], &ctx).unwrap());
    }

    #[test]
    fn inner_solve_one_d() {
        let sub = one_d();
        let trunc = TruncationParams::default();
        for method in [InnerMethod::SemismoothNewton, InnerMethod::BarzilaiBorwein] {
            let trunc = TruncationParams { method, ..trunc };
            let r = inner_solve(&sub, &trunc, &[1.0]).unwrap();
            assert_eq!(r.status, InnerStatus::Truncated);
            assert!(r.iterations >= 1);
            assert!(truncation_test(&sub, &r.iterate, &[1.0], &trunc));
        }
        let r = inner_solve(&sub, &trunc, &[1.0]).unwrap();
        assert!((r.iterate.xi[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_returns_null_step() {
        let sub = one_d();
        let r = inner_solve(&sub, &TruncationParams::default(), &[0.0]).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.iterate.xi, [0.0]);
        assert_eq!(&r.iterate.lambda, sub.t_plus());
    }

    #[test]
    fn truncation_examples() {
        let sub = one_d();
        let trunc = TruncationParams::default();
        let at = |xi: f64| inner_iterate_at(&sub, &[xi]).unwrap();
        let mut zero = at(0.0);
        zero.eta = vec![0.0];
        assert!(truncation_test(&sub, &zero, &[1.0], &trunc));
        assert!(truncation_test(&sub, &at(-1.0), &[1.0], &trunc));
        assert!(!truncation_test(&sub, &at(1.0), &[1.0], &trunc));
    }

    #[test]
    fn recover_examples() {
        let p = scalar_problem();
        let v = Triplet::new(vec![1.0], vec![], SymMatrix::zeros(1));
        let sub = one_d();
        let it = inner_iterate_at(&sub, &[-1.0]).unwrap();
        let rec = recover_multipliers(&p, &v, &sub, &it).unwrap();
        assert_eq!(rec.z_bar, SymMatrix::zeros(1));
        assert_eq!(rec.p, [-1.0]);

        let it0 = inner_iterate_at(&sub, &[0.0]).unwrap();
        let rec = recover_multipliers(&p, &v, &sub, &it0).unwrap();
        assert_eq!(&rec.z_bar, sub.t_plus());

        // g(x) = 2 + (x − x0), σ = 1, y = 0, ξ = 1
        let q = CallbackProblem::new(1, 1, |_| 0.0, |_| vec![0.0], |_| SymMatrix::identity(1))
            .with_g(1, |x| vec![2.0 + x[0]], |_| DenseMatrix::from_row_major(1, 1, vec![1.0]));
        let v = Triplet::new(vec![0.0], vec![0.0], SymMatrix::zeros(1));
        let sub = build_subproblem(&q, &v, &SymMatrix::identity(1), 1.0).unwrap();
        let it = inner_iterate_at(&sub, &[1.0]).unwrap();
        assert_eq!(recover_multipliers(&q, &v, &sub, &it).unwrap().y_bar, [-3.0]);
    }

    #[test]
    fn rj_examples() {
        let sub = one_d();
        let it = inner_iterate_at(&sub, &[-1.0]).unwrap();
        let rep = compute_rj(&sub, &it, &sub.merit_gradient());
        assert_eq!(rep.r_j, 0.0);
        assert_eq!(rep.directional, -1.0);
        assert!(rep.identity_residual < 1e-12);

        let it = inner_iterate_at(&sub, &[0.0]).unwrap();
        let rep = compute_rj(&sub, &it, &sub.merit_gradient());
        assert_eq!(rep.r_j, 0.0);
    }

    #[test]
    fn strictly_feasible_witness() {
        let sub = one_d();
        // (ξ, Σ) = (0, I + T): σ(Σ − T) + 𝒜ξ = σI
        let mut sig = SymMatrix::identity(1);
        sig.axpy(1.0, &sub.t);
        let mut lhs = sig.clone();
        lhs.axpy(-1.0, &sub.t);
        let lhs = lhs.scale(sub.sigma);
        assert!((crate::symmat::min_eig(&lhs).unwrap() - sub.sigma).abs() < 1e-15);
    }
}
