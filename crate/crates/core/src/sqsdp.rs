//! The inexact stabilized SQSDP method: Mini-F-Phase or truncated QSDP step
//! with backtracking on the merit function, VOMF update, and σ-update.

use alloc::vec::Vec;

use crate::dense;
use crate::error::{check_dim, Error, LineSearchFailure, Result};
use crate::merit::{grad_merit_f, merit_f, merit_with_grad, MeritContext};
use crate::model::{
    akkt_takkt_diagnostics, feasibility_h, grad_h, residuals, x_checked, AkktDiagnostics,
    NsdpProblem, ResidualReport, Triplet,
};
use crate::qsdp::{build_subproblem, inner_solve, recover_multipliers, InnerMethod, TruncationParams};
use crate::symmat::{eig_sym, min_eig, psd_project, SymMatrix};
use crate::vomf::{vomf_step, IterateKind, VomfParams, VomfState};

/// Source of wall-clock time. The core has no clock of its own.
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn now_s(&self) -> f64;
}

/// Always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_s(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HessianMode {
    Identity,
    /// `∇²_xx L` when the problem provides it, identity otherwise.
    Lagrangian,
    User(SymMatrix),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SqsdpConfig {
    pub tau: f64,
    pub omega: f64,
    pub beta: f64,
    pub kappa: f64,
    pub ymax: f64,
    pub zmax: f64,
    pub phi0: f64,
    pub psi0: f64,
    pub gamma0: f64,
    pub sigma0: f64,
    pub c1: f64,
    pub c2: f64,
    pub inner_tol: f64,
    pub inner_cap: usize,
    pub inner_method: InnerMethod,
    pub r_tol: f64,
    pub gamma_tol: f64,
    pub k_max: usize,
    pub grad_f_zero_tol: f64,
    pub line_search_cap: usize,
    pub hessian_mode: HessianMode,
    /// `r_V` above this at a γ or iteration-cap stop counts as infeasible.
    pub infeasibility_tol: f64,
    pub h_stationarity_tol: f64,
    pub diagnostics_eps: f64,
}

impl Default for SqsdpConfig {
    fn default() -> Self {
        Self {
            tau: 1e-4,
            omega: 1e-4,
            beta: 0.5,
            kappa: 1e-5,
            ymax: 1e6,
            zmax: 1e6,
            phi0: 1e3,
            psi0: 1e3,
            gamma0: 1e-1,
            sigma0: 1e-1,
            c1: 0.5,
            c2: 1e3,
            inner_tol: 1e-10,
            inner_cap: 10_000,
            inner_method: InnerMethod::SemismoothNewton,
            r_tol: 1e-6,
            gamma_tol: 1e-6,
            k_max: 100,
            grad_f_zero_tol: 1e-6,
            line_search_cap: 60,
            hessian_mode: HessianMode::Lagrangian,
            infeasibility_tol: 1e-3,
            h_stationarity_tol: 1e-4,
            diagnostics_eps: 1e-6,
        }
    }
}

impl SqsdpConfig {
    pub fn truncation(&self) -> TruncationParams {
        TruncationParams {
            c1: self.c1,
            c2: self.c2,
            inner_tol: self.inner_tol,
            inner_cap: self.inner_cap,
            method: self.inner_method,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let ok = unit(self.tau)
            && unit(self.omega)
            && unit(self.beta)
            && unit(self.kappa)
            && pos(self.ymax)
            && pos(self.zmax)
            && pos(self.phi0)
            && pos(self.psi0)
            && pos(self.gamma0)
            && pos(self.sigma0)
            && self.r_tol >= 0.0
            && self.gamma_tol >= 0.0
            && self.grad_f_zero_tol >= 0.0;
        if !ok {
            return Err(Error::InvalidParameter(alloc::format!(
                "SQSDP configuration out of range: {self:?}"
            )));
        }
        self.truncation().validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub y_norm: f64,
    pub y_inf_norm: f64,
    pub z_fnorm: f64,
    pub z_min_eig: f64,
    pub z_max_eig: f64,
    pub sigma: f64,
    pub phi: f64,
    pub psi: f64,
    pub gamma: f64,
    pub r_v: f64,
    pub r_o: f64,
    pub r: f64,
    pub merit_f: f64,
    pub grad_f_norm: f64,
    /// `β^ℓ` of the step leaving this iterate (0 for a Mini-F step).
    pub step_size: f64,
    /// Kind of the step leaving this iterate; `None` on the final record.
    pub kind: Option<IterateKind>,
    pub inner_iters: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TerminationStatus {
    ResidualConverged,
    GammaConverged,
    MaxIterations,
    /// Stopped infeasible at a stationary point of `h`.
    FeasibilityStationary,
    InnerSolverFailure,
    LineSearchFailure,
    /// Approximate-KKT stop of the augmented Lagrangian baseline.
    ApproxKkt,
}

impl TerminationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationStatus::ResidualConverged => "ResidualConverged",
            TerminationStatus::GammaConverged => "GammaConverged",
            TerminationStatus::MaxIterations => "MaxIterations",
            TerminationStatus::FeasibilityStationary => "FeasibilityStationary",
            TerminationStatus::InnerSolverFailure => "InnerSolverFailure",
            TerminationStatus::LineSearchFailure => "LineSearchFailure",
            TerminationStatus::ApproxKkt => "ApproxKkt",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(
            self,
            TerminationStatus::InnerSolverFailure | TerminationStatus::LineSearchFailure
        )
    }
}

/// Final point and everything known about how the run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Triplet,
    pub status: TerminationStatus,
    pub iterations: usize,
    pub residuals: ResidualReport,
    pub sigma: f64,
    pub h: f64,
    pub grad_h_norm: f64,
    pub diagnostics: AkktDiagnostics,
    pub failure: Option<Error>,
    pub records: Vec<IterationRecord>,
}

/// `σ' = max(min(σ/2, r^{3/2}), 1e-300)` when the M-test passed, else `σ`.
pub fn sigma_update(sigma: f64, r_next: f64, m_test_passed: bool) -> f64 {
    if m_test_passed {
        (0.5 * sigma).min(libm::pow(r_next, 1.5)).max(1e-300)
    } else {
        sigma
    }
}

pub fn choose_h<P: NsdpProblem + ?Sized>(p: &P, v: &Triplet, cfg: &SqsdpConfig) -> Result<SymMatrix> {
    let h = match &cfg.hessian_mode {
        HessianMode::Identity => None,
        HessianMode::Lagrangian => p.hess_lagrangian(&v.x, &v.y, &v.z),
        HessianMode::User(h) => Some(h.clone()),
    };
    match h {
        Some(h) => {
            check_dim("H", p.n(), h.dim())?;
            if h.is_finite() {
                Ok(h)
            } else {
                Err(Error::NonFinite {
                    callback: "hess_lagrangian",
                })
            }
        }
        None => Ok(SymMatrix::identity(p.n())),
    }
}

/// `M` itself if a Cholesky factorization succeeds, otherwise
/// `M + (|λ_min(M)| + 1e-5) I`.
pub fn modify_m(m: &SymMatrix) -> Result<SymMatrix> {
    if m.cholesky().is_some() {
        return Ok(m.clone());
    }
    let mut out = m.clone();
    out.add_identity(min_eig(m)?.abs() + 1e-5);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub ell: usize,
    /// `β^ℓ`
    pub step: f64,
    pub merit: f64,
}

/// `Δ = max(⟨∇F, p⟩, −ω‖p‖²)`
pub fn line_search_delta(grad_f: &[f64], dir: &[f64], omega: f64) -> f64 {
    dense::dot(grad_f, dir).max(-omega * dense::dot(dir, dir))
}

/// Smallest `ℓ ≤ line_search_cap` with `F(x + β^ℓ p) ≤ F(x) + τ β^ℓ Δ`.
pub fn line_search<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    dir: &[f64],
    ctx: &MeritContext,
    cfg: &SqsdpConfig,
) -> Result<LineSearchResult> {
    let (f0, grad) = merit_with_grad(p, x, ctx)?;
    line_search_from(p, x, dir, ctx, cfg, f0, &grad)
}

fn line_search_from<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    dir: &[f64],
    ctx: &MeritContext,
    cfg: &SqsdpConfig,
    f0: f64,
    grad: &[f64],
) -> Result<LineSearchResult> {
    check_dim("search direction", p.n(), dir.len())?;
    let delta = line_search_delta(grad, dir, cfg.omega);
    let mut step = 1.0;
    let mut last_trial = f64::NAN;
    for ell in 0..=cfg.line_search_cap {
        let mut trial = x.to_vec();
        dense::axpy(step, dir, &mut trial);
        // A trial outside the callbacks' domain counts as a rejection.
        match merit_f(p, &trial, ctx) {
            Ok(f) => {
                last_trial = f;
                if f <= f0 + cfg.tau * step * delta {
                    return Ok(LineSearchResult {
                        ell,
                        step,
                        merit: f,
                    });
                }
            }
            Err(Error::NonFinite { .. }) => last_trial = f64::NAN,
            Err(e) => return Err(e),
        }
        step *= cfg.beta;
    }
    Err(Error::LineSearch(LineSearchFailure {
        merit: f0,
        delta,
        last_trial,
        trials: cfg.line_search_cap + 1,
    }))
}

pub fn solve<P: NsdpProblem + ?Sized>(p: &P, v0: &Triplet, cfg: &SqsdpConfig) -> Result<SolveReport> {
    solve_with_clock(p, v0, cfg, &NoClock)
}

pub fn solve_with_clock<P: NsdpProblem + ?Sized, C: Clock + ?Sized>(
    p: &P,
    v0: &Triplet,
    cfg: &SqsdpConfig,
    clock: &C,
) -> Result<SolveReport> {
    cfg.validate()?;
    v0.check(p)?;
    let z0_min = min_eig(&v0.z)?;
    if z0_min < -1e-12 * v0.z.norm().max(1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "Z0 must be positive semidefinite (λ_min = {z0_min:e})"
        )));
    }
    let t0 = clock.now_s();
    let params = VomfParams {
        kappa: cfg.kappa,
        ymax: cfg.ymax,
        zmax: cfg.zmax,
    };
    let trunc = cfg.truncation();
    let mut x = v0.x.clone();
    let mut st = VomfState {
        y: v0.y.clone(),
        z: v0.z.clone(),
        phi: cfg.phi0,
        psi: cfg.psi0,
        gamma: cfg.gamma0,
    };
    let mut sigma = cfg.sigma0;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut k = 0;

    let (status, failure, final_res) = loop {
        let v = Triplet::new(x.clone(), st.y.clone(), st.z.clone());
        let res = residuals(p, &v, cfg.kappa)?;
        let ctx = MeritContext::new(sigma, st.y.clone(), st.z.clone())?;
        let (fval, grad) = merit_with_grad(p, &x, &ctx)?;
        let grad_norm = dense::norm(&grad);
        let z_eig = eig_sym(&st.z)?;
        records.push(IterationRecord {
            k,
            x: x.clone(),
            y_norm: dense::norm(&st.y),
            y_inf_norm: dense::norm_inf(&st.y),
            z_fnorm: st.z.norm(),
            z_min_eig: z_eig.lambda.last().copied().unwrap_or(0.0),
            z_max_eig: z_eig.lambda.first().copied().unwrap_or(0.0),
            sigma,
            phi: st.phi,
            psi: st.psi,
            gamma: st.gamma,
            r_v: res.r_v,
            r_o: res.r_o,
            r: res.r,
            merit_f: fval,
            grad_f_norm: grad_norm,
            step_size: 0.0,
            kind: None,
            inner_iters: 0,
            wall_time: clock.now_s() - t0,
        });
        if res.r <= cfg.r_tol {
            break (TerminationStatus::ResidualConverged, None, res);
        }
        if st.gamma <= cfg.gamma_tol {
            break (TerminationStatus::GammaConverged, None, res);
        }
        if k == cfg.k_max {
            break (TerminationStatus::MaxIterations, None, res);
        }

        let (x_next, y_bar, z_bar, step, inner_iters) = if grad_norm <= cfg.grad_f_zero_tol {
            // Mini-F-Phase: x is (numerically) stationary for F.
            let inv = 1.0 / sigma;
            let g = crate::model::g_checked(p, &x)?;
            let y_bar: Vec<f64> = st.y.iter().zip(&g).map(|(y, g)| y - inv * g).collect();
            let mut t = st.z.clone();
            t.axpy(-inv, &x_checked(p, &x)?);
            (x.clone(), y_bar, psd_project(&t)?, 0.0, 0)
        } else {
            let h = choose_h(p, &v, cfg)?;
            let mut sub = build_subproblem(p, &v, &h, sigma)?;
            sub.m = modify_m(&sub.m)?;
            let inner = match inner_solve(&sub, &trunc, &grad) {
                Ok(r) => r,
                Err(e @ Error::InnerSolver(_)) => {
                    break (TerminationStatus::InnerSolverFailure, Some(e), res)
                }
                Err(e) => return Err(e),
            };
            let rec = recover_multipliers(p, &v, &sub, &inner.iterate)?;
            let ls = match line_search_from(p, &x, &rec.p, &ctx, cfg, fval, &grad) {
                Ok(l) => l,
                Err(e @ Error::LineSearch(_)) => {
                    break (TerminationStatus::LineSearchFailure, Some(e), res)
                }
                Err(e) => return Err(e),
            };
            let mut x_next = x.clone();
            dense::axpy(ls.step, &rec.p, &mut x_next);
            (x_next, rec.y_bar, rec.z_bar, ls.step, inner.iterations)
        };

        let grad_next = grad_merit_f(p, &x_next, &ctx)?;
        let vbar = Triplet::new(x_next.clone(), y_bar, z_bar);
        let (next, kind) = vomf_step(p, &vbar, &st, sigma, &params, &grad_next)?;
        let m_test = dense::norm(&grad_next) <= st.gamma;
        if m_test {
            let v_next = Triplet::new(x_next.clone(), next.y.clone(), next.z.clone());
            sigma = sigma_update(sigma, residuals(p, &v_next, cfg.kappa)?.r, true);
        }
        if let Some(last) = records.last_mut() {
            last.kind = Some(kind);
            last.step_size = step;
            last.inner_iters = inner_iters;
        }
        st = next;
        x = x_next;
        k += 1;
    };

    let solution = Triplet::new(x, st.y, st.z);
    let h = feasibility_h(p, &solution.x)?;
    let grad_h_norm = dense::norm(&grad_h(p, &solution.x)?);
    let status = match status {
        TerminationStatus::GammaConverged | TerminationStatus::MaxIterations
            if final_res.r_v > cfg.infeasibility_tol && grad_h_norm <= cfg.h_stationarity_tol =>
        {
            TerminationStatus::FeasibilityStationary
        }
        s => s,
    };
    let diagnostics = akkt_takkt_diagnostics(p, core::slice::from_ref(&solution), cfg.diagnostics_eps)?;
    Ok(SolveReport {
        solution,
        status,
        iterations: k,
        residuals: final_res,
        sigma,
        h,
        grad_h_norm,
        diagnostics,
        failure,
        records,
    })
}
