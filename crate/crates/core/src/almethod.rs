//! Safeguarded augmented Lagrangian baseline.
//!
//! Each outer iteration minimizes
//!
//! ```text
//! f(x) + (1/2ρ)‖ȳ − ρ g(x)‖² + (1/2ρ)‖[Z̄ − ρ X(x)]_+‖_F²
//! ```
//!
//! which is the merit function `F(x; 1/ρ, ȳ, Z̄)`, then updates `ρ` and the
//! multipliers, with `ȳ`, `Z̄` kept in the boxes `C`, `D`.

use alloc::vec::Vec;

use crate::dense;
use crate::error::{Error, Result};
use crate::merit::{merit_f, merit_with_grad, MeritContext};
use crate::model::{
    akkt_takkt_diagnostics, g_checked, grad_lag_unchecked, residuals, x_checked, AkktDiagnostics,
    NsdpProblem, ResidualReport, Triplet,
};
use crate::sqsdp::{Clock, NoClock, TerminationStatus};
use crate::symmat::{eig_sym, min_eig, SymMatrix};
use crate::vomf::box_project;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AlConfig {
    pub eps: f64,
    pub tau: f64,
    pub gamma_growth: f64,
    pub k_max: usize,
    pub ymax: f64,
    pub zmax: f64,
    pub rho0: f64,
    pub inner_grad_tol: f64,
    pub inner_iter_cap: usize,
    /// Only used for the residual report; `r` itself does not depend on it.
    pub kappa: f64,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            tau: 0.5,
            gamma_growth: 2.0,
            k_max: 100,
            ymax: 1e6,
            zmax: 1e6,
            rho0: 10.0,
            inner_grad_tol: 1e-10,
            inner_iter_cap: 20_000,
            kappa: 1e-5,
        }
    }
}

impl AlConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eps > 0.0
            && self.tau > 0.0
            && self.tau < 1.0
            && self.gamma_growth > 1.0
            && self.ymax > 0.0
            && self.zmax > 0.0
            && self.rho0 > 0.0
            && self.inner_grad_tol > 0.0
            && self.inner_iter_cap > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "AL configuration out of range: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlInnerResult {
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Tolerance not reached: cap hit or no further decrease possible.
    pub stalled: bool,
}

fn al_context(ybar: &[f64], zbar: &SymMatrix, rho: f64) -> Result<MeritContext> {
    MeritContext::new(1.0 / rho, ybar.to_vec(), zbar.clone())
}

/// Gradient of the subproblem: `∇_x L(x, ȳ − ρ g(x), [Z̄ − ρ X(x)]_+)`.
pub fn al_subproblem_gradient<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    ybar: &[f64],
    zbar: &SymMatrix,
    rho: f64,
) -> Result<Vec<f64>> {
    let g = g_checked(p, x)?;
    let y: Vec<f64> = ybar.iter().zip(&g).map(|(y, g)| y - rho * g).collect();
    let mut t = zbar.clone();
    t.axpy(-rho, &x_checked(p, x)?);
    let z = eig_sym(&t)?.positive_part();
    grad_lag_unchecked(p, x, &y, &z)
}

pub fn al_subproblem_value<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    ybar: &[f64],
    zbar: &SymMatrix,
    rho: f64,
) -> Result<f64> {
    merit_f(p, x, &al_context(ybar, zbar, rho)?)
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Barzilai–Borwein gradient descent with Armijo backtracking.
pub fn al_inner_min<P: NsdpProblem + ?Sized>(
    p: &P,
    x_start: &[f64],
    ybar: &[f64],
    zbar: &SymMatrix,
    rho: f64,
    cfg: &AlConfig,
) -> Result<AlInnerResult> {
    let ctx = al_context(ybar, zbar, rho)?;
    let mut x = x_start.to_vec();
    let (mut fx, mut grad) = merit_with_grad(p, &x, &ctx)?;
    let mut gnorm = dense::norm(&grad);
    let mut alpha = 1.0 / gnorm.max(1.0);
    for it in 0..cfg.inner_iter_cap {
        if gnorm <= cfg.inner_grad_tol {
            return Ok(AlInnerResult {
                x,
                grad_norm: gnorm,
                iterations: it,
                stalled: false,
            });
        }
        let slope = -alpha * gnorm * gnorm;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = x.clone();
            dense::axpy(-alpha * step, &grad, &mut trial);
            match merit_with_grad(p, &trial, &ctx) {
                Ok((ft, gt)) if ft <= fx + ARMIJO * step * slope => {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                Ok(_) | Err(Error::NonFinite { .. }) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return Ok(AlInnerResult {
                x,
                grad_norm: gnorm,
                iterations: it,
                stalled: true,
            });
        };
        let s = dense::sub(&xn, &x);
        let yv = dense::sub(&gn, &grad);
        let sy = dense::dot(&s, &yv);
        alpha = if sy > 0.0 {
            (dense::dot(&s, &s) / sy).clamp(1e-30, 1e30)
        } else {
            1.0 / dense::norm(&gn).max(1.0)
        };
        x = xn;
        fx = fn_;
        grad = gn;
        gnorm = dense::norm(&grad);
    }
    Ok(AlInnerResult {
        stalled: gnorm > cfg.inner_grad_tol,
        x,
        grad_norm: gnorm,
        iterations: cfg.inner_iter_cap,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub y_norm: f64,
    pub z_fnorm: f64,
    pub rho: f64,
    pub u: f64,
    pub r_v: f64,
    pub r_o: f64,
    pub r: f64,
    pub inner_iters: usize,
    pub inner_grad_norm: f64,
    pub inner_stalled: bool,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlReport {
    /// `(x_k, y_k, Z_k)` with the unsafeguarded multipliers.
    pub solution: Triplet,
    pub y_bar: Vec<f64>,
    pub z_bar: SymMatrix,
    pub status: TerminationStatus,
    pub iterations: usize,
    pub residuals: ResidualReport,
    pub rho: f64,
    pub inner_stalls: usize,
    pub diagnostics: AkktDiagnostics,
    pub records: Vec<AlRecord>,
}

/// `max{‖g(x)‖, ‖[Z̄/ρ − X(x)]_+ − Z̄/ρ‖_F}`
fn u_measure<P: NsdpProblem + ?Sized>(p: &P, x: &[f64], zbar: &SymMatrix, rho: f64) -> Result<f64> {
    let g = g_checked(p, x)?;
    let shifted = zbar.scale(1.0 / rho);
    let mut t = shifted.clone();
    t.axpy(-1.0, &x_checked(p, x)?);
    let mut v = eig_sym(&t)?.positive_part();
    v.axpy(-1.0, &shifted);
    Ok(dense::norm(&g).max(v.norm()))
}

/// `ρ` kept when `u_{k+1} ≤ τ u_k`, multiplied by the growth factor otherwise.
pub fn rho_update(rho: f64, u_next: f64, u_prev: f64, cfg: &AlConfig) -> f64 {
    if u_next <= cfg.tau * u_prev {
        rho
    } else {
        cfg.gamma_growth * rho
    }
}

/// Step-1 approximate-KKT test with separate eigenbases `U` of `X` and `S` of `Z`.
pub fn al_kkt_test<P: NsdpProblem + ?Sized>(p: &P, v: &Triplet, eps: f64) -> Result<bool> {
    let grad = grad_lag_unchecked(p, &v.x, &v.y, &v.z)?;
    if dense::norm(&grad) > eps {
        return Ok(false);
    }
    let g = g_checked(p, &v.x)?;
    let ex = eig_sym(&x_checked(p, &v.x)?)?;
    let neg = ex.reconstruct_with(|l| (-l).max(0.0));
    if dense::norm(&g) + neg.norm() > eps {
        return Ok(false);
    }
    let ez = eig_sym(&v.z)?;
    if dense::norm(&dense::sub(&ex.q, &ez.q)) > eps {
        return Ok(false);
    }
    // λ_j(−X) < −ε  ⇒  |λ_j(Z)| ≤ ε
    Ok(ex
        .lambda
        .iter()
        .zip(&ez.lambda)
        .all(|(lx, lz)| !(-lx < -eps) || lz.abs() <= eps))
}

pub fn al_solve<P: NsdpProblem + ?Sized>(p: &P, v0: &Triplet, cfg: &AlConfig) -> Result<AlReport> {
    al_solve_with_clock(p, v0, cfg, &NoClock)
}

pub fn al_solve_with_clock<P: NsdpProblem + ?Sized, C: Clock + ?Sized>(
    p: &P,
    v0: &Triplet,
    cfg: &AlConfig,
    clock: &C,
) -> Result<AlReport> {
    cfg.validate()?;
    v0.check(p)?;
    let z0_min = min_eig(&v0.z)?;
    if z0_min < -1e-12 * v0.z.norm().max(1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "Z0 must be positive semidefinite (λ_min = {z0_min:e})"
        )));
    }
    let t0 = clock.now_s();
    let mut x = v0.x.clone();
    let mut y = v0.y.clone();
    let mut z = v0.z.clone();
    let mut ybar = v0.y.clone();
    let mut zbar = v0.z.clone();
    let mut rho = cfg.rho0;
    let mut u = u_measure(p, &x, &zbar, rho)?;
    let mut records: Vec<AlRecord> = Vec::new();
    let mut stalls = 0;
    let mut k = 0;
    let (status, res) = loop {
        let v = Triplet::new(x.clone(), y.clone(), z.clone());
        let res = residuals(p, &v, cfg.kappa)?;
        records.push(AlRecord {
            k,
            x: x.clone(),
            y_norm: dense::norm(&y),
            z_fnorm: z.norm(),
            rho,
            u,
            r_v: res.r_v,
            r_o: res.r_o,
            r: res.r,
            inner_iters: 0,
            inner_grad_norm: 0.0,
            inner_stalled: false,
            wall_time: clock.now_s() - t0,
        });
        if res.r <= cfg.eps {
            break (TerminationStatus::ResidualConverged, res);
        }
        if al_kkt_test(p, &v, cfg.eps)? {
            break (TerminationStatus::ApproxKkt, res);
        }
        if k == cfg.k_max {
            break (TerminationStatus::MaxIterations, res);
        }

        let inner = al_inner_min(p, &x, &ybar, &zbar, rho, cfg)?;
        if inner.stalled {
            stalls += 1;
        }
        if let Some(last) = records.last_mut() {
            last.inner_iters = inner.iterations;
            last.inner_grad_norm = inner.grad_norm;
            last.inner_stalled = inner.stalled;
        }
        let x_next = inner.x;

        let u_next = u_measure(p, &x_next, &zbar, rho)?;
        let rho_next = rho_update(rho, u_next, u, cfg);

        let g = g_checked(p, &x_next)?;
        y = ybar.iter().zip(&g).map(|(yb, g)| yb - rho * g).collect();
        let mut t = zbar.clone();
        t.axpy(-rho, &x_checked(p, &x_next)?);
        z = eig_sym(&t)?.positive_part();
        ybar = box_project(&y, cfg.ymax);
        let zmax = cfg.zmax;
        zbar = eig_sym(&z)?.reconstruct_with(|l| l.clamp(0.0, zmax));

        x = x_next;
        u = u_next;
        rho = rho_next;
        k += 1;
    };
    let solution = Triplet::new(x, y, z);
    let diagnostics = akkt_takkt_diagnostics(p, core::slice::from_ref(&solution), cfg.eps)?;
    Ok(AlReport {
        solution,
        y_bar: ybar,
        z_bar: zbar,
        status,
        iterations: k,
        residuals: res,
        rho,
        inner_stalls: stalls,
        diagnostics,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::model::tests::scalar_problem;
    use crate::model::CallbackProblem;
    use alloc::vec;

    #[test]
    fn solves_scalar_bound_problem() {
        let p = scalar_problem();
        let v0 = Triplet::new(vec![1.0], vec![], SymMatrix::zeros(1));
        let rep = al_solve(&p, &v0, &AlConfig::default()).unwrap();
        assert!(matches!(
            rep.status,
            TerminationStatus::ResidualConverged | TerminationStatus::ApproxKkt
        ));
        assert!(rep.solution.x[0].abs() <= 1e-6);
    }

    #[test]
    fn rho_update_examples() {
        let cfg = AlConfig::default();
        assert_eq!(rho_update(10.0, 0.4, 1.0, &cfg), 10.0);
        assert_eq!(rho_update(10.0, 0.6, 1.0, &cfg), 20.0);
    }

    #[test]
    fn multiplier_update_example() {
        // ȳ = 0, ρ = 10, g(x_{k+1}) = 0.2 → y = −2
        let p = CallbackProblem::new(1, 1, |_| 0.0, |_| vec![0.0], |_| SymMatrix::identity(1))
            .with_g(1, |_| vec![0.2], |_| DenseMatrix::zeros(1, 1));
        let cfg = AlConfig {
            k_max: 1,
            ..AlConfig::default()
        };
        let rep = al_solve(&p, &Triplet::zeros(&p), &cfg).unwrap();
        assert_eq!(rep.solution.y, [-2.0]);
        assert_eq!(box_project(&[-2e7], cfg.ymax), [-1e6]);
    }

    #[test]
    fn inner_min_quadratic() {
        // f = 2‖x − a‖², nothing else active
        let p = CallbackProblem::new(
            2,
            1,
            |x| 2.0 * ((x[0] - 1.0).powi(2) + (x[1] + 3.0).powi(2)),
            |x| vec![4.0 * (x[0] - 1.0), 4.0 * (x[1] + 3.0)],
            |_| SymMatrix::identity(1),
        );
        let r = al_inner_min(&p, &[0.0, 0.0], &[], &SymMatrix::zeros(1), 10.0, &AlConfig::default())
            .unwrap();
        assert!(!r.stalled);
        assert!(r.iterations <= 3);
        assert!((r.x[0] - 1.0).abs() < 1e-10 && (r.x[1] + 3.0).abs() < 1e-10);
    }

    #[test]
    fn inner_min_at_kkt_point_returns_immediately() {
        let p = scalar_problem();
        // x = 0, Z̄ = 1: gradient 1 − [1 − 10·0]_+ = 0
        let r = al_inner_min(&p, &[0.0], &[], &SymMatrix::identity(1), 10.0, &AlConfig::default())
            .unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, [0.0]);
    }
}
