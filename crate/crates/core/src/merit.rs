//! The merit function
//!
//! ```text
//! F(x; σ, y, Z) = f(x) + (1/2σ)‖σy − g(x)‖² + (1/2σ)‖[σZ − X(x)]_+‖_F²
//! ```
//!
//! and the augmented Lagrangian `F̃ = F − (σ/2)(‖y‖² + ‖Z‖_F²)`.

use alloc::vec::Vec;

use crate::dense;
use crate::error::{check_dim, Error, Result};
use crate::model::{
    a_adj_checked, f_checked, g_checked, grad_f_checked, jac_g_checked, x_checked, NsdpProblem,
    Triplet,
};
use crate::symmat::{psd_project, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct MeritContext {
    pub sigma: f64,
    pub y: Vec<f64>,
    pub z: SymMatrix,
}

impl MeritContext {
    pub fn new(sigma: f64, y: Vec<f64>, z: SymMatrix) -> Result<Self> {
        let ctx = Self { sigma, y, z };
        ctx.validate()?;
        Ok(ctx)
    }

    fn validate(&self) -> Result<()> {
        if self.sigma > 0.0 && self.sigma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "sigma must be positive, got {}",
                self.sigma
            )))
        }
    }

    fn check<P: NsdpProblem + ?Sized>(&self, p: &P, x: &[f64]) -> Result<()> {
        self.validate()?;
        check_dim("x", p.n(), x.len())?;
        check_dim("MeritContext::y", p.m(), self.y.len())?;
        check_dim("MeritContext::Z", p.d(), self.z.dim())
    }
}

/// Pieces shared by `F` and `∇F`: `σy − g(x)` and `[σZ − X(x)]_+`.
struct Penalty {
    eq: Vec<f64>,
    cone: SymMatrix,
}

fn penalty<P: NsdpProblem + ?Sized>(p: &P, x: &[f64], ctx: &MeritContext) -> Result<Penalty> {
    let g = g_checked(p, x)?;
    let eq: Vec<f64> = ctx.y.iter().zip(&g).map(|(y, g)| ctx.sigma * y - g).collect();
    let mut shifted = ctx.z.scale(ctx.sigma);
    shifted.axpy(-1.0, &x_checked(p, x)?);
    Ok(Penalty {
        eq,
        cone: psd_project(&shifted)?,
    })
}

fn value_from(f: f64, pen: &Penalty, sigma: f64) -> f64 {
    f + (dense::dot(&pen.eq, &pen.eq) + pen.cone.dot(&pen.cone)) / (2.0 * sigma)
}

pub fn merit_f<P: NsdpProblem + ?Sized>(p: &P, x: &[f64], ctx: &MeritContext) -> Result<f64> {
    ctx.check(p, x)?;
    let f = f_checked(p, x)?;
    Ok(value_from(f, &penalty(p, x, ctx)?, ctx.sigma))
}

/// `∇F = ∇f − ∇g (y − g/σ) − 𝒜*[Z − X/σ]_+`
pub fn grad_merit_f<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    ctx: &MeritContext,
) -> Result<Vec<f64>> {
    Ok(merit_with_grad(p, x, ctx)?.1)
}

/// `(F, ∇F)` from one evaluation of `g`, `X` and one eigendecomposition.
pub fn merit_with_grad<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    ctx: &MeritContext,
) -> Result<(f64, Vec<f64>)> {
    ctx.check(p, x)?;
    let f = f_checked(p, x)?;
    let pen = penalty(p, x, ctx)?;
    let inv = 1.0 / ctx.sigma;
    let mut grad = grad_f_checked(p, x)?;
    if p.m() > 0 {
        // y − g/σ = (σy − g)/σ
        let s = dense::scaled(inv, &pen.eq);
        dense::axpy(-1.0, &jac_g_checked(p, x)?.mul_vec(&s), &mut grad);
    }
    // [Z − X/σ]_+ = [σZ − X]_+ / σ
    let adj = a_adj_checked(p, x, &pen.cone)?;
    dense::axpy(-inv, &adj, &mut grad);
    Ok((value_from(f, &pen, ctx.sigma), grad))
}

/// `F̃(x, y, Z; σ) = F(x; σ, y, Z) − (σ/2)(‖y‖² + ‖Z‖_F²)`
pub fn aug_lagrangian<P: NsdpProblem + ?Sized>(p: &P, v: &Triplet, sigma: f64) -> Result<f64> {
    let ctx = MeritContext::new(sigma, v.y.clone(), v.z.clone())?;
    let f = merit_f(p, &v.x, &ctx)?;
    Ok(f - 0.5 * sigma * (dense::dot(&v.y, &v.y) + v.z.dot(&v.z)))
}
