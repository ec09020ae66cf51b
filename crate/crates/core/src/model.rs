//! Problem interface and point-wise quantities: Lagrangian, residuals,
//! feasibility measure and the sequential-optimality diagnostics.
//!
//! The problem is
//!
//! ```text
//! minimize f(x)  subject to  g(x) = 0,  X(x) ⪰ O
//! ```
//!
//! with `x ∈ R^n`, `g: R^n → R^m` and `X: R^n → S^d`. `A_i(x) = ∂X/∂x_i`,
//! `𝒜(x)u = Σ u_i A_i(x)` and `𝒜*(x)U = (⟨A_i(x), U⟩)_i`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{self, DenseMatrix};
use crate::error::{check_dim, Error, Result};
use crate::symmat::{eig_sym, SymMatrix};

pub trait NsdpProblem {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn d(&self) -> usize;

    fn eval_f(&self, x: &[f64]) -> f64;
    fn grad_f(&self, x: &[f64]) -> Vec<f64>;
    fn eval_g(&self, x: &[f64]) -> Vec<f64>;
    /// `n x m`, column `j` is `∇g_j(x)`.
    fn jac_g(&self, x: &[f64]) -> DenseMatrix;
    fn eval_x(&self, x: &[f64]) -> SymMatrix;
    fn apply_a(&self, x: &[f64], u: &[f64]) -> SymMatrix;
    fn apply_a_adj(&self, x: &[f64], u: &SymMatrix) -> Vec<f64>;

    /// `A_1(x), ..., A_n(x)`. The default probes `apply_a` with unit vectors.
    fn a_basis(&self, x: &[f64]) -> Vec<SymMatrix> {
        let n = self.n();
        let mut e = vec![0.0; n];
        (0..n)
            .map(|i| {
                e[i] = 1.0;
                let a = self.apply_a(x, &e);
                e[i] = 0.0;
                a
            })
            .collect()
    }

    /// `∇²_xx L(x, y, Z)` when available.
    fn hess_lagrangian(&self, _x: &[f64], _y: &[f64], _z: &SymMatrix) -> Option<SymMatrix> {
        None
    }
}

impl<P: NsdpProblem + ?Sized> NsdpProblem for &P {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn m(&self) -> usize {
        (**self).m()
    }
    fn d(&self) -> usize {
        (**self).d()
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        (**self).eval_f(x)
    }
    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad_f(x)
    }
    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        (**self).eval_g(x)
    }
    fn jac_g(&self, x: &[f64]) -> DenseMatrix {
        (**self).jac_g(x)
    }
    fn eval_x(&self, x: &[f64]) -> SymMatrix {
        (**self).eval_x(x)
    }
    fn apply_a(&self, x: &[f64], u: &[f64]) -> SymMatrix {
        (**self).apply_a(x, u)
    }
    fn apply_a_adj(&self, x: &[f64], u: &SymMatrix) -> Vec<f64> {
        (**self).apply_a_adj(x, u)
    }
    fn a_basis(&self, x: &[f64]) -> Vec<SymMatrix> {
        (**self).a_basis(x)
    }
    fn hess_lagrangian(&self, x: &[f64], y: &[f64], z: &SymMatrix) -> Option<SymMatrix> {
        (**self).hess_lagrangian(x, y, z)
    }
}

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Box<dyn Fn(&[f64]) -> DenseMatrix + Send + Sync>;
type MatFn = Box<dyn Fn(&[f64]) -> SymMatrix + Send + Sync>;
type OpFn = Box<dyn Fn(&[f64], &[f64]) -> SymMatrix + Send + Sync>;
type AdjFn = Box<dyn Fn(&[f64], &SymMatrix) -> Vec<f64> + Send + Sync>;
type HessFn = Box<dyn Fn(&[f64], &[f64], &SymMatrix) -> SymMatrix + Send + Sync>;

/// A problem assembled from closures. `g` defaults to the empty map.
///
/// ```
/// use nsdp_core::model::CallbackProblem;
/// use nsdp_core::SymMatrix;
///
/// // min x  s.t.  x >= 0
/// let p = CallbackProblem::new(1, 1, |x| x[0], |_| vec![1.0], |x| SymMatrix::from_diag(&[x[0]]))
///     .with_a(|_, u| SymMatrix::from_diag(&[u[0]]), |_, u| vec![u.get(0, 0)]);
/// ```
pub struct CallbackProblem {
    n: usize,
    m: usize,
    d: usize,
    f: ScalarFn,
    grad_f: VectorFn,
    g: VectorFn,
    jac_g: JacFn,
    x: MatFn,
    a: Option<OpFn>,
    a_adj: Option<AdjFn>,
    hess: Option<HessFn>,
}

impl CallbackProblem {
    pub fn new(
        n: usize,
        d: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        x: impl Fn(&[f64]) -> SymMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            m: 0,
            d,
            f: Box::new(f),
            grad_f: Box::new(grad_f),
            g: Box::new(|_| Vec::new()),
            jac_g: Box::new(move |_| DenseMatrix::zeros(n, 0)),
            x: Box::new(x),
            a: None,
            a_adj: None,
            hess: None,
        }
    }

    pub fn with_g(
        mut self,
        m: usize,
        g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jac_g: impl Fn(&[f64]) -> DenseMatrix + Send + Sync + 'static,
    ) -> Self {
        self.m = m;
        self.g = Box::new(g);
        self.jac_g = Box::new(jac_g);
        self
    }

    /// Without this, `𝒜(x)` is taken as zero (constant `X`).
    pub fn with_a(
        mut self,
        a: impl Fn(&[f64], &[f64]) -> SymMatrix + Send + Sync + 'static,
        a_adj: impl Fn(&[f64], &SymMatrix) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.a = Some(Box::new(a));
        self.a_adj = Some(Box::new(a_adj));
        self
    }

    pub fn with_hessian(
        mut self,
        h: impl Fn(&[f64], &[f64], &SymMatrix) -> SymMatrix + Send + Sync + 'static,
    ) -> Self {
        self.hess = Some(Box::new(h));
        self
    }
}

impl NsdpProblem for CallbackProblem {
    fn n(&self) -> usize {
        self.n
    }
    fn m(&self) -> usize {
        self.m
    }
    fn d(&self) -> usize {
        self.d
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        (self.grad_f)(x)
    }
    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        (self.g)(x)
    }
    fn jac_g(&self, x: &[f64]) -> DenseMatrix {
        (self.jac_g)(x)
    }
    fn eval_x(&self, x: &[f64]) -> SymMatrix {
        (self.x)(x)
    }
    fn apply_a(&self, x: &[f64], u: &[f64]) -> SymMatrix {
        match &self.a {
            Some(a) => a(x, u),
            None => SymMatrix::zeros(self.d),
        }
    }
    fn apply_a_adj(&self, x: &[f64], u: &SymMatrix) -> Vec<f64> {
        match &self.a_adj {
            Some(a) => a(x, u),
            None => vec![0.0; self.n],
        }
    }
    fn hess_lagrangian(&self, x: &[f64], y: &[f64], z: &SymMatrix) -> Option<SymMatrix> {
        self.hess.as_ref().map(|h| h(x, y, z))
    }
}

/// Primal-dual point `v = (x, y, Z)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Triplet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: SymMatrix,
}

impl Triplet {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: SymMatrix) -> Self {
        Self { x, y, z }
    }

    /// `x = 0, y = 0, Z = O` for the given problem.
    pub fn zeros<P: NsdpProblem + ?Sized>(p: &P) -> Self {
        Self {
            x: vec![0.0; p.n()],
            y: vec![0.0; p.m()],
            z: SymMatrix::zeros(p.d()),
        }
    }

    pub fn check<P: NsdpProblem + ?Sized>(&self, p: &P) -> Result<()> {
        check_dim("Triplet::x", p.n(), self.x.len())?;
        check_dim("Triplet::y", p.m(), self.y.len())?;
        check_dim("Triplet::Z", p.d(), self.z.dim())
    }

    /// `max{‖y‖, ‖Z‖_F}`
    pub fn multiplier_norm(&self) -> f64 {
        dense::norm(&self.y).max(self.z.norm())
    }
}

// Checked callback wrappers: every value leaving a callback is verified finite.

pub(crate) fn f_checked<P: NsdpProblem + ?Sized>(p: &P, x: &[f64]) -> Result<f64> {
    let v = p.eval_f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { callback: "eval_f" })
    }
}

pub(crate) fn grad_f_checked<P: NsdpProblem + ?Sized>(p: &P, x: &[f64]) -> Result<Vec<f64>> {
    let v = p.grad_f(x);
    check_dim("grad_f", p.n(), v.len())?;
    finite_vec(v, "grad_f")
}

pub(crate) fn g_checked<P: NsdpProblem + ?Sized>(p: &P, x: &[f64]) -> Result<Vec<f64>> {
    let v = p.eval_g(x);
    check_dim("eval_g", p.m(), v.len())?;
    finite_vec(v, "eval_g")
}

pub(crate) fn jac_g_checked<P: NsdpProblem + ?Sized>(p: &P, x: &[f64]) -> Result<DenseMatrix> {
    let j = p.jac_g(x);
    check_dim("jac_g rows", p.n(), j.rows())?;
    check_dim("jac_g cols", p.m(), j.cols())?;
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::NonFinite { callback: "jac_g" })
    }
}

pub(crate) fn x_checked<P: NsdpProblem + ?Sized>(p: &P, x: &[f64]) -> Result<SymMatrix> {
    let m = p.eval_x(x);
    check_dim("eval_X", p.d(), m.dim())?;
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::NonFinite { callback: "eval_X" })
    }
}

pub(crate) fn a_adj_checked<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    u: &SymMatrix,
) -> Result<Vec<f64>> {
    let v = p.apply_a_adj(x, u);
    check_dim("apply_A_adj", p.n(), v.len())?;
    finite_vec(v, "apply_A_adj")
}

pub(crate) fn a_basis_checked<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
) -> Result<Vec<SymMatrix>> {
    let b = p.a_basis(x);
    check_dim("A basis length", p.n(), b.len())?;
    for a in &b {
        check_dim("A basis element", p.d(), a.dim())?;
        if !a.is_finite() {
            return Err(Error::NonFinite {
                callback: "apply_A",
            });
        }
    }
    Ok(b)
}

fn finite_vec(v: Vec<f64>, callback: &'static str) -> Result<Vec<f64>> {
    if dense::all_finite(&v) {
        Ok(v)
    } else {
        Err(Error::NonFinite { callback })
    }
}

/// `L(v) = f(x) − ⟨g(x), y⟩ − ⟨X(x), Z⟩`
pub fn lagrangian<P: NsdpProblem + ?Sized>(p: &P, v: &Triplet) -> Result<f64> {
    v.check(p)?;
    let f = f_checked(p, &v.x)?;
    let g = g_checked(p, &v.x)?;
    let xm = x_checked(p, &v.x)?;
    Ok(f - dense::dot(&g, &v.y) - xm.dot(&v.z))
}

/// `∇f(x) − ∇g(x) y − 𝒜*(x) Z`
pub fn grad_x_lagrangian<P: NsdpProblem + ?Sized>(p: &P, v: &Triplet) -> Result<Vec<f64>> {
    v.check(p)?;
    grad_lag_unchecked(p, &v.x, &v.y, &v.z)
}

pub(crate) fn grad_lag_unchecked<P: NsdpProblem + ?Sized>(
    p: &P,
    x: &[f64],
    y: &[f64],
    z: &SymMatrix,
) -> Result<Vec<f64>> {
    let mut out = grad_f_checked(p, x)?;
    if p.m() > 0 {
        let jy = jac_g_checked(p, x)?.mul_vec(y);
        dense::axpy(-1.0, &jy, &mut out);
    }
    let az = a_adj_checked(p, x, z)?;
    dense::axpy(-1.0, &az, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub r_v: f64,
    pub r_o: f64,
    pub r: f64,
    pub phi: f64,
    pub psi: f64,
    pub grad_lag_norm: f64,
    /// `⟨X(x), Z⟩`
    pub trace_comp: f64,
    pub min_eig_x: f64,
}

/// Feasibility residual `r_V`, optimality residual `r_O`, and the weighted
/// pair `Φ = r_V + κ r_O`, `Ψ = κ r_V + r_O`.
pub fn residuals<P: NsdpProblem + ?Sized>(p: &P, v: &Triplet, kappa: f64) -> Result<ResidualReport> {
    v.check(p)?;
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "kappa must lie in (0, 1), got {kappa}"
        )));
    }
    let g = g_checked(p, &v.x)?;
    let xm = x_checked(p, &v.x)?;
    let min_eig_x = eig_sym(&xm)?.lambda.last().copied().unwrap_or(0.0);
    let grad = grad_lag_unchecked(p, &v.x, &v.y, &v.z)?;
    let r_v = dense::norm(&g) + (-min_eig_x).max(0.0);
    let trace_comp = xm.dot(&v.z);
    let grad_lag_norm = dense::norm(&grad);
    let r_o = grad_lag_norm + trace_comp.abs();
    Ok(ResidualReport {
        r_v,
        r_o,
        r: r_v + r_o,
        phi: r_v + kappa * r_o,
        psi: kappa * r_v + r_o,
        grad_lag_norm,
        trace_comp,
        min_eig_x,
    })
}

/// `h(x) = ½‖g(x)‖² + ½‖[−X(x)]_+‖_F²`
pub fn feasibility_h<P: NsdpProblem + ?Sized>(p: &P, x: &[f64]) -> Result<f64> {
    check_dim("x", p.n(), x.len())?;
    let g = g_checked(p, x)?;
    let neg = eig_sym(&x_checked(p, x)?)?.reconstruct_with(|l| (-l).max(0.0));
    Ok(0.5 * dense::dot(&g, &g) + 0.5 * neg.dot(&neg))
}

/// `∇h(x) = ∇g(x) g(x) − 𝒜*(x)[−X(x)]_+`
pub fn grad_h<P: NsdpProblem + ?Sized>(p: &P, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("x", p.n(), x.len())?;
    let g = g_checked(p, x)?;
    let mut out = if p.m() > 0 {
        jac_g_checked(p, x)?.mul_vec(&g)
    } else {
        vec![0.0; p.n()]
    };
    let neg = eig_sym(&x_checked(p, x)?)?.reconstruct_with(|l| (-l).max(0.0));
    dense::axpy(-1.0, &a_adj_checked(p, x, &neg)?, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SequentialLabel {
    Both,
    TakktOnly,
    AkktOnly,
    Neither,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AkktDiagnostics {
    pub eps: f64,
    pub grad_lag_norm: f64,
    pub abs_trace_comp: f64,
    pub r_v: f64,
    /// Every eigenvalue of `X` above `eps` pairs with a `Z` entry of magnitude `≤ eps`.
    pub eigen_comp: bool,
    /// Largest paired `|⟨q_j, Z q_j⟩|` over the eigenvectors with `λ_j(X) > eps`.
    pub worst_paired_z: f64,
    pub takkt: bool,
    pub akkt: bool,
    pub label: SequentialLabel,
}

/// Finite-precision AKKT/TAKKT witnesses at the last triplet of `history`.
///
/// `Z` is rotated into the eigenbasis of `X(x)` and its diagonal read off as
/// the paired eigenvalue estimates. This reports magnitudes; it cannot
/// certify the exact-zero tail the sequential definition asks for.
pub fn akkt_takkt_diagnostics<P: NsdpProblem + ?Sized>(
    p: &P,
    history: &[Triplet],
    eps: f64,
) -> Result<AkktDiagnostics> {
    let v = history
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty iterate history".into()))?;
    v.check(p)?;
    let g = g_checked(p, &v.x)?;
    let xm = x_checked(p, &v.x)?;
    let ex = eig_sym(&xm)?;
    let grad_lag_norm = dense::norm(&grad_lag_unchecked(p, &v.x, &v.y, &v.z)?);
    let abs_trace_comp = xm.dot(&v.z).abs();
    let r_v = dense::norm(&g) + (-ex.lambda.last().copied().unwrap_or(0.0)).max(0.0);

    let rotated = ex.rotate_in(&v.z);
    let d = p.d();
    let mut worst_paired_z: f64 = 0.0;
    for j in 0..d {
        if ex.lambda[j] > eps {
            worst_paired_z = worst_paired_z.max(rotated[j * d + j].abs());
        }
    }
    let eigen_comp = worst_paired_z <= eps;
    let stationary = grad_lag_norm <= eps && r_v <= eps;
    let takkt = stationary && abs_trace_comp <= eps;
    let akkt = stationary && eigen_comp;
    let label = match (takkt, akkt) {
        (true, true) => SequentialLabel::Both,
        (true, false) => SequentialLabel::TakktOnly,
        (false, true) => SequentialLabel::AkktOnly,
        (false, false) => SequentialLabel::Neither,
    };
    Ok(AkktDiagnostics {
        eps,
        grad_lag_norm,
        abs_trace_comp,
        r_v,
        eigen_comp,
        worst_paired_z,
        takkt,
        akkt,
        label,
    })
}
