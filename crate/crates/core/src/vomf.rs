//! Classification of outer steps into V-, O-, M- and F-iterates, with the
//! matching multiplier and control-parameter updates.

use alloc::vec::Vec;

use crate::dense;
use crate::error::{check_dim, Error, Result};
use crate::model::{g_checked, residuals, x_checked, NsdpProblem, Triplet};
use crate::symmat::{eig_sym, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum IterateKind {
    V,
    O,
    M,
    F,
}

impl IterateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IterateKind::V => "V",
            IterateKind::O => "O",
            IterateKind::M => "M",
            IterateKind::F => "F",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VomfState {
    pub y: Vec<f64>,
    pub z: SymMatrix,
    pub phi: f64,
    pub psi: f64,
    pub gamma: f64,
}

/// Fixed parameters of the classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VomfParams {
    pub kappa: f64,
    pub ymax: f64,
    pub zmax: f64,
}

/// Component-wise clamp to `[−ymax, ymax]`.
pub fn box_project(y: &[f64], ymax: f64) -> Vec<f64> {
    y.iter().map(|v| v.clamp(-ymax, ymax)).collect()
}

/// One VOMF transition. `vbar = (x_{k+1}, ȳ_{k+1}, Z̄_{k+1})` and
/// `grad_f_next = ∇F(x_{k+1}; σ_k, y_k, Z_k)`.
pub fn vomf_step<P: NsdpProblem + ?Sized>(
    p: &P,
    vbar: &Triplet,
    state: &VomfState,
    sigma: f64,
    params: &VomfParams,
    grad_f_next: &[f64],
) -> Result<(VomfState, IterateKind)> {
    if !(params.ymax > 0.0 && params.zmax > 0.0) {
        return Err(Error::InvalidParameter("ymax and zmax must be positive".into()));
    }
    check_dim("gradF", p.n(), grad_f_next.len())?;
    let rep = residuals(p, vbar, params.kappa)?;
    if rep.phi <= 0.5 * state.phi {
        let next = VomfState {
            y: vbar.y.clone(),
            z: vbar.z.clone(),
            phi: 0.5 * state.phi,
            ..state.clone()
        };
        return Ok((next, IterateKind::V));
    }
    if rep.psi <= 0.5 * state.psi {
        let next = VomfState {
            y: vbar.y.clone(),
            z: vbar.z.clone(),
            psi: 0.5 * state.psi,
            ..state.clone()
        };
        return Ok((next, IterateKind::O));
    }
    if dense::norm(grad_f_next) <= state.gamma {
        let inv = 1.0 / sigma;
        let g = g_checked(p, &vbar.x)?;
        let y: Vec<f64> = state.y.iter().zip(&g).map(|(y, g)| y - inv * g).collect();
        let mut t = state.z.clone();
        t.axpy(-inv, &x_checked(p, &vbar.x)?);
        // Π_D([T]_+) clamps the spectrum of T to [0, zmax] in one pass.
        let zmax = params.zmax;
        let z = eig_sym(&t)?.reconstruct_with(|l| l.clamp(0.0, zmax));
        let next = VomfState {
            y: box_project(&y, params.ymax),
            z,
            gamma: 0.5 * state.gamma,
            ..state.clone()
        };
        return Ok((next, IterateKind::M));
    }
    Ok((state.clone(), IterateKind::F))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::model::CallbackProblem;
    use alloc::vec;

    /// f = 0, g ≡ gval with zero Jacobian, X(x) = x.
    fn toy(gval: f64) -> CallbackProblem {
        CallbackProblem::new(1, 1, |_| 0.0, |_| vec![0.0], |x| SymMatrix::from_diag(&[x[0]]))
            .with_a(|_, u| SymMatrix::from_diag(&[u[0]]), |_, u| vec![u.get(0, 0)])
            .with_g(
                1,
                move |_| vec![gval],
                |_| DenseMatrix::from_row_major(1, 1, vec![0.0]),
            )
    }

    fn params() -> VomfParams {
        VomfParams {
            kappa: 1e-5,
            ymax: 1e6,
            zmax: 1e6,
        }
    }

    fn state(phi: f64, psi: f64, gamma: f64) -> VomfState {
        VomfState {
            y: vec![0.0],
            z: SymMatrix::zeros(1),
            phi,
            psi,
            gamma,
        }
    }

    #[test]
    fn v_iterate() {
        // r_V = 0.4, r_O = 0  →  Φ = 0.4
        let p = toy(0.4);
        let vbar = Triplet::new(vec![1.0], vec![3.0], SymMatrix::zeros(1));
        let (next, kind) = vomf_step(&p, &vbar, &state(1.0, 1.0, 0.1), 0.1, &params(), &[0.0]).unwrap();
        assert_eq!(kind, IterateKind::V);
        assert_eq!(next.phi, 0.5);
        assert_eq!(next.y, vbar.y);
        assert_eq!(next.z, vbar.z);
        assert_eq!((next.psi, next.gamma), (1.0, 0.1));
    }

    #[test]
    fn m_iterate_clamps() {
        // Φ = Ψ ≈ 10 fail; y − g/σ = 0 − (−2e5)/0.1 = 2e6 → clamped to 1e6
        let p = toy(-2e5);
        let vbar = Triplet::new(vec![1.0], vec![0.0], SymMatrix::zeros(1));
        let st = state(1.0, 1.0, 0.1);
        let (next, kind) = vomf_step(&p, &vbar, &st, 0.1, &params(), &[0.05]).unwrap();
        assert_eq!(kind, IterateKind::M);
        assert_eq!(next.y, [1e6]);
        assert_eq!(next.gamma, 0.05);
        assert_eq!((next.phi, next.psi), (1.0, 1.0));
    }

    #[test]
    fn m_iterate_spectral_clamp() {
        // Z − X/σ = −(−3e5)/0.1 = 3e6 → 1e6
        let p = toy(-2e5);
        let vbar = Triplet::new(vec![-3e5], vec![0.0], SymMatrix::zeros(1));
        let (next, kind) = vomf_step(&p, &vbar, &state(1.0, 1.0, 0.1), 0.1, &params(), &[0.0]).unwrap();
        assert_eq!(kind, IterateKind::M);
        assert_eq!(next.z, SymMatrix::from_diag(&[1e6]));
    }

    #[test]
    fn f_iterate_is_identity() {
        let p = toy(10.0);
        let vbar = Triplet::new(vec![1.0], vec![5.0], SymMatrix::from_diag(&[5.0]));
        let st = state(1.0, 1.0, 0.1);
        let (next, kind) = vomf_step(&p, &vbar, &st, 0.1, &params(), &[1.0]).unwrap();
        assert_eq!(kind, IterateKind::F);
        assert_eq!(next, st);
    }

    #[test]
    fn equality_takes_earlier_branch() {
        // Φ = 0.5 exactly equals φ/2
        let p = toy(0.5);
        let vbar = Triplet::new(vec![1.0], vec![0.0], SymMatrix::zeros(1));
        let (_, kind) = vomf_step(&p, &vbar, &state(1.0, 1.0, 0.1), 0.1, &params(), &[0.0]).unwrap();
        assert_eq!(kind, IterateKind::V);
    }

    #[test]
    fn box_projection() {
        assert_eq!(box_project(&[0.5, -2e6], 1e6), [0.5, -1e6]);
        assert_eq!(box_project(&[0.1, -0.2], 1.0), [0.1, -0.2]);
    }
}
