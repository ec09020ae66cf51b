//! Seeded generators for the four benchmark families.
//!
//! * P1: `min ⟨C, X⟩` s.t. `X_jj = 1`, `⟨eeᵀ, X⟩ = 0`, `X ⪰ O`
//! * P2: `min Σ_j α_j ⟨v_j v_jᵀ, X⟩` s.t. `⟨v_j v_jᵀ, X⟩ = b_j (j ≤ M)`, `X ⪰ O`
//! * P3: Gaussian channel capacity, negated to a minimization
//! * P4: nearest correlation matrix with `X − ηI ⪰ O`
//!
//! Matrix variables enter as `x = svec(X)`. An instance is fully described
//! by its [`InstanceData`]; the PRNG only produces that data.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dense::{self, DenseMatrix};
use crate::error::{check_dim, Error, Result};
use crate::model::NsdpProblem;
use crate::symmat::{smat, svec, svec_index, tri_len, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Family {
    P1,
    P2,
    P3,
    P4,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::P1 => "p1",
            Family::P2 => "p2",
            Family::P3 => "p3",
            Family::P4 => "p4",
        }
    }
}

pub const DEFAULT_ETA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstanceSpec {
    pub family: Family,
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub n: usize,
    #[cfg_attr(
        feature = "serde",
        serde(rename = "M", default, skip_serializing_if = "Option::is_none")
    )]
    pub m: Option<usize>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub eta: Option<f64>,
    pub seed: u64,
    /// P2 only: index of the zeroed entry of α (defaults to the last).
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub alpha_zero_index: Option<usize>,
}

impl InstanceSpec {
    pub fn p1(n: usize, seed: u64) -> Self {
        Self::new(Family::P1, n, None, None, seed)
    }
    pub fn p2(n: usize, m: usize, seed: u64) -> Self {
        Self::new(Family::P2, n, Some(m), None, seed)
    }
    pub fn p3(n: usize, seed: u64) -> Self {
        Self::new(Family::P3, n, None, None, seed)
    }
    pub fn p4(n: usize, eta: f64, seed: u64) -> Self {
        Self::new(Family::P4, n, None, Some(eta), seed)
    }

    fn new(family: Family, n: usize, m: Option<usize>, eta: Option<f64>, seed: u64) -> Self {
        Self {
            family,
            n,
            m,
            eta,
            seed,
            alpha_zero_index: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        match self.family {
            Family::P1 | Family::P4 if self.n < 2 => {
                bad(alloc::format!("{} needs N >= 2", self.family.as_str()))
            }
            Family::P3 if self.n < 1 => bad("p3 needs N >= 1".into()),
            Family::P2 => match self.m {
                None => bad("p2 needs M".into()),
                Some(m) if m == 0 || m > self.n => {
                    bad(alloc::format!("p2 needs 0 < M <= N, got M = {m}, N = {}", self.n))
                }
                _ => match self.alpha_zero_index {
                    Some(i) if i >= self.n => {
                        bad(alloc::format!("alpha_zero_index {i} out of range"))
                    }
                    _ => Ok(()),
                },
            },
            Family::P4 => match self.eta {
                Some(e) if !(e > 0.0) => bad(alloc::format!("eta must be positive, got {e}")),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// `(n, m, d)` of the generated problem.
    pub fn dims(&self) -> (usize, usize, usize) {
        let nn = self.n;
        match self.family {
            Family::P1 => (tri_len(nn), nn + 1, nn),
            Family::P2 => (tri_len(nn), self.m.unwrap_or(0), nn),
            Family::P3 => (2 * nn, 0, 4 * nn + 1),
            Family::P4 => (tri_len(nn), nn, nn),
        }
    }
}

/// Family constants as flat row-major arrays.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum InstanceData {
    #[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
    P1 { c: Vec<f64> },
    P2 {
        alpha: Vec<f64>,
        b: Vec<f64>,
        #[cfg_attr(feature = "serde", serde(rename = "V"))]
        v: Vec<f64>,
    },
    P3 { a: Vec<f64>, r: Vec<f64> },
    #[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
    P4 { a: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub spec: InstanceSpec,
    pub data: InstanceData,
}

impl GeneratedInstance {
    pub fn generate(spec: &InstanceSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let nn = spec.n;
        let data = match spec.family {
            Family::P1 => InstanceData::P1 {
                c: random_symmetric(&mut rng, nn, |rng, _| rng.random_range(-1.0..=1.0)),
            },
            Family::P2 => {
                let m = spec.m.unwrap_or(0);
                let zero = spec.alpha_zero_index.unwrap_or(nn - 1);
                let alpha = (0..nn)
                    .map(|j| {
                        let v: f64 = rng.random_range(0.0..=1.0);
                        if j == zero {
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect();
                let mut b = vec![1.0; m];
                b[0] = 0.0;
                InstanceData::P2 {
                    alpha,
                    b,
                    v: random_orthogonal(&mut rng, nn),
                }
            }
            Family::P3 => {
                let a = (0..nn).map(|_| rng.random_range(0.0..=1.0)).collect();
                let r = (0..nn).map(|_| rng.random_range(0.0..=1.0)).collect();
                InstanceData::P3 { a, r }
            }
            Family::P4 => InstanceData::P4 {
                a: random_symmetric(&mut rng, nn, |rng, diag| {
                    if diag {
                        1.0
                    } else {
                        rng.random_range(-1.0..=1.0)
                    }
                }),
            },
        };
        Ok(Self {
            spec: spec.clone(),
            data,
        })
    }

    /// Rebuilds the problem from the stored data.
    pub fn problem(&self) -> Result<TestProblem> {
        TestProblem::from_data(&self.spec, &self.data)
    }
}

pub fn gen_p1(n: usize, seed: u64) -> Result<GeneratedInstance> {
    GeneratedInstance::generate(&InstanceSpec::p1(n, seed))
}

pub fn gen_p2(n: usize, m: usize, seed: u64) -> Result<GeneratedInstance> {
    GeneratedInstance::generate(&InstanceSpec::p2(n, m, seed))
}

pub fn gen_p3(n: usize, seed: u64) -> Result<GeneratedInstance> {
    GeneratedInstance::generate(&InstanceSpec::p3(n, seed))
}

pub fn gen_p4(n: usize, eta: f64, seed: u64) -> Result<GeneratedInstance> {
    GeneratedInstance::generate(&InstanceSpec::p4(n, eta, seed))
}

/// Row-major symmetric matrix; entries drawn for the lower triangle row by row.
fn random_symmetric(
    rng: &mut ChaCha8Rng,
    n: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng, bool) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = draw(rng, i == j);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    out
}

/// Gram–Schmidt on a Gaussian matrix (two passes), columns are the basis.
/// The implied `R` has a positive diagonal.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| g[i * n + j]).collect()).collect();
        let mut ok = true;
        for j in 0..n {
            let orig = dense::norm(&cols[j]);
            for _ in 0..2 {
                for k in 0..j {
                    let proj = dense::dot(&cols[k], &cols[j]);
                    let ck = cols[k].clone();
                    dense::axpy(-proj, &ck, &mut cols[j]);
                }
            }
            let nrm = dense::norm(&cols[j]);
            if !(nrm > 1e-8 * orig) {
                ok = false;
                break;
            }
            for v in cols[j].iter_mut() {
                *v /= nrm;
            }
        }
        if ok {
            let mut out = vec![0.0; n * n];
            for (j, c) in cols.iter().enumerate() {
                for i in 0..n {
                    out[i * n + j] = c[i];
                }
            }
            return out;
        }
    }
}

fn sym_from_row_major(n: usize, data: &[f64]) -> Result<SymMatrix> {
    SymMatrix::from_full(n, data)
}

/// Problems whose variable is `x = svec(X)` and whose conic block is
/// `smat(x) − shift·I`. P1, P2 and P4 share this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixVariableProblem {
    nn: usize,
    /// Linear part of the objective, `svec(C)`.
    c: Vec<f64>,
    /// Quadratic anchor: `f = ½‖x − a‖² + ⟨c, x⟩` when present.
    anchor: Option<Vec<f64>>,
    /// Equality rows `⟨a_j, x⟩ = b_j`.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    shift: f64,
}

impl MatrixVariableProblem {
    fn linear(&self, x: &[f64]) -> f64 {
        dense::dot(&self.c, x)
    }
}

impl NsdpProblem for MatrixVariableProblem {
    fn n(&self) -> usize {
        tri_len(self.nn)
    }
    fn m(&self) -> usize {
        self.rows.len()
    }
    fn d(&self) -> usize {
        self.nn
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        let mut f = self.linear(x);
        if let Some(a) = &self.anchor {
            let r = dense::sub(x, a);
            f += 0.5 * dense::dot(&r, &r);
        }
        f
    }
    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.c.clone();
        if let Some(a) = &self.anchor {
            dense::axpy(1.0, &dense::sub(x, a), &mut g);
        }
        g
    }
    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| dense::dot(r, x) - b)
            .collect()
    }
    fn jac_g(&self, _x: &[f64]) -> DenseMatrix {
        let n = self.n();
        let m = self.m();
        let mut j = DenseMatrix::zeros(n, m);
        for (col, r) in self.rows.iter().enumerate() {
            for (i, v) in r.iter().enumerate() {
                j.set(i, col, *v);
            }
        }
        j
    }
    fn eval_x(&self, x: &[f64]) -> SymMatrix {
        let mut m = smat(x).unwrap_or_else(|_| SymMatrix::zeros(self.nn));
        m.add_identity(-self.shift);
        m
    }
    fn apply_a(&self, _x: &[f64], u: &[f64]) -> SymMatrix {
        smat(u).unwrap_or_else(|_| SymMatrix::zeros(self.nn))
    }
    fn apply_a_adj(&self, _x: &[f64], u: &SymMatrix) -> Vec<f64> {
        svec(u)
    }
    fn a_basis(&self, _x: &[f64]) -> Vec<SymMatrix> {
        let n = self.n();
        let mut e = vec![0.0; n];
        (0..n)
            .map(|i| {
                e[i] = 1.0;
                let a = smat(&e).unwrap_or_else(|_| SymMatrix::zeros(self.nn));
                e[i] = 0.0;
                a
            })
            .collect()
    }
    fn hess_lagrangian(&self, _x: &[f64], _y: &[f64], _z: &SymMatrix) -> Option<SymMatrix> {
        let n = self.n();
        Some(if self.anchor.is_some() {
            SymMatrix::identity(n)
        } else {
            SymMatrix::zeros(n)
        })
    }
}

/// Gaussian channel capacity in the variables `(x_1..x_N, t_1..t_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProblem {
    a: Vec<f64>,
    sqrt_r: Vec<f64>,
    r: Vec<f64>,
}

impl ChannelProblem {
    fn nn(&self) -> usize {
        self.a.len()
    }
}

impl NsdpProblem for ChannelProblem {
    fn n(&self) -> usize {
        2 * self.nn()
    }
    fn m(&self) -> usize {
        0
    }
    fn d(&self) -> usize {
        4 * self.nn() + 1
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        let nn = self.nn();
        // log1p(t) is NaN for t < −1, which the solver treats as leaving the domain.
        -0.5 * x[nn..].iter().map(|t| libm::log1p(*t)).sum::<f64>()
    }
    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        let nn = self.nn();
        let mut g = vec![0.0; 2 * nn];
        for j in 0..nn {
            g[nn + j] = -0.5 / (1.0 + x[nn + j]);
        }
        g
    }
    fn eval_g(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn jac_g(&self, _x: &[f64]) -> DenseMatrix {
        DenseMatrix::zeros(self.n(), 0)
    }
    fn eval_x(&self, x: &[f64]) -> SymMatrix {
        let nn = self.nn();
        let mut m = SymMatrix::zeros(self.d());
        for j in 0..nn {
            m.set(2 * j, 2 * j, 1.0 - self.a[j] * x[nn + j]);
            m.set(2 * j + 1, 2 * j, self.sqrt_r[j]);
            m.set(2 * j + 1, 2 * j + 1, self.a[j] * x[j] + self.r[j]);
            m.set(2 * nn + j, 2 * nn + j, x[j]);
            m.set(3 * nn + j, 3 * nn + j, x[nn + j]);
        }
        let mean = x[..nn].iter().sum::<f64>() / nn as f64;
        m.set(4 * nn, 4 * nn, 1.0 - mean);
        m
    }
    fn apply_a(&self, _x: &[f64], u: &[f64]) -> SymMatrix {
        let nn = self.nn();
        let mut m = SymMatrix::zeros(self.d());
        for j in 0..nn {
            m.set(2 * j, 2 * j, -self.a[j] * u[nn + j]);
            m.set(2 * j + 1, 2 * j + 1, self.a[j] * u[j]);
            m.set(2 * nn + j, 2 * nn + j, u[j]);
            m.set(3 * nn + j, 3 * nn + j, u[nn + j]);
        }
        m.set(4 * nn, 4 * nn, -u[..nn].iter().sum::<f64>() / nn as f64);
        m
    }
    fn apply_a_adj(&self, _x: &[f64], u: &SymMatrix) -> Vec<f64> {
        let nn = self.nn();
        let last = u.get(4 * nn, 4 * nn) / nn as f64;
        let mut out = vec![0.0; 2 * nn];
        for j in 0..nn {
            out[j] = self.a[j] * u.get(2 * j + 1, 2 * j + 1) + u.get(2 * nn + j, 2 * nn + j) - last;
            out[nn + j] = -self.a[j] * u.get(2 * j, 2 * j) + u.get(3 * nn + j, 3 * nn + j);
        }
        out
    }
    fn hess_lagrangian(&self, x: &[f64], _y: &[f64], _z: &SymMatrix) -> Option<SymMatrix> {
        let nn = self.nn();
        let mut h = SymMatrix::zeros(2 * nn);
        for j in 0..nn {
            let s = 1.0 + x[nn + j];
            h.set(nn + j, nn + j, 0.5 / (s * s));
        }
        Some(h)
    }
}

/// Any of the four families.
#[derive(Debug, Clone, PartialEq)]
pub enum TestProblem {
    Matrix(MatrixVariableProblem),
    Channel(ChannelProblem),
}

impl TestProblem {
    pub fn from_data(spec: &InstanceSpec, data: &InstanceData) -> Result<Self> {
        spec.validate()?;
        let nn = spec.n;
        let unit_row = |i: usize| {
            let mut r = vec![0.0; tri_len(nn)];
            r[svec_index(i, i)] = 1.0;
            r
        };
        match (spec.family, data) {
            (Family::P1, InstanceData::P1 { c }) => {
                check_dim("P1 data C", nn * nn, c.len())?;
                let mut rows: Vec<Vec<f64>> = (0..nn).map(unit_row).collect();
                rows.push(svec(&sym_from_row_major(nn, &vec![1.0; nn * nn])?));
                let mut rhs = vec![1.0; nn];
                rhs.push(0.0);
                Ok(TestProblem::Matrix(MatrixVariableProblem {
                    nn,
                    c: svec(&sym_from_row_major(nn, c)?),
                    anchor: None,
                    rows,
                    rhs,
                    shift: 0.0,
                }))
            }
            (Family::P2, InstanceData::P2 { alpha, b, v }) => {
                let m = spec.m.unwrap_or(0);
                check_dim("P2 data alpha", nn, alpha.len())?;
                check_dim("P2 data b", m, b.len())?;
                check_dim("P2 data V", nn * nn, v.len())?;
                let proj = |j: usize| {
                    let mut a = SymMatrix::zeros(nn);
                    for r in 0..nn {
                        for s in 0..=r {
                            a.set(r, s, v[r * nn + j] * v[s * nn + j]);
                        }
                    }
                    svec(&a)
                };
                let mut c = vec![0.0; tri_len(nn)];
                for (j, aj) in alpha.iter().enumerate() {
                    dense::axpy(*aj, &proj(j), &mut c);
                }
                Ok(TestProblem::Matrix(MatrixVariableProblem {
                    nn,
                    c,
                    anchor: None,
                    rows: (0..m).map(proj).collect(),
                    rhs: b.clone(),
                    shift: 0.0,
                }))
            }
            (Family::P3, InstanceData::P3 { a, r }) => {
                check_dim("P3 data a", nn, a.len())?;
                check_dim("P3 data r", nn, r.len())?;
                Ok(TestProblem::Channel(ChannelProblem {
                    a: a.clone(),
                    sqrt_r: r.iter().map(|v| libm::sqrt(*v)).collect(),
                    r: r.clone(),
                }))
            }
            (Family::P4, InstanceData::P4 { a }) => {
                check_dim("P4 data A", nn * nn, a.len())?;
                Ok(TestProblem::Matrix(MatrixVariableProblem {
                    nn,
                    c: vec![0.0; tri_len(nn)],
                    anchor: Some(svec(&sym_from_row_major(nn, a)?)),
                    rows: (0..nn).map(unit_row).collect(),
                    rhs: vec![1.0; nn],
                    shift: spec.eta.unwrap_or(DEFAULT_ETA),
                }))
            }
            (f, _) => Err(Error::InvalidParameter(alloc::format!(
                "instance data does not match family {}",
                f.as_str()
            ))),
        }
    }

    fn inner(&self) -> &dyn NsdpProblem {
        match self {
            TestProblem::Matrix(p) => p,
            TestProblem::Channel(p) => p,
        }
    }
}

impl NsdpProblem for TestProblem {
    fn n(&self) -> usize {
        self.inner().n()
    }
    fn m(&self) -> usize {
        self.inner().m()
    }
    fn d(&self) -> usize {
        self.inner().d()
    }
    fn eval_f(&self, x: &[f64]) -> f64 {
        self.inner().eval_f(x)
    }
    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        self.inner().grad_f(x)
    }
    fn eval_g(&self, x: &[f64]) -> Vec<f64> {
        self.inner().eval_g(x)
    }
    fn jac_g(&self, x: &[f64]) -> DenseMatrix {
        self.inner().jac_g(x)
    }
    fn eval_x(&self, x: &[f64]) -> SymMatrix {
        self.inner().eval_x(x)
    }
    fn apply_a(&self, x: &[f64], u: &[f64]) -> SymMatrix {
        self.inner().apply_a(x, u)
    }
    fn apply_a_adj(&self, x: &[f64], u: &SymMatrix) -> Vec<f64> {
        self.inner().apply_a_adj(x, u)
    }
    fn a_basis(&self, x: &[f64]) -> Vec<SymMatrix> {
        self.inner().a_basis(x)
    }
    fn hess_lagrangian(&self, x: &[f64], y: &[f64], z: &SymMatrix) -> Option<SymMatrix> {
        self.inner().hess_lagrangian(x, y, z)
    }
}
