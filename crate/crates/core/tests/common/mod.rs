//! Shared fixtures for the integration suites: seeded random data, finite
//! differences and the acceptance checks.
#![allow(dead_code)]

use std::fmt::Write as _;

use nsdp_core::almethod::{al_solve, al_subproblem_gradient, al_subproblem_value, AlConfig, AlReport};
use nsdp_core::dense::{self, DenseMatrix};
use nsdp_core::merit::{grad_merit_f, merit_f, MeritContext};
use nsdp_core::model::{feasibility_h, grad_h, grad_x_lagrangian, lagrangian, CallbackProblem};
use nsdp_core::problems::{gen_p1, gen_p2, gen_p3, gen_p4, Family, TestProblem};
use nsdp_core::qsdp::{
    build_subproblem, inner_solve, minimize_reduced, reduced_gradient, reduced_objective, InnerMethod,
    InnerStatus, SubproblemData, TruncationParams,
};
use nsdp_core::sqsdp::{solve, IterationRecord, SolveReport, SqsdpConfig, TerminationStatus};
use nsdp_core::symmat::{psd_project, spectral_box_project, svec, smat};
use nsdp_core::vomf::IterateKind;
use nsdp_core::{eig_sym, NsdpProblem, SymMatrix, Triplet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_sym(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let mut a = SymMatrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            a.set(i, j, rng.sample(StandardNormal));
        }
    }
    a
}

/// `B Bᵀ` with a rank drawn in `0..=d`, so boundary matrices show up too.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let rank = rng.random_range(0..=d);
    let mut z = SymMatrix::zeros(d);
    for _ in 0..rank {
        let v = normal_vec(rng, d);
        for i in 0..d {
            for j in 0..=i {
                z.set(i, j, z.get(i, j) + v[i] * v[j]);
            }
        }
    }
    z
}

pub fn full(a: &SymMatrix) -> Vec<f64> {
    a.to_full()
}

pub fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], d: usize) -> Vec<f64> {
    let mut t = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            t[j * d + i] = a[i * d + j];
        }
    }
    t
}

pub fn frob(a: &[f64]) -> f64 {
    dense::norm(a)
}

/// Central differences with a per-coordinate step.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / (1 + ‖a‖)`
pub fn rel_gap(analytic: &[f64], fd: &[f64]) -> f64 {
    frob(&dense::sub(analytic, fd)) / (1.0 + frob(analytic))
}

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Small members of every family, `N ≤ 6`.
pub fn small_family_members(seed: u64) -> Vec<(Family, TestProblem)> {
    vec![
        (Family::P1, gen_p1(4, seed).unwrap().problem().unwrap()),
        (Family::P2, gen_p2(5, 3, seed).unwrap().problem().unwrap()),
        (Family::P3, gen_p3(3, seed).unwrap().problem().unwrap()),
        (Family::P4, gen_p4(4, 1e-3, seed).unwrap().problem().unwrap()),
    ]
}

/// `x` inside the natural domain of the family (P3 needs `t > −1`).
pub fn random_point(rng: &mut ChaCha8Rng, family: Family, p: &dyn NsdpProblem) -> Triplet {
    let x: Vec<f64> = match family {
        Family::P3 => (0..p.n()).map(|_| rng.random_range(0.0..1.0)).collect(),
        _ => (0..p.n()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    Triplet::new(x, normal_vec(rng, p.m()), random_psd(rng, p.d()))
}

/// A problem with nonlinear `g` and `X(x)`, so that `A_i` depend on `x`.
pub fn nonlinear_problem() -> CallbackProblem {
    CallbackProblem::new(
        2,
        2,
        |x| x[0] * x[0] * x[1] + (x[1]).sin(),
        |x| vec![2.0 * x[0] * x[1], x[0] * x[0] + x[1].cos()],
        |x| SymMatrix::from_rows(&[[1.0 - x[0] * x[0], 0.0], [x[0] * x[1], x[1] + 2.0]]),
    )
    .with_g(
        1,
        |x| vec![x[0] + x[1] * x[1] * x[1] - 0.5],
        |x| DenseMatrix::from_row_major(2, 1, vec![1.0, 3.0 * x[1] * x[1]]),
    )
    .with_a(
        |x, u| SymMatrix::from_rows(&[[-2.0 * x[0] * u[0], 0.0], [x[1] * u[0] + x[0] * u[1], u[1]]]),
        |x, w| {
            vec![
                -2.0 * x[0] * w.get(0, 0) + 2.0 * x[1] * w.get(1, 0),
                2.0 * x[0] * w.get(1, 0) + w.get(1, 1),
            ]
        },
    )
}

/// Worst relative gap of the five analytic gradients at one point.
pub fn gradient_gaps(p: &dyn NsdpProblem, v: &Triplet, sigma: f64, rho: f64, xi: &[f64]) -> [f64; 5] {
    let ctx = MeritContext::new(sigma, v.y.clone(), v.z.clone()).unwrap();
    let merit = rel_gap(
        &grad_merit_f(p, &v.x, &ctx).unwrap(),
        &fd_gradient(|x| merit_f(p, x, &ctx).unwrap(), &v.x),
    );
    let lag = rel_gap(
        &grad_x_lagrangian(p, v).unwrap(),
        &fd_gradient(
            |x| lagrangian(p, &Triplet::new(x.to_vec(), v.y.clone(), v.z.clone())).unwrap(),
            &v.x,
        ),
    );
    let h = rel_gap(
        &grad_h(p, &v.x).unwrap(),
        &fd_gradient(|x| feasibility_h(p, x).unwrap(), &v.x),
    );
    let sub = build_subproblem(p, v, &SymMatrix::identity(p.n()), sigma).unwrap();
    let q = rel_gap(
        &reduced_gradient(&sub, xi).unwrap(),
        &fd_gradient(|x| reduced_objective(&sub, x).unwrap(), xi),
    );
    let al = rel_gap(
        &al_subproblem_gradient(p, &v.x, &v.y, &v.z, rho).unwrap(),
        &fd_gradient(|x| al_subproblem_value(p, x, &v.y, &v.z, rho).unwrap(), &v.x),
    );
    [merit, lag, h, q, al]
}

pub const GRADIENT_NAMES: [&str; 5] = ["gradF", "grad_x L", "grad h", "grad q", "AL subproblem"];

pub fn criterion_gradients(points: usize) -> Outcome {
    let mut worst = [0.0f64; 5];
    let mut r = rng(101);
    for (family, p) in small_family_members(11) {
        for _ in 0..points {
            let v = random_point(&mut r, family, &p);
            let sigma = r.random_range(0.1..1.0);
            let rho = r.random_range(1.0..10.0);
            let xi: Vec<f64> = normal_vec(&mut r, p.n()).iter().map(|v| 0.1 * v).collect();
            for (w, g) in worst.iter_mut().zip(gradient_gaps(&p, &v, sigma, rho, &xi)) {
                *w = w.max(g);
            }
        }
    }
    let mut detail = String::new();
    for (name, w) in GRADIENT_NAMES.iter().zip(&worst) {
        let _ = write!(detail, "{name} {w:.1e}  ");
    }
    Outcome::new(worst.iter().all(|w| *w <= 1e-5), detail.trim_end().to_string())
}

/// Checks every symmat identity on one matrix pair; returns the failures.
pub fn symmat_violations(a: &SymMatrix, b: &SymMatrix, zmax: f64) -> Vec<String> {
    let d = a.dim();
    let mut bad = Vec::new();
    let an = a.norm();
    let e = eig_sym(a).unwrap();
    let q = &e.q;
    let qtq = matmul(&transpose(q, d), q, d);
    let mut err = 0.0;
    for i in 0..d {
        for j in 0..d {
            let t = qtq[i * d + j] - if i == j { 1.0 } else { 0.0 };
            err += t * t;
        }
    }
    if err.sqrt() > 1e-12 * d as f64 {
        bad.push(format!("orthogonality {:.1e}", err.sqrt()));
    }
    let mut ql = q.clone();
    for i in 0..d {
        for j in 0..d {
            ql[i * d + j] *= e.lambda[j];
        }
    }
    let rec = matmul(&ql, &transpose(q, d), d);
    let rec_err = frob(&dense::sub(&rec, &full(a)));
    if rec_err > 1e-10 * an.max(1.0) {
        bad.push(format!("reconstruction {rec_err:.1e}"));
    }
    if e.lambda.windows(2).any(|w| w[0] < w[1]) {
        bad.push("eigenvalues not descending".into());
    }
    let plus = psd_project(a).unwrap();
    let minus = psd_project(&-a).unwrap();
    let plus_min = *eig_sym(&plus).unwrap().lambda.last().unwrap();
    if plus_min < -1e-12 * an {
        bad.push(format!("[A]_+ not PSD {plus_min:.1e}"));
    }
    let resid = &plus - a;
    if plus.dot(&resid).abs() > 1e-10 * an * an {
        bad.push(format!("projection orthogonality {:.1e}", plus.dot(&resid)));
    }
    if (&(&plus - &minus) - a).norm() > 1e-10 * an {
        bad.push("A != [A]_+ - [-A]_+".into());
    }
    let plus_b = psd_project(b).unwrap();
    if (&plus - &plus_b).norm() > (a - b).norm() * (1.0 + 1e-12) + 1e-14 {
        bad.push("projection expands distance".into());
    }
    let sa = svec(a);
    let sb = svec(b);
    let tr: f64 = {
        let ab = matmul(&full(a), &full(b), d);
        (0..d).map(|i| ab[i * d + i]).sum()
    };
    if (dense::dot(&sa, &sb) - tr).abs() > 1e-12 * an * b.norm() {
        bad.push("svec is not an isometry".into());
    }
    if (&smat(&sa).unwrap() - a).norm() > 1e-14 * an {
        bad.push("smat does not invert svec".into());
    }
    let boxed = eig_sym(&spectral_box_project(a, zmax).unwrap()).unwrap();
    let tol = 1e-12 * an.max(zmax);
    if boxed.lambda[0] > zmax + tol || *boxed.lambda.last().unwrap() < -tol {
        bad.push("spectral box projection out of [0, zmax]".into());
    }
    bad
}

pub fn criterion_symmat(count: usize) -> Outcome {
    let mut r = rng(202);
    let mut failures = Vec::new();
    for i in 0..count {
        let d = r.random_range(1..=10);
        let scale = 10f64.powf(r.random_range(-3.0..3.0));
        let a = random_sym(&mut r, d).scale(scale);
        let b = random_sym(&mut r, d).scale(scale);
        let zmax = 10f64.powf(r.random_range(-1.0..2.0));
        for v in symmat_violations(&a, &b, zmax) {
            failures.push(format!("#{i} (d={d}): {v}"));
        }
    }
    Outcome::new(
        failures.is_empty(),
        match failures.first() {
            None => format!("{count} matrices, all identities hold"),
            Some(f) => format!("{} violations, first {f}", failures.len()),
        },
    )
}

/// Random strictly convex reduced subproblem with `n ≤ 6`, `d ≤ 4`.
pub fn random_subproblem(r: &mut ChaCha8Rng) -> SubproblemData {
    let n = r.random_range(1..=6);
    let d = r.random_range(1..=4);
    let mut m = SymMatrix::scaled_identity(n, 0.1);
    for _ in 0..n {
        let v = normal_vec(r, n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, m.get(i, j) + v[i] * v[j]);
            }
        }
    }
    let basis = (0..n).map(|_| random_sym(r, d)).collect();
    let sigma = r.random_range(0.05..1.0);
    SubproblemData::new(m, normal_vec(r, n), Vec::new(), random_sym(r, d), sigma, basis).unwrap()
}

/// Same subproblem with `c` chosen so that `∇F = ∇q(0) = 0`.
pub fn stationary_variant(sub: &SubproblemData) -> SubproblemData {
    let c = sub.apply_a_adj(sub.t_plus());
    SubproblemData::new(sub.m.clone(), c, sub.s.clone(), sub.t.clone(), sub.sigma, sub.a_basis().to_vec()).unwrap()
}

pub struct DescentCheck {
    pub descent_gap: f64,
    pub xi_norm: f64,
    pub sigma_gap: f64,
    pub grad_f_norm: f64,
}

pub fn descent_check(sub: &SubproblemData) -> DescentCheck {
    let grad_f = sub.merit_gradient();
    let res = minimize_reduced(sub, 1e-12, 10_000, InnerMethod::SemismoothNewton).unwrap();
    let it = &res.iterate;
    let mut gap = it.sigma_mat.clone();
    gap.axpy(-1.0, sub.t_plus());
    let lhs = dense::dot(&grad_f, &it.xi);
    let rhs = -sub.m.quad_form(&it.xi) - sub.sigma * gap.dot(&gap);
    DescentCheck {
        descent_gap: lhs - rhs,
        xi_norm: dense::norm(&it.xi),
        sigma_gap: gap.norm(),
        grad_f_norm: dense::norm(&grad_f),
    }
}

pub fn criterion_subproblem_descent(trials: usize) -> Outcome {
    let mut r = rng(303);
    let mut worst_descent = f64::NEG_INFINITY;
    let mut worst_forced = 0.0f64;
    let mut worst_converse = 0.0f64;
    let mut converse_cases = 0;
    for i in 0..trials {
        let generic = random_subproblem(&mut r);
        // Half the trials force ∇F = 0; the other half are generic.
        let sub = if i % 2 == 0 { stationary_variant(&generic) } else { generic };
        let c = descent_check(&sub);
        worst_descent = worst_descent.max(c.descent_gap);
        if c.grad_f_norm <= 1e-12 {
            worst_forced = worst_forced.max(c.xi_norm).max(c.sigma_gap);
        }
        if c.xi_norm <= 1e-8 && c.sigma_gap <= 1e-8 {
            converse_cases += 1;
            worst_converse = worst_converse.max(c.grad_f_norm);
        }
    }
    let pass = worst_descent <= 1e-8 && worst_forced <= 1e-8 && worst_converse <= 1e-8 && converse_cases > 0;
    Outcome::new(
        pass,
        format!(
            "descent slack max {worst_descent:.1e}; gradF=0 -> |xi|,|Sigma-[T]+| max {worst_forced:.1e}; \
             null solution -> |gradF| max {worst_converse:.1e} over {converse_cases} cases"
        ),
    )
}

pub fn criterion_truncation(trials: usize) -> Outcome {
    let mut r = rng(404);
    let trunc = TruncationParams::default();
    let mut ok = 0;
    let mut max_iters = 0;
    let mut tried = 0;
    while tried < trials {
        let sub = random_subproblem(&mut r);
        let g = sub.merit_gradient();
        if dense::norm(&g) < 1e-4 {
            continue;
        }
        tried += 1;
        if let Ok(res) = inner_solve(&sub, &trunc, &g) {
            if res.status == InnerStatus::Truncated {
                ok += 1;
                max_iters = max_iters.max(res.iterations);
            }
        }
    }
    Outcome::new(
        ok == trials,
        format!("{ok}/{trials} met both truncation tests, at most {max_iters} inner iterations"),
    )
}

pub struct Run {
    pub family: Family,
    pub seed: u64,
    pub report: SolveReport,
}

pub fn sqsdp_runs(family: Family, seeds: std::ops::Range<u64>) -> Vec<Run> {
    seeds
        .map(|seed| {
            let inst = match family {
                Family::P1 => gen_p1(5, seed),
                Family::P2 => gen_p2(15, 5, seed),
                Family::P3 => gen_p3(5, seed),
                Family::P4 => gen_p4(5, 1e-3, seed),
            }
            .unwrap();
            let p = inst.problem().unwrap();
            let report = solve(&p, &Triplet::zeros(&p), &SqsdpConfig::default()).unwrap();
            Run { family, seed, report }
        })
        .collect()
}

pub fn al_runs(seeds: std::ops::Range<u64>) -> Vec<AlReport> {
    seeds
        .map(|seed| {
            let p = gen_p1(5, seed).unwrap().problem().unwrap();
            al_solve(&p, &Triplet::zeros(&p), &AlConfig::default()).unwrap()
        })
        .collect()
}

/// State-machine violations in one run's records.
pub fn vomf_violations(records: &[IterationRecord], cfg: &SqsdpConfig) -> Vec<String> {
    let mut bad = Vec::new();
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let Some(kind) = a.kind else {
            bad.push(format!("k={}: missing kind", a.k));
            continue;
        };
        let expect = |on: bool, before: f64, after: f64| if on { after == 0.5 * before } else { after == before };
        if !expect(kind == IterateKind::V, a.phi, b.phi) {
            bad.push(format!("k={}: phi {} -> {} on {:?}", a.k, a.phi, b.phi, kind));
        }
        if !expect(kind == IterateKind::O, a.psi, b.psi) {
            bad.push(format!("k={}: psi {} -> {} on {:?}", a.k, a.psi, b.psi, kind));
        }
        if !expect(kind == IterateKind::M, a.gamma, b.gamma) {
            bad.push(format!("k={}: gamma {} -> {} on {:?}", a.k, a.gamma, b.gamma, kind));
        }
        if b.sigma > a.sigma {
            bad.push(format!("k={}: sigma increased", a.k));
        }
        if kind == IterateKind::M
            && (b.y_inf_norm > cfg.ymax || b.z_max_eig > cfg.zmax * (1.0 + 1e-12) || b.z_min_eig < -1e-10)
        {
            bad.push(format!("k={}: M-iterate multipliers outside the safeguard box", a.k));
        }
    }
    for rec in records {
        if rec.z_min_eig < -1e-10 {
            bad.push(format!("k={}: lambda_min(Z) = {:.1e}", rec.k, rec.z_min_eig));
        }
    }
    bad
}

pub fn criterion_vomf(runs: &[&Run]) -> Outcome {
    let cfg = SqsdpConfig::default();
    let mut failures = Vec::new();
    let mut steps = 0;
    for run in runs {
        steps += run.report.records.len().saturating_sub(1);
        for v in vomf_violations(&run.report.records, &cfg) {
            failures.push(format!("{} seed {}: {v}", run.family.as_str(), run.seed));
        }
    }
    Outcome::new(
        failures.is_empty(),
        match failures.first() {
            None => format!("{} runs, {steps} transitions, no violations", runs.len()),
            Some(f) => format!("{} violations, first {f}", failures.len()),
        },
    )
}

pub fn converged_within(runs: &[Run], r_tol: f64, max_iters: usize) -> usize {
    runs.iter()
        .filter(|run| run.report.residuals.r <= r_tol && run.report.iterations <= max_iters)
        .count()
}

pub fn criterion_reproduction(runs: &[Run], need: usize, max_iters: usize) -> Outcome {
    let hits = converged_within(runs, 1e-6, max_iters);
    let iters: Vec<usize> = runs.iter().map(|r| r.report.iterations).collect();
    let r_max = runs.iter().map(|r| r.report.residuals.r).fold(0.0, f64::max);
    let mean = iters.iter().sum::<usize>() as f64 / iters.len().max(1) as f64;
    Outcome::new(
        hits >= need,
        format!(
            "{hits}/{} with r <= 1e-6 in <= {max_iters} iterations (need {need}); mean iterations {mean:.1}, max r {r_max:.1e}",
            runs.len()
        ),
    )
}

pub fn kind_shares(runs: &[Run]) -> [f64; 4] {
    let mut counts = [0usize; 4];
    for run in runs {
        for rec in &run.report.records {
            if let Some(k) = rec.kind {
                counts[k as usize] += 1;
            }
        }
    }
    let total = counts.iter().sum::<usize>().max(1) as f64;
    counts.map(|c| 100.0 * c as f64 / total)
}

pub fn criterion_degenerate(sq: &[Run], al: &[AlReport]) -> Outcome {
    let rs: Vec<f64> = sq.iter().map(|r| r.report.residuals.r).collect();
    let r_max = rs.iter().copied().fold(0.0, f64::max);
    let r_min = rs.iter().copied().fold(f64::INFINITY, f64::min);
    let mult_min = al.iter().map(|a| a.solution.multiplier_norm()).fold(f64::INFINITY, f64::min);
    let al_r_min = al.iter().map(|a| a.residuals.r).fold(f64::INFINITY, f64::min);
    let al_ok = al.iter().all(|a| a.solution.multiplier_norm() >= 1e6 && a.residuals.r >= 1e3);
    let statuses: Vec<&str> = sq.iter().map(|r| r.report.status.as_str()).collect();
    Outcome::new(
        r_max <= 1e-1 && r_min <= 1e-2 && al_ok && !al.is_empty(),
        format!(
            "sqsdp r max {r_max:.1e} min {r_min:.1e} (statuses {statuses:?}); AL min multiplier norm {mult_min:.1e}, min r {al_r_min:.1e}"
        ),
    )
}

/// `g(x) = x² + 1 = 0` with a constant `X(x) = 1`.
pub fn infeasible_problem() -> CallbackProblem {
    CallbackProblem::new(1, 1, |x| x[0], |_| vec![1.0], |_| SymMatrix::identity(1)).with_g(
        1,
        |x| vec![x[0] * x[0] + 1.0],
        |x| DenseMatrix::from_row_major(1, 1, vec![2.0 * x[0]]),
    )
}

pub fn criterion_infeasible() -> Outcome {
    let p = infeasible_problem();
    let v0 = Triplet::new(vec![1.0], vec![0.0], SymMatrix::zeros(1));
    let rep = solve(&p, &v0, &SqsdpConfig::default()).unwrap();
    Outcome::new(
        rep.status == TerminationStatus::FeasibilityStationary && rep.grad_h_norm <= 1e-4,
        format!(
            "status {}, |grad h| {:.1e}, x* {:.2e}, after {} iterations",
            rep.status.as_str(),
            rep.grad_h_norm,
            rep.solution.x[0],
            rep.iterations
        ),
    )
}
