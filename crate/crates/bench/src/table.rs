//! Aggregate rows in the layout of the benchmark tables.

use std::fmt::Write as _;

use nsdp_core::problems::Family;

use crate::runner::{KindCounts, RunResult, Solver};

/// Six significant digits in scientific notation.
pub fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        for v in values {
            n += 1;
            sum += v;
            max = max.max(v);
            min = min.min(v);
        }
        Self {
            mean: sum / n as f64,
            max,
            min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub family: Family,
    pub n: usize,
    pub m: Option<usize>,
    pub solver: Solver,
    pub count: usize,
    pub iters: Stat,
    pub wall_time_s: Stat,
    pub final_r: Stat,
    pub final_multiplier_norm: Stat,
    /// SQSDP only.
    pub kinds: Option<KindCounts>,
}

pub fn aggregate(runs: &[RunResult]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Family, usize, Option<usize>, Solver)> = Vec::new();
    for r in runs {
        let key = (r.instance.family, r.instance.n, r.instance.m, r.solver);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(family, n, m, solver)| {
            let group: Vec<&RunResult> = runs
                .iter()
                .filter(|r| (r.instance.family, r.instance.n, r.instance.m, r.solver) == (family, n, m, solver))
                .collect();
            let kinds = (solver == Solver::Sqsdp).then(|| {
                let mut total = KindCounts::default();
                for r in &group {
                    if let Some(k) = &r.kinds {
                        total.add(k);
                    }
                }
                total
            });
            AggregateRow {
                family,
                n,
                m,
                solver,
                count: group.len(),
                iters: Stat::of(group.iter().map(|r| r.iters as f64)),
                wall_time_s: Stat::of(group.iter().map(|r| r.wall_time_s)),
                final_r: Stat::of(group.iter().map(|r| r.final_r)),
                final_multiplier_norm: Stat::of(group.iter().map(|r| r.final_multiplier_norm)),
                kinds,
            }
        })
        .collect()
}

pub const AGGREGATE_HEADER: &str = "family,N,M,solver,count,ite_mean,ite_max,ite_min,time_mean_s,r_mean,r_max,r_min,mult_mean,mult_max,mult_min,V%,O%,M%,F%";

fn opt(m: Option<usize>) -> String {
    m.map_or(String::new(), |m| m.to_string())
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        let shares = match &r.kinds {
            Some(k) if k.total() > 0 => {
                let t = k.total() as f64;
                [k.v, k.o, k.m, k.f].map(|c| sci(100.0 * c as f64 / t)).join(",")
            }
            _ => ",,,".to_string(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.family.as_str(),
            r.n,
            opt(r.m),
            r.solver.as_str(),
            r.count,
            sci(r.iters.mean),
            sci(r.iters.max),
            sci(r.iters.min),
            sci(r.wall_time_s.mean),
            sci(r.final_r.mean),
            sci(r.final_r.max),
            sci(r.final_r.min),
            sci(r.final_multiplier_norm.mean),
            sci(r.final_multiplier_norm.max),
            sci(r.final_multiplier_norm.min),
            shares,
        );
    }
    out
}

pub const RUNS_HEADER: &str =
    "family,N,M,seed,solver,status,iters,wall_time_s,final_r,final_multiplier_norm,V,O,M,F";

pub fn runs_csv(runs: &[RunResult]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in runs {
        let kinds = r
            .kinds
            .map_or(",,,".to_string(), |k| format!("{},{},{},{}", k.v, k.o, k.m, k.f));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.instance.family.as_str(),
            r.instance.n,
            opt(r.instance.m),
            r.instance.seed,
            r.solver.as_str(),
            r.status.as_str(),
            r.iters,
            sci(r.wall_time_s),
            sci(r.final_r),
            sci(r.final_multiplier_norm),
            kinds,
        );
    }
    out
}
