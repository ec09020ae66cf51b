//! One solver run on one instance, with its per-iteration log.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;
use nsdp_core::almethod::{al_solve_with_clock, AlConfig, AlRecord};
use nsdp_core::problems::InstanceSpec;
use nsdp_core::sqsdp::{solve_with_clock, Clock, IterationRecord, SqsdpConfig, TerminationStatus};
use nsdp_core::vomf::IterateKind;
use nsdp_core::Triplet;
use serde::{Deserialize, Serialize};

use crate::instance::InstanceFile;
use crate::table::sci;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Sqsdp,
    Al,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Sqsdp => "sqsdp",
            Solver::Al => "al",
        }
    }
}

/// Both solver configurations; only the one matching the run is echoed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub sqsdp: SqsdpConfig,
    pub al: AlConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EchoedConfig {
    Sqsdp(SqsdpConfig),
    Al(AlConfig),
}

/// Iterate-kind counts of an SQSDP run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "O")]
    pub o: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "F")]
    pub f: usize,
}

impl KindCounts {
    pub fn from_records(records: &[IterationRecord]) -> Self {
        let mut c = Self::default();
        for kind in records.iter().filter_map(|r| r.kind) {
            match kind {
                IterateKind::V => c.v += 1,
                IterateKind::O => c.o += 1,
                IterateKind::M => c.m += 1,
                IterateKind::F => c.f += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.v + self.o + self.m + self.f
    }

    pub fn add(&mut self, other: &Self) {
        self.v += other.v;
        self.o += other.o;
        self.m += other.m;
        self.f += other.f;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub instance: InstanceSpec,
    pub solver: Solver,
    pub iters: usize,
    pub wall_time_s: f64,
    pub final_r: f64,
    /// `max{‖y*‖, ‖Z*‖_F}`
    pub final_multiplier_norm: f64,
    pub status: TerminationStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<KindCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub config: EchoedConfig,
}

pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for StdClock {
    fn now_s(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub struct RunOutput {
    pub result: RunResult,
    /// Per-iteration CSV, header included.
    pub iteration_csv: String,
}

pub fn run(inst: &InstanceFile, solver: Solver, cfg: &RunConfig) -> Result<RunOutput> {
    let p = inst.problem()?;
    let v0 = Triplet::zeros(&p);
    let clock = StdClock::start();
    Ok(match solver {
        Solver::Sqsdp => {
            let rep = solve_with_clock(&p, &v0, &cfg.sqsdp, &clock)?;
            RunOutput {
                iteration_csv: sqsdp_csv(&rep.records),
                result: RunResult {
                    instance: inst.spec.clone(),
                    solver,
                    iters: rep.iterations,
                    wall_time_s: clock.now_s(),
                    final_r: rep.residuals.r,
                    final_multiplier_norm: rep.solution.multiplier_norm(),
                    status: rep.status,
                    kinds: Some(KindCounts::from_records(&rep.records)),
                    failure: rep.failure.map(|e| e.to_string()),
                    config: EchoedConfig::Sqsdp(cfg.sqsdp.clone()),
                },
            }
        }
        Solver::Al => {
            let rep = al_solve_with_clock(&p, &v0, &cfg.al, &clock)?;
            RunOutput {
                iteration_csv: al_csv(&rep.records),
                result: RunResult {
                    instance: inst.spec.clone(),
                    solver,
                    iters: rep.iterations,
                    wall_time_s: clock.now_s(),
                    final_r: rep.residuals.r,
                    final_multiplier_norm: rep.solution.multiplier_norm(),
                    status: rep.status,
                    kinds: None,
                    failure: None,
                    config: EchoedConfig::Al(cfg.al.clone()),
                },
            }
        }
    })
}

/// 0 when converged, 2 at the iteration cap, 3 otherwise.
pub fn exit_code(status: TerminationStatus) -> i32 {
    match status {
        TerminationStatus::ResidualConverged | TerminationStatus::GammaConverged | TerminationStatus::ApproxKkt => 0,
        TerminationStatus::MaxIterations => 2,
        TerminationStatus::FeasibilityStationary
        | TerminationStatus::InnerSolverFailure
        | TerminationStatus::LineSearchFailure => 3,
    }
}

pub const SQSDP_ITER_HEADER: &str =
    "k,sigma,phi,psi,gamma,r_v,r_o,r,merit_f,grad_f_norm,step_size,kind,inner_iters,y_norm,y_inf_norm,z_fnorm,z_min_eig,z_max_eig,wall_time_s";

pub fn sqsdp_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(SQSDP_ITER_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            sci(r.sigma),
            sci(r.phi),
            sci(r.psi),
            sci(r.gamma),
            sci(r.r_v),
            sci(r.r_o),
            sci(r.r),
            sci(r.merit_f),
            sci(r.grad_f_norm),
            sci(r.step_size),
            r.kind.map_or("", |k| k.as_str()),
            r.inner_iters,
            sci(r.y_norm),
            sci(r.y_inf_norm),
            sci(r.z_fnorm),
            sci(r.z_min_eig),
            sci(r.z_max_eig),
            sci(r.wall_time),
        );
    }
    out
}

pub const AL_ITER_HEADER: &str =
    "k,rho,u,r_v,r_o,r,y_norm,z_fnorm,inner_iters,inner_grad_norm,inner_stalled,wall_time_s";

pub fn al_csv(records: &[AlRecord]) -> String {
    let mut out = String::from(AL_ITER_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            sci(r.rho),
            sci(r.u),
            sci(r.r_v),
            sci(r.r_o),
            sci(r.r),
            sci(r.y_norm),
            sci(r.z_fnorm),
            r.inner_iters,
            sci(r.inner_grad_norm),
            r.inner_stalled,
            sci(r.wall_time),
        );
    }
    out
}
