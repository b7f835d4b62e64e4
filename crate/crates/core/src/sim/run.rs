//! Step executor and trajectory runner.
//!
//! Every dissipative factor runs the five-qubit forking circuit on fresh
//! ancilla, environment and fork registers, which are traced out afterwards.

use std::fmt::Write;

use serde::Serialize;

use super::{apply_gate_in_place, oracle::oracle_step_count, oracle::rk4_step, partial_trace, DensityState};
use crate::channel::DensityMatrix;
use crate::circuit::{forking_gates, hamiltonian_unitary, lower_gates, ForkLayout, Gate};
use crate::decompose::{decompose, DecomposedGenerator, GeneratorSpec};
use crate::error::Result;
use crate::extreme::{canonical_params, extreme_pair};
use crate::numerics::{c, Mat2};
use crate::trotter::{StepFactor, TrotterPlan};

#[derive(Debug, Clone)]
enum Program {
    Identity,
    Unitary(Mat2),
    /// Lowered gates on the standard five-qubit layout.
    Fork(Vec<Gate>),
}

fn zero_state() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))
}

fn compile(dec: &DecomposedGenerator, f: &StepFactor) -> Result<Program> {
    if f.is_trivial() {
        return Ok(Program::Identity);
    }
    if f.k == 0 {
        return Ok(Program::Unitary(hamiltonian_unitary(&dec.hamiltonian, f.duration)));
    }
    let term = dec
        .terms
        .iter()
        .find(|t| t.k == f.k)
        .ok_or_else(|| crate::Error::Internal(format!("factor {} has no matching term", f.k)))?;
    let pair = extreme_pair(&canonical_params(term.theta, f.duration)?)?;
    let gates = forking_gates(&pair, &term.lift, ForkLayout::STANDARD)?;
    Ok(Program::Fork(lower_gates(&gates)?))
}

fn execute(p: &Program, rho: &DensityMatrix, forks: &[Mat2; 2]) -> Result<DensityMatrix> {
    match p {
        Program::Identity => Ok(*rho),
        Program::Unitary(u) => Ok(rho.conjugate(u)),
        Program::Fork(gates) => {
            let mut state = DensityState::product(&[zero_state(), zero_state(), rho.0, forks[0], forks[1]]);
            for g in gates {
                apply_gate_in_place(&mut state, g)?;
            }
            let sys = partial_trace(&state, &[ForkLayout::STANDARD.sys])?;
            Ok(DensityMatrix(sys.as_qubit().expect("single kept qubit")))
        }
    }
}

/// Applies one factor of the schedule with fork registers in `|0⟩`.
pub fn run_step(rho: &DensityMatrix, factor: &StepFactor, dec: &DecomposedGenerator) -> Result<DensityMatrix> {
    run_step_with_forks(rho, factor, dec, &[zero_state(), zero_state()])
}

/// As [`run_step`] with the two fork registers prepared in `forks`.
pub fn run_step_with_forks(
    rho: &DensityMatrix,
    factor: &StepFactor,
    dec: &DecomposedGenerator,
    forks: &[Mat2; 2],
) -> Result<DensityMatrix> {
    execute(&compile(dec, factor)?, rho, forks)
}

/// Precompiled programs for one block of a plan.
#[derive(Debug, Clone)]
pub struct StepExecutor {
    programs: Vec<Program>,
}

impl StepExecutor {
    pub fn new(dec: &DecomposedGenerator, plan: &TrotterPlan) -> Result<Self> {
        let programs = plan.block.iter().map(|f| compile(dec, f)).collect::<Result<_>>()?;
        Ok(StepExecutor { programs })
    }

    /// Runs one `S₂(τ)` block.
    pub fn run_block(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let forks = [zero_state(), zero_state()];
        self.programs.iter().try_fold(*rho, |r, p| execute(p, &r, &forks))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub bloch: [f64; 3],
    pub oracle_trace_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub final_state: DensityMatrix,
    pub oracle_final: DensityMatrix,
}

impl Trajectory {
    pub fn max_oracle_distance(&self) -> f64 {
        self.rows.iter().map(|r| r.oracle_trace_distance).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,bloch_x,bloch_y,bloch_z,oracle_trace_distance\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.bloch[0], r.bloch[1], r.bloch[2], r.oracle_trace_distance
            );
        }
        out
    }
}

/// Block indices at which the trajectory is sampled: `samples` points spread
/// evenly over `0..=n`, duplicates removed.
fn sample_blocks(n: u64, samples: usize) -> Vec<u64> {
    let samples = samples.max(2);
    let mut out: Vec<u64> =
        (0..samples).map(|j| ((j as f64) * n as f64 / (samples - 1) as f64).round() as u64).collect();
    out.dedup();
    out
}

/// Runs the circuit-level evolution of `plan` from `rho0`, recording the Bloch
/// vector and the distance to the Runge-Kutta reference at sampled block
/// boundaries.
pub fn run_trajectory(spec: &GeneratorSpec, plan: &TrotterPlan, rho0: &DensityMatrix, samples: usize) -> Result<Trajectory> {
    let dec = decompose(spec)?;
    let exec = StepExecutor::new(&dec, plan)?;
    let l = spec.generator()?.0;
    let marks = sample_blocks(plan.n, samples);

    let mut rho = *rho0;
    let mut oracle = rho0.extended();
    let mut done = 0u64;
    let mut rows = Vec::with_capacity(marks.len());
    for &m in &marks {
        for _ in done..m {
            rho = exec.run_block(&rho)?;
        }
        let dt = (m - done) as f64 * plan.tau;
        if dt > 0.0 {
            let steps = oracle_step_count(&l, dt);
            let h = dt / steps as f64;
            for _ in 0..steps {
                oracle = rk4_step(&l, &oracle, h);
            }
        }
        done = m;
        let b = rho.bloch();
        let dist = rho.trace_distance(&DensityMatrix::from_extended(&oracle));
        rows.push(TrajectoryRow { t: m as f64 * plan.tau, bloch: [b.x, b.y, b.z], oracle_trace_distance: dist });
    }
    Ok(Trajectory { rows, final_state: rho, oracle_final: DensityMatrix::from_extended(&oracle) })
}
