//! End-to-end commands: decompose, compile, simulate and verify a problem
//! configuration. Output is deterministic for a given configuration.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::channel::{one_one_norm, DensityMatrix};
use crate::circuit::{
    emit_qasm, forking_gates, gate_counts, hamiltonian_unitary, lower_gates, single_qubit_gates, CircuitIR, ForkLayout,
    Gate, GateCounts, QubitRole,
};
use crate::config::ProblemConfig;
use crate::decompose::{decompose, DecomposedGenerator, GeneratorSpec};
use crate::error::Result;
use crate::exec::Execution;
use crate::extreme::{canonical_params, extreme_pair, stinespring_apply};
use crate::numerics::{c, Mat2};
use crate::sim::{run_step, run_step_with_forks, run_trajectory};
use crate::trotter::{
    convergence_order, error_sweep, exact_transfer, factor_transfer, lambda_cap, plan_with_lambda, reference_product,
    StepFactor, TrotterPlan,
};

/// Step counts of the convergence sweep run by `verify`.
pub const SWEEP_STEPS: [u64; 5] = [4, 8, 16, 32, 64];
/// Accepted range for the fitted convergence order.
pub const ORDER_RANGE: (f64, f64) = (1.7, 2.3);
/// Sweep errors below this count as an exact splitting.
pub const EXACT_SPLIT: f64 = 1e-12;

/// Validated problem with its decomposition and plan.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub spec: GeneratorSpec,
    pub decomposition: DecomposedGenerator,
    pub plan: TrotterPlan,
    pub initial: DensityMatrix,
}

impl Problem {
    pub fn new(config: ProblemConfig) -> Result<Self> {
        let spec = config.spec()?;
        let initial = config.initial_state()?;
        let decomposition = decompose(&spec)?;
        if !(config.epsilon > 0.0 && config.epsilon <= 1.0) {
            return Err(crate::Error::BadEpsilon(config.epsilon));
        }
        let lambda = config.lambda.unwrap_or_else(|| lambda_cap(&decomposition));
        let plan = plan_with_lambda(&decomposition, spec.time, config.epsilon, lambda)?;
        Ok(Problem { config, spec, decomposition, plan, initial })
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexReport {
    pub re: [[f64; 2]; 2],
    pub im: [[f64; 2]; 2],
}

impl From<&Mat2> for ComplexReport {
    fn from(m: &Mat2) -> Self {
        ComplexReport {
            re: [[m[(0, 0)].re, m[(0, 1)].re], [m[(1, 0)].re, m[(1, 1)].re]],
            im: [[m[(0, 0)].im, m[(0, 1)].im], [m[(1, 0)].im, m[(1, 1)].im]],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermReport {
    pub k: usize,
    pub lambda: f64,
    pub theta: f64,
    #[serde(rename = "C")]
    pub rotation: [[f64; 3]; 3],
    #[serde(rename = "U")]
    pub lift: ComplexReport,
    pub psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeReport {
    pub terms: Vec<TermReport>,
    pub reconstruction_residual: f64,
}

fn residual(dec: &DecomposedGenerator, a: &Matrix3<crate::numerics::C64>) -> f64 {
    (dec.reconstructed_gks() - a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn decompose_report(config: &ProblemConfig) -> Result<DecomposeReport> {
    let spec = config.spec()?;
    let dec = decompose(&spec)?;
    let terms = dec
        .terms
        .iter()
        .map(|t| TermReport {
            k: t.k,
            lambda: t.lambda,
            theta: t.theta,
            rotation: [0, 1, 2].map(|i| [0, 1, 2].map(|j| t.rotation[(i, j)])),
            lift: ComplexReport::from(&t.lift),
            psi: t.psi,
        })
        .collect();
    Ok(DecomposeReport { terms, reconstruction_residual: residual(&dec, &spec.gks) })
}

pub fn cmd_decompose(config: &ProblemConfig) -> Result<String> {
    Ok(to_json(&decompose_report(config)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GateReport {
    pub one_qubit: u64,
    pub cnot: u64,
    pub ccnot: u64,
    pub channel_invocations: u64,
}

#[derive(Debug, Clone)]
pub struct CompileOutput {
    pub circuit: CircuitIR,
    pub qasm: String,
    pub report: GateReport,
    pub plan: TrotterPlan,
}

impl CompileOutput {
    pub fn report_json(&self) -> String {
        to_json(&self.report)
    }
}

/// Lowered gates of one factor on a local layout where qubit 2 is the system
/// and 0, 1, 3, 4 are ancilla, environment, fork1, fork2.
fn factor_template(dec: &DecomposedGenerator, f: &StepFactor) -> Result<Vec<Gate>> {
    if f.is_trivial() {
        return Ok(Vec::new());
    }
    if f.k == 0 {
        return single_qubit_gates(&hamiltonian_unitary(&dec.hamiltonian, f.duration), ForkLayout::STANDARD.sys);
    }
    let term = dec.terms.iter().find(|t| t.k == f.k).expect("factor refers to a decomposed term");
    let pair = extreme_pair(&canonical_params(term.theta, f.duration)?)?;
    lower_gates(&forking_gates(&pair, &term.lift, ForkLayout::STANDARD)?)
}

fn remap<'a>(gates: &'a [Gate], map: &[usize; 5]) -> impl Iterator<Item = Gate> + 'a {
    let map = *map;
    gates.iter().map(move |g| Gate { qubits: g.qubits.iter().map(|&q| map[q]).collect(), ..g.clone() })
}

/// Full evolution as one circuit. Qubit 0 is the system; dissipative factor
/// `i` (0-based, in time order) gets fresh qubits `1+4i .. 4+4i`.
pub fn compile_problem(p: &Problem) -> Result<CompileOutput> {
    let dec = &p.decomposition;
    let plan = &p.plan;
    let templates: Vec<Vec<Gate>> = plan.block.iter().map(|f| factor_template(dec, f)).collect::<Result<_>>()?;
    let dissipative = plan.dissipative_invocations() as usize;
    let mut circ = CircuitIR::new(1 + 4 * dissipative);
    circ.roles[0] = Some(QubitRole::System);
    circ.notes = vec![
        format!("steps N = {}, tau = {:.16e}, lambda = {:.16e}", plan.n, plan.tau, plan.lambda_cap),
        "q[0]: system".to_string(),
        "dissipative factor i (0-based, time order) uses fresh registers:".to_string(),
        "  q[1+4i] ancilla, q[2+4i] environment, q[3+4i] fork1, q[4+4i] fork2".to_string(),
    ];
    let mut next = 0usize;
    for _ in 0..plan.n {
        for (f, tpl) in plan.block.iter().zip(&templates) {
            if f.is_trivial() {
                continue;
            }
            if f.k == 0 {
                circ.extend(remap(tpl, &[0, 0, 0, 0, 0]));
            } else {
                let base = 1 + 4 * next;
                circ.extend(remap(tpl, &[base, base + 1, 0, base + 2, base + 3]));
                next += 1;
            }
        }
    }
    let qasm = emit_qasm(&circ)?;
    let counts = gate_counts(&circ.gates);
    let report = GateReport {
        one_qubit: counts.one_qubit,
        cnot: counts.cnot,
        ccnot: counts.ccnot,
        channel_invocations: plan.channel_invocations(),
    };
    Ok(CompileOutput { circuit: circ, qasm, report, plan: plan.clone() })
}

pub fn cmd_compile(config: &ProblemConfig) -> Result<CompileOutput> {
    compile_problem(&Problem::new(config.clone())?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub steps: u64,
    pub lambda: f64,
    pub epsilon: f64,
    pub theoretical_bound: f64,
    pub final_bloch: [f64; 3],
    pub oracle_final_bloch: [f64; 3],
    pub max_oracle_distance: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub csv: String,
    pub summary: SimulateSummary,
}

impl SimulateOutput {
    pub fn summary_json(&self) -> String {
        to_json(&self.summary)
    }
}

fn arr(v: Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn cmd_simulate(config: &ProblemConfig, samples: Option<usize>) -> Result<SimulateOutput> {
    let p = Problem::new(config.clone())?;
    let samples = samples.unwrap_or(config.samples).max(2);
    let traj = run_trajectory(&p.spec, &p.plan, &p.initial, samples)?;
    let summary = SimulateSummary {
        steps: p.plan.n,
        lambda: p.plan.lambda_cap,
        epsilon: config.epsilon,
        theoretical_bound: p.plan.error_bound(),
        final_bloch: arr(traj.final_state.bloch()),
        oracle_final_bloch: arr(traj.oracle_final.bloch()),
        max_oracle_distance: traj.max_oracle_distance(),
    };
    Ok(SimulateOutput { csv: traj.to_csv(), summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        CheckResult { name: name.into(), passed: value <= threshold, value, threshold }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "lambda")]
    pub lambda_cap: f64,
    pub theoretical_bound: f64,
    /// Estimated `‖S₂(τ)^N − e^{t𝓛}‖₁→₁`.
    pub measured_error: f64,
    pub max_oracle_distance: f64,
    pub convergence_order: Option<f64>,
    pub checks: Vec<CheckResult>,
    pub gate_counts: GateReport,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

fn probe_states() -> Vec<DensityMatrix> {
    [
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.3, -0.5, 0.2),
    ]
    .into_iter()
    .map(DensityMatrix::from_bloch)
    .collect()
}

fn max_entry(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Runs the invariant suite at the configured problem.
pub fn verify_problem(p: &Problem) -> Result<VerifyReport> {
    let tol = p.config.tolerance();
    let dec = &p.decomposition;
    let plan = &p.plan;
    let mut checks = Vec::new();

    checks.push(CheckResult::at_most("decomposition_residual", residual(dec, &p.spec.gks), 1e-9_f64.max(tol)));
    let worst_theta = dec.terms.iter().map(|t| t.theta.abs()).fold(0.0, f64::max);
    checks.push(CheckResult::at_most("theta_in_range", worst_theta, FRAC_PI_4 + 1e-12));

    // channel-level checks on every dissipative factor of one block
    let probes = probe_states();
    let one = Mat2::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
    let plus = Mat2::from_element(c(0.5, 0.0));
    let (mut kraus_res, mut stine, mut convex, mut fork, mut fork_inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for f in plan.block.iter().filter(|f| f.k > 0 && !f.is_trivial()) {
        let term = dec.terms.iter().find(|t| t.k == f.k).expect("factor refers to a decomposed term");
        let params = canonical_params(term.theta, f.duration)?;
        let pair = extreme_pair(&params)?;
        let tau = params.choi().0;
        convex = convex.max(max_entry4(&((pair.choi(1).0 + pair.choi(2).0) * c(0.5, 0.0) - tau)));
        for w in [1, 2] {
            kraus_res = kraus_res.max(pair.kraus(w).completeness_residual());
            for rho in &probes {
                let d = stinespring_apply(pair.unitary(w), &rho.0) - pair.kraus(w).apply(&rho.0);
                stine = stine.max(max_entry(&d));
            }
        }
        let t = factor_transfer(dec, f);
        for rho in &probes {
            let out = run_step(rho, f, dec)?;
            fork = fork.max(max_entry(&(out.0 - t.apply(rho).0)));
            for forks in [[one, one], [plus, one]] {
                let alt = run_step_with_forks(rho, f, dec, &forks)?;
                fork_inv = fork_inv.max(max_entry(&(alt.0 - out.0)));
            }
        }
    }
    checks.push(CheckResult::at_most("kraus_completeness", kraus_res, 1e-9));
    checks.push(CheckResult::at_most("stinespring_matches_kraus", stine, 1e-10));
    checks.push(CheckResult::at_most("extreme_pair_convexity", convex, 1e-10));
    checks.push(CheckResult::at_most("forking_matches_channel", fork, 1e-9));
    checks.push(CheckResult::at_most("fork_state_independence", fork_inv, 1e-10));

    // Hamiltonian factor circuits against the exact unitary
    let mut ham = 0.0f64;
    for f in plan.block.iter().filter(|f| f.k == 0 && !f.is_trivial()) {
        let gates = factor_template(dec, f)?;
        let u = crate::circuit::sequence_unitary(&remap(&gates, &[0, 0, 0, 0, 0]).collect::<Vec<_>>(), 1)?;
        let expect = crate::numerics::to_dyn2(&hamiltonian_unitary(&dec.hamiltonian, f.duration));
        ham = ham.max(crate::numerics::phase_insensitive_diff(&u, &expect));
    }
    checks.push(CheckResult::at_most("hamiltonian_gates", ham, 1e-10));

    // product formula error against the analytic bound
    let product = reference_product(dec, plan);
    let exact = exact_transfer(dec, plan.time);
    let measured = one_one_norm(&(product.0 - exact.0));
    let bound = plan.error_bound();
    checks.push(CheckResult::at_most("product_error_within_bound", measured, bound + p.config.tolerances.circuit_slack));

    // circuit trajectory against the oracle
    let traj = run_trajectory(&p.spec, plan, &p.initial, p.config.samples)?;
    let max_dist = traj.max_oracle_distance();
    checks.push(CheckResult::at_most(
        "trajectory_within_budget",
        max_dist,
        p.config.epsilon + p.config.tolerances.circuit_slack,
    ));
    let worst_len = traj
        .rows
        .iter()
        .map(|r| (r.bloch[0].powi(2) + r.bloch[1].powi(2) + r.bloch[2].powi(2)).sqrt())
        .fold(0.0, f64::max);
    checks.push(CheckResult::at_most("bloch_length", worst_len, 1.0 + 1e-8));

    // convergence order of the product formula
    let sweep = error_sweep(dec, plan.time.max(f64::MIN_POSITIVE), &SWEEP_STEPS, plan.lambda_cap, Execution::default());
    let exact_split = sweep.iter().all(|s| s.error < EXACT_SPLIT) || plan.time == 0.0;
    let order = if exact_split { None } else { Some(convergence_order(&sweep)) };
    let order_ok = match order {
        None => true,
        Some(o) => (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&o),
    };
    checks.push(CheckResult {
        name: "convergence_order".into(),
        passed: order_ok,
        value: order.unwrap_or(f64::NAN),
        threshold: ORDER_RANGE.0,
    });
    let sweep_bound = sweep.iter().all(|s| s.error <= s.bound + p.config.tolerances.circuit_slack);
    checks.push(CheckResult { name: "sweep_within_bound".into(), passed: sweep_bound, value: 0.0, threshold: 0.0 });

    let compiled = compile_problem(p)?;
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        n: plan.n,
        lambda_cap: plan.lambda_cap,
        theoretical_bound: bound,
        measured_error: measured,
        max_oracle_distance: max_dist,
        convergence_order: order,
        checks,
        gate_counts: compiled.report,
        passed,
    })
}

fn max_entry4(m: &crate::numerics::Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn cmd_verify(config: &ProblemConfig) -> Result<VerifyReport> {
    verify_problem(&Problem::new(config.clone())?)
}

/// Gate counts per dissipative invocation of each block factor, for reports.
pub fn per_factor_counts(p: &Problem) -> Result<Vec<(StepFactor, GateCounts)>> {
    p.plan
        .block
        .iter()
        .map(|f| Ok((*f, gate_counts(&factor_template(&p.decomposition, f)?))))
        .collect()
}
