//! Dense density-matrix simulation of small registers.

mod oracle;
mod run;

pub use oracle::{ode_oracle, oracle_step_count, rk4_step};
pub use run::{run_step, run_step_with_forks, run_trajectory, StepExecutor, Trajectory, TrajectoryRow};

use crate::circuit::{apply_local_left, check_gate, Gate};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexMatrix, Mat2, C64};

/// State of an `n`-qubit register; qubit 0 is the most significant factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub n: usize,
    pub matrix: ComplexMatrix,
}

impl DensityState {
    /// `|0…0⟩⟨0…0|`.
    pub fn zero(n: usize) -> Self {
        let dim = 1usize << n;
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(0, 0)] = C64::new(1.0, 0.0);
        DensityState { n, matrix: m }
    }

    /// Tensor product of single-qubit states, first factor is qubit 0.
    pub fn product(factors: &[Mat2]) -> Self {
        let m = factors
            .iter()
            .fold(ComplexMatrix::identity(1, 1), |acc, f| acc.kronecker(&crate::numerics::to_dyn2(f)));
        DensityState { n: factors.len(), matrix: m }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eig(&self.matrix)?.min_value())
    }

    /// Single-qubit matrix, if `n == 1`.
    pub fn as_qubit(&self) -> Option<Mat2> {
        (self.n == 1).then(|| Mat2::from_fn(|i, j| self.matrix[(i, j)]))
    }
}

/// `ρ ↦ GρG†`.
pub fn apply_gate(state: &DensityState, g: &Gate) -> Result<DensityState> {
    let mut out = state.clone();
    apply_gate_in_place(&mut out, g)?;
    Ok(out)
}

pub(crate) fn apply_gate_in_place(state: &mut DensityState, g: &Gate) -> Result<()> {
    check_gate(g, state.n)?;
    let local = g.local_matrix();
    // GρG† = (G (Gρ)†)†
    apply_local_left(&mut state.matrix, &local, &g.qubits, state.n);
    state.matrix.adjoint_mut();
    apply_local_left(&mut state.matrix, &local, &g.qubits, state.n);
    state.matrix.adjoint_mut();
    Ok(())
}

/// Applies a gate sequence.
pub fn apply_gates(state: &DensityState, gates: &[Gate]) -> Result<DensityState> {
    let mut out = state.clone();
    for g in gates {
        apply_gate_in_place(&mut out, g)?;
    }
    Ok(out)
}

/// Reduced state on `keep`, ordered by ascending qubit index.
pub fn partial_trace(state: &DensityState, keep: &[usize]) -> Result<DensityState> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let n = state.n;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&q) = kept.iter().find(|&&q| q >= n) {
        return Err(Error::IndexOutOfRange { index: q, qubits: n });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let spread = |bits: usize, qs: &[usize]| -> usize {
        let k = qs.len();
        qs.iter().enumerate().filter(|(j, _)| bits & (1 << (k - 1 - j)) != 0).map(|(_, &q)| 1usize << (n - 1 - q)).sum()
    };
    let kd = 1usize << kept.len();
    let kept_idx: Vec<usize> = (0..kd).map(|b| spread(b, &kept)).collect();
    let traced_idx: Vec<usize> = (0..1usize << traced.len()).map(|b| spread(b, &traced)).collect();
    let mut out = ComplexMatrix::zeros(kd, kd);
    for (i, &ki) in kept_idx.iter().enumerate() {
        for (j, &kj) in kept_idx.iter().enumerate() {
            out[(i, j)] = traced_idx.iter().map(|&t| state.matrix[(ki | t, kj | t)]).sum();
        }
    }
    Ok(DensityState { n: kept.len(), matrix: out })
}
