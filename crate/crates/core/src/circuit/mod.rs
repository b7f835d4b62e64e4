//! Gate-level intermediate representation.
//!
//! Qubit 0 is the most significant tensor factor. Controlled gates list their
//! controls first: `Cnot` is `[control, target]`, `Ccnot` is
//! `[c1, c2, target]` and `Cswap` is `[control, a, b]`.

mod qasm;
mod synth;

pub use qasm::{emit_qasm, parse_qasm_counts};
pub use synth::{
    amplitude_damping_circuit, controlled_su2, forking_circuit, forking_gates, hamiltonian_gate, hamiltonian_unitary,
    single_qubit_gates, synthesize_stinespring, zyz, zyz_special, ForkLayout, Zyz,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{c, ComplexMatrix, Mat2, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    X,
    Ry(f64),
    Rz(f64),
    /// Global phase `e^{iδ}`; only meaningful uncontrolled.
    PhaseDiag(f64),
    Cnot,
    Ccnot,
    Cswap,
    /// Arbitrary single-qubit unitary, removed by [`lower`].
    Unitary1Q(Mat2),
}

impl GateKind {
    fn controls(&self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cswap => 1,
            GateKind::Ccnot => 2,
            _ => 0,
        }
    }

    fn arity(&self) -> usize {
        match self {
            GateKind::Cnot => 2,
            GateKind::Ccnot | GateKind::Cswap => 3,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::PhaseDiag(_) => "phase",
            GateKind::Cnot => "cx",
            GateKind::Ccnot => "ccx",
            GateKind::Cswap => "cswap",
            GateKind::Unitary1Q(_) => "u",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// One flag per control; `true` fires on `|0⟩`.
    pub controls_on_zero: Vec<bool>,
}

impl Gate {
    fn build(kind: GateKind, qubits: Vec<usize>, controls_on_zero: Vec<bool>) -> Gate {
        debug_assert_eq!(qubits.len(), kind.arity());
        debug_assert_eq!(controls_on_zero.len(), kind.controls());
        Gate { kind, qubits, controls_on_zero }
    }

    pub fn x(q: usize) -> Gate {
        Gate::build(GateKind::X, vec![q], vec![])
    }

    pub fn ry(angle: f64, q: usize) -> Gate {
        Gate::build(GateKind::Ry(angle), vec![q], vec![])
    }

    pub fn rz(angle: f64, q: usize) -> Gate {
        Gate::build(GateKind::Rz(angle), vec![q], vec![])
    }

    pub fn phase(delta: f64, q: usize) -> Gate {
        Gate::build(GateKind::PhaseDiag(delta), vec![q], vec![])
    }

    pub fn unitary(u: Mat2, q: usize) -> Gate {
        Gate::build(GateKind::Unitary1Q(u), vec![q], vec![])
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::build(GateKind::Cnot, vec![control, target], vec![false])
    }

    /// CNOT firing when the control is `|0⟩`.
    pub fn open_cnot(control: usize, target: usize) -> Gate {
        Gate::build(GateKind::Cnot, vec![control, target], vec![true])
    }

    pub fn ccnot(c1: usize, c2: usize, target: usize) -> Gate {
        Gate::build(GateKind::Ccnot, vec![c1, c2, target], vec![false, false])
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Gate {
        Gate::build(GateKind::Cswap, vec![control, a, b], vec![false])
    }

    pub fn with_open_controls(mut self, flags: Vec<bool>) -> Gate {
        assert_eq!(flags.len(), self.kind.controls());
        self.controls_on_zero = flags;
        self
    }

    pub fn is_primitive(&self) -> bool {
        matches!(self.kind, GateKind::X | GateKind::Ry(_) | GateKind::Rz(_) | GateKind::Cnot | GateKind::Ccnot)
            && self.controls_on_zero.iter().all(|f| !f)
    }

    /// Matrix on the gate's own qubits, first listed qubit most significant.
    pub fn local_matrix(&self) -> ComplexMatrix {
        let x = Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        match &self.kind {
            GateKind::X => dyn2(&x),
            GateKind::Ry(t) => dyn2(&ry(*t)),
            GateKind::Rz(t) => dyn2(&rz(*t)),
            GateKind::PhaseDiag(d) => dyn2(&(Mat2::identity() * C64::from_polar(1.0, *d))),
            GateKind::Unitary1Q(u) => dyn2(u),
            GateKind::Cnot | GateKind::Ccnot => controlled(&dyn2(&x), &self.controls_on_zero),
            GateKind::Cswap => {
                let mut swap = ComplexMatrix::zeros(4, 4);
                for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                    swap[(i, j)] = c(1.0, 0.0);
                }
                controlled(&swap, &self.controls_on_zero)
            }
        }
    }
}

fn dyn2(m: &Mat2) -> ComplexMatrix {
    crate::numerics::to_dyn2(m)
}

/// Block-diagonal controlled operator with the controls on the leading bits.
fn controlled(target: &ComplexMatrix, open: &[bool]) -> ComplexMatrix {
    let nc = open.len();
    let td = target.nrows();
    let dim = td << nc;
    let mut m = ComplexMatrix::identity(dim, dim);
    let active: usize = open
        .iter()
        .enumerate()
        .map(|(j, &o)| if o { 0 } else { 1 << (nc - 1 - j) })
        .sum();
    let off = active * td;
    for i in 0..td {
        for j in 0..td {
            m[(off + i, off + j)] = target[(i, j)];
        }
    }
    m
}

/// `exp(−iθY/2)`.
pub fn ry(theta: f64) -> Mat2 {
    let (s, co) = (0.5 * theta).sin_cos();
    Mat2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// `exp(−iθZ/2)`.
pub fn rz(theta: f64) -> Mat2 {
    Mat2::new(C64::from_polar(1.0, -0.5 * theta), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, 0.5 * theta))
}

/// Left-multiplies `m` (rows indexed by an `n`-qubit basis) by `local`
/// acting on `qubits`.
pub fn apply_local_left(m: &mut ComplexMatrix, local: &ComplexMatrix, qubits: &[usize], n: usize) {
    let k = qubits.len();
    let ld = 1usize << k;
    debug_assert_eq!(local.nrows(), ld);
    let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..ld)
        .map(|l| (0..k).filter(|&j| l & (1 << (k - 1 - j)) != 0).map(|j| masks[j]).sum())
        .collect();
    let dim = 1usize << n;
    let cols = m.ncols();
    let mut buf = vec![C64::new(0.0, 0.0); ld];
    for base in (0..dim).filter(|b| b & all == 0) {
        for col in 0..cols {
            for (l, &o) in offsets.iter().enumerate() {
                buf[l] = m[(base | o, col)];
            }
            for (r, &o) in offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (l, v) in buf.iter().enumerate() {
                    acc += local[(r, l)] * v;
                }
                m[(base | o, col)] = acc;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitRole {
    Ancilla,
    Environment,
    System,
    Fork1,
    Fork2,
}

impl QubitRole {
    pub fn label(&self) -> &'static str {
        match self {
            QubitRole::Ancilla => "ancilla",
            QubitRole::Environment => "environment",
            QubitRole::System => "system",
            QubitRole::Fork1 => "fork1",
            QubitRole::Fork2 => "fork2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitIR {
    pub qubit_count: usize,
    /// Role per qubit, `None` when unassigned.
    pub roles: Vec<Option<QubitRole>>,
    pub gates: Vec<Gate>,
    /// Free-form header lines for emitted files.
    pub notes: Vec<String>,
}

impl CircuitIR {
    pub fn new(qubit_count: usize) -> Self {
        CircuitIR { qubit_count, roles: vec![None; qubit_count], gates: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gs: I) {
        self.gates.extend(gs);
    }

    /// Checks qubit ranges and distinctness.
    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            check_gate(g, self.qubit_count)?;
        }
        Ok(())
    }

    /// Full `2ⁿ × 2ⁿ` unitary, for small circuits.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        self.validate()?;
        let dim = 1usize << self.qubit_count;
        let mut u = ComplexMatrix::identity(dim, dim);
        for g in &self.gates {
            apply_local_left(&mut u, &g.local_matrix(), &g.qubits, self.qubit_count);
        }
        Ok(u)
    }

    pub fn is_lowered(&self) -> bool {
        self.gates.iter().all(Gate::is_primitive)
    }

    pub fn counts(&self) -> GateCounts {
        gate_counts(&self.gates)
    }
}

pub fn check_gate(g: &Gate, n: usize) -> Result<()> {
    for (i, &q) in g.qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::IndexOutOfRange { index: q, qubits: n });
        }
        if g.qubits[..i].contains(&q) {
            return Err(Error::Domain(format!("gate {} repeats qubit {q}", g.kind.name())));
        }
    }
    Ok(())
}

/// Unitary of a gate sequence on `n` qubits.
pub fn sequence_unitary(gates: &[Gate], n: usize) -> Result<ComplexMatrix> {
    let mut circ = CircuitIR::new(n);
    circ.extend(gates.iter().cloned());
    circ.unitary()
}

/// Rewrites a circuit over `{X, Ry, Rz, CNOT, CCNOT}` with positive controls.
///
/// Open controls become X conjugations, `CSWAP(c; a, b)` becomes
/// `CX(b→a) · CCX(c, a→b) · CX(b→a)`, single-qubit unitaries go through ZYZ
/// with the global phase dropped, and uncontrolled phases are dropped.
pub fn lower(circ: &CircuitIR) -> Result<CircuitIR> {
    let mut out = CircuitIR { gates: Vec::with_capacity(circ.gates.len() * 2), ..circ.clone() };
    for g in &circ.gates {
        check_gate(g, circ.qubit_count)?;
        lower_gate(g, &mut out.gates)?;
    }
    Ok(out)
}

pub fn lower_gates(gates: &[Gate]) -> Result<Vec<Gate>> {
    let mut out = Vec::with_capacity(gates.len() * 2);
    for g in gates {
        lower_gate(g, &mut out)?;
    }
    Ok(out)
}

fn lower_gate(g: &Gate, out: &mut Vec<Gate>) -> Result<()> {
    let nc = g.kind.controls();
    let flips: Vec<usize> = (0..nc).filter(|&j| g.controls_on_zero[j]).map(|j| g.qubits[j]).collect();
    out.extend(flips.iter().map(|&q| Gate::x(q)));
    match &g.kind {
        GateKind::X | GateKind::Ry(_) | GateKind::Rz(_) => out.push(g.clone()),
        GateKind::PhaseDiag(_) => {}
        GateKind::Unitary1Q(u) => out.extend(single_qubit_gates(u, g.qubits[0])?),
        GateKind::Cnot => out.push(Gate::cnot(g.qubits[0], g.qubits[1])),
        GateKind::Ccnot => out.push(Gate::ccnot(g.qubits[0], g.qubits[1], g.qubits[2])),
        GateKind::Cswap => {
            let (ctl, a, b) = (g.qubits[0], g.qubits[1], g.qubits[2]);
            out.push(Gate::cnot(b, a));
            out.push(Gate::ccnot(ctl, a, b));
            out.push(Gate::cnot(b, a));
        }
    }
    out.extend(flips.iter().map(|&q| Gate::x(q)));
    Ok(())
}

/// Primitive gate totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub one_qubit: u64,
    pub cnot: u64,
    pub ccnot: u64,
}

impl std::ops::AddAssign for GateCounts {
    fn add_assign(&mut self, o: Self) {
        self.one_qubit += o.one_qubit;
        self.cnot += o.cnot;
        self.ccnot += o.ccnot;
    }
}

impl std::ops::Mul<u64> for GateCounts {
    type Output = GateCounts;
    fn mul(self, k: u64) -> GateCounts {
        GateCounts { one_qubit: self.one_qubit * k, cnot: self.cnot * k, ccnot: self.ccnot * k }
    }
}

pub fn gate_counts(gates: &[Gate]) -> GateCounts {
    let mut n = GateCounts::default();
    for g in gates {
        match g.kind {
            GateKind::Cnot => n.cnot += 1,
            GateKind::Ccnot => n.ccnot += 1,
            GateKind::Cswap => {}
            _ => n.one_qubit += 1,
        }
    }
    n
}
