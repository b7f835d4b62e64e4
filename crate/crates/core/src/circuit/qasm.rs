use std::fmt::Write;

use super::{CircuitIR, GateCounts, GateKind};
use crate::error::{Error, Result};

/// OpenQASM 2.0 text for a lowered circuit.
pub fn emit_qasm(circ: &CircuitIR) -> Result<String> {
    circ.validate()?;
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    for note in &circ.notes {
        let _ = writeln!(out, "// {note}");
    }
    for (q, role) in circ.roles.iter().enumerate() {
        if let Some(r) = role {
            let _ = writeln!(out, "// q[{q}]: {}", r.label());
        }
    }
    let _ = writeln!(out, "qreg q[{}];", circ.qubit_count);
    for g in &circ.gates {
        if !g.is_primitive() {
            let name = if g.controls_on_zero.iter().any(|&f| f) { format!("open-controlled {}", g.kind.name()) } else { g.kind.name().to_string() };
            return Err(Error::UnloweredGate(name));
        }
        let q = &g.qubits;
        match g.kind {
            GateKind::X => writeln!(out, "x q[{}];", q[0]),
            GateKind::Ry(t) => writeln!(out, "ry({t:.16e}) q[{}];", q[0]),
            GateKind::Rz(t) => writeln!(out, "rz({t:.16e}) q[{}];", q[0]),
            GateKind::Cnot => writeln!(out, "cx q[{}],q[{}];", q[0], q[1]),
            GateKind::Ccnot => writeln!(out, "ccx q[{}],q[{}],q[{}];", q[0], q[1], q[2]),
            _ => unreachable!(),
        }
        .map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(out)
}

/// Counts gate statements in QASM text produced by [`emit_qasm`].
pub fn parse_qasm_counts(text: &str) -> GateCounts {
    let mut n = GateCounts::default();
    for line in text.lines().map(str::trim) {
        let head = line.split([' ', '(']).next().unwrap_or("");
        match head {
            "x" | "ry" | "rz" => n.one_qubit += 1,
            "cx" => n.cnot += 1,
            "ccx" => n.ccnot += 1,
            _ => {}
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{lower, Gate};

    #[test]
    fn empty_circuit() {
        let circ = CircuitIR::new(1);
        assert_eq!(emit_qasm(&circ).unwrap(), "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\n");
    }

    #[test]
    fn unlowered_rejected() {
        let mut circ = CircuitIR::new(3);
        circ.push(Gate::cswap(0, 1, 2));
        assert!(matches!(emit_qasm(&circ), Err(Error::UnloweredGate(_))));
        let mut circ = CircuitIR::new(2);
        circ.push(Gate::open_cnot(0, 1));
        assert!(matches!(emit_qasm(&circ), Err(Error::UnloweredGate(_))));
    }

    #[test]
    fn angles_round_trip() {
        let mut circ = CircuitIR::new(3);
        circ.extend([Gate::ry(0.123_456_789_012_345_68, 0), Gate::cswap(0, 1, 2), Gate::rz(-2.5e-7, 2)]);
        let low = lower(&circ).unwrap();
        let text = emit_qasm(&low).unwrap();
        assert!(text.contains("ry(1.2345678901234568e-1) q[0];"));
        let parsed: Vec<f64> = text
            .lines()
            .filter_map(|l| l.strip_prefix("rz(").map(|r| r.split(')').next().unwrap().parse().unwrap()))
            .collect();
        assert_eq!(parsed, vec![-2.5e-7]);
        assert_eq!(parse_qasm_counts(&text), low.counts());
    }
}
