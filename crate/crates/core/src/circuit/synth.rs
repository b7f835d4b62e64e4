//! Gate synthesis: ZYZ angles, controlled SU(2), the two-qubit Stinespring
//! circuits and the five-qubit forking circuit.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{ry, rz, CircuitIR, Gate, QubitRole};
use crate::error::{Error, Result};
use crate::extreme::ExtremeChannelPair;
use crate::numerics::{c, pauli, to_dyn2, unitarity_residual, Mat2, C64};

const UNITARY_TOL: f64 = 1e-10;
const ANGLE_EPS: f64 = 1e-14;

/// `U = e^{iδ} Rz(α) Ry(θ) Rz(β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zyz {
    pub delta: f64,
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
}

impl Zyz {
    pub fn matrix(&self) -> Mat2 {
        rz(self.alpha) * ry(self.theta) * rz(self.beta) * C64::from_polar(1.0, self.delta)
    }
}

fn max_diff(a: &Mat2, b: &Mat2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn zyz(u: &Mat2) -> Result<Zyz> {
    let res = unitarity_residual(&to_dyn2(u));
    if res > UNITARY_TOL {
        return Err(Error::NotUnitary(res));
    }
    let delta = 0.5 * u.determinant().arg();
    let v = u * C64::from_polar(1.0, -delta);
    let theta = 2.0 * v[(1, 0)].norm().atan2(v[(0, 0)].norm());
    let sum = if v[(0, 0)].norm() > 1e-12 { v[(1, 1)].arg() - v[(0, 0)].arg() } else { 0.0 };
    let diff = if v[(1, 0)].norm() > 1e-12 { v[(1, 0)].arg() - (-v[(0, 1)]).arg() } else { 0.0 };
    let mut out = Zyz { delta, alpha: 0.5 * (sum + diff), theta, beta: 0.5 * (sum - diff) };
    // the half-angle extraction fixes U only up to sign
    if max_diff(&out.matrix(), u) > 1e-8 {
        out.delta += PI;
    }
    debug_assert!(max_diff(&out.matrix(), u) < 1e-8);
    Ok(out)
}

/// ZYZ angles with `δ = 0` for `U ∈ SU(2)`.
pub fn zyz_special(u: &Mat2) -> Result<Zyz> {
    check_special(u)?;
    let mut z = zyz(u)?;
    z.delta = 0.0;
    if max_diff(&z.matrix(), u) > 1e-8 {
        z.alpha += 2.0 * PI;
    }
    Ok(z)
}

fn check_special(u: &Mat2) -> Result<()> {
    let res = unitarity_residual(&to_dyn2(u));
    if res > UNITARY_TOL {
        return Err(Error::NotUnitary(res));
    }
    let det = u.determinant();
    if (det - c(1.0, 0.0)).norm() > UNITARY_TOL {
        return Err(Error::NotSpecialUnitary { re: det.re, im: det.im });
    }
    Ok(())
}

/// `Rz(β), Ry(θ), Rz(α)` in time order, dropping zero angles and the phase.
pub fn single_qubit_gates(u: &Mat2, q: usize) -> Result<Vec<Gate>> {
    let z = zyz(u)?;
    let mut out = Vec::with_capacity(3);
    if z.beta.abs() > ANGLE_EPS {
        out.push(Gate::rz(z.beta, q));
    }
    if z.theta.abs() > ANGLE_EPS {
        out.push(Gate::ry(z.theta, q));
    }
    if z.alpha.abs() > ANGLE_EPS {
        out.push(Gate::rz(z.alpha, q));
    }
    Ok(out)
}

/// Controlled-`U` for `U ∈ SU(2)` as `A·X·B·X·C` with `ABC = 1`.
///
/// With `open` the gate fires on control `|0⟩`; the CNOTs carry the open flag
/// and are X-conjugated during lowering.
pub fn controlled_su2(u: &Mat2, control: usize, target: usize, open: bool) -> Result<Vec<Gate>> {
    check_special(u)?;
    if max_diff(u, &Mat2::identity()) < 1e-12 {
        return Ok(Vec::new());
    }
    let z = zyz_special(u)?;
    let cx = || if open { Gate::open_cnot(control, target) } else { Gate::cnot(control, target) };
    Ok(vec![
        Gate::rz(0.5 * (z.beta - z.alpha), target),
        cx(),
        Gate::rz(-0.5 * (z.beta + z.alpha), target),
        Gate::ry(-0.5 * z.theta, target),
        cx(),
        Gate::ry(0.5 * z.theta, target),
        Gate::rz(z.alpha, target),
    ])
}

/// Circuit for the Stinespring unitary of channel `which` (1 or 2) on
/// `env ⊗ sys`, environment starting in `|0⟩`.
///
/// The unitary factors as `U_A · U_B` with both factors conjugated by the
/// CNOT that fires on `env = |0⟩`; the inner pair of those CNOTs cancels.
pub fn synthesize_stinespring(pair: &ExtremeChannelPair, which: usize, env: usize, sys: usize) -> Result<Vec<Gate>> {
    if pair.identity {
        return Ok(Vec::new());
    }
    let (alpha, beta) = pair.params.stinespring_angles();
    let sign = if which == 1 { 1.0 } else { -1.0 };
    let (phi1, phi2) = (sign * pair.phi1, sign * pair.phi2);
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let ua = Mat2::new(C64::from_polar(ca, -phi1), c(-sa, 0.0), c(sa, 0.0), C64::from_polar(ca, phi1));
    let ub = Mat2::new(c(sb, 0.0), -C64::from_polar(cb, -phi2), C64::from_polar(cb, phi2), c(sb, 0.0));
    let mut gates = vec![Gate::open_cnot(env, sys)];
    gates.extend(controlled_su2(&ub, sys, env, true)?);
    gates.extend(controlled_su2(&ua, sys, env, false)?);
    gates.push(Gate::open_cnot(env, sys));
    Ok(gates)
}

/// Qubit assignment of one forking block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForkLayout {
    pub ancilla: usize,
    pub env: usize,
    pub sys: usize,
    pub fork1: usize,
    pub fork2: usize,
}

impl ForkLayout {
    pub const STANDARD: ForkLayout = ForkLayout { ancilla: 0, env: 1, sys: 2, fork1: 3, fork2: 4 };
}

/// Gates realizing `ρ ↦ U_k† · ½(T₁ + T₂)(U_k ρ U_k†) · U_k` on `layout.sys`.
///
/// Assumes ancilla and environment start in `|0⟩`; the fork registers may hold
/// any state. Ancilla, environment and forks are discarded afterwards.
pub fn forking_gates(pair: &ExtremeChannelPair, u_k: &Mat2, layout: ForkLayout) -> Result<Vec<Gate>> {
    let l = layout;
    let mut g = vec![Gate::ry(FRAC_PI_2, l.ancilla), Gate::unitary(*u_k, l.sys)];
    g.push(Gate::cswap(l.ancilla, l.env, l.fork1));
    g.push(Gate::cswap(l.ancilla, l.sys, l.fork2));
    g.extend(synthesize_stinespring(pair, 1, l.env, l.sys)?);
    g.extend(synthesize_stinespring(pair, 2, l.fork1, l.fork2)?);
    g.push(Gate::cswap(l.ancilla, l.env, l.fork1));
    g.push(Gate::cswap(l.ancilla, l.sys, l.fork2));
    g.push(Gate::unitary(u_k.adjoint(), l.sys));
    Ok(g)
}

/// Standalone five-qubit forking circuit.
pub fn forking_circuit(pair: &ExtremeChannelPair, u_k: &Mat2) -> Result<CircuitIR> {
    let l = ForkLayout::STANDARD;
    let mut circ = CircuitIR::new(5);
    circ.roles = vec![
        Some(QubitRole::Ancilla),
        Some(QubitRole::Environment),
        Some(QubitRole::System),
        Some(QubitRole::Fork1),
        Some(QubitRole::Fork2),
    ];
    circ.extend(forking_gates(pair, u_k, l)?);
    Ok(circ)
}

/// `exp(−i H s)` for Hermitian `H`.
pub fn hamiltonian_unitary(h: &Mat2, s: f64) -> Mat2 {
    let h0 = 0.5 * (h[(0, 0)] + h[(1, 1)]).re;
    let v = [1, 2, 3].map(|i| 0.5 * (pauli(i) * h).trace().re);
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (sn, cs) = (norm * s).sin_cos();
    let mut u = Mat2::identity() * c(cs, 0.0);
    if norm > 0.0 {
        for (k, vk) in v.iter().enumerate() {
            u -= pauli(k + 1) * c(0.0, sn * vk / norm);
        }
    }
    u * C64::from_polar(1.0, -h0 * s)
}

/// Gates for `exp(−i H s)` on qubit `q`; empty for `s = 0`.
pub fn hamiltonian_gate(h: &Mat2, s: f64, q: usize) -> Result<Vec<Gate>> {
    if s.abs() < 1e-12 {
        return Ok(Vec::new());
    }
    single_qubit_gates(&hamiltonian_unitary(h, s), q)
}

/// Amplitude damping with decay probability `p` as a three-gate circuit on
/// `env ⊗ sys`: CNOT, a controlled `Ry(2 arcsin √p)` onto the environment,
/// CNOT.
pub fn amplitude_damping_circuit(p: f64, env: usize, sys: usize) -> Result<Vec<Gate>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("decay probability {p} outside [0, 1]")));
    }
    let angle = 2.0 * p.sqrt().asin();
    let mut g = vec![Gate::cnot(env, sys)];
    g.extend(controlled_su2(&ry(angle), sys, env, false)?);
    g.push(Gate::cnot(env, sys));
    Ok(g)
}
