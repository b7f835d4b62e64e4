//! Classic Runge-Kutta integration of the master equation, used as the
//! reference the circuits are checked against.

use nalgebra::{Matrix4, Vector4};

use crate::channel::DensityMatrix;
use crate::decompose::GeneratorSpec;
use crate::error::{Error, Result};
use crate::numerics::spectral_norm4;

/// One RK4 step of `v' = L v`.
pub fn rk4_step(l: &Matrix4<f64>, v: &Vector4<f64>, h: f64) -> Vector4<f64> {
    let k1 = l * v;
    let k2 = l * (v + k1 * (0.5 * h));
    let k3 = l * (v + k2 * (0.5 * h));
    let k4 = l * (v + k3 * h);
    v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Steps needed to keep `h ≤ 10⁻³ · min(1, 1/‖L‖)` over `[0, t]`.
pub fn oracle_step_count(l: &Matrix4<f64>, t: f64) -> u64 {
    let norm = spectral_norm4(l);
    let h = 1e-3 * if norm > 1.0 { 1.0 / norm } else { 1.0 };
    ((t / h).ceil() as u64).max(1)
}

/// `ρ(t)` by `steps` equal RK4 steps on `(1, r)`.
pub fn ode_oracle(spec: &GeneratorSpec, rho0: &DensityMatrix, t: f64, steps: u64) -> Result<DensityMatrix> {
    if steps == 0 {
        return Err(Error::Domain("oracle needs at least one step".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let l = spec.generator()?.0;
    let h = t / steps as f64;
    let mut v = rho0.extended();
    for _ in 0..steps {
        v = rk4_step(&l, &v, h);
    }
    Ok(DensityMatrix::from_extended(&v))
}
