//! Qubit states and channels: density matrices, transfer matrices in the
//! normalized Pauli basis `G_a = σ_a/√2`, Choi matrices and Kraus sets.
//!
//! A transfer matrix `T` acts on the coefficient vector `x_a = tr(G_a ρ)`,
//! which for a state is `(1, r_x, r_y, r_z)/√2`. Since `T` is linear it acts on
//! the un-normalized Bloch-extended vector `(1, r)` in the same way.
//!
//! Choi matrices use `|Ω⟩ = (|00⟩ + |11⟩)/√2` with the channel acting on the
//! first factor. `(K ⊗ 1)|Ω⟩` is `K` flattened row-major and divided by `√2`.

mod norm;

pub use norm::{one_one_norm, one_one_norm_with, OneOneNorm};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::numerics::{self, c, hermitian_eig, pauli, ComplexMatrix, Mat2, Mat4, C64, I};

/// Eigenvalues of a Choi matrix below this are treated as zero when
/// extracting Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-12;

/// Qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub Mat2);

impl DensityMatrix {
    /// Validates positivity, unit trace and Hermiticity at `tol`.
    pub fn new(m: Mat2, tol: f64) -> Result<Self> {
        let d = numerics::to_dyn2(&m);
        let dev = numerics::hermitian_deviation(&d);
        if dev > tol {
            return Err(Error::NonHermitianInput { deviation: dev });
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::Domain(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = hermitian_eig(&d)?.min_value();
        if min < -tol {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(DensityMatrix(m))
    }

    pub fn from_bloch(r: Vector3<f64>) -> Self {
        let half = C64::new(0.5, 0.0);
        let m = (pauli(0) + pauli(1) * c(r.x, 0.0) + pauli(2) * c(r.y, 0.0) + pauli(3) * c(r.z, 0.0)) * half;
        DensityMatrix(m)
    }

    /// Pure state `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn pure(psi: [C64; 2]) -> Self {
        DensityMatrix(Mat2::from_fn(|i, j| psi[i] * psi[j].conj()))
    }

    pub fn ground() -> Self {
        Self::from_bloch(Vector3::new(0.0, 0.0, 1.0))
    }

    pub fn excited() -> Self {
        Self::from_bloch(Vector3::new(0.0, 0.0, -1.0))
    }

    /// `(tr ρσ_x, tr ρσ_y, tr ρσ_z)`.
    pub fn bloch(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| (pauli(i + 1) * self.0).trace().re)
    }

    /// `(1, r)`.
    pub fn extended(&self) -> Vector4<f64> {
        let b = self.bloch();
        Vector4::new((self.0).trace().re, b.x, b.y, b.z)
    }

    pub fn from_extended(v: &Vector4<f64>) -> Self {
        let half = C64::new(0.5, 0.0);
        let m = (pauli(0) * c(v[0], 0.0) + pauli(1) * c(v[1], 0.0) + pauli(2) * c(v[2], 0.0) + pauli(3) * c(v[3], 0.0)) * half;
        DensityMatrix(m)
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        0.5 * numerics::trace_norm2(&(self.0 - other.0))
    }

    pub fn conjugate(&self, u: &Mat2) -> Self {
        DensityMatrix(u * self.0 * u.adjoint())
    }
}

/// Channel matrix in the normalized Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub Matrix4<f64>);

/// Generator matrix in the normalized Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorMatrix(pub Matrix4<f64>);

/// Trace-one Choi matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix(pub Mat4);

/// Kraus operators `K_j` with `Σ K_j†K_j = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet(pub Vec<Mat2>);

impl TransferMatrix {
    pub fn identity() -> Self {
        TransferMatrix(Matrix4::identity())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_extended(&(self.0 * rho.extended()))
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &TransferMatrix) -> TransferMatrix {
        TransferMatrix(self.0 * other.0)
    }
}

impl KrausSet {
    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        self.0.iter().fold(Mat2::zeros(), |acc, k| acc + k * rho * k.adjoint())
    }

    /// Largest entry of `|Σ K†K − 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let s = self.0.iter().fold(Mat2::zeros(), |acc, k| acc + k.adjoint() * k);
        (s - Mat2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let mut tau = Mat4::zeros();
        for k in &self.0 {
            let v = vectorize(k);
            tau += v * v.adjoint();
        }
        ChoiMatrix(tau)
    }
}

/// `(K ⊗ 1)|Ω⟩`.
pub fn vectorize(k: &Mat2) -> nalgebra::Vector4<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    nalgebra::Vector4::new(k[(0, 0)] * s, k[(0, 1)] * s, k[(1, 0)] * s, k[(1, 1)] * s)
}

fn normalized_pauli(a: usize) -> Mat2 {
    pauli(a) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// Matrix of an arbitrary linear map on 2×2 matrices in the normalized Pauli
/// basis. Real parts only; the map is expected to be Hermiticity preserving.
pub fn transfer_of_map<F: Fn(&Mat2) -> Mat2>(f: F) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| (normalized_pauli(a) * f(&normalized_pauli(b))).trace().re)
}

/// Transfer matrix of `ρ ↦ UρU†`.
pub fn conjugation_transfer(u: &Mat2) -> TransferMatrix {
    TransferMatrix(transfer_of_map(|x| u * x * u.adjoint()))
}

pub fn kraus_transfer(k: &KrausSet) -> TransferMatrix {
    TransferMatrix(transfer_of_map(|x| k.apply(x)))
}

/// Right-hand side of the master equation,
/// `−i[H,ρ] + Σ_ij A_ij (σ_i ρ σ_j − ½{σ_j σ_i, ρ})`.
pub fn apply_generator(h: &Mat2, a: &Matrix3<C64>, rho: &Mat2) -> Mat2 {
    let mut out = (h * rho - rho * h) * (-I);
    for i in 0..3 {
        for j in 0..3 {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let si = pauli(i + 1);
            let sj = pauli(j + 1);
            let sjsi = sj * si;
            out += (si * rho * sj - (sjsi * rho + rho * sjsi) * C64::new(0.5, 0.0)) * aij;
        }
    }
    out
}

/// Matrix of the GKSL generator for Hamiltonian `h` and GKS matrix `a`.
pub fn generator_matrix(h: &Mat2, a: &Matrix3<C64>) -> Result<GeneratorMatrix> {
    let hd = numerics::hermitian_deviation(&numerics::to_dyn2(h));
    if hd > numerics::HERMITIAN_REJECT {
        return Err(Error::NonHermitianInput { deviation: hd });
    }
    let ad = ComplexMatrix::from_fn(3, 3, |i, j| a[(i, j)]);
    let dev = numerics::hermitian_deviation(&ad);
    if dev > numerics::HERMITIAN_REJECT {
        return Err(Error::NonHermitianInput { deviation: dev });
    }
    Ok(GeneratorMatrix(transfer_of_map(|x| apply_generator(h, a, x))))
}

/// `exp(t L)`.
pub fn transfer_from_generator(l: &GeneratorMatrix, t: f64) -> Result<TransferMatrix> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    Ok(TransferMatrix(numerics::matrix_exp4(&l.0, t)))
}

/// `τ = ¼ Σ_ij T_ij σ_i ⊗ σ_jᵀ`.
pub fn choi_from_transfer(t: &TransferMatrix) -> ChoiMatrix {
    let mut tau = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let tij = t.0[(i, j)];
            if tij == 0.0 {
                continue;
            }
            tau += pauli(i).kronecker(&pauli(j).transpose()) * C64::new(0.25 * tij, 0.0);
        }
    }
    ChoiMatrix(tau)
}

/// Inverse of [`choi_from_transfer`]: `T_ij = tr[(σ_i ⊗ σ_jᵀ) τ]`.
pub fn transfer_from_choi(tau: &ChoiMatrix) -> TransferMatrix {
    TransferMatrix(Matrix4::from_fn(|i, j| {
        (pauli(i).kronecker(&pauli(j).transpose()) * tau.0).trace().re
    }))
}

/// Kraus operators from the eigendecomposition of a Choi matrix,
/// `K_j[a][i] = √(2μ_j) v_j[2a + i]`.
pub fn kraus_from_choi(tau: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    let eig = hermitian_eig(&numerics::to_dyn4(&tau.0))?;
    if eig.min_value() < -tol {
        return Err(Error::NotPsd { min_eigenvalue: eig.min_value() });
    }
    let mut ks = Vec::new();
    for (k, &mu) in eig.values.iter().enumerate() {
        if mu < KRAUS_CUTOFF {
            continue;
        }
        let scale = (2.0 * mu).sqrt();
        let v = eig.vector(k);
        ks.push(Mat2::new(v[0] * scale, v[1] * scale, v[2] * scale, v[3] * scale));
    }
    Ok(KrausSet(ks))
}

/// Choi-type matrix of the dual channel, `(U₂₃ β U₂₃)*` where `U₂₃` swaps the
/// second and third basis vectors.
pub fn dual_beta(beta: &Mat4) -> Mat4 {
    let p = [0usize, 2, 1, 3];
    Mat4::from_fn(|i, j| beta[(p[i], p[j])].conj())
}

/// Generator of the canonical semigroup in closed form.
pub fn canonical_generator(theta: f64) -> GeneratorMatrix {
    let (s, co) = theta.sin_cos();
    GeneratorMatrix(Matrix4::new(
        0.0, 0.0, 0.0, 0.0,
        0.0, -2.0 * s * s, 0.0, 0.0,
        0.0, 0.0, -2.0 * co * co, 0.0,
        -4.0 * co * s, 0.0, 0.0, -2.0,
    ))
}

/// `A(θ) = a(θ)a(θ)†` with `a(θ) = (cos θ, −i sin θ, 0)`.
pub fn canonical_gks(theta: f64) -> Matrix3<C64> {
    let v = canonical_vector(theta);
    Matrix3::from_fn(|i, j| v[i] * v[j].conj())
}

pub fn canonical_vector(theta: f64) -> Vector3<C64> {
    Vector3::new(c(theta.cos(), 0.0), c(0.0, -theta.sin()), c(0.0, 0.0))
}
