//! Splitting a generator into constituent semigroups.
//!
//! The GKS matrix is diagonalized as `A = Σ_k λ_k a_k a_k†`. Each eigenvector is
//! brought to the canonical form `a(θ) = (cos θ, −i sin θ, 0)` by a global phase
//! and a real rotation `C_k ∈ SO(3)`, so that `a_k a_k† = C_kᵀ A(θ_k) C_k`. The
//! rotation is realized on the qubit by an SU(2) element `U_k` with
//! `U_k† σ_i U_k = Σ_γ (C_k)_{iγ} σ_γ`, which makes the constituent channel
//! `ρ ↦ U_k† T^(θ_k)(U_k ρ U_k†) U_k`.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::Serialize;

use crate::channel::{self, canonical_gks, conjugation_transfer, GeneratorMatrix};
use crate::error::{Error, Result};
use crate::numerics::{self, c, pauli, ComplexMatrix, Mat2, C64};

/// Eigenvalues of `A` below this do not produce a term.
pub const EIGEN_CUTOFF: f64 = 1e-12;
const DEGENERATE: f64 = 1e-12;

/// Problem input: Hamiltonian, GKS matrix and evolution time.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub hamiltonian: Mat2,
    pub gks: Matrix3<C64>,
    pub time: f64,
}

impl GeneratorSpec {
    /// Validates Hermiticity of `H` and `A`, positivity of `A` and `t ≥ 0`.
    pub fn new(hamiltonian: Mat2, gks: Matrix3<C64>, time: f64, tol: f64) -> Result<Self> {
        let hd = numerics::hermitian_deviation(&numerics::to_dyn2(&hamiltonian));
        if hd > tol {
            return Err(Error::NonHermitianInput { deviation: hd });
        }
        let ad = numerics::hermitian_deviation(&to_dyn3(&gks));
        if ad > tol {
            return Err(Error::NonHermitianInput { deviation: ad });
        }
        numerics::validate_psd(&to_dyn3(&gks), tol)?;
        if !(time >= 0.0) || !time.is_finite() {
            return Err(Error::NegativeTime(time));
        }
        Ok(GeneratorSpec { hamiltonian, gks, time })
    }

    pub fn generator(&self) -> Result<GeneratorMatrix> {
        channel::generator_matrix(&self.hamiltonian, &self.gks)
    }
}

fn to_dyn3(m: &Matrix3<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}

/// One dissipative term `λ_k 𝓛_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstituentTerm {
    /// 1-based position in descending eigenvalue order.
    pub k: usize,
    pub lambda: f64,
    pub theta: f64,
    /// `C_k`.
    #[serde(serialize_with = "ser_real3")]
    pub rotation: Matrix3<f64>,
    /// `U_k`.
    #[serde(serialize_with = "ser_complex2")]
    pub lift: Mat2,
    pub psi: f64,
}

impl ConstituentTerm {
    /// `C_kᵀ A(θ_k) C_k`.
    pub fn gks(&self) -> Matrix3<C64> {
        let cc = self.rotation.map(|v| c(v, 0.0));
        cc.transpose() * canonical_gks(self.theta) * cc
    }

    /// Generator matrix of `𝓛_k` (without `λ_k`), built from the conjugated
    /// canonical generator.
    pub fn unit_generator(&self) -> Matrix4<f64> {
        let u = &self.lift;
        conjugation_transfer(&u.adjoint()).0 * channel::canonical_generator(self.theta).0 * conjugation_transfer(u).0
    }
}

/// Hamiltonian term plus up to three dissipative terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposedGenerator {
    #[serde(serialize_with = "ser_complex2")]
    pub hamiltonian: Mat2,
    pub terms: Vec<ConstituentTerm>,
}

impl DecomposedGenerator {
    /// `Σ_k λ_k C_kᵀ A(θ_k) C_k`.
    pub fn reconstructed_gks(&self) -> Matrix3<C64> {
        self.terms.iter().fold(Matrix3::zeros(), |acc, t| acc + t.gks() * c(t.lambda, 0.0))
    }

    pub fn hamiltonian_is_zero(&self) -> bool {
        self.hamiltonian.iter().all(|z| z.norm() < EIGEN_CUTOFF)
    }

    /// Generator matrix of `𝓛₀ = −i[H, ·]`.
    pub fn hamiltonian_generator(&self) -> Matrix4<f64> {
        channel::transfer_of_map(|x| (self.hamiltonian * x - x * self.hamiltonian) * c(0.0, -1.0))
    }

    /// Generator matrix of term `k` including `λ_k`; `k = 0` is the
    /// Hamiltonian.
    pub fn term_generator(&self, k: usize) -> Matrix4<f64> {
        if k == 0 {
            return self.hamiltonian_generator();
        }
        let t = self.terms.iter().find(|t| t.k == k).expect("term index present in decomposition");
        t.unit_generator() * t.lambda
    }

    /// Sum of all term generators.
    pub fn total_generator(&self) -> Matrix4<f64> {
        self.terms
            .iter()
            .fold(self.hamiltonian_generator(), |acc, t| acc + t.unit_generator() * t.lambda)
    }
}

/// Eigenpairs of `A` with `λ ≥ 1e-12`, descending.
pub fn spectral_split(a: &Matrix3<C64>, tol: f64) -> Result<Vec<(f64, Vector3<C64>)>> {
    let eig = numerics::hermitian_eig(&to_dyn3(a))?;
    if eig.min_value() < -tol {
        return Err(Error::NotPsd { min_eigenvalue: eig.min_value() });
    }
    Ok(eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= EIGEN_CUTOFF)
        .map(|(k, &l)| {
            let v = eig.vector(k);
            (l, Vector3::new(v[0], v[1], v[2]))
        })
        .collect())
}

/// Output of [`canonicalize_vector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalForm {
    pub theta: f64,
    pub psi: f64,
    /// Rows `â'ᴿ`, `−â'ᴵ`, `â'ᴿ × (−â'ᴵ)`.
    pub rotation: Matrix3<f64>,
}

/// Finds `ψ`, `θ` and `G ∈ SO(3)` with `G e^{iψ} a = (cos θ, −i sin θ, 0)`.
pub fn canonicalize_vector(a: &Vector3<C64>) -> Result<CanonicalForm> {
    let norm = a.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitVector(norm));
    }
    let re = a.map(|z| z.re);
    let im = a.map(|z| z.im);
    let k1 = re.norm_squared() - im.norm_squared();
    let k2 = 2.0 * re.dot(&im);
    // this choice makes the rotated real and imaginary parts orthogonal with
    // |re'| ≥ |im'|
    let psi = if k1.abs() < DEGENERATE && k2.abs() < DEGENERATE { 0.0 } else { 0.5 * (-k2).atan2(k1) };
    let (s, co) = psi.sin_cos();
    let re2 = re * co - im * s;
    let im2 = re * s + im * co;
    let (nr, ni) = (re2.norm(), im2.norm());
    let theta = ni.atan2(nr);

    let x = re2 / nr;
    let y = if ni < DEGENERATE {
        let cx = x.cross(&Vector3::x());
        let cy = x.cross(&Vector3::y());
        // larger candidate; cross products with x̂ and ŷ never both vanish
        if cx.norm() >= cy.norm() { cx.normalize() } else { cy.normalize() }
    } else {
        // Gram-Schmidt against rounding in the orthogonality of re2, im2
        let v = -im2;
        (v - x * x.dot(&v)).normalize()
    };
    let z = x.cross(&y);
    let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    Ok(CanonicalForm { theta, psi, rotation })
}

fn quaternion_from_rotation(r: &Matrix3<f64>) -> [f64; 4] {
    // Shepperd: pick the largest of 4w², 4x², 4y², 4z² as pivot
    let tr = r.trace();
    let cands = [tr, r[(0, 0)], r[(1, 1)], r[(2, 2)]];
    let pivot = (0..4).fold(0, |b, i| if cands[i] > cands[b] { i } else { b });
    let q = match pivot {
        0 => {
            let w = 0.5 * (1.0 + tr).sqrt();
            let f = 0.25 / w;
            [w, (r[(2, 1)] - r[(1, 2)]) * f, (r[(0, 2)] - r[(2, 0)]) * f, (r[(1, 0)] - r[(0, 1)]) * f]
        }
        1 => {
            let x = 0.5 * (1.0 + 2.0 * r[(0, 0)] - tr).sqrt();
            let f = 0.25 / x;
            [(r[(2, 1)] - r[(1, 2)]) * f, x, (r[(0, 1)] + r[(1, 0)]) * f, (r[(0, 2)] + r[(2, 0)]) * f]
        }
        2 => {
            let y = 0.5 * (1.0 + 2.0 * r[(1, 1)] - tr).sqrt();
            let f = 0.25 / y;
            [(r[(0, 2)] - r[(2, 0)]) * f, (r[(0, 1)] + r[(1, 0)]) * f, y, (r[(1, 2)] + r[(2, 1)]) * f]
        }
        _ => {
            let z = 0.5 * (1.0 + 2.0 * r[(2, 2)] - tr).sqrt();
            let f = 0.25 / z;
            [(r[(1, 0)] - r[(0, 1)]) * f, (r[(0, 2)] + r[(2, 0)]) * f, (r[(1, 2)] + r[(2, 1)]) * f, z]
        }
    };
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// `c_{αγ} = tr(σ_γ U† σ_α U)/2`, returned together with the largest
/// imaginary residue.
pub fn adjoint_representation(u: &Mat2) -> (Matrix3<f64>, f64) {
    let mut m = Matrix3::zeros();
    let mut imag: f64 = 0.0;
    for a in 0..3 {
        let conj = u.adjoint() * pauli(a + 1) * u;
        for g in 0..3 {
            let v = (pauli(g + 1) * conj).trace() * 0.5;
            m[(a, g)] = v.re;
            imag = imag.max(v.im.abs());
        }
    }
    (m, imag)
}

/// SU(2) element `U` with `U† σ_i U = Σ_γ C_{iγ} σ_γ`.
pub fn lift_so3_to_su2(rot: &Matrix3<f64>) -> Result<Mat2> {
    let orth = (rot.transpose() * rot - Matrix3::identity()).abs().max();
    let det = rot.determinant();
    if orth > 1e-9 || (det - 1.0).abs() > 1e-9 {
        return Err(Error::NotSo3 { residual: orth, det });
    }
    // U = w − i(xσ₁ + yσ₂ + zσ₃) = exp(−iφ n·σ/2)
    let [w, x, y, z] = quaternion_from_rotation(rot);
    let u = Mat2::new(c(w, -z), c(-y, -x), c(y, -x), c(w, z));
    for cand in [u, u.adjoint()] {
        let (m, imag) = adjoint_representation(&cand);
        if imag > 1e-10 {
            return Err(Error::Internal(format!("adjoint representation has imaginary part {imag:e}")));
        }
        if (m - rot).abs().max() < 1e-9 {
            return Ok(cand);
        }
    }
    Err(Error::Internal("no SU(2) lift reproduces the rotation".into()))
}

/// Full decomposition of a validated spec.
pub fn decompose(spec: &GeneratorSpec) -> Result<DecomposedGenerator> {
    decompose_parts(&spec.hamiltonian, &spec.gks, numerics::global_tolerance())
}

pub fn decompose_parts(h: &Mat2, a: &Matrix3<C64>, tol: f64) -> Result<DecomposedGenerator> {
    let pairs = spectral_split(a, tol)?;
    let mut terms = Vec::with_capacity(pairs.len());
    for (idx, (lambda, v)) in pairs.into_iter().enumerate() {
        let canon = canonicalize_vector(&v)?;
        let lift = lift_so3_to_su2(&canon.rotation)?;
        terms.push(ConstituentTerm {
            k: idx + 1,
            lambda,
            theta: canon.theta,
            rotation: canon.rotation,
            lift,
            psi: canon.psi,
        });
    }
    Ok(DecomposedGenerator { hamiltonian: *h, terms })
}

fn ser_real3<S: serde::Serializer>(m: &Matrix3<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(3))?;
    for i in 0..3 {
        seq.serialize_element(&[m[(i, 0)], m[(i, 1)], m[(i, 2)]])?;
    }
    seq.end()
}

/// Serializes as `{"re": [[..],[..]], "im": [[..],[..]]}`.
pub fn ser_complex2<S: serde::Serializer>(m: &Mat2, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex2", 2)?;
    st.serialize_field("re", &[[m[(0, 0)].re, m[(0, 1)].re], [m[(1, 0)].re, m[(1, 1)].re]])?;
    st.serialize_field("im", &[[m[(0, 0)].im, m[(0, 1)].im], [m[(1, 0)].im, m[(1, 1)].im]])?;
    st.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{canonical_vector, transfer_from_generator};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn max3(a: &Matrix3<C64>, b: &Matrix3<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_psd(rng: &mut impl Rng) -> Matrix3<C64> {
        let b = Matrix3::from_fn(|_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        b * b.adjoint()
    }

    fn random_unit3(rng: &mut impl Rng) -> Vector3<C64> {
        Vector3::from_fn(|_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).normalize()
    }

    #[test]
    fn split_examples() {
        let g = 0.7;
        let a = Matrix3::from_diagonal(&Vector3::new(c(g, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
        let parts = spectral_split(&a, 1e-10).unwrap();
        assert_eq!(parts.len(), 1);
        assert!((parts[0].0 - g).abs() < 1e-14);
        assert!((parts[0].1 - Vector3::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))).norm() < 1e-14);

        let parts = spectral_split(&canonical_gks(FRAC_PI_4), 1e-10).unwrap();
        assert_eq!(parts.len(), 1);
        let expect = Vector3::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2), c(0.0, 0.0));
        assert!((parts[0].1.dotc(&expect).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let a = random_psd(&mut rng);
            let parts = spectral_split(&a, 1e-10).unwrap();
            let rebuilt = parts.iter().fold(Matrix3::zeros(), |acc, (l, v)| acc + v * v.adjoint() * c(*l, 0.0));
            assert!(max3(&rebuilt, &a) < 1e-10);
            assert!(parts.windows(2).all(|w| w[0].0 >= w[1].0));
        }
    }

    #[test]
    fn split_rejects_negative() {
        let a = Matrix3::from_diagonal(&Vector3::new(c(1.0, 0.0), c(-0.5, 0.0), c(0.0, 0.0)));
        assert!(matches!(spectral_split(&a, 1e-10), Err(Error::NotPsd { .. })));
    }

    fn check_canonical(a: &Vector3<C64>) -> CanonicalForm {
        let f = canonicalize_vector(a).unwrap();
        let phased = a * C64::from_polar(1.0, f.psi);
        let mapped = f.rotation.map(|v| c(v, 0.0)) * phased;
        assert!((mapped - canonical_vector(f.theta)).norm() < 1e-10, "mapped {mapped:?}");
        assert!((f.rotation.determinant() - 1.0).abs() < 1e-12);
        assert!((f.rotation.transpose() * f.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(f.theta >= -FRAC_PI_4 - 1e-12 && f.theta <= FRAC_PI_4 + 1e-12);
        f
    }

    #[test]
    fn canonicalize_examples() {
        let f = check_canonical(&Vector3::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)));
        assert!(f.theta.abs() < 1e-14 && f.psi.abs() < 1e-14);
        assert!((f.rotation * Vector3::x() - Vector3::x()).norm() < 1e-14);

        let s = FRAC_1_SQRT_2;
        let f = check_canonical(&Vector3::new(c(s, 0.0), c(0.0, -s), c(0.0, 0.0)));
        assert!((f.theta - FRAC_PI_4).abs() < 1e-12);
        assert!(f.psi.abs() < 1e-12);
        assert!((f.rotation - Matrix3::identity()).abs().max() < 1e-12);

        let f = check_canonical(&Vector3::new(c(0.0, s), c(s, 0.0), c(0.0, 0.0)));
        assert!((f.theta.abs() - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn canonicalize_rejects_non_unit() {
        let v = Vector3::new(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(canonicalize_vector(&v), Err(Error::NotUnitVector(_))));
    }

    #[test]
    fn lift_examples() {
        let u = lift_so3_to_su2(&Matrix3::identity()).unwrap();
        assert!(numerics::phase_insensitive_diff(&numerics::to_dyn2(&u), &numerics::to_dyn2(&Mat2::identity())) < 1e-12);

        let rz = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        let u = lift_so3_to_su2(&rz).unwrap();
        let conj = u.adjoint() * pauli(1) * u;
        assert!((conj + pauli(1)).iter().all(|z| z.norm() < 1e-12));

        // π/2 about x
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        let u = lift_so3_to_su2(&rx).unwrap();
        let conj = u.adjoint() * pauli(2) * u;
        let ok = (conj - pauli(3)).iter().all(|z| z.norm() < 1e-12) || (conj + pauli(3)).iter().all(|z| z.norm() < 1e-12);
        assert!(ok);
        assert!((u.determinant() - c(1.0, 0.0)).norm() < 1e-12);

        let bad = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(lift_so3_to_su2(&bad), Err(Error::NotSo3 { .. })));
    }

    #[test]
    fn lift_handles_half_turns() {
        for axis in [Vector3::x(), Vector3::y(), Vector3::z(), Vector3::new(1.0, 1.0, 0.0).normalize(), Vector3::new(1.0, -2.0, 0.5).normalize()] {
            for angle in [PI, FRAC_PI_2, 0.1, PI - 1e-9] {
                let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner();
                let u = lift_so3_to_su2(&r).unwrap();
                let (m, imag) = adjoint_representation(&u);
                assert!(imag < 1e-12);
                assert!((m - r).abs().max() < 1e-9);
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let h = pauli(3);
        let d = decompose_parts(&h, &Matrix3::zeros(), 1e-10).unwrap();
        assert!(d.terms.is_empty());
        assert_eq!(d.hamiltonian, h);

        let d = decompose_parts(&Mat2::zeros(), &canonical_gks(FRAC_PI_4), 1e-10).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert!((d.terms[0].lambda - 1.0).abs() < 1e-12);
        assert!((d.terms[0].theta - FRAC_PI_4).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_psd(&mut rng);
        let d = decompose_parts(&(pauli(1) * c(0.5, 0.0)), &a, 1e-10).unwrap();
        assert_eq!(d.terms.len(), 3);
        assert!(max3(&d.reconstructed_gks(), &a) < 1e-9);
    }

    #[test]
    fn conjugated_generators_match_gks() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let a = random_psd(&mut rng);
            let d = decompose_parts(&Mat2::zeros(), &a, 1e-10).unwrap();
            for t in &d.terms {
                let direct = channel::generator_matrix(&Mat2::zeros(), &t.gks()).unwrap().0;
                assert!((direct - t.unit_generator()).abs().max() < 1e-10);
            }
            let total = channel::generator_matrix(&Mat2::zeros(), &a).unwrap().0;
            assert!((total - d.total_generator()).abs().max() < 1e-9);
        }
    }

    #[test]
    fn lift_consistency_by_finite_difference() {
        // differentiate the conjugated channel at small s
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_psd(&mut rng);
        let d = decompose_parts(&Mat2::zeros(), &a, 1e-10).unwrap();
        let s = 1e-5;
        let transfer = |t: &ConstituentTerm, s: f64| {
            let ts = transfer_from_generator(&channel::canonical_generator(t.theta), s).unwrap();
            conjugation_transfer(&t.lift.adjoint()).0 * ts.0 * conjugation_transfer(&t.lift).0
        };
        for t in &d.terms {
            // Richardson-extrapolated forward difference
            let d1 = (transfer(t, s) - Matrix4::identity()) / s;
            let d2 = (transfer(t, 2.0 * s) - Matrix4::identity()) / (2.0 * s);
            let deriv = d1 * 2.0 - d2;
            let target = channel::generator_matrix(&Mat2::zeros(), &t.gks()).unwrap().0;
            assert!((deriv - target).abs().max() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn phase_invariance(seed in 0u64..10_000, phase in 0.0f64..std::f64::consts::TAU) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_unit3(&mut rng);
            let f1 = check_canonical(&a);
            let f2 = check_canonical(&(a * C64::from_polar(1.0, phase)));
            prop_assert!((f1.theta - f2.theta).abs() < 1e-10);
        }

        #[test]
        fn reconstruction_and_theta_range(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_psd(&mut rng);
            let d = decompose_parts(&Mat2::zeros(), &a, 1e-10).unwrap();
            prop_assert!(max3(&d.reconstructed_gks(), &a) < 1e-9);
            for t in &d.terms {
                prop_assert!(t.theta.abs() <= FRAC_PI_4 + 1e-12);
                prop_assert!((t.lift.determinant() - c(1.0, 0.0)).norm() < 1e-10);
                prop_assert!(numerics::unitarity_residual(&numerics::to_dyn2(&t.lift)) < 1e-10);
            }
        }
    }
}
