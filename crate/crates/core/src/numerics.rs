//! Dense complex linear algebra for the tiny matrices used throughout the
//! crate (2×2 up to 32×32): cyclic Jacobi for Hermitian eigenproblems,
//! scaling-and-squaring exponentials, and a handful of predicates.

use nalgebra::{ComplexField, DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Rectangular complex matrix with finite entries.
pub type ComplexMatrix = DMatrix<C64>;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Default tolerance for equality checks on O(1) quantities.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Inputs farther than this from Hermitian are rejected by [`hermitian_eig`].
pub const HERMITIAN_REJECT: f64 = 1e-8;

const JACOBI_THRESHOLD: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;
const TAYLOR_ORDER: usize = 18;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrix `σ_i` with `σ_0 = 1`.
pub fn pauli(i: usize) -> Mat2 {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    match i {
        0 => Mat2::new(l, o, o, l),
        1 => Mat2::new(o, l, l, o),
        2 => Mat2::new(o, -I, I, o),
        3 => Mat2::new(l, o, o, -l),
        _ => panic!("pauli index {i} out of range"),
    }
}

/// Numerical tolerance, optionally overridden by the `LF_TOL` environment
/// variable.
pub fn global_tolerance() -> f64 {
    std::env::var("LF_TOL")
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v > 0.0)
        .unwrap_or(DEFAULT_TOL)
}

pub fn to_dyn2(m: &Mat2) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

pub fn to_dyn4(m: &Mat4) -> ComplexMatrix {
    ComplexMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

pub fn real4_to_dyn(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

pub fn dyn_to_real4(m: &DMatrix<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[(i, j)])
}

/// Largest entry of `|a − b|`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entry of `|m − m†|`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let (r, c) = m.shape();
    if r != c {
        return f64::INFINITY;
    }
    let mut dev: f64 = 0.0;
    for i in 0..r {
        for j in 0..c {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest entry of `|U†U − 1|`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    if n != u.ncols() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &ComplexMatrix::identity(n, n))
}

/// Distance between `a` and `b` after removing a relative global phase.
///
/// Both matrices are rotated so that the entry of largest magnitude in `a`
/// is real and positive before the entrywise comparison.
pub fn phase_insensitive_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let (idx, _) = a
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, z)| if z.norm() > bv + 1e-12 { (i, z.norm()) } else { (bi, bv) });
    let pa = a.as_slice()[idx];
    let pb = b.as_slice()[idx];
    if pb.norm() < 1e-300 {
        return max_abs_diff(a, b).max(pa.norm());
    }
    let ra = pa.conj() / pa.norm();
    let rb = pb.conj() / pb.norm();
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x * ra - y * rb).norm())
        .fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Descending; values closer than `1e-14·max(1, ‖A‖_F)` are ordered by
    /// the index of their eigenvector's leading component.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`; its largest
    /// component is real and positive.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn vector(&self, k: usize) -> nalgebra::DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// `Σ_k λ_k v_k v_k†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            out += (v * v.adjoint()) * C64::new(l, 0.0);
        }
        out
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().reduce(f64::min).unwrap_or(0.0)
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_REJECT {
        return Err(Error::NonHermitianInput { deviation: dev });
    }
    let n = m.nrows();
    let mut a = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut v = ComplexMatrix::identity(n, n);
    let scale = a.norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_THRESHOLD * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                // Phase e^{-iφ} on column q makes the pivot real, then a real
                // Jacobi rotation annihilates it. G = Φ·R.
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let gpp = C64::new(cs, 0.0);
                let gpq = C64::new(sn, 0.0);
                let gqp = -phase.conj() * sn;
                let gqq = phase.conj() * cs;

                // A ← A·G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                // A ← G†·A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                // V ← V·G
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }

    // canonical phase: largest-magnitude component real-positive
    let mut lead = vec![0usize; n];
    for k in 0..n {
        let mut best = 0;
        let mut best_mag = -1.0;
        for i in 0..n {
            let mag = v[(i, k)].norm();
            if mag > best_mag + 1e-12 {
                best = i;
                best_mag = mag;
            }
        }
        lead[k] = best;
        let z = v[(best, k)];
        let rot = z.conj() / z.norm();
        for i in 0..n {
            v[(i, k)] *= rot;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        let (lx, ly) = (a[(x, x)].re, a[(y, y)].re);
        if (lx - ly).abs() <= 1e-14 * scale {
            lead[x].cmp(&lead[y])
        } else {
            ly.partial_cmp(&lx).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// `exp(scale · m)` by scaling and squaring with a fixed-order Taylor series.
///
/// Works for real and complex matrices. `scale == 0` returns the identity
/// exactly.
pub fn matrix_exp<T>(m: &DMatrix<T>, scale: f64) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix_exp needs a square matrix");
    let id = DMatrix::<T>::identity(n, n);
    if scale == 0.0 {
        return id;
    }
    let a = m * T::from_real(scale);
    let norm = a.norm();
    if norm == 0.0 {
        return id;
    }
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = a * T::from_real(0.5f64.powi(squarings));

    let mut sum = id.clone();
    let mut term = id;
    for k in 1..=TAYLOR_ORDER {
        term = (&term * &a) * T::from_real(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(scale · m)` on a 4×4 real matrix.
pub fn matrix_exp4(m: &Matrix4<f64>, scale: f64) -> Matrix4<f64> {
    if scale == 0.0 {
        return Matrix4::identity();
    }
    dyn_to_real4(&matrix_exp(&real4_to_dyn(m), scale))
}

/// Outcome of [`validate_psd`].
#[derive(Debug, Clone)]
pub struct PsdCheck {
    pub min_eigenvalue: f64,
    /// Input with eigenvalues in `[−tol, 0)` set to zero.
    pub clamped: ComplexMatrix,
    pub was_clamped: bool,
}

/// Checks `min eig(m) ≥ −tol` and returns a clamped copy.
pub fn validate_psd(m: &ComplexMatrix, tol: f64) -> Result<PsdCheck> {
    let eig = hermitian_eig(m)?;
    let min = eig.min_value();
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    if min >= 0.0 {
        let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
        return Ok(PsdCheck { min_eigenvalue: min, clamped: sym, was_clamped: false });
    }
    let fixed = HermitianEig {
        values: eig.values.iter().map(|&l| l.max(0.0)).collect(),
        vectors: eig.vectors.clone(),
    };
    Ok(PsdCheck { min_eigenvalue: min, clamped: fixed.reconstruct(), was_clamped: true })
}

/// Largest singular value of a real 4×4 matrix.
pub fn spectral_norm4(m: &Matrix4<f64>) -> f64 {
    let g = m.transpose() * m;
    let gc = ComplexMatrix::from_fn(4, 4, |i, j| C64::new(g[(i, j)], 0.0));
    hermitian_eig(&gc)
        .map(|e| e.values[0].max(0.0).sqrt())
        .unwrap_or(f64::NAN)
}

/// Trace norm `σ₁ + σ₂` of a 2×2 complex matrix.
#[inline]
pub fn trace_norm2(m: &Mat2) -> f64 {
    let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    (fro + 2.0 * det).max(0.0).sqrt()
}
