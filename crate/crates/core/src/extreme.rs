//! The canonical channel `T^(θ)_s = exp(s L_θ)` as an equal mixture of two
//! quasi-extreme channels, with their Kraus pairs and Stinespring unitaries.
//!
//! Stinespring unitaries act on `env ⊗ sys` with the environment as the
//! leftmost (most significant) factor, so the first block column holds the
//! Kraus operators.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use nalgebra::Matrix2;
use serde::Serialize;

use crate::channel::{ChoiMatrix, KrausSet, TransferMatrix};
use crate::error::{Error, Result};
use crate::numerics::{c, Mat2, Mat4, C64};

/// Durations below this give the identity channel.
pub const IDENTITY_DURATION: f64 = 1e-12;
const RATIO_GUARD: f64 = 1e-12;
const CLAMP: f64 = 1e-12;

/// Closed-form data of `T^(θ)_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalChannelParams {
    pub theta: f64,
    pub s: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub m3: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

fn clamped_sqrt(x: f64, what: &str) -> Result<f64> {
    if x < -CLAMP {
        return Err(Error::Internal(format!("{what}² = {x:e} is negative")));
    }
    Ok(x.max(0.0).sqrt())
}

/// `λ₁ = e^{−2s sin²θ}`, `λ₂ = e^{−2s cos²θ}`, `λ₃ = e^{−2s}`,
/// `m₃ = sin 2θ (λ₃ − 1)` and the Choi entries `a, b, c, d`.
pub fn canonical_params(theta: f64, s: f64) -> Result<CanonicalChannelParams> {
    if !theta.is_finite() || theta.abs() > FRAC_PI_4 + 1e-12 {
        return Err(Error::Domain(format!("theta {theta} outside [-pi/4, pi/4]")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("duration {s} must be finite and non-negative")));
    }
    let (sn, cs) = theta.sin_cos();
    let sin2 = (2.0 * theta).sin();
    let lambda1 = (-2.0 * s * sn * sn).exp();
    let lambda2 = (-2.0 * s * cs * cs).exp();
    let lambda3 = (-2.0 * s).exp();
    // 1 − λ₃ without cancellation
    let decay = -(-2.0 * s).exp_m1();
    let m3 = -sin2 * decay;
    let b2 = decay * (1.0 - sin2);
    let c2 = decay * (1.0 + sin2);
    let a2 = 2.0 - c2;
    let d2 = 2.0 - b2;
    Ok(CanonicalChannelParams {
        theta,
        s,
        lambda1,
        lambda2,
        lambda3,
        m3,
        a: clamped_sqrt(a2, "a")?,
        b: clamped_sqrt(b2, "b")?,
        c: clamped_sqrt(c2, "c")?,
        d: clamped_sqrt(d2, "d")?,
    })
}

impl CanonicalChannelParams {
    /// `λ₁ − λ₂ = λ₂ (e^{2s cos 2θ} − 1)`.
    pub fn lambda_gap(&self) -> f64 {
        self.lambda2 * (2.0 * self.s * (2.0 * self.theta).cos()).exp_m1()
    }

    pub fn transfer(&self) -> TransferMatrix {
        let mut t = nalgebra::Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, self.lambda1, self.lambda2, self.lambda3));
        t[(3, 0)] = self.m3;
        TransferMatrix(t)
    }

    /// Choi matrix of `T^(θ)_s`.
    pub fn choi(&self) -> ChoiMatrix {
        let q = 0.25;
        let (a, b, cc, d) = (self.a, self.b, self.c, self.d);
        let sum = self.lambda1 + self.lambda2;
        let gap = self.lambda_gap();
        let r = |v: f64| c(v * q, 0.0);
        ChoiMatrix(Mat4::new(
            r(a * a), r(0.0), r(0.0), r(sum),
            r(0.0), r(b * b), r(gap), r(0.0),
            r(0.0), r(gap), r(cc * cc), r(0.0),
            r(sum), r(0.0), r(0.0), r(d * d),
        ))
    }

    /// `R = A^{−½} C B^{−½}` from the block form of the dual β matrix, with zero
    /// entries where the corresponding ratio is degenerate.
    pub fn contraction(&self) -> Matrix2<f64> {
        let ad = self.a * self.d;
        let bc = self.b * self.c;
        let r01 = if ad < RATIO_GUARD { 0.0 } else { (self.lambda1 + self.lambda2) / ad };
        let r10 = if bc < RATIO_GUARD { 0.0 } else { self.lambda_gap() / bc };
        Matrix2::new(0.0, r01, r10, 0.0)
    }

    /// `α = arccos(a/√2)`, `β = arccos(b/√2)`, evaluated as `atan2(c, a)` and
    /// `atan2(d, b)` since `a² + c² = b² + d² = 2`.
    pub fn stinespring_angles(&self) -> (f64, f64) {
        (self.c.atan2(self.a), self.d.atan2(self.b))
    }
}

/// Quasi-extreme decomposition `T^(θ)_s = ½ T₁ + ½ T₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeChannelPair {
    pub params: CanonicalChannelParams,
    pub phi1: f64,
    pub phi2: f64,
    pub kraus1: KrausSet,
    pub kraus2: KrausSet,
    pub u1: Mat4,
    pub u2: Mat4,
    /// One of the ratios defining the angles was 0/0 and its angle was set
    /// to zero.
    pub degenerate: bool,
    /// `s` was below the identity threshold; the pair is the identity channel.
    pub identity: bool,
}

/// Builds the pair for the given parameters.
pub fn extreme_pair(p: &CanonicalChannelParams) -> Result<ExtremeChannelPair> {
    let gap = p.lambda_gap();
    if gap < -1e-12 {
        return Err(Error::Internal(format!("lambda1 - lambda2 = {gap:e} is negative")));
    }
    let identity = p.s < IDENTITY_DURATION;
    let ad = p.a * p.d;
    let bc = p.b * p.c;
    let mut degenerate = identity;
    let phi1 = if identity || ad < RATIO_GUARD {
        degenerate = true;
        0.0
    } else {
        ((p.lambda1 + p.lambda2) / ad).clamp(-1.0, 1.0).acos()
    };
    let phi2 = if identity || bc < RATIO_GUARD {
        degenerate = true;
        0.0
    } else {
        (gap / bc).clamp(-1.0, 1.0).acos()
    };
    let params = if identity { canonical_params(p.theta, 0.0)? } else { *p };
    let kraus1 = kraus_pair(&params, phi1, phi2);
    let kraus2 = kraus_pair(&params, -phi1, -phi2);
    let u1 = stinespring(&params, phi1, phi2);
    let u2 = stinespring(&params, -phi1, -phi2);
    Ok(ExtremeChannelPair { params, phi1, phi2, kraus1, kraus2, u1, u2, degenerate, identity })
}

fn kraus_pair(p: &CanonicalChannelParams, phi1: f64, phi2: f64) -> KrausSet {
    let s = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let k1 = Mat2::new(C64::from_polar(p.a * s, -phi1), z, z, c(p.d * s, 0.0));
    let k2 = Mat2::new(z, C64::from_polar(p.b * s, phi2), c(p.c * s, 0.0), z);
    KrausSet(vec![k1, k2])
}

fn stinespring(p: &CanonicalChannelParams, phi1: f64, phi2: f64) -> Mat4 {
    let s = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let (a, b, cc, d) = (p.a * s, p.b * s, p.c * s, p.d * s);
    Mat4::new(
        C64::from_polar(a, -phi1), z, z, c(-cc, 0.0),
        z, c(d, 0.0), -C64::from_polar(b, -phi2), z,
        z, C64::from_polar(b, phi2), c(d, 0.0), z,
        c(cc, 0.0), z, z, C64::from_polar(a, phi1),
    )
}

impl ExtremeChannelPair {
    pub fn kraus(&self, which: usize) -> &KrausSet {
        if which == 1 { &self.kraus1 } else { &self.kraus2 }
    }

    pub fn unitary(&self, which: usize) -> &Mat4 {
        if which == 1 { &self.u1 } else { &self.u2 }
    }

    /// Choi matrix of channel `which`, in closed form.
    pub fn choi(&self, which: usize) -> ChoiMatrix {
        let p = &self.params;
        let sign = if which == 1 { 1.0 } else { -1.0 };
        let (phi1, phi2) = (sign * self.phi1, sign * self.phi2);
        let q = |v: C64| v * 0.25;
        let r = |v: f64| c(v * 0.25, 0.0);
        let ad = p.a * p.d;
        let bc = p.b * p.c;
        ChoiMatrix(Mat4::new(
            r(p.a * p.a), r(0.0), r(0.0), q(C64::from_polar(ad, -phi1)),
            r(0.0), r(p.b * p.b), q(C64::from_polar(bc, phi2)), r(0.0),
            r(0.0), q(C64::from_polar(bc, -phi2)), r(p.c * p.c), r(0.0),
            q(C64::from_polar(ad, phi1)), r(0.0), r(0.0), r(p.d * p.d),
        ))
    }

    /// Applies the equal mixture to `ρ` through the Kraus operators.
    pub fn apply_mixture(&self, rho: &Mat2) -> Mat2 {
        (self.kraus1.apply(rho) + self.kraus2.apply(rho)) * c(0.5, 0.0)
    }
}

/// `tr_E[U(|0⟩⟨0| ⊗ ρ)U†]` for a 4×4 `U` on `env ⊗ sys`.
pub fn stinespring_apply(u: &Mat4, rho: &Mat2) -> Mat2 {
    let mut full = Mat4::zeros();
    full.fixed_view_mut::<2, 2>(0, 0).copy_from(rho);
    let out = u * full * u.adjoint();
    out.fixed_view::<2, 2>(0, 0).into_owned() + out.fixed_view::<2, 2>(2, 2).into_owned()
}
