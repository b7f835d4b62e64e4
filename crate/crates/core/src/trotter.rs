//! Symmetric second-order product formula over the constituent terms.
//!
//! One block of `S₂(τ)` applies the terms in the order `0, 1, …, m, …, 1, 0`
//! where every factor but the innermost runs for half a step. The two
//! innermost half steps are merged. Term `k ≥ 1` is driven for `λ_k` times the
//! nominal duration, so the channel it needs is `T^(k)` at time `λ_k τ/2`.

use nalgebra::Matrix4;
use serde::Serialize;

use crate::channel::{one_one_norm_with, OneOneNorm, TransferMatrix};
use crate::decompose::DecomposedGenerator;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::numerics::matrix_exp4;

/// Factors with a shorter duration are skipped by the executors.
pub const ZERO_DURATION: f64 = 1e-12;
/// Refuse plans with more steps than this.
pub const MAX_STEPS: u64 = 10_000_000;

/// One channel application in the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepFactor {
    /// `0` is the Hamiltonian, `1..=3` the dissipative terms.
    pub k: usize,
    /// Time fed to the constituent channel (already multiplied by `λ_k`).
    pub duration: f64,
}

impl StepFactor {
    pub fn is_trivial(&self) -> bool {
        self.duration < ZERO_DURATION
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrotterPlan {
    pub n: u64,
    pub tau: f64,
    pub time: f64,
    pub epsilon_target: f64,
    pub lambda_cap: f64,
    /// One `S₂(τ)` block; the full schedule repeats it `n` times.
    pub block: Vec<StepFactor>,
}

impl TrotterPlan {
    /// All factors of the evolution in time order.
    pub fn steps(&self) -> impl Iterator<Item = StepFactor> + '_ {
        (0..self.n).flat_map(move |_| self.block.iter().copied())
    }

    /// Number of non-trivial factors over the whole evolution, Hamiltonian
    /// factors included.
    pub fn channel_invocations(&self) -> u64 {
        self.n * self.block.iter().filter(|f| !f.is_trivial()).count() as u64
    }

    /// Non-trivial dissipative factors over the whole evolution.
    pub fn dissipative_invocations(&self) -> u64 {
        self.n * self.block.iter().filter(|f| f.k > 0 && !f.is_trivial()).count() as u64
    }

    /// `(4tΛ)³/(3N²) · e^{4tΛ/N}`.
    pub fn error_bound(&self) -> f64 {
        error_bound(self.time, self.lambda_cap, self.n)
    }
}

pub fn error_bound(t: f64, lambda: f64, n: u64) -> f64 {
    let x = 4.0 * t * lambda;
    let n = n as f64;
    x.powi(3) / (3.0 * n * n) * (x / n).exp()
}

/// `N = ⌈(4tΛ)^{3/2} / (3ε)^{1/2}⌉`, at least 1.
pub fn step_count(t: f64, lambda: f64, epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::BadEpsilon(epsilon));
    }
    let raw = (4.0 * t * lambda).powf(1.5) / (3.0 * epsilon).sqrt();
    if !raw.is_finite() || raw > MAX_STEPS as f64 {
        return Err(Error::Domain(format!("step count {raw:e} exceeds the limit of {MAX_STEPS}")));
    }
    Ok((raw.ceil() as u64).max(1))
}

/// Generator matrices of the non-vanishing terms with `λ_k` included, paired
/// with their index.
fn scaled_terms(dec: &DecomposedGenerator) -> Vec<(usize, Matrix4<f64>)> {
    let mut out = Vec::new();
    if !dec.hamiltonian_is_zero() {
        out.push((0, dec.hamiltonian_generator()));
    }
    for t in &dec.terms {
        out.push((t.k, t.unit_generator() * t.lambda));
    }
    out
}

/// `Λ = max_k ‖λ_k 𝓛_k‖₁→₁`.
pub fn lambda_cap(dec: &DecomposedGenerator) -> f64 {
    lambda_cap_with(dec, &OneOneNorm::default())
}

pub fn lambda_cap_with(dec: &DecomposedGenerator, cfg: &OneOneNorm) -> f64 {
    scaled_terms(dec)
        .iter()
        .map(|(_, g)| one_one_norm_with(g, cfg))
        .fold(0.0, f64::max)
}

pub fn plan(dec: &DecomposedGenerator, t: f64, epsilon: f64) -> Result<TrotterPlan> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::BadEpsilon(epsilon));
    }
    plan_with_lambda(dec, t, epsilon, lambda_cap(dec))
}

/// Plan with a precomputed `Λ`.
pub fn plan_with_lambda(dec: &DecomposedGenerator, t: f64, epsilon: f64, lambda: f64) -> Result<TrotterPlan> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let n = step_count(t, lambda, epsilon)?;
    let tau = t / n as f64;
    Ok(TrotterPlan { n, tau, time: t, epsilon_target: epsilon, lambda_cap: lambda, block: block_for(dec, tau) })
}

/// Plan with an explicit step count, used by convergence sweeps.
pub fn plan_with_steps(dec: &DecomposedGenerator, t: f64, n: u64, lambda: f64) -> TrotterPlan {
    let tau = t / n as f64;
    TrotterPlan { n, tau, time: t, epsilon_target: error_bound(t, lambda, n), lambda_cap: lambda, block: block_for(dec, tau) }
}

fn block_for(dec: &DecomposedGenerator, tau: f64) -> Vec<StepFactor> {
    let mut ks: Vec<(usize, f64)> = Vec::new();
    if !dec.hamiltonian_is_zero() {
        ks.push((0, 1.0));
    }
    ks.extend(dec.terms.iter().map(|t| (t.k, t.lambda)));
    let Some((&(last_k, last_l), outer)) = ks.split_last() else {
        return Vec::new();
    };
    let half = |&(k, l): &(usize, f64)| StepFactor { k, duration: l * tau / 2.0 };
    let mut block: Vec<StepFactor> = outer.iter().map(half).collect();
    block.push(StepFactor { k: last_k, duration: last_l * tau });
    block.extend(outer.iter().rev().map(half));
    block
}

/// Generator matrix for factor `k` per unit duration (`λ_k` excluded).
fn unit_generator(dec: &DecomposedGenerator, k: usize) -> Matrix4<f64> {
    if k == 0 {
        dec.hamiltonian_generator()
    } else {
        dec.terms.iter().find(|t| t.k == k).expect("factor refers to a decomposed term").unit_generator()
    }
}

/// Transfer matrix of one factor.
pub fn factor_transfer(dec: &DecomposedGenerator, f: &StepFactor) -> TransferMatrix {
    TransferMatrix(matrix_exp4(&unit_generator(dec, f.k), f.duration))
}

/// Transfer matrix of one `S₂(τ)` block.
pub fn block_transfer(dec: &DecomposedGenerator, plan: &TrotterPlan) -> TransferMatrix {
    plan.block
        .iter()
        .fold(TransferMatrix::identity(), |acc, f| factor_transfer(dec, f).compose(&acc))
}

/// Exact product of the factor exponentials over the whole plan.
pub fn reference_product(dec: &DecomposedGenerator, plan: &TrotterPlan) -> TransferMatrix {
    let b = block_transfer(dec, plan);
    (0..plan.n).fold(TransferMatrix::identity(), |acc, _| b.compose(&acc))
}

/// `exp(t 𝐋)` for the full generator.
pub fn exact_transfer(dec: &DecomposedGenerator, t: f64) -> TransferMatrix {
    TransferMatrix(matrix_exp4(&dec.total_generator(), t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: u64,
    /// `‖exp(t𝐋) − S₂(t/N)^N‖₁→₁` estimate.
    pub error: f64,
    /// Spectral norm of the same difference.
    pub error_spectral: f64,
    pub bound: f64,
}

/// Splitting error for each step count.
pub fn error_sweep(dec: &DecomposedGenerator, t: f64, ns: &[u64], lambda: f64, exec: Execution) -> Vec<SweepPoint> {
    let exact = exact_transfer(dec, t);
    let norm_cfg = OneOneNorm { exec, ..Default::default() };
    map_indexed(ns.len(), exec, |i| {
        let n = ns[i];
        let plan = plan_with_steps(dec, t, n, lambda);
        let diff = exact.0 - reference_product(dec, &plan).0;
        SweepPoint {
            n,
            error: one_one_norm_with(&diff, &norm_cfg),
            error_spectral: crate::numerics::spectral_norm4(&diff),
            bound: error_bound(t, lambda, n),
        }
    })
}

/// Least-squares slope of `−log(error)` against `log N`.
pub fn convergence_order(points: &[SweepPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.error.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{canonical_gks, choi_from_transfer, one_one_norm};
    use crate::decompose::decompose_parts;
    use crate::numerics::{c, hermitian_eig, pauli, to_dyn4, Mat2};
    use nalgebra::Matrix3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dec(rng: &mut impl Rng) -> DecomposedGenerator {
        let hb = Mat2::from_fn(|_, _| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
        let h = (hb + hb.adjoint()) * c(0.5, 0.0);
        let b = Matrix3::from_fn(|_, _| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
        decompose_parts(&h, &(b * b.adjoint()), 1e-10).unwrap()
    }

    fn single_term() -> DecomposedGenerator {
        decompose_parts(&Mat2::zeros(), &canonical_gks(0.0), 1e-10).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let zero = decompose_parts(&Mat2::zeros(), &Matrix3::zeros(), 1e-10).unwrap();
        assert_eq!(lambda_cap(&zero), 0.0);

        let one = single_term();
        let l1 = lambda_cap(&one);
        assert!((l1 - one_one_norm(&crate::channel::canonical_generator(0.0).0)).abs() < 1e-9);

        // λ = (2, 1) along orthogonal directions with equal θ
        let a = Matrix3::from_diagonal(&nalgebra::Vector3::new(c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)));
        let two = decompose_parts(&Mat2::zeros(), &a, 1e-10).unwrap();
        assert!((lambda_cap(&two) - 2.0 * l1).abs() < 1e-6);
    }

    #[test]
    fn step_count_arithmetic() {
        assert_eq!(step_count(1.0, 1.0, 0.01).unwrap(), 47);
        assert_eq!(step_count(0.0, 3.0, 0.5).unwrap(), 1);
        assert!(matches!(step_count(1.0, 1.0, 2.0), Err(Error::BadEpsilon(_))));
        assert!(matches!(step_count(1.0, 1.0, 0.0), Err(Error::BadEpsilon(_))));
    }

    #[test]
    fn zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dec = random_dec(&mut rng);
        let p = plan(&dec, 0.0, 0.1).unwrap();
        assert_eq!(p.n, 1);
        assert!(p.block.iter().all(|f| f.duration == 0.0));
        assert_eq!(p.channel_invocations(), 0);
        assert_eq!(reference_product(&dec, &p).0, Matrix4::identity());
    }

    #[test]
    fn block_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dec = random_dec(&mut rng);
        let p = plan_with_lambda(&dec, 1.0, 0.01, 1.0).unwrap();
        let ks: Vec<usize> = p.block.iter().map(|f| f.k).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 2, 1, 0]);
        assert_eq!(p.n, 47);
        assert_eq!(p.channel_invocations(), 329);
        let l3 = dec.terms[2].lambda;
        assert!((p.block[3].duration - l3 * p.tau).abs() < 1e-15);
        assert!((p.block[2].duration - dec.terms[1].lambda * p.tau / 2.0).abs() < 1e-15);
        assert!((p.block[0].duration - p.tau / 2.0).abs() < 1e-15);

        let only_h = decompose_parts(&(pauli(3) * c(0.5, 0.0)), &Matrix3::zeros(), 1e-10).unwrap();
        let p = plan_with_lambda(&only_h, 1.0, 0.1, 1.0).unwrap();
        assert_eq!(p.block.len(), 1);
        assert!((p.block[0].duration - p.tau).abs() < 1e-15);
    }

    #[test]
    fn single_term_has_no_splitting_error() {
        let dec = single_term();
        for n in [1, 3, 17] {
            let p = plan_with_steps(&dec, 1.3, n, 1.0);
            let d = (reference_product(&dec, &p).0 - exact_transfer(&dec, 1.3).0).abs().max();
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn duration_absorption_matches_scaled_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dec = random_dec(&mut rng);
        let t = &dec.terms[0];
        let s = 0.37;
        let via_duration = factor_transfer(&dec, &StepFactor { k: t.k, duration: t.lambda * s }).0;
        let via_generator = matrix_exp4(&dec.term_generator(t.k), s);
        assert!((via_duration - via_generator).abs().max() < 1e-13);
    }

    #[test]
    fn large_n_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dec = random_dec(&mut rng);
        let p = plan_with_steps(&dec, 1.0, 1024, 1.0);
        let d = (reference_product(&dec, &p).0 - exact_transfer(&dec, 1.0).0).abs().max();
        assert!(d < 1e-6);
    }

    #[test]
    fn prefixes_stay_completely_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dec = random_dec(&mut rng);
        let p = plan_with_steps(&dec, 2.0, 3, 1.0);
        let mut acc = TransferMatrix::identity();
        for f in p.steps() {
            acc = factor_transfer(&dec, &f).compose(&acc);
            let e = hermitian_eig(&to_dyn4(&choi_from_transfer(&acc).0)).unwrap();
            assert!(e.min_value() > -1e-9);
        }
    }

    #[test]
    fn sweep_modes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let dec = random_dec(&mut rng);
        let cfg = &[4, 8];
        let a = error_sweep(&dec, 1.0, cfg, 1.0, Execution::Sequential);
        let b = error_sweep(&dec, 1.0, cfg, 1.0, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<SweepPoint> = [4u64, 8, 16]
            .iter()
            .map(|&n| SweepPoint { n, error: 3.0 / (n * n) as f64, error_spectral: 0.0, bound: 0.0 })
            .collect();
        assert!((convergence_order(&pts) - 2.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn blocks_are_palindromic(seed in 0u64..10_000, t in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dec = random_dec(&mut rng);
            let p = plan_with_lambda(&dec, t, 0.1, 1.0).unwrap();
            let ks: Vec<usize> = p.block.iter().map(|f| f.k).collect();
            let mut rev = ks.clone();
            rev.reverse();
            prop_assert_eq!(ks, rev);
            prop_assert!(p.block.iter().all(|f| f.duration >= 0.0));
        }
    }
}
