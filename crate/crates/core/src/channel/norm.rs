//! Estimator for the induced trace norm `sup_{‖X‖₁=1} ‖S(X)‖₁` of a qubit
//! superoperator.
//!
//! The supremum of a convex function over the unit trace-norm ball is attained
//! at an extreme point, i.e. a rank-one `|ψ⟩⟨φ|` with unit vectors. Both vectors
//! are parameterized by Bloch angles `(ϑ, φ)`; a product grid over the two
//! spheres is followed by a pattern search from the best grid points. The
//! result is a lower estimate of the true norm.

use std::f64::consts::PI;

use nalgebra::Matrix4;

use crate::exec::{map_indexed, Execution};
use crate::numerics::{trace_norm2, Mat2, C64};

/// Settings for [`one_one_norm_with`].
#[derive(Debug, Clone, Copy)]
pub struct OneOneNorm {
    /// Points per Bloch angle on each sphere.
    pub grid: usize,
    /// Pattern-search iterations per seed.
    pub refine_iters: usize,
    /// Number of grid maxima used as refinement seeds.
    pub seeds: usize,
    pub exec: Execution,
}

impl Default for OneOneNorm {
    fn default() -> Self {
        OneOneNorm { grid: 64, refine_iters: 50, seeds: 4, exec: Execution::default() }
    }
}

pub fn one_one_norm(s: &Matrix4<f64>) -> f64 {
    one_one_norm_with(s, &OneOneNorm::default())
}

/// `(cos ϑ/2, e^{iφ} sin ϑ/2)`.
fn spinor(theta: f64, phi: f64) -> [C64; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [C64::new(c, 0.0), C64::from_polar(s, phi)]
}

/// Superoperator acting on complex 2×2 matrices through its Pauli-basis
/// matrix.
struct Superop {
    s: Matrix4<C64>,
}

impl Superop {
    fn new(s: &Matrix4<f64>) -> Self {
        Superop { s: s.map(|v| C64::new(v, 0.0)) }
    }

    fn apply(&self, x: &Mat2) -> Mat2 {
        // coefficients in σ_a/√2 are tr(σ_a X)/√2; the √2 factors cancel on
        // reassembly, leaving Y = ½ Σ_a y_a σ_a with y = S·(tr σ_b X)_b
        let xin = nalgebra::Vector4::new(
            x[(0, 0)] + x[(1, 1)],
            x[(0, 1)] + x[(1, 0)],
            C64::new(0.0, 1.0) * (x[(0, 1)] - x[(1, 0)]),
            x[(0, 0)] - x[(1, 1)],
        );
        let y = self.s * xin;
        let h = C64::new(0.5, 0.0);
        let i = C64::new(0.0, 1.0);
        Mat2::new((y[0] + y[3]) * h, (y[1] - i * y[2]) * h, (y[1] + i * y[2]) * h, (y[0] - y[3]) * h)
    }

    /// `S(|ψ⟩⟨j|)` for `j = 0, 1`.
    fn columns(&self, psi: &[C64; 2]) -> [Mat2; 2] {
        let z = C64::new(0.0, 0.0);
        let e0 = Mat2::new(psi[0], z, psi[1], z);
        let e1 = Mat2::new(z, psi[0], z, psi[1]);
        [self.apply(&e0), self.apply(&e1)]
    }

    fn value(&self, p: &[f64; 4]) -> f64 {
        let psi = spinor(p[0], p[1]);
        let phi = spinor(p[2], p[3]);
        let m = self.columns(&psi);
        trace_norm2(&(m[0] * phi[0].conj() + m[1] * phi[1].conj()))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    index: usize,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.value > b.value || (a.value == b.value && a.index < b.index)
}

/// Estimates the induced trace norm of the superoperator with Pauli-basis
/// matrix `s`.
pub fn one_one_norm_with(s: &Matrix4<f64>, cfg: &OneOneNorm) -> f64 {
    if s.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let op = Superop::new(s);
    let n = cfg.grid.max(2);
    let polar_step = PI / (n - 1) as f64;
    let azim_step = 2.0 * PI / n as f64;
    let angles = |idx: usize| -> (f64, f64) { ((idx / n) as f64 * polar_step, (idx % n) as f64 * azim_step) };
    let points: Vec<[C64; 2]> = (0..n * n)
        .map(|idx| {
            let (t, p) = angles(idx);
            spinor(t, p)
        })
        .collect();
    let conj_points: Vec<[C64; 2]> = points.iter().map(|p| [p[0].conj(), p[1].conj()]).collect();
    let seeds = cfg.seeds.max(1);

    // Best few φ for every ψ, computed independently per ψ.
    let per_psi: Vec<Vec<Candidate>> = map_indexed(points.len(), cfg.exec, |i| {
        let m = op.columns(&points[i]);
        let mut top: Vec<Candidate> = Vec::with_capacity(seeds + 1);
        for (j, phi) in conj_points.iter().enumerate() {
            let v = trace_norm2(&(m[0] * phi[0] + m[1] * phi[1]));
            let cand = Candidate { value: v, index: i * points.len() + j };
            if top.len() < seeds || better(&cand, top.last().unwrap()) {
                let pos = top.iter().position(|t| better(&cand, t)).unwrap_or(top.len());
                top.insert(pos, cand);
                top.truncate(seeds);
            }
        }
        top
    });

    let mut all: Vec<Candidate> = per_psi.into_iter().flatten().collect();
    all.sort_by(|a, b| if better(a, b) { std::cmp::Ordering::Less } else if better(b, a) { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Equal });
    all.truncate(seeds);

    let total = points.len();
    let refined = map_indexed(all.len(), cfg.exec, |k| {
        let cand = all[k];
        let (t1, p1) = angles(cand.index / total);
        let (t2, p2) = angles(cand.index % total);
        pattern_search(&op, [t1, p1, t2, p2], [polar_step, azim_step, polar_step, azim_step], cfg.refine_iters, cand.value)
    });
    refined.into_iter().fold(all[0].value, f64::max)
}

fn pattern_search(op: &Superop, mut x: [f64; 4], mut step: [f64; 4], iters: usize, start: f64) -> f64 {
    let mut best = start;
    for _ in 0..iters {
        let mut improved = None;
        for d in 0..4 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[d] += sign * step[d];
                let v = op.value(&y);
                if v > improved.map_or(best, |(bv, _)| bv) {
                    improved = Some((v, y));
                }
            }
        }
        match improved {
            Some((v, y)) => {
                best = v;
                x = y;
            }
            None => step.iter_mut().for_each(|s| *s *= 0.5),
        }
    }
    best
}
