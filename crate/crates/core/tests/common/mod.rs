//! Random generators and independent reference computations shared by the
//! integration tests. Nothing here calls the library's eigensolver or
//! class-operator code; propagators come from a Taylor series.
#![allow(dead_code)]

use effect_histories::histories::{HomogeneousEffectHistory, TensorHistory};
use effect_histories::numerics::{ComplexMatrix, C64};
use effect_histories::quantum::Scenario;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize, scale: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d);
    for i in 0..d {
        m.set(i, i, c(scale * rng.gen_range(-1.0..1.0), 0.0));
        for j in (i + 1)..d {
            let z = random_complex(rng) * scale;
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    m
}

/// Orthonormal basis by Gram–Schmidt on random vectors; column `k` is `basis[k]`.
pub fn random_basis<R: Rng>(rng: &mut R, d: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| random_complex(rng)).collect();
        for b in &basis {
            let overlap: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    basis
}

pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> ComplexMatrix {
    let basis = random_basis(rng, d);
    let mut u = ComplexMatrix::zeros(d);
    for (k, v) in basis.iter().enumerate() {
        for (i, z) in v.iter().enumerate() {
            u.set(i, k, *z);
        }
    }
    u
}

/// `sum_k w_k |b_k><b_k|`.
pub fn spectral_sum(basis: &[Vec<C64>], weights: &[f64]) -> ComplexMatrix {
    let d = basis[0].len();
    let mut m = ComplexMatrix::zeros(d);
    for (v, &w) in basis.iter().zip(weights) {
        for i in 0..d {
            for j in 0..d {
                let value = m.get(i, j) + v[i] * v[j].conj() * w;
                m.set(i, j, value);
            }
        }
    }
    m
}

pub fn random_effect<R: Rng>(rng: &mut R, d: usize) -> ComplexMatrix {
    random_spectral_effect(rng, d).2
}

/// A random effect together with the eigenbasis and eigenvalues it was built
/// from.
pub fn random_spectral_effect<R: Rng>(
    rng: &mut R,
    d: usize,
) -> (Vec<Vec<C64>>, Vec<f64>, ComplexMatrix) {
    let basis = random_basis(rng, d);
    let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
    let m = spectral_sum(&basis, &weights);
    (basis, weights, m)
}

/// A random projector of rank between 1 and `d - 1` (rank 1 for `d = 1`).
pub fn random_projector<R: Rng>(rng: &mut R, d: usize) -> ComplexMatrix {
    let basis = random_basis(rng, d);
    let rank = if d == 1 { 1 } else { rng.gen_range(1..d) };
    let weights: Vec<f64> = (0..d).map(|k| if k < rank { 1.0 } else { 0.0 }).collect();
    spectral_sum(&basis, &weights)
}

pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> ComplexMatrix {
    let basis = random_basis(rng, d);
    let mut weights: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    spectral_sum(&basis, &weights)
}

pub fn random_times<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut t = rng.gen_range(0.1..1.0);
    (0..n)
        .map(|_| {
            let now = t;
            t += rng.gen_range(0.2..1.5);
            now
        })
        .collect()
}

/// Between 1 and `max` increasing times.
pub fn random_times_upto<R: Rng>(rng: &mut R, max: usize) -> Vec<f64> {
    let n = rng.gen_range(1..=max);
    random_times(rng, n)
}

pub fn random_scenario<R: Rng>(rng: &mut R, d: usize) -> Scenario {
    let h = random_hermitian(rng, d, 1.0);
    let rho = random_density(rng, d);
    Scenario::new(h, rho, 0.0).unwrap()
}

pub fn random_effect_history<R: Rng>(
    rng: &mut R,
    d: usize,
    times: &[f64],
) -> HomogeneousEffectHistory {
    let events = times.iter().map(|&t| (t, random_effect(rng, d))).collect();
    HomogeneousEffectHistory::new(d, events).unwrap()
}

/// A random effect history at between 1 and `max` random times (exactly
/// `max` when the range is degenerate).
pub fn random_effect_history_upto<R: Rng>(
    rng: &mut R,
    d: usize,
    max: usize,
) -> HomogeneousEffectHistory {
    let times = random_times_upto(rng, max);
    random_effect_history(rng, d, &times)
}

pub fn random_projector_history<R: Rng>(
    rng: &mut R,
    d: usize,
    times: &[f64],
) -> HomogeneousEffectHistory {
    let events = times
        .iter()
        .map(|&t| (t, random_projector(rng, d)))
        .collect();
    HomogeneousEffectHistory::new(d, events).unwrap()
}

/// A random effect on the tensor product over `times`.
pub fn random_tensor_effect<R: Rng>(rng: &mut R, d: usize, times: &[f64]) -> TensorHistory {
    let big = d.pow(times.len() as u32);
    TensorHistory::new(d, times.to_vec(), random_effect(rng, big)).unwrap()
}

// ---- reference computations -------------------------------------------------

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let d = a.dim();
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = c(0.0, 0.0);
            for k in 0..d {
                acc += a.get(i, k) * b.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    let d = a.dim();
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out.set(i, j, a.get(j, i).conj());
        }
    }
    out
}

/// `exp(-i theta h)` by scaling and squaring of a Taylor series.
pub fn expm_taylor(h: &ComplexMatrix, theta: f64) -> ComplexMatrix {
    let d = h.dim();
    let norm: f64 = h.data().iter().map(|z| z.norm()).sum::<f64>() * theta.abs();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.1 {
        scale /= 2.0;
        squarings += 1;
    }
    let mut a = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            a.set(i, j, h.get(i, j) * c(0.0, -theta * scale));
        }
    }
    let mut result = ComplexMatrix::identity(d);
    let mut term = ComplexMatrix::identity(d);
    for k in 1..30 {
        term = matmul(&term, &a);
        let inv = 1.0 / k as f64;
        for i in 0..d {
            for j in 0..d {
                let t = term.get(i, j) * inv;
                term.set(i, j, t);
                result.set(i, j, result.get(i, j) + t);
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Reference propagator `U(t_to, t_from)`.
pub fn propagator(s: &Scenario, t_to: f64, t_from: f64) -> ComplexMatrix {
    expm_taylor(s.hamiltonian(), (t_to - t_from) / s.hbar())
}

/// `tr(a rho b^dagger)`.
pub fn weight(a: &ComplexMatrix, rho: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    matmul(&matmul(a, rho), &dagger(b)).trace()
}

/// Projector histories in the Heisenberg picture:
/// `C = P_n(t_n) ... P_1(t_1)` with `P(t) = U(t, t0)^dagger P U(t, t0)`.
pub fn product_formula_class_operator(
    s: &Scenario,
    events: &[(f64, ComplexMatrix)],
) -> ComplexMatrix {
    let t0 = s.fiducial_time();
    let mut c = ComplexMatrix::identity(s.dim());
    for (t, p) in events {
        let u = propagator(s, *t, t0);
        let heisenberg = matmul(&matmul(&dagger(&u), p), &u);
        c = matmul(&heisenberg, &c);
    }
    c
}

/// Class operator of a tensor operator expanded in matrix units: each
/// `|I><J| = |i_1><j_1| ⊗ ... ⊗ |i_n><j_n|` (earliest time leftmost) maps to
/// `U(t0,t_n) |i_n><j_n| U(t_n,t_{n-1}) ... |i_1><j_1| U(t_1,t0)`.
pub fn brute_force_class_operator(
    s: &Scenario,
    support: &[f64],
    op: &ComplexMatrix,
) -> ComplexMatrix {
    let d = s.dim();
    let n = support.len();
    if n == 0 {
        return ComplexMatrix::identity(d).scale(op.get(0, 0));
    }
    let t0 = s.fiducial_time();
    let first = propagator(s, support[0], t0);
    let last = propagator(s, t0, support[n - 1]);
    let steps: Vec<ComplexMatrix> = (1..n)
        .map(|k| propagator(s, support[k], support[k - 1]))
        .collect();
    let digits = |mut r: usize| {
        let mut out = vec![0; n];
        for k in (0..n).rev() {
            out[k] = r % d;
            r /= d;
        }
        out
    };
    let mut out = ComplexMatrix::zeros(d);
    let big = op.dim();
    for r in 0..big {
        for col in 0..big {
            let x = op.get(r, col);
            if x == c(0.0, 0.0) {
                continue;
            }
            let is = digits(r);
            let js = digits(col);
            // Scalar chain <j_{k+1}| U(t_{k+1}, t_k) |i_k>.
            let mut coeff = x;
            for k in 0..(n - 1) {
                coeff *= steps[k].get(js[k + 1], is[k]);
            }
            for a in 0..d {
                for b in 0..d {
                    let v = out.get(a, b) + coeff * last.get(a, is[n - 1]) * first.get(js[0], b);
                    out.set(a, b, v);
                }
            }
        }
    }
    out
}

pub fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
