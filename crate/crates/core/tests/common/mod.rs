//! Reference implementations used only by the tests: a dense state vector,
//! dense Pauli matrices, and the general two-qubit concurrence.

#![allow(dead_code)]

use std::collections::HashMap;

use csmg_core::pauli::{PauliLetter, PauliString, Phase};
use csmg_core::Basis;
use nalgebra::{Complex, DMatrix, Matrix2, Matrix4, SymmetricEigen};

pub type C64 = Complex<f64>;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn letter_matrix(l: PauliLetter) -> Matrix2<C64> {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match l {
        PauliLetter::I => Matrix2::new(o, z, z, o),
        PauliLetter::X => Matrix2::new(z, o, o, z),
        PauliLetter::Y => Matrix2::new(z, -i, i, z),
        PauliLetter::Z => Matrix2::new(o, z, z, -o),
    }
}

pub fn phase_value(p: Phase) -> C64 {
    match p.power() {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Dense matrix of `p` on qubits `0..n`, qubit 0 as the leftmost factor.
pub fn pauli_matrix(p: &PauliString, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in 0..n {
        let f = letter_matrix(p.get(q));
        let f = DMatrix::from_iterator(2, 2, f.iter().copied());
        m = m.kronecker(&f);
    }
    m * phase_value(p.phase())
}

/// State vector over `n` qubits; qubit `q` is bit `q` of the index.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl Dense {
    pub fn plus(n: usize) -> Self {
        assert!(n <= 12);
        let a = (1.0 / (1u64 << n) as f64).sqrt();
        Dense {
            n,
            amps: vec![c(a, 0.0); 1 << n],
        }
    }

    /// Linear cluster on `n` qubits.
    pub fn cluster(n: usize) -> Self {
        let mut s = Self::plus(n);
        for i in 1..n {
            s.cz(i - 1, i);
        }
        s
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        for (k, v) in self.amps.iter_mut().enumerate() {
            if (k >> a) & 1 == 1 && (k >> b) & 1 == 1 {
                *v = -*v;
            }
        }
    }

    pub fn apply(&mut self, q: usize, l: PauliLetter) {
        let bit = 1 << q;
        let old = self.amps.clone();
        for (k, v) in self.amps.iter_mut().enumerate() {
            let one = k & bit != 0;
            let src = old[k ^ bit];
            *v = match l {
                PauliLetter::I => old[k],
                PauliLetter::X => src,
                // Y|0> = i|1>, Y|1> = -i|0>.
                PauliLetter::Y => {
                    if one {
                        src * c(0.0, 1.0)
                    } else {
                        src * c(0.0, -1.0)
                    }
                }
                PauliLetter::Z => {
                    if one {
                        -old[k]
                    } else {
                        old[k]
                    }
                }
            };
        }
    }

    fn single(&mut self, q: usize, m: [[C64; 2]; 2]) {
        let bit = 1 << q;
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                let (a0, a1) = (self.amps[k], self.amps[k | bit]);
                self.amps[k] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[k | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Rotates `q` so that the `+1` eigenstate of `basis` maps to `|0>`.
    fn rotate_to_z(&mut self, q: usize, basis: Basis) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]];
        match basis {
            Basis::Z => {}
            Basis::X => self.single(q, had),
            Basis::Y => {
                self.single(q, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]]);
                self.single(q, had);
            }
        }
    }

    /// Exact joint distribution of measuring `meas` (other qubits traced
    /// out). Bit `j` of the key is the outcome of `meas[j]`, set for `-1`.
    pub fn distribution(&self, meas: &[(usize, Basis)]) -> Vec<f64> {
        let mut s = self.clone();
        for &(q, b) in meas {
            s.rotate_to_z(q, b);
        }
        let mut p = vec![0.0; 1 << meas.len()];
        for (k, a) in s.amps.iter().enumerate() {
            let mut key = 0;
            for (j, &(q, _)) in meas.iter().enumerate() {
                key |= ((k >> q) & 1) << j;
            }
            p[key] += a.norm_sqr();
        }
        p
    }
}

/// Applies independent flip errors: each `(prob, masks)` fires with `prob`
/// and then XORs one of `masks` chosen uniformly.
pub fn convolve_flips(p: &[f64], errors: &[(f64, Vec<usize>)]) -> Vec<f64> {
    let mut mask_dist: HashMap<usize, f64> = HashMap::from([(0, 1.0)]);
    for (prob, masks) in errors {
        let mut next: HashMap<usize, f64> = HashMap::new();
        for (&m, &w) in &mask_dist {
            *next.entry(m).or_default() += w * (1.0 - prob);
            for &e in masks {
                *next.entry(m ^ e).or_default() += w * prob / masks.len() as f64;
            }
        }
        mask_dist = next;
    }
    let mut out = vec![0.0; p.len()];
    for (o, slot) in out.iter_mut().enumerate() {
        for (&m, &w) in &mask_dist {
            *slot += w * p[o ^ m];
        }
    }
    out
}

/// Total-variation distance between an empirical histogram and `p`.
pub fn tv_distance(counts: &[u64], p: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    0.5 * counts
        .iter()
        .zip(p)
        .map(|(&k, &q)| (k as f64 / n as f64 - q).abs())
        .sum::<f64>()
}

/// Null expectation of the empirical TV distance plus five of its standard
/// deviations. Each sample moves the TV by at most `1/N`, so by McDiarmid
/// the deviation is sub-Gaussian with `σ <= 1 / (2 sqrt N)`.
pub fn tv_threshold(p: &[f64], n: u64) -> f64 {
    let n = n as f64;
    let mean: f64 = 0.5
        * p.iter()
            .map(|&q| (2.0 * q * (1.0 - q) / (std::f64::consts::PI * n)).sqrt())
            .sum::<f64>();
    mean + 5.0 / (2.0 * n.sqrt())
}

/// Pearson statistic over cells with positive probability, and its degrees
/// of freedom. Fails outright if an impossible cell was observed.
pub fn chi_square(counts: &[u64], p: &[f64]) -> (f64, usize) {
    let n: u64 = counts.iter().sum();
    let mut chi2 = 0.0;
    let mut cells = 0usize;
    for (&k, &q) in counts.iter().zip(p) {
        if q < 1e-12 {
            assert_eq!(k, 0, "observed an outcome of probability zero");
            continue;
        }
        let e = q * n as f64;
        chi2 += (k as f64 - e).powi(2) / e;
        cells += 1;
    }
    (chi2, cells.saturating_sub(1))
}

/// `chi2 < dof + 5 sqrt(2 dof)`.
pub fn chi_square_ok(chi2: f64, dof: usize) -> bool {
    chi2 < dof as f64 + 5.0 * (2.0 * dof as f64).sqrt() + 1e-9
}

fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// `(I + μ_yz Y⊗Z + μ_zy Z⊗Y + μ_xx X⊗X) / 4`.
pub fn bell_diagonal_rho(mu_yz: f64, mu_zy: f64, mu_xx: f64) -> Matrix4<C64> {
    use PauliLetter::*;
    let m = |a, b| kron2(&letter_matrix(a), &letter_matrix(b));
    (m(I, I) + m(Y, Z) * c(mu_yz, 0.0) + m(Z, Y) * c(mu_zy, 0.0) + m(X, X) * c(mu_xx, 0.0)) * c(0.25, 0.0)
}

/// Eigenvalues of a Hermitian 4×4 matrix, ascending.
pub fn hermitian_eigenvalues(m: &Matrix4<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(*m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Concurrence by the spin-flip construction: the square roots of the
/// eigenvalues of `sqrt(ρ) ρ̃ sqrt(ρ)`, with `ρ̃ = (Y⊗Y) ρ* (Y⊗Y)`.
pub fn wootters_concurrence(rho: &Matrix4<C64>) -> f64 {
    let yy = kron2(&letter_matrix(PauliLetter::Y), &letter_matrix(PauliLetter::Y));
    let flipped = yy * rho.map(|z| z.conj()) * yy;
    let eig = SymmetricEigen::new(*rho);
    let sqrt_vals = eig.eigenvalues.map(|v| c(v.max(0.0).sqrt(), 0.0));
    let u = eig.eigenvectors;
    let sqrt_rho = u * Matrix4::from_diagonal(&sqrt_vals) * u.adjoint();
    let r = sqrt_rho * flipped * sqrt_rho;
    let r = (r + r.adjoint()) * c(0.5, 0.0);
    let mut lam: Vec<f64> = SymmetricEigen::new(r)
        .eigenvalues
        .iter()
        .map(|&v| v.max(0.0).sqrt())
        .collect();
    lam.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}
