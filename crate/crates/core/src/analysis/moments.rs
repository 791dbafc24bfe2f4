//! Two-qubit Bell-diagonal states built from the measured correlators, and
//! their concurrence and entanglement of formation.

use crate::analysis::AnalysisError;
use crate::scalar::Scalar;

/// Eigenvalues more negative than this are reported as clamped.
pub const POSITIVITY_TOLERANCE: f64 = 1e-9;

/// Correlators `<Y⊗Z>`, `<Z⊗Y>`, `<X⊗X>` of a photon pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitMoments<T> {
    pub mu_yz: T,
    pub mu_zy: T,
    pub mu_xx: T,
}

impl<T: Scalar> TwoQubitMoments<T> {
    /// Each moment must lie in `[-1, 1]`. Positivity of the state is not
    /// required here; see [`rho_tilde_eigenvalues`].
    pub fn new(mu_yz: T, mu_zy: T, mu_xx: T) -> Result<Self, AnalysisError> {
        for v in [mu_yz, mu_zy, mu_xx] {
            if !(v.abs() <= T::one()) {
                return Err(AnalysisError::MomentOutOfRange(v.to_f64_lossy()));
            }
        }
        Ok(TwoQubitMoments {
            mu_yz,
            mu_zy,
            mu_xx,
        })
    }

    /// All three moments equal.
    pub fn uniform(mu: T) -> Result<Self, AnalysisError> {
        Self::new(mu, mu, mu)
    }
}

/// Spectrum of `(I + μ_yz Y⊗Z + μ_zy Z⊗Y + μ_xx X⊗X) / 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellSpectrum<T> {
    /// Ordered by `(s1, s2)` = `(+,+), (+,-), (-,+), (-,-)`.
    pub eigenvalues: [T; 4],
    /// An eigenvalue fell below `-POSITIVITY_TOLERANCE` and was clamped.
    pub clamped: bool,
}

/// `Y⊗Z` and `Z⊗Y` commute and multiply to `X⊗X`, so the joint eigenvalues
/// are `(1 + s1 μ_yz + s2 μ_zy + s1 s2 μ_xx) / 4`. Negative eigenvalues
/// (statistical noise outside the physical set) are clamped to zero and the
/// spectrum renormalised.
pub fn rho_tilde_eigenvalues<T: Scalar>(m: &TwoQubitMoments<T>) -> BellSpectrum<T> {
    let quarter = T::lit(0.25);
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let mut ev = signs.map(|(s1, s2)| {
        let (s1, s2) = (T::lit(s1), T::lit(s2));
        (T::one() + s1 * m.mu_yz + s2 * m.mu_zy + s1 * s2 * m.mu_xx) * quarter
    });
    let tol = T::lit(POSITIVITY_TOLERANCE);
    let clamped = ev.iter().any(|&v| v < -tol);
    if ev.iter().any(|&v| v < T::zero()) {
        for v in &mut ev {
            *v = v.max(T::zero());
        }
        let total = ev.iter().fold(T::zero(), |a, &b| a + b);
        for v in &mut ev {
            *v = *v / total;
        }
    }
    BellSpectrum {
        eigenvalues: ev,
        clamped,
    }
}

/// Bell-diagonal concurrence `max(0, 2 λ_max - 1)`.
pub fn concurrence<T: Scalar>(m: &TwoQubitMoments<T>) -> T {
    let s = rho_tilde_eigenvalues(m);
    let lmax = s.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b));
    (T::lit(2.0) * lmax - T::one()).max(T::zero()).min(T::one())
}

/// `h(x) = -x log2 x - (1-x) log2 (1-x)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Scalar>(x: T) -> T {
    let term = |p: T| {
        if p <= T::zero() {
            T::zero()
        } else {
            -p * p.log2()
        }
    };
    term(x) + term(T::one() - x)
}

/// Wootters: `E = h((1 + sqrt(1 - C^2)) / 2)`.
pub fn eof_from_concurrence<T: Scalar>(c: T) -> T {
    let c = c.max(T::zero()).min(T::one());
    let x = (T::one() + (T::one() - c * c).max(T::zero()).sqrt()) * T::lit(0.5);
    binary_entropy(x).max(T::zero()).min(T::one())
}

pub fn eof<T: Scalar>(m: &TwoQubitMoments<T>) -> T {
    eof_from_concurrence(concurrence(m))
}
