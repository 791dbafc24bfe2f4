//! Pauli-error decay laws for `<Γ>`, weighted least-squares recovery of the
//! error rates, and extrapolation of the entanglement length.
//!
//! With `α = ln(1 - 4 p_σ / 3)` and `β = ln(1 - 2 p_zz)` every model here is
//! `ln <Γ> = a(l) α + b(l) β`, linear in `(α, β)`:
//!
//! * `a(l) = n_m = (2l + 8) / 3` for both families: each measured photon is
//!   flipped by two of the three Pauli errors.
//! * [`DecayModel::Asymptotic`] uses `b(l) = 2l / 3` for both families.
//! * [`DecayModel::Exact`] counts the bonds whose `Z Z` error anticommutes
//!   with the template: `(2l + 2) / 3` for Γ₁ and `(2l + 8) / 3` for Γ₂. The
//!   asymptotic law drops these boundary offsets.

use serde::{Deserialize, Serialize};

use crate::analysis::moments::{concurrence, TwoQubitMoments};
use crate::analysis::AnalysisError;
use crate::scalar::Scalar;
use crate::scan::CorrelatorEstimate;
use crate::template::{check_separation, separation_grid, Family};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// `(1 - 2 p_zz)^(2l/3)` for both families.
    #[default]
    Asymptotic,
    /// Template-counted `Z Z` exponents, exact for the simulated noise.
    Exact,
}

impl std::str::FromStr for DecayModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asymptotic" => Ok(DecayModel::Asymptotic),
            "exact" => Ok(DecayModel::Exact),
            _ => Err(format!("unknown decay model {s:?}")),
        }
    }
}

/// Exponents `(a, b)` of `α` and `β` at (possibly fractional) separation `l`.
pub fn decay_exponents<T: Scalar>(family: Family, l: T, model: DecayModel) -> (T, T) {
    let three = T::lit(3.0);
    let two_l = T::lit(2.0) * l;
    let a = (two_l + T::lit(8.0)) / three;
    let b = match (model, family) {
        (DecayModel::Asymptotic, _) => two_l / three,
        (DecayModel::Exact, Family::Gamma1) => (two_l + T::lit(2.0)) / three,
        (DecayModel::Exact, Family::Gamma2) => (two_l + T::lit(8.0)) / three,
    };
    (a, b)
}

fn check_rates<T: Scalar>(p_sigma: T, p_zz: T) -> Result<(), AnalysisError> {
    let ok_s = p_sigma >= T::zero() && p_sigma <= T::lit(0.75);
    let ok_z = p_zz >= T::zero() && p_zz <= T::lit(0.5);
    if ok_s && ok_z {
        Ok(())
    } else {
        Err(AnalysisError::InvalidRates {
            p_sigma: p_sigma.to_f64_lossy(),
            p_zz: p_zz.to_f64_lossy(),
        })
    }
}

/// `(α, β)` for valid rates.
pub fn log_rates<T: Scalar>(p_sigma: T, p_zz: T) -> (T, T) {
    (
        (T::one() - T::lit(4.0 / 3.0) * p_sigma).ln(),
        (T::one() - T::lit(2.0) * p_zz).ln(),
    )
}

/// `<Γ> = (1 - 4 p_σ / 3)^{n_m} (1 - 2 p_zz)^{2l/3}`, the same for both
/// families since their `n_m` coincide.
pub fn predict_gamma<T: Scalar>(family: Family, l: u32, p_sigma: T, p_zz: T) -> Result<T, AnalysisError> {
    predict_gamma_with(family, l, p_sigma, p_zz, DecayModel::Asymptotic)
}

pub fn predict_gamma_with<T: Scalar>(
    family: Family,
    l: u32,
    p_sigma: T,
    p_zz: T,
    model: DecayModel,
) -> Result<T, AnalysisError> {
    check_separation(l)?;
    check_rates(p_sigma, p_zz)?;
    let (a, b) = decay_exponents(family, T::count(l as u64), model);
    let base_s = T::one() - T::lit(4.0 / 3.0) * p_sigma;
    let base_z = T::one() - T::lit(2.0) * p_zz;
    Ok(base_s.powf(a) * base_z.powf(b))
}

/// One `<Γ>` measurement entering the fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayPoint<T> {
    pub family: Family,
    pub l: u32,
    pub mean: T,
    pub stderr: T,
}

impl<T: Scalar> DecayPoint<T> {
    pub fn from_estimate(e: &CorrelatorEstimate) -> Self {
        DecayPoint {
            family: e.id.family,
            l: e.id.l,
            mean: e.mean(),
            stderr: e.stderr(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    NonPositiveMean,
    InvalidStderr,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DroppedPoint {
    pub family: Family,
    pub l: u32,
    pub reason: DropReason,
}

/// Weighted least-squares fit of `(α, β)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorModelFit<T> {
    pub model: DecayModel,
    pub alpha: T,
    pub beta: T,
    /// Covariance of `(α, β)`.
    pub log_covariance: [[T; 2]; 2],
    /// Rates clamped to `[0, 3/4] × [0, 1/2]`.
    pub p_sigma: T,
    pub p_zz: T,
    /// Covariance of `(p_σ, p_zz)` by the delta method.
    pub covariance: [[T; 2]; 2],
    /// A raw rate fell outside its domain and was clamped.
    pub clamped: bool,
    pub chi2: T,
    pub dof: usize,
    pub points_used: usize,
    pub dropped: Vec<DroppedPoint>,
}

impl<T: Scalar> ErrorModelFit<T> {
    pub fn p_sigma_stderr(&self) -> T {
        self.covariance[0][0].max(T::zero()).sqrt()
    }

    pub fn p_zz_stderr(&self) -> T {
        self.covariance[1][1].max(T::zero()).sqrt()
    }

    /// `chi2 / dof`, NaN with zero degrees of freedom.
    pub fn reduced_chi2(&self) -> T {
        if self.dof == 0 {
            T::nan()
        } else {
            self.chi2 / T::count(self.dof as u64)
        }
    }

    /// Predicted `<Γ>` under the fitted rates.
    pub fn predict(&self, family: Family, l: u32) -> Result<T, AnalysisError> {
        predict_gamma_with(family, l, self.p_sigma, self.p_zz, self.model)
    }

    /// Log-domain variance of the prediction at `l`.
    fn log_variance(&self, family: Family, l: T) -> T {
        let (a, b) = decay_exponents(family, l, self.model);
        let c = &self.log_covariance;
        a * a * c[0][0] + T::lit(2.0) * a * b * c[0][1] + b * b * c[1][1]
    }
}

/// Fits `ln <Γ> = a(l) α + b(l) β` with weights `(mean / stderr)^2` (the
/// delta-method variance of `ln mean`). Points with non-positive means or
/// unusable errors are dropped and listed in the result.
pub fn fit_error_model<T: Scalar>(
    points: &[DecayPoint<T>],
    model: DecayModel,
) -> Result<ErrorModelFit<T>, AnalysisError> {
    let mut dropped = Vec::new();
    let (mut saa, mut sab, mut sbb, mut say, mut sby) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let mut rows = Vec::new();
    for p in points {
        check_separation(p.l)?;
        let reason = if !(p.mean > T::zero()) {
            Some(DropReason::NonPositiveMean)
        } else if !(p.stderr > T::zero()) || !p.stderr.is_finite() {
            Some(DropReason::InvalidStderr)
        } else {
            None
        };
        if let Some(reason) = reason {
            dropped.push(DroppedPoint {
                family: p.family,
                l: p.l,
                reason,
            });
            continue;
        }
        let (a, b) = decay_exponents(p.family, T::count(p.l as u64), model);
        let y = p.mean.ln();
        let sigma = p.stderr / p.mean;
        let w = T::one() / (sigma * sigma);
        saa = saa + w * a * a;
        sab = sab + w * a * b;
        sbb = sbb + w * b * b;
        say = say + w * a * y;
        sby = sby + w * b * y;
        rows.push((a, b, y, w));
    }
    let det = saa * sbb - sab * sab;
    if rows.len() < 2 || !(det > T::lit(1e-12) * saa * sbb) {
        return Err(AnalysisError::RankDeficient { usable: rows.len() });
    }
    let alpha = (sbb * say - sab * sby) / det;
    let beta = (saa * sby - sab * say) / det;
    let log_covariance = [[sbb / det, -sab / det], [-sab / det, saa / det]];
    let chi2 = rows.iter().fold(T::zero(), |acc, &(a, b, y, w)| {
        let r = y - a * alpha - b * beta;
        acc + w * r * r
    });

    let raw_sigma = T::lit(0.75) * (T::one() - alpha.exp());
    let raw_zz = T::lit(0.5) * (T::one() - beta.exp());
    let p_sigma = raw_sigma.max(T::zero()).min(T::lit(0.75));
    let p_zz = raw_zz.max(T::zero()).min(T::lit(0.5));
    let clamped = p_sigma != raw_sigma || p_zz != raw_zz;
    let ja = -T::lit(0.75) * alpha.exp();
    let jb = -T::lit(0.5) * beta.exp();
    let c = &log_covariance;
    let covariance = [
        [ja * ja * c[0][0], ja * jb * c[0][1]],
        [ja * jb * c[1][0], jb * jb * c[1][1]],
    ];
    Ok(ErrorModelFit {
        model,
        alpha,
        beta,
        log_covariance,
        p_sigma,
        p_zz,
        covariance,
        clamped,
        chi2,
        dof: rows.len() - 2,
        points_used: rows.len(),
        dropped,
    })
}

/// Grid value of the entanglement length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "l")]
pub enum XiGrid {
    /// Noiseless: entanglement persists at every separation.
    Unbounded,
    /// Largest `l ≡ 2 (mod 3)` with a positive bound.
    Length(u32),
    /// Not even `l = 2` has a positive bound.
    Vanishing,
}

impl XiGrid {
    pub fn length(self) -> Option<u32> {
        match self {
            XiGrid::Length(l) => Some(l),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiEstimate<T> {
    pub grid: XiGrid,
    /// Real `l` where the predicted concurrence reaches zero; `+∞` if unbounded.
    pub continuous: T,
    /// Propagated standard error of `continuous`; NaN when computed from exact rates.
    pub sigma: T,
}

/// Predicted pair moments at (fractional) separation `l`: `μ_yz = μ_zy` from
/// Γ₁ and `μ_xx` from Γ₂.
pub fn predicted_moments<T: Scalar>(alpha: T, beta: T, l: T, model: DecayModel) -> (T, T) {
    let m = |f| {
        let (a, b) = decay_exponents(f, l, model);
        (a * alpha + b * beta).exp()
    };
    (m(Family::Gamma1), m(Family::Gamma2))
}

/// Positive iff the predicted concurrence is positive: for non-negative
/// moments `λ_max = (1 + 2 μ_1 + μ_2) / 4`, so the margin is `2 μ_1 + μ_2 - 1`.
fn entanglement_margin<T: Scalar>(alpha: T, beta: T, l: T, model: DecayModel) -> T {
    let (m1, m2) = predicted_moments(alpha, beta, l, model);
    T::lit(2.0) * m1 + m2 - T::one()
}

/// Continuous root of the concurrence, by bisection. `α, β ≤ 0`, not both 0.
fn xi_continuous<T: Scalar>(alpha: T, beta: T, model: DecayModel) -> T {
    let f = |l: T| entanglement_margin(alpha, beta, l, model);
    let mut lo = T::lit(-4.0);
    if f(lo) <= T::zero() {
        return lo;
    }
    let mut hi = T::lit(8.0);
    while f(hi) > T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        if hi > T::lit(1e15) {
            return T::infinity();
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// `ξ_E` implied by the given rates.
pub fn xi_from_rates<T: Scalar>(p_sigma: T, p_zz: T, model: DecayModel) -> Result<XiEstimate<T>, AnalysisError> {
    check_rates(p_sigma, p_zz)?;
    let (alpha, beta) = log_rates(p_sigma, p_zz);
    Ok(xi_from_logs(alpha, beta, model, T::nan()))
}

fn xi_from_logs<T: Scalar>(alpha: T, beta: T, model: DecayModel, sigma: T) -> XiEstimate<T> {
    if alpha == T::zero() && beta == T::zero() {
        return XiEstimate {
            grid: XiGrid::Unbounded,
            continuous: T::infinity(),
            sigma,
        };
    }
    let cont = xi_continuous(alpha, beta, model);
    if !cont.is_finite() {
        return XiEstimate {
            grid: XiGrid::Unbounded,
            continuous: cont,
            sigma,
        };
    }
    let positive = |l: u32| entanglement_margin(alpha, beta, T::count(l as u64), model) > T::zero();
    // Start just below the root and correct by whole grid steps.
    let guess = cont.floor().to_f64_lossy().max(2.0) as u32;
    let mut l = guess - (guess + 1) % 3;
    while l > 2 && !positive(l) {
        l -= 3;
    }
    let grid = if !positive(l) {
        XiGrid::Vanishing
    } else {
        while positive(l + 3) {
            l += 3;
        }
        XiGrid::Length(l)
    };
    XiEstimate {
        grid,
        continuous: cont,
        sigma,
    }
}

/// `ξ_E` from a fit, with the continuous value's uncertainty propagated from
/// the `(α, β)` covariance.
pub fn xi_e<T: Scalar>(fit: &ErrorModelFit<T>) -> XiEstimate<T> {
    xi_e_with(fit, fit.model)
}

/// As [`xi_e`], but extrapolating the fitted rates with `model`.
pub fn xi_e_with<T: Scalar>(fit: &ErrorModelFit<T>, model: DecayModel) -> XiEstimate<T> {
    let (alpha, beta) = log_rates(fit.p_sigma, fit.p_zz);
    let cont = |a: T, b: T| xi_continuous(a.min(T::zero()), b.min(T::zero()), model);
    let base = cont(alpha, beta);
    let sigma = if base.is_finite() {
        let h = T::lit(1e-6);
        let da = (cont(alpha + h, beta) - cont(alpha - h, beta)) / (T::lit(2.0) * h);
        let db = (cont(alpha, beta + h) - cont(alpha, beta - h)) / (T::lit(2.0) * h);
        let c = &fit.log_covariance;
        (da * da * c[0][0] + T::lit(2.0) * da * db * c[0][1] + db * db * c[1][1])
            .max(T::zero())
            .sqrt()
    } else {
        T::nan()
    };
    xi_from_logs(alpha, beta, model, sigma)
}

/// Predicted moments at `l`, plus a conservative variant shrunk by
/// `z` log-domain standard errors.
pub fn indirect_moments<T: Scalar>(
    fit: &ErrorModelFit<T>,
    l: u32,
    z: T,
) -> Result<(TwoQubitMoments<T>, TwoQubitMoments<T>), AnalysisError> {
    check_separation(l)?;
    let (alpha, beta) = log_rates(fit.p_sigma, fit.p_zz);
    let lt = T::count(l as u64);
    let (m1, m2) = predicted_moments(alpha, beta, lt, fit.model);
    let s1 = fit.log_variance(Family::Gamma1, lt).sqrt();
    let s2 = fit.log_variance(Family::Gamma2, lt).sqrt();
    let central = TwoQubitMoments::new(m1, m1, m2)?;
    let c1 = m1 * (-z * s1).exp();
    let c2 = m2 * (-z * s2).exp();
    Ok((central, TwoQubitMoments::new(c1, c1, c2)?))
}

/// `ξ_E` swept over `p_zz` at fixed `p_σ`.
pub fn xi_curve<T: Scalar>(
    p_sigma: T,
    p_zz_values: &[T],
    model: DecayModel,
) -> Result<Vec<(T, XiEstimate<T>)>, AnalysisError> {
    p_zz_values
        .iter()
        .map(|&pz| Ok((pz, xi_from_rates(p_sigma, pz, model)?)))
        .collect()
}

/// Concurrence predicted at each grid `l <= l_max`.
pub fn predicted_concurrence<T: Scalar>(
    p_sigma: T,
    p_zz: T,
    l_max: u32,
    model: DecayModel,
) -> Result<Vec<(u32, T)>, AnalysisError> {
    check_rates(p_sigma, p_zz)?;
    let (alpha, beta) = log_rates(p_sigma, p_zz);
    separation_grid(l_max)
        .map(|l| {
            let (m1, m2) = predicted_moments(alpha, beta, T::count(l as u64), model);
            Ok((l, concurrence(&TwoQubitMoments::new(m1, m1, m2)?)))
        })
        .collect()
}
