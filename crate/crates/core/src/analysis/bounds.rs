//! Lower bounds on the localizable entanglement between photons `k` and
//! `k + l`, either straight from the correlators or from a fitted error model.

use serde::Serialize;

use crate::analysis::decay::{indirect_moments, ErrorModelFit};
use crate::analysis::moments::{concurrence, eof, rho_tilde_eigenvalues, TwoQubitMoments};
use crate::analysis::AnalysisError;
use crate::scalar::Scalar;
use crate::scan::CorrelatorEstimate;
use crate::template::{check_separation, Family};

/// One-sided 95% haircut, in standard errors.
pub const CONSERVATIVE_Z: f64 = 1.96;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMethod {
    Direct,
    Indirect,
}

impl BoundMethod {
    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::Direct => "direct",
            BoundMethod::Indirect => "indirect",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeBoundRow<T> {
    pub l: u32,
    pub method: BoundMethod,
    pub mu_yz: T,
    pub mu_zy: T,
    pub mu_xx: T,
    pub concurrence: T,
    pub eof: T,
    pub eof_conservative: T,
    /// The central moments left the physical set and were clamped.
    pub clamped: bool,
}

impl<T: Scalar> LeBoundRow<T> {
    fn build(
        l: u32,
        method: BoundMethod,
        central: TwoQubitMoments<T>,
        conservative: TwoQubitMoments<T>,
    ) -> Self {
        LeBoundRow {
            l,
            method,
            mu_yz: central.mu_yz,
            mu_zy: central.mu_zy,
            mu_xx: central.mu_xx,
            concurrence: concurrence(&central),
            eof: eof(&central),
            eof_conservative: eof(&conservative),
            clamped: rho_tilde_eigenvalues(&central).clamped,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LeBoundTable<T> {
    pub rows: Vec<LeBoundRow<T>>,
}

impl<T: Scalar> LeBoundTable<T> {
    /// Largest `l` with a positive central bound.
    pub fn xi_e(&self) -> Option<u32> {
        self.rows.iter().filter(|r| r.eof > T::zero()).map(|r| r.l).max()
    }

    /// Largest `l` with a positive conservative bound.
    pub fn xi_e_conservative(&self) -> Option<u32> {
        self.rows
            .iter()
            .filter(|r| r.eof_conservative > T::zero())
            .map(|r| r.l)
            .max()
    }
}

/// Moves `mu` toward zero by `delta`, never past it.
fn shrink<T: Scalar>(mu: T, delta: T) -> T {
    let m = (mu.abs() - delta).max(T::zero());
    (m * mu.signum()).max(-T::one()).min(T::one())
}

fn lookup(estimates: &[CorrelatorEstimate], family: Family, l: u32) -> Result<&CorrelatorEstimate, AnalysisError> {
    let e = estimates
        .iter()
        .find(|e| e.id.family == family && e.id.l == l)
        .ok_or(AnalysisError::MissingEstimate { family, l })?;
    if e.match_count == 0 {
        return Err(AnalysisError::NoInstances { family, l });
    }
    Ok(e)
}

/// Bounds at each requested `l` from `μ_yz = μ_zy = <Γ₁(l)>` and
/// `μ_xx = <Γ₂(l)>`. The conservative column shrinks each moment toward zero
/// by [`CONSERVATIVE_Z`] standard errors.
pub fn direct_bounds<T: Scalar>(estimates: &[CorrelatorEstimate], ls: &[u32]) -> Result<LeBoundTable<T>, AnalysisError> {
    let z = T::lit(CONSERVATIVE_Z);
    let mut rows = Vec::with_capacity(ls.len());
    for &l in ls {
        check_separation(l)?;
        let g1 = lookup(estimates, Family::Gamma1, l)?;
        let g2 = lookup(estimates, Family::Gamma2, l)?;
        let (m1, m2): (T, T) = (g1.mean(), g2.mean());
        let central = TwoQubitMoments::new(m1, m1, m2)?;
        let c1 = shrink(m1, z * g1.stderr());
        let c2 = shrink(m2, z * g2.stderr());
        let conservative = TwoQubitMoments::new(c1, c1, c2)?;
        rows.push(LeBoundRow::build(l, BoundMethod::Direct, central, conservative));
    }
    Ok(LeBoundTable { rows })
}

/// Bounds predicted by a fitted error model. The conservative column shrinks
/// each predicted moment by [`CONSERVATIVE_Z`] log-domain standard errors.
pub fn indirect_bounds<T: Scalar>(fit: &ErrorModelFit<T>, ls: &[u32]) -> Result<LeBoundTable<T>, AnalysisError> {
    let z = T::lit(CONSERVATIVE_Z);
    let rows = ls
        .iter()
        .map(|&l| {
            let (central, conservative) = indirect_moments(fit, l, z)?;
            Ok(LeBoundRow::build(l, BoundMethod::Indirect, central, conservative))
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(LeBoundTable { rows })
}
