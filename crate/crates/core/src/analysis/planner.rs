//! How far a given source can be probed directly: instance probabilities of
//! the templates under loss and random routing, optimal splitter settings,
//! and the naive tomography baseline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;
use crate::frame::Basis;
use crate::scalar::Scalar;
use crate::template::{Family, Template};

/// Photons in 10 s at one photon per nanosecond.
pub const DEFAULT_PHOTON_BUDGET: f64 = 1e10;

/// Search cap for [`max_direct_length`].
const MAX_SEARCH_L: u32 = 10_000_000;

/// Detector arrangement after the splitters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Y and Z detectors only (`q_X = 0`).
    TwoDetector,
    ThreeDetector,
}

impl Layout {
    /// Smallest layout that can measure the family.
    pub fn for_family(family: Family) -> Layout {
        match family {
            Family::Gamma1 => Layout::TwoDetector,
            Family::Gamma2 => Layout::ThreeDetector,
        }
    }

    /// Non-preferred detectors sharing `1 - p_p`.
    pub fn other_detectors(self) -> u32 {
        match self {
            Layout::TwoDetector => 1,
            Layout::ThreeDetector => 2,
        }
    }

    fn check(self, family: Family) -> Result<(), AnalysisError> {
        if self.other_detectors() < family.other_detectors() {
            Err(AnalysisError::InvalidLayout { family, layout: self })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::TwoDetector => "two-detector",
            Layout::ThreeDetector => "three-detector",
        })
    }
}

impl std::str::FromStr for Layout {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-detector" | "two_detector" | "2" => Ok(Layout::TwoDetector),
            "three-detector" | "three_detector" | "3" => Ok(Layout::ThreeDetector),
            _ => Err(format!("unknown layout {s:?}")),
        }
    }
}

fn check_probability<T: Scalar>(name: &'static str, v: T) -> Result<(), AnalysisError> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(AnalysisError::InvalidProbability {
            name,
            value: v.to_f64_lossy(),
        })
    }
}

/// Largest `K` with `4^K / p_d^K <= N`: the number of photons whose full
/// tomography fits in a budget of `N` emitted photons.
pub fn naive_tomography_k(p_d: f64, n: f64) -> Result<u32, AnalysisError> {
    if !(p_d > 0.0 && p_d <= 1.0) {
        return Err(AnalysisError::InvalidProbability { name: "p_d", value: p_d });
    }
    if !(n >= 1.0) {
        return Err(AnalysisError::InvalidProbability { name: "N", value: n });
    }
    let k = (n.ln() / (4.0 / p_d).ln() + 1e-12).floor();
    Ok(k as u32)
}

/// Probability that a given offset of a random record is an instance of the
/// template: `∏ p_d q_B` over its required slots. With a two-detector layout
/// `q_X` must be zero.
pub fn instance_probability<T: Scalar>(
    family: Family,
    l: u32,
    p_d: T,
    routing: [T; 3],
    layout: Layout,
) -> Result<T, AnalysisError> {
    layout.check(family)?;
    check_probability("p_d", p_d)?;
    for (name, q) in ["q_x", "q_y", "q_z"].into_iter().zip(routing) {
        check_probability(name, q)?;
    }
    let total = routing.iter().fold(T::zero(), |a, &b| a + b);
    if (total - T::one()).abs() > T::lit(1e-9) {
        return Err(AnalysisError::InvalidProbability {
            name: "q_x + q_y + q_z",
            value: total.to_f64_lossy(),
        });
    }
    if layout == Layout::TwoDetector && routing[0] != T::zero() {
        return Err(AnalysisError::InvalidLayout { family, layout });
    }
    let t = Template::new(family, l)?;
    let mut p = T::one();
    for (b, q) in Basis::ALL.into_iter().zip(routing) {
        p = p * (p_d * q).powi(t.count_basis(b) as i32);
    }
    Ok(p)
}

/// Optimal share of the preferred (Y) detector, `n_p / n_m`.
pub fn optimal_pp<T: Scalar>(family: Family, l: u32) -> Result<T, AnalysisError> {
    let (n_m, n_p) = family.counts(l)?;
    Ok(T::count(n_p as u64) / T::count(n_m as u64))
}

/// `(q_X, q_Y, q_Z)` at the optimal `p_p`, splitting the rest evenly over the
/// other detectors of the layout.
pub fn optimal_routing<T: Scalar>(family: Family, l: u32, layout: Layout) -> Result<[T; 3], AnalysisError> {
    layout.check(family)?;
    let pp: T = optimal_pp(family, l)?;
    let rest = T::one() - pp;
    Ok(match layout {
        Layout::TwoDetector => [T::zero(), pp, rest],
        Layout::ThreeDetector => {
            let half = rest * T::lit(0.5);
            [half, pp, half]
        }
    })
}

/// Optimal instance probability evaluated through the general product.
pub fn optimal_instance_probability<T: Scalar>(
    family: Family,
    l: u32,
    p_d: T,
    layout: Layout,
) -> Result<T, AnalysisError> {
    instance_probability(family, l, p_d, optimal_routing(family, l, layout)?, layout)
}

/// Closed form `p_d^{n_m} p_p^{n_p} ((1 - p_p) / a)^{n_m - n_p}` at
/// `p_p = n_p / n_m`, with `a` the number of non-preferred detectors.
pub fn compact_instance_probability<T: Scalar>(
    family: Family,
    l: u32,
    p_d: T,
    layout: Layout,
) -> Result<T, AnalysisError> {
    layout.check(family)?;
    check_probability("p_d", p_d)?;
    let (n_m, n_p) = family.counts(l)?;
    let pp: T = optimal_pp(family, l)?;
    let a = T::count(layout.other_detectors() as u64);
    Ok(p_d.powi(n_m as i32) * pp.powi(n_p as i32) * ((T::one() - pp) / a).powi((n_m - n_p) as i32))
}

fn ln_compact(family: Family, l: u32, p_d: f64, layout: Layout) -> f64 {
    let (n_m, n_p) = family.counts(l).expect("grid separation");
    let (n_m, n_p) = (n_m as f64, n_p as f64);
    let pp = n_p / n_m;
    let a = layout.other_detectors() as f64;
    let term = |n: f64, x: f64| if n == 0.0 { 0.0 } else { n * x.ln() };
    n_m * p_d.ln() + term(n_p, pp) + term(n_m - n_p, (1.0 - pp) / a)
}

/// Largest grid `l` whose expected instance count `N p_l` at the optimal
/// routing reaches `min_instances`, using the family's minimal layout.
/// `None` if not even `l = 2` does.
pub fn max_direct_length(family: Family, p_d: f64, n: f64, min_instances: f64) -> Result<Option<u32>, AnalysisError> {
    check_probability("p_d", p_d)?;
    if !(n >= 1.0) {
        return Err(AnalysisError::InvalidProbability { name: "N", value: n });
    }
    if !(min_instances > 0.0) {
        return Err(AnalysisError::InvalidProbability {
            name: "min_instances",
            value: min_instances,
        });
    }
    if p_d == 0.0 {
        return Ok(None);
    }
    let layout = Layout::for_family(family);
    let threshold = (min_instances / n).ln();
    let ok = |l: u32| ln_compact(family, l, p_d, layout) >= threshold;
    let mut best = None;
    let mut l = 2;
    while l <= MAX_SEARCH_L && ok(l) {
        best = Some(l);
        l += 3;
    }
    Ok(best)
}

/// Reach of both families at one detection probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReachRow {
    pub p_d: f64,
    pub gamma1: Option<u32>,
    pub gamma2: Option<u32>,
}

pub fn reach_curve(p_ds: &[f64], n: f64, min_instances: f64) -> Result<Vec<ReachRow>, AnalysisError> {
    p_ds.iter()
        .map(|&p_d| {
            Ok(ReachRow {
                p_d,
                gamma1: max_direct_length(Family::Gamma1, p_d, n, min_instances)?,
                gamma2: max_direct_length(Family::Gamma2, p_d, n, min_instances)?,
            })
        })
        .collect()
}

/// `p_d` from 0.05 to 0.95 in steps of 0.01.
pub fn default_reach_grid() -> Vec<f64> {
    (5..=95).map(|i| i as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::separation_grid;
    use proptest::prelude::*;

    #[test]
    fn naive_table() {
        let ks: Vec<_> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&p| naive_tomography_k(p, 1e10).unwrap())
            .collect();
        assert_eq!(ks, [6, 11, 15]);
        assert_eq!(naive_tomography_k(1.0, 16.0).unwrap(), 2);
        assert!(naive_tomography_k(0.0, 1e10).is_err());
    }

    #[test]
    fn compact_examples() {
        let p: f64 = compact_instance_probability(Family::Gamma1, 2, 1.0, Layout::TwoDetector).unwrap();
        assert!((p - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(optimal_pp::<f64>(Family::Gamma1, 8).unwrap(), 0.75);
        assert_eq!(optimal_pp::<f64>(Family::Gamma2, 2).unwrap(), 0.0);
        let p: f64 = compact_instance_probability(Family::Gamma2, 2, 0.5, Layout::ThreeDetector).unwrap();
        assert!((p - 0.5f64.powi(4) / 16.0).abs() < 1e-15);
    }

    #[test]
    fn general_matches_compact_at_optimum() {
        for l in separation_grid(50) {
            for (f, lay) in [
                (Family::Gamma1, Layout::TwoDetector),
                (Family::Gamma1, Layout::ThreeDetector),
                (Family::Gamma2, Layout::ThreeDetector),
            ] {
                for p_d in [0.1, 0.5, 0.9, 1.0] {
                    let g: f64 = optimal_instance_probability(f, l, p_d, lay).unwrap();
                    let c: f64 = compact_instance_probability(f, l, p_d, lay).unwrap();
                    assert!((g - c).abs() <= 1e-12 * c.max(1e-300), "{f} l={l} p_d={p_d}: {g} vs {c}");
                }
            }
        }
    }

    #[test]
    fn reach_numbers() {
        let r: Vec<_> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&p| max_direct_length(Family::Gamma2, p, DEFAULT_PHOTON_BUDGET, 1.0).unwrap().unwrap())
            .collect();
        assert_eq!(r, [5, 20, 77]);
        let r: Vec<_> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&p| max_direct_length(Family::Gamma1, p, DEFAULT_PHOTON_BUDGET, 1.0).unwrap().unwrap())
            .collect();
        assert_eq!(r, [8, 29, 176]);
        assert_eq!(max_direct_length(Family::Gamma2, 0.0, 1e10, 1.0).unwrap(), None);
        assert_eq!(max_direct_length(Family::Gamma2, 0.5, 10.0, 1.0).unwrap(), None);
    }

    #[test]
    fn more_instances_shorten_reach() {
        let one = max_direct_length(Family::Gamma2, 0.5, 1e10, 1.0).unwrap().unwrap();
        let many = max_direct_length(Family::Gamma2, 0.5, 1e10, 1e4).unwrap().unwrap();
        assert!(many < one);
    }

    #[test]
    fn layout_errors() {
        assert!(matches!(
            optimal_routing::<f64>(Family::Gamma2, 5, Layout::TwoDetector),
            Err(AnalysisError::InvalidLayout { .. })
        ));
        assert!(matches!(
            instance_probability(Family::Gamma1, 2, 1.0, [0.2, 0.4, 0.4], Layout::TwoDetector),
            Err(AnalysisError::InvalidLayout { .. })
        ));
        assert!(instance_probability(Family::Gamma1, 2, 1.0, [0.2, 0.4, 0.5], Layout::ThreeDetector).is_err());
        assert!(instance_probability(Family::Gamma1, 2, 1.2, [0.0, 0.5, 0.5], Layout::TwoDetector).is_err());
    }

    #[test]
    fn reach_grid_shape() {
        let g = default_reach_grid();
        assert_eq!(g.len(), 91);
        let rows = reach_curve(&g, 1e10, 1.0).unwrap();
        assert!(rows.windows(2).all(|w| w[0].gamma2 <= w[1].gamma2));
    }

    proptest! {
        #[test]
        fn monotone_in_p_d(l in (0u32..30).prop_map(|k| 3 * k + 2), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for (f, lay) in [(Family::Gamma1, Layout::TwoDetector), (Family::Gamma2, Layout::ThreeDetector)] {
                let r = optimal_routing(f, l, lay).unwrap();
                let p_lo = instance_probability(f, l, lo, r, lay).unwrap();
                let p_hi = instance_probability(f, l, hi, r, lay).unwrap();
                prop_assert!(p_lo <= p_hi);
            }
        }

        #[test]
        fn optimum_dominates(l in (0u32..30).prop_map(|k| 3 * k + 2), qx in 0.0f64..1.0, qy in 0.0f64..1.0, p_d in 0.05f64..1.0) {
            let qx = qx * (1.0 - qy);
            let q = [qx, qy, 1.0 - qx - qy];
            let lay = Layout::ThreeDetector;
            let best = optimal_instance_probability(Family::Gamma2, l, p_d, lay).unwrap();
            let any = instance_probability(Family::Gamma2, l, p_d, q, lay).unwrap();
            prop_assert!(any <= best * (1.0 + 1e-12));
            let q2 = [0.0, qy, 1.0 - qy];
            let best = optimal_instance_probability(Family::Gamma1, l, p_d, Layout::TwoDetector).unwrap();
            let any = instance_probability(Family::Gamma1, l, p_d, q2, Layout::TwoDetector).unwrap();
            prop_assert!(any <= best * (1.0 + 1e-12));
        }
    }
}
