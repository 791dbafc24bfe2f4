//! Plot-ready tables. Column orders are fixed; see the README.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::bounds::LeBoundRow;
use crate::analysis::decay::{ErrorModelFit, XiEstimate, XiGrid};
use crate::analysis::planner::ReachRow;
use crate::scalar::Scalar;
use crate::scan::CorrelatorEstimate;
use crate::template::{check_separation, Family, TemplateId};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("estimates row {row}: {reason}")]
    BadRow { row: u64, reason: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateRow {
    template: Family,
    l: u32,
    n_matches: u64,
    signed_sum: i64,
    n_overlapping: u64,
    mean: f64,
    stderr: f64,
    overlap_fraction: f64,
}

/// `template,l,n_matches,signed_sum,n_overlapping,mean,stderr,overlap_fraction`
pub fn write_estimates<W: Write>(out: W, estimates: &[CorrelatorEstimate]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    for e in estimates {
        w.serialize(EstimateRow {
            template: e.id.family,
            l: e.id.l,
            n_matches: e.match_count,
            signed_sum: e.signed_sum,
            n_overlapping: e.overlapping,
            mean: e.mean(),
            stderr: e.stderr(),
            overlap_fraction: e.overlap_fraction(),
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads the integer columns back; derived columns are recomputed.
pub fn read_estimates<R: Read>(input: R) -> Result<Vec<CorrelatorEstimate>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<EstimateRow>().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let bad = |reason: String| ReportError::BadRow { row: line, reason };
        check_separation(row.l).map_err(|e| bad(e.to_string()))?;
        if row.signed_sum.unsigned_abs() > row.n_matches || row.n_overlapping > row.n_matches {
            return Err(bad("counts are inconsistent".into()));
        }
        out.push(CorrelatorEstimate {
            id: TemplateId {
                family: row.template,
                l: row.l,
            },
            match_count: row.n_matches,
            signed_sum: row.signed_sum,
            overlapping: row.n_overlapping,
        });
    }
    Ok(out)
}

/// `l,method,mu_yz,mu_zy,mu_xx,concurrence,eof,eof_conservative,clamped`
pub fn write_bounds<W: Write, T: Scalar>(out: W, rows: &[LeBoundRow<T>]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "l",
        "method",
        "mu_yz",
        "mu_zy",
        "mu_xx",
        "concurrence",
        "eof",
        "eof_conservative",
        "clamped",
    ])?;
    for r in rows {
        let f = |v: T| v.to_f64_lossy().to_string();
        w.write_record([
            r.l.to_string(),
            r.method.name().to_string(),
            f(r.mu_yz),
            f(r.mu_zy),
            f(r.mu_xx),
            f(r.concurrence),
            f(r.eof),
            f(r.eof_conservative),
            r.clamped.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn opt(v: Option<u32>) -> String {
    v.map(|l| l.to_string()).unwrap_or_default()
}

/// `p_d,gamma1_max_l,gamma2_max_l`; empty cells where no length is reachable.
pub fn write_reach<W: Write>(out: W, rows: &[ReachRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_d", "gamma1_max_l", "gamma2_max_l"])?;
    for r in rows {
        w.write_record([r.p_d.to_string(), opt(r.gamma1), opt(r.gamma2)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn grid_cell(g: XiGrid) -> String {
    match g {
        XiGrid::Unbounded => "inf".into(),
        XiGrid::Length(l) => l.to_string(),
        XiGrid::Vanishing => String::new(),
    }
}

/// `p_sigma,p_zz,xi_grid,xi_continuous`
pub fn write_xi_curve<W: Write, T: Scalar>(
    out: W,
    p_sigma: T,
    rows: &[(T, XiEstimate<T>)],
) -> Result<(), ReportError> {
    write_xi_curves(out, &[(p_sigma, rows.to_vec())])
}

/// Several sweeps in one table.
pub fn write_xi_curves<W: Write, T: Scalar>(
    out: W,
    curves: &[(T, Vec<(T, XiEstimate<T>)>)],
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_sigma", "p_zz", "xi_grid", "xi_continuous"])?;
    for (ps, rows) in curves {
        for (pz, x) in rows {
            w.write_record([
                ps.to_f64_lossy().to_string(),
                pz.to_f64_lossy().to_string(),
                grid_cell(x.grid),
                x.continuous.to_f64_lossy().to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `p_zz` from 0.001 to 0.200 in steps of 0.001.
pub fn default_xi_grid() -> Vec<f64> {
    (1..=200).map(|i| i as f64 / 1000.0).collect()
}

/// `p_d,n_photons,k`
pub fn write_naive<W: Write>(out: W, rows: &[(f64, f64, u32)]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_d", "n_photons", "k"])?;
    for (p_d, n, k) in rows {
        w.write_record([p_d.to_string(), n.to_string(), k.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Fit results in a flat shape for JSON output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSummary {
    pub model: crate::analysis::decay::DecayModel,
    pub p_sigma: f64,
    pub p_sigma_stderr: f64,
    pub p_zz: f64,
    pub p_zz_stderr: f64,
    pub covariance: [[f64; 2]; 2],
    pub alpha: f64,
    pub beta: f64,
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: Option<f64>,
    pub clamped: bool,
    pub points_used: usize,
    pub dropped: Vec<crate::analysis::decay::DroppedPoint>,
    pub xi_grid: XiGrid,
    /// `None` when unbounded.
    pub xi_continuous: Option<f64>,
    pub xi_sigma: Option<f64>,
}

impl FitSummary {
    pub fn new<T: Scalar>(fit: &ErrorModelFit<T>, xi: &XiEstimate<T>) -> Self {
        let f = |v: T| v.to_f64_lossy();
        let finite = |v: f64| v.is_finite().then_some(v);
        FitSummary {
            model: fit.model,
            p_sigma: f(fit.p_sigma),
            p_sigma_stderr: f(fit.p_sigma_stderr()),
            p_zz: f(fit.p_zz),
            p_zz_stderr: f(fit.p_zz_stderr()),
            covariance: fit.covariance.map(|r| r.map(f)),
            alpha: f(fit.alpha),
            beta: f(fit.beta),
            chi2: f(fit.chi2),
            dof: fit.dof,
            reduced_chi2: finite(f(fit.reduced_chi2())),
            clamped: fit.clamped,
            points_used: fit.points_used,
            dropped: fit.dropped.clone(),
            xi_grid: xi.grid,
            xi_continuous: finite(f(xi.continuous)),
            xi_sigma: finite(f(xi.sigma)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(family: Family, l: u32, n: u64, sum: i64, ov: u64) -> CorrelatorEstimate {
        CorrelatorEstimate {
            id: TemplateId { family, l },
            match_count: n,
            signed_sum: sum,
            overlapping: ov,
        }
    }

    #[test]
    fn estimates_round_trip() {
        let es = vec![
            est(Family::Gamma1, 2, 100, 80, 3),
            est(Family::Gamma2, 2, 0, 0, 0),
            est(Family::Gamma2, 5, 7, -7, 0),
        ];
        let mut buf = Vec::new();
        write_estimates(&mut buf, &es).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("template,l,n_matches,signed_sum,n_overlapping,mean,stderr,overlap_fraction\n"));
        assert!(text.contains("gamma1,2,100,80,3,0.8,"));
        assert_eq!(read_estimates(&buf[..]).unwrap(), es);
    }

    #[test]
    fn rejects_bad_rows() {
        let text = "template,l,n_matches,signed_sum,n_overlapping,mean,stderr,overlap_fraction\n\
                    gamma1,3,1,1,0,1,0,0\n";
        assert!(matches!(read_estimates(text.as_bytes()), Err(ReportError::BadRow { row: 2, .. })));
        let text = "template,l,n_matches,signed_sum,n_overlapping,mean,stderr,overlap_fraction\n\
                    gamma1,2,1,5,0,1,0,0\n";
        assert!(read_estimates(text.as_bytes()).is_err());
        let text = "template,l\ngamma3,2\n";
        assert!(read_estimates(text.as_bytes()).is_err());
    }

    #[test]
    fn xi_cells() {
        assert_eq!(grid_cell(XiGrid::Unbounded), "inf");
        assert_eq!(grid_cell(XiGrid::Length(14)), "14");
        assert_eq!(grid_cell(XiGrid::Vanishing), "");
        assert_eq!(default_xi_grid().len(), 200);
    }
}
