use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use csmg_core::analysis::planner::{default_reach_grid, reach_curve};
use csmg_core::analysis::{
    direct_bounds, fit_error_model, indirect_bounds, max_direct_length, naive_tomography_k, xi_curve, xi_e_with,
    DecayPoint, Layout,
};
use csmg_core::record::write_header;
use csmg_core::report::{self, FitSummary};
use csmg_core::template::{separation_grid, verify_template};
use csmg_core::{
    scan_chunked, BoundRow, ClickRecord, ExperimentConfig, Family, RecordReader, ScanOptions, Scanner, Simulator,
    Template,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{data, usage, CliError};
use crate::{AnalyzeArgs, ExperimentArgs, PlanArgs, ReportArgs, ScanArgs, SimulateArgs, VerifyArgs};

const IO_CHUNK: usize = 1 << 16;
const DEFAULT_INDIRECT_LMAX: u32 = 200;

fn experiment(cfg: &RunConfig, a: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let mut e = cfg.experiment.clone();
    if let Some(v) = a.pd {
        e.p_d = v;
    }
    if let Some(v) = a.psigma {
        e.p_sigma = v;
    }
    if let Some(v) = a.pzz {
        e.p_zz = v;
    }
    if let Some(v) = a.qx {
        e.q_x = v;
    }
    if let Some(v) = a.qy {
        e.q_y = v;
    }
    if let Some(v) = a.qz {
        e.q_z = v;
    }
    if let Some(v) = a.photons {
        e.n_photons = v;
    }
    if let Some(v) = a.seed {
        e.seed = v;
    }
    if let Some(v) = a.burn_in {
        e.burn_in = v;
    }
    e.validate().map_err(usage)?;
    Ok(e)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(data(format!("cannot create {}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(data(format!("cannot open {}", path.display())))
}

fn output_dir(dir: Option<PathBuf>, fallback: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = dir
        .or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output.reports".into()))?;
    fs::create_dir_all(&dir).map_err(data(format!("cannot create {}", dir.display())))?;
    Ok(dir)
}

/// Writes to `path` or, when absent, standard output.
fn with_output<F>(path: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(data(p.display()))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush().map_err(data("stdout"))
        }
    }
}

fn photon_budget(photons: Option<u64>, time: f64, tau_em: f64) -> Result<f64, CliError> {
    if let Some(n) = photons {
        return Ok(n as f64);
    }
    if !(time > 0.0) || !(tau_em > 0.0) {
        return Err(CliError::Usage(format!(
            "measurement time {time} s and emission period {tau_em} s must be positive"
        )));
    }
    Ok(time / tau_em)
}

pub fn simulate(cfg: RunConfig, a: SimulateArgs) -> Result<(), CliError> {
    let e = experiment(&cfg, &a.experiment)?;
    let out = a
        .out
        .or(cfg.output.record)
        .ok_or_else(|| CliError::Usage("no output file: pass --out or set output.record".into()))?;
    let ctx = out.display().to_string();
    let mut w = create(&out)?;
    write_header(&mut w, e.n_photons, e.burn_in).map_err(data(&ctx))?;
    let mut sim = Simulator::new(&e, 0).map_err(usage)?;
    let mut buf = Vec::with_capacity(IO_CHUNK);
    while let Some(chunk) = sim.next_chunk(IO_CHUNK) {
        buf.clear();
        buf.extend(chunk.iter().map(|ev| ev.byte()));
        w.write_all(&buf).map_err(data(&ctx))?;
    }
    w.flush().map_err(data(&ctx))
}

fn templates(cfg: &RunConfig, a: &crate::SelectionArgs) -> Result<Vec<Template>, CliError> {
    let families = a.families.clone().unwrap_or_else(|| cfg.scan.families.clone());
    let ls: Vec<u32> = match (a.lmax, &cfg.scan.ls) {
        (Some(lmax), _) => separation_grid(lmax).collect(),
        (None, Some(ls)) => ls.clone(),
        (None, None) => separation_grid(cfg.scan.lmax).collect(),
    };
    if families.is_empty() || ls.is_empty() {
        return Err(CliError::Usage("no templates selected".into()));
    }
    let mut out = Vec::with_capacity(families.len() * ls.len());
    for &f in &families {
        for &l in &ls {
            out.push(Template::new(f, l).map_err(usage)?);
        }
    }
    Ok(out)
}

pub fn scan(cfg: RunConfig, a: ScanArgs) -> Result<(), CliError> {
    let ts = templates(&cfg, &a.selection)?;
    let mode = a.selection.mode.unwrap_or(cfg.scan.mode);
    let path = a
        .record
        .or(cfg.output.record.clone())
        .ok_or_else(|| CliError::Usage("no record: pass a path or set output.record".into()))?;
    let ctx = path.display().to_string();
    let input = open(&path)?;

    let (photons, estimates) = match a.chunk_size {
        Some(chunk) => {
            let mut rec = ClickRecord::read_from(input).map_err(data(&ctx))?;
            if let Some(b) = a.burn_in {
                rec = ClickRecord::new(rec.events().to_vec(), b).map_err(data(&ctx))?;
            }
            let opts = ScanOptions {
                mode,
                skip_burn_in: true,
            };
            (rec.len() as u64, scan_chunked(&rec, &ts, &opts, chunk))
        }
        None => {
            let mut reader = RecordReader::new(input).map_err(data(&ctx))?;
            let burn_in = a.burn_in.unwrap_or(reader.burn_in());
            if burn_in > reader.count() {
                return Err(CliError::Data(format!(
                    "{ctx}: burn-in {burn_in} exceeds photon count {}",
                    reader.count()
                )));
            }
            let mut scanner = Scanner::new(&ts, mode, burn_in);
            while let Some(chunk) = reader.next_chunk(IO_CHUNK).map_err(data(&ctx))? {
                scanner.feed(chunk);
            }
            (reader.count(), scanner.finish())
        }
    };

    let out = a.out.or(cfg.output.estimates);
    with_output(out.as_deref(), |w| {
        report::write_estimates(w, &estimates).map_err(data("estimates"))
    })?;
    let matched: u64 = estimates.iter().map(|e| e.match_count).sum();
    eprintln!("scanned {photons} photons, {} templates, {matched} matches", ts.len());
    Ok(())
}

pub fn analyze(cfg: RunConfig, a: AnalyzeArgs) -> Result<(), CliError> {
    let path = a
        .estimates
        .or(cfg.output.estimates.clone())
        .ok_or_else(|| CliError::Usage("no estimates: pass a path or set output.estimates".into()))?;
    let ctx = path.display().to_string();
    let estimates = report::read_estimates(open(&path)?).map_err(data(&ctx))?;
    if estimates.is_empty() {
        return Err(CliError::Data(format!("{ctx}: no estimates")));
    }

    let with_matches = |f: Family| -> BTreeSet<u32> {
        estimates
            .iter()
            .filter(|e| e.id.family == f && e.match_count > 0)
            .map(|e| e.l())
            .collect()
    };
    let g1 = with_matches(Family::Gamma1);
    let g2 = with_matches(Family::Gamma2);
    let direct_ls: Vec<u32> = g1.intersection(&g2).copied().collect();
    let all_ls: BTreeSet<u32> = estimates.iter().map(|e| e.l()).collect();
    let skipped: Vec<u32> = all_ls.difference(&direct_ls.iter().copied().collect()).copied().collect();
    if !skipped.is_empty() {
        eprintln!("no direct bound at l = {skipped:?}: a family has no instances");
    }
    let direct = direct_bounds::<f64>(&estimates, &direct_ls).map_err(data(&ctx))?;

    let points: Vec<DecayPoint<f64>> = estimates
        .iter()
        .filter(|e| e.match_count > 0)
        .map(DecayPoint::from_estimate)
        .collect();
    let mut rows: Vec<BoundRow> = direct.rows.clone();
    let (fit_json, fit_error) = match fit_error_model(&points, a.model) {
        Ok(fit) => {
            let xi = xi_e_with(&fit, a.model);
            let lmax = a.lmax.unwrap_or(DEFAULT_INDIRECT_LMAX);
            let ls: Vec<u32> = separation_grid(lmax).collect();
            let indirect = indirect_bounds(&fit, &ls).map_err(data(&ctx))?;
            rows.extend(indirect.rows);
            (Some(FitSummary::new(&fit, &xi)), None)
        }
        Err(e) => {
            eprintln!("error-model fit skipped: {e}");
            (None, Some(e.to_string()))
        }
    };

    let summary = json!({
        "fit": fit_json,
        "fit_error": fit_error,
        "direct": {
            "ls": direct_ls,
            "xi_e": direct.xi_e(),
            "xi_e_conservative": direct.xi_e_conservative(),
            "skipped_ls": skipped,
        },
    });

    match a.out.or(cfg.output.reports) {
        Some(dir) => {
            let dir = output_dir(Some(dir), &None)?;
            with_output(Some(&dir.join("bounds.csv")), |w| {
                report::write_bounds(w, &rows).map_err(data("bounds"))
            })?;
            with_output(Some(&dir.join("fit.json")), |w| {
                serde_json::to_writer_pretty(&mut *w, &summary).map_err(data("fit.json"))?;
                writeln!(w).map_err(data("fit.json"))
            })
        }
        None => {
            with_output(None, |w| report::write_bounds(w, &rows).map_err(data("bounds")))?;
            eprintln!("{}", serde_json::to_string_pretty(&summary).map_err(data("fit summary"))?);
            Ok(())
        }
    }
}

pub fn plan(cfg: RunConfig, a: PlanArgs) -> Result<(), CliError> {
    let p_d = a.pd.unwrap_or(cfg.experiment.p_d);
    let n = photon_budget(a.photons, a.time, cfg.experiment.tau_em)?;
    let k = naive_tomography_k(p_d, n).map_err(usage)?;
    let mut lines = vec![("naive-tomography".to_string(), String::new(), Some(k))];
    for f in Family::ALL {
        let l = max_direct_length(f, p_d, n, a.min_instances).map_err(usage)?;
        lines.push((f.name().to_string(), Layout::for_family(f).to_string(), l));
    }
    with_output(a.out.as_deref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["method", "layout", "p_d", "n_photons", "max_l"])
            .map_err(data("plan"))?;
        for (method, layout, l) in &lines {
            let l = l.map(|v| v.to_string()).unwrap_or_default();
            csv.write_record([method.as_str(), layout, &p_d.to_string(), &n.to_string(), &l])
                .map_err(data("plan"))?;
        }
        csv.flush().map_err(data("plan"))
    })
}

pub fn verify(cfg: RunConfig, a: VerifyArgs) -> Result<(), CliError> {
    let families = a.families.unwrap_or(cfg.scan.families);
    let mut ts = Vec::new();
    for &f in &families {
        for l in separation_grid(a.lmax) {
            ts.push(Template::new(f, l).map_err(usage)?);
        }
    }
    let results: Vec<_> = ts
        .par_iter()
        .map(|t| (t.id(), verify_template(t, a.trials, a.seed)))
        .collect();
    let mut failures = 0;
    for (id, r) in &results {
        match r {
            Ok(rep) => println!("{id}: ok (phase {}, {} trials)", rep.phase, rep.trials),
            Err(e) => {
                failures += 1;
                println!("{id}: FAILED: {e}");
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Verification(format!(
            "{failures} of {} templates failed verification",
            results.len()
        )));
    }
    eprintln!("{} templates verified", results.len());
    Ok(())
}

pub fn report(cfg: RunConfig, a: ReportArgs) -> Result<(), CliError> {
    let dir = output_dir(a.out, &cfg.output.reports)?;
    let n = photon_budget(a.photons, a.time, cfg.experiment.tau_em)?;
    let grid = default_reach_grid();

    let reach = reach_curve(&grid, n, a.min_instances).map_err(usage)?;
    with_output(Some(&dir.join("reach_curve.csv")), |w| {
        report::write_reach(w, &reach).map_err(data("reach_curve.csv"))
    })?;

    let pz = report::default_xi_grid();
    let curves = a
        .psigma
        .iter()
        .map(|&ps| xi_curve(ps, &pz, a.model).map(|rows| (ps, rows)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    with_output(Some(&dir.join("xi_curve.csv")), |w| {
        report::write_xi_curves(w, &curves).map_err(data("xi_curve.csv"))
    })?;

    let naive = grid
        .iter()
        .map(|&p_d| naive_tomography_k(p_d, n).map(|k| (p_d, n, k)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    with_output(Some(&dir.join("naive.csv")), |w| {
        report::write_naive(w, &naive).map_err(data("naive.csv"))
    })?;
    eprintln!("wrote reach_curve.csv, xi_curve.csv and naive.csv to {}", dir.display());
    Ok(())
}
