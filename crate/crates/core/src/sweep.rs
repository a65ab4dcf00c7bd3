//! Parameter sweeps over independent NESS evaluations.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{ModelConfig, SweepAxis, SweepSpec};
use crate::error::{PrebError, Result};
use crate::pipeline::run_ness;
use crate::thermo::NessReport;

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    /// Parameters of this point (also for failed points).
    pub tau: f64,
    pub lambda: Option<f64>,
    pub mu: f64,
    pub beta: [f64; 2],
    pub outcome: std::result::Result<NessReport, String>,
}

fn evaluate(base: &ModelConfig, axis: SweepAxis, value: f64) -> SweepRow {
    let cfg = base.with_axis(axis, value);
    let (tau, lambda, mu, beta) = match &cfg {
        Ok(c) => (
            c.process.tau,
            c.baths[0].spectral.width(),
            c.baths[0].thermal.mu,
            [c.baths[0].thermal.beta, c.baths[1].thermal.beta],
        ),
        Err(_) => (base.process.tau, base.baths[0].spectral.width(), base.baths[0].thermal.mu, [base.baths[0].thermal.beta, base.baths[1].thermal.beta]),
    };
    let outcome = cfg.and_then(|c| run_ness(&c)).map_err(|e| e.to_string());
    SweepRow { value, tau, lambda, mu, beta, outcome }
}

/// Runs every grid point on a pool of `jobs` threads. Rows come back in
/// ascending axis order; a failing point is recorded, not fatal.
pub fn run_sweep(base: &ModelConfig, spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>> {
    let values = spec.values();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PrebError::Numerical(format!("cannot start worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> =
        pool.install(|| values.par_iter().map(|&v| evaluate(base, spec.axis, v)).collect());
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(rows)
}

pub fn sweep_header() -> Vec<&'static str> {
    let mut h = NessReport::HEADER.to_vec();
    h.push("error");
    h
}

pub fn write_report_csv<W: Write>(out: W, reports: &[NessReport]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(NessReport::HEADER)?;
    for r in reports {
        wtr.write_record(r.csv_fields())?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(sweep_header())?;
    for row in rows {
        let mut fields = match &row.outcome {
            Ok(rep) => {
                let mut f = rep.csv_fields();
                f.push(String::new());
                f
            }
            Err(msg) => {
                let mut f = vec![String::new(); NessReport::HEADER.len() + 1];
                f[0] = row.tau.to_string();
                f[1] = row.lambda.map(|x| x.to_string()).unwrap_or_default();
                f[2] = row.mu.to_string();
                f[3] = row.beta[0].to_string();
                f[4] = row.beta[1].to_string();
                f[NessReport::HEADER.len()] = msg.clone();
                f
            }
        };
        fields.truncate(NessReport::HEADER.len() + 1);
        wtr.write_record(fields)?;
    }
    wtr.flush()?;
    Ok(())
}
