use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentOutput, SweepRecord};
use crate::error::{Error, Result};
use crate::free_energy::Method;
use crate::model::{ModelKind, Order};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::invalid(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// Writes `# config_hash=<hash>`, a header row, and one row per item.
pub fn write_csv<T: Serialize>(path: &Path, config_hash: &str, rows: &[T]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# config_hash={config_hash}")?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Document<T> {
    config_hash: String,
    result: T,
}

pub fn write_json<T: Serialize>(path: &Path, config_hash: &str, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(
        &mut file,
        &Document {
            config_hash: config_hash.to_string(),
            result: value,
        },
    )?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

/// Reads sweep records from a JSON result file and checks each one against
/// its stored realizations.
pub fn load_sweep_json(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    let text = std::fs::read_to_string(path)?;
    let doc: Document<ExperimentOutput> = serde_json::from_str(&text)?;
    let records = match doc.result {
        ExperimentOutput::SelfAveraging(r) | ExperimentOutput::Convergence(r) => r,
        ExperimentOutput::Monotonicity(checks) => checks
            .into_iter()
            .flat_map(|c| c.records.into_iter().chain(std::iter::once(c.rem)))
            .collect(),
        _ => return Err(Error::invalid("result file holds no sweep records")),
    };
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

#[derive(Serialize)]
struct SweepRow {
    experiment: String,
    kind: ModelKind,
    sampler: String,
    n: usize,
    p: Order,
    beta: f64,
    gamma: f64,
    realizations: usize,
    mean: f64,
    std: f64,
    std_error: f64,
    probe_variance: f64,
    rho: Option<f64>,
    target: Option<f64>,
    gap: Option<f64>,
    master_seed: u64,
}

impl From<&SweepRecord> for SweepRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            experiment: r.experiment.to_string(),
            kind: r.kind,
            sampler: r.sampler.to_string(),
            n: r.n,
            p: r.p,
            beta: r.beta,
            gamma: r.gamma,
            realizations: r.values.len(),
            mean: r.mean,
            std: r.std,
            std_error: r.std_error,
            probe_variance: r.probe_variance,
            rho: r.rho,
            target: r.target,
            gap: r.gap,
            master_seed: r.master_seed,
        }
    }
}

#[derive(Serialize)]
struct RealizationRow {
    n: usize,
    p: Order,
    beta: f64,
    gamma: f64,
    master_seed: u64,
    realization: usize,
    seed: u64,
    value: f64,
    method: Method,
    std_error: f64,
}

fn realization_rows(records: &[SweepRecord]) -> Vec<RealizationRow> {
    records
        .iter()
        .flat_map(|r| {
            r.values.iter().map(move |v| RealizationRow {
                n: r.n,
                p: r.p,
                beta: r.beta,
                gamma: r.gamma,
                master_seed: r.master_seed,
                realization: v.realization,
                seed: v.seed,
                value: v.value,
                method: v.method,
                std_error: v.std_error,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct MonotonicityRow {
    n: usize,
    beta: f64,
    p: Order,
    mean: f64,
    std_error: f64,
    rem_mean: f64,
    rem_std_error: f64,
    monotone: bool,
    below_rem: bool,
    sigmas: f64,
}

#[derive(Serialize)]
struct CovarianceRow {
    kind: ModelKind,
    sampler: String,
    n: usize,
    p: Order,
    realizations: usize,
    master_seed: u64,
    pairs: usize,
    max_abs_deviation: f64,
    max_sigma: f64,
    worst_a: u32,
    worst_b: u32,
    sigmas: f64,
    within_tolerance: bool,
}

impl ExperimentOutput {
    fn stem(&self) -> &'static str {
        match self {
            ExperimentOutput::Covariance(_) => "covariance",
            ExperimentOutput::SelfAveraging(_) => "self_averaging",
            ExperimentOutput::Convergence(_) => "convergence",
            ExperimentOutput::PhaseDiagram(_) => "phase_diagram",
            ExperimentOutput::BoundsAudit(_) => "bounds_audit",
            ExperimentOutput::Clusters(_) => "clusters",
            ExperimentOutput::Monotonicity(_) => "monotonicity",
        }
    }

    /// Writes the result into `dir` and returns the files created.
    ///
    /// JSON output is a single document. CSV output is one summary table per
    /// experiment plus, where present, per-realization tables and curve
    /// files; cluster reports are always written as JSON as well.
    pub fn write(&self, dir: &Path, format: Format, config_hash: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.stem();
        let path = |name: &str| dir.join(name);
        let mut files = Vec::new();
        if format == Format::Json {
            let p = path(&format!("{stem}.json"));
            write_json(&p, config_hash, self)?;
            return Ok(vec![p]);
        }
        let main = path(&format!("{stem}.csv"));
        match self {
            ExperimentOutput::SelfAveraging(r) | ExperimentOutput::Convergence(r) => {
                let rows: Vec<SweepRow> = r.iter().map(SweepRow::from).collect();
                write_csv(&main, config_hash, &rows)?;
                files.push(main);
                let p = path(&format!("{stem}_realizations.csv"));
                write_csv(&p, config_hash, &realization_rows(r))?;
                files.push(p);
            }
            ExperimentOutput::BoundsAudit(a) => {
                write_csv(&main, config_hash, &a.records)?;
                files.push(main);
            }
            ExperimentOutput::PhaseDiagram(d) => {
                write_csv(&main, config_hash, &d.rows)?;
                files.push(main);
                let p = path("critical_curve.csv");
                write_csv(&p, config_hash, &d.critical_curve)?;
                files.push(p);
                let p = path("freezing_line.csv");
                write_csv(&p, config_hash, &d.freezing_line)?;
                files.push(p);
            }
            ExperimentOutput::Clusters(c) => {
                write_csv(&main, config_hash, &c.summaries)?;
                files.push(main);
                let p = path("cluster_reports.json");
                write_json(&p, config_hash, &c.records)?;
                files.push(p);
            }
            ExperimentOutput::Monotonicity(checks) => {
                let rows: Vec<MonotonicityRow> = checks
                    .iter()
                    .flat_map(|c| {
                        c.records.iter().chain(std::iter::once(&c.rem)).map(move |r| MonotonicityRow {
                            n: c.n,
                            beta: c.beta,
                            p: r.p,
                            mean: r.mean,
                            std_error: r.std_error,
                            rem_mean: c.rem.mean,
                            rem_std_error: c.rem.std_error,
                            monotone: c.monotone,
                            below_rem: c.below_rem,
                            sigmas: c.sigmas,
                        })
                    })
                    .collect();
                write_csv(&main, config_hash, &rows)?;
                files.push(main);
                let all: Vec<SweepRecord> = checks
                    .iter()
                    .flat_map(|c| c.records.iter().cloned().chain(std::iter::once(c.rem.clone())))
                    .collect();
                let p = path("monotonicity_realizations.csv");
                write_csv(&p, config_hash, &realization_rows(&all))?;
                files.push(p);
            }
            ExperimentOutput::Covariance(recs) => {
                let rows: Vec<CovarianceRow> = recs
                    .iter()
                    .map(|r| CovarianceRow {
                        kind: r.kind,
                        sampler: r.sampler.to_string(),
                        n: r.n,
                        p: r.p,
                        realizations: r.realizations,
                        master_seed: r.master_seed,
                        pairs: r.pairs,
                        max_abs_deviation: r.max_abs_deviation,
                        max_sigma: r.max_sigma,
                        worst_a: r.worst_pair.0,
                        worst_b: r.worst_pair.1,
                        sigmas: r.sigmas,
                        within_tolerance: r.within_tolerance,
                    })
                    .collect();
                write_csv(&main, config_hash, &rows)?;
                files.push(main);
            }
        }
        Ok(files)
    }
}
