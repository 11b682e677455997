//! Experiment orchestration: disorder averages over seeded realizations,
//! bound audits, cluster statistics, phase-diagram data, and persistence.
//!
//! Realization `r` of every grid point uses the field seed
//! `derive_seed(master_seed, r)`, so each record can be replayed alone and
//! grid points share common random numbers. Realizations run in parallel;
//! results are collected in index order, which makes every output
//! independent of the worker count.

mod config;
mod output;

pub use config::{content_hash, Experiment, ExperimentConfig, MethodChoice, PSchedule, SlqSettings};
pub use output::{load_sweep_json, write_csv, write_json, Format};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    beta_c, critical_field, gibbs_lower_bound, golden_thompson_upper_bound, qrem_pressure, Phase,
};
use crate::disorder::rng::derive_seed;
use crate::disorder::{exact_covariance, sample_field, DisorderField, Sampler};
use crate::error::{Error, Result};
use crate::free_energy::{
    pressure_classical, pressure_slq, spectrum_exact, Method, PressureEstimate,
};
use crate::geometry::{cluster_report, deviation_set, ClusterReport};
use crate::hamiltonian::{operator_norm_estimate, Boundary, NormOptions};
use crate::model::{ModelKind, ModelParameters, Order, SpinConfiguration};

/// Stream index separating SLQ probe seeds from field seeds.
const SLQ_STREAM: u64 = 0x736c_7100;
/// Relative tolerance for boundary-operator norms in the bound audit.
const AUDIT_NORM_TOL: f64 = 1e-10;
/// Slack allowed on both sides of the bound sandwich.
pub const AUDIT_SLACK: f64 = 1e-10;

/// Seed of realization `r`.
pub fn realization_seed(master_seed: u64, r: usize) -> u64 {
    derive_seed(master_seed, r as u64)
}

/// Field of realization `r` at a grid point.
pub fn realization_field(
    params: &ModelParameters,
    sampler: Sampler,
    master_seed: u64,
    r: usize,
) -> Result<DisorderField> {
    sample_field(params, realization_seed(master_seed, r), sampler)
}

fn resolve_method(cfg: &ExperimentConfig, n: usize, gamma: f64) -> Result<Method> {
    Ok(match cfg.method {
        MethodChoice::Auto if gamma == 0.0 => Method::Classical,
        MethodChoice::Auto if n <= cfg.dense_cap => Method::Exact,
        MethodChoice::Auto => Method::Slq,
        MethodChoice::Classical if gamma != 0.0 => {
            return Err(Error::Config(format!(
                "the classical method needs gamma = 0, got {gamma}"
            )))
        }
        MethodChoice::Classical => Method::Classical,
        MethodChoice::Exact => Method::Exact,
        MethodChoice::Slq => Method::Slq,
    })
}

/// Pressures of one field at one `Γ` across several `β`; the dense spectrum
/// is computed once and reused.
pub fn field_pressures(
    field: &DisorderField,
    betas: &[f64],
    gamma: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<PressureEstimate>> {
    match resolve_method(cfg, field.n(), gamma)? {
        Method::Classical => betas.iter().map(|&b| pressure_classical(field, b)).collect(),
        Method::Exact => {
            let spectrum = spectrum_exact(field, gamma, cfg.dense_cap)?;
            betas.iter().map(|&b| spectrum.pressure(b)).collect()
        }
        Method::Slq => {
            let opts = cfg.slq.options(derive_seed(field.seed(), SLQ_STREAM));
            betas
                .iter()
                .map(|&b| pressure_slq(field, b, gamma, &opts))
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationValue {
    pub realization: usize,
    pub seed: u64,
    pub value: f64,
    pub method: Method,
    /// Quadrature standard error (SLQ only).
    pub std_error: f64,
}

/// Disorder statistics of `Φ` at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub experiment: Experiment,
    pub kind: ModelKind,
    pub sampler: Sampler,
    pub n: usize,
    pub p: Order,
    pub beta: f64,
    pub gamma: f64,
    pub master_seed: u64,
    pub values: Vec<RealizationValue>,
    pub mean: f64,
    /// Sample standard deviation over realizations.
    pub std: f64,
    /// `std / √M`.
    pub std_error: f64,
    /// Mean squared SLQ standard error; zero for exact methods.
    pub probe_variance: f64,
    /// `ρ_N = σ_disorder √N / β` with the probe variance removed from the
    /// sample variance.
    pub rho: Option<f64>,
    pub target: Option<f64>,
    pub gap: Option<f64>,
}

fn moments(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

impl SweepRecord {
    #[allow(clippy::too_many_arguments)]
    fn new(
        cfg: &ExperimentConfig,
        params: &ModelParameters,
        sampler: Sampler,
        beta: f64,
        gamma: f64,
        values: Vec<RealizationValue>,
    ) -> Result<Self> {
        let mut record = Self {
            experiment: cfg.experiment,
            kind: params.kind,
            sampler,
            n: params.n,
            p: params.p,
            beta,
            gamma,
            master_seed: cfg.master_seed,
            values,
            mean: 0.0,
            std: 0.0,
            std_error: 0.0,
            probe_variance: 0.0,
            rho: None,
            target: None,
            gap: None,
        };
        record.recompute();
        if !record.mean.is_finite() {
            return Err(Error::Contract(format!(
                "non-finite mean pressure at N = {}, p = {}, β = {beta}, Γ = {gamma}",
                params.n, params.p
            )));
        }
        Ok(record)
    }

    fn recompute(&mut self) {
        let v: Vec<f64> = self.values.iter().map(|r| r.value).collect();
        let (mean, std) = moments(&v);
        self.mean = mean;
        self.std = std;
        self.std_error = std / (v.len() as f64).sqrt();
        self.probe_variance =
            self.values.iter().map(|r| r.std_error * r.std_error).sum::<f64>() / v.len() as f64;
        self.rho = (self.beta > 0.0).then(|| {
            let disorder_var = (std * std - self.probe_variance).max(0.0);
            disorder_var.sqrt() * (self.n as f64).sqrt() / self.beta
        });
        if let Some(t) = self.target {
            self.gap = Some((mean - t).abs());
        }
    }

    fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self.gap = Some((self.mean - target).abs());
        self
    }

    /// Checks that the stored aggregates match the stored realizations.
    pub fn validate(&self) -> Result<()> {
        let mut fresh = self.clone();
        fresh.recompute();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        let opt_close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => close(a, b),
            (None, None) => true,
            _ => false,
        };
        if self.values.is_empty()
            || !close(fresh.mean, self.mean)
            || !close(fresh.std, self.std)
            || !close(fresh.std_error, self.std_error)
            || !opt_close(fresh.rho, self.rho)
            || !opt_close(fresh.gap, self.gap)
        {
            return Err(Error::Contract(format!(
                "record N = {}, p = {}, β = {}, Γ = {} does not match its realizations",
                self.n, self.p, self.beta, self.gamma
            )));
        }
        for (i, v) in self.values.iter().enumerate() {
            if v.realization != i || v.seed != realization_seed(self.master_seed, i) {
                return Err(Error::Contract(format!(
                    "realization {i} of N = {} has inconsistent provenance",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// Per-realization pressures over `(Γ, β)` for one `(N, p)`, as records in
/// `Γ`-major order.
fn quenched_records(
    cfg: &ExperimentConfig,
    params: &ModelParameters,
    sampler: Sampler,
) -> Result<Vec<SweepRecord>> {
    let betas = cfg.betas();
    let gammas = if cfg.gamma.is_empty() { vec![0.0] } else { cfg.gamma.clone() };
    let per_realization: Vec<Vec<Vec<PressureEstimate>>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| {
            let field = realization_field(params, sampler, cfg.master_seed, r)?;
            gammas
                .iter()
                .map(|&g| field_pressures(&field, &betas, g, cfg))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.context(format!("N = {}, p = {}", params.n, params.p)))?;
    let mut records = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        for (bi, &beta) in betas.iter().enumerate() {
            let values = per_realization
                .iter()
                .enumerate()
                .map(|(r, est)| {
                    let e = &est[gi][bi];
                    RealizationValue {
                        realization: r,
                        seed: realization_seed(cfg.master_seed, r),
                        value: e.value,
                        method: e.method,
                        std_error: e.std_error,
                    }
                })
                .collect();
            records.push(SweepRecord::new(cfg, params, sampler, beta, gamma, values)?);
        }
    }
    Ok(records)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let sampler = cfg.samplers()[0];
    let mut out = Vec::new();
    for params in cfg.model_points()? {
        out.extend(quenched_records(cfg, &params, sampler)?);
    }
    Ok(out)
}

/// Disorder fluctuations of `Φ` and the normalized spread `ρ_N` per grid point.
pub fn run_self_averaging(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    expect(cfg, Experiment::SelfAveraging)?;
    sweep(cfg)
}

/// Mean `Φ_N^{p(N)}` per grid point with its distance to the limiting
/// quantum REM pressure.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    expect(cfg, Experiment::Convergence)?;
    sweep(cfg)?
        .into_iter()
        .map(|r| Ok(r.clone().with_target(qrem_pressure(r.beta, r.gamma)?.qrem)))
        .collect()
}

fn expect(cfg: &ExperimentConfig, e: Experiment) -> Result<()> {
    if cfg.experiment != e {
        return Err(Error::Config(format!(
            "config describes a {} experiment, not {e}",
            cfg.experiment
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub n: usize,
    pub p: Order,
    pub kind: ModelKind,
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub master_seed: u64,
    pub realization: usize,
    pub seed: u64,
    pub phi: f64,
    pub lower: f64,
    pub upper: f64,
    /// `‖A‖` for the deviation set at `eps`.
    pub norm_a: f64,
    pub set_size: usize,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsAudit {
    pub records: Vec<BoundRecord>,
    pub violations: usize,
}

/// Lower and upper bounds around the exact pressure for one field, over
/// `Γ × β × ε` (in that nesting order).
pub fn audit_field(
    field: &DisorderField,
    betas: &[f64],
    gammas: &[f64],
    eps_list: &[f64],
    dense_cap: usize,
) -> Result<Vec<AuditPoint>> {
    let n = field.n();
    let opts = NormOptions {
        tol: AUDIT_NORM_TOL,
        max_iter: 20_000,
        seed: derive_seed(field.seed(), 0x6e6f726d),
    };
    let boundary: Vec<(f64, usize)> = eps_list
        .iter()
        .map(|&eps| {
            let set = deviation_set(field, eps)?;
            let norm = if set.is_empty() {
                0.0
            } else {
                operator_norm_estimate(&Boundary::new(&set), &opts)?.value
            };
            Ok((norm, set.len()))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &gamma in gammas {
        let spectrum = spectrum_exact(field, gamma, dense_cap)?;
        for &beta in betas {
            let phi = spectrum.pressure(beta)?.value;
            let classical = pressure_classical(field, beta)?.value;
            let lower = gibbs_lower_bound(field, beta, gamma)?;
            for (&eps, &(norm_a, set_size)) in eps_list.iter().zip(&boundary) {
                let upper = golden_thompson_upper_bound(classical, eps, norm_a, beta, gamma, n)?;
                out.push(AuditPoint {
                    beta,
                    gamma,
                    eps,
                    phi,
                    lower,
                    upper,
                    norm_a,
                    set_size,
                    violation: lower - AUDIT_SLACK > phi || phi > upper + AUDIT_SLACK,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditPoint {
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub phi: f64,
    pub lower: f64,
    pub upper: f64,
    pub norm_a: f64,
    pub set_size: usize,
    pub violation: bool,
}

/// Checks `lower ≤ Φ_exact ≤ upper` for every realization and grid point.
pub fn run_bounds_audit(cfg: &ExperimentConfig) -> Result<BoundsAudit> {
    expect(cfg, Experiment::BoundsAudit)?;
    cfg.validate()?;
    let sampler = cfg.samplers()[0];
    let betas = cfg.betas();
    let mut records = Vec::new();
    for params in cfg.model_points()? {
        let per: Vec<Vec<AuditPoint>> = (0..cfg.realizations)
            .into_par_iter()
            .map(|r| {
                let field = realization_field(&params, sampler, cfg.master_seed, r)?;
                audit_field(&field, &betas, &cfg.gamma, &cfg.eps, cfg.dense_cap)
            })
            .collect::<Result<_>>()
            .map_err(|e| e.context(format!("N = {}, p = {}", params.n, params.p)))?;
        for (r, points) in per.into_iter().enumerate() {
            records.extend(points.into_iter().map(|a| BoundRecord {
                n: params.n,
                p: params.p,
                kind: params.kind,
                beta: a.beta,
                gamma: a.gamma,
                eps: a.eps,
                master_seed: cfg.master_seed,
                realization: r,
                seed: realization_seed(cfg.master_seed, r),
                phi: a.phi,
                lower: a.lower,
                upper: a.upper,
                norm_a: a.norm_a,
                set_size: a.set_size,
                violation: a.violation,
            }));
        }
    }
    let violations = records.iter().filter(|r| r.violation).count();
    Ok(BoundsAudit {
        records,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub temperature: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rem: f64,
    pub par: f64,
    pub qrem: f64,
    pub phase: Phase,
    pub gamma_c_at_beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub temperature: f64,
    pub beta: f64,
    pub gamma_c: f64,
    /// The `β → 0` limit was used.
    pub is_limit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub temperature: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub rows: Vec<PhaseRow>,
    pub critical_curve: Vec<CriticalPoint>,
    /// The vertical freezing line `T = 1/β_c` from `Γ = 0` up to the
    /// paramagnetic boundary.
    pub freezing_line: Vec<CurvePoint>,
}

/// Limiting phase diagram over the `(T, Γ)` grid.
pub fn run_phase_diagram(cfg: &ExperimentConfig) -> Result<PhaseDiagram> {
    expect(cfg, Experiment::PhaseDiagram)?;
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut critical_curve = Vec::new();
    for beta in cfg.betas() {
        let temperature = 1.0 / beta;
        let gc = critical_field(beta)?;
        critical_curve.push(CriticalPoint {
            temperature,
            beta,
            gamma_c: gc.gamma,
            is_limit: gc.is_limit,
        });
        for &gamma in &cfg.gamma {
            let pt = qrem_pressure(beta, gamma)?;
            rows.push(PhaseRow {
                temperature,
                beta,
                gamma,
                rem: pt.rem,
                par: pt.par,
                qrem: pt.qrem,
                phase: pt.phase,
                gamma_c_at_beta: gc.gamma,
            });
        }
    }
    let bc = beta_c::<f64>();
    let freezing_line = vec![
        CurvePoint {
            temperature: 1.0 / bc,
            gamma: 0.0,
        },
        CurvePoint {
            temperature: 1.0 / bc,
            gamma: critical_field(bc)?.gamma,
        },
    ];
    Ok(PhaseDiagram {
        rows,
        critical_curve,
        freezing_line,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub master_seed: u64,
    pub realization: usize,
    pub seed: u64,
    pub report: ClusterReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub n: usize,
    pub p: Order,
    pub eps: f64,
    pub k_parameter: usize,
    pub realizations: usize,
    /// Fraction of realizations in which every component fits its ball.
    pub containment_fraction: f64,
    pub max_component_diameter: usize,
    pub max_enclosing_radius: usize,
    pub mean_set_size: f64,
    pub mean_components: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub records: Vec<ClusterRecord>,
    pub summaries: Vec<ClusterSummary>,
}

/// Cluster reports per realization and `ε`, with containment statistics.
pub fn run_clusters(cfg: &ExperimentConfig) -> Result<ClusterRun> {
    expect(cfg, Experiment::Clusters)?;
    cfg.validate()?;
    let sampler = cfg.samplers()[0];
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for params in cfg.model_points()? {
        let per: Vec<Vec<ClusterReport>> = (0..cfg.realizations)
            .into_par_iter()
            .map(|r| {
                let field = realization_field(&params, sampler, cfg.master_seed, r)?;
                cfg.eps
                    .iter()
                    .map(|&eps| cluster_report(&field, eps, cfg.k_parameter))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()
            .map_err(|e| e.context(format!("N = {}, p = {}", params.n, params.p)))?;
        for (ei, &eps) in cfg.eps.iter().enumerate() {
            let reports: Vec<&ClusterReport> = per.iter().map(|v| &v[ei]).collect();
            let m = reports.len() as f64;
            summaries.push(ClusterSummary {
                n: params.n,
                p: params.p,
                eps,
                k_parameter: cfg.k_parameter,
                realizations: reports.len(),
                containment_fraction: reports.iter().filter(|r| r.all_contained).count() as f64 / m,
                max_component_diameter: reports.iter().map(|r| r.max_component_diameter).max().unwrap_or(0),
                max_enclosing_radius: reports.iter().map(|r| r.contained_in_radius).max().unwrap_or(0),
                mean_set_size: reports.iter().map(|r| r.set_size as f64).sum::<f64>() / m,
                mean_components: reports.iter().map(|r| r.components.len() as f64).sum::<f64>() / m,
            });
        }
        for (r, reports) in per.into_iter().enumerate() {
            records.extend(reports.into_iter().map(|report| ClusterRecord {
                master_seed: cfg.master_seed,
                realization: r,
                seed: realization_seed(cfg.master_seed, r),
                report,
            }));
        }
    }
    Ok(ClusterRun { records, summaries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub n: usize,
    pub beta: f64,
    /// Quenched means per even `p`, in the order given, then the REM.
    pub records: Vec<SweepRecord>,
    pub rem: SweepRecord,
    /// Means non-decreasing in `p` within the tolerance.
    pub monotone: bool,
    /// Every mean at most the REM mean within the tolerance.
    pub below_rem: bool,
    pub sigmas: f64,
}

fn pooled(a: &SweepRecord, b: &SweepRecord) -> f64 {
    (a.std_error * a.std_error + b.std_error * b.std_error).sqrt()
}

/// Quenched classical pressures across even `p` compared with the REM.
pub fn run_monotonicity(cfg: &ExperimentConfig) -> Result<Vec<MonotonicityCheck>> {
    expect(cfg, Experiment::Monotonicity)?;
    cfg.validate()?;
    let sigmas = cfg.sigma_tolerance();
    let mut out = Vec::new();
    let mut sk_cfg = cfg.clone();
    sk_cfg.gamma = vec![0.0];
    for &n in &cfg.n {
        let mut by_p: Vec<Vec<SweepRecord>> = Vec::new();
        for &p in &cfg.p {
            let params = ModelParameters::new(n, p, 0.0, 0.0, ModelKind::Sk)?;
            by_p.push(quenched_records(&sk_cfg, &params, cfg.samplers()[0])?);
        }
        let rem_params = ModelParameters::rem(n)?;
        let rem = quenched_records(&sk_cfg, &rem_params, Sampler::IidRem)?;
        for (bi, &beta) in cfg.betas().iter().enumerate() {
            let records: Vec<SweepRecord> = by_p.iter().map(|v| v[bi].clone()).collect();
            let rem_rec = rem[bi].clone();
            let monotone = records
                .windows(2)
                .all(|w| w[1].mean >= w[0].mean - sigmas * pooled(&w[0], &w[1]));
            let below_rem = records
                .iter()
                .all(|r| r.mean <= rem_rec.mean + sigmas * pooled(r, &rem_rec));
            out.push(MonotonicityCheck {
                n,
                beta,
                records,
                rem: rem_rec,
                monotone,
                below_rem,
                sigmas,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRecord {
    pub kind: ModelKind,
    pub sampler: Sampler,
    pub n: usize,
    pub p: Order,
    pub realizations: usize,
    pub master_seed: u64,
    pub pairs: usize,
    pub max_abs_deviation: f64,
    /// Largest `|empirical − exact| / standard error` over all pairs.
    pub max_sigma: f64,
    pub worst_pair: (u32, u32),
    pub sigmas: f64,
    pub within_tolerance: bool,
}

/// Empirical covariance matrix of `M` sampled fields against the exact one.
///
/// Fields are centered, so the estimator is `M⁻¹ Σ_r U_r(a) U_r(b)`, whose
/// standard error is `√((C_aa C_bb + C_ab²)/M)` for Gaussian fields.
pub fn covariance_check(
    params: &ModelParameters,
    sampler: Sampler,
    realizations: usize,
    master_seed: u64,
    sigmas: f64,
) -> Result<CovarianceRecord> {
    let dim = params.dim();
    let fields: Vec<Vec<f64>> = (0..realizations)
        .into_par_iter()
        .map(|r| Ok(realization_field(params, sampler, master_seed, r)?.values().to_vec()))
        .collect::<Result<_>>()?;
    let mut gram = vec![0.0f64; dim * dim];
    for u in &fields {
        for a in 0..dim {
            let ua = u[a];
            let row = &mut gram[a * dim..(a + 1) * dim];
            for b in a..dim {
                row[b] += ua * u[b];
            }
        }
    }
    let m = realizations as f64;
    let n = params.n;
    let conf = |i: usize| SpinConfiguration::new(i as u32, n);
    let diag: Vec<f64> = (0..dim)
        .map(|a| exact_covariance(conf(a)?, conf(a)?, params))
        .collect::<Result<_>>()?;
    let (mut max_abs, mut max_sigma, mut worst) = (0.0f64, 0.0f64, (0, 0));
    for a in 0..dim {
        for b in a..dim {
            let exact = exact_covariance(conf(a)?, conf(b)?, params)?;
            let emp = gram[a * dim + b] / m;
            let se = ((diag[a] * diag[b] + exact * exact) / m).sqrt();
            let dev = (emp - exact).abs();
            max_abs = max_abs.max(dev);
            let z = if se > 0.0 { dev / se } else if dev > 0.0 { f64::INFINITY } else { 0.0 };
            if z > max_sigma {
                max_sigma = z;
                worst = (a as u32, b as u32);
            }
        }
    }
    Ok(CovarianceRecord {
        kind: params.kind,
        sampler,
        n,
        p: params.p,
        realizations,
        master_seed,
        pairs: dim * (dim + 1) / 2,
        max_abs_deviation: max_abs,
        max_sigma,
        worst_pair: worst,
        sigmas,
        within_tolerance: max_sigma <= sigmas,
    })
}

pub fn run_covariance(cfg: &ExperimentConfig) -> Result<Vec<CovarianceRecord>> {
    expect(cfg, Experiment::Covariance)?;
    cfg.validate()?;
    let mut out = Vec::new();
    for params in cfg.model_points()? {
        for sampler in cfg.samplers() {
            out.push(covariance_check(
                &params,
                sampler,
                cfg.realizations,
                cfg.master_seed,
                cfg.sigma_tolerance(),
            )?);
        }
    }
    Ok(out)
}

/// Result of any experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "data", rename_all = "snake_case")]
pub enum ExperimentOutput {
    Covariance(Vec<CovarianceRecord>),
    SelfAveraging(Vec<SweepRecord>),
    Convergence(Vec<SweepRecord>),
    PhaseDiagram(PhaseDiagram),
    BoundsAudit(BoundsAudit),
    Clusters(ClusterRun),
    Monotonicity(Vec<MonotonicityCheck>),
}

impl ExperimentOutput {
    /// A description of the failed contract, for the experiments that carry one.
    pub fn contract_violation(&self) -> Option<String> {
        match self {
            ExperimentOutput::BoundsAudit(a) if a.violations > 0 => {
                let first = a.records.iter().find(|r| r.violation)?;
                Some(format!(
                    "{} bound violations; first at N = {}, p = {}, β = {}, Γ = {}, ε = {}, realization {} (seed {})",
                    a.violations, first.n, first.p, first.beta, first.gamma, first.eps, first.realization, first.seed
                ))
            }
            ExperimentOutput::Covariance(recs) => recs.iter().find(|r| !r.within_tolerance).map(|r| {
                format!(
                    "{} covariance at N = {}, p = {} deviates by {:.2} standard errors",
                    r.sampler, r.n, r.p, r.max_sigma
                )
            }),
            ExperimentOutput::Monotonicity(checks) => {
                checks.iter().find(|c| !c.monotone || !c.below_rem).map(|c| {
                    format!("monotonicity in p fails at N = {}, β = {}", c.n, c.beta)
                })
            }
            _ => None,
        }
    }
}

/// Runs the experiment named in the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        Experiment::Covariance => ExperimentOutput::Covariance(run_covariance(cfg)?),
        Experiment::SelfAveraging => ExperimentOutput::SelfAveraging(run_self_averaging(cfg)?),
        Experiment::Convergence => ExperimentOutput::Convergence(run_convergence(cfg)?),
        Experiment::PhaseDiagram => ExperimentOutput::PhaseDiagram(run_phase_diagram(cfg)?),
        Experiment::BoundsAudit => ExperimentOutput::BoundsAudit(run_bounds_audit(cfg)?),
        Experiment::Clusters => ExperimentOutput::Clusters(run_clusters(cfg)?),
        Experiment::Monotonicity => ExperimentOutput::Monotonicity(run_monotonicity(cfg)?),
    })
}
