//! Subcommand implementations. Each returns an [`Outcome`] whose `pass`
//! flag decides between exit codes 0 and 1.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use flight_core::analysis::{
    empirical_survival, fit_length_exponent, fit_time_windows, length_window, nested_windows, non_self_similar_bound,
    scaling_generations, theorem_report, time_windows, whitney_dimension, whitney_dimension_in, Bootstrap,
    DiagnosticPoint, DimensionEstimate, ExponentFit, GridSpec, NestedWindows, ReportInputs, SurvivalCurve, WindowFits,
};
use flight_core::flight::{flight_rng, run_campaign, simulate_path, FlightRecord, StepPolicy};
use flight_core::geometry::make_domain;
use flight_core::oracles::{
    cube_survival, interval_survival, interval_survival_eigen, interval_survival_reflection, IntervalSurvivalQuery,
    DEFAULT_TERMS,
};
use flight_core::whitney::{decompose, HypothesisReport, InvariantReport};
use flight_core::{AnyDomain, Domain, DomainSpec, Point, WhitneyDecomposition};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Provenance, SimConfig};
use crate::output::{self, RecordsHeader, FORMAT_VERSION};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn and(mut self, other: Outcome) -> Outcome {
        self.pass &= other.pass;
        self.files.extend(other.files);
        self
    }
}

static QUIET: AtomicBool = AtomicBool::new(false);

/// Silences progress and summary output.
pub fn set_quiet(quiet: bool) {
    QUIET.store(quiet, Ordering::Relaxed);
}

macro_rules! say {
    ($($arg:tt)*) => {
        if !QUIET.load(Ordering::Relaxed) {
            println!($($arg)*);
        }
    };
}

macro_rules! note {
    ($($arg:tt)*) => {
        if !QUIET.load(Ordering::Relaxed) {
            eprintln!($($arg)*);
        }
    };
}

macro_rules! with_domain {
    ($spec:expr, |$d:ident| $body:expr) => {
        match make_domain($spec)? {
            AnyDomain::Planar($d) => $body,
            AnyDomain::Spatial($d) => $body,
        }
    };
}

/// Raw (drop coarsest and finest) and scaling-window dimension estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimates {
    pub raw: Option<DimensionEstimate>,
    /// Generations `j` in the boundary scaling regime.
    pub scaling_range: (i32, i32),
    pub windowed: Option<DimensionEstimate>,
}

impl DimensionEstimates {
    fn new<const D: usize>(domain: &Domain<D>, counts: &BTreeMap<i32, usize>, r_omega: f64) -> Self {
        let scaling_range = scaling_generations(r_omega, D, domain.cutoff_scale());
        Self {
            raw: whitney_dimension(counts).ok(),
            scaling_range,
            windowed: whitney_dimension_in(counts, scaling_range).ok(),
        }
    }

    fn preferred(&self) -> Option<&DimensionEstimate> {
        self.windowed.as_ref().or(self.raw.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub domain: String,
    pub cubes: usize,
    pub r_omega: f64,
    pub invariants: InvariantReport,
    pub hypothesis: Option<HypothesisReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_error: Option<String>,
    pub dimension: DimensionEstimates,
}

fn decomposition_for<const D: usize>(
    domain: &Domain<D>,
    cfg: &SimConfig,
) -> Result<(WhitneyDecomposition<D>, f64), CliError> {
    let w = decompose(domain, cfg.min_generation())?;
    let r = w.r_omega()?;
    note!(
        "decomposed {}: {} cubes down to generation {}, R_omega {r:.6}",
        domain.name(),
        w.len(),
        cfg.min_generation()
    );
    Ok((w, r))
}

pub fn decompose_cmd(cfg: &SimConfig) -> Result<Outcome, CliError> {
    with_domain!(&cfg.domain, |d| decompose_in(&d, cfg))
}

fn decompose_in<const D: usize>(domain: &Domain<D>, cfg: &SimConfig) -> Result<Outcome, CliError> {
    let prov = cfg.provenance();
    let dir = &cfg.output_dir;
    output::ensure_dir(dir)?;
    let (w, r) = decomposition_for(domain, cfg)?;
    let counts = w.layer_counts();
    let mut table = String::from("generation,j,count\n");
    for (&k, &n) in counts.iter().rev() {
        table.push_str(&format!("{k},{},{n}\n", -k));
    }
    let (hypothesis, hypothesis_error) = match w.check_self_similarity_hypothesis() {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = DecompositionSummary {
        domain: domain.name().to_string(),
        cubes: w.len(),
        r_omega: r,
        invariants: w.verify_invariants(),
        hypothesis,
        hypothesis_error,
        dimension: DimensionEstimates::new(domain, &counts, r),
    };
    let files = vec![
        output::write_text(dir, output::CUBES, &output::csv_with_header("whitney-cubes", &prov, &w.to_csv()))?,
        output::write_text(dir, output::LAYER_COUNTS, &output::csv_with_header("layer-counts", &prov, &table))?,
        output::write_document(dir, output::HYPOTHESIS, "decomposition-summary", &prov, &summary)?,
    ];
    let clean = summary.invariants.is_clean();
    say!("cubes             {}", summary.cubes);
    say!("R_omega           {r:.6}");
    say!("invariants        {}", if clean { "clean" } else { "VIOLATED" });
    if let Some(h) = &summary.hypothesis {
        say!("layer scaling     fitted d_M {:.4}, spread {:.3}", h.fitted_dimension, h.spread);
    }
    if let Some(est) = summary.dimension.preferred() {
        say!("whitney dim       {:.4} over j in [{}, {}]", est.dimension, est.used.0, est.used.1);
    }
    Ok(Outcome { pass: clean, files })
}

pub fn simulate_cmd(cfg: &SimConfig) -> Result<Outcome, CliError> {
    with_domain!(&cfg.domain, |d| simulate_in(&d, cfg))
}

fn simulate_in<const D: usize>(domain: &Domain<D>, cfg: &SimConfig) -> Result<Outcome, CliError> {
    let dir = &cfg.output_dir;
    output::ensure_dir(dir)?;
    let (w, r) = decomposition_for(domain, cfg)?;
    let policy = cfg.policy.resolve(cfg.epsilon, r);
    policy.validate()?;
    let records = run_campaign(domain, &w, cfg.epsilon, policy, cfg.n_flights, cfg.master_seed, cfg.workers)?;
    let censored = records.iter().filter(|r| r.censored).count();
    let header = RecordsHeader {
        format: "flight-records".into(),
        version: FORMAT_VERSION,
        config: cfg.provenance(),
        policy,
        r_omega: r,
    };
    let path = output::write_records(dir, &header, &records)?;
    say!("flights           {} ({censored} censored)", records.len());
    say!("records           {}", path.display());
    Ok(Outcome { pass: true, files: vec![path] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub r_omega: f64,
    pub policy: StepPolicy,
    pub time_windows: NestedWindows,
    pub time_fits: WindowFits,
    pub length_fit: ExponentFit,
    pub dimension: DimensionEstimates,
}

/// Configuration for analysing `records`: the data-describing fields come
/// from the records header, fit settings and targets from `invocation`
/// when given.
pub fn analysis_config(header: &RecordsHeader, invocation: Option<&SimConfig>) -> SimConfig {
    let mut cfg = SimConfig::from_provenance(header.config.clone(), 1, PathBuf::from("."));
    if let Some(inv) = invocation {
        cfg.fit = inv.fit.clone();
        cfg.target_dimension = inv.target_dimension;
        cfg.tolerance = inv.tolerance;
        cfg.workers = inv.workers;
        cfg.output_dir = inv.output_dir.clone();
    }
    cfg
}

pub fn analyze_cmd(invocation: Option<&SimConfig>, records: &Path) -> Result<Outcome, CliError> {
    let header = output::read_records_header(records)?;
    let mut cfg = analysis_config(&header, invocation);
    if invocation.is_none() {
        cfg.output_dir = records.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    }
    cfg.validate()?;
    let spec: DomainSpec = cfg.domain.clone();
    with_domain!(&spec, |d| analyze_in(&d, &cfg, records))
}

fn analyze_in<const D: usize>(domain: &Domain<D>, cfg: &SimConfig, path: &Path) -> Result<Outcome, CliError>
where
    FlightRecord<D>: DeserializeOwned,
{
    let (header, records) = output::read_records::<D>(path)?;
    if records.len() as u64 != header.config.n_flights {
        return Err(CliError::Format(format!(
            "{}: header announces {} flights, found {}",
            path.display(),
            header.config.n_flights,
            records.len()
        )));
    }
    let prov = cfg.provenance();
    let dir = &cfg.output_dir;
    output::ensure_dir(dir)?;
    let eps = cfg.epsilon;
    let policy = header.policy;
    let (w, r) = decomposition_for(domain, cfg)?;
    let curve = empirical_survival(&records, eps, policy.t_max, &GridSpec::default_for(eps, policy.t_max))?;
    let bootstrap = Bootstrap { resamples: cfg.fit.bootstrap_resamples, seed: cfg.bootstrap_seed() };
    let windows = match cfg.fit.time_window {
        Some(middle) => nested_windows(middle, r * r / 4.0),
        None => time_windows(eps, r)?,
    };
    let time_fits = fit_time_windows(&curve, &windows, &bootstrap)?;
    let length_fit = fit_length_exponent(&records, cfg.fit.length_window.unwrap_or(length_window(eps, r)), &bootstrap)?;
    let dimension = DimensionEstimates::new(domain, &w.layer_counts(), r);
    let estimate = dimension.preferred().ok_or_else(|| {
        CliError::Core(flight_core::Error::InsufficientData(
            "too few Whitney generations for a dimension estimate; lower min_generation".into(),
        ))
    })?;
    let hypothesis = w.check_self_similarity_hypothesis().ok();
    let diagnostic = diagnostic(&w, &curve, hypothesis.as_ref())?;
    let report = theorem_report(&ReportInputs {
        domain_name: domain.name(),
        dimension: D,
        epsilon: eps,
        r_omega: r,
        target_boundary_dimension: cfg.target_dimension.or(domain.known_boundary_dimension()),
        curve: &curve,
        time_fits: &time_fits,
        length_fit: &length_fit,
        dimension_estimate: estimate,
        hypothesis: hypothesis.as_ref(),
        diagnostic,
        tolerance: cfg.tolerance,
    });
    let fits = Fits { r_omega: r, policy, time_windows: windows, time_fits, length_fit, dimension };
    let text = report.to_string();
    let files = vec![
        output::write_text(dir, output::SURVIVAL, &output::csv_with_header("survival", &prov, &curve.to_csv()))?,
        output::write_document(dir, output::FITS, "exponent-fits", &prov, &fits)?,
        output::write_document(dir, output::REPORT_JSON, "verification-report", &prov, &report)?,
        output::write_text(dir, output::REPORT_TXT, &report_text(&prov, &text))?,
    ];
    say!("{}", text.trim_end());
    Ok(Outcome { pass: report.pass, files })
}

/// The layer-count bound, reported only when the self-similar layer law
/// fails or cannot be checked.
pub fn diagnostic<const D: usize>(
    w: &WhitneyDecomposition<D>,
    curve: &SurvivalCurve,
    hypothesis: Option<&HypothesisReport>,
) -> Result<Vec<DiagnosticPoint>, CliError> {
    match hypothesis {
        Some(h) if h.holds => Ok(Vec::new()),
        _ => Ok(non_self_similar_bound(w, curve)?),
    }
}

fn report_text(prov: &Provenance, body: &str) -> String {
    let config = serde_json::to_string(prov).expect("provenance serializes");
    format!("# format: verification-report/{FORMAT_VERSION}\n# config: {config}\n{body}")
}

pub fn verify_cmd(cfg: &SimConfig) -> Result<Outcome, CliError> {
    let oracle =
        oracle_cmd(&OracleOptions { paths: DEFAULT_ORACLE_PATHS, seed: cfg.master_seed, query: None }, Some(cfg))?;
    let decomposition = decompose_cmd(cfg)?;
    let simulation = simulate_cmd(cfg)?;
    let analysis = analyze_cmd(Some(cfg), &cfg.output_dir.join(output::FLIGHTS))?;
    let outcome = oracle.and(decomposition).and(simulation).and(analysis);
    say!("verify            {}", if outcome.pass { "PASS" } else { "FAIL" });
    Ok(outcome)
}

pub const DEFAULT_ORACLE_PATHS: usize = 20_000;
pub const SERIES_TOLERANCE: f64 = 1e-10;
/// Binomial standard errors allowed between simulated and exact survival.
pub const SAMPLER_Z_LIMIT: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub paths: usize,
    pub seed: u64,
    /// `(x, a, t)` evaluated on its own.
    pub query: Option<(f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerCheck {
    pub t: f64,
    pub exact: f64,
    pub empirical: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Largest reflection/eigenfunction disagreement on the 9×12 grid.
    pub max_series_gap: f64,
    pub series_pass: bool,
    pub paths: usize,
    pub sampler: Vec<SamplerCheck>,
    pub sampler_pass: bool,
    pub pass: bool,
}

/// Dual-series agreement for the interval, then the time-stepped sampler
/// against the exact unit-square law from its center.
pub fn oracle_report(paths: usize, seed: u64) -> Result<OracleReport, CliError> {
    let mut gap = 0f64;
    for i in 1..=9 {
        let x = i as f64 / 10.0;
        for j in 0..12 {
            let t = 10f64.powf(-3.0 + 4.0 * j as f64 / 11.0);
            let q = IntervalSurvivalQuery::new(x, 1.0, t)?;
            gap = gap.max((interval_survival_reflection(q, 60)? - interval_survival_eigen(q, 200)?).abs());
        }
    }
    let square = match make_domain(&DomainSpec::Square { side: 1.0, center: Some(vec![0.5, 0.5]) })? {
        AnyDomain::Planar(d) => d,
        AnyDomain::Spatial(_) => unreachable!("square is planar"),
    };
    let policy = StepPolicy { c_step: 0.1, dt_max: 0.0025, delta_abs: 1e-4, t_max: 4.0, bridge_correction: true };
    let start = Point([0.5, 0.5]);
    let taus: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(&square, &start, &policy, &mut flight_rng(seed, i)).map(|o| o.tau))
        .collect::<Result<_, _>>()?;
    let sampler = [0.05, 0.1, 0.2, 0.5]
        .iter()
        .map(|&t| {
            let exact = cube_survival(1.0, 2, t, DEFAULT_TERMS)?;
            let empirical = taus.iter().filter(|&&x| x > t).count() as f64 / paths as f64;
            let z = (empirical - exact) / (exact * (1.0 - exact) / paths as f64).sqrt();
            Ok(SamplerCheck { t, exact, empirical, z })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let series_pass = gap <= SERIES_TOLERANCE;
    let sampler_pass = sampler.iter().all(|c| c.z.abs() <= SAMPLER_Z_LIMIT);
    Ok(OracleReport {
        max_series_gap: gap,
        series_pass,
        paths,
        sampler,
        sampler_pass,
        pass: series_pass && sampler_pass,
    })
}

pub fn oracle_cmd(opts: &OracleOptions, cfg: Option<&SimConfig>) -> Result<Outcome, CliError> {
    if let Some((x, a, t)) = opts.query {
        let q = IntervalSurvivalQuery::new(x, a, t)?;
        say!("interval x={x} a={a} t={t}");
        say!("  reflection      {:.15e}", interval_survival_reflection(q, 60)?);
        say!("  eigen           {:.15e}", interval_survival_eigen(q, 200)?);
        say!("  default         {:.15e}", interval_survival(q, DEFAULT_TERMS)?);
    }
    if opts.paths == 0 {
        return Err(CliError::Usage("--paths must be at least 1".into()));
    }
    let report = oracle_report(opts.paths, opts.seed)?;
    let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
    say!(
        "dual series       {}  max gap {:.3e} <= {SERIES_TOLERANCE:e}",
        verdict(report.series_pass),
        report.max_series_gap
    );
    for c in &report.sampler {
        say!("cube law t={:<5}  exact {:.5}  empirical {:.5}  z {:+.2}", c.t, c.exact, c.empirical, c.z);
    }
    say!("sampler           {}  {} paths, |z| <= {SAMPLER_Z_LIMIT}", verdict(report.sampler_pass), report.paths);
    let mut files = Vec::new();
    if let Some(cfg) = cfg {
        output::ensure_dir(&cfg.output_dir)?;
        files.push(output::write_document(
            &cfg.output_dir,
            output::ORACLE,
            "oracle-self-test",
            &cfg.provenance(),
            &report,
        )?);
    }
    Ok(Outcome { pass: report.pass, files })
}
