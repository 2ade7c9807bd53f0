//! Monte Carlo comparison of the estimators over a factorial grid of
//! simulation scenarios.
//!
//! Replication `r` of every scenario uses the dataset seed
//! `mix_seed(base_seed, r)`, so scenarios differing in one factor share
//! random numbers. Replications run in parallel; each one is a pure function
//! of its seed, and aggregation happens in replication order, so reports do
//! not depend on the thread count.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::FunctionalDataset;
use crate::metrics::evaluate;
use crate::mixcluster::{CovFamily, EmOptions, SelectionOptions};
use crate::pipeline::{baseline, run_pcme_me_from, Baseline, ClusteringResult, InitMode, PipelineOptions};
use crate::simgen::{
    generate_dataset, mix_seed, CovStructure, CovarianceSpec, ScenarioConfig, DEFAULT_GRID_SIZE,
    DEFAULT_REPLICATES,
};

/// Share of failed replications above which a scenario is marked failed.
pub const FAILURE_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "oracle")]
    Oracle,
    /// Corrected clustering started from the replicate-mean clustering.
    #[serde(rename = "pcme_avg", alias = "fmec_avg", alias = "fmec")]
    PcmeAvg,
    #[serde(rename = "average")]
    Average,
    /// Corrected clustering started from the first-replicate clustering.
    #[serde(rename = "pcme_naive", alias = "fmec_naive")]
    PcmeNaive,
    #[serde(rename = "naive")]
    Naive,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::Oracle,
        Estimator::PcmeAvg,
        Estimator::Average,
        Estimator::PcmeNaive,
        Estimator::Naive,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Estimator::Oracle => "oracle",
            Estimator::PcmeAvg => "pcme_avg",
            Estimator::Average => "average",
            Estimator::PcmeNaive => "pcme_naive",
            Estimator::Naive => "naive",
        }
    }

    /// Column heading in markdown reports.
    pub fn label(self) -> &'static str {
        match self {
            Estimator::Oracle => "Oracle",
            Estimator::PcmeAvg => "PCME-ME-avg",
            Estimator::Average => "Average",
            Estimator::PcmeNaive => "PCME-ME-naive",
            Estimator::Naive => "Naive",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oracle" => Ok(Estimator::Oracle),
            "pcme_avg" | "fmec_avg" | "fmec" => Ok(Estimator::PcmeAvg),
            "average" => Ok(Estimator::Average),
            "pcme_naive" | "fmec_naive" => Ok(Estimator::PcmeNaive),
            "naive" => Ok(Estimator::Naive),
            other => Err(Error::Invalid(format!("unknown estimator `{other}`"))),
        }
    }
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_restarts() -> usize {
    SelectionOptions::default().restarts
}
fn default_c_max() -> usize {
    9
}
fn default_families() -> Vec<CovFamily> {
    CovFamily::ALL.to_vec()
}
fn default_max_outer() -> usize {
    20
}
fn default_estimators() -> Vec<Estimator> {
    Estimator::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkGrid {
    pub n_values: Vec<usize>,
    pub sigma_x_values: Vec<f64>,
    pub sigma_u_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub structures: Vec<CovStructure>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(rename = "J", alias = "j", default = "default_replicates")]
    pub replicates: usize,
    #[serde(rename = "T", alias = "t", default = "default_grid_size")]
    pub grid_size: usize,
    /// Random EM starts per candidate model.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Largest number of mixture components considered.
    #[serde(default = "default_c_max")]
    pub c_max: usize,
    #[serde(default = "default_families")]
    pub families: Vec<CovFamily>,
    #[serde(default = "default_max_outer")]
    pub max_outer_iter: usize,
}

impl BenchmarkGrid {
    /// A one-scenario grid with every estimator and default settings.
    pub fn single(
        structure: CovStructure,
        n: usize,
        sigma_x: f64,
        sigma_u: f64,
        rho: f64,
        reps: usize,
    ) -> Self {
        Self {
            n_values: vec![n],
            sigma_x_values: vec![sigma_x],
            sigma_u_values: vec![sigma_u],
            rho_values: vec![rho],
            structures: vec![structure],
            estimators: default_estimators(),
            reps,
            base_seed: 0,
            replicates: DEFAULT_REPLICATES,
            grid_size: DEFAULT_GRID_SIZE,
            restarts: default_restarts(),
            c_max: default_c_max(),
            families: default_families(),
            max_outer_iter: default_max_outer(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::Invalid("reps must be at least 1".into()));
        }
        if self.estimators.is_empty() || self.families.is_empty() {
            return Err(Error::Invalid("estimators and families must be non-empty".into()));
        }
        if self.c_max < 1 || self.max_outer_iter < 1 {
            return Err(Error::Invalid("c_max and max_outer_iter must be at least 1".into()));
        }
        for s in self.scenarios() {
            s.config(self, 0)?;
        }
        Ok(())
    }

    /// Scenarios in report order: structure, n, sigma_X, rho, then sigma_U.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &structure in &self.structures {
            for &n in &self.n_values {
                for &sigma_x in &self.sigma_x_values {
                    for &rho in &self.rho_values {
                        for &sigma_u in &self.sigma_u_values {
                            out.push(Scenario {
                                structure,
                                n,
                                sigma_x,
                                sigma_u,
                                rho,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn pipeline_options(&self, seed: u64) -> PipelineOptions {
        PipelineOptions {
            init_mode: InitMode::Average,
            n_basis: None,
            selection: SelectionOptions {
                c_range: (1..=self.c_max).collect(),
                families: self.families.clone(),
                restarts: self.restarts,
                seed,
                em: EmOptions::default(),
            },
            max_outer_iter: self.max_outer_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub structure: CovStructure,
    pub n: usize,
    pub sigma_x: f64,
    pub sigma_u: f64,
    pub rho: f64,
}

impl Scenario {
    pub fn config(&self, grid: &BenchmarkGrid, seed: u64) -> Result<ScenarioConfig> {
        let cfg = ScenarioConfig {
            n: self.n,
            replicates: grid.replicates,
            grid_size: grid.grid_size,
            x_cov: CovarianceSpec::new(self.structure, self.sigma_x, self.rho)?,
            u_cov: CovarianceSpec::new(self.structure, self.sigma_u, self.rho)?,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Outcome of one estimator on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub structure: CovStructure,
    pub n: usize,
    pub sigma_x: f64,
    pub sigma_u: f64,
    pub rho: f64,
    pub estimator: Estimator,
    pub rep: usize,
    pub seed: u64,
    pub rand: Option<f64>,
    pub ari: Option<f64>,
    pub jaccard: Option<f64>,
    pub n_clusters: Option<usize>,
    pub outer_iterations: Option<usize>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

/// Aggregate over replications of one estimator in one scenario. Means and
/// standard deviations are empty when every replication failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub structure: CovStructure,
    pub n: usize,
    pub sigma_x: f64,
    pub sigma_u: f64,
    pub rho: f64,
    pub estimator: Estimator,
    pub rand: Option<f64>,
    pub ari: Option<f64>,
    pub jaccard: Option<f64>,
    pub asize: Option<f64>,
    pub rand_sd: Option<f64>,
    pub ari_sd: Option<f64>,
    pub jaccard_sd: Option<f64>,
    pub asize_sd: Option<f64>,
    /// Successful replications.
    pub reps: usize,
    pub failures: usize,
    pub scenario_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub raw: Vec<RawRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Invalid(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Score {
    rand: f64,
    ari: f64,
    jaccard: f64,
    n_clusters: usize,
    outer_iterations: Option<usize>,
    converged: Option<bool>,
}

fn score(data: &FunctionalDataset, result: &ClusteringResult, iterative: bool) -> Result<Score> {
    let truth = data
        .true_labels()
        .ok_or_else(|| Error::Invalid("simulated data lacks true labels".into()))?;
    let a = evaluate(truth, &result.members)?;
    Ok(Score {
        rand: a.rand,
        ari: a.ari,
        jaccard: a.jaccard,
        n_clusters: a.c_pred,
        outer_iterations: iterative.then_some(result.outer_iterations),
        converged: iterative.then_some(result.converged),
    })
}

/// All requested estimators on one dataset. The replicate-mean and
/// first-replicate clusterings double as the starting partitions of the
/// corresponding corrected estimators.
fn run_estimators(
    data: &FunctionalDataset,
    estimators: &[Estimator],
    opts: &PipelineOptions,
) -> Vec<Result<Score>> {
    let wants = |e: Estimator| estimators.contains(&e);
    let average = (wants(Estimator::Average) || wants(Estimator::PcmeAvg))
        .then(|| baseline(data, Baseline::Average, opts));
    let naive = (wants(Estimator::Naive) || wants(Estimator::PcmeNaive))
        .then(|| baseline(data, Baseline::Naive, opts));
    let corrected = |start: &Option<Result<ClusteringResult>>| -> Result<Score> {
        match start.as_ref().expect("computed when requested") {
            Ok(init) => score(data, &run_pcme_me_from(data, init, opts)?, true),
            Err(e) => Err(Error::Numerical(format!("initial clustering failed: {e}"))),
        }
    };
    let single = |r: &Option<Result<ClusteringResult>>| -> Result<Score> {
        match r.as_ref().expect("computed when requested") {
            Ok(res) => score(data, res, false),
            Err(e) => Err(Error::Numerical(e.to_string())),
        }
    };
    estimators
        .iter()
        .map(|&e| match e {
            Estimator::Oracle => {
                baseline(data, Baseline::Oracle, opts).and_then(|r| score(data, &r, false))
            }
            Estimator::Average => single(&average),
            Estimator::Naive => single(&naive),
            Estimator::PcmeAvg => corrected(&average),
            Estimator::PcmeNaive => corrected(&naive),
        })
        .collect()
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(sd))
}

/// Runs every scenario and replication and aggregates per estimator.
pub fn run_benchmark(grid: &BenchmarkGrid) -> Result<BenchmarkReport> {
    grid.validate()?;
    let scenarios = grid.scenarios();
    let jobs: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..grid.reps).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<Vec<RawRecord>> = jobs
        .par_iter()
        .map(|&(s, rep)| {
            let sc = scenarios[s];
            let seed = mix_seed(grid.base_seed, rep as u64);
            let opts = grid.pipeline_options(seed);
            let scores = match sc.config(grid, seed).and_then(|c| generate_dataset(&c)) {
                Ok(data) => run_estimators(&data, &grid.estimators, &opts),
                Err(e) => grid
                    .estimators
                    .iter()
                    .map(|_| Err(Error::Numerical(format!("data generation failed: {e}"))))
                    .collect(),
            };
            grid.estimators
                .iter()
                .zip(scores)
                .map(|(&estimator, res)| {
                    let (ok, error) = match res {
                        Ok(s) => (Some(s), None),
                        Err(e) => {
                            log::warn!("{} rep {rep} ({estimator}): {e}", sc.structure.name());
                            (None, Some(e.to_string()))
                        }
                    };
                    RawRecord {
                        structure: sc.structure,
                        n: sc.n,
                        sigma_x: sc.sigma_x,
                        sigma_u: sc.sigma_u,
                        rho: sc.rho,
                        estimator,
                        rep,
                        seed,
                        rand: ok.map(|s| s.rand),
                        ari: ok.map(|s| s.ari),
                        jaccard: ok.map(|s| s.jaccard),
                        n_clusters: ok.map(|s| s.n_clusters),
                        outer_iterations: ok.and_then(|s| s.outer_iterations),
                        converged: ok.and_then(|s| s.converged),
                        error,
                    }
                })
                .collect()
        })
        .collect();
    let raw: Vec<RawRecord> = outcomes.into_iter().flatten().collect();

    let n_est = grid.estimators.len();
    let mut rows = Vec::with_capacity(scenarios.len() * n_est);
    for (s, sc) in scenarios.iter().enumerate() {
        let block = &raw[s * grid.reps * n_est..(s + 1) * grid.reps * n_est];
        let mut scenario_rows: Vec<ReportRow> = grid
            .estimators
            .iter()
            .enumerate()
            .map(|(e, &estimator)| {
                let recs: Vec<&RawRecord> = block.iter().skip(e).step_by(n_est).collect();
                let ok: Vec<&RawRecord> = recs.iter().copied().filter(|r| r.error.is_none()).collect();
                let pick = |f: fn(&RawRecord) -> Option<f64>| -> Vec<f64> {
                    ok.iter().filter_map(|r| f(r)).collect()
                };
                let (rand, rand_sd) = mean_sd(&pick(|r| r.rand));
                let (ari, ari_sd) = mean_sd(&pick(|r| r.ari));
                let (jaccard, jaccard_sd) = mean_sd(&pick(|r| r.jaccard));
                let (asize, asize_sd) = mean_sd(&pick(|r| r.n_clusters.map(|c| c as f64)));
                ReportRow {
                    structure: sc.structure,
                    n: sc.n,
                    sigma_x: sc.sigma_x,
                    sigma_u: sc.sigma_u,
                    rho: sc.rho,
                    estimator,
                    rand,
                    ari,
                    jaccard,
                    asize,
                    rand_sd,
                    ari_sd,
                    jaccard_sd,
                    asize_sd,
                    reps: ok.len(),
                    failures: recs.len() - ok.len(),
                    scenario_failed: false,
                }
            })
            .collect();
        let failed = scenario_rows
            .iter()
            .any(|r| r.failures as f64 > FAILURE_THRESHOLD * grid.reps as f64);
        if failed {
            log::warn!("scenario {sc:?} exceeded the failure threshold");
        }
        for r in &mut scenario_rows {
            r.scenario_failed = failed;
        }
        rows.extend(scenario_rows);
    }
    Ok(BenchmarkReport { rows, raw })
}

const CSV_HEADER: [&str; 17] = [
    "structure",
    "n",
    "sigma_x",
    "sigma_u",
    "rho",
    "estimator",
    "rand",
    "ari",
    "jaccard",
    "asize",
    "rand_sd",
    "ari_sd",
    "jaccard_sd",
    "asize_sd",
    "reps",
    "failures",
    "scenario_failed",
];

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.digits$}"))
}

fn write_markdown<W: Write>(report: &BenchmarkReport, mut w: W) -> std::io::Result<()> {
    let mut blocks: Vec<(CovStructure, usize, f64, f64)> = Vec::new();
    for r in &report.rows {
        let key = (r.structure, r.n, r.sigma_x, r.rho);
        if !blocks.contains(&key) {
            blocks.push(key);
        }
    }
    for (b, &(structure, n, sx, rho)) in blocks.iter().enumerate() {
        let rows: Vec<&ReportRow> = report
            .rows
            .iter()
            .filter(|r| (r.structure, r.n, r.sigma_x, r.rho) == (structure, n, sx, rho))
            .collect();
        let mut estimators: Vec<Estimator> = Vec::new();
        let mut sigmas: Vec<f64> = Vec::new();
        for r in &rows {
            if !estimators.contains(&r.estimator) {
                estimators.push(r.estimator);
            }
            if !sigmas.contains(&r.sigma_u) {
                sigmas.push(r.sigma_u);
            }
        }
        if b > 0 {
            writeln!(w)?;
        }
        writeln!(w, "### {} (n = {n}, sigma_X = {sx}, rho = {rho})", structure.name())?;
        writeln!(w)?;
        let mut head = String::from("| sigma_U |");
        let mut rule = String::from("|---|");
        for index in ["Rand", "ARI", "Jaccard", "Asize"] {
            for e in &estimators {
                head.push_str(&format!(" {index} {} |", e.label()));
                rule.push_str("---|");
            }
        }
        writeln!(w, "{head}")?;
        writeln!(w, "{rule}")?;
        for &su in &sigmas {
            let mut line = format!("| {su} |");
            let cells: [fn(&ReportRow) -> Option<f64>; 4] =
                [|r| r.rand, |r| r.ari, |r| r.jaccard, |r| r.asize];
            for (k, cell) in cells.iter().enumerate() {
                for e in &estimators {
                    let row = rows.iter().find(|r| r.sigma_u == su && r.estimator == *e);
                    let digits = if k == 3 { 2 } else { 3 };
                    let text = row.map_or("".into(), |r| {
                        let v = fmt_opt(cell(r), digits);
                        if r.scenario_failed {
                            format!("{v}*")
                        } else {
                            v
                        }
                    });
                    line.push_str(&format!(" {text} |"));
                }
            }
            writeln!(w, "{line}")?;
        }
    }
    if report.rows.iter().any(|r| r.scenario_failed) {
        writeln!(w)?;
        writeln!(w, "\\* more than 10% of replications failed")?;
    }
    Ok(())
}

/// Writes the aggregated rows. Column order is fixed: scenario keys,
/// estimator, index means, standard deviations, replication counts.
pub fn emit_report<W: Write>(report: &BenchmarkReport, format: ReportFormat, mut writer: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
            w.write_record(CSV_HEADER)?;
            for r in &report.rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| Error::io("<report>", e))?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut writer, report)?;
            writeln!(writer).map_err(|e| Error::io("<report>", e))?;
        }
        ReportFormat::Markdown => write_markdown(report, writer).map_err(|e| Error::io("<report>", e))?,
    }
    Ok(())
}

/// Per-replication records in long format.
pub fn emit_raw<W: Write>(report: &BenchmarkReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in &report.raw {
        w.serialize(r)?;
    }
    if report.raw.is_empty() {
        w.write_record([
            "structure", "n", "sigma_x", "sigma_u", "rho", "estimator", "rep", "seed", "rand", "ari",
            "jaccard", "n_clusters", "outer_iterations", "converged", "error",
        ])?;
    }
    w.flush().map_err(|e| Error::io("<raw>", e))?;
    Ok(())
}

pub fn load_report_json(path: impl AsRef<Path>) -> Result<BenchmarkReport> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(estimators: Vec<Estimator>, reps: usize) -> BenchmarkGrid {
        let mut g = BenchmarkGrid::single(CovStructure::Independent, 30, 1.0, 0.5, 0.5, reps);
        g.estimators = estimators;
        g.restarts = 1;
        g.c_max = 4;
        g.grid_size = 20;
        g
    }

    #[test]
    fn one_row_per_scenario_and_estimator() {
        let report = run_benchmark(&tiny(vec![Estimator::Oracle], 1)).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.raw.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.reps + row.failures, 1);
    }

    #[test]
    fn csv_column_order_and_empty_report() {
        let mut buf = Vec::new();
        emit_report(&BenchmarkReport { rows: vec![], raw: vec![] }, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn serialized_fields_match_header() {
        let report = run_benchmark(&tiny(vec![Estimator::Average], 1)).unwrap();
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let value = lines.next().unwrap();
        assert!(value.starts_with("independent,30,1.0,0.5,0.5,average,"), "{value}");
        assert_eq!(value.split(',').count(), CSV_HEADER.len());
    }

    #[test]
    fn markdown_has_block_per_structure() {
        let mut g = tiny(vec![Estimator::Oracle, Estimator::Naive], 1);
        g.structures = vec![CovStructure::Independent, CovStructure::SquaredExponential];
        g.sigma_u_values = vec![0.5, 1.0];
        let report = run_benchmark(&g).unwrap();
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Markdown, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.matches("### ").count(), 2);
        assert!(text.contains("### independent (n = 30"));
        assert!(text.contains("### sqexp (n = 30"));
        assert!(text.contains("| Rand Oracle | Rand Naive |"));
        // one table row per sigma_U in each block
        assert_eq!(text.lines().filter(|l| l.starts_with("| 0.5 |")).count(), 2);
        assert_eq!(text.lines().filter(|l| l.starts_with("| 1 |")).count(), 2);
    }

    #[test]
    fn grid_json_defaults_and_aliases() {
        let g: BenchmarkGrid = serde_json::from_str(
            r#"{"n_values":[90],"sigma_x_values":[1.5],"sigma_u_values":[1],"rho_values":[0.5],
                "structures":["ar1"],"estimators":["fmec","naive"],"reps":3}"#,
        )
        .unwrap();
        assert_eq!(g.structures, vec![CovStructure::SquaredExponential]);
        assert_eq!(g.estimators, vec![Estimator::PcmeAvg, Estimator::Naive]);
        assert_eq!((g.replicates, g.grid_size, g.c_max), (5, 200, 9));
        assert!(g.validate().is_ok());
        let bad = BenchmarkGrid { reps: 0, ..g };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_sd(&[]), (None, None));
        assert_eq!(mean_sd(&[2.0]), (Some(2.0), Some(0.0)));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(m, Some(2.0));
        assert!((s.unwrap() - 1.0).abs() < 1e-15);
    }
}
