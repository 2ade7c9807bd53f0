use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fdaclust::bench::{emit_raw, emit_report, run_benchmark, BenchmarkGrid, ReportFormat};
use fdaclust::fdata::{load_long_csv, write_long_csv, CurvesExport};
use fdaclust::mecorrect::correct_curves;
use fdaclust::metrics::evaluate;
use fdaclust::mixcluster::{select_model, Candidate, CovFamily, GmmFitExport, SelectionOptions};
use fdaclust::pipeline::{baseline, run_pcme_me, Baseline, ClusteringResult, InitMode, PipelineOptions};
use fdaclust::simgen::{generate_dataset, CovStructure, ScenarioConfig};
use fdaclust::smooth::{coefficients, default_n_basis};
use fdaclust::Memberships;
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::failure::Failure;
use crate::{
    BaselineArg, BenchArgs, Cli, ClusterArgs, Command, CorrectArgs, EvaluateArgs, InitArg,
    MixtureArgs, RunArgs, SimulateArgs, SmoothArgs,
};

type CmdResult = Result<(), Failure>;

pub fn dispatch(cli: &Cli) -> CmdResult {
    let out = cli.global.out.as_deref();
    let seed = cli.global.seed;
    match &cli.command {
        Command::Simulate(a) => simulate(a, seed, out),
        Command::Correct(a) => correct(a, out),
        Command::Smooth(a) => smooth(a, out),
        Command::Cluster(a) => cluster(a, seed, out),
        Command::Run(a) => run(a, seed, out),
        Command::Evaluate(a) => evaluate_cmd(a, out),
        Command::Bench(a) => bench(a, seed, out),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_reader(open(path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> CmdResult {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(write_failure)
}

fn write_failure(e: std::io::Error) -> Failure {
    Failure::Data(format!("write failed: {e}"))
}

/// Memberships from JSON with a `labels` field, or the true labels of a
/// long-format dataset.
fn read_members(path: &PathBuf) -> Result<Memberships, Failure> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let data = load_long_csv(path)?;
        return data.true_labels().cloned().ok_or_else(|| {
            Failure::Data(format!("{} has no true_label column", path.display()))
        });
    }
    read_json(path)
}

fn simulate(a: &SimulateArgs, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let mut cfg = match &a.config {
        Some(path) => read_json::<ScenarioConfig>(path)?,
        None => {
            let structure: CovStructure = a.structure.parse()?;
            ScenarioConfig::new(a.n.unwrap_or_default(), structure, a.sigma_x, a.sigma_u, a.rho, 0)?
        }
    };
    if let Some(j) = a.replicates {
        cfg.replicates = j;
    }
    if let Some(t) = a.grid_size {
        cfg.grid_size = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    log::info!("simulating n = {}, J = {}, T = {}, seed = {}", cfg.n, cfg.replicates, cfg.grid_size, cfg.seed);
    let data = generate_dataset(&cfg)?;
    let mut w = sink(out)?;
    write_long_csv(&data, &mut w)?;
    w.flush().map_err(write_failure)?;
    if let Some(path) = &a.labels_out {
        write_json(data.true_labels().expect("simulated data is labelled"), Some(path))?;
    }
    Ok(())
}

fn correct(a: &CorrectArgs, out: Option<&Path>) -> CmdResult {
    let data = load_long_csv(&a.input)?;
    let members = read_members(&a.members)?;
    let curves = correct_curves(&data, &members)?;
    write_json(&CurvesExport::new(&curves, Some(&members)), out)
}

fn smooth(a: &SmoothArgs, out: Option<&Path>) -> CmdResult {
    let (curves, _) = read_json::<CurvesExport>(&a.input)?.into_parts()?;
    let k = a
        .n_basis
        .unwrap_or_else(|| default_n_basis(curves.n_subjects(), curves.grid.len()));
    let coef = coefficients(&curves, k)?;
    log::info!("K = {k}, shared lambda = {:e}", coef.lambda);
    let mut wtr = csv::Writer::from_writer(sink(out)?);
    wtr.write_record((1..=k).map(|i| format!("g{i}")))?;
    for row in coef.gamma.row_iter() {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush().map_err(write_failure)
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, Failure> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let width = rdr.headers()?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(Failure::Data(format!(
                "{}: row {} has {} fields, expected {width}",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        for field in record.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Failure::Data(format!("{}: row {} has non-numeric value {field:?}", path.display(), line + 2))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, width, &values))
}

fn selection_options(m: &MixtureArgs, seed: Option<u64>) -> Result<SelectionOptions, Failure> {
    let families = m
        .families
        .iter()
        .map(|f| f.trim().parse::<CovFamily>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SelectionOptions {
        c_range: (1..=m.cmax as usize).collect(),
        families,
        restarts: m.restarts,
        seed: seed.unwrap_or_default(),
        ..SelectionOptions::default()
    })
}

#[derive(Serialize)]
struct ClusterOutput {
    #[serde(flatten)]
    fit: GmmFitExport,
    bic_table: Vec<Candidate>,
}

fn cluster(a: &ClusterArgs, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let gamma = read_matrix(&a.input)?;
    let sel = select_model(&gamma, &selection_options(&a.mixture, seed)?)?;
    log::info!("selected {} with C = {}", sel.best.family.code(), sel.best.n_components());
    write_json(
        &ClusterOutput {
            fit: GmmFitExport::from(&sel.best),
            bic_table: sel.candidates,
        },
        out,
    )
}

#[derive(Serialize)]
struct RunOutput {
    method: String,
    labels: Vec<usize>,
    n_clusters: usize,
    outer_iterations: usize,
    converged: bool,
    history: Vec<usize>,
    n_basis: usize,
    lambda: f64,
    fit: GmmFitExport,
    bic_table: Vec<Candidate>,
}

impl RunOutput {
    fn new(method: &str, r: ClusteringResult) -> Self {
        Self {
            method: method.to_string(),
            labels: r.members.labels().to_vec(),
            n_clusters: r.members.n_clusters(),
            outer_iterations: r.outer_iterations,
            converged: r.converged,
            history: r.history,
            n_basis: r.coefficients.basis.n_basis(),
            lambda: r.coefficients.lambda,
            fit: GmmFitExport::from(&r.fit),
            bic_table: r.candidates,
        }
    }
}

fn run(a: &RunArgs, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let data = load_long_csv(&a.input)?;
    let init_mode = match a.init {
        InitArg::Naive => InitMode::Naive,
        InitArg::Average => InitMode::Average,
        InitArg::Given => InitMode::Given(read_members(a.members.as_ref().expect("enforced by clap"))?),
    };
    let opts = PipelineOptions {
        init_mode,
        n_basis: a.n_basis,
        selection: selection_options(&a.mixture, seed)?,
        max_outer_iter: a.max_iter,
    };
    let output = match a.baseline {
        Some(kind) => {
            let (kind, name) = match kind {
                BaselineArg::Oracle => (Baseline::Oracle, "oracle"),
                BaselineArg::Naive => (Baseline::Naive, "naive"),
                BaselineArg::Average => (Baseline::Average, "average"),
            };
            RunOutput::new(name, baseline(&data, kind, &opts)?)
        }
        None => {
            let name = match a.init {
                InitArg::Naive => "pcme_naive",
                InitArg::Average => "pcme_avg",
                InitArg::Given => "pcme_given",
            };
            let r = run_pcme_me(&data, &opts)?;
            if !r.converged {
                log::warn!("memberships still changing after {} iterations", r.outer_iterations);
            }
            RunOutput::new(name, r)
        }
    };
    write_json(&output, out)
}

fn evaluate_cmd(a: &EvaluateArgs, out: Option<&Path>) -> CmdResult {
    let truth = read_members(&a.truth)?;
    let pred = read_members(&a.pred)?;
    let agreement = evaluate(&truth, &pred)?;
    let mut w = sink(out)?;
    serde_json::to_writer(&mut w, &agreement)?;
    writeln!(w).and_then(|_| w.flush()).map_err(write_failure)
}

fn bench(a: &BenchArgs, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let format: ReportFormat = a.format.parse()?;
    let mut grid: BenchmarkGrid = read_json(&a.grid)?;
    if let Some(reps) = a.reps {
        grid.reps = reps;
    }
    if let Some(s) = seed {
        grid.base_seed = s;
    }
    grid.validate()?;
    log::info!("{} scenarios x {} reps", grid.scenarios().len(), grid.reps);
    let report = run_benchmark(&grid)?;
    let mut w = sink(out)?;
    emit_report(&report, format, &mut w)?;
    w.flush().map_err(write_failure)?;
    if let Some(path) = &a.raw {
        emit_raw(&report, create(path)?)?;
    }
    Ok(())
}
