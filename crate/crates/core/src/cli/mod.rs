//! Command-line front end. Progress goes to stderr; results only to files.
//!
//! Exit codes: 0 success, 1 usage or data error, 2 numerical
//! non-convergence (`solve` only; results are still written).

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

pub use config::{parse_resolution, split_list, FlatConfig};

use crate::dataset::{self, BcTemplate, GeneratorConfig, SamplingConfig};
use crate::error::{Error, Result};
use crate::fea::{DensityField, GridDomain, LoadCase, MaterialModel, PointForce};
use crate::metrics::{self, EvalOptions, DEFAULT_LAMBDA};
use crate::persistence::{betti_at_threshold, compute_diagram_raw};
use crate::simp::{run_simp, SimpConfig};
use crate::tensor::Tensor;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "simptopo",
    version,
    about = "SIMP ground truths and topology-aware evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one structure described by a config file.
    Solve(SolveArgs),
    /// Generate a randomized dataset of inputs and SIMP ground truths.
    Generate(GenerateArgs),
    /// Score predictions against a dataset.
    Evaluate(EvaluateArgs),
    /// Persistence diagram and Betti profile of a field.
    Persistence(PersistenceArgs),
}

#[derive(Debug, Args)]
pub struct SimpOverrides {
    #[arg(long)]
    pub volfrac: Option<f64>,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub penal: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub change_tol: Option<f64>,
    #[arg(long)]
    pub move_limit: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub nelx: Option<usize>,
    #[arg(long)]
    pub nely: Option<usize>,
    #[command(flatten)]
    pub simp: SimpOverrides,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of generated cases (before augmentation).
    #[arg(long)]
    pub n: Option<usize>,
    /// Resolution as rows x columns, e.g. 40x80.
    #[arg(long)]
    pub res: Option<String>,
    /// Comma-separated BC template ids.
    #[arg(long)]
    pub templates: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Point loads per case.
    #[arg(long)]
    pub forces: Option<usize>,
    /// Add the x, y and xy mirror images of every case.
    #[arg(long)]
    pub augment: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub simp: SimpOverrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of `sample_NNNNNN.tns` prediction files.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Round predictions to 0/1 before MSE and compliance.
    #[arg(long = "round")]
    pub round_before_metrics: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PersistenceArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => ExitCode::from(run(cli)),
        Err(e) => {
            // clap reserves 2 for usage errors; here 2 means non-convergence.
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK })
        }
    }
}

pub fn run(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Generate(a) => cmd_generate(&a).map(|_| EXIT_OK),
        Command::Evaluate(a) => cmd_evaluate(&a).map(|_| EXIT_OK),
        Command::Persistence(a) => cmd_persistence(&a).map(|_| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::param(format!("cannot encode {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn resolve_simp(cfg: &mut FlatConfig, o: &SimpOverrides) -> Result<SimpConfig> {
    let d = SimpConfig::default();
    let simp = SimpConfig {
        volfrac: o.volfrac.or(cfg.f64("volfrac")?).unwrap_or(d.volfrac),
        rmin: o.rmin.or(cfg.f64("rmin")?).unwrap_or(d.rmin),
        penal: o.penal.or(cfg.f64("penal")?).unwrap_or(d.penal),
        move_limit: o
            .move_limit
            .or(cfg.f64("move_limit")?)
            .unwrap_or(d.move_limit),
        change_tol: o
            .change_tol
            .or(cfg.f64("change_tol")?)
            .unwrap_or(d.change_tol),
        max_iters: o
            .max_iters
            .or(cfg.usize("max_iters")?)
            .unwrap_or(d.max_iters),
        oc_tol: cfg.f64("oc_tol")?.unwrap_or(d.oc_tol),
    };
    simp.validate()?;
    Ok(simp)
}

fn resolve_material(cfg: &mut FlatConfig, penal: f64) -> Result<MaterialModel> {
    let d = MaterialModel::default();
    let mat = MaterialModel {
        e0: cfg.f64("e0")?.unwrap_or(d.e0),
        emin: cfg.f64("emin")?.unwrap_or(d.emin),
        nu: cfg.f64("nu")?.unwrap_or(d.nu),
        penal,
    };
    mat.validate()?;
    Ok(mat)
}

/// Resolved `solve` inputs, echoed into `run.json`.
#[derive(Debug, Serialize)]
struct SolveRun {
    command: &'static str,
    config_path: String,
    nelx: usize,
    nely: usize,
    material: MaterialModel,
    simp: SimpConfig,
    load_case: LoadCase,
}

fn resolve_solve(args: &SolveArgs) -> Result<SolveRun> {
    let mut cfg = FlatConfig::load(&args.config)?;
    let nelx = args
        .nelx
        .or(cfg.usize("nelx")?)
        .ok_or_else(|| Error::param("config field `nelx`: missing"))?;
    let nely = args
        .nely
        .or(cfg.usize("nely")?)
        .ok_or_else(|| Error::param("config field `nely`: missing"))?;
    let grid = GridDomain::new(nelx, nely)?;
    let simp = resolve_simp(&mut cfg, &args.simp)?;
    let material = resolve_material(&mut cfg, simp.penal)?;
    let bc = cfg.string("bc")?;
    let explicit = cfg.usize_list("fixed_dofs")?;
    let (fixed_dofs, bc_id) = match (explicit, bc) {
        (Some(dofs), bc) => (dofs, bc.unwrap_or_else(|| "custom".into())),
        (None, Some(id)) => {
            let t = BcTemplate::builtin(&id)
                .map_err(|e| Error::param(format!("config field `bc`: {e}")))?;
            (t.fixed_dofs(&grid)?, id)
        }
        (None, None) => {
            return Err(Error::param(
                "config field `bc`: missing (or give `fixed_dofs`)",
            ))
        }
    };
    let rows = cfg
        .rows("loads", 4)?
        .ok_or_else(|| Error::param("config field `loads`: missing"))?;
    let mut forces = Vec::with_capacity(rows.len());
    for r in rows {
        let (col, row) = (r[0], r[1]);
        let valid = |v: f64, max: usize| v >= 0.0 && v.fract() == 0.0 && v <= max as f64;
        if !valid(col, nelx) || !valid(row, nely) {
            return Err(Error::param(format!(
                "config field `loads`: node ({col}, {row}) is not a grid node of a {nely}x{nelx} domain"
            )));
        }
        forces.push(PointForce {
            node: grid.node_index(col as usize, row as usize),
            fx: r[2],
            fy: r[3],
        });
    }
    cfg.finish()?;
    let load_case = LoadCase::new(forces, fixed_dofs, bc_id);
    load_case
        .validate(&grid)
        .map_err(|e| Error::param(format!("config field `loads`/`bc`: {e}")))?;
    Ok(SolveRun {
        command: "solve",
        config_path: args.config.display().to_string(),
        nelx,
        nely,
        material,
        simp,
        load_case,
    })
}

/// Writes `density.tns`, `history.csv` and `run.json`; returns the exit code.
pub fn cmd_solve(args: &SolveArgs) -> Result<u8> {
    let run = resolve_solve(args)?;
    let grid = GridDomain::new(run.nelx, run.nely)?;
    create_dir(&args.out)?;
    eprintln!(
        "solve: {}x{} elements, bc {}",
        run.nely, run.nelx, run.load_case.bc_template_id
    );
    let result = run_simp(&grid, &run.material, &run.load_case, &run.simp)?;

    Tensor::from_field(&result.density).write(&args.out.join("density.tns"))?;
    let mut history = String::from("iteration,compliance,volume,change\n");
    for i in 0..result.iterations {
        history.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            result.compliance_history[i],
            result.volume_history[i],
            result.change_history[i]
        ));
    }
    write_text(&args.out.join("history.csv"), &history)?;
    write_json(
        &args.out.join("run.json"),
        &json!({
            "config": run,
            "result": {
                "iterations": result.iterations,
                "converged": result.converged,
                "final_compliance": result.final_compliance(),
            }
        }),
    )?;
    eprintln!(
        "solve: {} iterations, compliance {:.6}, {}",
        result.iterations,
        result.final_compliance(),
        if result.converged {
            "converged"
        } else {
            "NOT converged"
        }
    );
    Ok(if result.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

#[derive(Debug, Serialize)]
struct GenerateRun {
    command: &'static str,
    config_path: Option<String>,
    n: usize,
    jobs: usize,
    generator: GeneratorConfig,
}

fn resolve_generate(args: &GenerateArgs) -> Result<GenerateRun> {
    let mut cfg = match &args.config {
        Some(p) => FlatConfig::load(p)?,
        None => FlatConfig::empty(),
    };
    let d = SamplingConfig::default();
    let n = args.n.or(cfg.usize("n")?).unwrap_or(100);
    let (nely, nelx) = match args.res.clone().or(cfg.string("res")?) {
        Some(r) => parse_resolution(&r)?,
        None => (d.nely, d.nelx),
    };
    let ids = match &args.templates {
        Some(t) => split_list(t),
        None => cfg
            .string_list("templates")?
            .unwrap_or_else(|| vec!["a".into(), "b".into()]),
    };
    let templates_file = cfg.string("templates_file")?;
    let simp = resolve_simp(&mut cfg, &args.simp)?;
    let material = resolve_material(&mut cfg, simp.penal)?;
    let sampling = SamplingConfig {
        force_range: [
            cfg.f64("force_min")?.unwrap_or(d.force_range[0]),
            cfg.f64("force_max")?.unwrap_or(d.force_range[1]),
        ],
        n_forces: args.forces.or(cfg.usize("n_forces")?).unwrap_or(d.n_forces),
        volfrac: simp.volfrac,
        rmin: simp.rmin,
        seed: args.seed.or(cfg.u64("seed")?).unwrap_or(d.seed),
        nelx,
        nely,
    };
    let augment = args.augment || cfg.bool("augment")?.unwrap_or(false);
    let jobs = args.jobs.or(cfg.usize("jobs")?).unwrap_or(1).max(1);
    cfg.finish()?;

    let custom: Vec<BcTemplate> = match templates_file {
        Some(path) => {
            #[derive(serde::Deserialize)]
            struct File {
                templates: Vec<BcTemplate>,
            }
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            toml::from_str::<File>(&text)
                .map_err(|e| Error::param(format!("templates file {path}: {}", e.message())))?
                .templates
        }
        None => Vec::new(),
    };
    let templates = ids
        .iter()
        .map(|id| match custom.iter().find(|t| &t.id == id) {
            Some(t) => Ok(t.clone()),
            None => BcTemplate::builtin(id),
        })
        .collect::<Result<Vec<_>>>()?;
    let generator = GeneratorConfig {
        sampling,
        templates,
        simp,
        material,
        augment,
    };
    generator.validate()?;
    Ok(GenerateRun {
        command: "generate",
        config_path: args.config.as_ref().map(|p| p.display().to_string()),
        n,
        jobs,
        generator,
    })
}

/// Generates and writes a dataset; returns the number of stored samples.
pub fn cmd_generate(args: &GenerateArgs) -> Result<usize> {
    let run = resolve_generate(args)?;
    let g = &run.generator;
    eprintln!(
        "generate: {} cases at {}x{}, templates {}, seed {}{}",
        run.n,
        g.sampling.nely,
        g.sampling.nelx,
        g.templates
            .iter()
            .map(|t| t.id.as_str())
            .collect::<Vec<_>>()
            .join(","),
        g.sampling.seed,
        if g.augment { ", augmented" } else { "" }
    );
    let samples = dataset::generate(g, run.n, run.jobs)?;
    let unconverged = samples.iter().filter(|s| !s.meta.converged).count();
    dataset::write_dataset(
        &args.out,
        g.sampling.nelx,
        g.sampling.nely,
        Some(g),
        &samples,
    )?;
    write_json(&args.out.join("run.json"), &run)?;
    eprintln!(
        "generate: wrote {} samples ({unconverged} not converged)",
        samples.len()
    );
    Ok(samples.len())
}

pub fn prediction_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("sample_{index:06}.tns"))
}

/// Loads `sample_NNNNNN.tns` for every dataset index, rejecting missing,
/// extra or mis-shaped files by sample index.
pub fn read_predictions(
    dir: &Path,
    count: usize,
    nelx: usize,
    nely: usize,
) -> Result<Vec<DensityField>> {
    let listed = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut extra: Vec<usize> = Vec::new();
    for entry in listed {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(idx) = name
            .strip_prefix("sample_")
            .and_then(|s| s.strip_suffix(".tns"))
        {
            match idx.parse::<usize>() {
                Ok(i) if i >= count => extra.push(i),
                Ok(_) => {}
                Err(_) => {
                    return Err(Error::format(
                        None,
                        format!("unexpected prediction file {name}"),
                    ))
                }
            }
        }
    }
    if let Some(&first) = extra.iter().min() {
        return Err(Error::format(
            Some(first),
            format!("prediction exists but the dataset has only {count} samples"),
        ));
    }
    (0..count)
        .map(|i| {
            let path = prediction_path(dir, i);
            if !path.exists() {
                return Err(Error::format(
                    Some(i),
                    format!("missing prediction {}", path.display()),
                ));
            }
            let t = Tensor::read(&path).map_err(|e| Error::format(Some(i), e.to_string()))?;
            if t.channels != 1 || t.nelx != nelx || t.nely != nely {
                return Err(Error::format(
                    Some(i),
                    format!(
                        "prediction is {}x{}x{}, expected 1x{nely}x{nelx}",
                        t.channels, t.nely, t.nelx
                    ),
                ));
            }
            t.field(0)
                .map_err(|e| Error::format(Some(i), e.to_string()))
        })
        .collect()
}

/// Writes `per_sample.csv`, `report.json`, `report.csv` and `run.json`.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<metrics::MetricsReport> {
    let opts = EvalOptions {
        lambda: args.lambda,
        round_before_metrics: args.round_before_metrics,
        ..EvalOptions::default()
    };
    let (samples, manifest) = dataset::read_dataset(&args.dataset)?;
    let material = manifest
        .generator
        .as_ref()
        .map(|g| g.material)
        .unwrap_or_default();
    let res = manifest.resolution;
    let preds = read_predictions(&args.pred, samples.len(), res.nelx, res.nely)?;
    eprintln!(
        "evaluate: {} samples, lambda {}",
        samples.len(),
        opts.lambda
    );
    let jobs = args.jobs.unwrap_or(1).max(1);
    let mut report = metrics::evaluate_batch(&preds, &samples, &material, &opts, jobs)?;
    report.aggregate.resolution = format!("{}x{}", res.nely, res.nelx);
    create_dir(&args.out)?;
    write_text(&args.out.join("per_sample.csv"), &report.samples_csv())?;
    write_text(&args.out.join("report.csv"), &report.summary_csv())?;
    write_json(&args.out.join("report.json"), &report.aggregate)?;
    write_json(
        &args.out.join("run.json"),
        &json!({
            "command": "evaluate",
            "pred": args.pred.display().to_string(),
            "dataset": args.dataset.display().to_string(),
            "options": opts,
            "material": material,
            "jobs": jobs,
        }),
    )?;
    let a = &report.aggregate;
    eprintln!(
        "evaluate: mse {:.4} ba {:.4} compliance error {:.4} (std {:.4}, {} unstable)",
        a.mse, a.binary_accuracy, a.compliance_error, a.compliance_error_std, a.n_unstable
    );
    Ok(report)
}

pub const BETTI_THRESHOLDS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Writes `diagram.csv`, `betti.csv` and `run.json`.
pub fn cmd_persistence(args: &PersistenceArgs) -> Result<()> {
    let t = Tensor::read(&args.field)?;
    if args.channel >= t.channels {
        return Err(Error::param(format!(
            "channel {} requested from a {}-channel tensor",
            args.channel, t.channels
        )));
    }
    let values: Vec<f64> = t
        .channel(args.channel)
        .iter()
        .map(|&v| f64::from(v))
        .collect();
    let diagram = compute_diagram_raw(&values, t.nelx, t.nely)?;
    create_dir(&args.out)?;
    diagram.write_csv(&args.out.join("diagram.csv"))?;
    let mut betti = String::from("threshold,b0,b1\n");
    for th in BETTI_THRESHOLDS {
        let b = betti_at_threshold(&diagram, th)?;
        betti.push_str(&format!("{th},{},{}\n", b.b0, b.b1));
    }
    write_text(&args.out.join("betti.csv"), &betti)?;
    write_json(
        &args.out.join("run.json"),
        &json!({
            "command": "persistence",
            "field": args.field.display().to_string(),
            "channel": args.channel,
            "resolution": format!("{}x{}", t.nely, t.nelx),
        }),
    )?;
    eprintln!(
        "persistence: {} dim-0 and {} dim-1 pairs",
        diagram.dim0.len(),
        diagram.dim1.len()
    );
    Ok(())
}
