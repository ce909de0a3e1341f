use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use smartgd::baselines::{build_collection, Baseline, BaselineKind, LayoutDir, LayoutProducer};
use smartgd::dataset::{load_dir, synthetic_graphs};
use smartgd::eval::{compare, ModelProducer};
use smartgd::fsutil::write_atomic;
use smartgd::graph::{load_graph, GraphFormat};
use smartgd::neural::{generate, ModelState};
use smartgd::render::{render_svg, RenderOptions};
use smartgd::trainer::{train, Bootstrap, TrainConfig, CHECKPOINT_FILE};
use smartgd::{CriterionId, CriterionSpec, Error, ErrorKind, Layout, LayoutCollection, Result, Sample};

const EXIT_PARSE: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser)]
#[command(name = "smartgd", version, about = "Graph layout with a self-challenging adversarial generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Pmds,
    #[value(name = "stress_sgd")]
    StressSgd,
    Fr,
}

impl From<Method> for BaselineKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Pmds => BaselineKind::Pmds,
            Method::StressSgd => BaselineKind::StressSgd,
            Method::Fr => BaselineKind::Fr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BootstrapArg {
    #[value(name = "self")]
    SelfGenerated,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset of random connected graphs as edge lists.
    GenData {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        n_min: usize,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        #[arg(long, default_value_t = 0.3)]
        extra_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lay out every graph of a directory with a classical method.
    Baseline {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Keep the best layout per graph over several layout directories.
    Collect {
        #[arg(long)]
        graphs: PathBuf,
        /// Layout directories, optionally written as NAME=DIR.
        #[arg(long, num_args = 1.., required = true)]
        layouts: Vec<String>,
        #[arg(long)]
        criterion: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the generator and discriminator.
    Train {
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long, conflicts_with = "bootstrap", required_unless_present = "bootstrap")]
        collection: Option<PathBuf>,
        #[arg(long, value_enum)]
        bootstrap: Option<BootstrapArg>,
        /// Overrides the criterion of the config file.
        #[arg(long)]
        criterion: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the epoch count of the config file.
        #[arg(long)]
        epochs: Option<usize>,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lay out graphs with a trained generator.
    Draw {
        /// Checkpoint file, or a training output directory.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        graphs: PathBuf,
        /// Directory of initial layouts replacing the PivotMDS ones.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare models against benchmarks by symmetric percent change.
    Eval {
        /// Methods: pmds, stress_sgd, fr, ckpt:PATH or dir:PATH, each
        /// optionally prefixed with NAME=.
        #[arg(long, num_args = 1.., required = true)]
        models: Vec<String>,
        #[arg(long, num_args = 1.., required = true)]
        benchmarks: Vec<String>,
        #[arg(long)]
        graphs: PathBuf,
        /// Criterion names, `combined`, or criterion JSON files.
        #[arg(long, num_args = 1.., required = true)]
        criteria: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write an SVG heatmap of the matrix.
        #[arg(long)]
        heatmap: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a layout as SVG.
    Render {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 600.0)]
        width: f64,
        #[arg(long, default_value_t = 5.0)]
        node_radius: f64,
        #[arg(long, default_value_t = 1.5)]
        edge_width: f64,
        #[arg(long, default_value_t = 20.0)]
        margin: f64,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_spec(path: &Path) -> Result<CriterionSpec> {
    CriterionSpec::parse_json(&read_text(path)?)
}

fn split_name(arg: &str) -> (Option<&str>, &str) {
    match arg.split_once('=') {
        Some((name, rest)) if !name.contains(':') && !name.contains('/') => (Some(name), rest),
        _ => (None, arg),
    }
}

fn dir_name(path: &Path) -> String {
    path.file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_end_matches(".json").to_string())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_checkpoint(path: &Path) -> Result<ModelState> {
    if path.is_dir() {
        ModelState::load(path.join(CHECKPOINT_FILE))
    } else {
        ModelState::load(path)
    }
}

fn producer(arg: &str, seed: u64) -> Result<Box<dyn LayoutProducer>> {
    let (name, what) = split_name(arg);
    if let Some(path) = what.strip_prefix("ckpt:") {
        let path = Path::new(path);
        let state = load_checkpoint(path)?;
        let name = name.map(str::to_string).unwrap_or_else(|| dir_name(path));
        return Ok(Box::new(ModelProducer {
            name,
            generator: state.generator,
        }));
    }
    if let Some(path) = what.strip_prefix("dir:") {
        let path = Path::new(path);
        if !path.is_dir() {
            return Err(Error::Validation(format!("layout directory {} not found", path.display())));
        }
        let name = name.map(str::to_string).unwrap_or_else(|| dir_name(path));
        return Ok(Box::new(LayoutDir::new(name, path)));
    }
    let kind: BaselineKind = what.parse()?;
    match name {
        Some(n) if n != kind.name() => Err(Error::Argument(format!("baseline {} cannot be renamed to {n}", kind.name()))),
        _ => Ok(Box::new(Baseline::new(kind, seed))),
    }
}

fn criterion_arg(arg: &str) -> Result<CriterionSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        return load_spec(path);
    }
    if arg == "combined" {
        return Ok(CriterionSpec::combined());
    }
    let id: CriterionId = arg.parse()?;
    Ok(CriterionSpec::single(id))
}

fn write_layouts(out: &Path, layouts: &[(String, Layout)]) -> Result<()> {
    create_dir(out)?;
    for (id, x) in layouts {
        write_atomic(out.join(format!("{id}.txt")), x.to_text())?;
    }
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData {
            count,
            n_min,
            n_max,
            extra_frac,
            seed,
            out,
        } => {
            let graphs = synthetic_graphs(count, n_min, n_max, extra_frac, seed)?;
            create_dir(&out)?;
            for (id, g) in &graphs {
                write_atomic(out.join(format!("{id}.txt")), g.to_edge_list())?;
            }
            println!("{}", serde_json::json!({ "graphs": graphs.len() }));
        }
        Command::Baseline {
            method,
            graphs,
            out,
            seed,
        } => {
            let samples = load_dir(&graphs)?;
            let b = Baseline::new(method.into(), seed);
            let layouts = samples
                .iter()
                .map(|s| Ok((s.id.clone(), b.produce(s)?)))
                .collect::<Result<Vec<_>>>()?;
            write_layouts(&out, &layouts)?;
            println!("{}", serde_json::json!({ "method": b.name(), "graphs": layouts.len() }));
        }
        Command::Collect {
            graphs,
            layouts,
            criterion,
            out,
        } => {
            let samples = load_dir(&graphs)?;
            let spec = load_spec(&criterion)?;
            let dirs: Vec<LayoutDir> = layouts
                .iter()
                .map(|arg| {
                    let (name, dir) = split_name(arg);
                    let dir = Path::new(dir);
                    if !dir.is_dir() {
                        return Err(Error::Validation(format!("layout directory {} not found", dir.display())));
                    }
                    Ok(LayoutDir::new(name.map(str::to_string).unwrap_or_else(|| dir_name(dir)), dir))
                })
                .collect::<Result<_>>()?;
            let methods: Vec<&dyn LayoutProducer> = dirs.iter().map(|d| d as &dyn LayoutProducer).collect();
            let (collection, failures) = build_collection(&samples, &spec, &methods)?;
            collection.covers(&samples)?;
            if let Some(parent) = out.parent() {
                create_dir(parent)?;
            }
            collection.save(&out)?;
            let composition: BTreeMap<String, f64> =
                collection.composition().into_iter().map(|(k, v)| (k, 100.0 * v)).collect();
            println!(
                "{}",
                serde_json::json!({
                    "graphs": collection.len(),
                    "mean_value": collection.mean_value(),
                    "composition_percent": composition,
                    "method_failures": failures.len(),
                })
            );
        }
        Command::Train {
            graphs,
            collection,
            bootstrap,
            criterion,
            config,
            epochs,
            seed,
            out,
        } => {
            let samples = load_dir(&graphs)?;
            let mut cfg = match &config {
                Some(path) => TrainConfig::parse_json(&read_text(path)?)?,
                None => TrainConfig::default(),
            };
            if let Some(path) = &criterion {
                cfg.criterion = load_spec(path)?;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let initial = match (collection, bootstrap) {
                (Some(manifest), _) => {
                    cfg.bootstrap = Bootstrap::Collection;
                    Some(LayoutCollection::load(manifest, &samples)?)
                }
                (None, Some(BootstrapArg::SelfGenerated)) => {
                    cfg.bootstrap = Bootstrap::SelfGenerated;
                    None
                }
                (None, None) => return Err(Error::Argument("either --collection or --bootstrap self is required".into())),
            };
            create_dir(&out)?;
            write_atomic(out.join("train.json"), cfg.to_json() + "\n")?;
            let result = train(&cfg, &samples, initial, Some(&out))?;
            let first = &result.history.records[0];
            let last = result.history.records.last().expect("history has epoch 0");
            println!(
                "{}",
                serde_json::json!({
                    "epochs": cfg.epochs,
                    "initial_generated_value": first.mean_generated_value,
                    "final_generated_value": last.mean_generated_value,
                    "final_collection_value": last.mean_collection_value,
                })
            );
        }
        Command::Draw {
            checkpoint,
            graphs,
            init,
            out,
        } => {
            let state = load_checkpoint(&checkpoint)?;
            let mut samples = load_dir(&graphs)?;
            if let Some(dir) = init {
                let inits = LayoutDir::new("init", &dir);
                samples = samples
                    .into_iter()
                    .map(|s| {
                        let x = inits.produce(&s)?;
                        s.with_init(x)
                    })
                    .collect::<Result<Vec<Sample>>>()?;
            }
            let layouts = samples
                .iter()
                .map(|s| Ok((s.id.clone(), generate(&state.generator, &s.graph, &s.distances, &s.init)?)))
                .collect::<Result<Vec<_>>>()?;
            write_layouts(&out, &layouts)?;
            println!("{}", serde_json::json!({ "graphs": layouts.len() }));
        }
        Command::Eval {
            models,
            benchmarks,
            graphs,
            criteria,
            seed,
            heatmap,
            out,
        } => {
            let samples = load_dir(&graphs)?;
            let models: Vec<Box<dyn LayoutProducer>> = models.iter().map(|m| producer(m, seed)).collect::<Result<_>>()?;
            let benchmarks: Vec<Box<dyn LayoutProducer>> =
                benchmarks.iter().map(|m| producer(m, seed)).collect::<Result<_>>()?;
            let criteria: Vec<CriterionSpec> = criteria.iter().map(|c| criterion_arg(c)).collect::<Result<_>>()?;
            let m: Vec<&dyn LayoutProducer> = models.iter().map(|b| b.as_ref()).collect();
            let b: Vec<&dyn LayoutProducer> = benchmarks.iter().map(|b| b.as_ref()).collect();
            let report = compare(&m, &b, &samples, &criteria)?;
            create_dir(&out)?;
            write_atomic(out.join("matrix.csv"), report.matrix_csv())?;
            write_atomic(out.join("absolute.csv"), report.absolute_csv())?;
            write_atomic(out.join("report.json"), report.to_json())?;
            if heatmap {
                write_atomic(out.join("heatmap.svg"), report.heatmap_svg())?;
            }
            let flagged = report.cells.iter().filter(|c| c.flagged).count();
            println!(
                "{}",
                serde_json::json!({ "test_size": report.test_size, "cells": report.cells.len(), "flagged": flagged })
            );
        }
        Command::Render {
            layout,
            graph,
            out,
            width,
            node_radius,
            edge_width,
            margin,
        } => {
            let g = load_graph(&graph, GraphFormat::from_path(&graph))?;
            let x = Layout::load(&layout)?;
            let opts = RenderOptions {
                width_px: width,
                node_radius,
                edge_width,
                margin,
            };
            if !(width > 2.0 * margin && margin >= 0.0 && node_radius > 0.0 && edge_width > 0.0) {
                return Err(Error::Argument("render sizes must be positive with width > 2 * margin".into()));
            }
            write_atomic(&out, render_svg(&x, &g, &opts)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = match e.kind() {
                ErrorKind::Parse => ("parse", EXIT_PARSE),
                ErrorKind::Validation => ("validation", EXIT_VALIDATION),
                ErrorKind::Runtime => ("runtime", EXIT_RUNTIME),
            };
            eprintln!("{}", serde_json::json!({ "error": kind, "message": e.to_string() }));
            ExitCode::from(code)
        }
    }
}
