//! `stparse`: train, infer, evaluate, synthesize, render and validate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stparse_core::io::{
    load_dataset, load_model, load_solution, read_json, save_dataset, save_model, save_solution, to_canonical_string,
};
use stparse_core::metrics::{evaluate, EvalReport, Normalization};
use stparse_core::synth::{generate, scenario_suite, ScenarioScript};
use stparse_core::{learning, InferenceConfig, TrainingConfig, Vocabulary};

const SEED_VAR: &str = "STPARSE_SEED";

#[derive(Parser, Debug)]
#[command(name = "stparse", version, about = "Parse multi-agent trajectories into groups, events, roles and sub-events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a model from annotated datasets.
    Train {
        /// Annotated dataset; repeat for several.
        #[arg(long = "data", required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Number of latent sub-event templates.
        #[arg(long, default_value_t = 27)]
        k: usize,
        /// Unit interval length in seconds.
        #[arg(long, default_value_t = 2.0)]
        unit: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Parse a dataset with a trained model.
    Infer {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        /// Grouping proposals per outer iteration.
        #[arg(long)]
        sweeps: Option<usize>,
        /// Role proposals per group per outer iteration.
        #[arg(long)]
        role_sweeps: Option<usize>,
        #[arg(long)]
        outer_iters: Option<usize>,
    },
    /// Score a solution against annotations.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Sum grouping fractions over groups instead of averaging them.
        #[arg(long)]
        metric_raw: bool,
    },
    /// Generate an annotated dataset from a scenario script.
    Synth {
        #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
        script: Option<PathBuf>,
        /// Name of a built-in scenario instead of a script file.
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Draw a dataset, optionally with a solution, as SVG.
    Render {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a dataset or model file.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ValidateArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SeedArg {
    /// Random seed; falls back to STPARSE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

/// Failures that are the caller's fault rather than the input's.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

impl SeedArg {
    fn resolve(&self) -> anyhow::Result<u64> {
        let seed = match self.seed {
            Some(s) => s,
            None => match std::env::var(SEED_VAR) {
                Ok(v) => v.trim().parse().map_err(|_| Usage(format!("{SEED_VAR}=`{v}` is not an unsigned integer")))?,
                Err(_) => 0,
            },
        };
        eprintln!("seed: {seed}");
        Ok(seed)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Train { data, out, k, unit, seed } => {
            let seed = seed.resolve()?;
            let sets = data.iter().map(|p| load(p, load_dataset)).collect::<anyhow::Result<Vec<_>>>()?;
            let mut cfg = TrainingConfig { k, seed, ..Default::default() };
            cfg.features.unit = unit;
            let model = learning::train(&sets, &cfg)?;
            save_model(&model, &out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("trained {} templates from {} datasets", model.grammar.templates.len(), sets.len());
        }
        Command::Infer { data, model, out, seed, sweeps, role_sweeps, outer_iters } => {
            let seed = seed.resolve()?;
            let dataset = load(&data, load_dataset)?;
            let model = load(&model, load_model)?;
            let mut cfg = InferenceConfig { seed, ..Default::default() };
            cfg.grouping_sweeps = sweeps.unwrap_or(cfg.grouping_sweeps);
            cfg.role_sweeps = role_sweeps.unwrap_or(cfg.role_sweeps);
            cfg.outer_iters = outer_iters.unwrap_or(cfg.outer_iters);
            let solution = stparse_core::inference::infer(&dataset, &model, &cfg)?;
            save_solution(&solution, &dataset.vocabulary, &out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{} groups, energy {:.6}", solution.groups.len(), solution.energy);
        }
        Command::Eval { truth, pred, metric_raw } => {
            let truth = load(&truth, load_dataset)?;
            let vocab = truth.vocabulary.clone();
            let pred = load(&pred, |p| load_solution(p, &vocab))?;
            let norm = if metric_raw { Normalization::Raw } else { Normalization::Mean };
            let report = evaluate(&truth, &pred, norm)?;
            print!("{}", to_canonical_string(&report_json(&report, &vocab))?);
            eprint!("{}", report_table(&report));
        }
        Command::Synth { script, builtin, out, seed } => {
            let seed = seed.resolve()?;
            let script: ScenarioScript = match (script, builtin) {
                (Some(p), _) => load(&p, read_json)?,
                (None, Some(name)) => builtin_script(&name)?,
                (None, None) => bail!(Usage("one of --script or --builtin is required".into())),
            };
            let dataset = generate(&script, seed)?;
            save_dataset(&dataset, &out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{} trajectories, {} groups", dataset.trajectories.len(), dataset.groups.as_ref().map_or(0, |g| g.len()));
        }
        Command::Render { data, solution, out } => {
            let dataset = load(&data, load_dataset)?;
            let vocab = dataset.vocabulary.clone();
            let solution = solution.map(|p| load(&p, |p| load_solution(p, &vocab))).transpose()?;
            let svg = stparse_core::io::svg::render_svg(&dataset, solution.as_ref());
            std::fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Validate(ValidateArgs { data, model }) => {
            if let Some(p) = data {
                let d = load(&p, load_dataset)?;
                eprintln!("ok: {} trajectories", d.trajectories.len());
            } else if let Some(p) = model {
                let m = load(&p, load_model)?;
                eprintln!("ok: {} templates", m.grammar.templates.len());
            }
        }
    }
    Ok(())
}

fn load<T>(path: &Path, f: impl FnOnce(&Path) -> stparse_core::Result<T>) -> anyhow::Result<T> {
    f(path).with_context(|| format!("reading {}", path.display()))
}

fn builtin_script(name: &str) -> anyhow::Result<ScenarioScript> {
    let suite = scenario_suite();
    if let Some(s) = suite.iter().find(|s| s.name == name) {
        return Ok(s.clone());
    }
    let names: Vec<&str> = suite.iter().map(|s| s.name.as_str()).collect();
    Err(anyhow!(Usage(format!("unknown built-in scenario `{name}`; known: {}", names.join(", ")))))
}

fn report_json(r: &EvalReport, vocab: &Vocabulary) -> serde_json::Value {
    let events = &vocab.events;
    let labels: Vec<&str> = (0..vocab.n_labels()).map(|l| vocab.label_name(l)).collect();
    let named_rows = |m: &Vec<Vec<f64>>, names: &[&str]| {
        m.iter()
            .enumerate()
            .map(|(i, row)| {
                let cells: serde_json::Map<_, _> =
                    row.iter().enumerate().map(|(j, v)| (names[j].to_string(), json!(v))).collect();
                (names[i].to_string(), serde_json::Value::Object(cells))
            })
            .collect::<serde_json::Map<_, _>>()
    };
    let event_names: Vec<&str> = events.iter().map(String::as_str).collect();
    let roles: serde_json::Map<_, _> = r
        .role_confusion
        .iter()
        .enumerate()
        .map(|(e, m)| {
            let rows: serde_json::Map<_, _> =
                named_rows(m, &labels).into_iter().filter(|(_, row)| row.as_object().is_some_and(|o| o.values().any(|v| v != &json!(0.0)))).collect();
            (events[e].clone(), serde_json::Value::Object(rows))
        })
        .collect();
    json!({
        "groupingPrecision": r.grouping_precision,
        "groupingRecall": r.grouping_recall,
        "groupingF": r.grouping_f,
        "eventAccuracy": r.event_accuracy,
        "roleAccuracy": r.role_accuracy,
        "eventConfusion": named_rows(&r.event_confusion, &event_names),
        "roleConfusion": roles,
    })
}

fn report_table(r: &EvalReport) -> String {
    let rows = [
        ("grouping precision", r.grouping_precision),
        ("grouping recall", r.grouping_recall),
        ("grouping F", r.grouping_f),
        ("event accuracy", r.event_accuracy),
        ("role accuracy", r.role_accuracy),
    ];
    rows.iter().map(|(k, v)| format!("{k:<20} {v:>8.4}\n")).collect()
}
