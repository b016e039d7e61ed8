//! `gridcomp`: generate, split, render, prompt, parse, score, solve and train.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridcomp_core::episodes::{generate_dataset_with, generate_static_corpus, Episode, GenConfig, Setup, StaticSizes, StudyAblation};
use gridcomp_core::jsonl;
use gridcomp_core::metrics::{aggregate, EvalReport, FormatPolicy, PairScore, PredictionRecord, Scored};
use gridcomp_core::prompt::{build_prompt, parse_response, PromptMode, PromptOptions, PromptRecord, ResponseRecord};
use gridcomp_core::render;
use gridcomp_core::solver::solve_episode;
use gridcomp_core::split::{split_dataset, EpisodeMeta, Partition, SplitManifest};
use gridcomp_core::taxonomy::{classify_error, ClassifyError, ErrorCategory, ErrorTable};
use gridcomp_core::transforms::Mode;
use gridcomp_mlc::checkpoint;
use gridcomp_mlc::model::{Model, ModelConfig};
use gridcomp_mlc::train::{evaluate, TrainConfig, Trainer};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "gridcomp", version, about = "Compositional grid-transformation episodes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Global {
    #[arg(long, global = true, default_value_t = 1860)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Restricted)]
    mode: ModeArg,
    #[arg(long, global = true, value_enum, default_value_t = SetupArg::Systematicity)]
    setup: SetupArg,
    /// May be repeated.
    #[arg(long, global = true, value_enum)]
    ablate: Vec<Ablation>,
    /// Directory for relative output paths.
    #[arg(long, global = true, env = "GRIDCOMP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Restricted,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SetupArg {
    ThreeShot,
    Systematicity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Ablation {
    NoCopy,
    NoPrimitives,
    NoLevel1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Style {
    Ascii,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Policy {
    CountAsZero,
    Drop,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate episodes (or the fixed-grammar corpus with --static).
    Gen {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value = "episodes.jsonl")]
        output: PathBuf,
        /// Write the 1,260/20/20 fixed-grammar corpus instead.
        #[arg(long = "static")]
        fixed: bool,
    },
    /// Triplet-disjoint train/val/test split of an episode file.
    Split {
        #[arg(long, default_value = "episodes.jsonl")]
        episodes: PathBuf,
    },
    /// Draw one episode (or one grid of it) as text or SVG.
    Render {
        #[arg(long, default_value = "episodes.jsonl")]
        episodes: PathBuf,
        /// Defaults to the first episode.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 0)]
        query: usize,
        #[arg(long, value_enum, default_value_t = Style::Ascii)]
        style: Style,
        /// Written to stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit one prompt record per query.
    Prompt {
        #[arg(long, default_value = "episodes.jsonl")]
        episodes: PathBuf,
        /// Also render each episode to an SVG next to the prompt file.
        #[arg(long)]
        image: bool,
        /// Add the instruction against writing code.
        #[arg(long)]
        no_code_line: bool,
        #[arg(long, default_value = "prompts.jsonl")]
        output: PathBuf,
    },
    /// Turn raw model responses into prediction records.
    Parse {
        #[arg(long, default_value = "responses.jsonl")]
        responses: PathBuf,
        #[arg(long, default_value = "predictions.jsonl")]
        output: PathBuf,
    },
    /// Exact, color and shape accuracy plus the error breakdown.
    Score {
        #[arg(long, default_value = "episodes.jsonl")]
        episodes: PathBuf,
        #[arg(long, default_value = "predictions.jsonl")]
        predictions: PathBuf,
        #[arg(long, value_enum, default_value_t = Policy::CountAsZero)]
        policy: Policy,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
    /// One category per wrong prediction.
    ClassifyErrors {
        #[arg(long, default_value = "episodes.jsonl")]
        episodes: PathBuf,
        #[arg(long, default_value = "predictions.jsonl")]
        predictions: PathBuf,
        #[arg(long, default_value = "errors.jsonl")]
        output: PathBuf,
    },
    /// Answer every query with the exact symbolic solver.
    Solve {
        #[arg(long, default_value = "episodes.jsonl")]
        episodes: PathBuf,
        #[arg(long, default_value = "predictions.jsonl")]
        output: PathBuf,
    },
    /// Train the transformer on an episode file.
    Train(TrainArgs),
    /// Greedy predictions of a checkpoint on an episode file.
    EvalModel {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test.jsonl")]
        episodes: PathBuf,
        #[arg(long, default_value = "predictions.jsonl")]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, default_value = "train.jsonl")]
    train: PathBuf,
    #[arg(long, default_value = "val.jsonl")]
    val: PathBuf,
    /// Validate on at most this many episodes per epoch.
    #[arg(long, default_value_t = 50)]
    val_limit: usize,
    #[arg(long, default_value = "checkpoints")]
    checkpoint_dir: PathBuf,
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_episodes: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    grad_accum: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    micro_batch: Option<usize>,
    #[arg(long, default_value_t = 128)]
    d_model: usize,
    #[arg(long, default_value_t = 8)]
    heads: usize,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 768)]
    ff_dim: usize,
    #[arg(long)]
    role_embedding: bool,
    #[arg(long)]
    tie_output: bool,
}

/// A failure, split by whose fault it is.
enum CliError {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::User(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn internal<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Internal(e.into())
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
    exit_code: u8,
}

fn emit_error(kind: &str, message: String, code: u8) -> ExitCode {
    let rec = ErrorRecord { error: kind, message, exit_code: code };
    eprintln!("{}", serde_json::to_string(&rec).unwrap_or_else(|_| "{\"error\":\"internal\"}".into()));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return emit_error("usage", e.to_string().trim().to_string(), 1),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.code();
            let (kind, err) = match e {
                CliError::User(err) => ("user", err),
                CliError::Internal(err) => ("internal", err),
            };
            emit_error(kind, format!("{err:#}"), code)
        }
    }
}

impl Global {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn mode(&self) -> Mode {
        match self.mode {
            ModeArg::Restricted => Mode::Restricted,
            ModeArg::Extended => Mode::Extended,
        }
    }

    fn setup(&self) -> Setup {
        match self.setup {
            SetupArg::ThreeShot => Setup::ThreeShot,
            SetupArg::Systematicity => Setup::Systematicity,
        }
    }

    fn gen_config(&self) -> Result<GenConfig> {
        let study: Vec<StudyAblation> = self
            .ablate
            .iter()
            .filter_map(|a| match a {
                Ablation::NoPrimitives => Some(StudyAblation::NoPrimitives),
                Ablation::NoLevel1 => Some(StudyAblation::NoLevel1),
                Ablation::NoCopy => None,
            })
            .collect();
        if study.len() > 1 {
            return Err(anyhow!("--ablate no-primitives and no-level1 cannot be combined").into());
        }
        if !study.is_empty() && self.setup() == Setup::ThreeShot {
            return Err(anyhow!("study ablations apply to the systematicity setup only").into());
        }
        Ok(GenConfig { mode: self.mode(), setup: self.setup(), ablation: study.first().copied(), ..GenConfig::default() })
    }
}

fn read_episodes(path: &Path) -> Result<Vec<Episode>> {
    jsonl::read_all(path).with_context(|| format!("reading episodes from {}", path.display())).map_err(CliError::User)
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    jsonl::write_all(path, records).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(internal)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    fs::create_dir_all(&g.out_dir).with_context(|| format!("creating {}", g.out_dir.display()))?;
    match cli.cmd {
        Cmd::Gen { n, output, fixed } => cmd_gen(g, n, &g.path(&output), fixed),
        Cmd::Split { episodes } => cmd_split(g, &g.path(&episodes)),
        Cmd::Render { episodes, id, query, style, output } => {
            cmd_render(&g.path(&episodes), id.as_deref(), query, style, output.map(|o| g.path(&o)).as_deref())
        }
        Cmd::Prompt { episodes, image, no_code_line, output } => cmd_prompt(&g.path(&episodes), image, no_code_line, &g.path(&output)),
        Cmd::Parse { responses, output } => cmd_parse(&g.path(&responses), &g.path(&output)),
        Cmd::Score { episodes, predictions, policy, report } => {
            cmd_score(&g.path(&episodes), &g.path(&predictions), policy, &g.path(&report))
        }
        Cmd::ClassifyErrors { episodes, predictions, output } => {
            cmd_classify(&g.path(&episodes), &g.path(&predictions), &g.path(&output))
        }
        Cmd::Solve { episodes, output } => cmd_solve(&g.path(&episodes), &g.path(&output)),
        Cmd::Train(args) => cmd_train(g, &args),
        Cmd::EvalModel { checkpoint, episodes, output } => cmd_eval_model(&g.path(&checkpoint), &g.path(&episodes), &g.path(&output)),
    }
}

fn cmd_gen(g: &Global, n: usize, output: &Path, fixed: bool) -> Result<()> {
    if fixed {
        let corpus = generate_static_corpus(g.seed, StaticSizes::default(), g.mode()).map_err(internal)?;
        write_json(output, &corpus)?;
        println!("wrote fixed-grammar corpus ({} / {} / {}) to {}", corpus.train.len(), corpus.val.len(), corpus.test.len(), output.display());
        return Ok(());
    }
    let cfg = g.gen_config()?;
    if let Some(dir) = output.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = fs::File::create(output).with_context(|| format!("writing {}", output.display()))?;
    let mut w = std::io::BufWriter::new(file);
    generate_dataset_with(g.seed, n, &cfg, |ep| jsonl::write_record(&mut w, &ep).map_err(anyhow::Error::from))
        .map_err(internal)?;
    w.flush().with_context(|| format!("writing {}", output.display()))?;
    println!("wrote {n} episodes to {}", output.display());
    Ok(())
}

fn cmd_split(g: &Global, path: &Path) -> Result<()> {
    let episodes = read_episodes(path)?;
    let manifest: SplitManifest = split_dataset(episodes.iter().map(EpisodeMeta::from), g.seed);
    let dir = path.parent().unwrap_or(Path::new("."));
    write_json(&dir.join("split.json"), &manifest)?;
    for part in Partition::ALL {
        let file = dir.join(format!("{}.jsonl", part.name()));
        write_jsonl(&file, manifest.select(part, &episodes))?;
        println!("{:<6}{:>8} episodes -> {}", part.name(), manifest.ids(part).len(), file.display());
    }
    Ok(())
}

fn find_episode<'a>(episodes: &'a [Episode], id: Option<&str>) -> Result<&'a Episode> {
    match id {
        Some(id) => episodes.iter().find(|e| e.id == id).ok_or_else(|| anyhow!("no episode with id {id}").into()),
        None => episodes.first().ok_or_else(|| anyhow!("episode file is empty").into()),
    }
}

fn cmd_render(path: &Path, id: Option<&str>, query: usize, style: Style, output: Option<&Path>) -> Result<()> {
    let episodes = read_episodes(path)?;
    let ep = find_episode(&episodes, id)?;
    if query >= ep.queries.len() {
        return Err(anyhow!("episode {} has {} queries", ep.id, ep.queries.len()).into());
    }
    let text = match style {
        Style::Ascii => render::ascii_episode(ep, query),
        Style::Svg => render::svg_episode(ep, query),
    };
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_prompt(path: &Path, image: bool, no_code_line: bool, output: &Path) -> Result<()> {
    let episodes = read_episodes(path)?;
    let mode = if image { PromptMode::TextImage } else { PromptMode::TextOnly };
    let opts = PromptOptions { mode, no_code_line };
    let image_dir = output.with_extension("images");
    let mut records = Vec::new();
    for ep in &episodes {
        for qi in 0..ep.queries.len() {
            let image = if image {
                fs::create_dir_all(&image_dir).with_context(|| format!("creating {}", image_dir.display()))?;
                let file = image_dir.join(format!("{}_q{qi}.svg", ep.id));
                fs::write(&file, render::svg_episode(ep, qi)).with_context(|| format!("writing {}", file.display()))?;
                Some(file.display().to_string())
            } else {
                None
            };
            records.push(PromptRecord {
                episode_id: ep.id.clone(),
                query_index: qi,
                setup: ep.setup,
                mode,
                prompt: build_prompt(ep, qi, opts),
                image,
            });
        }
    }
    write_jsonl(output, &records)?;
    println!("wrote {} prompts to {}", records.len(), output.display());
    Ok(())
}

fn cmd_parse(path: &Path, output: &Path) -> Result<()> {
    let responses: Vec<ResponseRecord> =
        jsonl::read_all(path).with_context(|| format!("reading responses from {}", path.display()))?;
    let mut failures = 0;
    let preds: Vec<PredictionRecord> = responses
        .into_iter()
        .map(|r| {
            let prediction = parse_response(&r.raw).ok();
            failures += prediction.is_none() as usize;
            PredictionRecord { episode_id: r.episode_id, query_index: r.query_index, prediction, raw: Some(r.raw) }
        })
        .collect();
    write_jsonl(output, &preds)?;
    println!("parsed {} responses ({failures} format failures) -> {}", preds.len(), output.display());
    Ok(())
}

/// Predictions joined to their episodes; a missing prediction is an error.
fn join<'a>(episodes: &'a [Episode], preds: &'a [PredictionRecord]) -> Result<Vec<(&'a Episode, &'a PredictionRecord)>> {
    let by_id: HashMap<&str, &Episode> = episodes.iter().map(|e| (e.id.as_str(), e)).collect();
    preds
        .iter()
        .map(|p| {
            let ep = by_id.get(p.episode_id.as_str()).ok_or_else(|| anyhow!("prediction for unknown episode {}", p.episode_id))?;
            if p.query_index >= ep.queries.len() {
                bail!("episode {} has no query {}", p.episode_id, p.query_index);
            }
            Ok((*ep, p))
        })
        .collect::<anyhow::Result<_>>()
        .map_err(CliError::User)
}

#[derive(Serialize)]
struct ScoreReport {
    #[serde(flatten)]
    eval: EvalReport,
    errors: ErrorTable,
}

fn cmd_score(ep_path: &Path, pred_path: &Path, policy: Policy, report_path: &Path) -> Result<()> {
    let episodes = read_episodes(ep_path)?;
    let preds: Vec<PredictionRecord> =
        jsonl::read_all(pred_path).with_context(|| format!("reading predictions from {}", pred_path.display()))?;
    let joined = join(&episodes, &preds)?;
    let scored: Vec<Scored> = joined
        .iter()
        .map(|(ep, p)| Scored {
            episode_id: p.episode_id.clone(),
            score: p.prediction.as_ref().map(|g| PairScore::of(g, &ep.queries[p.query_index].output)),
        })
        .collect();
    let policy = match policy {
        Policy::CountAsZero => FormatPolicy::CountAsZero,
        Policy::Drop => FormatPolicy::Drop,
    };
    let eval = aggregate(&scored, policy);
    let errors: ErrorTable = classify_all(&joined)?.into_iter().map(|(_, _, c)| c).collect();
    print!("{}", eval.table());
    if errors.total > 0 {
        print!("\n{}", errors.table());
    }
    write_json(report_path, &ScoreReport { eval, errors })
}

fn classify_all<'a>(joined: &[(&'a Episode, &'a PredictionRecord)]) -> Result<Vec<(&'a str, usize, ErrorCategory)>> {
    let mut out = Vec::new();
    for (ep, p) in joined {
        match classify_error(ep, p.query_index, p.prediction.as_ref()) {
            Ok(c) => out.push((ep.id.as_str(), p.query_index, c.category)),
            Err(ClassifyError::NotAnError) => {}
            Err(e) => return Err(internal(e)),
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    episode_id: &'a str,
    query_index: usize,
    category: ErrorCategory,
}

fn cmd_classify(ep_path: &Path, pred_path: &Path, output: &Path) -> Result<()> {
    let episodes = read_episodes(ep_path)?;
    let preds: Vec<PredictionRecord> =
        jsonl::read_all(pred_path).with_context(|| format!("reading predictions from {}", pred_path.display()))?;
    let joined = join(&episodes, &preds)?;
    let all = classify_all(&joined)?;
    let table: ErrorTable = all.iter().map(|(_, _, c)| *c).collect();
    write_jsonl(output, all.iter().map(|&(episode_id, query_index, category)| ErrorLine { episode_id, query_index, category }))?;
    print!("{}", table.table());
    Ok(())
}

fn cmd_solve(path: &Path, output: &Path) -> Result<()> {
    let episodes = read_episodes(path)?;
    let mut preds = Vec::new();
    let mut failed = 0;
    for ep in &episodes {
        match solve_episode(ep) {
            Ok(grids) => preds.extend(grids.into_iter().enumerate().map(|(qi, g)| PredictionRecord {
                episode_id: ep.id.clone(),
                query_index: qi,
                prediction: Some(g),
                raw: None,
            })),
            Err(e) => {
                failed += 1;
                preds.extend((0..ep.queries.len()).map(|qi| PredictionRecord {
                    episode_id: ep.id.clone(),
                    query_index: qi,
                    prediction: None,
                    raw: Some(e.to_string()),
                }));
            }
        }
    }
    write_jsonl(output, &preds)?;
    println!("solved {} of {} episodes -> {}", episodes.len() - failed, episodes.len(), output.display());
    Ok(())
}

fn cmd_train(g: &Global, a: &TrainArgs) -> Result<()> {
    let train = read_episodes(&g.path(&a.train))?;
    let val_path = g.path(&a.val);
    let mut val = if val_path.exists() { read_episodes(&val_path)? } else { Vec::new() };
    val.truncate(a.val_limit);
    let setup = train.first().map(|e| e.setup).unwrap_or(g.setup());
    let ckpt_dir = g.path(&a.checkpoint_dir);
    fs::create_dir_all(&ckpt_dir).with_context(|| format!("creating {}", ckpt_dir.display()))?;
    let mut trainer: Trainer<f32> = match &a.resume {
        Some(p) => checkpoint::load(&g.path(p)).with_context(|| format!("loading {}", p.display()))?,
        None => {
            let mut tc = TrainConfig { seed: g.seed, ..TrainConfig::for_setup(setup) };
            tc.copy_task = !g.ablate.contains(&Ablation::NoCopy);
            if let Some(v) = a.epochs {
                tc.epochs = v;
            }
            if let Some(v) = a.batch_episodes {
                tc.batch_episodes = v;
            }
            if let Some(v) = a.lr {
                tc.peak_lr = v;
            }
            if let Some(v) = a.grad_accum {
                tc.grad_accum = v;
            }
            if let Some(v) = a.noise {
                tc.noise = v;
            }
            if let Some(v) = a.micro_batch {
                tc.micro_batch = v;
            }
            let mc = ModelConfig {
                d_model: a.d_model,
                heads: a.heads,
                enc_layers: a.layers,
                dec_layers: a.layers,
                ff_dim: a.ff_dim,
                role_embedding: a.role_embedding,
                tie_output: a.tie_output,
                ..ModelConfig::default()
            };
            if !mc.d_model.is_multiple_of(mc.heads) {
                return Err(anyhow!("--d-model must be divisible by --heads").into());
            }
            Trainer::new(Model::new(mc, g.seed), tc)
        }
    };
    if let Some(v) = a.epochs {
        trainer.cfg.epochs = v;
    }
    println!("{} parameters, {} training episodes, {} validation episodes", trainer.model.param_count(), train.len(), val.len());
    let metrics_path = ckpt_dir.join("metrics.jsonl");
    let mut metrics = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&metrics_path)
        .with_context(|| format!("opening {}", metrics_path.display()))?;
    let mut io_error: Option<anyhow::Error> = None;
    let result = trainer.train(&train, &val, |t, line| {
        println!(
            "epoch {:>4}  loss {:.5}  lr {:.2e}  val exact {}",
            line.epoch,
            line.train_loss,
            line.lr,
            line.val_exact.map_or("-".to_string(), |v| format!("{:.4}", v))
        );
        let saved = jsonl::write_record(&mut metrics, line)
            .map_err(anyhow::Error::from)
            .and_then(|_| checkpoint::save(&ckpt_dir.join("last.ckpt"), t).map_err(anyhow::Error::from));
        if let Err(e) = saved {
            io_error.get_or_insert(e);
        }
    });
    if let Some(e) = io_error {
        return Err(e.into());
    }
    result.map_err(internal)?;
    println!("checkpoint: {}", ckpt_dir.join("last.ckpt").display());
    Ok(())
}

fn cmd_eval_model(ckpt: &Path, ep_path: &Path, output: &Path) -> Result<()> {
    let trainer: Trainer<f32> = checkpoint::load(ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
    let episodes = read_episodes(ep_path)?;
    let (report, preds) = evaluate(&trainer.model, &episodes);
    write_jsonl(output, &preds)?;
    print!("{}", report.table());
    Ok(())
}
