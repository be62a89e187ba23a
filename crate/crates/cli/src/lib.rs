//! Command-line workflows over the `paraembed` library.
//!
//! Every command writes a [`RunManifest`] next to its main output (or to
//! `--manifest`). `paraembed rerun --from M` repeats a recorded run on one
//! thread and compares the output digests.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure,
//! 4 rerun digest mismatch.

pub mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use paraembed::corpus::{
    binarize_annotations, load_annotated_set, load_labeled_set, load_pair_corpus,
    load_quality_curve, sample_by_token_budget, sample_training_set, save_labeled_set,
    select_prefix_for_quality, Sentence,
};
use paraembed::encoders::{
    EncoderKind, EncoderModel, SentenceEncoder, DEFAULT_DIM, DEFAULT_HIDDEN,
};
use paraembed::evaluate::{
    classify_accuracy, grade_similarity_stats, grade_stats_csv, histogram_csv, majority_baseline,
    pearson_r, spearman_rho, topk_similar, topk_tsv, train_probe, EmbeddingIndex, ProbeConfig,
    DEFAULT_PROBE_HIDDEN,
};
use paraembed::morphseg::{
    load_model, load_word_counts, save_model, segment_word, train_segmenter, CountMode,
    SegmenterConfig, WordCountTable,
};
use paraembed::synthetic::{
    compositional_corpus, corrupt_positives, MorphologyConfig, ParaphraseConfig,
    ParaphraseGenerator,
};
use paraembed::trainer::{cosine_distance, load_checkpoint, save_checkpoint, train, TrainConfig};
use paraembed::Error;

pub use manifest::{
    csv_digest_without, file_digest, sha256_hex, FileDigest, RunManifest, TOOLKIT_VERSION,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "paraembed",
    version,
    about = "Paraphrastic sentence embeddings"
)]
pub struct Cli {
    /// Worker threads; 1 gives the deterministic reference path.
    #[arg(long, global = true, env = "PARA_THREADS")]
    pub threads: Option<usize>,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Unsupervised morphological segmentation.
    #[command(subcommand)]
    Segment(SegmentCommand),
    /// Labeled training set from a ranked pair corpus.
    Sample(SampleArgs),
    /// Train a sentence encoder.
    Train(TrainArgs),
    /// Evaluate a trained encoder.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Seeded synthetic data.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Repeat a recorded run and compare output digests.
    Rerun(RerunArgs),
}

#[derive(Debug, Subcommand, Serialize)]
pub enum SegmentCommand {
    Train(SegmentTrainArgs),
    Apply(SegmentApplyArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "corpus"])))]
pub struct SegmentTrainArgs {
    /// `word<TAB>count` table.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Any tab-separated text file; words are counted over its text fields.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Minimum cost gain per epoch in nats; default 0.5% of the initial cost.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    /// Count word types once instead of by frequency.
    #[arg(long)]
    pub types: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SegmentApplyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Tab-separated file; numeric fields pass through, text fields are segmented.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("mode").required(true).args(["positives", "clean_target", "token_budget"])))]
pub struct SampleArgs {
    /// Ranked pair corpus, best pairs first.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub positives: Option<usize>,
    /// Smallest acceptable fraction of true paraphrases among positives.
    #[arg(long, requires = "quality_curve")]
    pub clean_target: Option<f64>,
    #[arg(long)]
    pub quality_curve: Option<PathBuf>,
    /// Total tokens over both sides of the positive pairs.
    #[arg(long)]
    pub token_budget: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderArg {
    Wa,
    Gran,
}

impl From<EncoderArg> for EncoderKind {
    fn from(e: EncoderArg) -> Self {
        match e {
            EncoderArg::Wa => EncoderKind::Wa,
            EncoderArg::Gran => EncoderKind::Gran,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Labeled pairs, `label<TAB>a<TAB>b`.
    #[arg(long)]
    pub train: PathBuf,
    /// Annotated dev pairs, `a<TAB>b<TAB>grade`.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    pub output: PathBuf,
    /// Epoch log; defaults to the checkpoint path with `.log.csv` appended.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EncoderArg::Gran)]
    pub encoder: EncoderArg,
    #[arg(long, default_value_t = 0.4)]
    pub margin: f64,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.8)]
    pub keep_prob: f64,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    /// Stop after this many epochs without dev improvement; bare flag means 2.
    #[arg(long, num_args = 0..=1, default_missing_value = "2", requires = "dev")]
    pub patience: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum EvalCommand {
    /// Probe accuracy on the test set next to the all-paraphrase baseline.
    Classify(ClassifyArgs),
    /// Nearest neighbours of a query sentence.
    Nn(NnArgs),
    /// Histogram of query similarities over an index.
    Hist(HistArgs),
    /// Similarity by annotation grade with neighbouring-grade tests.
    Grades(GradesArgs),
    /// Correlation of cosine similarity with annotation grades.
    Corr(CorrArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PROBE_HIDDEN)]
    pub probe_hidden: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// JSON report.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct NnArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One sentence per line.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// TSV `rank<TAB>similarity<TAB>sentence`; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HistArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 200)]
    pub bins: usize,
    /// CSV `bin_low,bin_high,count`; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GradesArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Annotated pairs.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum GenerateCommand {
    /// Ranked paraphrase corpus, `a<TAB>b<TAB>score`.
    Corpus(GenCorpusArgs),
    /// Labeled pairs with given class counts.
    Labeled(GenSetArgs),
    /// Annotated pairs, paraphrases graded 4 and unrelated pairs 1.
    Annotated(GenSetArgs),
    /// Sentences of compositional words, one per line.
    Morphology(GenMorphologyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub pairs: usize,
    /// Fraction of pairs whose second side is swapped with another pair's.
    #[arg(long, default_value_t = 0.0)]
    pub corrupt: f64,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Seed of the concept inventory; shared by data meant to go together.
    #[arg(long, default_value_t = 42)]
    pub vocab_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenSetArgs {
    #[arg(long)]
    pub positives: usize,
    #[arg(long)]
    pub negatives: usize,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 42)]
    pub vocab_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenMorphologyArgs {
    #[arg(long)]
    pub sentences: usize,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct RerunArgs {
    /// Manifest of the run to repeat.
    #[arg(long)]
    pub from: PathBuf,
}

/// Command-line surface of the standalone `morphseg` program.
#[derive(Debug, Parser)]
#[command(
    name = "morphseg",
    version,
    about = "Unsupervised morphological segmentation"
)]
pub struct MorphsegCli {
    #[arg(long, global = true, env = "PARA_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: SegmentCommand,
}

impl From<MorphsegCli> for Cli {
    fn from(m: MorphsegCli) -> Self {
        Cli {
            threads: m.threads,
            manifest: m.manifest,
            command: Command::Segment(m.command),
        }
    }
}

/// Raised when a rerun does not reproduce the recorded digests.
#[derive(Debug)]
pub struct DigestMismatch(pub Vec<String>);

impl std::fmt::Display for DigestMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rerun differs from the manifest: {}", self.0.join(", "))
    }
}

impl std::error::Error for DigestMismatch {}

/// The error and its causes on one line, skipping causes already quoted.
pub fn describe(err: &anyhow::Error) -> String {
    let mut text = err.to_string();
    for cause in err.chain().skip(1) {
        let c = cause.to_string();
        if !text.contains(&c) {
            text.push_str(": ");
            text.push_str(&c);
        }
    }
    text
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<DigestMismatch>().is_some() {
        return EXIT_MISMATCH;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::NonFiniteLoss { .. } | Error::NonFinite(_)) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Output of a finished command.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub manifest: PathBuf,
}

#[derive(Default)]
struct Run {
    inputs: Vec<PathBuf>,
    outputs: Vec<FileDigest>,
    seeds: BTreeMap<String, u64>,
    details: BTreeMap<String, serde_json::Value>,
    stdout: String,
    primary: Option<PathBuf>,
}

impl Run {
    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn output(&mut self, path: &Path) -> Result<()> {
        self.primary.get_or_insert_with(|| path.to_path_buf());
        self.outputs.push(file_digest(path)?);
        Ok(())
    }

    fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_owned(), seed);
    }

    fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(
            key.to_owned(),
            serde_json::to_value(value).expect("serializable detail"),
        );
    }

    fn emit(&mut self, path: Option<&Path>, text: &str) -> Result<()> {
        match path {
            Some(p) => {
                write_text(p, text)?;
                self.output(p)
            }
            None => {
                self.stdout.push_str(text);
                Ok(())
            }
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Segment(SegmentCommand::Train(_)) => "segment train",
        Command::Segment(SegmentCommand::Apply(_)) => "segment apply",
        Command::Sample(_) => "sample",
        Command::Train(_) => "train",
        Command::Eval(EvalCommand::Classify(_)) => "eval classify",
        Command::Eval(EvalCommand::Nn(_)) => "eval nn",
        Command::Eval(EvalCommand::Hist(_)) => "eval hist",
        Command::Eval(EvalCommand::Grades(_)) => "eval grades",
        Command::Eval(EvalCommand::Corr(_)) => "eval corr",
        Command::Generate(GenerateCommand::Corpus(_)) => "generate corpus",
        Command::Generate(GenerateCommand::Labeled(_)) => "generate labeled",
        Command::Generate(GenerateCommand::Annotated(_)) => "generate annotated",
        Command::Generate(GenerateCommand::Morphology(_)) => "generate morphology",
        Command::Rerun(_) => "rerun",
    }
}

/// Flags of the leaf subcommand.
fn command_flags(cmd: &Command) -> serde_json::Result<serde_json::Value> {
    use serde_json::to_value;
    match cmd {
        Command::Segment(SegmentCommand::Train(a)) => to_value(a),
        Command::Segment(SegmentCommand::Apply(a)) => to_value(a),
        Command::Sample(a) => to_value(a),
        Command::Train(a) => to_value(a),
        Command::Eval(EvalCommand::Classify(a)) => to_value(a),
        Command::Eval(EvalCommand::Nn(a)) => to_value(a),
        Command::Eval(EvalCommand::Hist(a)) => to_value(a),
        Command::Eval(EvalCommand::Grades(a)) => to_value(a),
        Command::Eval(EvalCommand::Corr(a)) => to_value(a),
        Command::Generate(GenerateCommand::Corpus(a)) => to_value(a),
        Command::Generate(GenerateCommand::Labeled(a) | GenerateCommand::Annotated(a)) => {
            to_value(a)
        }
        Command::Generate(GenerateCommand::Morphology(a)) => to_value(a),
        Command::Rerun(a) => to_value(a),
    }
}

/// Runs a parsed command line. `program` and `argv` are recorded in the manifest.
pub fn run(cli: Cli, program: &str, argv: &[String]) -> Result<Outcome> {
    if let Command::Rerun(args) = &cli.command {
        return rerun(&args.from, cli.manifest.as_deref());
    }
    let threads = configure_threads(cli.threads)?;
    let start = Instant::now();
    let mut run = Run::default();
    execute(&cli.command, &mut run)?;

    let manifest_path = cli.manifest.clone().unwrap_or_else(|| match &run.primary {
        Some(p) => {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!(
            "{}.manifest.json",
            command_name(&cli.command).replace(' ', "-")
        )),
    });
    let mut inputs = Vec::with_capacity(run.inputs.len());
    for p in &run.inputs {
        inputs.push(file_digest(p)?);
    }
    let manifest = RunManifest {
        program: program.to_owned(),
        command: command_name(&cli.command).to_owned(),
        argv: argv.to_vec(),
        flags: command_flags(&cli.command)?,
        seeds: run.seeds,
        threads,
        cwd: std::env::current_dir()?,
        inputs,
        outputs: run.outputs,
        stdout_sha256: sha256_hex(run.stdout.as_bytes()),
        details: run.details,
        toolkit_version: TOOLKIT_VERSION.to_owned(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.save(&manifest_path)?;
    Ok(Outcome {
        stdout: run.stdout,
        manifest: manifest_path,
    })
}

/// Parses `argv` (without the program name) for `program` and runs it.
pub fn run_args(program: &str, argv: &[String]) -> Result<Outcome> {
    let full = std::iter::once(program.to_owned()).chain(argv.iter().cloned());
    let cli = match program {
        "morphseg" => MorphsegCli::try_parse_from(full)?.into(),
        _ => Cli::try_parse_from(full)?,
    };
    run(cli, program, argv)
}

fn configure_threads(requested: Option<usize>) -> Result<usize> {
    if let Some(n) = requested {
        if n == 0 {
            bail!(Error::InvalidArgument(
                "--threads must be at least 1".into()
            ));
        }
        // The global pool can only be set once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
        if rayon::current_num_threads() != n {
            log::warn!(
                "thread pool already has {} threads",
                rayon::current_num_threads()
            );
        }
    }
    Ok(rayon::current_num_threads())
}

fn rerun(from: &Path, manifest_out: Option<&Path>) -> Result<Outcome> {
    let recorded = RunManifest::load(from)?;
    std::env::set_current_dir(&recorded.cwd).with_context(|| {
        format!(
            "{}: cannot enter recorded directory",
            recorded.cwd.display()
        )
    })?;
    let full = std::iter::once(recorded.program.clone()).chain(recorded.argv.iter().cloned());
    let mut cli: Cli = match recorded.program.as_str() {
        "morphseg" => MorphsegCli::try_parse_from(full)?.into(),
        _ => Cli::try_parse_from(full)?,
    };
    if matches!(cli.command, Command::Rerun(_)) {
        bail!(Error::InvalidArgument(
            "a manifest of a rerun cannot be rerun".into()
        ));
    }
    cli.threads = Some(1);
    let out = manifest_out.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = from.to_path_buf().into_os_string();
        s.push(".rerun.json");
        PathBuf::from(s)
    });
    cli.manifest = Some(out.clone());
    let outcome = run(cli, &recorded.program, &recorded.argv)?;
    let fresh = RunManifest::load(&out)?;

    let mut report = String::new();
    let mut differing = Vec::new();
    for (old, new) in recorded.outputs.iter().zip(&fresh.outputs) {
        let same = old.path == new.path && old.sha256 == new.sha256;
        report.push_str(&format!(
            "{}\t{}\n",
            if same { "same" } else { "DIFFERS" },
            old.path.display()
        ));
        if !same {
            differing.push(old.path.display().to_string());
        }
    }
    if recorded.outputs.len() != fresh.outputs.len() {
        differing.push("number of outputs".into());
    }
    if recorded.stdout_sha256 != fresh.stdout_sha256 {
        differing.push("stdout".into());
    }
    report.push_str(&format!(
        "{}\tstdout\n",
        if recorded.stdout_sha256 == fresh.stdout_sha256 {
            "same"
        } else {
            "DIFFERS"
        }
    ));
    if !differing.is_empty() {
        eprint!("{}", outcome.stdout);
        eprint!("{report}");
        bail!(DigestMismatch(differing));
    }
    Ok(Outcome {
        stdout: outcome.stdout + &report,
        manifest: out,
    })
}

fn execute(cmd: &Command, run: &mut Run) -> Result<()> {
    match cmd {
        Command::Segment(SegmentCommand::Train(a)) => segment_train(a, run),
        Command::Segment(SegmentCommand::Apply(a)) => segment_apply(a, run),
        Command::Sample(a) => sample(a, run),
        Command::Train(a) => train_cmd(a, run),
        Command::Eval(EvalCommand::Classify(a)) => eval_classify(a, run),
        Command::Eval(EvalCommand::Nn(a)) => eval_nn(a, run),
        Command::Eval(EvalCommand::Hist(a)) => eval_hist(a, run),
        Command::Eval(EvalCommand::Grades(a)) => eval_grades(a, run),
        Command::Eval(EvalCommand::Corr(a)) => eval_corr(a, run),
        Command::Generate(g) => generate(g, run),
        Command::Rerun(_) => unreachable!("handled before dispatch"),
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        anyhow!(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Tab-separated fields that carry text rather than a number.
fn text_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split('\t')
        .filter(|f| !f.trim().is_empty() && f.trim().parse::<f64>().is_err())
}

fn segment_train(a: &SegmentTrainArgs, run: &mut Run) -> Result<()> {
    let table = match (&a.input, &a.corpus) {
        (Some(p), _) => {
            run.input(p);
            load_word_counts(p)?
        }
        (None, Some(p)) => {
            run.input(p);
            let text = read_input(p)?;
            let mut table = WordCountTable::new();
            for line in text.lines() {
                for field in text_fields(line) {
                    for w in field.split_whitespace() {
                        table.add(w, 1)?;
                    }
                }
            }
            if table.is_empty() {
                bail!(Error::EmptyInput(p.clone()));
            }
            table
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let config = SegmenterConfig {
        seed: a.seed,
        convergence_threshold: a.threshold,
        count_mode: if a.types {
            CountMode::Types
        } else {
            CountMode::Tokens
        },
        max_epochs: a.max_epochs,
    };
    run.seed("segmenter", a.seed);
    let model = train_segmenter(&table, &config)?;
    save_model(&model, &a.output)?;
    run.output(&a.output)?;
    run.detail("word_types", table.len());
    run.detail("lexicon_size", model.lexicon_size());
    run.detail("cost", model.cost());
    run.detail("epochs", model.trace().len());
    log::info!(
        "{} word types segmented with {} morphs, cost {:.3}",
        table.len(),
        model.lexicon_size(),
        model.cost()
    );
    Ok(())
}

fn segment_apply(a: &SegmentApplyArgs, run: &mut Run) -> Result<()> {
    run.input(&a.model);
    run.input(&a.input);
    let model = load_model(&a.model)?;
    let text = read_input(&a.input)?;
    let mut cache: BTreeMap<String, String> = BTreeMap::new();
    let mut out = String::with_capacity(text.len() + text.len() / 4);
    for line in text.lines() {
        let fields: Vec<String> = line
            .split('\t')
            .map(|f| {
                if f.trim().is_empty() || f.trim().parse::<f64>().is_ok() {
                    return Ok(f.to_owned());
                }
                let mut morphs = Vec::new();
                for w in f.split_whitespace() {
                    if !cache.contains_key(w) {
                        cache.insert(w.to_owned(), segment_word(&model, w)?.join(" "));
                    }
                    morphs.push(cache[w].clone());
                }
                Ok(morphs.join(" "))
            })
            .collect::<Result<_>>()?;
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    write_text(&a.output, &out)?;
    run.output(&a.output)
}

fn sample(a: &SampleArgs, run: &mut Run) -> Result<()> {
    run.input(&a.corpus);
    run.seed("negatives", a.seed);
    let corpus = load_pair_corpus(&a.corpus)?;
    let set = if let Some(n) = a.positives {
        run.detail("mode", "positives");
        sample_training_set(&corpus, n, a.seed)?
    } else if let Some(target) = a.clean_target {
        let curve_path = a.quality_curve.as_ref().expect("clap requires the curve");
        run.input(curve_path);
        let curve = load_quality_curve(curve_path)?;
        let prefix = select_prefix_for_quality(&curve, target)?;
        run.detail("mode", "clean_target");
        run.detail("selected_positives", prefix);
        log::info!("clean fraction {target} allows {prefix} positives");
        let n = usize::try_from(prefix)
            .map_err(|_| anyhow!(Error::InvalidArgument("prefix too large".into())))?;
        sample_training_set(&corpus, n, a.seed)?
    } else if let Some(budget) = a.token_budget {
        run.detail("mode", "token_budget");
        sample_by_token_budget(&corpus, budget, a.seed)?
    } else {
        unreachable!("clap requires a mode")
    };
    run.detail("positives", set.positives());
    run.detail("negatives", set.negatives());
    save_labeled_set(&set, &a.output)?;
    run.output(&a.output)
}

fn train_cmd(a: &TrainArgs, run: &mut Run) -> Result<()> {
    let config = TrainConfig {
        encoder: a.encoder.into(),
        margin: a.margin,
        lr: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        keep_prob: a.keep_prob,
        seed: a.seed,
        dim: a.dim,
        hidden: a.hidden,
        min_count: a.min_count,
        patience: a.patience,
        ..TrainConfig::default()
    };
    config.validate()?;
    run.input(&a.train);
    let data = load_labeled_set(&a.train)?;
    let dev = match &a.dev {
        Some(p) => {
            run.input(p);
            Some(load_annotated_set(p)?)
        }
        None => None,
    };
    run.seed("train", a.seed);
    run.detail("config", &config);
    let (model, log) = train::<f32>(&config, &data, dev.as_ref())?;
    save_checkpoint(&model, &config, &a.output)?;
    run.output(&a.output)?;
    let log_path = a.log.clone().unwrap_or_else(|| {
        let mut s = a.output.clone().into_os_string();
        s.push(".log.csv");
        PathBuf::from(s)
    });
    log.save_csv(&log_path)?;
    run.outputs.push(csv_digest_without(&log_path, "seconds")?);
    run.detail("vocabulary", model.vocab.len());
    run.detail("final_loss", log.final_loss());
    run.detail("best_epoch", log.best_epoch);
    Ok(())
}

fn load_encoder(path: &Path, run: &mut Run) -> Result<EncoderModel<f32>> {
    run.input(path);
    Ok(load_checkpoint(path)?.model)
}

fn eval_classify(a: &ClassifyArgs, run: &mut Run) -> Result<()> {
    let model = load_encoder(&a.model, run)?;
    run.input(&a.dev);
    run.input(&a.test);
    let dev = binarize_annotations(&load_annotated_set(&a.dev)?);
    let test = binarize_annotations(&load_annotated_set(&a.test)?);
    let config = ProbeConfig {
        hidden: a.probe_hidden,
        seed: a.seed,
        ..ProbeConfig::default()
    };
    run.seed("probe", a.seed);
    let (probe, report) = train_probe(&dev, &model, &config)?;
    let accuracy = classify_accuracy(&probe, &test, &model)?;
    let baseline = majority_baseline(&test)?;
    run.detail("probe", &config);
    run.detail("probe_report", &report);
    run.stdout.push_str("encoder\taccuracy\tAP\n");
    run.stdout.push_str(&format!(
        "{}\t{:.4}\t{:.4}\n",
        model.kind(),
        accuracy,
        baseline
    ));
    if let Some(p) = &a.output {
        let json = serde_json::json!({
            "encoder": model.kind(),
            "accuracy": accuracy,
            "majority_baseline": baseline,
            "test_pairs": test.len(),
            "test_positives": test.positives(),
            "probe": config,
            "probe_report": report,
        });
        write_text(p, &(serde_json::to_string_pretty(&json)? + "\n"))?;
        run.output(p)?;
    }
    Ok(())
}

fn load_sentences(path: &Path) -> Result<Vec<Sentence>> {
    let text = read_input(path)?;
    let sentences: Vec<Sentence> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(Sentence::parse)
        .collect::<paraembed::Result<_>>()?;
    if sentences.is_empty() {
        bail!(Error::EmptyInput(path.to_path_buf()));
    }
    Ok(sentences)
}

fn build_index(model: &EncoderModel<f32>, sentences: &[Sentence]) -> Result<EmbeddingIndex> {
    let vectors: Vec<Vec<f32>> = sentences
        .par_iter()
        .map(|s| model.embed(s))
        .collect::<paraembed::Result<_>>()?;
    Ok(EmbeddingIndex::from_vectors(model.dim(), vectors)?)
}

fn embed_query(model: &EncoderModel<f32>, query: &str) -> Result<Vec<f32>> {
    let sentence = Sentence::parse(query)
        .map_err(|_| anyhow!(Error::InvalidArgument("empty query".into())))?;
    Ok(model.embed(&sentence)?)
}

fn eval_nn(a: &NnArgs, run: &mut Run) -> Result<()> {
    let model = load_encoder(&a.model, run)?;
    run.input(&a.index);
    let sentences = load_sentences(&a.index)?;
    let index = build_index(&model, &sentences)?;
    let top = topk_similar(&index, &embed_query(&model, &a.query)?, a.k)?;
    let rows: Vec<(f64, &str)> = top
        .iter()
        .map(|&(id, sim)| (sim, sentences[id].raw()))
        .collect();
    run.emit(a.output.as_deref(), &topk_tsv(&rows))
}

fn eval_hist(a: &HistArgs, run: &mut Run) -> Result<()> {
    let model = load_encoder(&a.model, run)?;
    run.input(&a.index);
    let sentences = load_sentences(&a.index)?;
    let index = build_index(&model, &sentences)?;
    let hist = index.histogram(&embed_query(&model, &a.query)?, a.bins)?;
    run.detail("index_size", index.len());
    run.emit(a.output.as_deref(), &histogram_csv(&hist))
}

fn eval_grades(a: &GradesArgs, run: &mut Run) -> Result<()> {
    let model = load_encoder(&a.model, run)?;
    run.input(&a.dev);
    let dev = load_annotated_set(&a.dev)?;
    let stats = grade_similarity_stats(&dev, &model)?;
    run.detail("test", "welch two-sided, 0.01 level");
    run.emit(a.output.as_deref(), &grade_stats_csv(&stats))
}

fn eval_corr(a: &CorrArgs, run: &mut Run) -> Result<()> {
    let model = load_encoder(&a.model, run)?;
    run.input(&a.input);
    let set = load_annotated_set(&a.input)?;
    let mut sims = Vec::with_capacity(set.len());
    let mut grades = Vec::with_capacity(set.len());
    for p in &set.pairs {
        let (u, v) = (model.embed(&p.a)?, model.embed(&p.b)?);
        sims.push(1.0 - cosine_distance(&u, &v));
        grades.push(p.grade);
    }
    let r = pearson_r(&sims, &grades)?;
    let rho = spearman_rho(&sims, &grades)?;
    run.emit(
        a.output.as_deref(),
        &format!(
            "pairs,pearson_r,spearman_rho\n{},{},{}\n",
            set.len(),
            r,
            rho
        ),
    )
}

fn generate(g: &GenerateCommand, run: &mut Run) -> Result<()> {
    match g {
        GenerateCommand::Corpus(a) => {
            run.seed("vocabulary", a.vocab_seed);
            run.seed("pairs", a.seed);
            let mut gen = generator(a.vocab_seed, a.seed)?;
            let mut corpus = gen.ranked_corpus(a.pairs)?;
            if a.corrupt > 0.0 {
                corpus = corrupt_positives(&corpus, a.corrupt, a.seed.wrapping_add(1))?;
            }
            let mut text = String::new();
            for p in &corpus.pairs {
                text.push_str(&format!(
                    "{}\t{}\t{}\n",
                    p.a.text(),
                    p.b.text(),
                    p.rank_score.expect("generated pairs are scored")
                ));
            }
            write_text(&a.output, &text)?;
            run.output(&a.output)
        }
        GenerateCommand::Labeled(a) => {
            run.seed("vocabulary", a.vocab_seed);
            run.seed("pairs", a.seed);
            let set = generator(a.vocab_seed, a.seed)?.labeled_set(a.positives, a.negatives);
            save_labeled_set(&set, &a.output)?;
            run.output(&a.output)
        }
        GenerateCommand::Annotated(a) => {
            run.seed("vocabulary", a.vocab_seed);
            run.seed("pairs", a.seed);
            let set = generator(a.vocab_seed, a.seed)?.annotated_set(a.positives, a.negatives);
            let mut text = String::new();
            for p in &set.pairs {
                text.push_str(&format!("{}\t{}\t{}\n", p.a.text(), p.b.text(), p.grade));
            }
            write_text(&a.output, &text)?;
            run.output(&a.output)
        }
        GenerateCommand::Morphology(a) => {
            run.seed("sentences", a.seed);
            let sentences =
                compositional_corpus(&MorphologyConfig::default(), a.sentences, a.seed)?;
            let mut text = String::new();
            for s in &sentences {
                text.push_str(&s.text());
                text.push('\n');
            }
            write_text(&a.output, &text)?;
            run.output(&a.output)
        }
    }
}

/// Generator whose concept inventory comes from `vocab_seed` and whose
/// draws come from `seed`.
fn generator(vocab_seed: u64, seed: u64) -> Result<ParaphraseGenerator> {
    let mut gen = ParaphraseGenerator::new(ParaphraseConfig::default(), vocab_seed)?;
    gen.reseed(seed);
    Ok(gen)
}
