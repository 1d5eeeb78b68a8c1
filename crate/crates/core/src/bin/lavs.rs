//! Command-line front end for the `lavs` library.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{debug, info};
use rayon::prelude::*;
use serde::Deserialize;

use lavs::corpus::{distribution, ingest_reader, usage_from_stats, CorpusStats, UnkPolicy};
use lavs::divergence::{pairwise_kl, KlMatrix};
use lavs::eval::{
    correlate_kl_otr, deviation_distribution, otr_matrix, tier_aggregate, DetectionTable,
    Orientation, TierSpec,
};
use lavs::mask::{build_mask, mask_report};
use lavs::retag::{detag_stream, retag_stream, RetagMap};
use lavs::select::{apply_splits, select_splits};
use lavs::vocab::{scan_tag_codes, split_all, Languages, Vocabulary};
use lavs::{LavsError, Result};

#[derive(Parser, Debug)]
#[command(name = "lavs", version, about = "Language-aware vocabulary sharing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Comma-separated language codes; fixes language order.
    #[arg(long, global = true, value_delimiter = ',')]
    langs: Vec<String>,
    /// Corpus file for a language, as `<lang>=<path>`; repeatable.
    #[arg(long, global = true, value_name = "LANG=PATH")]
    corpus: Vec<String>,
    /// Vocabulary file (plain text, or JSON when the name ends in .json).
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    /// Number of language-specific entries to add.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Unknown-token policy: strict or drop.
    #[arg(long, global = true)]
    unk: Option<String>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// KL orientation paired with OTR(src->tgt): t2s or s2t.
    #[arg(long, global = true)]
    orientation: Option<String>,
    /// Minimum count (exclusive) for a token to enter a mask or usage set.
    #[arg(long, global = true)]
    mask_threshold: Option<u64>,
    /// JSON config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count tokens per language and export stats JSON.
    Stats,
    /// Pairwise KL divergence matrix of the corpora.
    Kl,
    /// Add `--budget` language-specific entries to the vocabulary.
    Lavs,
    /// Split every token used by two or more languages.
    SplitAll,
    /// Rewrite a token stream with a language's specific entries.
    Retag {
        #[arg(long)]
        lang: String,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Strip language tags from a token stream.
    Detag {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-language masks for constrained decoding.
    McdMask {
        /// Comma-separated control tokens that are always allowed.
        #[arg(long, value_delimiter = ',')]
        controls: Vec<String>,
    },
    /// Off-target rates from detected output languages.
    Otr {
        #[arg(long)]
        detections: PathBuf,
        /// Pivot language; directions touching it are supervised.
        #[arg(long)]
        pivot: Option<String>,
        /// `code=tier,...`, or `wmt10` for the ten-language grouping.
        #[arg(long)]
        tiers: Option<String>,
    },
    /// Per-source Pearson correlation between KL divergence and OTR.
    Correlate {
        #[arg(long)]
        detections: PathBuf,
        /// KL matrix JSON written by `lavs kl`.
        #[arg(long)]
        kl: PathBuf,
        #[arg(long)]
        pivot: Option<String>,
    },
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    langs: Option<Vec<String>>,
    corpus: Option<BTreeMap<String, PathBuf>>,
    vocab: Option<PathBuf>,
    budget: Option<usize>,
    unk: Option<String>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    orientation: Option<String>,
    mask_threshold: Option<u64>,
}

/// Flags merged over the optional config file.
#[derive(Debug)]
struct RunConfig {
    langs: Vec<String>,
    corpus: Vec<(String, PathBuf)>,
    vocab: Option<PathBuf>,
    budget: usize,
    unk: UnkPolicy,
    threads: Option<usize>,
    out: PathBuf,
    orientation: Orientation,
    mask_threshold: u64,
}

impl RunConfig {
    fn resolve(cli: &Cli) -> Result<Self> {
        let file: FileConfig = match &cli.config {
            Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
                .map_err(|e| LavsError::ConfigInvalid(format!("{}: {e}", path.display())))?,
            None => FileConfig::default(),
        };
        let corpus = if cli.corpus.is_empty() {
            file.corpus.unwrap_or_default().into_iter().collect()
        } else {
            cli.corpus
                .iter()
                .map(|spec| {
                    spec.split_once('=')
                        .map(|(l, p)| (l.to_string(), PathBuf::from(p)))
                        .ok_or_else(|| {
                            LavsError::ConfigInvalid(format!("--corpus expects LANG=PATH, got {spec:?}"))
                        })
                })
                .collect::<Result<Vec<_>>>()?
        };
        let mut langs = if cli.langs.is_empty() {
            file.langs.unwrap_or_default()
        } else {
            cli.langs.clone()
        };
        if langs.is_empty() {
            langs = corpus.iter().map(|(l, _)| l.clone()).collect();
        }
        let unk = cli.unk.clone().or(file.unk);
        let orientation = cli.orientation.clone().or(file.orientation);
        let threads = cli.threads.or(file.threads);
        if threads == Some(0) {
            return Err(LavsError::ConfigInvalid("--threads must be at least 1".into()));
        }
        Ok(RunConfig {
            langs,
            corpus,
            vocab: cli.vocab.clone().or(file.vocab),
            budget: cli.budget.or(file.budget).unwrap_or(0),
            unk: unk.as_deref().map(str::parse).transpose()?.unwrap_or_default(),
            threads,
            out: cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            orientation: orientation
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or_default(),
            mask_threshold: cli.mask_threshold.or(file.mask_threshold).unwrap_or(0),
        })
    }

    fn languages(&self) -> Result<Languages> {
        Languages::new(&self.langs)
    }

    fn vocab_path(&self) -> Result<&Path> {
        self.vocab
            .as_deref()
            .ok_or_else(|| LavsError::ConfigInvalid("--vocab is required".into()))
    }

    fn load_vocab(&self, langs: &Languages) -> Result<Vocabulary> {
        let path = self.vocab_path()?;
        let vocab = Vocabulary::load(path, langs)?;
        info!("loaded {} entries from {}", vocab.len(), path.display());
        Ok(vocab)
    }

    /// Counts every listed language's corpus, in language order.
    fn ingest_all(&self, langs: &Languages, vocab: &Vocabulary) -> Result<Vec<CorpusStats>> {
        if langs.is_empty() {
            return Err(LavsError::ConfigInvalid("no languages given".into()));
        }
        let jobs = langs
            .iter()
            .map(|lang| {
                let path = self
                    .corpus
                    .iter()
                    .find(|(l, _)| l == lang.code())
                    .map(|(_, p)| p.clone())
                    .ok_or_else(|| {
                        LavsError::ConfigInvalid(format!("no --corpus given for {}", lang.code()))
                    })?;
                Ok((lang.clone(), path))
            })
            .collect::<Result<Vec<_>>>()?;
        for (l, _) in &self.corpus {
            langs.require(l)?;
        }
        let stats = jobs
            .into_par_iter()
            .map(|(lang, path)| {
                let reader = BufReader::new(File::open(&path)?);
                let stats = ingest_reader(reader, &lang, vocab, self.unk)?;
                info!(
                    "{}: {} lines, {} tokens, {} dropped",
                    lang.code(),
                    stats.lines,
                    stats.total,
                    stats.dropped
                );
                Ok(stats)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(stats)
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

fn write_out(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, body)?;
    debug!("wrote {}", path.display());
    Ok(())
}

fn vocab_file_name(input: &Path) -> &'static str {
    match input.extension() {
        Some(e) if e.eq_ignore_ascii_case("json") => "vocab.json",
        _ => "vocab.txt",
    }
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn io::BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p)?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LavsError::ConfigInvalid(e.to_string()))?;
    }
    debug!("{cfg:?}");
    match &cli.command {
        Command::Stats => {
            let langs = cfg.languages()?;
            let vocab = cfg.load_vocab(&langs)?;
            for stats in cfg.ingest_all(&langs, &vocab)? {
                let path = cfg.out_file(&format!("stats.{}.json", stats.lang.code()))?;
                write_out(&path, stats.to_json(&vocab)?)?;
            }
        }
        Command::Kl => {
            let langs = cfg.languages()?;
            let vocab = cfg.load_vocab(&langs)?;
            let dists = cfg
                .ingest_all(&langs, &vocab)?
                .iter()
                .map(|s| distribution(s, &vocab))
                .collect::<Result<Vec<_>>>()?;
            let matrix = pairwise_kl(&dists)?;
            write_out(&cfg.out_file("kl.csv")?, matrix.to_csv())?;
            write_out(&cfg.out_file("kl.json")?, matrix.to_json())?;
        }
        Command::Lavs => {
            let langs = cfg.languages()?;
            let vocab = cfg.load_vocab(&langs)?;
            let stats = cfg.ingest_all(&langs, &vocab)?;
            let dists = stats
                .iter()
                .map(|s| distribution(s, &vocab))
                .collect::<Result<Vec<_>>>()?;
            let plan = select_splits(&vocab, &dists, cfg.budget)?;
            let out = apply_splits(&vocab, &plan)?;
            info!(
                "{} shared + {} specific = {} entries",
                out.base_size(),
                out.specific_size(),
                out.len()
            );
            out.save(&cfg.out_file(vocab_file_name(cfg.vocab_path()?))?)?;
            write_out(&cfg.out_file("plan.json")?, plan.to_json(&vocab)?)?;
        }
        Command::SplitAll => {
            let langs = cfg.languages()?;
            let vocab = cfg.load_vocab(&langs)?;
            let stats = cfg.ingest_all(&langs, &vocab)?;
            let usage = usage_from_stats(&vocab, &stats, cfg.mask_threshold)?;
            let out = split_all(&vocab, &usage)?;
            info!("{} -> {} entries", vocab.len(), out.len());
            out.save(&cfg.out_file(vocab_file_name(cfg.vocab_path()?))?)?;
        }
        Command::Retag {
            lang,
            input,
            output,
        } => {
            let mut langs = cfg.languages()?;
            let path = cfg.vocab_path()?;
            if langs.is_empty() {
                let mut text = String::new();
                File::open(path)?.read_to_string(&mut text)?;
                for code in scan_tag_codes(&text) {
                    langs.push(&code)?;
                }
            }
            let lang = match langs.get(lang) {
                Some(l) => l.clone(),
                None => langs.push(lang)?,
            };
            let vocab = cfg.load_vocab(&langs)?;
            let map = RetagMap::new(&vocab);
            let n = retag_stream(
                open_input(input.as_deref())?,
                open_output(output.as_deref())?,
                &lang,
                &map,
                cfg.unk,
            )?;
            info!("retagged {n} lines for {}", lang.code());
        }
        Command::Detag { input, output } => {
            let n = detag_stream(open_input(input.as_deref())?, open_output(output.as_deref())?)?;
            info!("detagged {n} lines");
        }
        Command::McdMask { controls } => {
            let langs = cfg.languages()?;
            let vocab = cfg.load_vocab(&langs)?;
            let map = RetagMap::new(&vocab);
            let controls: Vec<&str> = controls.iter().map(String::as_str).collect();
            let mut masks = Vec::new();
            for lang in langs.iter() {
                let path = cfg
                    .corpus
                    .iter()
                    .find(|(l, _)| l == lang.code())
                    .map(|(_, p)| p)
                    .ok_or_else(|| {
                        LavsError::ConfigInvalid(format!("no --corpus given for {}", lang.code()))
                    })?;
                // Count the corpus as retagged for this language.
                let mut tagged = Vec::new();
                retag_stream(BufReader::new(File::open(path)?), &mut tagged, lang, &map, cfg.unk)?;
                let stats = ingest_reader(&tagged[..], lang, &vocab, UnkPolicy::Drop)?;
                let mask = build_mask(lang, &stats, &vocab, &controls, cfg.mask_threshold)?;
                write_out(
                    &cfg.out_file(&format!("mask.{}.txt", lang.code()))?,
                    mask.to_text(&vocab)?,
                )?;
                write_out(
                    &cfg.out_file(&format!("mask.{}.bin", lang.code()))?,
                    mask.to_binary(),
                )?;
                masks.push(mask);
            }
            let mut report = String::from("lang,size\n");
            for (lang, size) in mask_report(&masks) {
                report.push_str(&format!("{},{}\n", lang.code(), size));
            }
            write_out(&cfg.out_file("mask_sizes.csv")?, report)?;
        }
        Command::Otr {
            detections,
            pivot,
            tiers,
        } => {
            let table = DetectionTable::parse_tsv(&std::fs::read_to_string(detections)?, &cfg.langs)?;
            let matrix = otr_matrix(&table.records, pivot.as_deref());
            write_out(&cfg.out_file("otr.csv")?, matrix.to_csv())?;
            write_out(&cfg.out_file("otr.json")?, matrix.to_json())?;
            let deviation = deviation_distribution(&table.records);
            write_out(
                &cfg.out_file("deviation.json")?,
                serde_json::to_string_pretty(&deviation)? + "\n",
            )?;
            if let Some(spec) = tiers {
                let spec = if spec == "wmt10" {
                    TierSpec::wmt10()
                } else {
                    TierSpec::parse(spec)?
                };
                let means = tier_aggregate(&matrix, &spec)?;
                write_out(
                    &cfg.out_file("tiers.json")?,
                    serde_json::to_string_pretty(&means)? + "\n",
                )?;
            }
        }
        Command::Correlate {
            detections,
            kl,
            pivot,
        } => {
            let table = DetectionTable::parse_tsv(&std::fs::read_to_string(detections)?, &cfg.langs)?;
            let matrix = otr_matrix(&table.records, pivot.as_deref());
            let kl = KlMatrix::from_json(&std::fs::read_to_string(kl)?)?;
            let report = correlate_kl_otr(&matrix, &kl, cfg.orientation);
            write_out(&cfg.out_file("correlation.json")?, report.to_json())?;
            write_out(&cfg.out_file("scatter.csv")?, report.scatter_csv())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAVS_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
