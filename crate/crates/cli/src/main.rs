use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fundscape::corpus::save_corpus;
use fundscape::country::CountryCode;
use fundscape::funders::load_funder_registry;
use fundscape::lexicon::{read_lexicon, MatchPolicy};
use fundscape::pipeline::{
    execute, match_stage, report_from_dir, run_pipeline, to_jsonl, validate_inputs, Inputs, Period, PipelineConfig,
    PipelineError,
};
use fundscape::synth::{generate_corpus, SynthConfig};

/// Rare-disease publication retrieval, funding classification and citation
/// indicators.
#[derive(Parser)]
#[command(name = "fundscape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check configuration and inputs without running anything.
    Validate(#[command(flatten)] Common),
    /// Write matched publications as JSON lines.
    Match {
        #[command(flatten)]
        common: Common,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-country funding classifications as JSON lines.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the P/MNCS indicator table as CSV.
    Indicators {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage and write all artifacts into the output directory.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild plot data from a previous run directory.
    Report {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a deterministic synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    PreferredOnly,
    PreferredPlusVettedSynonyms,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    funders: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    whitelist: Option<PathBuf>,
    #[arg(long)]
    start_year: Option<i32>,
    #[arg(long)]
    end_year: Option<i32>,
    /// Comma-separated ISO country codes.
    #[arg(long, value_delimiter = ',')]
    focal: Option<Vec<CountryCode>>,
    #[arg(long)]
    census_year: Option<i32>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    match_policy: Option<PolicyArg>,
    /// Count pan-European non-EC funders as European.
    #[arg(long)]
    embo_as_european: bool,
    /// Allow token-subset funder alias matching.
    #[arg(long)]
    token_subset: bool,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                *slot = v.clone();
            }
        };
        set(&mut c.corpus, &self.corpus);
        set(&mut c.lexicon, &self.lexicon);
        set(&mut c.funders, &self.funders);
        set(&mut c.reference_corpus, &self.reference);
        set(&mut c.category_whitelist, &self.whitelist);
        c.period = Period {
            start_year: self.start_year.unwrap_or(c.period.start_year),
            end_year: self.end_year.unwrap_or(c.period.end_year),
        };
        if let Some(f) = &self.focal {
            c.focal_countries = f.clone();
        }
        c.census_year = self.census_year.or(c.census_year);
        c.workers = self.workers.unwrap_or(c.workers);
        if let Some(p) = self.match_policy {
            c.match_policy = match p {
                PolicyArg::PreferredOnly => MatchPolicy::PreferredOnly,
                PolicyArg::PreferredPlusVettedSynonyms => MatchPolicy::PreferredPlusVettedSynonyms,
            };
        }
        c.embo_as_european |= self.embo_as_european;
        c.token_subset_matching |= self.token_subset;
        Ok(c)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    records: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Lexicon whose preferred names are planted in matched records.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Registry whose names and aliases fill the acknowledgements.
    #[arg(long)]
    funders: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let stage = e.stage();
        let err = anyhow::Error::new(e).context(format!("stage={stage}"));
        if err.downcast_ref::<PipelineError>().is_some_and(PipelineError::is_validation) {
            Failure::Validation(err)
        } else {
            Failure::Runtime(err)
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn emit(out: Option<&Path>, data: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, data).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(data.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let mut cfg = SynthConfig {
        seed: args.seed,
        records: args.records,
        ..SynthConfig::default()
    };
    if let Some(path) = &args.lexicon {
        let lexicon = read_lexicon(path).with_context(|| format!("{}", path.display()))?;
        cfg.disease_terms = lexicon.entries.iter().map(|e| e.preferred.surface.clone()).collect();
    }
    if let Some(path) = &args.funders {
        let registry = load_funder_registry(path).with_context(|| format!("{}", path.display()))?;
        cfg.funder_names = registry
            .entries()
            .iter()
            .flat_map(|e| std::iter::once(e.canonical_name.clone()).chain(e.aliases.iter().cloned()))
            .collect();
    }
    let corpus = generate_corpus(&cfg);
    save_corpus(&corpus, &args.out)?;
    log::info!("stage=synth records={} out={}", corpus.records.len(), args.out.display());
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate(common) => {
            let config = common.config()?;
            let diagnostics = validate_inputs(&config);
            for d in &diagnostics {
                eprintln!("{d}");
            }
            if diagnostics.is_empty() {
                println!("ok");
                Ok(())
            } else {
                Err(Failure::Validation(anyhow::anyhow!("{} problem(s) found", diagnostics.len())))
            }
        }
        Command::Match { common, out } => {
            let config = common.config()?;
            let inputs = Inputs::load(&config, true, false)?;
            let (lines, _) = match_stage(&config, &inputs)?;
            emit(out.as_deref(), &to_jsonl(&lines))?;
            Ok(())
        }
        Command::Classify { common, out } => {
            let config = common.config()?;
            let inputs = Inputs::load(&config, config.lexicon.is_some(), true)?;
            let artifacts = execute(&config, &inputs)?;
            emit(out.as_deref(), &artifacts.classifications_jsonl())?;
            Ok(())
        }
        Command::Indicators { common, out } => {
            let config = common.config()?;
            let inputs = Inputs::load(&config, config.lexicon.is_some(), true)?;
            let artifacts = execute(&config, &inputs)?;
            emit(out.as_deref(), &artifacts.indicators_csv)?;
            Ok(())
        }
        Command::Run { common, out } => {
            let mut config = common.config()?;
            if out.is_some() {
                config.output_dir = out;
            }
            let summary = run_pipeline(&config)?;
            log::info!(
                "stage=done loaded={} filtered={} matched={} classified={}",
                summary.counts.loaded,
                summary.counts.filtered,
                summary.counts.matched,
                summary.counts.classified
            );
            Ok(())
        }
        Command::Report { from, out } => {
            let plot = report_from_dir(&from)?;
            emit(out.as_deref(), &plot)?;
            Ok(())
        }
        Command::Synth(args) => Ok(synth(&args)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
