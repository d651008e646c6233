use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use fragc::backend::{mock_ensemble, resolve_backend, Classifier, MODEL_DIR_ENV};
use fragc::counter::{CountMode, CounterConfig, DEFAULT_THRESHOLD};
use fragc::dataset::{parse_ratios, split_dataset, DatasetManifest, DatasetWriter};
use fragc::ingest::{Decoder, FrameSourceSpec, DECODER_ENV};
use fragc::metrics::{evaluate_groups, read_pairs, write_accuracy_plot};
use fragc::pipeline::Analyzer;
use fragc::report::{to_json, CsvSink};
use fragc::service::{self, AppState, ServiceConfig, DEFAULT_PORT, DEFAULT_UPLOAD_LIMIT, PORT_ENV};
use fragc::{Error, Result};

/// Backbones loaded when no `--backend` is given.
const DEFAULT_BACKENDS: [&str; 5] = ["vgg16", "xception", "inception_v3", "inception_resnet_v2", "resnet152_v2"];

#[derive(Parser)]
#[command(name = "fragc", version, about = "Kill/death/smoke event counting for gameplay video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a video file or frame directory.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Per-frame CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Full JSON report output.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Analyze, then sort gated frames into per-class folders.
    Collect {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Stratified train/test/validation split of a dataset manifest.
    Split {
        manifest: PathBuf,
        #[arg(long, default_value = "0.7,0.15,0.15")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a CSV of `true_label,predicted_label[,model]` pairs.
    Metrics {
        pairs: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-model accuracy bar chart (.svg or .png).
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = DEFAULT_UPLOAD_LIMIT)]
        upload_limit: usize,
        /// Where `/collect` writes datasets.
        #[arg(long)]
        collect_root: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// Backend: `mock`, a model name in the model dir, or a manifest path.
    /// Repeat for an ensemble.
    #[arg(long = "backend")]
    backends: Vec<String>,
    /// Use five mock backends; no model files needed.
    #[arg(long)]
    demo: bool,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "literal")]
    count_mode: String,
    /// Frame rate of a frame directory input.
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, env = DECODER_ENV)]
    decoder: Option<PathBuf>,
    #[arg(long, env = MODEL_DIR_ENV)]
    model_dir: Option<PathBuf>,
}

impl PipelineArgs {
    fn counter(&self) -> Result<CounterConfig> {
        CounterConfig::new(self.threshold, self.count_mode.parse::<CountMode>()?)
    }

    fn backends(&self) -> Result<Vec<Arc<dyn Classifier>>> {
        if self.demo {
            return Ok(mock_ensemble(5));
        }
        let names: Vec<&str> = if self.backends.is_empty() {
            DEFAULT_BACKENDS.to_vec()
        } else {
            self.backends.iter().map(String::as_str).collect()
        };
        names
            .into_iter()
            .map(|n| resolve_backend(n, self.model_dir.as_deref()))
            .collect()
    }

    fn decoder(&self) -> Decoder {
        Decoder::resolve(self.decoder.as_deref())
    }

    fn analyzer(&self) -> Result<Analyzer> {
        Ok(Analyzer::new(self.backends()?, self.counter()?)?.with_decoder(self.decoder()))
    }

    fn source(&self, input: &Path) -> Result<FrameSourceSpec> {
        FrameSourceSpec::detect(input, self.fps)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            input,
            pipeline,
            csv,
            json,
        } => {
            let analyzer = pipeline.analyzer()?;
            let source = pipeline.source(&input)?;
            let mut sink = csv.as_deref().map(create).transpose()?.map(CsvSink::new).transpose()?;
            let report = analyzer.analyze_streaming(&source, |row| match sink.as_mut() {
                Some(s) => s.write_row(row),
                None => Ok(()),
            })?;
            if let Some(path) = json {
                std::fs::write(&path, to_json(&report)?).map_err(|e| Error::io(&path, e))?;
            }
            println!("{}", serde_json::to_string(&report.counts)?);
        }
        Command::Collect { input, out, pipeline } => {
            let analyzer = pipeline.analyzer()?;
            let source = pipeline.source(&input)?;
            let mut writer = DatasetWriter::create(&out)?;
            let report = analyzer.analyze_streaming(&source, |row| writer.add(row.frame, row.prediction).map(|_| ()))?;
            let manifest = writer.finish(&report.input_digest)?;
            println!(
                "collected {} frames into {} ({})",
                manifest.entries.len(),
                out.display(),
                report.counts
            );
        }
        Command::Split {
            manifest,
            ratios,
            seed,
            out,
        } => {
            let loaded = DatasetManifest::load(&manifest)?;
            let split = split_dataset(&loaded, parse_ratios(&ratios)?, seed)?;
            let dir = out
                .or_else(|| manifest.parent().map(Path::to_path_buf))
                .unwrap_or_default();
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (name, part) in [("train", &split.train), ("test", &split.test), ("val", &split.validation)] {
                let path = dir.join(format!("{name}.json"));
                part.save(&path)?;
                println!("{name}: {} entries -> {}", part.entries.len(), path.display());
            }
        }
        Command::Metrics { pairs, json, plot } => {
            let file = File::open(&pairs).map_err(|e| Error::io(&pairs, e))?;
            let evals = evaluate_groups(&read_pairs(file)?)?;
            for e in &evals {
                println!("{}", e.report.render_table(&e.model));
                println!("{}", e.report.render_matrix());
            }
            let body = serde_json::to_string_pretty(&evals)?;
            match json {
                Some(path) => std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?,
                None => println!("{body}"),
            }
            if let Some(path) = plot {
                write_accuracy_plot(&evals, &path)?;
            }
        }
        Command::Serve {
            port,
            host,
            upload_limit,
            collect_root,
            pipeline,
        } => {
            let mut config = ServiceConfig {
                upload_limit,
                counter: pipeline.counter()?,
                decoder: pipeline.decoder(),
                ..ServiceConfig::default()
            };
            if let Some(root) = collect_root {
                config.collect_root = root;
            }
            let state = AppState::new(pipeline.backends()?, config)?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Error::invalid(format!("bad listen address: {e}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
            rt.block_on(service::serve(state, addr)).map_err(|e| Error::io("<listener>", e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
