use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use beliefnav::datagen::{read_dataset, write_dataset};
use beliefnav::trainer::{benchmark_composite, split_indices, train_with_progress};
use beliefnav::{
    build_adjacency, evaluate, gen_composite, generate_dataset, ground, plan_overlay_pgm,
    CompositeQuery, GenConfig, Lexicon, ModelFile, Search,
};
use beliefnav_app::config::{AppConfig, PORT_ENV};
use beliefnav_app::server::{serve, AppState};
use beliefnav_app::{load_map_or_office, load_model, read_text, AppError};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "beliefnav", version, about = "Ground destination descriptions on indoor maps")]
struct Cli {
    /// TOML file with word lists, training settings and hyperparameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic single-update training samples.
    GenData {
        /// Map JSON; the bundled office map when omitted.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Store grids inline instead of as PGM files.
        #[arg(long)]
        inline: bool,
    },
    /// Generate composite benchmark queries with known goal areas.
    GenQueries {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
        steps: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and report holdout metrics.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Split::Holdout)]
        split: Split,
    },
    /// Ground one instruction and print the ranked areas.
    Ground {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        text: String,
        /// Write one PGM per step into this directory.
        #[arg(long)]
        heatmaps: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long)]
        json: bool,
    },
    /// Top-1/top-5 accuracy on composite queries.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        queries: PathBuf,
    },
    /// Area-level plan between two areas.
    Plan {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        start: String,
        #[arg(long)]
        goal: String,
        #[arg(long, value_enum, default_value_t = SearchArg::Dfs)]
        search: SearchArg,
        /// Adjacency tolerance in map units; one grid cell by default.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Write the plan as an 8-bit PGM overlay.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, env = PORT_ENV)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Holdout,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    Dfs,
    Bfs,
}

impl From<SearchArg> for Search {
    fn from(s: SearchArg) -> Self {
        match s {
            SearchArg::Dfs => Search::Dfs,
            SearchArg::Bfs => Search::Bfs,
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> AppError + '_ {
    move |e| AppError::Input(format!("{context}: {e}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(input("create directory"))?;
    }
    fs::write(path, bytes).map_err(|e| AppError::Input(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), AppError> {
    let config = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenData { map, k, seed, out, inline } => {
            let map = load_map_or_office(map.as_deref())?;
            let gen = GenConfig { k, seed, proximity_scale: config.train.hyper.proximity_scale, ..GenConfig::default() };
            let data = generate_dataset(&map, &config.language.dictionary, &gen).map_err(input("gen-data"))?;
            write_dataset(&data, &out, inline).map_err(input("write dataset"))?;
            println!(
                "{} samples from {} areas (k = {k}, seed = {seed}) written to {}",
                data.samples.len(),
                map.area_count(),
                out.display()
            );
            for note in &data.skipped {
                println!("{note}");
            }
        }
        Command::GenQueries { map, steps, n, seed, out } => {
            let map = load_map_or_office(map.as_deref())?;
            let mut all: Vec<CompositeQuery> = Vec::new();
            for s in steps {
                all.extend(gen_composite(&map, seed, n, s, config.train.hyper.proximity_scale).map_err(input("gen-queries"))?);
            }
            let text = serde_json::to_string_pretty(&all).map_err(input("serialize"))?;
            write_file(&out, text.as_bytes())?;
            println!("{} queries written to {}", all.len(), out.display());
        }
        Command::Train { data, map, out, epochs, seed } => {
            let map = load_map_or_office(map.as_deref())?;
            let dataset = read_dataset(&data).map_err(input("read dataset"))?;
            let mut train_config = config.train.clone();
            if let Some(e) = epochs {
                train_config.epochs = e;
            }
            if let Some(s) = seed {
                train_config.seed = s;
            }
            let lexicon = Lexicon::build(&map, &config.language, train_config.hyper.match_width, train_config.seed);
            let t0 = Instant::now();
            let outcome = train_with_progress(&dataset.samples, &map, lexicon, &train_config, |e, loss| {
                println!("epoch {:>3}  loss {loss:.4}  ({:.1?})", e + 1, t0.elapsed())
            })
            .map_err(input("train"))?;
            ModelFile::new(outcome.params, train_config)
                .save(&out)
                .map_err(input("save model"))?;
            println!("holdout ({} samples)", outcome.report.samples);
            print!("{}", outcome.report);
            println!("model written to {}", out.display());
        }
        Command::Eval { model, data, map, split } => {
            let map = load_map_or_office(map.as_deref())?;
            let file = load_model(&model)?;
            let dataset = read_dataset(&data).map_err(input("read dataset"))?;
            let samples = match split {
                Split::All => dataset.samples,
                Split::Holdout => {
                    let (_, hold) = split_indices(dataset.samples.len(), file.config.holdout, file.config.seed);
                    hold.into_iter().map(|i| dataset.samples[i].clone()).collect()
                }
            };
            let report = evaluate(&file.params, &samples, &map).map_err(input("eval"))?;
            print!("{report}");
        }
        Command::Ground { model, map, text, heatmaps, top, json } => {
            let map = load_map_or_office(map.as_deref())?;
            let file = load_model(&model)?;
            let trace = ground(&text, &map, &file.params)?;
            if let Some(dir) = &heatmaps {
                for (k, s) in trace.steps.iter().enumerate() {
                    write_file(&dir.join(format!("step_{k}.pgm")), &s.posterior.to_pgm())?;
                }
            }
            if json {
                let steps: Vec<_> = trace
                    .steps
                    .iter()
                    .map(|s| serde_json::json!({ "modifier": s.modifier, "update": s.update }))
                    .collect();
                let ranked: Vec<_> = trace.ranked.iter().take(top).collect();
                println!("{}", serde_json::json!({ "steps": steps, "ranked": ranked }));
            } else {
                for (k, s) in trace.steps.iter().enumerate() {
                    println!("step {k}: {:<11} {:?}", s.update.name(), s.modifier);
                }
                for (rank, r) in trace.ranked.iter().take(top).enumerate() {
                    println!("{:>2}. {:<8} {:.4}", rank + 1, r.id, r.weight);
                }
            }
            if trace.ranked.first().is_none_or(|r| r.weight <= 0.0) {
                return Err(AppError::Degenerate("final belief holds no area mass".into()));
            }
        }
        Command::Bench { model, map, queries } => {
            let map = load_map_or_office(map.as_deref())?;
            let file = load_model(&model)?;
            let queries: Vec<CompositeQuery> =
                serde_json::from_str(&read_text(&queries)?).map_err(input("queries"))?;
            let report = benchmark_composite(&queries, &map, &file.params);
            print!("{report}");
            for (q, e) in &report.failures {
                println!("failed: {q:?}: {e}");
            }
        }
        Command::Plan { map, start, goal, search, tolerance, overlay } => {
            let map = load_map_or_office(map.as_deref())?;
            let tol = tolerance.or(config.server.gap_tolerance).unwrap_or(map.grid().resolution);
            let graph = build_adjacency(&map, tol);
            let plan = graph.plan(&start, &goal, search.into()).map_err(|e| AppError::Input(e.to_string()))?;
            println!("{}", serde_json::to_string(&plan).map_err(input("serialize"))?);
            if let Some(path) = overlay {
                write_file(&path, &plan_overlay_pgm(&map, &plan).map_err(input("overlay"))?)?;
            }
        }
        Command::Serve { model, map, port, host } => {
            let map = load_map_or_office(map.as_deref())?;
            let file = load_model(&model)?;
            let state = AppState::new(map, file.params, &config.server)?;
            let port = port.unwrap_or(config.server.port);
            let runtime = tokio::runtime::Runtime::new().map_err(input("runtime"))?;
            runtime.block_on(serve(state, &host, port))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
