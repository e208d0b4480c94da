use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicU64;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use futures::{SinkExt, StreamExt};
use tactile_core::engine::EngineConfig;
use tactile_core::environment::{
    RecognizerConfig, DEFAULT_COVERAGE_THRESHOLD, DEFAULT_K, DEFAULT_WINDOW,
};
use tactile_core::evaluator::{evaluate, DEFAULT_IOU_THRESHOLD};
use tactile_core::feedback::DEFAULT_CYCLE_WINDOW_MS;
use tactile_core::grid::DEFAULT_TAU;
use tactile_core::ingestion::{StreamSource, DEFAULT_CONF_THRESHOLD};
use tactile_core::wire::encode_feedback;
use tactile_core::{Cell, ClassVocabulary, Engine, GridSpec};
use tactile_scene::assets::load_assets;
use tactile_scene::hub::{run_hub, Command, HubOptions};
use tactile_scene::queue::FrameQueue;
use tactile_scene::report::{load_eval_frames, render_json, render_table, vocabulary_from_files};
use tactile_scene::server;
use tactile_scene::source::{load_replay, poll_live, replay};
use tokio::net::TcpListener;
use tokio::sync::mpsc::unbounded_channel;
use tokio_tungstenite::tungstenite::Message;

const QUEUE_CAPACITY: usize = 8;

#[derive(Parser)]
#[command(
    name = "tactile-scene",
    version,
    about = "Detection stream to tactile pin grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stream frames through the engine, optionally serving grid clients.
    Run(RunArgs),
    /// Compute per-class AP and mAP of predictions against ground truth.
    Eval(EvalArgs),
    /// Send touches to a running server, or replay a file and touch the
    /// final grid.
    SimulateTouch(TouchArgs),
}

#[derive(Args)]
struct EngineArgs {
    /// Exemplar JSONL: {"label": ..., "counts": {class: n}}
    #[arg(long)]
    exemplars: PathBuf,
    /// Vocabulary JSON: {environment: [class, ...]}; derived from the
    /// exemplars when omitted.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Cue manifest JSON: {class: {"text": ..., "audio": ...}}
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Detections must score strictly above this.
    #[arg(long, default_value_t = DEFAULT_CONF_THRESHOLD)]
    conf: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Frames per recognition window.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = DEFAULT_COVERAGE_THRESHOLD)]
    coverage_threshold: f64,
    /// Grid size as ROWSxCOLS.
    #[arg(long, default_value = "4x4")]
    grid: String,
    /// Minimum box/cell overlap for a box to reach a cell.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_CYCLE_WINDOW_MS)]
    cycle_window_ms: u64,
}

impl EngineArgs {
    fn build(&self) -> Result<Engine> {
        let assets = load_assets(
            &self.exemplars,
            self.vocab.as_deref(),
            self.manifest.as_deref(),
        )?;
        let (rows, cols) = GridSpec::parse_dims(&self.grid)?;
        let config = EngineConfig {
            conf_threshold: self.conf,
            grid: GridSpec::new(rows, cols, self.tau)?,
            recognizer: RecognizerConfig {
                window: self.window,
                k: self.k,
                coverage_threshold: self.coverage_threshold,
            },
            cycle_window_ms: self.cycle_window_ms,
        };
        Ok(Engine::new(
            assets.vocab,
            assets.profiles,
            &assets.manifest,
            config,
        )?)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Replay a JSONL file of frames.
    #[arg(long, conflicts_with = "live", required_unless_present = "live")]
    input: Option<PathBuf>,
    /// Poll <URL>/frame for live frames.
    #[arg(long)]
    live: Option<String>,
    /// Replay speed multiplier.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Live polling interval.
    #[arg(long, default_value_t = 33)]
    poll_ms: u64,
    /// Serve grid clients over WebSocket at ADDR (path /ws).
    #[arg(long, value_name = "ADDR")]
    serve: Option<String>,
    /// Write every snapshot to this file, one per line.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    iou: f64,
    /// Print a JSON report instead of a table.
    #[arg(long)]
    json: bool,
    /// Vocabulary JSON; by default every class named in the files.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct TouchArgs {
    /// Cell to touch as r,c; repeat for a sequence.
    #[arg(long = "cell", required = true, value_parser = parse_cell)]
    cells: Vec<Cell>,
    /// Pause between touches.
    #[arg(long, default_value_t = 500)]
    interval_ms: u64,
    /// WebSocket URL of a running server, e.g. ws://127.0.0.1:8080/ws
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    server: Option<String>,
    /// Replay this file headless and touch the resulting grid.
    #[arg(long, requires = "exemplars")]
    input: Option<PathBuf>,
    #[arg(long)]
    exemplars: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CONF_THRESHOLD)]
    conf: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value = "4x4")]
    grid: String,
}

fn parse_cell(text: &str) -> Result<Cell, String> {
    let (r, c) = text
        .split_once(',')
        .ok_or_else(|| format!("expected r,c, got {text:?}"))?;
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    Ok(Cell::new(parse(r)?, parse(c)?))
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Cmd::Run(args) => run(args).await,
        Cmd::Eval(args) => eval(args),
        Cmd::SimulateTouch(args) => simulate_touch(args).await,
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

async fn run(args: RunArgs) -> Result<()> {
    let engine = args.engine.build()?;
    let queue = Arc::new(FrameQueue::new(QUEUE_CAPACITY));
    let mut stale = None;
    if let Some(path) = &args.input {
        StreamSource::replay(path.display().to_string(), args.speed)?;
        let frames = load_replay(path, engine.vocabulary())?;
        log::info!("replaying {} frames from {}", frames.len(), path.display());
        tokio::spawn(replay(frames, args.speed, queue.clone()));
    } else if let Some(url) = &args.live {
        StreamSource::live(url.clone())?;
        if args.poll_ms == 0 {
            bail!("--poll-ms must be positive");
        }
        let counter = Arc::new(AtomicU64::new(0));
        stale = Some(counter.clone());
        tokio::spawn(poll_live(
            url.clone(),
            Arc::new(engine.vocabulary().clone()),
            Duration::from_millis(args.poll_ms),
            queue.clone(),
            counter,
        ));
    }

    let (tx, rx) = unbounded_channel();
    if let Some(addr) = &args.serve {
        let listener = TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        log::info!("serving on ws://{}/ws", listener.local_addr()?);
        let commands = tx.clone();
        tokio::spawn(async move {
            if let Err(e) = server::serve(listener, commands).await {
                log::error!("server stopped: {e}");
            }
        });
        let shutdown = tx.clone();
        tokio::spawn(async move {
            if tokio::signal::ctrl_c().await.is_ok() {
                let _ = shutdown.send(Command::Shutdown);
            }
        });
    }
    drop(tx);

    let log = match &args.log {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            Some(Box::new(BufWriter::new(file)) as Box<dyn std::io::Write + Send>)
        }
        None => None,
    };
    let options = HubOptions {
        exit_when_drained: args.serve.is_none(),
        log,
        stale_frames: stale,
    };
    let engine = run_hub(engine, queue, rx, options).await?;
    let c = engine.counters();
    eprintln!(
        "frames={} gated_out={} unknown_classes={} off_environment={} stale_frames={} queue_dropped={} mode={:?}",
        c.frames, c.gated_out, c.unknown_classes, c.off_environment, c.stale_frames, c.queue_dropped,
        engine.mode()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let vocab = match &args.vocab {
        Some(p) => ClassVocabulary::from_json(&std::fs::read_to_string(p)?)?,
        None => vocabulary_from_files(&[&args.gt, &args.pred])?,
    };
    let gts = load_eval_frames(&args.gt, &vocab)?;
    let preds = load_eval_frames(&args.pred, &vocab)?;
    let report = evaluate(&preds, &gts, args.iou)?;
    if args.json {
        println!("{}", render_json(&report, &vocab));
    } else {
        print!("{}", render_table(&report, &vocab));
    }
    Ok(())
}

async fn simulate_touch(args: TouchArgs) -> Result<()> {
    match (&args.server, &args.input) {
        (Some(url), _) => touch_remote(url, &args.cells, args.interval_ms).await,
        (None, Some(input)) => touch_headless(&args, input),
        (None, None) => bail!("either --server or --input is required"),
    }
}

fn touch_headless(args: &TouchArgs, input: &Path) -> Result<()> {
    let engine_args = EngineArgs {
        exemplars: args.exemplars.clone().context("--exemplars is required")?,
        vocab: args.vocab.clone(),
        manifest: args.manifest.clone(),
        conf: args.conf,
        k: args.k,
        window: args.window,
        coverage_threshold: DEFAULT_COVERAGE_THRESHOLD,
        grid: args.grid.clone(),
        tau: DEFAULT_TAU,
        cycle_window_ms: DEFAULT_CYCLE_WINDOW_MS,
    };
    let mut engine = engine_args.build()?;
    for item in load_replay(input, engine.vocabulary())? {
        engine.counters_mut().unknown_classes += item.unknown_dropped;
        engine.process_frame(item.frame);
    }
    for (i, cell) in args.cells.iter().enumerate() {
        let cue = engine.touch(0, *cell, i as u64 * args.interval_ms)?;
        println!("{}", encode_feedback(&cue));
    }
    Ok(())
}

async fn touch_remote(url: &str, cells: &[Cell], interval_ms: u64) -> Result<()> {
    let (mut ws, _) = tokio_tungstenite::connect_async(url)
        .await
        .with_context(|| format!("connecting to {url}"))?;
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            tokio::time::sleep(Duration::from_millis(interval_ms)).await;
        }
        let msg = format!(r#"{{"type":"touch","cell":[{},{}]}}"#, cell.row, cell.col);
        ws.send(Message::text(msg)).await?;
        loop {
            let Some(reply) = ws.next().await else {
                bail!("server closed the connection");
            };
            if let Message::Text(text) = reply? {
                let v: serde_json::Value = serde_json::from_str(text.as_str())?;
                match v["type"].as_str() {
                    Some("feedback") => {
                        println!("{text}");
                        break;
                    }
                    Some("error") => bail!("server rejected touch {cell}: {}", v["message"]),
                    _ => {}
                }
            }
        }
    }
    ws.close(None).await.ok();
    Ok(())
}
