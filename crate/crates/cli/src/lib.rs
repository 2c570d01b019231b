//! Command implementations behind the `evoworld` binary.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use evoworld_core::engine::checkpoint::{self, CHECKPOINT_EXT};
use evoworld_core::error::{CheckpointError, ConfigError, ScenarioError, SimError};
use evoworld_core::geometry::Pos;
use evoworld_core::metrics::{compute_row, sample_rng, SeriesWriter};
use evoworld_core::scenarios::{file as scenario_file, verify};
use evoworld_core::{SimConfig, WorldState};
use image::{Rgb, RgbImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Scenario(ScenarioError),
    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("numeric abort at step {step}: {message}; state dumped to {}", dump.display())]
    Numeric { step: u64, message: String, dump: PathBuf },
    #[error("verification failed: {0} check(s)")]
    Verify(usize),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Scenario(_) => 1,
            CliError::Io { .. } | CliError::Checkpoint(_) => 2,
            CliError::Numeric { .. } => 3,
            CliError::Verify(_) => 4,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config(c) => CliError::Config(c),
            ScenarioError::Io(io) => CliError::Io { path: PathBuf::from("<scenario>"), message: io.to_string() },
            e => CliError::Scenario(e),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Debug, Parser)]
#[command(name = "evoworld", version, about = "Evolving agents and programmable robots on a toroidal terrain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate from a config (or resume a checkpoint), writing metrics,
    /// checkpoints and frames.
    Run(RunArgs),
    /// Draw a checkpoint as a PNG.
    Render(RenderArgs),
    /// Run a construction's self-check suite.
    Verify(VerifyArgs),
    /// Load a scenario file into a fresh world and run it.
    Scenario(ScenarioArgs),
}

/// Output cadence shared by `run` and `scenario`.
#[derive(Debug, Clone, Args)]
pub struct Outputs {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write a metrics row every k steps (0 disables rows; the header is
    /// always written).
    #[arg(long, default_value_t = 64)]
    pub metrics_every: u64,
    /// Write ckpt_<step>.jxlf every k steps (0: only the final one).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: u64,
    /// Write frame_<step>.png every k steps (0: never).
    #[arg(long, default_value_t = 0)]
    pub render_every: u64,
    /// Overlay terrain bits on frames.
    #[arg(long)]
    pub bits: bool,
    /// Pixels per cell in frames.
    #[arg(long, default_value_t = 1)]
    pub scale: u32,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed (overrides the config's).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Continue from this checkpoint instead of a fresh world.
    #[arg(long, conflicts_with_all = ["config", "seed"])]
    pub resume: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub steps: u64,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output PNG path.
    #[arg(long)]
    pub out: PathBuf,
    /// Overlay terrain bits in white.
    #[arg(long)]
    pub bits: bool,
    /// Pixels per cell.
    #[arg(long, default_value_t = 1)]
    pub scale: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subject {
    Rule110,
    Nand,
    Machines,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub subject: Subject,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Random cases on top of the fixed ones [default: 25 rows for
    /// rule110, 20 three-input tables for nand].
    #[arg(long)]
    pub random: Option<usize>,
    /// Sabotage every compiled gate table (negative control for nand).
    #[arg(long, hide = true)]
    pub corrupt_table: bool,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub file: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub steps: u64,
    /// Base config for the non-geometric parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub outputs: Outputs,
}

/// Cap rayon's pool from `EVOWORLD_THREADS`. Results never depend on it.
pub fn init_threads() {
    if let Some(n) = std::env::var("EVOWORLD_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            // a pool may already exist (tests); that is fine
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Render(a) => cmd_render(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scenario(a) => cmd_scenario(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, CliError> {
    Ok(match path {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    })
}

pub fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let world = match &a.resume {
        Some(p) => checkpoint::load(p)?,
        None => {
            let cfg = load_config(a.config.as_deref())?;
            let seed = a.seed.unwrap_or(cfg.seed);
            WorldState::init(&cfg, seed)
        }
    };
    drive(world, a.steps, &a.outputs)
}

pub fn cmd_scenario(a: ScenarioArgs) -> Result<(), CliError> {
    let frag = scenario_file::load(&a.file).map_err(|e| match e {
        ScenarioError::Io(io) => CliError::Io { path: a.file.clone(), message: io.to_string() },
        e => e.into(),
    })?;
    let base = SimConfig { seed: a.seed, ..load_config(a.config.as_deref())? };
    let world = frag.into_world(&base)?;
    drive(world, a.steps, &a.outputs)
}

/// Tick `steps` times, emitting metrics, checkpoints and frames on cadence.
fn drive(mut world: WorldState, steps: u64, o: &Outputs) -> Result<(), CliError> {
    std::fs::create_dir_all(&o.out).map_err(io_err(&o.out))?;
    let csv_path = o.out.join("metrics.csv");
    let file = File::create(&csv_path).map_err(io_err(&csv_path))?;
    let mut series = SeriesWriter::new(BufWriter::new(file)).map_err(csv_err(&csv_path))?;
    let due = |every: u64, step: u64| every > 0 && step % every == 0;

    if due(o.render_every, world.step) {
        write_frame(&world, o)?;
    }
    let end = world.step + steps;
    while world.step < end {
        let ledger = match world.tick() {
            Ok(l) => l,
            Err(SimError::Numeric(e)) => return Err(abort(&world, &o.out, e.to_string())),
            Err(SimError::Config(e)) => return Err(e.into()),
        };
        let step = world.step;
        if due(o.metrics_every, step) {
            let row = compute_row(&world, &ledger, &mut sample_rng(world.rng.seed, step))
                .map_err(|e| abort(&world, &o.out, e.to_string()))?;
            series.push(&row).map_err(csv_err(&csv_path))?;
        }
        if due(o.checkpoint_every, step) && step != end {
            save_checkpoint(&world, &o.out)?;
        }
        if due(o.render_every, step) {
            write_frame(&world, o)?;
        }
    }
    series.flush().map_err(io_err(&csv_path))?;
    save_checkpoint(&world, &o.out)?;
    Ok(())
}

/// Dump the offending state next to the other outputs.
fn abort(world: &WorldState, dir: &Path, message: String) -> CliError {
    let dump = dir.join(format!("dump_{}.{CHECKPOINT_EXT}", world.step));
    if let Err(e) = checkpoint::save(world, &dump) {
        return CliError::Io { path: dump, message: format!("{e} (while dumping after: {message})") };
    }
    CliError::Numeric { step: world.step, message, dump }
}

fn save_checkpoint(world: &WorldState, dir: &Path) -> Result<(), CliError> {
    let path = dir.join(format!("ckpt_{}.{CHECKPOINT_EXT}", world.step));
    checkpoint::save(world, &path)?;
    Ok(())
}

fn write_frame(world: &WorldState, o: &Outputs) -> Result<(), CliError> {
    let path = o.out.join(format!("frame_{}.png", world.step));
    let img = render(world, o.bits, o.scale);
    img.save(&path).map_err(|e| CliError::Io { path, message: e.to_string() })
}

pub fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    let world = checkpoint::load(&a.checkpoint)?;
    let img = render(&world, a.bits, a.scale);
    img.save(&a.out).map_err(|e| CliError::Io { path: a.out.clone(), message: e.to_string() })
}

pub const AGENT: Rgb<u8> = Rgb([255, 0, 0]);
pub const ROBOT: Rgb<u8> = Rgb([128, 128, 128]);
pub const BIT: Rgb<u8> = Rgb([255, 255, 255]);

/// Pixel a world position maps to.
pub fn pixel_of(pos: Pos, scale: u32) -> (u32, u32) {
    ((pos[0] * scale as f32).floor() as u32, (pos[1] * scale as f32).floor() as u32)
}

/// Terrain in green (energy over its cap) and blue (gain over the global
/// maximum), optional white bits, then robots and agents as 3x3 squares.
/// Row `y` of the world is row `y` of the image.
pub fn render(world: &WorldState, bits: bool, scale: u32) -> RgbImage {
    let scale = scale.max(1);
    let g = &world.grid;
    let side = g.size as u32 * scale;
    let gmax = world.cfg.energy_gain_max;
    let unit = |x: f32| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut img = RgbImage::from_fn(side, side, |px, py| {
        let i = g.index((px / scale) as usize, (py / scale) as usize);
        if bits && g.info_bits[i] == 1 {
            return BIT;
        }
        let green = if g.max_energy[i] > 0.0 { g.energy[i] / g.max_energy[i] } else { 0.0 };
        let blue = if gmax > 0.0 { g.energy_gain[i] / gmax } else { 0.0 };
        Rgb([0, unit(green), unit(blue)])
    });
    let mut stamp = |pos: Pos, color: Rgb<u8>| {
        let (cx, cy) = pixel_of(pos, scale);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let x = (cx as i64 + dx).rem_euclid(side as i64) as u32;
                let y = (cy as i64 + dy).rem_euclid(side as i64) as u32;
                img.put_pixel(x, y, color);
            }
        }
    };
    for r in &world.robots {
        stamp(r.pos, ROBOT);
    }
    for a in world.agents.iter().filter(|a| a.alive) {
        stamp(a.pos, AGENT);
    }
    img
}

pub fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let report = match a.subject {
        Subject::Rule110 => verify::verify_rule110(a.seed, a.random.unwrap_or(25))?,
        Subject::Nand => verify::verify_circuits(a.seed, a.random.unwrap_or(20), a.corrupt_table)?,
        Subject::Machines => verify::verify_machines(a.seed)?,
    };
    print!("{report}");
    if let Some(p) = &a.report {
        std::fs::write(p, report.to_string()).map_err(io_err(p))?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Verify(report.failures()))
    }
}
