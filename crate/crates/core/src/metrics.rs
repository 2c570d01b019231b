//! Per-step complexity metrics and their CSV series.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;

use crate::action::EAT;
use crate::agents::assemble_observation;
use crate::engine::{StepLedger, WorldState};
use crate::error::NumericError;
use crate::neural::{saliency, SaliencyField};
use crate::rng::{Stream, StreamRng};

pub const HEADER: [&str; 9] = [
    "step",
    "alive",
    "kardashev_total",
    "kardashev_per_agent",
    "eat_mean",
    "terrain_gain_mean",
    "bot_terraform_mean",
    "comm_saliency",
    "bot_saliency",
];

/// Agents sampled for saliency per row.
pub const SALIENCY_SAMPLE: usize = 16;
/// Central-difference step for saliency.
pub const SALIENCY_STEP: f32 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    /// Steps completed when the row was taken.
    pub step: u64,
    pub alive: usize,
    /// Energy agents spent this step on actions and upkeep.
    pub kardashev_total: f64,
    pub kardashev_per_agent: f64,
    pub eat_mean: f64,
    pub terrain_gain_mean: f64,
    pub bot_terraform_mean: f64,
    pub comm_saliency: f64,
    pub bot_saliency: f64,
}

/// Sampling stream for the row after `step`. Each step gets its own window
/// of the stream, so rows do not depend on which earlier rows were taken
/// (or on a restart from a checkpoint).
pub fn sample_rng(seed: u64, step: u64) -> StreamRng {
    StreamRng::restore(seed, Stream::Sample, (step as u128) << 20)
}

/// Build the row for a tick that just finished. Reads the world, never
/// changes it.
pub fn compute_row(world: &WorldState, ledger: &StepLedger, rng: &mut StreamRng) -> Result<MetricsRow, NumericError> {
    let alive = world.alive();
    let kardashev_total = ledger.spent().to_f64();
    let eat_mean = mean(ledger.agent_actions.iter().map(|(_, a)| a[EAT] as f64));
    let bot_terraform_mean = if ledger.robot_actions == 0 {
        0.0
    } else {
        ledger.robot_terraform_sum / ledger.robot_actions as f64
    };

    let living: Vec<usize> = (0..world.agents.len()).filter(|&i| world.agents[i].alive).collect();
    let picked: Vec<usize> = if living.len() <= SALIENCY_SAMPLE {
        living
    } else {
        let mut p: Vec<usize> = sample(rng, living.len(), SALIENCY_SAMPLE).into_iter().map(|k| living[k]).collect();
        p.sort_unstable();
        p
    };
    let mut comm = Vec::with_capacity(picked.len());
    let mut bot = Vec::with_capacity(picked.len());
    for &i in &picked {
        let a = &world.agents[i];
        let obs = assemble_observation(world, i);
        comm.push(saliency(&world.shape, &a.params, &obs, &a.rec, SaliencyField::OtherMessage, SALIENCY_STEP)?);
        bot.push(saliency(&world.shape, &a.params, &obs, &a.rec, SaliencyField::RobotRows, SALIENCY_STEP)?);
    }

    Ok(MetricsRow {
        step: world.step,
        alive,
        kardashev_total,
        kardashev_per_agent: kardashev_total / alive.max(1) as f64,
        eat_mean,
        terrain_gain_mean: world.grid.mean_energy_gain(),
        bot_terraform_mean,
        comm_saliency: mean(comm.into_iter()),
        bot_saliency: mean(bot.into_iter()),
    })
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// `x` with 9 significant digits, shortest form that keeps them.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..9).contains(&e) {
        let s = format!("{:.*}", (8 - e).max(0) as usize, x);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
        s.to_string()
    } else {
        format!("{x:.8e}")
    }
}

impl MetricsRow {
    fn record(&self) -> [String; 9] {
        [
            self.step.to_string(),
            self.alive.to_string(),
            sig9(self.kardashev_total),
            sig9(self.kardashev_per_agent),
            sig9(self.eat_mean),
            sig9(self.terrain_gain_mean),
            sig9(self.bot_terraform_mean),
            sig9(self.comm_saliency),
            sig9(self.bot_saliency),
        ]
    }
}

/// Streams rows into a CSV writer, header first.
pub struct SeriesWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> SeriesWriter<W> {
    pub fn new(w: W) -> csv::Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(HEADER)?;
        Ok(SeriesWriter { inner })
    }

    pub fn push(&mut self, row: &MetricsRow) -> csv::Result<()> {
        self.inner.write_record(row.record())
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn write_series(rows: &[MetricsRow], path: &Path) -> csv::Result<()> {
    let mut w = SeriesWriter::new(std::fs::File::create(path)?)?;
    for r in rows {
        w.push(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a series back, insisting on the exact header.
pub fn read_series<R: Read>(r: R) -> Result<Vec<MetricsRow>, String> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut out = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let f = |k: usize| -> Result<f64, String> {
            rec[k].parse::<f64>().map_err(|e| format!("row {}: column {}: {e}", n + 1, HEADER[k]))
        };
        out.push(MetricsRow {
            step: rec[0].parse().map_err(|e| format!("row {}: step: {e}", n + 1))?,
            alive: rec[1].parse().map_err(|e| format!("row {}: alive: {e}", n + 1))?,
            kardashev_total: f(2)?,
            kardashev_per_agent: f(3)?,
            eat_mean: f(4)?,
            terrain_gain_mean: f(5)?,
            bot_terraform_mean: f(6)?,
            comm_saliency: f(7)?,
            bot_saliency: f(8)?,
        });
    }
    Ok(out)
}
