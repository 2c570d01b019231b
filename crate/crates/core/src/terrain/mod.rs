//! Terrain grid: per-cell energy dynamics, a drifting Perlin base state, and
//! information bits that only robots touch.

pub mod perlin;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::config::SimConfig;
use crate::geometry::{cell_of, Pos};
use crate::tally::EnergyTally;
pub use perlin::PerlinField;

/// The observable attributes of one cell, copied out of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainCell {
    pub energy: f32,
    pub energy_gain: f32,
    pub max_energy: f32,
    pub action_cost: f32,
    pub info_bit: u8,
    pub base_energy_gain: f32,
    pub base_max_energy: f32,
    pub base_action_cost: f32,
}

/// Closed range an attribute's base field is scaled into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f32,
    pub max: f32,
}

impl Range {
    #[inline]
    fn scale(self, unit: f32) -> f32 {
        (self.min + unit * (self.max - self.min)).clamp(self.min, self.max)
    }
}

/// Counts information-bit accesses. Diagnostic only: it never participates
/// in equality or checkpoints.
#[derive(Debug, Default)]
pub struct AccessCount(AtomicU64);

impl AccessCount {
    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for AccessCount {
    fn clone(&self) -> Self {
        AccessCount(AtomicU64::new(self.get()))
    }
}

impl PartialEq for AccessCount {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// Row-major planes over a `size × size` torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainGrid {
    pub size: usize,
    pub energy: Vec<f32>,
    pub energy_gain: Vec<f32>,
    pub max_energy: Vec<f32>,
    pub action_cost: Vec<f32>,
    pub info_bits: Vec<u8>,
    pub base_energy_gain: Vec<f32>,
    pub base_max_energy: Vec<f32>,
    pub base_action_cost: Vec<f32>,
    /// Noise fields for energy_gain, max_energy, action_cost, in that order.
    pub fields: [PerlinField; 3],
    pub gain_range: Range,
    pub max_energy_range: Range,
    pub cost_range: Range,
    pub bit_reads: AccessCount,
    pub bit_writes: AccessCount,
}

/// What one weather step did to stored cell energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherReport {
    /// Exact net change of total cell energy (regrowth minus cap losses).
    pub energy_delta: EnergyTally,
}

impl TerrainGrid {
    /// Sample base fields from three independent Perlin fields and set the
    /// current state to the base with cells half full.
    pub fn generate_base<R: Rng + ?Sized>(rng: &mut R, cfg: &SimConfig) -> Self {
        let fields = [PerlinField::random(rng), PerlinField::random(rng), PerlinField::random(rng)];
        let n = cfg.grid_size * cfg.grid_size;
        let mut grid = TerrainGrid {
            size: cfg.grid_size,
            energy: vec![0.0; n],
            energy_gain: vec![0.0; n],
            max_energy: vec![0.0; n],
            action_cost: vec![0.0; n],
            info_bits: vec![0; n],
            base_energy_gain: vec![0.0; n],
            base_max_energy: vec![0.0; n],
            base_action_cost: vec![0.0; n],
            fields,
            gain_range: Range { min: cfg.energy_gain_min, max: cfg.energy_gain_max },
            max_energy_range: Range { min: cfg.max_energy_min, max: cfg.max_energy_max },
            cost_range: Range { min: cfg.action_cost_min, max: cfg.action_cost_max },
            bit_reads: AccessCount::default(),
            bit_writes: AccessCount::default(),
        };
        grid.resample_base();
        grid.energy_gain.copy_from_slice(&grid.base_energy_gain);
        grid.max_energy.copy_from_slice(&grid.base_max_energy);
        grid.action_cost.copy_from_slice(&grid.base_action_cost);
        for (e, &m) in grid.energy.iter_mut().zip(&grid.max_energy) {
            *e = m / 2.0;
        }
        grid
    }

    fn resample_base(&mut self) {
        let size = self.size;
        let planes = [
            (&self.fields[0], self.gain_range, &mut self.base_energy_gain),
            (&self.fields[1], self.max_energy_range, &mut self.base_max_energy),
            (&self.fields[2], self.cost_range, &mut self.base_action_cost),
        ];
        for (field, range, plane) in planes {
            field.sample_grid(size, plane);
            for v in plane.iter_mut() {
                *v = range.scale(*v);
            }
        }
    }

    pub fn cells(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.size + x
    }

    /// Index of the cell containing a (wrapped) position.
    #[inline]
    pub fn index_at(&self, pos: Pos) -> usize {
        let (x, y) = cell_of(pos, self.size);
        self.index(x, y)
    }

    pub fn cell(&self, i: usize) -> TerrainCell {
        TerrainCell {
            energy: self.energy[i],
            energy_gain: self.energy_gain[i],
            max_energy: self.max_energy[i],
            action_cost: self.action_cost[i],
            info_bit: self.info_bits[i],
            base_energy_gain: self.base_energy_gain[i],
            base_max_energy: self.base_max_energy[i],
            base_action_cost: self.base_action_cost[i],
        }
    }

    /// Drift the base, regress toward it, then regrow energy under the cap.
    pub fn weather_step(&mut self, cfg: &SimConfig) -> WeatherReport {
        if cfg.weather_delta != 0.0 {
            for f in &mut self.fields {
                f.shift_angles(cfg.weather_delta);
            }
            self.resample_base();
        }
        let global_max = self.max_energy_range.max;
        let mut delta = EnergyTally::ZERO;
        for i in 0..self.cells() {
            let lambda = if global_max > 0.0 {
                (cfg.regression_lambda * (self.max_energy[i] / global_max)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            if lambda > 0.0 {
                self.energy_gain[i] = regress(self.energy_gain[i], self.base_energy_gain[i], lambda);
                self.max_energy[i] = regress(self.max_energy[i], self.base_max_energy[i], lambda);
                self.action_cost[i] = regress(self.action_cost[i], self.base_action_cost[i], lambda);
            }
            let old = self.energy[i];
            let new = (old + self.energy_gain[i]).min(self.max_energy[i]).max(0.0);
            if new != old {
                delta.add(new);
                delta.sub(old);
                self.energy[i] = new;
            }
        }
        WeatherReport { energy_delta: delta }
    }

    pub fn read_bit(&self, pos: Pos) -> u8 {
        self.bit_reads.bump();
        self.info_bits[self.index_at(pos)]
    }

    pub fn write_bit(&mut self, pos: Pos, bit: bool) {
        self.bit_writes.bump();
        let i = self.index_at(pos);
        self.info_bits[i] = bit as u8;
    }

    /// Change the containing cell's energy_gain by `terraform_rate · magnitude`.
    /// Returns the energy cost: `action_cost · |magnitude|` for agents, zero
    /// for robots.
    pub fn apply_terraform(&mut self, pos: Pos, magnitude: f32, is_robot: bool, cfg: &SimConfig) -> f32 {
        if magnitude == 0.0 {
            return 0.0;
        }
        let i = self.index_at(pos);
        self.energy_gain[i] = (self.energy_gain[i] + cfg.terraform_rate * magnitude).clamp(0.0, self.gain_range.max);
        if is_robot {
            0.0
        } else {
            self.action_cost[i] * magnitude.abs()
        }
    }

    /// Total stored energy, exact.
    pub fn total_energy(&self) -> EnergyTally {
        self.energy.iter().copied().sum()
    }

    pub fn mean_energy_gain(&self) -> f64 {
        self.energy_gain.iter().map(|&g| g as f64).sum::<f64>() / self.cells() as f64
    }
}

/// Move `attr` toward `base` by fraction `lambda`, never overshooting.
#[inline]
fn regress(attr: f32, base: f32, lambda: f32) -> f32 {
    if lambda >= 1.0 {
        return base;
    }
    let v = attr + lambda * (base - attr);
    v.clamp(attr.min(base), attr.max(base))
}
