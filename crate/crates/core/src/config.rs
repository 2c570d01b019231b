//! Simulation configuration.
//!
//! The on-disk form is flat TOML: one `key = value` per field, unknown keys
//! rejected, omitted keys take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::{N_ACT, N_PROG};
use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Cells per side of the square toroidal world.
    pub grid_size: usize,
    pub max_agents: usize,
    pub num_robots: usize,
    pub n_act: usize,
    pub n_prog: usize,
    pub n_view_agents: usize,
    pub n_view_bots: usize,
    /// Side of the square terrain patch each agent observes (odd).
    pub terrain_patch: usize,
    pub k_bot_substeps: usize,
    pub mutation_sigma: f32,
    pub repro_energy_min: f32,
    pub eat_rate: f32,
    pub push_radius: f32,
    pub push_strength: f32,
    pub terraform_rate: f32,
    /// World units moved per unit of MOVE_X / MOVE_Y.
    pub move_speed: f32,
    pub upkeep_base: f32,
    pub aging_coeff: f32,
    /// Per-step increment of every Perlin lattice angle (radians).
    pub weather_delta: f32,
    pub regression_lambda: f32,
    pub act_threshold: f32,
    pub start_energy: f32,
    pub energy_gain_min: f32,
    pub energy_gain_max: f32,
    pub max_energy_min: f32,
    pub max_energy_max: f32,
    pub action_cost_min: f32,
    pub action_cost_max: f32,
    /// Repopulate with fresh random networks when every agent has died.
    pub reinit_on_extinction: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid_size: 128,
            max_agents: 128,
            num_robots: 32,
            n_act: N_ACT,
            n_prog: N_PROG,
            n_view_agents: 8,
            n_view_bots: 4,
            terrain_patch: 9,
            k_bot_substeps: 4,
            mutation_sigma: 0.02,
            repro_energy_min: 20.0,
            eat_rate: 1.0,
            push_radius: 1.5,
            push_strength: 1.0,
            terraform_rate: 0.005,
            move_speed: 1.0,
            upkeep_base: 0.02,
            aging_coeff: 0.001,
            weather_delta: 0.005,
            regression_lambda: 0.01,
            act_threshold: 0.5,
            start_energy: 10.0,
            energy_gain_min: 0.0,
            energy_gain_max: 0.04,
            max_energy_min: 1.0,
            max_energy_max: 10.0,
            action_cost_min: 0.002,
            action_cost_max: 0.02,
            reinit_on_extinction: true,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Returns the config unchanged if every invariant holds, otherwise an
    /// error naming the first violated field.
    pub fn validate(self) -> Result<Self, ConfigError> {
        if self.n_prog <= self.n_act {
            return Err(ConfigError::invalid("n_prog", "n_prog must exceed n_act"));
        }
        if self.n_act != N_ACT {
            return Err(ConfigError::invalid("n_act", format!("action layout is fixed at {N_ACT} entries")));
        }
        if self.n_prog != N_PROG {
            return Err(ConfigError::invalid("n_prog", format!("message layout is fixed at {N_PROG} entries")));
        }
        if self.terrain_patch % 2 == 0 {
            return Err(ConfigError::invalid("terrain_patch", "terrain_patch must be odd"));
        }
        if self.grid_size < self.terrain_patch {
            return Err(ConfigError::invalid("grid_size", "grid_size must be at least terrain_patch"));
        }
        if self.max_agents < 1 {
            return Err(ConfigError::invalid("max_agents", "max_agents must be at least 1"));
        }
        let rates: [(&'static str, f32); 19] = [
            ("mutation_sigma", self.mutation_sigma),
            ("repro_energy_min", self.repro_energy_min),
            ("eat_rate", self.eat_rate),
            ("push_radius", self.push_radius),
            ("push_strength", self.push_strength),
            ("terraform_rate", self.terraform_rate),
            ("move_speed", self.move_speed),
            ("upkeep_base", self.upkeep_base),
            ("aging_coeff", self.aging_coeff),
            ("weather_delta", self.weather_delta),
            ("regression_lambda", self.regression_lambda),
            ("act_threshold", self.act_threshold),
            ("start_energy", self.start_energy),
            ("energy_gain_min", self.energy_gain_min),
            ("energy_gain_max", self.energy_gain_max),
            ("max_energy_min", self.max_energy_min),
            ("max_energy_max", self.max_energy_max),
            ("action_cost_min", self.action_cost_min),
            ("action_cost_max", self.action_cost_max),
        ];
        for (field, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError::invalid(field, format!("must be finite and >= 0 (got {v})")));
            }
        }
        if self.act_threshold >= 1.0 {
            return Err(ConfigError::invalid("act_threshold", "act_threshold must be below 1"));
        }
        if self.energy_gain_min > self.energy_gain_max {
            return Err(ConfigError::invalid("energy_gain_min", "energy_gain_min exceeds energy_gain_max"));
        }
        if self.max_energy_min > self.max_energy_max {
            return Err(ConfigError::invalid("max_energy_min", "max_energy_min exceeds max_energy_max"));
        }
        if self.max_energy_max <= 0.0 {
            return Err(ConfigError::invalid("max_energy_max", "max_energy_max must be positive"));
        }
        if self.action_cost_min > self.action_cost_max {
            return Err(ConfigError::invalid("action_cost_min", "action_cost_min exceeds action_cost_max"));
        }
        if self.grid_size > (1 << 16) {
            return Err(ConfigError::invalid("grid_size", "grid_size must not exceed 65536"));
        }
        Ok(self)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to toml")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// World extent in world units (one cell is one unit).
    pub fn world_size(&self) -> f32 {
        self.grid_size as f32
    }
}
