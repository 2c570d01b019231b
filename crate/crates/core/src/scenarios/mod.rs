//! Hand-built robot arrangements: the useful machines, a Rule 110 row, and
//! NAND circuits compiled from truth tables.
//!
//! Everything here produces a [`Fragment`]: entity placements plus the
//! wiring each robot is supposed to see. Because robots read their two
//! nearest entities, wiring is purely geometric and [`validate_placement`]
//! checks it by brute force before anything runs.

pub mod circuit;
pub mod file;
pub mod machines;
pub mod rule110;
pub mod verify;

use std::fmt;

use crate::action::ActionVector;
use crate::config::SimConfig;
use crate::engine::WorldState;
use crate::error::ScenarioError;
use crate::geometry::{cell_of, nearest_k, EntityId, Pos};
use crate::agents::AgentState;
use crate::neural::AgentParams;
use crate::robot_vm::RobotState;

pub use circuit::{compile_boolean, Circuit, Expr};
pub use machines::{make_comm_chain, make_patroller, make_terraformer, make_transporter};
pub use rule110::build_rule110;

/// An agent with zero network parameters. It never acts, so its
/// self-message is a constant broadcast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertAgent {
    pub pos: Pos,
    pub energy: f32,
    pub message: ActionVector,
}

/// What a robot's two nearest entities should be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inputs {
    /// `m1` then `m2`, in that order.
    Ordered(EntityId, EntityId),
    /// Both, either order (symmetric instructions).
    Unordered(EntityId, EntityId),
    /// Only `m1` matters.
    First(EntityId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub grid_size: usize,
    pub robots: Vec<RobotState>,
    pub agents: Vec<InertAgent>,
    /// Terrain cells whose information bit is preset.
    pub bits: Vec<([usize; 2], bool)>,
    /// Intended inputs, keyed by robot index.
    pub wiring: Vec<(usize, Inputs)>,
    /// Keep the configured weather instead of freezing the terrain.
    pub live_weather: bool,
}

impl Fragment {
    pub fn new(grid_size: usize) -> Self {
        Fragment { grid_size, robots: Vec::new(), agents: Vec::new(), bits: Vec::new(), wiring: Vec::new(), live_weather: false }
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty() && self.agents.is_empty() && self.bits.is_empty()
    }

    /// Push a robot and return its index.
    pub fn robot(&mut self, pos: Pos, program: ActionVector, memory: ActionVector) -> usize {
        self.robots.push(RobotState::new(pos, program, memory));
        self.robots.len() - 1
    }

    /// World config for running this fragment: one robot substep per tick,
    /// unit moves, no reinit, and (unless opted out) frozen weather.
    pub fn config(&self, base: &SimConfig) -> Result<SimConfig, ScenarioError> {
        let mut cfg = SimConfig {
            grid_size: self.grid_size,
            num_robots: self.robots.len(),
            max_agents: self.agents.len().max(1),
            k_bot_substeps: 1,
            move_speed: 1.0,
            reinit_on_extinction: false,
            ..base.clone()
        };
        if !self.live_weather {
            cfg.weather_delta = 0.0;
            cfg.regression_lambda = 0.0;
        }
        Ok(cfg.validate()?)
    }

    /// A fresh world holding exactly this fragment on generated terrain.
    pub fn into_world(&self, base: &SimConfig) -> Result<WorldState, ScenarioError> {
        if self.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let cfg = self.config(base)?;
        let mut world = WorldState::empty(&cfg);
        for &([x, y], b) in &self.bits {
            if x >= self.grid_size || y >= self.grid_size {
                return Err(ScenarioError::Infeasible(format!("bit ({x}, {y}) outside a {} grid", self.grid_size)));
            }
            let i = world.grid.index(x, y);
            world.grid.info_bits[i] = b as u8;
        }
        world.robots = self.robots.clone();
        for (slot, a) in self.agents.iter().enumerate() {
            let mut s = AgentState::newborn(a.pos, a.energy, AgentParams::zeros(&world.shape));
            s.self_msg = a.message;
            world.agents[slot] = s;
        }
        Ok(world)
    }
}

/// Centre of cell `(x, y)`.
pub fn cell_center(x: usize, y: usize) -> Pos {
    [x as f32 + 0.5, y as f32 + 0.5]
}

/// Terrain bit under a position.
pub fn bit_at(world: &WorldState, pos: Pos) -> bool {
    let (x, y) = cell_of(pos, world.grid.size);
    world.grid.info_bits[world.grid.index(x, y)] == 1
}

/// A robot whose nearest entities are not the intended ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub robot: usize,
    pub expected: Inputs,
    pub found: [Option<EntityId>; 2],
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "robot {}: expected {:?}, nearest are {:?}", self.robot, self.expected, self.found)
    }
}

/// Check every wired robot's two nearest entities by exhaustive distance
/// computation, with the same ordering robots use at run time. Returns the
/// list of violations (empty when the placement is sound).
pub fn validate_placement(frag: &Fragment) -> Vec<Violation> {
    let size = frag.grid_size as f32;
    let entities: Vec<(EntityId, Pos)> = frag
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (EntityId::Agent(i), a.pos))
        .chain(frag.robots.iter().enumerate().map(|(j, r)| (EntityId::Robot(j), r.pos)))
        .collect();
    let mut out = Vec::new();
    for &(j, expected) in &frag.wiring {
        let me = EntityId::Robot(j);
        let near = nearest_k(frag.robots[j].pos, entities.iter().copied().filter(|e| e.0 != me), 2, size);
        let found = [near.first().map(|n| n.id), near.get(1).map(|n| n.id)];
        let ok = match expected {
            Inputs::Ordered(a, b) => found == [Some(a), Some(b)],
            Inputs::Unordered(a, b) => found == [Some(a), Some(b)] || found == [Some(b), Some(a)],
            Inputs::First(a) => found[0] == Some(a),
        };
        if !ok {
            out.push(Violation { robot: j, expected, found });
        }
    }
    out
}
