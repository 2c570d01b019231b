//! World state, the step cycle, and run orchestration.

pub mod checkpoint;

use rand::Rng;
use rayon::prelude::*;

use crate::action::ActionVector;
use crate::agents::{self, AgentState};
use crate::config::SimConfig;
use crate::error::{NumericError, SimError};
use crate::neural::{forward, init_params, NetShape, RecurrentState, Scratch};
use crate::rng::{RngState, Stream, StreamRng};
use crate::robot_vm::{self, RobotState};
use crate::tally::EnergyTally;
use crate::terrain::TerrainGrid;

/// The simulation's random streams. Terrain noise is drawn once at
/// generation; everything later comes from these three.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldRng {
    pub seed: u64,
    pub init: StreamRng,
    pub mutation: StreamRng,
    pub placement: StreamRng,
}

impl WorldRng {
    pub fn new(seed: u64) -> Self {
        let s = RngState::new(seed);
        WorldRng { seed, init: s.stream(Stream::Init), mutation: s.stream(Stream::Mutation), placement: s.stream(Stream::Placement) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub cfg: SimConfig,
    pub shape: NetShape,
    pub grid: TerrainGrid,
    pub agents: Vec<AgentState>,
    pub robots: Vec<RobotState>,
    pub rng: WorldRng,
    pub step: u64,
}

/// Everything that happened to energy and actions during one tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepLedger {
    /// Step index the tick started at.
    pub step: u64,
    pub eaten_from_cells: EnergyTally,
    pub eaten_by_agents: EnergyTally,
    pub action_costs: EnergyTally,
    pub upkeep: EnergyTally,
    /// Net change of cell energy from regrowth and cap shrinkage.
    pub weather: EnergyTally,
    pub reinit_energy: EnergyTally,
    /// Energy moved from parents to children (net zero for the population).
    pub birth_transfer: EnergyTally,
    /// Realized costs plus upkeep per acting agent, in index order.
    pub agent_spend: Vec<(usize, EnergyTally)>,
    /// Action vector of every agent that acted, in index order.
    pub agent_actions: Vec<(usize, ActionVector)>,
    pub robot_terraform_sum: f64,
    pub robot_actions: usize,
    pub births: usize,
    pub deaths: usize,
    pub reinitialized: bool,
}

impl StepLedger {
    pub fn new(step: u64) -> Self {
        StepLedger { step, ..Default::default() }
    }

    /// Energy spent by agents this tick (actions plus upkeep).
    pub fn spent(&self) -> EnergyTally {
        self.action_costs + self.upkeep
    }

    /// Expected change of total agent energy.
    pub fn agent_delta(&self) -> EnergyTally {
        self.eaten_by_agents - self.action_costs - self.upkeep + self.reinit_energy
    }

    /// Expected change of total cell energy.
    pub fn cell_delta(&self) -> EnergyTally {
        self.weather - self.eaten_from_cells
    }
}

/// Exact totals of agent and cell energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTotals {
    pub agents: EnergyTally,
    pub cells: EnergyTally,
}

impl WorldState {
    /// Fresh world: base terrain, a full random population, robots at random
    /// positions with zero programs and memories.
    pub fn init(cfg: &SimConfig, seed: u64) -> Self {
        let cfg = SimConfig { seed, ..cfg.clone() };
        let mut world = Self::empty(&cfg);
        let size = cfg.world_size();
        for slot in 0..cfg.max_agents {
            let params = init_params(&world.shape, &mut world.rng.init);
            let pos = [world.rng.placement.gen_range(0.0..size), world.rng.placement.gen_range(0.0..size)];
            world.agents[slot] = AgentState::newborn(pos, cfg.start_energy, params);
        }
        world.robots = (0..cfg.num_robots)
            .map(|_| {
                let pos = [world.rng.placement.gen_range(0.0..size), world.rng.placement.gen_range(0.0..size)];
                RobotState::new(pos, ActionVector::ZERO, ActionVector::ZERO)
            })
            .collect();
        world
    }

    /// Terrain only: every agent slot dead, no robots. Scenario builders
    /// populate it.
    pub fn empty(cfg: &SimConfig) -> Self {
        let shape = NetShape::from_config(cfg);
        let rngs = RngState::new(cfg.seed);
        let grid = TerrainGrid::generate_base(&mut rngs.stream(Stream::Terrain), cfg);
        WorldState {
            cfg: cfg.clone(),
            shape,
            grid,
            agents: (0..cfg.max_agents).map(|_| AgentState::dead(&shape)).collect(),
            robots: Vec::new(),
            rng: WorldRng::new(cfg.seed),
            step: 0,
        }
    }

    pub fn alive(&self) -> usize {
        self.agents.iter().filter(|a| a.alive).count()
    }

    pub fn energy_totals(&self) -> EnergyTotals {
        EnergyTotals {
            agents: self.agents.iter().map(|a| a.energy).sum(),
            cells: self.grid.total_energy(),
        }
    }

    /// Observe and decide for every alive agent against the current state.
    fn decide(&self) -> Vec<Option<Result<(ActionVector, RecurrentState), NumericError>>> {
        let shape = self.shape;
        (0..self.agents.len())
            .into_par_iter()
            .map_init(
                || Scratch::new(&shape),
                |scratch, i| {
                    let a = &self.agents[i];
                    if !a.alive {
                        return None;
                    }
                    let obs = agents::assemble_observation(self, i);
                    Some(
                        forward(&shape, &a.params, &obs, &a.rec, scratch)
                            .map_err(|e| NumericError::NonFinite(format!("agent {i}: {e}"))),
                    )
                },
            )
            .collect()
    }

    /// One full simulation step.
    pub fn tick(&mut self) -> Result<StepLedger, SimError> {
        let mut ledger = StepLedger::new(self.step);

        // observe + think on the start-of-step state
        let decisions = self.decide();

        // act in index order
        let mut births = Vec::new();
        for (i, d) in decisions.into_iter().enumerate() {
            let Some(d) = d else { continue };
            let (act, rec) = d?;
            self.agents[i].rec = rec;
            ledger.agent_actions.push((i, act));
            if agents::apply_agent_action(self, i, &act, &mut ledger) {
                births.push(i);
            }
        }

        for _ in 0..self.cfg.k_bot_substeps {
            robot_vm::substep_round(self, &mut ledger)?;
        }

        ledger.weather = self.grid.weather_step(&self.cfg).energy_delta;

        agents::cull_and_reinit(self, &mut ledger);
        if !ledger.reinitialized {
            for parent in births {
                agents::spawn_child(self, parent, &mut ledger);
            }
        }

        self.step += 1;
        self.check_finite()?;
        Ok(ledger)
    }

    /// Tick `n` times, handing each ledger to `hook`.
    pub fn run<F>(&mut self, n: u64, mut hook: F) -> Result<(), SimError>
    where
        F: FnMut(&WorldState, &StepLedger),
    {
        for _ in 0..n {
            let ledger = self.tick()?;
            hook(self, &ledger);
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<(), NumericError> {
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.energy.is_finite() && a.pos.iter().all(|x| x.is_finite()) && a.self_msg.is_finite()) {
                return Err(NumericError::NonFinite(format!("agent {i} state")));
            }
        }
        for (i, r) in self.robots.iter().enumerate() {
            if !(r.pos.iter().all(|x| x.is_finite()) && r.memory.is_finite() && r.program.is_finite()) {
                return Err(NumericError::NonFinite(format!("robot {i} state")));
            }
        }
        Ok(())
    }

    /// CRC32 of the checkpoint encoding (the value its trailer stores): a
    /// compact identity for a state.
    pub fn checksum(&self) -> u32 {
        let bytes = checkpoint::encode(self);
        u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap())
    }
}
