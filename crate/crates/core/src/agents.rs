//! Agent lifecycle: observation, action application with energy accounting,
//! reproduction, death, and population reinitialization.

use rand::Rng;

use crate::action::*;
use crate::engine::{StepLedger, WorldState};
use crate::geometry::{cell_of, dist2, nearest_k, wrap_pos, EntityId, Pos};
use crate::neural::{
    init_params, mutate, AgentParams, NetShape, Observation, RecurrentState, AGENT_ROW, ROBOT_ROW, SELF_FEATS,
    TERRAIN_PLANES,
};
use crate::tally::EnergyTally;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub pos: Pos,
    pub energy: f32,
    pub age: u64,
    pub self_msg: ActionVector,
    pub other_msg: ActionVector,
    pub params: AgentParams,
    pub rec: RecurrentState,
    pub alive: bool,
}

impl AgentState {
    pub fn newborn(pos: Pos, energy: f32, params: AgentParams) -> Self {
        AgentState {
            pos,
            energy,
            age: 0,
            self_msg: ActionVector::ZERO,
            other_msg: ActionVector::ZERO,
            params,
            rec: RecurrentState::ZERO,
            alive: true,
        }
    }

    /// An empty slot: dead, no energy, zero parameters.
    pub fn dead(shape: &NetShape) -> Self {
        AgentState { alive: false, ..Self::newborn([0.0, 0.0], 0.0, AgentParams::zeros(shape)) }
    }
}

/// Deduct up to `amount` from `energy` (never below zero). Returns the
/// amount actually removed, as an exact tally.
#[inline]
pub(crate) fn charge(energy: &mut f32, amount: f32) -> EnergyTally {
    let old = *energy;
    let new = (old - amount).max(0.0);
    *energy = new;
    let mut t = EnergyTally::from_f32(old);
    t.sub(new);
    t
}

/// Build agent `i`'s observation from the current world.
pub fn assemble_observation(world: &WorldState, i: usize) -> Observation {
    let cfg = &world.cfg;
    let shape = &world.shape;
    let me = &world.agents[i];
    let size = cfg.world_size();
    let mut obs = Observation::zeros(shape);

    // terrain patch, toroidal, each plane normalized by its configured max
    let g = &world.grid;
    let n = g.size as isize;
    let (cx, cy) = cell_of(me.pos, g.size);
    let r = (shape.patch / 2) as isize;
    let norm = |v: f32, max: f32| if max > 0.0 { v / max } else { 0.0 };
    let mut k = 0;
    for dy in -r..=r {
        let y = (cy as isize + dy).rem_euclid(n) as usize;
        for dx in -r..=r {
            let x = (cx as isize + dx).rem_euclid(n) as usize;
            let c = y * g.size + x;
            obs.terrain[k] = norm(g.energy[c], cfg.max_energy_max);
            obs.terrain[k + 1] = norm(g.energy_gain[c], cfg.energy_gain_max);
            obs.terrain[k + 2] = norm(g.action_cost[c], cfg.action_cost_max);
            k += TERRAIN_PLANES;
        }
    }

    let others = world
        .agents
        .iter()
        .enumerate()
        .filter(|&(j, a)| j != i && a.alive)
        .map(|(j, a)| (EntityId::Agent(j), a.pos));
    for (row, nb) in nearest_k(me.pos, others, shape.n_agents, size).iter().enumerate() {
        let EntityId::Agent(j) = nb.id else { unreachable!() };
        let a = &world.agents[j];
        let out = &mut obs.agents[row * AGENT_ROW..(row + 1) * AGENT_ROW];
        out[0] = nb.delta[0];
        out[1] = nb.delta[1];
        out[2] = a.energy;
        out[3] = a.age as f32;
        out[4..4 + N_PROG].copy_from_slice(&a.self_msg.0);
        out[4 + N_PROG..4 + 2 * N_PROG].copy_from_slice(&a.other_msg.0);
        out[AGENT_ROW - 1] = 1.0;
    }

    let bots = world.robots.iter().enumerate().map(|(j, b)| (EntityId::Robot(j), b.pos));
    for (row, nb) in nearest_k(me.pos, bots, shape.n_robots, size).iter().enumerate() {
        let EntityId::Robot(j) = nb.id else { unreachable!() };
        let out = &mut obs.robots[row * ROBOT_ROW..(row + 1) * ROBOT_ROW];
        out[0] = nb.delta[0];
        out[1] = nb.delta[1];
        out[2..2 + N_PROG].copy_from_slice(&world.robots[j].memory.0);
        out[ROBOT_ROW - 1] = 1.0;
    }

    let s = &mut obs.self_feats;
    s[0] = me.energy;
    s[1] = me.age as f32;
    s[2..2 + N_PROG].copy_from_slice(&me.self_msg.0);
    s[2 + N_PROG..SELF_FEATS].copy_from_slice(&me.other_msg.0);
    obs
}

/// Every other entity within `radius` of `origin`, in id order.
pub(crate) fn entities_within(world: &WorldState, origin: Pos, radius: f32, exclude: EntityId) -> Vec<EntityId> {
    let size = world.cfg.world_size();
    let r2 = (radius as f64) * (radius as f64);
    let agents = world
        .agents
        .iter()
        .enumerate()
        .filter(|(_, a)| a.alive)
        .map(|(j, a)| (EntityId::Agent(j), a.pos));
    let bots = world.robots.iter().enumerate().map(|(j, b)| (EntityId::Robot(j), b.pos));
    agents
        .chain(bots)
        .filter(|&(id, p)| id != exclude && dist2(origin, p, size) <= r2)
        .map(|(id, _)| id)
        .collect()
}

pub(crate) fn displace(world: &mut WorldState, targets: &[EntityId], by: [f32; 2]) {
    let size = world.cfg.world_size();
    for &id in targets {
        let p = match id {
            EntityId::Agent(j) => &mut world.agents[j].pos,
            EntityId::Robot(j) => &mut world.robots[j].pos,
        };
        *p = wrap_pos([p[0] + by[0], p[1] + by[1]], size);
    }
}

/// Deliver `msg` as other-message to the nearest `n` alive agents and as
/// program to the single nearest robot.
pub(crate) fn broadcast(world: &mut WorldState, from: EntityId, origin: Pos, msg: ActionVector) {
    let size = world.cfg.world_size();
    let n = world.cfg.n_view_agents;
    let agents = world
        .agents
        .iter()
        .enumerate()
        .filter(|&(j, a)| a.alive && from != EntityId::Agent(j))
        .map(|(j, a)| (EntityId::Agent(j), a.pos));
    let targets = nearest_k(origin, agents, n, size);
    let bots = world
        .robots
        .iter()
        .enumerate()
        .filter(|&(j, _)| from != EntityId::Robot(j))
        .map(|(j, b)| (EntityId::Robot(j), b.pos));
    let bot = nearest_k(origin, bots, 1, size);
    for t in targets {
        if let EntityId::Agent(j) = t.id {
            world.agents[j].other_msg = msg;
        }
    }
    if let Some(EntityId::Robot(j)) = bot.first().map(|b| b.id) {
        world.robots[j].program = msg;
    }
}

/// Apply one agent's action vector in the fixed sub-action order, charging
/// energy and recording everything in the ledger. Returns true if a birth
/// was queued.
pub fn apply_agent_action(world: &mut WorldState, i: usize, act: &ActionVector, ledger: &mut StepLedger) -> bool {
    let act = act.clamped();
    let cfg = world.cfg.clone();
    let theta = cfg.act_threshold;
    let size = cfg.world_size();
    let mut spent = EnergyTally::ZERO;
    let pay = |world: &mut WorldState, amount: f32, spent: &mut EnergyTally| {
        if amount > 0.0 {
            *spent += charge(&mut world.agents[i].energy, amount);
        }
    };
    let cost_here = |world: &WorldState| {
        let g = &world.grid;
        g.action_cost[g.index_at(world.agents[i].pos)]
    };

    // 1. movement, priced at the origin cell
    let (mx, my) = (act[MOVE_X], act[MOVE_Y]);
    let c = cost_here(world);
    {
        let a = &mut world.agents[i];
        a.pos = wrap_pos([a.pos[0] + mx * cfg.move_speed, a.pos[1] + my * cfg.move_speed], size);
    }
    pay(world, c * (mx.abs() + my.abs()), &mut spent);

    // 2. eat
    let cell = world.grid.index_at(world.agents[i].pos);
    let c = world.grid.action_cost[cell];
    let want = cfg.eat_rate * act[EAT].max(0.0);
    if want > 0.0 {
        let old = world.grid.energy[cell];
        let transfer = want.min(old);
        let new = (old - transfer).max(0.0);
        world.grid.energy[cell] = new;
        ledger.eaten_from_cells.add(old);
        ledger.eaten_from_cells.sub(new);
        let a = &mut world.agents[i];
        let before = a.energy;
        a.energy += transfer;
        ledger.eaten_by_agents.add(a.energy);
        ledger.eaten_by_agents.sub(before);
    }
    pay(world, c * act[EAT].abs(), &mut spent);

    // 3. terraform (agent-priced)
    let pos = world.agents[i].pos;
    let t = world.grid.apply_terraform(pos, act[TERRAIN_ENERGY_GAIN], false, &cfg);
    pay(world, t, &mut spent);

    // 4. push
    let c = cost_here(world);
    let mut push_cost = c * act[PUSH].abs();
    if act[PUSH] > theta {
        let targets = entities_within(world, pos, cfg.push_radius, EntityId::Agent(i));
        let k = cfg.push_strength * act[PUSH];
        displace(world, &targets, [mx * k, my * k]);
        push_cost += c * act[PUSH] * targets.len() as f32;
    }
    pay(world, push_cost, &mut spent);

    // 5. send: current self-message to nearest agents and nearest robot
    if act[SEND_MESSAGE] > theta {
        let msg = world.agents[i].self_msg;
        broadcast(world, EntityId::Agent(i), pos, msg);
    }
    pay(world, c * act[SEND_MESSAGE].abs(), &mut spent);

    // 6. self-message
    if act[WRITE_SELF_MESSAGE] > theta {
        world.agents[i].self_msg = act;
    }
    pay(world, c * act[WRITE_SELF_MESSAGE].abs(), &mut spent);

    // 7. reproduction request (charged whether or not it succeeds)
    let queued = act[REPRODUCE] > theta
        && world.agents[i].energy >= cfg.repro_energy_min
        && world.agents.iter().any(|a| !a.alive);
    pay(world, c * act[REPRODUCE].abs(), &mut spent);

    ledger.action_costs += spent;

    // 8. upkeep grows with age
    let a = &mut world.agents[i];
    let up = cfg.upkeep_base * (1.0 + cfg.aging_coeff * a.age as f32);
    let u = charge(&mut a.energy, up);
    a.age += 1;
    ledger.upkeep += u;
    spent += u;
    ledger.agent_spend.push((i, spent));
    queued
}

/// Place a mutated copy of `parent` in the lowest dead slot, splitting the
/// parent's energy evenly. Returns the child's slot, or `None` if every slot
/// is occupied (the parent is then left untouched).
pub fn spawn_child(world: &mut WorldState, parent: usize, ledger: &mut StepLedger) -> Option<usize> {
    let slot = world.agents.iter().position(|a| !a.alive)?;
    let p = &world.agents[parent];
    if !p.alive {
        return None;
    }
    let params = mutate(&p.params, &mut world.rng.mutation, world.cfg.mutation_sigma);
    let off: [f32; 2] = [world.rng.placement.gen_range(-1.0..=1.0), world.rng.placement.gen_range(-1.0..=1.0)];
    let pos = wrap_pos([p.pos[0] + off[0], p.pos[1] + off[1]], world.cfg.world_size());
    let half = p.energy / 2.0;
    world.agents[parent].energy -= half;
    world.agents[slot] = AgentState::newborn(pos, half, params);
    ledger.birth_transfer.add(half);
    ledger.births += 1;
    Some(slot)
}

/// Mark starved agents dead; if none survive (and the config allows it),
/// repopulate every slot from the init stream.
pub fn cull_and_reinit(world: &mut WorldState, ledger: &mut StepLedger) {
    for a in world.agents.iter_mut().filter(|a| a.alive && a.energy <= 0.0) {
        a.alive = false;
        a.energy = 0.0;
        ledger.deaths += 1;
    }
    if world.cfg.reinit_on_extinction && !world.agents.iter().any(|a| a.alive) {
        reinit_population(world, ledger);
    }
}

pub(crate) fn reinit_population(world: &mut WorldState, ledger: &mut StepLedger) {
    let size = world.cfg.world_size();
    for slot in 0..world.agents.len() {
        let params = init_params(&world.shape, &mut world.rng.init);
        let pos = [world.rng.init.gen_range(0.0..size), world.rng.init.gen_range(0.0..size)];
        world.agents[slot] = AgentState::newborn(wrap_pos(pos, size), world.cfg.start_energy, params);
        ledger.reinit_energy.add(world.cfg.start_energy);
    }
    ledger.reinitialized = true;
}
