use evoworld_core::engine::checkpoint;
use evoworld_core::error::CheckpointError;
use evoworld_core::action::REPRODUCE;
use evoworld_core::agents::AgentState;
use evoworld_core::neural::Tensor;
use evoworld_core::robot_vm::{decode, Instruction};
use evoworld_core::{EnergyTally, SimConfig, WorldState};

fn small() -> SimConfig {
    SimConfig { grid_size: 32, max_agents: 16, num_robots: 4, k_bot_substeps: 2, ..SimConfig::default() }
}

#[test]
fn init_is_reproducible() {
    let a = WorldState::init(&small(), 7);
    let b = WorldState::init(&small(), 7);
    assert_eq!(a.checksum(), b.checksum());
    assert_eq!(a.alive(), 16);
    assert_eq!(a.step, 0);
    assert_ne!(a.checksum(), WorldState::init(&small(), 8).checksum());
}

#[test]
fn fresh_robots_decode_to_copy() {
    let w = WorldState::init(&small(), 1);
    assert_eq!(w.robots.len(), 4);
    for r in &w.robots {
        assert_eq!(decode(&r.program).instruction, Instruction::Copy);
    }
}

#[test]
fn extinct_world_reinitializes_and_counts_the_step() {
    let mut w = WorldState::init(&small(), 3);
    for a in &mut w.agents {
        a.alive = false;
        a.energy = 0.0;
    }
    let l = w.tick().unwrap();
    assert!(l.reinitialized);
    assert_eq!(w.step, 1);
    assert_eq!(w.alive(), 16);
}

#[test]
fn run_zero_is_identity_and_runs_compose() {
    let mut w = WorldState::init(&small(), 5);
    let before = w.clone();
    w.run(0, |_, _| {}).unwrap();
    assert_eq!(w, before);

    let mut whole = before.clone();
    whole.run(30, |_, _| {}).unwrap();
    let mut split = before;
    split.run(12, |_, _| {}).unwrap();
    split.run(18, |_, _| {}).unwrap();
    assert_eq!(whole.checksum(), split.checksum());
    assert_eq!(whole.step, 30);
}

#[test]
fn ledger_identity_holds_every_tick() {
    let mut w = WorldState::init(&small(), 11);
    for _ in 0..300 {
        let before = w.energy_totals();
        let l = w.tick().unwrap();
        let after = w.energy_totals();
        assert_eq!(after.agents - before.agents, l.agent_delta(), "agents at step {}", l.step);
        assert_eq!(after.cells - before.cells, l.cell_delta(), "cells at step {}", l.step);
        // per-agent spend adds up to the totals
        let per_agent: EnergyTally = l.agent_spend.iter().fold(EnergyTally::ZERO, |acc, (_, t)| acc + *t);
        assert_eq!(per_agent, l.spent());
        assert!(w.alive() <= w.cfg.max_agents);
    }
}

#[test]
fn dead_slots_hold_no_energy() {
    let mut w = WorldState::init(&small(), 13);
    w.run(200, |w, _| {
        for a in w.agents.iter().filter(|a| !a.alive) {
            assert_eq!(a.energy, 0.0);
        }
    })
    .unwrap();
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let mut w = WorldState::init(&small(), 17);
    w.run(25, |_, _| {}).unwrap();
    let bytes = checkpoint::encode(&w);
    let back = checkpoint::decode(&bytes).unwrap();
    assert_eq!(back, w);
    assert_eq!(checkpoint::encode(&back), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.ckpt");
    checkpoint::save(&w, &path).unwrap();
    assert_eq!(checkpoint::load(&path).unwrap(), w);
}

#[test]
fn restored_world_continues_identically() {
    let mut w = WorldState::init(&small(), 19);
    w.run(10, |_, _| {}).unwrap();
    let mut restored = checkpoint::decode(&checkpoint::encode(&w)).unwrap();
    w.run(2, |_, _| {}).unwrap();
    restored.run(2, |_, _| {}).unwrap();
    assert_eq!(w.checksum(), restored.checksum());
}

#[test]
fn checkpoint_errors_are_distinct() {
    let w = WorldState::init(&small(), 23);
    let bytes = checkpoint::encode(&w);

    let mut corrupt = bytes.clone();
    let mid = corrupt.len() / 2;
    corrupt[mid] ^= 0x40;
    assert!(matches!(checkpoint::decode(&corrupt), Err(CheckpointError::Checksum { .. })));

    let mut v99 = bytes.clone();
    v99[4..8].copy_from_slice(&99u32.to_le_bytes());
    assert!(matches!(checkpoint::decode(&v99), Err(CheckpointError::Version { found: 99, expected: 1 })));

    assert!(matches!(checkpoint::decode(&bytes[..bytes.len() - 10]), Err(CheckpointError::Truncated(_))));
    assert!(matches!(checkpoint::decode(b"PNG\x00rest"), Err(CheckpointError::BadMagic)));
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut w = WorldState::init(&small(), 29);
            w.run(40, |_, _| {}).unwrap();
            w.checksum()
        })
    };
    assert_eq!(run(1), run(4));
}


#[test]
fn ledger_identity_holds_through_births() {
    let mut w = WorldState::init(&small(), 19);
    let shape = w.shape;
    let rich = 4.0 * w.cfg.repro_energy_min;
    for (i, a) in w.agents.iter_mut().enumerate() {
        if i % 2 == 1 {
            *a = AgentState::dead(&shape);
        } else {
            a.energy = rich;
            a.params.tensor_mut(&shape, Tensor::OutB)[REPRODUCE] = 10.0;
        }
    }
    let mut births = 0;
    for _ in 0..5 {
        let before = w.energy_totals();
        let l = w.tick().unwrap();
        let after = w.energy_totals();
        births += l.births;
        assert_eq!(after.agents - before.agents, l.agent_delta(), "agents at step {}", l.step);
        assert_eq!(after.cells - before.cells, l.cell_delta(), "cells at step {}", l.step);
    }
    assert!(births >= 8, "{births} births");
}
