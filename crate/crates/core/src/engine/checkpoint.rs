//! Binary checkpoint format.
//!
//! ```text
//! "JXLF"  u32 version  u64 body_len
//! body:
//!   u32 len, config as TOML text
//!   u64 step
//!   u64 seed, then u128 word position of the init, mutation, placement streams
//!   grid: u32 size; f32 planes energy, energy_gain, max_energy, action_cost,
//!         base_energy_gain, base_max_energy, base_action_cost (row-major);
//!         u8 info bits; 3 noise fields of (u32 octaves, per octave u32 nodes,
//!         f32 amplitude, f32 angles)
//!   u32 agent slots, u32 params per agent; per slot: u8 alive, f32 pos[2],
//!         f32 energy, u64 age, f32 self_msg[16], other_msg[16], lstm h[64],
//!         c[64], params (neural layout order)
//!   u32 robots; per robot f32 pos[2], program[16], memory[16], last_out[16]
//! u32 CRC32 of everything before it
//! ```
//! All integers and floats little-endian.

use std::path::Path;

use crate::action::{ActionVector, N_PROG};
use crate::agents::AgentState;
use crate::config::SimConfig;
use crate::error::CheckpointError;
use crate::neural::{AgentParams, NetShape, RecurrentState, HIDDEN};
use crate::rng::{Stream, StreamRng};
use crate::robot_vm::RobotState;
use crate::terrain::perlin::{Octave, PerlinField};
use crate::terrain::{AccessCount, Range, TerrainGrid};

use super::{WorldRng, WorldState};

pub const MAGIC: &[u8; 4] = b"JXLF";
pub const VERSION: u32 = 1;
/// File extension used for checkpoints.
pub const CHECKPOINT_EXT: &str = "jxlf";
const HEADER: usize = 4 + 4 + 8;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32s(&mut self, v: &[f32]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() - self.at < n {
            return Err(CheckpointError::Truncated(format!("while reading {what}")));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8, CheckpointError> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn u128(&mut self, what: &str) -> Result<u128, CheckpointError> {
        Ok(u128::from_le_bytes(self.take(16, what)?.try_into().unwrap()))
    }
    fn f32s(&mut self, out: &mut [f32], what: &str) -> Result<(), CheckpointError> {
        let bytes = self.take(out.len() * 4, what)?;
        for (o, b) in out.iter_mut().zip(bytes.chunks_exact(4)) {
            *o = f32::from_le_bytes(b.try_into().unwrap());
        }
        Ok(())
    }
    fn vec(&mut self, n: usize, what: &str) -> Result<Vec<f32>, CheckpointError> {
        let mut v = vec![0.0; n];
        self.f32s(&mut v, what)?;
        Ok(v)
    }
    fn action(&mut self, what: &str) -> Result<ActionVector, CheckpointError> {
        let mut v = ActionVector::ZERO;
        self.f32s(&mut v.0, what)?;
        Ok(v)
    }
}

pub fn encode(world: &WorldState) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(1 << 20));
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u64(0); // body length, patched below

    let cfg = world.cfg.to_toml_string();
    w.u32(cfg.len() as u32);
    w.0.extend_from_slice(cfg.as_bytes());
    w.u64(world.step);
    w.u64(world.rng.seed);
    for s in [&world.rng.init, &world.rng.mutation, &world.rng.placement] {
        w.u128(s.word_pos());
    }

    let g = &world.grid;
    w.u32(g.size as u32);
    for plane in [
        &g.energy,
        &g.energy_gain,
        &g.max_energy,
        &g.action_cost,
        &g.base_energy_gain,
        &g.base_max_energy,
        &g.base_action_cost,
    ] {
        w.f32s(plane);
    }
    w.0.extend_from_slice(&g.info_bits);
    for f in &g.fields {
        w.u32(f.octaves.len() as u32);
        for o in &f.octaves {
            w.u32(o.nodes as u32);
            w.f32s(&[o.amplitude]);
            w.f32s(&o.angles);
        }
    }

    w.u32(world.agents.len() as u32);
    w.u32(world.shape.param_count() as u32);
    for a in &world.agents {
        w.u8(a.alive as u8);
        w.f32s(&a.pos);
        w.f32s(&[a.energy]);
        w.u64(a.age);
        w.f32s(&a.self_msg.0);
        w.f32s(&a.other_msg.0);
        w.f32s(&a.rec.h);
        w.f32s(&a.rec.c);
        w.f32s(&a.params.0);
    }

    w.u32(world.robots.len() as u32);
    for r in &world.robots {
        w.f32s(&r.pos);
        w.f32s(&r.program.0);
        w.f32s(&r.memory.0);
        w.f32s(&r.last_out.0);
    }

    let body = (w.0.len() - HEADER + 4) as u64;
    w.0[8..16].copy_from_slice(&body.to_le_bytes());
    let crc = crc32fast::hash(&w.0);
    w.u32(crc);
    w.0
}

pub fn decode(buf: &[u8]) -> Result<WorldState, CheckpointError> {
    if buf.len() < 4 || &buf[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if buf.len() < HEADER {
        return Err(CheckpointError::Truncated("header".into()));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::Version { found: version, expected: VERSION });
    }
    let body = u64::from_le_bytes(buf[8..16].try_into().unwrap());
    let want = HEADER as u64 + body;
    if (buf.len() as u64) < want {
        return Err(CheckpointError::Truncated(format!("expected {want} bytes, found {}", buf.len())));
    }
    if buf.len() as u64 != want {
        return Err(CheckpointError::Layout(format!("{} trailing bytes", buf.len() as u64 - want)));
    }
    let (data, trailer) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    let computed = crc32fast::hash(data);
    if stored != computed {
        return Err(CheckpointError::Checksum { stored, computed });
    }

    let mut r = Reader { buf: data, at: HEADER };
    let n = r.u32("config length")? as usize;
    let text = std::str::from_utf8(r.take(n, "config")?).map_err(|e| CheckpointError::Layout(e.to_string()))?;
    let cfg = SimConfig::from_toml_str(text)?;
    let shape = NetShape::from_config(&cfg);
    let step = r.u64("step")?;
    let seed = r.u64("seed")?;
    let mut streams = Vec::with_capacity(3);
    for s in [Stream::Init, Stream::Mutation, Stream::Placement] {
        streams.push(StreamRng::restore(seed, s, r.u128("rng position")?));
    }
    let placement = streams.pop().unwrap();
    let mutation = streams.pop().unwrap();
    let init = streams.pop().unwrap();

    let size = r.u32("grid size")? as usize;
    if size != cfg.grid_size {
        return Err(CheckpointError::Layout(format!("grid size {size} disagrees with config {}", cfg.grid_size)));
    }
    let cells = size * size;
    let mut planes = Vec::with_capacity(7);
    for _ in 0..7 {
        planes.push(r.vec(cells, "grid plane")?);
    }
    let info_bits = r.take(cells, "info bits")?.to_vec();
    let mut fields = Vec::with_capacity(3);
    for _ in 0..3 {
        let k = r.u32("octave count")? as usize;
        let mut octaves = Vec::with_capacity(k);
        for _ in 0..k {
            let nodes = r.u32("octave nodes")? as usize;
            let mut amp = [0.0f32];
            r.f32s(&mut amp, "octave amplitude")?;
            let angles = r.vec(nodes * nodes, "octave angles")?;
            octaves.push(Octave { nodes, amplitude: amp[0], angles });
        }
        fields.push(PerlinField { octaves });
    }
    let mut planes = planes.into_iter();
    let mut next = || planes.next().unwrap();
    let grid = TerrainGrid {
        size,
        energy: next(),
        energy_gain: next(),
        max_energy: next(),
        action_cost: next(),
        base_energy_gain: next(),
        base_max_energy: next(),
        base_action_cost: next(),
        info_bits,
        fields: fields.try_into().expect("three fields"),
        gain_range: Range { min: cfg.energy_gain_min, max: cfg.energy_gain_max },
        max_energy_range: Range { min: cfg.max_energy_min, max: cfg.max_energy_max },
        cost_range: Range { min: cfg.action_cost_min, max: cfg.action_cost_max },
        bit_reads: AccessCount::default(),
        bit_writes: AccessCount::default(),
    };

    let slots = r.u32("agent count")? as usize;
    let pc = r.u32("param count")? as usize;
    if slots != cfg.max_agents || pc != shape.param_count() {
        return Err(CheckpointError::Layout(format!(
            "{slots} agents x {pc} params, config implies {} x {}",
            cfg.max_agents,
            shape.param_count()
        )));
    }
    let mut agents = Vec::with_capacity(slots);
    for _ in 0..slots {
        let alive = r.u8("alive flag")? != 0;
        let mut pos = [0.0; 2];
        r.f32s(&mut pos, "agent position")?;
        let mut energy = [0.0];
        r.f32s(&mut energy, "agent energy")?;
        let age = r.u64("agent age")?;
        let self_msg = r.action("self message")?;
        let other_msg = r.action("other message")?;
        let mut rec = RecurrentState::ZERO;
        r.f32s(&mut rec.h, "lstm h")?;
        r.f32s(&mut rec.c, "lstm c")?;
        let params = AgentParams(r.vec(pc, "agent params")?);
        agents.push(AgentState { pos, energy: energy[0], age, self_msg, other_msg, params, rec, alive });
    }

    let nr = r.u32("robot count")? as usize;
    let mut robots = Vec::with_capacity(nr);
    for _ in 0..nr {
        let mut pos = [0.0; 2];
        r.f32s(&mut pos, "robot position")?;
        robots.push(RobotState {
            pos,
            program: r.action("robot program")?,
            memory: r.action("robot memory")?,
            last_out: r.action("robot output")?,
        });
    }
    if r.at != data.len() {
        return Err(CheckpointError::Layout(format!("{} unread bytes", data.len() - r.at)));
    }
    debug_assert_eq!(HIDDEN * 2 + N_PROG * 2, 160);

    Ok(WorldState { cfg, shape, grid, agents, robots, rng: WorldRng { seed, init, mutation, placement }, step })
}

pub fn save(world: &WorldState, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, encode(world))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<WorldState, CheckpointError> {
    decode(&std::fs::read(path)?)
}
