//! The programmable robot substrate: program decoding, the seven
//! instructions, and proximity-based message intake.

use crate::action::*;
use crate::agents::{broadcast, displace, entities_within};
use crate::engine::{StepLedger, WorldState};
use crate::error::NumericError;
use crate::geometry::{nearest_k, wrap_pos, EntityId, Pos};

/// Number of instruction flags at the head of a program.
pub const N_INSTR: usize = 7;
/// First program index of the 8-entry lookup table.
pub const TABLE_START: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Copy,
    Noop,
    Product,
    Fma,
    Xor,
    Nand,
    Lookup,
}

impl Instruction {
    pub const ALL: [Instruction; N_INSTR] = [
        Instruction::Copy,
        Instruction::Noop,
        Instruction::Product,
        Instruction::Fma,
        Instruction::Xor,
        Instruction::Nand,
        Instruction::Lookup,
    ];

    /// Program index of this instruction's flag.
    pub fn flag(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Instruction::Copy => "COPY",
            Instruction::Noop => "NOOP",
            Instruction::Product => "PRODUCT",
            Instruction::Fma => "FMA",
            Instruction::Xor => "XOR",
            Instruction::Nand => "NAND",
            Instruction::Lookup => "LOOKUP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedProgram {
    pub instruction: Instruction,
    pub table: [f32; 8],
}

/// A robot's persistent state. `last_out` is the previous substep's output;
/// its WRITE_TERRAIN entry gates the terrain read at the next substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pos: Pos,
    pub program: ActionVector,
    pub memory: ActionVector,
    pub last_out: ActionVector,
}

impl RobotState {
    pub fn new(pos: Pos, program: ActionVector, memory: ActionVector) -> Self {
        RobotState { pos, program, memory, last_out: ActionVector::ZERO }
    }
}

/// Argmax over the instruction flags (lowest index wins ties); the table is
/// read from the tail of the program. NaN flags never win.
pub fn decode(program: &ActionVector) -> DecodedProgram {
    let mut best = 0;
    for i in 1..N_INSTR {
        if program[i] > program[best] || (program[best].is_nan() && !program[i].is_nan()) {
            best = i;
        }
    }
    let mut table = [0.0; 8];
    table.copy_from_slice(&program.0[TABLE_START..TABLE_START + 8]);
    DecodedProgram { instruction: Instruction::ALL[best], table }
}

/// Program vector selecting one instruction with the given table.
pub fn encode(instruction: Instruction, table: [f32; 8]) -> ActionVector {
    let mut p = ActionVector::ZERO;
    p[instruction.flag()] = 1.0;
    p.0[TABLE_START..].copy_from_slice(&table);
    p
}

/// Apply one instruction. The result is clamped into `[-1, 1]`.
pub fn execute(
    dec: &DecodedProgram,
    mem: &ActionVector,
    m1: &ActionVector,
    m2: &ActionVector,
    threshold: f32,
) -> Result<ActionVector, NumericError> {
    for (name, v) in [("mem", mem), ("m1", m1), ("m2", m2)] {
        if !v.is_finite() {
            return Err(NumericError::NonFinite(format!("robot input {name}")));
        }
    }
    let mut out = ActionVector::ZERO;
    match dec.instruction {
        Instruction::Copy => out = *m1,
        Instruction::Noop => out = *mem,
        Instruction::Product => {
            for j in 0..N_PROG {
                out[j] = mem[j] * m1[j];
            }
        }
        Instruction::Fma => {
            for j in 0..N_PROG {
                out[j] = mem[j] * m1[j] + m2[j];
            }
        }
        Instruction::Xor => {
            let b = mem.info_bit(threshold) ^ m1.info_bit(threshold);
            let sign = 2.0 * bit_value(b) - 1.0;
            for j in 0..N_PROG {
                out[j] = sign * m1[j] * mem[j] + (1.0 - m1[j]) * mem[j];
            }
        }
        Instruction::Nand => {
            for j in 0..N_PROG {
                out[j] = 1.0 - m1[j] * m2[j];
            }
        }
        Instruction::Lookup => {
            out = *mem;
            let idx = lookup_index(mem.info_bit(threshold), m1.info_bit(threshold), m2.info_bit(threshold));
            out[INFO_BIT] = bit_value(binarize(dec.table[idx], threshold));
        }
    }
    Ok(out.clamped())
}

/// LOOKUP index: memory bit is the most significant, m2 the least.
#[inline]
pub fn lookup_index(mem: bool, m1: bool, m2: bool) -> usize {
    (mem as usize) << 2 | (m1 as usize) << 1 | m2 as usize
}

/// One entity as seen by a robot gathering inputs.
#[derive(Debug, Clone, Copy)]
pub struct Broadcast {
    pub id: EntityId,
    pub pos: Pos,
    /// An agent's self-message or a robot's memory.
    pub message: ActionVector,
}

/// The two nearest other entities' messages, nearer first; missing inputs
/// are zero vectors.
pub fn gather_inputs(me: EntityId, pos: Pos, entities: &[Broadcast], world_size: f32) -> (ActionVector, ActionVector) {
    let near = nearest_k(pos, entities.iter().filter(|e| e.id != me).map(|e| (e.id, e.pos)), 2, world_size);
    let msg = |k: usize| {
        near.get(k)
            .and_then(|n| entities.iter().find(|e| e.id == n.id))
            .map(|e| e.message)
            .unwrap_or(ActionVector::ZERO)
    };
    (msg(0), msg(1))
}

/// One synchronous round of robot updates: read gated terrain bits, compute
/// every robot's output from a common snapshot, then apply effects in robot
/// index order. Robots never spend energy.
pub fn substep_round(world: &mut WorldState, ledger: &mut StepLedger) -> Result<(), NumericError> {
    let theta = world.cfg.act_threshold;
    let size = world.cfg.world_size();

    // (1) terrain reads requested by the previous output
    for r in world.robots.iter_mut() {
        if r.last_out[WRITE_TERRAIN] > theta {
            r.memory[INFO_BIT] = bit_value(world.grid.read_bit(r.pos) == 1);
        }
    }

    // (2)+(3) snapshot and compute
    let entities: Vec<Broadcast> = world
        .agents
        .iter()
        .enumerate()
        .filter(|(_, a)| a.alive)
        .map(|(i, a)| Broadcast { id: EntityId::Agent(i), pos: a.pos, message: a.self_msg })
        .chain(
            world
                .robots
                .iter()
                .enumerate()
                .map(|(j, r)| Broadcast { id: EntityId::Robot(j), pos: r.pos, message: r.memory }),
        )
        .collect();
    let outs: Vec<ActionVector> = world
        .robots
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let (m1, m2) = gather_inputs(EntityId::Robot(j), r.pos, &entities, size);
            execute(&decode(&r.program), &r.memory, &m1, &m2, theta)
                .map_err(|e| NumericError::NonFinite(format!("robot {j}: {e}")))
        })
        .collect::<Result<_, _>>()?;

    // (4)+(5) apply in index order
    let cfg = world.cfg.clone();
    for (j, out) in outs.into_iter().enumerate() {
        let sent = world.robots[j].memory;
        let (mx, my) = (out[MOVE_X], out[MOVE_Y]);
        let pos = {
            let r = &mut world.robots[j];
            r.pos = wrap_pos([r.pos[0] + mx * cfg.move_speed, r.pos[1] + my * cfg.move_speed], size);
            r.pos
        };
        world.grid.apply_terraform(pos, out[TERRAIN_ENERGY_GAIN], true, &cfg);
        if out[PUSH] > theta {
            let targets = entities_within(world, pos, cfg.push_radius, EntityId::Robot(j));
            let k = cfg.push_strength * out[PUSH];
            displace(world, &targets, [mx * k, my * k]);
        }
        if out[SEND_MESSAGE] > theta {
            broadcast(world, EntityId::Robot(j), pos, sent);
        }
        if out[WRITE_TERRAIN] < -theta {
            world.grid.write_bit(pos, out.info_bit(theta));
        }
        let r = &mut world.robots[j];
        if out[WRITE_SELF_MESSAGE] > theta {
            r.memory = out;
        }
        r.last_out = out;
        ledger.robot_terraform_sum += out[TERRAIN_ENERGY_GAIN] as f64;
        ledger.robot_actions += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f32 = 0.5;

    fn bit_vec(b: bool) -> ActionVector {
        ActionVector::with(&[(INFO_BIT, bit_value(b))])
    }

    #[test]
    fn decode_rules() {
        assert_eq!(decode(&ActionVector::ZERO).instruction, Instruction::Copy);
        let mut p = ActionVector::ZERO;
        p.0[..3].copy_from_slice(&[0.2, 0.9, 0.2]);
        assert_eq!(decode(&p).instruction, Instruction::Noop);
        let table = [0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let d = decode(&encode(Instruction::Lookup, table));
        assert_eq!(d.instruction, Instruction::Lookup);
        assert_eq!(d.table, table);
        // ties go to the lowest index
        let mut p = ActionVector::ZERO;
        p[3] = 0.7;
        p[5] = 0.7;
        assert_eq!(decode(&p).instruction, Instruction::Fma);
    }

    #[test]
    fn lookup_exhaustive() {
        // table entry k is 1 iff k is odd or k == 6: an arbitrary pattern
        let table: [f32; 8] = std::array::from_fn(|k| if k % 2 == 1 || k == 6 { 1.0 } else { 0.0 });
        let dec = DecodedProgram { instruction: Instruction::Lookup, table };
        for k in 0..8 {
            let (a, b, c) = (k & 4 != 0, k & 2 != 0, k & 1 != 0);
            let mut mem = bit_vec(a);
            mem[MOVE_X] = 0.25;
            let out = execute(&dec, &mem, &bit_vec(b), &bit_vec(c), T).unwrap();
            assert_eq!(out[INFO_BIT], table[k], "index {k}");
            assert_eq!(out[MOVE_X], 0.25);
        }
    }

    #[test]
    fn xor_and_nand_bits() {
        let xor = DecodedProgram { instruction: Instruction::Xor, table: [0.0; 8] };
        let nand = DecodedProgram { instruction: Instruction::Nand, table: [0.0; 8] };
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            let out = execute(&nand, &ActionVector::ZERO, &bit_vec(a), &bit_vec(b), T).unwrap();
            assert_eq!(out[INFO_BIT], bit_value(!(a && b)));
            // XOR: the info entry is mem^i scaled by the sign, only where m1^i=1
            let mem = bit_vec(a);
            let m1 = bit_vec(b);
            let out = execute(&xor, &mem, &m1, &ActionVector::ZERO, T).unwrap();
            let sign = if a ^ b { 1.0 } else { -1.0 };
            let want = if b { sign * bit_value(a) } else { bit_value(a) };
            assert_eq!(out[INFO_BIT], want, "{a} {b}");
        }
    }

    #[test]
    fn algebraic_identities() {
        let mem = ActionVector::from(std::array::from_fn(|k| (k as f32 * 0.3).sin()));
        let m1 = ActionVector::from(std::array::from_fn(|k| (k as f32 * 0.7).cos()));
        let xor = DecodedProgram { instruction: Instruction::Xor, table: [0.0; 8] };
        assert_eq!(execute(&xor, &mem, &ActionVector::ZERO, &m1, T).unwrap(), mem);
        let fma = DecodedProgram { instruction: Instruction::Fma, table: [0.0; 8] };
        let copy = DecodedProgram { instruction: Instruction::Copy, table: [0.0; 8] };
        assert_eq!(
            execute(&fma, &ActionVector::ONES, &m1, &ActionVector::ZERO, T).unwrap(),
            execute(&copy, &mem, &m1, &mem, T).unwrap()
        );
        let nand = DecodedProgram { instruction: Instruction::Nand, table: [0.0; 8] };
        assert_eq!(execute(&nand, &mem, &ActionVector::ONES, &ActionVector::ONES, T).unwrap(), ActionVector::ZERO);
    }

    #[test]
    fn transporter_output() {
        let fma = DecodedProgram { instruction: Instruction::Fma, table: [0.0; 8] };
        let mem = ActionVector::with(&[(MOVE_X, 1.0), (PUSH, 1.0)]);
        let out = execute(&fma, &mem, &ActionVector::ONES, &ActionVector::ZERO, T).unwrap();
        assert_eq!(out, mem);
        assert_eq!(out[WRITE_SELF_MESSAGE], 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        let mut bad = ActionVector::ZERO;
        bad[2] = f32::INFINITY;
        let noop = DecodedProgram { instruction: Instruction::Noop, table: [0.0; 8] };
        let err = execute(&noop, &ActionVector::ZERO, &bad, &ActionVector::ZERO, T).unwrap_err();
        assert!(err.to_string().contains("m1"));
    }

    #[test]
    fn inputs_by_distance_then_x() {
        let me = EntityId::Robot(0);
        let bc = |id, x: f32, y: f32, v: f32| Broadcast { id, pos: [x, y], message: ActionVector::with(&[(0, v)]) };
        let ents = vec![
            bc(me, 5.0, 5.0, 9.0),
            bc(EntityId::Agent(0), 7.0, 5.0, 1.0),
            bc(EntityId::Agent(1), 3.0, 5.0, 2.0),
            bc(EntityId::Robot(1), 5.0, 9.0, 3.0),
        ];
        let (m1, m2) = gather_inputs(me, [5.0, 5.0], &ents, 64.0);
        assert_eq!((m1[0], m2[0]), (2.0, 1.0));

        let ents = vec![bc(me, 5.0, 5.0, 9.0), bc(EntityId::Agent(3), 6.0, 5.0, 4.0), bc(EntityId::Agent(1), 7.0, 5.0, 5.0)];
        let (m1, m2) = gather_inputs(me, [5.0, 5.0], &ents, 64.0);
        assert_eq!((m1[0], m2[0]), (4.0, 5.0));

        let (m1, m2) = gather_inputs(me, [5.0, 5.0], &ents[..1], 64.0);
        assert_eq!((m1, m2), (ActionVector::ZERO, ActionVector::ZERO));
    }
}
