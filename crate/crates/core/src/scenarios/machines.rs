//! The four useful machines.

use crate::action::*;
use crate::error::ScenarioError;
use crate::geometry::EntityId;
use crate::robot_vm::{encode, Instruction};

use super::{cell_center, Fragment, InertAgent, Inputs};

/// Walks +y forever and fertilizes every cell it enters.
pub fn make_terraformer() -> (ActionVector, ActionVector) {
    let memory = ActionVector::with(&[(MOVE_Y, 1.0), (TERRAIN_ENERGY_GAIN, 1.0)]);
    (encode(Instruction::Noop, [0.0; 8]), memory)
}

/// Shuttles along x, reading the terrain bit each substep. A set bit,
/// combined with a companion broadcasting `MOVE_X = 1, INFO = 1`, flips the
/// sign of the movement through XOR.
pub fn make_patroller() -> (ActionVector, ActionVector) {
    let memory = ActionVector::with(&[(MOVE_X, 1.0), (WRITE_TERRAIN, 1.0), (WRITE_SELF_MESSAGE, 1.0)]);
    (encode(Instruction::Xor, [0.0; 8]), memory)
}

/// FMA with move and push set: `mem * m1 + m2` reproduces the memory while
/// the nearest entity broadcasts ones.
pub fn make_transporter() -> (ActionVector, ActionVector) {
    let memory = ActionVector::with(&[(MOVE_X, 1.0), (PUSH, 1.0)]);
    (encode(Instruction::Fma, [0.0; 8]), memory)
}

/// Message the patroller's companion broadcasts.
pub fn patrol_beacon() -> ActionVector {
    ActionVector::with(&[(MOVE_X, 1.0), (INFO_BIT, 1.0)])
}

/// A chain of `n` robots along +x: robot 0 holds `head` and every other
/// robot copies the information bit of its left neighbour. Gaps grow
/// strictly so each robot's nearest entity is its predecessor.
pub fn make_comm_chain(n: usize, head: bool, grid_size: usize) -> Result<Fragment, ScenarioError> {
    if n < 2 {
        return Err(ScenarioError::Infeasible("a chain needs at least 2 robots".into()));
    }
    // gap i is 1 + i/(2n): always in [1, 1.5)
    let gaps: Vec<f64> = (1..n).map(|i| 1.0 + i as f64 / (2 * n) as f64).collect();
    let span: f64 = gaps.iter().sum();
    if span + 3.0 > grid_size as f64 {
        return Err(ScenarioError::Infeasible(format!("chain of {n} spans {span:.1} cells, grid is {grid_size}")));
    }
    let mut f = Fragment::new(grid_size);
    let y = grid_size as f32 / 2.0 + 0.5;
    let mut x = 1.0f64;
    let head_mem = ActionVector::with(&[(WRITE_SELF_MESSAGE, 1.0), (INFO_BIT, bit_value(head))]);
    f.robot([x as f32, y], encode(Instruction::Noop, [0.0; 8]), head_mem);
    // LOOKUP index is 4*mem + 2*m1 + m2; the result is m1's bit
    let copy_m1 = [0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0];
    for g in gaps {
        x += g;
        let j = f.robot([x as f32, y], encode(Instruction::Lookup, copy_m1), ActionVector::with(&[(WRITE_SELF_MESSAGE, 1.0)]));
        f.wiring.push((j, Inputs::First(EntityId::Robot(j - 1))));
    }
    Ok(f)
}

/// A terraformer at the bottom of column `x` in a 32-cell world.
pub fn terraformer_fragment(x: usize) -> Fragment {
    let mut f = Fragment::new(32);
    let (p, m) = make_terraformer();
    f.robot(cell_center(x, 0), p, m);
    f
}

/// A patroller between waypoint cells `a < b` on row `y`, starting one cell
/// right of `a` and heading +x, with its companion parked a few rows away.
pub fn patroller_fragment(a: usize, b: usize, y: usize, bits: bool, grid_size: usize) -> Fragment {
    assert!(a < b && b < grid_size && y + 3 < grid_size, "patrol segment must fit the grid");
    let mut f = Fragment::new(grid_size);
    let (p, m) = make_patroller();
    let r = f.robot(cell_center(a + 1, y), p, m);
    f.agents.push(InertAgent { pos: cell_center((a + b) / 2, y + 3), energy: 100.0, message: patrol_beacon() });
    f.wiring.push((r, Inputs::First(EntityId::Agent(0))));
    f.bits.push(([a, y], bits));
    f.bits.push(([b, y], bits));
    f
}

/// A transporter one cell behind an inert agent that broadcasts `message`.
pub fn transporter_fragment(message: ActionVector, grid_size: usize) -> Fragment {
    let mut f = Fragment::new(grid_size);
    let (p, m) = make_transporter();
    let r = f.robot(cell_center(1, grid_size / 2), p, m);
    f.agents.push(InertAgent { pos: cell_center(2, grid_size / 2), energy: 100.0, message });
    f.wiring.push((r, Inputs::First(EntityId::Agent(0))));
    f
}
