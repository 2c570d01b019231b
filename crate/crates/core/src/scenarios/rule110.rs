//! A row of robots running Rule 110 on the terrain bits.
//!
//! Each cell robot holds its bit in memory, steps one row up per substep and
//! writes the next generation there. Its nearest entities are the left and
//! right neighbours at distance 1 (equal distance, so the smaller x comes
//! first), which makes `m1 = left` and `m2 = right`.

use crate::action::*;
use crate::engine::WorldState;
use crate::error::ScenarioError;
use crate::geometry::EntityId;
use crate::robot_vm::{encode, lookup_index, Instruction};

use super::{bit_at, cell_center, Fragment, Inputs};

/// Next state of a cell under Rule 110.
pub fn rule110(l: bool, c: bool, r: bool) -> bool {
    (110u8 >> ((l as u8) << 2 | (c as u8) << 1 | r as u8)) & 1 == 1
}

/// The Rule 110 table reindexed for LOOKUP, where the robot's own bit is
/// the high index bit and the left neighbour the middle one.
pub fn rule110_table() -> [f32; 8] {
    let mut t = [0.0; 8];
    for l in [false, true] {
        for c in [false, true] {
            for r in [false, true] {
                t[lookup_index(c, l, r)] = bit_value(rule110(l, c, r));
            }
        }
    }
    t
}

/// Cell robots occupy cells `1..=width` of row 0, flanked by NOOP walls
/// holding 0 at cells `0` and `width + 1`. Robot `i + 1` is cell `i`.
pub fn build_rule110(initial: &[bool], grid_size: usize) -> Result<Fragment, ScenarioError> {
    let width = initial.len();
    if width == 0 {
        return Err(ScenarioError::Infeasible("empty initial row".into()));
    }
    if width + 2 > grid_size {
        return Err(ScenarioError::Infeasible(format!("width {width} plus walls exceeds grid {grid_size}")));
    }
    let mut f = Fragment::new(grid_size);
    let wall_mem = ActionVector::with(&[(MOVE_Y, 1.0), (WRITE_SELF_MESSAGE, 1.0)]);
    let noop = encode(Instruction::Noop, [0.0; 8]);
    let program = encode(Instruction::Lookup, rule110_table());
    f.robot(cell_center(0, 0), noop, wall_mem);
    for (i, &b) in initial.iter().enumerate() {
        let mem = ActionVector::with(&[
            (MOVE_Y, 1.0),
            (WRITE_TERRAIN, -1.0),
            (WRITE_SELF_MESSAGE, 1.0),
            (INFO_BIT, bit_value(b)),
        ]);
        let j = f.robot(cell_center(i + 1, 0), program, mem);
        f.wiring.push((j, Inputs::Ordered(EntityId::Robot(j - 1), EntityId::Robot(j + 1))));
        f.bits.push(([i + 1, 0], b));
    }
    f.robot(cell_center(width + 1, 0), noop, wall_mem);
    Ok(f)
}

/// Run a Rule 110 world (built from a fragment of [`build_rule110`]) for
/// `steps` ticks and return every generation, read back from the terrain.
pub fn run_rule110(world: &mut WorldState, width: usize, steps: usize) -> Result<Vec<Vec<bool>>, ScenarioError> {
    let row = |w: &WorldState, y: usize| (1..=width).map(|x| bit_at(w, cell_center(x, y % w.grid.size))).collect();
    let mut history = vec![row(world, 0)];
    for t in 0..steps {
        world.tick()?;
        history.push(row(world, t + 1));
    }
    Ok(history)
}
