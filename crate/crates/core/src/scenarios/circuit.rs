//! Truth table to NAND network to robot tree.
//!
//! Synthesis is a Shannon expansion on the highest input,
//! `f = x ? f1 : f0 = nand(nand(!x, f0), nand(x, f1))`, with constant
//! folding and a few single-gate shortcuts. The network is laid out as a
//! binary tree whose leaves (input bits and constants) sit in column 0; a
//! node in column `c` is a gate or a COPY passthrough and becomes correct
//! `c` substeps after the start.
//!
//! Gates run LOOKUP with a NAND table rather than the NAND instruction: the
//! latter applies `1 - m1*m2` to every entry, which would clear the memory
//! write flag the gate needs to hold its result.

use crate::action::*;
use crate::error::ScenarioError;
use crate::geometry::EntityId;
use crate::robot_vm::{encode, Instruction};

use super::{validate_placement, Fragment, Inputs};

/// A NAND-only formula over inputs `x0..`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(bool),
    Var(usize),
    Nand(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Gate levels on the longest path; leaves are 0.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Nand(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn gates(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Nand(a, b) => 1 + a.gates() + b.gates(),
        }
    }

    /// Value with input `i` set to bit `i` of `row`.
    pub fn eval(&self, row: usize) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Var(i) => (row >> i) & 1 == 1,
            Expr::Nand(a, b) => !(a.eval(row) && b.eval(row)),
        }
    }
}

fn not(a: Expr) -> Expr {
    match a {
        Expr::Const(b) => Expr::Const(!b),
        Expr::Nand(p, q) if p == q => *p,
        a => Expr::Nand(Box::new(a.clone()), Box::new(a)),
    }
}

fn nand(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(false), _) | (_, Expr::Const(false)) => Expr::Const(true),
        (Expr::Const(true), x) | (x, Expr::Const(true)) => not(x),
        (a, b) => Expr::Nand(Box::new(a), Box::new(b)),
    }
}

/// NAND formula for a table of `2^n` entries, entry `row` holding the value
/// at inputs `x_i = (row >> i) & 1`.
pub fn synthesize(table: &[bool]) -> Expr {
    let len = table.len();
    assert!(len.is_power_of_two(), "truth table length must be a power of two");
    let n = len.trailing_zeros() as usize;
    if table.iter().all(|&b| b == table[0]) {
        return Expr::Const(table[0]);
    }
    // one literal or one gate over literals
    for i in 0..n {
        let x = Expr::Var(i);
        if table.iter().enumerate().all(|(r, &b)| b == x.eval(r)) {
            return x;
        }
        for j in i..n {
            let g = Expr::Nand(Box::new(Expr::Var(i)), Box::new(Expr::Var(j)));
            if table.iter().enumerate().all(|(r, &b)| b == g.eval(r)) {
                return g;
            }
        }
    }
    let (lo, hi) = table.split_at(len / 2);
    if lo == hi {
        return synthesize(lo);
    }
    let x = Expr::Var(n - 1);
    nand(nand(not(x.clone()), synthesize(lo)), nand(x, synthesize(hi)))
}

/// What a column-0 robot holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leaf {
    Input(usize),
    Const(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub inputs: usize,
    pub table: Vec<bool>,
    pub expr: Expr,
    /// Placement with every input bit 0.
    pub fragment: Fragment,
    pub leaves: Vec<(usize, Leaf)>,
    /// Robot whose memory bit is the result.
    pub output: usize,
    /// Substeps until the output is valid.
    pub schedule: usize,
}

impl Circuit {
    /// The fragment with the leaves holding input row `row`.
    pub fn fragment_for(&self, row: usize) -> Fragment {
        let mut f = self.fragment.clone();
        for &(j, leaf) in &self.leaves {
            let b = match leaf {
                Leaf::Input(i) => (row >> i) & 1 == 1,
                Leaf::Const(b) => b,
            };
            f.robots[j].memory[INFO_BIT] = bit_value(b);
        }
        f
    }
}

/// Leaf spacing along y.
const SPACING: f64 = 0.5;

/// A node in column `c` covers leaf slots `[i 2^c, (i+1) 2^c)` and sits
/// centred on them. Column offsets grow so that, with children at
/// `±s 2^(c-2)` in y, a node's two children are strictly its nearest
/// entities.
fn node_pos(c: usize, i: usize, origin: [f64; 2]) -> [f32; 2] {
    let s = SPACING;
    let x: f64 = (1..=c).map(|j| 1.5 * s * 2f64.powi(j as i32 - 2)).sum();
    let w = (1usize << c) as f64;
    let y = s * (i as f64 * w + (w - 1.0) / 2.0);
    [(origin[0] + x) as f32, (origin[1] + y) as f32]
}

struct Builder {
    frag: Fragment,
    leaves: Vec<(usize, Leaf)>,
    origin: [f64; 2],
}

impl Builder {
    fn place(&mut self, e: &Expr, c: usize, i: usize) -> usize {
        let pos = node_pos(c, i, self.origin);
        let hold = ActionVector::with(&[(WRITE_SELF_MESSAGE, 1.0)]);
        if c == 0 {
            let leaf = match e {
                Expr::Const(b) => Leaf::Const(*b),
                Expr::Var(v) => Leaf::Input(*v),
                Expr::Nand(..) => unreachable!("gates never reach column 0"),
            };
            let j = self.frag.robot(pos, encode(Instruction::Noop, [0.0; 8]), hold);
            self.leaves.push((j, leaf));
            return j;
        }
        if e.depth() < c {
            let child = self.place(e, c - 1, 2 * i);
            let j = self.frag.robot(pos, encode(Instruction::Copy, [0.0; 8]), hold);
            self.frag.wiring.push((j, Inputs::First(EntityId::Robot(child))));
            return j;
        }
        let Expr::Nand(a, b) = e else { unreachable!("depth {c} node is a gate") };
        let ca = self.place(a, c - 1, 2 * i);
        let cb = self.place(b, c - 1, 2 * i + 1);
        let j = self.frag.robot(pos, encode(Instruction::Lookup, NAND_TABLE), hold);
        self.frag.wiring.push((j, Inputs::Unordered(EntityId::Robot(ca), EntityId::Robot(cb))));
        j
    }
}

/// LOOKUP table computing `!(m1 & m2)` whatever the memory bit.
pub const NAND_TABLE: [f32; 8] = [1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];

/// Compile an `n`-input truth table (`1 <= n <= 4`) into a placed circuit.
/// The grid grows until the placement validates.
pub fn compile_boolean(table: &[bool], n: usize) -> Result<Circuit, ScenarioError> {
    if !(1..=4).contains(&n) {
        return Err(ScenarioError::Infeasible(format!("{n} inputs; supported range is 1..=4")));
    }
    if table.len() != 1 << n {
        return Err(ScenarioError::Infeasible(format!("{n} inputs need {} table rows, got {}", 1 << n, table.len())));
    }
    let expr = synthesize(table);
    let depth = expr.depth();
    let top = node_pos(depth, 0, [0.0; 2]);
    let extent = (SPACING * (1usize << depth) as f64).max(top[0] as f64);
    let mut grid = 16usize;
    while (grid as f64) < extent + 4.0 {
        grid *= 2;
    }
    for _ in 0..4 {
        let mut b = Builder { frag: Fragment::new(grid), leaves: Vec::new(), origin: [1.0, 1.0] };
        let output = b.place(&expr, depth, 0);
        if validate_placement(&b.frag).is_empty() {
            return Ok(Circuit {
                inputs: n,
                table: table.to_vec(),
                expr,
                fragment: b.frag,
                leaves: b.leaves,
                output,
                schedule: depth,
            });
        }
        grid *= 2;
    }
    Err(ScenarioError::Infeasible(format!("no valid placement for a depth {depth} circuit")))
}
