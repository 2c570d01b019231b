//! Self-checking runs of the constructions, with counterexamples.

use std::fmt;

use rand::Rng;

use crate::action::{ActionVector, INFO_BIT, MOVE_X};
use crate::config::SimConfig;
use crate::engine::WorldState;
use crate::error::ScenarioError;
use crate::geometry::toroidal_delta;
use crate::neural::Tensor;
use crate::rng::{RngState, Stream};
use crate::robot_vm::Instruction;

use super::circuit::compile_boolean;
use super::machines::{make_comm_chain, patroller_fragment, terraformer_fragment, transporter_fragment};
use super::rule110::{build_rule110, run_rule110};
use super::validate_placement;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub subject: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn new(subject: &str) -> Self {
        VerifyReport { subject: subject.into(), checks: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(f, "{} {verdict} ({} checks, {} failed)", self.subject, self.checks.len(), self.failures())?;
        for c in &self.checks {
            writeln!(f, "  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Straightforward elementary automaton with zero boundaries.
pub fn eca(rule: u8, row: &[bool]) -> Vec<bool> {
    let at = |i: isize| i >= 0 && (i as usize) < row.len() && row[i as usize];
    (0..row.len() as isize)
        .map(|i| {
            let idx = (at(i - 1) as u8) << 2 | (at(i) as u8) << 1 | at(i + 1) as u8;
            (rule >> idx) & 1 == 1
        })
        .collect()
}

fn bits(row: &[bool]) -> String {
    row.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Compare one Rule 110 run against [`eca`]; `None` on success, otherwise
/// the first differing generation.
fn rule110_case(initial: &[bool], steps: usize, base: &SimConfig) -> Result<Option<String>, ScenarioError> {
    let grid = (initial.len() + 2).next_power_of_two().max(16);
    let frag = build_rule110(initial, grid)?;
    let bad = validate_placement(&frag);
    if !bad.is_empty() {
        return Ok(Some(format!("placement: {}", bad[0])));
    }
    let mut world = frag.into_world(base)?;
    let got = run_rule110(&mut world, initial.len(), steps)?;
    let mut want = initial.to_vec();
    for (t, row) in got.iter().enumerate() {
        if *row != want {
            return Ok(Some(format!("generation {t}: got {} want {}", bits(row), bits(&want))));
        }
        want = eca(110, &want);
    }
    Ok(None)
}

/// The centred single-cell run plus `random` random rows.
pub fn verify_rule110(seed: u64, random: usize) -> Result<VerifyReport, ScenarioError> {
    let base = SimConfig { seed, ..SimConfig::default() };
    let mut report = VerifyReport::new("rule110");
    let mut single = vec![false; 61];
    single[30] = true;
    let r = rule110_case(&single, 100, &base)?;
    report.push("width 61, centred 1, 100 steps", r.is_none(), r.unwrap_or_else(|| "0 mismatches".into()));

    let mut rng = RngState::new(seed).stream(Stream::Sample);
    for k in 0..random {
        let width = rng.gen_range(8..=64);
        let row: Vec<bool> = (0..width).map(|_| rng.gen_bool(0.5)).collect();
        let r = rule110_case(&row, 200, &base)?;
        report.push(format!("random row {k} (width {width}, 200 steps)"), r.is_none(), r.unwrap_or_else(|| bits(&row)));
    }
    Ok(report)
}

/// Compile and simulate one table; `None` if every row matches after the
/// schedule and stays put for two more substeps.
fn circuit_case(table: &[bool], n: usize, base: &SimConfig, corrupt: bool) -> Result<Option<String>, ScenarioError> {
    let circuit = compile_boolean(table, n)?;
    let bad = validate_placement(&circuit.fragment);
    if !bad.is_empty() {
        return Ok(Some(format!("placement: {}", bad[0])));
    }
    for row in 0..1usize << n {
        let mut frag = circuit.fragment_for(row);
        if corrupt {
            // force every gate's (1, 1) entries to 1
            for r in frag.robots.iter_mut().filter(|r| r.program[Instruction::Lookup.flag()] == 1.0) {
                r.program[8 + 3] = 1.0;
                r.program[8 + 7] = 1.0;
            }
        }
        let mut world = frag.into_world(base)?;
        let want = table[row];
        for t in 0..circuit.schedule + 3 {
            if t >= circuit.schedule {
                let got = world.robots[circuit.output].memory[INFO_BIT] > 0.5;
                if got != want {
                    return Ok(Some(format!("input row {row} ({}): got {} want {} after {t} substeps", bits_of(row, n), got as u8, want as u8)));
                }
            }
            world.tick()?;
        }
    }
    Ok(None)
}

/// Inputs of a row, `x0` first.
fn bits_of(row: usize, n: usize) -> String {
    (0..n).map(|i| if (row >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

/// All sixteen 2-input functions and `random` random 3-input tables.
/// `corrupt` sabotages every gate table, as a negative control.
pub fn verify_circuits(seed: u64, random: usize, corrupt: bool) -> Result<VerifyReport, ScenarioError> {
    let base = SimConfig { seed, ..SimConfig::default() };
    let mut report = VerifyReport::new("nand");
    for f in 0u32..16 {
        let table: Vec<bool> = (0..4).map(|r| (f >> r) & 1 == 1).collect();
        let r = circuit_case(&table, 2, &base, corrupt)?;
        report.push(format!("2-input table {f:04b}"), r.is_none(), r.unwrap_or_else(|| "4 rows match".into()));
    }
    let mut rng = RngState::new(seed).stream(Stream::Sample);
    for _ in 0..random {
        let f: u8 = rng.gen();
        let table: Vec<bool> = (0..8).map(|r| (f >> r) & 1 == 1).collect();
        let r = circuit_case(&table, 3, &base, corrupt)?;
        report.push(format!("3-input table {f:08b}"), r.is_none(), r.unwrap_or_else(|| "8 rows match".into()));
    }
    Ok(report)
}

/// One sweep of a 32-row strip must raise its mean energy_gain.
pub fn check_terraformer(base: &SimConfig) -> Result<(bool, String), ScenarioError> {
    let x = 7;
    let mut world = terraformer_fragment(x).into_world(base)?;
    let column = |w: &WorldState| -> f64 {
        (0..w.grid.size).map(|y| w.grid.energy_gain[w.grid.index(x, y)] as f64).sum::<f64>() / w.grid.size as f64
    };
    let before = column(&world);
    let mut spent = 0.0;
    for _ in 0..32 {
        spent += world.tick()?.spent().to_f64();
    }
    let after = column(&world);
    Ok((after > before && spent == 0.0, format!("strip mean gain {before:.6} -> {after:.6}, robot cost {spent}")))
}

/// Four periods between waypoints `a` and `b`: stays in `[a, b]` and
/// reverses with period `2 (b - a)`.
pub fn check_patroller(base: &SimConfig) -> Result<(bool, String), ScenarioError> {
    let (a, b) = (5usize, 14usize);
    let mut world = patroller_fragment(a, b, 9, true, 32).into_world(base)?;
    let period = 2 * (b - a);
    let mut xs = vec![world.robots[0].pos[0]];
    for _ in 0..4 * period + 1 {
        world.tick()?;
        xs.push(world.robots[0].pos[0]);
    }
    let inside = xs.iter().all(|&x| x >= a as f32 && x < (b + 1) as f32);
    let turns: Vec<usize> = xs
        .windows(3)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
        .map(|(i, _)| i + 1)
        .collect();
    let spacing_ok = turns.windows(3).all(|t| t[2] - t[0] == period);
    let ok = inside && turns.len() >= 7 && spacing_ok;
    Ok((ok, format!("x in [{:.1}, {:.1}], turns at {turns:?}, period {period}", min(&xs), max(&xs))))
}

fn min(v: &[f32]) -> f32 {
    v.iter().copied().fold(f32::INFINITY, f32::min)
}

fn max(v: &[f32]) -> f32 {
    v.iter().copied().fold(f32::NEG_INFINITY, f32::max)
}

/// Transport a broadcasting agent for 100 substeps, then make an identical
/// agent walk the same distance on its own; compare what each spent.
pub fn check_transporter(base: &SimConfig) -> Result<(bool, String), ScenarioError> {
    let grid = 256;
    let frag = transporter_fragment(ActionVector::ONES, grid);
    let mut world = frag.into_world(base)?;
    let size = grid as f32;
    let mut monotone = true;
    let mut moved = 0.0f32;
    let mut carried_cost = 0.0;
    for _ in 0..100 {
        let before = world.agents[0].pos;
        carried_cost += world.tick()?.spent().to_f64();
        let d = toroidal_delta(before, world.agents[0].pos, size)[0];
        monotone &= d >= 0.0;
        moved += d;
    }

    // the walker: no robot, output bias drives MOVE_X to ~1
    let mut walk = frag.clone();
    walk.robots.clear();
    walk.wiring.clear();
    walk.agents[0].message = ActionVector::ZERO;
    let mut world = walk.into_world(base)?;
    let shape = world.shape;
    world.agents[0].params.tensor_mut(&shape, Tensor::OutB)[MOVE_X] = 10.0;
    let mut walked = 0.0f32;
    let mut walk_cost = 0.0;
    let mut ticks = 0;
    while walked < moved && ticks < 1000 {
        let before = world.agents[0].pos;
        walk_cost += world.tick()?.spent().to_f64();
        walked += toroidal_delta(before, world.agents[0].pos, size)[0];
        ticks += 1;
    }
    let ok = monotone && moved > 50.0 && walked >= moved && carried_cost < walk_cost;
    Ok((
        ok,
        format!("carried {moved:.2} cells for {carried_cost:.4} energy; walking {walked:.2} cells cost {walk_cost:.4}"),
    ))
}

/// Bit 1 at the head reaches robot `i` after exactly `i` substeps, and a
/// flip mid-run travels at the same speed.
pub fn check_comm_chain(base: &SimConfig) -> Result<(bool, String), ScenarioError> {
    let n = 12;
    let mut world = make_comm_chain(n, true, 32)?.into_world(base)?;
    let bit = |w: &WorldState, j: usize| w.robots[j].memory[INFO_BIT] > 0.5;
    let mut ok = true;
    let mut first_bad = String::new();
    for t in 1..n {
        world.tick()?;
        for j in 1..n {
            if bit(&world, j) != (j <= t) && ok {
                ok = false;
                first_bad = format!("robot {j} wrong after {t} substeps");
            }
        }
    }
    // flip the head back to 0 and watch the wavefront
    world.robots[0].memory[INFO_BIT] = 0.0;
    for t in 1..n {
        world.tick()?;
        for j in 1..n {
            if bit(&world, j) != (j > t) && ok {
                ok = false;
                first_bad = format!("after flip: robot {j} wrong at {t} substeps");
            }
        }
    }
    let detail = if ok { format!("{n} robots, one hop per substep both ways") } else { first_bad };
    Ok((ok, detail))
}

pub fn verify_machines(seed: u64) -> Result<VerifyReport, ScenarioError> {
    let base = SimConfig { seed, ..SimConfig::default() };
    let mut report = VerifyReport::new("machines");
    for (name, check) in [
        ("terraformer", check_terraformer as fn(&SimConfig) -> Result<(bool, String), ScenarioError>),
        ("patroller", check_patroller),
        ("transporter", check_transporter),
        ("comm chain", check_comm_chain),
    ] {
        let (passed, detail) = check(&base)?;
        report.push(name, passed, detail);
    }
    Ok(report)
}
