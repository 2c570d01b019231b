//! Plain-text scenario files.
//!
//! One directive per line, `#` starts a comment:
//!
//! ```text
//! grid 32
//! weather live            # optional; terrain is frozen otherwise
//! robot 1.5 16.5 program <16 numbers> memory <16 numbers>
//! agent 2.5 16.5 energy 100 message <16 numbers>
//! bit 4 8 1
//! ```
//!
//! Agents are inert (zero parameters) and broadcast their message forever.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::action::{ActionVector, N_PROG};
use crate::error::ScenarioError;

use super::{Fragment, InertAgent};

fn err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, message: message.into() }
}

struct Tokens<'a> {
    line: usize,
    it: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str, ScenarioError> {
        self.it.next().ok_or_else(|| err(self.line, format!("missing {what}")))
    }

    fn num<T: FromStr>(&mut self, what: &str) -> Result<T, ScenarioError> {
        let tok = self.next(what)?;
        tok.parse().map_err(|_| err(self.line, format!("bad {what} {tok:?}")))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ScenarioError> {
        match self.next(kw)? {
            t if t == kw => Ok(()),
            t => Err(err(self.line, format!("expected {kw:?}, found {t:?}"))),
        }
    }

    fn vector(&mut self, what: &str) -> Result<ActionVector, ScenarioError> {
        let mut v = ActionVector::ZERO;
        for k in 0..N_PROG {
            let x: f32 = self.num(&format!("{what} entry {k}"))?;
            if !x.is_finite() {
                return Err(err(self.line, format!("{what} entry {k} is not finite")));
            }
            v[k] = x;
        }
        Ok(v)
    }

    fn finish(mut self) -> Result<(), ScenarioError> {
        match self.it.next() {
            None => Ok(()),
            Some(t) => Err(err(self.line, format!("unexpected {t:?}"))),
        }
    }
}

pub fn parse(text: &str) -> Result<Fragment, ScenarioError> {
    let mut grid: Option<usize> = None;
    let mut frag = Fragment::new(0);
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut t = Tokens { line, it: body.split_whitespace() };
        let Some(head) = t.it.next() else { continue };
        match head {
            "grid" => {
                if grid.is_some() {
                    return Err(err(line, "grid given twice"));
                }
                let size: usize = t.num("grid size")?;
                if size == 0 {
                    return Err(err(line, "grid size must be positive"));
                }
                grid = Some(size);
            }
            "weather" => match t.next("weather mode")? {
                "live" => frag.live_weather = true,
                "frozen" => frag.live_weather = false,
                m => return Err(err(line, format!("unknown weather mode {m:?}"))),
            },
            "robot" => {
                let pos = [t.num("x")?, t.num("y")?];
                t.keyword("program")?;
                let program = t.vector("program")?;
                t.keyword("memory")?;
                let memory = t.vector("memory")?;
                frag.robot(pos, program, memory);
            }
            "agent" => {
                let pos = [t.num("x")?, t.num("y")?];
                t.keyword("energy")?;
                let energy: f32 = t.num("energy")?;
                if !(energy.is_finite() && energy > 0.0) {
                    return Err(err(line, "agent energy must be positive"));
                }
                t.keyword("message")?;
                let message = t.vector("message")?;
                frag.agents.push(InertAgent { pos, energy, message });
            }
            "bit" => {
                let cell = [t.num("cell x")?, t.num("cell y")?];
                let b = match t.next("bit value")? {
                    "0" => false,
                    "1" => true,
                    v => return Err(err(line, format!("bit must be 0 or 1, got {v:?}"))),
                };
                frag.bits.push((cell, b));
            }
            other => return Err(err(line, format!("unknown directive {other:?}"))),
        }
        t.finish()?;
    }
    if frag.is_empty() {
        return Err(ScenarioError::Empty);
    }
    frag.grid_size = grid.ok_or_else(|| err(text.lines().count().max(1), "missing grid directive"))?;
    let size = frag.grid_size as f32;
    for (j, r) in frag.robots.iter().enumerate() {
        if !r.pos.iter().all(|&c| (0.0..size).contains(&c)) {
            return Err(ScenarioError::Infeasible(format!("robot {j} at {:?} is outside the grid", r.pos)));
        }
    }
    for (i, a) in frag.agents.iter().enumerate() {
        if !a.pos.iter().all(|&c| (0.0..size).contains(&c)) {
            return Err(ScenarioError::Infeasible(format!("agent {i} at {:?} is outside the grid", a.pos)));
        }
    }
    for &([x, y], _) in &frag.bits {
        if x >= frag.grid_size || y >= frag.grid_size {
            return Err(ScenarioError::Infeasible(format!("bit ({x}, {y}) is outside the grid")));
        }
    }
    Ok(frag)
}

pub fn load(path: &Path) -> Result<Fragment, ScenarioError> {
    parse(&std::fs::read_to_string(path)?)
}

fn vector(out: &mut String, v: &ActionVector) {
    for x in v.as_slice() {
        write!(out, " {x}").unwrap();
    }
}

/// Text form that [`parse`] reads back exactly (wiring is not stored).
pub fn to_text(frag: &Fragment) -> String {
    let mut s = format!("grid {}\n", frag.grid_size);
    if frag.live_weather {
        s.push_str("weather live\n");
    }
    for r in &frag.robots {
        write!(s, "robot {} {} program", r.pos[0], r.pos[1]).unwrap();
        vector(&mut s, &r.program);
        s.push_str(" memory");
        vector(&mut s, &r.memory);
        s.push('\n');
    }
    for a in &frag.agents {
        write!(s, "agent {} {} energy {} message", a.pos[0], a.pos[1], a.energy).unwrap();
        vector(&mut s, &a.message);
        s.push('\n');
    }
    for &([x, y], b) in &frag.bits {
        writeln!(s, "bit {x} {y} {}", b as u8).unwrap();
    }
    s
}
