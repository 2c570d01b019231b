//! Periodic 2-D gradient (Perlin) noise driven by a lattice of angles.
//!
//! Each lattice node stores an angle θ; its gradient is `(cos θ, sin θ)`.
//! Weather shifts every angle by a small δ, which morphs the field
//! continuously. The lattice tiles the toroidal world exactly.

use std::f32::consts::TAU;

use rand::Rng;

/// Lattice nodes per axis for the coarsest octave. With the grid divided
/// into this many lattice cells the base period is `grid_size / 8`.
pub const BASE_NODES: usize = 8;
pub const OCTAVES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Octave {
    /// Nodes per axis.
    pub nodes: usize,
    pub amplitude: f32,
    /// Row-major `nodes × nodes` angles.
    pub angles: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerlinField {
    pub octaves: Vec<Octave>,
}

/// Quintic fade `6t^5 - 15t^4 + 10t^3`.
#[inline]
pub fn fade(t: f32) -> f32 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Largest magnitude a single octave can reach with unit gradients.
pub const OCTAVE_PEAK: f32 = std::f32::consts::FRAC_1_SQRT_2;

impl PerlinField {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let octaves = (0..OCTAVES)
            .map(|o| {
                let nodes = BASE_NODES << o;
                Octave {
                    nodes,
                    amplitude: 0.5f32.powi(o as i32),
                    angles: (0..nodes * nodes).map(|_| rng.gen::<f32>() * TAU).collect(),
                }
            })
            .collect();
        PerlinField { octaves }
    }

    pub fn shift_angles(&mut self, delta: f32) {
        for o in &mut self.octaves {
            for a in &mut o.angles {
                *a += delta;
            }
        }
    }

    fn amplitude_sum(&self) -> f32 {
        self.octaves.iter().map(|o| o.amplitude).sum()
    }

    /// Sample the field at every cell centre of a `grid × grid` world,
    /// normalized to `[0, 1]`, written row-major into `out`.
    pub fn sample_grid(&self, grid: usize, out: &mut [f32]) {
        assert_eq!(out.len(), grid * grid);
        out.fill(0.0);
        for o in &self.octaves {
            let axis = AxisTable::new(grid, o.nodes);
            let grads: Vec<(f32, f32)> = o.angles.iter().map(|&a| (a.cos(), a.sin())).collect();
            let n = o.nodes;
            for y in 0..grid {
                let (j0, j1, fy, v) = axis.entries[y];
                let row = &mut out[y * grid..(y + 1) * grid];
                for (x, acc) in row.iter_mut().enumerate() {
                    let (i0, i1, fx, u) = axis.entries[x];
                    let g00 = grads[j0 * n + i0];
                    let g10 = grads[j0 * n + i1];
                    let g01 = grads[j1 * n + i0];
                    let g11 = grads[j1 * n + i1];
                    let n00 = g00.0 * fx + g00.1 * fy;
                    let n10 = g10.0 * (fx - 1.0) + g10.1 * fy;
                    let n01 = g01.0 * fx + g01.1 * (fy - 1.0);
                    let n11 = g11.0 * (fx - 1.0) + g11.1 * (fy - 1.0);
                    let nx0 = n00 + u * (n10 - n00);
                    let nx1 = n01 + u * (n11 - n01);
                    *acc += o.amplitude * (nx0 + v * (nx1 - nx0));
                }
            }
        }
        let scale = 0.5 / (self.amplitude_sum() * OCTAVE_PEAK);
        for v in out.iter_mut() {
            *v = (0.5 + *v * scale).clamp(0.0, 1.0);
        }
    }
}

/// Per-axis lattice lookup for one octave: lower node, upper node (wrapped),
/// fractional offset and its fade.
struct AxisTable {
    entries: Vec<(usize, usize, f32, f32)>,
}

impl AxisTable {
    fn new(grid: usize, nodes: usize) -> Self {
        let spacing = grid as f32 / nodes as f32;
        let entries = (0..grid)
            .map(|c| {
                let t = (c as f32 + 0.5) / spacing;
                let base = t.floor();
                let f = t - base;
                let i0 = (base as usize) % nodes;
                (i0, (i0 + 1) % nodes, f, fade(f))
            })
            .collect();
        AxisTable { entries }
    }
}
