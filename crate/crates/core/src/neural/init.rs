use rand::Rng;
use rand_distr::StandardNormal;

use super::{AgentParams, NetShape, Tensor};

/// Gain of the output projection. Large enough that a fresh random network
/// crosses the action threshold on some entries (otherwise no founder ever
/// reproduces), while a zero observation still maps to exactly zero because
/// all biases start at zero.
pub const OUTPUT_GAIN: f32 = 1.0;

/// A `rows × cols` row-major matrix with orthonormal rows (or columns, when
/// `rows > cols`), scaled by `gain`. Gram-Schmidt runs in f64.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f32, rng: &mut R) -> Vec<f32> {
    let (n, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue; // numerically dependent draw; redraw
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    let mut out = vec![0.0f32; rows * cols];
    for (i, b) in basis.iter().enumerate() {
        for (j, &x) in b.iter().enumerate() {
            let (r, c) = if rows <= cols { (i, j) } else { (j, i) };
            out[r * cols + c] = (x * gain as f64) as f32;
        }
    }
    out
}

/// Fresh parameters: orthogonal weight matrices, zero biases.
pub fn init_params<R: Rng + ?Sized>(shape: &NetShape, rng: &mut R) -> AgentParams {
    let mut p = AgentParams::zeros(shape);
    for t in Tensor::ALL {
        let dims = shape.shape(t);
        if dims.len() != 2 {
            continue;
        }
        let gain = if t == Tensor::OutW { OUTPUT_GAIN } else { 1.0 };
        let w = orthogonal(dims[0], dims[1], gain, rng);
        p.tensor_mut(shape, t).copy_from_slice(&w);
    }
    p
}

/// Child parameters: parent plus `sigma · N(0, 1)` per entry.
pub fn mutate<R: Rng + ?Sized>(parent: &AgentParams, rng: &mut R, sigma: f32) -> AgentParams {
    if sigma == 0.0 {
        return parent.clone();
    }
    let mut child = parent.clone();
    for w in child.0.iter_mut() {
        let z: f32 = rng.sample(StandardNormal);
        *w += sigma * z;
    }
    child
}
