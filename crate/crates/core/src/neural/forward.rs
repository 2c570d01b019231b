use super::ops::{dot, linear, linear_acc, masked_softmax, sigmoid_inplace, tanh_inplace};
use super::*;
use crate::action::ActionVector;
use crate::error::NumericError;

/// Anything that maps an observation and recurrent state to an action.
/// Saliency is defined against this so hand-built policies can be probed.
pub trait Policy {
    fn act(&self, obs: &Observation, state: &RecurrentState) -> Result<(ActionVector, RecurrentState), NumericError>;
}

/// Per-thread working memory for [`forward`]. Reusing one avoids allocating
/// inside the step loop.
#[derive(Debug, Clone)]
pub struct Scratch {
    row: Vec<f32>,
    hidden: [f32; EMBED],
    tokens: Vec<f32>,
    mask: Vec<bool>,
    q: Vec<f32>,
    k: Vec<f32>,
    v: Vec<f32>,
    attn: Vec<f32>,
    scores: Vec<f32>,
    conv: Vec<f32>,
}

impl Scratch {
    pub fn new(shape: &NetShape) -> Self {
        let t = shape.n_agents + shape.n_robots;
        Scratch {
            row: vec![0.0; AGENT_ROW.max(ROBOT_ROW).max(SELF_FEATS)],
            hidden: [0.0; EMBED],
            tokens: vec![0.0; t * EMBED],
            mask: vec![false; t],
            q: vec![0.0; t * EMBED],
            k: vec![0.0; t * EMBED],
            v: vec![0.0; t * EMBED],
            attn: vec![0.0; t * EMBED],
            scores: vec![0.0; t],
            conv: vec![0.0; shape.patch * shape.patch * TERRAIN_CHANNELS],
        }
    }
}

/// Resolved tensor slices of one parameter vector.
struct View<'a> {
    p: &'a [f32],
    offsets: [usize; Tensor::ALL.len() + 1],
}

impl<'a> View<'a> {
    #[inline]
    fn t(&self, t: Tensor) -> &'a [f32] {
        let i = t as usize;
        &self.p[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Weights of one attention block.
struct AttnWeights<'a> {
    wq: &'a [f32],
    bq: &'a [f32],
    wk: &'a [f32],
    bk: &'a [f32],
    wv: &'a [f32],
    bv: &'a [f32],
    wo: &'a [f32],
    bo: &'a [f32],
}

/// Largest f32 below 1.
const OUT_LIMIT: f32 = 1.0 - f32::EPSILON / 2.0;

const INV_SQRT_HEAD: f32 = 0.353_553_38; // 1/sqrt(8)

/// Two-layer MLP encoder: `W2 tanh(W1 x + b1) + b2`.
#[inline]
fn encode(w1: &[f32], b1: &[f32], w2: &[f32], b2: &[f32], x: &[f32], hidden: &mut [f32; EMBED], out: &mut [f32]) {
    linear(w1, b1, x, hidden);
    tanh_inplace(hidden);
    linear(w2, b2, hidden, out);
}

/// Run the network once. Pure: the only state carried between calls is the
/// returned [`RecurrentState`].
pub fn forward(
    shape: &NetShape,
    params: &AgentParams,
    obs: &Observation,
    state: &RecurrentState,
    s: &mut Scratch,
) -> Result<(ActionVector, RecurrentState), NumericError> {
    if let Some(field) = obs.first_non_finite() {
        return Err(NumericError::NonFinite(format!("observation field {field}")));
    }
    if state.h.iter().chain(&state.c).any(|x| !x.is_finite()) {
        return Err(NumericError::NonFinite("recurrent state".into()));
    }
    let p = View { p: &params.0, offsets: shape.offsets() };
    let na = shape.n_agents;
    let nt = na + shape.n_robots;

    // entity tokens
    for k in 0..na {
        let row = obs.agent_row(k);
        let present = row[AGENT_ROW - 1] > 0.5;
        s.mask[k] = present;
        let tok = &mut s.tokens[k * EMBED..(k + 1) * EMBED];
        if !present {
            tok.fill(0.0);
            continue;
        }
        let x = &mut s.row[..AGENT_ROW];
        x.copy_from_slice(row);
        x[0] *= POS_SCALE;
        x[1] *= POS_SCALE;
        x[2] *= ENERGY_SCALE;
        x[3] *= AGE_SCALE;
        encode(
            p.t(Tensor::AgentW1),
            p.t(Tensor::AgentB1),
            p.t(Tensor::AgentW2),
            p.t(Tensor::AgentB2),
            x,
            &mut s.hidden,
            tok,
        );
    }
    for k in 0..shape.n_robots {
        let row = obs.robot_row(k);
        let present = row[ROBOT_ROW - 1] > 0.5;
        let slot = na + k;
        s.mask[slot] = present;
        let tok = &mut s.tokens[slot * EMBED..(slot + 1) * EMBED];
        if !present {
            tok.fill(0.0);
            continue;
        }
        let x = &mut s.row[..ROBOT_ROW];
        x.copy_from_slice(row);
        x[0] *= POS_SCALE;
        x[1] *= POS_SCALE;
        encode(
            p.t(Tensor::RobotW1),
            p.t(Tensor::RobotB1),
            p.t(Tensor::RobotW2),
            p.t(Tensor::RobotB2),
            x,
            &mut s.hidden,
            tok,
        );
    }

    // self embedding
    let mut me = [0.0f32; EMBED];
    {
        let x = &mut s.row[..SELF_FEATS];
        x.copy_from_slice(&obs.self_feats);
        x[0] *= ENERGY_SCALE;
        x[1] *= AGE_SCALE;
        encode(
            p.t(Tensor::SelfW1),
            p.t(Tensor::SelfB1),
            p.t(Tensor::SelfW2),
            p.t(Tensor::SelfB2),
            x,
            &mut s.hidden,
            &mut me,
        );
    }

    // terrain: 1x1 conv per cell, then fully connected
    let mut terrain = [0.0f32; EMBED];
    {
        let cw = p.t(Tensor::ConvW);
        let cb = p.t(Tensor::ConvB);
        // same arithmetic as `linear` per cell, unrolled for the tiny shape
        for (cell, out) in obs.terrain.chunks_exact(TERRAIN_PLANES).zip(s.conv.chunks_exact_mut(TERRAIN_CHANNELS)) {
            for (o, v) in out.iter_mut().enumerate() {
                let mut acc = cb[o];
                for (j, &x) in cell.iter().enumerate() {
                    acc += cw[j * TERRAIN_CHANNELS + o] * x;
                }
                *v = acc;
            }
        }
        tanh_inplace(&mut s.conv);
        linear(p.t(Tensor::TerrainW), p.t(Tensor::TerrainB), &s.conv, &mut terrain);
        tanh_inplace(&mut terrain);
    }

    let any_present = s.mask[..nt].iter().any(|&m| m);
    let mut cross = [0.0f32; EMBED];
    if any_present {
        let sa = AttnWeights {
            wq: p.t(Tensor::SaWq),
            bq: p.t(Tensor::SaBq),
            wk: p.t(Tensor::SaWk),
            bk: p.t(Tensor::SaBk),
            wv: p.t(Tensor::SaWv),
            bv: p.t(Tensor::SaBv),
            wo: p.t(Tensor::SaWo),
            bo: p.t(Tensor::SaBo),
        };
        self_attention(&sa, nt, s);
        let ca = AttnWeights {
            wq: p.t(Tensor::CaWq),
            bq: p.t(Tensor::CaBq),
            wk: p.t(Tensor::CaWk),
            bk: p.t(Tensor::CaBk),
            wv: p.t(Tensor::CaWv),
            bv: p.t(Tensor::CaBv),
            wo: p.t(Tensor::CaWo),
            bo: p.t(Tensor::CaBo),
        };
        cross_attention(&ca, &me, nt, s, &mut cross);
    }

    // LSTM over [self + cross, terrain]
    let mut z = [0.0f32; 2 * EMBED];
    for i in 0..EMBED {
        z[i] = me[i] + cross[i];
    }
    z[EMBED..].copy_from_slice(&terrain);
    let mut gates = [0.0f32; 4 * HIDDEN];
    linear(p.t(Tensor::LstmWih), p.t(Tensor::LstmB), &z, &mut gates);
    linear_acc(p.t(Tensor::LstmWhh), &state.h, &mut gates);
    // gate order i, f, g, o
    sigmoid_inplace(&mut gates[..2 * HIDDEN]);
    tanh_inplace(&mut gates[2 * HIDDEN..3 * HIDDEN]);
    sigmoid_inplace(&mut gates[3 * HIDDEN..]);
    let mut next = RecurrentState::ZERO;
    for j in 0..HIDDEN {
        let (i, f, g) = (gates[j], gates[HIDDEN + j], gates[2 * HIDDEN + j]);
        next.c[j] = f * state.c[j] + i * g;
    }
    next.h = next.c;
    tanh_inplace(&mut next.h);
    for j in 0..HIDDEN {
        next.h[j] *= gates[3 * HIDDEN + j];
    }

    let mut out = ActionVector::ZERO;
    linear(p.t(Tensor::OutW), p.t(Tensor::OutB), &next.h, &mut out.0);
    tanh_inplace(&mut out.0);
    // keep every entry strictly inside (-1, 1); f32 tanh saturates to 1
    for v in &mut out.0 {
        *v = v.clamp(-OUT_LIMIT, OUT_LIMIT);
    }
    if !out.is_finite() || next.c.iter().any(|x| !x.is_finite()) {
        return Err(NumericError::NonFinite("network output".into()));
    }
    Ok((out, next))
}

/// Multi-head self-attention with residual, over present tokens only.
/// Results replace `s.tokens` rows of present tokens.
fn self_attention(w: &AttnWeights, nt: usize, s: &mut Scratch) {
    for t in 0..nt {
        if !s.mask[t] {
            continue;
        }
        let x = &s.tokens[t * EMBED..(t + 1) * EMBED];
        linear(w.wq, w.bq, x, &mut s.q[t * EMBED..(t + 1) * EMBED]);
        linear(w.wk, w.bk, x, &mut s.k[t * EMBED..(t + 1) * EMBED]);
        linear(w.wv, w.bv, x, &mut s.v[t * EMBED..(t + 1) * EMBED]);
    }
    for t in 0..nt {
        if !s.mask[t] {
            continue;
        }
        for h in 0..HEADS {
            let hs = h * HEAD_DIM..(h + 1) * HEAD_DIM;
            let q = &s.q[t * EMBED..][hs.clone()];
            for j in 0..nt {
                s.scores[j] = if s.mask[j] { dot(q, &s.k[j * EMBED..][hs.clone()]) * INV_SQRT_HEAD } else { 0.0 };
            }
            masked_softmax(&mut s.scores[..nt], &s.mask[..nt]);
            let out = &mut s.attn[t * EMBED..][hs.clone()];
            out.fill(0.0);
            for j in 0..nt {
                if s.mask[j] {
                    let a = s.scores[j];
                    for (o, v) in out.iter_mut().zip(&s.v[j * EMBED..][hs.clone()]) {
                        *o += a * v;
                    }
                }
            }
        }
    }
    let mut proj = [0.0f32; EMBED];
    for t in 0..nt {
        if !s.mask[t] {
            continue;
        }
        linear(w.wo, w.bo, &s.attn[t * EMBED..(t + 1) * EMBED], &mut proj);
        for (x, p) in s.tokens[t * EMBED..(t + 1) * EMBED].iter_mut().zip(&proj) {
            *x += p;
        }
    }
}

/// Query from the agent's own embedding, keys/values from the tokens.
fn cross_attention(w: &AttnWeights, me: &[f32; EMBED], nt: usize, s: &mut Scratch, out: &mut [f32; EMBED]) {
    let mut q = [0.0f32; EMBED];
    linear(w.wq, w.bq, me, &mut q);
    for t in 0..nt {
        if !s.mask[t] {
            continue;
        }
        let x = &s.tokens[t * EMBED..(t + 1) * EMBED];
        linear(w.wk, w.bk, x, &mut s.k[t * EMBED..(t + 1) * EMBED]);
        linear(w.wv, w.bv, x, &mut s.v[t * EMBED..(t + 1) * EMBED]);
    }
    let mut heads = [0.0f32; EMBED];
    for h in 0..HEADS {
        let hs = h * HEAD_DIM..(h + 1) * HEAD_DIM;
        for j in 0..nt {
            s.scores[j] = if s.mask[j] { dot(&q[hs.clone()], &s.k[j * EMBED..][hs.clone()]) * INV_SQRT_HEAD } else { 0.0 };
        }
        masked_softmax(&mut s.scores[..nt], &s.mask[..nt]);
        for j in 0..nt {
            if s.mask[j] {
                let a = s.scores[j];
                for (o, v) in heads[hs.clone()].iter_mut().zip(&s.v[j * EMBED..][hs.clone()]) {
                    *o += a * v;
                }
            }
        }
    }
    linear(w.wo, w.bo, &heads, out);
}

/// A parameter vector bound to its shape, usable as a [`Policy`].
pub struct AgentPolicy<'a> {
    pub shape: &'a NetShape,
    pub params: &'a AgentParams,
}

impl Policy for AgentPolicy<'_> {
    fn act(&self, obs: &Observation, state: &RecurrentState) -> Result<(ActionVector, RecurrentState), NumericError> {
        forward(self.shape, self.params, obs, state, &mut Scratch::new(self.shape))
    }
}
