//! Fixed-topology agent network: entity encoders, self-attention over the
//! neighbor tokens, cross-attention from the agent's own embedding, a terrain
//! encoder, an LSTM cell, and a tanh output head.
//!
//! Parameters of one agent live in a single flat `Vec<f32>`; [`NetShape`]
//! knows where each named tensor starts.

mod forward;
mod init;
pub mod ops;
mod saliency;

use crate::action::N_PROG;
use crate::config::SimConfig;

pub use forward::{forward, AgentPolicy, Policy, Scratch};
pub use init::{init_params, mutate, orthogonal, OUTPUT_GAIN};
pub use saliency::{saliency, saliency_with, SaliencyField};

pub const EMBED: usize = 32;
pub const HEADS: usize = 4;
pub const HEAD_DIM: usize = EMBED / HEADS;
pub const HIDDEN: usize = 64;
/// Channels produced by the terrain 1×1 convolution.
pub const TERRAIN_CHANNELS: usize = 4;
/// Observed terrain planes: energy, energy_gain, action_cost.
pub const TERRAIN_PLANES: usize = 3;

/// `[dx, dy, energy, age, self_msg(16), other_msg(16), present]`.
pub const AGENT_ROW: usize = 4 + 2 * N_PROG + 1;
/// `[dx, dy, memory(16), present]`.
pub const ROBOT_ROW: usize = 2 + N_PROG + 1;
/// `[energy, age, self_msg(16), other_msg(16)]`.
pub const SELF_FEATS: usize = 2 + 2 * N_PROG;

/// Offsets of the message blocks inside rows.
pub const AGENT_ROW_SELF_MSG: usize = 4;
pub const AGENT_ROW_OTHER_MSG: usize = 4 + N_PROG;
pub const ROBOT_ROW_MEMORY: usize = 2;
pub const SELF_SELF_MSG: usize = 2;
pub const SELF_OTHER_MSG: usize = 2 + N_PROG;

/// Fixed input scaling applied inside the network so raw observations keep
/// their natural units.
pub const POS_SCALE: f32 = 1.0 / 8.0;
pub const ENERGY_SCALE: f32 = 1.0 / 20.0;
pub const AGE_SCALE: f32 = 1.0 / 512.0;

/// One agent's flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams(pub Vec<f32>);

impl AgentParams {
    pub fn zeros(shape: &NetShape) -> Self {
        AgentParams(vec![0.0; shape.param_count()])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn tensor<'a>(&'a self, shape: &NetShape, t: Tensor) -> &'a [f32] {
        &self.0[shape.range(t)]
    }

    pub fn tensor_mut<'a>(&'a mut self, shape: &NetShape, t: Tensor) -> &'a mut [f32] {
        &mut self.0[shape.range(t)]
    }
}

/// LSTM hidden and cell vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrentState {
    pub h: [f32; HIDDEN],
    pub c: [f32; HIDDEN],
}

impl RecurrentState {
    pub const ZERO: RecurrentState = RecurrentState { h: [0.0; HIDDEN], c: [0.0; HIDDEN] };
}

impl Default for RecurrentState {
    fn default() -> Self {
        Self::ZERO
    }
}

/// Everything an agent perceives in one step, in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `R × R × 3`, cell-major (row-major cells, planes innermost).
    pub terrain: Vec<f32>,
    /// `n_view_agents × AGENT_ROW`, nearest first; absent rows are zero.
    pub agents: Vec<f32>,
    /// `n_view_bots × ROBOT_ROW`, nearest first; absent rows are zero.
    pub robots: Vec<f32>,
    pub self_feats: [f32; SELF_FEATS],
}

impl Observation {
    pub fn zeros(shape: &NetShape) -> Self {
        Observation {
            terrain: vec![0.0; shape.patch * shape.patch * TERRAIN_PLANES],
            agents: vec![0.0; shape.n_agents * AGENT_ROW],
            robots: vec![0.0; shape.n_robots * ROBOT_ROW],
            self_feats: [0.0; SELF_FEATS],
        }
    }

    pub fn agent_row(&self, k: usize) -> &[f32] {
        &self.agents[k * AGENT_ROW..(k + 1) * AGENT_ROW]
    }

    pub fn robot_row(&self, k: usize) -> &[f32] {
        &self.robots[k * ROBOT_ROW..(k + 1) * ROBOT_ROW]
    }

    /// Name of the first field holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        let bad = |v: &[f32]| v.iter().any(|x| !x.is_finite());
        if bad(&self.terrain) {
            Some("terrain")
        } else if bad(&self.agents) {
            Some("neighbor_agents")
        } else if bad(&self.robots) {
            Some("neighbor_robots")
        } else if bad(&self.self_feats) {
            Some("self_feats")
        } else {
            None
        }
    }
}

/// Named parameter tensors in layout order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    AgentW1,
    AgentB1,
    AgentW2,
    AgentB2,
    RobotW1,
    RobotB1,
    RobotW2,
    RobotB2,
    SelfW1,
    SelfB1,
    SelfW2,
    SelfB2,
    ConvW,
    ConvB,
    TerrainW,
    TerrainB,
    SaWq,
    SaBq,
    SaWk,
    SaBk,
    SaWv,
    SaBv,
    SaWo,
    SaBo,
    CaWq,
    CaBq,
    CaWk,
    CaBk,
    CaWv,
    CaBv,
    CaWo,
    CaBo,
    LstmWih,
    LstmWhh,
    LstmB,
    OutW,
    OutB,
}

impl Tensor {
    pub const ALL: [Tensor; 37] = [
        Tensor::AgentW1,
        Tensor::AgentB1,
        Tensor::AgentW2,
        Tensor::AgentB2,
        Tensor::RobotW1,
        Tensor::RobotB1,
        Tensor::RobotW2,
        Tensor::RobotB2,
        Tensor::SelfW1,
        Tensor::SelfB1,
        Tensor::SelfW2,
        Tensor::SelfB2,
        Tensor::ConvW,
        Tensor::ConvB,
        Tensor::TerrainW,
        Tensor::TerrainB,
        Tensor::SaWq,
        Tensor::SaBq,
        Tensor::SaWk,
        Tensor::SaBk,
        Tensor::SaWv,
        Tensor::SaBv,
        Tensor::SaWo,
        Tensor::SaBo,
        Tensor::CaWq,
        Tensor::CaBq,
        Tensor::CaWk,
        Tensor::CaBk,
        Tensor::CaWv,
        Tensor::CaBv,
        Tensor::CaWo,
        Tensor::CaBo,
        Tensor::LstmWih,
        Tensor::LstmWhh,
        Tensor::LstmB,
        Tensor::OutW,
        Tensor::OutB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::AgentW1 => "agent_enc.w1",
            Tensor::AgentB1 => "agent_enc.b1",
            Tensor::AgentW2 => "agent_enc.w2",
            Tensor::AgentB2 => "agent_enc.b2",
            Tensor::RobotW1 => "robot_enc.w1",
            Tensor::RobotB1 => "robot_enc.b1",
            Tensor::RobotW2 => "robot_enc.w2",
            Tensor::RobotB2 => "robot_enc.b2",
            Tensor::SelfW1 => "self_enc.w1",
            Tensor::SelfB1 => "self_enc.b1",
            Tensor::SelfW2 => "self_enc.w2",
            Tensor::SelfB2 => "self_enc.b2",
            Tensor::ConvW => "terrain.conv_w",
            Tensor::ConvB => "terrain.conv_b",
            Tensor::TerrainW => "terrain.fc_w",
            Tensor::TerrainB => "terrain.fc_b",
            Tensor::SaWq => "self_attn.wq",
            Tensor::SaBq => "self_attn.bq",
            Tensor::SaWk => "self_attn.wk",
            Tensor::SaBk => "self_attn.bk",
            Tensor::SaWv => "self_attn.wv",
            Tensor::SaBv => "self_attn.bv",
            Tensor::SaWo => "self_attn.wo",
            Tensor::SaBo => "self_attn.bo",
            Tensor::CaWq => "cross_attn.wq",
            Tensor::CaBq => "cross_attn.bq",
            Tensor::CaWk => "cross_attn.wk",
            Tensor::CaBk => "cross_attn.bk",
            Tensor::CaWv => "cross_attn.wv",
            Tensor::CaBv => "cross_attn.bv",
            Tensor::CaWo => "cross_attn.wo",
            Tensor::CaBo => "cross_attn.bo",
            Tensor::LstmWih => "lstm.w_ih",
            Tensor::LstmWhh => "lstm.w_hh",
            Tensor::LstmB => "lstm.b",
            Tensor::OutW => "out.w",
            Tensor::OutB => "out.b",
        }
    }

    /// Biases are vectors; everything else is a matrix.
    pub fn is_bias(self) -> bool {
        self.dims(&NetShape { n_agents: 1, n_robots: 1, patch: 1 }).1.is_none()
    }

    /// `(inputs, Some(outputs))` for matrices, `(len, None)` for vectors.
    /// Matrices are stored input-major: entry `(j, o)` at `j * outputs + o`.
    fn dims(self, s: &NetShape) -> (usize, Option<usize>) {
        let terrain_in = s.patch * s.patch * TERRAIN_CHANNELS;
        match self {
            Tensor::AgentW1 => (AGENT_ROW, Some(EMBED)),
            Tensor::RobotW1 => (ROBOT_ROW, Some(EMBED)),
            Tensor::SelfW1 => (SELF_FEATS, Some(EMBED)),
            Tensor::AgentW2 | Tensor::RobotW2 | Tensor::SelfW2 => (EMBED, Some(EMBED)),
            Tensor::ConvW => (TERRAIN_PLANES, Some(TERRAIN_CHANNELS)),
            Tensor::ConvB => (TERRAIN_CHANNELS, None),
            Tensor::TerrainW => (terrain_in, Some(EMBED)),
            Tensor::SaWq | Tensor::SaWk | Tensor::SaWv | Tensor::SaWo => (EMBED, Some(EMBED)),
            Tensor::CaWq | Tensor::CaWk | Tensor::CaWv | Tensor::CaWo => (EMBED, Some(EMBED)),
            Tensor::LstmWih => (2 * EMBED, Some(4 * HIDDEN)),
            Tensor::LstmWhh => (HIDDEN, Some(4 * HIDDEN)),
            Tensor::LstmB => (4 * HIDDEN, None),
            Tensor::OutW => (HIDDEN, Some(N_PROG)),
            Tensor::OutB => (N_PROG, None),
            _ => (EMBED, None),
        }
    }
}

/// Network dimensions derived from the config, plus tensor offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    pub n_agents: usize,
    pub n_robots: usize,
    pub patch: usize,
}

impl NetShape {
    pub fn from_config(cfg: &SimConfig) -> Self {
        NetShape { n_agents: cfg.n_view_agents, n_robots: cfg.n_view_bots, patch: cfg.terrain_patch }
    }

    pub fn shape(&self, t: Tensor) -> Vec<usize> {
        match t.dims(self) {
            (r, Some(c)) => vec![r, c],
            (n, None) => vec![n],
        }
    }

    pub fn len(&self, t: Tensor) -> usize {
        let (r, c) = t.dims(self);
        r * c.unwrap_or(1)
    }

    /// Start of every tensor in layout order, plus the total at the end.
    pub fn offsets(&self) -> [usize; Tensor::ALL.len() + 1] {
        let mut out = [0; Tensor::ALL.len() + 1];
        for (i, &t) in Tensor::ALL.iter().enumerate() {
            out[i + 1] = out[i] + self.len(t);
        }
        out
    }

    pub fn offset(&self, t: Tensor) -> usize {
        self.offsets()[t as usize]
    }

    pub fn range(&self, t: Tensor) -> std::ops::Range<usize> {
        let o = self.offset(t);
        o..o + self.len(t)
    }

    pub fn param_count(&self) -> usize {
        self.offsets()[Tensor::ALL.len()]
    }

    /// `(name, shape)` for every tensor in layout order.
    pub fn layout(&self) -> Vec<(&'static str, Vec<usize>)> {
        Tensor::ALL.iter().map(|&t| (t.name(), self.shape(t))).collect()
    }
}
