//! Toroidal geometry and deterministic nearest-entity selection.

use std::cmp::Ordering;

/// Identifies an entity for tie-breaking. Agents order before robots; within
/// a kind, by slot index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    Agent(usize),
    Robot(usize),
}

pub type Pos = [f32; 2];

/// Wrap a coordinate into `[0, size)`.
#[inline]
pub fn wrap_coord(x: f32, size: f32) -> f32 {
    let r = x.rem_euclid(size);
    // rem_euclid can round up to `size` for tiny negative inputs
    if r >= size {
        0.0
    } else {
        r
    }
}

#[inline]
pub fn wrap_pos(p: Pos, size: f32) -> Pos {
    [wrap_coord(p[0], size), wrap_coord(p[1], size)]
}

/// Shortest signed offset on a ring, in `(-size/2, size/2]`.
#[inline]
pub fn wrap_delta(d: f32, size: f32) -> f32 {
    let half = size * 0.5;
    let mut r = d.rem_euclid(size);
    if r > half {
        r -= size;
    }
    r
}

/// Offset from `from` to `to` on the torus.
#[inline]
pub fn toroidal_delta(from: Pos, to: Pos, size: f32) -> [f32; 2] {
    [wrap_delta(to[0] - from[0], size), wrap_delta(to[1] - from[1], size)]
}

/// Squared toroidal distance, accumulated in f64.
#[inline]
pub fn dist2(from: Pos, to: Pos, size: f32) -> f64 {
    let [dx, dy] = toroidal_delta(from, to, size);
    let (dx, dy) = (dx as f64, dy as f64);
    dx * dx + dy * dy
}

/// Cell containing a position (positions are assumed already wrapped).
#[inline]
pub fn cell_of(p: Pos, grid: usize) -> (usize, usize) {
    let clamp = |v: f32| -> usize {
        let i = v.floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(grid - 1)
        }
    };
    (clamp(p[0]), clamp(p[1]))
}

/// One candidate returned by [`nearest_k`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: EntityId,
    pub dist2: f64,
    pub delta: [f32; 2],
    pub pos: Pos,
}

/// Ordering used everywhere proximity matters: distance, then smaller
/// absolute x, then entity id.
#[inline]
pub fn neighbor_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.dist2
        .total_cmp(&b.dist2)
        .then_with(|| a.pos[0].total_cmp(&b.pos[0]))
        .then_with(|| a.id.cmp(&b.id))
}

/// The `k` nearest candidates to `origin`, sorted by [`neighbor_order`].
pub fn nearest_k<I>(origin: Pos, candidates: I, k: usize, size: f32) -> Vec<Neighbor>
where
    I: IntoIterator<Item = (EntityId, Pos)>,
{
    let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
    if k == 0 {
        return best;
    }
    for (id, pos) in candidates {
        let delta = toroidal_delta(origin, pos, size);
        let n = Neighbor {
            id,
            dist2: (delta[0] as f64).powi(2) + (delta[1] as f64).powi(2),
            delta,
            pos,
        };
        if best.len() == k && neighbor_order(&n, &best[k - 1]) != Ordering::Less {
            continue;
        }
        let at = best.partition_point(|b| neighbor_order(b, &n) == Ordering::Less);
        best.insert(at, n);
        best.truncate(k);
    }
    best
}
