//! Input saliency by central finite differences.

use super::forward::AgentPolicy;
use super::*;
use crate::action::N_ACT;

/// Which observation scalars to differentiate with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaliencyField {
    /// The agent's received other-message (all 16 entries).
    OtherMessage,
    /// A single entry of the received other-message.
    OtherMessageEntry(usize),
    /// Every feature of every present robot row (offsets and memory).
    RobotRows,
}

/// Locations of the selected scalars.
enum Slot {
    SelfFeat(usize),
    Robot(usize),
}

fn slots(obs: &Observation, field: SaliencyField) -> Vec<Slot> {
    match field {
        SaliencyField::OtherMessage => (0..N_PROG).map(|k| Slot::SelfFeat(SELF_OTHER_MSG + k)).collect(),
        SaliencyField::OtherMessageEntry(k) => vec![Slot::SelfFeat(SELF_OTHER_MSG + k)],
        SaliencyField::RobotRows => {
            let rows = obs.robots.len() / ROBOT_ROW;
            (0..rows)
                .filter(|&r| obs.robot_row(r)[ROBOT_ROW - 1] > 0.5)
                .flat_map(|r| (0..ROBOT_ROW - 1).map(move |c| Slot::Robot(r * ROBOT_ROW + c)))
                .collect()
        }
    }
}

fn slot_mut<'a>(obs: &'a mut Observation, s: &Slot) -> &'a mut f32 {
    match *s {
        Slot::SelfFeat(i) => &mut obs.self_feats[i],
        Slot::Robot(i) => &mut obs.robots[i],
    }
}

/// Mean absolute partial derivative of the nine action entries with respect
/// to every scalar in `field`, by central differences with step `h`.
/// Returns 0 when the field selects nothing (e.g. no robot in view).
pub fn saliency_with<P: Policy + ?Sized>(
    policy: &P,
    obs: &Observation,
    state: &RecurrentState,
    field: SaliencyField,
    h: f32,
) -> Result<f64, crate::error::NumericError> {
    assert!(h > 0.0, "saliency step must be positive");
    let sel = slots(obs, field);
    if sel.is_empty() {
        return Ok(0.0);
    }
    let mut probe = obs.clone();
    let mut total = 0.0f64;
    for s in &sel {
        let x = *slot_mut(&mut probe, s);
        let (hi, lo) = (x + h, x - h);
        *slot_mut(&mut probe, s) = hi;
        let (up, _) = policy.act(&probe, state)?;
        *slot_mut(&mut probe, s) = lo;
        let (down, _) = policy.act(&probe, state)?;
        *slot_mut(&mut probe, s) = x;
        // divide by the step actually realized in f32
        let width = hi as f64 - lo as f64;
        for a in 0..N_ACT {
            total += ((up[a] as f64 - down[a] as f64) / width).abs();
        }
    }
    Ok(total / (sel.len() * N_ACT) as f64)
}

/// [`saliency_with`] for a network parameter vector.
pub fn saliency(
    shape: &NetShape,
    params: &AgentParams,
    obs: &Observation,
    state: &RecurrentState,
    field: SaliencyField,
    h: f32,
) -> Result<f64, crate::error::NumericError> {
    saliency_with(&AgentPolicy { shape, params }, obs, state, field, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::ActionVector;
    use crate::error::NumericError;

    /// action_0 = tanh(w · other_msg_k + c); everything else zero.
    struct OneEntry {
        w: f64,
        c: f64,
        k: usize,
    }

    impl Policy for OneEntry {
        fn act(&self, obs: &Observation, state: &RecurrentState) -> Result<(ActionVector, RecurrentState), NumericError> {
            let x = obs.self_feats[SELF_OTHER_MSG + self.k] as f64;
            let mut a = ActionVector::ZERO;
            a[0] = (self.w * x + self.c).tanh() as f32;
            Ok((a, *state))
        }
    }

    fn shape() -> NetShape {
        NetShape::from_config(&SimConfig::default())
    }

    #[test]
    fn zero_network_has_zero_saliency() {
        let sh = shape();
        let obs = Observation::zeros(&sh);
        let s = saliency(&sh, &AgentParams::zeros(&sh), &obs, &RecurrentState::ZERO, SaliencyField::OtherMessage, 1e-3).unwrap();
        assert_eq!(s, 0.0);
        let s = saliency(&sh, &AgentParams::zeros(&sh), &obs, &RecurrentState::ZERO, SaliencyField::RobotRows, 1e-3).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn single_entry_matches_analytic_jacobian() {
        let sh = shape();
        let obs = Observation::zeros(&sh);
        let p = OneEntry { w: 0.7, c: 0.0, k: 3 };
        let s = saliency_with(&p, &obs, &RecurrentState::ZERO, SaliencyField::OtherMessageEntry(3), 1e-3).unwrap();
        // d tanh(w x)/dx at 0 is w; mean over 9 entries, 8 of them zero
        assert!((s - 0.7 / 9.0).abs() < 1e-4, "{s}");
        // the full field spreads the same derivative over 16 inputs
        let full = saliency_with(&p, &obs, &RecurrentState::ZERO, SaliencyField::OtherMessage, 1e-3).unwrap();
        assert!((full - 0.7 / 144.0).abs() < 1e-5, "{full}");
    }

    #[test]
    fn halving_step_shrinks_error_quadratically() {
        let sh = shape();
        let mut obs = Observation::zeros(&sh);
        obs.self_feats[SELF_OTHER_MSG] = 0.4;
        let p = OneEntry { w: 2.0, c: 0.3, k: 0 };
        let z = (2.0f64 * 0.4 + 0.3).tanh();
        let exact = 2.0 * (1.0 - z * z) / 9.0;
        let err = |h: f32| {
            (saliency_with(&p, &obs, &RecurrentState::ZERO, SaliencyField::OtherMessageEntry(0), h).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e2 < e1, "{e1} {e2}");
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }
}
