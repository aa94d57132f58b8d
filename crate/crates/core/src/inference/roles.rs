//! Role labels: the greedy initializer and the single-label MH move.

use rand::Rng;

use super::{mh_accept, Engine, GroupFeatures, GroupState};

/// Cap on greedy role passes, the first included.
pub const GREEDY_PASSES: usize = 4;

/// Groups with at most this many role maps are labelled by enumeration.
pub const EXACT_ROLE_MAPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoleOutcome {
    /// Local member index and proposed role; `None` when the event has a
    /// single admissible role.
    pub proposal: Option<(usize, usize)>,
    /// `E' - E`; infinite when the proposal has no parse.
    pub delta: f64,
    pub accepted: bool,
}

impl Engine<'_> {
    /// Each member gets the admissible role that maximizes the best
    /// single-template summed unit score, with every other member held at
    /// the event's most frequent role. If giving everyone the same role
    /// parses better, that is the start instead. Further passes then relabel
    /// single members, or swap the roles of two, whenever that lowers the
    /// group's parse energy, until a pass changes nothing or
    /// [`GREEDY_PASSES`] is reached.
    ///
    /// Small groups (at most [`EXACT_ROLE_MAPS`] role maps) are solved
    /// exactly instead; ties go to the first map in lexicographic order of
    /// positions in the event's role list.
    pub fn best_role_greedy(&self, features: &GroupFeatures, event: usize) -> Vec<usize> {
        let roles_of = &self.model.grammar.roles_of[event];
        let r0 = roles_of[0];
        let m = features.members.len();
        if roles_of.len() == 1 {
            return vec![r0; m];
        }
        let energy = |roles: &[usize]| self.parse(features, event, roles).map_or(f64::INFINITY, |p| p.1);
        let n_maps = u32::try_from(m).ok().and_then(|m| roles_of.len().checked_pow(m));
        if n_maps.is_some_and(|n| n <= EXACT_ROLE_MAPS) {
            let mut pos = vec![0usize; m];
            let mut best = (vec![r0; m], f64::INFINITY);
            loop {
                let roles: Vec<usize> = pos.iter().map(|&p| roles_of[p]).collect();
                let e = energy(&roles);
                if e < best.1 {
                    best = (roles, e);
                }
                // odometer over positions, last member fastest
                let Some(j) = (0..m).rev().find(|&j| pos[j] + 1 < roles_of.len()) else { break };
                pos[j] += 1;
                pos[j + 1..].iter_mut().for_each(|p| *p = 0);
            }
            return best.0;
        }
        let adm = &self.admissible[event];
        let score = |trial: &[usize]| {
            adm.iter()
                .map(|&a| (0..features.n_units()).map(|k| features.unit_score(&self.weights, a, k, trial)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut trial = vec![r0; m];
        let mut out = vec![r0; m];
        for (j, o) in out.iter_mut().enumerate() {
            let mut best = (r0, f64::NEG_INFINITY);
            for &r in roles_of {
                trial[j] = r;
                let s = score(&trial);
                if s > best.1 {
                    best = (r, s);
                }
            }
            trial[j] = r0;
            *o = best.0;
        }
        // refine against the full parse energy
        let mut current = energy(&out);
        for &r in roles_of {
            let uniform = vec![r; m];
            let e = energy(&uniform);
            if e < current {
                current = e;
                out = uniform;
            }
        }
        for _ in 1..GREEDY_PASSES {
            let mut changed = false;
            for j in 0..m {
                let keep = out[j];
                for &r in roles_of.iter().filter(|&&r| r != keep) {
                    let prev = out[j];
                    out[j] = r;
                    let e = energy(&out);
                    if e < current {
                        current = e;
                        changed = true;
                    } else {
                        out[j] = prev;
                    }
                }
            }
            for j in 0..m {
                for i in 0..j {
                    if out[i] == out[j] {
                        continue;
                    }
                    out.swap(i, j);
                    let e = energy(&out);
                    if e < current {
                        current = e;
                        changed = true;
                    } else {
                        out.swap(i, j);
                    }
                }
            }
            if !changed {
                break;
            }
        }
        out
    }

    /// Proposes a new label for one uniformly chosen member, drawn uniformly
    /// from the event's roles, re-parses and applies the MH test. The
    /// proposal is symmetric.
    pub fn role_step<R: Rng>(&self, state: &mut GroupState, rng: &mut R) -> RoleOutcome {
        let roles_of = &self.model.grammar.roles_of[state.event];
        if roles_of.len() < 2 {
            return RoleOutcome { proposal: None, delta: 0.0, accepted: true };
        }
        let j = rng.random_range(0..state.members.len());
        let r = roles_of[rng.random_range(0..roles_of.len())];
        if r == state.roles[j] {
            return RoleOutcome { proposal: Some((j, r)), delta: 0.0, accepted: true };
        }
        let mut roles = state.roles.clone();
        roles[j] = r;
        let Some((spans, energy)) = self.parse(&state.features, state.event, &roles) else {
            return RoleOutcome { proposal: Some((j, r)), delta: f64::INFINITY, accepted: false };
        };
        let delta = energy - state.energy;
        let accepted = mh_accept(-delta, rng);
        if accepted {
            state.roles = roles;
            state.spans = spans;
            state.energy = energy;
        }
        RoleOutcome { proposal: Some((j, r)), delta, accepted }
    }
}
