//! Joint MAP inference: Metropolis-Hastings over groupings and role labels,
//! with every candidate group parsed by dynamic programming over template
//! tilings of its unit grid.

pub mod dp;
mod grouping;
mod roles;
pub mod scoring;

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grammar::Model;
use crate::likelihood::solution_energy;
use crate::model::{Dataset, ParseGraph, Point, SegmentLabel, Solution, SolvedGroup};

pub use dp::{best_path, DpNode, DpPath, Span};
pub use grouping::{initial_groups, GroupingMove, GroupingOutcome};
pub use roles::RoleOutcome;
pub use scoring::{EffectiveWeights, GroupFeatures};

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    pub merge_prob: f64,
    pub split_prob: f64,
    /// Grouping proposals per outer iteration.
    pub grouping_sweeps: usize,
    /// Role proposals per group per outer iteration.
    pub role_sweeps: usize,
    pub outer_iters: usize,
    /// Outer iterations without improvement before stopping.
    pub convergence_window: usize,
    pub seed: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            merge_prob: 0.7,
            split_prob: 0.3,
            grouping_sweeps: 200,
            role_sweeps: 500,
            outer_iters: 10,
            convergence_window: 3,
            seed: 0,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !(p_ok(self.merge_prob) && p_ok(self.split_prob)) || (self.merge_prob + self.split_prob - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "merge and split probabilities must sum to 1 (got {} + {})",
                self.merge_prob, self.split_prob
            )));
        }
        if self.outer_iters == 0 || self.convergence_window == 0 {
            return Err(Error::InvalidConfig("outer iterations and convergence window must be positive".into()));
        }
        Ok(())
    }
}

/// A labelled group inside the Markov chain.
#[derive(Debug, Clone)]
pub struct GroupState {
    /// Dataset trajectory indices, ascending.
    pub members: Vec<usize>,
    pub event: usize,
    /// One role per member.
    pub roles: Vec<usize>,
    /// Spans in local ticks with grammar template indices.
    pub spans: Vec<Span>,
    pub energy: f64,
    pub features: Rc<GroupFeatures>,
}

/// Caches and lookup tables shared by all moves on one dataset.
pub struct Engine<'a> {
    pub dataset: &'a Dataset,
    pub model: &'a Model,
    pub weights: EffectiveWeights,
    admissible: Vec<Vec<usize>>,
    /// Per event, `allowed[x][y]` over positions in `admissible`.
    allowed: Vec<Vec<Vec<bool>>>,
    mean_positions: Vec<Point>,
    features: HashMap<Vec<usize>, Rc<GroupFeatures>>,
    labelled: HashMap<Vec<usize>, GroupState>,
}

impl<'a> Engine<'a> {
    pub fn new(dataset: &'a Dataset, model: &'a Model) -> Result<Self> {
        let violations = model.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidModel(violations));
        }
        if dataset.vocabulary != model.grammar.vocabulary {
            return Err(Error::InvalidDataset("dataset vocabulary differs from the model's".into()));
        }
        let g = &model.grammar;
        let admissible: Vec<Vec<usize>> = (0..g.vocabulary.events.len()).map(|e| g.admissible_templates(e)).collect();
        let allowed = admissible
            .iter()
            .enumerate()
            .map(|(e, adm)| {
                adm.iter()
                    .map(|&x| adm.iter().map(|&y| x == y || g.transitions[e].contains(&(x, y))).collect())
                    .collect()
            })
            .collect();
        let tick = model.config.tick;
        let mean_positions = dataset
            .trajectories
            .iter()
            .map(|t| {
                let r = t.resample(tick)?;
                let n = r.samples().len() as f64;
                let (sx, sy) = r.samples().iter().fold((0.0, 0.0), |(x, y), s| (x + s.x, y + s.y));
                Ok(Point::new(sx / n, sy / n))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Engine {
            dataset,
            model,
            weights: EffectiveWeights::new(model),
            admissible,
            allowed,
            mean_positions,
            features: HashMap::new(),
            labelled: HashMap::new(),
        })
    }

    pub fn features(&mut self, members: &[usize]) -> Result<Rc<GroupFeatures>> {
        if members.is_empty() {
            return Err(Error::EmptyGroup);
        }
        if let Some(f) = self.features.get(members) {
            return Ok(f.clone());
        }
        let f = Rc::new(GroupFeatures::new(members.to_vec(), self.dataset, self.model, &self.weights)?);
        self.features.insert(members.to_vec(), f.clone());
        Ok(f)
    }

    /// Best tiling of the group's extent for a fixed event and roles, with the
    /// group energy `-log p(event) - objective`. `None` if no path exists.
    pub fn parse(&self, features: &GroupFeatures, event: usize, roles: &[usize]) -> Option<(Vec<Span>, f64)> {
        let g = &self.model.grammar;
        let adm = &self.admissible[event];
        let allowed = &self.allowed[event];
        let k_max = features.n_units();
        let unit = self.model.config.unit;
        let scores = features.unit_scores(&self.weights, adm, roles);
        let prefix: Vec<Vec<f64>> = scores
            .iter()
            .map(|row| {
                let mut p = Vec::with_capacity(row.len() + 1);
                p.push(0.0);
                for s in row {
                    p.push(p[p.len() - 1] + s);
                }
                p
            })
            .collect();
        let prior: Vec<Vec<f64>> = adm
            .iter()
            .map(|&a| (0..=k_max).map(|len| g.templates[a].duration.log_density(len as f64 * unit)).collect())
            .collect();
        let switch: Vec<f64> = adm.iter().map(|&a| g.template_switch[event][a]).collect();
        let path = best_path(
            k_max,
            adm.len(),
            |x, y| allowed[x][y],
            |t, kp, k| prefix[t][k] - prefix[t][kp] + prior[t][k - kp] + switch[t],
        )?;
        let spans = path.spans.iter().map(|s| Span { template: adm[s.template], ..*s }).collect();
        Some((spans, -g.event_switch[event] - path.objective))
    }

    /// Segmentation of `members` under `roles` and `event`, with the DP
    /// objective (the summed interval posteriors and template selections).
    pub fn dp_segment(&mut self, members: &[usize], roles: &[usize], event: usize) -> Result<(Vec<SegmentLabel>, f64)> {
        let f = self.features(members)?;
        let (spans, energy) = self
            .parse(&f, event, roles)
            .ok_or_else(|| Error::InfeasibleEvent(self.model.grammar.vocabulary.events[event].clone()))?;
        let objective = -self.model.grammar.event_switch[event] - energy;
        Ok((spans_to_labels(&f, &spans), objective))
    }

    /// Labels a group: every event is tried with greedy roles and the lowest
    /// energy wins (ties to the lower event index).
    pub fn label(&mut self, members: &[usize]) -> Result<GroupState> {
        if let Some(s) = self.labelled.get(members) {
            return Ok(s.clone());
        }
        let f = self.features(members)?;
        let mut best: Option<GroupState> = None;
        for event in 0..self.model.grammar.vocabulary.events.len() {
            let roles = self.best_role_greedy(&f, event);
            if let Some((spans, energy)) = self.parse(&f, event, &roles) {
                if best.as_ref().is_none_or(|b| energy < b.energy) {
                    best = Some(GroupState { members: members.to_vec(), event, roles, spans, energy, features: f.clone() });
                }
            }
        }
        let best = best.ok_or_else(|| Error::Infeasible("no event admits a parse of the group".into()))?;
        self.labelled.insert(members.to_vec(), best.clone());
        Ok(best)
    }

    pub fn to_solution(&self, groups: &[GroupState]) -> Solution {
        let ids = |i: usize| self.dataset.trajectories[i].id.clone();
        let mut out: Vec<SolvedGroup> = groups
            .iter()
            .map(|g| SolvedGroup {
                members: g.members.iter().map(|&i| ids(i)).collect(),
                parse: ParseGraph {
                    event: g.event,
                    extent: g.features.grid.extent(),
                    segmentation: spans_to_labels(&g.features, &g.spans),
                    roles: g.members.iter().zip(&g.roles).map(|(&i, &r)| (ids(i), r)).collect::<BTreeMap<_, _>>(),
                },
            })
            .collect();
        out.sort_by_key(|g| self.dataset.index_map()[g.members[0].as_str()]);
        Solution { groups: out, energy: groups.iter().map(|g| g.energy).sum(), breakdown: None, trace: vec![], seed: None }
    }
}

fn spans_to_labels(f: &GroupFeatures, spans: &[Span]) -> Vec<SegmentLabel> {
    spans
        .iter()
        .map(|s| SegmentLabel { template: s.template, interval: (f.grid.tick_time(s.start), f.grid.tick_time(s.end)) })
        .collect()
}

/// Metropolis-Hastings acceptance test for a log acceptance ratio.
pub fn mh_accept<R: Rng>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= 0.0 {
        return true;
    }
    rng.random::<f64>() < log_ratio.exp()
}

fn total_energy(groups: &[GroupState]) -> f64 {
    groups.iter().map(|g| g.energy).sum()
}

/// Full inference: initial grouping, then alternating grouping and role
/// sweeps until the best energy stops improving.
pub fn infer(dataset: &Dataset, model: &Model, cfg: &InferenceConfig) -> Result<Solution> {
    cfg.validate()?;
    if dataset.trajectories.is_empty() {
        return Err(Error::InvalidDataset("no trajectories".into()));
    }
    let mut engine = Engine::new(dataset, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut groups = initial_groups(dataset, &model.config)
        .iter()
        .map(|m| engine.label(m))
        .collect::<Result<Vec<_>>>()?;
    let mut best = groups.clone();
    let mut best_energy = total_energy(&groups);
    let mut trace = vec![best_energy];
    let mut stale = 0;
    for iter in 0..cfg.outer_iters {
        for _ in 0..cfg.grouping_sweeps {
            engine.grouping_step(&mut groups, cfg, &mut rng)?;
        }
        for g in groups.iter_mut() {
            for _ in 0..cfg.role_sweeps {
                engine.role_step(g, &mut rng);
            }
        }
        let e = total_energy(&groups);
        if e < best_energy {
            best_energy = e;
            best = groups.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        trace.push(best_energy);
        log::debug!("outer iteration {iter}: energy {e:.6}, best {best_energy:.6}, {} groups", groups.len());
        if stale >= cfg.convergence_window {
            break;
        }
    }
    let mut solution = engine.to_solution(&best);
    let breakdown = solution_energy(&solution, dataset, model)?;
    solution.energy = breakdown.total;
    solution.breakdown = Some(breakdown);
    solution.trace = trace;
    solution.seed = Some(cfg.seed);
    Ok(solution)
}
