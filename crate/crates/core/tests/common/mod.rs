//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use stparse_core::features::relation_vector;
use stparse_core::grammar::template_id;
use stparse_core::grid::UnitGrid;
use stparse_core::{
    Dataset, DurationPrior, FeatureConfig, FeatureStandardizer, Grammar, Model, ParseGraph, RelationLayout, Sample,
    SceneModel, SegmentLabel, Solution, SolvedGroup, TemplateNode, Trajectory, Vocabulary,
};

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// A random DP instance: `edge[a][kp][k]`, `allowed[x][y]`.
#[derive(Debug, Clone)]
pub struct DpInstance {
    pub n_ticks: usize,
    pub n_templates: usize,
    pub allowed: Vec<Vec<bool>>,
    pub edge: Vec<Vec<Vec<f64>>>,
}

impl DpInstance {
    pub fn random<R: Rng>(rng: &mut R, max_ticks: usize, max_templates: usize) -> Self {
        let n_ticks = rng.random_range(1..=max_ticks);
        let n_templates = rng.random_range(1..=max_templates);
        let allowed = (0..n_templates).map(|_| (0..n_templates).map(|_| rng.random_bool(0.5)).collect()).collect();
        let edge = (0..n_templates)
            .map(|_| {
                (0..=n_ticks)
                    .map(|_| {
                        (0..=n_ticks)
                            .map(|_| if rng.random_bool(0.1) { f64::NEG_INFINITY } else { rng.random_range(-5.0..5.0) })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        DpInstance { n_ticks, n_templates, allowed, edge }
    }

    /// The same instance read backwards in time.
    pub fn reversed(&self) -> Self {
        let k = self.n_ticks;
        let n = self.n_templates;
        let allowed = (0..n).map(|x| (0..n).map(|y| self.allowed[y][x]).collect()).collect();
        let mut edge = self.edge.clone();
        for a in 0..n {
            for kp in 0..=k {
                for kk in kp + 1..=k {
                    edge[a][kp][kk] = self.edge[a][k - kk][k - kp];
                }
            }
        }
        DpInstance { n_ticks: k, n_templates: n, allowed, edge }
    }

    /// Score of a labelled tiling, `-inf` if it uses a forbidden transition
    /// or an impossible edge.
    pub fn path_score(&self, spans: &[(usize, usize, usize)]) -> f64 {
        let mut total = 0.0;
        for (i, &(a, s, e)) in spans.iter().enumerate() {
            if i > 0 && !self.allowed[spans[i - 1].0][a] {
                return f64::NEG_INFINITY;
            }
            total += self.edge[a][s][e];
        }
        total
    }

    /// Maximum over every tiling of `[0, K]` and every labelling of it.
    pub fn exhaustive(&self) -> f64 {
        let k = self.n_ticks;
        let n = self.n_templates;
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << (k - 1)) {
            let mut cuts = vec![0];
            cuts.extend((1..k).filter(|c| mask & (1 << (c - 1)) != 0));
            cuts.push(k);
            let m = cuts.len() - 1;
            for code in 0..n.pow(m as u32) {
                let mut c = code;
                let spans: Vec<(usize, usize, usize)> = (0..m)
                    .map(|i| {
                        let a = c % n;
                        c /= n;
                        (a, cuts[i], cuts[i + 1])
                    })
                    .collect();
                best = best.max(self.path_score(&spans));
            }
        }
        best
    }
}

/// Log-normal log density, written out.
fn log_normal(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x.ln() - mu) / sigma;
    -x.ln() - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
}

/// Energy of a solution computed from scratch: per group the negative
/// event log switch, and per segment the negative template log switch, the
/// negated sum of standardized linear unit scores and the negated duration
/// prior.
pub fn brute_force_energy(solution: &Solution, d: &Dataset, m: &Model) -> f64 {
    let g = &m.grammar;
    let layout = RelationLayout::new(&g.vocabulary);
    let unit = m.config.unit;
    let tick = m.config.tick;
    let mut total = 0.0;
    for group in &solution.groups {
        let pg = &group.parse;
        total -= g.event_switch[pg.event];
        let members: Vec<(&Trajectory, usize)> =
            group.members.iter().map(|id| (d.trajectory(id).unwrap(), pg.roles[id])).collect();
        for seg in &pg.segmentation {
            let tpl = &g.templates[seg.template];
            total -= g.template_switch[pg.event][seg.template];
            let (t0, t1) = seg.interval;
            let n_units = ((t1 - t0) / unit).round() as usize;
            let mut score = 0.0;
            for u in 0..n_units {
                let (a, b) = (t0 + u as f64 * unit, t0 + (u + 1) as f64 * unit);
                let windows: Vec<_> = members
                    .iter()
                    .filter_map(|(t, r)| t.window(a, b, tick).filter(|s| s.points.len() >= 2).map(|s| (s, *r)))
                    .collect();
                if windows.is_empty() {
                    continue;
                }
                let refs: Vec<_> = windows.iter().map(|(s, r)| (s, *r)).collect();
                let psi = relation_vector(&refs, &layout, &d.scene, &m.config).unwrap().to_vec();
                for i in 0..psi.len() {
                    score += tpl.weights[i] * (psi[i] - m.standardizer.mean[i]) / m.standardizer.stdev[i];
                }
                score += tpl.bias;
            }
            score += log_normal(t1 - t0, tpl.duration.mu, tpl.duration.sigma);
            total -= score;
        }
    }
    total
}

/// A valid model over `vocab` with random weights, switches, transitions,
/// roles and standardizer.
pub fn random_model<R: Rng>(vocab: &Vocabulary, n_templates: usize, rng: &mut R) -> Model {
    let dim = RelationLayout::new(vocab).dim();
    let n_events = vocab.events.len();
    let templates = (0..n_templates)
        .map(|a| TemplateNode {
            id: template_id(a),
            weights: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-2.0..2.0),
            duration: DurationPrior { mu: rng.random_range(0.0..3.0), sigma: rng.random_range(0.3..1.5) },
        })
        .collect();
    let normalized_logs = |w: Vec<f64>| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| (v / s).ln()).collect::<Vec<f64>>()
    };
    let event_switch = normalized_logs((0..n_events).map(|_| rng.random_range(0.1..1.0)).collect());
    let mut template_switch = Vec::new();
    let mut transitions = Vec::new();
    let mut roles_of = Vec::new();
    for _ in 0..n_events {
        let mut adm: Vec<usize> = (0..n_templates).filter(|_| rng.random_bool(0.6)).collect();
        if adm.is_empty() {
            adm.push(rng.random_range(0..n_templates));
        }
        let logs = normalized_logs(adm.iter().map(|_| rng.random_range(0.1..1.0)).collect());
        let mut row = vec![f64::NEG_INFINITY; n_templates];
        for (&a, l) in adm.iter().zip(logs) {
            row[a] = l;
        }
        template_switch.push(row);
        let mut tr = BTreeSet::new();
        for &x in &adm {
            for &y in &adm {
                if x != y && rng.random_bool(0.5) {
                    tr.insert((x, y));
                }
            }
        }
        transitions.push(tr);
        let mut roles: Vec<usize> = (0..vocab.n_labels()).filter(|_| rng.random_bool(0.5)).collect();
        if roles.is_empty() {
            roles.push(rng.random_range(0..vocab.n_labels()));
        }
        roles.shuffle(rng);
        roles_of.push(roles);
    }
    let grammar =
        Grammar { vocabulary: vocab.clone(), templates, event_switch, template_switch, transitions, roles_of };
    let standardizer = FeatureStandardizer {
        mean: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        stdev: (0..dim).map(|_| rng.random_range(0.5..2.0)).collect(),
    };
    Model { grammar, standardizer, config: FeatureConfig::default() }.validated().unwrap()
}

/// A random partition of the dataset with random events and roles and a
/// random transition-respecting tiling of every group's extent.
pub fn random_solution<R: Rng>(d: &Dataset, m: &Model, rng: &mut R) -> Solution {
    let g = &m.grammar;
    let n = d.trajectories.len();
    let n_groups = rng.random_range(1..=n.min(4));
    let mut owner: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_groups)).collect();
    owner[..n_groups].copy_from_slice(&(0..n_groups).collect::<Vec<_>>());
    let mut groups = Vec::new();
    for gi in 0..n_groups {
        let members: Vec<&Trajectory> = (0..n).filter(|&t| owner[t] == gi).map(|t| &d.trajectories[t]).collect();
        let event = rng.random_range(0..g.vocabulary.events.len());
        let roles: BTreeMap<String, usize> = members
            .iter()
            .map(|t| (t.id.clone(), g.roles_of[event][rng.random_range(0..g.roles_of[event].len())]))
            .collect();
        let grid = UnitGrid::covering(members.iter().copied(), m.config.unit).unwrap();
        let adm = g.admissible_templates(event);
        let mut segmentation: Vec<SegmentLabel> = Vec::new();
        let mut k = 0;
        while k < grid.n_units {
            let end = rng.random_range(k + 1..=grid.n_units);
            let template = match segmentation.last() {
                None => adm[rng.random_range(0..adm.len())],
                Some(prev) => {
                    let next: Vec<usize> = adm
                        .iter()
                        .copied()
                        .filter(|&a| a == prev.template || g.transitions[event].contains(&(prev.template, a)))
                        .collect();
                    next[rng.random_range(0..next.len())]
                }
            };
            segmentation.push(SegmentLabel { template, interval: (grid.tick_time(k), grid.tick_time(end)) });
            k = end;
        }
        groups.push(SolvedGroup {
            members: members.iter().map(|t| t.id.clone()).collect(),
            parse: ParseGraph { event, extent: grid.extent(), segmentation, roles },
        });
    }
    Solution { groups, energy: 0.0, breakdown: None, trace: vec![], seed: None }
}

/// A straight walk sampled every half second from `t0` to `t1`.
pub fn walker(id: &str, t0: f64, t1: f64, from: (f64, f64), velocity: (f64, f64)) -> Trajectory {
    let n = ((t1 - t0) / 0.5).round() as usize;
    let samples = (0..=n)
        .map(|i| {
            let dt = i as f64 * 0.5;
            Sample::new(t0 + dt, from.0 + velocity.0 * dt, from.1 + velocity.1 * dt)
        })
        .collect();
    Trajectory::new(id, samples, None).unwrap()
}

pub fn plain_dataset(vocab: Vocabulary, trajectories: Vec<Trajectory>) -> Dataset {
    Dataset::new(vocab, SceneModel::default(), trajectories, None).unwrap()
}
