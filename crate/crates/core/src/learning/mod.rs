//! Template learning: cluster per-unit group relation vectors into latent
//! templates, then fit template weights, duration priors, switching
//! probabilities, transitions and per-event role sets.

pub mod kmeans;
pub mod logistic;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{relation_vector, FeatureConfig, FeatureStandardizer, RelationLayout};
use crate::grammar::{template_id, DurationPrior, Grammar, Model, TemplateNode};
use crate::grid::{unit_segments, UnitGrid};
use crate::inference::Engine;
use crate::model::{Dataset, Trajectory, TrajectorySegment, Vocabulary};

pub use kmeans::{kmeans, KMeansResult};
pub use logistic::LogisticFit;

/// Lower bound on the log-space spread of a duration prior.
pub const MIN_DURATION_SIGMA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub k: usize,
    pub features: FeatureConfig,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { k: 27, features: FeatureConfig::default(), kmeans_restarts: 10, kmeans_max_iter: 100, seed: 0 }
    }
}

impl TrainingConfig {
    pub fn validate(&self, n_events: usize) -> Result<()> {
        self.features.validate()?;
        if self.k < n_events {
            return Err(Error::InvalidConfig(format!("k = {} is smaller than the {n_events} events", self.k)));
        }
        if self.kmeans_restarts == 0 || self.kmeans_max_iter == 0 {
            return Err(Error::InvalidConfig("k-means restarts and iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Unit-interval relation vectors of one ground-truth group, in time order.
#[derive(Debug, Clone)]
pub struct GroupSamples {
    pub event: usize,
    pub roles: Vec<usize>,
    /// `(local unit index, raw relation vector)` for every unit where some
    /// member is present.
    pub units: Vec<(usize, Vec<f64>)>,
}

/// Result of clustering: per-group unit cluster labels and the standardizer.
#[derive(Debug, Clone)]
pub struct TemplateClusters {
    pub groups: Vec<GroupSamples>,
    /// Cluster of each unit, parallel to `groups[i].units`.
    pub labels: Vec<Vec<usize>>,
    pub n_clusters: usize,
    pub standardizer: FeatureStandardizer,
    /// Standardized vectors, flattened in group order.
    pub data: Vec<Vec<f64>>,
    pub sse: f64,
}

fn check_vocabulary(data: &[Dataset]) -> Result<&Vocabulary> {
    let first = data.first().ok_or_else(|| Error::NotEnoughData("no training datasets".into()))?;
    for d in &data[1..] {
        if d.vocabulary != first.vocabulary {
            return Err(Error::InvalidDataset("training datasets use different vocabularies".into()));
        }
    }
    Ok(&first.vocabulary)
}

/// Raw relation vectors of `members` under `roles` on every unit of their
/// common grid where some member is present.
fn unit_vectors(
    d: &Dataset,
    members: &[&Trajectory],
    roles: &[usize],
    layout: &RelationLayout,
    cfg: &FeatureConfig,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let grid = UnitGrid::covering(members.iter().copied(), cfg.unit)?;
    let mut units = Vec::new();
    for k in 0..grid.n_units {
        let segs = unit_segments(members, roles, grid.unit_interval(k), cfg.tick);
        if segs.is_empty() {
            continue;
        }
        let refs: Vec<(&TrajectorySegment, usize)> = segs.iter().map(|(s, r)| (s, *r)).collect();
        units.push((k, relation_vector(&refs, layout, &d.scene, cfg)?.to_vec()));
    }
    Ok(units)
}

/// Relation vectors of every annotated group under ground-truth roles.
pub fn group_samples(data: &[Dataset], cfg: &FeatureConfig) -> Result<Vec<GroupSamples>> {
    let vocab = check_vocabulary(data)?;
    let layout = RelationLayout::new(vocab);
    let mut out = Vec::new();
    for d in data {
        let groups = d.groups.as_ref().ok_or_else(|| Error::NotEnoughData("training data has no groups".into()))?;
        let index = d.index_map();
        for g in groups {
            let members: Vec<&Trajectory> = g.members.iter().map(|m| &d.trajectories[index[m.as_str()]]).collect();
            let roles = members
                .iter()
                .map(|t| {
                    t.role.ok_or_else(|| Error::NotEnoughData(format!("trajectory `{}` has no ground-truth role", t.id)))
                })
                .collect::<Result<Vec<_>>>()?;
            let units = unit_vectors(d, &members, &roles, &layout, cfg)?;
            out.push(GroupSamples { event: g.event, roles, units });
        }
    }
    Ok(out)
}

/// Raw relation vectors of corrupted annotations, which no template should
/// explain: unions of two groups of a scene, proper subsets of a group,
/// groups whose roles are redrawn from some event's role set, and groups
/// with one member's role changed within their event. Roles of corrupted
/// member sets are either the ground truth or redrawn.
pub fn negative_samples<R: Rng>(
    data: &[Dataset],
    roles_of: &[Vec<usize>],
    cfg: &FeatureConfig,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let vocab = check_vocabulary(data)?;
    let layout = RelationLayout::new(vocab);
    let mut out = Vec::new();
    let redraw = |n: usize, rng: &mut R| -> Vec<usize> {
        let set = &roles_of[rng.random_range(0..roles_of.len())];
        (0..n).map(|_| set[rng.random_range(0..set.len())]).collect()
    };
    for d in data {
        let Some(groups) = d.groups.as_ref() else { continue };
        let index = d.index_map();
        let members: Vec<Vec<usize>> = groups.iter().map(|g| g.members.iter().map(|m| index[m.as_str()]).collect()).collect();
        let truth = |set: &[usize]| set.iter().map(|&i| d.trajectories[i].role.unwrap_or(0)).collect::<Vec<_>>();
        let mut sets: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let push = |set: Vec<usize>, rng: &mut R, sets: &mut Vec<(Vec<usize>, Vec<usize>)>| {
            let t = truth(&set);
            let r = redraw(set.len(), rng);
            sets.push((set.clone(), t));
            sets.push((set, r));
        };
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                push(a.iter().chain(b).copied().collect(), rng, &mut sets);
                let pick = |s: &[usize], rng: &mut R| -> Vec<usize> {
                    let n = rng.random_range(1..=s.len());
                    rand::seq::index::sample(rng, s.len(), n).into_iter().map(|j| s[j]).collect()
                };
                let mut mix = pick(a, rng);
                mix.extend(pick(b, rng));
                push(mix, rng, &mut sets);
            }
            if a.len() > 1 {
                for &j in a {
                    push(vec![j], rng, &mut sets);
                }
                let n = rng.random_range(1..a.len());
                let sub = rand::seq::index::sample(rng, a.len(), n).into_iter().map(|j| a[j]).collect();
                push(sub, rng, &mut sets);
            }
            let r = redraw(a.len(), rng);
            if r != truth(a) {
                sets.push((a.clone(), r));
            }
            let t = truth(a);
            for j in 0..a.len() {
                for &r in roles_of[groups[i].event].iter().filter(|&&r| r != t[j]) {
                    let mut roles = t.clone();
                    roles[j] = r;
                    sets.push((a.clone(), roles));
                }
            }
        }
        for (set, roles) in sets {
            let trajs: Vec<&Trajectory> = set.iter().map(|&i| &d.trajectories[i]).collect();
            out.extend(unit_vectors(d, &trajs, &roles, &layout, cfg)?.into_iter().map(|(_, v)| v));
        }
    }
    Ok(out)
}

/// Standardizes all unit relation vectors and clusters them with k-means.
/// Clusters left empty are dropped and the rest renumbered in order.
pub fn extract_templates(data: &[Dataset], cfg: &TrainingConfig) -> Result<TemplateClusters> {
    let vocab = check_vocabulary(data)?;
    cfg.validate(vocab.events.len())?;
    let groups = group_samples(data, &cfg.features)?;
    let raw: Vec<Vec<f64>> = groups.iter().flat_map(|g| g.units.iter().map(|(_, v)| v.clone())).collect();
    if raw.len() < cfg.k {
        return Err(Error::NotEnoughData(format!("{} unit samples for k = {}", raw.len(), cfg.k)));
    }
    let standardizer = FeatureStandardizer::fit(&raw)?;
    let data: Vec<Vec<f64>> = raw.iter().map(|v| standardizer.apply(v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let km = kmeans(&data, cfg.k, cfg.kmeans_restarts, cfg.kmeans_max_iter, &mut rng)?;

    let used: BTreeSet<usize> = km.assignments.iter().copied().collect();
    let mut remap = vec![usize::MAX; cfg.k];
    for (new, &old) in used.iter().enumerate() {
        remap[old] = new;
    }
    if used.len() < cfg.k {
        log::warn!("{} of {} clusters ended empty and were dropped", cfg.k - used.len(), cfg.k);
    }
    let mut labels = Vec::with_capacity(groups.len());
    let mut i = 0;
    for g in &groups {
        labels.push(g.units.iter().map(|_| {
            let l = remap[km.assignments[i]];
            i += 1;
            l
        }).collect());
    }
    Ok(TemplateClusters { groups, labels, n_clusters: used.len(), standardizer, data, sse: km.sse })
}

/// One-vs-rest logistic weights of cluster `cluster` over standardized data.
/// Rows labelled [`NEGATIVE`] belong to no cluster.
pub fn fit_template_weights(data: &[Vec<f64>], labels: &[usize], cluster: usize) -> Result<LogisticFit> {
    if !labels.contains(&cluster) {
        return Err(Error::NotEnoughData(format!("cluster {cluster} is empty")));
    }
    let y: Vec<bool> = labels.iter().map(|&l| l == cluster).collect();
    Ok(logistic::fit(data, &y, logistic::L2_PENALTY, logistic::MAX_ITER))
}

/// Label of corrupted-annotation rows in [`fit_template_weights`].
pub const NEGATIVE: usize = usize::MAX;

/// Log-normal maximum-likelihood fit with the spread floored at
/// [`MIN_DURATION_SIGMA`].
pub fn fit_duration_prior(lengths: &[f64]) -> Result<DurationPrior> {
    if lengths.is_empty() {
        return Err(Error::NotEnoughData("no durations".into()));
    }
    if let Some(bad) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidConfig(format!("duration {bad} is not positive")));
    }
    let n = lengths.len() as f64;
    let logs: Vec<f64> = lengths.iter().map(|l| l.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n;
    Ok(DurationPrior { mu, sigma: var.sqrt().max(MIN_DURATION_SIGMA) })
}

/// Maximal runs of equal labels as `(label, length)`.
fn runs(labels: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &l in labels {
        match out.last_mut() {
            Some((prev, n)) if *prev == l => *n += 1,
            _ => out.push((l, 1)),
        }
    }
    out
}

fn smoothed_log_probs(counts: &[usize], support: &[usize]) -> Vec<f64> {
    let total: f64 = support.iter().map(|&i| counts[i] as f64 + 1.0).sum();
    let mut out = vec![f64::NEG_INFINITY; counts.len()];
    for &i in support {
        out[i] = ((counts[i] as f64 + 1.0) / total).ln();
    }
    out
}

/// Learns a complete model from annotated datasets.
pub fn train(data: &[Dataset], cfg: &TrainingConfig) -> Result<Model> {
    let vocab = check_vocabulary(data)?.clone();
    let clusters = extract_templates(data, cfg)?;
    let n_events = vocab.events.len();
    let k = clusters.n_clusters;

    let mut event_counts = vec![0usize; n_events];
    let mut template_counts = vec![vec![0usize; k]; n_events];
    let mut transitions = vec![BTreeSet::new(); n_events];
    let mut role_counts = vec![vec![0usize; vocab.n_labels()]; n_events];
    for (g, labels) in clusters.groups.iter().zip(&clusters.labels) {
        event_counts[g.event] += 1;
        let r = runs(labels);
        for (a, _) in &r {
            template_counts[g.event][*a] += 1;
        }
        for w in r.windows(2) {
            transitions[g.event].insert((w[0].0, w[1].0));
        }
        for &role in &g.roles {
            role_counts[g.event][role] += 1;
        }
    }
    if let Some(e) = event_counts.iter().position(|&c| c == 0) {
        return Err(Error::NotEnoughData(format!("event `{}` has no training groups", vocab.events[e])));
    }
    let all_events: Vec<usize> = (0..n_events).collect();
    let event_switch = smoothed_log_probs(&event_counts, &all_events);
    let template_switch = template_counts
        .iter()
        .map(|c| {
            let seen: Vec<usize> = (0..k).filter(|&a| c[a] > 0).collect();
            smoothed_log_probs(c, &seen)
        })
        .collect();
    let roles_of: Vec<Vec<usize>> = role_counts
        .iter()
        .map(|c| {
            let mut r: Vec<usize> = (0..c.len()).filter(|&l| c[l] > 0).collect();
            r.sort_by(|&a, &b| c[b].cmp(&c[a]).then(a.cmp(&b)));
            r
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut negatives: Vec<Vec<f64>> = negative_samples(data, &roles_of, &cfg.features, &mut rng)?
        .iter()
        .map(|v| clusters.standardizer.apply(v))
        .collect();
    let templates = fit_templates(&clusters, &negatives, &template_counts, cfg)?;
    let grammar = Grammar { vocabulary: vocab, templates, event_switch, template_switch, transitions, roles_of };
    let mut model = Model { grammar, standardizer: clusters.standardizer.clone(), config: cfg.features };
    check(&model)?;

    // One round of hard negatives: every training group parsed under each
    // event with the roles inference would start from.
    negatives.extend(hard_negative_samples(data, &model)?.iter().map(|v| clusters.standardizer.apply(v)));
    model.grammar.templates = fit_templates(&clusters, &negatives, &template_counts, cfg)?;
    check(&model)?;
    Ok(model)
}

fn check(model: &Model) -> Result<()> {
    let violations = model.validate();
    if violations.is_empty() { Ok(()) } else { Err(Error::TrainingFailed(violations)) }
}

/// Raw relation vectors of every annotated group labelled with each event
/// under that event's greedy roles, except where this reproduces the
/// annotation.
pub fn hard_negative_samples(data: &[Dataset], model: &Model) -> Result<Vec<Vec<f64>>> {
    let layout = model.layout();
    let mut out = Vec::new();
    for d in data {
        let Some(groups) = d.groups.as_ref() else { continue };
        let index = d.index_map();
        let mut engine = Engine::new(d, model)?;
        for g in groups {
            let mut members: Vec<usize> = g.members.iter().map(|m| index[m.as_str()]).collect();
            members.sort_unstable();
            let features = engine.features(&members)?;
            let trajs: Vec<&Trajectory> = members.iter().map(|&i| &d.trajectories[i]).collect();
            let truth: Vec<usize> = members.iter().map(|&i| d.trajectories[i].role.unwrap_or(0)).collect();
            for e in 0..model.grammar.vocabulary.events.len() {
                let roles = engine.best_role_greedy(&features, e);
                if e == g.event && roles == truth {
                    continue;
                }
                out.extend(unit_vectors(d, &trajs, &roles, &layout, &model.config)?.into_iter().map(|(_, v)| v));
            }
        }
    }
    Ok(out)
}

/// Per-template weights, bias and duration prior. Template a is contrasted
/// with `negatives` and with units of events it never occurs in; other
/// phases of its own events are left out. The bias is the fitted intercept
/// minus the prior log-odds, so a unit scores its likelihood ratio.
fn fit_templates(
    clusters: &TemplateClusters,
    negatives: &[Vec<f64>],
    template_counts: &[Vec<usize>],
    cfg: &TrainingConfig,
) -> Result<Vec<TemplateNode>> {
    let unit_events: Vec<usize> =
        clusters.groups.iter().flat_map(|g| std::iter::repeat_n(g.event, g.units.len())).collect();
    let unit_labels: Vec<usize> = clusters.labels.iter().flatten().copied().collect();
    let mut templates = Vec::with_capacity(clusters.n_clusters);
    for a in 0..clusters.n_clusters {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, v) in clusters.data.iter().enumerate() {
            if unit_labels[i] == a || template_counts[unit_events[i]][a] == 0 {
                rows.push(v.clone());
                labels.push(unit_labels[i]);
            }
        }
        rows.extend(negatives.iter().cloned());
        labels.resize(rows.len(), NEGATIVE);
        let pos = labels.iter().filter(|&&l| l == a).count() as f64;
        let prior_odds = (pos / (labels.len() as f64 - pos)).ln();
        let fit = fit_template_weights(&rows, &labels, a)?;
        if !fit.converged {
            log::warn!("template {} weights did not converge in {} iterations", template_id(a), fit.iterations);
        }
        let mut lengths = Vec::new();
        for l in &clusters.labels {
            lengths.extend(runs(l).into_iter().filter(|r| r.0 == a).map(|r| r.1 as f64 * cfg.features.unit));
        }
        templates.push(TemplateNode {
            id: template_id(a),
            weights: fit.weights,
            bias: fit.intercept - prior_odds,
            duration: fit_duration_prior(&lengths)?,
        });
    }
    Ok(templates)
}
