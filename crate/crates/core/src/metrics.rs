//! Duration-weighted evaluation of groupings, events and roles.

use crate::error::{Error, Result};
use crate::model::{Dataset, Solution};

/// How per-group grouping fractions are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Mean over groups, in `[0, 1]`.
    #[default]
    Mean,
    /// Plain sum over groups.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub grouping_precision: f64,
    pub grouping_recall: f64,
    pub grouping_f: f64,
    pub event_accuracy: f64,
    pub role_accuracy: f64,
    /// `[truth event][predicted event]`, in seconds of trajectory.
    pub event_confusion: Vec<Vec<f64>>,
    /// Per truth event, `[truth label][predicted label]`, in seconds.
    pub role_confusion: Vec<Vec<Vec<f64>>>,
}

pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision > 0.0 && recall > 0.0 { 2.0 / (1.0 / precision + 1.0 / recall) } else { 0.0 }
}

/// Index of the group in `other` (given as a group index per trajectory)
/// with the largest duration-weighted overlap with `group`; ties go to the
/// lowest index.
pub fn best_match(group: &[usize], durations: &[f64], other: &[usize], n_other: usize) -> Result<usize> {
    if group.is_empty() {
        return Err(Error::UndefinedMatch);
    }
    let mut overlap = vec![0.0; n_other];
    for &t in group {
        overlap[other[t]] += durations[t];
    }
    let mut best = 0;
    for (g, &o) in overlap.iter().enumerate() {
        if o > overlap[best] {
            best = g;
        }
    }
    Ok(best)
}

fn grouping_score(
    groups: &[Vec<usize>],
    durations: &[f64],
    other: &[usize],
    n_other: usize,
    norm: Normalization,
) -> Result<f64> {
    let mut sum = 0.0;
    for g in groups {
        let m = best_match(g, durations, other, n_other)?;
        let hit: f64 = g.iter().filter(|&&t| other[t] == m).map(|&t| durations[t]).sum();
        let all: f64 = g.iter().map(|&t| durations[t]).sum();
        sum += hit / all;
    }
    Ok(match norm {
        Normalization::Mean => sum / groups.len() as f64,
        Normalization::Raw => sum,
    })
}

/// Scores `predicted` against the annotations of `truth`.
pub fn evaluate(truth: &Dataset, predicted: &Solution, norm: Normalization) -> Result<EvalReport> {
    let truth_groups = truth.groups.as_ref().ok_or_else(|| Error::Alignment("truth has no groups".into()))?;
    let index = truth.index_map();
    let n = truth.trajectories.len();
    let durations: Vec<f64> = truth.trajectories.iter().map(|t| t.duration()).collect();

    let resolve = |groups: Vec<Vec<&String>>, what: &str| -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
        let mut owner = vec![usize::MAX; n];
        let mut out = Vec::with_capacity(groups.len());
        for (gi, g) in groups.into_iter().enumerate() {
            let mut idx = Vec::with_capacity(g.len());
            for id in g {
                let &t = index.get(id.as_str()).ok_or_else(|| Error::Alignment(format!("{what} names unknown trajectory `{id}`")))?;
                if owner[t] != usize::MAX {
                    return Err(Error::Alignment(format!("{what} lists `{id}` twice")));
                }
                owner[t] = gi;
                idx.push(t);
            }
            out.push(idx);
        }
        if let Some(t) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Alignment(format!("{what} does not cover `{}`", truth.trajectories[t].id)));
        }
        Ok((out, owner))
    };
    let (tg, t_owner) = resolve(truth_groups.iter().map(|g| g.members.iter().collect()).collect(), "truth")?;
    let (pg, p_owner) = resolve(predicted.groups.iter().map(|g| g.members.iter().collect()).collect(), "prediction")?;

    let precision = grouping_score(&tg, &durations, &p_owner, pg.len(), norm)?;
    let recall = grouping_score(&pg, &durations, &t_owner, tg.len(), norm)?;

    let vocab = &truth.vocabulary;
    let n_events = vocab.events.len();
    let n_labels = vocab.n_labels();
    let mut event_confusion = vec![vec![0.0; n_events]; n_events];
    let mut role_confusion = vec![vec![vec![0.0; n_labels]; n_labels]; n_events];
    let (mut event_hit, mut role_hit, mut total) = (0.0, 0.0, 0.0);
    for t in 0..n {
        let d = durations[t];
        let te = truth_groups[t_owner[t]].event;
        let pgroup = &predicted.groups[p_owner[t]];
        let pe = pgroup.parse.event;
        if pe >= n_events {
            return Err(Error::Alignment(format!("predicted event index {pe} is out of range")));
        }
        let id = &truth.trajectories[t].id;
        let pr = *pgroup.parse.roles.get(id).ok_or_else(|| Error::Alignment(format!("no predicted role for `{id}`")))?;
        total += d;
        event_confusion[te][pe] += d;
        if te == pe {
            event_hit += d;
        }
        if let Some(tr) = truth.trajectories[t].role {
            if pr < n_labels {
                role_confusion[te][tr][pr] += d;
            }
            if tr == pr {
                role_hit += d;
            }
        }
    }
    Ok(EvalReport {
        grouping_precision: precision,
        grouping_recall: recall,
        grouping_f: f_measure(precision, recall),
        event_accuracy: event_hit / total,
        role_accuracy: role_hit / total,
        event_confusion,
        role_confusion,
    })
}

/// The truth annotations of a dataset as a solution: one group per truth
/// group with its event and ground-truth roles.
pub fn truth_as_solution(truth: &Dataset) -> Result<Solution> {
    use crate::model::{ParseGraph, SolvedGroup};
    let groups = truth.groups.as_ref().ok_or_else(|| Error::Alignment("truth has no groups".into()))?;
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let mut roles = std::collections::BTreeMap::new();
        for m in &g.members {
            let t = truth.trajectory(m).ok_or_else(|| Error::Alignment(format!("unknown trajectory `{m}`")))?;
            roles.insert(m.clone(), t.role.ok_or_else(|| Error::Alignment(format!("`{m}` has no truth role")))?);
        }
        out.push(SolvedGroup {
            members: g.members.clone(),
            parse: ParseGraph { event: g.event, extent: g.interval, segmentation: vec![], roles },
        });
    }
    Ok(Solution { groups: out, energy: 0.0, breakdown: None, trace: vec![], seed: None })
}
