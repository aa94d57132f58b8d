//! Template scores on unit intervals, interval posteriors with the duration
//! prior, and the total energy of a solution.
//!
//! This is the straightforward reference evaluation. Inference uses a cached
//! equivalent (`inference::scoring`) that must agree with it.

use crate::error::{Error, Result};
use crate::features::relation_vector;
use crate::grammar::{template_id, Model, TemplateNode};
use crate::grid::unit_segments;
use crate::model::{Dataset, SceneModel, Solution, Trajectory, TrajectorySegment};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEnergy {
    /// `-log p(template | event)`.
    pub template_selection: f64,
    /// Negated interval log-posterior of the template on its interval.
    pub template_assignment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupEnergy {
    /// `-log p(event | root)`.
    pub event_selection: f64,
    pub segments: Vec<SegmentEnergy>,
}

impl GroupEnergy {
    pub fn total(&self) -> f64 {
        self.event_selection
            + self.segments.iter().map(|s| s.template_selection + s.template_assignment).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub groups: Vec<GroupEnergy>,
    pub total: f64,
}

/// Linear score `w . standardize(psi) + bias` of a group over one unit
/// interval.
pub fn unit_log_likelihood(
    group: &[(&TrajectorySegment, usize)],
    template: &TemplateNode,
    scene: &SceneModel,
    model: &Model,
) -> Result<f64> {
    let psi = relation_vector(group, &model.layout(), scene, &model.config)?.to_vec();
    let z = model.standardizer.apply(&psi);
    Ok(template.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + template.bias)
}

/// Sum of unit scores over an aligned interval plus the log-normal duration
/// prior of its length. Units where no member is present contribute 0.
pub fn interval_log_posterior(
    members: &[&Trajectory],
    roles: &[usize],
    template: &TemplateNode,
    interval: (f64, f64),
    scene: &SceneModel,
    model: &Model,
) -> Result<f64> {
    let unit = model.config.unit;
    let (a, b) = match (aligned_tick(interval.0, unit), aligned_tick(interval.1, unit)) {
        (Some(a), Some(b)) if b > a => (a, b),
        _ => return Err(Error::Unaligned { start: interval.0, end: interval.1, unit }),
    };
    let mut total = 0.0;
    for k in a..b {
        let iv = (k as f64 * unit, (k + 1) as f64 * unit);
        let segs = unit_segments(members, roles, iv, model.config.tick);
        if segs.is_empty() {
            continue;
        }
        let refs: Vec<(&TrajectorySegment, usize)> = segs.iter().map(|(s, r)| (s, *r)).collect();
        total += unit_log_likelihood(&refs, template, scene, model)?;
    }
    Ok(total + template.duration.log_density((b - a) as f64 * unit))
}

fn aligned_tick(t: f64, unit: f64) -> Option<i64> {
    let g = t / unit;
    let r = g.round();
    ((g - r).abs() <= 1e-6).then_some(r as i64)
}

/// Energy of a full solution, recomputed from raw trajectories.
pub fn solution_energy(solution: &Solution, dataset: &Dataset, model: &Model) -> Result<EnergyBreakdown> {
    let grammar = &model.grammar;
    let mut groups = Vec::with_capacity(solution.groups.len());
    for (gi, g) in solution.groups.iter().enumerate() {
        let pg = &g.parse;
        if pg.event >= grammar.vocabulary.events.len() {
            return Err(Error::UnknownSymbol(format!("event index {}", pg.event)));
        }
        pg.check_tiling()?;
        let mut members = Vec::with_capacity(g.members.len());
        let mut roles = Vec::with_capacity(g.members.len());
        for m in &g.members {
            members.push(dataset.trajectory(m).ok_or_else(|| Error::Alignment(format!("unknown trajectory `{m}`")))?);
            roles.push(*pg.roles.get(m).ok_or_else(|| Error::Infeasible(format!("trajectory `{m}` has no role")))?);
        }
        let mut segments = Vec::with_capacity(pg.segmentation.len());
        for (u, s) in pg.segmentation.iter().enumerate() {
            if !grammar.admissible(pg.event, s.template)? {
                return Err(Error::Infeasible(format!(
                    "group {gi}: template {} is not admissible for `{}`",
                    template_id(s.template),
                    grammar.vocabulary.events[pg.event]
                )));
            }
            if u > 0 {
                let prev = pg.segmentation[u - 1].template;
                if !grammar.transition_allowed(pg.event, prev, s.template)? {
                    return Err(Error::Infeasible(format!(
                        "group {gi}: transition {} -> {} is not allowed",
                        template_id(prev),
                        template_id(s.template)
                    )));
                }
            }
            let lp = interval_log_posterior(
                &members,
                &roles,
                &grammar.templates[s.template],
                s.interval,
                &dataset.scene,
                model,
            )?;
            segments.push(SegmentEnergy {
                template_selection: -grammar.template_switch[pg.event][s.template],
                template_assignment: -lp,
            });
        }
        groups.push(GroupEnergy { event_selection: -grammar.event_switch[pg.event], segments });
    }
    let total = groups.iter().map(GroupEnergy::total).sum();
    Ok(EnergyBreakdown { groups, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureConfig, FeatureStandardizer, RelationLayout};
    use crate::grammar::tests::toy;
    use crate::model::{Sample, SegmentLabel, SolvedGroup, ParseGraph};
    use std::collections::BTreeMap;

    fn model() -> Model {
        let g = toy();
        let dim = RelationLayout::new(&g.vocabulary).dim();
        Model { grammar: g, standardizer: FeatureStandardizer::identity(dim), config: FeatureConfig::default() }
    }

    fn walker(id: &str, y: f64, speed: f64) -> Trajectory {
        let samples = (0..=16).map(|i| Sample::new(i as f64 * 0.5, i as f64 * 0.5 * speed, y)).collect();
        Trajectory::new(id, samples, Some(0)).unwrap()
    }

    #[test]
    fn zero_weights_score_zero() {
        let m = model();
        let t = walker("a", 0.0, 3.0);
        let seg = t.window(0.0, 2.0, 0.5).unwrap();
        let s = unit_log_likelihood(&[(&seg, 0)], &m.grammar.templates[0], &SceneModel::default(), &m).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn one_hot_histogram_weight_reads_the_bin() {
        let mut m = model();
        let layout = m.layout();
        let b = 4;
        m.grammar.templates[0].weights[layout.off_hist() + b] = 1.0;
        let t = walker("a", 0.0, 3.0);
        let seg = t.window(0.0, 2.0, 0.5).unwrap();
        let psi = relation_vector(&[(&seg, 0)], &layout, &SceneModel::default(), &m.config).unwrap();
        let s = unit_log_likelihood(&[(&seg, 0)], &m.grammar.templates[0], &SceneModel::default(), &m).unwrap();
        assert_eq!(s, psi.histogram.bins[b]);
    }

    #[test]
    fn interval_posterior_adds_units_and_prior() {
        let mut m = model();
        for (i, w) in m.grammar.templates[0].weights.iter_mut().enumerate() {
            *w = ((i * 7) % 5) as f64 - 2.0;
        }
        let (a, b) = (walker("a", 0.0, 3.0), walker("b", 5.0, 1.0));
        let scene = SceneModel::default();
        let tpl = &m.grammar.templates[0];
        let unit = |k: usize| {
            let iv = (k as f64 * 2.0, k as f64 * 2.0 + 2.0);
            let (sa, sb) = (a.window(iv.0, iv.1, 0.5).unwrap(), b.window(iv.0, iv.1, 0.5).unwrap());
            unit_log_likelihood(&[(&sa, 0), (&sb, 1)], tpl, &scene, &m).unwrap()
        };
        let one = interval_log_posterior(&[&a, &b], &[0, 1], tpl, (2.0, 4.0), &scene, &m).unwrap();
        assert!((one - unit(1) - tpl.duration.log_density(2.0)).abs() < 1e-9);
        let two = interval_log_posterior(&[&a, &b], &[0, 1], tpl, (2.0, 6.0), &scene, &m).unwrap();
        assert!((two - unit(1) - unit(2) - tpl.duration.log_density(4.0)).abs() < 1e-9);
        assert!(matches!(
            interval_log_posterior(&[&a], &[0], tpl, (1.0, 4.0), &scene, &m),
            Err(Error::Unaligned { .. })
        ));
    }

    #[test]
    fn prior_at_the_median() {
        let mut m = model();
        m.grammar.templates[0].duration.mu = 4f64.ln();
        let t = walker("a", 0.0, 0.0);
        let tpl = &m.grammar.templates[0];
        let lp = interval_log_posterior(&[&t], &[0], tpl, (0.0, 4.0), &SceneModel::default(), &m).unwrap();
        let sigma = tpl.duration.sigma;
        let closed = -(4.0 * sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((lp - closed).abs() < 1e-12);
    }

    fn solution(groups: Vec<(Vec<&str>, usize, Vec<(usize, f64, f64)>)>) -> Solution {
        Solution {
            groups: groups
                .into_iter()
                .map(|(members, event, segs)| SolvedGroup {
                    members: members.iter().map(|s| s.to_string()).collect(),
                    parse: ParseGraph {
                        event,
                        extent: (segs[0].1, segs[segs.len() - 1].2),
                        segmentation: segs
                            .iter()
                            .map(|&(template, a, b)| SegmentLabel { template, interval: (a, b) })
                            .collect(),
                        roles: members.iter().map(|s| (s.to_string(), 0)).collect::<BTreeMap<_, _>>(),
                    },
                })
                .collect(),
            energy: 0.0,
            breakdown: None,
            trace: vec![],
            seed: None,
        }
    }

    fn dataset() -> Dataset {
        let m = model();
        Dataset::new(
            m.grammar.vocabulary.clone(),
            SceneModel::default(),
            vec![walker("a", 0.0, 3.0), walker("b", 5.0, 1.0), walker("c", 300.0, 0.0)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_segment_energy() {
        let m = model();
        let d = dataset();
        let s = solution(vec![(vec!["a"], 0, vec![(1, 0.0, 8.0)])]);
        let e = solution_energy(&s, &d, &m).unwrap();
        let lp = interval_log_posterior(&[&d.trajectories[0]], &[0], &m.grammar.templates[1], (0.0, 8.0), &d.scene, &m)
            .unwrap();
        let expected = -m.grammar.event_switch[0] - m.grammar.template_switch[0][1] - lp;
        assert!((e.total - expected).abs() < 1e-12);
    }

    #[test]
    fn energy_is_additive_over_groups() {
        let m = model();
        let d = dataset();
        let g1 = (vec!["a", "b"], 0, vec![(0, 0.0, 4.0), (1, 4.0, 8.0)]);
        let g2 = (vec!["c"], 1, vec![(2, 0.0, 8.0)]);
        let both = solution_energy(&solution(vec![g1.clone(), g2.clone()]), &d, &m).unwrap().total;
        let e1 = solution_energy(&solution(vec![g1]), &d, &m).unwrap().total;
        let e2 = solution_energy(&solution(vec![g2]), &d, &m).unwrap().total;
        assert!((both - e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_parses_are_rejected() {
        let m = model();
        let d = dataset();
        let bad_template = solution(vec![(vec!["a"], 0, vec![(2, 0.0, 8.0)])]);
        assert!(matches!(solution_energy(&bad_template, &d, &m), Err(Error::Infeasible(_))));
        let bad_transition = solution(vec![(vec!["a"], 0, vec![(1, 0.0, 4.0), (0, 4.0, 8.0)])]);
        assert!(matches!(solution_energy(&bad_transition, &d, &m), Err(Error::Infeasible(_))));
    }
}
