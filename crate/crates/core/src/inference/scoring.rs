//! Cached unit scores for one candidate group.
//!
//! Everything in the relation vector except the role one-hots and the order
//! of each pair depends only on geometry, so it is computed once per group
//! and unit. Scores for a role assignment then cost one pass over members
//! and pairs. The result equals `likelihood::unit_log_likelihood` on the
//! same segments.

use std::cmp::Ordering;

use crate::error::Result;
use crate::features::{
    displacement_angle, mean_distance, motion_attributes, pair_key_cmp, velocity_histogram, RelationLayout,
    HISTOGRAM_BINS,
};
use crate::grammar::Model;
use crate::grid::{unit_segments, UnitGrid};
use crate::model::{Dataset, Trajectory, TrajectorySegment};

/// Template weights folded with the standardizer: `w / s` and
/// `bias - (w / s) . m`.
#[derive(Debug, Clone)]
pub struct EffectiveWeights {
    pub layout: RelationLayout,
    pub eff: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl EffectiveWeights {
    pub fn new(model: &Model) -> Self {
        let s = &model.standardizer;
        let mut eff = Vec::with_capacity(model.grammar.templates.len());
        let mut offset = Vec::with_capacity(model.grammar.templates.len());
        for t in &model.grammar.templates {
            let e: Vec<f64> = t.weights.iter().zip(&s.stdev).map(|(w, sd)| w / sd).collect();
            offset.push(t.bias - e.iter().zip(&s.mean).map(|(w, m)| w * m).sum::<f64>());
            eff.push(e);
        }
        EffectiveWeights { layout: model.layout(), eff, offset }
    }
}

#[derive(Debug, Clone)]
struct PairTerm {
    i: usize,
    j: usize,
    /// Order of `(i, j)` when their roles are equal.
    motion_order: Ordering,
    /// Speed and closeness compatibility scores per template with `i`
    /// first, and with `j` first.
    fwd: Vec<f64>,
    bwd: Vec<f64>,
}

#[derive(Debug, Clone)]
struct UnitTerms {
    /// Members present in the unit (local indices, ascending).
    present: Vec<usize>,
    /// Role-independent score per template.
    base: Vec<f64>,
    pairs: Vec<PairTerm>,
}

/// Geometry of one group over its unit grid.
#[derive(Debug, Clone)]
pub struct GroupFeatures {
    /// Dataset trajectory indices, ascending.
    pub members: Vec<usize>,
    pub grid: UnitGrid,
    units: Vec<UnitTerms>,
}

impl GroupFeatures {
    pub fn new(members: Vec<usize>, dataset: &Dataset, model: &Model, weights: &EffectiveWeights) -> Result<Self> {
        let trajs: Vec<&Trajectory> = members.iter().map(|&i| &dataset.trajectories[i]).collect();
        let cfg = &model.config;
        let grid = UnitGrid::covering(trajs.iter().copied(), cfg.unit)?;
        let layout = weights.layout;
        let n_t = weights.eff.len();
        let local: Vec<usize> = (0..trajs.len()).collect();
        let mut units = Vec::with_capacity(grid.n_units);
        for k in 0..grid.n_units {
            let segs = unit_segments(&trajs, &local, grid.unit_interval(k), cfg.tick);
            if segs.is_empty() {
                units.push(UnitTerms { present: vec![], base: vec![0.0; n_t], pairs: vec![] });
                continue;
            }
            let motions = segs
                .iter()
                .map(|(s, _)| motion_attributes(s, &dataset.scene, layout.n_scene, cfg))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&TrajectorySegment> = segs.iter().map(|(s, _)| s).collect();
            let hist = velocity_histogram(&refs, None)?;

            let mut base = weights.offset.clone();
            for (a, w) in weights.eff.iter().enumerate() {
                let mut b = 0.0;
                for m in &motions {
                    b += w[layout.off_moving()] * (m.moving as u8 as f64);
                    for (l, &c) in m.closeness.iter().enumerate() {
                        if c {
                            b += w[layout.off_close() + l];
                        }
                    }
                }
                for (bin, h) in hist.bins.iter().enumerate().take(HISTOGRAM_BINS) {
                    b += w[layout.off_hist() + bin] * h;
                }
                base[a] += b;
            }

            let mut pairs = Vec::new();
            for x in 0..segs.len() {
                for y in x + 1..segs.len() {
                    let d = mean_distance(&segs[x].0, &segs[y].0);
                    let theta = displacement_angle(&segs[x].0, &segs[y].0);
                    let (mx, my) = (&motions[x], &motions[y]);
                    let compat = |w: &[f64], p: &crate::features::MotionAttributes, q: &crate::features::MotionAttributes| {
                        let mut s = w[layout.off_speed_compat() + 2 * p.moving as usize + q.moving as usize];
                        for (u, &cu) in p.closeness.iter().enumerate() {
                            if !cu {
                                continue;
                            }
                            for (v, &cv) in q.closeness.iter().enumerate() {
                                if cv {
                                    s += w[layout.off_close_compat() + u * layout.n_scene + v];
                                }
                            }
                        }
                        s
                    };
                    for (a, w) in weights.eff.iter().enumerate() {
                        base[a] += w[layout.off_pair()] * d + w[layout.off_pair() + 1] * theta;
                    }
                    pairs.push(PairTerm {
                        i: segs[x].1,
                        j: segs[y].1,
                        motion_order: pair_key_cmp(0, mx, 0, my),
                        fwd: weights.eff.iter().map(|w| compat(w, mx, my)).collect(),
                        bwd: weights.eff.iter().map(|w| compat(w, my, mx)).collect(),
                    });
                }
            }
            units.push(UnitTerms { present: segs.iter().map(|(_, i)| *i).collect(), base, pairs });
        }
        Ok(GroupFeatures { members, grid, units })
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    /// Score of template `a` on local unit `k` under `roles` (one per member).
    pub fn unit_score(&self, weights: &EffectiveWeights, a: usize, k: usize, roles: &[usize]) -> f64 {
        let u = &self.units[k];
        if u.present.is_empty() {
            return 0.0;
        }
        let w = &weights.eff[a];
        let n = weights.layout.n_labels;
        let rc = weights.layout.off_role_compat();
        let mut s = u.base[a];
        for &j in &u.present {
            s += w[roles[j]];
        }
        for p in &u.pairs {
            let (ri, rj) = (roles[p.i], roles[p.j]);
            if ri.cmp(&rj).then(p.motion_order) == Ordering::Greater {
                s += p.bwd[a] + w[rc + rj * n + ri];
            } else {
                s += p.fwd[a] + w[rc + ri * n + rj];
            }
        }
        s
    }

    /// Unit scores for each listed template: `out[t][k]`.
    pub fn unit_scores(&self, weights: &EffectiveWeights, templates: &[usize], roles: &[usize]) -> Vec<Vec<f64>> {
        templates
            .iter()
            .map(|&a| (0..self.units.len()).map(|k| self.unit_score(weights, a, k, roles)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureConfig, FeatureStandardizer};
    use crate::grammar::tests::toy;
    use crate::likelihood::unit_log_likelihood;
    use crate::model::{Geometry, Point, Sample, SceneModel, SceneObject};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_setup(seed: u64) -> (Dataset, Model, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = toy();
        let dim = RelationLayout::new(&g.vocabulary).dim();
        let mut model = Model {
            grammar: g,
            standardizer: FeatureStandardizer {
                mean: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                stdev: (0..dim).map(|_| rng.random_range(0.5..2.0)).collect(),
            },
            config: FeatureConfig { closeness_threshold: 15.0, ..FeatureConfig::default() },
        };
        for t in &mut model.grammar.templates {
            t.weights = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            t.bias = rng.random_range(-1.0..1.0);
        }
        let scene = SceneModel {
            objects: vec![SceneObject { class: 0, geometry: Geometry::Point(Point::new(10.0, 0.0)) }],
        };
        let n = 4;
        let trajs = (0..n)
            .map(|i| {
                let t0 = rng.random_range(0.0..3.0);
                let (x0, y0) = (rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
                let (vx, vy) = if i % 2 == 0 { (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)) } else { (0.0, 0.0) };
                let samples = (0..20).map(|s| {
                    let t = t0 + s as f64 * 0.7;
                    Sample::new(t, x0 + vx * (t - t0), y0 + vy * (t - t0))
                }).collect();
                Trajectory::new(format!("t{i}"), samples, None).unwrap()
            })
            .collect();
        let d = Dataset::new(model.grammar.vocabulary.clone(), scene, trajs, None).unwrap();
        let roles = (0..n).map(|_| rng.random_range(0..3)).collect();
        (d, model, roles)
    }

    #[test]
    fn cached_scores_match_reference() {
        for seed in 0..20 {
            let (d, model, roles) = random_setup(seed);
            let w = EffectiveWeights::new(&model);
            let members: Vec<usize> = (0..d.trajectories.len()).collect();
            let f = GroupFeatures::new(members.clone(), &d, &model, &w).unwrap();
            let trajs: Vec<&Trajectory> = members.iter().map(|&i| &d.trajectories[i]).collect();
            for k in 0..f.n_units() {
                let segs = unit_segments(&trajs, &roles, f.grid.unit_interval(k), model.config.tick);
                let refs: Vec<(&TrajectorySegment, usize)> = segs.iter().map(|(s, r)| (s, *r)).collect();
                for a in 0..model.grammar.templates.len() {
                    let fast = f.unit_score(&w, a, k, &roles);
                    let slow = if refs.is_empty() {
                        0.0
                    } else {
                        unit_log_likelihood(&refs, &model.grammar.templates[a], &d.scene, &model).unwrap()
                    };
                    assert!((fast - slow).abs() <= 1e-9 * (1.0 + slow.abs()), "seed {seed} unit {k}: {fast} vs {slow}");
                }
            }
        }
    }
}
