//! Grouping: the agglomerative initializer and the merge/split MH move.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use super::{mh_accept, Engine, GroupState, InferenceConfig};
use crate::error::Result;
use crate::features::FeatureConfig;
use crate::model::{Dataset, Point, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupingMove {
    Merge,
    Split,
    /// Neither move applies (a single one-member group).
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupingOutcome {
    pub kind: GroupingMove,
    /// Log acceptance ratio, including proposal probabilities.
    pub log_ratio: f64,
    pub accepted: bool,
}

/// Mean distance and displacement directions of two trajectories over their
/// common time span; `None` when they never coexist for a full tick.
fn overlap_stats(a: &Trajectory, b: &Trajectory, cfg: &FeatureConfig) -> Option<(f64, Option<f64>)> {
    let (lo, hi) = (a.start().max(b.start()), a.end().min(b.end()));
    if hi - lo < cfg.tick {
        return None;
    }
    let n = ((hi - lo) / cfg.tick).floor() as usize;
    let mut sum = 0.0;
    for i in 0..=n {
        let t = if i == n { hi } else { lo + i as f64 * cfg.tick };
        sum += a.position_at(t)?.dist(b.position_at(t)?);
    }
    let dist = sum / (n + 1) as f64;
    let disp = |t: &Trajectory| -> Option<Point> { Some(t.position_at(hi)?.sub(t.position_at(lo)?)) };
    let (da, db) = (disp(a)?, disp(b)?);
    let moving = |d: Point| d.norm() / (hi - lo) > cfg.speed_threshold;
    let angle = (moving(da) && moving(db))
        .then(|| ((da.x * db.x + da.y * db.y) / (da.norm() * db.norm())).clamp(-1.0, 1.0).acos());
    Some((dist, angle))
}

/// Average-linkage agglomerative clustering: the closest pair of clusters
/// merges while their mean time-overlapping distance is below the
/// closeness threshold and their mean direction difference (over pairs that
/// both move) is below a right angle.
pub fn initial_groups(dataset: &Dataset, cfg: &FeatureConfig) -> Vec<Vec<usize>> {
    let n = dataset.trajectories.len();
    let stats: Vec<Vec<Option<(f64, Option<f64>)>>> = (0..n)
        .map(|i| (0..n).map(|j| overlap_stats(&dataset.trajectories[i], &dataset.trajectories[j], cfg)).collect())
        .collect();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                let (mut dsum, mut dn, mut asum, mut an) = (0.0, 0usize, 0.0, 0usize);
                for &i in &clusters[x] {
                    for &j in &clusters[y] {
                        if let Some((d, a)) = stats[i][j] {
                            dsum += d;
                            dn += 1;
                            if let Some(a) = a {
                                asum += a;
                                an += 1;
                            }
                        }
                    }
                }
                if dn == 0 {
                    continue;
                }
                let d = dsum / dn as f64;
                let a = if an > 0 { asum / an as f64 } else { 0.0 };
                if d < cfg.closeness_threshold && a < FRAC_PI_2 && best.is_none_or(|b| d < b.0) {
                    best = Some((d, x, y));
                }
            }
        }
        let Some((_, x, y)) = best else { break };
        let moved = clusters.remove(y);
        clusters[x].extend(moved);
        clusters[x].sort_unstable();
    }
    clusters
}

fn n_choose_2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Canonical bipartition: both sides sorted, the side holding the smallest
/// index first.
fn canonical(mut a: Vec<usize>, mut b: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    a.sort_unstable();
    b.sort_unstable();
    if a[0] < b[0] { (a, b) } else { (b, a) }
}

impl Engine<'_> {
    /// Lloyd 2-means on member mean positions seeded at members `x` and `y`
    /// (local indices). Ties go to the first centre. `None` if a side ends
    /// empty.
    pub fn two_means(&self, members: &[usize], x: usize, y: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let pos: Vec<Point> = members.iter().map(|&i| self.mean_positions[i]).collect();
        let mut c = [pos[x], pos[y]];
        let mut assign: Vec<usize> = vec![usize::MAX; pos.len()];
        for _ in 0..100 {
            let next: Vec<usize> = pos.iter().map(|p| usize::from(p.dist(c[1]) < p.dist(c[0]))).collect();
            if next == assign {
                break;
            }
            assign = next;
            for (side, cen) in c.iter_mut().enumerate() {
                let pts: Vec<&Point> = pos.iter().zip(&assign).filter(|(_, &s)| s == side).map(|(p, _)| p).collect();
                if pts.is_empty() {
                    return None;
                }
                let n = pts.len() as f64;
                *cen = Point::new(pts.iter().map(|p| p.x).sum::<f64>() / n, pts.iter().map(|p| p.y).sum::<f64>() / n);
            }
        }
        let (a, b): (Vec<_>, Vec<_>) = members.iter().zip(&assign).partition(|(_, &s)| s == 0);
        if a.is_empty() || b.is_empty() {
            return None;
        }
        Some(canonical(a.into_iter().map(|(m, _)| *m).collect(), b.into_iter().map(|(m, _)| *m).collect()))
    }

    /// Probability that the split move, seeding 2-means at a uniformly drawn
    /// pair of members, yields exactly `target`.
    pub fn split_probability(&self, members: &[usize], target: &(Vec<usize>, Vec<usize>)) -> f64 {
        let m = members.len();
        if m < 2 {
            return 0.0;
        }
        let mut hits = 0usize;
        for x in 0..m {
            for y in x + 1..m {
                if self.two_means(members, x, y).as_ref() == Some(target) {
                    hits += 1;
                }
            }
        }
        hits as f64 / n_choose_2(m)
    }

    fn move_probs(cfg: &InferenceConfig, n_groups: usize, n_splittable: usize) -> (f64, f64) {
        match (n_groups >= 2, n_splittable > 0) {
            (true, true) => (cfg.merge_prob, cfg.split_prob),
            (true, false) => (1.0, 0.0),
            (false, true) => (0.0, 1.0),
            (false, false) => (0.0, 0.0),
        }
    }

    /// One merge-or-split proposal with the MH test; new groups are labelled
    /// by enumerating events with greedy roles.
    pub fn grouping_step<R: Rng>(
        &mut self,
        groups: &mut Vec<GroupState>,
        cfg: &InferenceConfig,
        rng: &mut R,
    ) -> Result<GroupingOutcome> {
        let n = groups.len();
        let splittable: Vec<usize> = (0..n).filter(|&i| groups[i].members.len() >= 2).collect();
        let (pm, ps) = Self::move_probs(cfg, n, splittable.len());
        if pm == 0.0 && ps == 0.0 {
            return Ok(GroupingOutcome { kind: GroupingMove::None, log_ratio: 0.0, accepted: false });
        }
        if rng.random::<f64>() < pm {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (i, j) = (i.min(j), i.max(j));
            let mut merged: Vec<usize> = groups[i].members.iter().chain(&groups[j].members).copied().collect();
            merged.sort_unstable();
            let new = self.label(&merged)?;
            let target = canonical(groups[i].members.clone(), groups[j].members.clone());
            let s_after = splittable.len() + 1
                - usize::from(groups[i].members.len() >= 2)
                - usize::from(groups[j].members.len() >= 2);
            let (_, ps_after) = Self::move_probs(cfg, n - 1, s_after);
            let q_fwd = pm / n_choose_2(n);
            let q_rev = ps_after / s_after as f64 * self.split_probability(&merged, &target);
            let log_ratio = q_rev.ln() - q_fwd.ln() - (new.energy - groups[i].energy - groups[j].energy);
            let accepted = q_rev > 0.0 && mh_accept(log_ratio, rng);
            if accepted {
                groups.remove(j);
                groups[i] = new;
            }
            Ok(GroupingOutcome { kind: GroupingMove::Merge, log_ratio, accepted })
        } else {
            let g = splittable[rng.random_range(0..splittable.len())];
            let m = groups[g].members.len();
            let x = rng.random_range(0..m);
            let mut y = rng.random_range(0..m - 1);
            if y >= x {
                y += 1;
            }
            let members = groups[g].members.clone();
            let Some(parts) = self.two_means(&members, x.min(y), x.max(y)) else {
                return Ok(GroupingOutcome { kind: GroupingMove::Split, log_ratio: f64::NEG_INFINITY, accepted: false });
            };
            let (a, b) = (self.label(&parts.0)?, self.label(&parts.1)?);
            let s_after = splittable.len() - 1 + usize::from(a.members.len() >= 2) + usize::from(b.members.len() >= 2);
            let (pm_after, _) = Self::move_probs(cfg, n + 1, s_after);
            let q_fwd = ps / splittable.len() as f64 * self.split_probability(&members, &parts);
            let q_rev = pm_after / n_choose_2(n + 1);
            let log_ratio = q_rev.ln() - q_fwd.ln() - (a.energy + b.energy - groups[g].energy);
            let accepted = mh_accept(log_ratio, rng);
            if accepted {
                groups[g] = a;
                groups.push(b);
            }
            Ok(GroupingOutcome { kind: GroupingMove::Split, log_ratio, accepted })
        }
    }
}
