//! Unary attributes, pairwise relations and the group velocity histogram
//! that together form the relation vector scored by a template.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{Point, SceneModel, TrajectorySegment, Vocabulary, TIME_EPS};

pub const ORIENTATION_BINS: usize = 6;
pub const RADIAL_BINS: usize = 3;
pub const HISTOGRAM_BINS: usize = ORIENTATION_BINS * RADIAL_BINS;

/// Thresholds and time base used for feature extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    /// Unit interval length in seconds.
    pub unit: f64,
    /// Resampling tick in seconds.
    pub tick: f64,
    /// Mean speed above which a segment counts as moving (scene units / s).
    pub speed_threshold: f64,
    /// Distance below which a segment is close to a scene object (scene units).
    pub closeness_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { unit: 2.0, tick: 0.5, speed_threshold: 2.0, closeness_threshold: 70.0 }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.unit) && ok(self.tick) && ok(self.speed_threshold) && ok(self.closeness_threshold)) {
            return Err(Error::InvalidConfig(format!("feature thresholds must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Dimensions of the relation vector, fixed by the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationLayout {
    pub n_labels: usize,
    pub n_scene: usize,
}

impl RelationLayout {
    pub fn new(vocab: &Vocabulary) -> Self {
        RelationLayout { n_labels: vocab.n_labels(), n_scene: vocab.scene_classes.len() }
    }

    pub fn unary_dim(&self) -> usize {
        self.n_labels + 1 + self.n_scene
    }

    pub fn pairwise_dim(&self) -> usize {
        2 + self.n_labels * self.n_labels + 4 + self.n_scene * self.n_scene
    }

    pub fn dim(&self) -> usize {
        self.unary_dim() + self.pairwise_dim() + HISTOGRAM_BINS
    }

    // offsets into the flat vector
    pub(crate) fn off_moving(&self) -> usize {
        self.n_labels
    }
    pub(crate) fn off_close(&self) -> usize {
        self.n_labels + 1
    }
    pub(crate) fn off_pair(&self) -> usize {
        self.unary_dim()
    }
    pub(crate) fn off_role_compat(&self) -> usize {
        self.off_pair() + 2
    }
    pub(crate) fn off_speed_compat(&self) -> usize {
        self.off_role_compat() + self.n_labels * self.n_labels
    }
    pub(crate) fn off_close_compat(&self) -> usize {
        self.off_speed_compat() + 4
    }
    pub(crate) fn off_hist(&self) -> usize {
        self.unary_dim() + self.pairwise_dim()
    }
}

/// Role-independent part of a segment's unary attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionAttributes {
    pub moving: bool,
    pub closeness: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnaryAttributes {
    /// Index into the joint role/portable label space.
    pub role: usize,
    pub n_labels: usize,
    pub moving: bool,
    pub closeness: Vec<bool>,
}

impl UnaryAttributes {
    pub fn role_one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_labels];
        v[self.role] = 1.0;
        v
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.role_one_hot();
        v.push(self.moving as u8 as f64);
        v.extend(self.closeness.iter().map(|&c| c as u8 as f64));
        v
    }
}

/// Orders a pair so that summed pairwise vectors do not depend on member
/// order: the attribute key (role, moving, closeness) decides which segment
/// comes first. Segments with equal keys produce identical pair vectors in
/// either order.
pub fn pair_key_cmp(a_role: usize, a: &MotionAttributes, b_role: usize, b: &MotionAttributes) -> Ordering {
    a_role
        .cmp(&b_role)
        .then(a.moving.cmp(&b.moving))
        .then_with(|| a.closeness.cmp(&b.closeness))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseRelations {
    pub mean_distance: f64,
    /// Angle between net displacements, in `[0, pi]`.
    pub angle: f64,
    pub role_compat: Vec<f64>,
    pub speed_compat: [f64; 4],
    pub closeness_compat: Vec<f64>,
}

impl PairwiseRelations {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.mean_distance, self.angle];
        v.extend_from_slice(&self.role_compat);
        v.extend_from_slice(&self.speed_compat);
        v.extend_from_slice(&self.closeness_compat);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityHistogram {
    pub bins: [f64; HISTOGRAM_BINS],
}

impl VelocityHistogram {
    pub fn bin_index(radial: usize, orientation: usize) -> usize {
        radial * ORIENTATION_BINS + orientation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationVector {
    pub summed_unary: Vec<f64>,
    pub summed_pairwise: Vec<f64>,
    pub histogram: VelocityHistogram,
}

impl RelationVector {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.summed_unary.clone();
        v.extend_from_slice(&self.summed_pairwise);
        v.extend_from_slice(&self.histogram.bins);
        v
    }
}

fn mean_speed(seg: &TrajectorySegment) -> f64 {
    let (t0, t1) = seg.span();
    let len: f64 = seg.points.windows(2).map(|w| w[0].point().dist(w[1].point())).sum();
    len / (t1 - t0)
}

/// Moving flag and per-class closeness of one segment.
pub fn motion_attributes(seg: &TrajectorySegment, scene: &SceneModel, n_scene: usize, cfg: &FeatureConfig) -> Result<MotionAttributes> {
    if seg.points.len() < 2 {
        return Err(Error::InvalidTrajectory {
            id: seg.trajectory_id.clone(),
            reason: "segment needs at least 2 points".into(),
        });
    }
    let moving = mean_speed(seg) > cfg.speed_threshold;
    let closeness = (0..n_scene)
        .map(|class| {
            seg.points
                .iter()
                .map(|p| scene.distance_to_class(class, p.point()))
                .fold(f64::INFINITY, f64::min)
                < cfg.closeness_threshold
        })
        .collect();
    Ok(MotionAttributes { moving, closeness })
}

pub fn unary(
    seg: &TrajectorySegment,
    role: usize,
    layout: &RelationLayout,
    scene: &SceneModel,
    cfg: &FeatureConfig,
) -> Result<UnaryAttributes> {
    if role >= layout.n_labels {
        return Err(Error::UnknownSymbol(format!("role index {role}")));
    }
    let m = motion_attributes(seg, scene, layout.n_scene, cfg)?;
    Ok(UnaryAttributes { role, n_labels: layout.n_labels, moving: m.moving, closeness: m.closeness })
}

/// Mean point-to-point distance over the time stamps both segments share;
/// falls back to the distance between centroids when they share none.
pub fn mean_distance(a: &TrajectorySegment, b: &TrajectorySegment) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut sum, mut n) = (0.0, 0usize);
    while i < a.points.len() && j < b.points.len() {
        let (pa, pb) = (a.points[i], b.points[j]);
        if (pa.t - pb.t).abs() <= TIME_EPS {
            sum += pa.point().dist(pb.point());
            n += 1;
            i += 1;
            j += 1;
        } else if pa.t < pb.t {
            i += 1;
        } else {
            j += 1;
        }
    }
    if n > 0 {
        return sum / n as f64;
    }
    centroid(&[a]).dist(centroid(&[b]))
}

/// Angle in `[0, pi]` between the net displacements; 0 if either is zero.
pub fn displacement_angle(a: &TrajectorySegment, b: &TrajectorySegment) -> f64 {
    let (da, db) = (a.displacement(), b.displacement());
    let (na, nb) = (da.norm(), db.norm());
    if na <= 1e-12 || nb <= 1e-12 {
        return 0.0;
    }
    ((da.x * db.x + da.y * db.y) / (na * nb)).clamp(-1.0, 1.0).acos()
}

fn same_interval(a: &TrajectorySegment, b: &TrajectorySegment) -> Result<()> {
    if (a.interval.0 - b.interval.0).abs() > TIME_EPS || (a.interval.1 - b.interval.1).abs() > TIME_EPS {
        return Err(Error::IntervalMismatch { a0: a.interval.0, a1: a.interval.1, b0: b.interval.0, b1: b.interval.1 });
    }
    Ok(())
}

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

pub fn pairwise(
    a: (&TrajectorySegment, &UnaryAttributes),
    b: (&TrajectorySegment, &UnaryAttributes),
) -> Result<PairwiseRelations> {
    same_interval(a.0, b.0)?;
    let speed = |u: &UnaryAttributes| if u.moving { [0.0, 1.0] } else { [1.0, 0.0] };
    let flags = |u: &UnaryAttributes| u.closeness.iter().map(|&c| c as u8 as f64).collect::<Vec<_>>();
    let sc = kron(&speed(a.1), &speed(b.1));
    Ok(PairwiseRelations {
        mean_distance: mean_distance(a.0, b.0),
        angle: displacement_angle(a.0, b.0),
        role_compat: kron(&a.1.role_one_hot(), &b.1.role_one_hot()),
        speed_compat: [sc[0], sc[1], sc[2], sc[3]],
        closeness_compat: kron(&flags(a.1), &flags(b.1)),
    })
}

pub fn centroid(segments: &[&TrajectorySegment]) -> Point {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for s in segments {
        for p in &s.points {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
    }
    Point::new(sx / n as f64, sy / n as f64)
}

pub fn orientation_bin(vx: f64, vy: f64) -> usize {
    let a = vy.atan2(vx).rem_euclid(2.0 * PI);
    ((a / (2.0 * PI / ORIENTATION_BINS as f64)) as usize).min(ORIENTATION_BINS - 1)
}

/// Radial band with breakpoints at 1/3 and 2/3 of `r_max`.
pub fn radial_bin(r: f64, r_max: f64) -> usize {
    if r_max <= 1e-12 {
        return 0;
    }
    let f = r / r_max;
    if f < 1.0 / 3.0 {
        0
    } else if f < 2.0 / 3.0 {
        1
    } else {
        2
    }
}

/// 18-bin histogram of velocity orientation by radial location relative to
/// `center` (the centroid of all points when `None`). Zero velocities are
/// skipped.
pub fn velocity_histogram(segments: &[&TrajectorySegment], center: Option<Point>) -> Result<VelocityHistogram> {
    if segments.is_empty() || segments.iter().all(|s| s.points.is_empty()) {
        return Err(Error::EmptyGroup);
    }
    let c = center.unwrap_or_else(|| centroid(segments));
    let r_max = segments
        .iter()
        .flat_map(|s| s.points.iter())
        .map(|p| p.point().dist(c))
        .fold(0.0, f64::max);
    let mut bins = [0.0; HISTOGRAM_BINS];
    let mut total = 0.0;
    for s in segments {
        for w in s.points.windows(2) {
            let dt = w[1].t - w[0].t;
            if dt <= 0.0 {
                continue;
            }
            let (vx, vy) = ((w[1].x - w[0].x) / dt, (w[1].y - w[0].y) / dt);
            if vx.hypot(vy) <= 1e-9 {
                continue;
            }
            let r = radial_bin(w[0].point().dist(c), r_max);
            bins[VelocityHistogram::bin_index(r, orientation_bin(vx, vy))] += 1.0;
            total += 1.0;
        }
    }
    if total > 0.0 {
        bins.iter_mut().for_each(|b| *b /= total);
    }
    Ok(VelocityHistogram { bins })
}

/// Relation vector of a group over one interval: summed unary attributes,
/// pairwise relations summed over unordered pairs, and the velocity
/// histogram.
pub fn relation_vector(
    group: &[(&TrajectorySegment, usize)],
    layout: &RelationLayout,
    scene: &SceneModel,
    cfg: &FeatureConfig,
) -> Result<RelationVector> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let first = group[0].0;
    for (s, _) in group {
        same_interval(first, s)?;
    }
    let attrs = group
        .iter()
        .map(|(s, r)| unary(s, *r, layout, scene, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut summed_unary = vec![0.0; layout.unary_dim()];
    for a in &attrs {
        for (acc, v) in summed_unary.iter_mut().zip(a.to_vec()) {
            *acc += v;
        }
    }
    let mut summed_pairwise = vec![0.0; layout.pairwise_dim()];
    for i in 0..group.len() {
        for j in i + 1..group.len() {
            let (ai, aj) = (&attrs[i], &attrs[j]);
            let mi = MotionAttributes { moving: ai.moving, closeness: ai.closeness.clone() };
            let mj = MotionAttributes { moving: aj.moving, closeness: aj.closeness.clone() };
            let (x, y) = if pair_key_cmp(ai.role, &mi, aj.role, &mj) == Ordering::Greater { (j, i) } else { (i, j) };
            let p = pairwise((group[x].0, &attrs[x]), (group[y].0, &attrs[y]))?;
            for (acc, v) in summed_pairwise.iter_mut().zip(p.to_vec()) {
                *acc += v;
            }
        }
    }
    let segs: Vec<&TrajectorySegment> = group.iter().map(|(s, _)| *s).collect();
    let histogram = velocity_histogram(&segs, None)?;
    Ok(RelationVector { summed_unary, summed_pairwise, histogram })
}

/// Per-dimension affine standardization of relation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStandardizer {
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

impl FeatureStandardizer {
    pub fn identity(dim: usize) -> Self {
        FeatureStandardizer { mean: vec![0.0; dim], stdev: vec![1.0; dim] }
    }

    /// Population mean and standard deviation; zero-variance dimensions get
    /// unit stdev.
    pub fn fit(data: &[Vec<f64>]) -> Result<Self> {
        let n = data.len();
        if n == 0 {
            return Err(Error::NotEnoughData("no samples to standardize".into()));
        }
        let dim = data[0].len();
        let mut mean = vec![0.0; dim];
        for row in data {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; dim];
        for row in data {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let stdev = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 { sd } else { 1.0 }
            })
            .collect();
        Ok(FeatureStandardizer { mean, stdev })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.mean).zip(&self.stdev).map(|((x, m), s)| (x - m) / s).collect()
    }
}
