//! Domain types shared by every stage: label vocabularies, trajectories,
//! scenes, annotated datasets and inferred solutions.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::likelihood::EnergyBreakdown;

/// Tolerance used when comparing time stamps.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// The four label sets of the grammar. Human roles and portable objects share
/// one index space: roles first, then portables.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub events: Vec<String>,
    pub roles: Vec<String>,
    pub portables: Vec<String>,
    pub scene_classes: Vec<String>,
}

impl Vocabulary {
    pub fn new(
        events: Vec<String>,
        roles: Vec<String>,
        portables: Vec<String>,
        scene_classes: Vec<String>,
    ) -> Result<Self> {
        let v = Vocabulary { events, roles, portables, scene_classes };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, set) in [
            ("events", &self.events),
            ("roles", &self.roles),
            ("portables", &self.portables),
            ("sceneClasses", &self.scene_classes),
        ] {
            if set.is_empty() {
                return Err(Error::InvalidVocabulary(format!("{name} is empty")));
            }
            let mut seen = HashSet::new();
            for s in set {
                if !seen.insert(s) {
                    return Err(Error::InvalidVocabulary(format!("duplicate `{s}` in {name}")));
                }
            }
        }
        // roles and portables share one index space, so their names must not collide
        for p in &self.portables {
            if self.roles.contains(p) {
                return Err(Error::InvalidVocabulary(format!("`{p}` is both a role and a portable")));
            }
        }
        Ok(())
    }

    /// Size of the joint role/portable label space.
    pub fn n_labels(&self) -> usize {
        self.roles.len() + self.portables.len()
    }

    pub fn label_name(&self, label: usize) -> &str {
        if label < self.roles.len() {
            &self.roles[label]
        } else {
            &self.portables[label - self.roles.len()]
        }
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.roles
            .iter()
            .position(|r| r == name)
            .or_else(|| self.portables.iter().position(|p| p == name).map(|i| i + self.roles.len()))
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e == name)
    }

    pub fn scene_class_index(&self, name: &str) -> Option<usize> {
        self.scene_classes.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Sample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Sample { t, x, y }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A time-stamped planar track of one actor or portable object.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    samples: Vec<Sample>,
    /// Ground-truth role/portable label, present in training data.
    pub role: Option<usize>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, samples: Vec<Sample>, role: Option<usize>) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidTrajectory { id: id.clone(), reason };
        if samples.len() < 2 {
            return Err(invalid(format!("needs at least 2 samples, got {}", samples.len())));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.x.is_finite() && s.y.is_finite()) {
                return Err(invalid(format!("sample {i} is not finite")));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(invalid(format!("time stamps not strictly increasing at sample {i}")));
            }
        }
        Ok(Trajectory { id, samples, role })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    /// Linearly interpolated position, `None` outside the time span.
    pub fn position_at(&self, t: f64) -> Option<Point> {
        if t < self.start() - TIME_EPS || t > self.end() + TIME_EPS {
            return None;
        }
        let t = t.clamp(self.start(), self.end());
        let i = self.samples.partition_point(|s| s.t < t);
        if i == 0 {
            return Some(self.samples[0].point());
        }
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let w = (t - a.t) / (b.t - a.t);
        Some(Point::new(a.x + w * (b.x - a.x), a.y + w * (b.y - a.y)))
    }

    /// Resample on a uniform grid starting at the first sample. The final
    /// step is shortened so the last sample is preserved.
    pub fn resample(&self, tick: f64) -> Result<Trajectory> {
        if !(tick > 0.0) {
            return Err(Error::InvalidConfig(format!("tick must be positive, got {tick}")));
        }
        let times = grid_times(self.start(), self.start(), self.end(), tick);
        let samples = times
            .into_iter()
            .map(|t| {
                let p = self.position_at(t).expect("grid inside span");
                Sample::new(t, p.x, p.y)
            })
            .collect();
        Trajectory::new(self.id.clone(), samples, self.role)
    }

    /// Partition the time span into consecutive `unit`-long intervals. A final
    /// sliver shorter than half a unit is folded into the preceding interval.
    pub fn segment(&self, unit: f64, tick: f64) -> Result<Vec<TrajectorySegment>> {
        if !(unit > 0.0) || !(tick > 0.0) {
            return Err(Error::InvalidConfig(format!("unit and tick must be positive ({unit}, {tick})")));
        }
        let (start, end) = (self.start(), self.end());
        let mut bounds = vec![start];
        let mut i = 1;
        loop {
            let b = start + i as f64 * unit;
            if b >= end - TIME_EPS {
                break;
            }
            bounds.push(b);
            i += 1;
        }
        if bounds.len() > 1 && end - bounds[bounds.len() - 1] < unit / 2.0 - TIME_EPS {
            bounds.pop();
        }
        bounds.push(end);
        Ok(bounds
            .windows(2)
            .map(|w| self.window_from(w[0], w[1], start, tick).expect("non-empty interval"))
            .collect())
    }

    /// The part of this trajectory inside `[t0, t1]`, sampled on the grid
    /// `t0 + i * tick` plus the clipped endpoints. `None` when the overlap is
    /// empty.
    pub fn window(&self, t0: f64, t1: f64, tick: f64) -> Option<TrajectorySegment> {
        self.window_from(t0, t1, t0, tick)
    }

    fn window_from(&self, t0: f64, t1: f64, origin: f64, tick: f64) -> Option<TrajectorySegment> {
        let lo = t0.max(self.start());
        let hi = t1.min(self.end());
        if hi - lo <= TIME_EPS {
            return None;
        }
        let points = grid_times(origin, lo, hi, tick)
            .into_iter()
            .map(|t| {
                let p = self.position_at(t).expect("grid inside span");
                Sample::new(t, p.x, p.y)
            })
            .collect();
        Some(TrajectorySegment { trajectory_id: self.id.clone(), interval: (t0, t1), points })
    }
}

/// Times `origin + i * tick` inside `[lo, hi]`, with `lo` and `hi` always
/// included.
fn grid_times(origin: f64, lo: f64, hi: f64, tick: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let first = ((lo - origin) / tick).floor() as i64 + 1;
    let mut i = first;
    loop {
        let t = origin + i as f64 * tick;
        if t >= hi - TIME_EPS {
            break;
        }
        if t > lo + TIME_EPS {
            out.push(t);
        }
        i += 1;
    }
    out.push(hi);
    out
}

/// One trajectory restricted to a time interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySegment {
    pub trajectory_id: String,
    pub interval: (f64, f64),
    pub points: Vec<Sample>,
}

impl TrajectorySegment {
    pub fn displacement(&self) -> Point {
        let (a, b) = (self.points[0], self.points[self.points.len() - 1]);
        Point::new(b.x - a.x, b.y - a.y)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.points[0].t, self.points[self.points.len() - 1].t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point),
    Polygon(Vec<Point>),
}

impl Geometry {
    pub fn distance_to(&self, p: Point) -> f64 {
        match self {
            Geometry::Point(q) => q.dist(p),
            Geometry::Polygon(poly) => {
                if point_in_polygon(poly, p) {
                    return 0.0;
                }
                let n = poly.len();
                (0..n)
                    .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Geometry::Point(p) => vec![*p],
            Geometry::Polygon(v) => v.clone(),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Geometry {
        let mv = |p: &Point| Point::new(p.x + dx, p.y + dy);
        match self {
            Geometry::Point(p) => Geometry::Point(mv(p)),
            Geometry::Polygon(v) => Geometry::Polygon(v.iter().map(mv).collect()),
        }
    }
}

fn point_in_polygon(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let ap = p.sub(a);
    let w = ((ap.x * ab.x + ap.y * ab.y) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + w * ab.x, a.y + w * ab.y))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Checks that a polygon has at least three vertices and no two
/// non-adjacent edges touch.
pub fn is_simple_polygon(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 || poly.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub class: usize,
    pub geometry: Geometry,
}

/// Static large objects and surfaces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneModel {
    pub objects: Vec<SceneObject>,
}

impl SceneModel {
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        for (i, o) in self.objects.iter().enumerate() {
            if o.class >= vocab.scene_classes.len() {
                return Err(Error::InvalidScene(format!("object {i} has unknown class index {}", o.class)));
            }
            match &o.geometry {
                Geometry::Point(p) if !(p.x.is_finite() && p.y.is_finite()) => {
                    return Err(Error::InvalidScene(format!("object {i} has a non-finite point")));
                }
                Geometry::Polygon(v) if !is_simple_polygon(v) => {
                    return Err(Error::InvalidScene(format!("object {i} is not a simple polygon")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Minimum distance from `p` to any object of `class`; infinite if the
    /// class is absent from the scene.
    pub fn distance_to_class(&self, class: usize, p: Point) -> f64 {
        self.objects
            .iter()
            .filter(|o| o.class == class)
            .map(|o| o.geometry.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Scripted sub-event span; present only in synthetic ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpan {
    pub name: String,
    pub interval: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthGroup {
    pub members: Vec<String>,
    pub event: usize,
    pub interval: (f64, f64),
    pub phases: Vec<PhaseSpan>,
}

/// A scene with its foreground trajectories and optional annotations.
/// Every trajectory is treated as foreground.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub vocabulary: Vocabulary,
    pub scene: SceneModel,
    pub trajectories: Vec<Trajectory>,
    pub groups: Option<Vec<TruthGroup>>,
}

impl Dataset {
    pub fn new(
        vocabulary: Vocabulary,
        scene: SceneModel,
        trajectories: Vec<Trajectory>,
        groups: Option<Vec<TruthGroup>>,
    ) -> Result<Self> {
        let d = Dataset { vocabulary, scene, trajectories, groups };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.vocabulary.validate()?;
        self.scene.validate(&self.vocabulary)?;
        let mut ids = HashSet::new();
        for t in &self.trajectories {
            if !ids.insert(t.id.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate trajectory id `{}`", t.id)));
            }
            if let Some(r) = t.role {
                if r >= self.vocabulary.n_labels() {
                    return Err(Error::InvalidDataset(format!("trajectory `{}` has unknown role {r}", t.id)));
                }
            }
        }
        if let Some(groups) = &self.groups {
            let mut used = HashSet::new();
            for (gi, g) in groups.iter().enumerate() {
                if g.event >= self.vocabulary.events.len() {
                    return Err(Error::InvalidDataset(format!("group {gi} has unknown event {}", g.event)));
                }
                if g.members.is_empty() {
                    return Err(Error::InvalidDataset(format!("group {gi} has no members")));
                }
                for m in &g.members {
                    if !ids.contains(m.as_str()) {
                        return Err(Error::InvalidDataset(format!("group {gi} references unknown trajectory `{m}`")));
                    }
                    if !used.insert(m.as_str()) {
                        return Err(Error::InvalidDataset(format!("trajectory `{m}` belongs to more than one group")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn index_map(&self) -> HashMap<&str, usize> {
        self.trajectories.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect()
    }

    pub fn trajectory(&self, id: &str) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.id == id)
    }
}

/// One template occupying one interval of a parse.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLabel {
    pub template: usize,
    pub interval: (f64, f64),
}

/// Per-group explanation: event, extent, template tiling and role labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseGraph {
    pub event: usize,
    pub extent: (f64, f64),
    pub segmentation: Vec<SegmentLabel>,
    pub roles: BTreeMap<String, usize>,
}

impl ParseGraph {
    /// Checks that the segmentation tiles the extent exactly.
    pub fn check_tiling(&self) -> Result<()> {
        let seg = &self.segmentation;
        if seg.is_empty() {
            return Err(Error::Infeasible("empty segmentation".into()));
        }
        let mut cursor = self.extent.0;
        for s in seg {
            if (s.interval.0 - cursor).abs() > TIME_EPS || s.interval.1 <= s.interval.0 {
                return Err(Error::Infeasible(format!(
                    "segment [{}, {}] does not continue the tiling at {cursor}",
                    s.interval.0, s.interval.1
                )));
            }
            cursor = s.interval.1;
        }
        if (cursor - self.extent.1).abs() > TIME_EPS {
            return Err(Error::Infeasible(format!("tiling ends at {cursor}, extent ends at {}", self.extent.1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvedGroup {
    pub members: Vec<String>,
    pub parse: ParseGraph,
}

/// A full parse of a dataset: a partition of its trajectories with one parse
/// graph per group.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub groups: Vec<SolvedGroup>,
    pub energy: f64,
    pub breakdown: Option<EnergyBreakdown>,
    /// Best-so-far energy after initialization and after every outer iteration.
    pub trace: Vec<f64>,
    pub seed: Option<u64>,
}

impl Solution {
    /// Checks that groups partition exactly the dataset's trajectory ids and
    /// that every member carries a role.
    pub fn check_partition(&self, dataset: &Dataset) -> Result<()> {
        let ids: HashSet<&str> = dataset.trajectories.iter().map(|t| t.id.as_str()).collect();
        let mut seen = HashSet::new();
        for (gi, g) in self.groups.iter().enumerate() {
            if g.members.is_empty() {
                return Err(Error::Infeasible(format!("group {gi} is empty")));
            }
            for m in &g.members {
                if !ids.contains(m.as_str()) {
                    return Err(Error::Infeasible(format!("group {gi} references unknown trajectory `{m}`")));
                }
                if !seen.insert(m.as_str()) {
                    return Err(Error::Infeasible(format!("trajectory `{m}` appears in two groups")));
                }
                if !g.parse.roles.contains_key(m) {
                    return Err(Error::Infeasible(format!("trajectory `{m}` has no role")));
                }
            }
            if g.parse.roles.len() != g.members.len() {
                return Err(Error::Infeasible(format!("group {gi} assigns roles to non-members")));
            }
        }
        if seen.len() != ids.len() {
            return Err(Error::Infeasible(format!(
                "solution covers {} of {} trajectories",
                seen.len(),
                ids.len()
            )));
        }
        Ok(())
    }
}
