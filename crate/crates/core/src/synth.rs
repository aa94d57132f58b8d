//! Scripted multi-agent scenarios with full ground truth: groups, events,
//! roles and phase boundaries.
//!
//! A script places each event at an anchor and moves its cast through
//! ordered phases with piecewise constant-velocity kinematics. All script
//! coordinates except the global scene are offsets from the event anchor.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{GeometryDto, SceneObjectDto, VocabularyDto};
use crate::model::{Dataset, Geometry, PhaseSpan, Point, Sample, SceneModel, Trajectory, TruthGroup, Vocabulary};

const EPS: f64 = 1e-9;

/// Slots for the `n` actors of one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum Formation {
    /// Everyone at the same spot.
    Point { at: [f64; 2] },
    /// Evenly spaced on a circle, the first slot at angle `phase`.
    Ring {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `from`, `from + step`, `from + 2 step`, ...
    Line { from: [f64; 2], step: [f64; 2] },
}

impl Formation {
    pub fn slot(&self, i: usize, n: usize) -> [f64; 2] {
        match self {
            Formation::Point { at } => *at,
            Formation::Ring { center, radius, phase } => {
                let a = phase + TAU * i as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
            Formation::Line { from, step } => [from[0] + i as f64 * step[0], from[1] + i as f64 * step[1]],
        }
    }

    fn is_finite(&self) -> bool {
        let f = |v: &[f64; 2]| v[0].is_finite() && v[1].is_finite();
        match self {
            Formation::Point { at } => f(at),
            Formation::Ring { center, radius, phase } => f(center) && radius.is_finite() && phase.is_finite(),
            Formation::Line { from, step } => f(from) && f(step),
        }
    }
}

/// What a role does during one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum Motion {
    Hold,
    /// Straight line at constant speed, arriving at the role's slot of `to`
    /// exactly when the phase ends.
    Goto { to: Formation },
    /// Constant angular speed about `center`, sweeping `angle` radians.
    Arc { center: [f64; 2], angle: f64 },
    /// Rigidly follows actor `index` of `role` at `offset`.
    Track { role: String, index: usize, offset: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Directive {
    pub role: String,
    pub motion: Motion,
}

/// Roles without a directive hold still.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseScript {
    pub name: String,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub directives: Vec<Directive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CastEntry {
    pub role: String,
    pub count: usize,
    pub start: Formation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventScript {
    pub event: String,
    pub anchor: [f64; 2],
    /// Start time in seconds.
    #[serde(default)]
    pub start: f64,
    pub cast: Vec<CastEntry>,
    pub phases: Vec<PhaseScript>,
    /// Scene objects that belong to the event, relative to the anchor.
    #[serde(default)]
    pub props: Vec<SceneObjectDto>,
}

impl EventScript {
    pub fn duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Standard deviation of Gaussian position noise, scene units.
    pub position_jitter: f64,
    /// Probability of a tracklet break at each unit boundary.
    pub break_prob: f64,
    /// Per-trajectory probability of swapping tails with another one.
    pub id_switch_prob: f64,
}

/// Random per-instance variation, all off by default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct VariationSpec {
    /// Rotate each event about its anchor by a uniform angle.
    pub rotate: bool,
    /// Shift each anchor uniformly within this many units per axis.
    pub anchor_jitter: f64,
    /// Delay each event start by 0..=n whole time units.
    pub start_jitter_units: u32,
    /// Lengthen or shorten each phase by up to n whole time units (never
    /// below one unit).
    pub phase_jitter_units: u32,
}

fn default_sample_interval() -> f64 {
    0.5
}

fn default_unit() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    pub vocabulary: VocabularyDto,
    /// Global scene objects, absolute coordinates.
    #[serde(default)]
    pub scene: Vec<SceneObjectDto>,
    pub events: Vec<EventScript>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub variation: VariationSpec,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    /// Time unit of the break grid and of the jitter steps, seconds.
    #[serde(default = "default_unit")]
    pub unit: f64,
}

fn multiple_of(x: f64, step: f64) -> bool {
    let q = x / step;
    (q - q.round()).abs() < 1e-9
}

impl ScenarioScript {
    /// Checks the script and resolves its vocabulary.
    pub fn validate(&self) -> Result<Vocabulary> {
        let bad = |path: String, msg: &str| Err(Error::InvalidConfig(format!("{path}: {msg}")));
        let vocab = self.vocabulary.to_vocabulary()?;
        let dt = self.sample_interval;
        if !(dt.is_finite() && dt > 0.0) {
            return bad("sampleInterval".into(), "must be positive");
        }
        if !(self.unit.is_finite() && self.unit >= 2.0 * dt && multiple_of(self.unit, dt)) {
            return bad("unit".into(), "must be a multiple of the sample interval, at least two samples long");
        }
        let n = &self.noise;
        if !(n.position_jitter.is_finite() && n.position_jitter >= 0.0) {
            return bad("noise.positionJitter".into(), "must be non-negative");
        }
        for (name, p) in [("breakProb", n.break_prob), ("idSwitchProb", n.id_switch_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("noise.{name}"), "must be a probability");
            }
        }
        if !(self.variation.anchor_jitter.is_finite() && self.variation.anchor_jitter >= 0.0) {
            return bad("variation.anchorJitter".into(), "must be non-negative");
        }
        if self.events.is_empty() {
            return bad("events".into(), "no events");
        }
        crate::io::scene_from_dtos(&self.scene, &vocab, "scene")?;
        for (k, e) in self.events.iter().enumerate() {
            let at = |s: &str| format!("events[{k}].{s}");
            if vocab.event_index(&e.event).is_none() {
                return bad(at("event"), &format!("unknown event `{}`", e.event));
            }
            if !(e.anchor[0].is_finite() && e.anchor[1].is_finite()) {
                return bad(at("anchor"), "not finite");
            }
            if !(e.start.is_finite() && multiple_of(e.start, dt)) {
                return bad(at("start"), "must be a multiple of the sample interval");
            }
            crate::io::scene_from_dtos(&e.props, &vocab, &at("props"))?;
            if e.cast.is_empty() {
                return bad(at("cast"), "empty cast");
            }
            let mut counts = HashMap::new();
            for (i, c) in e.cast.iter().enumerate() {
                if vocab.label_index(&c.role).is_none() {
                    return bad(at(&format!("cast[{i}].role")), &format!("unknown role `{}`", c.role));
                }
                if c.count == 0 {
                    return bad(at(&format!("cast[{i}].count")), "must be at least 1");
                }
                if !c.start.is_finite() {
                    return bad(at(&format!("cast[{i}].start")), "not finite");
                }
                if counts.insert(c.role.as_str(), c.count).is_some() {
                    return bad(at(&format!("cast[{i}].role")), "role cast twice");
                }
            }
            if e.phases.is_empty() {
                return bad(at("phases"), "no phases");
            }
            for (p, ph) in e.phases.iter().enumerate() {
                let pat = |s: &str| at(&format!("phases[{p}].{s}"));
                if !(ph.duration.is_finite() && ph.duration > 0.0 && multiple_of(ph.duration, dt)) {
                    return bad(pat("duration"), "must be a positive multiple of the sample interval");
                }
                let mut seen = HashMap::new();
                for (j, d) in ph.directives.iter().enumerate() {
                    let dat = pat(&format!("directives[{j}]"));
                    if !counts.contains_key(d.role.as_str()) {
                        return bad(dat, &format!("role `{}` is not in the cast", d.role));
                    }
                    if seen.insert(d.role.as_str(), &d.motion).is_some() {
                        return bad(dat, "role directed twice in one phase");
                    }
                }
                for (j, d) in ph.directives.iter().enumerate() {
                    let dat = pat(&format!("directives[{j}]"));
                    match &d.motion {
                        Motion::Track { role, index, offset } => {
                            match counts.get(role.as_str()) {
                                Some(&c) if *index < c => {}
                                _ => return bad(dat, &format!("tracks missing actor {index} of `{role}`")),
                            }
                            if matches!(seen.get(role.as_str()), Some(Motion::Track { .. })) {
                                return bad(dat, "tracks an actor that is itself tracking");
                            }
                            if !(offset[0].is_finite() && offset[1].is_finite()) {
                                return bad(dat, "offset not finite");
                            }
                        }
                        Motion::Goto { to } if !to.is_finite() => return bad(dat, "target not finite"),
                        Motion::Arc { center, angle } if !(center[0].is_finite() && center[1].is_finite() && angle.is_finite()) => {
                            return bad(dat, "arc not finite");
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(vocab)
    }
}

fn rotate(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// One event instance after the random variation is drawn.
struct Instance {
    anchor: [f64; 2],
    theta: f64,
    start: f64,
    /// Phase lengths in samples.
    phase_samples: Vec<usize>,
}

impl Instance {
    fn world(&self, offset: [f64; 2]) -> Point {
        let r = rotate(offset, self.theta);
        Point::new(self.anchor[0] + r[0], self.anchor[1] + r[1])
    }
}

struct Actor {
    event: usize,
    cast: usize,
    slot: usize,
    label: usize,
    id: String,
}

fn slug(s: &str) -> String {
    s.to_lowercase().replace(' ', "_")
}

/// Clean positions of the actors of one event at every sample.
fn simulate(e: &EventScript, inst: &Instance, actors: &[usize], all: &[Actor]) -> Vec<Vec<Point>> {
    let n_samples: usize = inst.phase_samples.iter().sum::<usize>() + 1;
    let local: HashMap<(&str, usize), usize> =
        actors.iter().enumerate().map(|(j, &a)| ((e.cast[all[a].cast].role.as_str(), all[a].slot), j)).collect();
    let mut pos = vec![vec![Point::default(); n_samples]; actors.len()];
    let mut start: Vec<Point> = actors
        .iter()
        .map(|&a| {
            let c = &e.cast[all[a].cast];
            inst.world(c.start.slot(all[a].slot, c.count))
        })
        .collect();
    let mut s0 = 0;
    for (p, ph) in e.phases.iter().enumerate() {
        let len = inst.phase_samples[p];
        let motion_of = |j: usize| {
            let role = e.cast[all[actors[j]].cast].role.as_str();
            ph.directives.iter().find(|d| d.role == role).map(|d| &d.motion).unwrap_or(&Motion::Hold)
        };
        let tracking = |j: usize| matches!(motion_of(j), Motion::Track { .. });
        // untracked actors first: trackers read their targets' positions
        for pass in [false, true] {
            for j in (0..actors.len()).filter(|&j| tracking(j) == pass) {
                let a = &all[actors[j]];
                let count = e.cast[a.cast].count;
                let p0 = start[j];
                for i in 0..=len {
                    let frac = i as f64 / len as f64;
                    pos[j][s0 + i] = match motion_of(j) {
                        Motion::Hold => p0,
                        Motion::Goto { to } => {
                            let q = inst.world(to.slot(a.slot, count));
                            Point::new(p0.x + (q.x - p0.x) * frac, p0.y + (q.y - p0.y) * frac)
                        }
                        Motion::Arc { center, angle } => {
                            let c = inst.world(*center);
                            let r = rotate([p0.x - c.x, p0.y - c.y], angle * frac);
                            Point::new(c.x + r[0], c.y + r[1])
                        }
                        Motion::Track { role, index, offset } => {
                            let q = pos[local[&(role.as_str(), *index)]][s0 + i];
                            let o = rotate(*offset, inst.theta);
                            Point::new(q.x + o[0], q.y + o[1])
                        }
                    };
                }
            }
        }
        for (j, s) in start.iter_mut().enumerate() {
            *s = pos[j][s0 + len];
        }
        s0 += len;
    }
    pos
}

/// A trajectory under construction: samples tagged with the actor that
/// produced them.
type Track = Vec<(Sample, usize)>;

fn overlap(a: &Track, b: &Track) -> (f64, f64) {
    (a[0].0.t.max(b[0].0.t), a[a.len() - 1].0.t.min(b[b.len() - 1].0.t))
}

fn swap_tails(tracks: &mut [(String, Track)], a: usize, b: usize, tau: f64) {
    let split = |t: &Track| t.iter().position(|(s, _)| s.t >= tau - EPS).expect("tau inside the track");
    let (ia, ib) = (split(&tracks[a].1), split(&tracks[b].1));
    let tail_a = tracks[a].1.split_off(ia);
    let tail_b = tracks[b].1.split_off(ib);
    tracks[a].1.extend(tail_b);
    tracks[b].1.extend(tail_a);
}

/// Actor that produced most of the track's duration; ties go to the lower
/// actor index.
fn majority(track: &Track, n_actors: usize) -> usize {
    let mut mass = vec![0.0; n_actors];
    for w in track.windows(2) {
        mass[w[0].1] += w[1].0.t - w[0].0.t;
    }
    let mut best = track[0].1;
    for (a, &m) in mass.iter().enumerate() {
        if m > mass[best] || (m == mass[best] && a < best) {
            best = a;
        }
    }
    best
}

/// Simulates the script. Randomness (variation, then noise) comes from one
/// ChaCha8 stream seeded with `seed`.
pub fn generate(script: &ScenarioScript, seed: u64) -> Result<Dataset> {
    let vocab = script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = script.sample_interval;
    let unit = script.unit;
    let unit_samples = (unit / dt).round() as usize;
    let var = &script.variation;

    let instances: Vec<Instance> = script
        .events
        .iter()
        .map(|e| {
            let theta = if var.rotate { rng.random_range(0.0..TAU) } else { 0.0 };
            let mut anchor = e.anchor;
            if var.anchor_jitter > 0.0 {
                for v in anchor.iter_mut() {
                    *v += rng.random_range(-var.anchor_jitter..=var.anchor_jitter);
                }
            }
            let mut start = e.start;
            if var.start_jitter_units > 0 {
                start += rng.random_range(0..=var.start_jitter_units) as f64 * unit;
            }
            let phase_samples = e
                .phases
                .iter()
                .map(|p| {
                    let base = (p.duration / dt).round() as i64;
                    if var.phase_jitter_units == 0 {
                        return base as usize;
                    }
                    let j = var.phase_jitter_units as i64;
                    let delta = rng.random_range(-j..=j) * unit_samples as i64;
                    (base + delta).max(unit_samples as i64) as usize
                })
                .collect();
            Instance { anchor, theta, start, phase_samples }
        })
        .collect();

    let mut actors = Vec::new();
    for (k, e) in script.events.iter().enumerate() {
        for (c, cast) in e.cast.iter().enumerate() {
            for slot in 0..cast.count {
                actors.push(Actor {
                    event: k,
                    cast: c,
                    slot,
                    label: vocab.label_index(&cast.role).expect("validated"),
                    id: format!("e{k}-{}-{slot}", slug(&cast.role)),
                });
            }
        }
    }

    let mut tracks: Vec<(String, Track)> = actors.iter().map(|a| (a.id.clone(), Vec::new())).collect();
    for (k, e) in script.events.iter().enumerate() {
        let inst = &instances[k];
        let members: Vec<usize> = (0..actors.len()).filter(|&a| actors[a].event == k).collect();
        let pos = simulate(e, inst, &members, &actors);
        for (j, &a) in members.iter().enumerate() {
            tracks[a].1 = pos[j]
                .iter()
                .enumerate()
                .map(|(i, p)| (Sample::new(inst.start + i as f64 * dt, p.x, p.y), a))
                .collect();
        }
    }

    let noise = &script.noise;
    if noise.id_switch_prob > 0.0 {
        for a in 0..tracks.len() {
            if rng.random::<f64>() >= noise.id_switch_prob {
                continue;
            }
            let partners: Vec<usize> = (0..tracks.len())
                .filter(|&b| b != a)
                .filter(|&b| {
                    let (lo, hi) = overlap(&tracks[a].1, &tracks[b].1);
                    hi - lo >= 2.0 * unit + dt - EPS
                })
                .collect();
            if partners.is_empty() {
                continue;
            }
            let b = partners[rng.random_range(0..partners.len())];
            let (lo, hi) = overlap(&tracks[a].1, &tracks[b].1);
            let choices = ((hi - lo - 2.0 * unit) / dt).round() as usize;
            let tau = lo + unit + rng.random_range(0..=choices) as f64 * dt;
            swap_tails(&mut tracks, a, b, tau);
        }
    }

    let mut pieces: Vec<(String, Track)> = Vec::new();
    for (id, track) in tracks {
        let (t0, t1) = (track[0].0.t, track[track.len() - 1].0.t);
        let mut cuts = Vec::new();
        if noise.break_prob > 0.0 {
            let mut b = ((t0 / unit).floor() + 1.0) * unit;
            while b < t1 - EPS {
                if b > t0 + EPS && rng.random::<f64>() < noise.break_prob {
                    if let Some(i) = track.iter().position(|(s, _)| (s.t - b).abs() < EPS) {
                        cuts.push(i);
                    }
                }
                b += unit;
            }
        }
        if cuts.is_empty() {
            pieces.push((id, track));
            continue;
        }
        let mut from = 0;
        for (n, &c) in cuts.iter().chain(std::iter::once(&(track.len() - 1))).enumerate() {
            pieces.push((format!("{id}/{n}"), track[from..=c].to_vec()));
            from = c;
        }
    }

    if noise.position_jitter > 0.0 {
        let normal = Normal::new(0.0, noise.position_jitter).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for (_, track) in pieces.iter_mut() {
            for (s, _) in track.iter_mut() {
                s.x += normal.sample(&mut rng);
                s.y += normal.sample(&mut rng);
            }
        }
    }

    let mut trajectories = Vec::with_capacity(pieces.len());
    let mut owner = Vec::with_capacity(pieces.len());
    for (id, track) in pieces {
        let a = majority(&track, actors.len());
        owner.push(actors[a].event);
        trajectories.push(Trajectory::new(id, track.into_iter().map(|(s, _)| s).collect(), Some(actors[a].label))?);
    }

    let mut groups = Vec::new();
    for (k, e) in script.events.iter().enumerate() {
        let members: Vec<String> =
            trajectories.iter().zip(&owner).filter(|(_, &o)| o == k).map(|(t, _)| t.id.clone()).collect();
        if members.is_empty() {
            continue;
        }
        let inst = &instances[k];
        let mut phases = Vec::with_capacity(e.phases.len());
        let mut s0 = 0;
        for (p, ph) in e.phases.iter().enumerate() {
            let s1 = s0 + inst.phase_samples[p];
            phases.push(PhaseSpan {
                name: ph.name.clone(),
                interval: (inst.start + s0 as f64 * dt, inst.start + s1 as f64 * dt),
            });
            s0 = s1;
        }
        groups.push(TruthGroup {
            members,
            event: vocab.event_index(&e.event).expect("validated"),
            interval: (inst.start, inst.start + s0 as f64 * dt),
            phases,
        });
    }

    let mut objects = crate::io::scene_from_dtos(&script.scene, &vocab, "scene")?.objects;
    for (k, e) in script.events.iter().enumerate() {
        let inst = &instances[k];
        for mut o in crate::io::scene_from_dtos(&e.props, &vocab, "props")?.objects {
            o.geometry = match o.geometry {
                Geometry::Point(p) => Geometry::Point(inst.world([p.x, p.y])),
                Geometry::Polygon(v) => Geometry::Polygon(v.iter().map(|p| inst.world([p.x, p.y])).collect()),
            };
            objects.push(o);
        }
    }
    Dataset::new(vocab, SceneModel { objects }, trajectories, Some(groups))
}

// ---------------------------------------------------------------------------
// The built-in library.

pub const EXCHANGE: &str = "Exchange Box";
pub const QUEUE: &str = "Queue for Vending Machine";
pub const TOUR: &str = "Group Tour";
pub const FRISBEE: &str = "Play Frisbee";
pub const PICNIC: &str = "Picnic";

/// Vocabulary shared by every built-in script.
pub fn suite_vocabulary() -> VocabularyDto {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
    VocabularyDto {
        events: s(&[EXCHANGE, QUEUE, TOUR, FRISBEE, PICNIC]),
        roles: s(&["Deliverer", "Receiver", "Queuing Person", "Guide", "Tourist", "Player", "Picnic Person"]),
        portables: s(&["Box", "Frisbee"]),
        scene_classes: s(&["Building", "Vending Machine", "Table", "Car", "Info Booth"]),
    }
}

fn point_prop(class: &str, at: [f64; 2]) -> SceneObjectDto {
    SceneObjectDto { class: class.into(), geometry: GeometryDto::Point { coords: at } }
}

fn square_prop(class: &str, center: [f64; 2], half: f64) -> SceneObjectDto {
    let [x, y] = center;
    SceneObjectDto {
        class: class.into(),
        geometry: GeometryDto::Polygon {
            coords: vec![[x - half, y - half], [x + half, y - half], [x + half, y + half], [x - half, y + half]],
        },
    }
}

fn cast(role: &str, count: usize, start: Formation) -> CastEntry {
    CastEntry { role: role.into(), count, start }
}

fn phase(name: &str, duration: f64, directives: Vec<(&str, Motion)>) -> PhaseScript {
    PhaseScript {
        name: name.into(),
        duration,
        directives: directives.into_iter().map(|(r, m)| Directive { role: r.into(), motion: m }).collect(),
    }
}

fn line(from: [f64; 2], step: [f64; 2]) -> Formation {
    Formation::Line { from, step }
}

fn ring(center: [f64; 2], radius: f64) -> Formation {
    Formation::Ring { center, radius, phase: 0.0 }
}

fn goto(to: Formation) -> Motion {
    Motion::Goto { to }
}

/// Two deliverers carry a box 50 units to two waiting receivers, hand it
/// over, and leave.
pub fn exchange_event(anchor: [f64; 2]) -> EventScript {
    EventScript {
        event: EXCHANGE.into(),
        anchor,
        start: 0.0,
        cast: vec![
            cast("Deliverer", 2, line([-50.0, -6.0], [0.0, 12.0])),
            cast("Receiver", 2, line([8.0, -6.0], [0.0, 12.0])),
            cast("Box", 1, Formation::Point { at: [-48.0, -6.0] }),
        ],
        phases: vec![
            phase(
                "approach",
                10.0,
                vec![
                    ("Deliverer", goto(line([0.0, -6.0], [0.0, 12.0]))),
                    ("Box", Motion::Track { role: "Deliverer".into(), index: 0, offset: [2.0, 0.0] }),
                ],
            ),
            phase("exchange", 6.0, vec![("Box", goto(Formation::Point { at: [6.0, 0.0] }))]),
            phase("depart", 10.0, vec![("Deliverer", goto(line([-40.0, -46.0], [0.0, 12.0])))]),
        ],
        props: vec![point_prop("Car", [-20.0, 25.0])],
    }
}

/// People walk up and line up in front of a vending machine, wait, and
/// walk off sideways.
pub fn queue_event(anchor: [f64; 2], people: usize) -> EventScript {
    EventScript {
        event: QUEUE.into(),
        anchor,
        start: 0.0,
        cast: vec![cast("Queuing Person", people, line([60.0, -50.0], [12.0, 0.0]))],
        phases: vec![
            phase("approach", 8.0, vec![("Queuing Person", goto(line([12.0, 0.0], [10.0, 0.0])))]),
            phase("wait", 12.0, vec![]),
            phase("leave", 8.0, vec![("Queuing Person", goto(line([12.0, 50.0], [10.0, 0.0])))]),
        ],
        props: vec![point_prop("Vending Machine", [0.0, 0.0])],
    }
}

/// Tourists gather around a guide by an info booth, walk together, stop.
pub fn tour_event(anchor: [f64; 2], tourists: usize) -> EventScript {
    EventScript {
        event: TOUR.into(),
        anchor,
        start: 0.0,
        cast: vec![cast("Guide", 1, Formation::Point { at: [0.0, 0.0] }), cast("Tourist", tourists, ring([0.0, 0.0], 45.0))],
        phases: vec![
            phase("gather", 8.0, vec![("Tourist", goto(ring([0.0, 0.0], 10.0)))]),
            phase(
                "walk",
                12.0,
                vec![
                    ("Guide", goto(Formation::Point { at: [48.0, 0.0] })),
                    ("Tourist", goto(ring([48.0, 0.0], 10.0))),
                ],
            ),
            phase("stop", 8.0, vec![]),
        ],
        props: vec![point_prop("Info Booth", [-15.0, 0.0])],
    }
}

/// Players stand on a circle and pass a frisbee around it twice.
pub fn frisbee_event(anchor: [f64; 2], players: usize) -> EventScript {
    let circle = ring([0.0, 0.0], 25.0);
    let throws = 2 * players;
    let phases = (1..=throws)
        .map(|k| phase("throw", 4.0, vec![("Frisbee", goto(Formation::Point { at: circle.slot(k % players, players) }))]))
        .collect();
    EventScript {
        event: FRISBEE.into(),
        anchor,
        start: 0.0,
        cast: vec![cast("Player", players, circle.clone()), cast("Frisbee", 1, Formation::Point { at: circle.slot(0, players) })],
        phases,
        props: vec![],
    }
}

/// People arrive at a table and sit around it.
pub fn picnic_event(anchor: [f64; 2], people: usize) -> EventScript {
    EventScript {
        event: PICNIC.into(),
        anchor,
        start: 0.0,
        cast: vec![cast("Picnic Person", people, ring([0.0, 0.0], 35.0))],
        phases: vec![phase("arrive", 6.0, vec![("Picnic Person", goto(ring([0.0, 0.0], 12.0)))]), phase("sit", 16.0, vec![])],
        props: vec![square_prop("Table", [0.0, 0.0], 5.0)],
    }
}

fn suite_variation() -> VariationSpec {
    VariationSpec { rotate: true, anchor_jitter: 30.0, start_jitter_units: 2, phase_jitter_units: 1 }
}

fn script(name: &str, events: Vec<EventScript>) -> ScenarioScript {
    ScenarioScript {
        name: name.into(),
        vocabulary: suite_vocabulary(),
        scene: vec![square_prop("Building", [-300.0, -300.0], 60.0)],
        events,
        noise: NoiseSpec::default(),
        variation: suite_variation(),
        sample_interval: default_sample_interval(),
        unit: default_unit(),
    }
}

/// Single-event scripts, one per built-in event type.
pub fn single_event_scripts() -> Vec<ScenarioScript> {
    let o = [0.0, 0.0];
    vec![
        script("exchange", vec![exchange_event(o)]),
        script("queue", vec![queue_event(o, 4)]),
        script("tour", vec![tour_event(o, 4)]),
        script("frisbee", vec![frisbee_event(o, 3)]),
        script("picnic", vec![picnic_event(o, 3)]),
    ]
}

/// Scenes of 12 trajectories with two or three concurrent events, spread
/// 500 units apart.
pub fn composition_scripts() -> Vec<ScenarioScript> {
    let a = [0.0, 0.0];
    let b = [500.0, 0.0];
    let c = [0.0, 500.0];
    vec![
        script("exchange+queue+picnic", vec![exchange_event(a), queue_event(b, 4), picnic_event(c, 3)]),
        script("tour+frisbee+picnic", vec![tour_event(a, 4), frisbee_event(b, 3), picnic_event(c, 3)]),
        script("exchange+tour", vec![exchange_event(a), tour_event(b, 6)]),
        script("queue+tour", vec![queue_event(a, 6), tour_event(b, 5)]),
        script("frisbee+queue+tour", vec![frisbee_event(a, 3), queue_event(b, 4), tour_event(c, 3)]),
        script("exchange+frisbee+queue", vec![exchange_event(a), frisbee_event(b, 2), queue_event(c, 4)]),
    ]
}

/// The built-in library: every single-event script, then every
/// composition.
pub fn scenario_suite() -> Vec<ScenarioScript> {
    let mut v = single_event_scripts();
    v.extend(composition_scripts());
    v
}
