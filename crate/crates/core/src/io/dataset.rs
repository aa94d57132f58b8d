use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_version, from_json_str, write_json, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::model::{
    is_simple_polygon, Dataset, Geometry, PhaseSpan, Point, Sample, SceneModel, SceneObject, Trajectory, TruthGroup,
    Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VocabularyDto {
    pub events: Vec<String>,
    pub roles: Vec<String>,
    pub portables: Vec<String>,
    pub scene_classes: Vec<String>,
}

impl From<&Vocabulary> for VocabularyDto {
    fn from(v: &Vocabulary) -> Self {
        VocabularyDto {
            events: v.events.clone(),
            roles: v.roles.clone(),
            portables: v.portables.clone(),
            scene_classes: v.scene_classes.clone(),
        }
    }
}

impl VocabularyDto {
    pub fn to_vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::new(self.events.clone(), self.roles.clone(), self.portables.clone(), self.scene_classes.clone())
            .map_err(|e| Error::schema("vocabulary", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryDto {
    Point { coords: [f64; 2] },
    Polygon { coords: Vec<[f64; 2]> },
}

impl GeometryDto {
    pub fn to_geometry(&self) -> Geometry {
        match self {
            GeometryDto::Point { coords } => Geometry::Point(Point::new(coords[0], coords[1])),
            GeometryDto::Polygon { coords } => Geometry::Polygon(coords.iter().map(|c| Point::new(c[0], c[1])).collect()),
        }
    }
}

impl From<&Geometry> for GeometryDto {
    fn from(g: &Geometry) -> Self {
        match g {
            Geometry::Point(p) => GeometryDto::Point { coords: [p.x, p.y] },
            Geometry::Polygon(v) => GeometryDto::Polygon { coords: v.iter().map(|p| [p.x, p.y]).collect() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObjectDto {
    pub class: String,
    pub geometry: GeometryDto,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDto {
    pub objects: Vec<SceneObjectDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDto {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    pub samples: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDto {
    pub name: String,
    pub interval: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDto {
    pub members: Vec<String>,
    pub event: String,
    pub interval: [f64; 2],
    /// Scripted sub-event spans, written by the scenario generator.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<PhaseDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub version: u32,
    pub vocabulary: VocabularyDto,
    pub scene: SceneDto,
    pub trajectories: Vec<TrajectoryDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<GroupDto>>,
}

pub(crate) fn scene_from_dtos(objects: &[SceneObjectDto], vocab: &Vocabulary, prefix: &str) -> Result<SceneModel> {
    let mut out = Vec::with_capacity(objects.len());
    for (i, o) in objects.iter().enumerate() {
        let class = vocab
            .scene_class_index(&o.class)
            .ok_or_else(|| Error::schema(format!("{prefix}[{i}].class"), format!("unknown scene class `{}`", o.class)))?;
        let geometry = o.geometry.to_geometry();
        let ok = match &geometry {
            Geometry::Point(p) => p.x.is_finite() && p.y.is_finite(),
            Geometry::Polygon(v) => is_simple_polygon(v),
        };
        if !ok {
            return Err(Error::schema(format!("{prefix}[{i}].geometry"), "not a finite point or simple polygon"));
        }
        out.push(SceneObject { class, geometry });
    }
    Ok(SceneModel { objects: out })
}

/// Checks a parsed document and builds the dataset, naming the JSON path of
/// the first offending field.
pub fn dataset_from_file(file: &DatasetFile) -> Result<Dataset> {
    check_version(file.version)?;
    let vocab = file.vocabulary.to_vocabulary()?;
    let scene = scene_from_dtos(&file.scene.objects, &vocab, "scene.objects")?;

    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut trajectories = Vec::with_capacity(file.trajectories.len());
    for (i, t) in file.trajectories.iter().enumerate() {
        if ids.insert(t.id.as_str(), i).is_some() {
            return Err(Error::schema(format!("trajectories[{i}].id"), format!("duplicate id `{}`", t.id)));
        }
        let role = match &t.role {
            None => None,
            Some(name) => Some(
                vocab
                    .label_index(name)
                    .ok_or_else(|| Error::schema(format!("trajectories[{i}].role"), format!("unknown role `{name}`")))?,
            ),
        };
        let samples = t.samples.iter().map(|s| Sample::new(s[0], s[1], s[2])).collect();
        let traj = Trajectory::new(t.id.clone(), samples, role).map_err(|e| match e {
            Error::InvalidTrajectory { reason, .. } => Error::schema(format!("trajectories[{i}].samples"), reason),
            other => other,
        })?;
        trajectories.push(traj);
    }

    let groups = match &file.groups {
        None => None,
        Some(gs) => {
            let mut owner: HashMap<&str, usize> = HashMap::new();
            let mut out = Vec::with_capacity(gs.len());
            for (gi, g) in gs.iter().enumerate() {
                let event = vocab
                    .event_index(&g.event)
                    .ok_or_else(|| Error::schema(format!("groups[{gi}].event"), format!("unknown event `{}`", g.event)))?;
                if g.members.is_empty() {
                    return Err(Error::schema(format!("groups[{gi}].members"), "empty group"));
                }
                for (j, m) in g.members.iter().enumerate() {
                    let path = format!("groups[{gi}].members[{j}]");
                    if !ids.contains_key(m.as_str()) {
                        return Err(Error::schema(path, format!("unknown trajectory `{m}`")));
                    }
                    if owner.insert(m.as_str(), gi).is_some() {
                        return Err(Error::schema(path, format!("`{m}` belongs to more than one group")));
                    }
                }
                if !(g.interval[0] < g.interval[1]) {
                    return Err(Error::schema(format!("groups[{gi}].interval"), "interval must have positive length"));
                }
                out.push(TruthGroup {
                    members: g.members.clone(),
                    event,
                    interval: (g.interval[0], g.interval[1]),
                    phases: g
                        .phases
                        .iter()
                        .map(|p| PhaseSpan { name: p.name.clone(), interval: (p.interval[0], p.interval[1]) })
                        .collect(),
                });
            }
            Some(out)
        }
    };
    Dataset::new(vocab, scene, trajectories, groups)
}

pub fn dataset_to_file(d: &Dataset) -> DatasetFile {
    let v = &d.vocabulary;
    DatasetFile {
        version: FORMAT_VERSION,
        vocabulary: v.into(),
        scene: SceneDto {
            objects: d
                .scene
                .objects
                .iter()
                .map(|o| SceneObjectDto { class: v.scene_classes[o.class].clone(), geometry: (&o.geometry).into() })
                .collect(),
        },
        trajectories: d
            .trajectories
            .iter()
            .map(|t| TrajectoryDto {
                id: t.id.clone(),
                role: t.role.map(|r| v.label_name(r).to_string()),
                samples: t.samples().iter().map(|s| [s.t, s.x, s.y]).collect(),
            })
            .collect(),
        groups: d.groups.as_ref().map(|gs| {
            gs.iter()
                .map(|g| GroupDto {
                    members: g.members.clone(),
                    event: v.events[g.event].clone(),
                    interval: [g.interval.0, g.interval.1],
                    phases: g
                        .phases
                        .iter()
                        .map(|p| PhaseDto { name: p.name.clone(), interval: [p.interval.0, p.interval.1] })
                        .collect(),
                })
                .collect()
        }),
    }
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    dataset_from_file(&from_json_str(text)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    write_json(&dataset_to_file(d), path)
}
