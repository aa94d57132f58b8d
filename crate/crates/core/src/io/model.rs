use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::VocabularyDto;
use super::{check_version, from_json_str, write_json, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureStandardizer};
use crate::grammar::{parse_template_id, DurationPrior, Grammar, Model, TemplateNode};
use crate::model::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardizerDto {
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationDto {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDto {
    pub id: String,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub duration: DurationDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConfigDto {
    pub unit: f64,
    pub tick: f64,
    pub speed_threshold: f64,
    pub closeness_threshold: f64,
}

/// Model document. Only admissible templates appear under `templateSwitch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub vocabulary: VocabularyDto,
    pub standardizer: StandardizerDto,
    pub templates: Vec<TemplateDto>,
    pub event_switch: BTreeMap<String, f64>,
    pub template_switch: BTreeMap<String, BTreeMap<String, f64>>,
    pub transitions: BTreeMap<String, Vec<[String; 2]>>,
    pub roles_of: BTreeMap<String, Vec<String>>,
    pub config: ConfigDto,
}

pub fn model_to_file(m: &Model) -> ModelFile {
    let g = &m.grammar;
    let v = &g.vocabulary;
    let tid = |a: usize| g.templates[a].id.clone();
    ModelFile {
        version: FORMAT_VERSION,
        vocabulary: v.into(),
        standardizer: StandardizerDto { mean: m.standardizer.mean.clone(), stdev: m.standardizer.stdev.clone() },
        templates: g
            .templates
            .iter()
            .map(|t| TemplateDto {
                id: t.id.clone(),
                weights: t.weights.clone(),
                bias: t.bias,
                duration: DurationDto { mu: t.duration.mu, sigma: t.duration.sigma },
            })
            .collect(),
        event_switch: v.events.iter().cloned().zip(g.event_switch.iter().copied()).collect(),
        template_switch: v
            .events
            .iter()
            .enumerate()
            .map(|(e, name)| {
                let row = g.template_switch[e]
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| **l > f64::NEG_INFINITY)
                    .map(|(a, &l)| (tid(a), l))
                    .collect();
                (name.clone(), row)
            })
            .collect(),
        transitions: v
            .events
            .iter()
            .enumerate()
            .map(|(e, name)| (name.clone(), g.transitions[e].iter().map(|&(x, y)| [tid(x), tid(y)]).collect()))
            .collect(),
        roles_of: v
            .events
            .iter()
            .enumerate()
            .map(|(e, name)| (name.clone(), g.roles_of[e].iter().map(|&r| v.label_name(r).to_string()).collect()))
            .collect(),
        config: ConfigDto {
            unit: m.config.unit,
            tick: m.config.tick,
            speed_threshold: m.config.speed_threshold,
            closeness_threshold: m.config.closeness_threshold,
        },
    }
}

/// Per-event entries of `map`, in vocabulary order; every event must appear
/// exactly once.
fn per_event<'a, T>(map: &'a BTreeMap<String, T>, vocab: &Vocabulary, field: &str) -> Result<Vec<&'a T>> {
    if let Some(k) = map.keys().find(|k| vocab.event_index(k).is_none()) {
        return Err(Error::schema(format!("{field}.{k}"), format!("unknown event `{k}`")));
    }
    vocab
        .events
        .iter()
        .map(|e| map.get(e).ok_or_else(|| Error::schema(field, format!("missing event `{e}`"))))
        .collect()
}

/// Builds a model from a parsed document and validates the grammar.
pub fn model_from_file(f: &ModelFile) -> Result<Model> {
    check_version(f.version)?;
    let vocab = f.vocabulary.to_vocabulary()?;
    let n = f.templates.len();
    let mut templates = Vec::with_capacity(n);
    for (a, t) in f.templates.iter().enumerate() {
        if parse_template_id(&t.id) != Some(a) {
            return Err(Error::schema(format!("templates[{a}].id"), format!("expected `L{a}`, got `{}`", t.id)));
        }
        templates.push(TemplateNode {
            id: t.id.clone(),
            weights: t.weights.clone(),
            bias: t.bias,
            duration: DurationPrior { mu: t.duration.mu, sigma: t.duration.sigma },
        });
    }
    let template = |id: &str, path: String| -> Result<usize> {
        parse_template_id(id)
            .filter(|&a| a < n && templates[a].id == id)
            .ok_or_else(|| Error::schema(path, format!("unknown template `{id}`")))
    };

    let event_switch = per_event(&f.event_switch, &vocab, "eventSwitch")?.into_iter().copied().collect();
    let mut template_switch = Vec::new();
    for (e, row) in per_event(&f.template_switch, &vocab, "templateSwitch")?.into_iter().enumerate() {
        let mut out = vec![f64::NEG_INFINITY; n];
        for (id, &l) in row {
            out[template(id, format!("templateSwitch.{}.{id}", vocab.events[e]))?] = l;
        }
        template_switch.push(out);
    }
    let mut transitions = Vec::new();
    for (e, pairs) in per_event(&f.transitions, &vocab, "transitions")?.into_iter().enumerate() {
        let mut set = BTreeSet::new();
        for (i, [x, y]) in pairs.iter().enumerate() {
            let path = format!("transitions.{}[{i}]", vocab.events[e]);
            set.insert((template(x, path.clone())?, template(y, path)?));
        }
        transitions.push(set);
    }
    let mut roles_of = Vec::new();
    for (e, names) in per_event(&f.roles_of, &vocab, "rolesOf")?.into_iter().enumerate() {
        let roles = names
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vocab.label_index(r).ok_or_else(|| {
                    Error::schema(format!("rolesOf.{}[{i}]", vocab.events[e]), format!("unknown role `{r}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        roles_of.push(roles);
    }
    Model {
        grammar: Grammar { vocabulary: vocab, templates, event_switch, template_switch, transitions, roles_of },
        standardizer: FeatureStandardizer { mean: f.standardizer.mean.clone(), stdev: f.standardizer.stdev.clone() },
        config: FeatureConfig {
            unit: f.config.unit,
            tick: f.config.tick,
            speed_threshold: f.config.speed_threshold,
            closeness_threshold: f.config.closeness_threshold,
        },
    }
    .validated()
}

pub fn parse_model(text: &str) -> Result<Model> {
    model_from_file(&from_json_str(text)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn save_model(m: &Model, path: &Path) -> Result<()> {
    write_json(&model_to_file(m), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::toy;
    use crate::io::to_canonical_string;

    fn toy_model() -> Model {
        let g = toy();
        let dim = crate::features::RelationLayout::new(&g.vocabulary).dim();
        let mut g = g;
        for (a, t) in g.templates.iter_mut().enumerate() {
            t.weights = (0..dim).map(|i| ((a * dim + i) as f64 * 0.37).sin() / 3.0).collect();
        }
        Model { grammar: g, standardizer: FeatureStandardizer::identity(dim), config: FeatureConfig::default() }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let m = toy_model();
        let text = to_canonical_string(&model_to_file(&m)).unwrap();
        let back = parse_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(to_canonical_string(&model_to_file(&back)).unwrap(), text);
    }

    #[test]
    fn invalid_models_are_rejected() {
        let m = toy_model();
        let mut f = model_to_file(&m);
        f.templates[1].duration.sigma = 0.0;
        assert!(matches!(model_from_file(&f), Err(Error::InvalidModel(_))));

        let mut f = model_to_file(&m);
        *f.template_switch.get_mut("Meet").unwrap().get_mut("L0").unwrap() = 0.5f64.ln();
        assert!(matches!(model_from_file(&f), Err(Error::InvalidModel(_))));

        let mut f = model_to_file(&m);
        f.transitions.get_mut("Walk").unwrap().push(["L2".into(), "L9".into()]);
        assert!(matches!(model_from_file(&f), Err(Error::Schema { ref path, .. }) if path == "transitions.Walk[0]"));

        let mut f = model_to_file(&m);
        f.roles_of.remove("Walk");
        assert!(matches!(model_from_file(&f), Err(Error::Schema { ref path, .. }) if path == "rolesOf"));
    }
}
