use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_version, from_json_str, write_json, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::grammar::{parse_template_id, template_id};
use crate::likelihood::{EnergyBreakdown, GroupEnergy, SegmentEnergy};
use crate::model::{ParseGraph, SegmentLabel, Solution, SolvedGroup, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDto {
    pub template: String,
    pub interval: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvedGroupDto {
    pub members: Vec<String>,
    pub event: String,
    pub extent: [f64; 2],
    pub segmentation: Vec<SegmentDto>,
    pub roles: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SegmentEnergyDto {
    pub template_selection: f64,
    pub template_assignment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GroupEnergyDto {
    pub event_selection: f64,
    pub segments: Vec<SegmentEnergyDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakdownDto {
    pub total: f64,
    pub groups: Vec<GroupEnergyDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub version: u32,
    pub groups: Vec<SolvedGroupDto>,
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<BreakdownDto>,
    /// Best-so-far energy per outer iteration.
    #[serde(default)]
    pub trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn solution_to_file(s: &Solution, vocab: &Vocabulary) -> SolutionFile {
    SolutionFile {
        version: FORMAT_VERSION,
        groups: s
            .groups
            .iter()
            .map(|g| SolvedGroupDto {
                members: g.members.clone(),
                event: vocab.events[g.parse.event].clone(),
                extent: [g.parse.extent.0, g.parse.extent.1],
                segmentation: g
                    .parse
                    .segmentation
                    .iter()
                    .map(|l| SegmentDto { template: template_id(l.template), interval: [l.interval.0, l.interval.1] })
                    .collect(),
                roles: g.parse.roles.iter().map(|(id, &r)| (id.clone(), vocab.label_name(r).to_string())).collect(),
            })
            .collect(),
        energy: s.energy,
        breakdown: s.breakdown.as_ref().map(|b| BreakdownDto {
            total: b.total,
            groups: b
                .groups
                .iter()
                .map(|g| GroupEnergyDto {
                    event_selection: g.event_selection,
                    segments: g
                        .segments
                        .iter()
                        .map(|s| SegmentEnergyDto {
                            template_selection: s.template_selection,
                            template_assignment: s.template_assignment,
                        })
                        .collect(),
                })
                .collect(),
        }),
        trace: s.trace.clone(),
        seed: s.seed,
    }
}

/// Resolves event and role names against `vocab`. Membership is checked
/// against a dataset later, by whoever pairs the two.
pub fn solution_from_file(f: &SolutionFile, vocab: &Vocabulary) -> Result<Solution> {
    check_version(f.version)?;
    let mut groups = Vec::with_capacity(f.groups.len());
    for (gi, g) in f.groups.iter().enumerate() {
        let event = vocab
            .event_index(&g.event)
            .ok_or_else(|| Error::schema(format!("groups[{gi}].event"), format!("unknown event `{}`", g.event)))?;
        let segmentation = g
            .segmentation
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let template = parse_template_id(&s.template).ok_or_else(|| {
                    Error::schema(format!("groups[{gi}].segmentation[{i}].template"), format!("bad template id `{}`", s.template))
                })?;
                Ok(SegmentLabel { template, interval: (s.interval[0], s.interval[1]) })
            })
            .collect::<Result<Vec<_>>>()?;
        let roles = g
            .roles
            .iter()
            .map(|(id, name)| {
                let r = vocab
                    .label_index(name)
                    .ok_or_else(|| Error::schema(format!("groups[{gi}].roles.{id}"), format!("unknown role `{name}`")))?;
                Ok((id.clone(), r))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        groups.push(SolvedGroup {
            members: g.members.clone(),
            parse: ParseGraph { event, extent: (g.extent[0], g.extent[1]), segmentation, roles },
        });
    }
    Ok(Solution {
        groups,
        energy: f.energy,
        breakdown: f.breakdown.as_ref().map(|b| EnergyBreakdown {
            total: b.total,
            groups: b
                .groups
                .iter()
                .map(|g| GroupEnergy {
                    event_selection: g.event_selection,
                    segments: g
                        .segments
                        .iter()
                        .map(|s| SegmentEnergy {
                            template_selection: s.template_selection,
                            template_assignment: s.template_assignment,
                        })
                        .collect(),
                })
                .collect(),
        }),
        trace: f.trace.clone(),
        seed: f.seed,
    })
}

pub fn parse_solution(text: &str, vocab: &Vocabulary) -> Result<Solution> {
    solution_from_file(&from_json_str(text)?, vocab)
}

pub fn load_solution(path: &Path, vocab: &Vocabulary) -> Result<Solution> {
    parse_solution(&std::fs::read_to_string(path)?, vocab)
}

pub fn save_solution(s: &Solution, vocab: &Vocabulary, path: &Path) -> Result<()> {
    write_json(&solution_to_file(s, vocab), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::vocab;
    use crate::io::to_canonical_string;

    #[test]
    fn round_trip() {
        let s = Solution {
            groups: vec![SolvedGroup {
                members: vec!["a".into(), "b".into()],
                parse: ParseGraph {
                    event: 1,
                    extent: (0.0, 4.0),
                    segmentation: vec![
                        SegmentLabel { template: 2, interval: (0.0, 2.0) },
                        SegmentLabel { template: 0, interval: (2.0, 4.0) },
                    ],
                    roles: BTreeMap::from([("a".to_string(), 0), ("b".to_string(), 2)]),
                },
            }],
            energy: 1.25,
            breakdown: Some(EnergyBreakdown {
                total: 1.25,
                groups: vec![GroupEnergy {
                    event_selection: 0.25,
                    segments: vec![SegmentEnergy { template_selection: 0.5, template_assignment: 0.5 }],
                }],
            }),
            trace: vec![3.0, 1.25],
            seed: Some(7),
        };
        let v = vocab();
        let text = to_canonical_string(&solution_to_file(&s, &v)).unwrap();
        assert!(text.contains("\"roles\":{\"a\":\"A\",\"b\":\"Box\"}"), "{text}");
        let back = parse_solution(&text, &v).unwrap();
        assert_eq!(back, s);
        let bad = text.replace("\"Walk\"", "\"Run\"");
        assert!(matches!(parse_solution(&bad, &v), Err(Error::Schema { ref path, .. }) if path == "groups[0].event"));
    }
}
