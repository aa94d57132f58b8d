//! The event grammar: events under a root OR node, per-event template
//! alternatives with switching probabilities, allowed "followed-by"
//! transitions between templates, and per-event role sets.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureStandardizer, RelationLayout};
use crate::model::Vocabulary;

const NORMALIZATION_TOL: f64 = 1e-9;

/// Log-normal prior over the length (seconds) of the interval a template
/// occupies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationPrior {
    pub mu: f64,
    pub sigma: f64,
}

impl DurationPrior {
    pub fn log_density(&self, length: f64) -> f64 {
        log_normal_log_pdf(length, self.mu, self.sigma)
    }
}

pub fn log_normal_log_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let z = (x.ln() - mu) / sigma;
    -(x * sigma * (2.0 * std::f64::consts::PI).sqrt()).ln() - 0.5 * z * z
}

/// A latent sub-event: a linear scorer over standardized relation vectors
/// plus its duration prior. Template ids are `L<index>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateNode {
    pub id: String,
    pub weights: Vec<f64>,
    /// Additive constant of the unit log-likelihood, so that scores of
    /// different templates and different groupings are comparable.
    pub bias: f64,
    pub duration: DurationPrior,
}

pub fn template_id(index: usize) -> String {
    format!("L{index}")
}

pub fn parse_template_id(id: &str) -> Option<usize> {
    id.strip_prefix('L')?.parse().ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    pub vocabulary: Vocabulary,
    pub templates: Vec<TemplateNode>,
    /// `log p(event | root)`.
    pub event_switch: Vec<f64>,
    /// `log p(template | event)`, `-inf` for templates the event never uses.
    pub template_switch: Vec<Vec<f64>>,
    /// Allowed ordered template changes per event. Self-transitions are
    /// implicit.
    pub transitions: Vec<BTreeSet<(usize, usize)>>,
    /// Admissible role/portable labels per event, most frequent first.
    pub roles_of: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EventSwitchNotNormalized { sum: f64 },
    TemplateSwitchNotNormalized { event: usize, sum: f64 },
    ShapeMismatch { what: &'static str, expected: usize, got: usize },
    NoAdmissibleTemplate { event: usize },
    DanglingTransition { event: usize, from: usize, to: usize },
    DimensionMismatch { template: usize, expected: usize, got: usize },
    NonPositiveSigma { template: usize },
    NonFinite { what: String },
    BadTemplateId { template: usize, id: String },
    NoRoles { event: usize },
    UnknownRole { event: usize, role: usize },
    Standardizer(String),
    Config(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EventSwitchNotNormalized { sum } => write!(f, "event switch probabilities sum to {sum}"),
            Violation::TemplateSwitchNotNormalized { event, sum } => {
                write!(f, "template switch probabilities of event {event} sum to {sum}")
            }
            Violation::ShapeMismatch { what, expected, got } => write!(f, "{what} has {got} entries, expected {expected}"),
            Violation::NoAdmissibleTemplate { event } => write!(f, "event {event} has no admissible template"),
            Violation::DanglingTransition { event, from, to } => {
                write!(f, "transition {from} -> {to} of event {event} references an inadmissible template")
            }
            Violation::DimensionMismatch { template, expected, got } => {
                write!(f, "template {template} has {got} weights, expected {expected}")
            }
            Violation::NonPositiveSigma { template } => write!(f, "template {template} has a non-positive duration sigma"),
            Violation::NonFinite { what } => write!(f, "{what} is not finite"),
            Violation::BadTemplateId { template, id } => write!(f, "template {template} has id `{id}`"),
            Violation::NoRoles { event } => write!(f, "event {event} has no admissible roles"),
            Violation::UnknownRole { event, role } => write!(f, "event {event} lists unknown role {role}"),
            Violation::Standardizer(m) => write!(f, "standardizer: {m}"),
            Violation::Config(m) => write!(f, "config: {m}"),
        }
    }
}

impl Grammar {
    fn check_event(&self, event: usize) -> Result<()> {
        if event >= self.vocabulary.events.len() {
            return Err(Error::UnknownSymbol(format!("event index {event}")));
        }
        Ok(())
    }

    fn check_template(&self, template: usize) -> Result<()> {
        if template >= self.templates.len() {
            return Err(Error::UnknownSymbol(format!("template index {template}")));
        }
        Ok(())
    }

    pub fn admissible(&self, event: usize, template: usize) -> Result<bool> {
        self.check_event(event)?;
        self.check_template(template)?;
        Ok(self.template_switch[event][template] > f64::NEG_INFINITY)
    }

    pub fn admissible_templates(&self, event: usize) -> Vec<usize> {
        (0..self.templates.len())
            .filter(|&a| self.template_switch[event][a] > f64::NEG_INFINITY)
            .collect()
    }

    pub fn transition_allowed(&self, event: usize, from: usize, to: usize) -> Result<bool> {
        for t in [from, to] {
            if !self.admissible(event, t)? {
                return Err(Error::UnknownSymbol(format!(
                    "template {} is not admissible for event `{}`",
                    template_id(t),
                    self.vocabulary.events[event]
                )));
            }
        }
        Ok(from == to || self.transitions[event].contains(&(from, to)))
    }

    /// Every broken invariant; empty iff the grammar is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n_events = self.vocabulary.events.len();
        let n_templates = self.templates.len();
        let dim = RelationLayout::new(&self.vocabulary).dim();

        for (what, got) in [
            ("eventSwitch", self.event_switch.len()),
            ("templateSwitch", self.template_switch.len()),
            ("transitions", self.transitions.len()),
            ("rolesOf", self.roles_of.len()),
        ] {
            if got != n_events {
                out.push(Violation::ShapeMismatch { what, expected: n_events, got });
            }
        }
        if !out.is_empty() {
            return out;
        }

        if self.event_switch.iter().any(|v| !v.is_finite()) {
            out.push(Violation::NonFinite { what: "eventSwitch".into() });
        }
        let sum: f64 = self.event_switch.iter().map(|l| l.exp()).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            out.push(Violation::EventSwitchNotNormalized { sum });
        }

        for (a, t) in self.templates.iter().enumerate() {
            if t.id != template_id(a) {
                out.push(Violation::BadTemplateId { template: a, id: t.id.clone() });
            }
            if t.weights.len() != dim {
                out.push(Violation::DimensionMismatch { template: a, expected: dim, got: t.weights.len() });
            }
            if t.weights.iter().any(|w| !w.is_finite()) || !t.bias.is_finite() || !t.duration.mu.is_finite() || !t.duration.sigma.is_finite() {
                out.push(Violation::NonFinite { what: format!("template {a}") });
            }
            if !(t.duration.sigma > 0.0) {
                out.push(Violation::NonPositiveSigma { template: a });
            }
        }

        for e in 0..n_events {
            let row = &self.template_switch[e];
            if row.len() != n_templates {
                out.push(Violation::ShapeMismatch { what: "templateSwitch row", expected: n_templates, got: row.len() });
                continue;
            }
            if row.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                out.push(Violation::NonFinite { what: format!("templateSwitch of event {e}") });
            }
            let admissible: Vec<usize> = (0..n_templates).filter(|&a| row[a] > f64::NEG_INFINITY).collect();
            if admissible.is_empty() {
                out.push(Violation::NoAdmissibleTemplate { event: e });
            } else {
                let sum: f64 = admissible.iter().map(|&a| row[a].exp()).sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    out.push(Violation::TemplateSwitchNotNormalized { event: e, sum });
                }
            }
            for &(from, to) in &self.transitions[e] {
                let ok = |a: usize| a < n_templates && row[a] > f64::NEG_INFINITY;
                if !ok(from) || !ok(to) {
                    out.push(Violation::DanglingTransition { event: e, from, to });
                }
            }
            if self.roles_of[e].is_empty() {
                out.push(Violation::NoRoles { event: e });
            }
            for &r in &self.roles_of[e] {
                if r >= self.vocabulary.n_labels() {
                    out.push(Violation::UnknownRole { event: e, role: r });
                }
            }
        }
        out
    }
}

/// Everything inference needs: the grammar, the feature standardizer and the
/// feature thresholds it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub grammar: Grammar,
    pub standardizer: FeatureStandardizer,
    pub config: FeatureConfig,
}

impl Model {
    pub fn layout(&self) -> RelationLayout {
        RelationLayout::new(&self.grammar.vocabulary)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.grammar.validate();
        let dim = self.layout().dim();
        let s = &self.standardizer;
        if s.mean.len() != dim || s.stdev.len() != dim {
            out.push(Violation::Standardizer(format!(
                "expected {dim} dimensions, got mean {} / stdev {}",
                s.mean.len(),
                s.stdev.len()
            )));
        }
        if s.stdev.iter().any(|v| !(v.is_finite() && *v > 0.0)) || s.mean.iter().any(|v| !v.is_finite()) {
            out.push(Violation::Standardizer("stdev must be positive and finite".into()));
        }
        if let Err(e) = self.config.validate() {
            out.push(Violation::Config(e.to_string()));
        }
        out
    }

    pub fn validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() { Ok(self) } else { Err(Error::InvalidModel(v)) }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn vocab() -> Vocabulary {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Vocabulary::new(s(&["Meet", "Walk"]), s(&["A", "B"]), s(&["Box"]), s(&["Car"])).unwrap()
    }

    /// Two events, three templates: event 0 uses {0, 1}, event 1 uses {2}.
    pub(crate) fn toy() -> Grammar {
        let v = vocab();
        let dim = RelationLayout::new(&v).dim();
        let templates = (0..3)
            .map(|a| TemplateNode { id: template_id(a), weights: vec![0.0; dim], bias: 0.0, duration: DurationPrior { mu: 1.0, sigma: 0.5 } })
            .collect();
        let ni = f64::NEG_INFINITY;
        Grammar {
            vocabulary: v,
            templates,
            event_switch: vec![0.75f64.ln(), 0.25f64.ln()],
            template_switch: vec![vec![0.3f64.ln(), 0.7f64.ln(), ni], vec![ni, ni, 0.0]],
            transitions: vec![BTreeSet::from([(0, 1)]), BTreeSet::new()],
            roles_of: vec![vec![0, 1], vec![2]],
        }
    }

    #[test]
    fn admissibility() {
        let g = toy();
        assert!(g.admissible(0, 0).unwrap());
        assert!(!g.admissible(0, 2).unwrap());
        assert_eq!(g.admissible_templates(0), vec![0, 1]);
        assert!(matches!(g.admissible(5, 0), Err(Error::UnknownSymbol(_))));
        assert!(matches!(g.admissible(0, 9), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn transitions() {
        let g = toy();
        assert!(g.transition_allowed(0, 1, 1).unwrap());
        assert!(g.transition_allowed(0, 0, 1).unwrap());
        assert!(!g.transition_allowed(0, 1, 0).unwrap());
        assert!(g.transition_allowed(0, 0, 2).is_err());
    }

    #[test]
    fn validation_reports_defects() {
        assert!(toy().validate().is_empty());

        let mut g = toy();
        g.event_switch = vec![0.65f64.ln(), 0.25f64.ln()];
        let v = g.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::EventSwitchNotNormalized { .. }));

        let mut g = toy();
        g.transitions[1].insert((2, 0));
        let v = g.validate();
        assert_eq!(v, vec![Violation::DanglingTransition { event: 1, from: 2, to: 0 }]);

        let mut g = toy();
        g.templates[1].duration.sigma = 0.0;
        g.templates[0].weights.pop();
        let v = g.validate();
        assert_eq!(v.len(), 2);

        let mut g = toy();
        g.template_switch[1][2] = f64::NEG_INFINITY;
        assert!(g.validate().contains(&Violation::NoAdmissibleTemplate { event: 1 }));
    }

    #[test]
    fn log_normal_density() {
        // at x = e^mu the density is 1 / (x sigma sqrt(2 pi))
        let (mu, sigma) = (1.3f64, 0.4);
        let x = mu.exp();
        let expected = -(x * sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((log_normal_log_pdf(x, mu, sigma) - expected).abs() < 1e-12);
        assert_eq!(log_normal_log_pdf(0.0, mu, sigma), f64::NEG_INFINITY);
    }
}
