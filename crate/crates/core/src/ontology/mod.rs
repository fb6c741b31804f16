//! Background knowledge: concepts, explanation texts, definitional
//! dependencies, frames with variant computations, and assessment rules.

mod rule;
mod template;
mod variant;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

pub use rule::{
    ArithOp, CmpOp, RuleEnv, RuleEvalError, RuleExpr, RuleMode, RuleParseError, RuleType, RuleTypeError, RuleValue,
    Var,
};
pub use template::{Segment, Template, TemplateError};
pub use variant::{variant_value, VariantError, VariantFn};

use variant::VariantSpec;

/// The seven kinds of explanation a knowledge item can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationType {
    Definition,
    Purpose,
    AssessmentOfPurpose,
    AssessmentOfValue,
    Formula,
    Provenance,
    History,
}

impl ExplanationType {
    pub const ALL: [ExplanationType; 7] = [
        ExplanationType::Definition,
        ExplanationType::Purpose,
        ExplanationType::AssessmentOfPurpose,
        ExplanationType::AssessmentOfValue,
        ExplanationType::Formula,
        ExplanationType::Provenance,
        ExplanationType::History,
    ];

    /// Default relevance weight: how often expert answers used this type, in percent.
    pub fn weight(self) -> Decimal {
        let tenths = match self {
            ExplanationType::Definition => 718,
            ExplanationType::Purpose => 462,
            ExplanationType::AssessmentOfPurpose => 308,
            ExplanationType::AssessmentOfValue => 513,
            ExplanationType::Formula => 231,
            ExplanationType::Provenance => 436,
            ExplanationType::History => 154,
        };
        Decimal::new(tenths, 1)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            ExplanationType::Definition => "definition",
            ExplanationType::Purpose => "purpose",
            ExplanationType::AssessmentOfPurpose => "assessment_of_purpose",
            ExplanationType::AssessmentOfValue => "assessment_of_value",
            ExplanationType::Formula => "formula",
            ExplanationType::Provenance => "provenance",
            ExplanationType::History => "history",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ExplanationType::Definition => "Definition",
            ExplanationType::Purpose => "Purpose",
            ExplanationType::AssessmentOfPurpose => "Assessment of Purpose",
            ExplanationType::AssessmentOfValue => "Assessment of Value",
            ExplanationType::Formula => "Formula",
            ExplanationType::Provenance => "Provenance",
            ExplanationType::History => "History",
        }
    }

    /// Types ordered by descending weight.
    pub fn by_relevance() -> [ExplanationType; 7] {
        let mut all = Self::ALL;
        all.sort_by_key(|t| std::cmp::Reverse(t.weight()));
        all
    }
}

impl fmt::Display for ExplanationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl std::str::FromStr for ExplanationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Self::ALL
            .into_iter()
            .find(|t| t.key() == norm)
            .ok_or_else(|| format!("unknown explanation type `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: String,
    pub name: String,
    pub variants: Vec<(String, VariantFn)>,
}

impl Frame {
    pub fn variant(&self, label: &str) -> Option<&VariantFn> {
        self.variants.iter().find(|(l, _)| l == label).map(|(_, f)| f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentRule {
    pub id: String,
    pub concept_id: String,
    pub mode: RuleMode,
    pub predicate: RuleExpr,
    pub good_text: Template,
    pub bad_text: Template,
    pub community: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub id: String,
    pub name: String,
    pub explanations: BTreeMap<ExplanationType, Template>,
    pub depends_on: Vec<String>,
    pub frames: Vec<Frame>,
    pub rules: Vec<AssessmentRule>,
}

impl Concept {
    pub fn frame(&self, id: &str) -> Option<&Frame> {
        self.frames.iter().find(|f| f.id == id)
    }
}

/// Named parameter tables substituted into rule parameters.
pub type Profiles = BTreeMap<String, BTreeMap<String, Decimal>>;

pub const DEFAULT_PROFILE: &str = "default";

#[derive(Debug, thiserror::Error)]
pub enum OntologyError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at {location}: {reason}")]
    Schema { location: String, reason: String },
    #[error("concept `{concept}` refers to unknown concept `{reference}`")]
    DanglingRef { concept: String, reference: String },
    #[error("dependency cycle: {}", path.join(" -> "))]
    DependencyCycle { path: Vec<String> },
}

fn schema(location: impl Into<String>, reason: impl fmt::Display) -> OntologyError {
    OntologyError::Schema {
        location: location.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    profiles: Profiles,
    concepts: Vec<Concept>,
    index: HashMap<String, usize>,
    rules: HashMap<String, (usize, usize)>,
}

impl Ontology {
    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.index.get(id).map(|&i| &self.concepts[i])
    }

    pub fn rule(&self, id: &str) -> Option<&AssessmentRule> {
        self.rules.get(id).map(|&(c, r)| &self.concepts[c].rules[r])
    }

    pub fn rules(&self) -> impl Iterator<Item = &AssessmentRule> {
        self.concepts.iter().flat_map(|c| c.rules.iter())
    }

    pub fn profiles(&self) -> &Profiles {
        &self.profiles
    }

    /// Looks a parameter up in `profile`, falling back to the default profile.
    pub fn param(&self, profile: &str, name: &str) -> Option<Decimal> {
        self.profiles
            .get(profile)
            .and_then(|p| p.get(name))
            .or_else(|| self.profiles.get(DEFAULT_PROFILE).and_then(|p| p.get(name)))
            .copied()
    }

    /// Finds a concept by id, accepting `_` for `-` as rule syntax requires.
    pub fn resolve_name(&self, name: &str) -> Option<&Concept> {
        self.concept(name)
            .or_else(|| self.concepts.iter().find(|c| c.id.replace('-', "_") == name))
    }

    pub fn from_json(text: &str) -> Result<Self, OntologyError> {
        let doc: OntologyDoc = serde_json::from_str(text)
            .map_err(|e| schema(format!("line {} column {}", e.line(), e.column()), e))?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: OntologyDoc) -> Result<Self, OntologyError> {
        if doc.version != 1 {
            return Err(schema("version", format!("unsupported version {}", doc.version)));
        }
        if !doc.profiles.contains_key(DEFAULT_PROFILE) {
            return Err(schema("profiles", "a `default` profile is required"));
        }
        let mut concepts = Vec::with_capacity(doc.concepts.len());
        let mut index = HashMap::new();
        for (i, cd) in doc.concepts.into_iter().enumerate() {
            let loc = format!("concepts[{i}] `{}`", cd.id);
            if cd.id.is_empty() {
                return Err(schema(loc, "empty concept id"));
            }
            if index.insert(cd.id.clone(), i).is_some() {
                return Err(schema(loc, "duplicate concept id"));
            }
            let mut explanations = BTreeMap::new();
            for (key, text) in cd.explanations {
                let ty: ExplanationType = key.parse().map_err(|e| schema(&loc, e))?;
                let tpl = Template::parse(&text).map_err(|e| schema(format!("{loc} explanation `{key}`"), e))?;
                explanations.insert(ty, tpl);
            }
            let mut frames = Vec::new();
            for fd in cd.frames {
                let floc = format!("{loc} frame `{}`", fd.id);
                let mut variants: Vec<(String, VariantFn)> = Vec::new();
                for vs in fd.variants {
                    if variants.iter().any(|(l, _)| *l == vs.label) {
                        return Err(schema(&floc, format!("duplicate variant label `{}`", vs.label)));
                    }
                    let f = match (vs.lagrange, vs.formula) {
                        (Some(k), None) => VariantFn::LagrangeExtrapolation(k),
                        (None, Some(src)) => {
                            VariantFn::NamedFormula(RuleExpr::parse(&src).map_err(|e| schema(&floc, e))?)
                        }
                        _ => return Err(schema(&floc, "a variant needs exactly one of `lagrange`, `formula`")),
                    };
                    f.validate().map_err(|e| schema(&floc, e))?;
                    variants.push((vs.label, f));
                }
                frames.push(Frame {
                    id: fd.id,
                    name: fd.name,
                    variants,
                });
            }
            let mut rules = Vec::new();
            for rd in cd.rules {
                let rloc = format!("{loc} rule `{}`", rd.id);
                let predicate = RuleExpr::parse(&rd.predicate).map_err(|e| schema(&rloc, e))?;
                predicate.check_predicate(rd.mode).map_err(|e| schema(&rloc, e))?;
                let community = rd.community.unwrap_or_else(|| DEFAULT_PROFILE.to_string());
                if !doc.profiles.contains_key(&community) {
                    return Err(schema(&rloc, format!("unknown community profile `{community}`")));
                }
                for p in predicate.params() {
                    let known = doc.profiles[&community].contains_key(&p)
                        || doc.profiles[DEFAULT_PROFILE].contains_key(&p);
                    if !known {
                        return Err(schema(&rloc, format!("parameter `{p}` is not in profile `{community}`")));
                    }
                }
                rules.push(AssessmentRule {
                    id: rd.id,
                    concept_id: cd.id.clone(),
                    mode: rd.mode,
                    predicate,
                    good_text: Template::parse(&rd.good_text).map_err(|e| schema(&rloc, e))?,
                    bad_text: Template::parse(&rd.bad_text).map_err(|e| schema(&rloc, e))?,
                    community,
                });
            }
            concepts.push(Concept {
                id: cd.id,
                name: cd.name,
                explanations,
                depends_on: cd.depends_on,
                frames,
                rules,
            });
        }
        let mut onto = Ontology {
            profiles: doc.profiles,
            concepts,
            index,
            rules: HashMap::new(),
        };
        onto.link()?;
        Ok(onto)
    }

    fn link(&mut self) -> Result<(), OntologyError> {
        for (ci, concept) in self.concepts.iter().enumerate() {
            for dep in &concept.depends_on {
                if !self.index.contains_key(dep) {
                    return Err(OntologyError::DanglingRef {
                        concept: concept.id.clone(),
                        reference: dep.clone(),
                    });
                }
            }
            let templates = concept
                .explanations
                .values()
                .chain(concept.rules.iter().flat_map(|r| [&r.good_text, &r.bad_text]));
            for tpl in templates {
                if let Some(bad) = tpl.refs().find(|id| !self.index.contains_key(*id)) {
                    return Err(OntologyError::DanglingRef {
                        concept: concept.id.clone(),
                        reference: format!("{{ref:{bad}}}"),
                    });
                }
            }
            for (ri, rule) in concept.rules.iter().enumerate() {
                if self.rules.insert(rule.id.clone(), (ci, ri)).is_some() {
                    return Err(schema(format!("rule `{}`", rule.id), "duplicate rule id"));
                }
            }
        }
        // rule syntax spells concept ids with underscores
        let lookup: Vec<(String, String)> = self
            .concepts
            .iter()
            .map(|c| (c.id.clone(), c.id.replace('-', "_")))
            .collect();
        for concept in &mut self.concepts {
            for rule in &mut concept.rules {
                rule.predicate
                    .map_concepts(&mut |name| {
                        lookup
                            .iter()
                            .find(|(id, alias)| id == name || alias == name)
                            .map(|(id, _)| id.clone())
                    })
                    .map_err(|name| OntologyError::DanglingRef {
                        concept: concept.id.clone(),
                        reference: format!("{name}(...)"),
                    })?;
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<(), OntologyError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.concepts.len()];
        let mut path = Vec::new();
        for start in 0..self.concepts.len() {
            self.visit(start, &mut state, &mut path)?;
        }
        Ok(())
    }

    fn visit(&self, i: usize, state: &mut [u8], path: &mut Vec<usize>) -> Result<(), OntologyError> {
        match state[i] {
            2 => return Ok(()),
            1 => {
                let start = path.iter().position(|&p| p == i).expect("on stack");
                let mut cycle: Vec<String> = path[start..].iter().map(|&p| self.concepts[p].id.clone()).collect();
                cycle.push(self.concepts[i].id.clone());
                return Err(OntologyError::DependencyCycle { path: cycle });
            }
            _ => {}
        }
        state[i] = 1;
        path.push(i);
        for dep in &self.concepts[i].depends_on {
            self.visit(self.index[dep], state, path)?;
        }
        path.pop();
        state[i] = 2;
        Ok(())
    }
}

pub fn load_ontology(path: &Path) -> Result<Ontology, OntologyError> {
    let text = std::fs::read_to_string(path).map_err(|source| OntologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ontology::from_json(&text)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyDoc {
    version: u32,
    profiles: Profiles,
    concepts: Vec<ConceptDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptDoc {
    id: String,
    name: String,
    #[serde(default)]
    explanations: BTreeMap<String, String>,
    #[serde(default)]
    depends_on: Vec<String>,
    #[serde(default)]
    frames: Vec<FrameDoc>,
    #[serde(default)]
    rules: Vec<RuleDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDoc {
    id: String,
    name: String,
    #[serde(default)]
    variants: Vec<VariantSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    id: String,
    mode: RuleMode,
    predicate: String,
    good_text: String,
    bad_text: String,
    #[serde(default)]
    community: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(concepts: &str) -> String {
        format!(r#"{{"version":1,"profiles":{{"default":{{"p_min_cover":0.95}},"strict":{{"p_min_cover":"1.00"}}}},"concepts":[{concepts}]}}"#)
    }

    #[test]
    fn weights_are_distinct_and_ordered() {
        let order = ExplanationType::by_relevance();
        assert_eq!(order[0], ExplanationType::Definition);
        assert_eq!(order[1], ExplanationType::AssessmentOfValue);
        assert_eq!(order[6], ExplanationType::History);
        for w in order.windows(2) {
            assert!(w[0].weight() > w[1].weight());
        }
        assert_eq!(ExplanationType::Definition.weight().to_string(), "71.8");
    }

    #[test]
    fn dependency_cycle() {
        let text = doc(r#"{"id":"a","name":"A","depends_on":["b"]},{"id":"b","name":"B","depends_on":["a"]}"#);
        match Ontology::from_json(&text).unwrap_err() {
            OntologyError::DependencyCycle { path } => assert_eq!(path, ["a", "b", "a"]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn dangling_placeholder() {
        let text = doc(r#"{"id":"a","name":"A","explanations":{"definition":"see {ref:nonexistent}"}}"#);
        match Ontology::from_json(&text).unwrap_err() {
            OntologyError::DanglingRef { concept, reference } => {
                assert_eq!(concept, "a");
                assert_eq!(reference, "{ref:nonexistent}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schema_errors_carry_location() {
        let err = Ontology::from_json("{\"version\":1,\n\"profiles\":").unwrap_err();
        assert!(matches!(err, OntologyError::Schema { ref location, .. } if location.starts_with("line 2")));
        let no_default = r#"{"version":1,"profiles":{},"concepts":[]}"#;
        assert!(matches!(Ontology::from_json(no_default), Err(OntologyError::Schema { .. })));
        let bad_rule = doc(
            r#"{"id":"a","name":"A","rules":[{"id":"r","mode":"value","predicate":"value > prev_value","good_text":"g","bad_text":"b"}]}"#,
        );
        assert!(matches!(Ontology::from_json(&bad_rule), Err(OntologyError::Schema { .. })));
        let bad_param = doc(
            r#"{"id":"a","name":"A","rules":[{"id":"r","mode":"value","predicate":"value > p_missing","good_text":"g","bad_text":"b"}]}"#,
        );
        assert!(matches!(Ontology::from_json(&bad_param), Err(OntologyError::Schema { .. })));
        let bad_profile = doc(
            r#"{"id":"a","name":"A","rules":[{"id":"r","mode":"value","predicate":"value > 0","good_text":"g","bad_text":"b","community":"nope"}]}"#,
        );
        assert!(matches!(Ontology::from_json(&bad_profile), Err(OntologyError::Schema { .. })));
    }

    #[test]
    fn rule_function_names_resolve_to_concepts() {
        let text = doc(
            r#"{"id":"total-expenses","name":"Total Expenses"},
               {"id":"revenues","name":"Revenues"},
               {"id":"statement","name":"Statement","rules":[{"id":"inv","mode":"invariant",
                 "predicate":"revenues(arg) > total_expenses(arg)","good_text":"ok","bad_text":"loss"}]}"#,
        );
        let onto = Ontology::from_json(&text).unwrap();
        let rule = onto.rule("inv").unwrap();
        assert_eq!(rule.predicate.applied_concepts(), ["revenues", "total-expenses"]);
        assert_eq!(rule.concept_id, "statement");
        let dangling = doc(
            r#"{"id":"s","name":"S","rules":[{"id":"inv","mode":"invariant","predicate":"ghost(arg) > 0","good_text":"ok","bad_text":"no"}]}"#,
        );
        assert!(matches!(Ontology::from_json(&dangling), Err(OntologyError::DanglingRef { .. })));
    }

    #[test]
    fn profile_fallback() {
        let onto = Ontology::from_json(&doc("")).unwrap();
        assert_eq!(onto.param("strict", "p_min_cover").unwrap().to_string(), "1.00");
        assert_eq!(onto.param("default", "p_min_cover").unwrap().to_string(), "0.95");
        assert_eq!(onto.param("unknown", "p_min_cover").unwrap().to_string(), "0.95");
    }

    #[test]
    fn frames_and_variants() {
        let text = doc(
            r#"{"id":"s","name":"S","frames":[{"id":"prognosis","name":"prognosis function","variants":[
                {"label":"linear","lagrange":1},{"label":"quadratic","lagrange":2},{"label":"trend","formula":"2 * value - prev_value"}]}]}"#,
        );
        let onto = Ontology::from_json(&text).unwrap();
        let frame = onto.concept("s").unwrap().frame("prognosis").unwrap();
        assert_eq!(frame.variant("quadratic"), Some(&VariantFn::LagrangeExtrapolation(2)));
        let dup = doc(r#"{"id":"s","name":"S","frames":[{"id":"f","name":"f","variants":[{"label":"x","lagrange":1},{"label":"x","lagrange":2}]}]}"#);
        assert!(Ontology::from_json(&dup).is_err());
        let order3 = doc(r#"{"id":"s","name":"S","frames":[{"id":"f","name":"f","variants":[{"label":"x","lagrange":3}]}]}"#);
        assert!(Ontology::from_json(&order3).is_err());
    }
}
