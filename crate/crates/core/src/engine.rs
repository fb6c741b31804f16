//! A loaded workbook, ontology and mapping, with every operation on them.

use std::path::Path;

use rust_decimal::prelude::ToPrimitive;
use serde::Serialize;

use crate::arg::Arg;
use crate::assessment::{AssessError, AssessmentReport, Assessor, TraceNode};
use crate::depgraph::{self, ConceptGraph, GraphError};
use crate::helpgen::{self, Granularity, HelpBundle};
use crate::interpretation::{fallback_labels, FallbackLabels, Interpretation, InterpretationError, Mapping, MappingError};
use crate::ontology::{load_ontology, Concept, ExplanationType, Ontology, OntologyError, VariantError, VariantFn};
use crate::text::TextFiller;
use crate::workbook::{evaluate, load_workbook, CellAddress, EvalError, Evaluation, LoadError, Value, Workbook, WorkbookFormat};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Workbook(#[from] LoadError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("block `{block}`: {reason}")]
    Inconsistent { block: String, reason: String },
}

#[derive(Debug, thiserror::Error)]
pub enum VariantRequestError {
    #[error(transparent)]
    Interpretation(#[from] InterpretationError),
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("frame `{frame}` has no variant `{label}`")]
    UnknownVariant { frame: String, label: String },
    #[error("`{0}` is not a numeric argument")]
    NonNumericArg(Arg),
    #[error(transparent)]
    Variant(#[from] VariantError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedHit {
    pub block: String,
    pub concept: String,
    pub name: String,
    pub arg: Arg,
    pub value: Value,
    pub label: String,
}

/// What is known about a single cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResolution {
    pub addr: CellAddress,
    pub value: Value,
    pub hits: Vec<ResolvedHit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackLabels>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResult {
    pub block: String,
    pub function: String,
    pub target: Arg,
    pub value: f64,
    /// Samples the variant was computed from, as (argument, value).
    pub samples: Vec<(f64, f64)>,
    /// The sheet's own value at the target, when the block covers it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actual: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    workbook: Workbook,
    evaluation: Evaluation,
    ontology: Ontology,
    mapping: Mapping,
    interpretation: Interpretation,
}

impl Engine {
    /// Evaluates the workbook, binds the mapping and checks that every block
    /// names a known concept and every label reference resolves.
    pub fn new(workbook: Workbook, ontology: Ontology, mapping: Mapping) -> Result<Self, EngineError> {
        let evaluation = evaluate(&workbook)?;
        let interpretation = Interpretation::bind(&mapping, &evaluation)?;
        for block in interpretation.blocks() {
            let inconsistent = |reason: String| EngineError::Inconsistent {
                block: block.id.clone(),
                reason,
            };
            if ontology.concept(&block.concept_id).is_none() {
                return Err(inconsistent(format!("unknown concept `{}`", block.concept_id)));
            }
            for r in block.label_template.refs() {
                if ontology.concept(r).is_none() {
                    return Err(inconsistent(format!("label refers to unknown concept `{r}`")));
                }
            }
        }
        Ok(Self {
            workbook,
            evaluation,
            ontology,
            mapping,
            interpretation,
        })
    }

    pub fn load(workbook: &Path, ontology: &Path, mapping: &Path) -> Result<Self, EngineError> {
        let wb = load_workbook(workbook, WorkbookFormat::from_path(workbook))?;
        let onto = load_ontology(ontology)?;
        let map = Mapping::load(mapping)?;
        Self::new(wb, onto, map)
    }

    pub fn workbook(&self) -> &Workbook {
        &self.workbook
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn interpretation(&self) -> &Interpretation {
        &self.interpretation
    }

    /// The same corpus with sheet and mapping moved down by `rows`.
    pub fn shifted_rows(&self, rows: i64) -> Option<Result<Self, EngineError>> {
        let sheets = self
            .workbook
            .sheets()
            .iter()
            .map(|s| s.shifted_rows(rows))
            .collect::<Option<Vec<_>>>()?;
        let mapping = self.mapping.shifted_rows(rows)?;
        let workbook = match Workbook::new(sheets) {
            Ok(w) => w,
            Err(e) => return Some(Err(LoadError::Workbook(e).into())),
        };
        Some(Self::new(workbook, self.ontology.clone(), mapping))
    }

    pub fn filler(&self) -> TextFiller<'_> {
        TextFiller {
            ontology: &self.ontology,
            interpretation: &self.interpretation,
            evaluation: &self.evaluation,
        }
    }

    /// Rule runner; `profile` overrides each rule's community.
    pub fn assessor<'a>(&'a self, profile: Option<&'a str>) -> Assessor<'a> {
        Assessor {
            ontology: &self.ontology,
            interpretation: &self.interpretation,
            evaluation: &self.evaluation,
            profile,
        }
    }

    pub fn resolve(&self, addr: CellAddress) -> CellResolution {
        let filler = self.filler();
        let hits: Vec<ResolvedHit> = self
            .interpretation
            .hits(addr, &self.evaluation)
            .into_iter()
            .map(|h| {
                let block = self.interpretation.block(&h.block_id).expect("hit names a bound block");
                ResolvedHit {
                    label: filler.render(&block.label_template, Some(&h.arg), Some(&h.value)),
                    name: self.ontology.concept(&h.concept_id).map(|c| c.name.clone()).unwrap_or_default(),
                    block: h.block_id,
                    concept: h.concept_id,
                    arg: h.arg,
                    value: h.value,
                }
            })
            .collect();
        let fallback = hits.is_empty().then(|| fallback_labels(&self.evaluation, addr));
        CellResolution {
            addr,
            value: self.evaluation.get(addr).clone(),
            hits,
            fallback,
        }
    }

    pub fn help(&self, addr: CellAddress, types: &[ExplanationType], granularity: Granularity) -> HelpBundle {
        helpgen::help_for(&self.filler(), addr, types, granularity)
    }

    pub fn assess(&self, block: &str, rule: &str, profile: Option<&str>) -> Result<AssessmentReport, AssessError> {
        self.assessor(profile).assess(block, rule)
    }

    pub fn assess_values(&self, block: &str, rule: &str) -> Result<AssessmentReport, AssessError> {
        self.assessor(None).assess_values(block, rule)
    }

    pub fn assess_domain(&self, block: &str, rule: &str) -> Result<AssessmentReport, AssessError> {
        self.assessor(None).assess_domain(block, rule)
    }

    pub fn check_invariant(&self, rule: &str) -> Result<AssessmentReport, AssessError> {
        self.assessor(None).check_invariant(rule)
    }

    pub fn trace(&self, addr: CellAddress, depth: usize) -> Result<TraceNode, AssessError> {
        self.assessor(None).trace(addr, depth)
    }

    /// Node text for a concept, instantiated at `arg` when given.
    pub fn describe(&self, concept: &Concept, granularity: Granularity, arg: Option<&Arg>) -> String {
        let filler = self.filler();
        let value = arg
            .and_then(|a| self.interpretation.concept_value(&concept.id, a, &self.evaluation))
            .map(Value::Number);
        let texts = helpgen::concept_texts(&filler, concept, arg, value.as_ref(), &[], granularity);
        let mut parts = vec![concept.name.clone()];
        parts.extend(texts.into_iter().map(|t| t.text));
        parts.join("\n")
    }

    fn describer<'a>(&'a self, arg: Option<&'a Arg>) -> impl Fn(&Concept, Granularity) -> String + 'a {
        move |c, g| self.describe(c, g, arg)
    }

    pub fn graph(&self, concept: &str, levels: usize) -> Result<ConceptGraph, GraphError> {
        depgraph::graph_root(&self.ontology, concept, levels, &self.describer(None))
    }

    /// Graph rooted at the concept of the first block containing `addr`.
    pub fn graph_for_cell(&self, addr: CellAddress, levels: usize) -> Result<ConceptGraph, GraphError> {
        let hit = self
            .interpretation
            .hits(addr, &self.evaluation)
            .into_iter()
            .next()
            .ok_or_else(|| GraphError::UnknownConcept(format!("(no concept at {addr})")))?;
        let mut graph = depgraph::graph_root(&self.ontology, &hit.concept_id, levels, &self.describer(Some(&hit.arg)))?;
        graph.arg = Some(hit.arg);
        Ok(graph)
    }

    pub fn expand(&self, graph: &ConceptGraph, node: &str) -> Result<ConceptGraph, GraphError> {
        depgraph::expand(&self.ontology, graph, node, &self.describer(graph.arg.as_ref()))
    }

    pub fn set_granularity(&self, graph: &ConceptGraph, node: &str, granularity: Granularity) -> Result<ConceptGraph, GraphError> {
        depgraph::set_granularity(&self.ontology, graph, node, granularity, &self.describer(graph.arg.as_ref()))
    }

    pub fn trace_graph(&self, trace: &TraceNode) -> Result<ConceptGraph, GraphError> {
        depgraph::from_trace(&self.ontology, trace, &self.describer(Some(&trace.arg)))
    }

    /// Runs a frame variant of the block at `target`.
    pub fn variant(&self, block: &str, frame: &str, label: &str, target: &Arg) -> Result<VariantResult, VariantRequestError> {
        let concept_id = &self
            .interpretation
            .block(block)
            .ok_or_else(|| InterpretationError::UnknownBlock(block.to_string()))?
            .concept_id;
        let function = self
            .ontology
            .concept(concept_id)
            .and_then(|c| c.frame(frame))
            .ok_or_else(|| VariantRequestError::UnknownFrame(frame.to_string()))?
            .variant(label)
            .ok_or_else(|| VariantRequestError::UnknownVariant {
                frame: frame.to_string(),
                label: label.to_string(),
            })?;
        self.variant_with(block, function, target)
    }

    /// Samples are the block's pairs before `target` in legend order, or all
    /// pairs when the target lies outside the legend.
    pub fn variant_with(&self, block: &str, function: &VariantFn, target: &Arg) -> Result<VariantResult, VariantRequestError> {
        let numeric = |a: &Arg| {
            a.as_number()
                .and_then(|n| n.to_f64())
                .ok_or_else(|| VariantRequestError::NonNumericArg(a.clone()))
        };
        let x = numeric(target)?;
        let f = self.interpretation.intended_function(block, &self.evaluation)?;
        let cut = f.pairs.iter().position(|p| &p.arg == target).unwrap_or(f.pairs.len());
        let samples = f.pairs[..cut]
            .iter()
            .map(|p| Ok((numeric(&p.arg)?, p.value.to_f64().unwrap_or(f64::NAN))))
            .collect::<Result<Vec<_>, VariantRequestError>>()?;
        let value = crate::ontology::variant_value(function, &samples, x)?;
        Ok(VariantResult {
            block: block.to_string(),
            function: function.to_string(),
            target: target.clone(),
            value,
            samples,
            actual: f.at(target).map(|p| Value::Number(p.value)),
        })
    }

    /// Every text the engine can emit for the corpus: labels and help at all
    /// granularities for every block cell, plus rule texts of every report.
    pub fn all_texts(&self) -> Vec<String> {
        let mut out = Vec::new();
        for block in self.interpretation.blocks() {
            for addr in block.region.cells() {
                for g in [Granularity::Label, Granularity::Comment, Granularity::Explanation] {
                    out.extend(self.help(addr, &[], g).all_texts().into_iter().map(str::to_string));
                }
            }
            for rule in self.ontology.rules().filter(|r| r.concept_id == block.concept_id) {
                if let Ok(report) = self.assess(&block.id, &rule.id, None) {
                    out.extend(report.verdicts.into_iter().map(|v| v.text));
                }
            }
        }
        for concept in self.ontology.concepts() {
            for g in [Granularity::Label, Granularity::Comment, Granularity::Explanation] {
                out.push(self.describe(concept, g, None));
            }
        }
        out
    }
}

/// True when a rendered text still contains placeholder syntax.
pub fn has_placeholder(text: &str) -> bool {
    text.contains('{') || text.contains('}')
}
