//! Instantiated help texts and explanation-type analytics.

mod analytics;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use analytics::{
    capability_presets, cooccurrence, coverage, AnalyticsError, Annotation, AnnotatedItem, CapabilityCoverage,
    CapabilityProfile, CooccurrenceMatrix, CoverageReport, ExplanationCount, PairScore, TypeCoverage,
};

use crate::arg::Arg;
use crate::interpretation::{fallback_labels, FallbackLabels};
use crate::ontology::{Concept, ExplanationType};
use crate::text::TextFiller;
use crate::workbook::{CellAddress, Value};

/// How much text a help request or graph node shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Label,
    Comment,
    Explanation,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Label => "label",
            Granularity::Comment => "comment",
            Granularity::Explanation => "explanation",
        })
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "label" => Ok(Granularity::Label),
            "comment" => Ok(Granularity::Comment),
            "explanation" => Ok(Granularity::Explanation),
            _ => Err(format!("unknown granularity `{s}` (label, comment or explanation)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelpText {
    #[serde(rename = "type")]
    pub kind: ExplanationType,
    pub text: String,
}

/// Help for one block containing the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelpEntry {
    #[serde(rename = "block")]
    pub block_id: String,
    #[serde(rename = "concept")]
    pub concept_id: String,
    pub arg: Arg,
    pub value: Value,
    pub label: String,
    pub texts: Vec<HelpText>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HelpBundle {
    pub addr: CellAddress,
    pub granularity: Granularity,
    pub entries: Vec<HelpEntry>,
    /// Grid labels, present only when no block contains the cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackLabels>,
}

impl HelpBundle {
    /// Every text the bundle would show, labels included.
    pub fn all_texts(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.push(e.label.as_str());
            out.extend(e.texts.iter().map(|t| t.text.as_str()));
        }
        if let Some(f) = &self.fallback {
            out.extend(f.row_header.as_deref());
            out.extend(f.column_header.as_deref());
        }
        out
    }
}

/// Explanation texts of a concept at the given granularity. Comment shows the
/// definition; explanation shows the requested types (all when `types` is
/// empty) by descending weight, each prefixed by its type name. Types the
/// concept lacks are skipped.
pub fn concept_texts(
    filler: &TextFiller,
    concept: &Concept,
    arg: Option<&Arg>,
    value: Option<&Value>,
    types: &[ExplanationType],
    granularity: Granularity,
) -> Vec<HelpText> {
    match granularity {
        Granularity::Label => Vec::new(),
        Granularity::Comment => concept
            .explanations
            .get(&ExplanationType::Definition)
            .map(|t| HelpText {
                kind: ExplanationType::Definition,
                text: filler.render(t, arg, value),
            })
            .into_iter()
            .collect(),
        Granularity::Explanation => ExplanationType::by_relevance()
            .into_iter()
            .filter(|k| types.is_empty() || types.contains(k))
            .filter_map(|kind| {
                let t = concept.explanations.get(&kind)?;
                Some(HelpText {
                    kind,
                    text: format!("{}: {}", kind.title(), filler.render(t, arg, value)),
                })
            })
            .collect(),
    }
}

pub fn help_for(filler: &TextFiller, addr: CellAddress, types: &[ExplanationType], granularity: Granularity) -> HelpBundle {
    let hits = filler.interpretation.hits(addr, filler.evaluation);
    let entries: Vec<HelpEntry> = hits
        .into_iter()
        .map(|hit| {
            let block = filler.interpretation.block(&hit.block_id).expect("hit names a bound block");
            let label = filler.render(&block.label_template, Some(&hit.arg), Some(&hit.value));
            let texts = filler
                .ontology
                .concept(&hit.concept_id)
                .map(|c| concept_texts(filler, c, Some(&hit.arg), Some(&hit.value), types, granularity))
                .unwrap_or_default();
            HelpEntry {
                block_id: hit.block_id,
                concept_id: hit.concept_id,
                arg: hit.arg,
                value: hit.value,
                label,
                texts,
            }
        })
        .collect();
    let fallback = entries.is_empty().then(|| fallback_labels(filler.evaluation, addr));
    HelpBundle {
        addr,
        granularity,
        entries,
        fallback,
    }
}
