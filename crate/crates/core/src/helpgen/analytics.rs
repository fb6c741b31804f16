use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use crate::ontology::ExplanationType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationCount {
    #[serde(rename = "type")]
    pub kind: ExplanationType,
    pub count: u32,
}

/// A knowledge item and the explanations experts gave for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedItem {
    pub id: String,
    pub explanations: Vec<ExplanationCount>,
}

impl AnnotatedItem {
    /// Types with a positive count.
    pub fn types(&self) -> BTreeSet<ExplanationType> {
        self.explanations.iter().filter(|e| e.count > 0).map(|e| e.kind).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub items: Vec<AnnotatedItem>,
}

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed annotation: {0}")]
    Format(String),
    #[error("the annotation has no items")]
    Empty,
}

impl Annotation {
    pub fn from_json(text: &str) -> Result<Self, AnalyticsError> {
        serde_json::from_str(text).map_err(|e| AnalyticsError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AnalyticsError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnalyticsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn total_explanations(&self) -> u64 {
        self.items
            .iter()
            .flat_map(|i| &i.explanations)
            .map(|e| u64::from(e.count))
            .sum()
    }
}

/// A named set of explanation types some system can answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityProfile {
    pub name: String,
    pub types: BTreeSet<ExplanationType>,
}

impl CapabilityProfile {
    pub fn new(name: &str, types: &[ExplanationType]) -> Self {
        Self {
            name: name.to_string(),
            types: types.iter().copied().collect(),
        }
    }
}

pub fn capability_presets() -> Vec<CapabilityProfile> {
    use ExplanationType::*;
    vec![
        CapabilityProfile::new("excel", &[Formula]),
        CapabilityProfile::new("sachs-implemented", &[Definition, Formula]),
        CapabilityProfile::new("sachs-specified", &[Definition, Purpose, Formula, Provenance]),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCoverage {
    #[serde(rename = "type")]
    pub kind: ExplanationType,
    pub item_count: u32,
    /// Percent of items, one decimal.
    #[serde(with = "crate::num")]
    pub rate: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityCoverage {
    pub name: String,
    pub answerable: u64,
    /// Percent of all explanations, whole number.
    #[serde(with = "crate::num")]
    pub percent: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total_items: u32,
    pub total_explanations: u64,
    pub types: Vec<TypeCoverage>,
    pub capabilities: Vec<CapabilityCoverage>,
}

fn percent(part: u64, whole: u64, dp: u32) -> Decimal {
    (Decimal::from(part) * Decimal::ONE_HUNDRED / Decimal::from(whole))
        .round_dp_with_strategy(dp, RoundingStrategy::MidpointAwayFromZero)
}

pub fn coverage(annotation: &Annotation, profiles: &[CapabilityProfile]) -> Result<CoverageReport, AnalyticsError> {
    let total_items = annotation.items.len() as u32;
    if total_items == 0 {
        return Err(AnalyticsError::Empty);
    }
    let total_explanations = annotation.total_explanations();
    let item_types: Vec<BTreeSet<ExplanationType>> = annotation.items.iter().map(AnnotatedItem::types).collect();
    let types = ExplanationType::ALL
        .into_iter()
        .map(|kind| {
            let item_count = item_types.iter().filter(|t| t.contains(&kind)).count() as u32;
            TypeCoverage {
                kind,
                item_count,
                rate: percent(item_count.into(), total_items.into(), 1),
            }
        })
        .collect();
    let capabilities = profiles
        .iter()
        .map(|p| {
            let answerable: u64 = annotation
                .items
                .iter()
                .flat_map(|i| &i.explanations)
                .filter(|e| p.types.contains(&e.kind))
                .map(|e| u64::from(e.count))
                .sum();
            CapabilityCoverage {
                name: p.name.clone(),
                answerable,
                percent: if total_explanations == 0 {
                    Decimal::ZERO
                } else {
                    percent(answerable, total_explanations, 0)
                },
            }
        })
        .collect();
    Ok(CoverageReport {
        total_items,
        total_explanations,
        types,
        capabilities,
    })
}

impl CoverageReport {
    pub fn rate(&self, kind: ExplanationType) -> Decimal {
        self.types[kind.index()].rate
    }

    pub fn capability(&self, name: &str) -> Option<&CapabilityCoverage> {
        self.capabilities.iter().find(|c| c.name == name)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>6} {:>7}", "type", "items", "rate");
        for t in &self.types {
            let _ = writeln!(out, "{:<24} {:>6} {:>6}%", t.kind.title(), t.item_count, t.rate);
        }
        let _ = writeln!(out, "{:<24} {:>6}", "items", self.total_items);
        let _ = writeln!(out, "{:<24} {:>6}", "explanations", self.total_explanations);
        if !self.capabilities.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<24} {:>6} {:>7}", "capability", "answer", "covers");
            for c in &self.capabilities {
                let _ = writeln!(out, "{:<24} {:>6} {:>6}%", c.name, c.answerable, c.percent);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub a: ExplanationType,
    pub b: ExplanationType,
    pub count: u32,
    /// `count / min(items of a, items of b)`; zero when either type never occurs.
    pub ratio: f64,
}

/// `counts[i][j]`: items carrying both type i and type j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub counts: [[u32; 7]; 7],
}

pub fn cooccurrence(annotation: &Annotation) -> Result<CooccurrenceMatrix, AnalyticsError> {
    if annotation.items.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let mut counts = [[0u32; 7]; 7];
    for item in &annotation.items {
        let types = item.types();
        for a in &types {
            for b in &types {
                counts[a.index()][b.index()] += 1;
            }
        }
    }
    Ok(CooccurrenceMatrix { counts })
}

impl CooccurrenceMatrix {
    pub fn get(&self, a: ExplanationType, b: ExplanationType) -> u32 {
        self.counts[a.index()][b.index()]
    }

    /// Off-diagonal pairs ranked by ratio, then count, then type order.
    pub fn top_pairs(&self, k: usize) -> Vec<PairScore> {
        let all = ExplanationType::ALL;
        let mut pairs = Vec::new();
        for (i, &a) in all.iter().enumerate() {
            for &b in &all[i + 1..] {
                let count = self.get(a, b);
                let base = self.get(a, a).min(self.get(b, b));
                let ratio = if base == 0 { 0.0 } else { f64::from(count) / f64::from(base) };
                pairs.push(PairScore { a, b, count, ratio });
            }
        }
        // stable sort keeps type order among ties
        pairs.sort_by(|x, y| y.ratio.total_cmp(&x.ratio).then(y.count.cmp(&x.count)));
        pairs.truncate(k);
        pairs
    }

    pub fn to_table(&self) -> String {
        let abbrev = ["Def", "Pur", "AoP", "AoV", "For", "Prov", "Hist"];
        let mut out = format!("{:<5}", "");
        for a in abbrev {
            let _ = write!(out, "{a:>5}");
        }
        out.push('\n');
        for (row, name) in self.counts.iter().zip(abbrev) {
            let _ = write!(out, "{name:<5}");
            for c in row {
                let _ = write!(out, "{c:>5}");
            }
            out.push('\n');
        }
        out
    }
}
