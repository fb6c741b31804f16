//! The bundled profit-and-loss corpus and the synthetic annotation set.

use crate::engine::{Engine, EngineError};
use crate::helpgen::{AnalyticsError, Annotation};
use crate::interpretation::Mapping;
use crate::ontology::Ontology;
use crate::workbook::parse_native;

pub const FIG1_WORKBOOK: &str = include_str!("../corpus/fig1.sachs.json");
pub const FIG1_ONTOLOGY: &str = include_str!("../corpus/fig1.onto.json");
pub const FIG1_MAPPING: &str = include_str!("../corpus/fig1.map.json");
pub const FIG5_ANNOTATION: &str = include_str!("../corpus/fig5.annot.json");

/// Engine over the bundled profit-and-loss statement.
pub fn fig1() -> Result<Engine, EngineError> {
    let workbook = parse_native(FIG1_WORKBOOK)?;
    let ontology = Ontology::from_json(FIG1_ONTOLOGY)?;
    let mapping = Mapping::from_json(FIG1_MAPPING)?;
    Engine::new(workbook, ontology, mapping)
}

pub fn fig5_annotation() -> Result<Annotation, AnalyticsError> {
    Annotation::from_json(FIG5_ANNOTATION)
}
