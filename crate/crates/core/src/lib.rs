pub mod arg;
pub mod assessment;
pub mod corpus;
pub mod depgraph;
pub mod engine;
pub mod helpgen;
pub mod interpretation;
pub mod num;
pub mod ontology;
pub mod text;
pub mod workbook;

pub use arg::Arg;
pub use assessment::{AssessError, AssessmentReport, Assessor, Color, Judgment, RuleVerdict, TraceNode, Verdict};
pub use depgraph::{ConceptGraph, GraphError, GraphFormat, GraphNode};
pub use engine::{CellResolution, Engine, EngineError, ResolvedHit, VariantRequestError, VariantResult};
pub use helpgen::{Granularity, HelpBundle, HelpEntry, HelpText};
pub use interpretation::{FunctionalBlock, Interpretation, Mapping};
pub use ontology::{ExplanationType, Ontology, RuleMode};
pub use workbook::{CellAddress, CellRange, Evaluation, Value, Workbook};
