//! Binding of workbook regions to ontology concepts.
//!
//! A functional block is a one-dimensional run of cells together with a
//! parallel legend (for example the year row). Reading the legend as
//! arguments and the region as values yields the block's intended function.

use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::arg::Arg;
use crate::ontology::Template;
use crate::workbook::{CellAddress, CellRange, Evaluation, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Region and legend are row segments over the same columns.
    Row,
    /// Region and legend are column segments over the same rows.
    Column,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalBlock {
    pub id: String,
    pub concept_id: String,
    pub region: CellRange,
    pub legend: CellRange,
    pub axis: Axis,
    pub label_template: Template,
}

impl FunctionalBlock {
    /// Region cells paired with their legend cells, in legend order.
    pub fn cells(&self) -> impl Iterator<Item = (CellAddress, CellAddress)> + '_ {
        self.region.cells().zip(self.legend.cells())
    }

    fn check_shape(&self) -> Result<(), String> {
        let (region_line, legend_line) = match self.axis {
            Axis::Row => (self.region.height(), self.legend.height()),
            Axis::Column => (self.region.width(), self.legend.width()),
        };
        if region_line != 1 || legend_line != 1 {
            return Err(format!("region and legend must be single {:?} segments", self.axis));
        }
        let aligned = match self.axis {
            Axis::Row => {
                self.region.start().column() == self.legend.start().column()
                    && self.region.end().column() == self.legend.end().column()
            }
            Axis::Column => {
                self.region.start().row() == self.legend.start().row()
                    && self.region.end().row() == self.legend.end().row()
            }
        };
        if !aligned {
            return Err(format!(
                "legend {} is not parallel to region {} (same length, same {})",
                self.legend,
                self.region,
                match self.axis {
                    Axis::Row => "columns",
                    Axis::Column => "rows",
                }
            ));
        }
        Ok(())
    }

    fn shifted_rows(&self, rows: i64) -> Option<Self> {
        Some(Self {
            region: self.region.offset(0, rows)?,
            legend: self.legend.offset(0, rows)?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MappingError {
    #[error("cannot read mapping {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("mapping schema error at {location}: {reason}")]
    Schema { location: String, reason: String },
    #[error("block `{block}`: {reason}")]
    Block { block: String, reason: String },
}

/// The interpretation mapping: every functional block, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub blocks: Vec<FunctionalBlock>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingDoc {
    version: u32,
    blocks: Vec<BlockDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    id: String,
    concept: String,
    region: CellRange,
    legend: CellRange,
    axis: Axis,
    label_template: Template,
}

impl Mapping {
    pub fn from_json(text: &str) -> Result<Self, MappingError> {
        let doc: MappingDoc = serde_json::from_str(text).map_err(|e| MappingError::Schema {
            location: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        })?;
        if doc.version != 1 {
            return Err(MappingError::Schema {
                location: "version".into(),
                reason: format!("unsupported version {}", doc.version),
            });
        }
        let mut blocks: Vec<FunctionalBlock> = Vec::with_capacity(doc.blocks.len());
        for bd in doc.blocks {
            if blocks.iter().any(|b| b.id == bd.id) {
                return Err(MappingError::Block {
                    block: bd.id,
                    reason: "duplicate block id".into(),
                });
            }
            let block = FunctionalBlock {
                id: bd.id,
                concept_id: bd.concept,
                region: bd.region,
                legend: bd.legend,
                axis: bd.axis,
                label_template: bd.label_template,
            };
            block.check_shape().map_err(|reason| MappingError::Block {
                block: block.id.clone(),
                reason,
            })?;
            blocks.push(block);
        }
        Ok(Self { blocks })
    }

    pub fn load(path: &Path) -> Result<Self, MappingError> {
        let text = std::fs::read_to_string(path).map_err(|e| MappingError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let doc = MappingDoc {
            version: 1,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDoc {
                    id: b.id.clone(),
                    concept: b.concept_id.clone(),
                    region: b.region,
                    legend: b.legend,
                    axis: b.axis,
                    label_template: b.label_template.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    /// The same mapping re-authored for a sheet moved down by `rows`.
    pub fn shifted_rows(&self, rows: i64) -> Option<Self> {
        Some(Self {
            blocks: self.blocks.iter().map(|b| b.shifted_rows(rows)).collect::<Option<_>>()?,
        })
    }
}

/// One argument/value pair of an intended function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub addr: CellAddress,
    pub arg: Arg,
    #[serde(with = "crate::num")]
    pub value: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntendedFunction {
    pub block_id: String,
    pub pairs: Vec<Pair>,
}

impl IntendedFunction {
    pub fn at(&self, arg: &Arg) -> Option<&Pair> {
        self.pairs.iter().find(|p| &p.arg == arg)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpretationError {
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("cell {0} of the block holds no number")]
    MissingValue(CellAddress),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub block_id: String,
    pub concept_id: String,
    pub arg: Arg,
    pub value: Value,
}

/// Grid labels shown for cells outside every block.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct FallbackLabels {
    pub row_header: Option<String>,
    pub column_header: Option<String>,
}

/// A mapping whose legends have been read from an evaluated workbook.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    blocks: Vec<FunctionalBlock>,
    args: Vec<Vec<Arg>>,
}

impl Interpretation {
    /// Reads every legend; legends must be non-empty and pairwise distinct.
    pub fn bind(mapping: &Mapping, evaluation: &Evaluation) -> Result<Self, MappingError> {
        let mut args = Vec::with_capacity(mapping.blocks.len());
        for block in &mapping.blocks {
            let mut block_args: Vec<Arg> = Vec::new();
            for addr in block.legend.cells() {
                let arg = Arg::from_value(evaluation.get(addr)).ok_or_else(|| MappingError::Block {
                    block: block.id.clone(),
                    reason: format!("legend cell {addr} is empty"),
                })?;
                if block_args.contains(&arg) {
                    return Err(MappingError::Block {
                        block: block.id.clone(),
                        reason: format!("legend value {arg} repeats"),
                    });
                }
                block_args.push(arg);
            }
            args.push(block_args);
        }
        Ok(Self {
            blocks: mapping.blocks.clone(),
            args,
        })
    }

    pub fn blocks(&self) -> &[FunctionalBlock] {
        &self.blocks
    }

    pub fn block(&self, id: &str) -> Option<&FunctionalBlock> {
        self.blocks.iter().find(|b| b.id == id)
    }

    fn index(&self, id: &str) -> Result<usize, InterpretationError> {
        self.blocks
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| InterpretationError::UnknownBlock(id.to_string()))
    }

    /// Legend arguments of a block, in legend order.
    pub fn args(&self, block_id: &str) -> Result<&[Arg], InterpretationError> {
        Ok(&self.args[self.index(block_id)?])
    }

    pub fn blocks_for_concept<'a>(&'a self, concept_id: &'a str) -> impl Iterator<Item = &'a FunctionalBlock> + 'a {
        self.blocks.iter().filter(move |b| b.concept_id == concept_id)
    }

    pub fn intended_function(&self, block_id: &str, evaluation: &Evaluation) -> Result<IntendedFunction, InterpretationError> {
        let i = self.index(block_id)?;
        let block = &self.blocks[i];
        let pairs = block
            .region
            .cells()
            .zip(&self.args[i])
            .map(|(addr, arg)| match evaluation.get(addr) {
                Value::Number(n) => Ok(Pair {
                    addr,
                    arg: arg.clone(),
                    value: *n,
                }),
                _ => Err(InterpretationError::MissingValue(addr)),
            })
            .collect::<Result<_, _>>()?;
        Ok(IntendedFunction {
            block_id: block.id.clone(),
            pairs,
        })
    }

    /// The first block (mapping order) of `concept_id` whose legend contains `arg`,
    /// with the matching region cell.
    pub fn locate(&self, concept_id: &str, arg: &Arg) -> Option<(&FunctionalBlock, CellAddress)> {
        self.blocks
            .iter()
            .zip(&self.args)
            .filter(|(b, _)| b.concept_id == concept_id)
            .find_map(|(b, args)| {
                let pos = args.iter().position(|a| a == arg)?;
                Some((b, b.region.cells().nth(pos)?))
            })
    }

    /// Numeric value of a concept at `arg`, if some block interprets it.
    pub fn concept_value(&self, concept_id: &str, arg: &Arg, evaluation: &Evaluation) -> Option<Decimal> {
        let (_, addr) = self.locate(concept_id, arg)?;
        evaluation.get(addr).as_number()
    }

    /// Every block containing `addr`, in mapping order.
    pub fn hits(&self, addr: CellAddress, evaluation: &Evaluation) -> Vec<Hit> {
        self.blocks
            .iter()
            .zip(&self.args)
            .filter_map(|(block, args)| {
                let pos = block.region.cells().position(|a| a == addr)?;
                Some(Hit {
                    block_id: block.id.clone(),
                    concept_id: block.concept_id.clone(),
                    arg: args[pos].clone(),
                    value: evaluation.get(addr).clone(),
                })
            })
            .collect()
    }
}

/// Row header: nearest text cell to the left. Column header: nearest cell above
/// holding text or a whole number (such as a year).
pub fn fallback_labels(evaluation: &Evaluation, addr: CellAddress) -> FallbackLabels {
    let row_header = (1..addr.column()).rev().find_map(|col| {
        let a = CellAddress::new(col, addr.row()).ok()?;
        match evaluation.get(a) {
            Value::Text(t) => Some(t.clone()),
            _ => None,
        }
    });
    let column_header = (1..addr.row()).rev().find_map(|row| {
        let a = CellAddress::new(addr.column(), row).ok()?;
        match evaluation.get(a) {
            Value::Text(t) => Some(t.clone()),
            Value::Number(n) if n.fract().is_zero() => Some(n.normalize().to_string()),
            _ => None,
        }
    });
    FallbackLabels {
        row_header,
        column_header,
    }
}
