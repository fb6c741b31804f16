use crate::arg::Arg;
use crate::interpretation::Interpretation;
use crate::ontology::{Ontology, Segment, Template};
use crate::workbook::{Evaluation, Value};

/// Fills template placeholders from the loaded corpus.
///
/// `{ref:c}` becomes the concept's name followed by its value at the current
/// argument in parentheses, or just the name when no block supplies a value.
#[derive(Clone, Copy)]
pub struct TextFiller<'a> {
    pub ontology: &'a Ontology,
    pub interpretation: &'a Interpretation,
    pub evaluation: &'a Evaluation,
}

impl TextFiller<'_> {
    pub fn render(&self, template: &Template, arg: Option<&Arg>, value: Option<&Value>) -> String {
        template.render(&mut |seg| match seg {
            Segment::Arg => arg.map_or_else(|| "the given argument".to_string(), |a| a.to_string()),
            Segment::Value => match value {
                Some(v @ (Value::Number(_) | Value::Text(_))) => v.to_string(),
                _ => "its value".to_string(),
            },
            Segment::Ref(id) => {
                let name = self.ontology.concept(id).map_or(id.as_str(), |c| c.name.as_str());
                let value = arg.and_then(|a| self.interpretation.concept_value(id, a, self.evaluation));
                match value {
                    Some(v) => format!("{name} ({})", v.normalize()),
                    None => name.to_string(),
                }
            }
            Segment::Text(t) => t.clone(),
        })
    }
}
