use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    Arg,
    Value,
    Ref(String),
}

/// Help text with `{arg}`, `{value}` and `{ref:<concept-id>}` placeholders.
/// Braces are reserved for placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("template error at offset {offset}: {reason}")]
pub struct TemplateError {
    pub offset: usize,
    pub reason: String,
}

impl Template {
    pub fn parse(src: &str) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut rest = src;
        let mut offset = 0;
        while let Some(open) = rest.find(['{', '}']) {
            if rest.as_bytes()[open] == b'}' {
                return Err(TemplateError {
                    offset: offset + open,
                    reason: "unmatched `}`".into(),
                });
            }
            if open > 0 {
                segments.push(Segment::Text(rest[..open].to_string()));
            }
            let close = rest[open..].find('}').ok_or(TemplateError {
                offset: offset + open,
                reason: "unterminated placeholder".into(),
            })? + open;
            let name = &rest[open + 1..close];
            segments.push(match name {
                "arg" => Segment::Arg,
                "value" => Segment::Value,
                _ => match name.strip_prefix("ref:") {
                    Some(id) if !id.is_empty() && !id.contains('{') => Segment::Ref(id.to_string()),
                    _ => {
                        return Err(TemplateError {
                            offset: offset + open,
                            reason: format!("unknown placeholder `{{{name}}}`"),
                        })
                    }
                },
            });
            offset += close + 1;
            rest = &rest[close + 1..];
        }
        if !rest.is_empty() {
            segments.push(Segment::Text(rest.to_string()));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn refs(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Ref(id) => Some(id.as_str()),
            _ => None,
        })
    }

    /// Fills every placeholder through `fill`; the output contains no braces
    /// unless the filler produces them.
    pub fn render(&self, fill: &mut dyn FnMut(&Segment) -> String) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                other => out.push_str(&fill(other)),
            }
        }
        out
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => f.write_str(t)?,
                Segment::Arg => f.write_str("{arg}")?,
                Segment::Value => f.write_str("{value}")?,
                Segment::Ref(id) => write!(f, "{{ref:{id}}}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Template {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Template {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Template::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_placeholders() {
        let t = Template::parse("Profit in {arg}: {value} = {ref:revenues} - {ref:total-expenses}").unwrap();
        assert_eq!(t.refs().collect::<Vec<_>>(), ["revenues", "total-expenses"]);
        assert_eq!(t.to_string(), "Profit in {arg}: {value} = {ref:revenues} - {ref:total-expenses}");
        let s = t.render(&mut |seg| match seg {
            Segment::Arg => "1987".into(),
            Segment::Value => "0.992".into(),
            Segment::Ref(id) => id.to_uppercase(),
            Segment::Text(_) => unreachable!(),
        });
        assert_eq!(s, "Profit in 1987: 0.992 = REVENUES - TOTAL-EXPENSES");
    }

    #[test]
    fn rejects_malformed() {
        assert!(Template::parse("{year}").is_err());
        assert!(Template::parse("open {arg").is_err());
        assert!(Template::parse("close }").is_err());
        assert!(Template::parse("{ref:}").is_err());
        assert!(Template::parse("plain").is_ok());
    }
}
