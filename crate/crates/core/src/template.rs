//! Minimal text templates with `«slot»` substitution.

use std::collections::BTreeSet;

use thiserror::Error;

const OPEN: char = '«';
const CLOSE: char = '»';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unterminated slot starting at byte {0}")]
    Unterminated(usize),
    #[error("empty slot name at byte {0}")]
    EmptySlot(usize),
    #[error("no value supplied for slot `{0}`")]
    MissingValue(String),
    #[error("value supplied for unknown slot `{0}`")]
    UnknownSlot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut rest = source;
        let mut offset = 0;
        while let Some(start) = rest.find(OPEN) {
            if start > 0 {
                segments.push(Segment::Text(rest[..start].to_string()));
            }
            let after = start + OPEN.len_utf8();
            let end = rest[after..]
                .find(CLOSE)
                .ok_or(TemplateError::Unterminated(offset + start))?;
            let name = &rest[after..after + end];
            if name.is_empty() {
                return Err(TemplateError::EmptySlot(offset + start));
            }
            segments.push(Segment::Slot(name.to_string()));
            let consumed = after + end + CLOSE.len_utf8();
            offset += consumed;
            rest = &rest[consumed..];
        }
        if !rest.is_empty() {
            segments.push(Segment::Text(rest.to_string()));
        }
        Ok(Self { segments })
    }

    pub fn slots(&self) -> BTreeSet<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(name) => Some(name.as_str()),
                Segment::Text(_) => None,
            })
            .collect()
    }

    /// Substitutes every slot. Each slot needs a value and every value must
    /// name a slot of this template.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        let slots = self.slots();
        if let Some((name, _)) = values.iter().find(|(name, _)| !slots.contains(name)) {
            return Err(TemplateError::UnknownSlot(name.to_string()));
        }
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Text(text) => out.push_str(text),
                Segment::Slot(name) => {
                    let value = values
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| TemplateError::MissingValue(name.clone()))?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}
