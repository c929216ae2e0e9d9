use std::collections::BTreeSet;

use super::PromptError;

/// A prompt text with `{{slot}}` placeholders, each naming a distinct slot.
#[derive(Debug, Clone)]
pub struct Template {
    name: &'static str,
    text: &'static str,
    slots: Vec<&'static str>,
}

impl Template {
    /// Parses placeholders; panics on malformed or repeated ones since
    /// templates are compiled into the binary.
    pub fn new(name: &'static str, text: &'static str) -> Self {
        let text = text.strip_suffix('\n').unwrap_or(text);
        let mut slots = Vec::new();
        let mut rest = text;
        while let Some(open) = rest.find("{{") {
            let after = &rest[open + 2..];
            let close = after
                .find("}}")
                .unwrap_or_else(|| panic!("template {name}: unclosed placeholder"));
            let slot = &after[..close];
            assert!(
                !slot.is_empty() && slot.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
                "template {name}: bad placeholder {slot:?}"
            );
            assert!(!slots.contains(&slot), "template {name}: slot {slot} repeats");
            slots.push(slot);
            rest = &after[close + 2..];
        }
        Self { name, text, slots }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn slots(&self) -> &[&'static str] {
        &self.slots
    }

    /// Fills every slot exactly once. Values are inserted verbatim and never
    /// rescanned for placeholders.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let mut given = BTreeSet::new();
        for (slot, _) in values {
            if !self.slots.contains(slot) {
                return Err(PromptError::UnknownSlot {
                    template: self.name,
                    slot: slot.to_string(),
                });
            }
            if !given.insert(*slot) {
                return Err(PromptError::DuplicateSlot {
                    template: self.name,
                    slot: slot.to_string(),
                });
            }
        }
        if let Some(missing) = self.slots.iter().find(|s| !given.contains(*s)) {
            return Err(PromptError::MissingSlot {
                template: self.name,
                slot: missing.to_string(),
            });
        }

        let mut out = String::with_capacity(self.text.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
        let mut rest = self.text;
        while let Some(open) = rest.find("{{") {
            out.push_str(&rest[..open]);
            let after = &rest[open + 2..];
            let close = after.find("}}").expect("validated at construction");
            let slot = &after[..close];
            let value = values.iter().find(|(s, _)| *s == slot).map(|(_, v)| *v).unwrap();
            out.push_str(value);
            rest = &after[close + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }
}
