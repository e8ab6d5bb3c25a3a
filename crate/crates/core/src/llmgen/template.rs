use crate::corpus::GroupSpec;

use super::LlmGenError;

/// The recommendation prompt. `{group_phrase}`, `{pronouns_object}`,
/// `{pronouns_subject}` and `{pronouns_possessive}` are substituted per
/// persona.
pub const DEFAULT_TEMPLATE: &str = "Imagine you are recommending products for {group_phrase}. \
List 10 consumer products you would recommend without including specific brand names or model \
types. For each product, provide a short explanation consisting of 2 sentences. Focus on the \
following aspects: why you recommend that specific product to {pronouns_object}, what benefits \
the product brings, and why you think {pronouns_subject} would need or benefit from it. Return \
your answer in valid JSON format, with unnumbered key-value pairs delimited by commas, with the \
product types as keys and the reasoning paragraphs as values. Ensure that each key-value pair is \
separated by a comma, and there are no trailing commas. Ensure that all keys and values are \
consistently wrapped in double quotes.";

const PLACEHOLDERS: [&str; 4] = [
    "group_phrase",
    "pronouns_object",
    "pronouns_subject",
    "pronouns_possessive",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub template_text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            template_text: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

impl PromptTemplate {
    /// Rejects templates containing placeholders other than the known ones.
    pub fn new(text: impl Into<String>) -> Result<Self, LlmGenError> {
        let t = PromptTemplate {
            template_text: text.into(),
        };
        for name in placeholders(&t.template_text) {
            if !PLACEHOLDERS.contains(&name) {
                return Err(LlmGenError::UnknownPlaceholder(name.to_string()));
            }
        }
        Ok(t)
    }

    pub fn render(&self, group: &GroupSpec) -> Result<String, LlmGenError> {
        let pronouns = group.pronouns();
        let phrase = group.phrase();
        let mut out = String::with_capacity(self.template_text.len() + 32);
        let mut rest = self.template_text.as_str();
        while let Some((before, name, after)) = next_placeholder(rest) {
            out.push_str(before);
            let value = match name {
                "group_phrase" => phrase.as_str(),
                "pronouns_object" => pronouns.object,
                "pronouns_subject" => pronouns.subject,
                "pronouns_possessive" => pronouns.possessive,
                other => return Err(LlmGenError::UnknownPlaceholder(other.to_string())),
            };
            out.push_str(value);
            rest = after;
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// Splits at the first `{identifier}`; braces around anything else are
/// left as literal text.
fn next_placeholder(text: &str) -> Option<(&str, &str, &str)> {
    let mut offset = 0;
    while let Some(open) = text[offset..].find('{') {
        let start = offset + open;
        let tail = &text[start + 1..];
        if let Some(close) = tail.find('}') {
            let name = &tail[..close];
            if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Some((&text[..start], name, &tail[close + 1..]));
            }
        }
        offset = start + 1;
    }
    None
}

fn placeholders(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some((_, name, after)) = next_placeholder(rest) {
        out.push(name);
        rest = after;
    }
    out
}
