use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct StructuredError {
    pub message: String,
    /// The full reply, kept for audit.
    pub raw: String,
}

/// Returns the first JSON object in `text` and checks that every field in
/// `required` is present and not null. Prose and code fences around the
/// object are ignored.
pub fn parse_structured(text: &str, required: &[&str]) -> Result<Map<String, Value>, StructuredError> {
    let fail = |message: String| StructuredError {
        message,
        raw: text.to_string(),
    };
    let mut found = None;
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            found = Some(map);
            break;
        }
    }
    let map = found.ok_or_else(|| fail("no JSON object in reply".into()))?;
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|k| map.get(*k).is_none_or(Value::is_null))
        .collect();
    if !missing.is_empty() {
        return Err(fail(format!("reply lacks field(s): {}", missing.join(", "))));
    }
    Ok(map)
}
