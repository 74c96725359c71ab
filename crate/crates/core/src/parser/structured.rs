use serde::{Deserialize, Serialize};

use super::dsl::is_valid_name;
use super::{from_json, ParseError};
use crate::ontology::{Declaration, ElementKind};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    roles: Vec<RoleEntry>,
    #[serde(default)]
    descriptions: Vec<DescriptionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoleEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    parents: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptionEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    parents: Vec<String>,
    components: Vec<String>,
}

fn check_names<'a>(path: String, names: impl IntoIterator<Item = &'a String>) -> Result<(), ParseError> {
    for (i, n) in names.into_iter().enumerate() {
        if !is_valid_name(n) {
            return Err(ParseError::Schema {
                path: format!("{path}[{i}]"),
                message: format!("`{n}` is not a valid name"),
                span: None,
            });
        }
    }
    Ok(())
}

/// Parses the structured ontology format: roles first, then descriptions,
/// each in document order.
pub fn parse_ontology_structured(src: &str) -> Result<Vec<Declaration>, ParseError> {
    let doc: Document = from_json(src)?;
    let mut decls = Vec::with_capacity(doc.roles.len() + doc.descriptions.len());
    for (i, r) in doc.roles.into_iter().enumerate() {
        check_names(format!("roles[{i}].name"), [&r.name]).map_err(strip_index)?;
        check_names(format!("roles[{i}].parents"), &r.parents)?;
        decls.push(Declaration {
            kind: ElementKind::Role,
            name: r.name,
            parents: r.parents,
            components: Vec::new(),
            spans: None,
        });
    }
    for (i, d) in doc.descriptions.into_iter().enumerate() {
        check_names(format!("descriptions[{i}].name"), [&d.name]).map_err(strip_index)?;
        check_names(format!("descriptions[{i}].parents"), &d.parents)?;
        check_names(format!("descriptions[{i}].components"), &d.components)?;
        if d.components.is_empty() {
            return Err(ParseError::Schema {
                path: format!("descriptions[{i}].components"),
                message: "a description needs at least one component".into(),
                span: None,
            });
        }
        decls.push(Declaration {
            kind: ElementKind::Description,
            name: d.name,
            parents: d.parents,
            components: d.components,
            spans: None,
        });
    }
    Ok(decls)
}

// `name` is a scalar, so drop the `[0]` that `check_names` appends.
fn strip_index(e: ParseError) -> ParseError {
    match e {
        ParseError::Schema { path, message, span } => {
            ParseError::Schema { path: path.trim_end_matches("[0]").to_string(), message, span }
        }
        other => other,
    }
}

/// Renders declarations in the structured format (pretty-printed JSON).
pub fn to_structured(decls: &[Declaration]) -> String {
    let mut doc = Document { roles: Vec::new(), descriptions: Vec::new() };
    for d in decls {
        match d.kind {
            ElementKind::Role => doc.roles.push(RoleEntry { name: d.name.clone(), parents: d.parents.clone() }),
            ElementKind::Description => doc.descriptions.push(DescriptionEntry {
                name: d.name.clone(),
                parents: d.parents.clone(),
                components: d.components.clone(),
            }),
        }
    }
    let mut out = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    out.push('\n');
    out
}
