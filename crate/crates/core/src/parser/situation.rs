use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{from_json, ParseError};

/// A situation: classified entities plus nested situations.
///
/// Role names stay unresolved here; the encoder resolves them against an
/// ontology, so one file can be read against several ontologies.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Situation {
    pub id: String,
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default, rename = "situations")]
    pub nested: Vec<Situation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub id: String,
    /// Names of the roles classifying this entity.
    pub roles: Vec<String>,
}

impl Entity {
    pub fn new(id: impl Into<String>, roles: &[&str]) -> Self {
        Self { id: id.into(), roles: roles.iter().map(|r| r.to_string()).collect() }
    }
}

impl Situation {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), ..Self::default() }
    }

    pub fn with_entity(mut self, id: impl Into<String>, roles: &[&str]) -> Self {
        self.entities.push(Entity::new(id, roles));
        self
    }

    pub fn with_nested(mut self, s: Situation) -> Self {
        self.nested.push(s);
        self
    }

    /// Entities of this situation and every nested one, depth first.
    pub fn all_entities(&self) -> Vec<&Entity> {
        let mut out: Vec<&Entity> = self.entities.iter().collect();
        for s in &self.nested {
            out.extend(s.all_entities());
        }
        out
    }

    /// Every nested situation at any depth (not including `self`).
    pub fn descendants(&self) -> Vec<&Situation> {
        let mut out = Vec::new();
        for s in &self.nested {
            out.push(s);
            out.extend(s.descendants());
        }
        out
    }

    /// Nesting depth: 0 for a situation without nested situations.
    pub fn depth(&self) -> usize {
        self.nested.iter().map(|s| 1 + s.depth()).max().unwrap_or(0)
    }
}

fn validate(
    s: &Situation,
    path: &str,
    situation_ids: &mut HashSet<String>,
    entity_ids: &mut HashSet<String>,
) -> Result<(), ParseError> {
    if !situation_ids.insert(s.id.clone()) {
        return Err(ParseError::DuplicateSituationId { id: s.id.clone(), path: format!("{path}id") });
    }
    for (i, e) in s.entities.iter().enumerate() {
        if !entity_ids.insert(e.id.clone()) {
            return Err(ParseError::DuplicateEntityId { id: e.id.clone(), path: format!("{path}entities[{i}].id") });
        }
        if e.roles.is_empty() {
            return Err(ParseError::Schema {
                path: format!("{path}entities[{i}].roles"),
                message: "an entity needs at least one role".into(),
                span: None,
            });
        }
    }
    for (i, n) in s.nested.iter().enumerate() {
        validate(n, &format!("{path}situations[{i}]."), situation_ids, entity_ids)?;
    }
    Ok(())
}

/// Parses a situation file. Situation and entity ids must be unique within the file.
pub fn parse_situation(src: &str) -> Result<Situation, ParseError> {
    let s: Situation = from_json(src)?;
    validate(&s, "", &mut HashSet::new(), &mut HashSet::new())?;
    Ok(s)
}

pub fn situation_to_json(s: &Situation) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("plain data serializes");
    out.push('\n');
    out
}
