//! Entities and properties.
//!
//! Every node in the graph is an entity; the ones usable in the `p`
//! position are properties. The id prefix carries the kind: property ids
//! start with `p`, all other entity ids start with `e`. Beyond the prefix
//! the id text is opaque.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Entity,
    Property,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdError {
    Empty,
    ForbiddenChar(char),
    BadPrefix,
}

impl fmt::Display for IdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdError::Empty => write!(f, "entity id is empty"),
            IdError::ForbiddenChar(c) => write!(f, "entity id contains forbidden character {c:?}"),
            IdError::BadPrefix => write!(f, "entity id must start with 'e' (entity) or 'p' (property)"),
        }
    }
}

impl core::error::Error for IdError {}

impl EntityId {
    pub fn new(id: &str) -> Result<Self, IdError> {
        if id.is_empty() {
            return Err(IdError::Empty);
        }
        for c in id.chars() {
            if c.is_whitespace() || c == ':' || c == '?' {
                return Err(IdError::ForbiddenChar(c));
            }
        }
        if !id.starts_with('e') && !id.starts_with('p') {
            return Err(IdError::BadPrefix);
        }
        Ok(EntityId(String::from(id)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Kind encoded in the id prefix.
    pub fn kind(&self) -> EntityKind {
        if self.0.starts_with('p') {
            EntityKind::Property
        } else {
            EntityKind::Entity
        }
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: EntityId,
    pub canonical_name: String,
    pub aliases: Vec<String>,
    pub kind: EntityKind,
}
