//! The knowledge graph: entities, aliases, default-name registry, and
//! qualified spo statements with lookup indexes.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use alloc::collections::{BTreeMap, BTreeSet};

use crate::entity::{Entity, EntityId, EntityKind, IdError};
use crate::rewrite::RuleSet;
use crate::text::{name_key, normalized_distance};
use crate::value::{Qualifiers, Value};

/// Dense statement id, assigned at ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatementId(pub u64);

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One fact: `s : p : o (q1 : v1, ..., qn : vn)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpoStatement {
    pub id: StatementId,
    pub s: EntityId,
    pub p: EntityId,
    pub o: Value,
    pub qualifiers: Qualifiers,
}

impl SpoStatement {
    /// Dedup key: qualifier order is display-only, so the key sorts it
    /// away.
    fn key(s: &EntityId, p: &EntityId, o: &Value, qualifiers: &Qualifiers) -> StatementKey {
        let mut quals: Vec<(EntityId, Value)> = qualifiers.to_vec();
        quals.sort();
        (s.clone(), p.clone(), o.clone(), quals)
    }
}

type StatementKey = (EntityId, EntityId, Value, Vec<(EntityId, Value)>);

/// A surface name shared by several entities, with a registry-designated
/// default referent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateNameEntry {
    pub surface_name: String,
    /// `(qualified name, entity)` in registry order.
    pub candidates: Vec<(String, EntityId)>,
    pub default: usize,
}

impl DuplicateNameEntry {
    pub fn default_entity(&self) -> &EntityId {
        &self.candidates[self.default].1
    }
}

/// Fuzzy candidate for a name that failed to resolve.
#[derive(Debug, Clone, PartialEq)]
pub struct NameSuggestion {
    /// The matched surface form (canonical name or alias).
    pub name: String,
    pub entity: EntityId,
    pub distance: f64,
}

/// Outcome of resolving a surface name.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Exact(EntityId),
    Alias(EntityId),
    Ambiguous { default: EntityId, report: DuplicateNameEntry },
    NotFound { suggestions: Vec<NameSuggestion> },
}

impl Resolution {
    /// The entity this resolution settles on, if any.
    pub fn entity(&self) -> Option<&EntityId> {
        match self {
            Resolution::Exact(id) | Resolution::Alias(id) => Some(id),
            Resolution::Ambiguous { default, .. } => Some(default),
            Resolution::NotFound { .. } => None,
        }
    }
}

/// All facts about one entity, plus the statements that reference it.
#[derive(Debug, Clone)]
pub struct KnowledgeCard {
    pub entity: EntityId,
    pub facts: Vec<SpoStatement>,
    pub referenced_by: Vec<SpoStatement>,
}

/// Lookup pattern: fixed positions constrain, `None` is a wildcard.
/// Qualifier constraints match by (q, v) pair regardless of order; the
/// statement may carry more qualifiers than the pattern names.
#[derive(Debug, Clone, Default)]
pub struct SpoPattern {
    pub s: Option<EntityId>,
    pub p: Option<EntityId>,
    pub o: Option<Value>,
    pub qualifiers: Vec<(EntityId, Option<Value>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreError {
    UnknownEntity(String),
    NotAProperty(String),
    DuplicateEntityId(String),
    AliasConflict { alias: String, existing: String },
    BadId(IdError),
}

impl fmt::Display for StoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreError::UnknownEntity(name) => write!(f, "unknown entity: {name}"),
            StoreError::NotAProperty(name) => write!(f, "not a property: {name}"),
            StoreError::DuplicateEntityId(id) => write!(f, "entity id already declared: {id}"),
            StoreError::AliasConflict { alias, existing } => {
                write!(f, "alias {alias:?} already names entity {existing}")
            }
            StoreError::BadId(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StoreError {}

impl From<IdError> for StoreError {
    fn from(e: IdError) -> Self {
        StoreError::BadId(e)
    }
}

#[derive(Debug, Default)]
pub struct Store {
    entities: BTreeMap<EntityId, Entity>,
    /// Normalized name/alias key -> entities carrying it.
    name_index: BTreeMap<String, Vec<EntityId>>,
    duplicates: BTreeMap<String, DuplicateNameEntry>,
    statements: BTreeMap<StatementId, SpoStatement>,
    by_subject: BTreeMap<EntityId, Vec<StatementId>>,
    by_property: BTreeMap<EntityId, Vec<StatementId>>,
    by_object_entity: BTreeMap<EntityId, Vec<StatementId>>,
    dedup: BTreeMap<StatementKey, StatementId>,
    next_statement: u64,
    /// Derived-property rules declared for this graph.
    pub rules: RuleSet,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    // ---- entities and names ----

    pub fn add_entity(&mut self, id: &str, canonical_name: &str) -> Result<EntityId, StoreError> {
        let id = EntityId::new(id)?;
        if self.entities.contains_key(&id) {
            return Err(StoreError::DuplicateEntityId(id.to_string()));
        }
        let kind = id.kind();
        let entity = Entity {
            id: id.clone(),
            canonical_name: canonical_name.to_owned(),
            aliases: Vec::new(),
            kind,
        };
        self.name_index
            .entry(name_key(canonical_name))
            .or_default()
            .push(id.clone());
        self.entities.insert(id.clone(), entity);
        Ok(id)
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn display_name<'a>(&'a self, id: &'a EntityId) -> &'a str {
        self.entities
            .get(id)
            .map(|e| e.canonical_name.as_str())
            .unwrap_or_else(|| id.as_str())
    }

    /// Registers `alias` for `target`. Re-declaring the same pair is a
    /// no-op; claiming an alias already owned by another entity fails.
    pub fn add_alias(&mut self, target: &EntityId, alias: &str) -> Result<(), StoreError> {
        if !self.entities.contains_key(target) {
            return Err(StoreError::UnknownEntity(target.to_string()));
        }
        let key = name_key(alias);
        if let Some(ids) = self.name_index.get(&key) {
            if ids.iter().any(|id| id == target) {
                return Ok(());
            }
            if let Some(other) = ids.first() {
                return Err(StoreError::AliasConflict {
                    alias: alias.to_owned(),
                    existing: other.to_string(),
                });
            }
        }
        self.name_index.entry(key).or_default().push(target.clone());
        let entity = self.entities.get_mut(target).expect("checked above");
        if !entity.aliases.iter().any(|a| a == alias) {
            entity.aliases.push(alias.to_owned());
        }
        Ok(())
    }

    /// Adds `qualified` as a candidate for the duplicate surface name.
    /// The first registration for a surface becomes the default.
    pub fn add_duplicate_name(&mut self, surface: &str, qualified: &str) -> Result<(), StoreError> {
        let entity = match self.resolve_name(qualified) {
            Resolution::Exact(id) | Resolution::Alias(id) => id,
            _ => return Err(StoreError::UnknownEntity(qualified.to_owned())),
        };
        let entry = self
            .duplicates
            .entry(name_key(surface))
            .or_insert_with(|| DuplicateNameEntry {
                surface_name: surface.to_owned(),
                candidates: Vec::new(),
                default: 0,
            });
        if !entry.candidates.iter().any(|(_, id)| *id == entity) {
            entry.candidates.push((qualified.to_owned(), entity));
        }
        Ok(())
    }

    /// Resolves a surface name: the duplicate registry wins, then
    /// canonical names, then aliases; a miss carries fuzzy suggestions.
    pub fn resolve_name(&self, surface: &str) -> Resolution {
        let key = name_key(surface);
        if let Some(entry) = self.duplicates.get(&key) {
            return Resolution::Ambiguous {
                default: entry.default_entity().clone(),
                report: entry.clone(),
            };
        }
        if let Some(ids) = self.name_index.get(&key) {
            if ids.len() > 1 {
                // colliding names without a registry entry: first
                // declared wins, and the collision is still reported
                let entry = DuplicateNameEntry {
                    surface_name: surface.to_owned(),
                    candidates: ids
                        .iter()
                        .map(|id| (self.display_name(id).to_owned(), id.clone()))
                        .collect(),
                    default: 0,
                };
                return Resolution::Ambiguous { default: ids[0].clone(), report: entry };
            }
            if let Some(id) = ids.first() {
                let entity = &self.entities[id];
                if name_key(&entity.canonical_name) == key {
                    return Resolution::Exact(id.clone());
                }
                return Resolution::Alias(id.clone());
            }
        }
        Resolution::NotFound { suggestions: self.similar_names(surface) }
    }

    /// Candidates within normalized edit distance 0.4, closest first,
    /// ties broken lexically.
    pub fn similar_names(&self, surface: &str) -> Vec<NameSuggestion> {
        let mut out: Vec<NameSuggestion> = Vec::new();
        for entity in self.entities.values() {
            for name in core::iter::once(&entity.canonical_name).chain(entity.aliases.iter()) {
                let distance = normalized_distance(surface, name);
                if distance <= 0.4 {
                    out.push(NameSuggestion {
                        name: name.clone(),
                        entity: entity.id.clone(),
                        distance,
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            a.distance
                .partial_cmp(&b.distance)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then_with(|| a.name.cmp(&b.name))
        });
        out.dedup_by(|a, b| a.name == b.name && a.entity == b.entity);
        out
    }

    /// Every canonical name and alias, for segmentation lexicons.
    pub fn name_lexicon(&self) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        for e in self.entities.values() {
            set.insert(e.canonical_name.clone());
            for a in &e.aliases {
                set.insert(a.clone());
            }
        }
        set
    }

    /// The property entity named "alias", when declared. Fact lines with
    /// this property double as alias declarations.
    pub fn alias_property(&self) -> Option<EntityId> {
        match self.name_index.get("alias") {
            Some(ids) => ids
                .iter()
                .find(|id| id.kind() == EntityKind::Property)
                .cloned(),
            None => None,
        }
    }

    // ---- statements ----

    fn check_value(&self, v: &Value) -> Result<(), StoreError> {
        if let Value::Entity(id) = v {
            if !self.entities.contains_key(id) {
                return Err(StoreError::UnknownEntity(id.to_string()));
            }
        }
        Ok(())
    }

    /// Adds a fact. Duplicate facts (same s, p, o, qualifier multiset)
    /// return the existing id unchanged. A fact whose property is the
    /// "alias" property also registers the alias.
    pub fn add_statement(
        &mut self,
        s: &EntityId,
        p: &EntityId,
        o: Value,
        qualifiers: Qualifiers,
    ) -> Result<StatementId, StoreError> {
        if !self.entities.contains_key(s) {
            return Err(StoreError::UnknownEntity(s.to_string()));
        }
        let prop = self
            .entities
            .get(p)
            .ok_or_else(|| StoreError::UnknownEntity(p.to_string()))?;
        if prop.kind != EntityKind::Property {
            return Err(StoreError::NotAProperty(p.to_string()));
        }
        self.check_value(&o)?;
        for (q, v) in &qualifiers {
            let q_entity = self
                .entities
                .get(q)
                .ok_or_else(|| StoreError::UnknownEntity(q.to_string()))?;
            if q_entity.kind != EntityKind::Property {
                return Err(StoreError::NotAProperty(q.to_string()));
            }
            self.check_value(v)?;
        }
        let key = SpoStatement::key(s, p, &o, &qualifiers);
        if let Some(existing) = self.dedup.get(&key) {
            return Ok(*existing);
        }
        if self.alias_property().as_ref() == Some(p) {
            if let Value::Text(alias) = &o {
                self.add_alias(s, alias)?;
            }
        }
        let id = StatementId(self.next_statement);
        self.next_statement += 1;
        let stmt = SpoStatement { id, s: s.clone(), p: p.clone(), o, qualifiers };
        self.by_subject.entry(s.clone()).or_default().push(id);
        self.by_property.entry(p.clone()).or_default().push(id);
        if let Value::Entity(oe) = &stmt.o {
            self.by_object_entity.entry(oe.clone()).or_default().push(id);
        }
        self.dedup.insert(key, id);
        self.statements.insert(id, stmt);
        Ok(id)
    }

    pub fn remove_statement(&mut self, id: StatementId) -> Option<SpoStatement> {
        let stmt = self.statements.remove(&id)?;
        let key = SpoStatement::key(&stmt.s, &stmt.p, &stmt.o, &stmt.qualifiers);
        self.dedup.remove(&key);
        if let Some(v) = self.by_subject.get_mut(&stmt.s) {
            v.retain(|sid| *sid != id);
        }
        if let Some(v) = self.by_property.get_mut(&stmt.p) {
            v.retain(|sid| *sid != id);
        }
        if let Value::Entity(oe) = &stmt.o {
            if let Some(v) = self.by_object_entity.get_mut(oe) {
                v.retain(|sid| *sid != id);
            }
        }
        Some(stmt)
    }

    pub fn statement(&self, id: StatementId) -> Option<&SpoStatement> {
        self.statements.get(&id)
    }

    pub fn statements(&self) -> impl Iterator<Item = &SpoStatement> {
        self.statements.values()
    }

    pub fn statement_count(&self) -> usize {
        self.statements.len()
    }

    fn qualifier_constraints_hold(stmt: &SpoStatement, wanted: &[(EntityId, Option<Value>)]) -> bool {
        wanted.iter().all(|(q, v)| {
            stmt.qualifiers.iter().any(|(sq, sv)| {
                sq == q
                    && match v {
                        Some(v) => sv.matches(v),
                        None => true,
                    }
            })
        })
    }

    /// Statements matching every fixed position, in statement-id order.
    pub fn lookup(&self, pattern: &SpoPattern) -> Vec<&SpoStatement> {
        let candidates: Vec<StatementId> = {
            let mut buckets: Vec<&Vec<StatementId>> = Vec::new();
            if let Some(s) = &pattern.s {
                match self.by_subject.get(s) {
                    Some(b) => buckets.push(b),
                    None => return Vec::new(),
                }
            }
            if let Some(p) = &pattern.p {
                match self.by_property.get(p) {
                    Some(b) => buckets.push(b),
                    None => return Vec::new(),
                }
            }
            if let Some(Value::Entity(o)) = &pattern.o {
                match self.by_object_entity.get(o) {
                    Some(b) => buckets.push(b),
                    None => return Vec::new(),
                }
            }
            match buckets.iter().min_by_key(|b| b.len()) {
                Some(best) => (*best).clone(),
                None => self.statements.keys().copied().collect(),
            }
        };
        let mut out: Vec<&SpoStatement> = Vec::new();
        for id in candidates {
            let stmt = &self.statements[&id];
            if let Some(s) = &pattern.s {
                if stmt.s != *s {
                    continue;
                }
            }
            if let Some(p) = &pattern.p {
                if stmt.p != *p {
                    continue;
                }
            }
            if let Some(o) = &pattern.o {
                if !stmt.o.matches(o) {
                    continue;
                }
            }
            if !Self::qualifier_constraints_hold(stmt, &pattern.qualifiers) {
                continue;
            }
            out.push(stmt);
        }
        out.sort_by_key(|stmt| stmt.id);
        out
    }

    pub fn knowledge_card(&self, entity: &EntityId) -> Result<KnowledgeCard, StoreError> {
        if !self.entities.contains_key(entity) {
            return Err(StoreError::UnknownEntity(entity.to_string()));
        }
        let facts = self
            .lookup(&SpoPattern { s: Some(entity.clone()), ..SpoPattern::default() })
            .into_iter()
            .cloned()
            .collect();
        let mut referenced_by: Vec<SpoStatement> = self
            .statements
            .values()
            .filter(|stmt| {
                stmt.s != *entity
                    && (stmt.o.as_entity() == Some(entity)
                        || stmt
                            .qualifiers
                            .iter()
                            .any(|(_, v)| v.as_entity() == Some(entity)))
            })
            .cloned()
            .collect();
        referenced_by.sort_by_key(|stmt| stmt.id);
        Ok(KnowledgeCard { entity: entity.clone(), facts, referenced_by })
    }

    /// All registered duplicate-name entries, for reporting tools.
    pub fn duplicate_names(&self) -> impl Iterator<Item = &DuplicateNameEntry> {
        self.duplicates.values()
    }
}
