//! The KGT graph text format: UTF-8, line-oriented.
//!
//! ```text
//! # comment
//! @entity <id> <canonical name>
//! @alias <canonical name> = <alias>
//! @default <surface name> = <qualified name>
//! @rule <property> (x, y) = <EQL body>
//! s : p : o
//! s : p : o (q1 : v1, q2 : v2)
//! ```
//!
//! Fact lines use the query surface syntax with `\:`, `\?`, `\%`, `\_`
//! escapes; parentheses close on the same line. Fact lines whose property
//! is "alias" also register the alias. Malformed lines are reported with
//! their line number and ingestion continues.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::entity::{EntityId, EntityKind};
use crate::parser::{self, StatementDraft};
use crate::rewrite;
use crate::store::{Resolution, Store};
use crate::value::{Qualifiers, Value};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub entities_added: usize,
    pub statements_added: usize,
    pub entity_aliases_added: usize,
    pub property_aliases_added: usize,
    pub defaults_added: usize,
    pub rules_added: usize,
    /// `(line number, message)` for every malformed line.
    pub errors: Vec<(usize, String)>,
}

impl LoadReport {
    pub fn aliases_added(&self) -> usize {
        self.entity_aliases_added + self.property_aliases_added
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} entities, {} statements, {} aliases, {} defaults, {} rules, {} errors",
            self.entities_added,
            self.statements_added,
            self.aliases_added(),
            self.defaults_added,
            self.rules_added,
            self.errors.len()
        )
    }
}

/// Only an undecodable stream aborts a load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotUtf8;

impl fmt::Display for NotUtf8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KGT source is not valid UTF-8")
    }
}

impl core::error::Error for NotUtf8 {}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(next) => out.push(next),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn resolve_required(store: &Store, name: &str) -> Result<EntityId, String> {
    match store.resolve_name(name) {
        Resolution::Exact(id) | Resolution::Alias(id) => Ok(id),
        Resolution::Ambiguous { default, .. } => Ok(default),
        Resolution::NotFound { .. } => Err(format!("unknown name: {name}")),
    }
}

fn resolve_property(store: &Store, name: &str) -> Result<EntityId, String> {
    let id = resolve_required(store, name)?;
    if id.kind() != EntityKind::Property {
        return Err(format!("not a property: {name}"));
    }
    Ok(id)
}

/// Resolves a surface-name statement draft against the store: subject and
/// properties must resolve; objects and qualifier values fall back to
/// literal typing.
pub fn resolve_draft(
    store: &Store,
    draft: &StatementDraft,
) -> Result<(EntityId, EntityId, Value, Qualifiers), String> {
    let s = resolve_required(store, &draft.s)?;
    let p = resolve_property(store, &draft.p)?;
    let value_of = |name: &str, date_qualifier: bool| match store.resolve_name(name) {
        Resolution::Exact(id) | Resolution::Alias(id) => Value::Entity(id),
        Resolution::Ambiguous { default, .. } => Value::Entity(default),
        Resolution::NotFound { .. } => Value::parse_literal(name, date_qualifier),
    };
    let o = value_of(&draft.o, false);
    let mut qualifiers = Qualifiers::new();
    for (q_name, v_name) in &draft.qualifiers {
        let q = resolve_property(store, q_name)?;
        let is_date = store
            .entity(&q)
            .map(|e| e.canonical_name.eq_ignore_ascii_case("date"))
            .unwrap_or(false);
        qualifiers.push((q, value_of(v_name, is_date)));
    }
    Ok((s, p, o, qualifiers))
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    line.split_once(" = ").map(|(a, b)| (a.trim(), b.trim()))
}

fn load_line(store: &mut Store, line: &str, report: &mut LoadReport) -> Result<(), String> {
    if let Some(rest) = line.strip_prefix("@entity ") {
        let (id, name) = rest
            .trim()
            .split_once(char::is_whitespace)
            .ok_or("expected: @entity <id> <canonical name>")?;
        let name = unescape(name.trim());
        if name.is_empty() {
            return Err("entity name is empty".to_string());
        }
        store.add_entity(id, &name).map_err(|e| e.to_string())?;
        report.entities_added += 1;
        return Ok(());
    }
    if let Some(rest) = line.strip_prefix("@alias ") {
        let (canonical, alias) =
            split_assignment(rest).ok_or("expected: @alias <canonical name> = <alias>")?;
        let target = resolve_required(store, &unescape(canonical))?;
        let alias = unescape(alias);
        if alias.is_empty() {
            return Err("alias is empty".to_string());
        }
        store.add_alias(&target, &alias).map_err(|e| e.to_string())?;
        match target.kind() {
            EntityKind::Property => report.property_aliases_added += 1,
            EntityKind::Entity => report.entity_aliases_added += 1,
        }
        return Ok(());
    }
    if let Some(rest) = line.strip_prefix("@default ") {
        let (surface, qualified) =
            split_assignment(rest).ok_or("expected: @default <surface name> = <qualified name>")?;
        store
            .add_duplicate_name(&unescape(surface), &unescape(qualified))
            .map_err(|e| e.to_string())?;
        report.defaults_added += 1;
        return Ok(());
    }
    if let Some(rest) = line.strip_prefix("@rule ") {
        let (head, body) =
            split_assignment(rest).ok_or("expected: @rule <property> (x, y) = <EQL body>")?;
        let (prop_name, vars) = head
            .split_once('(')
            .ok_or("expected (x, y) after the rule property")?;
        let vars = vars.trim_end().strip_suffix(')').ok_or("expected ')' after rule variables")?;
        let names: Vec<&str> = vars.split(',').map(str::trim).collect();
        if names != ["x", "y"] {
            return Err("rule head variables must be exactly (x, y)".to_string());
        }
        let property = resolve_property(store, &unescape(prop_name.trim()))?;
        let node = parser::parse_conjunct(body).map_err(|e| e.to_string())?;
        rewrite::define_rule(store, &property, node).map_err(|e| e.to_string())?;
        report.rules_added += 1;
        return Ok(());
    }
    if line.starts_with('@') {
        return Err(format!("unknown directive: {}", line.split_whitespace().next().unwrap_or("@")));
    }
    let draft = parser::parse_statement_draft(line).map_err(|e| e.to_string())?;
    let (s, p, o, qualifiers) = resolve_draft(store, &draft)?;
    let before = store.statement_count();
    store.add_statement(&s, &p, o, qualifiers).map_err(|e| e.to_string())?;
    if store.statement_count() > before {
        report.statements_added += 1;
        // alias facts double as alias declarations
        if store.alias_property().as_ref() == Some(&p) {
            match s.kind() {
                EntityKind::Property => report.property_aliases_added += 1,
                EntityKind::Entity => report.entity_aliases_added += 1,
            }
        }
    }
    Ok(())
}

/// Ingests KGT text. Well-formed lines load; malformed lines land in the
/// report with their line number.
pub fn load_graph_str(store: &mut Store, text: &str) -> LoadReport {
    let mut report = LoadReport::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Err(msg) = load_line(store, line, &mut report) {
            report.errors.push((idx + 1, msg));
        }
    }
    report
}

/// Byte-stream entry point; fails only when the stream is not UTF-8.
pub fn load_graph(store: &mut Store, bytes: &[u8]) -> Result<LoadReport, NotUtf8> {
    let text = core::str::from_utf8(bytes).map_err(|_| NotUtf8)?;
    Ok(load_graph_str(store, text))
}

fn escape(name: &str) -> String {
    crate::parser::escape_kgt_name(name)
}

fn value_surface(store: &Store, v: &Value) -> String {
    match v {
        Value::Entity(id) => escape(store.display_name(id)),
        Value::Text(t) => escape(t),
        other => other.to_string(),
    }
}

/// Serializes the store back to KGT. Reloading the output reproduces the
/// same statement multiset, aliases, defaults, and rules.
pub fn save_graph(store: &Store) -> String {
    let mut out = String::new();
    for e in store.entities() {
        out.push_str(&format!("@entity {} {}\n", e.id, escape(&e.canonical_name)));
    }
    for e in store.entities() {
        for alias in &e.aliases {
            out.push_str(&format!("@alias {} = {}\n", escape(&e.canonical_name), escape(alias)));
        }
    }
    for entry in store.duplicate_names() {
        for (qualified, _) in &entry.candidates {
            out.push_str(&format!(
                "@default {} = {}\n",
                escape(&entry.surface_name),
                escape(qualified)
            ));
        }
    }
    for rule in store.rules.iter() {
        out.push_str(&format!(
            "@rule {} (x, y) = {}\n",
            escape(store.display_name(&rule.head_property)),
            parser::print_node(&rule.body)
        ));
    }
    for stmt in store.statements() {
        out.push_str(&format!(
            "{} : {} : {}",
            escape(store.display_name(&stmt.s)),
            escape(store.display_name(&stmt.p)),
            value_surface(store, &stmt.o)
        ));
        if !stmt.qualifiers.is_empty() {
            let quals: Vec<String> = stmt
                .qualifiers
                .iter()
                .map(|(q, v)| format!("{} : {}", escape(store.display_name(q)), value_surface(store, v)))
                .collect();
            out.push_str(&format!(" ({})", quals.join(", ")));
        }
        out.push('\n');
    }
    out
}
