//! Binding rows, result sets, reports, and pagination.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::parser::AggFunc;
use crate::store::{DuplicateNameEntry, NameSuggestion, StatementId, Store};
use crate::value::{Qualifiers, Value};

pub const DEFAULT_PAGE_SIZE: usize = 50;

/// What a variable is bound to in one row. Besides plain values, the
/// `(?)` form binds a whole qualifier block, and projected property
/// paths can hold several values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Binding {
    Value(Value),
    Many(Vec<Value>),
    Qualifiers(Qualifiers),
}

impl Binding {
    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Binding::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn values(&self) -> Vec<Value> {
        match self {
            Binding::Value(v) => alloc::vec![v.clone()],
            Binding::Many(vs) => vs.clone(),
            Binding::Qualifiers(_) => Vec::new(),
        }
    }
}

/// One assignment of values to variables, with the statements that
/// produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingRow {
    bindings: BTreeMap<String, Binding>,
    pub provenance: BTreeSet<StatementId>,
}

impl BindingRow {
    pub fn empty() -> Self {
        BindingRow { bindings: BTreeMap::new(), provenance: BTreeSet::new() }
    }

    pub fn get(&self, var: &str) -> Option<&Binding> {
        self.bindings.get(var)
    }

    pub fn set(&mut self, var: &str, binding: Binding) {
        self.bindings.insert(var.to_string(), binding);
    }

    pub fn vars(&self) -> impl Iterator<Item = (&String, &Binding)> {
        self.bindings.iter()
    }

    pub fn remove(&mut self, var: &str) {
        self.bindings.remove(var);
    }

    /// True when `self` agrees with `narrower` on every variable the
    /// narrower row binds.
    pub fn extends(&self, narrower: &BindingRow) -> bool {
        narrower
            .bindings
            .iter()
            .all(|(k, v)| self.bindings.get(k) == Some(v))
    }

    pub fn bindings_key(&self) -> &BTreeMap<String, Binding> {
        &self.bindings
    }
}

/// Disambiguation and fuzzy-correction notes attached to a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    DuplicateName(DuplicateNameEntry),
    Fuzzy { surface: String, suggestions: Vec<NameSuggestion> },
}

/// One output column. `label` is empty for auto-projected `?` positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    /// Row-binding key this column reads.
    pub key: String,
    pub label: String,
}

/// Which aggregate produced an assigned variable; lets a renderer
/// annotate which rows attain a max/min.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateInfo {
    pub var: String,
    pub func: AggFunc,
    pub arg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Group key value; `None` is the trailing "(unknown)" group.
    pub key: Option<Value>,
    pub row_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Page<'a> {
    pub rows: &'a [BindingRow],
    /// More rows remain after this page.
    pub more: bool,
}

/// Evaluation output: ordered distinct rows, optional group partition,
/// reports, and pagination bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct ResultSet {
    pub columns: Vec<Column>,
    pub rows: Vec<BindingRow>,
    pub groups: Option<Vec<Group>>,
    /// Label of the group key ("x.nationality") when grouped.
    pub group_label: Option<String>,
    pub reports: Vec<Report>,
    pub aggregates: Vec<AggregateInfo>,
    pub page_size: usize,
}

impl ResultSet {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Render order: group by group when grouped (a row with several key
    /// values appears in each of its groups), plain row order otherwise.
    /// Each entry is `(group index, row index)`.
    pub fn display_order(&self) -> Vec<(Option<usize>, usize)> {
        match &self.groups {
            Some(groups) => groups
                .iter()
                .enumerate()
                .flat_map(|(gi, g)| g.row_indices.iter().map(move |&ri| (Some(gi), ri)))
                .collect(),
            None => (0..self.rows.len()).map(|i| (None, i)).collect(),
        }
    }

    /// Rows `[page_size * index, page_size * (index + 1))`; the marker is
    /// set when rows remain past the page.
    pub fn page(&self, index: usize) -> Page<'_> {
        let size = if self.page_size == 0 { DEFAULT_PAGE_SIZE } else { self.page_size };
        let start = size.saturating_mul(index).min(self.rows.len());
        let end = start.saturating_add(size).min(self.rows.len());
        Page { rows: &self.rows[start..end], more: end < self.rows.len() }
    }

    pub fn page_count(&self) -> usize {
        let size = if self.page_size == 0 { DEFAULT_PAGE_SIZE } else { self.page_size };
        self.rows.len().div_ceil(size)
    }
}

/// Renders a value with entity ids resolved to display names.
pub fn value_text(store: &Store, value: &Value) -> String {
    match value {
        Value::Entity(id) => store.display_name(id).to_string(),
        other => other.to_string(),
    }
}

/// Renders `<name> <id>` for entities, plain text otherwise — the row
/// rendering contract.
pub fn value_with_id(store: &Store, value: &Value) -> String {
    match value {
        Value::Entity(id) => format!("{} {}", store.display_name(id), id),
        other => other.to_string(),
    }
}

/// Renders a binding: values, value sets, or a whole qualifier block.
pub fn binding_text(store: &Store, binding: &Binding) -> String {
    match binding {
        Binding::Value(v) => value_with_id(store, v),
        Binding::Many(vs) => {
            let parts: Vec<String> = vs.iter().map(|v| value_with_id(store, v)).collect();
            parts.join(", ")
        }
        Binding::Qualifiers(quals) => {
            let parts: Vec<String> = quals
                .iter()
                .map(|(q, v)| format!("{} : {}", store.display_name(q), value_text(store, v)))
                .collect();
            format!("({})", parts.join(", "))
        }
    }
}
