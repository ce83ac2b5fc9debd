//! Shared fixture loading for integration tests.

#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use eql_core::eval::{evaluate, Binding, EvalOptions, ResultSet};
use eql_core::kgt;
use eql_core::parser::parse_query;
use eql_core::store::Store;
use eql_core::value::Value;

pub fn fixture(name: &str) -> Store {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    let mut store = Store::new();
    let report = kgt::load_graph_str(&mut store, &text);
    assert!(report.errors.is_empty(), "{name} load errors: {:?}", report.errors);
    store
}

pub fn run(store: &Store, query: &str) -> ResultSet {
    let ast = parse_query(query).unwrap_or_else(|e| panic!("parse {query:?}: {e}"));
    evaluate(&ast, store, &EvalOptions::default())
        .unwrap_or_else(|e| panic!("evaluate {query:?}: {e}"))
}

/// The values of one column across all rows, in row order.
pub fn column_values(rs: &ResultSet, key: &str) -> Vec<Value> {
    rs.rows
        .iter()
        .filter_map(|r| match r.get(key) {
            Some(Binding::Value(v)) => Some(v.clone()),
            _ => None,
        })
        .collect()
}

/// Display names of entity values in one column.
pub fn entity_names(store: &Store, rs: &ResultSet, key: &str) -> Vec<String> {
    column_values(rs, key)
        .iter()
        .filter_map(|v| match v {
            Value::Entity(id) => Some(store.display_name(id).to_string()),
            _ => None,
        })
        .collect()
}

/// Key of the single anonymous answer column.
pub fn anon_key(rs: &ResultSet) -> String {
    rs.columns
        .iter()
        .find(|c| c.label.is_empty())
        .map(|c| c.key.clone())
        .expect("query has an anonymous answer column")
}
