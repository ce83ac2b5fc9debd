//! Embeddable EQL knowledge-graph query engine.
//!
//! EQL queries are spo question statements: take a fact of the form
//! `s : p : o (q1 : v1, ..., qn : vn)` and replace any position with `?`
//! or a named variable. This crate stores qualified spo facts, parses
//! query/suggestion text, evaluates queries (joins, filters, sorting,
//! grouping, aggregation, pagination), expands derived-property rules,
//! queues data-revision suggestions, and renders queries as lambda
//! calculus.
//!
//! The crate is `no_std` (alloc required). All IO — files, terminals,
//! clocks — lives in the companion `eql-cli` crate; everything here
//! operates on in-memory text and data.

#![no_std]

extern crate alloc;

pub mod decimal;
pub mod entity;
pub mod eval;
pub mod kgt;
pub mod lambda;
pub mod parser;
pub mod revision;
pub mod rewrite;
pub mod store;
pub mod text;
pub mod value;

pub use entity::{Entity, EntityId, EntityKind};
pub use eval::{evaluate, EvalError, EvalOptions, ResultSet};
pub use parser::{parse_query, parse_suggestion, ParseError, QueryAst};
pub use store::Store;
pub use value::Value;
