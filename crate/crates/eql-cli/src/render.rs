//! Result, report, and knowledge-card rendering.

use eql_core::eval::{binding_text, value_text, value_with_id, Binding, Report, ResultSet};
use eql_core::parser::AggFunc;
use eql_core::store::{KnowledgeCard, Store};
use eql_core::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Table,
    Csv,
    JsonLines,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn column_label(label: &str) -> &str {
    if label.is_empty() {
        "ans"
    } else {
        label
    }
}

fn group_header(store: &Store, rs: &ResultSet, group_index: usize) -> String {
    let label = rs.group_label.as_deref().unwrap_or("group");
    let key = rs.groups.as_ref().and_then(|gs| gs.get(group_index)).and_then(|g| g.key.as_ref());
    match key {
        Some(v) => format!("group {label} = {}", value_text(store, v)),
        None => format!("group {label} = (unknown)"),
    }
}

fn group_cell(store: &Store, rs: &ResultSet, group_index: Option<usize>) -> String {
    match group_index
        .and_then(|gi| rs.groups.as_ref().and_then(|gs| gs.get(gi)))
        .and_then(|g| g.key.as_ref())
    {
        Some(v) => value_text(store, v),
        None => "(unknown)".to_string(),
    }
}

fn render_reports(store: &Store, rs: &ResultSet, out: &mut String) {
    for report in &rs.reports {
        match report {
            Report::DuplicateName(entry) => {
                out.push_str("EQL duplicate name report:\n");
                for (i, (qualified, _)) in entry.candidates.iter().enumerate() {
                    let marker = if i == entry.default { " default" } else { "" };
                    out.push_str(&format!("{}. {qualified}{marker}\n", i + 1));
                }
                let (default_name, _) = &entry.candidates[entry.default];
                out.push_str(&format!(
                    "The above query results is calculated by the default value \"{} = {}\"\n",
                    entry.surface_name, default_name
                ));
            }
            Report::Fuzzy { surface, suggestions } => {
                out.push_str(&format!("do not found {surface:?}"));
                if let Some(top) = suggestions.first() {
                    out.push_str(&format!(
                        ", closest match: {} ({})",
                        top.name,
                        store.display_name(&top.entity)
                    ));
                }
                out.push('\n');
            }
        }
    }
}

fn render_aggregate_notes(store: &Store, rs: &ResultSet, out: &mut String) {
    if rs.groups.is_some() {
        return;
    }
    for info in &rs.aggregates {
        if !matches!(info.func, AggFunc::Max | AggFunc::Min) {
            continue;
        }
        let Some(Binding::Value(extreme)) = rs.rows.first().and_then(|r| r.get(&info.var)) else {
            continue;
        };
        let extreme = extreme.clone();
        let attaining: Vec<String> = rs
            .rows
            .iter()
            .filter(|r| r.get(&info.arg).and_then(|b| b.as_value()) == Some(&extreme))
            .filter_map(|r| {
                let col = rs.columns.iter().find(|c| !c.label.is_empty() && c.key != info.var)?;
                Some(format!("{} = {}", col.label, binding_text(store, r.get(&col.key)?)))
            })
            .collect();
        if !attaining.is_empty() {
            out.push_str(&format!(
                "{} = {} ({})\n",
                info.var,
                value_text(store, &extreme),
                attaining.join(", ")
            ));
        }
    }
}

fn json_value(store: &Store, v: &Value) -> serde_json::Value {
    use serde_json::json;
    match v {
        Value::Entity(id) => json!({ "id": id.as_str(), "name": store.display_name(id) }),
        Value::Text(t) => json!(t),
        Value::Quantity(q) => json!({ "magnitude": q.magnitude.to_string(), "unit": q.unit }),
        Value::Date(d) => json!(d.to_string()),
        Value::Boolean(b) => json!(b),
    }
}

fn json_binding(store: &Store, b: &Binding) -> serde_json::Value {
    use serde_json::json;
    match b {
        Binding::Value(v) => json_value(store, v),
        Binding::Many(vs) => {
            serde_json::Value::Array(vs.iter().map(|v| json_value(store, v)).collect())
        }
        Binding::Qualifiers(quals) => serde_json::Value::Array(
            quals
                .iter()
                .map(|(q, v)| json!({ "q": store.display_name(q), "v": json_value(store, v) }))
                .collect(),
        ),
    }
}

/// Display rows remaining on and after the given page.
pub fn remaining_after_page(rs: &ResultSet, page_index: usize) -> usize {
    let size = if rs.page_size == 0 { eql_core::eval::DEFAULT_PAGE_SIZE } else { rs.page_size };
    rs.display_order().len().saturating_sub(size.saturating_mul(page_index + 1))
}

/// Renders one page of a result set. Grouped results print group by
/// group with a header per group. Reports and aggregate annotations
/// print with page 0 only; a trailing marker names the remaining rows.
pub fn render_result(store: &Store, rs: &ResultSet, mode: OutputMode, page_index: usize) -> String {
    let order = rs.display_order();
    let size = if rs.page_size == 0 { eql_core::eval::DEFAULT_PAGE_SIZE } else { rs.page_size };
    let start = size.saturating_mul(page_index).min(order.len());
    let end = start.saturating_add(size).min(order.len());
    let slice = &order[start..end];
    let remaining = order.len() - end;
    let mut out = String::new();
    match mode {
        OutputMode::Table => {
            if rs.rows.is_empty() {
                out.push_str("(no rows)\n");
            }
            let mut current_group: Option<usize> = None;
            for &(group, row_index) in slice {
                if let Some(gi) = group {
                    if current_group != Some(gi) {
                        out.push_str(&group_header(store, rs, gi));
                        out.push('\n');
                        current_group = Some(gi);
                    }
                }
                let row = &rs.rows[row_index];
                let mut cells: Vec<String> = Vec::new();
                for col in &rs.columns {
                    let Some(binding) = row.get(&col.key) else { continue };
                    if col.label.is_empty() {
                        cells.push(binding_text(store, binding));
                    } else {
                        cells.push(format!("{} = {}", col.label, binding_text(store, binding)));
                    }
                }
                out.push_str(&cells.join("  "));
                out.push('\n');
            }
            if page_index == 0 {
                render_aggregate_notes(store, rs, &mut out);
                render_reports(store, rs, &mut out);
            }
            if remaining > 0 {
                out.push_str(&format!("... ({remaining} more rows)\n"));
            }
        }
        OutputMode::Csv => {
            if page_index == 0 {
                let mut header: Vec<String> = rs
                    .columns
                    .iter()
                    .map(|c| csv_field(column_label(&c.label)))
                    .collect();
                if rs.groups.is_some() {
                    header.insert(0, "group".to_string());
                }
                out.push_str(&header.join(","));
                out.push('\n');
            }
            for &(group, row_index) in slice {
                let row = &rs.rows[row_index];
                let mut cells: Vec<String> = Vec::new();
                if rs.groups.is_some() {
                    cells.push(csv_field(&group_cell(store, rs, group)));
                }
                for col in &rs.columns {
                    let cell = row
                        .get(&col.key)
                        .map(|b| binding_text(store, b))
                        .unwrap_or_default();
                    cells.push(csv_field(&cell));
                }
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        OutputMode::JsonLines => {
            for &(group, row_index) in slice {
                let row = &rs.rows[row_index];
                let mut obj = serde_json::Map::new();
                if rs.groups.is_some() {
                    let v = match group
                        .and_then(|gi| rs.groups.as_ref().and_then(|gs| gs.get(gi)))
                        .and_then(|g| g.key.as_ref())
                    {
                        Some(v) => json_value(store, v),
                        None => serde_json::Value::Null,
                    };
                    obj.insert("group".to_string(), v);
                }
                for col in &rs.columns {
                    if let Some(b) = row.get(&col.key) {
                        obj.insert(column_label(&col.label).to_string(), json_binding(store, b));
                    }
                }
                out.push_str(&serde_json::Value::Object(obj).to_string());
                out.push('\n');
            }
        }
    }
    out
}

fn statement_line(store: &Store, stmt: &eql_core::store::SpoStatement) -> String {
    let mut line = format!(
        "{} : {} : {}",
        store.display_name(&stmt.s),
        store.display_name(&stmt.p),
        value_text(store, &stmt.o)
    );
    if !stmt.qualifiers.is_empty() {
        let quals: Vec<String> = stmt
            .qualifiers
            .iter()
            .map(|(q, v)| format!("{} : {}", store.display_name(q), value_text(store, v)))
            .collect();
        line.push_str(&format!(" ({})", quals.join(", ")));
    }
    line
}

/// Plain-text knowledge card: all facts about the entity, then the
/// statements referencing it.
pub fn render_card_text(store: &Store, card: &KnowledgeCard) -> String {
    let mut out = format!(
        "{}\n",
        value_with_id(store, &Value::Entity(card.entity.clone()))
    );
    if let Some(e) = store.entity(&card.entity) {
        if !e.aliases.is_empty() {
            out.push_str(&format!("aliases: {}\n", e.aliases.join(", ")));
        }
    }
    for stmt in &card.facts {
        out.push_str(&format!(
            "  {} : {}",
            store.display_name(&stmt.p),
            value_text(store, &stmt.o)
        ));
        if !stmt.qualifiers.is_empty() {
            let quals: Vec<String> = stmt
                .qualifiers
                .iter()
                .map(|(q, v)| format!("{} : {}", store.display_name(q), value_text(store, v)))
                .collect();
            out.push_str(&format!(" ({})", quals.join(", ")));
        }
        out.push('\n');
    }
    if !card.referenced_by.is_empty() {
        out.push_str("referenced by:\n");
        for stmt in &card.referenced_by {
            out.push_str(&format!("  {}\n", statement_line(store, stmt)));
        }
    }
    out
}

/// CSV knowledge card: one row per fact, qualifiers flattened into extra
/// columns (the union of qualifier properties across the facts).
pub fn render_card_csv(store: &Store, card: &KnowledgeCard) -> String {
    let mut qual_columns: Vec<String> = Vec::new();
    for stmt in &card.facts {
        for (q, _) in &stmt.qualifiers {
            let name = store.display_name(q).to_string();
            if !qual_columns.contains(&name) {
                qual_columns.push(name);
            }
        }
    }
    let mut out = String::new();
    let mut header = vec!["s".to_string(), "p".to_string(), "o".to_string()];
    header.extend(qual_columns.iter().cloned());
    out.push_str(&header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for stmt in &card.facts {
        let mut cells = vec![
            csv_field(store.display_name(&stmt.s)),
            csv_field(store.display_name(&stmt.p)),
            csv_field(&value_text(store, &stmt.o)),
        ];
        for qname in &qual_columns {
            let cell = stmt
                .qualifiers
                .iter()
                .find(|(q, _)| store.display_name(q) == qname)
                .map(|(_, v)| value_text(store, v))
                .unwrap_or_default();
            cells.push(csv_field(&cell));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
