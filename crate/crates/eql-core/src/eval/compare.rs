//! Value comparison, aggregation, ordering, and grouping.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::rows::{Binding, BindingRow, Group};
use super::EvalError;
use crate::decimal::Decimal;
use crate::parser::{AggFunc, CmpOp, Direction};
use crate::store::Store;
use crate::value::{Quantity, Value};

/// Comparison outcome. Mixed units or mismatched tags are neither true
/// nor false and never satisfy a filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriState {
    True,
    False,
    Incomparable,
}

impl TriState {
    pub fn is_true(&self) -> bool {
        matches!(self, TriState::True)
    }
}

fn ordering(lhs: &Value, rhs: &Value) -> Option<Ordering> {
    match (lhs, rhs) {
        (Value::Quantity(a), Value::Quantity(b)) if a.unit == b.unit => {
            Some(a.magnitude.cmp(&b.magnitude))
        }
        (Value::Date(a), Value::Date(b)) => {
            Some(Value::date_sort_key(a).cmp(&Value::date_sort_key(b)))
        }
        // a bare-number literal coerces against a date as its year
        (Value::Date(d), Value::Quantity(q)) if q.unit.is_empty() => {
            let year = q.magnitude.to_int()?;
            Some((Value::date_sort_key(d).0 as i128).cmp(&year).then_with(|| {
                match Value::date_sort_key(d) {
                    (_, 0, 0) => Ordering::Equal,
                    _ => Ordering::Greater,
                }
            }))
        }
        (Value::Quantity(q), Value::Date(_)) if q.unit.is_empty() => {
            ordering(rhs, lhs).map(Ordering::reverse)
        }
        (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
        _ => None,
    }
}

/// Compares two values under an operator. Entities and booleans support
/// only `=` and `!=`; everything else is ordered within its own tag.
pub fn compare(lhs: &Value, op: CmpOp, rhs: &Value) -> TriState {
    match op {
        CmpOp::Eq | CmpOp::Ne => {
            let eq = match (lhs, rhs) {
                (Value::Entity(a), Value::Entity(b)) => a == b,
                (Value::Boolean(a), Value::Boolean(b)) => a == b,
                (Value::Entity(_), _) | (_, Value::Entity(_)) => return TriState::Incomparable,
                (Value::Boolean(_), _) | (_, Value::Boolean(_)) => return TriState::Incomparable,
                _ => match ordering(lhs, rhs) {
                    Some(ord) => ord == Ordering::Equal,
                    None => return TriState::Incomparable,
                },
            };
            if eq == (op == CmpOp::Eq) {
                TriState::True
            } else {
                TriState::False
            }
        }
        _ => {
            let ord = match ordering(lhs, rhs) {
                Some(ord) => ord,
                None => return TriState::Incomparable,
            };
            let holds = match op {
                CmpOp::Gt => ord == Ordering::Greater,
                CmpOp::Ge => ord != Ordering::Less,
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            };
            if holds {
                TriState::True
            } else {
                TriState::False
            }
        }
    }
}

/// Computes an aggregate over a multiset of values. avg/sum require
/// quantities of one unit; max/min also accept dates.
pub fn aggregate(func: AggFunc, values: &[Value]) -> Result<Value, EvalError> {
    match func {
        AggFunc::Count => Ok(Value::Quantity(Quantity::bare(Decimal::from_int(
            values.len() as i64,
        )))),
        AggFunc::Sum | AggFunc::Avg => {
            if values.is_empty() {
                return match func {
                    AggFunc::Sum => Ok(Value::Quantity(Quantity::bare(Decimal::zero()))),
                    _ => Err(EvalError::EmptyAggregate(func)),
                };
            }
            let mut unit: Option<&str> = None;
            let mut sum = Decimal::zero();
            for v in values {
                let Value::Quantity(q) = v else {
                    return Err(EvalError::AggregateType(func, v.to_string()));
                };
                match unit {
                    None => unit = Some(&q.unit),
                    Some(u) if u == q.unit => {}
                    Some(u) => {
                        return Err(EvalError::MixedUnits(func, u.to_string(), q.unit.clone()))
                    }
                }
                sum = sum
                    .checked_add(&q.magnitude)
                    .map_err(|e| EvalError::Arithmetic(e.to_string()))?;
            }
            let unit = unit.unwrap_or("").to_string();
            if func == AggFunc::Sum {
                return Ok(Value::Quantity(Quantity { magnitude: sum, unit }));
            }
            let avg = sum
                .checked_div_int(values.len() as i128)
                .map_err(|e| EvalError::Arithmetic(e.to_string()))?;
            Ok(Value::Quantity(Quantity { magnitude: avg, unit }))
        }
        AggFunc::Max | AggFunc::Min => {
            if values.is_empty() {
                return Err(EvalError::EmptyAggregate(func));
            }
            let mut best = &values[0];
            for v in &values[1..] {
                let ord = ordering(v, best).ok_or_else(|| match (v, best) {
                    (Value::Quantity(a), Value::Quantity(b)) => {
                        EvalError::MixedUnits(func, b.unit.clone(), a.unit.clone())
                    }
                    _ => EvalError::AggregateType(func, v.to_string()),
                })?;
                let take = match func {
                    AggFunc::Max => ord == Ordering::Greater,
                    _ => ord == Ordering::Less,
                };
                if take {
                    best = v;
                }
            }
            Ok(best.clone())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KeyKind {
    Quantity,
    Date,
    Text,
    Entity,
    Boolean,
}

fn key_kind(v: &Value) -> KeyKind {
    match v {
        Value::Quantity(_) => KeyKind::Quantity,
        Value::Date(_) => KeyKind::Date,
        Value::Text(_) => KeyKind::Text,
        Value::Entity(_) => KeyKind::Entity,
        Value::Boolean(_) => KeyKind::Boolean,
    }
}

fn sort_value_cmp(store: &Store, a: &Value, b: &Value) -> Result<Ordering, EvalError> {
    match (a, b) {
        (Value::Entity(x), Value::Entity(y)) => {
            Ok(store.display_name(x).cmp(store.display_name(y)).then_with(|| x.cmp(y)))
        }
        (Value::Boolean(x), Value::Boolean(y)) => Ok(x.cmp(y)),
        _ => ordering(a, b).ok_or_else(|| {
            EvalError::OrderKeyMismatch(a.to_string(), b.to_string())
        }),
    }
}

/// Stable sort by the per-row key; rows lacking the key sink to the end
/// in both directions. Mixed key kinds (or mixed quantity units) fail.
pub fn order_rows(
    store: &Store,
    rows: &mut Vec<BindingRow>,
    keys: &[Option<Value>],
    direction: Direction,
) -> Result<(), EvalError> {
    debug_assert_eq!(rows.len(), keys.len());
    let mut kind: Option<KeyKind> = None;
    let mut unit: Option<&str> = None;
    for k in keys.iter().flatten() {
        let kk = key_kind(k);
        match kind {
            None => kind = Some(kk),
            Some(existing) if existing == kk => {}
            Some(_) => {
                return Err(EvalError::OrderKeyMismatch(
                    k.to_string(),
                    String::from("(other rows)"),
                ))
            }
        }
        if let Value::Quantity(q) = k {
            match unit {
                None => unit = Some(&q.unit),
                Some(u) if u == q.unit => {}
                Some(u) => {
                    return Err(EvalError::OrderKeyMismatch(q.to_string(), u.to_string()))
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut err: Option<EvalError> = None;
    order.sort_by(|&i, &j| match (&keys[i], &keys[j]) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(a), Some(b)) => match sort_value_cmp(store, a, b) {
            Ok(ord) => match direction {
                Direction::Asc => ord,
                Direction::Desc => ord.reverse(),
            },
            Err(e) => {
                err.get_or_insert(e);
                Ordering::Equal
            }
        },
    });
    if let Some(e) = err {
        return Err(e);
    }
    let sorted: Vec<BindingRow> = order.iter().map(|&i| rows[i].clone()).collect();
    *rows = sorted;
    Ok(())
}

/// Partitions rows by key value; groups keep first-appearance order under
/// the active sort, rows without a key form the final "(unknown)" group,
/// and a multi-valued key places the row in each matching group.
pub fn group_rows(rows: &[BindingRow], keys: &[Vec<Value>]) -> Vec<Group> {
    debug_assert_eq!(rows.len(), keys.len());
    let mut groups: Vec<Group> = Vec::new();
    let mut unknown: Vec<usize> = Vec::new();
    for (i, key_values) in keys.iter().enumerate() {
        if key_values.is_empty() {
            unknown.push(i);
            continue;
        }
        let mut seen: Vec<&Value> = Vec::new();
        for kv in key_values {
            if seen.contains(&kv) {
                continue;
            }
            seen.push(kv);
            match groups.iter_mut().find(|g| g.key.as_ref() == Some(kv)) {
                Some(g) => g.row_indices.push(i),
                None => groups.push(Group { key: Some(kv.clone()), row_indices: alloc::vec![i] }),
            }
        }
    }
    if !unknown.is_empty() {
        groups.push(Group { key: None, row_indices: unknown });
    }
    groups
}

/// Splits rows into aggregation scopes: one per distinct combination of
/// every bound variable except the aggregate argument. Used by bare
/// aggregate conditions such as `(count (?y) >= 10)`.
pub fn partition_excluding(
    rows: &[BindingRow],
    exclude: &str,
) -> Vec<Vec<usize>> {
    let mut partitions: Vec<(Vec<(String, Binding)>, Vec<usize>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let key: Vec<(String, Binding)> = row
            .vars()
            .filter(|(k, _)| k.as_str() != exclude)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        match partitions.iter_mut().find(|(k, _)| *k == key) {
            Some((_, idxs)) => idxs.push(i),
            None => partitions.push((key, alloc::vec![i])),
        }
    }
    partitions.into_iter().map(|(_, idxs)| idxs).collect()
}
