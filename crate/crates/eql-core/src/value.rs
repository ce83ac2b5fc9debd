//! Object and qualifier values: entity references, text, quantities,
//! dates, booleans.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::decimal::Decimal;
use crate::entity::EntityId;

/// A calendar date, either a bare year or a full `YYYY-MM-DD` day.
/// Ordering is chronological; a bare year sorts before any full date in
/// the same year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Date {
    Year(i32),
    Ymd(i32, u8, u8),
}

impl Date {
    pub fn year(&self) -> i32 {
        match self {
            Date::Year(y) => *y,
            Date::Ymd(y, _, _) => *y,
        }
    }

    fn sort_key(&self) -> (i32, u8, u8) {
        match self {
            Date::Year(y) => (*y, 0, 0),
            Date::Ymd(y, m, d) => (*y, *m, *d),
        }
    }

    /// Parses `YYYY` or `YYYY-MM-DD`.
    pub fn parse(text: &str) -> Option<Date> {
        let text = text.trim();
        if text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit()) {
            return Some(Date::Year(text.parse().ok()?));
        }
        let mut parts = text.split('-');
        let y: i32 = parts.next()?.parse().ok()?;
        let m: u8 = parts.next()?.parse().ok()?;
        let d: u8 = parts.next()?.parse().ok()?;
        if parts.next().is_some() || !(1..=12).contains(&m) || !(1..=31).contains(&d) {
            return None;
        }
        Some(Date::Ymd(y, m, d))
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Date::Year(y) => write!(f, "{y}"),
            Date::Ymd(y, m, d) => write!(f, "{y}-{m:02}-{d:02}"),
        }
    }
}

/// A magnitude with a unit tag. The unit is plain text ("SEK", "km",
/// "million square kilometers"); an empty unit is a bare number. Units
/// are never converted: quantities compare only within one unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quantity {
    pub magnitude: Decimal,
    pub unit: String,
}

impl Quantity {
    pub fn new(magnitude: Decimal, unit: &str) -> Self {
        Quantity { magnitude, unit: unit.to_string() }
    }

    pub fn bare(magnitude: Decimal) -> Self {
        Quantity { magnitude, unit: String::new() }
    }

    /// Recognizes `8000000 SEK`, `SEK 8000000`, `1.52 million square
    /// kilometers`, or a bare number. Both unit orders normalize to the
    /// same quantity.
    pub fn parse(text: &str) -> Option<Quantity> {
        let text = text.trim();
        if let Ok(mag) = Decimal::parse(text) {
            return Some(Quantity::bare(mag));
        }
        // number first, unit words after
        if let Some((head, tail)) = text.split_once(char::is_whitespace) {
            if let Ok(mag) = Decimal::parse(head) {
                let unit = normalize_spaces(tail);
                if !unit.is_empty() && !unit.starts_with(|c: char| c.is_ascii_digit()) {
                    return Some(Quantity { magnitude: mag, unit });
                }
            }
            // single unit word first, number after ("SEK 8000000")
            if !head.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.') {
                let tail = tail.trim();
                if let Ok(mag) = Decimal::parse(tail) {
                    return Some(Quantity { magnitude: mag, unit: head.to_string() });
                }
            }
        }
        None
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit.is_empty() {
            write!(f, "{}", self.magnitude)
        } else {
            write!(f, "{} {}", self.magnitude, self.unit)
        }
    }
}

fn normalize_spaces(s: &str) -> String {
    let mut out = String::new();
    for w in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// Tagged object/qualifier content.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Entity(EntityId),
    Text(String),
    Quantity(Quantity),
    Date(Date),
    Boolean(bool),
}

impl Value {
    pub fn text(s: &str) -> Value {
        Value::Text(s.to_string())
    }

    /// Types a non-entity object/qualifier text. In a qualifier named
    /// "date" a bare 4-digit year (or full date) becomes a [`Date`]; a
    /// full `YYYY-MM-DD` form is a date anywhere; then the quantity rule
    /// applies; everything else stays text.
    pub fn parse_literal(text: &str, date_qualifier: bool) -> Value {
        if date_qualifier {
            if let Some(d) = Date::parse(text) {
                return Value::Date(d);
            }
        } else if text.contains('-') {
            if let Some(d @ Date::Ymd(..)) = Date::parse(text) {
                return Value::Date(d);
            }
        }
        match Quantity::parse(text) {
            Some(q) => Value::Quantity(q),
            None => Value::text(text),
        }
    }

    /// Equality used by pattern matching and `=` comparisons: entities by
    /// id, quantities by magnitude within one unit, and a date matches a
    /// bare-number literal naming its year.
    pub fn matches(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Entity(a), Value::Entity(b)) => a == b,
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Quantity(a), Value::Quantity(b)) => {
                a.unit == b.unit && a.magnitude == b.magnitude
            }
            (Value::Date(a), Value::Date(b)) => a.sort_key() == b.sort_key(),
            (Value::Boolean(a), Value::Boolean(b)) => a == b,
            (Value::Date(d), Value::Quantity(q)) | (Value::Quantity(q), Value::Date(d)) => {
                q.unit.is_empty() && q.magnitude.to_int() == Some(d.year() as i128)
            }
            _ => false,
        }
    }

    /// Canonical ordering key for dedup and BTree storage. Distinct from
    /// chronological/numeric comparison, which lives in the evaluator.
    pub fn sort_tag(&self) -> u8 {
        match self {
            Value::Entity(_) => 0,
            Value::Text(_) => 1,
            Value::Quantity(_) => 2,
            Value::Date(_) => 3,
            Value::Boolean(_) => 4,
        }
    }

    pub fn as_entity(&self) -> Option<&EntityId> {
        match self {
            Value::Entity(id) => Some(id),
            _ => None,
        }
    }

    pub fn date_sort_key(d: &Date) -> (i32, u8, u8) {
        d.sort_key()
    }
}

impl fmt::Display for Value {
    /// Store-independent rendering; entity values show their id. Name
    /// rendering needs the store and lives with the result formatting.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Entity(id) => write!(f, "{id}"),
            Value::Text(s) => f.write_str(s),
            Value::Quantity(q) => write!(f, "{q}"),
            Value::Date(d) => write!(f, "{d}"),
            Value::Boolean(b) => write!(f, "{b}"),
        }
    }
}

/// Qualifier list attached to a statement: ordered `(property, value)`
/// pairs. Order is kept for display but ignored by equality.
pub type Qualifiers = Vec<(EntityId, Value)>;
