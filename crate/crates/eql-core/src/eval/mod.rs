//! Query evaluation: name resolution, pattern joins with rewrite
//! expansion, logic connectors, conditions, aggregation with the
//! statement-scope rule, clauses, projection, and pagination.

mod compare;
mod rows;

pub use compare::{aggregate, compare, group_rows, order_rows, partition_excluding, TriState};
pub use rows::{
    binding_text, value_text, value_with_id, AggregateInfo, Binding, BindingRow, Column, Group,
    Page, Report, ResultSet, DEFAULT_PAGE_SIZE,
};

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::entity::{EntityId, EntityKind};
use crate::parser::{
    AggFunc, CmpOp, Condition, Node, Operand, QualifierPattern, QueryAst,
    SpoPatternAst, Statement, Term, VarPath,
};
use crate::store::{NameSuggestion, Resolution, SpoPattern, Store};
use crate::text::Template;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    NameNotFound { surface: String, suggestions: Vec<NameSuggestion> },
    NotAProperty(String),
    PathOnNonEntity(String),
    OrderKeyMismatch(String, String),
    EmptyAggregate(AggFunc),
    MixedUnits(AggFunc, String, String),
    AggregateType(AggFunc, String),
    AggregateInCondition,
    Arithmetic(String),
    UnboundVariable(String),
    Rewrite(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NameNotFound { surface, suggestions } => {
                write!(f, "do not found {surface:?}")?;
                if let Some(s) = suggestions.first() {
                    write!(f, " (closest: {})", s.name)?;
                }
                Ok(())
            }
            EvalError::NotAProperty(name) => write!(f, "{name} is not a property"),
            EvalError::PathOnNonEntity(text) => {
                write!(f, "property path applied to non-entity value {text}")
            }
            EvalError::OrderKeyMismatch(a, b) => {
                write!(f, "order key mixes incomparable values ({a} vs {b})")
            }
            EvalError::EmptyAggregate(func) => {
                write!(f, "{} over an empty row set", func.name())
            }
            EvalError::MixedUnits(func, a, b) => {
                write!(f, "{} over mixed units ({a:?} vs {b:?})", func.name())
            }
            EvalError::AggregateType(func, v) => {
                write!(f, "{} over non-quantity value {v}", func.name())
            }
            EvalError::AggregateInCondition => {
                write!(f, "aggregate call must be a direct conjunct condition")
            }
            EvalError::Arithmetic(msg) => write!(f, "{msg}"),
            EvalError::UnboundVariable(v) => write!(f, "variable ?{v} is not bound"),
            EvalError::Rewrite(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for EvalError {}

pub struct EvalOptions<'a> {
    pub page_size: usize,
    /// Offer fuzzy suggestions when a name fails to resolve.
    pub fuzzy: bool,
    /// Called with the row count before sorting/grouping large results.
    pub progress: Option<&'a dyn Fn(usize)>,
    /// Row count past which the progress hook fires.
    pub progress_threshold: usize,
}

pub const PROGRESS_THRESHOLD: usize = 100_000;

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        EvalOptions {
            page_size: DEFAULT_PAGE_SIZE,
            fuzzy: true,
            progress: None,
            progress_threshold: PROGRESS_THRESHOLD,
        }
    }
}

/// Ranked fuzzy candidates for a name that failed resolution.
pub fn suggest_similar(store: &Store, surface: &str) -> Vec<NameSuggestion> {
    store.similar_names(surface)
}

/// Chained property lookup from a base value. An empty path is the base
/// itself; a dead end yields no values; a non-entity with hops left is an
/// error.
pub fn resolve_path(
    store: &Store,
    base: &Value,
    properties: &[EntityId],
) -> Result<Vec<Value>, EvalError> {
    let mut current = alloc::vec![base.clone()];
    for prop in properties {
        let mut next: Vec<Value> = Vec::new();
        for v in &current {
            let Value::Entity(id) = v else {
                return Err(EvalError::PathOnNonEntity(v.to_string()));
            };
            for stmt in store.lookup(&SpoPattern {
                s: Some(id.clone()),
                p: Some(prop.clone()),
                ..SpoPattern::default()
            }) {
                if !next.contains(&stmt.o) {
                    next.push(stmt.o.clone());
                }
            }
        }
        current = next;
    }
    Ok(current)
}

// ---- resolved representation ----

#[derive(Debug, Clone)]
enum RTerm {
    Const(Value),
    Var(String),
    Path { base: Box<RTerm>, props: Vec<EntityId> },
    /// `(s : p)` in an operand position: the set of objects `o` with
    /// `(s, p, o)` in the store.
    Lookup { s: Box<RTerm>, p: Box<RTerm> },
}

#[derive(Debug, Clone)]
enum RQuals {
    All(String),
    List(Vec<(RTerm, RTerm)>),
}

#[derive(Debug, Clone)]
struct RPattern {
    s: RTerm,
    p: RTerm,
    o: RTerm,
    quals: RQuals,
}

#[derive(Debug, Clone)]
enum ROperand {
    Term(RTerm),
    Agg(AggFunc, String),
}

#[derive(Debug, Clone)]
enum RCond {
    Compare(ROperand, CmpOp, ROperand),
    MatchTemplate(ROperand, Template),
    Bool(bool),
}

#[derive(Debug, Clone)]
enum RNode {
    Pattern(RPattern),
    Cond(RCond),
    And(Vec<RNode>),
    Or(Vec<RNode>),
    Not(Box<RNode>),
}

#[derive(Debug, Clone)]
struct RKey {
    var: String,
    props: Vec<EntityId>,
    label: String,
}

enum RStatement {
    Conjunct(RNode),
    Assign { var: String, func: AggFunc, arg: String },
}

/// Name roles decide how a bare name resolves: subjects and properties
/// must be entities (with fuzzy suggestions on a miss); object and
/// qualifier values fall back to literal parsing.
#[derive(Clone, Copy, PartialEq)]
enum Role {
    Subject,
    Property,
    Value { date_qualifier: bool },
}

struct Resolver<'a> {
    store: &'a Store,
    fuzzy: bool,
    reports: Vec<Report>,
    reported: BTreeSet<String>,
    fresh: u32,
    expand_fresh: u32,
    /// Public variables (user-named and `?`-projected) in order of first
    /// appearance.
    var_order: Vec<String>,
}

fn internal_var(name: &str) -> bool {
    name.starts_with("_s") || name.starts_with("_e")
}

impl<'a> Resolver<'a> {
    fn new(store: &'a Store, fuzzy: bool) -> Self {
        Resolver {
            store,
            fuzzy,
            reports: Vec::new(),
            reported: BTreeSet::new(),
            fresh: 0,
            expand_fresh: 0,
            var_order: Vec::new(),
        }
    }

    fn see_var(&mut self, name: &str) {
        if !internal_var(name) && !self.var_order.iter().any(|v| v == name) {
            self.var_order.push(name.to_string());
        }
    }

    fn fresh_anon(&mut self) -> String {
        self.fresh += 1;
        let name = format!("_a{}", self.fresh);
        self.var_order.push(name.clone());
        name
    }

    fn fresh_subject(&mut self) -> String {
        self.fresh += 1;
        format!("_s{}", self.fresh)
    }

    fn note_ambiguity(&mut self, surface: &str, report: crate::store::DuplicateNameEntry) {
        let key = crate::text::name_key(surface);
        if self.reported.insert(key) {
            self.reports.push(Report::DuplicateName(report));
        }
    }

    fn resolve_entity(&mut self, name: &str) -> Result<EntityId, EvalError> {
        match self.store.resolve_name(name) {
            Resolution::Exact(id) | Resolution::Alias(id) => Ok(id),
            Resolution::Ambiguous { default, report } => {
                self.note_ambiguity(name, report);
                Ok(default)
            }
            Resolution::NotFound { suggestions } => Err(EvalError::NameNotFound {
                surface: name.to_string(),
                suggestions: if self.fuzzy { suggestions } else { Vec::new() },
            }),
        }
    }

    fn resolve_property(&mut self, name: &str) -> Result<EntityId, EvalError> {
        let id = self.resolve_entity(name)?;
        if id.kind() != EntityKind::Property {
            return Err(EvalError::NotAProperty(name.to_string()));
        }
        Ok(id)
    }

    fn resolve_value(&mut self, name: &str, date_qualifier: bool) -> Value {
        match self.store.resolve_name(name) {
            Resolution::Exact(id) | Resolution::Alias(id) => Value::Entity(id),
            Resolution::Ambiguous { default, report } => {
                self.note_ambiguity(name, report);
                Value::Entity(default)
            }
            Resolution::NotFound { .. } => Value::parse_literal(name, date_qualifier),
        }
    }

    /// Replaces subject expressions with fresh internal variables and
    /// returns the prefix patterns that bind them.
    fn desugar_term(&mut self, term: &Term, prefixes: &mut Vec<SpoPatternAst>) -> Term {
        match term {
            Term::SubjectExpr(s, p) => {
                let s = self.desugar_term(s, prefixes);
                let p = self.desugar_term(p, prefixes);
                let var = self.fresh_subject();
                prefixes.push(SpoPatternAst {
                    s,
                    p,
                    o: Term::Var(var.clone()),
                    qualifiers: QualifierPattern::empty(),
                });
                Term::Var(var)
            }
            Term::Path { base, properties } => Term::Path {
                base: Box::new(self.desugar_term(base, prefixes)),
                properties: properties.clone(),
            },
            other => other.clone(),
        }
    }

    /// Lowers a subject-expression-free term into the resolved form.
    fn lower_term(&mut self, term: &Term, role: Role) -> Result<RTerm, EvalError> {
        match term {
            Term::Name(name) => Ok(match role {
                Role::Subject => RTerm::Const(Value::Entity(self.resolve_entity(name)?)),
                Role::Property => RTerm::Const(Value::Entity(self.resolve_property(name)?)),
                Role::Value { date_qualifier } => {
                    RTerm::Const(self.resolve_value(name, date_qualifier))
                }
            }),
            Term::Var(v) => {
                self.see_var(v);
                Ok(RTerm::Var(v.clone()))
            }
            Term::Anon => Ok(RTerm::Var(self.fresh_anon())),
            Term::Path { base, properties } => {
                let base = self.lower_term(base, role)?;
                let props = properties
                    .iter()
                    .map(|p| self.resolve_property(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(RTerm::Path { base: Box::new(base), props })
            }
            Term::SubjectExpr(..) => unreachable!("subject expressions are desugared first"),
        }
    }

    fn qualifier_is_date(&self, q: &RTerm) -> bool {
        if let RTerm::Const(Value::Entity(id)) = q {
            if let Some(e) = self.store.entity(id) {
                return e.canonical_name.eq_ignore_ascii_case("date");
            }
        }
        false
    }

    fn lower_flat_pattern(&mut self, p: &SpoPatternAst) -> Result<RPattern, EvalError> {
        let s = self.lower_term(&p.s, Role::Subject)?;
        let pp = self.lower_term(&p.p, Role::Property)?;
        let o = self.lower_term(&p.o, Role::Value { date_qualifier: false })?;
        let quals = match &p.qualifiers {
            QualifierPattern::All => RQuals::All(self.fresh_anon()),
            QualifierPattern::List(pairs) => {
                let mut out = Vec::new();
                for (q, v) in pairs {
                    let q = self.lower_term(q, Role::Property)?;
                    let date_qualifier = self.qualifier_is_date(&q);
                    let v = self.lower_term(v, Role::Value { date_qualifier })?;
                    out.push((q, v));
                }
                RQuals::List(out)
            }
        };
        Ok(RPattern { s, p: pp, o, quals })
    }

    /// Gives each `?` position a variable name before expansion, so the
    /// base and expanded branches bind the same column.
    fn name_anons(&mut self, term: &Term) -> Term {
        match term {
            Term::Anon => Term::Var(self.fresh_anon()),
            Term::Path { base, properties } => Term::Path {
                base: Box::new(self.name_anons(base)),
                properties: properties.clone(),
            },
            other => other.clone(),
        }
    }

    /// Lowers a pattern: desugars subject expressions, expands derived
    /// properties, resolves names.
    fn lower_pattern(&mut self, pattern: &SpoPatternAst) -> Result<RNode, EvalError> {
        let mut prefixes = Vec::new();
        let s = self.desugar_term(&pattern.s, &mut prefixes);
        let p = self.desugar_term(&pattern.p, &mut prefixes);
        let o = self.desugar_term(&pattern.o, &mut prefixes);
        let main = SpoPatternAst {
            s: self.name_anons(&s),
            p: self.name_anons(&p),
            o: self.name_anons(&o),
            qualifiers: match &pattern.qualifiers {
                QualifierPattern::All => QualifierPattern::All,
                QualifierPattern::List(pairs) => QualifierPattern::List(
                    pairs
                        .iter()
                        .map(|(q, v)| {
                            let q = self.desugar_term(q, &mut prefixes);
                            let v = self.desugar_term(v, &mut prefixes);
                            (self.name_anons(&q), self.name_anons(&v))
                        })
                        .collect(),
                ),
            },
        };
        let unqualified = matches!(&main.qualifiers, QualifierPattern::List(l) if l.is_empty());
        let derived = crate::rewrite::pattern_property(self.store, &main)
            .map(|p| self.store.rules.has_rules(&p))
            .unwrap_or(false);
        let main_node = if derived && unqualified {
            let expanded =
                crate::rewrite::expand_for_eval(self.store, &main, &mut self.expand_fresh)
                    .map_err(|e| EvalError::Rewrite(e.to_string()))?;
            // first disjunct is the base pattern itself; lower it flat so
            // it does not expand again
            match expanded {
                Node::Or(branches) => {
                    let mut lowered = alloc::vec![RNode::Pattern(self.lower_flat_pattern(&main)?)];
                    for b in branches.into_iter().skip(1) {
                        lowered.push(self.lower_node(&b)?);
                    }
                    RNode::Or(lowered)
                }
                other => self.lower_node(&other)?,
            }
        } else {
            RNode::Pattern(self.lower_flat_pattern(&main)?)
        };
        if prefixes.is_empty() {
            Ok(main_node)
        } else {
            let mut children = Vec::new();
            for pre in &prefixes {
                children.push(self.lower_pattern(pre)?);
            }
            children.push(main_node);
            Ok(RNode::And(children))
        }
    }

    fn lower_operand_term(&mut self, term: &Term) -> Result<RTerm, EvalError> {
        match term {
            Term::SubjectExpr(s, p) => Ok(RTerm::Lookup {
                s: Box::new(self.lower_operand_term(s)?),
                p: Box::new(self.lower_operand_term(p)?),
            }),
            Term::Path { base, properties } => {
                let base = self.lower_operand_term(base)?;
                let props = properties
                    .iter()
                    .map(|p| self.resolve_property(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(RTerm::Path { base: Box::new(base), props })
            }
            Term::Name(name) => Ok(RTerm::Const(self.resolve_value(name, false))),
            Term::Var(v) => {
                self.see_var(v);
                Ok(RTerm::Var(v.clone()))
            }
            Term::Anon => Err(EvalError::UnboundVariable(String::from("?"))),
        }
    }

    fn lower_operand(&mut self, op: &Operand) -> Result<ROperand, EvalError> {
        Ok(match op {
            Operand::Term(t) => ROperand::Term(self.lower_operand_term(t)?),
            Operand::Agg(f, v) => ROperand::Agg(*f, v.clone()),
        })
    }

    fn lower_condition(&mut self, c: &Condition) -> Result<RCond, EvalError> {
        Ok(match c {
            Condition::Compare(l, op, r) => {
                RCond::Compare(self.lower_operand(l)?, *op, self.lower_operand(r)?)
            }
            Condition::Match(l, raw) => {
                RCond::MatchTemplate(self.lower_operand(l)?, Template::compile(raw))
            }
            Condition::BoolConst(b) => RCond::Bool(*b),
        })
    }

    fn lower_node(&mut self, node: &Node) -> Result<RNode, EvalError> {
        Ok(match node {
            Node::Pattern(p) => self.lower_pattern(p)?,
            Node::Cond(c) => RNode::Cond(self.lower_condition(c)?),
            Node::And(cs) => RNode::And(
                cs.iter().map(|c| self.lower_node(c)).collect::<Result<Vec<_>, _>>()?,
            ),
            Node::Or(cs) => RNode::Or(
                cs.iter().map(|c| self.lower_node(c)).collect::<Result<Vec<_>, _>>()?,
            ),
            Node::Not(inner) => RNode::Not(Box::new(self.lower_node(inner)?)),
        })
    }

    fn lower_key(&mut self, vp: &VarPath) -> Result<RKey, EvalError> {
        let props = vp
            .properties
            .iter()
            .map(|p| self.resolve_property(p))
            .collect::<Result<Vec<_>, _>>()?;
        let mut label = vp.var.clone();
        for p in &vp.properties {
            label.push('.');
            label.push_str(p);
        }
        Ok(RKey { var: vp.var.clone(), props, label })
    }
}

// ---- execution ----

struct Engine<'a> {
    store: &'a Store,
}

#[derive(Debug, Clone)]
enum Slot {
    Fixed(Vec<Value>),
    Free(String),
}

impl<'a> Engine<'a> {
    fn slot(&self, term: &RTerm, row: &BindingRow) -> Result<Slot, EvalError> {
        Ok(match term {
            RTerm::Const(v) => Slot::Fixed(alloc::vec![v.clone()]),
            RTerm::Var(name) => match row.get(name) {
                Some(Binding::Value(v)) => Slot::Fixed(alloc::vec![v.clone()]),
                Some(Binding::Many(vs)) => Slot::Fixed(vs.clone()),
                Some(Binding::Qualifiers(_)) => Slot::Fixed(Vec::new()),
                None => Slot::Free(name.clone()),
            },
            RTerm::Path { base, props } => {
                let base_values = match self.slot(base, row)? {
                    Slot::Fixed(vs) => vs,
                    Slot::Free(name) => return Err(EvalError::UnboundVariable(name)),
                };
                let mut out = Vec::new();
                for b in &base_values {
                    for v in resolve_path(self.store, b, props)? {
                        if !out.contains(&v) {
                            out.push(v);
                        }
                    }
                }
                Slot::Fixed(out)
            }
            RTerm::Lookup { s, p } => {
                let mut out = Vec::new();
                let (Slot::Fixed(ss), Slot::Fixed(ps)) = (self.slot(s, row)?, self.slot(p, row)?)
                else {
                    return Err(EvalError::UnboundVariable(String::from(
                        "(unbound variable in subject expression operand)",
                    )));
                };
                for sv in &ss {
                    let Value::Entity(sid) = sv else { continue };
                    for pv in &ps {
                        let Value::Entity(pid) = pv else { continue };
                        for stmt in self.store.lookup(&SpoPattern {
                            s: Some(sid.clone()),
                            p: Some(pid.clone()),
                            ..SpoPattern::default()
                        }) {
                            if !out.contains(&stmt.o) {
                                out.push(stmt.o.clone());
                            }
                        }
                    }
                }
                Slot::Fixed(out)
            }
        })
    }

    fn unify_position(working: &mut BindingRow, slot: &Slot, actual: &Value) -> bool {
        match slot {
            Slot::Fixed(choices) => choices.iter().any(|c| actual.matches(c)),
            Slot::Free(name) => match working.get(name) {
                Some(Binding::Value(v)) => actual.matches(&v.clone()),
                Some(_) => false,
                None => {
                    working.set(name, Binding::Value(actual.clone()));
                    true
                }
            },
        }
    }

    fn unify_qualifiers(
        working: BindingRow,
        constraints: &[(Slot, Slot)],
        quals: &[(EntityId, Value)],
        out: &mut Vec<BindingRow>,
    ) {
        let Some((q_slot, v_slot)) = constraints.first() else {
            out.push(working);
            return;
        };
        for (q, v) in quals {
            let mut candidate = working.clone();
            if !Self::unify_position(&mut candidate, q_slot, &Value::Entity(q.clone())) {
                continue;
            }
            if !Self::unify_position(&mut candidate, v_slot, v) {
                continue;
            }
            Self::unify_qualifiers(candidate, &constraints[1..], quals, out);
        }
    }

    fn match_pattern(&self, p: &RPattern, row: &BindingRow) -> Result<Vec<BindingRow>, EvalError> {
        let s_slot = self.slot(&p.s, row)?;
        let p_slot = self.slot(&p.p, row)?;
        let o_slot = self.slot(&p.o, row)?;

        let mut lookup = SpoPattern::default();
        match &s_slot {
            Slot::Fixed(vs) if vs.len() == 1 => match &vs[0] {
                Value::Entity(id) => lookup.s = Some(id.clone()),
                _ => return Ok(Vec::new()),
            },
            Slot::Fixed(vs) if vs.is_empty() => return Ok(Vec::new()),
            _ => {}
        }
        match &p_slot {
            Slot::Fixed(vs) if vs.len() == 1 => match &vs[0] {
                Value::Entity(id) if id.kind() == EntityKind::Property => {
                    lookup.p = Some(id.clone())
                }
                _ => return Ok(Vec::new()),
            },
            Slot::Fixed(vs) if vs.is_empty() => return Ok(Vec::new()),
            _ => {}
        }
        if let Slot::Fixed(vs) = &o_slot {
            if vs.is_empty() {
                return Ok(Vec::new());
            }
            if vs.len() == 1 {
                lookup.o = Some(vs[0].clone());
            }
        }
        let qual_slots: Vec<(Slot, Slot)> = match &p.quals {
            RQuals::All(_) => Vec::new(),
            RQuals::List(pairs) => pairs
                .iter()
                .map(|(q, v)| Ok((self.slot(q, row)?, self.slot(v, row)?)))
                .collect::<Result<Vec<_>, EvalError>>()?,
        };
        for (q_slot, v_slot) in &qual_slots {
            if let Slot::Fixed(qs) = q_slot {
                if qs.len() == 1 {
                    if let Value::Entity(qid) = &qs[0] {
                        let v = match v_slot {
                            Slot::Fixed(vs) if vs.len() == 1 => Some(vs[0].clone()),
                            _ => None,
                        };
                        lookup.qualifiers.push((qid.clone(), v));
                    }
                }
            }
        }

        let mut out = Vec::new();
        for stmt in self.store.lookup(&lookup) {
            let mut working = row.clone();
            if !Self::unify_position(&mut working, &s_slot, &Value::Entity(stmt.s.clone())) {
                continue;
            }
            if !Self::unify_position(&mut working, &p_slot, &Value::Entity(stmt.p.clone())) {
                continue;
            }
            if !Self::unify_position(&mut working, &o_slot, &stmt.o) {
                continue;
            }
            working.provenance.insert(stmt.id);
            match &p.quals {
                RQuals::All(var) => {
                    working.set(var, Binding::Qualifiers(stmt.qualifiers.clone()));
                    out.push(working);
                }
                RQuals::List(_) => {
                    Self::unify_qualifiers(working, &qual_slots, &stmt.qualifiers, &mut out);
                }
            }
        }
        Ok(out)
    }

    fn join(&self, p: &RPattern, rows: Vec<BindingRow>) -> Result<Vec<BindingRow>, EvalError> {
        let mut out = RowSet::default();
        for row in &rows {
            for m in self.match_pattern(p, row)? {
                out.push(m);
            }
        }
        Ok(out.into_rows())
    }

    fn contains_positive_pattern(node: &RNode) -> bool {
        match node {
            RNode::Pattern(_) => true,
            RNode::And(cs) | RNode::Or(cs) => cs.iter().any(Self::contains_positive_pattern),
            RNode::Not(_) | RNode::Cond(_) => false,
        }
    }

    fn exec_node(&self, node: &RNode, rows: Vec<BindingRow>) -> Result<Vec<BindingRow>, EvalError> {
        match node {
            RNode::Pattern(p) => self.join(p, rows),
            RNode::Cond(_) => self.filter_node(node, rows),
            RNode::And(children) => {
                // patterns bind first so that conjunct order does not
                // change the row set
                let mut rows = rows;
                for child in children.iter().filter(|c| Self::contains_positive_pattern(c)) {
                    rows = self.exec_node(child, rows)?;
                }
                for child in children.iter().filter(|c| !Self::contains_positive_pattern(c)) {
                    rows = self.exec_node(child, rows)?;
                }
                Ok(rows)
            }
            RNode::Or(children) => {
                let mut out = RowSet::default();
                for child in children {
                    for row in self.exec_node(child, rows.clone())? {
                        out.push(row);
                    }
                }
                Ok(out.into_rows())
            }
            RNode::Not(inner) => {
                let matched = self.exec_node(inner, rows.clone())?;
                Ok(rows
                    .into_iter()
                    .filter(|r| !matched.iter().any(|m| m.extends(r)))
                    .collect())
            }
        }
    }

    fn filter_node(&self, node: &RNode, rows: Vec<BindingRow>) -> Result<Vec<BindingRow>, EvalError> {
        match node {
            RNode::Cond(RCond::Compare(lhs, op, rhs)) if is_agg(lhs) || is_agg(rhs) => {
                let (func, var, op, other) = match (lhs, rhs) {
                    (ROperand::Agg(f, v), _) if !is_agg(rhs) => (*f, v, *op, rhs),
                    (_, ROperand::Agg(f, v)) if !is_agg(lhs) => (*f, v, flip(*op), lhs),
                    _ => return Err(EvalError::AggregateInCondition),
                };
                let mut keep: Vec<BindingRow> = Vec::new();
                for partition in partition_excluding(&rows, var) {
                    let values: Vec<Value> = partition
                        .iter()
                        .filter_map(|&i| rows[i].get(var).and_then(|b| b.as_value().cloned()))
                        .collect();
                    let agg_value = aggregate(func, &values)?;
                    let rep = &rows[partition[0]];
                    let other_values = self.eval_operand(other, rep)?;
                    let holds = other_values
                        .iter()
                        .any(|ov| compare(&agg_value, op, ov).is_true());
                    if holds {
                        for &i in &partition {
                            keep.push(rows[i].clone());
                        }
                    }
                }
                // keep original row order
                let keep = RowSet::from_rows(keep);
                Ok(rows.into_iter().filter(|r| keep.contains(r)).collect())
            }
            RNode::Cond(c) => {
                let mut out = Vec::new();
                for row in rows {
                    if self.eval_condition(c, &row)?.is_true() {
                        out.push(row);
                    }
                }
                Ok(out)
            }
            RNode::Pattern(p) => {
                let mut out = Vec::new();
                for row in rows {
                    if !self.match_pattern(p, &row)?.is_empty() {
                        out.push(row);
                    }
                }
                Ok(out)
            }
            RNode::And(children) => {
                let mut rows = rows;
                for child in children {
                    rows = self.filter_node(child, rows)?;
                }
                Ok(rows)
            }
            RNode::Or(children) => {
                let mut passing = RowSet::default();
                for child in children {
                    for row in self.filter_node(child, rows.clone())? {
                        passing.push(row);
                    }
                }
                Ok(rows.into_iter().filter(|r| passing.contains(r)).collect())
            }
            RNode::Not(inner) => {
                let passing = RowSet::from_rows(self.filter_node(inner, rows.clone())?);
                Ok(rows.into_iter().filter(|r| !passing.contains(r)).collect())
            }
        }
    }

    fn eval_operand(&self, op: &ROperand, row: &BindingRow) -> Result<Vec<Value>, EvalError> {
        match op {
            ROperand::Agg(..) => Err(EvalError::AggregateInCondition),
            ROperand::Term(t) => match self.slot(t, row)? {
                Slot::Fixed(vs) => Ok(vs),
                Slot::Free(name) => Err(EvalError::UnboundVariable(name)),
            },
        }
    }

    fn eval_condition(&self, c: &RCond, row: &BindingRow) -> Result<TriState, EvalError> {
        Ok(match c {
            RCond::Bool(b) => {
                if *b {
                    TriState::True
                } else {
                    TriState::False
                }
            }
            RCond::Compare(l, op, r) => {
                let lv = self.eval_operand(l, row)?;
                let rv = self.eval_operand(r, row)?;
                let mut any_false = false;
                for a in &lv {
                    for b in &rv {
                        match compare(a, *op, b) {
                            TriState::True => return Ok(TriState::True),
                            TriState::False => any_false = true,
                            TriState::Incomparable => {}
                        }
                    }
                }
                if any_false {
                    TriState::False
                } else {
                    TriState::Incomparable
                }
            }
            RCond::MatchTemplate(l, template) => {
                let lv = self.eval_operand(l, row)?;
                let hit = lv
                    .iter()
                    .any(|v| template.matches(&value_text(self.store, v)));
                if hit {
                    TriState::True
                } else {
                    TriState::False
                }
            }
        })
    }

    fn key_values(&self, row: &BindingRow, key: &RKey) -> Result<Vec<Value>, EvalError> {
        let binding = match row.get(&key.var) {
            Some(b) => b.clone(),
            None => return Ok(Vec::new()),
        };
        let bases = binding.values();
        if key.props.is_empty() {
            return Ok(bases);
        }
        let mut out = Vec::new();
        for b in &bases {
            for v in resolve_path(self.store, b, &key.props)? {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        Ok(out)
    }
}

fn is_agg(op: &ROperand) -> bool {
    matches!(op, ROperand::Agg(..))
}

fn flip(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Gt => CmpOp::Lt,
        CmpOp::Ge => CmpOp::Le,
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        other => other,
    }
}

/// Insertion-ordered row set; membership is by bound values only.
#[derive(Default)]
struct RowSet {
    rows: Vec<BindingRow>,
    seen: BTreeSet<alloc::collections::BTreeMap<String, Binding>>,
}

impl RowSet {
    fn push(&mut self, row: BindingRow) {
        if self.seen.insert(row.bindings_key().clone()) {
            self.rows.push(row);
        }
    }

    fn contains(&self, row: &BindingRow) -> bool {
        self.seen.contains(row.bindings_key())
    }

    fn into_rows(self) -> Vec<BindingRow> {
        self.rows
    }

    fn from_rows(rows: impl IntoIterator<Item = BindingRow>) -> Self {
        let mut set = RowSet::default();
        for r in rows {
            set.push(r);
        }
        set
    }
}

fn drop_internal_vars(rows: Vec<BindingRow>) -> Vec<BindingRow> {
    let mut out = RowSet::default();
    for mut row in rows {
        let internals: Vec<String> = row
            .vars()
            .map(|(k, _)| k.clone())
            .filter(|k| internal_var(k))
            .collect();
        for k in internals {
            row.remove(&k);
        }
        out.push(row);
    }
    out.into_rows()
}

/// Executes a query against the store.
pub fn evaluate(
    query: &QueryAst,
    store: &Store,
    options: &EvalOptions<'_>,
) -> Result<ResultSet, EvalError> {
    let mut resolver = Resolver::new(store, options.fuzzy);

    let mut statements: Vec<RStatement> = Vec::new();
    for stmt in &query.statements {
        match stmt {
            Statement::Conjunct(node) => {
                let lowered = resolver.lower_node(node)?;
                statements.push(RStatement::Conjunct(lowered));
            }
            Statement::Assign(a) => {
                resolver.see_var(&a.var);
                statements.push(RStatement::Assign {
                    var: a.var.clone(),
                    func: a.func,
                    arg: a.arg.clone(),
                });
            }
        }
    }
    let order_key = query
        .order_by
        .as_ref()
        .map(|(key, dir)| Ok::<_, EvalError>((resolver.lower_key(key)?, *dir)))
        .transpose()?;
    let group_key = query.group_by.as_ref().map(|k| resolver.lower_key(k)).transpose()?;
    let filters = query
        .filters
        .iter()
        .map(|f| resolver.lower_node(f))
        .collect::<Result<Vec<_>, _>>()?;
    let ans_keys = query
        .ans
        .as_ref()
        .map(|items| items.iter().map(|i| resolver.lower_key(i)).collect::<Result<Vec<_>, _>>())
        .transpose()?;

    let engine = Engine { store };
    let mut rows = alloc::vec![BindingRow::empty()];
    let mut aggregates: Vec<AggregateInfo> = Vec::new();
    for stmt in &statements {
        match stmt {
            RStatement::Conjunct(node) => {
                rows = engine.exec_node(node, rows)?;
                rows = drop_internal_vars(rows);
            }
            RStatement::Assign { var, func, arg } => {
                aggregates.push(AggregateInfo { var: var.clone(), func: *func, arg: arg.clone() });
                if rows.is_empty() {
                    match func {
                        AggFunc::Count | AggFunc::Sum => continue,
                        _ => return Err(EvalError::EmptyAggregate(*func)),
                    }
                }
                let partitions: Vec<Vec<usize>> = match &group_key {
                    Some(key) => {
                        // aggregate per group when a \group by is active;
                        // rows with several key values follow the first
                        let mut parts: Vec<(Option<Value>, Vec<usize>)> = Vec::new();
                        for (i, row) in rows.iter().enumerate() {
                            let kv = engine.key_values(row, key)?.into_iter().next();
                            match parts.iter_mut().find(|(k, _)| *k == kv) {
                                Some((_, idxs)) => idxs.push(i),
                                None => parts.push((kv, alloc::vec![i])),
                            }
                        }
                        parts.into_iter().map(|(_, idxs)| idxs).collect()
                    }
                    None => alloc::vec![(0..rows.len()).collect()],
                };
                for partition in partitions {
                    let values: Vec<Value> = partition
                        .iter()
                        .filter_map(|&i| rows[i].get(arg).and_then(|b| b.as_value().cloned()))
                        .collect();
                    let result = aggregate(*func, &values)?;
                    for &i in &partition {
                        rows[i].set(var, Binding::Value(result.clone()));
                    }
                }
            }
        }
    }

    for f in &filters {
        rows = engine.filter_node(f, rows)?;
    }

    if rows.len() > options.progress_threshold {
        if let Some(hook) = options.progress {
            hook(rows.len());
        }
    }

    if let Some((key, dir)) = &order_key {
        let keys = rows
            .iter()
            .map(|r| {
                let mut vs = engine.key_values(r, key)?;
                vs.sort();
                Ok(vs.into_iter().next())
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        order_rows(store, &mut rows, &keys, *dir)?;
    }

    let mut columns: Vec<Column> = Vec::new();
    if let Some(keys) = &ans_keys {
        for key in keys {
            if key.props.is_empty() {
                columns.push(Column { key: key.var.clone(), label: key.var.clone() });
            } else {
                // materialize the projected path on each row
                for row in rows.iter_mut() {
                    let mut vs = engine.key_values(row, key)?;
                    vs.sort();
                    let binding = match vs.len() {
                        0 => None,
                        1 => Some(Binding::Value(vs.pop().unwrap())),
                        _ => Some(Binding::Many(vs)),
                    };
                    if let Some(b) = binding {
                        row.set(&key.label, b);
                    }
                }
                columns.push(Column { key: key.label.clone(), label: key.label.clone() });
            }
        }
        // distinct projected tuples
        let mut seen: BTreeSet<Vec<Option<Binding>>> = BTreeSet::new();
        let mut collapsed: Vec<BindingRow> = Vec::new();
        for row in rows {
            let tuple: Vec<Option<Binding>> =
                columns.iter().map(|c| row.get(&c.key).cloned()).collect();
            if seen.insert(tuple) {
                collapsed.push(row);
            }
        }
        rows = collapsed;
    } else {
        for var in &resolver.var_order {
            let label = if var.starts_with("_a") { String::new() } else { var.clone() };
            columns.push(Column { key: var.clone(), label });
        }
    }

    let (groups, group_label) = match &group_key {
        Some(key) => {
            if rows.len() > options.progress_threshold {
                if let Some(hook) = options.progress {
                    hook(rows.len());
                }
            }
            let keys = rows
                .iter()
                .map(|r| engine.key_values(r, key))
                .collect::<Result<Vec<_>, _>>()?;
            (Some(group_rows(&rows, &keys)), Some(key.label.clone()))
        }
        None => (None, None),
    };

    Ok(ResultSet {
        columns,
        rows,
        groups,
        group_label,
        reports: resolver.reports,
        aggregates,
        page_size: if options.page_size == 0 { DEFAULT_PAGE_SIZE } else { options.page_size },
    })
}
