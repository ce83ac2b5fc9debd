//! Derived-property rules: a head pattern `x : derivedP : y` defined by
//! an EQL body over x, y, and local variables. Queries on a derived
//! property expand through the body; `materialize` precomputes the pairs
//! into tagged base facts.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::entity::{EntityId, EntityKind};
use crate::parser::{Node, QualifierPattern, SpoPatternAst, Term};
use crate::store::{Resolution, Store};
use crate::value::Value;

/// Expansion substitutes rule bodies at most this many rounds deep; a
/// deeper chain signals a mis-declared rule set.
pub const DEPTH_LIMIT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RuleId(pub u32);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub id: RuleId,
    pub head_property: EntityId,
    /// Conjunct tree over ?x (head subject), ?y (head object), and local
    /// variables.
    pub body: Node,
}

#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
    by_property: BTreeMap<EntityId, Vec<usize>>,
}

impl RuleSet {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter()
    }

    pub fn get(&self, id: RuleId) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn rules_for(&self, property: &EntityId) -> Vec<&Rule> {
        self.by_property
            .get(property)
            .map(|idxs| idxs.iter().map(|i| &self.rules[*i]).collect())
            .unwrap_or_default()
    }

    pub fn has_rules(&self, property: &EntityId) -> bool {
        self.by_property.contains_key(property)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewriteError {
    UnknownProperty(String),
    NotAProperty(String),
    CycleDetected(String),
    DepthExceeded,
    Materialize(String),
}

impl fmt::Display for RewriteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteError::UnknownProperty(name) => write!(f, "unknown property in rule: {name}"),
            RewriteError::NotAProperty(name) => write!(f, "rule references non-property: {name}"),
            RewriteError::CycleDetected(name) => {
                write!(f, "rule for {name} would make the rule set cyclic")
            }
            RewriteError::DepthExceeded => {
                write!(f, "rule expansion exceeded depth {DEPTH_LIMIT}")
            }
            RewriteError::Materialize(msg) => write!(f, "materialization failed: {msg}"),
        }
    }
}

impl core::error::Error for RewriteError {}

/// Fixed property names appearing in p positions of the body.
fn body_properties(store: &Store, node: &Node, out: &mut BTreeSet<EntityId>) -> Result<(), RewriteError> {
    fn term_props(store: &Store, term: &Term, out: &mut BTreeSet<EntityId>) -> Result<(), RewriteError> {
        match term {
            Term::SubjectExpr(s, p) => {
                term_props(store, s, out)?;
                register(store, p, out)
            }
            Term::Path { base, .. } => term_props(store, base, out),
            _ => Ok(()),
        }
    }
    fn register(store: &Store, term: &Term, out: &mut BTreeSet<EntityId>) -> Result<(), RewriteError> {
        match term {
            Term::Name(name) => match store.resolve_name(name).entity() {
                Some(id) if id.kind() == EntityKind::Property => {
                    out.insert(id.clone());
                    Ok(())
                }
                Some(_) => Err(RewriteError::NotAProperty(name.clone())),
                None => Err(RewriteError::UnknownProperty(name.clone())),
            },
            Term::SubjectExpr(s, p) => {
                term_props(store, s, out)?;
                register(store, p, out)
            }
            _ => Ok(()),
        }
    }
    match node {
        Node::Pattern(p) => {
            term_props(store, &p.s, out)?;
            register(store, &p.p, out)?;
            term_props(store, &p.o, out)?;
            if let QualifierPattern::List(pairs) = &p.qualifiers {
                for (q, v) in pairs {
                    register(store, q, out)?;
                    term_props(store, v, out)?;
                }
            }
            Ok(())
        }
        Node::And(cs) | Node::Or(cs) => cs.iter().try_for_each(|c| body_properties(store, c, out)),
        Node::Not(inner) => body_properties(store, inner, out),
        Node::Cond(_) => Ok(()),
    }
}

/// Registers a rule for `head_property`. Fails on unknown body
/// properties or if the rule graph would stop being a DAG.
pub fn define_rule(
    store: &mut Store,
    head_property: &EntityId,
    body: Node,
) -> Result<RuleId, RewriteError> {
    let head = store
        .entity(head_property)
        .ok_or_else(|| RewriteError::UnknownProperty(head_property.to_string()))?;
    if head.kind != EntityKind::Property {
        return Err(RewriteError::NotAProperty(head_property.to_string()));
    }
    let mut deps = BTreeSet::new();
    body_properties(store, &body, &mut deps)?;
    if deps.contains(head_property) {
        return Err(RewriteError::CycleDetected(head_property.to_string()));
    }
    // would head become reachable from itself through existing rules?
    let mut frontier: Vec<EntityId> = deps.iter().cloned().collect();
    let mut seen: BTreeSet<EntityId> = deps.clone();
    while let Some(p) = frontier.pop() {
        for rule in store.rules.rules_for(&p) {
            let mut sub = BTreeSet::new();
            // body properties of already-registered rules resolve cleanly
            let _ = body_properties(store, &rule.body, &mut sub);
            for d in sub {
                if d == *head_property {
                    return Err(RewriteError::CycleDetected(head_property.to_string()));
                }
                if seen.insert(d.clone()) {
                    frontier.push(d);
                }
            }
        }
    }
    let id = RuleId(store.rules.rules.len() as u32 + 1);
    let idx = store.rules.rules.len();
    store.rules.rules.push(Rule { id, head_property: head_property.clone(), body });
    store
        .rules
        .by_property
        .entry(head_property.clone())
        .or_default()
        .push(idx);
    Ok(id)
}

fn substitute_term(term: &Term, map: &BTreeMap<String, Term>) -> Term {
    match term {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| term.clone()),
        Term::SubjectExpr(s, p) => Term::SubjectExpr(
            Box::new(substitute_term(s, map)),
            Box::new(substitute_term(p, map)),
        ),
        Term::Path { base, properties } => Term::Path {
            base: Box::new(substitute_term(base, map)),
            properties: properties.clone(),
        },
        _ => term.clone(),
    }
}

fn substitute_node(node: &Node, map: &BTreeMap<String, Term>) -> Node {
    match node {
        Node::Pattern(p) => Node::Pattern(SpoPatternAst {
            s: substitute_term(&p.s, map),
            p: substitute_term(&p.p, map),
            o: substitute_term(&p.o, map),
            qualifiers: match &p.qualifiers {
                QualifierPattern::All => QualifierPattern::All,
                QualifierPattern::List(pairs) => QualifierPattern::List(
                    pairs
                        .iter()
                        .map(|(q, v)| (substitute_term(q, map), substitute_term(v, map)))
                        .collect(),
                ),
            },
        }),
        Node::Cond(c) => {
            use crate::parser::{Condition, Operand};
            let subst_operand = |op: &Operand| match op {
                Operand::Term(t) => Operand::Term(substitute_term(t, map)),
                Operand::Agg(f, v) => match map.get(v) {
                    Some(Term::Var(nv)) => Operand::Agg(*f, nv.clone()),
                    _ => Operand::Agg(*f, v.clone()),
                },
            };
            Node::Cond(match c {
                Condition::Compare(l, op, r) => {
                    Condition::Compare(subst_operand(l), *op, subst_operand(r))
                }
                Condition::Match(l, t) => Condition::Match(subst_operand(l), t.clone()),
                Condition::BoolConst(b) => Condition::BoolConst(*b),
            })
        }
        Node::And(cs) => Node::And(cs.iter().map(|c| substitute_node(c, map)).collect()),
        Node::Or(cs) => Node::Or(cs.iter().map(|c| substitute_node(c, map)).collect()),
        Node::Not(inner) => Node::Not(Box::new(substitute_node(inner, map))),
    }
}

fn node_var_names(node: &Node, out: &mut BTreeSet<String>) {
    fn term_vars(t: &Term, out: &mut BTreeSet<String>) {
        match t {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::SubjectExpr(s, p) => {
                term_vars(s, out);
                term_vars(p, out);
            }
            Term::Path { base, .. } => term_vars(base, out),
            _ => {}
        }
    }
    match node {
        Node::Pattern(p) => {
            term_vars(&p.s, out);
            term_vars(&p.p, out);
            term_vars(&p.o, out);
            if let QualifierPattern::List(pairs) = &p.qualifiers {
                for (q, v) in pairs {
                    term_vars(q, out);
                    term_vars(v, out);
                }
            }
        }
        Node::Cond(c) => {
            use crate::parser::{Condition, Operand};
            let op_vars = |op: &Operand, out: &mut BTreeSet<String>| match op {
                Operand::Term(t) => term_vars(t, out),
                Operand::Agg(_, v) => {
                    out.insert(v.clone());
                }
            };
            match c {
                Condition::Compare(l, _, r) => {
                    op_vars(l, out);
                    op_vars(r, out);
                }
                Condition::Match(l, _) => op_vars(l, out),
                Condition::BoolConst(_) => {}
            }
        }
        Node::And(cs) | Node::Or(cs) => cs.iter().for_each(|c| node_var_names(c, out)),
        Node::Not(inner) => node_var_names(inner, out),
    }
}

/// Property id a fixed pattern p-term resolves to, if any.
pub fn pattern_property(store: &Store, pattern: &SpoPatternAst) -> Option<EntityId> {
    match &pattern.p {
        Term::Name(name) => match store.resolve_name(name) {
            Resolution::Exact(id) | Resolution::Alias(id) => Some(id),
            Resolution::Ambiguous { default, .. } => Some(default),
            Resolution::NotFound { .. } => None,
        },
        _ => None,
    }
}

fn expand_inner(
    store: &Store,
    pattern: &SpoPatternAst,
    depth: u32,
    fresh: &mut u32,
) -> Result<Node, RewriteError> {
    let has_constraints = !matches!(&pattern.qualifiers, QualifierPattern::List(l) if l.is_empty());
    let property = match pattern_property(store, pattern) {
        Some(p) if store.rules.has_rules(&p) && !has_constraints => p,
        _ => return Ok(Node::Pattern(pattern.clone())),
    };
    if depth == 0 {
        return Err(RewriteError::DepthExceeded);
    }
    // base disjunct keeps materialized facts reachable
    let mut branches = alloc::vec![Node::Pattern(pattern.clone())];
    for rule in store.rules.rules_for(&property) {
        let mut vars = BTreeSet::new();
        node_var_names(&rule.body, &mut vars);
        let mut map: BTreeMap<String, Term> = BTreeMap::new();
        map.insert(String::from("x"), pattern.s.clone());
        map.insert(String::from("y"), pattern.o.clone());
        for v in vars {
            if v != "x" && v != "y" {
                *fresh += 1;
                map.insert(v.clone(), Term::Var(format!("_e{fresh}")));
            }
        }
        let body = substitute_node(&rule.body, &map);
        branches.push(expand_node(store, &body, depth - 1, fresh)?);
    }
    Ok(Node::Or(branches))
}

fn expand_node(
    store: &Store,
    node: &Node,
    depth: u32,
    fresh: &mut u32,
) -> Result<Node, RewriteError> {
    match node {
        Node::Pattern(p) => expand_inner(store, p, depth, fresh),
        Node::Cond(_) => Ok(node.clone()),
        Node::And(cs) => Ok(Node::And(
            cs.iter()
                .map(|c| expand_node(store, c, depth, fresh))
                .collect::<Result<Vec<_>, _>>()?,
        )),
        Node::Or(cs) => Ok(Node::Or(
            cs.iter()
                .map(|c| expand_node(store, c, depth, fresh))
                .collect::<Result<Vec<_>, _>>()?,
        )),
        Node::Not(inner) => Ok(Node::Not(Box::new(expand_node(store, inner, depth, fresh)?))),
    }
}

/// Expands a pattern on a derived property into the disjunction of the
/// base pattern (materialized facts) and the substituted rule bodies.
/// Patterns on base properties pass through unchanged.
pub fn expand(store: &Store, pattern: &SpoPatternAst) -> Result<Node, RewriteError> {
    let mut fresh = 0u32;
    expand_inner(store, pattern, DEPTH_LIMIT, &mut fresh)
}

pub(crate) fn expand_for_eval(
    store: &Store,
    pattern: &SpoPatternAst,
    fresh: &mut u32,
) -> Result<Node, RewriteError> {
    expand_inner(store, pattern, DEPTH_LIMIT, fresh)
}

/// The provenance qualifier attached to materialized statements,
/// declared on demand.
pub fn derived_by_property(store: &mut Store) -> EntityId {
    if let Resolution::Exact(id) | Resolution::Alias(id) = store.resolve_name("derived_by") {
        return id;
    }
    store
        .add_entity("p_derived_by", "derived_by")
        .expect("derived_by property registration")
}

/// Inserts every `(x, y)` pair derivable by the rule body as a base
/// statement `x : head : y (derived_by : <rule id>)`. Idempotent.
pub fn materialize(store: &mut Store, rule_id: RuleId) -> Result<usize, RewriteError> {
    use crate::eval::{evaluate, Binding, EvalOptions};
    use crate::parser::{QueryAst, Statement};

    let rule = store
        .rules
        .get(rule_id)
        .ok_or_else(|| RewriteError::Materialize(format!("no rule {rule_id}")))?
        .clone();
    let query = QueryAst {
        statements: alloc::vec![Statement::Conjunct(rule.body.clone())],
        ..QueryAst::default()
    };
    let result = evaluate(&query, store, &EvalOptions::default())
        .map_err(|e| RewriteError::Materialize(e.to_string()))?;
    let tag = derived_by_property(store);
    let mut added = 0usize;
    for row in &result.rows {
        let (Some(Binding::Value(Value::Entity(x))), Some(Binding::Value(y))) =
            (row.get("x"), row.get("y"))
        else {
            continue;
        };
        let before = store.statement_count();
        store
            .add_statement(
                &x.clone(),
                &rule.head_property,
                y.clone(),
                alloc::vec![(tag.clone(), Value::Text(rule_id.to_string()))],
            )
            .map_err(|e| RewriteError::Materialize(e.to_string()))?;
        if store.statement_count() > before {
            added += 1;
        }
    }
    Ok(added)
}
