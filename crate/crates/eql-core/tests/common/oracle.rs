//! Brute-force oracles and random generators shared by the property and
//! acceptance suites.
//!
//! The evaluator oracle enumerates every assignment of store constants to
//! query variables and keeps the ones where each pattern matches some
//! statement; it never touches the evaluator's join machinery. The
//! template oracle re-decodes the raw template itself and runs a dynamic
//! programming table instead of the engine's backtracking matcher.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use eql_core::decimal::Decimal;
use eql_core::entity::EntityId;
use eql_core::eval::{evaluate, Binding, EvalOptions};
use eql_core::parser::{
    Node, QualifierPattern, QueryAst, SpoPatternAst, Statement, Term,
};
use eql_core::store::Store;
use eql_core::value::{Quantity, Value};

pub struct OracleGraph {
    pub store: Store,
    /// Every constant of the store: entity and property references plus
    /// all object/qualifier values.
    pub constants: Vec<Value>,
    pub entity_names: Vec<String>,
    pub property_names: Vec<String>,
    pub value_names: Vec<String>,
}

/// Builds a random graph: up to `max_entities` entities, a few
/// properties, and up to `max_statements` facts over entity, quantity,
/// and text objects with 0-2 qualifiers.
pub fn random_graph(rng: &mut StdRng, max_entities: usize, max_statements: usize) -> OracleGraph {
    let mut store = Store::new();
    let n_entities = rng.gen_range(2..=max_entities.max(2));
    let n_props = rng.gen_range(1..=4);
    let mut entity_names = Vec::new();
    let mut property_names = Vec::new();
    for i in 0..n_entities {
        let name = format!("ent{i}");
        store.add_entity(&format!("e{i}"), &name).unwrap();
        entity_names.push(name);
    }
    for i in 0..n_props {
        let name = format!("prop{i}");
        store.add_entity(&format!("p{i}"), &name).unwrap();
        property_names.push(name);
    }
    let value_names: Vec<String> = (0..3)
        .map(|i| format!("{} u", 10 + i * 7))
        .chain((0..2).map(|i| format!("text{i}")))
        .collect();
    let mk_value = |name: &str| -> Value {
        if let Some(stripped) = name.strip_suffix(" u") {
            Value::Quantity(Quantity::new(Decimal::parse(stripped).unwrap(), "u"))
        } else {
            Value::text(name)
        }
    };
    let n_stmts = rng.gen_range(0..=max_statements);
    for _ in 0..n_stmts {
        let s = EntityId::new(&format!("e{}", rng.gen_range(0..n_entities))).unwrap();
        let p = EntityId::new(&format!("p{}", rng.gen_range(0..n_props))).unwrap();
        let o = match rng.gen_range(0..3) {
            0 => Value::Entity(EntityId::new(&format!("e{}", rng.gen_range(0..n_entities))).unwrap()),
            1 => mk_value(&value_names[rng.gen_range(0..3)]),
            _ => mk_value(&value_names[3 + rng.gen_range(0..2)]),
        };
        let mut qualifiers = Vec::new();
        for _ in 0..rng.gen_range(0..=2usize) {
            let q = EntityId::new(&format!("p{}", rng.gen_range(0..n_props))).unwrap();
            let v = match rng.gen_range(0..2) {
                0 => Value::Entity(
                    EntityId::new(&format!("e{}", rng.gen_range(0..n_entities))).unwrap(),
                ),
                _ => mk_value(&value_names[rng.gen_range(0..value_names.len())]),
            };
            qualifiers.push((q, v));
        }
        store.add_statement(&s, &p, o, qualifiers).unwrap();
    }
    let mut constants: Vec<Value> = Vec::new();
    for e in store.entities() {
        constants.push(Value::Entity(e.id.clone()));
    }
    for stmt in store.statements() {
        if !constants.contains(&stmt.o) {
            constants.push(stmt.o.clone());
        }
        for (_, v) in &stmt.qualifiers {
            if !constants.contains(v) {
                constants.push(v.clone());
            }
        }
    }
    OracleGraph { store, constants, entity_names, property_names, value_names }
}

/// One pattern position in the generated query.
#[derive(Debug, Clone, PartialEq)]
pub enum OTerm {
    /// Fixed surface name (entity, property, or literal value text).
    Const(String),
    /// Variable index 0..3 mapping to ?x, ?y, ?z.
    Var(usize),
}

#[derive(Debug, Clone)]
pub struct OPattern {
    pub s: OTerm,
    pub p: OTerm,
    pub o: OTerm,
    pub quals: Vec<(OTerm, OTerm)>,
}

pub const VAR_NAMES: [&str; 3] = ["x", "y", "z"];

/// Random conjunctive query of 1..=3 patterns over at most 3 variables.
pub fn random_query(rng: &mut StdRng, g: &OracleGraph) -> Vec<OPattern> {
    let n_patterns = rng.gen_range(1..=3);
    let n_vars = rng.gen_range(1..=3usize);
    let mut patterns = Vec::new();
    let pick = |rng: &mut StdRng, options: &[String]| -> String {
        options[rng.gen_range(0..options.len())].clone()
    };
    for _ in 0..n_patterns {
        let s = if rng.gen_bool(0.5) {
            OTerm::Var(rng.gen_range(0..n_vars))
        } else {
            OTerm::Const(pick(rng, &g.entity_names))
        };
        let p = if rng.gen_bool(0.3) {
            OTerm::Var(rng.gen_range(0..n_vars))
        } else {
            OTerm::Const(pick(rng, &g.property_names))
        };
        let o = match rng.gen_range(0..3) {
            0 => OTerm::Var(rng.gen_range(0..n_vars)),
            1 => OTerm::Const(pick(rng, &g.entity_names)),
            _ => OTerm::Const(pick(rng, &g.value_names)),
        };
        let mut quals = Vec::new();
        if rng.gen_bool(0.35) {
            let q = if rng.gen_bool(0.2) {
                OTerm::Var(rng.gen_range(0..n_vars))
            } else {
                OTerm::Const(pick(rng, &g.property_names))
            };
            let v = match rng.gen_range(0..3) {
                0 => OTerm::Var(rng.gen_range(0..n_vars)),
                1 => OTerm::Const(pick(rng, &g.entity_names)),
                _ => OTerm::Const(pick(rng, &g.value_names)),
            };
            quals.push((q, v));
        }
        patterns.push(OPattern { s, p, o, quals });
    }
    patterns
}

fn used_vars(patterns: &[OPattern]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut see = |t: &OTerm| {
        if let OTerm::Var(i) = t {
            out.insert(*i);
        }
    };
    for p in patterns {
        see(&p.s);
        see(&p.p);
        see(&p.o);
        for (q, v) in &p.quals {
            see(q);
            see(v);
        }
    }
    out
}

/// Renders the generated query as a QueryAst for the engine under test.
pub fn to_query_ast(patterns: &[OPattern]) -> QueryAst {
    let term = |t: &OTerm| match t {
        OTerm::Const(name) => Term::Name(name.clone()),
        OTerm::Var(i) => Term::Var(VAR_NAMES[*i].to_string()),
    };
    let nodes: Vec<Node> = patterns
        .iter()
        .map(|p| {
            Node::Pattern(SpoPatternAst {
                s: term(&p.s),
                p: term(&p.p),
                o: term(&p.o),
                qualifiers: QualifierPattern::List(
                    p.quals.iter().map(|(q, v)| (term(q), term(v))).collect(),
                ),
            })
        })
        .collect();
    let node = if nodes.len() == 1 { nodes.into_iter().next().unwrap() } else { Node::And(nodes) };
    QueryAst { statements: vec![Statement::Conjunct(node)], ..QueryAst::default() }
}

/// Oracle-side constant resolution: names were generated from the store,
/// so resolution is plain table lookup.
fn oracle_const(g: &OracleGraph, name: &str) -> Value {
    for e in g.store.entities() {
        if e.canonical_name == name {
            return Value::Entity(e.id.clone());
        }
    }
    if let Some(stripped) = name.strip_suffix(" u") {
        return Value::Quantity(Quantity::new(Decimal::parse(stripped).unwrap(), "u"));
    }
    Value::text(name)
}

/// Every satisfying assignment of store constants to the query variables,
/// by exhaustive enumeration.
pub fn oracle_rows(g: &OracleGraph, patterns: &[OPattern]) -> BTreeSet<Vec<Option<Value>>> {
    let vars: Vec<usize> = used_vars(patterns).into_iter().collect();
    // index statements by (s, p) for the ground check
    let mut by_sp: BTreeMap<(EntityId, EntityId), Vec<&eql_core::store::SpoStatement>> =
        BTreeMap::new();
    for stmt in g.store.statements() {
        by_sp.entry((stmt.s.clone(), stmt.p.clone())).or_default().push(stmt);
    }
    let ground = |t: &OTerm, assignment: &[Value]| -> Value {
        match t {
            OTerm::Const(name) => oracle_const(g, name),
            OTerm::Var(i) => {
                let pos = vars.iter().position(|v| v == i).expect("assigned var");
                assignment[pos].clone()
            }
        }
    };
    let holds = |p: &OPattern, assignment: &[Value]| -> bool {
        let (Value::Entity(s), Value::Entity(pr)) =
            (ground(&p.s, assignment), ground(&p.p, assignment))
        else {
            return false;
        };
        let o = ground(&p.o, assignment);
        let Some(stmts) = by_sp.get(&(s, pr)) else { return false };
        stmts.iter().any(|stmt| {
            stmt.o == o
                && p.quals.iter().all(|(qt, vt)| {
                    let (q, v) = (ground(qt, assignment), ground(vt, assignment));
                    let Value::Entity(q) = q else { return false };
                    stmt.qualifiers.iter().any(|(sq, sv)| *sq == q && *sv == v)
                })
        })
    };
    let mut rows = BTreeSet::new();
    let k = vars.len();
    if k == 0 {
        if patterns.iter().all(|p| holds(p, &[])) {
            rows.insert(Vec::new());
        }
        return rows;
    }
    let n = g.constants.len();
    let mut counter = vec![0usize; k];
    loop {
        let assignment: Vec<Value> =
            counter.iter().map(|&c| g.constants[c].clone()).collect();
        if patterns.iter().all(|p| holds(p, &assignment)) {
            rows.insert(assignment.iter().cloned().map(Some).collect());
        }
        // increment the mixed-radix counter
        let mut idx = 0;
        loop {
            if idx == k {
                return rows;
            }
            counter[idx] += 1;
            if counter[idx] < n {
                break;
            }
            counter[idx] = 0;
            idx += 1;
        }
    }
}

/// Engine-side rows shaped like the oracle's.
pub fn engine_rows(g: &OracleGraph, patterns: &[OPattern]) -> BTreeSet<Vec<Option<Value>>> {
    let vars: Vec<usize> = used_vars(patterns).into_iter().collect();
    let ast = to_query_ast(patterns);
    let rs = evaluate(&ast, &g.store, &EvalOptions::default()).expect("generated query evaluates");
    rs.rows
        .iter()
        .map(|row| {
            vars.iter()
                .map(|i| match row.get(VAR_NAMES[*i]) {
                    Some(Binding::Value(v)) => Some(v.clone()),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

/// One full oracle-equivalence check; returns the instance description on
/// mismatch.
pub fn check_oracle_instance(seed: u64, max_entities: usize, max_statements: usize) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let g = random_graph(&mut rng, max_entities, max_statements);
    let patterns = random_query(&mut rng, &g);
    let expected = oracle_rows(&g, &patterns);
    let got = engine_rows(&g, &patterns);
    if expected != got {
        return Err(format!(
            "seed {seed}: oracle {} rows, engine {} rows\npatterns: {patterns:?}",
            expected.len(),
            got.len()
        ));
    }
    Ok(())
}

// ---- template oracle ----

#[derive(Debug, Clone, Copy, PartialEq)]
enum OAtom {
    Any,
    One,
    Lit(char),
}

/// Independent template decoding: the same escape rules, written apart
/// from the engine's compiler.
fn oracle_atoms(raw: &str) -> Vec<OAtom> {
    let mut out = Vec::new();
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '%' => out.push(OAtom::Any),
            '_' => out.push(OAtom::One),
            '\\' => match chars.next() {
                Some(l) => out.push(OAtom::Lit(l)),
                None => out.push(OAtom::Lit('\\')),
            },
            _ if c.is_whitespace() => {}
            _ => out.push(OAtom::Lit(c)),
        }
    }
    out
}

/// Anchored-automaton matching via a DP table over atoms x candidate
/// positions.
pub fn oracle_template_match(raw_template: &str, candidate: &str) -> bool {
    let atoms = oracle_atoms(raw_template);
    let text: Vec<char> = candidate.chars().filter(|c| !c.is_whitespace()).collect();
    let (n, m) = (atoms.len(), text.len());
    // reachable[i][j]: atoms[..i] can consume text[..j]
    let mut reachable = vec![vec![false; m + 1]; n + 1];
    reachable[0][0] = true;
    for i in 0..n {
        for j in 0..=m {
            if !reachable[i][j] {
                continue;
            }
            match atoms[i] {
                OAtom::Any => {
                    for jj in j..=m {
                        reachable[i + 1][jj] = true;
                    }
                }
                OAtom::One => {
                    if j < m {
                        reachable[i + 1][j + 1] = true;
                    }
                }
                OAtom::Lit(c) => {
                    if j < m && text[j] == c {
                        reachable[i + 1][j + 1] = true;
                    }
                }
            }
        }
    }
    reachable[n][m]
}
