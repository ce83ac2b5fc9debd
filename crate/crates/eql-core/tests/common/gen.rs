//! Random valid-AST generation for parser round-trip testing.

use proptest::prelude::*;

use eql_core::parser::{
    AggFunc, Assignment, CmpOp, Condition, Direction, Node, Operand, QualifierPattern, QueryAst,
    SpoPatternAst, Statement, Term, VarPath,
};

const RESERVED: [&str; 3] = ["ans", "order", "group"];

pub fn name_word() -> impl Strategy<Value = String> {
    "[a-zA-Z][a-zA-Z0-9%_:?]{0,5}"
        .prop_filter("avoid structural words", |w| !RESERVED.contains(&w.to_lowercase().as_str()))
}

pub fn name_strategy() -> impl Strategy<Value = String> {
    proptest::collection::vec(name_word(), 1..3).prop_map(|ws| ws.join(" "))
}

pub fn segment_word() -> impl Strategy<Value = String> {
    "[a-zA-Z][a-zA-Z0-9]{0,5}".prop_filter("avoid direction words", |w| {
        !["asc", "desc", "order", "group", "ans"].contains(&w.to_lowercase().as_str())
    })
}

pub fn var_name() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("z".to_string()),
        Just("z1".to_string()),
        Just("z2".to_string()),
    ]
}

pub fn term_strategy(allow_anon: bool) -> BoxedStrategy<Term> {
    let base = prop_oneof![
        4 => name_strategy().prop_map(Term::Name),
        3 => var_name().prop_map(Term::Var),
        1 => (var_name(), proptest::collection::vec(segment_word(), 1..3)).prop_map(|(v, properties)| {
            Term::Path { base: Box::new(Term::Var(v)), properties }
        }),
        1 => (name_strategy(), name_strategy()).prop_map(|(s, p)| {
            Term::SubjectExpr(Box::new(Term::Name(s)), Box::new(Term::Name(p)))
        }),
        1 => (var_name(), name_strategy()).prop_map(|(v, p)| {
            Term::SubjectExpr(Box::new(Term::Var(v)), Box::new(Term::Name(p)))
        }),
    ];
    if allow_anon {
        prop_oneof![9 => base, 1 => Just(Term::Anon)].boxed()
    } else {
        base.boxed()
    }
}

pub fn pattern_strategy() -> impl Strategy<Value = SpoPatternAst> {
    (
        term_strategy(false),
        prop_oneof![3 => name_strategy().prop_map(Term::Name), 1 => var_name().prop_map(Term::Var)],
        term_strategy(true),
        prop_oneof![
            6 => proptest::collection::vec(
                (name_strategy().prop_map(Term::Name), term_strategy(false)),
                0..3,
            )
            .prop_map(QualifierPattern::List),
            1 => Just(QualifierPattern::All),
        ],
    )
        .prop_map(|(s, p, o, qualifiers)| {
            // at most one '?' per pattern: the qualifier-block form
            // already counts as one
            let qualifiers = if o == Term::Anon && qualifiers == QualifierPattern::All {
                QualifierPattern::empty()
            } else {
                qualifiers
            };
            SpoPatternAst { s, p, o, qualifiers }
        })
}

pub fn condition_strategy() -> impl Strategy<Value = Condition> {
    let operand = prop_oneof![name_strategy().prop_map(|n| Operand::Term(Term::Name(n)))];
    prop_oneof![
        (operand, prop_oneof![
            Just(CmpOp::Eq), Just(CmpOp::Ne), Just(CmpOp::Gt),
            Just(CmpOp::Ge), Just(CmpOp::Lt), Just(CmpOp::Le)
        ], name_strategy())
            .prop_map(|(l, op, r)| Condition::Compare(l, op, Operand::Term(Term::Name(r)))),
        (name_strategy(), "[ab%_]{0,6}").prop_map(|(n, t)| {
            Condition::Match(Operand::Term(Term::Name(n)), t)
        }),
        Just(Condition::BoolConst(true)),
        Just(Condition::BoolConst(false)),
    ]
}

pub fn leaf_node() -> impl Strategy<Value = Node> {
    prop_oneof![
        4 => pattern_strategy().prop_map(Node::Pattern),
        1 => condition_strategy().prop_map(Node::Cond),
    ]
}

pub fn node_strategy() -> impl Strategy<Value = Node> {
    // children of \and are never \and themselves (the parser flattens),
    // same for \or
    let not_leaf = prop_oneof![
        6 => leaf_node(),
        1 => leaf_node().prop_map(|n| Node::Not(Box::new(n))),
    ];
    let or_node = proptest::collection::vec(not_leaf.clone(), 2..3).prop_map(Node::Or);
    prop_oneof![
        4 => leaf_node(),
        2 => proptest::collection::vec(
            prop_oneof![4 => not_leaf.clone(), 1 => or_node.clone()],
            2..4,
        ).prop_map(Node::And),
        1 => or_node,
        1 => not_leaf,
    ]
}

pub fn bound_vars(node: &Node) -> Vec<String> {
    fn term_vars(t: &Term, out: &mut Vec<String>) {
        match t {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::SubjectExpr(s, p) => {
                term_vars(s, out);
                term_vars(p, out);
            }
            Term::Path { base, .. } => term_vars(base, out),
            _ => {}
        }
    }
    fn walk(n: &Node, out: &mut Vec<String>) {
        match n {
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
            Node::And(cs) | Node::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
            Node::Not(inner) => walk(inner, out),
            Node::Cond(_) => {}
        }
    }
    let mut out = Vec::new();
    walk(node, &mut out);
    out
}

pub fn query_strategy() -> impl Strategy<Value = QueryAst> {
    (
        node_strategy(),
        proptest::option::of(prop_oneof![
            Just(AggFunc::Count),
            Just(AggFunc::Avg),
            Just(AggFunc::Sum),
            Just(AggFunc::Max),
            Just(AggFunc::Min)
        ]),
        proptest::option::of((proptest::collection::vec(segment_word(), 0..2), any::<bool>())),
        proptest::option::of(proptest::collection::vec(segment_word(), 0..2)),
        proptest::collection::vec(condition_strategy().prop_map(Node::Cond), 0..2),
        any::<bool>(),
    )
        .prop_map(|(node, agg, order, group, filters, want_ans)| {
            let bound = bound_vars(&node);
            let mut statements = vec![Statement::Conjunct(node)];
            let mut assigned: Option<String> = None;
            if let (Some(func), Some(arg)) = (agg, bound.first()) {
                assigned = Some("z9".to_string());
                statements.push(Statement::Assign(Assignment {
                    var: "z9".to_string(),
                    func,
                    arg: arg.clone(),
                }));
            }
            let order_by = order.and_then(|(props, desc)| {
                bound.first().map(|v| {
                    (
                        VarPath { var: v.clone(), properties: props },
                        if desc { Direction::Desc } else { Direction::Asc },
                    )
                })
            });
            let group_by = group.and_then(|props| {
                bound.last().map(|v| VarPath { var: v.clone(), properties: props })
            });
            let ans = want_ans.then(|| {
                let mut items: Vec<VarPath> =
                    bound.iter().take(2).map(|v| VarPath::bare(v)).collect();
                if let Some(a) = &assigned {
                    items.push(VarPath::bare(a));
                }
                items
            });
            let ans = match ans {
                Some(items) if !items.is_empty() => Some(items),
                _ => None,
            };
            QueryAst { statements, order_by, group_by, filters, ans }
        })
        .prop_filter("valid query", |q| {
            let printed = eql_core::parser::pretty_print(q);
            eql_core::parser::parse_query(&printed).is_ok()
        })
}

