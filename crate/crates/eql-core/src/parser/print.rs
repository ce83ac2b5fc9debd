//! Canonical pretty-printer. `parse_query(pretty_print(q))` reproduces
//! the same AST.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;

/// Escapes characters the tokenizer treats as structure.
pub(crate) fn escape_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            ':' | '?' | '：' | '？' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

pub fn print_term(term: &Term) -> String {
    match term {
        Term::Name(n) => escape_name(n),
        Term::Anon => String::from("?"),
        Term::Var(v) => format!("?{v}"),
        Term::SubjectExpr(s, p) => format!("({} : {})", print_term(s), print_term(p)),
        Term::Path { base, properties } => {
            let mut out = print_term(base);
            for p in properties {
                out.push('.');
                out.push_str(p);
            }
            out
        }
    }
}

pub fn print_pattern(p: &SpoPatternAst) -> String {
    let mut out = format!(
        "{} : {} : {}",
        print_term(&p.s),
        print_term(&p.p),
        print_term(&p.o)
    );
    match &p.qualifiers {
        QualifierPattern::All => out.push_str(" (?)"),
        QualifierPattern::List(pairs) if !pairs.is_empty() => {
            let inner: Vec<String> = pairs
                .iter()
                .map(|(q, v)| format!("{} : {}", print_term(q), print_term(v)))
                .collect();
            out.push_str(&format!(" ({})", inner.join(", ")));
        }
        QualifierPattern::List(_) => {}
    }
    out
}

fn print_operand(op: &Operand) -> String {
    match op {
        Operand::Term(t) => print_term(t),
        Operand::Agg(f, v) => format!("{}(?{v})", f.name()),
    }
}

pub fn print_condition(c: &Condition) -> String {
    match c {
        Condition::Compare(l, op, r) => {
            format!("{} {} {}", print_operand(l), op, print_operand(r))
        }
        Condition::Match(l, raw) => format!("{} \\match '{raw}'", print_operand(l)),
        Condition::BoolConst(true) => String::from("\\true"),
        Condition::BoolConst(false) => String::from("\\false"),
    }
}

// precedence: \or = 1, \and = 2, \not = 3, atoms bind tightest.
fn node_prec(node: &Node) -> u8 {
    match node {
        Node::Or(_) => 1,
        Node::And(_) => 2,
        Node::Not(_) => 3,
        Node::Pattern(_) => 4,
        // conditions always get parentheses inside a composite, as in
        // `(count (?y) >= 10)`
        Node::Cond(_) => 0,
    }
}

fn print_child(child: &Node, min_prec: u8) -> String {
    let text = print_node(child);
    if node_prec(child) < min_prec {
        format!("({text})")
    } else {
        text
    }
}

pub fn print_node(node: &Node) -> String {
    match node {
        Node::Pattern(p) => print_pattern(p),
        Node::Cond(c) => print_condition(c),
        Node::And(children) => {
            let parts: Vec<String> = children.iter().map(|c| print_child(c, 2)).collect();
            parts.join(" \\and ")
        }
        Node::Or(children) => {
            let parts: Vec<String> = children.iter().map(|c| print_child(c, 1)).collect();
            parts.join(" \\or ")
        }
        Node::Not(inner) => format!("\\not {}", print_child(inner, 3)),
    }
}

fn print_var_path(vp: &VarPath) -> String {
    let mut out = format!("?{}", vp.var);
    for p in &vp.properties {
        out.push('.');
        out.push_str(p);
    }
    out
}

/// Renders the canonical text form: one statement per line, clauses on
/// indented lines, `\order by` always with the backslash and an explicit
/// direction.
pub fn pretty_print(q: &QueryAst) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut stmts: Vec<String> = q
        .statements
        .iter()
        .map(|s| match s {
            Statement::Conjunct(node) => print_node(node),
            Statement::Assign(a) => format!("?{} = {}(?{})", a.var, a.func.name(), a.arg),
        })
        .collect();
    if let Some(items) = &q.ans {
        let rendered: Vec<String> = items.iter().map(print_var_path).collect();
        stmts.push(format!("ANS {}", rendered.join(", ")));
    }
    if !stmts.is_empty() {
        lines.push(stmts.join(",\n"));
    }
    if let Some((key, dir)) = &q.order_by {
        let d = match dir {
            Direction::Asc => "asc",
            Direction::Desc => "desc",
        };
        lines.push(format!("  \\order by {} {d}", print_var_path(key)));
    }
    if let Some(key) = &q.group_by {
        lines.push(format!("  \\group by {}", print_var_path(key)));
    }
    for f in &q.filters {
        lines.push(format!("  \\filter {}", print_node(f)));
    }
    lines.join("\n")
}

fn print_draft(d: &StatementDraft) -> String {
    let mut out = format!(
        "{} : {} : {}",
        escape_name(&d.s),
        escape_name(&d.p),
        escape_name(&d.o)
    );
    if !d.qualifiers.is_empty() {
        let inner: Vec<String> = d
            .qualifiers
            .iter()
            .map(|(q, v)| format!("{} : {}", escape_name(q), escape_name(v)))
            .collect();
        out.push_str(&format!(" ({})", inner.join(", ")));
    }
    out
}

/// One-line surface rendering of a `\suggest` request, as journaled.
pub fn print_suggestion(s: &SuggestionAst) -> String {
    let mut out = format!("\\suggest {} {}", s.kind.name(), print_draft(&s.before));
    if let Some(after) = &s.after {
        out.push_str(&format!(" \\changeTo {}", print_draft(after)));
    }
    for (i, r) in s.refs.iter().enumerate() {
        out.push_str(&format!(" \\ref{}: {}", i + 1, r));
    }
    out
}
