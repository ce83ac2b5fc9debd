//! Lambda-calculus rendering of the supported query subset: single-answer
//! conjunctive queries, subject expressions as existentials, and
//! max/min/count assignments as argmax/argmin/count terms.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::parser::{
    AggFunc, Condition, Node, QualifierPattern, QueryAst, SpoPatternAst, Statement, Term,
};
use crate::store::{Resolution, Store};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaTerm {
    Abstraction(String, Box<LambdaTerm>),
    Exists(String, Box<LambdaTerm>),
    PredicateApp(String, Vec<String>),
    Conj(Vec<LambdaTerm>),
    Disj(Vec<LambdaTerm>),
    Neg(Box<LambdaTerm>),
    /// `argmax(domain abstraction, value abstraction)`.
    ArgMax(Box<LambdaTerm>, Box<LambdaTerm>),
    ArgMin(Box<LambdaTerm>, Box<LambdaTerm>),
    CountTerm(Box<LambdaTerm>),
}

/// Conversion result: a term, or the constructs that keep the query
/// outside the supported subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaOutcome {
    Term(LambdaTerm),
    Unsupported(Vec<String>),
}

impl LambdaOutcome {
    pub fn term(&self) -> Option<&LambdaTerm> {
        match self {
            LambdaOutcome::Term(t) => Some(t),
            LambdaOutcome::Unsupported(_) => None,
        }
    }
}

/// Removes non-alphanumerics and upper-cases each word's first letter:
/// "instance of" -> "InstanceOf", "U.S. state" -> "USState".
fn camel(name: &str) -> String {
    let mut out = String::new();
    for word in name.split_whitespace() {
        let cleaned: String = word.chars().filter(|c| c.is_alphanumeric()).collect();
        let mut chars = cleaned.chars();
        if let Some(first) = chars.next() {
            out.extend(first.to_uppercase());
            out.extend(chars);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum VarKey {
    User(String),
    Internal(u32),
}

struct Translator<'a> {
    store: Option<&'a Store>,
    names: BTreeMap<VarKey, String>,
    order: Vec<VarKey>,
    next_internal: u32,
    unsupported: Vec<String>,
}

const VAR_NAMES: [&str; 3] = ["x", "y", "z"];

impl<'a> Translator<'a> {
    fn new(store: Option<&'a Store>) -> Self {
        Translator {
            store,
            names: BTreeMap::new(),
            order: Vec::new(),
            next_internal: 0,
            unsupported: Vec::new(),
        }
    }

    fn canonical(&self, name: &str) -> String {
        if let Some(store) = self.store {
            if let Resolution::Exact(id) | Resolution::Alias(id) = store.resolve_name(name) {
                return store.display_name(&id).to_string();
            }
        }
        name.to_string()
    }

    fn lambda_var(&mut self, key: VarKey) -> String {
        if let Some(n) = self.names.get(&key) {
            return n.clone();
        }
        let idx = self.order.len();
        let name = if idx < VAR_NAMES.len() {
            VAR_NAMES[idx].to_string()
        } else {
            format!("z{}", idx - VAR_NAMES.len() + 1)
        };
        self.order.push(key.clone());
        self.names.insert(key, name.clone());
        name
    }

    fn fresh_internal(&mut self) -> String {
        self.next_internal += 1;
        self.lambda_var(VarKey::Internal(self.next_internal))
    }

    fn mark(&mut self, construct: &str) {
        let c = construct.to_string();
        if !self.unsupported.contains(&c) {
            self.unsupported.push(c);
        }
    }

    /// Argument text for a term; subject expressions emit their binding
    /// predicate into `preds` and return the introduced variable.
    fn term_arg(&mut self, term: &Term, anon_key: Option<&VarKey>, preds: &mut Vec<LambdaTerm>) -> String {
        match term {
            Term::Name(n) => camel(&self.canonical(n)),
            Term::Var(v) => self.lambda_var(VarKey::User(v.clone())),
            Term::Anon => match anon_key {
                Some(key) => self.lambda_var(key.clone()),
                None => {
                    self.mark("?");
                    String::from("?")
                }
            },
            Term::SubjectExpr(s, p) => {
                let s_arg = self.term_arg(s, anon_key, preds);
                let pred = match &**p {
                    Term::Name(n) => camel(&self.canonical(n)),
                    _ => {
                        self.mark("variable property");
                        String::from("P")
                    }
                };
                let result = self.fresh_internal();
                preds.push(LambdaTerm::PredicateApp(pred, alloc::vec![s_arg, result.clone()]));
                result
            }
            Term::Path { .. } => {
                self.mark("property path");
                String::from("path")
            }
        }
    }

    fn pattern_preds(&mut self, p: &SpoPatternAst, anon_key: Option<&VarKey>, preds: &mut Vec<LambdaTerm>) {
        let pred_name = match &p.p {
            Term::Name(n) => camel(&self.canonical(n)),
            Term::Anon | Term::Var(_) => {
                self.mark("variable property");
                return;
            }
            _ => {
                self.mark("variable property");
                return;
            }
        };
        let s_arg = self.term_arg(&p.s, anon_key, preds);
        let o_arg = self.term_arg(&p.o, anon_key, preds);
        match &p.qualifiers {
            QualifierPattern::All => self.mark("(?)"),
            QualifierPattern::List(pairs) if pairs.is_empty() => {
                preds.push(LambdaTerm::PredicateApp(pred_name, alloc::vec![s_arg, o_arg]));
            }
            QualifierPattern::List(pairs) => {
                let queried = pairs.iter().any(|(q, v)| {
                    !matches!(q, Term::Name(_)) || !matches!(v, Term::Name(_))
                });
                if !queried {
                    // ground qualifiers are dropped from the rendering
                    preds.push(LambdaTerm::PredicateApp(pred_name, alloc::vec![s_arg, o_arg]));
                    return;
                }
                // reify the statement as an event
                let event = self.fresh_internal();
                preds.push(LambdaTerm::PredicateApp(
                    pred_name,
                    alloc::vec![event.clone(), s_arg, o_arg],
                ));
                for (q, v) in pairs {
                    let q_name = match q {
                        Term::Name(n) => camel(&self.canonical(n)),
                        _ => {
                            self.mark("variable qualifier property");
                            continue;
                        }
                    };
                    let v_arg = self.term_arg(v, anon_key, preds);
                    preds.push(LambdaTerm::PredicateApp(q_name, alloc::vec![event.clone(), v_arg]));
                }
            }
        }
    }

    fn node_term(&mut self, node: &Node, anon_key: Option<&VarKey>) -> LambdaTerm {
        match node {
            Node::Pattern(p) => {
                let mut preds = Vec::new();
                self.pattern_preds(p, anon_key, &mut preds);
                conj(preds)
            }
            Node::And(cs) => conj(cs.iter().map(|c| self.node_term(c, anon_key)).collect()),
            Node::Or(cs) => {
                let parts: Vec<LambdaTerm> =
                    cs.iter().map(|c| self.node_term(c, anon_key)).collect();
                LambdaTerm::Disj(parts)
            }
            Node::Not(inner) => LambdaTerm::Neg(Box::new(self.node_term(inner, anon_key))),
            Node::Cond(c) => {
                match c {
                    Condition::Compare(..) => self.mark("comparison"),
                    Condition::Match(..) => self.mark("\\match"),
                    Condition::BoolConst(_) => self.mark("\\true/\\false"),
                }
                conj(Vec::new())
            }
        }
    }
}

fn conj(mut preds: Vec<LambdaTerm>) -> LambdaTerm {
    match preds.len() {
        1 => preds.pop().unwrap(),
        _ => LambdaTerm::Conj(preds),
    }
}

fn count_anons(q: &QueryAst) -> usize {
    fn term_anons(t: &Term) -> usize {
        match t {
            Term::Anon => 1,
            Term::SubjectExpr(s, p) => term_anons(s) + term_anons(p),
            Term::Path { base, .. } => term_anons(base),
            _ => 0,
        }
    }
    fn node_anons(n: &Node) -> usize {
        match n {
            Node::Pattern(p) => {
                let mut c = term_anons(&p.s) + term_anons(&p.p) + term_anons(&p.o);
                if let QualifierPattern::List(pairs) = &p.qualifiers {
                    c += pairs.iter().map(|(q, v)| term_anons(q) + term_anons(v)).sum::<usize>();
                }
                c
            }
            Node::And(cs) | Node::Or(cs) => cs.iter().map(node_anons).sum(),
            Node::Not(inner) => node_anons(inner),
            Node::Cond(_) => 0,
        }
    }
    q.statements
        .iter()
        .map(|s| match s {
            Statement::Conjunct(n) => node_anons(n),
            Statement::Assign(_) => 0,
        })
        .sum()
}

fn user_vars(q: &QueryAst) -> Vec<String> {
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
    fn node_vars(n: &Node, out: &mut Vec<String>) {
        match n {
            Node::Pattern(p) => {
                term_vars(&p.s, out);
                term_vars(&p.p, out);
                term_vars(&p.o, out);
                if let QualifierPattern::List(pairs) = &p.qualifiers {
                    for (qt, vt) in pairs {
                        term_vars(qt, out);
                        term_vars(vt, out);
                    }
                }
            }
            Node::And(cs) | Node::Or(cs) => cs.iter().for_each(|c| node_vars(c, out)),
            Node::Not(inner) => node_vars(inner, out),
            Node::Cond(_) => {}
        }
    }
    let mut out = Vec::new();
    for s in &q.statements {
        if let Statement::Conjunct(n) = s {
            node_vars(n, &mut out);
        }
    }
    out
}

fn to_lambda_impl(query: &QueryAst, store: Option<&Store>) -> LambdaOutcome {
    let mut tr = Translator::new(store);
    if query.order_by.is_some() {
        tr.mark("\\order by");
    }
    if query.group_by.is_some() {
        tr.mark("\\group by");
    }
    if !query.filters.is_empty() {
        tr.mark("\\filter");
    }

    let mut conjuncts: Vec<&Node> = Vec::new();
    let mut assignments = Vec::new();
    for stmt in &query.statements {
        match stmt {
            Statement::Conjunct(n) => conjuncts.push(n),
            Statement::Assign(a) => assignments.push(a),
        }
    }
    if assignments.len() > 1 {
        tr.mark("multiple assignments");
    }
    // a clause-level rejection already settles it
    if !tr.unsupported.is_empty() {
        return LambdaOutcome::Unsupported(tr.unsupported);
    }

    // the single answer variable
    let anon_key = VarKey::Internal(u32::MAX);
    let anons = count_anons(query);
    let vars = user_vars(query);
    let assignment = assignments.first().copied();
    let answer: Option<VarKey> = match (&query.ans, assignment) {
        (Some(items), _) => {
            if items.len() != 1 || !items[0].properties.is_empty() {
                tr.mark("ANS projection list");
                None
            } else {
                Some(VarKey::User(items[0].var.clone()))
            }
        }
        (None, _) if anons == 1 => Some(anon_key.clone()),
        (None, _) if anons == 0 && vars.len() == 1 => Some(VarKey::User(vars[0].clone())),
        _ => {
            tr.mark("multiple answer variables");
            None
        }
    };

    match assignment {
        None => {
            let answer_key = match answer {
                Some(k) => k,
                None => return LambdaOutcome::Unsupported(tr.unsupported),
            };
            let answer_var = tr.lambda_var(answer_key.clone());
            let body = conj(
                conjuncts
                    .iter()
                    .map(|n| tr.node_term(n, Some(&answer_key)))
                    .collect(),
            );
            if !tr.unsupported.is_empty() {
                return LambdaOutcome::Unsupported(tr.unsupported);
            }
            // every variable other than the answer is existential
            let mut term = body;
            for key in tr.order.clone().into_iter().rev() {
                if key != answer_key {
                    let name = tr.names[&key].clone();
                    term = LambdaTerm::Exists(name, Box::new(term));
                }
            }
            LambdaOutcome::Term(LambdaTerm::Abstraction(answer_var, Box::new(term)))
        }
        Some(a) => match a.func {
            AggFunc::Count => {
                let arg_key = VarKey::User(a.arg.clone());
                if let Some(ans) = &query.ans {
                    let ok = ans.len() == 1
                        && ans[0].properties.is_empty()
                        && (ans[0].var == a.var || ans[0].var == a.arg);
                    if !ok {
                        tr.mark("ANS projection list");
                    }
                }
                let arg_var = tr.lambda_var(arg_key.clone());
                let body = conj(
                    conjuncts.iter().map(|n| tr.node_term(n, None)).collect(),
                );
                if !tr.unsupported.is_empty() {
                    return LambdaOutcome::Unsupported(tr.unsupported);
                }
                let mut term = body;
                for key in tr.order.clone().into_iter().rev() {
                    if key != arg_key {
                        let name = tr.names[&key].clone();
                        term = LambdaTerm::Exists(name, Box::new(term));
                    }
                }
                LambdaOutcome::Term(LambdaTerm::CountTerm(Box::new(LambdaTerm::Abstraction(
                    arg_var,
                    Box::new(term),
                ))))
            }
            AggFunc::Max | AggFunc::Min => {
                // find the one simple pattern `?u : P : ?v` binding the
                // aggregated variable; it becomes the value abstraction
                let mut value_pattern: Option<(&SpoPatternAst, String)> = None;
                let mut domain: Vec<&Node> = Vec::new();
                let mut fits = true;
                for node in &conjuncts {
                    match node {
                        Node::Pattern(p)
                            if matches!(&p.o, Term::Var(v) if *v == a.arg)
                                && matches!(&p.qualifiers, QualifierPattern::List(l) if l.is_empty()) =>
                        {
                            let Term::Var(subject) = &p.s else {
                                fits = false;
                                continue;
                            };
                            if value_pattern.is_some() {
                                fits = false;
                            }
                            value_pattern = Some((p, subject.clone()));
                        }
                        other => domain.push(other),
                    }
                }
                let Some((vp, subject)) = value_pattern else {
                    tr.mark("max/min without a value pattern");
                    return LambdaOutcome::Unsupported(tr.unsupported);
                };
                if !fits || domain.is_empty() {
                    tr.mark("max/min over a non-simple query");
                    return LambdaOutcome::Unsupported(tr.unsupported);
                }
                let domain_var = tr.lambda_var(VarKey::User(subject.clone()));
                let value_var = tr.lambda_var(VarKey::User(a.arg.clone()));
                let domain_body =
                    conj(domain.iter().map(|n| tr.node_term(n, None)).collect());
                let mut value_preds = Vec::new();
                tr.pattern_preds(vp, None, &mut value_preds);
                if !tr.unsupported.is_empty() {
                    return LambdaOutcome::Unsupported(tr.unsupported);
                }
                let mut dbody = domain_body;
                for key in tr.order.clone().into_iter().rev() {
                    if key != VarKey::User(subject.clone()) && key != VarKey::User(a.arg.clone()) {
                        let name = tr.names[&key].clone();
                        dbody = LambdaTerm::Exists(name, Box::new(dbody));
                    }
                }
                let domain_abs =
                    LambdaTerm::Abstraction(domain_var.clone(), Box::new(dbody));
                let value_abs = LambdaTerm::Abstraction(
                    domain_var,
                    Box::new(LambdaTerm::Abstraction(value_var, Box::new(conj(value_preds)))),
                );
                let term = match a.func {
                    AggFunc::Max => LambdaTerm::ArgMax(Box::new(domain_abs), Box::new(value_abs)),
                    _ => LambdaTerm::ArgMin(Box::new(domain_abs), Box::new(value_abs)),
                };
                LambdaOutcome::Term(term)
            }
            AggFunc::Avg | AggFunc::Sum => {
                tr.mark(a.func.name());
                LambdaOutcome::Unsupported(tr.unsupported)
            }
        },
    }
}

/// Converts a query using the surface names as written.
pub fn to_lambda(query: &QueryAst) -> LambdaOutcome {
    to_lambda_impl(query, None)
}

/// Converts a query with names canonicalized through the store's alias
/// index ("U.S. states" renders as its canonical "U.S. state").
pub fn to_lambda_with(query: &QueryAst, store: &Store) -> LambdaOutcome {
    to_lambda_impl(query, Some(store))
}

// ---- rendering ----

fn precedence(term: &LambdaTerm) -> u8 {
    match term {
        LambdaTerm::Disj(_) => 1,
        LambdaTerm::Conj(_) => 2,
        LambdaTerm::Neg(_) => 3,
        _ => 4,
    }
}

fn render_term(term: &LambdaTerm, ascii: bool, out: &mut String) {
    let wrap = |t: &LambdaTerm, min: u8, out: &mut String| {
        if precedence(t) < min {
            out.push('(');
            render_term(t, ascii, out);
            out.push(')');
        } else {
            render_term(t, ascii, out);
        }
    };
    match term {
        LambdaTerm::Abstraction(v, body) => {
            out.push_str(if ascii { "lambda " } else { "λ" });
            out.push_str(v);
            out.push('.');
            render_term(body, ascii, out);
        }
        LambdaTerm::Exists(v, body) => {
            out.push_str(if ascii { "exists " } else { "∃" });
            out.push_str(v);
            out.push('.');
            render_term(body, ascii, out);
        }
        LambdaTerm::PredicateApp(name, args) => {
            out.push_str(name);
            out.push('(');
            out.push_str(&args.join(", "));
            out.push(')');
        }
        LambdaTerm::Conj(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(if ascii { " & " } else { " ∧ " });
                }
                wrap(p, 2, out);
            }
        }
        LambdaTerm::Disj(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(if ascii { " | " } else { " ∨ " });
                }
                wrap(p, 1, out);
            }
        }
        LambdaTerm::Neg(inner) => {
            out.push_str(if ascii { "!" } else { "¬" });
            wrap(inner, 3, out);
        }
        LambdaTerm::ArgMax(d, v) => {
            out.push_str("argmax(");
            render_term(d, ascii, out);
            out.push_str(", ");
            render_term(v, ascii, out);
            out.push(')');
        }
        LambdaTerm::ArgMin(d, v) => {
            out.push_str("argmin(");
            render_term(d, ascii, out);
            out.push_str(", ");
            render_term(v, ascii, out);
            out.push(')');
        }
        LambdaTerm::CountTerm(a) => {
            out.push_str("count(");
            render_term(a, ascii, out);
            out.push(')');
        }
    }
}

/// Renders a term; `ascii` falls back to `lambda`, `exists`, `&`, `|`,
/// `!`.
pub fn render(term: &LambdaTerm, ascii: bool) -> String {
    let mut out = String::new();
    render_term(term, ascii, &mut out);
    out
}

/// Converts and renders in one step; unsupported queries produce the
/// marker text listing the offending constructs.
pub fn to_lambda_text(query: &QueryAst, store: Option<&Store>, ascii: bool) -> String {
    let outcome = match store {
        Some(st) => to_lambda_with(query, st),
        None => to_lambda(query),
    };
    match outcome {
        LambdaOutcome::Term(t) => render(&t, ascii),
        LambdaOutcome::Unsupported(constructs) => {
            format!("unsupported({})", constructs.join(", "))
        }
    }
}

// ---- well-formedness checking ----

/// Parses the Unicode rendering back into a term and checks that every
/// variable is bound. Exists to validate generated output.
pub fn parse_lambda(text: &str) -> Result<LambdaTerm, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0usize;
    let term = parse_expr(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(format!("trailing input at {pos}"));
    }
    let mut bound = Vec::new();
    check_closed(&term, &mut bound)?;
    Ok(term)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while chars.get(*pos).map(|c| c.is_whitespace()).unwrap_or(false) {
        *pos += 1;
    }
}

fn parse_ident(chars: &[char], pos: &mut usize) -> Result<String, String> {
    skip_ws(chars, pos);
    let start = *pos;
    while chars
        .get(*pos)
        .map(|c| c.is_alphanumeric() || *c == '_')
        .unwrap_or(false)
    {
        *pos += 1;
    }
    if start == *pos {
        return Err(format!("expected identifier at {start}"));
    }
    Ok(chars[start..*pos].iter().collect())
}

fn expect(chars: &[char], pos: &mut usize, c: char) -> Result<(), String> {
    skip_ws(chars, pos);
    if chars.get(*pos) == Some(&c) {
        *pos += 1;
        Ok(())
    } else {
        Err(format!("expected {c:?} at {pos:?}"))
    }
}

fn parse_expr(chars: &[char], pos: &mut usize) -> Result<LambdaTerm, String> {
    skip_ws(chars, pos);
    match chars.get(*pos) {
        Some('λ') => {
            *pos += 1;
            let v = parse_ident(chars, pos)?;
            expect(chars, pos, '.')?;
            Ok(LambdaTerm::Abstraction(v, Box::new(parse_expr(chars, pos)?)))
        }
        Some('∃') => {
            *pos += 1;
            let v = parse_ident(chars, pos)?;
            expect(chars, pos, '.')?;
            Ok(LambdaTerm::Exists(v, Box::new(parse_expr(chars, pos)?)))
        }
        _ => parse_disj(chars, pos),
    }
}

fn parse_disj(chars: &[char], pos: &mut usize) -> Result<LambdaTerm, String> {
    let mut parts = alloc::vec![parse_conj(chars, pos)?];
    loop {
        skip_ws(chars, pos);
        if chars.get(*pos) == Some(&'∨') {
            *pos += 1;
            parts.push(parse_conj(chars, pos)?);
        } else {
            break;
        }
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { LambdaTerm::Disj(parts) })
}

fn parse_conj(chars: &[char], pos: &mut usize) -> Result<LambdaTerm, String> {
    let mut parts = alloc::vec![parse_neg(chars, pos)?];
    loop {
        skip_ws(chars, pos);
        if chars.get(*pos) == Some(&'∧') {
            *pos += 1;
            parts.push(parse_neg(chars, pos)?);
        } else {
            break;
        }
    }
    Ok(if parts.len() == 1 { parts.pop().unwrap() } else { LambdaTerm::Conj(parts) })
}

fn parse_neg(chars: &[char], pos: &mut usize) -> Result<LambdaTerm, String> {
    skip_ws(chars, pos);
    if chars.get(*pos) == Some(&'¬') {
        *pos += 1;
        return Ok(LambdaTerm::Neg(Box::new(parse_neg(chars, pos)?)));
    }
    parse_atom(chars, pos)
}

fn parse_atom(chars: &[char], pos: &mut usize) -> Result<LambdaTerm, String> {
    skip_ws(chars, pos);
    if chars.get(*pos) == Some(&'(') {
        *pos += 1;
        let inner = parse_expr(chars, pos)?;
        expect(chars, pos, ')')?;
        return Ok(inner);
    }
    if matches!(chars.get(*pos), Some('λ') | Some('∃')) {
        return parse_expr(chars, pos);
    }
    let ident = parse_ident(chars, pos)?;
    match ident.as_str() {
        "argmax" | "argmin" => {
            expect(chars, pos, '(')?;
            let a = parse_expr(chars, pos)?;
            expect(chars, pos, ',')?;
            let b = parse_expr(chars, pos)?;
            expect(chars, pos, ')')?;
            Ok(if ident == "argmax" {
                LambdaTerm::ArgMax(Box::new(a), Box::new(b))
            } else {
                LambdaTerm::ArgMin(Box::new(a), Box::new(b))
            })
        }
        "count" => {
            expect(chars, pos, '(')?;
            let a = parse_expr(chars, pos)?;
            expect(chars, pos, ')')?;
            Ok(LambdaTerm::CountTerm(Box::new(a)))
        }
        _ => {
            expect(chars, pos, '(')?;
            let mut args = alloc::vec![parse_ident(chars, pos)?];
            loop {
                skip_ws(chars, pos);
                if chars.get(*pos) == Some(&',') {
                    *pos += 1;
                    args.push(parse_ident(chars, pos)?);
                } else {
                    break;
                }
            }
            expect(chars, pos, ')')?;
            Ok(LambdaTerm::PredicateApp(ident, args))
        }
    }
}

fn looks_like_var(arg: &str) -> bool {
    let mut chars = arg.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_digit())
}

fn check_closed(term: &LambdaTerm, bound: &mut Vec<String>) -> Result<(), String> {
    match term {
        LambdaTerm::Abstraction(v, body) | LambdaTerm::Exists(v, body) => {
            if bound.contains(v) {
                return Err(format!("variable {v} bound twice"));
            }
            bound.push(v.clone());
            check_closed(body, bound)?;
            bound.pop();
            Ok(())
        }
        LambdaTerm::PredicateApp(_, args) => {
            for a in args {
                if looks_like_var(a) && !bound.contains(a) {
                    return Err(format!("unbound variable {a}"));
                }
            }
            Ok(())
        }
        LambdaTerm::Conj(parts) | LambdaTerm::Disj(parts) => {
            parts.iter().try_for_each(|p| check_closed(p, bound))
        }
        LambdaTerm::Neg(inner) | LambdaTerm::CountTerm(inner) => check_closed(inner, bound),
        LambdaTerm::ArgMax(a, b) | LambdaTerm::ArgMin(a, b) => {
            check_closed(a, bound)?;
            check_closed(b, bound)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_query;

    #[test]
    fn existential_children_query_renders_exactly() {
        let q = parse_query("(? : children): BirthPlace: New York").unwrap();
        let out = to_lambda(&q);
        let LambdaOutcome::Term(t) = &out else { panic!("{out:?}") };
        assert_eq!(render(t, false), "λx.∃y.Children(x, y) ∧ BirthPlace(y, NewYork)");
        assert_eq!(
            render(t, true),
            "lambda x.exists y.Children(x, y) & BirthPlace(y, NewYork)"
        );
    }

    #[test]
    fn argmax_area_query_renders_exactly() {
        let q = parse_query(
            "? x: instance of : U.S. states,\n? x: area :?y,\n? z = max(?y),\nANS ?z",
        )
        .unwrap();
        let LambdaOutcome::Term(t) = to_lambda(&q) else { panic!() };
        assert_eq!(render(&t, false), "argmax(λx.InstanceOf(x, USStates), λx.λy.Area(x, y))");
    }

    #[test]
    fn clause_constructs_are_unsupported() {
        let q = parse_query(
            "? x: award: Nobel Prize in Literature ( Date :? y)\n\\group by ? x.nationality",
        )
        .unwrap();
        match to_lambda(&q) {
            LambdaOutcome::Unsupported(cs) => assert!(cs.contains(&"\\group by".to_string())),
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn identical_asts_render_identically() {
        let q1 = parse_query("(? : children): BirthPlace: New York").unwrap();
        let q2 = parse_query("(?: children) : BirthPlace : New York").unwrap();
        assert_eq!(to_lambda(&q1), to_lambda(&q2));
    }

    #[test]
    fn generated_terms_parse_closed() {
        for text in [
            "λx.∃y.Children(x, y) ∧ BirthPlace(y, NewYork)",
            "argmax(λx.InstanceOf(x, USState), λx.λy.Area(x, y))",
            "count(λx.∃y.Award(x, y))",
            "λx.¬(A(x) ∨ B(x))",
        ] {
            let t = parse_lambda(text).unwrap();
            assert_eq!(render(&t, false), text);
        }
        assert!(parse_lambda("λx.Children(x, w)").is_err());
        assert!(parse_lambda("λx.(A(x)").is_err());
    }
}
