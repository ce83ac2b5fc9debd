//! Recursive-descent parser for EQL queries and `\suggest` requests.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::*;
use super::token::{tokenize, CmpOp, Kw, ParseError, Pos, Tok, Token};

struct Parser {
    tokens: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, i: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.i).map(|t| &t.tok)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.tokens.get(self.i + off).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.tokens
            .get(self.i)
            .or_else(|| self.tokens.last())
            .map(|t| t.pos)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.i).map(|t| t.tok.clone());
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.i >= self.tokens.len()
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.pos(), message)
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> PResult<()> {
        if self.peek() == Some(tok) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn eat_word_ci(&mut self, word: &str) -> bool {
        if let Some(Tok::Word(w)) = self.peek() {
            if w.eq_ignore_ascii_case(word) {
                self.bump();
                return true;
            }
        }
        false
    }

    // ---- terms ----

    fn term(&mut self) -> PResult<Term> {
        let base = match self.peek() {
            Some(Tok::Anon) => {
                self.bump();
                return Ok(Term::Anon);
            }
            Some(Tok::Var(_)) => {
                let Some(Tok::Var(v)) = self.bump() else { unreachable!() };
                Term::Var(v)
            }
            Some(Tok::LParen) => {
                self.bump();
                let s = self.term()?;
                self.expect(&Tok::Colon, "':' inside subject expression")?;
                let p = self.term()?;
                self.expect(&Tok::RParen, "')' closing subject expression")?;
                Term::SubjectExpr(Box::new(s), Box::new(p))
            }
            Some(Tok::Word(_)) => {
                return Ok(Term::Name(self.name(&[])?));
            }
            Some(Tok::Quoted(_)) => return Err(self.err("unexpected string template")),
            _ => return Err(self.err("expected a name, variable, '?', or '('")),
        };
        self.path_suffix(base, &[])
    }

    /// Joins consecutive word fragments into one name, stopping at stop
    /// words.
    fn name(&mut self, stops: &[&str]) -> PResult<String> {
        let mut words: Vec<String> = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            if stops.iter().any(|s| w.eq_ignore_ascii_case(s)) {
                break;
            }
            words.push(w.clone());
            self.bump();
        }
        if words.is_empty() {
            return Err(self.err("expected a name"));
        }
        Ok(words.join(" "))
    }

    fn path_suffix(&mut self, base: Term, stops: &[&str]) -> PResult<Term> {
        let mut properties: Vec<String> = Vec::new();
        while self.peek() == Some(&Tok::Dot) {
            self.bump();
            properties.push(self.name(stops).map_err(|_| {
                self.err("expected a property name after '.'")
            })?);
        }
        if properties.is_empty() {
            Ok(base)
        } else {
            Ok(Term::Path { base: Box::new(base), properties })
        }
    }

    fn var_path(&mut self, stops: &[&str]) -> PResult<VarPath> {
        let var = match self.bump() {
            Some(Tok::Var(v)) => v,
            _ => {
                self.i = self.i.saturating_sub(1);
                return Err(self.err("expected a variable like ?x"));
            }
        };
        let mut properties = Vec::new();
        while self.peek() == Some(&Tok::Dot) {
            self.bump();
            properties.push(self.name(stops)?);
        }
        Ok(VarPath { var, properties })
    }

    // ---- patterns and conditions ----

    fn pattern(&mut self) -> PResult<SpoPatternAst> {
        let s = self.term()?;
        self.expect(&Tok::Colon, "':' after subject")?;
        let p = self.term()?;
        self.expect(&Tok::Colon, "':' after property")?;
        let o = self.term()?;
        let qualifiers = if self.peek() == Some(&Tok::LParen) {
            self.bump();
            if self.peek() == Some(&Tok::Anon) && self.peek_at(1) == Some(&Tok::RParen) {
                self.bump();
                self.bump();
                QualifierPattern::All
            } else {
                let mut pairs = Vec::new();
                loop {
                    let q = self.term()?;
                    self.expect(&Tok::Colon, "':' inside qualifier")?;
                    let v = self.term()?;
                    pairs.push((q, v));
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.bump();
                            if self.peek() == Some(&Tok::RParen) {
                                self.bump();
                                break;
                            }
                        }
                        Some(Tok::RParen) => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.err("expected ',' or ')' in qualifier list")),
                    }
                }
                QualifierPattern::List(pairs)
            }
        } else {
            QualifierPattern::empty()
        };
        Ok(SpoPatternAst { s, p, o, qualifiers })
    }

    fn operand(&mut self) -> PResult<Operand> {
        if let (Some(Tok::Word(w)), Some(Tok::LParen)) = (self.peek(), self.peek_at(1)) {
            if let Some(func) = AggFunc::from_name(w) {
                self.bump();
                self.bump();
                let var = match self.bump() {
                    Some(Tok::Var(v)) => v,
                    _ => return Err(self.err("expected a variable inside the aggregate call")),
                };
                self.expect(&Tok::RParen, "')' closing aggregate call")?;
                return Ok(Operand::Agg(func, var));
            }
        }
        Ok(Operand::Term(self.term()?))
    }

    fn condition(&mut self) -> PResult<Condition> {
        let lhs = self.operand()?;
        match self.peek() {
            Some(Tok::Cmp(op)) => {
                let op = *op;
                self.bump();
                let rhs = self.operand()?;
                Ok(Condition::Compare(lhs, op, rhs))
            }
            Some(Tok::Kw(Kw::Match)) => {
                self.bump();
                match self.bump() {
                    Some(Tok::Quoted(raw)) => Ok(Condition::Match(lhs, raw)),
                    _ => Err(self.err("expected a quoted template after \\match")),
                }
            }
            _ => Err(self.err("expected a comparison operator or \\match")),
        }
    }

    fn primary(&mut self) -> PResult<Node> {
        match self.peek() {
            Some(Tok::Kw(Kw::True)) => {
                self.bump();
                return Ok(Node::Cond(Condition::BoolConst(true)));
            }
            Some(Tok::Kw(Kw::False)) => {
                self.bump();
                return Ok(Node::Cond(Condition::BoolConst(false)));
            }
            _ => {}
        }
        let save = self.i;
        let pattern_err = match self.pattern() {
            Ok(p) => return Ok(Node::Pattern(p)),
            Err(e) => (e, self.i),
        };
        self.i = save;
        let cond_err = match self.condition() {
            Ok(c) => return Ok(Node::Cond(c)),
            Err(e) => (e, self.i),
        };
        self.i = save;
        if self.peek() == Some(&Tok::LParen) {
            self.bump();
            let inner = self.expr()?;
            self.expect(&Tok::RParen, "')' closing group")?;
            return Ok(inner);
        }
        // report whichever attempt got further
        if pattern_err.1 >= cond_err.1 {
            Err(pattern_err.0)
        } else {
            Err(cond_err.0)
        }
    }

    fn not_expr(&mut self) -> PResult<Node> {
        if self.peek() == Some(&Tok::Kw(Kw::Not)) {
            self.bump();
            Ok(Node::Not(Box::new(self.not_expr()?)))
        } else {
            self.primary()
        }
    }

    fn and_expr(&mut self) -> PResult<Node> {
        let mut nodes = alloc::vec![self.not_expr()?];
        while self.peek() == Some(&Tok::Kw(Kw::And)) {
            self.bump();
            nodes.push(self.not_expr()?);
        }
        Ok(if nodes.len() == 1 { nodes.pop().unwrap() } else { Node::And(nodes) })
    }

    fn expr(&mut self) -> PResult<Node> {
        let mut nodes = alloc::vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Kw(Kw::Or)) {
            self.bump();
            nodes.push(self.and_expr()?);
        }
        Ok(if nodes.len() == 1 { nodes.pop().unwrap() } else { Node::Or(nodes) })
    }

    // ---- query ----

    fn query(&mut self) -> PResult<QueryAst> {
        let mut q = QueryAst::default();
        loop {
            while self.peek() == Some(&Tok::Comma) {
                self.bump();
            }
            if self.at_end() {
                break;
            }
            match self.peek() {
                Some(Tok::Kw(Kw::Order)) => {
                    self.bump();
                    if !self.eat_word_ci("by") {
                        return Err(self.err("expected 'by' after \\order"));
                    }
                    if q.order_by.is_some() {
                        return Err(self.err("duplicate \\order by clause"));
                    }
                    let key = self.var_path(&["asc", "desc"])?;
                    let direction = if self.eat_word_ci("desc") {
                        Direction::Desc
                    } else {
                        self.eat_word_ci("asc");
                        Direction::Asc
                    };
                    q.order_by = Some((key, direction));
                }
                Some(Tok::Kw(Kw::Group)) => {
                    self.bump();
                    if !self.eat_word_ci("by") {
                        return Err(self.err("expected 'by' after \\group"));
                    }
                    if q.group_by.is_some() {
                        return Err(self.err("duplicate \\group by clause"));
                    }
                    q.group_by = Some(self.var_path(&[])?);
                }
                Some(Tok::Kw(Kw::Filter)) => {
                    self.bump();
                    let node = self.expr()?;
                    q.filters.push(node);
                }
                Some(Tok::Kw(Kw::Ans)) => {
                    self.bump();
                    if q.ans.is_some() {
                        return Err(self.err("duplicate ANS statement"));
                    }
                    let mut items = alloc::vec![self.var_path(&[])?];
                    while self.peek() == Some(&Tok::Comma)
                        && matches!(self.peek_at(1), Some(Tok::Var(_)))
                    {
                        self.bump();
                        items.push(self.var_path(&[])?);
                    }
                    q.ans = Some(items);
                }
                Some(Tok::Kw(Kw::Suggest)) => {
                    return Err(self.err("\\suggest is a revision request, not a query"));
                }
                _ => {
                    if let (Some(Tok::Var(_)), Some(Tok::Cmp(CmpOp::Eq)), Some(Tok::Word(w)), Some(Tok::LParen)) =
                        (self.peek(), self.peek_at(1), self.peek_at(2), self.peek_at(3))
                    {
                        if let Some(func) = AggFunc::from_name(w) {
                            let Some(Tok::Var(var)) = self.bump() else { unreachable!() };
                            self.bump(); // =
                            self.bump(); // func
                            self.bump(); // (
                            let arg = match self.bump() {
                                Some(Tok::Var(v)) => v,
                                _ => {
                                    return Err(
                                        self.err("expected a variable inside the aggregate call")
                                    )
                                }
                            };
                            self.expect(&Tok::RParen, "')' closing aggregate call")?;
                            q.statements.push(Statement::Assign(Assignment { var, func, arg }));
                            continue;
                        }
                    }
                    let node = self.expr()?;
                    q.statements.push(Statement::Conjunct(node));
                }
            }
        }
        validate(&q).map_err(|msg| self.err(msg))?;
        Ok(q)
    }

    // ---- suggestions ----

    fn draft_name(&mut self) -> PResult<String> {
        self.name(&[])
            .map_err(|_| self.err("expected a plain name (no variables) in a \\suggest payload"))
    }

    fn draft(&mut self) -> PResult<StatementDraft> {
        let s = self.draft_name()?;
        self.expect(&Tok::Colon, "':' after subject")?;
        let p = self.draft_name()?;
        self.expect(&Tok::Colon, "':' after property")?;
        let o = self.draft_name()?;
        let mut qualifiers = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.bump();
            loop {
                let q = self.draft_name()?;
                self.expect(&Tok::Colon, "':' inside qualifier")?;
                let v = self.draft_name()?;
                qualifiers.push((q, v));
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump();
                        if self.peek() == Some(&Tok::RParen) {
                            self.bump();
                            break;
                        }
                    }
                    Some(Tok::RParen) => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')' in qualifier list")),
                }
            }
        }
        Ok(StatementDraft { s, p, o, qualifiers })
    }

    fn suggestion(&mut self) -> PResult<SuggestionAst> {
        self.expect(&Tok::Kw(Kw::Suggest), "\\suggest")?;
        let kind = match self.bump() {
            Some(Tok::Word(w)) => match w.to_lowercase().as_str() {
                "add" => SuggestKind::Add,
                "change" => SuggestKind::Change,
                "delete" => SuggestKind::Delete,
                _ => return Err(self.err("expected add, change, or delete after \\suggest")),
            },
            _ => return Err(self.err("expected add, change, or delete after \\suggest")),
        };
        let before = self.draft()?;
        let after = if kind == SuggestKind::Change {
            if self.peek() != Some(&Tok::Kw(Kw::ChangeTo)) {
                return Err(self.err("a change request requires \\changeTo"));
            }
            self.bump();
            Some(self.draft()?)
        } else {
            if self.peek() == Some(&Tok::Kw(Kw::ChangeTo)) {
                return Err(self.err("\\changeTo is only valid in a change request"));
            }
            None
        };
        let mut refs = Vec::new();
        while self.peek() == Some(&Tok::Kw(Kw::Ref)) {
            self.bump();
            if self.peek() == Some(&Tok::Colon) {
                self.bump();
            }
            let mut words: Vec<String> = Vec::new();
            loop {
                match self.peek() {
                    Some(Tok::Word(w)) => {
                        words.push(w.clone());
                        self.bump();
                    }
                    Some(Tok::Comma) => {
                        self.bump();
                        break;
                    }
                    _ => break,
                }
            }
            if words.is_empty() {
                return Err(self.err("empty \\ref source"));
            }
            refs.push(words.join(" "));
        }
        if !self.at_end() {
            return Err(self.err("unexpected input after \\suggest request"));
        }
        if kind == SuggestKind::Delete && !before.qualifiers.is_empty() {
            return Err(self.err("a delete request submits only s : p : o, no qualifiers"));
        }
        Ok(SuggestionAst { kind, before, after, refs })
    }
}

// ---- validation ----

fn term_vars(term: &Term, out: &mut BTreeSet<String>) {
    match term {
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::SubjectExpr(s, p) => {
            term_vars(s, out);
            term_vars(p, out);
        }
        Term::Path { base, .. } => term_vars(base, out),
        Term::Name(_) | Term::Anon => {}
    }
}

fn pattern_vars(p: &SpoPatternAst, out: &mut BTreeSet<String>) {
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

fn operand_vars(op: &Operand, out: &mut BTreeSet<String>) {
    match op {
        Operand::Term(t) => term_vars(t, out),
        Operand::Agg(_, v) => {
            out.insert(v.clone());
        }
    }
}

fn node_vars(node: &Node, binding: &mut BTreeSet<String>, referenced: &mut BTreeSet<String>) {
    match node {
        Node::Pattern(p) => pattern_vars(p, binding),
        Node::Cond(c) => match c {
            Condition::Compare(l, _, r) => {
                operand_vars(l, referenced);
                operand_vars(r, referenced);
            }
            Condition::Match(l, _) => operand_vars(l, referenced),
            Condition::BoolConst(_) => {}
        },
        Node::And(children) | Node::Or(children) => {
            for c in children {
                node_vars(c, binding, referenced);
            }
        }
        Node::Not(inner) => node_vars(inner, binding, referenced),
    }
}

fn term_paths_ok(term: &Term) -> bool {
    match term {
        Term::Path { base, properties } => properties.len() <= MAX_PATH_LEN && term_paths_ok(base),
        Term::SubjectExpr(s, p) => term_paths_ok(s) && term_paths_ok(p),
        _ => true,
    }
}

fn node_anon_count(term: &Term) -> usize {
    match term {
        Term::Anon => 1,
        Term::SubjectExpr(s, p) => node_anon_count(s) + node_anon_count(p),
        Term::Path { base, .. } => node_anon_count(base),
        _ => 0,
    }
}

fn value_position_anon(term: &Term) -> bool {
    // '?' denotes "return this position"; inside a subject expression
    // used as a value there is nothing to return
    matches!(term, Term::SubjectExpr(..)) && node_anon_count(term) > 0
}

fn walk_patterns<'a>(node: &'a Node, out: &mut Vec<&'a SpoPatternAst>) {
    match node {
        Node::Pattern(p) => out.push(p),
        Node::And(cs) | Node::Or(cs) => cs.iter().for_each(|c| walk_patterns(c, out)),
        Node::Not(inner) => walk_patterns(inner, out),
        Node::Cond(_) => {}
    }
}

fn node_condition_paths_ok(node: &Node) -> bool {
    let operand_ok = |op: &Operand| match op {
        Operand::Term(t) => term_paths_ok(t),
        Operand::Agg(..) => true,
    };
    match node {
        Node::Cond(Condition::Compare(l, _, r)) => operand_ok(l) && operand_ok(r),
        Node::Cond(Condition::Match(l, _)) => operand_ok(l),
        Node::Cond(Condition::BoolConst(_)) => true,
        Node::And(cs) | Node::Or(cs) => cs.iter().all(node_condition_paths_ok),
        Node::Not(inner) => node_condition_paths_ok(inner),
        Node::Pattern(_) => true,
    }
}

fn validate(q: &QueryAst) -> Result<(), String> {
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut all_vars: BTreeSet<String> = BTreeSet::new();
    for stmt in &q.statements {
        match stmt {
            Statement::Conjunct(node) => {
                let mut binding = BTreeSet::new();
                let mut referenced = BTreeSet::new();
                node_vars(node, &mut binding, &mut referenced);
                for r in &referenced {
                    if !binding.contains(r) && !declared.contains(r) {
                        return Err(format!("variable ?{r} is used before any pattern binds it"));
                    }
                }
                declared.extend(binding.iter().cloned());
                all_vars.extend(binding);
                all_vars.extend(referenced);
            }
            Statement::Assign(a) => {
                if !declared.contains(&a.arg) {
                    return Err(format!(
                        "aggregate argument ?{} is not bound by an earlier statement",
                        a.arg
                    ));
                }
                if declared.contains(&a.var) {
                    return Err(format!("variable ?{} is already bound", a.var));
                }
                declared.insert(a.var.clone());
                all_vars.insert(a.var.clone());
            }
        }
    }
    if all_vars.len() > MAX_VARIABLES {
        return Err(format!("too many variables: {} (maximum {MAX_VARIABLES})", all_vars.len()));
    }
    let check_declared = |vp: &VarPath| -> Result<(), String> {
        if !declared.contains(&vp.var) {
            return Err(format!("variable ?{} is not declared by any pattern", vp.var));
        }
        if vp.properties.len() > MAX_PATH_LEN {
            return Err(format!("property path longer than {MAX_PATH_LEN}"));
        }
        Ok(())
    };
    if let Some((key, _)) = &q.order_by {
        check_declared(key)?;
    }
    if let Some(key) = &q.group_by {
        check_declared(key)?;
    }
    if let Some(items) = &q.ans {
        for item in items {
            check_declared(item)?;
        }
    }
    for f in &q.filters {
        let mut binding = BTreeSet::new();
        let mut referenced = BTreeSet::new();
        node_vars(f, &mut binding, &mut referenced);
        for v in binding.iter().chain(referenced.iter()) {
            if !declared.contains(v) {
                return Err(format!("variable ?{v} in \\filter is not declared by any pattern"));
            }
        }
    }
    // structural checks over every pattern and condition
    let mut patterns: Vec<&SpoPatternAst> = Vec::new();
    for stmt in &q.statements {
        if let Statement::Conjunct(node) = stmt {
            walk_patterns(node, &mut patterns);
            if !node_condition_paths_ok(node) {
                return Err(format!("property path longer than {MAX_PATH_LEN}"));
            }
        }
    }
    for f in &q.filters {
        walk_patterns(f, &mut patterns);
        if !node_condition_paths_ok(f) {
            return Err(format!("property path longer than {MAX_PATH_LEN}"));
        }
    }
    for p in patterns {
        for t in [&p.s, &p.p, &p.o] {
            if !term_paths_ok(t) {
                return Err(format!("property path longer than {MAX_PATH_LEN}"));
            }
        }
        if value_position_anon(&p.o) {
            return Err("'?' cannot appear inside a subject expression used as a value".to_string());
        }
        let mut anons = node_anon_count(&p.s) + node_anon_count(&p.p) + node_anon_count(&p.o);
        if let QualifierPattern::List(pairs) = &p.qualifiers {
            for (qt, vt) in pairs {
                if value_position_anon(qt) || value_position_anon(vt) {
                    return Err(
                        "'?' cannot appear inside a subject expression used as a value".to_string()
                    );
                }
                if !term_paths_ok(qt) || !term_paths_ok(vt) {
                    return Err(format!("property path longer than {MAX_PATH_LEN}"));
                }
                anons += node_anon_count(qt) + node_anon_count(vt);
            }
        }
        if matches!(p.qualifiers, QualifierPattern::All) {
            anons += 1;
        }
        if q.ans.is_none() && anons > 1 {
            return Err("multiple '?' in one pattern: use named variables".to_string());
        }
    }
    Ok(())
}

// ---- public entry points ----

/// Parses EQL query text into a validated [`QueryAst`].
pub fn parse_query(text: &str) -> Result<QueryAst, ParseError> {
    let mut p = Parser::new(tokenize(text)?);
    p.query()
}

/// Parses a `\suggest add|change|delete` request.
pub fn parse_suggestion(text: &str) -> Result<SuggestionAst, ParseError> {
    let mut p = Parser::new(tokenize(text)?);
    p.suggestion()
}

/// Parses a bare conjunct expression (used for rule bodies).
pub fn parse_conjunct(text: &str) -> Result<Node, ParseError> {
    let mut p = Parser::new(tokenize(text)?);
    let node = p.expr()?;
    if !p.at_end() {
        return Err(p.err("unexpected input after expression"));
    }
    Ok(node)
}

/// Parses one ground fact line `s : p : o (q : v, ...)` written with
/// surface names.
pub fn parse_statement_draft(text: &str) -> Result<StatementDraft, ParseError> {
    let mut p = Parser::new(tokenize(text)?);
    let draft = p.draft()?;
    if !p.at_end() {
        return Err(p.err("unexpected input after statement"));
    }
    Ok(draft)
}
