//! Interactive session state: active result paging, pending fuzzy
//! confirmations, output modes, and suggestion submission.

use std::path::PathBuf;

use anyhow::{anyhow, Result};

use eql_core::eval::{evaluate, EvalError, ResultSet};
use eql_core::parser::{
    self, parse_query, parse_simplified, parse_suggestion, pretty_print, Node, Operand,
    QualifierPattern, QueryAst, Statement, SuggestionAst, Term,
};
use eql_core::revision::{journal_lines, JournalEvent};
use eql_core::store::{Resolution, Store};
use eql_core::text::name_key;

use crate::render::{render_result, OutputMode};
use crate::SessionOptions;

struct Active {
    result: ResultSet,
    next_page: usize,
}

struct PendingFuzzy {
    corrected: QueryAst,
    prompt: String,
}

pub enum StepOutcome {
    Output(String),
    Quit,
}

pub struct Session {
    store: Store,
    options: SessionOptions,
    mode: OutputMode,
    active: Option<Active>,
    pending: Option<PendingFuzzy>,
    journal: Option<PathBuf>,
    pending_events: String,
    last_ack: String,
    suggestion_taken: bool,
}

fn rename_term(term: &Term, from_key: &str, to: &str) -> Term {
    match term {
        Term::Name(n) if name_key(n) == from_key => Term::Name(to.to_string()),
        Term::SubjectExpr(s, p) => Term::SubjectExpr(
            Box::new(rename_term(s, from_key, to)),
            Box::new(rename_term(p, from_key, to)),
        ),
        Term::Path { base, properties } => Term::Path {
            base: Box::new(rename_term(base, from_key, to)),
            properties: properties
                .iter()
                .map(|p| if name_key(p) == from_key { to.to_string() } else { p.clone() })
                .collect(),
        },
        other => other.clone(),
    }
}

fn rename_node(node: &Node, from_key: &str, to: &str) -> Node {
    match node {
        Node::Pattern(p) => Node::Pattern(parser::SpoPatternAst {
            s: rename_term(&p.s, from_key, to),
            p: rename_term(&p.p, from_key, to),
            o: rename_term(&p.o, from_key, to),
            qualifiers: match &p.qualifiers {
                QualifierPattern::All => QualifierPattern::All,
                QualifierPattern::List(pairs) => QualifierPattern::List(
                    pairs
                        .iter()
                        .map(|(q, v)| {
                            (rename_term(q, from_key, to), rename_term(v, from_key, to))
                        })
                        .collect(),
                ),
            },
        }),
        Node::Cond(c) => {
            let fix = |op: &Operand| match op {
                Operand::Term(t) => Operand::Term(rename_term(t, from_key, to)),
                agg => agg.clone(),
            };
            Node::Cond(match c {
                parser::Condition::Compare(l, op, r) => {
                    parser::Condition::Compare(fix(l), *op, fix(r))
                }
                parser::Condition::Match(l, t) => parser::Condition::Match(fix(l), t.clone()),
                parser::Condition::BoolConst(b) => parser::Condition::BoolConst(*b),
            })
        }
        Node::And(cs) => Node::And(cs.iter().map(|c| rename_node(c, from_key, to)).collect()),
        Node::Or(cs) => Node::Or(cs.iter().map(|c| rename_node(c, from_key, to)).collect()),
        Node::Not(inner) => Node::Not(Box::new(rename_node(inner, from_key, to))),
    }
}

/// Replaces every occurrence of a surface name throughout a query.
fn rename_query(q: &QueryAst, from: &str, to: &str) -> QueryAst {
    let key = name_key(from);
    let mut out = q.clone();
    out.statements = q
        .statements
        .iter()
        .map(|s| match s {
            Statement::Conjunct(n) => Statement::Conjunct(rename_node(n, &key, to)),
            assign => assign.clone(),
        })
        .collect();
    out.filters = q.filters.iter().map(|f| rename_node(f, &key, to)).collect();
    out
}

impl Session {
    pub fn new(store: Store, options: SessionOptions, mode: OutputMode) -> Self {
        Session {
            store,
            options,
            mode,
            active: None,
            pending: None,
            journal: None,
            pending_events: String::new(),
            last_ack: String::new(),
            suggestion_taken: false,
        }
    }

    pub fn set_journal(&mut self, path: PathBuf) {
        self.journal = Some(path);
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn took_suggestion(&self) -> bool {
        self.suggestion_taken
    }

    pub fn take_suggestion_events(&mut self) -> (String, String) {
        self.suggestion_taken = false;
        (std::mem::take(&mut self.pending_events), std::mem::take(&mut self.last_ack))
    }

    /// Canonical display of the corrected query for the y/n prompt: the
    /// suggested replacement shows as `alias (canonical name)` and every
    /// other name canonicalizes through the store.
    fn prompt_text(&self, corrected: &QueryAst, suggestion_name: &str) -> String {
        let mut display = corrected.clone();
        let names = collect_names(&display);
        for name in names {
            match self.store.resolve_name(&name) {
                Resolution::Alias(id) if name_key(&name) == name_key(suggestion_name) => {
                    let canonical = self.store.display_name(&id).to_string();
                    display = rename_query(&display, &name, &format!("{name} ({canonical})"));
                }
                Resolution::Alias(id) => {
                    let canonical = self.store.display_name(&id).to_string();
                    display = rename_query(&display, &name, &canonical);
                }
                _ => {}
            }
        }
        pretty_print(&display).replace('\n', " ")
    }

    fn parse(&self, text: &str) -> Result<QueryAst> {
        let has_colon = text.contains(':') || text.contains('：');
        if has_colon || text.contains('\\') {
            parse_query(text).map_err(|e| anyhow!("{e}"))
        } else {
            parse_simplified(text, &self.store.name_lexicon()).map_err(|e| anyhow!("{e}"))
        }
    }

    fn run_query(&mut self, query: QueryAst) -> Result<String> {
        match evaluate(&query, &self.store, &self.options.eval_options()) {
            Ok(result) => {
                let text = render_result(&self.store, &result, self.mode, 0);
                self.active = Some(Active { result, next_page: 1 });
                Ok(text)
            }
            Err(EvalError::NameNotFound { surface, suggestions }) if !suggestions.is_empty() => {
                let top = &suggestions[0];
                let corrected = rename_query(&query, &surface, &top.name);
                let prompt = format!(
                    "do not found \"{surface}\" , the query you actually want is \"{}\" (y/n)\n",
                    self.prompt_text(&corrected, &top.name)
                );
                self.pending = Some(PendingFuzzy { corrected, prompt: prompt.clone() });
                Ok(prompt)
            }
            Err(e) => Err(anyhow!("{e}")),
        }
    }

    /// One-shot evaluation used by `eql query`. A fuzzy correction is not
    /// interactive here; the prompt text becomes the error.
    pub fn eval_and_render(&mut self, text: &str) -> Result<String> {
        let trimmed = text.trim();
        if trimmed.starts_with("\\suggest") {
            return self.submit_suggestion(trimmed).map(|ack| format!("{ack}\n"));
        }
        let query = self.parse(trimmed)?;
        let out = self.run_query(query)?;
        if self.pending.take().is_some() {
            return Err(anyhow!("{}", out.trim_end()));
        }
        Ok(out)
    }

    fn submit_suggestion(&mut self, text: &str) -> Result<String> {
        let ast: SuggestionAst = parse_suggestion(text).map_err(|e| anyhow!("{e}"))?;
        let ack = format!("'\\suggest {}' request accepted", ast.kind.name());
        let event = JournalEvent::Submit { ast, at: crate::now_epoch() };
        let lines = journal_lines(&event);
        if let Some(path) = &self.journal {
            use std::io::Write;
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| anyhow!("opening journal: {e}"))?;
            f.write_all(lines.as_bytes())?;
        } else {
            self.pending_events.push_str(&lines);
        }
        self.last_ack = ack.clone();
        self.suggestion_taken = true;
        Ok(ack)
    }

    /// Handles one REPL input line. Errors render as output; the session
    /// survives everything except `:quit` and end of input.
    pub fn step(&mut self, line: &str) -> StepOutcome {
        let input = line.trim();
        if input == ":quit" || input == ":q" {
            return StepOutcome::Quit;
        }
        if input.is_empty() {
            return StepOutcome::Output(String::new());
        }
        if let Some(mode) = input.strip_prefix(":mode") {
            self.pending = None;
            let out = match mode.trim() {
                "table" => {
                    self.mode = OutputMode::Table;
                    "mode: table\n"
                }
                "csv" => {
                    self.mode = OutputMode::Csv;
                    "mode: csv\n"
                }
                "jsonl" => {
                    self.mode = OutputMode::JsonLines;
                    "mode: jsonl\n"
                }
                other => return StepOutcome::Output(format!("unknown mode {other:?}\n")),
            };
            return StepOutcome::Output(out.to_string());
        }
        if input == "more" {
            self.pending = None;
            let out = match &mut self.active {
                None => "no active result\n".to_string(),
                Some(active) => {
                    if crate::render::remaining_after_page(&active.result, active.next_page - 1) == 0
                    {
                        "no more rows\n".to_string()
                    } else {
                        let text =
                            render_result(&self.store, &active.result, self.mode, active.next_page);
                        active.next_page += 1;
                        text
                    }
                }
            };
            return StepOutcome::Output(out);
        }
        if input == "y" || input == "n" {
            if let Some(pending) = self.pending.take() {
                if input == "n" {
                    return StepOutcome::Output(String::new());
                }
                let corrected = pending.corrected;
                return match self.run_query(corrected) {
                    Ok(out) => StepOutcome::Output(out),
                    Err(e) => StepOutcome::Output(format!("error: {e}\n")),
                };
            }
        }
        self.pending = None;
        if input.starts_with("\\suggest") {
            return match self.submit_suggestion(input) {
                Ok(ack) => StepOutcome::Output(format!("{ack}\n")),
                Err(e) => StepOutcome::Output(format!("error: {e}\n")),
            };
        }
        match self.parse(input) {
            Ok(query) => match self.run_query(query) {
                Ok(out) => StepOutcome::Output(out),
                Err(e) => StepOutcome::Output(format!("error: {e}\n")),
            },
            Err(e) => StepOutcome::Output(format!("error: {e}\n")),
        }
    }

    /// The prompt of the pending fuzzy confirmation, when one is active.
    pub fn pending_prompt(&self) -> Option<&str> {
        self.pending.as_ref().map(|p| p.prompt.as_str())
    }
}

fn collect_names(q: &QueryAst) -> Vec<String> {
    fn term_names(t: &Term, out: &mut Vec<String>) {
        match t {
            Term::Name(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Term::SubjectExpr(s, p) => {
                term_names(s, out);
                term_names(p, out);
            }
            Term::Path { base, properties } => {
                term_names(base, out);
                for p in properties {
                    if !out.contains(p) {
                        out.push(p.clone());
                    }
                }
            }
            _ => {}
        }
    }
    fn node_names(n: &Node, out: &mut Vec<String>) {
        match n {
            Node::Pattern(p) => {
                term_names(&p.s, out);
                term_names(&p.p, out);
                term_names(&p.o, out);
                if let QualifierPattern::List(pairs) = &p.qualifiers {
                    for (q, v) in pairs {
                        term_names(q, out);
                        term_names(v, out);
                    }
                }
            }
            Node::Cond(c) => {
                let mut op_names = |op: &Operand| {
                    if let Operand::Term(t) = op {
                        term_names(t, out);
                    }
                };
                match c {
                    parser::Condition::Compare(l, _, r) => {
                        op_names(l);
                        op_names(r);
                    }
                    parser::Condition::Match(l, _) => op_names(l),
                    parser::Condition::BoolConst(_) => {}
                }
            }
            Node::And(cs) | Node::Or(cs) => cs.iter().for_each(|c| node_names(c, out)),
            Node::Not(inner) => node_names(inner, out),
        }
    }
    let mut out = Vec::new();
    for s in &q.statements {
        if let Statement::Conjunct(n) = s {
            node_names(n, &mut out);
        }
    }
    for f in &q.filters {
        node_names(f, &mut out);
    }
    out
}
