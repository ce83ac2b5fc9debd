//! The `\suggest` data-revision protocol: add/change/delete proposals
//! with reference sources, admin review, verified application, and an
//! append-only journal whose replay reproduces the store.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::kgt::resolve_draft;
use crate::parser::{self, print_suggestion, StatementDraft, SuggestKind, SuggestionAst};
use crate::store::{StatementId, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuggestionState {
    Pending,
    /// Approved and applied to the store.
    Approved,
    Rejected,
}

impl fmt::Display for SuggestionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuggestionState::Pending => write!(f, "pending"),
            SuggestionState::Approved => write!(f, "approved"),
            SuggestionState::Rejected => write!(f, "rejected"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Suggestion {
    pub id: u32,
    pub ast: SuggestionAst,
    pub state: SuggestionState,
    pub submitted_at: u64,
    /// Set when an add duplicates an existing statement; the reviewer
    /// sees the flag, submission is still accepted.
    pub duplicate_of: Option<StatementId>,
    pub review_note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Approve,
    Reject,
}

/// What a review did to the store.
#[derive(Debug, Clone, PartialEq)]
pub enum ReviewOutcome {
    /// Add applied; carries the new statement id.
    Added(StatementId),
    /// Change applied: before removed, after inserted.
    Changed { removed: StatementId, inserted: StatementId },
    /// Delete applied; `None` when no statement matched (store unchanged).
    Deleted(Option<StatementId>),
    /// Reviewer rejected; store unchanged.
    Rejected,
    /// The precondition failed and the suggestion auto-rejected.
    AutoRejected(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RevisionError {
    UnknownSuggestion(u32),
    AlreadyTerminal(u32, SuggestionState),
    /// Add payload references unknown names; suggestion stays pending.
    Unresolvable(String),
    Journal(usize, String),
}

impl fmt::Display for RevisionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RevisionError::UnknownSuggestion(id) => write!(f, "no suggestion #{id}"),
            RevisionError::AlreadyTerminal(id, state) => {
                write!(f, "suggestion #{id} is already {state}")
            }
            RevisionError::Unresolvable(msg) => write!(f, "cannot apply suggestion: {msg}"),
            RevisionError::Journal(line, msg) => write!(f, "journal line {line}: {msg}"),
        }
    }
}

impl core::error::Error for RevisionError {}

/// One append-only journal record.
#[derive(Debug, Clone, PartialEq)]
pub enum JournalEvent {
    Submit { ast: SuggestionAst, at: u64 },
    Review { id: u32, verdict: Verdict, note: String },
}

#[derive(Debug, Default)]
pub struct RevisionQueue {
    suggestions: Vec<Suggestion>,
    events: Vec<JournalEvent>,
}

fn draft_matches(store: &Store, draft: &StatementDraft) -> Vec<StatementId> {
    let Ok((s, p, o, qualifiers)) = resolve_draft(store, draft) else {
        return Vec::new();
    };
    let mut want = qualifiers;
    want.sort();
    store
        .statements()
        .filter(|stmt| {
            if stmt.s != s || stmt.p != p || !stmt.o.matches(&o) {
                return false;
            }
            let mut have = stmt.qualifiers.clone();
            have.sort();
            have == want
        })
        .map(|stmt| stmt.id)
        .collect()
}

fn is_derived(store: &Store, id: StatementId) -> bool {
    store
        .statement(id)
        .map(|stmt| {
            stmt.qualifiers
                .iter()
                .any(|(q, _)| store.display_name(q) == "derived_by")
        })
        .unwrap_or(false)
}

impl RevisionQueue {
    pub fn new() -> Self {
        RevisionQueue::default()
    }

    /// Queues a suggestion. Never mutates the store; adds that duplicate
    /// an existing statement are flagged for the reviewer. Returns the id
    /// and the acknowledgement text.
    pub fn submit(&mut self, store: &Store, ast: SuggestionAst, at: u64) -> (u32, String) {
        let id = self.suggestions.len() as u32 + 1;
        let duplicate_of = match ast.kind {
            SuggestKind::Add => draft_matches(store, &ast.before).into_iter().next(),
            _ => None,
        };
        let ack = format!("'\\suggest {}' request accepted", ast.kind.name());
        self.events.push(JournalEvent::Submit { ast: ast.clone(), at });
        self.suggestions.push(Suggestion {
            id,
            ast,
            state: SuggestionState::Pending,
            submitted_at: at,
            duplicate_of,
            review_note: None,
        });
        (id, ack)
    }

    pub fn get(&self, id: u32) -> Option<&Suggestion> {
        self.suggestions.get(id.checked_sub(1)? as usize)
    }

    /// Suggestions in submission order, optionally filtered by state.
    pub fn list(&self, state: Option<SuggestionState>) -> Vec<&Suggestion> {
        self.suggestions
            .iter()
            .filter(|s| state.map(|st| s.state == st).unwrap_or(true))
            .collect()
    }

    /// Reviews a pending suggestion. Approval applies the revision:
    /// an add inserts; a change replaces the exact before-statement
    /// atomically (auto-rejecting when it is missing or the after side
    /// has an error); a delete removes at most one statement matching
    /// s : p : o, preferring the fewest qualifiers then the lowest id.
    /// Statements tagged `derived_by` (rule-materialized) cannot be
    /// changed or deleted.
    pub fn review(
        &mut self,
        store: &mut Store,
        id: u32,
        verdict: Verdict,
        note: &str,
    ) -> Result<ReviewOutcome, RevisionError> {
        let idx = id.checked_sub(1).map(|i| i as usize).filter(|i| *i < self.suggestions.len());
        let idx = idx.ok_or(RevisionError::UnknownSuggestion(id))?;
        if self.suggestions[idx].state != SuggestionState::Pending {
            return Err(RevisionError::AlreadyTerminal(id, self.suggestions[idx].state));
        }
        let ast = self.suggestions[idx].ast.clone();
        let finish = |queue: &mut Self, state: SuggestionState, outcome: ReviewOutcome| {
            queue.suggestions[idx].state = state;
            queue.suggestions[idx].review_note = Some(note.to_string());
            queue.events.push(JournalEvent::Review { id, verdict, note: note.to_string() });
            Ok(outcome)
        };
        if verdict == Verdict::Reject {
            return finish(self, SuggestionState::Rejected, ReviewOutcome::Rejected);
        }
        match ast.kind {
            SuggestKind::Add => {
                let (s, p, o, quals) = resolve_draft(store, &ast.before)
                    .map_err(RevisionError::Unresolvable)?;
                let sid = store
                    .add_statement(&s, &p, o, quals)
                    .map_err(|e| RevisionError::Unresolvable(e.to_string()))?;
                finish(self, SuggestionState::Approved, ReviewOutcome::Added(sid))
            }
            SuggestKind::Change => {
                let matches = draft_matches(store, &ast.before);
                let Some(&before_id) = matches.first() else {
                    return finish(
                        self,
                        SuggestionState::Rejected,
                        ReviewOutcome::AutoRejected(String::from(
                            "the statement before the change does not exist",
                        )),
                    );
                };
                if is_derived(store, before_id) {
                    return finish(
                        self,
                        SuggestionState::Rejected,
                        ReviewOutcome::AutoRejected(String::from(
                            "the statement is rule-derived; change the rule instead",
                        )),
                    );
                }
                let after = ast.after.as_ref().expect("parser guarantees after for change");
                let resolved = match resolve_draft(store, after) {
                    Ok(r) => r,
                    Err(msg) => {
                        return finish(
                            self,
                            SuggestionState::Rejected,
                            ReviewOutcome::AutoRejected(format!(
                                "error in the changed spo statement: {msg}"
                            )),
                        )
                    }
                };
                let removed = store.remove_statement(before_id).expect("statement located above");
                let (s, p, o, quals) = resolved;
                match store.add_statement(&s, &p, o, quals) {
                    Ok(inserted) => finish(
                        self,
                        SuggestionState::Approved,
                        ReviewOutcome::Changed { removed: before_id, inserted },
                    ),
                    Err(e) => {
                        // restore the removed statement, reject the change
                        store
                            .add_statement(&removed.s, &removed.p, removed.o, removed.qualifiers)
                            .expect("restoring the removed statement");
                        finish(
                            self,
                            SuggestionState::Rejected,
                            ReviewOutcome::AutoRejected(format!(
                                "error in the changed spo statement: {e}"
                            )),
                        )
                    }
                }
            }
            SuggestKind::Delete => {
                let resolved = resolve_draft(store, &ast.before);
                let victim = match resolved {
                    Err(_) => None,
                    Ok((s, p, o, _)) => {
                        let mut candidates: Vec<(usize, StatementId)> = store
                            .statements()
                            .filter(|stmt| {
                                stmt.s == s && stmt.p == p && stmt.o.matches(&o)
                                    && !is_derived(store, stmt.id)
                            })
                            .map(|stmt| (stmt.qualifiers.len(), stmt.id))
                            .collect();
                        candidates.sort();
                        candidates.first().map(|(_, id)| *id)
                    }
                };
                if let Some(v) = victim {
                    store.remove_statement(v);
                }
                finish(self, SuggestionState::Approved, ReviewOutcome::Deleted(victim))
            }
        }
    }

    pub fn events(&self) -> &[JournalEvent] {
        &self.events
    }
}

// ---- journal text form ----

/// Serializes one event. A submission is the `\suggest` surface text
/// preceded by a `# at <epoch>` stamp; a review is a state-transition
/// line.
pub fn journal_lines(event: &JournalEvent) -> String {
    match event {
        JournalEvent::Submit { ast, at } => {
            format!("# at {at}\n{}\n", print_suggestion(ast))
        }
        JournalEvent::Review { id, verdict, note } => {
            let v = match verdict {
                Verdict::Approve => "approve",
                Verdict::Reject => "reject",
            };
            if note.is_empty() {
                format!("@review {id} {v}\n")
            } else {
                format!("@review {id} {v} {note}\n")
            }
        }
    }
}

/// Parses a journal back into its event list.
pub fn parse_journal(text: &str) -> Result<Vec<JournalEvent>, RevisionError> {
    let mut events = Vec::new();
    let mut pending_at: u64 = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(stamp) = line.strip_prefix("# at ") {
            pending_at = stamp
                .trim()
                .parse()
                .map_err(|_| RevisionError::Journal(idx + 1, String::from("bad timestamp")))?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@review ") {
            let mut parts = rest.splitn(3, char::is_whitespace);
            let id: u32 = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| RevisionError::Journal(idx + 1, String::from("bad review id")))?;
            let verdict = match parts.next() {
                Some("approve") => Verdict::Approve,
                Some("reject") => Verdict::Reject,
                _ => {
                    return Err(RevisionError::Journal(
                        idx + 1,
                        String::from("expected approve or reject"),
                    ))
                }
            };
            let note = parts.next().unwrap_or("").to_string();
            events.push(JournalEvent::Review { id, verdict, note });
            continue;
        }
        let ast = parser::parse_suggestion(line)
            .map_err(|e| RevisionError::Journal(idx + 1, e.to_string()))?;
        events.push(JournalEvent::Submit { ast, at: pending_at });
        pending_at = 0;
    }
    Ok(events)
}

/// Replays journal events onto a store snapshot, rebuilding the queue.
/// Review errors that cannot occur in an honestly produced journal are
/// surfaced; auto-rejections replay as themselves.
pub fn replay(store: &mut Store, events: &[JournalEvent]) -> Result<RevisionQueue, RevisionError> {
    let mut queue = RevisionQueue::new();
    for event in events {
        match event {
            JournalEvent::Submit { ast, at } => {
                queue.submit(store, ast.clone(), *at);
            }
            JournalEvent::Review { id, verdict, note } => {
                queue.review(store, *id, *verdict, note)?;
            }
        }
    }
    Ok(queue)
}
