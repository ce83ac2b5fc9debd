//! Parsed EQL syntax trees.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub use super::token::CmpOp;

/// One position of an spo question statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// Surface name, still unresolved against the store.
    Name(String),
    /// Bare `?`: "return this position".
    Anon,
    /// `?x`, `?z3`.
    Var(String),
    /// `(s : p)` — inline lookup whose result feeds this position.
    SubjectExpr(Box<Term>, Box<Term>),
    /// `base.p1.p2` — chained property lookup, at most 8 hops.
    Path { base: Box<Term>, properties: Vec<String> },
}

impl Term {
    pub fn name(s: &str) -> Term {
        Term::Name(String::from(s))
    }

    pub fn var(s: &str) -> Term {
        Term::Var(String::from(s))
    }
}

/// Qualifier constraints of one pattern. `All` is the `(?)` form:
/// return the whole qualifier block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QualifierPattern {
    List(Vec<(Term, Term)>),
    All,
}

impl QualifierPattern {
    pub fn empty() -> Self {
        QualifierPattern::List(Vec::new())
    }
}

/// One spo question statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpoPatternAst {
    pub s: Term,
    pub p: Term,
    pub o: Term,
    pub qualifiers: QualifierPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunc {
    Count,
    Avg,
    Sum,
    Max,
    Min,
}

impl AggFunc {
    pub fn name(&self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Avg => "avg",
            AggFunc::Sum => "sum",
            AggFunc::Max => "max",
            AggFunc::Min => "min",
        }
    }

    pub fn from_name(word: &str) -> Option<AggFunc> {
        Some(match word.to_lowercase().as_str() {
            "count" => AggFunc::Count,
            "avg" => AggFunc::Avg,
            "sum" => AggFunc::Sum,
            "max" => AggFunc::Max,
            "min" => AggFunc::Min,
            _ => return None,
        })
    }
}

/// Comparison/match operand: a term or an aggregate call such as
/// `count(?y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Term(Term),
    Agg(AggFunc, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Compare(Operand, CmpOp, Operand),
    /// `operand \match 'template'`; the template text is kept raw.
    Match(Operand, String),
    BoolConst(bool),
}

/// A conjunct tree: patterns and conditions combined with `\and`, `\or`,
/// `\not`. Precedence is `\not` over `\and` over `\or`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Pattern(SpoPatternAst),
    Cond(Condition),
    And(Vec<Node>),
    Or(Vec<Node>),
    Not(Box<Node>),
}

/// `?z = count(?y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub var: String,
    pub func: AggFunc,
    pub arg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Conjunct(Node),
    Assign(Assignment),
}

/// A variable with an optional property path: `?x`, `?x.nationality`,
/// `?x.nationality.capital`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarPath {
    pub var: String,
    pub properties: Vec<String>,
}

impl VarPath {
    pub fn bare(var: &str) -> VarPath {
        VarPath { var: String::from(var), properties: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Asc,
    Desc,
}

/// A parsed EQL query: comma-sequenced statements plus clauses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryAst {
    pub statements: Vec<Statement>,
    pub order_by: Option<(VarPath, Direction)>,
    pub group_by: Option<VarPath>,
    pub filters: Vec<Node>,
    /// `ANS ?x, ?x.native language, ?z` projection, when present.
    pub ans: Option<Vec<VarPath>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuggestKind {
    Add,
    Change,
    Delete,
}

impl SuggestKind {
    pub fn name(&self) -> &'static str {
        match self {
            SuggestKind::Add => "add",
            SuggestKind::Change => "change",
            SuggestKind::Delete => "delete",
        }
    }
}

/// A statement written with surface names, not yet resolved against the
/// store. Used by `\suggest` payloads and KGT fact lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementDraft {
    pub s: String,
    pub p: String,
    pub o: String,
    pub qualifiers: Vec<(String, String)>,
}

/// A parsed `\suggest` request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuggestionAst {
    pub kind: SuggestKind,
    pub before: StatementDraft,
    /// Present only for `change`.
    pub after: Option<StatementDraft>,
    pub refs: Vec<String>,
}

/// Limits stated for the language: variables per query and property-path
/// hops.
pub const MAX_VARIABLES: usize = 50;
pub const MAX_PATH_LEN: usize = 8;
