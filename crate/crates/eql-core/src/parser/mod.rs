//! EQL text handling: tokenizer, parser, simplified-form segmentation,
//! and the canonical pretty-printer.

mod ast;
mod parse;
mod print;
mod simplified;
mod token;

pub use ast::{
    AggFunc, Assignment, CmpOp, Condition, Direction, Node, Operand, QualifierPattern, QueryAst,
    SpoPatternAst, Statement, StatementDraft, SuggestKind, SuggestionAst, Term, VarPath,
    MAX_PATH_LEN, MAX_VARIABLES,
};
pub use parse::{parse_conjunct, parse_query, parse_statement_draft, parse_suggestion};
pub use print::{
    pretty_print, print_condition, print_node, print_pattern, print_suggestion, print_term,
};
pub(crate) use print::escape_name as escape_kgt_name;
pub use simplified::{parse_simplified, SimplifiedError};
pub use token::{is_var_name, tokenize, Kw, ParseError, Pos, Tok, Token};
