//! Colon-free simplified queries: `? Capital Beijing`, `Bob Dylan ? Male`,
//! `Bird good at ?`. Segmentation tries every 3-way split of the word
//! sequence against the store's name lexicon.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::{Node, QualifierPattern, QueryAst, SpoPatternAst, Statement, Term};
use crate::text::name_key;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimplifiedError {
    /// Multiple valid 3-way splits; each entry is one reading.
    Ambiguous(Vec<[String; 3]>),
    NoSegmentation,
}

impl fmt::Display for SimplifiedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplifiedError::Ambiguous(splits) => {
                write!(f, "ambiguous segmentation ({} readings):", splits.len())?;
                for s in splits {
                    write!(f, " [{} | {} | {}]", s[0], s[1], s[2])?;
                }
                Ok(())
            }
            SimplifiedError::NoSegmentation => {
                write!(f, "no valid segmentation into s, p, o over known names")
            }
        }
    }
}

impl core::error::Error for SimplifiedError {}

fn words_of(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let w = raw.replace('？', "?");
        if w == "?" {
            out.push(w);
            continue;
        }
        let mut rest = w.as_str();
        if let Some(tail) = rest.strip_prefix('?') {
            out.push("?".to_string());
            rest = tail;
        }
        if let Some(head) = rest.strip_suffix('?') {
            if !head.is_empty() {
                out.push(head.to_string());
            }
            out.push("?".to_string());
        } else if !rest.is_empty() {
            out.push(rest.to_string());
        }
    }
    out
}

/// Segments colon-free query text into exactly three parts, one of which
/// is `?`, such that every named part is in the lexicon. Exactly one
/// valid split is required.
pub fn parse_simplified(
    text: &str,
    lexicon: &BTreeSet<String>,
) -> Result<QueryAst, SimplifiedError> {
    let keys: BTreeSet<String> = lexicon.iter().map(|n| name_key(n)).collect();
    let words = words_of(text);
    let n = words.len();
    if n < 3 {
        return Err(SimplifiedError::NoSegmentation);
    }
    let part_ok = |part: &[String]| -> Option<String> {
        if part.len() == 1 && part[0] == "?" {
            return Some("?".to_string());
        }
        if part.iter().any(|w| w == "?") {
            return None;
        }
        let name = part.join(" ");
        keys.contains(&name_key(&name)).then_some(name)
    };
    let mut valid: Vec<[String; 3]> = Vec::new();
    for i in 1..n - 1 {
        for j in i + 1..n {
            let (Some(a), Some(b), Some(c)) = (
                part_ok(&words[..i]),
                part_ok(&words[i..j]),
                part_ok(&words[j..]),
            ) else {
                continue;
            };
            let anons = [&a, &b, &c].iter().filter(|p| p.as_str() == "?").count();
            if anons == 1 {
                valid.push([a, b, c]);
            }
        }
    }
    match valid.len() {
        0 => Err(SimplifiedError::NoSegmentation),
        1 => {
            let [s, p, o] = valid.pop().expect("len checked");
            let term = |name: String| {
                if name == "?" {
                    Term::Anon
                } else {
                    Term::Name(name)
                }
            };
            Ok(QueryAst {
                statements: alloc::vec![Statement::Conjunct(Node::Pattern(SpoPatternAst {
                    s: term(s),
                    p: term(p),
                    o: term(o),
                    qualifiers: QualifierPattern::empty(),
                }))],
                ..QueryAst::default()
            })
        }
        _ => Err(SimplifiedError::Ambiguous(valid)),
    }
}
