//! Name normalization, edit-distance ranking, and `\match` templates.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Key used by the name/alias index: lowercased with all whitespace
/// removed, so "G.B.Shaw", "G.B. Shaw", and "g.b. shaw" resolve alike.
pub fn name_key(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if !c.is_whitespace() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Collapses internal whitespace runs to single spaces and trims.
pub fn normalize_spaces(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for w in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// Levenshtein distance over Unicode scalars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance scaled by the longer length, in [0, 1]. Compared
/// case-insensitively; identical strings give 0.
pub fn normalized_distance(a: &str, b: &str) -> f64 {
    let a_low = a.to_lowercase();
    let b_low = b.to_lowercase();
    let len = a_low.chars().count().max(b_low.chars().count());
    if len == 0 {
        return 0.0;
    }
    edit_distance(&a_low, &b_low) as f64 / len as f64
}

/// One step of a match template: `%` spans any sequence, `_` exactly one
/// scalar, everything else matches itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Any,
    One,
    Lit(char),
}

/// A compiled `\match` template.
///
/// Whitespace is ignored on both sides: the template `'%99%\%qualified%'`
/// matches "99% qualified boyfriend" even though the template writes no
/// space after the escaped `%`. Accordingly `_` matches exactly one
/// non-whitespace scalar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    atoms: Vec<Atom>,
}

impl Template {
    /// Decodes the raw template text: `\%` and `\_` are literal, a
    /// backslash before any other character yields that character, and a
    /// trailing backslash is itself literal.
    pub fn compile(raw: &str) -> Template {
        let mut atoms = Vec::new();
        let mut chars = raw.chars();
        while let Some(c) = chars.next() {
            match c {
                '%' => atoms.push(Atom::Any),
                '_' => atoms.push(Atom::One),
                '\\' => match chars.next() {
                    Some(lit) => atoms.push(Atom::Lit(lit)),
                    None => atoms.push(Atom::Lit('\\')),
                },
                lit if lit.is_whitespace() => {}
                lit => atoms.push(Atom::Lit(lit)),
            }
        }
        Template { atoms }
    }

    /// Whole-string match with iterative backtracking to the most recent
    /// `%`.
    pub fn matches(&self, candidate: &str) -> bool {
        let text: Vec<char> = candidate.chars().filter(|c| !c.is_whitespace()).collect();
        let atoms = &self.atoms;
        let (mut ai, mut ti) = (0usize, 0usize);
        let mut star: Option<(usize, usize)> = None;
        while ti < text.len() || ai < atoms.len() {
            if ai < atoms.len() {
                match atoms[ai] {
                    Atom::Any => {
                        star = Some((ai, ti));
                        ai += 1;
                        continue;
                    }
                    Atom::One => {
                        if ti < text.len() {
                            ai += 1;
                            ti += 1;
                            continue;
                        }
                    }
                    Atom::Lit(c) => {
                        if ti < text.len() && text[ti] == c {
                            ai += 1;
                            ti += 1;
                            continue;
                        }
                    }
                }
            }
            match star {
                Some((sa, st)) if st < text.len() => {
                    star = Some((sa, st + 1));
                    ai = sa + 1;
                    ti = st + 1;
                }
                _ => return false,
            }
        }
        true
    }
}

/// Convenience wrapper: compile and match in one call.
pub fn match_template(template: &str, candidate: &str) -> bool {
    Template::compile(template).matches(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_ignores_case_and_spaces() {
        assert_eq!(name_key("G.B. Shaw"), name_key("G.B.Shaw"));
        assert_eq!(name_key("City of Birth"), name_key("city of birth"));
        assert_ne!(name_key("award"), name_key("awards"));
    }

    #[test]
    fn distance_basics() {
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("", "abc"), 3);
        let d = normalized_distance("G.E. Shaw", "G.B. Shaw");
        assert!(d > 0.0 && d <= 0.4, "{d}");
    }

    #[test]
    fn templates_from_the_match_cases() {
        assert!(match_template("%William%", "William Faulkner"));
        assert!(match_template("William G_lding", "William Golding"));
        assert!(match_template("%99%\\%qualified%", "99% qualified boyfriend"));
        assert!(match_template("%", ""));
        assert!(match_template("赵_龙", "赵子龙"));
        assert!(match_template("赵_龙", "赵小龙"));
        assert!(!match_template("赵_龙", "赵龙"));
        assert!(!match_template("William", "William Faulkner"));
        assert!(!match_template("_", ""));
    }

    #[test]
    fn escaped_wildcards_are_literal() {
        assert!(match_template("100\\%", "100%"));
        assert!(!match_template("100\\%", "100x"));
        assert!(match_template("a\\_b", "a_b"));
        assert!(!match_template("a\\_b", "axb"));
        assert!(match_template("end\\", "end\\"));
    }
}
