//! EQL tokenizer.
//!
//! Escape rules: `\:`, `\?`, `\%`, `\_` put the literal character inside
//! a name fragment; any other `\x` where `x` is not a keyword is a bad
//! escape. Full-width `？` and `：` (Chinese input mode) normalize to
//! their ASCII forms. Inside quoted match templates nothing is decoded —
//! the template compiler handles its own escapes.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    And,
    Or,
    Not,
    True,
    False,
    Order,
    Group,
    Filter,
    Match,
    Suggest,
    ChangeTo,
    /// `\ref`, `\ref1`, `\ref2`, ...
    Ref,
    Ans,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Colon,
    Comma,
    Dot,
    LParen,
    RParen,
    Cmp(CmpOp),
    /// One whitespace-delimited name fragment, escapes decoded.
    Word(String),
    /// Quoted match template, content kept raw.
    Quoted(String),
    /// `?x`, `? y`, `?z12` — names limited to x, y, z, z1..zn.
    Var(String),
    /// Bare `?`.
    Anon,
    Kw(Kw),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { pos, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl core::error::Error for ParseError {}

/// Maps full-width question mark / colon to ASCII.
fn normalize(c: char) -> char {
    match c {
        '？' => '?',
        '：' => ':',
        _ => c,
    }
}

fn is_escapable(c: char) -> bool {
    matches!(c, ':' | '?' | '%' | '_' | '？' | '：' | '\\')
}

fn keyword(word: &str) -> Option<Kw> {
    let lower = word.to_lowercase();
    Some(match lower.as_str() {
        "and" => Kw::And,
        "or" => Kw::Or,
        "not" => Kw::Not,
        "true" => Kw::True,
        "false" => Kw::False,
        "order" => Kw::Order,
        "group" => Kw::Group,
        "filter" => Kw::Filter,
        "match" => Kw::Match,
        "suggest" => Kw::Suggest,
        "changeto" => Kw::ChangeTo,
        _ => {
            if let Some(rest) = lower.strip_prefix("ref") {
                if rest.chars().all(|c| c.is_ascii_digit()) {
                    return Some(Kw::Ref);
                }
            }
            return None;
        }
    })
}

/// Valid variable names: x, y, z, or z followed by digits.
pub fn is_var_name(word: &str) -> bool {
    match word {
        "x" | "y" | "z" => true,
        _ => word
            .strip_prefix('z')
            .map(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            .unwrap_or(false),
    }
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    path_mode: bool,
    line_start: bool,
    had_ws: bool,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.i + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn last_tok(&self) -> Option<&Tok> {
        self.tokens.last().map(|t| &t.tok)
    }

    fn push(&mut self, tok: Tok, pos: Pos) {
        if !matches!(tok, Tok::Word(_) | Tok::Dot) {
            self.path_mode = false;
        }
        self.tokens.push(Token { tok, pos });
        self.line_start = false;
        self.had_ws = false;
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                self.line_start = true;
                self.path_mode = false;
                self.had_ws = true;
                self.bump();
            } else if c.is_whitespace() {
                self.had_ws = true;
                self.bump();
            } else {
                break;
            }
        }
    }

    /// Peeks the alphanumeric run starting at offset 0, without consuming.
    fn peek_word_run(&self, mut off: usize) -> (String, usize) {
        let mut out = String::new();
        while let Some(c) = self.peek_at(off) {
            if c.is_alphanumeric() {
                out.push(c);
                off += 1;
            } else {
                break;
            }
        }
        (out, off)
    }

    fn lex_var_or_anon(&mut self) -> Result<(), ParseError> {
        let pos = self.pos();
        self.bump(); // '?'
        // "? x" with spaces is still the variable ?x
        let mut off = 0usize;
        while matches!(self.peek_at(off), Some(c) if c != '\n' && c.is_whitespace()) {
            off += 1;
        }
        let (run, _) = self.peek_word_run(off);
        if is_var_name(&run.to_lowercase()) {
            for _ in 0..(off + run.chars().count()) {
                self.bump();
            }
            self.push(Tok::Var(run.to_lowercase()), pos);
        } else {
            self.push(Tok::Anon, pos);
        }
        Ok(())
    }

    fn lex_quoted(&mut self) -> Result<(), ParseError> {
        let pos = self.pos();
        self.bump(); // opening quote
        let mut raw = String::new();
        loop {
            match self.bump() {
                None => return Err(ParseError::new(pos, "unterminated string template")),
                Some('\'') => break,
                Some('\\') => {
                    raw.push('\\');
                    if let Some(c) = self.bump() {
                        raw.push(c);
                    }
                }
                Some(c) => raw.push(c),
            }
        }
        self.push(Tok::Quoted(raw), pos);
        Ok(())
    }

    fn lex_backslash(&mut self) -> Result<(), ParseError> {
        let pos = self.pos();
        let (run, _) = self.peek_word_run(1);
        if !run.is_empty() {
            if let Some(kw) = keyword(&run) {
                self.bump(); // backslash
                for _ in 0..run.chars().count() {
                    self.bump();
                }
                self.push(Tok::Kw(kw), pos);
                return Ok(());
            }
        }
        match self.peek_at(1) {
            Some(c) if is_escapable(c) => self.lex_word(),
            Some(c) => Err(ParseError::new(pos, alloc::format!("bad escape: \\{c}"))),
            None => Err(ParseError::new(pos, "bad escape: trailing backslash")),
        }
    }

    fn lex_word(&mut self) -> Result<(), ParseError> {
        let pos = self.pos();
        let line_start = self.line_start;
        let mut word = String::new();
        while let Some(raw) = self.peek() {
            let c = normalize(raw);
            match c {
                '\\' => {
                    let esc_pos = self.pos();
                    match self.peek_at(1) {
                        Some(e) if is_escapable(e) => {
                            self.bump();
                            self.bump();
                            word.push(normalize(e));
                        }
                        Some(e) => {
                            return Err(ParseError::new(esc_pos, alloc::format!("bad escape: \\{e}")))
                        }
                        None => {
                            return Err(ParseError::new(esc_pos, "bad escape: trailing backslash"))
                        }
                    }
                }
                ':' | ',' | '(' | ')' | '=' | '<' | '>' | '?' => break,
                '!' if self.peek_at(1) == Some('=') => break,
                '.' if self.path_mode => break,
                _ if c.is_whitespace() => break,
                _ => {
                    self.bump();
                    word.push(c);
                }
            }
        }
        if word.is_empty() {
            return Err(ParseError::new(pos, "unexpected character"));
        }
        if word == "ANS" {
            self.push(Tok::Kw(Kw::Ans), pos);
            return Ok(());
        }
        // a line starting with bare "order by" is the sort clause,
        // backslash or not
        if line_start && word.eq_ignore_ascii_case("order") && self.next_word_is_by() {
            self.push(Tok::Kw(Kw::Order), pos);
            return Ok(());
        }
        self.push(Tok::Word(word), pos);
        Ok(())
    }

    fn next_word_is_by(&self) -> bool {
        let mut off = 0usize;
        while matches!(self.peek_at(off), Some(c) if c != '\n' && c.is_whitespace()) {
            off += 1;
        }
        let (run, end) = self.peek_word_run(off);
        run.eq_ignore_ascii_case("by")
            && !matches!(self.peek_at(end), Some(c) if c.is_alphanumeric())
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        loop {
            self.skip_ws();
            let raw = match self.peek() {
                Some(c) => c,
                None => break,
            };
            let c = normalize(raw);
            let pos = self.pos();
            match c {
                '?' => self.lex_var_or_anon()?,
                ':' => {
                    self.bump();
                    self.push(Tok::Colon, pos);
                }
                ',' => {
                    self.bump();
                    self.push(Tok::Comma, pos);
                }
                '(' => {
                    self.bump();
                    self.push(Tok::LParen, pos);
                }
                ')' => {
                    self.bump();
                    self.push(Tok::RParen, pos);
                }
                '=' => {
                    self.bump();
                    self.push(Tok::Cmp(CmpOp::Eq), pos);
                }
                '>' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.push(Tok::Cmp(CmpOp::Ge), pos);
                    } else {
                        self.push(Tok::Cmp(CmpOp::Gt), pos);
                    }
                }
                '<' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.push(Tok::Cmp(CmpOp::Le), pos);
                    } else {
                        self.push(Tok::Cmp(CmpOp::Lt), pos);
                    }
                }
                '!' if self.peek_at(1) == Some('=') => {
                    self.bump();
                    self.bump();
                    self.push(Tok::Cmp(CmpOp::Ne), pos);
                }
                // quoted templates exist only right after \match; an
                // apostrophe anywhere else is a name character (O'Neill)
                '\'' if matches!(self.last_tok(), Some(Tok::Kw(Kw::Match))) => {
                    self.lex_quoted()?
                }
                '\\' => self.lex_backslash()?,
                '.' if !self.had_ws
                    && matches!(self.last_tok(), Some(Tok::Var(_) | Tok::RParen)) =>
                {
                    self.bump();
                    self.path_mode = true;
                    self.tokens.push(Token { tok: Tok::Dot, pos });
                    self.line_start = false;
                    self.had_ws = false;
                }
                '.' if self.path_mode => {
                    self.bump();
                    self.tokens.push(Token { tok: Tok::Dot, pos });
                    self.had_ws = false;
                }
                _ => self.lex_word()?,
            }
        }
        Ok(self.tokens)
    }
}

/// Tokenizes EQL query or suggestion text.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
        tokens: Vec::new(),
        path_mode: false,
        line_start: true,
        had_ws: false,
    }
    .run()
}
