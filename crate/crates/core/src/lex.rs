//! Tokenizer shared by the Overture and Prelude parsers.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// `[A-Za-z0-9_]+`; integer literals are words made of digits.
    Word(String),
    Str(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

// Longest symbols first so that `:=` wins over `:`.
const SYMBOLS: &[&str] = &[
    ":=", "==", "!=", "&&", "||", "++", "+", "-", "*", "!", "(", ")", "[", "]", "{", "}", "@", ";",
    ",", "=", ".",
];

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
        } else if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut w = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                let ch = chars[i];
                w.push(ch);
                advance(&mut i, &mut line, &mut col, ch);
            }
            out.push((Tok::Word(w), pos));
        } else if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(SyntaxError {
                            pos,
                            msg: "unterminated string literal".into(),
                        })
                    }
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, '"');
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
            }
            out.push((Tok::Str(s), pos));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| SyntaxError {
                    pos,
                    msg: format!("unexpected character `{c}`"),
                })?;
            for ch in sym.chars() {
                advance(&mut i, &mut line, &mut col, ch);
            }
            out.push((Tok::Sym(sym), pos));
        }
    }
    Ok(out)
}

/// A cursor over a token stream with error helpers.
pub struct Cursor {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    end: Pos,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Cursor, SyntaxError> {
        let toks = tokenize(src)?;
        let lines = src.lines().count().max(1);
        let last_col = src.lines().last().map_or(0, |l| l.chars().count());
        Ok(Cursor {
            toks,
            idx: 0,
            end: Pos {
                line: lines,
                col: last_col + 1,
            },
        })
    }

    pub fn mark(&self) -> usize {
        self.idx
    }

    pub fn reset(&mut self, mark: usize) {
        self.idx = mark;
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    pub fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.toks.get(self.idx + ahead).map(|(t, _)| t)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.idx).map_or(self.end, |(_, p)| *p)
    }

    pub fn at_end(&self) -> bool {
        self.idx >= self.toks.len()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn found(&self) -> String {
        self.peek()
            .map_or_else(|| "end of input".to_string(), |t| t.to_string())
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(t)) if t == w)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.idx += 1;
        }
        hit
    }

    pub fn eat_word(&mut self, w: &str) -> bool {
        let hit = self.is_word(w);
        if hit {
            self.idx += 1;
        }
        hit
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", self.found()))
        }
    }

    pub fn expect_word(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.idx += 1;
                Ok(w)
            }
            _ => self.error(format!("expected identifier, found {}", self.found())),
        }
    }

    pub fn expect_int(&mut self) -> Result<u64, SyntaxError> {
        match self.peek() {
            Some(Tok::Word(w)) if w.chars().all(|c| c.is_ascii_digit()) => {
                let v = w
                    .parse()
                    .or_else(|_| self.error("integer literal too large"))?;
                self.idx += 1;
                Ok(v)
            }
            _ => self.error(format!("expected integer, found {}", self.found())),
        }
    }

    pub fn unexpected<T>(&self) -> Result<T, SyntaxError> {
        self.error(format!("unexpected {}", self.found()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("m[z]@2 := x ++ \"s\"; # note\n  p").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|(t, _)| t).collect();
        assert_eq!(kinds[0], &Tok::Word("m".into()));
        assert_eq!(kinds[6], &Tok::Sym(":="));
        assert_eq!(kinds[8], &Tok::Sym("++"));
        assert_eq!(kinds[9], &Tok::Str("s".into()));
        assert_eq!(toks.last().unwrap().1, Pos { line: 2, col: 3 });
    }

    #[test]
    fn bad_character_reports_position() {
        let err = tokenize("a\n  $").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, col: 3 });
        assert!(tokenize("\"open").is_err());
    }
}
