use super::lexer::Tok;
use super::{ParseError, Pos};

pub struct Cursor<'a> {
    toks: &'a [(Tok, Pos)],
    at: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [(Tok, Pos)]) -> Self {
        Cursor { toks, at: 0 }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.peek_at(0)
    }

    pub fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.at + k).map(|(t, _)| t)
    }

    pub fn index(&self) -> usize {
        self.at
    }

    pub fn reset(&mut self, at: usize) {
        self.at = at;
    }

    /// Position of the next token, or just past the last one.
    pub fn pos(&self) -> Pos {
        match self.toks.get(self.at) {
            Some((_, p)) => *p,
            None => self
                .toks
                .last()
                .map_or(Pos { line: 1, col: 1 }, |(t, p)| Pos { line: p.line, col: p.col + t.describe().len() - 2 }),
        }
    }

    pub fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.pos(), message)
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", t.describe())),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub fn check(&self, tok: &Tok) -> bool {
        self.peek() == Some(tok)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        let hit = self.check(tok);
        if hit {
            self.at += 1;
        }
        hit
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    pub fn check_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.check_kw(kw);
        if hit {
            self.at += 1;
        }
        hit
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.at += 1;
                Ok((s.clone(), pos))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// An integer literal with an optional minus sign.
    pub fn int(&mut self) -> Result<i64, ParseError> {
        let negative = self.eat(&Tok::Minus);
        match self.peek() {
            Some(Tok::Int(v)) => {
                self.at += 1;
                Ok(if negative { -v } else { *v })
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    /// `{1, 2}` or `lo..hi` (inclusive).
    pub fn value_set(&mut self) -> Result<Vec<i64>, ParseError> {
        if self.eat(&Tok::LBrace) {
            let mut out = Vec::new();
            if !self.eat(&Tok::RBrace) {
                loop {
                    out.push(self.int()?);
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(&Tok::Comma)?;
                }
            }
            return Ok(out);
        }
        let pos = self.pos();
        let lo = self.int()?;
        self.expect(&Tok::DotDot)?;
        let hi = self.int()?;
        if hi < lo || hi - lo > 1 << 16 {
            return Err(ParseError::new(pos, format!("bad range {lo}..{hi}")));
        }
        Ok((lo..=hi).collect())
    }

    pub fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// Skips a balanced `{ ... }` group starting at the cursor and returns
    /// the token range strictly inside it.
    pub fn skip_braces(&mut self) -> Result<std::ops::Range<usize>, ParseError> {
        let open = self.pos();
        self.expect(&Tok::LBrace)?;
        let start = self.at;
        let mut depth = 1;
        while let Some(t) = self.bump() {
            match t {
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(start..self.at - 1);
                    }
                }
                _ => {}
            }
        }
        Err(ParseError::new(open, "unclosed `{`"))
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> &'a [(Tok, Pos)] {
        &self.toks[range]
    }
}
