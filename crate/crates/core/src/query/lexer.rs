use super::{QueryError, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Int(i64),
    Real(f64),
    Str(String),
    Template(Vec<TemplateChunk>),
    Ident(String),
    Dollar(String),
    Punct(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TemplateChunk {
    Text(String),
    Code(Vec<Token>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Punctuation, longest first so that greedy matching works.
const PUNCTS: &[&str] = &[
    "===", "!==", "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "<>", "+", "-", "*", "/", "%", "<", ">", "!", "?",
    ":", "(", ")", "[", "]", "{", "}", ",", ".", "=", ";",
];

pub struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn with_origin(src: &'a str, line: u32, col: u32) -> Self {
        Lexer { src, pos: 0, line, col }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span {
            start: self.pos,
            end: self.pos,
            line: self.line,
            col: self.col,
        }
    }

    fn error(&self, span: Span, message: impl Into<String>) -> QueryError {
        QueryError::new(span, message, "")
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, QueryError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let Some(c) = self.peek() else { break };
            let start = self.here();
            let tok = if c.is_ascii_digit() {
                self.number(start)?
            } else if c == '\'' || c == '"' {
                Tok::Str(self.string(c, start)?)
            } else if c == '`' {
                Tok::Template(self.template(start)?)
            } else if c == '$' && self.peek_at(1).is_some_and(is_ident_start) {
                self.bump();
                Tok::Dollar(self.ident())
            } else if is_ident_start(c) {
                Tok::Ident(self.ident())
            } else if let Some(p) = PUNCTS.iter().find(|p| self.src[self.pos..].starts_with(**p)) {
                for _ in 0..p.len() {
                    self.bump();
                }
                Tok::Punct(p)
            } else {
                return Err(self.error(start, format!("unexpected character `{c}`")));
            };
            let mut span = start;
            span.end = self.pos;
            out.push(Token { tok, span });
        }
        Ok(out)
    }

    fn skip_trivia(&mut self) -> Result<(), QueryError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                Some('/') if self.peek_at(1) == Some('*') => {
                    let start = self.here();
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => return Err(self.error(start, "unterminated comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_continue) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn number(&mut self, start: Span) -> Result<Tok, QueryError> {
        let begin = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        let mut real = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            real = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                real = true;
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text = &self.src[begin..self.pos];
        if real {
            text.parse::<f64>()
                .map(Tok::Real)
                .map_err(|_| self.error(start, format!("malformed number `{text}`")))
        } else {
            text.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| self.error(start, format!("integer `{text}` out of range")))
        }
    }

    fn escape(&mut self, start: Span) -> Result<char, QueryError> {
        match self.bump() {
            Some('n') => Ok('\n'),
            Some('t') => Ok('\t'),
            Some('r') => Ok('\r'),
            Some('0') => Ok('\0'),
            Some(c) => Ok(c),
            None => Err(self.error(start, "unterminated escape")),
        }
    }

    fn string(&mut self, quote: char, start: Span) -> Result<String, QueryError> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                Some(c) if c == quote => return Ok(out),
                Some('\\') => out.push(self.escape(start)?),
                Some('\n') | None => return Err(self.error(start, "unterminated string")),
                Some(c) => out.push(c),
            }
        }
    }

    fn template(&mut self, start: Span) -> Result<Vec<TemplateChunk>, QueryError> {
        self.bump();
        let mut chunks = Vec::new();
        let mut text = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error(start, "unterminated template")),
                Some('`') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    text.push(self.escape(start)?);
                }
                Some('$') if self.peek_at(1) == Some('{') => {
                    self.bump();
                    self.bump();
                    if !text.is_empty() {
                        chunks.push(TemplateChunk::Text(std::mem::take(&mut text)));
                    }
                    let code_start = self.pos;
                    let (line, col) = (self.line, self.col);
                    self.skip_splice(start)?;
                    let code = &self.src[code_start..self.pos];
                    let mut inner = Lexer::with_origin(code, line, col).tokenize()?;
                    for t in &mut inner {
                        shift(t, code_start);
                    }
                    self.bump();
                    chunks.push(TemplateChunk::Code(inner));
                }
                Some(_) => text.push(self.bump().unwrap_or_default()),
            }
        }
        if !text.is_empty() {
            chunks.push(TemplateChunk::Text(text));
        }
        Ok(chunks)
    }

    /// Advances to the `}` closing a template splice, leaving it unconsumed.
    fn skip_splice(&mut self, start: Span) -> Result<(), QueryError> {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                None => return Err(self.error(start, "unterminated template splice")),
                Some('}') if depth == 0 => return Ok(()),
                Some('}') => {
                    depth -= 1;
                    self.bump();
                }
                Some('{') => {
                    depth += 1;
                    self.bump();
                }
                Some(q @ ('\'' | '"')) => {
                    let s = self.here();
                    self.string(q, s)?;
                }
                Some('`') => {
                    let s = self.here();
                    self.template(s)?;
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }
}

fn shift(t: &mut Token, by: usize) {
    t.span.start += by;
    t.span.end += by;
    if let Tok::Template(chunks) = &mut t.tok {
        for c in chunks {
            if let TemplateChunk::Code(toks) = c {
                for inner in toks {
                    shift(inner, by);
                }
            }
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_continue)
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, QueryError> {
    Lexer::new(src).tokenize()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn punctuation_is_greedy() {
        assert_eq!(
            toks("a ?? b === c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("??"),
                Tok::Ident("b".into()),
                Tok::Punct("==="),
                Tok::Ident("c".into()),
            ]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(toks("12 1.5 2e3 7."), vec![
            Tok::Int(12),
            Tok::Real(1.5),
            Tok::Real(2000.0),
            Tok::Int(7),
            Tok::Punct(".")
        ]);
    }

    #[test]
    fn dollar_names() {
        assert_eq!(toks("data.$left"), vec![
            Tok::Ident("data".into()),
            Tok::Punct("."),
            Tok::Dollar("left".into())
        ]);
    }

    #[test]
    fn template_splices_keep_absolute_positions() {
        let tokens = tokenize("`a ${x.y} b`").unwrap();
        let Tok::Template(chunks) = &tokens[0].tok else { panic!() };
        assert_eq!(chunks.len(), 3);
        let TemplateChunk::Code(code) = &chunks[1] else { panic!() };
        assert_eq!(code[0].span.start, 5);
        assert_eq!(code[0].span.col, 6);
    }

    #[test]
    fn template_with_nested_braces_and_strings() {
        let tokens = tokenize("`${ {a: '}'}.a }`").unwrap();
        assert_eq!(tokens.len(), 1);
    }

    #[test]
    fn errors_carry_position() {
        let err = tokenize("a\n  #").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        assert!(tokenize("'open").is_err());
    }
}
