use super::ast::{BinOp, Expr, ExprKind, Literal, TemplatePart, UnOp};
use super::lexer::{TemplateChunk, Tok, Token};
use super::{QueryError, Span};

/// Recursive-descent parser over a token slice. `constraint` switches on the
/// OCL-flavoured spellings (`self`, `=`, `<>`, `and`, `or`, `not`).
pub struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    constraint: bool,
    end: Span,
}

const RESERVED: &[&str] = &["true", "false", "null", "undefined", "let", "if", "else"];

impl<'t> Parser<'t> {
    pub fn new(toks: &'t [Token], end: Span, constraint: bool) -> Self {
        Parser {
            toks,
            pos: 0,
            constraint,
            end,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_tok(&self, n: usize) -> Option<&'t Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    pub fn span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.end)
    }

    pub fn error(&self, message: impl Into<String>) -> QueryError {
        QueryError::new(self.span(), message, "")
    }

    pub fn advance(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    /// True when the next token is the punctuation `p` (dialect aliases
    /// included).
    pub fn is_punct(&self, p: &str) -> bool {
        match self.peek_tok(0) {
            Some(Tok::Punct(q)) => {
                if self.constraint {
                    let mapped = match *q {
                        "=" => "==",
                        "<>" => "!=",
                        other => other,
                    };
                    mapped == p
                } else {
                    *q == p
                }
            }
            Some(Tok::Ident(w)) if self.constraint => matches!(
                (w.as_str(), p),
                ("and", "&&") | ("or", "||") | ("not", "!")
            ),
            _ => false,
        }
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(self.peek_tok(0), Some(Tok::Ident(x)) if x == w)
    }

    pub fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, p: &str) -> Result<(), QueryError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`, found {}", self.describe())))
        }
    }

    pub fn describe(&self) -> String {
        match self.peek_tok(0) {
            None => "end of input".into(),
            Some(Tok::Int(i)) => format!("`{i}`"),
            Some(Tok::Real(r)) => format!("`{r}`"),
            Some(Tok::Str(_)) => "string".into(),
            Some(Tok::Template(_)) => "template".into(),
            Some(Tok::Ident(n)) => format!("`{n}`"),
            Some(Tok::Dollar(n)) => format!("`${n}`"),
            Some(Tok::Punct(p)) => format!("`{p}`"),
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, QueryError> {
        match self.peek_tok(0) {
            Some(Tok::Ident(n)) if !RESERVED.contains(&n.as_str()) => {
                self.pos += 1;
                Ok(n.clone())
            }
            _ => Err(self.error(format!("expected identifier, found {}", self.describe()))),
        }
    }

    pub fn expr(&mut self) -> Result<Expr, QueryError> {
        let cond = self.coalesce()?;
        if self.eat("?") {
            let then = self.expr()?;
            self.expect(":")?;
            let other = self.expr()?;
            let span = cond.span;
            return Ok(Expr::new(
                ExprKind::Cond {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    other: Box::new(other),
                },
                span,
            ));
        }
        Ok(cond)
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> Result<Expr, QueryError>,
    ) -> Result<Expr, QueryError> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.is_punct(sym) {
                    let span = self.span();
                    self.pos += 1;
                    let rhs = next(self)?;
                    lhs = Expr::new(
                        ExprKind::Binary {
                            op: *op,
                            lhs: Box::new(lhs),
                            rhs: Box::new(rhs),
                        },
                        span,
                    );
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn coalesce(&mut self) -> Result<Expr, QueryError> {
        self.binary_level(&[("??", BinOp::Coalesce)], Self::or)
    }

    fn or(&mut self) -> Result<Expr, QueryError> {
        self.binary_level(&[("||", BinOp::Or)], Self::and)
    }

    fn and(&mut self) -> Result<Expr, QueryError> {
        self.binary_level(&[("&&", BinOp::And)], Self::equality)
    }

    fn equality(&mut self) -> Result<Expr, QueryError> {
        self.binary_level(
            &[
                ("===", BinOp::Eq),
                ("!==", BinOp::Ne),
                ("==", BinOp::Eq),
                ("!=", BinOp::Ne),
            ],
            Self::relational,
        )
    }

    fn relational(&mut self) -> Result<Expr, QueryError> {
        self.binary_level(
            &[
                ("<=", BinOp::Le),
                (">=", BinOp::Ge),
                ("<", BinOp::Lt),
                (">", BinOp::Gt),
            ],
            Self::additive,
        )
    }

    fn additive(&mut self) -> Result<Expr, QueryError> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<Expr, QueryError> {
        self.binary_level(
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
            Self::unary,
        )
    }

    fn unary(&mut self) -> Result<Expr, QueryError> {
        let span = self.span();
        let op = if self.eat("!") {
            UnOp::Not
        } else if self.eat("-") {
            UnOp::Neg
        } else {
            return self.postfix();
        };
        let operand = self.unary()?;
        Ok(Expr::new(
            ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        ))
    }

    fn postfix(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat(".") {
                let (name, dollar) = match self.peek_tok(0) {
                    Some(Tok::Ident(n)) => (n.clone(), false),
                    Some(Tok::Dollar(n)) => (n.clone(), true),
                    _ => return Err(self.error(format!("expected member name, found {}", self.describe()))),
                };
                self.pos += 1;
                e = Expr::new(
                    ExprKind::Member {
                        obj: Box::new(e),
                        name,
                        dollar,
                    },
                    span,
                );
            } else if self.eat("[") {
                let index = self.expr()?;
                self.expect("]")?;
                e = Expr::new(
                    ExprKind::Index {
                        obj: Box::new(e),
                        index: Box::new(index),
                    },
                    span,
                );
            } else if self.eat("(") {
                let args = self.comma_list(")")?;
                e = Expr::new(
                    ExprKind::Call {
                        callee: Box::new(e),
                        args,
                    },
                    span,
                );
            } else {
                return Ok(e);
            }
        }
    }

    fn comma_list(&mut self, close: &str) -> Result<Vec<Expr>, QueryError> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if self.eat(close) {
                return Ok(items);
            }
            self.expect(",")?;
        }
    }

    /// Looks ahead for `( a, b ) =>`.
    fn paren_lambda_ahead(&self) -> bool {
        let mut i = 1;
        let mut expect_ident = true;
        loop {
            match self.peek_tok(i) {
                Some(Tok::Punct(")")) if expect_ident && i == 1 => break,
                Some(Tok::Punct(")")) if !expect_ident => break,
                Some(Tok::Ident(_)) if expect_ident => expect_ident = false,
                Some(Tok::Punct(",")) if !expect_ident => expect_ident = true,
                _ => return false,
            }
            i += 1;
        }
        matches!(self.peek_tok(i + 1), Some(Tok::Punct("=>")))
    }

    fn lambda_body(&mut self, params: Vec<String>, span: Span) -> Result<Expr, QueryError> {
        self.expect("=>")?;
        let body = self.expr()?;
        Ok(Expr::new(
            ExprKind::Lambda {
                params,
                body: Box::new(body),
            },
            span,
        ))
    }

    fn primary(&mut self) -> Result<Expr, QueryError> {
        let Some(tok) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        let span = tok.span;
        let lit = |l| Ok(Expr::new(ExprKind::Lit(l), span));
        match &tok.tok {
            Tok::Int(i) => {
                self.pos += 1;
                lit(Literal::Int(*i))
            }
            Tok::Real(r) => {
                self.pos += 1;
                lit(Literal::Real(*r))
            }
            Tok::Str(s) => {
                self.pos += 1;
                lit(Literal::Str(s.clone()))
            }
            Tok::Template(chunks) => {
                self.pos += 1;
                let mut parts = Vec::new();
                for c in chunks {
                    match c {
                        TemplateChunk::Text(t) => parts.push(TemplatePart::Text(t.clone())),
                        TemplateChunk::Code(toks) => {
                            let mut inner = Parser::new(toks, span, self.constraint);
                            if inner.at_end() {
                                return Err(QueryError::new(span, "empty template splice", ""));
                            }
                            let e = inner.expr()?;
                            if !inner.at_end() {
                                return Err(inner.error(format!("unexpected {} in splice", inner.describe())));
                            }
                            parts.push(TemplatePart::Splice(e));
                        }
                    }
                }
                Ok(Expr::new(ExprKind::Template(parts), span))
            }
            Tok::Dollar(n) => Err(self.error(format!("`${n}` needs a receiver, as in `data.${n}`"))),
            Tok::Ident(w) => {
                self.pos += 1;
                match w.as_str() {
                    "true" => lit(Literal::Bool(true)),
                    "false" => lit(Literal::Bool(false)),
                    "null" | "undefined" => lit(Literal::Null),
                    "self" if self.constraint => Ok(Expr::new(ExprKind::Ident("data".into()), span)),
                    w if RESERVED.contains(&w) => Err(QueryError::new(span, format!("unexpected `{w}`"), "")),
                    _ if self.is_punct("=>") => self.lambda_body(vec![w.clone()], span),
                    _ => Ok(Expr::new(ExprKind::Ident(w.clone()), span)),
                }
            }
            Tok::Punct("(") => {
                if self.paren_lambda_ahead() {
                    self.pos += 1;
                    let mut params = Vec::new();
                    while !self.eat(")") {
                        params.push(self.expect_ident()?);
                        self.eat(",");
                    }
                    return self.lambda_body(params, span);
                }
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.pos += 1;
                let items = self.comma_list("]")?;
                Ok(Expr::new(ExprKind::List(items), span))
            }
            _ => Err(self.error(format!("unexpected {}", self.describe()))),
        }
    }
}
