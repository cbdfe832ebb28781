use std::fmt;

use super::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Coalesce,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Coalesce => "??",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Str(String),
    Bool(bool),
    Null,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TemplatePart {
    Text(String),
    Splice(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Ident(String),
    /// `obj.name`, or `obj.$name` when `dollar` is set.
    Member {
        obj: Box<Expr>,
        name: String,
        dollar: bool,
    },
    Index {
        obj: Box<Expr>,
        index: Box<Expr>,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Lambda {
        params: Vec<String>,
        body: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Cond {
        cond: Box<Expr>,
        then: Box<Expr>,
        other: Box<Expr>,
    },
    Template(Vec<TemplatePart>),
    List(Vec<Expr>),
}

/// Expression node. Equality compares structure only, never spans.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Source-like rendering of a navigation path, used in error messages.
    pub fn path(&self) -> String {
        match &self.kind {
            ExprKind::Ident(n) => n.clone(),
            ExprKind::Member { obj, name, dollar } => {
                format!("{}.{}{name}", obj.path(), if *dollar { "$" } else { "" })
            }
            ExprKind::Index { obj, .. } => format!("{}[]", obj.path()),
            ExprKind::Call { callee, .. } => format!("{}()", callee.path()),
            _ => self.to_string(),
        }
    }
}

fn write_str_lit(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            '\0' => f.write_str("\\0")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

/// Fully parenthesized printer; reparsing its output yields an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Lit(Literal::Int(i)) => write!(f, "{i}"),
            ExprKind::Lit(Literal::Real(r)) => {
                if r.fract() == 0.0 && r.abs() < 1e15 {
                    write!(f, "{r:.1}")
                } else {
                    write!(f, "{r:?}")
                }
            }
            ExprKind::Lit(Literal::Str(s)) => write_str_lit(f, s),
            ExprKind::Lit(Literal::Bool(b)) => write!(f, "{b}"),
            ExprKind::Lit(Literal::Null) => f.write_str("null"),
            ExprKind::Ident(n) => f.write_str(n),
            ExprKind::Member { obj, name, dollar } => {
                write!(f, "{obj}.{}{name}", if *dollar { "$" } else { "" })
            }
            ExprKind::Index { obj, index } => write!(f, "{obj}[{index}]"),
            ExprKind::Call { callee, args } => {
                write!(f, "{callee}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            ExprKind::Lambda { params, body } => write!(f, "(({}) => {body})", params.join(", ")),
            ExprKind::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            ExprKind::Unary { op: UnOp::Not, operand } => write!(f, "(!{operand})"),
            ExprKind::Unary { op: UnOp::Neg, operand } => write!(f, "(-{operand})"),
            ExprKind::Cond { cond, then, other } => write!(f, "({cond} ? {then} : {other})"),
            ExprKind::Template(parts) => {
                f.write_str("`")?;
                for p in parts {
                    match p {
                        TemplatePart::Text(t) => {
                            for c in t.chars() {
                                match c {
                                    '`' => f.write_str("\\`")?,
                                    '\\' => f.write_str("\\\\")?,
                                    '$' => f.write_str("\\$")?,
                                    c => write!(f, "{c}")?,
                                }
                            }
                        }
                        TemplatePart::Splice(e) => write!(f, "${{{e}}}")?,
                    }
                }
                f.write_str("`")
            }
            ExprKind::List(items) => {
                f.write_str("[")?;
                for (i, a) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("]")
            }
        }
    }
}
