//! Surface syntax tree.

use num_bigint::BigInt;

use crate::diag::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub decls: Vec<Decl>,
}

/// A type name. Type variables and type applications are rejected by the
/// parser, so a name is all a type can be.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeExpr {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub mutable: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorDecl {
    pub name: String,
    pub args: Vec<TypeExpr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Visibility {
    Public,
    #[default]
    Private,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunDecl {
    pub name: String,
    pub recursive: bool,
    pub visibility: Visibility,
    pub gas_checking: bool,
    pub params: Vec<Param>,
    pub ret: TypeExpr,
    pub requires: Vec<Expr>,
    pub ensures: Vec<Expr>,
    pub variant: Option<Expr>,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Type { name: String, ctors: Vec<CtorDecl>, span: Span },
    Record { name: String, fields: Vec<FieldDecl>, span: Span },
    Global { name: String, fields: Vec<FieldDecl>, span: Span },
    Map { name: String, key: TypeExpr, value: TypeExpr, span: Span },
    Exception { name: String, span: Span },
    Event { name: String, span: Span },
    Modifier { name: String, exception: String, body: Expr, span: Span },
    /// Specification-only function, evaluated in spec-check interpretation.
    Logic { name: String, params: Vec<Param>, ret: TypeExpr, body: Expr, span: Span },
    Fun(FunDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Type { name, .. }
            | Decl::Record { name, .. }
            | Decl::Global { name, .. }
            | Decl::Map { name, .. }
            | Decl::Exception { name, .. }
            | Decl::Event { name, .. }
            | Decl::Modifier { name, .. }
            | Decl::Logic { name, .. } => name,
            Decl::Fun(f) => &f.name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    /// `->`, specification only.
    Implies,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "->",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub ctor: String,
    /// `None` for `_`.
    pub binders: Vec<Option<String>>,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(BigInt),
    Bool(bool),
    Unit,
    Var(String),
    Annot(Box<Expr>, TypeExpr),
    /// `f a b`: functions, constructors and intrinsics alike.
    App(String, Vec<Expr>),
    Let { name: String, mutable: bool, value: Box<Expr>, body: Box<Expr> },
    Seq(Box<Expr>, Box<Expr>),
    Assign { target: Box<Expr>, value: Box<Expr> },
    If { cond: Box<Expr>, then: Box<Expr>, els: Option<Box<Expr>> },
    While { cond: Box<Expr>, invariants: Vec<Expr>, variant: Option<Box<Expr>>, body: Box<Expr> },
    Match { scrutinee: Box<Expr>, arms: Vec<Arm> },
    Field(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    RecordLit(Vec<(String, Expr)>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Raise(String),
    Old(Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn boxed(kind: ExprKind, span: Span) -> Box<Self> {
        Box::new(Expr { kind, span })
    }
}
