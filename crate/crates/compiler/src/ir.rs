//! Typed core IR produced by the checker.
//!
//! Specification clauses live in the same tree; they use [`Ty::Math`] for
//! unbounded integers and a handful of spec-only nodes (`Old`, `Result`, the
//! gas/alloc counters, calls to logic functions).

use std::fmt;

use bemp_core::{ArithOp, IntKind};
use num_bigint::BigInt;

use crate::ast::Visibility;
use crate::diag::Span;

pub type AdtId = usize;
pub type RecId = usize;
pub type MapId = usize;
pub type FuncId = usize;
pub type LogicId = usize;
pub type ExnId = usize;
pub type EventId = usize;
pub type LocalId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ty {
    Int(IntKind),
    Bool,
    Unit,
    Address,
    /// Unbounded integer, specification only.
    Math,
    Adt(AdtId),
    Record(RecId),
    /// Type of `raise`: never produces a value.
    Never,
}

impl Ty {
    /// Number of stack words a value of this type occupies.
    pub fn words(self) -> usize {
        match self {
            Ty::Unit | Ty::Never => 0,
            _ => 1,
        }
    }

    /// Word-sized scalars: the only types storage, calldata and events carry.
    pub fn is_scalar(self) -> bool {
        matches!(self, Ty::Int(_) | Ty::Bool | Ty::Address)
    }

    pub fn is_integral(self) -> bool {
        matches!(self, Ty::Int(_) | Ty::Math)
    }

    /// Least common type of two branches.
    pub fn join(self, other: Ty) -> Option<Ty> {
        match (self, other) {
            (Ty::Never, t) | (t, Ty::Never) => Some(t),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, o: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => o == Equal,
            CmpOp::Ne => o != Equal,
            CmpOp::Lt => o == Less,
            CmpOp::Le => o != Greater,
            CmpOp::Gt => o == Greater,
            CmpOp::Ge => o != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchArm {
    pub binders: Vec<Option<LocalId>>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(BigInt),
    Bool(bool),
    Unit,
    Local(LocalId),
    Let { local: LocalId, value: Box<Expr>, body: Box<Expr> },
    Assign { local: LocalId, value: Box<Expr> },
    Seq(Vec<Expr>),
    If { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    While { cond: Box<Expr>, invariants: Vec<Expr>, variant: Option<Box<Expr>>, body: Box<Expr> },
    /// `arms[k]` handles constructor `k`.
    Match { scrutinee: Box<Expr>, adt: AdtId, arms: Vec<MatchArm> },
    Ctor { adt: AdtId, ctor: usize, args: Vec<Expr> },
    Record { rec: RecId, fields: Vec<Expr> },
    Field { base: Box<Expr>, rec: RecId, field: usize },
    SetField { base: Box<Expr>, rec: RecId, field: usize, value: Box<Expr> },
    GlobalRead { slot: usize },
    GlobalWrite { slot: usize, value: Box<Expr> },
    MapGet { map: MapId, key: Box<Expr> },
    MapSet { map: MapId, key: Box<Expr>, value: Box<Expr> },
    MapMem { map: MapId, key: Box<Expr> },
    MapSize { map: MapId },
    MapClear { map: MapId },
    Call { func: FuncId, args: Vec<Expr> },
    /// Operand type equals the node type.
    Arith { op: ArithOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Compare { op: CmpOp, lhs: Box<Expr>, rhs: Box<Expr> },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Raise(ExnId),
    AddGas { used: u64, alloc: u64 },
    Send { to: Box<Expr>, amount: Box<Expr> },
    Emit { event: EventId, payload: Box<Expr> },
    Caller,
    CallValue,
    CallData(Box<Expr>),
    // Specification only.
    Implies(Box<Expr>, Box<Expr>),
    Old(Box<Expr>),
    Result,
    GasCounter,
    AllocCounter,
    LogicCall { func: LogicId, args: Vec<Expr> },
    ToMath(Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, ty: Ty, span: Span) -> Self {
        Expr { kind, ty, span }
    }

    /// Direct subexpressions in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Lit(_) | Bool(_) | Unit | Local(_) | GlobalRead { .. } | MapSize { .. } | MapClear { .. } | Raise(_)
            | AddGas { .. } | Caller | CallValue | Result | GasCounter | AllocCounter => vec![],
            Let { value, body, .. } => vec![value, body],
            Assign { value, .. } | GlobalWrite { value, .. } => vec![value],
            Seq(es) => es.iter().collect(),
            If { cond, then, els } => vec![cond, then, els],
            While { cond, invariants, variant, body } => {
                let mut v: Vec<&Expr> = vec![cond];
                v.extend(invariants.iter());
                v.extend(variant.iter().map(|b| &**b));
                v.push(body);
                v
            }
            Match { scrutinee, arms, .. } => {
                let mut v: Vec<&Expr> = vec![scrutinee];
                v.extend(arms.iter().map(|a| &a.body));
                v
            }
            Ctor { args, .. } | Call { args, .. } | LogicCall { args, .. } => args.iter().collect(),
            Record { fields, .. } => fields.iter().collect(),
            Field { base, .. } => vec![base],
            SetField { base, value, .. } => vec![base, value],
            MapGet { key, .. } | MapMem { key, .. } => vec![key],
            MapSet { key, value, .. } => vec![key, value],
            Arith { lhs, rhs, .. } | Compare { lhs, rhs, .. } => vec![lhs, rhs],
            And(a, b) | Or(a, b) | Implies(a, b) => vec![a, b],
            Not(a) | Old(a) | ToMath(a) | CallData(a) => vec![a],
            Send { to, amount } => vec![to, amount],
            Emit { payload, .. } => vec![payload],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorDef {
    pub name: String,
    pub fields: Vec<Ty>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdtDef {
    pub name: String,
    pub ctors: Vec<CtorDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub name: String,
    pub ty: Ty,
    pub mutable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
}

/// One storage cell: a field of a global record.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSlot {
    pub global: String,
    pub field: String,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapDef {
    pub name: String,
    pub key: Ty,
    pub value: Ty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalInfo {
    pub name: String,
    pub ty: Ty,
    pub mutable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreFunction {
    pub name: String,
    pub visibility: Visibility,
    pub gas_checking: bool,
    pub params: Vec<LocalId>,
    pub ret: Ty,
    pub locals: Vec<LocalInfo>,
    pub requires: Vec<Expr>,
    pub ensures: Vec<Expr>,
    pub variant: Option<Expr>,
    pub body: Expr,
    pub raise_sites: Vec<Span>,
    pub mutation_sites: Vec<Span>,
    pub span: Span,
}

impl CoreFunction {
    pub fn is_public(&self) -> bool {
        self.visibility == Visibility::Public
    }

    pub fn param_types(&self) -> Vec<Ty> {
        self.params.iter().map(|p| self.locals[*p].ty).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicFunction {
    pub name: String,
    pub params: Vec<LocalId>,
    pub ret: Ty,
    pub locals: Vec<LocalInfo>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub adts: Vec<AdtDef>,
    pub records: Vec<RecordDef>,
    pub slots: Vec<GlobalSlot>,
    pub maps: Vec<MapDef>,
    pub exceptions: Vec<String>,
    pub events: Vec<String>,
    pub functions: Vec<CoreFunction>,
    pub logic: Vec<LogicFunction>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<(FuncId, &CoreFunction)> {
        self.functions.iter().enumerate().find(|(_, f)| f.name == name)
    }

    pub fn map_id(&self, name: &str) -> Option<MapId> {
        self.maps.iter().position(|m| m.name == name)
    }

    pub fn slot_id(&self, global: &str, field: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.global == global && s.field == field)
    }

    pub fn ty_name(&self, t: Ty) -> String {
        match t {
            Ty::Int(k) => k.name(),
            Ty::Bool => "bool".into(),
            Ty::Unit => "unit".into(),
            Ty::Address => "address".into(),
            Ty::Math => "int".into(),
            Ty::Adt(a) => self.adts[a].name.clone(),
            Ty::Record(r) => self.records[r].name.clone(),
            Ty::Never => "never".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecheckError {
    pub function: String,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for RecheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.function, self.span, self.message)
    }
}

/// Independent re-check that every node's recorded type follows from its
/// children. Lowering bugs show up here as inconsistencies.
pub fn recheck(p: &Program) -> Result<(), RecheckError> {
    for f in &p.functions {
        let ck = Rechecker { p, locals: &f.locals, name: &f.name, ret: f.ret };
        ck.expr(&f.body)?;
        if f.body.ty.join(f.ret) != Some(f.ret) {
            return Err(ck.err(&f.body, "body type differs from the declared return type"));
        }
        for s in f.requires.iter().chain(&f.ensures) {
            ck.expr(s)?;
            ck.want(s, Ty::Bool)?;
        }
        if let Some(v) = &f.variant {
            ck.expr(v)?;
        }
    }
    for l in &p.logic {
        let ck = Rechecker { p, locals: &l.locals, name: &l.name, ret: l.ret };
        ck.expr(&l.body)?;
        if l.body.ty != l.ret {
            return Err(ck.err(&l.body, "body type differs from the declared return type"));
        }
    }
    Ok(())
}

struct Rechecker<'a> {
    p: &'a Program,
    locals: &'a [LocalInfo],
    name: &'a str,
    ret: Ty,
}

impl Rechecker<'_> {
    fn err(&self, e: &Expr, msg: &str) -> RecheckError {
        RecheckError { function: self.name.to_string(), span: e.span, message: format!("{msg} ({:?})", e.ty) }
    }

    fn want(&self, e: &Expr, t: Ty) -> Result<(), RecheckError> {
        if e.ty == t {
            Ok(())
        } else {
            Err(self.err(e, &format!("expected {}", self.p.ty_name(t))))
        }
    }

    fn expect(&self, e: &Expr, cond: bool, msg: &str) -> Result<(), RecheckError> {
        if cond {
            Ok(())
        } else {
            Err(self.err(e, msg))
        }
    }

    fn expr(&self, e: &Expr) -> Result<(), RecheckError> {
        for c in e.children() {
            self.expr(c)?;
        }
        use ExprKind::*;
        let p = self.p;
        match &e.kind {
            Lit(_) => self.expect(e, matches!(e.ty, Ty::Int(_) | Ty::Address | Ty::Math), "literal type"),
            Bool(_) => self.want(e, Ty::Bool),
            Unit | AddGas { .. } | MapClear { .. } | Send { .. } | Emit { .. } => self.want(e, Ty::Unit),
            Local(l) => self.want(e, self.locals[*l].ty),
            Let { local, value, body } => {
                self.want(value, self.locals[*local].ty)?;
                self.want(e, body.ty)
            }
            Assign { local, value } => {
                self.expect(e, self.locals[*local].mutable, "assignment to immutable local")?;
                self.want(value, self.locals[*local].ty)?;
                self.want(e, Ty::Unit)
            }
            Seq(es) => self.want(e, es.last().map_or(Ty::Unit, |l| l.ty)),
            If { cond, then, els } => {
                self.want(cond, Ty::Bool)?;
                self.expect(e, then.ty.join(els.ty) == Some(e.ty), "branch types")
            }
            While { cond, body, .. } => {
                self.want(cond, Ty::Bool)?;
                self.expect(body, matches!(body.ty, Ty::Unit | Ty::Never), "loop body must be unit")?;
                self.want(e, Ty::Unit)
            }
            Match { scrutinee, adt, arms } => {
                self.want(scrutinee, Ty::Adt(*adt))?;
                let def = &p.adts[*adt];
                self.expect(e, arms.len() == def.ctors.len(), "arm count")?;
                let mut t = Ty::Never;
                for (arm, c) in arms.iter().zip(&def.ctors) {
                    self.expect(e, arm.binders.len() == c.fields.len(), "binder count")?;
                    for (b, ft) in arm.binders.iter().zip(&c.fields) {
                        if let Some(b) = b {
                            self.expect(e, self.locals[*b].ty == *ft, "binder type")?;
                        }
                    }
                    t = t.join(arm.body.ty).ok_or_else(|| self.err(e, "arm types"))?;
                }
                self.want(e, t)
            }
            Ctor { adt, ctor, args } => {
                let c = &p.adts[*adt].ctors[*ctor];
                self.expect(e, args.iter().map(|a| a.ty).eq(c.fields.iter().copied()), "constructor args")?;
                self.want(e, Ty::Adt(*adt))
            }
            Record { rec, fields } => {
                let r = &p.records[*rec];
                self.expect(e, fields.iter().map(|a| a.ty).eq(r.fields.iter().map(|f| f.ty)), "record fields")?;
                self.want(e, Ty::Record(*rec))
            }
            Field { base, rec, field } => {
                self.want(base, Ty::Record(*rec))?;
                let t = p.records[*rec].fields[*field].ty;
                self.want(e, t)
            }
            SetField { base, rec, field, value } => {
                self.want(base, Ty::Record(*rec))?;
                let fd = &p.records[*rec].fields[*field];
                self.expect(e, fd.mutable, "write to immutable field")?;
                self.want(value, fd.ty)?;
                self.want(e, Ty::Unit)
            }
            GlobalRead { slot } => self.want(e, p.slots[*slot].ty),
            GlobalWrite { slot, value } => {
                self.want(value, p.slots[*slot].ty)?;
                self.want(e, Ty::Unit)
            }
            MapGet { map, key } => {
                let m = &p.maps[*map];
                self.expect(key, key.ty == m.key || key.ty == Ty::Math, "map key")?;
                self.want(e, m.value)
            }
            MapSet { map, key, value } => {
                let m = &p.maps[*map];
                self.want(key, m.key)?;
                self.want(value, m.value)?;
                self.want(e, Ty::Unit)
            }
            MapMem { map, key } => {
                let m = &p.maps[*map];
                self.expect(key, key.ty == m.key || key.ty == Ty::Math, "map key")?;
                self.want(e, Ty::Bool)
            }
            MapSize { .. } => self.want(e, Ty::Int(IntKind::UINT256)),
            Call { func, args } => {
                let f = &p.functions[*func];
                self.expect(e, args.iter().map(|a| a.ty).eq(f.param_types()), "call arguments")?;
                self.want(e, f.ret)
            }
            Arith { lhs, rhs, .. } => {
                self.expect(e, e.ty.is_integral(), "arithmetic on non-integers")?;
                self.want(lhs, e.ty)?;
                self.want(rhs, e.ty)
            }
            Compare { op, lhs, rhs } => {
                self.want(rhs, lhs.ty)?;
                if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    self.expect(lhs, lhs.ty.is_integral(), "ordering on non-integers")?;
                } else {
                    self.expect(lhs, lhs.ty.is_scalar() || lhs.ty == Ty::Math, "equality on non-scalars")?;
                }
                self.want(e, Ty::Bool)
            }
            And(a, b) | Or(a, b) | Implies(a, b) => {
                self.want(a, Ty::Bool)?;
                self.want(b, Ty::Bool)?;
                self.want(e, Ty::Bool)
            }
            Not(a) => {
                self.want(a, Ty::Bool)?;
                self.want(e, Ty::Bool)
            }
            Raise(_) => self.want(e, Ty::Never),
            Caller => self.want(e, Ty::Address),
            CallValue => self.want(e, Ty::Int(IntKind::UINT256)),
            CallData(i) => {
                self.want(i, Ty::Int(IntKind::UINT256))?;
                self.want(e, Ty::Int(IntKind::UINT256))
            }
            Old(a) => self.want(e, a.ty),
            Result => self.want(e, self.ret),
            GasCounter | AllocCounter => self.want(e, Ty::Math),
            LogicCall { func, args } => {
                let l = &p.logic[*func];
                let want: Vec<Ty> = l.params.iter().map(|x| l.locals[*x].ty).collect();
                self.expect(e, args.iter().map(|a| a.ty).eq(want), "logic call arguments")?;
                self.want(e, l.ret)
            }
            ToMath(a) => {
                self.expect(a, matches!(a.ty, Ty::Int(_)), "integer coercion")?;
                self.want(e, Ty::Math)
            }
        }
    }
}
