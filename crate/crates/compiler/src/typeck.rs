//! Type checking and lowering from [`ast`] to [`ir`].

use std::collections::{BTreeSet, HashMap};

use bemp_core::{ArithOp, IntKind};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::ast::{self, BinOp, Decl, ExprKind as A, UnOp, Visibility};
use crate::diag::{rules, CompileError, ErrorKind, Result, Span};
use crate::ir::{self, CmpOp, Expr, ExprKind as I, LocalInfo, Program, Ty};

const BUILTINS: &[&str] =
    &["add_gas", "send", "emit", "guard", "caller", "callvalue", "calldata", "mem", "size", "clear"];

fn type_err(span: Span, msg: impl Into<String>) -> CompileError {
    CompileError::new(ErrorKind::TypeError, span, msg)
}

fn type_rule(rule: &'static str, span: Span, msg: impl Into<String>) -> CompileError {
    CompileError::rule(ErrorKind::TypeError, rule, span, msg)
}

#[derive(Clone, Copy)]
enum TypeName {
    Adt(usize),
    Record(usize),
}

struct Sig {
    params: Vec<Ty>,
    ret: Ty,
}

#[derive(Default)]
struct Env {
    types: HashMap<String, TypeName>,
    ctors: HashMap<String, (usize, usize)>,
    globals: HashMap<String, Vec<(String, usize)>>,
    maps: HashMap<String, usize>,
    exceptions: HashMap<String, usize>,
    events: HashMap<String, usize>,
    modifiers: HashMap<String, (Expr, usize)>,
    funcs: HashMap<String, usize>,
    sigs: Vec<Sig>,
    logic: HashMap<String, usize>,
    logic_sigs: Vec<Sig>,
}

/// Parses, checks and lowers a whole source file.
pub fn compile_source(source: &str) -> Result<Program> {
    let m = crate::parser::parse(source)?;
    check_module(&m)
}

pub fn check_module(m: &ast::Module) -> Result<Program> {
    let mut env = Env::default();
    let mut prog = Program::default();

    // Names are unique per namespace: types, lowercase values, uppercase tags.
    let mut seen_types = BTreeSet::new();
    let mut seen_values: BTreeSet<String> = BUILTINS.iter().map(|s| s.to_string()).collect();
    let mut seen_tags = BTreeSet::new();
    let dup = |span: Span, name: &str| type_err(span, format!("duplicate declaration of {name}"));

    for d in &m.decls {
        match d {
            Decl::Type { name, span, .. } | Decl::Record { name, span, .. } => {
                if !seen_types.insert(name.clone()) || builtin_type(name).is_some() {
                    return Err(dup(*span, name));
                }
                if let Decl::Type { .. } = d {
                    env.types.insert(name.clone(), TypeName::Adt(prog.adts.len()));
                    prog.adts.push(ir::AdtDef { name: name.clone(), ctors: vec![] });
                } else {
                    env.types.insert(name.clone(), TypeName::Record(prog.records.len()));
                    prog.records.push(ir::RecordDef { name: name.clone(), fields: vec![] });
                }
            }
            Decl::Exception { name, span } | Decl::Event { name, span } => {
                if !seen_tags.insert(name.clone()) {
                    return Err(dup(*span, name));
                }
            }
            Decl::Global { name, span, .. }
            | Decl::Map { name, span, .. }
            | Decl::Modifier { name, span, .. }
            | Decl::Logic { name, span, .. } => {
                if !seen_values.insert(name.clone()) {
                    return Err(dup(*span, name));
                }
            }
            Decl::Fun(f) => {
                if !seen_values.insert(f.name.clone()) {
                    return Err(dup(f.span, &f.name));
                }
            }
        }
    }

    for d in &m.decls {
        match d {
            Decl::Type { name, ctors, .. } => {
                let Some(TypeName::Adt(id)) = env.types.get(name).copied() else { unreachable!() };
                let mut defs = Vec::new();
                for c in ctors {
                    if !seen_tags.insert(c.name.clone()) || env.ctors.contains_key(&c.name) {
                        return Err(dup(c.span, &c.name));
                    }
                    let fields = c.args.iter().map(|t| resolve(&env, t, false)).collect::<Result<Vec<_>>>()?;
                    if let Some(bad) = fields.iter().position(|t| *t == Ty::Unit) {
                        return Err(type_err(c.args[bad].span, "constructor fields cannot be unit"));
                    }
                    env.ctors.insert(c.name.clone(), (id, defs.len()));
                    defs.push(ir::CtorDef { name: c.name.clone(), fields });
                }
                prog.adts[id].ctors = defs;
            }
            Decl::Record { name, fields, .. } => {
                let Some(TypeName::Record(id)) = env.types.get(name).copied() else { unreachable!() };
                let mut defs: Vec<ir::FieldDef> = Vec::new();
                for f in fields {
                    if defs.iter().any(|d| d.name == f.name) {
                        return Err(dup(f.span, &f.name));
                    }
                    let ty = resolve(&env, &f.ty, false)?;
                    if ty == Ty::Unit {
                        return Err(type_err(f.ty.span, "record fields cannot be unit"));
                    }
                    defs.push(ir::FieldDef { name: f.name.clone(), ty, mutable: f.mutable });
                }
                prog.records[id].fields = defs;
            }
            _ => {}
        }
    }

    for d in &m.decls {
        match d {
            Decl::Global { name, fields, .. } => {
                let mut slots = Vec::new();
                for f in fields {
                    if slots.iter().any(|(n, _)| n == &f.name) {
                        return Err(dup(f.span, &f.name));
                    }
                    let ty = resolve(&env, &f.ty, false)?;
                    if !ty.is_scalar() {
                        return Err(CompileError::rule(
                            ErrorKind::GlobalShapeError,
                            rules::GLOBAL_FIELDS,
                            f.ty.span,
                            format!("global field {name}.{} must be an integer, found {}", f.name, f.ty.name),
                        ));
                    }
                    slots.push((f.name.clone(), prog.slots.len()));
                    prog.slots.push(ir::GlobalSlot { global: name.clone(), field: f.name.clone(), ty });
                }
                env.globals.insert(name.clone(), slots);
            }
            Decl::Map { name, key, value, .. } => {
                let k = resolve(&env, key, false)?;
                let v = resolve(&env, value, false)?;
                let key_ok = match k {
                    Ty::Address => true,
                    Ty::Int(kind) => !kind.is_signed() && kind.bits() <= 160,
                    _ => false,
                };
                if !key_ok {
                    return Err(CompileError::rule(
                        ErrorKind::GlobalShapeError,
                        rules::GLOBAL_FIELDS,
                        key.span,
                        format!("map keys must be addresses or unsigned integers of at most 160 bits, found {}", key.name),
                    ));
                }
                if !v.is_scalar() {
                    return Err(CompileError::rule(
                        ErrorKind::GlobalShapeError,
                        rules::GLOBAL_FIELDS,
                        value.span,
                        format!("map values must be integers, found {}", value.name),
                    ));
                }
                env.maps.insert(name.clone(), prog.maps.len());
                prog.maps.push(ir::MapDef { name: name.clone(), key: k, value: v });
            }
            Decl::Exception { name, .. } => {
                env.exceptions.insert(name.clone(), prog.exceptions.len());
                prog.exceptions.push(name.clone());
            }
            Decl::Event { name, .. } => {
                env.events.insert(name.clone(), prog.events.len());
                prog.events.push(name.clone());
            }
            Decl::Logic { name, params, ret, .. } => {
                let ps = params.iter().map(|p| resolve(&env, &p.ty, true).map(to_math)).collect::<Result<_>>()?;
                let r = to_math(resolve(&env, ret, true)?);
                env.logic.insert(name.clone(), env.logic_sigs.len());
                env.logic_sigs.push(Sig { params: ps, ret: r });
            }
            Decl::Fun(f) => {
                let ps: Vec<Ty> = f.params.iter().map(|p| resolve(&env, &p.ty, false)).collect::<Result<_>>()?;
                let r = resolve(&env, &f.ret, false)?;
                if let Some(i) = ps.iter().position(|t| *t == Ty::Unit) {
                    return Err(type_err(f.params[i].span, "parameters cannot be unit; use ()"));
                }
                if f.visibility == Visibility::Public {
                    if let Some(i) = ps.iter().position(|t| !t.is_scalar()) {
                        return Err(type_rule(
                            rules::PUBLIC_SIGNATURE,
                            f.params[i].span,
                            "public functions take integer, bool or address parameters",
                        ));
                    }
                    if !(r.is_scalar() || r == Ty::Unit) {
                        return Err(type_rule(
                            rules::PUBLIC_SIGNATURE,
                            f.ret.span,
                            "public functions return unit or a word-sized value",
                        ));
                    }
                }
                env.funcs.insert(f.name.clone(), env.sigs.len());
                env.sigs.push(Sig { params: ps, ret: r });
            }
            _ => {}
        }
    }

    for d in &m.decls {
        if let Decl::Modifier { name, exception, body, span } = d {
            let Some(&exn) = env.exceptions.get(exception) else {
                return Err(type_err(*span, format!("unknown exception {exception}")));
            };
            let mut cx = FnCx::new(&env, &prog, Ty::Bool, Mode::Code);
            let e = cx.value(body, Some(Ty::Bool))?;
            let e = cx.coerce(e, Ty::Bool)?;
            if contains(&e, &|k| is_mutation(k) || matches!(k, I::Raise(_) | I::Call { .. })) {
                return Err(type_err(body.span, "modifier conditions must be side-effect free"));
            }
            env.modifiers.insert(name.clone(), (e, exn));
        }
    }

    for d in &m.decls {
        if let Decl::Logic { name, params, body, .. } = d {
            let id = env.logic[name];
            let ret = env.logic_sigs[id].ret;
            let mut cx = FnCx::new(&env, &prog, ret, Mode::Spec { old: false, result: false });
            let ps = params
                .iter()
                .zip(&env.logic_sigs[id].params)
                .map(|(p, t)| cx.bind(&p.name, *t, false))
                .collect();
            let b = cx.expr(body, Some(ret))?;
            let b = cx.coerce(b, ret)?;
            prog.logic.push(ir::LogicFunction { name: name.clone(), params: ps, ret, locals: cx.locals, body: b });
        }
    }

    for d in &m.decls {
        if let Decl::Fun(f) = d {
            let func = lower_function(&env, &prog, f)?;
            prog.functions.push(func);
        }
    }

    check_raise_discipline(&mut prog)?;
    Ok(prog)
}

fn to_math(t: Ty) -> Ty {
    if let Ty::Int(_) = t {
        Ty::Math
    } else {
        t
    }
}

fn builtin_type(name: &str) -> Option<Ty> {
    match name {
        "bool" => Some(Ty::Bool),
        "unit" => Some(Ty::Unit),
        "address" => Some(Ty::Address),
        "int" => Some(Ty::Math),
        _ => name.parse::<IntKind>().ok().map(Ty::Int),
    }
}

fn resolve(env: &Env, t: &ast::TypeExpr, allow_math: bool) -> Result<Ty> {
    if let Some(ty) = builtin_type(&t.name) {
        if ty == Ty::Math && !allow_math {
            return Err(type_rule(
                rules::SPEC_ONLY,
                t.span,
                "unbounded int is only available in specifications; pick a bounded kind",
            ));
        }
        return Ok(ty);
    }
    match env.types.get(&t.name) {
        Some(TypeName::Adt(a)) => Ok(Ty::Adt(*a)),
        Some(TypeName::Record(r)) => Ok(Ty::Record(*r)),
        None => Err(type_err(t.span, format!("unknown type {}", t.name))),
    }
}

fn lower_function(env: &Env, prog: &Program, f: &ast::FunDecl) -> Result<ir::CoreFunction> {
    let sig = &env.sigs[env.funcs[&f.name]];
    let mut cx = FnCx::new(env, prog, sig.ret, Mode::Code);
    let params: Vec<usize> = f.params.iter().zip(&sig.params).map(|(p, t)| cx.bind(&p.name, *t, false)).collect();
    let mut requires = Vec::new();
    for r in &f.requires {
        requires.push(cx.spec(r, false, false)?);
    }
    let variant = match &f.variant {
        Some(v) => Some(cx.variant(v)?),
        None => None,
    };
    let body = cx.expr(&f.body, Some(sig.ret))?;
    let body = cx.coerce(body, sig.ret)?;
    let mut ensures = Vec::new();
    for e in &f.ensures {
        ensures.push(cx.spec(e, true, true)?);
    }
    Ok(ir::CoreFunction {
        name: f.name.clone(),
        visibility: f.visibility,
        gas_checking: f.gas_checking,
        params,
        ret: sig.ret,
        locals: cx.locals,
        requires,
        ensures,
        variant,
        body,
        raise_sites: vec![],
        mutation_sites: vec![],
        span: f.span,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Code,
    Spec { old: bool, result: bool },
}

struct FnCx<'a> {
    env: &'a Env,
    prog: &'a Program,
    locals: Vec<LocalInfo>,
    scopes: Vec<(String, usize)>,
    ret: Ty,
    mode: Mode,
}

fn is_untyped_literal(e: &ast::Expr) -> bool {
    match &e.kind {
        A::Int(_) => true,
        A::Unary(UnOp::Neg, x) => is_untyped_literal(x),
        _ => false,
    }
}

fn literal_value(e: &ast::Expr) -> Option<BigInt> {
    match &e.kind {
        A::Int(v) => Some(v.clone()),
        A::Unary(UnOp::Neg, x) => literal_value(x).map(|v| -v),
        A::Annot(x, _) => literal_value(x),
        _ => None,
    }
}

impl<'a> FnCx<'a> {
    fn new(env: &'a Env, prog: &'a Program, ret: Ty, mode: Mode) -> Self {
        FnCx { env, prog, locals: vec![], scopes: vec![], ret, mode }
    }

    fn spec_mode(&self) -> bool {
        matches!(self.mode, Mode::Spec { .. })
    }

    fn bind(&mut self, name: &str, ty: Ty, mutable: bool) -> usize {
        let id = self.locals.len();
        self.locals.push(LocalInfo { name: name.to_string(), ty, mutable });
        self.scopes.push((name.to_string(), id));
        id
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes.iter().rev().find(|(n, _)| n == name).map(|(_, id)| *id)
    }

    fn tn(&self, t: Ty) -> String {
        self.prog.ty_name(t)
    }

    fn code_only(&self, span: Span, what: &str) -> Result<()> {
        if self.spec_mode() {
            Err(type_err(span, format!("{what} is not allowed in specifications")))
        } else {
            Ok(())
        }
    }

    fn spec(&mut self, e: &ast::Expr, old: bool, result: bool) -> Result<Expr> {
        let saved = self.mode;
        self.mode = Mode::Spec { old, result };
        let r = self.expr(e, Some(Ty::Bool)).and_then(|x| self.coerce(x, Ty::Bool));
        self.mode = saved;
        r
    }

    fn variant(&mut self, e: &ast::Expr) -> Result<Expr> {
        let saved = self.mode;
        self.mode = Mode::Spec { old: false, result: false };
        let r = self.value(e, Some(Ty::Math));
        self.mode = saved;
        let r = r?;
        if !matches!(r.ty, Ty::Math | Ty::Adt(_)) {
            return Err(type_err(e.span, "variants must be integers or algebraic values"));
        }
        Ok(r)
    }

    /// Checks `e` against `want`, inserting the int-to-math coercion in specs.
    fn coerce(&self, e: Expr, want: Ty) -> Result<Expr> {
        if e.ty == want || e.ty == Ty::Never {
            return Ok(e);
        }
        if want == Ty::Math {
            if let Ty::Int(_) = e.ty {
                let span = e.span;
                return Ok(Expr::new(I::ToMath(Box::new(e)), Ty::Math, span));
            }
        }
        let (a, b) = (self.tn(want), self.tn(e.ty));
        if matches!((want, e.ty), (Ty::Int(_), Ty::Int(_))) {
            Err(type_rule(rules::KIND_MATCH, e.span, format!("expected {a}, found {b}; kinds never mix implicitly")))
        } else {
            Err(type_err(e.span, format!("expected {a}, found {b}")))
        }
    }

    /// An expression whose value is used: `raise` is not allowed here.
    fn value(&mut self, e: &ast::Expr, hint: Option<Ty>) -> Result<Expr> {
        let r = self.expr(e, hint)?;
        if r.ty == Ty::Never {
            return Err(type_err(e.span, "raise cannot be used as a value"));
        }
        Ok(r)
    }

    fn literal(&self, v: BigInt, ty: Ty, span: Span) -> Result<Expr> {
        let ok = match ty {
            Ty::Int(k) => k.contains(&v),
            Ty::Address => !v.is_negative() && v.bits() <= 160,
            Ty::Math => true,
            _ => return Err(type_err(span, format!("integer literal where {} is expected", self.tn(ty)))),
        };
        if !ok {
            return Err(type_err(span, format!("literal {v} is out of range for {}", self.tn(ty))));
        }
        Ok(Expr::new(I::Lit(v), ty, span))
    }

    fn expr(&mut self, e: &ast::Expr, hint: Option<Ty>) -> Result<Expr> {
        let r = self.expr_inner(e, hint)?;
        if self.spec_mode() && matches!(r.ty, Ty::Int(_)) {
            let span = r.span;
            return Ok(Expr::new(I::ToMath(Box::new(r)), Ty::Math, span));
        }
        Ok(r)
    }

    fn expr_inner(&mut self, e: &ast::Expr, hint: Option<Ty>) -> Result<Expr> {
        let span = e.span;
        let mk = |k: I, t: Ty| Expr::new(k, t, span);
        match &e.kind {
            A::Int(v) => match hint {
                Some(t) if t.is_integral() || t == Ty::Address => self.literal(v.clone(), t, span),
                _ if self.spec_mode() => self.literal(v.clone(), Ty::Math, span),
                _ => Err(type_rule(
                    rules::KIND_MATCH,
                    span,
                    format!("cannot infer the integer kind of {v}; annotate it as ({v} : <kind>)"),
                )),
            },
            A::Bool(b) => Ok(mk(I::Bool(*b), Ty::Bool)),
            A::Unit => Ok(mk(I::Unit, Ty::Unit)),
            A::Annot(x, t) => {
                let allow_math = self.spec_mode();
                let ty = resolve(self.env, t, allow_math)?;
                let r = self.expr_inner(x, Some(ty))?;
                self.coerce(r, ty)
            }
            A::Var(x) => self.var(x, span),
            A::App(f, args) => self.app(f, args, hint, span),
            A::Let { name, mutable, value, body } => {
                if *mutable {
                    self.code_only(span, "a mutable binding")?;
                }
                let v = self.value(value, None)?;
                let ty = v.ty;
                let id = self.bind(name, ty, *mutable);
                let b = self.expr(body, hint);
                self.scopes.pop();
                let b = b?;
                let t = b.ty;
                Ok(mk(I::Let { local: id, value: Box::new(v), body: Box::new(b) }, t))
            }
            A::Seq(..) => {
                let mut items = Vec::new();
                let mut cur = e;
                while let A::Seq(a, b) = &cur.kind {
                    items.push(&**a);
                    cur = b;
                }
                items.push(cur);
                let mut out = Vec::new();
                let last = items.len() - 1;
                for (i, it) in items.into_iter().enumerate() {
                    let x = self.expr(it, if i == last { hint } else { Some(Ty::Unit) })?;
                    if i != last && !matches!(x.ty, Ty::Unit | Ty::Never) {
                        return Err(type_err(it.span, format!("discarded value of type {}", self.tn(x.ty))));
                    }
                    out.push(x);
                }
                let t = out.last().unwrap().ty;
                Ok(mk(I::Seq(out), t))
            }
            A::Assign { target, value } => {
                self.code_only(span, "assignment")?;
                self.assign(target, value, span)
            }
            A::If { cond, then, els } => {
                let c = self.value(cond, Some(Ty::Bool))?;
                let c = self.coerce(c, Ty::Bool)?;
                let t = self.expr(then, hint)?;
                let el = match els {
                    Some(x) => self.expr(x, hint.or(Some(t.ty)))?,
                    None => {
                        if !matches!(t.ty, Ty::Unit | Ty::Never) {
                            return Err(type_err(then.span, "if without else must have type unit"));
                        }
                        mk(I::Unit, Ty::Unit)
                    }
                };
                let Some(ty) = t.ty.join(el.ty) else {
                    return Err(type_err(
                        span,
                        format!("branches have different types: {} and {}", self.tn(t.ty), self.tn(el.ty)),
                    ));
                };
                Ok(mk(I::If { cond: Box::new(c), then: Box::new(t), els: Box::new(el) }, ty))
            }
            A::While { cond, invariants, variant, body } => {
                self.code_only(span, "a loop")?;
                let c = self.value(cond, Some(Ty::Bool))?;
                let c = self.coerce(c, Ty::Bool)?;
                let mut invs = Vec::new();
                for i in invariants {
                    invs.push(self.spec(i, true, false)?);
                }
                let v = match variant {
                    Some(v) => Some(Box::new(self.variant(v)?)),
                    None => None,
                };
                let b = self.expr(body, Some(Ty::Unit))?;
                if !matches!(b.ty, Ty::Unit | Ty::Never) {
                    return Err(type_err(body.span, "loop bodies must have type unit"));
                }
                Ok(mk(I::While { cond: Box::new(c), invariants: invs, variant: v, body: Box::new(b) }, Ty::Unit))
            }
            A::Match { scrutinee, arms } => self.matching(scrutinee, arms, hint, span),
            A::Field(base, f) => {
                if let A::Var(g) = &base.kind {
                    if self.lookup(g).is_none() {
                        if let Some(fields) = self.env.globals.get(g) {
                            let Some((_, slot)) = fields.iter().find(|(n, _)| n == f) else {
                                return Err(type_err(span, format!("global {g} has no field {f}")));
                            };
                            return Ok(mk(I::GlobalRead { slot: *slot }, self.prog.slots[*slot].ty));
                        }
                    }
                }
                let b = self.value(base, None)?;
                let Ty::Record(r) = b.ty else {
                    return Err(type_err(base.span, format!("field access on {}", self.tn(b.ty))));
                };
                let Some(i) = self.prog.records[r].fields.iter().position(|d| &d.name == f) else {
                    return Err(type_err(span, format!("record {} has no field {f}", self.tn(b.ty))));
                };
                let ty = self.prog.records[r].fields[i].ty;
                Ok(mk(I::Field { base: Box::new(b), rec: r, field: i }, ty))
            }
            A::Index(m, k) => {
                let map = self.map_name(m)?;
                let key = self.map_key(map, k)?;
                Ok(mk(I::MapGet { map, key: Box::new(key) }, self.prog.maps[map].value))
            }
            A::RecordLit(fields) => self.record_lit(fields, hint, span),
            A::Binary(op, a, b) => self.binary(*op, a, b, hint, span),
            A::Unary(UnOp::Not, x) => {
                let v = self.value(x, Some(Ty::Bool))?;
                let v = self.coerce(v, Ty::Bool)?;
                Ok(mk(I::Not(Box::new(v)), Ty::Bool))
            }
            A::Unary(UnOp::Neg, x) => {
                if is_untyped_literal(e) {
                    let v = literal_value(e).unwrap();
                    return self.expr_inner(&ast::Expr::new(A::Int(v), span), hint);
                }
                let v = self.value(x, hint)?;
                if !v.ty.is_integral() {
                    return Err(type_err(span, format!("negation of {}", self.tn(v.ty))));
                }
                let ty = v.ty;
                let zero = mk(I::Lit(BigInt::zero()), ty);
                Ok(mk(I::Arith { op: ArithOp::Sub, lhs: Box::new(zero), rhs: Box::new(v) }, ty))
            }
            A::Raise(x) => {
                self.code_only(span, "raise")?;
                let Some(&id) = self.env.exceptions.get(x) else {
                    return Err(type_err(span, format!("unknown exception {x}")));
                };
                Ok(mk(I::Raise(id), Ty::Never))
            }
            A::Old(x) => {
                if !matches!(self.mode, Mode::Spec { old: true, .. }) {
                    return Err(type_rule(rules::SPEC_ONLY, span, "old is only available in ensures and invariants"));
                }
                let v = self.value(x, hint)?;
                let ty = v.ty;
                Ok(mk(I::Old(Box::new(v)), ty))
            }
        }
    }

    fn var(&mut self, x: &str, span: Span) -> Result<Expr> {
        if let Some(id) = self.lookup(x) {
            return Ok(Expr::new(I::Local(id), self.locals[id].ty, span));
        }
        if let Mode::Spec { result, .. } = self.mode {
            match x {
                "result" if result => return Ok(Expr::new(I::Result, self.ret, span)),
                "gas" => return Ok(Expr::new(I::GasCounter, Ty::Math, span)),
                "alloc" => return Ok(Expr::new(I::AllocCounter, Ty::Math, span)),
                _ => {}
            }
        } else if matches!(x, "result" | "gas" | "alloc") {
            return Err(type_rule(rules::SPEC_ONLY, span, format!("{x} is only available in specifications")));
        }
        if let Some(&(adt, ctor)) = self.env.ctors.get(x) {
            if !self.prog.adts[adt].ctors[ctor].fields.is_empty() {
                return Err(type_err(span, format!("constructor {x} needs arguments")));
            }
            return Ok(Expr::new(I::Ctor { adt, ctor, args: vec![] }, Ty::Adt(adt), span));
        }
        if self.env.globals.contains_key(x) {
            return Err(type_err(span, format!("global {x} is accessed through its fields")));
        }
        if self.env.funcs.contains_key(x) || self.env.logic.contains_key(x) {
            return Err(type_err(span, format!("function {x} must be applied")));
        }
        Err(type_err(span, format!("unknown identifier {x}")))
    }

    fn map_name(&self, m: &ast::Expr) -> Result<usize> {
        if let A::Var(name) = &m.kind {
            if let Some(&id) = self.env.maps.get(name) {
                return Ok(id);
            }
        }
        Err(type_err(m.span, "expected a storage map name"))
    }

    fn map_key(&mut self, map: usize, k: &ast::Expr) -> Result<Expr> {
        let kt = self.prog.maps[map].key;
        let key = self.value(k, Some(if self.spec_mode() { Ty::Math } else { kt }))?;
        if self.spec_mode() && key.ty == Ty::Math {
            return Ok(key);
        }
        self.coerce(key, kt)
    }

    fn args_exact(&mut self, name: &str, args: &[ast::Expr], want: &[Ty], span: Span) -> Result<Vec<Expr>> {
        let args: &[ast::Expr] = if want.is_empty() && args.len() == 1 && args[0].kind == A::Unit { &[] } else { args };
        if args.len() != want.len() {
            return Err(type_err(span, format!("{name} expects {} argument(s), got {}", want.len(), args.len())));
        }
        let mut out = Vec::new();
        for (a, t) in args.iter().zip(want) {
            let v = self.value(a, Some(*t))?;
            out.push(self.coerce(v, *t)?);
        }
        Ok(out)
    }

    fn app(&mut self, f: &str, args: &[ast::Expr], _hint: Option<Ty>, span: Span) -> Result<Expr> {
        let mk = |k: I, t: Ty| Expr::new(k, t, span);
        if self.lookup(f).is_some() {
            return Err(type_err(span, format!("{f} is a local value, not a function")));
        }
        let u256 = Ty::Int(IntKind::UINT256);
        match f {
            "add_gas" => {
                self.code_only(span, "add_gas")?;
                if args.len() != 2 {
                    return Err(type_err(span, "add_gas expects two arguments"));
                }
                let mut vals = [0u64; 2];
                for (slot, a) in vals.iter_mut().zip(args) {
                    let v = literal_value(a).filter(|v| !v.is_negative()).and_then(|v| v.to_u64());
                    let Some(v) = v else {
                        return Err(type_rule(
                            rules::ADD_GAS_CONSTANT,
                            a.span,
                            "add_gas arguments must be non-negative integer constants",
                        ));
                    };
                    *slot = v;
                }
                return Ok(mk(I::AddGas { used: vals[0], alloc: vals[1] }, Ty::Unit));
            }
            "send" => {
                self.code_only(span, "send")?;
                let a = self.args_exact(f, args, &[Ty::Address, u256], span)?;
                let mut it = a.into_iter();
                let (to, amount) = (it.next().unwrap(), it.next().unwrap());
                return Ok(mk(I::Send { to: Box::new(to), amount: Box::new(amount) }, Ty::Unit));
            }
            "emit" => {
                self.code_only(span, "emit")?;
                let [ev, payload] = args else {
                    return Err(type_err(span, "emit expects an event and a payload"));
                };
                let event = match &ev.kind {
                    A::Var(n) => self.env.events.get(n).copied(),
                    _ => None,
                };
                let Some(event) = event else {
                    return Err(type_err(ev.span, "expected an event name"));
                };
                let p = self.value(payload, Some(u256))?;
                if !p.ty.is_scalar() {
                    return Err(type_err(payload.span, "event payloads are single words"));
                }
                return Ok(mk(I::Emit { event, payload: Box::new(p) }, Ty::Unit));
            }
            "guard" => {
                self.code_only(span, "guard")?;
                let modifier = match args {
                    [ast::Expr { kind: A::Var(n), .. }] => self.env.modifiers.get(n),
                    _ => None,
                };
                let Some((cond, exn)) = modifier else {
                    return Err(type_err(span, "guard expects a modifier name"));
                };
                let fail = mk(I::Raise(*exn), Ty::Never);
                let not = mk(I::Not(Box::new(cond.clone())), Ty::Bool);
                return Ok(mk(
                    I::If { cond: Box::new(not), then: Box::new(fail), els: Box::new(mk(I::Unit, Ty::Unit)) },
                    Ty::Unit,
                ));
            }
            "caller" => {
                self.args_exact(f, args, &[], span)?;
                return Ok(mk(I::Caller, Ty::Address));
            }
            "callvalue" => {
                self.args_exact(f, args, &[], span)?;
                return Ok(mk(I::CallValue, u256));
            }
            "calldata" => {
                self.code_only(span, "calldata")?;
                let mut a = self.args_exact(f, args, &[u256], span)?;
                return Ok(mk(I::CallData(Box::new(a.remove(0))), u256));
            }
            "mem" => {
                let [m, k] = args else {
                    return Err(type_err(span, "mem expects a map and a key"));
                };
                let map = self.map_name(m)?;
                let key = self.map_key(map, k)?;
                return Ok(mk(I::MapMem { map, key: Box::new(key) }, Ty::Bool));
            }
            "size" | "clear" => {
                let [m] = args else {
                    return Err(type_err(span, format!("{f} expects a map")));
                };
                let map = self.map_name(m)?;
                if f == "size" {
                    return Ok(mk(I::MapSize { map }, u256));
                }
                self.code_only(span, "clear")?;
                return Ok(mk(I::MapClear { map }, Ty::Unit));
            }
            _ => {}
        }
        if let Some(&(adt, ctor)) = self.env.ctors.get(f) {
            let want = self.prog.adts[adt].ctors[ctor].fields.clone();
            let a = self.args_exact(f, args, &want, span)?;
            return Ok(mk(I::Ctor { adt, ctor, args: a }, Ty::Adt(adt)));
        }
        if let Some(&id) = self.env.funcs.get(f) {
            self.code_only(span, "calling a program function")?;
            let want = self.env.sigs[id].params.clone();
            let a = self.args_exact(f, args, &want, span)?;
            return Ok(mk(I::Call { func: id, args: a }, self.env.sigs[id].ret));
        }
        if let Some(&id) = self.env.logic.get(f) {
            if !self.spec_mode() {
                return Err(type_rule(rules::SPEC_ONLY, span, format!("{f} is a specification function")));
            }
            let want = self.env.logic_sigs[id].params.clone();
            let a = self.args_exact(f, args, &want, span)?;
            return Ok(mk(I::LogicCall { func: id, args: a }, self.env.logic_sigs[id].ret));
        }
        Err(type_err(span, format!("unknown function {f}")))
    }

    fn assign(&mut self, target: &ast::Expr, value: &ast::Expr, span: Span) -> Result<Expr> {
        let mk = |k: I| Expr::new(k, Ty::Unit, span);
        match &target.kind {
            A::Var(x) => {
                let Some(id) = self.lookup(x) else {
                    return Err(type_err(target.span, format!("unknown local {x}")));
                };
                if !self.locals[id].mutable {
                    return Err(type_err(target.span, format!("{x} is not mutable; bind it with `let mutable`")));
                }
                let t = self.locals[id].ty;
                let v = self.value(value, Some(t))?;
                let v = self.coerce(v, t)?;
                Ok(mk(I::Assign { local: id, value: Box::new(v) }))
            }
            A::Field(base, f) => {
                if let A::Var(g) = &base.kind {
                    if self.lookup(g).is_none() {
                        if let Some(fields) = self.env.globals.get(g) {
                            let Some((_, slot)) = fields.iter().find(|(n, _)| n == f) else {
                                return Err(type_err(target.span, format!("global {g} has no field {f}")));
                            };
                            let t = self.prog.slots[*slot].ty;
                            let v = self.value(value, Some(t))?;
                            let v = self.coerce(v, t)?;
                            return Ok(mk(I::GlobalWrite { slot: *slot, value: Box::new(v) }));
                        }
                    }
                }
                let b = self.value(base, None)?;
                let Ty::Record(r) = b.ty else {
                    return Err(type_err(base.span, format!("field write on {}", self.tn(b.ty))));
                };
                let Some(i) = self.prog.records[r].fields.iter().position(|d| &d.name == f) else {
                    return Err(type_err(target.span, format!("record {} has no field {f}", self.tn(b.ty))));
                };
                let fd = &self.prog.records[r].fields[i];
                if !fd.mutable {
                    return Err(type_err(target.span, format!("field {f} is not mutable")));
                }
                let t = fd.ty;
                let v = self.value(value, Some(t))?;
                let v = self.coerce(v, t)?;
                Ok(mk(I::SetField { base: Box::new(b), rec: r, field: i, value: Box::new(v) }))
            }
            A::Index(m, k) => {
                let map = self.map_name(m)?;
                let key = self.map_key(map, k)?;
                let t = self.prog.maps[map].value;
                let v = self.value(value, Some(t))?;
                let v = self.coerce(v, t)?;
                Ok(mk(I::MapSet { map, key: Box::new(key), value: Box::new(v) }))
            }
            _ => Err(type_err(target.span, "invalid assignment target")),
        }
    }

    fn matching(&mut self, scrutinee: &ast::Expr, arms: &[ast::Arm], hint: Option<Ty>, span: Span) -> Result<Expr> {
        let s = self.value(scrutinee, None)?;
        let Ty::Adt(adt) = s.ty else {
            return Err(type_err(scrutinee.span, format!("match on {}, expected an algebraic type", self.tn(s.ty))));
        };
        let def = &self.prog.adts[adt];
        let mut slots: Vec<Option<ir::MatchArm>> = vec![None; def.ctors.len()];
        let mut ty = Ty::Never;
        for arm in arms {
            let idx = match self.env.ctors.get(&arm.ctor) {
                Some(&(a, c)) if a == adt => c,
                _ => {
                    return Err(type_err(arm.span, format!("{} is not a constructor of {}", arm.ctor, def.name)));
                }
            };
            if slots[idx].is_some() {
                return Err(type_rule(rules::EXHAUSTIVE, arm.span, format!("constructor {} matched twice", arm.ctor)));
            }
            let fields = def.ctors[idx].fields.clone();
            if arm.binders.len() != fields.len() {
                return Err(type_err(
                    arm.span,
                    format!("{} has {} field(s), pattern binds {}", arm.ctor, fields.len(), arm.binders.len()),
                ));
            }
            let depth = self.scopes.len();
            let binders: Vec<Option<usize>> =
                arm.binders.iter().zip(&fields).map(|(b, t)| b.as_ref().map(|n| self.bind(n, *t, false))).collect();
            let body = self.expr(&arm.body, hint.or(Some(ty)).filter(|t| *t != Ty::Never));
            self.scopes.truncate(depth);
            let body = body?;
            ty = ty.join(body.ty).ok_or_else(|| {
                type_err(arm.body.span, format!("match arms have different types: {} and {}", self.tn(ty), self.tn(body.ty)))
            })?;
            slots[idx] = Some(ir::MatchArm { binders, body });
        }
        let def = &self.prog.adts[adt];
        if let Some(missing) = slots.iter().position(Option::is_none) {
            return Err(type_rule(
                rules::EXHAUSTIVE,
                span,
                format!("constructor {} is not matched", def.ctors[missing].name),
            ));
        }
        let arms = slots.into_iter().map(Option::unwrap).collect();
        Ok(Expr::new(I::Match { scrutinee: Box::new(s), adt, arms }, ty, span))
    }

    fn record_lit(&mut self, fields: &[(String, ast::Expr)], hint: Option<Ty>, span: Span) -> Result<Expr> {
        let names: BTreeSet<&str> = fields.iter().map(|(n, _)| n.as_str()).collect();
        if names.len() != fields.len() {
            return Err(type_err(span, "duplicate field in record literal"));
        }
        let fits = |r: usize| {
            let want: BTreeSet<&str> = self.prog.records[r].fields.iter().map(|f| f.name.as_str()).collect();
            want == names
        };
        let rec = match hint {
            Some(Ty::Record(r)) if fits(r) => r,
            _ => {
                let cands: Vec<usize> = (0..self.prog.records.len()).filter(|r| fits(*r)).collect();
                match cands.as_slice() {
                    [r] => *r,
                    [] => return Err(type_err(span, "no record type has exactly these fields")),
                    _ => return Err(type_err(span, "ambiguous record literal; annotate its type")),
                }
            }
        };
        let defs = self.prog.records[rec].fields.clone();
        let mut vals = Vec::new();
        for d in &defs {
            let (_, src) = fields.iter().find(|(n, _)| *n == d.name).unwrap();
            let v = self.value(src, Some(d.ty))?;
            vals.push(self.coerce(v, d.ty)?);
        }
        Ok(Expr::new(I::Record { rec, fields: vals }, Ty::Record(rec), span))
    }

    fn pair(&mut self, a: &ast::Expr, b: &ast::Expr, hint: Option<Ty>) -> Result<(Expr, Expr)> {
        let (l, r) = if let Some(h) = hint {
            let l = self.value(a, Some(h))?;
            let r = self.value(b, Some(l.ty))?;
            (l, r)
        } else if !is_untyped_literal(a) {
            let l = self.value(a, None)?;
            let r = self.value(b, Some(l.ty))?;
            (l, r)
        } else if !is_untyped_literal(b) {
            let r = self.value(b, None)?;
            let l = self.value(a, Some(r.ty))?;
            (l, r)
        } else {
            let l = self.value(a, None)?;
            let r = self.value(b, Some(l.ty))?;
            (l, r)
        };
        if l.ty == r.ty {
            return Ok((l, r));
        }
        if self.spec_mode() && l.ty.is_integral() && r.ty.is_integral() {
            return Ok((self.coerce(l, Ty::Math)?, self.coerce(r, Ty::Math)?));
        }
        let msg = format!("operands have types {} and {}", self.tn(l.ty), self.tn(r.ty));
        if matches!((l.ty, r.ty), (Ty::Int(_), Ty::Int(_))) {
            Err(type_rule(rules::KIND_MATCH, b.span, msg))
        } else {
            Err(type_err(b.span, msg))
        }
    }

    fn binary(&mut self, op: BinOp, a: &ast::Expr, b: &ast::Expr, hint: Option<Ty>, span: Span) -> Result<Expr> {
        let mk = |k: I, t: Ty| Expr::new(k, t, span);
        match op {
            BinOp::And | BinOp::Or | BinOp::Implies => {
                if op == BinOp::Implies && !self.spec_mode() {
                    return Err(type_rule(rules::SPEC_ONLY, span, "implication is only available in specifications"));
                }
                let l = self.value(a, Some(Ty::Bool))?;
                let l = self.coerce(l, Ty::Bool)?;
                let r = self.value(b, Some(Ty::Bool))?;
                let r = self.coerce(r, Ty::Bool)?;
                let (l, r) = (Box::new(l), Box::new(r));
                Ok(mk(
                    match op {
                        BinOp::And => I::And(l, r),
                        BinOp::Or => I::Or(l, r),
                        _ => I::Implies(l, r),
                    },
                    Ty::Bool,
                ))
            }
            _ if op.is_arith() => {
                let h = hint.filter(|t| t.is_integral());
                let (l, r) = self.pair(a, b, h)?;
                if !l.ty.is_integral() {
                    return Err(type_err(a.span, format!("arithmetic on {}", self.tn(l.ty))));
                }
                let aop = match op {
                    BinOp::Add => ArithOp::Add,
                    BinOp::Sub => ArithOp::Sub,
                    BinOp::Mul => ArithOp::Mul,
                    BinOp::Div => ArithOp::Div,
                    _ => ArithOp::Rem,
                };
                let ty = l.ty;
                Ok(mk(I::Arith { op: aop, lhs: Box::new(l), rhs: Box::new(r) }, ty))
            }
            _ => {
                let (l, r) = self.pair(a, b, None)?;
                let cop = match op {
                    BinOp::Eq => CmpOp::Eq,
                    BinOp::Ne => CmpOp::Ne,
                    BinOp::Lt => CmpOp::Lt,
                    BinOp::Le => CmpOp::Le,
                    BinOp::Gt => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                if matches!(cop, CmpOp::Eq | CmpOp::Ne) {
                    if !(l.ty.is_scalar() || l.ty == Ty::Math) {
                        return Err(type_err(span, format!("equality on {}", self.tn(l.ty))));
                    }
                } else if !l.ty.is_integral() {
                    return Err(type_err(span, format!("ordering on {}", self.tn(l.ty))));
                }
                Ok(mk(I::Compare { op: cop, lhs: Box::new(l), rhs: Box::new(r) }, Ty::Bool))
            }
        }
    }
}

fn is_mutation(k: &I) -> bool {
    matches!(k, I::GlobalWrite { .. } | I::MapSet { .. } | I::MapClear { .. } | I::Send { .. } | I::Emit { .. })
}

fn contains(e: &Expr, pred: &dyn Fn(&I) -> bool) -> bool {
    pred(&e.kind) || e.children().into_iter().any(|c| contains(c, pred))
}

fn calls(e: &Expr, out: &mut Vec<usize>) {
    if let I::Call { func, .. } = &e.kind {
        out.push(*func);
    }
    for c in e.children() {
        calls(c, out);
    }
}

/// Effect summaries: (may raise, may mutate persistent state), closed under calls.
pub fn effect_summaries(p: &Program) -> (Vec<bool>, Vec<bool>) {
    let n = p.functions.len();
    let mut raise: Vec<bool> = p.functions.iter().map(|f| contains(&f.body, &|k| matches!(k, I::Raise(_)))).collect();
    let mut mutate: Vec<bool> = p.functions.iter().map(|f| contains(&f.body, &is_mutation)).collect();
    let callees: Vec<Vec<usize>> = p
        .functions
        .iter()
        .map(|f| {
            let mut v = Vec::new();
            calls(&f.body, &mut v);
            v
        })
        .collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for &c in &callees[i] {
                if raise[c] && !raise[i] {
                    raise[i] = true;
                    changed = true;
                }
                if mutate[c] && !mutate[i] {
                    mutate[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return (raise, mutate);
        }
    }
}

struct Discipline<'a> {
    may_raise: &'a [bool],
    may_mutate: &'a [bool],
    public: bool,
    raises: Vec<Span>,
    mutations: Vec<Span>,
}

impl Discipline<'_> {
    fn raise_site(&mut self, span: Span, mutated: bool) -> Result<()> {
        if !self.public {
            return Err(CompileError::rule(
                ErrorKind::RaiseDisciplineError,
                rules::RAISE_IN_PRIVATE,
                span,
                "private functions cannot raise; state the condition as a precondition",
            ));
        }
        if mutated {
            return Err(CompileError::rule(
                ErrorKind::RaiseDisciplineError,
                rules::RAISE_AFTER_MUTATION,
                span,
                "raise may happen after a mutation of persistent state",
            ));
        }
        self.raises.push(span);
        Ok(())
    }

    /// Walks `e` in evaluation order; returns whether state may be mutated after it.
    fn walk(&mut self, e: &Expr, mutated: bool) -> Result<bool> {
        match &e.kind {
            I::If { cond, then, els } => {
                let m = self.walk(cond, mutated)?;
                let a = self.walk(then, m)?;
                let b = self.walk(els, m)?;
                Ok(a || b)
            }
            I::Match { scrutinee, arms, .. } => {
                let m = self.walk(scrutinee, mutated)?;
                let mut out = m;
                for arm in arms {
                    out |= self.walk(&arm.body, m)?;
                }
                Ok(out)
            }
            I::While { cond, body, .. } => {
                let mut m = mutated;
                for _ in 0..2 {
                    m = self.walk(cond, m)?;
                    m = self.walk(body, m)?;
                    m = self.walk(cond, m)? || m;
                }
                Ok(m)
            }
            I::And(a, b) | I::Or(a, b) => {
                let m = self.walk(a, mutated)?;
                let m2 = self.walk(b, m)?;
                Ok(m || m2)
            }
            I::Raise(_) => {
                self.raise_site(e.span, mutated)?;
                Ok(mutated)
            }
            _ => {
                let mut m = mutated;
                for c in e.children() {
                    m = self.walk(c, m)?;
                }
                if let I::Call { func, .. } = &e.kind {
                    if self.may_raise[*func] {
                        self.raise_site(e.span, m)?;
                    }
                    if self.may_mutate[*func] {
                        self.mutations.push(e.span);
                        m = true;
                    }
                }
                if is_mutation(&e.kind) {
                    self.mutations.push(e.span);
                    m = true;
                }
                Ok(m)
            }
        }
    }
}

fn check_raise_discipline(p: &mut Program) -> Result<()> {
    let (may_raise, may_mutate) = effect_summaries(p);
    for f in &mut p.functions {
        let mut d = Discipline {
            may_raise: &may_raise,
            may_mutate: &may_mutate,
            public: f.visibility == Visibility::Public,
            raises: vec![],
            mutations: vec![],
        };
        d.walk(&f.body, false)?;
        f.raise_sites = d.raises;
        f.mutation_sites = d.mutations;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(src: &str) -> CompileError {
        compile_source(src).unwrap_err()
    }

    #[test]
    fn raise_in_private_is_rejected() {
        let e = err("exception E\nlet private f () : unit = raise E");
        assert_eq!(e.kind, ErrorKind::RaiseDisciplineError);
        assert_eq!(e.rule, Some(rules::RAISE_IN_PRIVATE));
    }

    #[test]
    fn raise_after_global_write_is_rejected() {
        let e = err(
            "exception E\nglobal G = { x : uint64 }\n\
             let public f () : unit = G.x <- (1 : uint64); if G.x > (3 : uint64) then raise E",
        );
        assert_eq!(e.kind, ErrorKind::RaiseDisciplineError);
        assert_eq!(e.rule, Some(rules::RAISE_AFTER_MUTATION));
    }

    #[test]
    fn raise_before_write_is_accepted() {
        let p = compile_source(
            "exception E\nglobal G = { x : uint64 }\n\
             let public f (v : uint64) : unit = if v > 3 then raise E; G.x <- v",
        )
        .unwrap();
        assert_eq!(p.functions[0].raise_sites.len(), 1);
        assert_eq!(p.functions[0].mutation_sites.len(), 1);
    }

    #[test]
    fn adt_global_field_is_a_shape_error() {
        let e = err("type t = A | B\nglobal G = { x : t }");
        assert_eq!(e.kind, ErrorKind::GlobalShapeError);
        assert_eq!(e.rule, Some(rules::GLOBAL_FIELDS));
    }

    #[test]
    fn kinds_never_mix() {
        let e = err("let f (a : uint32) (b : uint64) : uint64 = a + b");
        assert_eq!(e.kind, ErrorKind::TypeError);
        assert_eq!(e.rule, Some(rules::KIND_MATCH));
    }

    #[test]
    fn literals_take_the_kind_of_their_context() {
        let p = compile_source("let f (a : int32) : int32 = 1 + a * -2").unwrap();
        ir::recheck(&p).unwrap();
    }

    #[test]
    fn literal_range_is_checked() {
        let e = err("let f (a : uint32) : uint32 = a + 4294967296");
        assert!(e.message.contains("out of range"), "{e}");
    }

    #[test]
    fn missing_constructor_is_reported() {
        let e = err("type t = A | B\nlet f (x : t) : bool = match x with A -> true end");
        assert_eq!(e.rule, Some(rules::EXHAUSTIVE));
    }

    #[test]
    fn logic_functions_stay_in_specs() {
        let e = err("function two () : int = 2\nlet f () : bool = two () = 2");
        assert_eq!(e.rule, Some(rules::SPEC_ONLY));
    }

    #[test]
    fn add_gas_needs_constants() {
        let e = err("let f (n : uint32) : unit = add_gas n 0");
        assert_eq!(e.rule, Some(rules::ADD_GAS_CONSTANT));
    }

    #[test]
    fn specs_use_unbounded_ints() {
        let p = compile_source(
            "let f (a : uint32) : uint32 requires { a + 4294967296 > 0 } ensures { result = a } = a",
        )
        .unwrap();
        ir::recheck(&p).unwrap();
    }
}
