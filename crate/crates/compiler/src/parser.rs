//! Recursive-descent parser producing [`ast::Module`].
//!
//! Out-of-subset constructs (try/with, closures, references, strings, type
//! variables, nested patterns...) are recognized here and rejected with the
//! name of the rule they break.

use std::collections::BTreeSet;

use crate::ast::*;
use crate::diag::{rules, CompileError, ErrorKind, Result, Span};
use crate::lexer::{tokenize, Kw, Sym, Tok, Token};

pub fn parse(source: &str) -> Result<Module> {
    Parser::new(tokenize(source)?).module()
}

pub fn parse_tokens(tokens: Vec<Token>) -> Result<Module> {
    Parser::new(tokens).module()
}

/// Parses a single expression (used by tests and the printer round trip).
pub fn parse_expr(source: &str) -> Result<Expr> {
    let mut p = Parser::new(tokenize(source)?);
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Token descriptions tried at the current position since the last bump.
    expected: BTreeSet<String>,
}

fn reject(rule: &'static str, span: Span, msg: &str) -> CompileError {
    CompileError::rule(ErrorKind::ParseError, rule, span, msg)
}

fn is_upper(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, expected: BTreeSet::new() }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn at(&mut self, t: &Tok) -> bool {
        self.expected.insert(t.to_string());
        self.peek() == t
    }

    fn at_kw(&mut self, k: Kw) -> bool {
        self.at(&Tok::Kw(k))
    }

    fn at_sym(&mut self, s: Sym) -> bool {
        self.at(&Tok::Sym(s))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_sym(&mut self, s: Sym) -> bool {
        self.eat(&Tok::Sym(s))
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        self.eat(&Tok::Kw(k))
    }

    fn expect(&mut self, t: &Tok) -> Result<Span> {
        if self.at(t) {
            Ok(self.bump().span)
        } else {
            Err(self.error())
        }
    }

    fn expect_sym(&mut self, s: Sym) -> Result<Span> {
        self.expect(&Tok::Sym(s))
    }

    fn expect_kw(&mut self, k: Kw) -> Result<Span> {
        self.expect(&Tok::Kw(k))
    }

    fn error(&self) -> CompileError {
        let found = self.peek().to_string();
        let expected: Vec<&str> = self.expected.iter().map(String::as_str).collect();
        CompileError::new(
            ErrorKind::ParseError,
            self.span(),
            format!("expected one of {{{}}}, found {found}", expected.join(", ")),
        )
    }

    fn ident(&mut self) -> Result<(String, Span)> {
        self.expected.insert("IDENT".into());
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => Err(self.error()),
        }
    }

    fn upper_ident(&mut self, what: &str) -> Result<(String, Span)> {
        let (name, span) = self.ident()?;
        if !is_upper(&name) {
            return Err(CompileError::new(
                ErrorKind::ParseError,
                span,
                format!("{what} names must start with an uppercase letter: {name}"),
            ));
        }
        Ok((name, span))
    }

    fn module(&mut self) -> Result<Module> {
        let mut decls = Vec::new();
        if self.at(&Tok::Eof) {
            return Err(CompileError::new(ErrorKind::ParseError, self.span(), "expected at least one declaration"));
        }
        while !self.at(&Tok::Eof) {
            decls.push(self.decl()?);
        }
        Ok(Module { decls })
    }

    fn decl(&mut self) -> Result<Decl> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Kw(Kw::Type) => {
                self.bump();
                if let Tok::TyVar(_) = self.peek() {
                    return Err(reject(rules::NO_POLYMORPHISM, self.span(), "type parameters are not supported"));
                }
                let (name, _) = self.ident()?;
                if let Tok::TyVar(_) = self.peek() {
                    return Err(reject(rules::NO_POLYMORPHISM, self.span(), "type parameters are not supported"));
                }
                self.expect_sym(Sym::Eq)?;
                self.eat_sym(Sym::Bar);
                let mut ctors = vec![self.ctor_decl()?];
                while self.eat_sym(Sym::Bar) {
                    ctors.push(self.ctor_decl()?);
                }
                Ok(Decl::Type { name, ctors, span })
            }
            Tok::Kw(Kw::Record) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect_sym(Sym::Eq)?;
                let fields = self.field_decls()?;
                Ok(Decl::Record { name, fields, span })
            }
            Tok::Kw(Kw::Global) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect_sym(Sym::Eq)?;
                let fields = self.field_decls()?;
                Ok(Decl::Global { name, fields, span })
            }
            Tok::Kw(Kw::Map) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect_sym(Sym::Colon)?;
                let key = self.type_expr()?;
                self.expect_sym(Sym::FatArrow)?;
                let value = self.type_expr()?;
                Ok(Decl::Map { name, key, value, span })
            }
            Tok::Kw(Kw::Exception) => {
                self.bump();
                let (name, _) = self.upper_ident("exception")?;
                if self.at_kw(Kw::Of) {
                    return Err(reject(rules::EXCEPTION_PAYLOAD, self.span(), "exceptions carry no payload"));
                }
                Ok(Decl::Exception { name, span })
            }
            Tok::Kw(Kw::Event) => {
                self.bump();
                let (name, _) = self.upper_ident("event")?;
                Ok(Decl::Event { name, span })
            }
            Tok::Kw(Kw::Modifier) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect_kw(Kw::Raises)?;
                let (exception, _) = self.upper_ident("exception")?;
                self.expect_sym(Sym::Eq)?;
                let body = self.expr()?;
                Ok(Decl::Modifier { name, exception, body, span })
            }
            Tok::Kw(Kw::Function) => {
                self.bump();
                let (name, _) = self.ident()?;
                let params = self.params()?;
                self.expect_sym(Sym::Colon)?;
                let ret = self.type_expr()?;
                self.expect_sym(Sym::Eq)?;
                let body = self.expr()?;
                Ok(Decl::Logic { name, params, ret, body, span })
            }
            Tok::Kw(Kw::Let) => {
                self.bump();
                self.fun_decl(span).map(Decl::Fun)
            }
            Tok::Kw(Kw::Module | Kw::Use | Kw::Open) => {
                Err(reject(rules::NO_MODULES, span, "modules and imports are not supported"))
            }
            _ => {
                for k in [Kw::Type, Kw::Record, Kw::Global, Kw::Map, Kw::Exception, Kw::Event, Kw::Modifier, Kw::Function, Kw::Let] {
                    self.at_kw(k);
                }
                Err(self.error())
            }
        }
    }

    fn ctor_decl(&mut self) -> Result<CtorDecl> {
        let (name, span) = self.upper_ident("constructor")?;
        let mut args = Vec::new();
        loop {
            match self.peek() {
                Tok::Ident(_) => args.push(self.type_atom()?),
                Tok::TyVar(_) => {
                    return Err(reject(rules::NO_POLYMORPHISM, self.span(), "type variables are not supported"))
                }
                Tok::Sym(Sym::LParen) => {
                    self.bump();
                    args.push(self.type_expr()?);
                    self.expect_sym(Sym::RParen)?;
                }
                _ => break,
            }
        }
        Ok(CtorDecl { name, args, span })
    }

    fn field_decls(&mut self) -> Result<Vec<FieldDecl>> {
        self.expect_sym(Sym::LBrace)?;
        let mut fields = Vec::new();
        while !self.at_sym(Sym::RBrace) {
            let span = self.span();
            let mutable = self.eat_kw(Kw::Mutable);
            let (name, _) = self.ident()?;
            self.expect_sym(Sym::Colon)?;
            let ty = self.type_expr()?;
            fields.push(FieldDecl { name, ty, mutable, span });
            if !self.eat_sym(Sym::Semi) {
                break;
            }
        }
        self.expect_sym(Sym::RBrace)?;
        Ok(fields)
    }

    fn type_atom(&mut self) -> Result<TypeExpr> {
        if let Tok::TyVar(_) = self.peek() {
            return Err(reject(rules::NO_POLYMORPHISM, self.span(), "type variables are not supported"));
        }
        let (name, span) = self.ident()?;
        Ok(TypeExpr { name, span })
    }

    fn type_expr(&mut self) -> Result<TypeExpr> {
        if self.eat_sym(Sym::LParen) {
            let t = self.type_expr()?;
            self.expect_sym(Sym::RParen)?;
            return Ok(t);
        }
        let t = self.type_atom()?;
        let applied = match self.peek() {
            Tok::TyVar(_) => true,
            Tok::Ident(_) => matches!(
                self.peek_at(1),
                Tok::Sym(Sym::RParen | Sym::Semi | Sym::RBrace | Sym::Eq | Sym::FatArrow)
            ),
            _ => false,
        };
        if applied {
            return Err(reject(rules::NO_POLYMORPHISM, self.span(), "type application is not supported"));
        }
        Ok(t)
    }

    fn params(&mut self) -> Result<Vec<Param>> {
        let mut params = Vec::new();
        if self.at_sym(Sym::LParen) && self.peek_at(1) == &Tok::Sym(Sym::RParen) {
            self.bump();
            self.bump();
            return Ok(params);
        }
        while self.at_sym(Sym::LParen) {
            let span = self.bump().span;
            let (name, _) = self.ident()?;
            self.expect_sym(Sym::Colon)?;
            let ty = self.type_expr()?;
            self.expect_sym(Sym::RParen)?;
            params.push(Param { name, ty, span });
        }
        if params.is_empty() {
            return Err(self.error());
        }
        Ok(params)
    }

    fn braced(&mut self) -> Result<Expr> {
        self.expect_sym(Sym::LBrace)?;
        let e = self.expr()?;
        self.expect_sym(Sym::RBrace)?;
        Ok(e)
    }

    fn fun_decl(&mut self, span: Span) -> Result<FunDecl> {
        let recursive = self.eat_kw(Kw::Rec);
        let visibility = if self.eat_kw(Kw::Public) {
            Visibility::Public
        } else {
            self.eat_kw(Kw::Private);
            Visibility::Private
        };
        let (name, _) = self.ident()?;
        let mut gas_checking = false;
        while self.eat_sym(Sym::LBracket) {
            self.expect_sym(Sym::At)?;
            let (attr, aspan) = self.ident()?;
            if attr != "gas_checking" {
                return Err(CompileError::new(ErrorKind::ParseError, aspan, format!("unknown attribute {attr}")));
            }
            gas_checking = true;
            self.expect_sym(Sym::RBracket)?;
        }
        let params = self.params()?;
        self.expect_sym(Sym::Colon)?;
        let ret = self.type_expr()?;
        let (mut requires, mut ensures, mut variant) = (Vec::new(), Vec::new(), None);
        loop {
            if self.eat_kw(Kw::Requires) {
                requires.push(self.braced()?);
            } else if self.eat_kw(Kw::Ensures) {
                ensures.push(self.braced()?);
            } else if self.at_kw(Kw::Variant) {
                let vspan = self.bump().span;
                if variant.is_some() {
                    return Err(CompileError::new(ErrorKind::ParseError, vspan, "duplicate variant clause"));
                }
                variant = Some(self.braced()?);
            } else {
                break;
            }
        }
        self.expect_sym(Sym::Eq)?;
        let body = self.expr()?;
        Ok(FunDecl { name, recursive, visibility, gas_checking, params, ret, requires, ensures, variant, body, span })
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr> {
        let first = self.stmt()?;
        if self.eat_sym(Sym::Semi) {
            if self.at_closer() {
                return Ok(first);
            }
            let rest = self.expr()?;
            let span = first.span;
            return Ok(Expr::new(ExprKind::Seq(Box::new(first), Box::new(rest)), span));
        }
        Ok(first)
    }

    fn at_closer(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Eof
                | Tok::Kw(Kw::End | Kw::Done | Kw::In | Kw::Then | Kw::Else | Kw::With | Kw::Do)
                | Tok::Sym(Sym::RParen | Sym::RBrace | Sym::RBracket | Sym::Bar)
        )
    }

    fn stmt(&mut self) -> Result<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Kw(Kw::Let) => {
                self.bump();
                if self.at_kw(Kw::Rec) {
                    return Err(reject(rules::NO_CLOSURES, span, "local functions are not supported"));
                }
                let mutable = self.eat_kw(Kw::Mutable);
                let (name, _) = self.ident()?;
                if !self.at_sym(Sym::Eq) && !self.at_sym(Sym::Colon) {
                    return Err(reject(rules::NO_CLOSURES, span, "local functions are not supported"));
                }
                let value = if self.eat_sym(Sym::Colon) {
                    let ty = self.type_expr()?;
                    self.expect_sym(Sym::Eq)?;
                    let v = self.expr()?;
                    let vs = v.span;
                    Expr::new(ExprKind::Annot(Box::new(v), ty), vs)
                } else {
                    self.expect_sym(Sym::Eq)?;
                    self.expr()?
                };
                self.expect_kw(Kw::In)?;
                let body = self.expr()?;
                Ok(Expr::new(ExprKind::Let { name, mutable, value: Box::new(value), body: Box::new(body) }, span))
            }
            Tok::Kw(Kw::If) => {
                self.bump();
                let cond = self.expr()?;
                self.expect_kw(Kw::Then)?;
                let then = self.stmt()?;
                let els = if self.eat_kw(Kw::Else) { Some(Box::new(self.stmt()?)) } else { None };
                Ok(Expr::new(ExprKind::If { cond: Box::new(cond), then: Box::new(then), els }, span))
            }
            Tok::Kw(Kw::While) => {
                self.bump();
                let cond = self.expr()?;
                self.expect_kw(Kw::Do)?;
                let mut invariants = Vec::new();
                let mut variant = None;
                loop {
                    if self.eat_kw(Kw::Invariant) {
                        invariants.push(self.braced()?);
                    } else if self.eat_kw(Kw::Variant) {
                        variant = Some(Box::new(self.braced()?));
                    } else {
                        break;
                    }
                }
                let body = self.expr()?;
                self.expect_kw(Kw::Done)?;
                Ok(Expr::new(ExprKind::While { cond: Box::new(cond), invariants, variant, body: Box::new(body) }, span))
            }
            Tok::Kw(Kw::Match) => {
                self.bump();
                let scrutinee = self.expr()?;
                self.expect_kw(Kw::With)?;
                self.eat_sym(Sym::Bar);
                let mut arms = vec![self.arm()?];
                while self.eat_sym(Sym::Bar) {
                    arms.push(self.arm()?);
                }
                self.expect_kw(Kw::End)?;
                Ok(Expr::new(ExprKind::Match { scrutinee: Box::new(scrutinee), arms }, span))
            }
            Tok::Kw(Kw::Raise) => {
                self.bump();
                if self.at_sym(Sym::LParen) {
                    return Err(reject(rules::EXCEPTION_PAYLOAD, self.span(), "raise takes a bare exception name"));
                }
                let (name, _) = self.upper_ident("exception")?;
                if matches!(self.peek(), Tok::Int(_) | Tok::Ident(_) | Tok::Sym(Sym::LParen)) {
                    return Err(reject(rules::EXCEPTION_PAYLOAD, self.span(), "exceptions carry no payload"));
                }
                Ok(Expr::new(ExprKind::Raise(name), span))
            }
            _ => self.assign(),
        }
    }

    fn arm(&mut self) -> Result<Arm> {
        let span = self.span();
        if let Tok::Ident(s) = self.peek() {
            if s == "_" {
                return Err(reject(rules::EXHAUSTIVE, span, "wildcard arms are not supported; list every constructor"));
            }
        }
        let (ctor, _) = self.upper_ident("constructor")?;
        let mut binders = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(s) if is_upper(&s) => {
                    return Err(reject(rules::NON_NESTED, self.span(), "nested patterns are not supported"));
                }
                Tok::Ident(s) => {
                    self.bump();
                    binders.push(if s == "_" { None } else { Some(s) });
                }
                Tok::Sym(Sym::LParen) | Tok::Int(_) | Tok::Kw(Kw::True | Kw::False) => {
                    return Err(reject(rules::NON_NESTED, self.span(), "nested patterns are not supported"));
                }
                _ => break,
            }
        }
        self.expect_sym(Sym::Arrow)?;
        let body = self.expr()?;
        Ok(Arm { ctor, binders, body, span })
    }

    fn assign(&mut self) -> Result<Expr> {
        let lhs = self.implies()?;
        if self.at_sym(Sym::ColonEq) {
            return Err(reject(rules::NO_REFS, self.span(), "references are not supported; use `let mutable`"));
        }
        if self.eat_sym(Sym::LArrow) {
            if !matches!(lhs.kind, ExprKind::Var(_) | ExprKind::Field(..) | ExprKind::Index(..)) {
                return Err(CompileError::new(ErrorKind::ParseError, lhs.span, "invalid assignment target"));
            }
            let value = self.implies()?;
            let span = lhs.span;
            return Ok(Expr::new(ExprKind::Assign { target: Box::new(lhs), value: Box::new(value) }, span));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Expr> {
        let lhs = self.or()?;
        if self.eat_sym(Sym::Arrow) {
            let rhs = self.implies()?;
            let span = lhs.span;
            return Ok(Expr::new(ExprKind::Binary(BinOp::Implies, Box::new(lhs), Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr> {
        let mut lhs = self.and()?;
        while self.eat_sym(Sym::OrOr) || self.eat_sym(Sym::Disj) {
            let rhs = self.and()?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut lhs = self.not()?;
        while self.eat_sym(Sym::AndAnd) || self.eat_sym(Sym::Conj) {
            let rhs = self.not()?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr> {
        let span = self.span();
        if self.eat_kw(Kw::Not) {
            let e = self.not()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Sym(Sym::Eq) => BinOp::Eq,
            Tok::Sym(Sym::Ne) => BinOp::Ne,
            Tok::Sym(Sym::Lt) => BinOp::Lt,
            Tok::Sym(Sym::Le) => BinOp::Le,
            Tok::Sym(Sym::Gt) => BinOp::Gt,
            Tok::Sym(Sym::Ge) => BinOp::Ge,
            _ => {
                for s in [Sym::Eq, Sym::Ne, Sym::Lt, Sym::Le, Sym::Gt, Sym::Ge] {
                    self.at_sym(s);
                }
                return Ok(lhs);
            }
        };
        self.bump();
        let rhs = self.additive()?;
        let span = lhs.span;
        Ok(Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span))
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.eat_sym(Sym::Plus) {
                BinOp::Add
            } else if self.eat_sym(Sym::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.multiplicative()?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym(Sym::Star) {
                BinOp::Mul
            } else if self.eat_sym(Sym::Slash) {
                BinOp::Div
            } else if self.eat_sym(Sym::Percent) {
                BinOp::Mod
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        let span = self.span();
        if self.eat_sym(Sym::Minus) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        if self.eat_kw(Kw::Old) {
            let e = self.postfix()?;
            return Ok(Expr::new(ExprKind::Old(Box::new(e)), span));
        }
        self.application()
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Int(_)
                | Tok::Ident(_)
                | Tok::Str(_)
                | Tok::Float(_)
                | Tok::Kw(Kw::True | Kw::False | Kw::Begin | Kw::Ref | Kw::Fun | Kw::Try | Kw::For)
                | Tok::Sym(Sym::LParen | Sym::LBrace | Sym::Bang)
        )
    }

    fn application(&mut self) -> Result<Expr> {
        let head = self.postfix()?;
        if !self.starts_atom() {
            return Ok(head);
        }
        let ExprKind::Var(name) = &head.kind else {
            return Err(CompileError::new(ErrorKind::ParseError, head.span, "only named functions can be applied"));
        };
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.postfix()?);
        }
        Ok(Expr::new(ExprKind::App(name.clone(), args), head.span))
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_sym(Sym::Dot) {
                let (f, _) = self.ident()?;
                let span = e.span;
                e = Expr::new(ExprKind::Field(Box::new(e), f), span);
            } else if self.eat_sym(Sym::LBracket) {
                let k = self.expr()?;
                self.expect_sym(Sym::RBracket)?;
                let span = e.span;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(k)), span);
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let span = self.span();
        self.expected.insert("expression".into());
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), span))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Var(s), span))
            }
            Tok::Kw(Kw::True) => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(true), span))
            }
            Tok::Kw(Kw::False) => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(false), span))
            }
            Tok::Sym(Sym::LParen) => {
                self.bump();
                if self.eat_sym(Sym::RParen) {
                    return Ok(Expr::new(ExprKind::Unit, span));
                }
                let e = self.expr()?;
                if self.eat_sym(Sym::Colon) {
                    let ty = self.type_expr()?;
                    self.expect_sym(Sym::RParen)?;
                    return Ok(Expr::new(ExprKind::Annot(Box::new(e), ty), span));
                }
                self.expect_sym(Sym::RParen)?;
                Ok(e)
            }
            Tok::Kw(Kw::Begin) => {
                self.bump();
                let e = self.expr()?;
                self.expect_kw(Kw::End)?;
                Ok(e)
            }
            Tok::Sym(Sym::LBrace) => {
                self.bump();
                let mut fields = Vec::new();
                loop {
                    let (f, _) = self.ident()?;
                    if self.at_kw(Kw::With) {
                        return Err(CompileError::new(
                            ErrorKind::ParseError,
                            self.span(),
                            "record update syntax is not supported",
                        ));
                    }
                    self.expect_sym(Sym::Eq)?;
                    let v = self.stmt()?;
                    fields.push((f, v));
                    if !self.eat_sym(Sym::Semi) || self.at_sym(Sym::RBrace) {
                        break;
                    }
                }
                self.expect_sym(Sym::RBrace)?;
                Ok(Expr::new(ExprKind::RecordLit(fields), span))
            }
            Tok::Str(_) => Err(reject(rules::NO_STRINGS, span, "string literals are not supported")),
            Tok::Float(_) => Err(reject(rules::NO_FLOATS, span, "floating-point literals are not supported")),
            Tok::Kw(Kw::Try) => Err(reject(rules::NO_TRY, span, "try/with is not supported; raise reverts the transaction")),
            Tok::Kw(Kw::Fun) => Err(reject(rules::NO_CLOSURES, span, "anonymous functions are not supported")),
            Tok::Kw(Kw::For) => Err(reject(rules::NO_FOR, span, "for loops are not supported; use while")),
            Tok::Kw(Kw::Ref) | Tok::Sym(Sym::Bang) => {
                Err(reject(rules::NO_REFS, span, "references are not supported; use `let mutable`"))
            }
            _ => {
                for k in [Kw::True, Kw::False, Kw::Begin] {
                    self.at_kw(k);
                }
                self.at_sym(Sym::LParen);
                self.at_sym(Sym::LBrace);
                Err(self.error())
            }
        }
    }
}
