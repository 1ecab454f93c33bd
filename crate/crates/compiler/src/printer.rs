//! Pretty printer for the surface syntax.
//!
//! Every compound expression is printed in parentheses, so the output re-parses
//! to the same tree regardless of precedence.

use std::fmt::Write;

use crate::ast::*;

pub fn print_module(m: &Module) -> String {
    let mut out = String::new();
    for (i, d) in m.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_decl(&mut out, d);
        out.push('\n');
    }
    out
}

fn fields(fs: &[FieldDecl]) -> String {
    let items: Vec<String> = fs
        .iter()
        .map(|f| format!("{}{} : {}", if f.mutable { "mutable " } else { "" }, f.name, f.ty.name))
        .collect();
    format!("{{ {} }}", items.join("; "))
}

fn params(ps: &[Param]) -> String {
    if ps.is_empty() {
        return "()".into();
    }
    let items: Vec<String> = ps.iter().map(|p| format!("({} : {})", p.name, p.ty.name)).collect();
    items.join(" ")
}

fn print_decl(out: &mut String, d: &Decl) {
    match d {
        Decl::Type { name, ctors, .. } => {
            let _ = write!(out, "type {name} =");
            for c in ctors {
                let _ = write!(out, "\n  | {}", c.name);
                for a in &c.args {
                    let _ = write!(out, " {}", a.name);
                }
            }
        }
        Decl::Record { name, fields: fs, .. } => {
            let _ = write!(out, "record {name} = {}", fields(fs));
        }
        Decl::Global { name, fields: fs, .. } => {
            let _ = write!(out, "global {name} = {}", fields(fs));
        }
        Decl::Map { name, key, value, .. } => {
            let _ = write!(out, "map {name} : {} => {}", key.name, value.name);
        }
        Decl::Exception { name, .. } => {
            let _ = write!(out, "exception {name}");
        }
        Decl::Event { name, .. } => {
            let _ = write!(out, "event {name}");
        }
        Decl::Modifier { name, exception, body, .. } => {
            let _ = write!(out, "modifier {name} raises {exception} = {}", print_expr(body));
        }
        Decl::Logic { name, params: ps, ret, body, .. } => {
            let _ = write!(out, "function {name} {} : {} =\n  {}", params(ps), ret.name, print_expr(body));
        }
        Decl::Fun(f) => {
            out.push_str("let ");
            if f.recursive {
                out.push_str("rec ");
            }
            out.push_str(match f.visibility {
                Visibility::Public => "public ",
                Visibility::Private => "private ",
            });
            out.push_str(&f.name);
            if f.gas_checking {
                out.push_str(" [@gas_checking]");
            }
            let _ = write!(out, " {} : {}", params(&f.params), f.ret.name);
            for r in &f.requires {
                let _ = write!(out, "\n  requires {{ {} }}", print_expr(r));
            }
            for e in &f.ensures {
                let _ = write!(out, "\n  ensures {{ {} }}", print_expr(e));
            }
            if let Some(v) = &f.variant {
                let _ = write!(out, "\n  variant {{ {} }}", print_expr(v));
            }
            let _ = write!(out, "\n=\n  {}", print_expr(&f.body));
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Unit => "()".into(),
        ExprKind::Var(x) => x.clone(),
        ExprKind::Annot(e, t) => format!("({} : {})", print_expr(e), t.name),
        ExprKind::App(f, args) => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            format!("({f} {})", args.join(" "))
        }
        ExprKind::Let { name, mutable, value, body } => format!(
            "(let {}{name} = {} in {})",
            if *mutable { "mutable " } else { "" },
            print_expr(value),
            print_expr(body)
        ),
        ExprKind::Seq(a, b) => format!("({}; {})", print_expr(a), print_expr(b)),
        ExprKind::Assign { target, value } => format!("({} <- {})", print_expr(target), print_expr(value)),
        ExprKind::If { cond, then, els } => match els {
            Some(els) => format!("(if {} then {} else {})", print_expr(cond), print_expr(then), print_expr(els)),
            None => format!("(if {} then {})", print_expr(cond), print_expr(then)),
        },
        ExprKind::While { cond, invariants, variant, body } => {
            let mut s = format!("(while {} do", print_expr(cond));
            for i in invariants {
                let _ = write!(s, " invariant {{ {} }}", print_expr(i));
            }
            if let Some(v) = variant {
                let _ = write!(s, " variant {{ {} }}", print_expr(v));
            }
            let _ = write!(s, " {} done)", print_expr(body));
            s
        }
        ExprKind::Match { scrutinee, arms } => {
            let mut s = format!("(match {} with", print_expr(scrutinee));
            for a in arms {
                let _ = write!(s, " | {}", a.ctor);
                for b in &a.binders {
                    let _ = write!(s, " {}", b.as_deref().unwrap_or("_"));
                }
                let _ = write!(s, " -> {}", print_expr(&a.body));
            }
            s.push_str(" end)");
            s
        }
        ExprKind::Field(b, f) => format!("({}.{f})", print_expr(b)),
        ExprKind::Index(m, k) => format!("({}[{}])", print_expr(m), print_expr(k)),
        ExprKind::RecordLit(fs) => {
            let items: Vec<String> = fs.iter().map(|(f, v)| format!("{f} = {}", print_expr(v))).collect();
            format!("{{ {} }}", items.join("; "))
        }
        ExprKind::Binary(op, a, b) => format!("({} {} {})", print_expr(a), op.text(), print_expr(b)),
        ExprKind::Unary(UnOp::Neg, a) => format!("(- {})", print_expr(a)),
        ExprKind::Unary(UnOp::Not, a) => format!("(not {})", print_expr(a)),
        ExprKind::Raise(x) => format!("(raise {x})"),
        ExprKind::Old(a) => format!("(old {})", print_expr(a)),
    }
}
