//! Canonical pretty-printer. Output is a pure function of the syntax tree:
//! comments and original layout never survive, so it doubles as the input
//! to smart checksums.

use super::ast::*;
use std::fmt::Write;

const INDENT: &str = "    ";

pub fn print_classes(classes: &[ClassDecl]) -> String {
    let mut out = String::new();
    for (i, class) in classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_class(&mut out, class, 0);
    }
    out
}

pub fn class_to_string(class: &ClassDecl) -> String {
    let mut out = String::new();
    print_class(&mut out, class, 0);
    out
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

pub fn annotation_to_string(a: &Annotation) -> String {
    let mut out = format!("@{}", a.name);
    if !a.args.is_empty() {
        out.push('(');
        for (i, (k, v)) in a.args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let v = match v {
                AnnotationValue::Ident(s) => s.clone(),
                AnnotationValue::Str(s) => quote(s),
                AnnotationValue::Int(n) => n.to_string(),
            };
            let _ = write!(out, "{k}={v}");
        }
        out.push(')');
    }
    out
}

/// Class head: annotations, kind, name and superclass.
pub fn class_head_to_string(class: &ClassDecl) -> String {
    let mut out = String::new();
    for a in &class.annotations {
        out.push_str(&annotation_to_string(a));
        out.push('\n');
    }
    out.push_str(match class.kind {
        ClassKind::Class => "class ",
        ClassKind::Enum => "enum ",
    });
    out.push_str(&class.name);
    if let Some(sup) = &class.superclass {
        let _ = write!(out, " extends {sup}");
    }
    out
}

fn print_class(out: &mut String, class: &ClassDecl, depth: usize) {
    for line in class_head_to_string(class).lines() {
        pad(out, depth);
        out.push_str(line);
        out.push('\n');
    }
    // the head's last line gets the opening brace
    out.pop();
    out.push_str(" {\n");
    for (i, member) in class.members.iter().enumerate() {
        if i > 0 && matches!(member, Member::Method(_) | Member::Class(_)) {
            out.push('\n');
        }
        print_member(out, member, depth + 1);
    }
    pad(out, depth);
    out.push_str("}\n");
}

pub fn member_to_string(member: &Member) -> String {
    let mut out = String::new();
    print_member(&mut out, member, 0);
    out
}

fn print_member(out: &mut String, member: &Member, depth: usize) {
    match member {
        Member::Field(f) => {
            pad(out, depth);
            out.push_str(&field_to_string(f));
            out.push('\n');
        }
        Member::Method(m) => print_method(out, m, depth),
        Member::Class(c) => print_class(out, c, depth),
        Member::EnumConstants(names) => {
            pad(out, depth);
            out.push_str(&names.join(", "));
            out.push_str(";\n");
        }
    }
}

pub fn field_to_string(f: &FieldDecl) -> String {
    let mut out = String::new();
    if f.is_static {
        out.push_str("static ");
    }
    let _ = write!(out, "{} {}", f.ty.as_str(), f.name);
    if let Some(init) = &f.init {
        out.push_str(" = ");
        out.push_str(&expr_to_string(init));
    }
    out.push(';');
    out
}

pub fn method_to_string(m: &MethodDecl) -> String {
    let mut out = String::new();
    print_method(&mut out, m, 0);
    out
}

fn print_method(out: &mut String, m: &MethodDecl, depth: usize) {
    for a in &m.annotations {
        pad(out, depth);
        out.push_str(&annotation_to_string(a));
        out.push('\n');
    }
    pad(out, depth);
    if m.is_static {
        out.push_str("static ");
    }
    match &m.ret {
        None => {}
        Some(None) => out.push_str("void "),
        Some(Some(ty)) => {
            out.push_str(ty.as_str());
            out.push(' ');
        }
    }
    out.push_str(&m.name);
    out.push('(');
    for (i, p) in m.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.ty.as_str(), p.name);
    }
    out.push_str(") ");
    print_block(out, &m.body, depth);
    out.push('\n');
}

fn print_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in stmts {
        print_stmt(out, s, depth + 1);
    }
    pad(out, depth);
    out.push('}');
}

pub fn stmt_to_string(stmt: &Stmt) -> String {
    let mut out = String::new();
    print_stmt(&mut out, stmt, 0);
    out
}

/// Statement text without the trailing `;` (used inside `for` headers).
fn simple_stmt(stmt: &Stmt) -> String {
    match stmt {
        Stmt::VarDecl { ty, name, init } => match init {
            Some(e) => format!("{} {} = {}", ty.as_str(), name, expr_to_string(e)),
            None => format!("{} {}", ty.as_str(), name),
        },
        Stmt::Assign { target, op, value } => format!(
            "{} {} {}",
            expr_to_string(target),
            op.symbol(),
            expr_to_string(value)
        ),
        Stmt::Expr(e) => expr_to_string(e),
        other => {
            let mut s = stmt_to_string(other);
            if s.ends_with('\n') {
                s.pop();
            }
            s
        }
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    pad(out, depth);
    match stmt {
        Stmt::VarDecl { .. } | Stmt::Assign { .. } | Stmt::Expr(_) => {
            out.push_str(&simple_stmt(stmt));
            out.push(';');
        }
        Stmt::Assert { kind, args } => {
            let _ = write!(out, "{}({});", kind.keyword(), args_to_string(args));
        }
        Stmt::Return(None) => out.push_str("return;"),
        Stmt::Return(Some(e)) => {
            let _ = write!(out, "return {};", expr_to_string(e));
        }
        Stmt::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = write!(out, "if ({}) ", expr_to_string(cond));
            print_block(out, then_block, depth);
            if let Some(e) = else_block {
                out.push_str(" else ");
                print_block(out, e, depth);
            }
        }
        Stmt::While { cond, body } => {
            let _ = write!(out, "while ({}) ", expr_to_string(cond));
            print_block(out, body, depth);
        }
        Stmt::For {
            init,
            cond,
            update,
            body,
        } => {
            let init = init.as_ref().map(|s| simple_stmt(s)).unwrap_or_default();
            let cond = cond.as_ref().map(expr_to_string).unwrap_or_default();
            let update = update.as_ref().map(|s| simple_stmt(s)).unwrap_or_default();
            let _ = write!(out, "for ({init}; {cond}; {update}) ");
            print_block(out, body, depth);
        }
        Stmt::Trace { entity, body } => {
            let _ = write!(out, "trace {} ", quote(entity));
            print_block(out, body, depth);
        }
    }
    out.push('\n');
}

fn args_to_string(args: &[Expr]) -> String {
    args.iter().map(expr_to_string).collect::<Vec<_>>().join(", ")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn float_literal(v: f64) -> String {
    // Debug formatting round-trips exactly and always reads back as a float.
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

const POSTFIX_PREC: u8 = 9;
const UNARY_PREC: u8 = 8;

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Unary { .. } => UNARY_PREC,
        _ => POSTFIX_PREC,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_operand(out: &mut String, e: &Expr, min_prec: u8) {
    if expr_prec(e) < min_prec {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Float(v) => out.push_str(&float_literal(*v)),
        Expr::Str(s) => out.push_str(&quote(s)),
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Null => out.push_str("null"),
        Expr::This => out.push_str("this"),
        Expr::Ident(name) => out.push_str(name),
        Expr::List(items) => {
            let _ = write!(out, "[{}]", args_to_string(items));
        }
        Expr::New { class, args } => {
            let _ = write!(out, "new {class}({})", args_to_string(args));
        }
        Expr::Call {
            receiver,
            name,
            args,
        } => {
            if let Some(r) = receiver {
                write_operand(out, r, POSTFIX_PREC);
                out.push('.');
            }
            let _ = write!(out, "{name}({})", args_to_string(args));
        }
        Expr::Field { target, name } => {
            write_operand(out, target, POSTFIX_PREC);
            out.push('.');
            out.push_str(name);
        }
        Expr::Unary { op, expr } => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            // keep `- -x` from printing as a decrement-looking `--x`
            if matches!(**expr, Expr::Unary { .. }) {
                out.push('(');
                write_expr(out, expr);
                out.push(')');
            } else {
                write_operand(out, expr, UNARY_PREC);
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            write_operand(out, lhs, prec);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, prec + 1);
        }
        Expr::Throw(name) => {
            let _ = write!(out, "throw({name})");
        }
    }
}
