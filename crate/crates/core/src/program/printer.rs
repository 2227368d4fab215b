//! Pretty-printer back to C source. Binary, ternary and unary operands are
//! parenthesized whenever they are not primaries, so re-parsing the output
//! reproduces the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(ast: &Ast) -> String {
    let mut out = String::new();
    for g in &ast.globals {
        out.push_str(&decl_line(std::slice::from_ref(g)));
        out.push('\n');
    }
    for f in &ast.functions {
        if !out.is_empty() {
            out.push('\n');
        }
        print_function(f, &mut out);
    }
    out
}

fn print_function(f: &Function, out: &mut String) {
    let params = if f.params.is_empty() {
        String::new()
    } else {
        f.params
            .iter()
            .map(|p| {
                let mut s = p.type_tokens.join(" ");
                s.push(' ');
                s.push_str(&pointers(&p.pointers));
                if let Some(n) = &p.name {
                    s.push_str(n);
                }
                s.push_str(&dims(&p.dims));
                s
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(
        out,
        "{} {}{}({})",
        f.return_tokens.join(" "),
        "*".repeat(f.return_pointers),
        f.name,
        params
    );
    print_stmt(&f.body, 0, out);
}

fn pointers(ptrs: &[Vec<String>]) -> String {
    let mut s = String::new();
    for quals in ptrs {
        s.push('*');
        for q in quals {
            s.push_str(q);
            s.push(' ');
        }
    }
    s
}

fn dims(ds: &[Option<Expr>]) -> String {
    ds.iter()
        .map(|d| match d {
            Some(e) => format!("[{}]", expr(e)),
            None => "[]".to_string(),
        })
        .collect()
}

fn initializer(init: &Initializer) -> String {
    match init {
        Initializer::Expr(e) => expr(e),
        Initializer::List(items) => {
            format!(
                "{{{}}}",
                items.iter().map(initializer).collect::<Vec<_>>().join(", ")
            )
        }
    }
}

fn declarator(d: &VarDecl) -> String {
    let mut s = pointers(&d.pointers);
    s.push_str(&d.name);
    s.push_str(&dims(&d.dims));
    if let Some(init) = &d.init {
        s.push_str(" = ");
        s.push_str(&initializer(init));
    }
    s
}

fn decl_line(decls: &[VarDecl]) -> String {
    let specs = decls[0].type_tokens.join(" ");
    let body = decls.iter().map(declarator).collect::<Vec<_>>().join(", ");
    format!("{specs} {body};")
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_stmt(s: &Stmt, level: usize, out: &mut String) {
    match &s.kind {
        StmtKind::Block(items) => {
            indent(level, out);
            out.push_str("{\n");
            for item in items {
                print_stmt(item, level + 1, out);
            }
            indent(level, out);
            out.push_str("}\n");
        }
        StmtKind::Decl(decls) => {
            indent(level, out);
            out.push_str(&decl_line(decls));
            out.push('\n');
        }
        StmtKind::Expr(e) => {
            indent(level, out);
            let _ = writeln!(out, "{};", expr(e));
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            indent(level, out);
            let _ = writeln!(out, "if ({})", expr(cond));
            print_stmt(then_branch, level + 1, out);
            if let Some(e) = else_branch {
                indent(level, out);
                out.push_str("else\n");
                print_stmt(e, level + 1, out);
            }
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            indent(level, out);
            let init = match init {
                None => ";".to_string(),
                Some(ForInit::Expr(e)) => format!("{};", expr(e)),
                Some(ForInit::Decl(decls)) => decl_line(decls),
            };
            let cond = cond.as_ref().map(expr).unwrap_or_default();
            let step = step.as_ref().map(expr).unwrap_or_default();
            let _ = writeln!(out, "for ({init} {cond}; {step})");
            print_stmt(body, level + 1, out);
        }
        StmtKind::While { cond, body } => {
            indent(level, out);
            let _ = writeln!(out, "while ({})", expr(cond));
            print_stmt(body, level + 1, out);
        }
        StmtKind::Goto(l) => {
            indent(level, out);
            let _ = writeln!(out, "goto {l};");
        }
        StmtKind::Label(l) => {
            let _ = writeln!(out, "{l}:");
        }
        StmtKind::Return(v) => {
            indent(level, out);
            match v {
                Some(e) => {
                    let _ = writeln!(out, "return {};", expr(e));
                }
                None => out.push_str("return;\n"),
            }
        }
        StmtKind::Break => {
            indent(level, out);
            out.push_str("break;\n");
        }
        StmtKind::Continue => {
            indent(level, out);
            out.push_str("continue;\n");
        }
        StmtKind::Empty => {
            indent(level, out);
            out.push_str(";\n");
        }
    }
}

fn is_primary(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Int { .. }
            | Expr::Float(_)
            | Expr::Char(_)
            | Expr::Str(_)
            | Expr::Var(_)
            | Expr::Call { .. }
            | Expr::Index { .. }
            | Expr::Postfix { .. }
    )
}

fn operand(e: &Expr) -> String {
    if is_primary(e) {
        expr(e)
    } else {
        format!("({})", expr(e))
    }
}

fn char_literal(v: i128) -> String {
    match v {
        10 => "'\\n'".into(),
        9 => "'\\t'".into(),
        13 => "'\\r'".into(),
        0 => "'\\0'".into(),
        92 => "'\\\\'".into(),
        39 => "'\\''".into(),
        32..=126 => format!("'{}'", v as u8 as char),
        _ => format!("'\\x{:x}'", v),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int { text, .. } => text.clone(),
        Expr::Float(t) => t.clone(),
        Expr::Char(v) => char_literal(*v),
        Expr::Str(s) => format!("\"{s}\""),
        Expr::Var(n) => n.clone(),
        Expr::Unary { op, expr: inner } => {
            let sym = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Plus => "+",
                UnaryOp::Not => "!",
                UnaryOp::BitNot => "~",
                UnaryOp::Deref => "*",
                UnaryOp::AddrOf => "&",
                UnaryOp::PreInc => "++",
                UnaryOp::PreDec => "--",
            };
            format!("{sym}{}", operand(inner))
        }
        Expr::Postfix { op, expr: inner } => {
            let sym = match op {
                IncDec::Inc => "++",
                IncDec::Dec => "--",
            };
            format!("{}{sym}", operand(inner))
        }
        Expr::Binary { op, lhs, rhs } => {
            format!("{} {} {}", operand(lhs), op.symbol(), operand(rhs))
        }
        Expr::Assign { op, target, value } => {
            format!("{} {} {}", operand(target), op.symbol(), operand(value))
        }
        Expr::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            format!(
                "{} ? {} : {}",
                operand(cond),
                operand(then_expr),
                operand(else_expr)
            )
        }
        Expr::Call { callee, args } => {
            let args = args
                .iter()
                .map(|a| {
                    if matches!(a, Expr::Comma(_)) {
                        format!("({})", expr(a))
                    } else {
                        expr(a)
                    }
                })
                .collect::<Vec<_>>()
                .join(", ");
            format!("{callee}({args})")
        }
        Expr::Index { base, index } => format!("{}[{}]", operand(base), expr(index)),
        Expr::Cast {
            type_tokens,
            pointers,
            expr: inner,
        } => {
            format!(
                "({}{}){}",
                type_tokens.join(" "),
                "*".repeat(*pointers),
                operand(inner)
            )
        }
        Expr::SizeofType {
            type_tokens,
            pointers,
        } => {
            format!("sizeof({}{})", type_tokens.join(" "), "*".repeat(*pointers))
        }
        Expr::SizeofExpr(inner) => format!("sizeof {}", operand(inner)),
        Expr::Comma(items) => items.iter().map(operand).collect::<Vec<_>>().join(", "),
    }
}
