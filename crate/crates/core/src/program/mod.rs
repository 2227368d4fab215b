//! Program model: source programs, the C-subset parser, control-flow graphs
//! and def-use facts.

pub mod ast;
pub mod cfg;
pub mod defuse;
pub mod lexer;
pub mod parser;
pub mod printer;

#[doc(hidden)]
pub mod fixtures;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use ast::{Ast, Expr, Span, Stmt, StmtClass, StmtId, StmtKind};
pub use cfg::{build_cfg, Cfg};
pub use defuse::{def_use, DefUseEntry, DefUseTable, VarKind, VarScope};
pub use parser::parse;
pub use printer::print_program;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("program text is empty")]
    EmptyProgram,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("goto to undefined label `{0}`")]
    UnknownLabel(String),
}

impl ProgramError {
    pub fn syntax(line: u32, message: impl Into<String>) -> Self {
        ProgramError::Syntax {
            line,
            message: message.into(),
        }
    }
}

/// A test program under study: the failing input or one of its variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub id: String,
    pub text: String,
    pub line_count: u32,
}

impl SourceProgram {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, ProgramError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ProgramError::EmptyProgram);
        }
        let line_count = text.lines().count() as u32;
        Ok(SourceProgram {
            id: id.into(),
            text,
            line_count,
        })
    }

    pub fn parse(&self) -> Result<Ast, ProgramError> {
        parse(self)
    }
}

/// Debug dump of an AST: every node carries its kind, span and children.
pub fn ast_to_json(ast: &Ast) -> Value {
    fn stmt(s: &Stmt) -> Value {
        let mut node = json!({
            "id": s.id,
            "kind": s.class().as_str(),
            "span": [s.span.start, s.span.end],
            "children": s.children().into_iter().map(stmt).collect::<Vec<_>>(),
        });
        match &s.kind {
            StmtKind::Decl(decls) => {
                node["decls"] = decls.iter().map(|d| json!(d.name)).collect();
            }
            StmtKind::Goto(l) | StmtKind::Label(l) => node["label"] = json!(l),
            _ => {}
        }
        if !s.is_compound() && !matches!(s.kind, StmtKind::Block(_)) {
            if let Some(e) = s.own_exprs().first() {
                node["text"] = json!(printer::expr(e));
            }
        }
        node
    }
    json!({
        "line_count": ast.line_count,
        "globals": ast.globals.iter().map(|g| json!({
            "name": g.name,
            "type": g.type_tokens,
            "pointer_depth": g.pointers.len(),
            "array_dims": g.dims.len(),
            "initialized": g.init.is_some(),
            "line": g.line,
        })).collect::<Vec<_>>(),
        "functions": ast.functions.iter().map(|f| json!({
            "name": f.name,
            "params": f.params.iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
            "span": [f.span.start, f.span.end],
            "body": stmt(&f.body),
        })).collect::<Vec<_>>(),
    })
}

/// Copy of the AST with every position erased, for structural comparison.
pub fn strip_positions(ast: &Ast) -> Ast {
    fn stmt(s: &mut Stmt) {
        s.span = Span::new(0, 0);
        match &mut s.kind {
            StmtKind::Decl(ds) => ds.iter_mut().for_each(|d| d.line = 0),
            StmtKind::For {
                init: Some(ast::ForInit::Decl(ds)),
                ..
            } => ds.iter_mut().for_each(|d| d.line = 0),
            _ => {}
        }
        match &mut s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                stmt(then_branch);
                if let Some(e) = else_branch {
                    stmt(e);
                }
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => stmt(body),
            StmtKind::Block(items) => items.iter_mut().for_each(stmt),
            _ => {}
        }
    }
    let mut out = ast.clone();
    out.line_count = 0;
    out.globals.iter_mut().for_each(|g| g.line = 0);
    for f in &mut out.functions {
        f.span = Span::new(0, 0);
        f.params.iter_mut().for_each(|p| p.line = 0);
        stmt(&mut f.body);
    }
    out
}
