//! Def-use facts for every declared variable, aggregated over the whole
//! program.
//!
//! A def is a declaration with an initializer, the target of a (compound)
//! assignment, the operand of `++`/`--`, or a write through a pointer. A write
//! through `p` counts for `x` only when every value ever stored in `p` is the
//! syntactic `&x`; otherwise it counts for `p`. A use is any read of the
//! variable's value. `&x` is neither, and `sizeof` operands are not evaluated.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarScope {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Scalar,
    Array,
    Pointer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefUseEntry {
    pub name: String,
    pub n_def: u32,
    pub n_use: u32,
    /// Line of the first declaration of this name.
    pub line: u32,
    pub scope: VarScope,
    pub kind: VarKind,
    /// `&name` appears somewhere in the program.
    pub address_taken: bool,
    /// Written in the init or step clause of a `for` header.
    pub loop_counter: bool,
}

impl DefUseEntry {
    pub fn complexity(&self) -> u32 {
        self.n_def + self.n_use
    }
}

/// One entry per declared variable name, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DefUseTable {
    pub entries: Vec<DefUseEntry>,
}

impl DefUseTable {
    pub fn get(&self, name: &str) -> Option<&DefUseEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessKind {
    Def,
    Use,
}

/// A single def or use occurrence, in evaluation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub name: String,
    pub kind: AccessKind,
    pub line: u32,
    /// `None` for global initializers.
    pub function: Option<String>,
}

pub fn def_use(ast: &Ast) -> DefUseTable {
    let mut order: Vec<String> = Vec::new();
    let mut entries: BTreeMap<String, DefUseEntry> = BTreeMap::new();
    let mut declare = |name: &str, line: u32, scope: VarScope, kind: VarKind| {
        if !entries.contains_key(name) {
            order.push(name.to_string());
            entries.insert(
                name.to_string(),
                DefUseEntry {
                    name: name.to_string(),
                    n_def: 0,
                    n_use: 0,
                    line,
                    scope,
                    kind,
                    address_taken: false,
                    loop_counter: false,
                },
            );
        }
    };
    let kind_of = |pointers: usize, dims: usize| {
        if dims > 0 {
            VarKind::Array
        } else if pointers > 0 {
            VarKind::Pointer
        } else {
            VarKind::Scalar
        }
    };
    for g in &ast.globals {
        declare(
            &g.name,
            g.line,
            VarScope::Global,
            kind_of(g.pointers.len(), g.dims.len()),
        );
    }
    for f in &ast.functions {
        for p in &f.params {
            if let Some(n) = &p.name {
                declare(
                    n,
                    p.line,
                    VarScope::Local,
                    kind_of(p.pointers.len(), p.dims.len()),
                );
            }
        }
        for d in local_decls(f) {
            declare(
                &d.name,
                d.line,
                VarScope::Local,
                kind_of(d.pointers.len(), d.dims.len()),
            );
        }
    }

    let analysis = Analysis::new(ast);
    for a in analysis.accesses(ast) {
        if let Some(e) = entries.get_mut(&a.name) {
            match a.kind {
                AccessKind::Def => e.n_def += 1,
                AccessKind::Use => e.n_use += 1,
            }
        }
    }
    for name in &analysis.address_taken {
        if let Some(e) = entries.get_mut(name) {
            e.address_taken = true;
        }
    }
    for name in loop_counters(ast) {
        if let Some(e) = entries.get_mut(&name) {
            e.loop_counter = true;
        }
    }
    DefUseTable {
        entries: order
            .into_iter()
            .filter_map(|n| entries.remove(&n))
            .collect(),
    }
}

/// Every def/use occurrence in the program, in textual evaluation order.
pub fn accesses(ast: &Ast) -> Vec<Access> {
    Analysis::new(ast).accesses(ast)
}

pub fn local_decls(f: &Function) -> Vec<&VarDecl> {
    let mut out = Vec::new();
    f.body.walk(&mut |s| match &s.kind {
        StmtKind::Decl(ds) => out.extend(ds.iter()),
        StmtKind::For {
            init: Some(ForInit::Decl(ds)),
            ..
        } => out.extend(ds.iter()),
        _ => {}
    });
    out
}

/// Variables written by a `for` header's init or step clause.
pub fn loop_counters(ast: &Ast) -> BTreeSet<String> {
    let analysis = Analysis::new(ast);
    let mut out = BTreeSet::new();
    for s in ast.statements() {
        if let StmtKind::For { init, step, .. } = &s.kind {
            let mut acc = Vec::new();
            match init {
                Some(ForInit::Expr(e)) => analysis.expr(e, s.span.start, None, &mut acc),
                Some(ForInit::Decl(ds)) => {
                    for d in ds {
                        analysis.decl(d, None, &mut acc);
                    }
                }
                None => {}
            }
            if let Some(e) = step {
                analysis.expr(e, s.span.start, None, &mut acc);
            }
            out.extend(
                acc.into_iter()
                    .filter(|a| a.kind == AccessKind::Def)
                    .map(|a| a.name),
            );
        }
    }
    out
}

/// Pointers whose every stored value is `&x` for one variable `x`.
pub fn sole_address_sources(ast: &Ast) -> BTreeMap<String, String> {
    let mut stores: BTreeMap<String, Vec<Option<String>>> = BTreeMap::new();
    let mut pointer_names: BTreeSet<String> = BTreeSet::new();
    let mut note_decl = |d: &VarDecl, stores: &mut BTreeMap<String, Vec<Option<String>>>| {
        if d.is_pointer() && !d.is_array() {
            pointer_names.insert(d.name.clone());
            if let Some(Initializer::Expr(e)) = &d.init {
                stores
                    .entry(d.name.clone())
                    .or_default()
                    .push(address_of_var(e));
            }
        }
    };
    for g in &ast.globals {
        note_decl(g, &mut stores);
    }
    for f in &ast.functions {
        for p in &f.params {
            if let Some(n) = &p.name {
                if !p.pointers.is_empty() {
                    // parameters receive unknown addresses
                    stores.entry(n.clone()).or_default().push(None);
                }
            }
        }
        for d in local_decls(f) {
            note_decl(d, &mut stores);
        }
    }
    for s in ast.statements() {
        for e in s.own_exprs() {
            e.walk(&mut |x| match x {
                Expr::Assign { op, target, value } => {
                    if let Expr::Var(p) = target.as_ref() {
                        let src = match op {
                            AssignOp::Assign => address_of_var(value),
                            AssignOp::Compound(_) => None,
                        };
                        stores.entry(p.clone()).or_default().push(src);
                    }
                }
                Expr::Unary {
                    op: UnaryOp::PreInc | UnaryOp::PreDec,
                    expr,
                }
                | Expr::Postfix { expr, .. } => {
                    if let Expr::Var(p) = expr.as_ref() {
                        stores.entry(p.clone()).or_default().push(None);
                    }
                }
                _ => {}
            });
        }
    }
    let mut out = BTreeMap::new();
    for (p, srcs) in stores {
        if !pointer_names.contains(&p) {
            continue;
        }
        let first = srcs.first().cloned().flatten();
        if let Some(x) = first {
            if srcs.iter().all(|s| s.as_deref() == Some(x.as_str())) {
                out.insert(p, x);
            }
        }
    }
    out
}

fn address_of_var(e: &Expr) -> Option<String> {
    match e {
        Expr::Unary {
            op: UnaryOp::AddrOf,
            expr,
        } => match expr.as_ref() {
            Expr::Var(x) => Some(x.clone()),
            _ => None,
        },
        Expr::Cast { expr, .. } => address_of_var(expr),
        _ => None,
    }
}

/// Pointer variable at the base of an address expression (`p`, `p + i`, `(T*)p`).
fn pointer_base(e: &Expr) -> Option<&str> {
    match e {
        Expr::Var(p) => Some(p),
        Expr::Binary {
            op: BinaryOp::Add | BinaryOp::Sub,
            lhs,
            ..
        } => pointer_base(lhs),
        Expr::Cast { expr, .. } => pointer_base(expr),
        _ => None,
    }
}

pub(crate) struct Analysis {
    sources: BTreeMap<String, String>,
    address_taken: BTreeSet<String>,
}

impl Analysis {
    pub(crate) fn new(ast: &Ast) -> Self {
        let mut address_taken = BTreeSet::new();
        let mut visit = |e: &Expr| {
            e.walk(&mut |x| {
                if let Expr::Unary {
                    op: UnaryOp::AddrOf,
                    expr,
                } = x
                {
                    let mut base = expr.as_ref();
                    while let Expr::Index { base: b, .. } = base {
                        base = b;
                    }
                    if let Expr::Var(n) = base {
                        address_taken.insert(n.clone());
                    }
                }
            })
        };
        for g in &ast.globals {
            if let Some(init) = &g.init {
                init.exprs().into_iter().for_each(&mut visit);
            }
        }
        for s in ast.statements() {
            s.own_exprs().into_iter().for_each(&mut visit);
        }
        Analysis {
            sources: sole_address_sources(ast),
            address_taken,
        }
    }

    fn resolve<'a>(&'a self, pointer: &'a str) -> &'a str {
        self.sources
            .get(pointer)
            .map(String::as_str)
            .unwrap_or(pointer)
    }

    pub(crate) fn accesses(&self, ast: &Ast) -> Vec<Access> {
        let mut out = Vec::new();
        for g in &ast.globals {
            self.decl(g, None, &mut out);
        }
        for f in &ast.functions {
            self.stmt(&f.body, Some(&f.name), &mut out);
        }
        out
    }

    fn push(
        out: &mut Vec<Access>,
        name: &str,
        kind: AccessKind,
        line: u32,
        function: Option<&str>,
    ) {
        out.push(Access {
            name: name.to_string(),
            kind,
            line,
            function: function.map(str::to_string),
        });
    }

    fn decl(&self, d: &VarDecl, function: Option<&str>, out: &mut Vec<Access>) {
        for dim in d.dims.iter().flatten() {
            self.expr(dim, d.line, function, out);
        }
        if let Some(init) = &d.init {
            for e in init.exprs() {
                self.expr(e, d.line, function, out);
            }
            Self::push(out, &d.name, AccessKind::Def, d.line, function);
        }
    }

    fn stmt(&self, s: &Stmt, function: Option<&str>, out: &mut Vec<Access>) {
        let line = s.span.start;
        match &s.kind {
            StmtKind::Decl(ds) => ds.iter().for_each(|d| self.decl(d, function, out)),
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                match init {
                    Some(ForInit::Decl(ds)) => ds.iter().for_each(|d| self.decl(d, function, out)),
                    Some(ForInit::Expr(e)) => self.expr(e, line, function, out),
                    None => {}
                }
                if let Some(c) = cond {
                    self.expr(c, line, function, out);
                }
                self.stmt(body, function, out);
                if let Some(st) = step {
                    self.expr(st, line, function, out);
                }
            }
            _ => {
                for e in s.own_exprs() {
                    self.expr(e, line, function, out);
                }
                for c in s.children() {
                    self.stmt(c, function, out);
                }
            }
        }
    }

    pub(crate) fn expr(&self, e: &Expr, line: u32, function: Option<&str>, out: &mut Vec<Access>) {
        match e {
            Expr::Var(x) => Self::push(out, x, AccessKind::Use, line, function),
            Expr::Assign { op, target, value } => {
                self.expr(value, line, function, out);
                if matches!(op, AssignOp::Compound(_)) {
                    self.expr(target, line, function, out);
                }
                self.write(target, line, function, out);
            }
            Expr::Unary {
                op: UnaryOp::PreInc | UnaryOp::PreDec,
                expr,
            }
            | Expr::Postfix { expr, .. } => {
                self.expr(expr, line, function, out);
                self.write(expr, line, function, out);
            }
            Expr::Unary {
                op: UnaryOp::AddrOf,
                expr,
            } => {
                // only the index expressions are evaluated
                let mut base = expr.as_ref();
                while let Expr::Index { base: b, index } = base {
                    self.expr(index, line, function, out);
                    base = b;
                }
                if !matches!(base, Expr::Var(_)) {
                    self.expr(base, line, function, out);
                }
            }
            Expr::SizeofExpr(_) | Expr::SizeofType { .. } => {}
            _ => {
                for c in e.children() {
                    self.expr(c, line, function, out);
                }
            }
        }
    }

    /// Records the def produced by storing into `target`; operands other than
    /// the stored-to variable are reads.
    fn write(&self, target: &Expr, line: u32, function: Option<&str>, out: &mut Vec<Access>) {
        match target {
            Expr::Var(x) => Self::push(out, x, AccessKind::Def, line, function),
            Expr::Index { base, index } => {
                self.expr(index, line, function, out);
                match pointer_base(base) {
                    Some(p) if matches!(base.as_ref(), Expr::Var(_)) => {
                        Self::push(out, self.resolve(p), AccessKind::Def, line, function)
                    }
                    _ => self.write(base, line, function, out),
                }
            }
            Expr::Unary {
                op: UnaryOp::Deref,
                expr,
            } => match pointer_base(expr) {
                Some(p) => {
                    self.address_operands(expr, line, function, out);
                    Self::push(out, self.resolve(p), AccessKind::Def, line, function);
                }
                None => self.expr(expr, line, function, out),
            },
            other => self.expr(other, line, function, out),
        }
    }

    /// Reads in an address expression other than its base pointer.
    fn address_operands(&self, e: &Expr, line: u32, function: Option<&str>, out: &mut Vec<Access>) {
        match e {
            Expr::Var(_) => {}
            Expr::Binary {
                op: BinaryOp::Add | BinaryOp::Sub,
                lhs,
                rhs,
            } => {
                self.address_operands(lhs, line, function, out);
                self.expr(rhs, line, function, out);
            }
            Expr::Cast { expr, .. } => self.address_operands(expr, line, function, out),
            other => self.expr(other, line, function, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{fixtures, parse, SourceProgram};

    fn table(src: &str) -> DefUseTable {
        def_use(&parse(&SourceProgram::new("t", src).unwrap()).unwrap())
    }

    fn counts(t: &DefUseTable, name: &str) -> (u32, u32) {
        let e = t.get(name).unwrap();
        (e.n_def, e.n_use)
    }

    #[test]
    fn initializer_and_reads() {
        let t = table("int x = 1; int y = x + x;");
        assert_eq!(counts(&t, "x"), (1, 2));
        assert_eq!(counts(&t, "y"), (1, 0));
    }

    #[test]
    fn assignment_and_increment() {
        let t = table("int main() { int x; x = 0; x++; return 0; }");
        assert_eq!(counts(&t, "x"), (2, 1));
    }

    #[test]
    fn compound_assignment_reads_and_writes() {
        let t = table("int main() { int x = 0; x += 2; return x; }");
        assert_eq!(counts(&t, "x"), (2, 2));
    }

    #[test]
    fn write_through_sole_address_of_defines_pointee() {
        let t = table("int main() { int k; int *m = &k; *m = 3; return k; }");
        assert_eq!(counts(&t, "k"), (1, 1));
        assert_eq!(counts(&t, "m"), (1, 0));
        assert!(t.get("k").unwrap().address_taken);
    }

    #[test]
    fn write_through_ambiguous_pointer_defines_pointer() {
        let t = table("int a, b; int main() { int *p = &a; p = &b; *p = 3; return 0; }");
        assert_eq!(counts(&t, "a"), (0, 0));
        assert_eq!(counts(&t, "b"), (0, 0));
        assert_eq!(counts(&t, "p"), (3, 0));
    }

    #[test]
    fn call_arguments_and_conditions_are_uses() {
        let t = table("int f(int q) { return q; } int main() { int x = 1; if (x) f(x); while (x < 2) x++; return 0; }");
        assert_eq!(counts(&t, "x"), (2, 4));
    }

    #[test]
    fn sample_counts() {
        let t = table(fixtures::SAMPLE_FAILING);
        assert_eq!(counts(&t, "a"), (0, 2));
        assert_eq!(counts(&t, "s"), (0, 1));
        assert_eq!(counts(&t, "v"), (0, 1));
        assert_eq!(counts(&t, "b"), (1, 2));
        assert_eq!(counts(&t, "c"), (1, 0));
        assert_eq!(counts(&t, "u"), (1, 1));
        assert_eq!(counts(&t, "k"), (1, 1));
        assert_eq!(counts(&t, "d"), (2, 3));
        let b = t.get("b").unwrap();
        assert!(b.loop_counter);
        assert_eq!(b.scope, VarScope::Global);
        assert_eq!(t.get("u").unwrap().kind, VarKind::Array);
        assert!(t.get("c").unwrap().address_taken);
        let names: Vec<_> = t.entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(
            names,
            ["s", "a", "b", "c", "v", "u", "i", "j", "k", "d", "l", "e", "m", "n"]
        );
    }

    #[test]
    fn counts_add_across_independent_functions() {
        let f1 = "int f() { int x = 1; x = x + 2; return x; }";
        let f2 = "int g() { int y = 3; y++; return y * y; }";
        let a = table(f1);
        let b = table(f2);
        let both = table(&format!("{f1}\n{f2}"));
        assert_eq!(counts(&both, "x"), counts(&a, "x"));
        assert_eq!(counts(&both, "y"), counts(&b, "y"));
    }
}
