//! Built-in UB checks. They only reason about constants: an operand counts
//! when it folds to an integer without looking at any variable.

use std::collections::{BTreeMap, BTreeSet};

use crate::program::ast::*;
use crate::program::defuse::{accesses, sole_address_sources, AccessKind};

use super::{Finding, UbCategory};

/// Folds an integer constant expression.
pub fn const_eval(e: &Expr) -> Option<i128> {
    match e {
        Expr::Int { value, .. } => Some(*value),
        Expr::Char(v) => Some(*v),
        Expr::Cast { expr, .. } => const_eval(expr),
        Expr::Unary { op, expr } => {
            let v = const_eval(expr)?;
            match op {
                UnaryOp::Neg => v.checked_neg(),
                UnaryOp::Plus => Some(v),
                UnaryOp::Not => Some((v == 0) as i128),
                UnaryOp::BitNot => Some(!v),
                _ => None,
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let (a, b) = (const_eval(lhs)?, const_eval(rhs)?);
            match op {
                BinaryOp::Add => a.checked_add(b),
                BinaryOp::Sub => a.checked_sub(b),
                BinaryOp::Mul => a.checked_mul(b),
                BinaryOp::Div => a.checked_div(b),
                BinaryOp::Mod => a.checked_rem(b),
                BinaryOp::Shl if (0..64).contains(&b) => a.checked_shl(b as u32),
                BinaryOp::Shr if (0..64).contains(&b) => Some(a >> b),
                BinaryOp::Lt => Some((a < b) as i128),
                BinaryOp::Gt => Some((a > b) as i128),
                BinaryOp::Le => Some((a <= b) as i128),
                BinaryOp::Ge => Some((a >= b) as i128),
                BinaryOp::Eq => Some((a == b) as i128),
                BinaryOp::Ne => Some((a != b) as i128),
                BinaryOp::BitAnd => Some(a & b),
                BinaryOp::BitXor => Some(a ^ b),
                BinaryOp::BitOr => Some(a | b),
                BinaryOp::And => Some((a != 0 && b != 0) as i128),
                BinaryOp::Or => Some((a != 0 || b != 0) as i128),
                _ => None,
            }
        }
        Expr::Ternary {
            cond,
            then_expr,
            else_expr,
        } => {
            if const_eval(cond)? != 0 {
                const_eval(then_expr)
            } else {
                const_eval(else_expr)
            }
        }
        _ => None,
    }
}

#[derive(Debug, Clone)]
struct VarInfo {
    type_tokens: Vec<String>,
    pointers: usize,
    /// Known extent of each dimension.
    dims: Vec<Option<i128>>,
}

impl VarInfo {
    fn from_decl(d: &VarDecl) -> Self {
        let mut dims: Vec<Option<i128>> = d
            .dims
            .iter()
            .map(|x| x.as_ref().and_then(const_eval))
            .collect();
        if let (Some(first), Some(init)) = (dims.first_mut(), &d.init) {
            if first.is_none() {
                if let Initializer::List(items) = init {
                    *first = Some(items.len() as i128);
                }
            }
        }
        VarInfo {
            type_tokens: d.type_tokens.clone(),
            pointers: d.pointers.len(),
            dims,
        }
    }

    fn from_param(p: &Param) -> Self {
        // array parameters decay to pointers
        VarInfo {
            type_tokens: p.type_tokens.clone(),
            pointers: p.pointers.len() + p.dims.len(),
            dims: Vec::new(),
        }
    }

    fn bit_width(&self) -> i128 {
        if self.pointers == 0 && self.dims.is_empty() && base_type_size(&self.type_tokens) == 8 {
            64
        } else {
            32
        }
    }

    fn is_scalar(&self) -> bool {
        self.pointers == 0 && self.dims.is_empty()
    }
}

struct Checker<'a> {
    scopes: Vec<BTreeMap<&'a str, VarInfo>>,
    /// Pointers whose every stored value is `&x`.
    sources: BTreeMap<String, String>,
    /// Pointers whose every stored value is the constant 0.
    null_pointers: BTreeSet<String>,
    findings: Vec<Finding>,
}

impl<'a> Checker<'a> {
    fn lookup(&self, name: &str) -> Option<&VarInfo> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn report(&mut self, category: UbCategory, line: u32, note: String) {
        self.findings.push(Finding {
            category,
            line,
            note,
        });
    }

    fn declare(&mut self, d: &'a VarDecl, line: u32) {
        for dim in d.dims.iter().flatten() {
            self.expr(dim, line);
        }
        if let Some(init) = &d.init {
            for e in init.exprs() {
                self.expr(e, line);
            }
        }
        let info = VarInfo::from_decl(d);
        if let (Some(Some(n)), Some(Initializer::List(items))) = (info.dims.first(), &d.init) {
            if items.len() as i128 > *n {
                self.report(
                    UbCategory::IndexBound,
                    line,
                    format!("{} initializers for `{}[{n}]`", items.len(), d.name),
                );
            }
        }
        self.scopes.last_mut().expect("scope").insert(&d.name, info);
    }

    fn stmt(&mut self, s: &'a Stmt) {
        let line = s.span.start;
        match &s.kind {
            StmtKind::Decl(ds) => ds.iter().for_each(|d| self.declare(d, d.line)),
            StmtKind::Block(items) => {
                self.scopes.push(BTreeMap::new());
                items.iter().for_each(|i| self.stmt(i));
                self.scopes.pop();
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(BTreeMap::new());
                match init {
                    Some(ForInit::Decl(ds)) => ds.iter().for_each(|d| self.declare(d, d.line)),
                    Some(ForInit::Expr(e)) => self.expr(e, line),
                    None => {}
                }
                cond.iter()
                    .chain(step.iter())
                    .for_each(|e| self.expr(e, line));
                self.stmt(body);
                self.scopes.pop();
            }
            _ => {
                for e in s.own_exprs() {
                    self.expr(e, line);
                }
                for c in s.children() {
                    self.stmt(c);
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr, line: u32) {
        e.walk(&mut |x| self.check_node(x, line));
    }

    fn check_node(&mut self, e: &Expr, line: u32) {
        match e {
            Expr::Binary {
                op: op @ (BinaryOp::Div | BinaryOp::Mod),
                rhs,
                ..
            } => self.division(*op, rhs, line),
            Expr::Assign {
                op: AssignOp::Compound(op @ (BinaryOp::Div | BinaryOp::Mod)),
                value,
                ..
            } => self.division(*op, value, line),
            Expr::Binary {
                op: op @ (BinaryOp::Shl | BinaryOp::Shr),
                lhs,
                rhs,
            } => self.shift(*op, lhs, rhs, line),
            Expr::Assign {
                op: AssignOp::Compound(op @ (BinaryOp::Shl | BinaryOp::Shr)),
                target,
                value,
            } => self.shift(*op, target, value, line),
            Expr::Index { .. } => self.index(e, line),
            Expr::Unary {
                op: UnaryOp::Deref,
                expr,
            } => self.deref(expr, line),
            _ => {}
        }
    }

    fn division(&mut self, op: BinaryOp, rhs: &Expr, line: u32) {
        if const_eval(rhs) == Some(0) {
            self.report(
                UbCategory::DivisionByZero,
                line,
                format!("`{}` by constant zero", op.symbol()),
            );
        }
    }

    fn shift(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr, line: u32) {
        let width = match lhs {
            Expr::Var(n) => self.lookup(n).map(VarInfo::bit_width).unwrap_or(32),
            Expr::Int { text, .. } if text.to_ascii_lowercase().contains('l') => 64,
            _ => 32,
        };
        if let Some(amount) = const_eval(rhs) {
            if amount < 0 {
                self.report(
                    UbCategory::Shift,
                    line,
                    format!("shift amount {amount} is negative"),
                );
                return;
            }
            if amount >= width {
                self.report(
                    UbCategory::Shift,
                    line,
                    format!("shift amount {amount} >= width {width}"),
                );
                return;
            }
        }
        if op == BinaryOp::Shl {
            if let Some(v) = const_eval(lhs) {
                let unsigned = matches!(lhs, Expr::Int { text, .. } if text.to_ascii_lowercase().contains('u'));
                if v < 0 {
                    self.report(
                        UbCategory::Shift,
                        line,
                        format!("left shift of negative value {v}"),
                    );
                } else if let (false, Some(amount)) = (unsigned, const_eval(rhs)) {
                    // amount < width <= 64 here, so the shift fits in i128
                    if (v << amount) > (1i128 << (width - 1)) - 1 {
                        self.report(
                            UbCategory::Shift,
                            line,
                            format!("{v} << {amount} overflows a signed {width}-bit value"),
                        );
                    }
                }
            }
        }
    }

    fn index(&mut self, e: &Expr, line: u32) {
        // a[i][j] nests as Index(Index(a, i), j); each node checks its own
        // (last) subscript against the matching dimension
        let mut chain = Vec::new();
        let mut cur = e;
        while let Expr::Index { base, index } = cur {
            chain.push(index.as_ref());
            cur = base;
        }
        chain.reverse();
        let Expr::Var(name) = cur else { return };
        let Some(info) = self.lookup(name).cloned() else {
            return;
        };
        if chain.len() > info.dims.len().max(1) {
            return;
        }
        let depth = chain.len();
        let Some(Some(extent)) = info.dims.get(depth - 1) else {
            return;
        };
        if let Some(k) = const_eval(chain[depth - 1]) {
            if k < 0 || k >= *extent {
                self.report(
                    UbCategory::IndexBound,
                    line,
                    format!("index {k} outside `{name}` of extent {extent}"),
                );
            }
        }
    }

    fn deref(&mut self, target: &Expr, line: u32) {
        let (base, offset) = match target {
            Expr::Var(p) => (p.as_str(), Some(0)),
            Expr::Binary {
                op: op @ (BinaryOp::Add | BinaryOp::Sub),
                lhs,
                rhs,
            } => match lhs.as_ref() {
                Expr::Var(p) => {
                    let k = const_eval(rhs).map(|k| if *op == BinaryOp::Sub { -k } else { k });
                    (p.as_str(), k)
                }
                _ => return,
            },
            _ => return,
        };
        let Some(info) = self.lookup(base).cloned() else {
            return;
        };
        if !info.dims.is_empty() {
            if let (Some(Some(extent)), Some(k)) = (info.dims.first(), offset) {
                if k < 0 || k >= *extent {
                    self.report(
                        UbCategory::MemAccess,
                        line,
                        format!("`*({base} + {k})` outside `{base}` of extent {extent}"),
                    );
                }
            }
            return;
        }
        if info.pointers == 0 {
            return;
        }
        if self.null_pointers.contains(base) {
            self.report(
                UbCategory::MemAccess,
                line,
                format!("dereference of null pointer `{base}`"),
            );
            return;
        }
        let Some(x) = self.sources.get(base).cloned() else {
            return;
        };
        let Some(obj) = self.lookup(&x).cloned() else {
            return;
        };
        if !obj.is_scalar() || info.pointers != 1 {
            return;
        }
        let (want, have) = (
            base_type_size(&info.type_tokens),
            base_type_size(&obj.type_tokens),
        );
        if want > have {
            self.report(
                UbCategory::MemAccess,
                line,
                format!("{want}-byte access through `{base}` to {have}-byte object `{x}`"),
            );
        } else if matches!(offset, Some(k) if k != 0) {
            self.report(
                UbCategory::MemAccess,
                line,
                format!("out-of-bound access through `{base}` to `{x}`"),
            );
        }
    }
}

fn null_pointers(ast: &Ast) -> BTreeSet<String> {
    let mut stores: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    let mut note = |name: &str, value: Option<&Expr>| {
        stores
            .entry(name.to_string())
            .or_default()
            .push(value.and_then(const_eval) == Some(0));
    };
    let mut decls: Vec<&VarDecl> = ast.globals.iter().collect();
    for f in &ast.functions {
        decls.extend(crate::program::defuse::local_decls(f));
    }
    let pointers: BTreeSet<&str> = decls
        .iter()
        .filter(|d| d.is_pointer() && !d.is_array())
        .map(|d| d.name.as_str())
        .collect();
    for d in &decls {
        if d.is_pointer() && !d.is_array() {
            match &d.init {
                Some(Initializer::Expr(e)) => note(&d.name, Some(e)),
                // a global without initializer is null
                None if ast.globals.iter().any(|g| std::ptr::eq(g, *d)) => {
                    note(&d.name, Some(&ZERO))
                }
                _ => {}
            }
        }
    }
    for s in ast.statements() {
        for e in s.own_exprs() {
            e.walk(&mut |x| match x {
                Expr::Assign { target, value, op } => {
                    if let Expr::Var(p) = target.as_ref() {
                        note(
                            p,
                            if *op == AssignOp::Assign {
                                Some(value)
                            } else {
                                None
                            },
                        );
                    }
                }
                Expr::Unary {
                    op: UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::AddrOf,
                    expr,
                }
                | Expr::Postfix { expr, .. } => {
                    if let Expr::Var(p) = expr.as_ref() {
                        note(p, None);
                    }
                }
                _ => {}
            });
        }
    }
    for f in &ast.functions {
        for p in &f.params {
            if let Some(n) = &p.name {
                note(n, None);
            }
        }
    }
    stores
        .into_iter()
        .filter(|(n, v)| pointers.contains(n.as_str()) && !v.is_empty() && v.iter().all(|z| *z))
        .map(|(n, _)| n)
        .collect()
}

static ZERO: Expr = Expr::Char(0);

/// Locals read before any write, in evaluation order within their function.
/// Address-taken variables and arrays are skipped.
fn uninitialized_reads(ast: &Ast) -> Vec<Finding> {
    let mut address_taken = BTreeSet::new();
    for s in ast.statements() {
        for e in s.own_exprs() {
            e.walk(&mut |x| {
                if let Expr::Unary {
                    op: UnaryOp::AddrOf,
                    expr,
                } = x
                {
                    if let Expr::Var(n) = expr.as_ref() {
                        address_taken.insert(n.clone());
                    }
                }
            });
        }
    }
    let all = accesses(ast);
    let mut out = Vec::new();
    for f in &ast.functions {
        let mut pending: BTreeMap<&str, u32> = crate::program::defuse::local_decls(f)
            .into_iter()
            .filter(|d| d.init.is_none() && !d.is_array() && !address_taken.contains(&d.name))
            .map(|d| (d.name.as_str(), d.line))
            .collect();
        // parameters shadow nothing here: they arrive initialized
        for p in &f.params {
            if let Some(n) = &p.name {
                pending.remove(n.as_str());
            }
        }
        for a in all
            .iter()
            .filter(|a| a.function.as_deref() == Some(f.name.as_str()))
        {
            let Some(&decl_line) = pending.get(a.name.as_str()) else {
                continue;
            };
            match a.kind {
                AccessKind::Def => {
                    pending.remove(a.name.as_str());
                }
                AccessKind::Use if a.line >= decl_line => {
                    out.push(Finding {
                        category: UbCategory::Initialization,
                        line: a.line,
                        note: format!("`{}` read before it is written", a.name),
                    });
                    pending.remove(a.name.as_str());
                }
                AccessKind::Use => {}
            }
        }
    }
    out
}

/// Every built-in finding, in source order of the checks' traversal.
pub fn builtin_findings(ast: &Ast) -> Vec<Finding> {
    let mut c = Checker {
        scopes: vec![BTreeMap::new()],
        sources: sole_address_sources(ast),
        null_pointers: null_pointers(ast),
        findings: Vec::new(),
    };
    for g in &ast.globals {
        c.declare(g, g.line);
    }
    for f in &ast.functions {
        let mut params = BTreeMap::new();
        for p in &f.params {
            if let Some(n) = &p.name {
                params.insert(n.as_str(), VarInfo::from_param(p));
            }
        }
        c.scopes.push(params);
        c.stmt(&f.body);
        c.scopes.pop();
    }
    let mut findings = c.findings;
    findings.extend(uninitialized_reads(ast));
    findings.sort_by_key(|f| f.line);
    findings
}
