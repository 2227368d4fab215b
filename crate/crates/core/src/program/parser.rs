//! Recursive-descent parser for the supported C subset.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::{ProgramError, SourceProgram};

const TYPE_KEYWORDS: &[&str] = &[
    "const", "volatile", "restrict", "static", "extern", "register", "auto", "inline", "long",
    "short", "signed", "unsigned", "int", "char", "void", "float", "double", "_Bool",
];

const BASE_TYPES: &[&str] = &["int", "char", "void", "float", "double", "_Bool"];

const UNSUPPORTED: &[&str] = &[
    "struct", "union", "typedef", "switch", "do", "case", "default", "enum",
];

pub fn parse(program: &SourceProgram) -> Result<Ast, ProgramError> {
    let tokens = tokenize(&program.text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut ast = p.translation_unit(program.line_count)?;
    let mut next_id = 0;
    for f in &mut ast.functions {
        number(&mut f.body, &mut next_id);
        check_labels(f)?;
    }
    Ok(ast)
}

fn number(stmt: &mut Stmt, next: &mut StmtId) {
    stmt.id = *next;
    *next += 1;
    match &mut stmt.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            number(then_branch, next);
            if let Some(e) = else_branch {
                number(e, next);
            }
        }
        StmtKind::For { body, .. } | StmtKind::While { body, .. } => number(body, next),
        StmtKind::Block(items) => items.iter_mut().for_each(|s| number(s, next)),
        _ => {}
    }
}

fn check_labels(f: &Function) -> Result<(), ProgramError> {
    let mut labels: BTreeMap<&str, u32> = BTreeMap::new();
    let mut gotos = Vec::new();
    let mut dup = None;
    f.body.walk(&mut |s| match &s.kind {
        StmtKind::Label(name) => {
            if labels.insert(name.as_str(), s.span.start).is_some() && dup.is_none() {
                dup = Some((name.clone(), s.span.start));
            }
        }
        StmtKind::Goto(name) => gotos.push((name.clone(), s.span.start)),
        _ => {}
    });
    if let Some((name, line)) = dup {
        return Err(ProgramError::syntax(
            line,
            format!("duplicate label `{name}`"),
        ));
    }
    for (name, line) in gotos {
        if !labels.contains_key(name.as_str()) {
            return Err(ProgramError::syntax(
                line,
                format!("goto to undefined label `{name}`"),
            ));
        }
    }
    Ok(())
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

struct Declarator {
    name: Option<String>,
    pointers: Vec<Vec<String>>,
    dims: Vec<Option<Expr>>,
    line: u32,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn line(&self) -> u32 {
        self.peek().line
    }

    fn prev_line(&self) -> u32 {
        self.tokens[self.pos.saturating_sub(1)].line
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self) -> Result<T, ProgramError> {
        let t = self.peek();
        if let TokenKind::Keyword(k) = t.kind {
            if UNSUPPORTED.contains(&k) {
                return Err(ProgramError::syntax(
                    t.line,
                    format!("unsupported construct `{k}`"),
                ));
            }
        }
        if t.is_punct(".") || t.is_punct("->") {
            return Err(ProgramError::syntax(
                t.line,
                format!("unsupported construct {}", t.describe()),
            ));
        }
        Err(ProgramError::syntax(
            t.line,
            format!("unexpected token {}", t.describe()),
        ))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ProgramError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            let t = self.peek();
            if matches!(t.kind, TokenKind::Keyword(k) if UNSUPPORTED.contains(&k)) {
                return self.unexpected();
            }
            Err(ProgramError::syntax(
                t.line,
                format!("expected `{p}` but found {}", t.describe()),
            ))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ProgramError> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let name = name.clone();
                self.bump();
                Ok(name)
            }
            _ => self.unexpected(),
        }
    }

    fn at_type_start(&self) -> bool {
        match self.peek().kind {
            TokenKind::Keyword(k) => TYPE_KEYWORDS.contains(&k) || UNSUPPORTED.contains(&k),
            _ => false,
        }
    }

    fn specifiers(&mut self) -> Result<Vec<String>, ProgramError> {
        let mut toks = Vec::new();
        while let TokenKind::Keyword(k) = self.peek().kind {
            if UNSUPPORTED.contains(&k) {
                return self.unexpected();
            }
            if !TYPE_KEYWORDS.contains(&k) {
                break;
            }
            toks.push(k.to_string());
            self.bump();
        }
        if toks.is_empty() {
            return self.unexpected();
        }
        let has_base = toks.iter().any(|t| {
            BASE_TYPES.contains(&t.as_str())
                || matches!(t.as_str(), "long" | "short" | "signed" | "unsigned")
        });
        if !has_base {
            return Err(ProgramError::syntax(
                self.line(),
                format!("missing type specifier before {}", self.peek().describe()),
            ));
        }
        Ok(toks)
    }

    fn pointer_quals(&mut self) -> Vec<Vec<String>> {
        let mut ptrs = Vec::new();
        while self.eat_punct("*") {
            let mut quals = Vec::new();
            while let TokenKind::Keyword(k) = self.peek().kind {
                if matches!(k, "const" | "volatile" | "restrict") {
                    quals.push(k.to_string());
                    self.bump();
                } else {
                    break;
                }
            }
            ptrs.push(quals);
        }
        ptrs
    }

    fn declarator(&mut self, name_required: bool) -> Result<Declarator, ProgramError> {
        let pointers = self.pointer_quals();
        let line = self.line();
        let name = match &self.peek().kind {
            TokenKind::Ident(n) => {
                let n = n.clone();
                self.bump();
                Some(n)
            }
            _ if name_required => return self.unexpected(),
            _ => None,
        };
        let mut dims = Vec::new();
        while self.eat_punct("[") {
            if self.eat_punct("]") {
                dims.push(None);
            } else {
                let e = self.assignment()?;
                self.expect_punct("]")?;
                dims.push(Some(e));
            }
        }
        Ok(Declarator {
            name,
            pointers,
            dims,
            line,
        })
    }

    fn translation_unit(&mut self, line_count: u32) -> Result<Ast, ProgramError> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        while !matches!(self.peek().kind, TokenKind::Eof) {
            if self.eat_punct(";") {
                continue;
            }
            let start = self.line();
            let specs = self.specifiers()?;
            let decl = self.declarator(true)?;
            if self.peek().is_punct("(") {
                let name = decl.name.expect("declarator name is required");
                if !decl.dims.is_empty() {
                    return self.unexpected();
                }
                let params = self.params()?;
                if self.eat_punct(";") {
                    // prototype only
                    continue;
                }
                if !self.peek().is_punct("{") {
                    return self.unexpected();
                }
                let body = self.block()?;
                let span = Span::new(start, body.span.end);
                functions.push(Function {
                    name,
                    return_tokens: specs,
                    return_pointers: decl.pointers.len(),
                    params,
                    body,
                    span,
                });
                continue;
            }
            let decls = self.init_declarators(specs, decl)?;
            globals.extend(decls);
        }
        Ok(Ast {
            line_count,
            globals,
            functions,
        })
    }

    fn params(&mut self) -> Result<Vec<Param>, ProgramError> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        if self.peek().is_keyword("void") && self.peek_at(1).is_punct(")") {
            self.bump();
            self.bump();
            return Ok(params);
        }
        loop {
            if self.eat_punct("...") {
                self.expect_punct(")")?;
                return Ok(params);
            }
            let specs = self.specifiers()?;
            let d = self.declarator(false)?;
            params.push(Param {
                name: d.name,
                type_tokens: specs,
                pointers: d.pointers,
                dims: d.dims,
                line: d.line,
            });
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn init_declarators(
        &mut self,
        specs: Vec<String>,
        first: Declarator,
    ) -> Result<Vec<VarDecl>, ProgramError> {
        let mut out = Vec::new();
        let mut d = first;
        loop {
            let init = if self.eat_punct("=") {
                Some(self.initializer()?)
            } else {
                None
            };
            out.push(VarDecl {
                name: d.name.expect("declarator name is required"),
                type_tokens: specs.clone(),
                pointers: d.pointers,
                dims: d.dims,
                init,
                line: d.line,
            });
            if self.eat_punct(";") {
                return Ok(out);
            }
            self.expect_punct(",")?;
            d = self.declarator(true)?;
        }
    }

    fn initializer(&mut self) -> Result<Initializer, ProgramError> {
        if self.eat_punct("{") {
            let mut items = Vec::new();
            if self.eat_punct("}") {
                return Ok(Initializer::List(items));
            }
            loop {
                items.push(self.initializer()?);
                if self.eat_punct("}") {
                    break;
                }
                self.expect_punct(",")?;
                if self.eat_punct("}") {
                    break;
                }
            }
            Ok(Initializer::List(items))
        } else {
            Ok(Initializer::Expr(self.assignment()?))
        }
    }

    fn mk(&self, start: u32, kind: StmtKind) -> Stmt {
        Stmt {
            id: 0,
            span: Span::new(start, self.prev_line().max(start)),
            kind,
        }
    }

    fn block(&mut self) -> Result<Stmt, ProgramError> {
        let start = self.line();
        self.expect_punct("{")?;
        let mut items = Vec::new();
        while !self.peek().is_punct("}") {
            if matches!(self.peek().kind, TokenKind::Eof) {
                return self.unexpected();
            }
            self.statement_into(&mut items)?;
        }
        self.bump();
        Ok(self.mk(start, StmtKind::Block(items)))
    }

    /// Parses one statement. A label is its own statement, so `L: s;` yields two.
    fn statement_into(&mut self, out: &mut Vec<Stmt>) -> Result<(), ProgramError> {
        if let TokenKind::Ident(name) = &self.peek().kind {
            if self.peek_at(1).is_punct(":") {
                let name = name.clone();
                let start = self.line();
                self.bump();
                self.bump();
                out.push(self.mk(start, StmtKind::Label(name)));
                if self.peek().is_punct("}") {
                    return Ok(());
                }
                return self.statement_into(out);
            }
        }
        let s = self.statement()?;
        out.push(s);
        Ok(())
    }

    /// A sub-statement of if/for/while; a leading label wraps into a block.
    fn sub_statement(&mut self) -> Result<Stmt, ProgramError> {
        let start = self.line();
        let mut items = Vec::new();
        self.statement_into(&mut items)?;
        if items.len() == 1 {
            Ok(items.pop().expect("one statement"))
        } else {
            Ok(self.mk(start, StmtKind::Block(items)))
        }
    }

    fn statement(&mut self) -> Result<Stmt, ProgramError> {
        let start = self.line();
        let tok = self.peek().clone();
        if tok.is_punct("{") {
            return self.block();
        }
        if tok.is_punct(";") {
            self.bump();
            return Ok(self.mk(start, StmtKind::Empty));
        }
        if let TokenKind::Keyword(k) = tok.kind {
            match k {
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expression()?;
                    self.expect_punct(")")?;
                    let then_branch = Box::new(self.sub_statement()?);
                    let else_branch = if self.peek().is_keyword("else") {
                        self.bump();
                        Some(Box::new(self.sub_statement()?))
                    } else {
                        None
                    };
                    return Ok(self.mk(
                        start,
                        StmtKind::If {
                            cond,
                            then_branch,
                            else_branch,
                        },
                    ));
                }
                "while" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expression()?;
                    self.expect_punct(")")?;
                    let body = Box::new(self.sub_statement()?);
                    return Ok(self.mk(start, StmtKind::While { cond, body }));
                }
                "for" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let init = if self.eat_punct(";") {
                        None
                    } else if self.at_type_start() {
                        let specs = self.specifiers()?;
                        let d = self.declarator(true)?;
                        Some(ForInit::Decl(self.init_declarators(specs, d)?))
                    } else {
                        let e = self.expression()?;
                        self.expect_punct(";")?;
                        Some(ForInit::Expr(e))
                    };
                    let cond = if self.peek().is_punct(";") {
                        None
                    } else {
                        Some(self.expression()?)
                    };
                    self.expect_punct(";")?;
                    let step = if self.peek().is_punct(")") {
                        None
                    } else {
                        Some(self.expression()?)
                    };
                    self.expect_punct(")")?;
                    let body = Box::new(self.sub_statement()?);
                    return Ok(self.mk(
                        start,
                        StmtKind::For {
                            init,
                            cond,
                            step,
                            body,
                        },
                    ));
                }
                "goto" => {
                    self.bump();
                    let label = self.expect_ident()?;
                    self.expect_punct(";")?;
                    return Ok(self.mk(start, StmtKind::Goto(label)));
                }
                "return" => {
                    self.bump();
                    let value = if self.peek().is_punct(";") {
                        None
                    } else {
                        Some(self.expression()?)
                    };
                    self.expect_punct(";")?;
                    return Ok(self.mk(start, StmtKind::Return(value)));
                }
                "break" => {
                    self.bump();
                    self.expect_punct(";")?;
                    return Ok(self.mk(start, StmtKind::Break));
                }
                "continue" => {
                    self.bump();
                    self.expect_punct(";")?;
                    return Ok(self.mk(start, StmtKind::Continue));
                }
                "else" => return self.unexpected(),
                _ if UNSUPPORTED.contains(&k) => return self.unexpected(),
                _ if TYPE_KEYWORDS.contains(&k) => {
                    let specs = self.specifiers()?;
                    let d = self.declarator(true)?;
                    let decls = self.init_declarators(specs, d)?;
                    return Ok(self.mk(start, StmtKind::Decl(decls)));
                }
                _ => {}
            }
        }
        let e = self.expression()?;
        self.expect_punct(";")?;
        Ok(self.mk(start, StmtKind::Expr(e)))
    }

    fn expression(&mut self) -> Result<Expr, ProgramError> {
        let first = self.assignment()?;
        if !self.peek().is_punct(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_punct(",") {
            items.push(self.assignment()?);
        }
        Ok(Expr::Comma(items))
    }

    fn assignment(&mut self) -> Result<Expr, ProgramError> {
        let lhs = self.conditional()?;
        let op = match self.peek().kind {
            TokenKind::Punct(p) => match p {
                "=" => Some(AssignOp::Assign),
                "+=" => Some(AssignOp::Compound(BinaryOp::Add)),
                "-=" => Some(AssignOp::Compound(BinaryOp::Sub)),
                "*=" => Some(AssignOp::Compound(BinaryOp::Mul)),
                "/=" => Some(AssignOp::Compound(BinaryOp::Div)),
                "%=" => Some(AssignOp::Compound(BinaryOp::Mod)),
                "<<=" => Some(AssignOp::Compound(BinaryOp::Shl)),
                ">>=" => Some(AssignOp::Compound(BinaryOp::Shr)),
                "&=" => Some(AssignOp::Compound(BinaryOp::BitAnd)),
                "^=" => Some(AssignOp::Compound(BinaryOp::BitXor)),
                "|=" => Some(AssignOp::Compound(BinaryOp::BitOr)),
                _ => None,
            },
            _ => None,
        };
        let Some(op) = op else { return Ok(lhs) };
        if !is_lvalue(&lhs) {
            return Err(ProgramError::syntax(
                self.line(),
                format!("left side of {} is not assignable", self.peek().describe()),
            ));
        }
        self.bump();
        let value = self.assignment()?;
        Ok(Expr::Assign {
            op,
            target: Box::new(lhs),
            value: Box::new(value),
        })
    }

    fn conditional(&mut self) -> Result<Expr, ProgramError> {
        let cond = self.binary(1)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let then_expr = self.expression()?;
        self.expect_punct(":")?;
        let else_expr = self.conditional()?;
        Ok(Expr::Ternary {
            cond: Box::new(cond),
            then_expr: Box::new(then_expr),
            else_expr: Box::new(else_expr),
        })
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        use BinaryOp::*;
        let TokenKind::Punct(p) = self.peek().kind else {
            return None;
        };
        Some(match p {
            "*" => Mul,
            "/" => Div,
            "%" => Mod,
            "+" => Add,
            "-" => Sub,
            "<<" => Shl,
            ">>" => Shr,
            "<" => Lt,
            ">" => Gt,
            "<=" => Le,
            ">=" => Ge,
            "==" => Eq,
            "!=" => Ne,
            "&" => BitAnd,
            "^" => BitXor,
            "|" => BitOr,
            "&&" => And,
            "||" => Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ProgramError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn type_name(&mut self) -> Result<(Vec<String>, usize), ProgramError> {
        let specs = self.specifiers()?;
        let ptrs = self.pointer_quals();
        Ok((specs, ptrs.len()))
    }

    fn unary(&mut self) -> Result<Expr, ProgramError> {
        let tok = self.peek().clone();
        let op = match tok.kind {
            TokenKind::Punct("-") => Some(UnaryOp::Neg),
            TokenKind::Punct("+") => Some(UnaryOp::Plus),
            TokenKind::Punct("!") => Some(UnaryOp::Not),
            TokenKind::Punct("~") => Some(UnaryOp::BitNot),
            TokenKind::Punct("*") => Some(UnaryOp::Deref),
            TokenKind::Punct("&") => Some(UnaryOp::AddrOf),
            TokenKind::Punct("++") => Some(UnaryOp::PreInc),
            TokenKind::Punct("--") => Some(UnaryOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let expr = self.unary()?;
            if matches!(op, UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::AddrOf)
                && !is_lvalue(&expr)
            {
                return Err(ProgramError::syntax(
                    tok.line,
                    format!("operand of {} is not an lvalue", tok.describe()),
                ));
            }
            return Ok(Expr::Unary {
                op,
                expr: Box::new(expr),
            });
        }
        if tok.is_keyword("sizeof") {
            self.bump();
            if self.peek().is_punct("(")
                && matches!(self.peek_at(1).kind, TokenKind::Keyword(k) if TYPE_KEYWORDS.contains(&k))
            {
                self.bump();
                let (type_tokens, pointers) = self.type_name()?;
                self.expect_punct(")")?;
                return Ok(Expr::SizeofType {
                    type_tokens,
                    pointers,
                });
            }
            let e = self.unary()?;
            return Ok(Expr::SizeofExpr(Box::new(e)));
        }
        if tok.is_punct("(") {
            if let TokenKind::Keyword(k) = self.peek_at(1).kind {
                if TYPE_KEYWORDS.contains(&k) || UNSUPPORTED.contains(&k) {
                    self.bump();
                    let (type_tokens, pointers) = self.type_name()?;
                    self.expect_punct(")")?;
                    let expr = self.unary()?;
                    return Ok(Expr::Cast {
                        type_tokens,
                        pointers,
                        expr: Box::new(expr),
                    });
                }
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ProgramError> {
        let mut e = self.primary()?;
        loop {
            if self.eat_punct("[") {
                let index = self.expression()?;
                self.expect_punct("]")?;
                e = Expr::Index {
                    base: Box::new(e),
                    index: Box::new(index),
                };
            } else if self.peek().is_punct("(") {
                let Expr::Var(callee) = e else {
                    return self.unexpected();
                };
                self.bump();
                let mut args = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        args.push(self.assignment()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                e = Expr::Call { callee, args };
            } else if self.peek().is_punct("++") || self.peek().is_punct("--") {
                if !is_lvalue(&e) {
                    return self.unexpected();
                }
                let op = if self.bump().is_punct("++") {
                    IncDec::Inc
                } else {
                    IncDec::Dec
                };
                e = Expr::Postfix {
                    op,
                    expr: Box::new(e),
                };
            } else if self.peek().is_punct(".") || self.peek().is_punct("->") {
                return self.unexpected();
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ProgramError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Ident(name) => {
                self.bump();
                Ok(Expr::Var(name))
            }
            TokenKind::Int { value, text } => {
                self.bump();
                Ok(Expr::Int { value, text })
            }
            TokenKind::Float(text) => {
                self.bump();
                Ok(Expr::Float(text))
            }
            TokenKind::Char(v) => {
                self.bump();
                Ok(Expr::Char(v))
            }
            TokenKind::Str(s) => {
                self.bump();
                let mut s = s;
                while let TokenKind::Str(more) = &self.peek().kind {
                    s.push_str(more);
                    self.bump();
                }
                Ok(Expr::Str(s))
            }
            TokenKind::Punct("(") => {
                self.bump();
                let e = self.expression()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.unexpected(),
        }
    }
}

fn is_lvalue(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Var(_)
            | Expr::Index { .. }
            | Expr::Unary {
                op: UnaryOp::Deref,
                ..
            }
    )
}

/// Names of every label defined in a function.
pub fn labels_of(f: &Function) -> BTreeSet<String> {
    let mut set = BTreeSet::new();
    f.body.walk(&mut |s| {
        if let StmtKind::Label(n) = &s.kind {
            set.insert(n.clone());
        }
    });
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::fixtures::SAMPLE_FAILING;

    fn p(src: &str) -> Result<Ast, ProgramError> {
        parse(&SourceProgram::new("t", src).unwrap())
    }

    #[test]
    fn minimal_program() {
        let ast = p("int main(){return 0;}").unwrap();
        assert_eq!(ast.functions.len(), 1);
        let StmtKind::Block(body) = &ast.functions[0].body.kind else {
            panic!()
        };
        assert_eq!(body.len(), 1);
        assert_eq!(body[0].class(), StmtClass::Return);
    }

    #[test]
    fn sample_program() {
        let ast = p(SAMPLE_FAILING).unwrap();
        let globals: Vec<_> = ast.globals.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(globals, ["s", "a", "b", "c", "v", "u"]);
        let funcs: Vec<_> = ast.functions.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(funcs, ["foo", "main"]);
        assert_eq!(ast.globals[5].init.as_ref().unwrap().len(), 6);
    }

    #[test]
    fn malformed_expression_reports_line_and_token() {
        let err = p("int main(){ x = ; }").unwrap_err();
        let ProgramError::Syntax { line, message } = &err else {
            panic!()
        };
        assert_eq!(*line, 1);
        assert!(message.contains("`;`"), "{message}");
    }

    #[test]
    fn unsupported_constructs_fail_loudly() {
        for src in [
            "struct s { int a; };",
            "typedef int T;",
            "int main(){ switch (1) { } }",
            "int main(){ do { } while (1); }",
            "union u { int a; };",
        ] {
            let err = p(src).unwrap_err();
            assert!(err.to_string().contains("unsupported"), "{src}: {err}");
        }
    }

    #[test]
    fn spans_nest() {
        let ast = p(SAMPLE_FAILING).unwrap();
        fn check(s: &Stmt, lines: u32) {
            assert!(s.span.start >= 1 && s.span.end <= lines);
            for c in s.children() {
                assert!(s.span.contains(&c.span), "{:?} !⊇ {:?}", s.span, c.span);
                check(c, lines);
            }
        }
        for f in &ast.functions {
            check(&f.body, ast.line_count);
        }
    }

    #[test]
    fn inner_loop_spans_lines_12_to_18() {
        let ast = p(SAMPLE_FAILING).unwrap();
        let spans: Vec<_> = ast
            .statements()
            .into_iter()
            .filter(|s| s.class() == StmtClass::For)
            .map(|s| (s.span.start, s.span.end))
            .collect();
        assert_eq!(spans, [(7, 21), (9, 20), (12, 18)]);
    }

    #[test]
    fn goto_needs_label() {
        assert!(p("int main(){ goto L; L: return 0; }").is_ok());
        let err = p("int main(){ goto M; return 0; }").unwrap_err();
        assert!(err.to_string().contains("undefined label"));
    }

    #[test]
    fn ids_are_preorder_and_unique() {
        let ast = p(SAMPLE_FAILING).unwrap();
        let ids: Vec<_> = ast.statements().iter().map(|s| s.id).collect();
        let expected: Vec<_> = (0..ids.len()).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn casts_sizeof_and_qualified_pointers() {
        let ast = p("int * const volatile p; unsigned long x = sizeof(int) + (unsigned char) 3;")
            .unwrap();
        assert_eq!(
            ast.globals[0].pointers,
            vec![vec!["const".to_string(), "volatile".to_string()]]
        );
        assert!(matches!(
            ast.globals[1].init,
            Some(Initializer::Expr(Expr::Binary {
                op: BinaryOp::Add,
                ..
            }))
        ));
    }

    #[test]
    fn prototypes_are_accepted() {
        let ast = p("int printf(const char *, ...);\nvoid abort(void);\nint main(){ printf(\"x\"); abort(); return 0; }").unwrap();
        assert_eq!(ast.functions.len(), 1);
        assert_eq!(ast.count_calls("printf"), 1);
        assert_eq!(ast.count_calls("abort"), 1);
    }
}
