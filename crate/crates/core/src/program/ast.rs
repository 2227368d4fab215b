use serde::{Deserialize, Serialize};

/// 1-based inclusive line span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(start: u32, end: u32) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }
}

/// Identifier of a statement, unique within one [`Ast`] (pre-order numbering).
pub type StmtId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ast {
    pub line_count: u32,
    pub globals: Vec<VarDecl>,
    pub functions: Vec<Function>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    /// Specifier tokens in source order: storage class, qualifiers, modifiers, base type.
    pub type_tokens: Vec<String>,
    /// One entry per `*`, holding the qualifiers that follow it.
    pub pointers: Vec<Vec<String>>,
    /// Array dimensions; `None` for `[]`.
    pub dims: Vec<Option<Expr>>,
    pub init: Option<Initializer>,
    pub line: u32,
}

impl VarDecl {
    pub fn is_pointer(&self) -> bool {
        !self.pointers.is_empty()
    }

    pub fn is_array(&self) -> bool {
        !self.dims.is_empty()
    }

    pub fn has_initializer(&self) -> bool {
        self.init.is_some()
    }

    pub fn has_token(&self, tok: &str) -> bool {
        self.type_tokens.iter().any(|t| t == tok)
            || self.pointers.iter().flatten().any(|t| t == tok)
    }

    /// Storage size in bytes of one object of the declared base type (LP64).
    pub fn base_size(&self) -> u32 {
        base_type_size(&self.type_tokens)
    }
}

/// Size of the base (non-pointer) type described by specifier tokens, LP64.
pub fn base_type_size(tokens: &[String]) -> u32 {
    let has = |t: &str| tokens.iter().any(|x| x == t);
    let longs = tokens.iter().filter(|t| *t == "long").count();
    if has("char") || has("_Bool") {
        1
    } else if has("short") {
        2
    } else if has("double") {
        if longs > 0 {
            16
        } else {
            8
        }
    } else if has("float") {
        4
    } else if longs > 0 {
        8
    } else if has("void") {
        1
    } else {
        4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Initializer {
    Expr(Expr),
    List(Vec<Initializer>),
}

impl Initializer {
    /// Number of top-level elements (1 for a scalar initializer).
    pub fn len(&self) -> usize {
        match self {
            Initializer::Expr(_) => 1,
            Initializer::List(items) => items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Initializer::Expr(e) => vec![e],
            Initializer::List(items) => items.iter().flat_map(|i| i.exprs()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: Option<String>,
    pub type_tokens: Vec<String>,
    pub pointers: Vec<Vec<String>>,
    pub dims: Vec<Option<Expr>>,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Function {
    pub name: String,
    pub return_tokens: Vec<String>,
    pub return_pointers: usize,
    pub params: Vec<Param>,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stmt {
    pub id: StmtId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StmtKind {
    Decl(Vec<VarDecl>),
    Expr(Expr),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    For {
        init: Option<ForInit>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    Goto(String),
    Label(String),
    Return(Option<Expr>),
    Break,
    Continue,
    Block(Vec<Stmt>),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ForInit {
    Decl(Vec<VarDecl>),
    Expr(Expr),
}

/// Coarse statement classification used by the CFG, complexity and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtClass {
    Decl,
    Assign,
    If,
    For,
    While,
    Goto,
    Label,
    Call,
    Return,
    Expr,
    Block,
    Break,
    Continue,
    Empty,
}

impl StmtClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            StmtClass::Decl => "decl",
            StmtClass::Assign => "assign",
            StmtClass::If => "if",
            StmtClass::For => "for",
            StmtClass::While => "while",
            StmtClass::Goto => "goto",
            StmtClass::Label => "label",
            StmtClass::Call => "call",
            StmtClass::Return => "return",
            StmtClass::Expr => "expr",
            StmtClass::Block => "block",
            StmtClass::Break => "break",
            StmtClass::Continue => "continue",
            StmtClass::Empty => "empty",
        }
    }

    pub fn parse(s: &str) -> Option<StmtClass> {
        use StmtClass::*;
        [
            Decl, Assign, If, For, While, Goto, Label, Call, Return, Expr, Block, Break, Continue,
            Empty,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }
}

impl Stmt {
    pub fn class(&self) -> StmtClass {
        match &self.kind {
            StmtKind::Decl(_) => StmtClass::Decl,
            StmtKind::Expr(Expr::Assign { .. }) => StmtClass::Assign,
            StmtKind::Expr(Expr::Call { .. }) => StmtClass::Call,
            StmtKind::Expr(_) => StmtClass::Expr,
            StmtKind::If { .. } => StmtClass::If,
            StmtKind::For { .. } => StmtClass::For,
            StmtKind::While { .. } => StmtClass::While,
            StmtKind::Goto(_) => StmtClass::Goto,
            StmtKind::Label(_) => StmtClass::Label,
            StmtKind::Return(_) => StmtClass::Return,
            StmtKind::Break => StmtClass::Break,
            StmtKind::Continue => StmtClass::Continue,
            StmtKind::Block(_) => StmtClass::Block,
            StmtKind::Empty => StmtClass::Empty,
        }
    }

    /// Loops and conditionals: statements that own nested statements.
    pub fn is_compound(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. } | StmtKind::For { .. } | StmtKind::While { .. }
        )
    }

    /// Direct child statements (not recursing).
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                let mut v = vec![then_branch.as_ref()];
                if let Some(e) = else_branch {
                    v.push(e.as_ref());
                }
                v
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => vec![body.as_ref()],
            StmtKind::Block(items) => items.iter().collect(),
            _ => Vec::new(),
        }
    }

    /// Expressions evaluated by this statement itself (headers for compound
    /// statements; nested statements are excluded).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl(decls) => decls.iter().flat_map(decl_exprs).collect(),
            StmtKind::Expr(e) => vec![e],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For {
                init, cond, step, ..
            } => {
                let mut v = Vec::new();
                match init {
                    Some(ForInit::Decl(decls)) => v.extend(decls.iter().flat_map(decl_exprs)),
                    Some(ForInit::Expr(e)) => v.push(e),
                    None => {}
                }
                v.extend(cond.iter());
                v.extend(step.iter());
                v
            }
            StmtKind::Return(Some(e)) => vec![e],
            _ => Vec::new(),
        }
    }

    /// Pre-order walk over this statement and every nested statement.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

fn decl_exprs(d: &VarDecl) -> Vec<&Expr> {
    let mut v: Vec<&Expr> = d.dims.iter().flatten().collect();
    if let Some(init) = &d.init {
        v.extend(init.exprs());
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Int {
        value: i128,
        text: String,
    },
    Float(String),
    Char(i128),
    Str(String),
    Var(String),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Postfix {
        op: IncDec,
        expr: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Assign {
        op: AssignOp,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then_expr: Box<Expr>,
        else_expr: Box<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Cast {
        type_tokens: Vec<String>,
        pointers: usize,
        expr: Box<Expr>,
    },
    SizeofType {
        type_tokens: Vec<String>,
        pointers: usize,
    },
    SizeofExpr(Box<Expr>),
    Comma(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IncDec {
    Inc,
    Dec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Mul,
    Div,
    Mod,
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(&self) -> &'static str {
        use BinaryOp::*;
        match self {
            Mul => "*",
            Div => "/",
            Mod => "%",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            BitAnd => "&",
            BitXor => "^",
            BitOr => "|",
            And => "&&",
            Or => "||",
        }
    }

    pub fn precedence(&self) -> u8 {
        use BinaryOp::*;
        match self {
            Mul | Div | Mod => 10,
            Add | Sub => 9,
            Shl | Shr => 8,
            Lt | Gt | Le | Ge => 7,
            Eq | Ne => 6,
            BitAnd => 5,
            BitXor => 4,
            BitOr => 3,
            And => 2,
            Or => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignOp {
    Assign,
    Compound(BinaryOp),
}

impl AssignOp {
    pub fn symbol(&self) -> String {
        match self {
            AssignOp::Assign => "=".to_string(),
            AssignOp::Compound(op) => format!("{}=", op.symbol()),
        }
    }
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Unary { expr, .. }
            | Expr::Postfix { expr, .. }
            | Expr::Cast { expr, .. }
            | Expr::SizeofExpr(expr) => vec![expr],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Assign { target, value, .. } => vec![target, value],
            Expr::Ternary {
                cond,
                then_expr,
                else_expr,
            } => vec![cond, then_expr, else_expr],
            Expr::Call { args, .. } => args.iter().collect(),
            Expr::Index { base, index } => vec![base, index],
            Expr::Comma(items) => items.iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Expression-level decision points: `?:`, `&&`, `||`.
    pub fn decision_count(&self) -> u32 {
        let mut n = 0;
        self.walk(&mut |e| match e {
            Expr::Ternary { .. } => n += 1,
            Expr::Binary {
                op: BinaryOp::And | BinaryOp::Or,
                ..
            } => n += 1,
            _ => {}
        });
        n
    }

    /// Names of the functions called anywhere inside this expression.
    pub fn called_functions(&self) -> Vec<&str> {
        let mut v = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Call { callee, .. } = e {
                v.push(callee.as_str());
            }
        });
        v
    }
}

impl Ast {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Every statement in every function, pre-order.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut v = Vec::new();
        for f in &self.functions {
            f.body.walk(&mut |s| v.push(s));
        }
        v
    }

    /// Number of calls to `name` anywhere in the program.
    pub fn count_calls(&self, name: &str) -> usize {
        let mut n = 0;
        let mut visit = |e: &Expr| {
            n += e.called_functions().iter().filter(|c| **c == name).count();
        };
        for g in &self.globals {
            for e in decl_exprs(g) {
                visit(e);
            }
        }
        for s in self.statements() {
            for e in s.own_exprs() {
                visit(e);
            }
        }
        n
    }
}
