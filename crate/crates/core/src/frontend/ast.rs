//! Syntax tree for MiniJ source files.

#[derive(Debug, Clone, PartialEq)]
pub enum TypeName {
    Int,
    Float,
    Bool,
    Str,
    Class(String),
}

impl TypeName {
    pub fn from_ident(name: &str) -> TypeName {
        match name {
            "int" => TypeName::Int,
            "float" => TypeName::Float,
            "bool" => TypeName::Bool,
            "string" => TypeName::Str,
            other => TypeName::Class(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            TypeName::Int => "int",
            TypeName::Float => "float",
            TypeName::Bool => "bool",
            TypeName::Str => "string",
            TypeName::Class(name) => name,
        }
    }

    /// Values of these types cannot be mutated through a reference.
    pub fn is_value_type(&self) -> bool {
        !matches!(self, TypeName::Class(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnnotationValue {
    Ident(String),
    Str(String),
    Int(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub name: String,
    pub args: Vec<(String, AnnotationValue)>,
}

impl Annotation {
    pub fn marker(name: &str) -> Annotation {
        Annotation {
            name: name.to_string(),
            args: Vec::new(),
        }
    }

    pub fn arg(&self, key: &str) -> Option<&AnnotationValue> {
        self.args.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKind {
    Class,
    Enum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub annotations: Vec<Annotation>,
    pub kind: ClassKind,
    pub name: String,
    pub superclass: Option<String>,
    pub members: Vec<Member>,
    /// 1-based line of the `class`/`enum` keyword; not part of structural identity.
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Field(FieldDecl),
    Method(MethodDecl),
    Class(ClassDecl),
    EnumConstants(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub is_static: bool,
    pub ty: TypeName,
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub annotations: Vec<Annotation>,
    pub is_static: bool,
    /// `None` for constructors, `Some(None)` for `void`.
    pub ret: Option<Option<TypeName>>,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
}

impl MethodDecl {
    pub fn is_constructor(&self) -> bool {
        self.ret.is_none()
    }

    pub fn has_annotation(&self, name: &str) -> bool {
        self.annotations.iter().any(|a| a.name == name)
    }

    pub fn annotation(&self, name: &str) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssertKind {
    Eq,
    True,
    Near,
}

impl AssertKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AssertKind::Eq => "assertEq",
            AssertKind::True => "assertTrue",
            AssertKind::Near => "assertNear",
        }
    }

    pub fn from_keyword(word: &str) -> Option<AssertKind> {
        match word {
            "assertEq" => Some(AssertKind::Eq),
            "assertTrue" => Some(AssertKind::True),
            "assertNear" => Some(AssertKind::Near),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn binary(self) -> Option<BinOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    VarDecl {
        ty: TypeName,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        op: AssignOp,
        value: Expr,
    },
    Expr(Expr),
    Assert {
        kind: AssertKind,
        args: Vec<Expr>,
    },
    Return(Option<Expr>),
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        else_block: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Box<Stmt>>,
        body: Vec<Stmt>,
    },
    /// Instrumentation-only scope marker: records every traced call made
    /// while `body` runs against `entity`. The body shares the enclosing scope.
    Trace { entity: String, body: Vec<Stmt> },
}

impl Stmt {
    pub fn is_conditional(&self) -> bool {
        matches!(self, Stmt::If { .. } | Stmt::While { .. } | Stmt::For { .. })
    }

    /// Direct child blocks (for recursive walks).
    pub fn child_blocks(&self) -> Vec<&[Stmt]> {
        match self {
            Stmt::If {
                then_block,
                else_block,
                ..
            } => {
                let mut blocks = vec![then_block.as_slice()];
                if let Some(e) = else_block {
                    blocks.push(e.as_slice());
                }
                blocks
            }
            Stmt::While { body, .. } | Stmt::Trace { body, .. } => vec![body.as_slice()],
            Stmt::For { body, .. } => vec![body.as_slice()],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem
        )
    }

    pub fn is_relational(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Null,
    This,
    Ident(String),
    List(Vec<Expr>),
    New {
        class: String,
        args: Vec<Expr>,
    },
    /// `receiver.name(args)`, or a bare `name(args)` when `receiver` is `None`.
    Call {
        receiver: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
    },
    Field {
        target: Box<Expr>,
        name: String,
    },
    Unary {
        op: UnOp,
        expr: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// `throw(Name)`
    Throw(String),
}

impl Expr {
    /// The identifier at the root of a receiver/field chain, if any.
    pub fn root_ident(&self) -> Option<&str> {
        match self {
            Expr::Ident(name) => Some(name),
            Expr::Field { target, .. } => target.root_ident(),
            Expr::Call {
                receiver: Some(r), ..
            } => r.root_ident(),
            _ => None,
        }
    }

    /// Visit this expression and all sub-expressions in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::List(items) => items.iter().for_each(|e| e.walk(f)),
            Expr::New { args, .. } => args.iter().for_each(|e| e.walk(f)),
            Expr::Call { receiver, args, .. } => {
                if let Some(r) = receiver {
                    r.walk(f);
                }
                args.iter().for_each(|e| e.walk(f));
            }
            Expr::Field { target, .. } => target.walk(f),
            Expr::Unary { expr, .. } => expr.walk(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            _ => {}
        }
    }
}

/// Visit every expression directly owned by `stmt` (not nested statements).
pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    match stmt {
        Stmt::VarDecl { init, .. } => init.iter().collect(),
        Stmt::Assign { target, value, .. } => vec![target, value],
        Stmt::Expr(e) => vec![e],
        Stmt::Assert { args, .. } => args.iter().collect(),
        Stmt::Return(e) => e.iter().collect(),
        Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
        Stmt::For { cond, .. } => cond.iter().collect(),
        Stmt::Trace { .. } => Vec::new(),
    }
}

/// Visit `stmts` and every nested statement in pre-order.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for stmt in stmts {
        f(stmt);
        if let Stmt::For { init, update, .. } = stmt {
            if let Some(s) = init {
                walk_stmts(std::slice::from_ref(s.as_ref()), f);
            }
            if let Some(s) = update {
                walk_stmts(std::slice::from_ref(s.as_ref()), f);
            }
        }
        for block in stmt.child_blocks() {
            walk_stmts(block, f);
        }
    }
}

/// Visit every expression reachable from `stmts`, including nested statements.
pub fn walk_all_exprs<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Expr)) {
    walk_stmts(stmts, &mut |s| {
        for e in stmt_exprs(s) {
            e.walk(f);
        }
    });
}
