//! Abstract syntax tree for cQPL programs.
//!
//! Every statement and expression node carries the source position of its
//! first token so later passes can report diagnostics against the source.

use super::token::Pos;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum Program {
    /// A plain statement list.
    Statements(Vec<Stmt>),
    /// A non-empty list of communicating modules.
    Modules(Vec<ModuleDef>),
}

impl Program {
    pub fn is_modular(&self) -> bool {
        matches!(self, Program::Modules(_))
    }

    pub fn module_names(&self) -> Vec<&str> {
        match self {
            Program::Statements(_) => Vec::new(),
            Program::Modules(ms) => ms.iter().map(|m| m.name.name.as_str()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDef {
    pub name: Ident,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub pos: Pos,
}

impl Ident {
    pub fn new(name: impl Into<String>, pos: Pos) -> Self {
        Ident { name: name.into(), pos }
    }
}

/// Declared variable types. `short`/`qshort` are 8-bit aliases outside the
/// core grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Bit,
    Qbit,
    Short,
    Qshort,
    Int,
    Qint,
    Float,
}

impl VarType {
    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Bit => "bit",
            VarType::Qbit => "qbit",
            VarType::Short => "short",
            VarType::Qshort => "qshort",
            VarType::Int => "int",
            VarType::Qint => "qint",
            VarType::Float => "float",
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, VarType::Qbit | VarType::Qshort | VarType::Qint)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub ty: VarType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Allocate {
        ty: VarType,
        name: Ident,
        init: Expr,
    },
    Assign {
        target: Ident,
        value: Expr,
    },
    AssignMeasure {
        target: Ident,
        source: Ident,
    },
    MeasureBranch {
        qvar: Ident,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    GateApply {
        targets: Vec<Ident>,
        gate: Gate,
    },
    Send {
        vars: Vec<Ident>,
        dest: Ident,
    },
    Receive {
        bindings: Vec<Param>,
        source: Ident,
    },
    ProcDecl(Box<ProcDecl>),
    ProcCall {
        results: Option<Vec<Ident>>,
        name: Ident,
        args: Vec<Expr>,
    },
    Print(PrintArg),
    Dump(Vec<Ident>),
    Skip,
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    /// Explicit `-> context`, when written. Always equal to the classical
    /// subset of `params`.
    pub returns: Option<Vec<Param>>,
    pub body: Vec<Stmt>,
    /// The statement in which the procedure is visible.
    pub scope: Stmt,
}

impl ProcDecl {
    pub fn classical_params(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| !p.ty.is_quantum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrintArg {
    Text(String),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    Not,
    CNot,
    Phase(Expr),
    FT(u32),
    /// Row-major entries of a user-defined operator.
    Matrix(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Var(String),
    Paren(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&",
            BinOp::Or => "|",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// Identifiers referenced anywhere in the expression.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            ExprKind::Var(v) => out.push(v),
            ExprKind::Paren(e) | ExprKind::Unary(_, e) => e.collect_vars(out),
            ExprKind::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) => {}
        }
    }
}
