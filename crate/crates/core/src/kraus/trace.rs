use crate::interp::value::{eval_binary, eval_unary, EvalError, Value};
use crate::qcore::{builtin_gate, ket, Builtin, QError, UnitaryMatrix};
use crate::syntax::{BinOp, Pos, UnOp, VarType};
use crate::types::TypeSignature;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use std::fmt::{self, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{code}: {message}")]
pub struct SemanticsError {
    pub code: &'static str,
    pub message: String,
    pub pos: Option<Pos>,
}

impl SemanticsError {
    pub fn unbounded(message: impl Into<String>, pos: Option<Pos>) -> Self {
        SemanticsError {
            code: "E_UNBOUNDED",
            message: message.into(),
            pos,
        }
    }

    pub fn too_large(message: impl Into<String>) -> Self {
        SemanticsError {
            code: "E_TOO_LARGE",
            message: message.into(),
            pos: None,
        }
    }
}

/// A classical value known at extraction time, or an expression over labels
/// that are bound only when modules exchange data.
#[derive(Debug, Clone, PartialEq)]
pub enum Sym {
    Const(Value),
    Label(u32),
    Unary(UnOp, Box<Sym>),
    Binary(BinOp, Box<Sym>, Box<Sym>),
    Coerce(VarType, Box<Sym>),
}

impl Sym {
    pub fn constant(&self) -> Option<Value> {
        match self {
            Sym::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn unary(op: UnOp, a: Sym) -> Result<Sym, EvalError> {
        Ok(match a {
            Sym::Const(v) => Sym::Const(eval_unary(op, v)?),
            a => Sym::Unary(op, Box::new(a)),
        })
    }

    pub fn binary(op: BinOp, a: Sym, b: Sym) -> Result<Sym, EvalError> {
        Ok(match (a, b) {
            (Sym::Const(x), Sym::Const(y)) => Sym::Const(eval_binary(op, x, y)?),
            (a, b) => Sym::Binary(op, Box::new(a), Box::new(b)),
        })
    }

    pub fn coerce(self, ty: VarType) -> Sym {
        match self {
            Sym::Const(v) => Sym::Const(v.coerce(ty)),
            s => Sym::Coerce(ty, Box::new(s)),
        }
    }

    /// Evaluates with `lookup` supplying label values.
    pub fn eval(&self, lookup: &dyn Fn(u32) -> Option<Value>) -> Result<Option<Value>, EvalError> {
        Ok(match self {
            Sym::Const(v) => Some(*v),
            Sym::Label(l) => lookup(*l),
            Sym::Unary(op, a) => match a.eval(lookup)? {
                Some(v) => Some(eval_unary(*op, v)?),
                None => None,
            },
            Sym::Binary(op, a, b) => match (a.eval(lookup)?, b.eval(lookup)?) {
                (Some(x), Some(y)) => Some(eval_binary(*op, x, y)?),
                _ => None,
            },
            Sym::Coerce(ty, a) => a.eval(lookup)?.map(|v| v.coerce(*ty)),
        })
    }

    pub fn labels(&self, out: &mut Vec<u32>) {
        match self {
            Sym::Const(_) => {}
            Sym::Label(l) => out.push(*l),
            Sym::Unary(_, a) | Sym::Coerce(_, a) => a.labels(out),
            Sym::Binary(_, a, b) => {
                a.labels(out);
                b.labels(out);
            }
        }
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Const(v) => write!(f, "{v}"),
            Sym::Label(l) => write!(f, "${l}"),
            Sym::Unary(UnOp::Neg, a) => write!(f, "-({a})"),
            Sym::Unary(UnOp::Not, a) => write!(f, "!({a})"),
            Sym::Binary(op, a, b) => write!(f, "({a} {} {b})", op.as_str()),
            Sym::Coerce(ty, a) => write!(f, "{}({a})", ty.as_str()),
        }
    }
}

impl Serialize for Sym {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    H,
    Not,
    CNot,
    Phase(Sym),
    /// Applied as one Hadamard per target.
    FT(u32),
    Matrix(UnitaryMatrix),
}

impl GateOp {
    pub fn label(&self) -> String {
        match self {
            GateOp::H => "H".into(),
            GateOp::Not => "Not".into(),
            GateOp::CNot => "CNot".into(),
            GateOp::Phase(s) => format!("Phase({s})"),
            GateOp::FT(n) => format!("FT({n})"),
            GateOp::Matrix(u) => format!("U{}", render_matrix(u)),
        }
    }

    /// The operator for a resolved gate; `None` while the phase is symbolic.
    /// `FT` yields the single-qbit Hadamard it is built from.
    pub fn matrix(&self) -> Option<Result<UnitaryMatrix, QError>> {
        Some(match self {
            GateOp::H | GateOp::FT(_) => builtin_gate(Builtin::H),
            GateOp::Not => builtin_gate(Builtin::Not),
            GateOp::CNot => builtin_gate(Builtin::CNot),
            GateOp::Phase(s) => builtin_gate(Builtin::Phase(s.constant()?.as_f64())),
            GateOp::Matrix(u) => Ok(u.clone()),
        })
    }
}

fn render_number(x: f64) -> String {
    let x = if x.abs() < 5e-13 { 0.0 } else { x };
    let s = format!("{:.12}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn render_complex(z: num_complex::Complex64) -> String {
    let re = render_number(z.re);
    if render_number(z.im) == "0" {
        return re;
    }
    let im = render_number(z.im.abs());
    let sign = if z.im < 0.0 { '-' } else { '+' };
    if re == "0" {
        format!("{}{im}i", if sign == '-' { "-" } else { "" })
    } else {
        format!("{re}{sign}{im}i")
    }
}

fn render_matrix(u: &UnitaryMatrix) -> String {
    let rows: Vec<String> = (0..u.dim())
        .map(|r| {
            let cells: Vec<String> = (0..u.dim()).map(|c| render_complex(u.get(r, c))).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

impl Serialize for GateOp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Gate", 2)?;
        let name = match self {
            GateOp::H => "H",
            GateOp::Not => "Not",
            GateOp::CNot => "CNot",
            GateOp::Phase(_) => "Phase",
            GateOp::FT(_) => "FT",
            GateOp::Matrix(_) => "Matrix",
        };
        st.serialize_field("name", name)?;
        match self {
            GateOp::Phase(p) => st.serialize_field("param", &p.to_string())?,
            GateOp::FT(n) => st.serialize_field("param", n)?,
            GateOp::Matrix(u) => {
                let entries: Vec<[f64; 2]> = u.entries().iter().map(|z| [z.re, z.im]).collect();
                st.serialize_field("param", &entries)?
            }
            _ => st.skip_field("param")?,
        }
        st.end()
    }
}

fn ty_name<S: Serializer>(ty: &VarType, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(ty.as_str())
}

/// One value in a `send`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Item {
    Quantum {
        #[serde(serialize_with = "ty_name")]
        ty: VarType,
        targets: Vec<usize>,
    },
    Classical {
        #[serde(serialize_with = "ty_name")]
        ty: VarType,
        value: Sym,
    },
}

/// One binding in a `receive`: fresh heap positions or a fresh label.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Slot {
    Quantum {
        #[serde(serialize_with = "ty_name")]
        ty: VarType,
        targets: Vec<usize>,
    },
    Classical {
        #[serde(serialize_with = "ty_name")]
        ty: VarType,
        label: u32,
    },
}

impl Item {
    pub fn signature(&self) -> TypeSignature {
        match self {
            Item::Quantum { ty, .. } | Item::Classical { ty, .. } => TypeSignature::of(*ty),
        }
    }
}

impl Slot {
    pub fn signature(&self) -> TypeSignature {
        match self {
            Slot::Quantum { ty, .. } | Slot::Classical { ty, .. } => TypeSignature::of(*ty),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Text {
    Literal(String),
    Value(Sym),
}

impl fmt::Display for Text {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Text::Literal(s) => write!(f, "{s:?}"),
            Text::Value(v) => write!(f, "{v}"),
        }
    }
}

/// One element of a module's Kraus aggregation, in application order.
/// Heap positions are numbered per module in allocation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Element {
    /// Fresh qbits in basis state `init`, most significant bit first.
    Create { targets: Vec<usize>, init: u64 },
    Gate { gate: GateOp, targets: Vec<usize> },
    /// `{S}` placeholder.
    Send { to: String, items: Vec<Item> },
    /// `{R}` placeholder.
    Receive { from: String, slots: Vec<Slot> },
    Print { text: Text },
    Dump { prefix: Option<Text>, targets: Vec<usize> },
    /// Scope exit: the qbits are measured and forgotten.
    Discard { targets: Vec<usize> },
    /// Always last in its list; each arm carries the rest of the module.
    Branch(BranchSum),
    /// A runtime error reached on this path.
    Abort { code: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSum {
    /// Preorder number; arm `v` has probability tag `p#id.v`.
    pub id: u32,
    pub kind: BranchKind,
    pub arms: Vec<Arm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BranchKind {
    /// Projective measurement; arm outcomes are basis patterns.
    Measure { targets: Vec<usize> },
    /// Classical condition on received data; arm 1 is taken when it holds.
    Guard { cond: Sym },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arm {
    pub outcome: u64,
    pub body: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuleTrace {
    pub name: String,
    pub elements: Vec<Element>,
}

/// Per-module aggregations of a program; a plain program has the single
/// module `main`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Semantics {
    pub modules: Vec<ModuleTrace>,
}

pub(crate) fn at(targets: &[usize]) -> String {
    let t: Vec<String> = targets.iter().map(|t| t.to_string()).collect();
    format!("@{}", t.join(","))
}

impl Element {
    /// Single-line rendering, without nested arms.
    pub fn head(&self) -> String {
        match self {
            Element::Create { targets, init } => format!("Create{} := {}", at(targets), ket(*init, targets.len())),
            Element::Gate { gate, targets } => format!("Gate({}){}", gate.label(), at(targets)),
            Element::Send { to, items } => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|i| match i {
                        Item::Quantum { ty, targets } => format!("{}{}", ty.as_str(), at(targets)),
                        Item::Classical { ty, value } => format!("{}={value}", ty.as_str()),
                    })
                    .collect();
                format!("{{S}} -> {to}: {}", parts.join(", "))
            }
            Element::Receive { from, slots } => {
                let parts: Vec<String> = slots
                    .iter()
                    .map(|s| match s {
                        Slot::Quantum { ty, targets } => format!("{}{}", ty.as_str(), at(targets)),
                        Slot::Classical { ty, label } => format!("{}=${label}", ty.as_str()),
                    })
                    .collect();
                format!("{{R}} <- {from}: {}", parts.join(", "))
            }
            Element::Print { text } => format!("Print {text}"),
            Element::Dump { prefix: None, targets } => format!("Dump{}", at(targets)),
            Element::Dump { prefix: Some(p), targets } => format!("Dump{} {p}", at(targets)),
            Element::Discard { targets } => format!("Discard{}", at(targets)),
            Element::Branch(b) => match &b.kind {
                BranchKind::Measure { targets } => format!("BranchSum#{} Measure{}", b.id, at(targets)),
                BranchKind::Guard { cond } => format!("BranchSum#{} Guard {cond}", b.id),
            },
            Element::Abort { code, message } => format!("Abort {code}: {message}"),
        }
    }

    pub(crate) fn write_tree(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = writeln!(out, "{pad}{}", self.head());
        if let Element::Branch(b) = self {
            for arm in &b.arms {
                let _ = writeln!(out, "{pad}  [p#{}.{}]", b.id, arm.outcome);
                write_list(&arm.body, out, depth + 2);
            }
        }
    }
}

pub(crate) fn write_list(list: &[Element], out: &mut String, depth: usize) {
    for e in list {
        e.write_tree(out, depth);
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for m in &self.modules {
            let _ = writeln!(out, "module {}", m.name);
            write_list(&m.elements, &mut out, 1);
        }
        f.write_str(&out)
    }
}

impl fmt::Display for ModuleTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_list(&self.elements, &mut out, 0);
        f.write_str(&out)
    }
}
