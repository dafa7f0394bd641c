//! Static semantic analysis: type signatures, the typing judgments, and the
//! communication balance check.

mod balance;
mod checker;

pub use balance::{comm_balance_check, BalanceReport, ChannelTraffic};
pub use checker::{check_gate_apply, check_measure, check_program, CheckedProgram, TypingContext};

use crate::syntax::{Pos, VarType};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Classical,
    Quantum,
}

/// Kind plus bit/qbit width of a value. `float` is classical, 64 wide and
/// cannot receive measurement results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TypeSignature {
    pub kind: Kind,
    pub width: u32,
    pub float: bool,
}

impl TypeSignature {
    pub const VOID: TypeSignature = TypeSignature::classical(0);
    pub const BIT: TypeSignature = TypeSignature::classical(1);
    pub const SHORT: TypeSignature = TypeSignature::classical(8);
    pub const INT: TypeSignature = TypeSignature::classical(16);
    pub const FLOAT: TypeSignature = TypeSignature {
        kind: Kind::Classical,
        width: 64,
        float: true,
    };
    pub const QBIT: TypeSignature = TypeSignature::quantum(1);
    pub const QSHORT: TypeSignature = TypeSignature::quantum(8);
    pub const QINT: TypeSignature = TypeSignature::quantum(16);

    pub const fn classical(width: u32) -> Self {
        TypeSignature {
            kind: Kind::Classical,
            width,
            float: false,
        }
    }

    pub const fn quantum(width: u32) -> Self {
        TypeSignature {
            kind: Kind::Quantum,
            width,
            float: false,
        }
    }

    pub fn of(ty: VarType) -> Self {
        match ty {
            VarType::Bit => Self::BIT,
            VarType::Qbit => Self::QBIT,
            VarType::Short => Self::SHORT,
            VarType::Qshort => Self::QSHORT,
            VarType::Int => Self::INT,
            VarType::Qint => Self::QINT,
            VarType::Float => Self::FLOAT,
        }
    }

    /// `q(σ)`: purely quantum with non-zero width.
    pub fn is_quantum(&self) -> bool {
        self.kind == Kind::Quantum && self.width > 0
    }

    /// `c(σ)`: purely classical.
    pub fn is_classical(&self) -> bool {
        self.kind == Kind::Classical
    }

    /// Number of qbits, `t_q`.
    pub fn qbits(&self) -> u32 {
        if self.kind == Kind::Quantum {
            self.width
        } else {
            0
        }
    }

    /// Number of classical bits, `t_c`.
    pub fn bits(&self) -> u32 {
        if self.kind == Kind::Classical {
            self.width
        } else {
            0
        }
    }
}

impl fmt::Display for TypeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match (self.kind, self.width, self.float) {
            (Kind::Classical, _, true) => "float",
            (Kind::Classical, 0, _) => "void",
            (Kind::Classical, 1, _) => "bit",
            (Kind::Classical, 8, _) => "short",
            (Kind::Classical, 16, _) => "int",
            (Kind::Quantum, 1, _) => "qbit",
            (Kind::Quantum, 8, _) => "qshort",
            (Kind::Quantum, 16, _) => "qint",
            (Kind::Classical, w, _) => return write!(f, "classical[{w}]"),
            (Kind::Quantum, w, _) => return write!(f, "quantum[{w}]"),
        };
        f.write_str(name)
    }
}

/// Type equivalence: same kind and same width; floats only match floats.
pub fn type_equiv(a: &TypeSignature, b: &TypeSignature) -> bool {
    a.kind == b.kind && a.width == b.width && a.float == b.float
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

/// Stable diagnostic codes, one per violated judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Code {
    Syntax,
    DupTuple,
    DimMismatch,
    NotQuantum,
    NotClassical,
    NotUnitary,
    BadParam,
    MeasureWidth,
    MeasureFloat,
    UseAfterSend,
    SendBorrowed,
    RecvShadow,
    UnknownModule,
    SelfSend,
    CommOutsideModule,
    Undeclared,
    Redeclared,
    TypeMismatch,
    CondNotBit,
    QuantumInit,
    UnknownProc,
    Arity,
    ArgType,
    CommImbalance,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Syntax => "E_SYNTAX",
            Code::DupTuple => "E_DUP_TUPLE",
            Code::DimMismatch => "E_DIM_MISMATCH",
            Code::NotQuantum => "E_NOT_QUANTUM",
            Code::NotClassical => "E_NOT_CLASSICAL",
            Code::NotUnitary => "E_NOT_UNITARY",
            Code::BadParam => "E_BAD_PARAM",
            Code::MeasureWidth => "E_MEASURE_WIDTH",
            Code::MeasureFloat => "E_MEASURE_FLOAT",
            Code::UseAfterSend => "E_USE_AFTER_SEND",
            Code::SendBorrowed => "E_SEND_BORROWED",
            Code::RecvShadow => "E_RECV_SHADOW",
            Code::UnknownModule => "E_UNKNOWN_MODULE",
            Code::SelfSend => "E_SELF_SEND",
            Code::CommOutsideModule => "E_COMM_OUTSIDE_MODULE",
            Code::Undeclared => "E_UNDECLARED",
            Code::Redeclared => "E_REDECLARED",
            Code::TypeMismatch => "E_TYPE_MISMATCH",
            Code::CondNotBit => "E_COND_NOT_BIT",
            Code::QuantumInit => "E_QUANTUM_INIT",
            Code::UnknownProc => "E_UNKNOWN_PROC",
            Code::Arity => "E_ARITY",
            Code::ArgType => "E_ARG_TYPE",
            Code::CommImbalance => "W_COMM_IMBALANCE",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub pos: Pos,
    pub code: Code,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            pos,
            code,
            message: message.into(),
        }
    }

    pub fn warning(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            pos,
            code,
            message: message.into(),
        }
    }

    /// `file:line:col: error[CODE]: message`
    pub fn render(&self, file: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!(
            "{}:{}:{}: {}[{}]: {}",
            file, self.pos.line, self.pos.column, sev, self.code, self.message
        )
    }
}
