use crate::syntax::{BinOp, UnOp, VarType};
use std::fmt;

/// Runtime value of a classical variable or expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bit(bool),
    Int(i64),
    Float(f64),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivZero,
    #[error("`{op}` cannot be applied to {operands}")]
    Operand { op: &'static str, operands: String },
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::DivZero => "E_DIV_ZERO",
            EvalError::Operand { .. } => "E_TYPE_MISMATCH",
        }
    }
}

impl Value {
    pub fn as_i64(self) -> Option<i64> {
        match self {
            Value::Bit(b) => Some(b as i64),
            Value::Int(i) => Some(i),
            Value::Float(_) => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Value::Bit(b) => b as i64 as f64,
            Value::Int(i) => i as f64,
            Value::Float(f) => f,
        }
    }

    /// Truth value: non-zero.
    pub fn truthy(self) -> bool {
        match self {
            Value::Bit(b) => b,
            Value::Int(i) => i != 0,
            Value::Float(f) => f != 0.0,
        }
    }

    /// Default value of a freshly declared classical variable of type `ty`.
    pub fn zero(ty: VarType) -> Value {
        match ty {
            VarType::Bit => Value::Bit(false),
            VarType::Float => Value::Float(0.0),
            _ => Value::Int(0),
        }
    }

    /// Converts to the representation of a variable of type `ty`. Integers
    /// become bits by comparison with zero; integers widen to floats.
    pub fn coerce(self, ty: VarType) -> Value {
        match ty {
            VarType::Bit => Value::Bit(self.truthy()),
            VarType::Float => Value::Float(self.as_f64()),
            _ => match self {
                Value::Float(f) => Value::Int(f.trunc() as i64),
                v => Value::Int(v.as_i64().unwrap_or(0)),
            },
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Value::Bit(_) => "bit",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bit(b) => write!(f, "{}", *b as u8),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

pub fn eval_unary(op: UnOp, v: Value) -> Result<Value, EvalError> {
    match (op, v) {
        (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
        (UnOp::Neg, v) => Ok(Value::Int(-v.as_i64().unwrap_or(0))),
        (UnOp::Not, Value::Bit(b)) => Ok(Value::Bit(!b)),
        (UnOp::Not, v) => Err(EvalError::Operand {
            op: "!",
            operands: v.describe().into(),
        }),
    }
}

pub fn eval_binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    if op.is_logical() {
        return match (a, b) {
            (Value::Bit(x), Value::Bit(y)) => Ok(Value::Bit(if op == And { x && y } else { x || y })),
            _ => Err(EvalError::Operand {
                op: op.as_str(),
                operands: format!("{} and {}", a.describe(), b.describe()),
            }),
        };
    }
    let float = matches!(a, Value::Float(_)) || matches!(b, Value::Float(_));
    if op.is_comparison() {
        let r = if float {
            let (x, y) = (a.as_f64(), b.as_f64());
            match op {
                Lt => x < y,
                Gt => x > y,
                Le => x <= y,
                Ge => x >= y,
                Eq => x == y,
                _ => x != y,
            }
        } else {
            let (x, y) = (a.as_i64().unwrap_or(0), b.as_i64().unwrap_or(0));
            match op {
                Lt => x < y,
                Gt => x > y,
                Le => x <= y,
                Ge => x >= y,
                Eq => x == y,
                _ => x != y,
            }
        };
        return Ok(Value::Bit(r));
    }
    if float {
        let (x, y) = (a.as_f64(), b.as_f64());
        return match op {
            Add => Ok(Value::Float(x + y)),
            Sub => Ok(Value::Float(x - y)),
            Mul => Ok(Value::Float(x * y)),
            _ if y == 0.0 => Err(EvalError::DivZero),
            _ => Ok(Value::Float(x / y)),
        };
    }
    let (x, y) = (a.as_i64().unwrap_or(0), b.as_i64().unwrap_or(0));
    match op {
        Add => Ok(Value::Int(x.wrapping_add(y))),
        Sub => Ok(Value::Int(x.wrapping_sub(y))),
        Mul => Ok(Value::Int(x.wrapping_mul(y))),
        _ if y == 0 => Err(EvalError::DivZero),
        _ => Ok(Value::Int(x.wrapping_div(y))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(eval_binary(BinOp::Div, Value::Int(-7), Value::Int(2)), Ok(Value::Int(-3)));
        assert_eq!(eval_binary(BinOp::Div, Value::Int(1), Value::Int(0)), Err(EvalError::DivZero));
        assert_eq!(eval_binary(BinOp::Add, Value::Int(1), Value::Float(0.5)), Ok(Value::Float(1.5)));
        assert_eq!(eval_binary(BinOp::Eq, Value::Bit(true), Value::Int(1)), Ok(Value::Bit(true)));
        assert_eq!(eval_unary(UnOp::Not, Value::Bit(false)), Ok(Value::Bit(true)));
    }

    #[test]
    fn display_and_coercion() {
        assert_eq!(Value::Float(0.5).to_string(), "0.5");
        assert_eq!(Value::Float(2.0).to_string(), "2");
        assert_eq!(Value::Bit(true).to_string(), "1");
        assert_eq!(Value::Int(5).coerce(VarType::Bit), Value::Bit(true));
        assert_eq!(Value::Int(3).coerce(VarType::Float), Value::Float(3.0));
    }
}
