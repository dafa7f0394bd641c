use super::ast::*;
use super::token::{Keyword, Op, Pos, Punct, Token, TokenKind};
use num_complex::Complex64;
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected ", self.pos)?;
        match self.expected.as_slice() {
            [] => write!(f, "nothing")?,
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

/// Parses a token stream into a [`Program`].
pub fn parse(tokens: &[Token]) -> PResult<Program> {
    let mut p = Parser { tokens, idx: 0 };
    p.program()
}

struct Parser<'t> {
    tokens: &'t [Token],
    idx: usize,
}

fn describe(tok: Option<&Token>) -> String {
    match tok {
        Some(t) => t.to_string(),
        None => "end of input".to_string(),
    }
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.idx)
    }

    fn peek_at(&self, off: usize) -> Option<&'t Token> {
        self.tokens.get(self.idx + off)
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.idx);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> Pos {
        match self.peek() {
            Some(t) => t.pos,
            None => self
                .tokens
                .last()
                .map(|t| Pos::new(t.pos.line, t.pos.column + t.lexeme.chars().count() as u32))
                .unwrap_or(Pos::new(1, 1)),
        }
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            pos: self.here(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: describe(self.peek()),
        })
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn at_op(&self, op: Op) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn at_punct(&self, p: Punct) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        let hit = self.at_kw(kw);
        if hit {
            self.idx += 1;
        }
        hit
    }

    fn eat_op(&mut self, op: Op) -> bool {
        let hit = self.at_op(op);
        if hit {
            self.idx += 1;
        }
        hit
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        let hit = self.at_punct(p);
        if hit {
            self.idx += 1;
        }
        hit
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Pos> {
        let pos = self.here();
        if self.eat_kw(kw) {
            Ok(pos)
        } else {
            self.error(&[&format!("`{}`", kw.as_str())])
        }
    }

    fn expect_op(&mut self, op: Op) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.error(&[&format!("`{}`", op.as_str())])
        }
    }

    fn expect_punct(&mut self, p: Punct) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(&[&format!("`{}`", p.as_str())])
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.idx += 1;
                Ok(Ident::new(t.lexeme.clone(), t.pos))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        if self.at_kw(Keyword::Module) {
            let mut modules = Vec::new();
            let mut seen = HashSet::new();
            while self.peek().is_some() {
                let pos = self.here();
                if !self.at_kw(Keyword::Module) {
                    return self.error(&["`module`"]);
                }
                self.idx += 1;
                let name = self.ident()?;
                if !seen.insert(name.name.clone()) {
                    return Err(ParseError {
                        pos: name.pos,
                        expected: vec!["a module name not used before".into()],
                        found: format!("duplicate module `{}`", name.name),
                    });
                }
                self.expect_punct(Punct::LBrace)?;
                let body = self.stmt_list_until_rbrace()?;
                self.expect_punct(Punct::Semi)?;
                modules.push(ModuleDef { name, body, pos });
            }
            Ok(Program::Modules(modules))
        } else {
            let mut stmts = Vec::new();
            while self.peek().is_some() {
                if self.at_kw(Keyword::Module) {
                    return self.error(&["statement"]);
                }
                stmts.push(self.statement()?);
                self.expect_punct(Punct::Semi)?;
            }
            Ok(Program::Statements(stmts))
        }
    }

    /// Parses `stmt; stmt; ... }` and consumes the closing brace.
    fn stmt_list_until_rbrace(&mut self) -> PResult<Vec<Stmt>> {
        let mut stmts = Vec::new();
        loop {
            if self.eat_punct(Punct::RBrace) {
                return Ok(stmts);
            }
            if self.peek().is_none() {
                return self.error(&["statement", "`}`"]);
            }
            stmts.push(self.statement()?);
            self.expect_punct(Punct::Semi)?;
        }
    }

    fn var_type(&mut self) -> PResult<VarType> {
        let ty = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Keyword(Keyword::Bit)) => VarType::Bit,
            Some(TokenKind::Keyword(Keyword::Qbit)) => VarType::Qbit,
            Some(TokenKind::Keyword(Keyword::Short)) => VarType::Short,
            Some(TokenKind::Keyword(Keyword::Qshort)) => VarType::Qshort,
            Some(TokenKind::Keyword(Keyword::Int)) => VarType::Int,
            Some(TokenKind::Keyword(Keyword::Qint)) => VarType::Qint,
            Some(TokenKind::Keyword(Keyword::Float)) => VarType::Float,
            _ => return self.error(&["type (bit, qbit, short, qshort, int, qint, float)"]),
        };
        self.idx += 1;
        Ok(ty)
    }

    fn param(&mut self) -> PResult<Param> {
        let name = self.ident()?;
        self.expect_punct(Punct::Colon)?;
        let ty = self.var_type()?;
        Ok(Param { name, ty })
    }

    /// `name:type, name:type, ...`, possibly empty.
    fn context(&mut self) -> PResult<Vec<Param>> {
        let mut out = Vec::new();
        let starts_entry = |p: &Self| {
            p.peek().is_some_and(|t| t.kind == TokenKind::Ident) && p.peek_at(1).is_some_and(|t| t.is_punct(Punct::Colon))
        };
        if !starts_entry(self) {
            return Ok(out);
        }
        out.push(self.param()?);
        while self.eat_punct(Punct::Comma) {
            out.push(self.param()?);
        }
        Ok(out)
    }

    fn var_list(&mut self) -> PResult<Vec<Ident>> {
        let mut out = vec![self.ident()?];
        while self.eat_punct(Punct::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let pos = self.here();
        let Some(tok) = self.peek() else {
            return self.error(&["statement"]);
        };
        let kind = match &tok.kind {
            TokenKind::Keyword(Keyword::New) => {
                self.idx += 1;
                let ty = self.var_type()?;
                let name = self.ident()?;
                self.expect_op(Op::Assign)?;
                let init = self.expr()?;
                StmtKind::Allocate { ty, name, init }
            }
            TokenKind::Keyword(Keyword::If) => {
                self.idx += 1;
                let cond = self.expr()?;
                self.expect_kw(Keyword::Then)?;
                let then_branch = Box::new(self.statement()?);
                let else_branch = if self.eat_kw(Keyword::Else) {
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            TokenKind::Keyword(Keyword::While) => {
                self.idx += 1;
                let cond = self.expr()?;
                self.expect_kw(Keyword::Do)?;
                let body = Box::new(self.statement()?);
                StmtKind::While { cond, body }
            }
            TokenKind::Keyword(Keyword::Measure) => {
                self.idx += 1;
                let qvar = self.ident()?;
                self.expect_kw(Keyword::Then)?;
                let then_branch = Box::new(self.statement()?);
                self.expect_kw(Keyword::Else)?;
                let else_branch = Box::new(self.statement()?);
                StmtKind::MeasureBranch {
                    qvar,
                    then_branch,
                    else_branch,
                }
            }
            TokenKind::Keyword(Keyword::Proc) => {
                self.idx += 1;
                self.proc_decl()?
            }
            TokenKind::Keyword(Keyword::Call) => {
                self.idx += 1;
                let (name, args) = self.call_tail()?;
                StmtKind::ProcCall {
                    results: None,
                    name,
                    args,
                }
            }
            TokenKind::Punct(Punct::LParen) => {
                self.idx += 1;
                let results = self.var_list()?;
                self.expect_punct(Punct::RParen)?;
                self.expect_op(Op::Assign)?;
                self.expect_kw(Keyword::Call)?;
                let (name, args) = self.call_tail()?;
                StmtKind::ProcCall {
                    results: Some(results),
                    name,
                    args,
                }
            }
            TokenKind::Keyword(Keyword::Send) => {
                self.idx += 1;
                let vars = self.var_list()?;
                self.expect_kw(Keyword::To)?;
                let dest = self.ident()?;
                StmtKind::Send { vars, dest }
            }
            TokenKind::Keyword(Keyword::Receive) => {
                self.idx += 1;
                let bindings = self.context()?;
                if bindings.is_empty() {
                    return self.error(&["`name:type` binding"]);
                }
                self.expect_kw(Keyword::From)?;
                let source = self.ident()?;
                StmtKind::Receive { bindings, source }
            }
            TokenKind::Keyword(Keyword::Print) => {
                self.idx += 1;
                match self.peek().map(|t| &t.kind) {
                    Some(TokenKind::Str(s)) => {
                        self.idx += 1;
                        StmtKind::Print(PrintArg::Text(s.clone()))
                    }
                    _ => StmtKind::Print(PrintArg::Expr(self.expr()?)),
                }
            }
            TokenKind::Keyword(Keyword::Dump) => {
                self.idx += 1;
                StmtKind::Dump(self.var_list()?)
            }
            TokenKind::Keyword(Keyword::Skip) => {
                self.idx += 1;
                StmtKind::Skip
            }
            TokenKind::Punct(Punct::LBrace) => {
                self.idx += 1;
                StmtKind::Block(self.stmt_list_until_rbrace()?)
            }
            TokenKind::Ident => self.ident_statement()?,
            _ => return self.error(&["statement"]),
        };
        Ok(Stmt { kind, pos })
    }

    fn ident_statement(&mut self) -> PResult<StmtKind> {
        if self.peek_at(1).is_some_and(|t| t.is_op(Op::Assign)) {
            let target = self.ident()?;
            self.idx += 1;
            if self.eat_kw(Keyword::Measure) {
                let source = self.ident()?;
                return Ok(StmtKind::AssignMeasure { target, source });
            }
            let value = self.expr()?;
            return Ok(StmtKind::Assign { target, value });
        }
        let targets = self.var_list()?;
        if !self.eat_op(Op::GateAssign) {
            return self.error(&["`:=`", "`*=`", "`,`"]);
        }
        let gate = self.gate()?;
        Ok(StmtKind::GateApply { targets, gate })
    }

    fn call_tail(&mut self) -> PResult<(Ident, Vec<Expr>)> {
        let name = self.ident()?;
        self.expect_punct(Punct::LParen)?;
        let mut args = Vec::new();
        if !self.eat_punct(Punct::RParen) {
            args.push(self.expr()?);
            while self.eat_punct(Punct::Comma) {
                args.push(self.expr()?);
            }
            self.expect_punct(Punct::RParen)?;
        }
        Ok((name, args))
    }

    fn proc_decl(&mut self) -> PResult<StmtKind> {
        let name = self.ident()?;
        self.expect_punct(Punct::Colon)?;
        let params = self.context()?;
        let returns = if self.eat_op(Op::Arrow) {
            let ret_pos = self.here();
            let ret = self.context()?;
            let classical: Vec<(&str, VarType)> = params
                .iter()
                .filter(|p| !p.ty.is_quantum())
                .map(|p| (p.name.name.as_str(), p.ty))
                .collect();
            let given: Vec<(&str, VarType)> = ret.iter().map(|p| (p.name.name.as_str(), p.ty)).collect();
            if classical != given {
                return Err(ParseError {
                    pos: ret_pos,
                    expected: vec!["return context equal to the classical parameters".into()],
                    found: format!("`{}`", crate::syntax::pretty::context_to_string(&ret)),
                });
            }
            Some(ret)
        } else {
            None
        };
        self.expect_punct(Punct::LBrace)?;
        let body = self.stmt_list_until_rbrace()?;
        self.expect_kw(Keyword::In)?;
        let scope = self.statement()?;
        Ok(StmtKind::ProcDecl(Box::new(ProcDecl {
            name,
            params,
            returns,
            body,
            scope,
        })))
    }

    fn gate(&mut self) -> PResult<Gate> {
        let Some(tok) = self.peek() else {
            return self.error(&["gate"]);
        };
        match &tok.kind {
            TokenKind::Keyword(Keyword::H) => {
                self.idx += 1;
                Ok(Gate::H)
            }
            TokenKind::Keyword(Keyword::Not) => {
                self.idx += 1;
                Ok(Gate::Not)
            }
            TokenKind::Keyword(Keyword::CNot) => {
                self.idx += 1;
                Ok(Gate::CNot)
            }
            TokenKind::Keyword(Keyword::Phase) => {
                self.idx += 1;
                Ok(Gate::Phase(self.expr()?))
            }
            TokenKind::Keyword(Keyword::FT) => {
                self.idx += 1;
                self.expect_punct(Punct::LParen)?;
                let n = match self.peek().map(|t| &t.kind) {
                    Some(TokenKind::Int(n)) if *n >= 0 && *n <= u32::MAX as i64 => *n as u32,
                    _ => return self.error(&["non-negative integer literal"]),
                };
                self.idx += 1;
                self.expect_punct(Punct::RParen)?;
                Ok(Gate::FT(n))
            }
            TokenKind::Punct(Punct::LBracket) => {
                let pos = tok.pos;
                self.idx += 1;
                self.expect_punct(Punct::LBracket)?;
                let entries = self.number_list()?;
                self.expect_punct(Punct::RBracket)?;
                self.expect_punct(Punct::RBracket)?;
                if !is_power_of_two_square(entries.len()) {
                    return Err(ParseError {
                        pos,
                        expected: vec!["square matrix whose side is a power of two".into()],
                        found: format!("{} entries", entries.len()),
                    });
                }
                Ok(Gate::Matrix(entries))
            }
            _ => self.error(&["gate (H, Not, CNot, Phase, FT, [[...]])"]),
        }
    }

    fn number_list(&mut self) -> PResult<Vec<Complex64>> {
        let mut out = vec![self.complex_entry()?];
        while self.eat_punct(Punct::Comma) {
            out.push(self.complex_entry()?);
        }
        Ok(out)
    }

    fn sign(&mut self) -> f64 {
        if self.eat_op(Op::Minus) {
            -1.0
        } else {
            self.eat_op(Op::Plus);
            1.0
        }
    }

    /// `[sign] real [(+|-) [sign] imag]` or `[sign] imag`.
    fn complex_entry(&mut self) -> PResult<Complex64> {
        let s = self.sign();
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Imaginary(v)) => {
                self.idx += 1;
                Ok(Complex64::new(0.0, s * v))
            }
            Some(TokenKind::Int(_) | TokenKind::Float(_)) => {
                let re = s * self.real_literal()?;
                let joiner = if self.at_op(Op::Plus) {
                    1.0
                } else if self.at_op(Op::Minus) {
                    -1.0
                } else {
                    return Ok(Complex64::new(re, 0.0));
                };
                self.idx += 1;
                let s2 = self.sign();
                match self.peek().map(|t| &t.kind) {
                    Some(TokenKind::Imaginary(v)) => {
                        self.idx += 1;
                        Ok(Complex64::new(re, joiner * s2 * v))
                    }
                    _ => self.error(&["imaginary literal"]),
                }
            }
            _ => self.error(&["number"]),
        }
    }

    fn real_literal(&mut self) -> PResult<f64> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Int(v)) => {
                self.idx += 1;
                Ok(*v as f64)
            }
            Some(TokenKind::Float(v)) => {
                self.idx += 1;
                Ok(*v)
            }
            _ => self.error(&["number"]),
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop_here(&self) -> Option<BinOp> {
        let tok = self.peek()?;
        let TokenKind::Op(op) = tok.kind else {
            return None;
        };
        Some(match op {
            Op::Plus => BinOp::Add,
            Op::Minus => BinOp::Sub,
            Op::Star => BinOp::Mul,
            Op::Slash => BinOp::Div,
            Op::Lt => BinOp::Lt,
            Op::Gt => BinOp::Gt,
            Op::Le => BinOp::Le,
            Op::Ge => BinOp::Ge,
            Op::EqEq | Op::Eq => BinOp::Eq,
            Op::Ne => BinOp::Ne,
            Op::Amp => BinOp::And,
            Op::Pipe => BinOp::Or,
            _ => return None,
        })
    }

    // precedence climbing, all binary operators left-associative
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop_here() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.idx += 1;
            let rhs = self.binary(prec + 1)?;
            let pos = lhs.pos;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.here();
        if self.eat_op(Op::Minus) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), pos));
        }
        if self.eat_op(Op::Bang) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), pos));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.here();
        let Some(tok) = self.peek() else {
            return self.error(&["expression"]);
        };
        let kind = match &tok.kind {
            TokenKind::Int(v) => ExprKind::Int(*v),
            TokenKind::Float(v) => ExprKind::Float(*v),
            TokenKind::Keyword(Keyword::True) => ExprKind::Bool(true),
            TokenKind::Keyword(Keyword::False) => ExprKind::Bool(false),
            TokenKind::Ident => ExprKind::Var(tok.lexeme.clone()),
            TokenKind::Punct(Punct::LParen) => {
                self.idx += 1;
                let inner = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                return Ok(Expr::new(ExprKind::Paren(Box::new(inner)), pos));
            }
            _ => return self.error(&["expression"]),
        };
        self.bump();
        Ok(Expr::new(kind, pos))
    }
}

fn is_power_of_two_square(len: usize) -> bool {
    let side = (len as f64).sqrt().round() as usize;
    side * side == len && side.is_power_of_two()
}
