use super::{type_equiv, Code, Diagnostic, Severity, TypeSignature};
use crate::qcore::{UnitaryMatrix, UNITARY_TOL};
use crate::syntax::*;
use std::collections::{HashMap, HashSet};

/// A program that passed every typing judgment, with the signature of each
/// expression node and any warnings gathered on the way.
#[derive(Debug)]
pub struct CheckedProgram {
    program: Box<Program>,
    expr_types: HashMap<usize, TypeSignature>,
    pub warnings: Vec<Diagnostic>,
}

impl CheckedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn into_program(self) -> Program {
        *self.program
    }

    /// Signature assigned to an expression node of [`Self::program`].
    pub fn type_of(&self, e: &Expr) -> Option<TypeSignature> {
        self.expr_types.get(&(e as *const Expr as usize)).copied()
    }
}

#[derive(Debug, Clone)]
struct Binding {
    ty: VarType,
    sent: bool,
    borrowed: bool,
}

#[derive(Debug, Clone, Default)]
struct Scope {
    vars: HashMap<String, Binding>,
    procs: HashMap<String, Vec<Param>>,
}

/// Scope stack with ownership flags, plus the module being checked.
#[derive(Debug, Clone, Default)]
pub struct TypingContext {
    scopes: Vec<Scope>,
    module: Option<String>,
    modules: Vec<String>,
    loop_marks: Vec<usize>,
}

impl TypingContext {
    /// Context for a plain statement program.
    pub fn new() -> Self {
        TypingContext {
            scopes: vec![Scope::default()],
            ..Default::default()
        }
    }

    /// Context for the body of `module`, given every module name.
    pub fn for_module(module: &str, modules: &[String]) -> Self {
        TypingContext {
            scopes: vec![Scope::default()],
            module: Some(module.to_string()),
            modules: modules.to_vec(),
            loop_marks: Vec::new(),
        }
    }

    pub fn declare(&mut self, name: &str, ty: VarType) {
        self.scopes.last_mut().expect("scope stack is never empty").vars.insert(
            name.to_string(),
            Binding {
                ty,
                sent: false,
                borrowed: false,
            },
        );
    }

    pub fn push_scope(&mut self) {
        self.scopes.push(Scope::default());
    }

    pub fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    fn find(&self, name: &str) -> Option<(usize, &Binding)> {
        self.scopes
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, s)| s.vars.get(name).map(|b| (i, b)))
    }

    /// Innermost visible type of `name`, if declared and not sent away.
    pub fn lookup(&self, name: &str) -> Option<VarType> {
        match self.find(name) {
            Some((_, b)) if !b.sent => Some(b.ty),
            _ => None,
        }
    }

    fn resolve(&self, id: &Ident) -> Result<(usize, Binding), Diagnostic> {
        match self.find(&id.name) {
            None => Err(Diagnostic::error(
                Code::Undeclared,
                id.pos,
                format!("`{}` is not declared", id.name),
            )),
            Some((_, b)) if b.sent => Err(Diagnostic::error(
                Code::UseAfterSend,
                id.pos,
                format!("`{}` was sent away and can no longer be used", id.name),
            )),
            Some((i, b)) => Ok((i, b.clone())),
        }
    }

    fn mark_sent(&mut self, name: &str) {
        for s in self.scopes.iter_mut().rev() {
            if let Some(b) = s.vars.get_mut(name) {
                b.sent = true;
                return;
            }
        }
    }

    fn find_proc(&self, name: &str) -> Option<&Vec<Param>> {
        self.scopes.iter().rev().find_map(|s| s.procs.get(name))
    }

    fn visible_procs(&self) -> HashMap<String, Vec<Param>> {
        let mut out = HashMap::new();
        for s in &self.scopes {
            for (k, v) in &s.procs {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }

    /// Merges sent flags after two alternative branches: a variable sent in
    /// either branch counts as sent.
    fn merge_sent(&mut self, other: &TypingContext) {
        for (mine, theirs) in self.scopes.iter_mut().zip(&other.scopes) {
            for (name, b) in &theirs.vars {
                if b.sent {
                    if let Some(m) = mine.vars.get_mut(name) {
                        m.sent = true;
                    }
                }
            }
        }
    }
}

/// Number of qbits an operator acts on.
pub(crate) fn gate_qbits(gate: &Gate) -> usize {
    match gate {
        Gate::H | Gate::Not | Gate::Phase(_) => 1,
        Gate::CNot => 2,
        Gate::FT(n) => *n as usize,
        Gate::Matrix(entries) => {
            let side = (entries.len() as f64).sqrt().round() as usize;
            side.trailing_zeros() as usize
        }
    }
}

fn check_distinct(ids: &[Ident]) -> Result<(), Diagnostic> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.name.as_str()) {
            return Err(Diagnostic::error(
                Code::DupTuple,
                id.pos,
                format!("`{}` appears more than once in the tuple", id.name),
            ));
        }
    }
    Ok(())
}

fn quantum_binding(ctx: &TypingContext, id: &Ident) -> Result<TypeSignature, Diagnostic> {
    let (_, b) = ctx.resolve(id)?;
    let sig = TypeSignature::of(b.ty);
    if !sig.is_quantum() {
        return Err(Diagnostic::error(
            Code::NotQuantum,
            id.pos,
            format!("`{}` has classical type {}", id.name, sig),
        ));
    }
    Ok(sig)
}

/// Operator application: quantum targets, no duplicates, matching width and
/// (for matrix literals) unitarity. Phase arguments are checked separately.
pub fn check_gate_apply(targets: &[Ident], gate: &Gate, ctx: &TypingContext) -> Result<(), Diagnostic> {
    let mut width = 0;
    for t in targets {
        width += quantum_binding(ctx, t)?.width as usize;
    }
    check_distinct(targets)?;
    let pos = targets.first().map(|t| t.pos).unwrap_or_default();
    if let Gate::FT(0) = gate {
        return Err(Diagnostic::error(Code::BadParam, pos, "FT needs at least one qbit"));
    }
    let need = gate_qbits(gate);
    if need != width {
        return Err(Diagnostic::error(
            Code::DimMismatch,
            pos,
            format!("operator acts on {need} qbits but the targets have {width}"),
        ));
    }
    if let Gate::Matrix(entries) = gate {
        let u = UnitaryMatrix::from_entries(entries.clone())
            .map_err(|e| Diagnostic::error(Code::DimMismatch, pos, e.to_string()))?;
        let err = u.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Diagnostic::error(
                Code::NotUnitary,
                pos,
                format!("matrix is not unitary (max |U'U - I| entry is {err:.3e})"),
            ));
        }
    }
    Ok(())
}

/// `target := measure source`.
pub fn check_measure(target: &Ident, source: &Ident, ctx: &TypingContext) -> Result<(), Diagnostic> {
    let (_, t) = ctx.resolve(target)?;
    let tsig = TypeSignature::of(t.ty);
    let qsig = quantum_binding(ctx, source)?;
    if !tsig.is_classical() {
        return Err(Diagnostic::error(
            Code::NotClassical,
            target.pos,
            format!("measurement target `{}` must be classical", target.name),
        ));
    }
    if tsig.float {
        return Err(Diagnostic::error(
            Code::MeasureFloat,
            target.pos,
            format!("cannot store a measurement in float `{}`", target.name),
        ));
    }
    if tsig.width != qsig.width {
        return Err(Diagnostic::error(
            Code::MeasureWidth,
            target.pos,
            format!(
                "`{}` holds {} bits but `{}` has {} qbits",
                target.name, tsig.width, source.name, qsig.width
            ),
        ));
    }
    Ok(())
}

/// Runs every typing judgment. Module programs are checked module by module,
/// each under a fresh context.
pub fn check_program(program: Program) -> Result<CheckedProgram, Vec<Diagnostic>> {
    let program = Box::new(program);
    let mut checker = Checker::default();
    match &*program {
        Program::Statements(stmts) => {
            let mut ctx = TypingContext::new();
            checker.stmt_list(stmts, &mut ctx);
        }
        Program::Modules(modules) => {
            let names: Vec<String> = modules.iter().map(|m| m.name.name.clone()).collect();
            for m in modules {
                let mut ctx = TypingContext::for_module(&m.name.name, &names);
                checker.stmt_list(&m.body, &mut ctx);
            }
        }
    }
    let (errors, warnings): (Vec<_>, Vec<_>) = checker
        .diags
        .into_iter()
        .partition(|d| d.severity == Severity::Error);
    if errors.is_empty() {
        Ok(CheckedProgram {
            program,
            expr_types: checker.types,
            warnings,
        })
    } else {
        Err(errors)
    }
}

#[derive(Default)]
struct Checker {
    diags: Vec<Diagnostic>,
    types: HashMap<usize, TypeSignature>,
}

fn strip_parens(e: &Expr) -> &Expr {
    match &e.kind {
        ExprKind::Paren(inner) => strip_parens(inner),
        _ => e,
    }
}

fn is_bit_literal(e: &Expr) -> bool {
    matches!(strip_parens(e).kind, ExprKind::Int(0) | ExprKind::Int(1) | ExprKind::Bool(_))
}

/// Whether a value of type `from` may be stored in a variable of type `to`.
/// Integer values narrow to `bit` by comparison with zero; floats only go to
/// floats.
fn assignable(to: TypeSignature, from: TypeSignature) -> bool {
    to.is_classical() && from.is_classical() && from.width > 0 && (to.float || !from.float)
}

impl Checker {
    fn report(&mut self, d: Diagnostic) {
        self.diags.push(d);
    }

    fn stmt_list(&mut self, stmts: &[Stmt], ctx: &mut TypingContext) {
        for s in stmts {
            self.stmt(s, ctx);
        }
    }

    fn scoped(&mut self, s: &Stmt, ctx: &mut TypingContext) {
        ctx.push_scope();
        self.stmt(s, ctx);
        ctx.pop_scope();
    }

    fn branches(&mut self, then_branch: &Stmt, else_branch: Option<&Stmt>, ctx: &mut TypingContext) {
        let saved = ctx.clone();
        self.scoped(then_branch, ctx);
        let after_then = std::mem::replace(ctx, saved);
        if let Some(e) = else_branch {
            self.scoped(e, ctx);
        }
        ctx.merge_sent(&after_then);
    }

    fn condition(&mut self, cond: &Expr, ctx: &TypingContext) {
        if let Some(t) = self.expr(cond, ctx) {
            if t != TypeSignature::BIT {
                self.report(Diagnostic::error(
                    Code::CondNotBit,
                    cond.pos,
                    format!("condition has type {t}, expected bit"),
                ));
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, ctx: &mut TypingContext) {
        match &s.kind {
            StmtKind::Allocate { ty, name, init } => self.allocate(*ty, name, init, ctx),
            StmtKind::Assign { target, value } => {
                let vt = self.expr(value, ctx);
                match ctx.resolve(target) {
                    Err(d) => self.report(d),
                    Ok((_, b)) => {
                        let tsig = TypeSignature::of(b.ty);
                        if !tsig.is_classical() {
                            self.report(Diagnostic::error(
                                Code::NotClassical,
                                target.pos,
                                format!("cannot assign a classical value to quantum `{}`", target.name),
                            ));
                        } else if let Some(vt) = vt {
                            if !assignable(tsig, vt) {
                                self.report(Diagnostic::error(
                                    Code::TypeMismatch,
                                    value.pos,
                                    format!("cannot assign {vt} to `{}` of type {tsig}", target.name),
                                ));
                            }
                        }
                    }
                }
            }
            StmtKind::AssignMeasure { target, source } => {
                if let Err(d) = check_measure(target, source, ctx) {
                    self.report(d);
                }
            }
            StmtKind::MeasureBranch {
                qvar,
                then_branch,
                else_branch,
            } => {
                if let Err(d) = quantum_binding(ctx, qvar) {
                    self.report(d);
                }
                self.branches(then_branch, Some(else_branch), ctx);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.condition(cond, ctx);
                self.branches(then_branch, else_branch.as_deref(), ctx);
            }
            StmtKind::While { cond, body } => {
                self.condition(cond, ctx);
                ctx.loop_marks.push(ctx.scopes.len());
                self.scoped(body, ctx);
                ctx.loop_marks.pop();
            }
            StmtKind::GateApply { targets, gate } => {
                if let Gate::Phase(arg) = gate {
                    if let Some(t) = self.expr(arg, ctx) {
                        if t.width == 0 {
                            self.report(Diagnostic::error(
                                Code::BadParam,
                                arg.pos,
                                "phase argument must be numeric",
                            ));
                        }
                    }
                }
                if let Err(d) = check_gate_apply(targets, gate, ctx) {
                    self.report(d);
                }
            }
            StmtKind::Send { vars, dest } => {
                if let Err(d) = self.send(vars, dest, s.pos, ctx) {
                    self.report(d);
                }
            }
            StmtKind::Receive { bindings, source } => {
                if let Err(d) = self.receive(bindings, source, s.pos, ctx) {
                    self.report(d);
                    for p in bindings {
                        if ctx.lookup(&p.name.name).is_none() {
                            ctx.declare(&p.name.name, p.ty);
                        }
                    }
                }
            }
            StmtKind::ProcDecl(decl) => self.proc_decl(decl, ctx),
            StmtKind::ProcCall { results, name, args } => self.call(results.as_deref(), name, args, ctx),
            StmtKind::Print(PrintArg::Text(_)) => {}
            StmtKind::Print(PrintArg::Expr(e)) => {
                self.expr(e, ctx);
            }
            StmtKind::Dump(vars) => {
                let mut ok = true;
                for v in vars {
                    if let Err(d) = quantum_binding(ctx, v) {
                        self.report(d);
                        ok = false;
                    }
                }
                if ok {
                    if let Err(d) = check_distinct(vars) {
                        self.report(d);
                    }
                }
            }
            StmtKind::Skip => {}
            StmtKind::Block(stmts) => {
                ctx.push_scope();
                self.stmt_list(stmts, ctx);
                ctx.pop_scope();
            }
        }
    }

    fn check_fresh(&mut self, name: &Ident, ctx: &TypingContext, code: Code) -> bool {
        let scope = ctx.scopes.last().expect("scope stack is never empty");
        match scope.vars.get(&name.name) {
            Some(b) if !b.sent => {
                self.report(Diagnostic::error(
                    code,
                    name.pos,
                    format!("`{}` is already declared in this scope", name.name),
                ));
                false
            }
            _ => true,
        }
    }

    fn allocate(&mut self, ty: VarType, name: &Ident, init: &Expr, ctx: &mut TypingContext) {
        let sig = TypeSignature::of(ty);
        if sig.is_quantum() {
            let literal = matches!(strip_parens(init).kind, ExprKind::Int(0) | ExprKind::Int(1));
            if !literal {
                self.report(Diagnostic::error(
                    Code::QuantumInit,
                    init.pos,
                    format!("quantum variable `{}` must be initialised with 0 or 1", name.name),
                ));
            }
        } else if let Some(t) = self.expr(init, ctx) {
            let ok = if sig == TypeSignature::BIT && matches!(strip_parens(init).kind, ExprKind::Int(_)) {
                is_bit_literal(init)
            } else {
                assignable(sig, t)
            };
            if !ok {
                self.report(Diagnostic::error(
                    Code::TypeMismatch,
                    init.pos,
                    format!("cannot initialise `{}` of type {sig} with {t}", name.name),
                ));
            }
        }
        if self.check_fresh(name, ctx, Code::Redeclared) {
            ctx.declare(&name.name, ty);
        }
    }

    fn require_module(&self, ctx: &TypingContext, pos: Pos, what: &str) -> Result<String, Diagnostic> {
        ctx.module.clone().ok_or_else(|| {
            Diagnostic::error(
                Code::CommOutsideModule,
                pos,
                format!("`{what}` is only allowed inside a module"),
            )
        })
    }

    fn check_partner(&self, ctx: &TypingContext, me: &str, other: &Ident) -> Result<(), Diagnostic> {
        if !ctx.modules.contains(&other.name) {
            return Err(Diagnostic::error(
                Code::UnknownModule,
                other.pos,
                format!("there is no module named `{}`", other.name),
            ));
        }
        if other.name == me {
            return Err(Diagnostic::error(
                Code::SelfSend,
                other.pos,
                format!("module `{me}` cannot communicate with itself"),
            ));
        }
        Ok(())
    }

    fn send(&mut self, vars: &[Ident], dest: &Ident, pos: Pos, ctx: &mut TypingContext) -> Result<(), Diagnostic> {
        let me = self.require_module(ctx, pos, "send")?;
        self.check_partner(ctx, &me, dest)?;
        check_distinct(vars)?;
        let mut quantum = Vec::new();
        for v in vars {
            let (scope, b) = ctx.resolve(v)?;
            if b.ty.is_quantum() {
                if b.borrowed {
                    return Err(Diagnostic::error(
                        Code::SendBorrowed,
                        v.pos,
                        format!("`{}` is a procedure parameter and cannot be sent", v.name),
                    ));
                }
                if let Some(&mark) = ctx.loop_marks.last() {
                    if scope < mark {
                        return Err(Diagnostic::error(
                            Code::UseAfterSend,
                            v.pos,
                            format!(
                                "`{}` is declared outside the loop and would be sent again on the next iteration",
                                v.name
                            ),
                        ));
                    }
                }
                quantum.push(v.name.clone());
            }
        }
        for q in quantum {
            ctx.mark_sent(&q);
        }
        Ok(())
    }

    fn receive(&mut self, bindings: &[Param], source: &Ident, pos: Pos, ctx: &mut TypingContext) -> Result<(), Diagnostic> {
        let me = self.require_module(ctx, pos, "receive")?;
        self.check_partner(ctx, &me, source)?;
        let names: Vec<Ident> = bindings.iter().map(|p| p.name.clone()).collect();
        check_distinct(&names)?;
        let scope = ctx.scopes.last().expect("scope stack is never empty");
        for p in bindings {
            if scope.vars.get(&p.name.name).is_some_and(|b| !b.sent) {
                return Err(Diagnostic::error(
                    Code::RecvShadow,
                    p.name.pos,
                    format!("receive would redeclare `{}`", p.name.name),
                ));
            }
        }
        for p in bindings {
            ctx.declare(&p.name.name, p.ty);
        }
        Ok(())
    }

    fn proc_decl(&mut self, decl: &ProcDecl, ctx: &mut TypingContext) {
        let names: Vec<Ident> = decl.params.iter().map(|p| p.name.clone()).collect();
        if let Err(d) = check_distinct(&names) {
            self.report(d);
        }
        let mut procs = ctx.visible_procs();
        procs.insert(decl.name.name.clone(), decl.params.clone());
        let mut params = Scope::default();
        for p in &decl.params {
            params.vars.insert(
                p.name.name.clone(),
                Binding {
                    ty: p.ty,
                    sent: false,
                    borrowed: p.ty.is_quantum(),
                },
            );
        }
        let mut inner = TypingContext {
            scopes: vec![
                Scope {
                    vars: HashMap::new(),
                    procs,
                },
                params,
            ],
            module: ctx.module.clone(),
            modules: ctx.modules.clone(),
            loop_marks: Vec::new(),
        };
        self.stmt_list(&decl.body, &mut inner);

        ctx.push_scope();
        ctx.scopes
            .last_mut()
            .expect("scope just pushed")
            .procs
            .insert(decl.name.name.clone(), decl.params.clone());
        self.stmt(&decl.scope, ctx);
        ctx.pop_scope();
    }

    fn call(&mut self, results: Option<&[Ident]>, name: &Ident, args: &[Expr], ctx: &mut TypingContext) {
        let Some(params) = ctx.find_proc(&name.name).cloned() else {
            self.report(Diagnostic::error(
                Code::UnknownProc,
                name.pos,
                format!("no procedure named `{}` is visible here", name.name),
            ));
            return;
        };
        if params.len() != args.len() {
            self.report(Diagnostic::error(
                Code::Arity,
                name.pos,
                format!(
                    "`{}` takes {} arguments but {} were given",
                    name.name,
                    params.len(),
                    args.len()
                ),
            ));
            return;
        }
        let mut quantum_args: Vec<Ident> = Vec::new();
        for (arg, p) in args.iter().zip(&params) {
            let psig = TypeSignature::of(p.ty);
            if psig.is_quantum() {
                let ExprKind::Var(v) = &strip_parens(arg).kind else {
                    self.report(Diagnostic::error(
                        Code::ArgType,
                        arg.pos,
                        format!("parameter `{}` needs a quantum variable", p.name.name),
                    ));
                    continue;
                };
                let id = Ident::new(v.clone(), arg.pos);
                match ctx.resolve(&id) {
                    Err(d) => self.report(d),
                    Ok((_, b)) => {
                        if !type_equiv(&TypeSignature::of(b.ty), &psig) {
                            self.report(Diagnostic::error(
                                Code::ArgType,
                                arg.pos,
                                format!(
                                    "`{}` has type {} but parameter `{}` is {}",
                                    v,
                                    b.ty.as_str(),
                                    p.name.name,
                                    p.ty.as_str()
                                ),
                            ));
                        }
                        quantum_args.push(id);
                    }
                }
            } else if let Some(t) = self.expr(arg, ctx) {
                if !assignable(psig, t) {
                    self.report(Diagnostic::error(
                        Code::ArgType,
                        arg.pos,
                        format!("cannot pass {t} as parameter `{}` of type {psig}", p.name.name),
                    ));
                }
            }
        }
        if let Err(d) = check_distinct(&quantum_args) {
            self.report(d);
        }
        let Some(results) = results else { return };
        let classical: Vec<&Param> = params.iter().filter(|p| !p.ty.is_quantum()).collect();
        if classical.len() != results.len() {
            self.report(Diagnostic::error(
                Code::Arity,
                name.pos,
                format!(
                    "`{}` returns {} classical values but {} targets were given",
                    name.name,
                    classical.len(),
                    results.len()
                ),
            ));
            return;
        }
        if let Err(d) = check_distinct(results) {
            self.report(d);
            return;
        }
        for (r, p) in results.iter().zip(classical) {
            match ctx.resolve(r) {
                Err(d) => self.report(d),
                Ok((_, b)) => {
                    let rsig = TypeSignature::of(b.ty);
                    if !rsig.is_classical() {
                        self.report(Diagnostic::error(
                            Code::NotClassical,
                            r.pos,
                            format!("result target `{}` must be classical", r.name),
                        ));
                    } else if !assignable(rsig, TypeSignature::of(p.ty)) {
                        self.report(Diagnostic::error(
                            Code::TypeMismatch,
                            r.pos,
                            format!("cannot store {} result in `{}` of type {rsig}", p.ty.as_str(), r.name),
                        ));
                    }
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr, ctx: &TypingContext) -> Option<TypeSignature> {
        let t = self.expr_inner(e, ctx)?;
        self.types.insert(e as *const Expr as usize, t);
        Some(t)
    }

    fn expr_inner(&mut self, e: &Expr, ctx: &TypingContext) -> Option<TypeSignature> {
        let numeric = |t: TypeSignature| t.is_classical() && t.width > 0;
        match &e.kind {
            ExprKind::Int(_) => Some(TypeSignature::INT),
            ExprKind::Float(_) => Some(TypeSignature::FLOAT),
            ExprKind::Bool(_) => Some(TypeSignature::BIT),
            ExprKind::Var(v) => match ctx.resolve(&Ident::new(v.clone(), e.pos)) {
                Err(d) => {
                    self.report(d);
                    None
                }
                Ok((_, b)) => {
                    let sig = TypeSignature::of(b.ty);
                    if sig.is_quantum() {
                        self.report(Diagnostic::error(
                            Code::NotClassical,
                            e.pos,
                            format!("quantum variable `{v}` cannot be used in a classical expression"),
                        ));
                        None
                    } else {
                        Some(sig)
                    }
                }
            },
            ExprKind::Paren(inner) => self.expr(inner, ctx),
            ExprKind::Unary(op, inner) => {
                let t = self.expr(inner, ctx)?;
                match op {
                    UnOp::Neg if numeric(t) => Some(if t == TypeSignature::BIT { TypeSignature::INT } else { t }),
                    UnOp::Not if t == TypeSignature::BIT => Some(TypeSignature::BIT),
                    _ => {
                        let want = if *op == UnOp::Neg { "a number" } else { "a bit" };
                        self.report(Diagnostic::error(
                            Code::TypeMismatch,
                            e.pos,
                            format!("operand has type {t}, expected {want}"),
                        ));
                        None
                    }
                }
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.expr(a, ctx);
                let tb = self.expr(b, ctx);
                let (ta, tb) = (ta?, tb?);
                if op.is_logical() {
                    if ta == TypeSignature::BIT && tb == TypeSignature::BIT {
                        return Some(TypeSignature::BIT);
                    }
                    self.report(Diagnostic::error(
                        Code::TypeMismatch,
                        e.pos,
                        format!("`{}` needs bit operands, found {ta} and {tb}", op.as_str()),
                    ));
                    return None;
                }
                if !numeric(ta) || !numeric(tb) {
                    self.report(Diagnostic::error(
                        Code::TypeMismatch,
                        e.pos,
                        format!("`{}` needs numeric operands, found {ta} and {tb}", op.as_str()),
                    ));
                    return None;
                }
                if op.is_comparison() {
                    return Some(TypeSignature::BIT);
                }
                if ta.float || tb.float {
                    return Some(TypeSignature::FLOAT);
                }
                Some(TypeSignature::classical(ta.width.max(tb.width).max(TypeSignature::SHORT.width)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(src: &str) -> Result<CheckedProgram, Vec<Diagnostic>> {
        check_program(parse_source(src).expect("test source parses"))
    }

    fn codes(src: &str) -> Vec<Code> {
        match check(src) {
            Ok(_) => Vec::new(),
            Err(ds) => ds.into_iter().map(|d| d.code).collect(),
        }
    }

    fn rejects(src: &str, code: Code) {
        let got = codes(src);
        assert_eq!(got, vec![code], "program:\n{src}");
    }

    fn accepts(src: &str) {
        if let Err(ds) = check(src) {
            panic!("rejected:\n{src}\n{ds:?}");
        }
    }

    fn modules(a: &str, b: &str) -> String {
        format!("module A {{ {a} }}; module B {{ {b} }};")
    }

    #[test]
    fn coin_toss_accepted() {
        accepts(
            "new qbit q := 0;
             q *= H;
             measure q then { print \"Tossed head\"; } else { print \"Tossed tail\"; };",
        );
    }

    #[test]
    fn duplicate_tuple() {
        rejects("new qbit q := 0; q,q *= CNot;", Code::DupTuple);
        rejects("new qbit q := 0; dump q, q;", Code::DupTuple);
    }

    #[test]
    fn use_after_send() {
        rejects(
            &modules("new qbit q := 0; send q to B; q *= H;", "receive q:qbit from A;"),
            Code::UseAfterSend,
        );
        rejects(
            &modules("new qbit q := 0; send q to B; send q to B;", "skip;"),
            Code::UseAfterSend,
        );
        rejects(
            &modules("new qbit q := 0; new bit b := 0; b := measure q; if (b = 1) then send q to B; q *= H;", "skip;"),
            Code::UseAfterSend,
        );
        rejects(
            &modules("new qbit q := 0; new int n := 2; while (n > 0) do { send q to B; n := n - 1; };", "skip;"),
            Code::UseAfterSend,
        );
        accepts(&modules(
            "new int n := 2; while (n > 0) do { new qbit q := 0; send q to B; n := n - 1; };",
            "receive a:qbit from A; receive b:qbit from A;",
        ));
    }

    #[test]
    fn classical_sends_keep_the_variable() {
        accepts(&modules("new bit m := 1; send m to B; print m;", "receive m:bit from A; print m;"));
    }

    #[test]
    fn gate_judgments() {
        accepts("new qbit q1 := 0; new qbit q2 := 0; q1, q2 *= FT(2);");
        rejects("new qbit q := 0; q *= CNot;", Code::DimMismatch);
        rejects("new qbit q := 0; q *= [[1,0,0,0.999]];", Code::NotUnitary);
        rejects("new bit c := 0; c *= H;", Code::NotQuantum);
        rejects("new qbit q := 0; q *= FT(0);", Code::BadParam);
        accepts("new qint r := 0; r *= FT(16);");
        accepts("new qbit q := 0; q *= Phase 0.5; q *= [[0, 1i, 1i, 0]];");
        rejects("new qbit q := 0; q *= H; x *= H;", Code::Undeclared);
    }

    #[test]
    fn measure_judgments() {
        accepts("new qbit q := 0; new bit b := 0; b := measure q;");
        rejects("new qbit q := 0; new int b := 0; b := measure q;", Code::MeasureWidth);
        accepts("new qint q := 0; new int b := 0; b := measure q;");
        rejects("new qbit q := 0; new float f := 0.0; f := measure q;", Code::MeasureFloat);
        rejects("new qbit q := 0; new qbit r := 0; r := measure q;", Code::NotClassical);
        rejects("new bit q := 0; new bit r := 0; r := measure q;", Code::NotQuantum);
    }

    #[test]
    fn communication_judgments() {
        accepts(&modules(
            "new qbit q1 := 0; new qbit q2 := 0; send q1, q2 to B;",
            "receive a:qbit, b:qbit from A;",
        ));
        rejects(&modules("skip;", "new qbit q := 0; receive q:qbit from A;"), Code::RecvShadow);
        rejects(&modules("new qbit q := 0; send q to NoSuchModule;", "skip;"), Code::UnknownModule);
        rejects(&modules("new qbit q := 0; send q to A;", "skip;"), Code::SelfSend);
        rejects(&modules("new qbit q1 := 0; send q1, q1 to B;", "skip;"), Code::DupTuple);
        rejects("new qbit q := 0; send q to B;", Code::CommOutsideModule);
        rejects(&modules("skip;", "receive a:qbit, a:bit from A;"), Code::DupTuple);
    }

    #[test]
    fn conditions_must_be_bits() {
        rejects("new int n := 3; if n then skip;", Code::CondNotBit);
        rejects("new int n := 3; while (n + 1) do skip;", Code::CondNotBit);
        accepts("new int n := 3; while (n > 0 & !(n = 2)) do n := n - 1;");
    }

    #[test]
    fn assignment_and_initialisation() {
        rejects("new qbit q := 2;", Code::QuantumInit);
        rejects("new bit b := 2;", Code::TypeMismatch);
        rejects("new int i := 1.5;", Code::TypeMismatch);
        accepts("new float f := 1; f := f * 2.5; new int i := 3; f := i;");
        rejects("new int i := 0; i := 0.5;", Code::TypeMismatch);
        rejects("new qbit q := 0; q := 1;", Code::NotClassical);
        rejects("new int i := 0; new int i := 1;", Code::Redeclared);
        rejects("new qbit q := 0; print q + 1;", Code::NotClassical);
        rejects("print y;", Code::Undeclared);
    }

    #[test]
    fn overshading_restores_outer_binding() {
        accepts(
            "new int x := 5;
             { new qbit x := 0; x *= H; };
             x := x + 1; print x;",
        );
        rejects("new int x := 5; { new qbit x := 0; }; x *= H;", Code::NotQuantum);
    }

    #[test]
    fn branch_declarations_are_local() {
        rejects("new bit c := 1; if c then new int y := 1; print y;", Code::Undeclared);
    }

    #[test]
    fn procedures() {
        accepts(
            "proc flip: q:qbit, n:int -> n:int { q *= Not; n := n + 1; } in {
                new qbit a := 0; new int k := 0;
                (k) := call flip(a, k);
                call flip(a, 3);
             };",
        );
        rejects("call nothing();", Code::UnknownProc);
        rejects("proc f: q:qbit { q *= H; } in { call f(); };", Code::Arity);
        rejects(
            "proc f: q:qbit { q *= H; } in { new qint r := 0; call f(r); };",
            Code::ArgType,
        );
        rejects(
            "proc f: a:qbit, b:qbit { a, b *= CNot; } in { new qbit q := 0; call f(q, q); };",
            Code::DupTuple,
        );
        rejects(
            "proc f: n:int -> n:int { n := 1; } in { new qbit r := 0; (r) := call f(1); };",
            Code::NotClassical,
        );
        rejects(
            "new int outer := 0; proc f: n:int { outer := n; } in call f(1);",
            Code::Undeclared,
        );
        accepts("proc f: n:int { if (n > 0) then call f(n - 1); } in call f(3);");
    }

    #[test]
    fn procedure_parameters_cannot_be_sent() {
        rejects(
            &modules("proc f: q:qbit { send q to B; } in { new qbit a := 0; call f(a); };", "skip;"),
            Code::SendBorrowed,
        );
    }

    #[test]
    fn independent_errors_are_all_reported() {
        let got = codes("new qbit q := 0; q,q *= CNot; new int i := 0; i := measure q; print zz;");
        assert_eq!(got, vec![Code::DupTuple, Code::MeasureWidth, Code::Undeclared]);
    }

    #[test]
    fn expressions_are_annotated() {
        let checked = check("new int i := 3; print i * 2 > 1;").unwrap();
        let Program::Statements(stmts) = checked.program() else { unreachable!() };
        let StmtKind::Print(PrintArg::Expr(e)) = &stmts[1].kind else { unreachable!() };
        assert_eq!(checked.type_of(e), Some(TypeSignature::BIT));
        let ExprKind::Binary(_, lhs, _) = &e.kind else { unreachable!() };
        assert_eq!(checked.type_of(lhs), Some(TypeSignature::INT));
    }
}
