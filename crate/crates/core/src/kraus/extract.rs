use super::trace::*;
use crate::interp::value::{EvalError, Value};
use crate::qcore::UnitaryMatrix;
use crate::syntax::*;
use crate::types::{CheckedProgram, TypeSignature};
use std::collections::HashMap;
use std::slice;

/// Statements a single module may execute before a loop counts as unbounded.
pub const MAX_STEPS: u64 = 200_000;
/// Deepest procedure nesting that is inlined.
pub const MAX_CALL_DEPTH: usize = 64;
/// Widest measurement that is expanded into branches.
pub const MAX_FORK_QBITS: usize = 10;
/// Total number of branch arms in one extraction.
pub const MAX_ARMS: usize = 4096;

pub(crate) struct Budget {
    steps: u64,
    arms: usize,
    next_branch: u32,
}

impl Budget {
    pub(crate) fn new() -> Self {
        Budget {
            steps: 0,
            arms: 0,
            next_branch: 0,
        }
    }

    pub(crate) fn branch(&mut self, arms: usize) -> Result<u32, SemanticsError> {
        self.arms += arms;
        if self.arms > MAX_ARMS {
            return Err(SemanticsError::too_large(format!(
                "more than {MAX_ARMS} branch arms"
            )));
        }
        self.next_branch += 1;
        Ok(self.next_branch - 1)
    }
}

#[derive(Debug, Clone)]
enum Bind {
    Classical { ty: VarType, value: Sym },
    Quantum { ty: VarType, targets: Vec<usize>, owned: bool },
}

#[derive(Debug, Clone, Default)]
struct Scope<'p> {
    vars: HashMap<String, Bind>,
    procs: HashMap<String, &'p ProcDecl>,
}

#[derive(Debug, Clone)]
struct Activation<'p> {
    scopes: Vec<Scope<'p>>,
}

#[derive(Debug, Clone)]
enum Cont<'p> {
    Seq { stmts: &'p [Stmt], next: usize },
    PopScope,
    Return {
        decl: &'p ProcDecl,
        results: Option<&'p [Ident]>,
    },
}

enum Flow {
    Continue,
    /// The statement forked; its arms hold the rest of the module.
    Forked,
}

struct Abort(&'static str, String);

impl From<EvalError> for Abort {
    fn from(e: EvalError) -> Self {
        Abort(e.code(), e.to_string())
    }
}

/// Symbolic counterpart of the interpreter: classical values become
/// [`Sym`]s, qbits become heap positions and every measurement forks.
#[derive(Debug, Clone)]
struct Walker<'p> {
    acts: Vec<Activation<'p>>,
    control: Vec<Cont<'p>>,
    pending_print: Option<Text>,
    next_pos: usize,
    next_label: u32,
    loop_pos: Option<Pos>,
}

fn strip_parens(e: &Expr) -> &Expr {
    match &e.kind {
        ExprKind::Paren(inner) => strip_parens(inner),
        _ => e,
    }
}

impl<'p> Walker<'p> {
    fn new(body: &'p [Stmt]) -> Self {
        Walker {
            acts: vec![Activation {
                scopes: vec![Scope::default()],
            }],
            control: vec![Cont::Seq { stmts: body, next: 0 }],
            pending_print: None,
            next_pos: 0,
            next_label: 0,
            loop_pos: None,
        }
    }

    fn act(&self) -> &Activation<'p> {
        self.acts.last().expect("activation stack is never empty")
    }

    fn act_mut(&mut self) -> &mut Activation<'p> {
        self.acts.last_mut().expect("activation stack is never empty")
    }

    fn scope_mut(&mut self) -> &mut Scope<'p> {
        self.act_mut().scopes.last_mut().expect("scope stack is never empty")
    }

    fn lookup(&self, name: &str) -> Result<&Bind, Abort> {
        self.act()
            .scopes
            .iter()
            .rev()
            .find_map(|s| s.vars.get(name))
            .ok_or_else(|| Abort("E_UNDECLARED", format!("`{name}` is not bound")))
    }

    fn targets(&self, ids: &[Ident]) -> Result<Vec<usize>, Abort> {
        let mut out = Vec::new();
        for id in ids {
            match self.lookup(&id.name)? {
                Bind::Quantum { targets, .. } => out.extend(targets),
                Bind::Classical { .. } => {
                    return Err(Abort("E_NOT_QUANTUM", format!("`{}` is classical", id.name)))
                }
            }
        }
        Ok(out)
    }

    fn assign(&mut self, name: &str, v: Sym) -> Result<(), Abort> {
        let slot = self
            .act_mut()
            .scopes
            .iter_mut()
            .rev()
            .find_map(|s| s.vars.get_mut(name))
            .ok_or_else(|| Abort("E_UNDECLARED", format!("`{name}` is not bound")))?;
        match slot {
            Bind::Classical { ty, value } => {
                *value = v.coerce(*ty);
                Ok(())
            }
            Bind::Quantum { .. } => Err(Abort("E_NOT_CLASSICAL", format!("`{name}` is quantum"))),
        }
    }

    fn eval(&self, e: &Expr) -> Result<Sym, Abort> {
        Ok(match &e.kind {
            ExprKind::Int(i) => Sym::Const(Value::Int(*i)),
            ExprKind::Float(f) => Sym::Const(Value::Float(*f)),
            ExprKind::Bool(b) => Sym::Const(Value::Bit(*b)),
            ExprKind::Var(v) => match self.lookup(v)? {
                Bind::Classical { value, .. } => value.clone(),
                Bind::Quantum { .. } => return Err(Abort("E_NOT_CLASSICAL", format!("`{v}` is quantum"))),
            },
            ExprKind::Paren(inner) => self.eval(inner)?,
            ExprKind::Unary(op, a) => Sym::unary(*op, self.eval(a)?)?,
            ExprKind::Binary(op, a, b) => Sym::binary(*op, self.eval(a)?, self.eval(b)?)?,
        })
    }

    fn fresh(&mut self, n: usize) -> Vec<usize> {
        let out = (self.next_pos..self.next_pos + n).collect();
        self.next_pos += n;
        out
    }

    fn release(scope: Scope<'p>, out: &mut Vec<Element>) {
        let mut owned: Vec<(String, Vec<usize>)> = scope
            .vars
            .into_iter()
            .filter_map(|(n, b)| match b {
                Bind::Quantum { targets, owned: true, .. } => Some((n, targets)),
                _ => None,
            })
            .collect();
        owned.sort();
        for (_, targets) in owned {
            out.push(Element::Discard { targets });
        }
    }

    fn push_branch(&mut self, s: &'p Stmt) {
        self.act_mut().scopes.push(Scope::default());
        self.control.push(Cont::PopScope);
        self.control.push(Cont::Seq {
            stmts: slice::from_ref(s),
            next: 0,
        });
    }

    fn next_is_dump(&self) -> bool {
        match self.control.last() {
            Some(Cont::Seq { stmts, next }) => {
                matches!(stmts.get(*next).map(|s| &s.kind), Some(StmtKind::Dump(_)))
            }
            _ => false,
        }
    }

    fn run(mut self, budget: &mut Budget) -> Result<Vec<Element>, SemanticsError> {
        let mut out = Vec::new();
        loop {
            let stmt = loop {
                match self.control.last_mut() {
                    None => {
                        let act = self.acts.pop().expect("activation stack is never empty");
                        for scope in act.scopes.into_iter().rev() {
                            Self::release(scope, &mut out);
                        }
                        return Ok(out);
                    }
                    Some(Cont::Seq { stmts, next }) => {
                        if *next < stmts.len() {
                            let s = &stmts[*next];
                            *next += 1;
                            break s;
                        }
                        self.control.pop();
                    }
                    Some(Cont::PopScope) => {
                        self.control.pop();
                        let scope = self.act_mut().scopes.pop().expect("scope pushed with PopScope");
                        Self::release(scope, &mut out);
                    }
                    Some(Cont::Return { .. }) => {
                        let Some(Cont::Return { decl, results }) = self.control.pop() else {
                            unreachable!()
                        };
                        if let Err(Abort(code, message)) = self.finish_call(decl, results, &mut out) {
                            out.push(Element::Abort { code, message });
                            return Ok(out);
                        }
                    }
                }
            };
            budget.steps += 1;
            if budget.steps > MAX_STEPS {
                return Err(SemanticsError::unbounded(
                    format!("no termination within {MAX_STEPS} unrolled statements"),
                    self.loop_pos.or(Some(stmt.pos)),
                ));
            }
            match self.exec(stmt, &mut out, budget) {
                Ok(Flow::Continue) => {}
                Ok(Flow::Forked) => return Ok(out),
                Err(Step::Abort(Abort(code, message))) => {
                    out.push(Element::Abort { code, message });
                    return Ok(out);
                }
                Err(Step::Fatal(e)) => return Err(e),
            }
        }
    }

    fn finish_call(&mut self, decl: &'p ProcDecl, results: Option<&'p [Ident]>, out: &mut Vec<Element>) -> Result<(), Abort> {
        let act = self.acts.pop().expect("callee activation");
        let mut values = Vec::new();
        for p in decl.classical_params() {
            let v = act
                .scopes
                .iter()
                .rev()
                .find_map(|s| s.vars.get(&p.name.name))
                .and_then(|b| match b {
                    Bind::Classical { value, .. } => Some(value.clone()),
                    Bind::Quantum { .. } => None,
                })
                .ok_or_else(|| Abort("E_UNDECLARED", format!("`{}` is not bound", p.name.name)))?;
            values.push(v);
        }
        for scope in act.scopes.into_iter().rev() {
            Self::release(scope, out);
        }
        if let Some(results) = results {
            for (r, v) in results.iter().zip(values) {
                self.assign(&r.name, v)?;
            }
        }
        Ok(())
    }

    /// Forks into one arm per outcome; `setup` prepares each arm's walker.
    fn fork(
        &self,
        kind: BranchKind,
        outcomes: Vec<u64>,
        out: &mut Vec<Element>,
        budget: &mut Budget,
        setup: &dyn Fn(&mut Walker<'p>, u64) -> Result<(), Abort>,
    ) -> Result<Flow, Step> {
        let id = budget.branch(outcomes.len()).map_err(Step::Fatal)?;
        let mut arms = Vec::with_capacity(outcomes.len());
        for v in outcomes {
            let mut w = self.clone();
            let body = match setup(&mut w, v) {
                Ok(()) => w.run(budget).map_err(Step::Fatal)?,
                Err(Abort(code, message)) => vec![Element::Abort { code, message }],
            };
            arms.push(Arm { outcome: v, body });
        }
        out.push(Element::Branch(BranchSum { id, kind, arms }));
        Ok(Flow::Forked)
    }

    fn measure_outcomes(targets: &[usize]) -> Result<Vec<u64>, Step> {
        if targets.len() > MAX_FORK_QBITS {
            return Err(Step::Fatal(SemanticsError::too_large(format!(
                "measuring {} qbits forks more than 2^{MAX_FORK_QBITS} ways",
                targets.len()
            ))));
        }
        Ok((0..1u64 << targets.len()).collect())
    }

    fn exec(&mut self, s: &'p Stmt, out: &mut Vec<Element>, budget: &mut Budget) -> Result<Flow, Step> {
        match &s.kind {
            StmtKind::Allocate { ty, name, init } => {
                let bind = if ty.is_quantum() {
                    let width = TypeSignature::of(*ty).width as usize;
                    let one = match self.eval(init)?.constant() {
                        Some(v) => v.truthy(),
                        None => return Err(Abort("E_QUANTUM_INIT", "initialiser is not a constant".into()).into()),
                    };
                    let init = if one { (1u64 << width) - 1 } else { 0 };
                    let targets = self.fresh(width);
                    out.push(Element::Create {
                        targets: targets.clone(),
                        init,
                    });
                    Bind::Quantum {
                        ty: *ty,
                        targets,
                        owned: true,
                    }
                } else {
                    Bind::Classical {
                        ty: *ty,
                        value: self.eval(init)?.coerce(*ty),
                    }
                };
                self.scope_mut().vars.insert(name.name.clone(), bind);
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value)?;
                self.assign(&target.name, v)?;
            }
            StmtKind::AssignMeasure { target, source } => {
                let targets = self.targets(slice::from_ref(source))?;
                let outcomes = Self::measure_outcomes(&targets)?;
                let name = target.name.clone();
                return self.fork(BranchKind::Measure { targets }, outcomes, out, budget, &|w, v| {
                    w.assign(&name, Sym::Const(Value::Int(v as i64)))
                });
            }
            StmtKind::MeasureBranch {
                qvar,
                then_branch,
                else_branch,
            } => {
                let targets = self.targets(slice::from_ref(qvar))?;
                let outcomes = Self::measure_outcomes(&targets)?;
                return self.fork(BranchKind::Measure { targets }, outcomes, out, budget, &|w, v| {
                    w.push_branch(if v != 0 { then_branch } else { else_branch });
                    Ok(())
                });
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.eval(cond)?;
                match c.constant() {
                    Some(v) => {
                        if v.truthy() {
                            self.push_branch(then_branch);
                        } else if let Some(e) = else_branch {
                            self.push_branch(e);
                        }
                    }
                    None => {
                        return self.fork(BranchKind::Guard { cond: c }, vec![1, 0], out, budget, &|w, v| {
                            if v != 0 {
                                w.push_branch(then_branch);
                            } else if let Some(e) = else_branch {
                                w.push_branch(e);
                            }
                            Ok(())
                        });
                    }
                }
            }
            StmtKind::While { cond, body } => {
                self.loop_pos = Some(s.pos);
                let Some(v) = self.eval(cond)?.constant() else {
                    return Err(Step::Fatal(SemanticsError::unbounded(
                        "loop condition depends on received data",
                        Some(s.pos),
                    )));
                };
                if v.truthy() {
                    self.control.push(Cont::Seq {
                        stmts: slice::from_ref(s),
                        next: 0,
                    });
                    self.push_branch(body);
                }
            }
            StmtKind::GateApply { targets, gate } => {
                let targets = self.targets(targets)?;
                let op = match gate {
                    Gate::H => GateOp::H,
                    Gate::Not => GateOp::Not,
                    Gate::CNot => GateOp::CNot,
                    Gate::FT(n) => GateOp::FT(*n),
                    Gate::Phase(e) => GateOp::Phase(self.eval(e)?.coerce(VarType::Float)),
                    Gate::Matrix(entries) => match UnitaryMatrix::from_entries(entries.clone()) {
                        Ok(u) => GateOp::Matrix(u),
                        Err(e) => return Err(Abort(e.code(), e.to_string()).into()),
                    },
                };
                out.push(Element::Gate { gate: op, targets });
            }
            StmtKind::Send { vars, dest } => {
                let mut items = Vec::new();
                for v in vars {
                    let b = self.lookup(&v.name)?.clone();
                    items.push(match b {
                        Bind::Classical { ty, value } => Item::Classical { ty, value },
                        Bind::Quantum { ty, targets, .. } => {
                            self.unbind(&v.name);
                            Item::Quantum { ty, targets }
                        }
                    });
                }
                out.push(Element::Send {
                    to: dest.name.clone(),
                    items,
                });
            }
            StmtKind::Receive { bindings, source } => {
                let mut slots = Vec::new();
                for p in bindings {
                    let (slot, bind) = if p.ty.is_quantum() {
                        let targets = self.fresh(TypeSignature::of(p.ty).width as usize);
                        (
                            Slot::Quantum {
                                ty: p.ty,
                                targets: targets.clone(),
                            },
                            Bind::Quantum {
                                ty: p.ty,
                                targets,
                                owned: true,
                            },
                        )
                    } else {
                        let label = self.next_label;
                        self.next_label += 1;
                        (
                            Slot::Classical { ty: p.ty, label },
                            Bind::Classical {
                                ty: p.ty,
                                value: Sym::Label(label),
                            },
                        )
                    };
                    slots.push(slot);
                    self.scope_mut().vars.insert(p.name.name.clone(), bind);
                }
                out.push(Element::Receive {
                    from: source.name.clone(),
                    slots,
                });
            }
            StmtKind::ProcDecl(decl) => {
                let mut scope = Scope::default();
                scope.procs.insert(decl.name.name.clone(), decl.as_ref());
                self.act_mut().scopes.push(scope);
                self.control.push(Cont::PopScope);
                self.control.push(Cont::Seq {
                    stmts: slice::from_ref(&decl.scope),
                    next: 0,
                });
            }
            StmtKind::ProcCall { results, name, args } => {
                let decl = self
                    .act()
                    .scopes
                    .iter()
                    .rev()
                    .find_map(|sc| sc.procs.get(&name.name).copied())
                    .ok_or_else(|| Abort("E_UNKNOWN_PROC", format!("no procedure `{}`", name.name)))?;
                if self.acts.len() > MAX_CALL_DEPTH {
                    return Err(Step::Fatal(SemanticsError::unbounded(
                        format!("calls nest deeper than {MAX_CALL_DEPTH}"),
                        Some(s.pos),
                    )));
                }
                let mut procs = HashMap::new();
                for sc in &self.act().scopes {
                    procs.extend(sc.procs.iter().map(|(k, v)| (k.clone(), *v)));
                }
                let mut params = Scope::default();
                for (p, a) in decl.params.iter().zip(args) {
                    let b = if p.ty.is_quantum() {
                        let ExprKind::Var(v) = &strip_parens(a).kind else {
                            return Err(Abort("E_ARG_TYPE", format!("`{}` needs a quantum variable", p.name.name)).into());
                        };
                        let targets = self.targets(&[Ident::new(v.clone(), a.pos)])?;
                        Bind::Quantum {
                            ty: p.ty,
                            targets,
                            owned: false,
                        }
                    } else {
                        Bind::Classical {
                            ty: p.ty,
                            value: self.eval(a)?.coerce(p.ty),
                        }
                    };
                    params.vars.insert(p.name.name.clone(), b);
                }
                self.acts.push(Activation {
                    scopes: vec![
                        Scope {
                            vars: HashMap::new(),
                            procs,
                        },
                        params,
                    ],
                });
                self.control.push(Cont::Return {
                    decl,
                    results: results.as_deref(),
                });
                self.control.push(Cont::Seq {
                    stmts: &decl.body,
                    next: 0,
                });
            }
            StmtKind::Print(arg) => {
                let text = match arg {
                    PrintArg::Text(t) => Text::Literal(t.clone()),
                    PrintArg::Expr(e) => Text::Value(self.eval(e)?),
                };
                if self.next_is_dump() {
                    self.pending_print = Some(text);
                } else {
                    out.push(Element::Print { text });
                }
            }
            StmtKind::Dump(vars) => {
                let targets = self.targets(vars)?;
                out.push(Element::Dump {
                    prefix: self.pending_print.take(),
                    targets,
                });
            }
            StmtKind::Skip => {}
            StmtKind::Block(stmts) => {
                self.act_mut().scopes.push(Scope::default());
                self.control.push(Cont::PopScope);
                self.control.push(Cont::Seq { stmts, next: 0 });
            }
        }
        Ok(Flow::Continue)
    }

    fn unbind(&mut self, name: &str) {
        for s in self.act_mut().scopes.iter_mut().rev() {
            if s.vars.remove(name).is_some() {
                return;
            }
        }
    }
}

enum Step {
    Abort(Abort),
    Fatal(SemanticsError),
}

impl From<Abort> for Step {
    fn from(a: Abort) -> Self {
        Step::Abort(a)
    }
}

impl From<EvalError> for Step {
    fn from(e: EvalError) -> Self {
        Step::Abort(e.into())
    }
}

/// Extracts the per-module Kraus aggregation of a checked program. Loops
/// and calls are unrolled and inlined; measurements and conditions on
/// received data become [`BranchSum`]s whose arms carry the remainder of
/// the module.
pub fn extract_semantics(p: &CheckedProgram) -> Result<Semantics, SemanticsError> {
    let mut budget = Budget::new();
    let modules = match p.program() {
        Program::Statements(body) => vec![ModuleTrace {
            name: crate::comm::MAIN.to_string(),
            elements: Walker::new(body).run(&mut budget)?,
        }],
        Program::Modules(ms) => {
            let mut out = Vec::new();
            for m in ms {
                let mut budget = Budget::new();
                out.push(ModuleTrace {
                    name: m.name.name.clone(),
                    elements: Walker::new(&m.body).run(&mut budget)?,
                });
            }
            out
        }
    };
    Ok(Semantics { modules })
}
