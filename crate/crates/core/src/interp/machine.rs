use super::value::{eval_binary, eval_unary, Value};
use super::{OutputSink, RuntimeError};
use crate::comm::{Channels, Message, Payload};
use crate::qcore::{builtin_gate, format_spectrum, Builtin, QuantumState, UnitaryMatrix};
use crate::syntax::*;
use crate::types::TypeSignature;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::slice;

/// Shared resources a module touches while stepping. Only one module holds
/// them at a time.
pub struct Gateway<'g> {
    pub qstate: &'g mut QuantumState,
    pub rng: &'g mut ChaCha8Rng,
    pub channels: &'g mut Channels,
    pub sink: &'g mut dyn OutputSink,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Running,
    /// Waiting for messages from the named module.
    Blocked { source: String },
    Finished,
    Failed(RuntimeError),
}

#[derive(Debug, Clone)]
enum Binding {
    Classical { ty: VarType, value: Value },
    Quantum { ty: VarType, indices: Vec<usize>, owned: bool },
}

#[derive(Debug, Default)]
struct Scope<'p> {
    vars: HashMap<String, Binding>,
    procs: HashMap<String, &'p ProcDecl>,
}

#[derive(Debug)]
struct Activation<'p> {
    scopes: Vec<Scope<'p>>,
}

#[derive(Debug)]
enum Cont<'p> {
    Seq { stmts: &'p [Stmt], next: usize },
    PopScope,
    Return {
        decl: &'p ProcDecl,
        results: Option<&'p [Ident]>,
    },
}

/// Resumable interpreter for one module (or a plain program).
#[derive(Debug)]
pub struct Machine<'p> {
    name: String,
    acts: Vec<Activation<'p>>,
    control: Vec<Cont<'p>>,
    pending_print: Option<String>,
    recursion_limit: usize,
    finished: bool,
}

fn undeclared(name: &str) -> RuntimeError {
    RuntimeError::new("E_UNDECLARED", format!("`{name}` is not bound"))
}

impl<'p> Machine<'p> {
    pub fn new(name: &str, body: &'p [Stmt], recursion_limit: usize) -> Self {
        Machine {
            name: name.to_string(),
            acts: vec![Activation {
                scopes: vec![Scope::default()],
            }],
            control: vec![Cont::Seq { stmts: body, next: 0 }],
            pending_print: None,
            recursion_limit,
            finished: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Heap indices owned by live bindings (borrowed procedure parameters
    /// excluded).
    pub fn owned_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for a in &self.acts {
            for s in &a.scopes {
                for b in s.vars.values() {
                    if let Binding::Quantum {
                        indices, owned: true, ..
                    } = b
                    {
                        out.extend(indices);
                    }
                }
            }
        }
        out
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

    fn lookup(&self, name: &str) -> Result<&Binding, RuntimeError> {
        self.act()
            .scopes
            .iter()
            .rev()
            .find_map(|s| s.vars.get(name))
            .ok_or_else(|| undeclared(name))
    }

    fn lookup_mut(&mut self, name: &str) -> Result<&mut Binding, RuntimeError> {
        self.act_mut()
            .scopes
            .iter_mut()
            .rev()
            .find_map(|s| s.vars.get_mut(name))
            .ok_or_else(|| undeclared(name))
    }

    fn find_proc(&self, name: &str) -> Option<&'p ProcDecl> {
        self.act().scopes.iter().rev().find_map(|s| s.procs.get(name).copied())
    }

    fn quantum(&self, name: &str) -> Result<Vec<usize>, RuntimeError> {
        match self.lookup(name)? {
            Binding::Quantum { indices, .. } => Ok(indices.clone()),
            Binding::Classical { .. } => Err(RuntimeError::new(
                "E_NOT_QUANTUM",
                format!("`{name}` is classical"),
            )),
        }
    }

    fn targets(&self, ids: &[Ident]) -> Result<Vec<usize>, RuntimeError> {
        let mut out = Vec::new();
        for id in ids {
            out.extend(self.quantum(&id.name)?);
        }
        Ok(out)
    }

    fn assign(&mut self, name: &str, v: Value) -> Result<(), RuntimeError> {
        match self.lookup_mut(name)? {
            Binding::Classical { ty, value } => {
                *value = v.coerce(*ty);
                Ok(())
            }
            Binding::Quantum { .. } => Err(RuntimeError::new(
                "E_NOT_CLASSICAL",
                format!("`{name}` is quantum"),
            )),
        }
    }

    pub fn eval(&self, e: &Expr) -> Result<Value, RuntimeError> {
        match &e.kind {
            ExprKind::Int(i) => Ok(Value::Int(*i)),
            ExprKind::Float(f) => Ok(Value::Float(*f)),
            ExprKind::Bool(b) => Ok(Value::Bit(*b)),
            ExprKind::Var(v) => match self.lookup(v)? {
                Binding::Classical { value, .. } => Ok(*value),
                Binding::Quantum { .. } => Err(RuntimeError::new(
                    "E_NOT_CLASSICAL",
                    format!("`{v}` is quantum"),
                )),
            },
            ExprKind::Paren(inner) => self.eval(inner),
            ExprKind::Unary(op, inner) => Ok(eval_unary(*op, self.eval(inner)?)?),
            ExprKind::Binary(op, a, b) => Ok(eval_binary(*op, self.eval(a)?, self.eval(b)?)?),
        }
    }

    fn release_scope(scope: Scope<'p>, gw: &mut Gateway) -> Result<(), RuntimeError> {
        let mut names: Vec<(String, Vec<usize>)> = scope
            .vars
            .into_iter()
            .filter_map(|(n, b)| match b {
                Binding::Quantum {
                    indices, owned: true, ..
                } => Some((n, indices)),
                _ => None,
            })
            .collect();
        names.sort();
        for (_, indices) in names {
            gw.qstate.release(&indices, gw.rng)?;
        }
        Ok(())
    }

    fn push_branch(&mut self, s: &'p Stmt) {
        self.act_mut().scopes.push(Scope::default());
        self.control.push(Cont::PopScope);
        self.control.push(Cont::Seq {
            stmts: slice::from_ref(s),
            next: 0,
        });
    }

    /// Executes one statement, or reports why none can run.
    pub fn step(&mut self, gw: &mut Gateway) -> Status {
        match self.try_step(gw) {
            Ok(s) => s,
            Err(e) => {
                self.finished = true;
                Status::Failed(e.in_module(&self.name))
            }
        }
    }

    fn try_step(&mut self, gw: &mut Gateway) -> Result<Status, RuntimeError> {
        if self.finished {
            return Ok(Status::Finished);
        }
        let stmt = loop {
            match self.control.last_mut() {
                None => {
                    let act = self.acts.pop().expect("activation stack is never empty");
                    for scope in act.scopes.into_iter().rev() {
                        Self::release_scope(scope, gw)?;
                    }
                    self.finished = true;
                    return Ok(Status::Finished);
                }
                Some(Cont::Seq { stmts, next }) => {
                    if *next < stmts.len() {
                        break &stmts[*next];
                    }
                    self.control.pop();
                }
                Some(Cont::PopScope) => {
                    self.control.pop();
                    let scope = self.act_mut().scopes.pop().expect("scope pushed with PopScope");
                    Self::release_scope(scope, gw)?;
                }
                Some(Cont::Return { .. }) => {
                    let Some(Cont::Return { decl, results }) = self.control.pop() else {
                        unreachable!()
                    };
                    self.finish_call(decl, results, gw)?;
                }
            }
        };
        if let StmtKind::Receive { bindings, source } = &stmt.kind {
            if !gw.channels.ready(&source.name, &self.name, bindings.len()) {
                return Ok(Status::Blocked {
                    source: source.name.clone(),
                });
            }
        }
        if let Some(Cont::Seq { next, .. }) = self.control.last_mut() {
            *next += 1;
        }
        self.exec(stmt, gw).map_err(|e| e.at(stmt.pos))?;
        Ok(Status::Running)
    }

    fn finish_call(&mut self, decl: &'p ProcDecl, results: Option<&'p [Ident]>, gw: &mut Gateway) -> Result<(), RuntimeError> {
        let act = self.acts.pop().expect("callee activation");
        let mut values = Vec::new();
        for p in decl.classical_params() {
            let v = act
                .scopes
                .iter()
                .rev()
                .find_map(|s| s.vars.get(&p.name.name))
                .and_then(|b| match b {
                    Binding::Classical { value, .. } => Some(*value),
                    Binding::Quantum { .. } => None,
                })
                .ok_or_else(|| undeclared(&p.name.name))?;
            values.push(v);
        }
        for scope in act.scopes.into_iter().rev() {
            Self::release_scope(scope, gw)?;
        }
        if let Some(results) = results {
            for (r, v) in results.iter().zip(values) {
                self.assign(&r.name, v)?;
            }
        }
        Ok(())
    }

    fn next_is_dump(&self) -> bool {
        match self.control.last() {
            Some(Cont::Seq { stmts, next }) => {
                matches!(stmts.get(*next).map(|s| &s.kind), Some(StmtKind::Dump(_)))
            }
            _ => false,
        }
    }

    fn exec(&mut self, s: &'p Stmt, gw: &mut Gateway) -> Result<(), RuntimeError> {
        match &s.kind {
            StmtKind::Allocate { ty, name, init } => {
                let binding = if ty.is_quantum() {
                    let width = TypeSignature::of(*ty).width as usize;
                    let one = self.eval(init)?.truthy();
                    let pattern = if one { (1u64 << width) - 1 } else { 0 };
                    let indices = gw.qstate.alloc(width, pattern)?;
                    Binding::Quantum {
                        ty: *ty,
                        indices,
                        owned: true,
                    }
                } else {
                    Binding::Classical {
                        ty: *ty,
                        value: self.eval(init)?.coerce(*ty),
                    }
                };
                self.scope_mut().vars.insert(name.name.clone(), binding);
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value)?;
                self.assign(&target.name, v)?;
            }
            StmtKind::AssignMeasure { target, source } => {
                let ix = self.quantum(&source.name)?;
                let outcome = gw.qstate.measure(&ix, gw.rng)?;
                self.assign(&target.name, Value::Int(outcome as i64))?;
            }
            StmtKind::MeasureBranch {
                qvar,
                then_branch,
                else_branch,
            } => {
                let ix = self.quantum(&qvar.name)?;
                let outcome = gw.qstate.measure(&ix, gw.rng)?;
                self.push_branch(if outcome != 0 { then_branch } else { else_branch });
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.eval(cond)?.truthy() {
                    self.push_branch(then_branch);
                } else if let Some(e) = else_branch {
                    self.push_branch(e);
                }
            }
            StmtKind::While { cond, body } => {
                if self.eval(cond)?.truthy() {
                    self.control.push(Cont::Seq {
                        stmts: slice::from_ref(s),
                        next: 0,
                    });
                    self.push_branch(body);
                }
            }
            StmtKind::GateApply { targets, gate } => {
                let ix = self.targets(targets)?;
                match gate {
                    Gate::FT(_) => {
                        let h = builtin_gate(Builtin::H)?;
                        for i in ix {
                            gw.qstate.apply(&h, &[i])?;
                        }
                    }
                    _ => {
                        let u = self.gate_matrix(gate)?;
                        gw.qstate.apply(&u, &ix)?;
                    }
                }
            }
            StmtKind::Send { vars, dest } => {
                let mut items = Vec::new();
                for v in vars {
                    let b = self.lookup(&v.name)?.clone();
                    items.push(match b {
                        Binding::Classical { ty, value } => Message {
                            ty,
                            payload: Payload::Classical(value),
                        },
                        Binding::Quantum { ty, indices, .. } => {
                            self.unbind(&v.name);
                            Message {
                                ty,
                                payload: Payload::Quantum(indices),
                            }
                        }
                    });
                }
                gw.channels.send(&self.name, &dest.name, items);
            }
            StmtKind::Receive { bindings, source } => {
                let items = gw.channels.receive(&source.name, &self.name, bindings.len());
                for (p, m) in bindings.iter().zip(items) {
                    let want = TypeSignature::of(p.ty);
                    let got = TypeSignature::of(m.ty);
                    if want != got {
                        if let Payload::Quantum(ix) = &m.payload {
                            gw.qstate.release(ix, gw.rng)?;
                        }
                        return Err(RuntimeError::new(
                            "E_RECV_TYPE",
                            format!(
                                "`{}` expects {} from {} but {} arrived",
                                p.name.name, want, source.name, got
                            ),
                        ));
                    }
                    let binding = match m.payload {
                        Payload::Classical(value) => Binding::Classical {
                            ty: p.ty,
                            value: value.coerce(p.ty),
                        },
                        Payload::Quantum(indices) => Binding::Quantum {
                            ty: p.ty,
                            indices,
                            owned: true,
                        },
                    };
                    self.scope_mut().vars.insert(p.name.name.clone(), binding);
                }
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
                let decl = self.find_proc(&name.name).ok_or_else(|| {
                    RuntimeError::new("E_UNKNOWN_PROC", format!("no procedure `{}`", name.name))
                })?;
                if self.acts.len() > self.recursion_limit {
                    return Err(RuntimeError::new(
                        "E_RECURSION_LIMIT",
                        format!("call depth exceeds {}", self.recursion_limit),
                    ));
                }
                let mut procs = HashMap::new();
                for sc in &self.act().scopes {
                    procs.extend(sc.procs.iter().map(|(k, v)| (k.clone(), *v)));
                }
                let mut params = Scope::default();
                for (p, a) in decl.params.iter().zip(args) {
                    let b = if p.ty.is_quantum() {
                        let ExprKind::Var(v) = &strip_parens(a).kind else {
                            return Err(RuntimeError::new(
                                "E_ARG_TYPE",
                                format!("parameter `{}` needs a quantum variable", p.name.name),
                            ));
                        };
                        Binding::Quantum {
                            ty: p.ty,
                            indices: self.quantum(v)?,
                            owned: false,
                        }
                    } else {
                        Binding::Classical {
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
                    PrintArg::Text(t) => t.clone(),
                    PrintArg::Expr(e) => self.eval(e)?.to_string(),
                };
                if self.next_is_dump() {
                    self.pending_print = Some(text);
                } else {
                    gw.sink.emit(&self.name, &text);
                }
            }
            StmtKind::Dump(vars) => {
                let ix = self.targets(vars)?;
                let spectrum = format_spectrum(&gw.qstate.spectrum(&ix)?, ix.len());
                let line = match self.pending_print.take() {
                    Some(p) => format!("{p} {spectrum}"),
                    None => spectrum,
                };
                gw.sink.emit(&self.name, &line);
            }
            StmtKind::Skip => {}
            StmtKind::Block(stmts) => {
                self.act_mut().scopes.push(Scope::default());
                self.control.push(Cont::PopScope);
                self.control.push(Cont::Seq { stmts, next: 0 });
            }
        }
        Ok(())
    }

    fn unbind(&mut self, name: &str) {
        for s in self.act_mut().scopes.iter_mut().rev() {
            if s.vars.remove(name).is_some() {
                return;
            }
        }
    }

    fn gate_matrix(&self, gate: &Gate) -> Result<UnitaryMatrix, RuntimeError> {
        let b = match gate {
            Gate::H => Builtin::H,
            Gate::Not => Builtin::Not,
            Gate::CNot => Builtin::CNot,
            Gate::FT(n) => Builtin::FT(*n),
            Gate::Phase(e) => Builtin::Phase(self.eval(e)?.as_f64()),
            Gate::Matrix(entries) => return Ok(UnitaryMatrix::from_entries(entries.clone())?),
        };
        Ok(builtin_gate(b)?)
    }
}

fn strip_parens(e: &Expr) -> &Expr {
    match &e.kind {
        ExprKind::Paren(inner) => strip_parens(inner),
        _ => e,
    }
}
