//! Static comparison of send and receive traffic for module programs whose
//! communication does not depend on runtime values.

use super::{type_equiv, Code, Diagnostic, TypeSignature};
use crate::interp::value::{eval_binary, eval_unary, Value};
use crate::syntax::*;
use std::collections::{HashMap, VecDeque};

/// Items carried over one ordered module pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelTraffic {
    pub from: String,
    pub to: String,
    pub items: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BalanceReport {
    /// Every receive is matched by a send of the same type and every sent
    /// item is received.
    Balanced(Vec<ChannelTraffic>),
    /// Communication depends on runtime values; the reason is given.
    Unknown(String),
    /// `W_COMM_IMBALANCE` warnings.
    Imbalanced(Vec<Diagnostic>),
}

const MAX_STEPS: usize = 200_000;
const MAX_CALL_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
enum Event {
    Send {
        peer: String,
        tys: Vec<VarType>,
        pos: Pos,
    },
    Recv {
        peer: String,
        tys: Vec<VarType>,
        pos: Pos,
    },
}

impl Event {
    /// Identity for branch comparison, ignoring positions.
    fn shape(&self) -> (bool, &str, &[VarType]) {
        match self {
            Event::Send { peer, tys, .. } => (true, peer, tys),
            Event::Recv { peer, tys, .. } => (false, peer, tys),
        }
    }
}

#[derive(Debug, Clone)]
struct Var {
    ty: VarType,
    value: Option<Value>,
}

#[derive(Debug, Clone, Default)]
struct Frame<'a> {
    vars: HashMap<String, Var>,
    procs: HashMap<String, &'a ProcDecl>,
}

#[derive(Debug, Clone)]
struct Env<'a> {
    scopes: Vec<Frame<'a>>,
}

impl<'a> Env<'a> {
    fn new() -> Self {
        Env {
            scopes: vec![Frame::default()],
        }
    }

    fn declare(&mut self, name: &str, ty: VarType, value: Option<Value>) {
        let value = value.map(|v| v.coerce(ty));
        self.scopes
            .last_mut()
            .expect("scope stack is never empty")
            .vars
            .insert(name.to_string(), Var { ty, value });
    }

    fn get(&self, name: &str) -> Option<&Var> {
        self.scopes.iter().rev().find_map(|s| s.vars.get(name))
    }

    fn set(&mut self, name: &str, value: Option<Value>) {
        for s in self.scopes.iter_mut().rev() {
            if let Some(v) = s.vars.get_mut(name) {
                v.value = value.map(|x| x.coerce(v.ty));
                return;
            }
        }
    }

    fn proc(&self, name: &str) -> Option<&'a ProcDecl> {
        self.scopes.iter().rev().find_map(|s| s.procs.get(name).copied())
    }

    fn procs(&self) -> HashMap<String, &'a ProcDecl> {
        let mut out = HashMap::new();
        for s in &self.scopes {
            out.extend(s.procs.iter().map(|(k, v)| (k.clone(), *v)));
        }
        out
    }

    /// Keeps values both branches agree on and forgets the rest.
    fn merge(&mut self, other: &Env<'a>) {
        for (mine, theirs) in self.scopes.iter_mut().zip(&other.scopes) {
            for (name, v) in mine.vars.iter_mut() {
                let same = theirs.vars.get(name).map(|t| t.value) == Some(v.value);
                if !same {
                    v.value = None;
                }
            }
        }
    }
}

struct Tracer {
    steps: usize,
    depth: usize,
}

type Outcome = Result<(), String>;

impl Tracer {
    fn eval(&self, e: &Expr, env: &Env) -> Option<Value> {
        match &e.kind {
            ExprKind::Int(i) => Some(Value::Int(*i)),
            ExprKind::Float(f) => Some(Value::Float(*f)),
            ExprKind::Bool(b) => Some(Value::Bit(*b)),
            ExprKind::Var(v) => env.get(v).and_then(|x| x.value),
            ExprKind::Paren(inner) => self.eval(inner, env),
            ExprKind::Unary(op, inner) => eval_unary(*op, self.eval(inner, env)?).ok(),
            ExprKind::Binary(op, a, b) => eval_binary(*op, self.eval(a, env)?, self.eval(b, env)?).ok(),
        }
    }

    fn list<'a>(&mut self, stmts: &'a [Stmt], env: &mut Env<'a>, out: &mut Vec<Event>) -> Outcome {
        for s in stmts {
            self.stmt(s, env, out)?;
        }
        Ok(())
    }

    fn scoped<'a>(&mut self, s: &'a Stmt, env: &mut Env<'a>, out: &mut Vec<Event>) -> Outcome {
        env.scopes.push(Frame::default());
        let r = self.stmt(s, env, out);
        env.scopes.pop();
        r
    }

    /// Explores both alternatives; they must communicate identically.
    fn fork<'a>(&mut self, a: &'a Stmt, b: Option<&'a Stmt>, env: &mut Env<'a>, out: &mut Vec<Event>, pos: Pos) -> Outcome {
        let mut env_b = env.clone();
        let mut ev_a = Vec::new();
        let mut ev_b = Vec::new();
        self.scoped(a, env, &mut ev_a)?;
        if let Some(b) = b {
            self.scoped(b, &mut env_b, &mut ev_b)?;
        }
        let same = ev_a.len() == ev_b.len() && ev_a.iter().zip(&ev_b).all(|(x, y)| x.shape() == y.shape());
        if !same {
            return Err(format!(
                "communication at {pos} depends on a value only known at run time"
            ));
        }
        env.merge(&env_b);
        out.extend(ev_a);
        Ok(())
    }

    fn stmt<'a>(&mut self, s: &'a Stmt, env: &mut Env<'a>, out: &mut Vec<Event>) -> Outcome {
        self.steps += 1;
        if self.steps > MAX_STEPS {
            return Err("communication pattern too long to unroll".into());
        }
        match &s.kind {
            StmtKind::Allocate { ty, name, init } => {
                let v = if ty.is_quantum() { None } else { self.eval(init, env) };
                env.declare(&name.name, *ty, v);
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, env);
                env.set(&target.name, v);
            }
            StmtKind::AssignMeasure { target, .. } => env.set(&target.name, None),
            StmtKind::MeasureBranch {
                then_branch,
                else_branch,
                ..
            } => self.fork(then_branch, Some(else_branch), env, out, s.pos)?,
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => match self.eval(cond, env) {
                Some(v) if v.truthy() => self.scoped(then_branch, env, out)?,
                Some(_) => {
                    if let Some(e) = else_branch {
                        self.scoped(e, env, out)?;
                    }
                }
                None => self.fork(then_branch, else_branch.as_deref(), env, out, s.pos)?,
            },
            StmtKind::While { cond, body } => loop {
                match self.eval(cond, env) {
                    Some(v) if v.truthy() => self.scoped(body, env, out)?,
                    Some(_) => break,
                    None => {
                        let mut probe = env.clone();
                        let mut events = Vec::new();
                        self.scoped(body, &mut probe, &mut events)?;
                        if !events.is_empty() || has_call(body) {
                            return Err(format!(
                                "loop at {} communicates a number of times only known at run time",
                                s.pos
                            ));
                        }
                        let mut assigned = Vec::new();
                        assigned_vars(body, &mut assigned);
                        for name in assigned {
                            env.set(name, None);
                        }
                        break;
                    }
                }
            },
            StmtKind::Send { vars, dest } => {
                let tys = vars.iter().map(|v| env.get(&v.name).map_or(VarType::Qbit, |x| x.ty)).collect();
                out.push(Event::Send {
                    peer: dest.name.clone(),
                    tys,
                    pos: s.pos,
                });
            }
            StmtKind::Receive { bindings, source } => {
                for b in bindings {
                    env.declare(&b.name.name, b.ty, None);
                }
                out.push(Event::Recv {
                    peer: source.name.clone(),
                    tys: bindings.iter().map(|b| b.ty).collect(),
                    pos: s.pos,
                });
            }
            StmtKind::ProcDecl(decl) => {
                let mut frame = Frame::default();
                frame.procs.insert(decl.name.name.clone(), decl.as_ref());
                env.scopes.push(frame);
                let r = self.stmt(&decl.scope, env, out);
                env.scopes.pop();
                r?;
            }
            StmtKind::ProcCall { results, name, args } => {
                let decl = env.proc(&name.name).ok_or("call to an unknown procedure")?;
                if self.depth >= MAX_CALL_DEPTH {
                    return Err(format!("recursion through `{}` is too deep to unroll", name.name));
                }
                let mut callee = Env {
                    scopes: vec![
                        Frame {
                            vars: HashMap::new(),
                            procs: env.procs(),
                        },
                        Frame::default(),
                    ],
                };
                callee.scopes[0].procs.insert(decl.name.name.clone(), decl);
                for (p, a) in decl.params.iter().zip(args) {
                    let v = if p.ty.is_quantum() { None } else { self.eval(a, env) };
                    callee.declare(&p.name.name, p.ty, v);
                }
                self.depth += 1;
                let r = self.list(&decl.body, &mut callee, out);
                self.depth -= 1;
                r?;
                if let Some(results) = results {
                    for (r, p) in results.iter().zip(decl.classical_params()) {
                        let v = callee.get(&p.name.name).and_then(|x| x.value);
                        env.set(&r.name, v);
                    }
                }
            }
            StmtKind::Block(stmts) => {
                env.scopes.push(Frame::default());
                let r = self.list(stmts, env, out);
                env.scopes.pop();
                r?;
            }
            StmtKind::GateApply { .. } | StmtKind::Print(_) | StmtKind::Dump(_) | StmtKind::Skip => {}
        }
        Ok(())
    }
}

fn has_call(s: &Stmt) -> bool {
    let mut found = false;
    visit(s, &mut |s| found |= matches!(s.kind, StmtKind::ProcCall { .. }));
    found
}

fn assigned_vars<'a>(s: &'a Stmt, out: &mut Vec<&'a str>) {
    let mut names = Vec::new();
    visit(s, &mut |s| match &s.kind {
        StmtKind::Assign { target, .. } | StmtKind::AssignMeasure { target, .. } => names.push(target.name.as_str()),
        StmtKind::ProcCall {
            results: Some(rs), ..
        } => names.extend(rs.iter().map(|r| r.name.as_str())),
        _ => {}
    });
    out.extend(names);
}

fn visit<'a>(s: &'a Stmt, f: &mut dyn FnMut(&'a Stmt)) {
    f(s);
    match &s.kind {
        StmtKind::MeasureBranch {
            then_branch,
            else_branch,
            ..
        } => {
            visit(then_branch, f);
            visit(else_branch, f);
        }
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            visit(then_branch, f);
            if let Some(e) = else_branch {
                visit(e, f);
            }
        }
        StmtKind::While { body, .. } => visit(body, f),
        StmtKind::ProcDecl(d) => {
            for b in &d.body {
                visit(b, f);
            }
            visit(&d.scope, f);
        }
        StmtKind::Block(stmts) => {
            for b in stmts {
                visit(b, f);
            }
        }
        _ => {}
    }
}

/// Compares, per ordered module pair, what is sent against what is
/// received, replaying the straight-line traces under a blocking-receive
/// scheduler.
pub fn comm_balance_check(program: &Program) -> BalanceReport {
    let Program::Modules(modules) = program else {
        return BalanceReport::Balanced(Vec::new());
    };
    let mut traces = Vec::new();
    for m in modules {
        let mut tracer = Tracer { steps: 0, depth: 0 };
        let mut env = Env::new();
        let mut events = Vec::new();
        if let Err(reason) = tracer.list(&m.body, &mut env, &mut events) {
            return BalanceReport::Unknown(format!("module {}: {}", m.name.name, reason));
        }
        traces.push((m.name.name.clone(), events));
    }

    let mut queues: HashMap<(String, String), VecDeque<(VarType, Pos)>> = HashMap::new();
    let mut traffic: Vec<ChannelTraffic> = Vec::new();
    let mut cursor = vec![0usize; traces.len()];
    let mut warnings = Vec::new();
    let mut progress = true;
    while progress {
        progress = false;
        for (i, (name, events)) in traces.iter().enumerate() {
            while let Some(ev) = events.get(cursor[i]) {
                match ev {
                    Event::Send { peer, tys, pos } => {
                        let q = queues.entry((name.clone(), peer.clone())).or_default();
                        q.extend(tys.iter().map(|t| (*t, *pos)));
                        match traffic.iter_mut().find(|t| t.from == *name && t.to == *peer) {
                            Some(t) => t.items += tys.len(),
                            None => traffic.push(ChannelTraffic {
                                from: name.clone(),
                                to: peer.clone(),
                                items: tys.len(),
                            }),
                        }
                    }
                    Event::Recv { peer, tys, pos } => {
                        let q = queues.entry((peer.clone(), name.clone())).or_default();
                        if q.len() < tys.len() {
                            break;
                        }
                        for want in tys {
                            let (got, _) = q.pop_front().expect("length checked");
                            if !type_equiv(&TypeSignature::of(got), &TypeSignature::of(*want)) {
                                warnings.push(Diagnostic::warning(
                                    Code::CommImbalance,
                                    *pos,
                                    format!(
                                        "module {name} receives {} from {peer}, which sends {}",
                                        want.as_str(),
                                        got.as_str()
                                    ),
                                ));
                            }
                        }
                    }
                }
                cursor[i] += 1;
                progress = true;
            }
        }
    }
    for (i, (name, events)) in traces.iter().enumerate() {
        if let Some(Event::Recv { peer, pos, .. }) = events.get(cursor[i]) {
            warnings.push(Diagnostic::warning(
                Code::CommImbalance,
                *pos,
                format!("module {name} waits forever for data from {peer}"),
            ));
        }
    }
    let mut leftovers: Vec<_> = queues.iter().filter(|(_, q)| !q.is_empty()).collect();
    leftovers.sort_by(|a, b| a.0.cmp(b.0));
    for ((from, to), q) in leftovers {
        warnings.push(Diagnostic::warning(
            Code::CommImbalance,
            q[0].1,
            format!("{} item(s) sent from {from} to {to} are never received", q.len()),
        ));
    }
    if warnings.is_empty() {
        BalanceReport::Balanced(traffic)
    } else {
        BalanceReport::Imbalanced(warnings)
    }
}
