use super::dense;
use super::extract::Budget;
use super::set::CMatrix;
use super::trace::*;
use crate::interp::value::Value;
use crate::qcore::{format_spectrum, SPECTRUM_CUTOFF};
use crate::types::TypeSignature;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write};

/// Largest program resolved against a dense density matrix by default.
pub const DEFAULT_RESOLVE_QBITS: usize = 10;

/// Why a composed path stops early.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Halt {
    /// Every unfinished module waits; pairs of (waiting module, source).
    Deadlock { waiting: Vec<(String, String)> },
    Abort { module: String, code: String, message: String },
}

impl fmt::Display for Halt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Halt::Deadlock { waiting } => {
                let (m, s) = &waiting[0];
                write!(f, "E_DEADLOCK: module {m} waits for data from {s}")
            }
            Halt::Abort { module, code, message } => write!(f, "{code} in {module}: {message}"),
        }
    }
}

/// An element of the linked program: heap positions are global and all
/// communication has been matched.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Event {
    Create { targets: Vec<usize>, init: u64 },
    Gate { gate: GateOp, targets: Vec<usize> },
    Discard { targets: Vec<usize> },
    Print { module: String, line: String },
    Dump { module: String, prefix: Option<String>, targets: Vec<usize> },
    Branch { id: u32, module: String, targets: Vec<usize>, arms: Vec<(u64, Vec<Event>)> },
    Halt(Halt),
}

/// The modules of a program linked by a round-robin schedule that runs one
/// element per module per turn.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Composite {
    pub modules: Vec<String>,
    /// Number of global heap positions.
    pub qbits: usize,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone)]
enum Msg {
    Quantum { sig: TypeSignature, targets: Vec<usize> },
    Classical { sig: TypeSignature, value: Value },
}

#[derive(Clone)]
struct Linker<'s> {
    names: Vec<&'s str>,
    cursors: Vec<&'s [Element]>,
    labels: Vec<HashMap<u32, Value>>,
    positions: Vec<HashMap<usize, usize>>,
    queues: HashMap<(usize, usize), VecDeque<Msg>>,
    next_global: usize,
    turn: usize,
    progressed: bool,
    blocked: Vec<(String, String)>,
}

enum Turn {
    Progress,
    Blocked(String),
    Stop,
}

impl<'s> Linker<'s> {
    fn global(&mut self, m: usize, local: &[usize]) -> Vec<usize> {
        local
            .iter()
            .map(|l| {
                let next = &mut self.next_global;
                *self.positions[m].entry(*l).or_insert_with(|| {
                    *next += 1;
                    *next - 1
                })
            })
            .collect()
    }

    fn value(&self, m: usize, s: &Sym) -> Result<Value, Halt> {
        let labels = &self.labels[m];
        match s.eval(&|l| labels.get(&l).copied()) {
            Ok(Some(v)) => Ok(v),
            Ok(None) => Err(self.abort(m, "E_UNBOUND", format!("{s} has no value"))),
            Err(e) => Err(self.abort(m, e.code(), e.to_string())),
        }
    }

    fn abort(&self, m: usize, code: &str, message: String) -> Halt {
        Halt::Abort {
            module: self.names[m].to_string(),
            code: code.to_string(),
            message,
        }
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }

    fn run(mut self, budget: &mut Budget, max_positions: usize) -> Result<Vec<Event>, SemanticsError> {
        let mut out = Vec::new();
        let n = self.names.len();
        loop {
            if self.cursors.iter().all(|c| c.is_empty()) {
                return Ok(out);
            }
            if self.turn == n {
                if !self.progressed {
                    out.push(Event::Halt(Halt::Deadlock {
                        waiting: std::mem::take(&mut self.blocked),
                    }));
                    return Ok(out);
                }
                self.turn = 0;
                self.progressed = false;
                self.blocked.clear();
            }
            let m = self.turn;
            self.turn += 1;
            if self.cursors[m].is_empty() {
                continue;
            }
            match self.step(m, &mut out, budget, max_positions)? {
                Turn::Progress => self.progressed = true,
                Turn::Blocked(source) => self.blocked.push((self.names[m].to_string(), source)),
                Turn::Stop => return Ok(out),
            }
            if self.next_global > max_positions {
                return Err(SemanticsError::too_large(format!(
                    "more than {max_positions} qbits in the linked program"
                )));
            }
        }
    }

    fn step(&mut self, m: usize, out: &mut Vec<Event>, budget: &mut Budget, max_positions: usize) -> Result<Turn, SemanticsError> {
        let (el, rest) = self.cursors[m].split_first().expect("cursor is not empty");
        let module = self.names[m].to_string();
        macro_rules! halt {
            ($h:expr) => {{
                out.push(Event::Halt($h));
                return Ok(Turn::Stop);
            }};
        }
        match el {
            Element::Create { targets, init } => {
                let targets = self.global(m, targets);
                out.push(Event::Create { targets, init: *init });
            }
            Element::Gate { gate, targets } => {
                let targets = self.global(m, targets);
                let gate = match gate {
                    GateOp::Phase(s) => match self.value(m, s) {
                        Ok(v) => GateOp::Phase(Sym::Const(Value::Float(v.as_f64()))),
                        Err(h) => halt!(h),
                    },
                    g => g.clone(),
                };
                out.push(Event::Gate { gate, targets });
            }
            Element::Discard { targets } => {
                let targets = self.global(m, targets);
                out.push(Event::Discard { targets });
            }
            Element::Print { text } => {
                let line = match text {
                    Text::Literal(s) => s.clone(),
                    Text::Value(s) => match self.value(m, s) {
                        Ok(v) => v.to_string(),
                        Err(h) => halt!(h),
                    },
                };
                out.push(Event::Print { module, line });
            }
            Element::Dump { prefix, targets } => {
                let prefix = match prefix {
                    None => None,
                    Some(Text::Literal(s)) => Some(s.clone()),
                    Some(Text::Value(s)) => match self.value(m, s) {
                        Ok(v) => Some(v.to_string()),
                        Err(h) => halt!(h),
                    },
                };
                let targets = self.global(m, targets);
                out.push(Event::Dump { module, prefix, targets });
            }
            Element::Send { to, items } => {
                let Some(dest) = self.index(to) else {
                    halt!(self.abort(m, "E_UNKNOWN_MODULE", format!("no module `{to}`")))
                };
                let mut msgs = Vec::new();
                for item in items {
                    msgs.push(match item {
                        Item::Quantum { targets, .. } => Msg::Quantum {
                            sig: item.signature(),
                            targets: self.global(m, targets),
                        },
                        Item::Classical { value, .. } => match self.value(m, value) {
                            Ok(v) => Msg::Classical {
                                sig: item.signature(),
                                value: v,
                            },
                            Err(h) => halt!(h),
                        },
                    });
                }
                self.queues.entry((m, dest)).or_default().extend(msgs);
            }
            Element::Receive { from, slots } => {
                let Some(src) = self.index(from) else {
                    halt!(self.abort(m, "E_UNKNOWN_MODULE", format!("no module `{from}`")))
                };
                let q = self.queues.entry((src, m)).or_default();
                if q.len() < slots.len() {
                    return Ok(Turn::Blocked(from.clone()));
                }
                let msgs: Vec<Msg> = q.drain(..slots.len()).collect();
                for (slot, msg) in slots.iter().zip(msgs) {
                    let got = match &msg {
                        Msg::Quantum { sig, .. } | Msg::Classical { sig, .. } => *sig,
                    };
                    if got != slot.signature() {
                        halt!(self.abort(
                            m,
                            "E_RECV_TYPE",
                            format!("expected {} from {from} but {got} arrived", slot.signature())
                        ));
                    }
                    match (slot, msg) {
                        (Slot::Quantum { targets, .. }, Msg::Quantum { targets: global, .. }) => {
                            for (l, g) in targets.iter().zip(global) {
                                self.positions[m].insert(*l, g);
                            }
                        }
                        (Slot::Classical { ty, label }, Msg::Classical { value, .. }) => {
                            self.labels[m].insert(*label, value.coerce(*ty));
                        }
                        _ => unreachable!("signatures agree"),
                    }
                }
            }
            Element::Abort { code, message } => halt!(self.abort(m, code, message.clone())),
            Element::Branch(b) => match &b.kind {
                BranchKind::Guard { cond } => {
                    let v = match self.value(m, cond) {
                        Ok(v) => v.truthy() as u64,
                        Err(h) => halt!(h),
                    };
                    let arm = b.arms.iter().find(|a| a.outcome == v).expect("guards have both arms");
                    self.cursors[m] = &arm.body;
                    return Ok(Turn::Progress);
                }
                BranchKind::Measure { targets } => {
                    let targets = self.global(m, targets);
                    let id = budget.branch(b.arms.len())?;
                    let mut arms = Vec::with_capacity(b.arms.len());
                    for arm in &b.arms {
                        let mut l = self.clone();
                        l.cursors[m] = &arm.body;
                        l.progressed = true;
                        arms.push((arm.outcome, l.run(budget, max_positions)?));
                    }
                    out.push(Event::Branch {
                        id,
                        module,
                        targets,
                        arms,
                    });
                    return Ok(Turn::Stop);
                }
            },
        }
        self.cursors[m] = rest;
        Ok(Turn::Progress)
    }
}

fn count_positions(events: &[Event], max: &mut usize) {
    for e in events {
        let t = match e {
            Event::Create { targets, .. }
            | Event::Gate { targets, .. }
            | Event::Discard { targets }
            | Event::Dump { targets, .. } => targets,
            Event::Branch { targets, arms, .. } => {
                for (_, body) in arms {
                    count_positions(body, max);
                }
                targets
            }
            Event::Print { .. } | Event::Halt(_) => continue,
        };
        for p in t {
            *max = (*max).max(p + 1);
        }
    }
}

/// Links the module traces. Positions are numbered globally in order of
/// first use; `max_positions` bounds the linked heap.
pub fn compose(sem: &Semantics, max_positions: usize) -> Result<Composite, SemanticsError> {
    let n = sem.modules.len();
    let linker = Linker {
        names: sem.modules.iter().map(|m| m.name.as_str()).collect(),
        cursors: sem.modules.iter().map(|m| m.elements.as_slice()).collect(),
        labels: vec![HashMap::new(); n],
        positions: vec![HashMap::new(); n],
        queues: HashMap::new(),
        next_global: 0,
        turn: 0,
        progressed: false,
        blocked: Vec::new(),
    };
    let events = linker.run(&mut Budget::new(), max_positions)?;
    let mut qbits = 0;
    count_positions(&events, &mut qbits);
    Ok(Composite {
        modules: sem.modules.iter().map(|m| m.name.clone()).collect(),
        qbits,
        events,
    })
}

/// Distinct per-module outputs with their halt reason and probability.
pub type Distribution = Vec<(Vec<Vec<String>>, Option<Halt>, f64)>;

/// One fully resolved path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub probability: f64,
    /// Output lines as (module, text), in schedule order.
    pub lines: Vec<(String, String)>,
    pub halt: Option<Halt>,
}

impl Outcome {
    /// Output grouped per module in module order, which does not depend on
    /// the interleaving.
    pub fn per_module(&self, modules: &[String]) -> Vec<Vec<String>> {
        modules
            .iter()
            .map(|m| self.lines.iter().filter(|(n, _)| n == m).map(|(_, l)| l.clone()).collect())
            .collect()
    }
}

fn has_dump(events: &[Event]) -> bool {
    events.iter().any(|e| match e {
        Event::Dump { .. } => true,
        Event::Branch { arms, .. } => arms.iter().any(|(_, b)| has_dump(b)),
        _ => false,
    })
}

struct Resolver {
    out: Vec<Outcome>,
}

impl Resolver {
    fn walk(&mut self, events: &[Event], rho: CMatrix, p: f64, lines: Vec<(String, String)>) -> Result<(), SemanticsError> {
        let mut rho = rho;
        let mut lines = lines;
        for (k, e) in events.iter().enumerate() {
            match e {
                Event::Create { targets, init } => rho = dense::reset(&rho, targets, *init),
                Event::Gate { gate, targets } => {
                    let u = match gate.matrix() {
                        Some(Ok(u)) => u,
                        _ => {
                            return Err(SemanticsError::too_large(format!(
                                "gate {} cannot be resolved",
                                gate.label()
                            )))
                        }
                    };
                    if let GateOp::FT(_) = gate {
                        for t in targets {
                            rho = dense::conjugate(&rho, &u, &[*t]);
                        }
                    } else {
                        rho = dense::conjugate(&rho, &u, targets);
                    }
                }
                Event::Discard { targets } => {
                    let rest = &events[k + 1..];
                    if !has_dump(rest) {
                        continue;
                    }
                    return self.fork(targets, rest, &rho, p, &lines);
                }
                Event::Print { module, line } => lines.push((module.clone(), line.clone())),
                Event::Dump { module, prefix, targets } => {
                    let probs = dense::marginal(&rho, targets);
                    let entries: Vec<(u64, f64)> = probs
                        .iter()
                        .enumerate()
                        .filter(|(_, z)| z.re >= SPECTRUM_CUTOFF)
                        .map(|(v, z)| (v as u64, z.re))
                        .collect();
                    let spectrum = format_spectrum(&entries, targets.len());
                    let line = match prefix {
                        Some(pre) => format!("{pre} {spectrum}"),
                        None => spectrum,
                    };
                    lines.push((module.clone(), line));
                }
                Event::Branch { targets, arms, .. } => {
                    for (v, body) in arms {
                        let proj = dense::project(&rho, targets, *v);
                        let q = proj.trace().re;
                        if q < SPECTRUM_CUTOFF {
                            continue;
                        }
                        self.walk(body, proj / num_complex::Complex64::new(q, 0.0), p * q, lines.clone())?;
                    }
                    return Ok(());
                }
                Event::Halt(h) => {
                    self.out.push(Outcome {
                        probability: p,
                        lines,
                        halt: Some(h.clone()),
                    });
                    return Ok(());
                }
            }
        }
        self.out.push(Outcome {
            probability: p,
            lines,
            halt: None,
        });
        Ok(())
    }

    /// Measures `targets` one qbit at a time without recording the result.
    fn fork(&mut self, targets: &[usize], rest: &[Event], rho: &CMatrix, p: f64, lines: &[(String, String)]) -> Result<(), SemanticsError> {
        let Some((&t, more)) = targets.split_first() else {
            return self.walk(rest, rho.clone(), p, lines.to_vec());
        };
        for v in 0..2 {
            let proj = dense::project(rho, &[t], v);
            let q = proj.trace().re;
            if q < SPECTRUM_CUTOFF {
                continue;
            }
            self.fork(more, rest, &(proj / num_complex::Complex64::new(q, 0.0)), p * q, lines)?;
        }
        Ok(())
    }
}

impl Composite {
    /// Applies the linked program to `|0…0>` and lists every path with
    /// non-negligible probability together with its output.
    pub fn resolve(&self, max_qbits: usize) -> Result<Vec<Outcome>, SemanticsError> {
        if self.qbits > max_qbits {
            return Err(SemanticsError::too_large(format!(
                "{} qbits exceed the resolution limit of {max_qbits}",
                self.qbits
            )));
        }
        let mut r = Resolver { out: Vec::new() };
        r.walk(&self.events, dense::ground(self.qbits), 1.0, Vec::new())?;
        Ok(r.out)
    }

    /// Probability of each distinct per-module output, merged over paths.
    pub fn distribution(&self, max_qbits: usize) -> Result<Distribution, SemanticsError> {
        let mut out: Distribution = Vec::new();
        for o in self.resolve(max_qbits)? {
            let key = o.per_module(&self.modules);
            match out.iter_mut().find(|(k, h, _)| *k == key && *h == o.halt) {
                Some(entry) => entry.2 += o.probability,
                None => out.push((key, o.halt, o.probability)),
            }
        }
        Ok(out)
    }
}

fn write_events(events: &[Event], out: &mut String, depth: usize) {
    let pad = "  ".repeat(depth);
    for e in events {
        let _ = match e {
            Event::Create { targets, init } => {
                writeln!(out, "{pad}Create{} := {}", at(targets), crate::qcore::ket(*init, targets.len()))
            }
            Event::Gate { gate, targets } => writeln!(out, "{pad}Gate({}){}", gate.label(), at(targets)),
            Event::Discard { targets } => writeln!(out, "{pad}Discard{}", at(targets)),
            Event::Print { module, line } => writeln!(out, "{pad}Print[{module}] {line:?}"),
            Event::Dump { module, prefix, targets } => match prefix {
                Some(p) => writeln!(out, "{pad}Dump[{module}]{} {p:?}", at(targets)),
                None => writeln!(out, "{pad}Dump[{module}]{}", at(targets)),
            },
            Event::Branch { id, module, targets, arms } => {
                let _ = writeln!(out, "{pad}BranchSum#{id}[{module}] Measure{}", at(targets));
                for (v, body) in arms {
                    let _ = writeln!(out, "{pad}  [p#{id}.{v}]");
                    write_events(body, out, depth + 2);
                }
                Ok(())
            }
            Event::Halt(h) => writeln!(out, "{pad}Halt {h}"),
        };
    }
}

impl fmt::Display for Composite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "linked {} ({} qbits)", self.modules.join(", "), self.qbits);
        write_events(&self.events, &mut out, 1);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check_source;
    use crate::kraus::extract_semantics;

    fn load(name: &str) -> String {
        std::fs::read_to_string(format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
    }

    fn dist(src: &str) -> Distribution {
        let sem = extract_semantics(&check_source(src).unwrap()).unwrap();
        compose(&sem, 16).unwrap().distribution(DEFAULT_RESOLVE_QBITS).unwrap()
    }

    #[test]
    fn coin_toss_is_fair() {
        let d = dist(&load("cointoss.qpl"));
        assert_eq!(d.len(), 2);
        for (_, h, p) in d {
            assert!(h.is_none());
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn epr_outcomes_are_correlated() {
        let d = dist(&load("epr.qpl"));
        assert_eq!(d.len(), 2);
        for (k, _, p) in d {
            assert!((p - 0.5).abs() < 1e-12);
            assert_eq!(k[0][0].chars().rev().nth(1), k[1][0].chars().rev().nth(1));
        }
    }

    #[test]
    fn teleport_always_delivers() {
        let d = dist(&load("teleport.qpl"));
        let total: f64 = d.iter().map(|x| x.2).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (k, h, _) in d {
            assert!(h.is_none());
            assert_eq!(k[1].last().unwrap(), "Teleported state: 0.36 |0>, 0.64 |1>");
        }
    }

    #[test]
    fn deadlock_is_a_halting_leaf() {
        let d = dist(&load("deadlock.qpl"));
        assert_eq!(d.len(), 1);
        let Some(Halt::Deadlock { waiting }) = &d[0].1 else { panic!("{d:?}") };
        assert_eq!(waiting[0].0, "B");
    }

    #[test]
    fn dumps_after_release_see_collapse() {
        let src = "new qbit a := 0; new qbit b := 0; a *= H; a, b *= CNot; { new qbit c := 0; }; dump b;";
        let d = dist(src);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].0[0], ["0.5 |0>, 0.5 |1>"]);
        let src = "new qbit b := 0; { new qbit a := 0; a *= H; a, b *= CNot; }; dump b;";
        let mut d = dist(src);
        d.sort_by(|x, y| x.0.cmp(&y.0));
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].0[0], ["1 |0>"]);
        assert_eq!(d[1].0[0], ["1 |1>"]);
    }
}
