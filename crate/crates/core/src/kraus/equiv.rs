use super::compose::{compose, Event, Halt};
use super::dense;
use super::extract::extract_semantics;
use super::set::{max_abs_diff, CMatrix};
use super::trace::*;
use crate::types::CheckedProgram;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::str::FromStr;

/// Default bound on the linked heap for channel comparison.
pub const DEFAULT_MAX_QBITS: usize = 6;
/// Entrywise tolerance of channel comparison.
pub const CHANNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivMode {
    /// Identical traces.
    Exact,
    /// Identical up to swapping adjacent independent elements.
    Reorder,
    /// Same channel on every branch, compared through Choi blocks.
    Channel,
}

impl FromStr for EquivMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(EquivMode::Exact),
            "reorder" => Ok(EquivMode::Reorder),
            "channel" => Ok(EquivMode::Channel),
            _ => Err(format!("unknown mode `{s}`, expected exact, reorder or channel")),
        }
    }
}

/// Decides denotational equivalence of two checked programs.
pub fn programs_equiv(p1: &CheckedProgram, p2: &CheckedProgram, mode: EquivMode, max_qbits: usize) -> Result<bool, SemanticsError> {
    let s1 = extract_semantics(p1)?;
    let s2 = extract_semantics(p2)?;
    Ok(match mode {
        EquivMode::Exact => s1.to_string() == s2.to_string(),
        EquivMode::Reorder => canonical(&s1).to_string() == canonical(&s2).to_string(),
        EquivMode::Channel => channel_equal(&s1, &s2, max_qbits)?,
    })
}

/// Reorders every element list into the lexicographically least order that
/// respects the dependencies between its elements.
pub fn canonical(sem: &Semantics) -> Semantics {
    Semantics {
        modules: sem
            .modules
            .iter()
            .map(|m| ModuleTrace {
                name: m.name.clone(),
                elements: canonical_list(&m.elements),
            })
            .collect(),
    }
}

struct Footprint {
    qbits: Vec<usize>,
    uses: Vec<u32>,
    defines: Vec<u32>,
    ordered: bool,
}

fn footprint(e: &Element) -> Footprint {
    let mut f = Footprint {
        qbits: Vec::new(),
        uses: Vec::new(),
        defines: Vec::new(),
        ordered: false,
    };
    match e {
        Element::Create { targets, .. } | Element::Discard { targets } => f.qbits = targets.clone(),
        Element::Gate { gate, targets } => {
            f.qbits = targets.clone();
            if let GateOp::Phase(s) = gate {
                s.labels(&mut f.uses);
            }
        }
        Element::Print { text } => {
            f.ordered = true;
            if let Text::Value(s) = text {
                s.labels(&mut f.uses);
            }
        }
        Element::Dump { prefix, targets } => {
            f.ordered = true;
            f.qbits = targets.clone();
            if let Some(Text::Value(s)) = prefix {
                s.labels(&mut f.uses);
            }
        }
        Element::Send { items, .. } => {
            f.ordered = true;
            for i in items {
                match i {
                    Item::Quantum { targets, .. } => f.qbits.extend(targets),
                    Item::Classical { value, .. } => value.labels(&mut f.uses),
                }
            }
        }
        Element::Receive { slots, .. } => {
            f.ordered = true;
            for s in slots {
                match s {
                    Slot::Quantum { targets, .. } => f.qbits.extend(targets),
                    Slot::Classical { label, .. } => f.defines.push(*label),
                }
            }
        }
        Element::Branch(_) | Element::Abort { .. } => f.ordered = true,
    }
    f
}

fn depends(a: &Footprint, b: &Footprint) -> bool {
    (a.ordered && b.ordered)
        || a.qbits.iter().any(|q| b.qbits.contains(q))
        || a.defines.iter().any(|l| b.uses.contains(l))
        || b.defines.iter().any(|l| a.uses.contains(l))
}

fn canonical_list(list: &[Element]) -> Vec<Element> {
    let feet: Vec<Footprint> = list.iter().map(footprint).collect();
    let keys: Vec<String> = list.iter().map(|e| e.head()).collect();
    let n = list.len();
    let mut placed = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = (0..n)
            .filter(|&j| !placed[j] && (0..j).all(|i| placed[i] || !depends(&feet[i], &feet[j])))
            .min_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)))
            .expect("the dependency order is acyclic");
        placed[pick] = true;
        out.push(match &list[pick] {
            Element::Branch(b) => Element::Branch(BranchSum {
                id: b.id,
                kind: b.kind.clone(),
                arms: b
                    .arms
                    .iter()
                    .map(|a| Arm {
                        outcome: a.outcome,
                        body: canonical_list(&a.body),
                    })
                    .collect(),
            }),
            e => e.clone(),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Obs {
    Print(String, String),
    Dump(String, Option<String>, Vec<Complex64>),
    Halt(Halt),
}

type PathKey = Vec<(String, u64)>;

fn signature(events: &[Event], rho: CMatrix, key: PathKey, obs: Vec<Obs>, out: &mut BTreeMap<PathKey, (Vec<Obs>, CMatrix)>) -> Result<(), SemanticsError> {
    let mut rho = rho;
    let mut obs = obs;
    for e in events {
        match e {
            Event::Create { targets, init } => rho = dense::reset(&rho, targets, *init),
            Event::Gate { gate, targets } => {
                let Some(Ok(u)) = gate.matrix() else {
                    return Err(SemanticsError::too_large(format!("gate {} cannot be resolved", gate.label())));
                };
                if let GateOp::FT(_) = gate {
                    for t in targets {
                        rho = dense::conjugate(&rho, &u, &[*t]);
                    }
                } else {
                    rho = dense::conjugate(&rho, &u, targets);
                }
            }
            Event::Discard { .. } => {}
            Event::Print { module, line } => obs.push(Obs::Print(module.clone(), line.clone())),
            Event::Dump { module, prefix, targets } => {
                obs.push(Obs::Dump(module.clone(), prefix.clone(), dense::marginal(&rho, targets)))
            }
            Event::Branch { module, targets, arms, .. } => {
                for (v, body) in arms {
                    let mut k = key.clone();
                    k.push((module.clone(), *v));
                    signature(body, dense::project(&rho, targets, *v), k, obs.clone(), out)?;
                }
                return Ok(());
            }
            Event::Halt(h) => {
                obs.push(Obs::Halt(h.clone()));
                break;
            }
        }
    }
    out.insert(key, (obs, rho));
    Ok(())
}

fn negligible(m: &CMatrix) -> bool {
    m.iter().all(|z| z.norm() <= CHANNEL_TOL)
}

fn obs_equal(a: &[Obs], b: &[Obs]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Obs::Dump(m1, p1, v1), Obs::Dump(m2, p2, v2)) => {
                m1 == m2 && p1 == p2 && v1.len() == v2.len() && v1.iter().zip(v2).all(|(s, t)| (s - t).norm() <= CHANNEL_TOL)
            }
            _ => x == y,
        })
}

fn channel_equal(s1: &Semantics, s2: &Semantics, max_qbits: usize) -> Result<bool, SemanticsError> {
    let c1 = compose(s1, max_qbits)?;
    let c2 = compose(s2, max_qbits)?;
    if c1.modules != c2.modules || c1.qbits != c2.qbits {
        return Ok(false);
    }
    let d = 1usize << c1.qbits;
    for i in 0..d {
        for j in 0..d {
            let mut input = CMatrix::zeros(d, d);
            input[(i, j)] = Complex64::new(1.0, 0.0);
            let mut a = BTreeMap::new();
            let mut b = BTreeMap::new();
            signature(&c1.events, input.clone(), Vec::new(), Vec::new(), &mut a)?;
            signature(&c2.events, input, Vec::new(), Vec::new(), &mut b)?;
            for (k, (oa, ra)) in &a {
                match b.get(k) {
                    Some((ob, rb)) => {
                        if negligible(ra) && negligible(rb) {
                            continue;
                        }
                        if !obs_equal(oa, ob) || max_abs_diff(ra, rb) > CHANNEL_TOL {
                            return Ok(false);
                        }
                    }
                    None if negligible(ra) => {}
                    None => return Ok(false),
                }
            }
            if b.iter().any(|(k, (_, rb))| !a.contains_key(k) && !negligible(rb)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check_source;

    fn eq(a: &str, b: &str, mode: EquivMode) -> bool {
        programs_equiv(&check_source(a).unwrap(), &check_source(b).unwrap(), mode, DEFAULT_MAX_QBITS).unwrap()
    }

    const AB: &str = "new qbit a := 0; new qbit b := 0; a *= H; b *= H;";
    const BA: &str = "new qbit a := 0; new qbit b := 0; b *= H; a *= H;";

    #[test]
    fn self_equivalence() {
        let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../programs/teleport.qpl")).unwrap();
        for m in [EquivMode::Exact, EquivMode::Reorder, EquivMode::Channel] {
            assert!(eq(&src, &src, m), "{m:?}");
        }
    }

    #[test]
    fn disjoint_gates_reorder() {
        assert!(!eq(AB, BA, EquivMode::Exact));
        assert!(eq(AB, BA, EquivMode::Reorder));
        assert!(eq(AB, BA, EquivMode::Channel));
        let same_target = "new qbit a := 0; a *= H; a *= Not;";
        let swapped = "new qbit a := 0; a *= Not; a *= H;";
        assert!(!eq(same_target, swapped, EquivMode::Reorder));
        assert!(!eq(same_target, swapped, EquivMode::Channel));
    }

    #[test]
    fn double_hadamard_is_identity() {
        let hh = "new qbit q := 0; q *= H; q *= H;";
        let skip = "new qbit q := 0; skip;";
        assert!(!eq(hh, skip, EquivMode::Exact));
        assert!(!eq(hh, skip, EquivMode::Reorder));
        assert!(eq(hh, skip, EquivMode::Channel));
        assert!(!eq("new qbit q := 0; q *= H;", skip, EquivMode::Channel));
    }

    #[test]
    fn prints_do_not_pass_each_other() {
        let a = "print 1; print 2;";
        let b = "print 2; print 1;";
        assert!(!eq(a, b, EquivMode::Reorder));
        assert!(!eq(a, b, EquivMode::Channel));
    }

    #[test]
    fn impossible_branches_are_ignored() {
        let a = "new qbit q := 0; measure q then { print \"one\"; } else { print \"zero\"; };";
        let b = "new qbit q := 0; measure q then { print \"uno\"; } else { print \"zero\"; };";
        assert!(eq(a, b, EquivMode::Channel));
        assert!(!eq(a, b, EquivMode::Exact));
    }

    #[test]
    fn too_many_qbits() {
        let src = "new qint x := 0;";
        let p = check_source(src).unwrap();
        let e = programs_equiv(&p, &p, EquivMode::Channel, DEFAULT_MAX_QBITS).unwrap_err();
        assert_eq!(e.code, "E_TOO_LARGE");
    }
}
