//! The acceptance suite. Runs every criterion, prints one line per
//! criterion and exits non-zero if any fails.

mod common;

use common::*;
use cqpl::kraus::{
    apply_set, channel_equiv, commutator_expansion, compose, contract, inversions, verify_commutator_identity,
    KrausSet, Permutation, DEFAULT_RESOLVE_QBITS,
};
use cqpl::qcore::{builtin_gate, Builtin, QuantumState, UnitaryMatrix};
use cqpl::types::{comm_balance_check, BalanceReport};
use cqpl::{check_source, extract_semantics, run_program, CheckedProgram, RunConfig, Transcript};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use std::collections::BTreeMap;
use std::panic;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn checked(src: &str) -> CheckedProgram {
    check_source(src).unwrap_or_else(|ds| panic!("{ds:?}"))
}

fn run(p: &CheckedProgram, seed: u64) -> Result<Transcript, String> {
    let cfg = RunConfig {
        seed,
        ..RunConfig::default()
    };
    let mut t = Transcript::default();
    run_program(p.program(), &cfg, &mut t).map_err(|e| e.to_string())?;
    Ok(t)
}

fn coin_toss() -> Outcome {
    let p = checked(&load("cointoss.qpl"));
    let start = Instant::now();
    let runs = 20_000;
    let mut heads = 0;
    for seed in 0..runs {
        let t = run(&p, seed)?;
        let texts = t.texts();
        ensure(texts.len() == 1, || format!("seed {seed}: {texts:?}"))?;
        match texts[0] {
            "Tossed head" => heads += 1,
            "Tossed tail" => {}
            other => return Err(format!("seed {seed}: unexpected `{other}`")),
        }
    }
    let elapsed = start.elapsed();
    let f = heads as f64 / runs as f64;
    ensure((0.49..=0.51).contains(&f), || format!("head frequency {f}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("head frequency {f:.4} over {runs} runs in {:.2} s", elapsed.as_secs_f64()))
}

fn last_bit(line: &str) -> Option<char> {
    line.chars().rev().nth(1)
}

fn epr() -> Outcome {
    let p = checked(&load("epr.qpl"));
    let runs = 5000;
    let mut joint: BTreeMap<(char, char), usize> = BTreeMap::new();
    for seed in 0..runs {
        let t = run(&p, seed)?;
        let (a, b) = (t.of("Alice"), t.of("Bob"));
        ensure(a.len() == 1 && b.len() == 1, || format!("seed {seed}: {a:?} {b:?}"))?;
        let key = (last_bit(a[0]).unwrap(), last_bit(b[0]).unwrap());
        *joint.entry(key).or_default() += 1;
    }
    let disagree: usize = joint.iter().filter(|((a, b), _)| a != b).map(|(_, n)| n).sum();
    ensure(disagree == 0, || format!("{disagree} disagreeing runs"))?;
    for k in [('0', '0'), ('1', '1')] {
        let f = *joint.get(&k).unwrap_or(&0) as f64 / runs as f64;
        ensure((0.47..=0.53).contains(&f), || format!("joint {k:?} frequency {f}"))?;
    }
    Ok(format!("100% agreement over {runs} runs, joint frequencies {joint:?}"))
}

fn dump_golden() -> Outcome {
    let p = checked(&load("dump_ft.qpl"));
    let blocks = [
        ["State of b: 0.5 |0>, 0.5 |1>", "State of (a,b): 0.5 |00>, 0.5 |01>"],
        ["State of b: 0.5 |0>, 0.5 |1>", "State of (a,b): 0.5 |10>, 0.5 |11>"],
    ];
    let mut seen = [false; 2];
    for seed in 0..64 {
        let t = run(&p, seed)?;
        let out = t.texts();
        ensure(out.len() == 5, || format!("{out:?}"))?;
        ensure(out[0] == "State before FT: 1 |00>", || out[0].to_string())?;
        ensure(
            out[1] == "State after FT: 0.25 |00>, 0.25 |01>, 0.25 |10>, 0.25 |11>",
            || out[1].to_string(),
        )?;
        let block = blocks
            .iter()
            .position(|b| out[3] == b[0] && out[4] == b[1])
            .ok_or_else(|| format!("post-measurement dumps {:?}", &out[3..]))?;
        seen[block] = true;
    }
    ensure(seen == [true, true], || "only one block observed".into())?;
    Ok("golden lines exact; both post-measurement blocks observed".into())
}

fn number(x: f64) -> String {
    format!("{x:.17}")
}

fn matrix_literal(u: &Mat) -> String {
    let cells: Vec<String> = row_major(u)
        .iter()
        .map(|z| {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            format!("{} {sign} {}i", number(z.re), number(z.im.abs()))
        })
        .collect();
    format!("[[{}]]", cells.join(", "))
}

fn teleport() -> Outcome {
    let listing = load("teleport.qpl");
    let literal = "[[0.6, 0.8, 0.8, -0.6]]";
    let receive = "receive m1:bit, m2:bit from Alice;";
    ensure(listing.contains(literal) && listing.contains(receive), || "listing changed".into())?;
    let mut rng = rng(4);
    let mut checks = 0;
    for case in 0..25 {
        let u = random_unitary(&mut rng, 2);
        let want = [u[(0, 0)].norm_sqr(), u[(1, 0)].norm_sqr()];
        let src = listing
            .replace(literal, &matrix_literal(&u))
            .replace(receive, &format!("{receive}\n   print m1; print m2;"));
        let p = checked(&src);
        let mut branches = BTreeMap::new();
        let mut seed = 0;
        while branches.len() < 4 {
            ensure(seed < 400, || format!("case {case}: branches {branches:?}"))?;
            let t = run(&p, 1000 * case + seed)?;
            let bob = t.of("Bob");
            ensure(bob.len() == 3, || format!("case {case}: {bob:?}"))?;
            let spectrum = bob[2]
                .strip_prefix("Teleported state: ")
                .ok_or_else(|| format!("case {case}: {}", bob[2]))?;
            let got = parse_spectrum(spectrum, 1);
            for k in 0..2 {
                ensure((got[k] - want[k]).abs() <= 1e-9, || {
                    format!("case {case}: got {got:?}, want {want:?}")
                })?;
            }
            *branches.entry((bob[0].to_string(), bob[1].to_string())).or_insert(0) += 1;
            checks += 1;
            seed += 1;
        }
        let sem = extract_semantics(&p).map_err(|e| e.to_string())?;
        let linked = compose(&sem, DEFAULT_RESOLVE_QBITS).map_err(|e| e.to_string())?;
        let dist = linked.distribution(DEFAULT_RESOLVE_QBITS).map_err(|e| e.to_string())?;
        ensure(dist.len() == 4, || format!("case {case}: {} resolved branches", dist.len()))?;
        for (lines, halt, _) in dist {
            ensure(halt.is_none(), || format!("case {case}: {halt:?}"))?;
            let got = parse_spectrum(lines[1][2].strip_prefix("Teleported state: ").unwrap(), 1);
            for k in 0..2 {
                ensure((got[k] - want[k]).abs() <= 1e-9, || format!("case {case}: resolved {got:?}"))?;
            }
        }
    }
    Ok(format!("25 random U, all four (m1,m2) branches each, {checks} runs within 1e-9"))
}

fn negative_suite() -> Outcome {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs/negative");
    let mut codes = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let want = path.file_stem().unwrap().to_string_lossy().to_string();
        let src = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let got: Vec<String> = match check_source(&src) {
            Ok(_) => Vec::new(),
            Err(ds) => ds.iter().map(|d| d.code.to_string()).collect(),
        };
        ensure(got == [want.clone()], || format!("{}: {got:?}", path.display()))?;
        codes.push(want);
    }
    for required in [
        "E_DUP_TUPLE",
        "E_DIM_MISMATCH",
        "E_MEASURE_WIDTH",
        "E_USE_AFTER_SEND",
        "E_RECV_SHADOW",
        "E_NOT_UNITARY",
        "E_COND_NOT_BIT",
    ] {
        ensure(codes.iter().any(|c| c == required), || format!("no program for {required}"))?;
    }
    let listings = ["cointoss.qpl", "epr_literal.qpl", "dump_ft.qpl", "control_flow.qpl", "gates.qpl", "deadlock.qpl", "nonterm.qpl", "epr.qpl", "teleport.qpl"];
    for name in listings {
        check_source(&load(name)).map_err(|ds| format!("{name}: {ds:?}"))?;
    }
    Ok(format!("{} negative programs report their code; {} listings check", codes.len(), listings.len()))
}

fn deadlock() -> Outcome {
    let src = load("deadlock.qpl");
    let p = checked(&src);
    let start = Instant::now();
    let err = match run(&p, 0) {
        Ok(t) => return Err(format!("terminated normally: {:?}", t.texts())),
        Err(e) => e,
    };
    let elapsed = start.elapsed();
    ensure(err.contains("E_DEADLOCK") && err.contains("module B"), || err.clone())?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    let report = comm_balance_check(p.program());
    ensure(matches!(report, BalanceReport::Imbalanced(_)), || format!("{report:?}"))?;
    Ok(format!("`{err}` after {:.1} ms; flagged statically", elapsed.as_secs_f64() * 1e3))
}

fn sequential(a: &[Mat], b: &[Mat], rho: &Mat) -> Mat {
    let mut mid = Mat::zeros(a[0].nrows(), a[0].nrows());
    for x in a {
        mid += x * rho * x.adjoint();
    }
    let mut out = Mat::zeros(b[0].nrows(), b[0].nrows());
    for y in b {
        out += y * &mid * y.adjoint();
    }
    out
}

fn choi(ops: &[Mat]) -> Mat {
    let (dout, din) = ops[0].shape();
    let mut c = Mat::zeros(din * dout, din * dout);
    for a in ops {
        let v = Mat::from_fn(din * dout, 1, |r, _| a[(r % dout, r / dout)]);
        c += &v * v.adjoint();
    }
    c
}

fn max_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn kraus_algebra() -> Outcome {
    let mut rng = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (d0, d1, d2) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=4));
        let a: Vec<Mat> = (0..rng.random_range(1..=3)).map(|_| random_matrix(&mut rng, d1, d0)).collect();
        let b: Vec<Mat> = (0..rng.random_range(1..=3)).map(|_| random_matrix(&mut rng, d2, d1)).collect();
        let c = contract(&KrausSet::new(a.clone()).unwrap(), &KrausSet::new(b.clone()).unwrap()).map_err(|e| e.to_string())?;
        let rho = random_density(&mut rng, d0);
        let got = apply_set(&c, &rho).map_err(|e| e.to_string())?;
        worst = worst.max(max_diff(&got, &sequential(&a, &b, &rho)));
    }
    ensure(worst <= 1e-10, || format!("contract residual {worst:e}"))?;
    let (mut accepted, mut rejected) = (0, 0);
    for case in 0..100 {
        let d = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let e: Vec<Mat> = (0..k).map(|_| random_matrix(&mut rng, d, d)).collect();
        let f: Vec<Mat> = if case < 50 {
            let u = random_unitary(&mut rng, k);
            (0..k)
                .map(|i| (0..k).fold(Mat::zeros(d, d), |acc, j| acc + &e[j] * u[(i, j)]))
                .collect()
        } else {
            (0..k).map(|_| random_matrix(&mut rng, d, d)).collect()
        };
        let oracle_equal = max_diff(&choi(&e), &choi(&f)) <= 1e-9;
        ensure(oracle_equal == (case < 50), || format!("case {case}: generator produced the wrong kind"))?;
        let verdict = channel_equiv(&KrausSet::new(e).unwrap(), &KrausSet::new(f).unwrap(), 1e-9).map_err(|e| e.to_string())?;
        ensure(verdict == oracle_equal, || format!("case {case}: channel_equiv said {verdict}"))?;
        if verdict {
            accepted += 1
        } else {
            rejected += 1
        }
    }
    Ok(format!(
        "contract residual {worst:.1e} on 100 instances; {accepted} unitary-mixed pairs accepted, {rejected} distinct pairs rejected"
    ))
}

fn commutator() -> Outcome {
    let mut rng = rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let d = rng.random_range(1..=3);
        let mut images: Vec<usize> = (1..=n).collect();
        images.shuffle(&mut rng);
        let phi = Permutation::new(images).unwrap();
        let mats: Vec<_> = (0..n).map(|_| random_matrix(&mut rng, d, d)).collect();
        worst = worst.max(verify_commutator_identity(&mats, &phi).map_err(|e| e.to_string())?);
    }
    ensure(worst <= 1e-8, || format!("residual {worst:e}"))?;
    let inv = inversions(&Permutation::parse("52314").unwrap());
    ensure(inv == [(5, 2), (5, 3), (5, 1), (5, 4), (2, 1), (3, 1)], || format!("{inv:?}"))?;
    for (phi, want) in [
        ("1432", "1432 = 1234 + 1[4,3]2 + 13[4,2] + 1[3,2]4"),
        ("14532", "14532 = 12345 + 14[5,3]2 + 143[5,2] + 1[4,3]25 + 13[4,2]5 + 1[3,2]45"),
        ("52314", "52314 = 12345 + 231[5,4] + 2[5,3]14 + [5,2]314 + 23[5,1]4 + 2[3,1]45 + [2,1]345"),
    ] {
        let got = commutator_expansion(&Permutation::parse(phi).unwrap()).to_string();
        ensure(got == want, || got.clone())?;
    }
    Ok(format!("max residual {worst:.1e} on 200 instances; worked expansions exact"))
}

const GATE_ONLY: &str = "new qbit a := 0;
new qbit b := 0;
a *= [[0.6, 0.8, 0.8, -0.6]];
a, b *= CNot;
b *= H;
b *= Phase 0.7;
a *= H;
new bit x := 0;
new bit y := 0;
x := measure a;
y := measure b;
print x;
print y;
";

fn agreement() -> Outcome {
    let runs = 100_000u64;
    let mut notes = Vec::new();
    for (name, src) in [
        ("coin toss", load("cointoss.qpl")),
        ("EPR", load("epr.qpl")),
        ("gate-only", GATE_ONLY.to_string()),
    ] {
        let p = checked(&src);
        let sem = extract_semantics(&p).map_err(|e| e.to_string())?;
        let linked = compose(&sem, DEFAULT_RESOLVE_QBITS).map_err(|e| e.to_string())?;
        let predicted = linked.distribution(DEFAULT_RESOLVE_QBITS).map_err(|e| e.to_string())?;
        let mut counts: BTreeMap<Vec<Vec<String>>, u64> = BTreeMap::new();
        for seed in 0..runs {
            let t = run(&p, seed)?;
            let key: Vec<Vec<String>> = linked
                .modules
                .iter()
                .map(|m| t.of(m).iter().map(|s| s.to_string()).collect())
                .collect();
            *counts.entry(key).or_default() += 1;
        }
        for key in counts.keys() {
            ensure(predicted.iter().any(|(k, _, _)| k == key), || format!("{name}: unpredicted output {key:?}"))?;
        }
        let mut worst: f64 = 0.0;
        for (key, halt, p) in &predicted {
            ensure(halt.is_none(), || format!("{name}: {halt:?}"))?;
            let n = *counts.get(key).unwrap_or(&0) as f64;
            let f = n / runs as f64;
            let sigma = (p * (1.0 - p) / runs as f64).sqrt();
            let z = if sigma > 0.0 { (f - p).abs() / sigma } else { (f - p).abs() * f64::INFINITY };
            ensure(z.is_nan() || z <= 3.0, || format!("{name}: {key:?} predicted {p}, observed {f}"))?;
            worst = worst.max(if z.is_nan() { 0.0 } else { z });
        }
        notes.push(format!("{name} {} outcomes, max {worst:.2} sigma", predicted.len()));
    }
    Ok(notes.join("; "))
}

fn to_unitary(m: &Mat) -> UnitaryMatrix {
    UnitaryMatrix::from_entries(row_major(m)).unwrap()
}

fn to_mat(u: &UnitaryMatrix) -> Mat {
    Mat::from_row_slice(u.dim(), u.dim(), u.entries())
}

fn oracle() -> Outcome {
    let mut rng = rng(10);
    let mut worst: f64 = 0.0;
    let mut dumps = 0;
    let fixed = [Builtin::H, Builtin::Not, Builtin::CNot];
    for _ in 0..200 {
        let mut q = QuantumState::new(8, 8);
        let mut o = Oracle::new();
        let statements = rng.random_range(1..=12);
        for _ in 0..statements {
            let live = o.order.clone();
            let choice = if live.is_empty() { 0 } else { rng.random_range(0..6) };
            match choice {
                0 if live.len() < 4 => {
                    let one = rng.random_bool(0.5);
                    let ix = q.alloc(1, one as u64).map_err(|e| e.to_string())?;
                    o.alloc(ix[0], one);
                }
                1 | 0 => {
                    let mut targets = live.clone();
                    targets.shuffle(&mut rng);
                    let k = rng.random_range(1..=targets.len().min(2));
                    targets.truncate(k);
                    let u = match rng.random_range(0..3) {
                        0 if k == 1 => builtin_gate(*[Builtin::H, Builtin::Not].choose(&mut rng).unwrap()).unwrap(),
                        0 => builtin_gate(fixed[2]).unwrap(),
                        1 if k == 1 => builtin_gate(Builtin::Phase(rng.random_range(-3.0..3.0))).unwrap(),
                        _ => to_unitary(&random_unitary(&mut rng, 1 << k)),
                    };
                    q.apply(&u, &targets).map_err(|e| e.to_string())?;
                    o.apply(&to_mat(&u), &targets);
                }
                2 | 3 => {
                    let mut targets = live.clone();
                    targets.shuffle(&mut rng);
                    targets.truncate(rng.random_range(1..=live.len()));
                    let got = q.probabilities(&targets).map_err(|e| e.to_string())?;
                    let want = o.probabilities(&targets);
                    for (g, w) in got.iter().zip(&want) {
                        worst = worst.max((g - w).abs());
                    }
                    let spectrum = q.spectrum(&targets).map_err(|e| e.to_string())?;
                    for (v, p) in spectrum {
                        worst = worst.max((p - want[v as usize]).abs());
                    }
                    dumps += 1;
                }
                4 => {
                    let t = *live.choose(&mut rng).unwrap();
                    let before = o.probabilities(&[t]);
                    let outcome = q.measure_with(&[t], rng.random()).map_err(|e| e.to_string())?;
                    let p = o.project(&[t], outcome as usize);
                    worst = worst.max((p - before[outcome as usize]).abs());
                }
                _ => {
                    let t = *live.choose(&mut rng).unwrap();
                    let outcome = q.measure_with(&[t], rng.random()).map_err(|e| e.to_string())?;
                    o.project(&[t], outcome as usize);
                    q.release(&[t], &mut rng).map_err(|e| e.to_string())?;
                    o.remove(t);
                }
            }
        }
        if !o.order.is_empty() {
            let all = o.order.clone();
            let got = q.probabilities(&all).map_err(|e| e.to_string())?;
            for (g, w) in got.iter().zip(o.probabilities(&all)) {
                worst = worst.max((g - w).abs());
            }
            dumps += 1;
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("200 programs, {dumps} dump spectra, max deviation {worst:.1e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("coin toss frequency", coin_toss),
        ("EPR distribution", epr),
        ("dump golden lines", dump_golden),
        ("teleportation of random states", teleport),
        ("type-system negative suite", negative_suite),
        ("deadlock detection", deadlock),
        ("Kraus algebra", kraus_algebra),
        ("commutator theorem", commutator),
        ("semantics/operational agreement", agreement),
        ("state-vector vs density-matrix oracle", oracle),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.2} s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why} [{secs:.2} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
