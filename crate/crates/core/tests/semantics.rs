mod common;

use common::gen::Gen;
use common::{load, rng};
use cqpl::kraus::{compose, Distribution, Halt, DEFAULT_RESOLVE_QBITS};
use cqpl::{check_source, extract_semantics, run_program, RunConfig, Transcript};

fn resolve(src: &str) -> Option<(Vec<String>, Distribution)> {
    let checked = check_source(src).ok()?;
    let sem = match extract_semantics(&checked) {
        Ok(s) => s,
        Err(e) if e.code == "E_TOO_LARGE" || e.code == "E_UNBOUNDED" => return None,
        Err(e) => panic!("{e}\n{src}"),
    };
    let composite = compose(&sem, DEFAULT_RESOLVE_QBITS).ok()?;
    let dist = composite.distribution(DEFAULT_RESOLVE_QBITS).ok()?;
    Some((composite.modules.clone(), dist))
}

/// Checks that every sampled run of `src` is one of the resolved outcomes.
fn sampled_runs_are_resolved(src: &str, seeds: u64) -> bool {
    let Some((modules, dist)) = resolve(src) else { return false };
    let total: f64 = dist.iter().map(|d| d.2).sum();
    assert!((total - 1.0).abs() < 1e-9, "probabilities sum to {total}\n{src}");
    assert!(dist.iter().all(|d| d.2 > 0.0));
    let checked = check_source(src).unwrap();
    for seed in 0..seeds {
        let cfg = RunConfig {
            seed,
            max_steps: Some(50_000),
            ..RunConfig::default()
        };
        let mut t = Transcript::default();
        let result = run_program(checked.program(), &cfg, &mut t);
        if let Err(e) = &result {
            if ["E_STEP_LIMIT", "E_SIM_CAP", "E_HEAP_EXHAUSTED"].contains(&e.code) {
                return false;
            }
        }
        let observed: Vec<Vec<String>> = modules
            .iter()
            .map(|m| t.of(m).iter().map(|s| s.to_string()).collect())
            .collect();
        let code = result.err().map(|e| e.code.to_string());
        let found = dist.iter().any(|(lines, halt, _)| {
            let halt_code = halt.as_ref().map(|h| match h {
                Halt::Deadlock { .. } => "E_DEADLOCK".to_string(),
                Halt::Abort { code, .. } => code.clone(),
            });
            *lines == observed && halt_code == code
        });
        assert!(found, "seed {seed}: {observed:?} {code:?} not among {dist:?}\n{src}");
    }
    true
}

#[test]
fn corpus_runs_match_resolution() {
    for name in ["cointoss.qpl", "epr.qpl", "dump_ft.qpl", "teleport.qpl", "control_flow.qpl", "procs.qpl", "deadlock.qpl"] {
        assert!(sampled_runs_are_resolved(&load(name), 12), "{name}");
    }
}

#[test]
fn random_programs_match_resolution() {
    let mut rng = rng(31);
    let mut compared = 0;
    for _ in 0..400 {
        let src = Gen::new(&mut rng, 0.0).program();
        if sampled_runs_are_resolved(&src, 4) {
            compared += 1;
        }
    }
    assert!(compared > 200, "only {compared} programs compared");
}

#[test]
fn coin_toss_is_fair() {
    let (_, dist) = resolve(&load("cointoss.qpl")).unwrap();
    assert_eq!(dist.len(), 2);
    for d in dist {
        assert!((d.2 - 0.5).abs() < 1e-12);
    }
}
