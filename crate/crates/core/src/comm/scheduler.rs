use super::Channels;
use crate::interp::{Gateway, Machine, OutputSink, RuntimeError, Status};
use crate::qcore::{QuantumState, DEFAULT_HEAP, DEFAULT_SIM_CAP};
use crate::syntax::Program;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Module turn order within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interleave {
    /// Declaration order every round.
    #[default]
    RoundRobin,
    /// A seeded shuffle every round.
    Random,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub heap: usize,
    pub sim_cap: usize,
    pub interleave: Interleave,
    pub recursion_limit: usize,
    /// Abort with `E_STEP_LIMIT` after this many statements.
    pub max_steps: Option<u64>,
    /// Assert unique ownership of heap indices after every step.
    pub check_ownership: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            heap: DEFAULT_HEAP,
            sim_cap: DEFAULT_SIM_CAP,
            interleave: Interleave::RoundRobin,
            recursion_limit: 4096,
            max_steps: None,
            check_ownership: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub steps: u64,
    pub rounds: u64,
}

/// Name used for the single machine of a plain statement program.
pub const MAIN: &str = "main";

/// Runs a type-checked program to completion. Output goes to `sink` as it is
/// produced.
pub fn run_program(program: &Program, config: &RunConfig, sink: &mut dyn OutputSink) -> Result<RunStats, RuntimeError> {
    let mut machines: Vec<Machine> = match program {
        Program::Statements(stmts) => vec![Machine::new(MAIN, stmts, config.recursion_limit)],
        Program::Modules(ms) => ms
            .iter()
            .map(|m| Machine::new(&m.name.name, &m.body, config.recursion_limit))
            .collect(),
    };
    let mut qstate = QuantumState::new(config.heap, config.sim_cap);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5DEE_CE66_D1CE_CAFE);
    let mut channels = Channels::default();
    let mut stats = RunStats::default();
    let mut order: Vec<usize> = (0..machines.len()).collect();

    loop {
        if machines.iter().all(|m| m.is_finished()) {
            return Ok(stats);
        }
        stats.rounds += 1;
        if config.interleave == Interleave::Random {
            order.shuffle(&mut order_rng);
        }
        let mut progressed = false;
        let mut blocked: Vec<(usize, String)> = Vec::new();
        for &i in &order {
            if machines[i].is_finished() {
                continue;
            }
            let mut gw = Gateway {
                qstate: &mut qstate,
                rng: &mut rng,
                channels: &mut channels,
                sink: &mut *sink,
            };
            match machines[i].step(&mut gw) {
                Status::Running | Status::Finished => progressed = true,
                Status::Blocked { source } => blocked.push((i, source)),
                Status::Failed(e) => return Err(e),
            }
            stats.steps += 1;
            if let Some(limit) = config.max_steps {
                if stats.steps >= limit {
                    return Err(RuntimeError::new(
                        "E_STEP_LIMIT",
                        format!("stopped after {limit} steps"),
                    ));
                }
            }
            if config.check_ownership {
                check_ownership(&machines, &channels, &qstate)?;
            }
        }
        if !progressed {
            blocked.sort();
            let waits: Vec<String> = blocked
                .iter()
                .map(|(i, src)| format!("module {} waits for data from {}", machines[*i].name(), src))
                .collect();
            let first = machines[blocked[0].0].name().to_string();
            return Err(RuntimeError::new("E_DEADLOCK", format!("deadlock: {}", waits.join("; "))).in_module(&first));
        }
    }
}

/// Every live heap index is owned by exactly one module frame or channel.
fn check_ownership(machines: &[Machine], channels: &Channels, qstate: &QuantumState) -> Result<(), RuntimeError> {
    let mut seen = HashSet::new();
    let owners = machines
        .iter()
        .flat_map(|m| m.owned_indices())
        .chain(channels.in_flight());
    for ix in owners {
        if !seen.insert(ix) {
            return Err(RuntimeError::new(
                "E_OWNERSHIP",
                format!("heap index {ix} has two owners"),
            ));
        }
    }
    let live: HashSet<usize> = qstate.live_indices().iter().copied().collect();
    if live != seen {
        return Err(RuntimeError::new(
            "E_OWNERSHIP",
            "owned heap indices differ from the allocated ones",
        ));
    }
    Ok(())
}
