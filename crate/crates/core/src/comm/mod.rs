//! Multi-module execution: channels, the scheduler and deadlock detection.

mod channel;
mod scheduler;

pub use channel::{Channel, Channels, Message, Payload};
pub use scheduler::{run_program, Interleave, RunConfig, RunStats, MAIN};
