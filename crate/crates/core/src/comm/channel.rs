use crate::interp::Value;
use crate::syntax::VarType;
use std::collections::{HashMap, VecDeque};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Copied value.
    Classical(Value),
    /// Heap indices whose ownership travels with the message.
    Quantum(Vec<usize>),
}

/// One transmitted variable with its declared type.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub ty: VarType,
    pub payload: Payload,
}

/// FIFO between an ordered module pair. Unbounded; only receivers block.
#[derive(Debug, Clone, Default)]
pub struct Channel {
    pub origin: String,
    pub destination: String,
    queue: VecDeque<Message>,
}

impl Channel {
    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn enqueue(&mut self, m: Message) {
        self.queue.push_back(m);
    }

    pub fn dequeue(&mut self) -> Option<Message> {
        self.queue.pop_front()
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.queue.iter()
    }
}

/// All channels of a run, created on first use.
#[derive(Debug, Clone, Default)]
pub struct Channels {
    map: HashMap<(String, String), Channel>,
}

impl Channels {
    pub fn channel(&mut self, from: &str, to: &str) -> &mut Channel {
        self.map
            .entry((from.to_string(), to.to_string()))
            .or_insert_with(|| Channel {
                origin: from.to_string(),
                destination: to.to_string(),
                queue: VecDeque::new(),
            })
    }

    pub fn send(&mut self, from: &str, to: &str, items: Vec<Message>) {
        let ch = self.channel(from, to);
        for m in items {
            ch.enqueue(m);
        }
    }

    /// Whether `count` messages are waiting on `from -> to`.
    pub fn ready(&self, from: &str, to: &str, count: usize) -> bool {
        self.map
            .get(&(from.to_string(), to.to_string()))
            .is_some_and(|c| c.len() >= count)
    }

    pub fn receive(&mut self, from: &str, to: &str, count: usize) -> Vec<Message> {
        let ch = self.channel(from, to);
        (0..count).filter_map(|_| ch.dequeue()).collect()
    }

    /// Heap indices currently owned by channels.
    pub fn in_flight(&self) -> Vec<usize> {
        self.map
            .values()
            .flat_map(|c| c.messages())
            .filter_map(|m| match &m.payload {
                Payload::Quantum(ix) => Some(ix.iter().copied()),
                Payload::Classical(_) => None,
            })
            .flatten()
            .collect()
    }

    /// Channels that still hold messages, sorted by endpoint names.
    pub fn pending(&self) -> Vec<&Channel> {
        let mut out: Vec<&Channel> = self.map.values().filter(|c| !c.is_empty()).collect();
        out.sort_by(|a, b| (&a.origin, &a.destination).cmp(&(&b.origin, &b.destination)));
        out
    }
}
