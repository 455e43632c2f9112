// SPDX-License-Identifier: Apache-2.0

//! Two-Phase Acknowledge protocol state machines.
//!
//! Phase 1: the propagator sends `Learn(φ)` to every replica; a replica that
//! learns φ answers `Learnt`. Phase 2: once every replica has answered, the
//! propagator sends `AllKnow`; a replica answers `Ack`, and when every Ack
//! is in the propagator knows E²φ holds. Each replica costs exactly four
//! messages.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};
use core::fmt;

use crate::{Error, Result};

/// Opaque agent identifier. Lower ids win ties between simultaneous
/// deliveries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The propagated value φ: an ordered set of owner ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeValue {
    owners: Vec<AgentId>,
}

impl KnowledgeValue {
    pub fn new(owners: Vec<AgentId>) -> Result<Self> {
        let distinct: BTreeSet<_> = owners.iter().collect();
        if owners.is_empty() || distinct.len() != owners.len() {
            return Err(Error::InvalidValue);
        }
        Ok(Self { owners })
    }

    pub fn owners(&self) -> &[AgentId] {
        &self.owners
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    Learn,
    Learnt,
    AllKnow,
    Ack,
}

impl MessageKind {
    pub const ALL: [MessageKind; 4] = [Self::Learn, Self::Learnt, Self::AllKnow, Self::Ack];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Learn => "learn",
            Self::Learnt => "learnt",
            Self::AllKnow => "all-know",
            Self::Ack => "ack",
        }
    }

    /// Learn and AllKnow travel propagator → replica.
    pub fn is_downstream(self) -> bool {
        matches!(self, Self::Learn | Self::AllKnow)
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A protocol message. Replies echo the value they acknowledge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TapMessage {
    pub kind: MessageKind,
    pub from: AgentId,
    pub to: AgentId,
    pub value: KnowledgeValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Learning,
    AllKnowing,
    /// E²φ concluded.
    Done,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorState {
    pub id: AgentId,
    pub value: KnowledgeValue,
    pub replicas: BTreeSet<AgentId>,
    pub phase: Phase,
    pub learnt_from: BTreeSet<AgentId>,
    pub acked_from: BTreeSet<AgentId>,
    pub sent_count: u64,
    pub received_count: u64,
}

/// Starts Phase 1: one `Learn` per replica, in ascending id order.
pub fn propagator_start(
    id: AgentId,
    value: KnowledgeValue,
    replicas: BTreeSet<AgentId>,
) -> Result<(PropagatorState, Vec<TapMessage>)> {
    if replicas.is_empty() {
        return Err(Error::EmptyReplicaSet);
    }
    let mut state = PropagatorState {
        id,
        value,
        replicas,
        phase: Phase::Learning,
        learnt_from: BTreeSet::new(),
        acked_from: BTreeSet::new(),
        sent_count: 0,
        received_count: 0,
    };
    let out = state.broadcast(MessageKind::Learn);
    Ok((state, out))
}

impl PropagatorState {
    fn broadcast(&mut self, kind: MessageKind) -> Vec<TapMessage> {
        let out: Vec<_> = self
            .replicas
            .iter()
            .map(|&to| TapMessage {
                kind,
                from: self.id,
                to,
                value: self.value.clone(),
            })
            .collect();
        self.sent_count += out.len() as u64;
        out
    }

    /// Handles a `Learnt` or `Ack`. Duplicates are absorbed without
    /// touching the state.
    pub fn receive(&mut self, msg: &TapMessage) -> Result<Vec<TapMessage>> {
        if msg.to != self.id {
            return Err(Error::WrongRecipient {
                to: msg.to,
                at: self.id,
            });
        }
        if msg.kind.is_downstream() {
            return Err(Error::UnexpectedMessage {
                kind: msg.kind.as_str(),
                role: "propagator",
            });
        }
        if !self.replicas.contains(&msg.from) {
            return Err(Error::UnknownAgent(msg.from));
        }
        if msg.value != self.value {
            return Err(Error::ValueMismatch(msg.from));
        }
        match msg.kind {
            MessageKind::Learnt => {
                if !self.learnt_from.insert(msg.from) {
                    return Ok(Vec::new());
                }
                self.received_count += 1;
                if self.learnt_from.len() == self.replicas.len() {
                    self.phase = Phase::AllKnowing;
                    return Ok(self.broadcast(MessageKind::AllKnow));
                }
                Ok(Vec::new())
            }
            MessageKind::Ack => {
                if self.phase == Phase::Learning {
                    return Err(Error::ProtocolOrder {
                        agent: msg.from,
                        detail: "ack received before all-know was sent",
                    });
                }
                if !self.acked_from.insert(msg.from) {
                    return Ok(Vec::new());
                }
                self.received_count += 1;
                if self.acked_from.len() == self.replicas.len() {
                    self.phase = Phase::Done;
                }
                Ok(Vec::new())
            }
            MessageKind::Learn | MessageKind::AllKnow => unreachable!(),
        }
    }
}

/// Functional form of [`PropagatorState::receive`].
pub fn propagator_receive(
    mut state: PropagatorState,
    msg: &TapMessage,
) -> Result<(PropagatorState, Vec<TapMessage>)> {
    let out = state.receive(msg)?;
    Ok((state, out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaState {
    pub id: AgentId,
    pub knows_value: Option<KnowledgeValue>,
    /// Knows Eφ. Implies `knows_value.is_some()`.
    pub knows_all_know: bool,
}

impl ReplicaState {
    pub fn new(id: AgentId) -> Self {
        Self {
            id,
            knows_value: None,
            knows_all_know: false,
        }
    }

    /// Handles a `Learn` or `AllKnow`. A reply is emitted iff the
    /// corresponding knowledge is held, so a re-delivered message is
    /// answered again.
    pub fn receive(&mut self, msg: &TapMessage) -> Result<Option<TapMessage>> {
        if msg.to != self.id {
            return Err(Error::WrongRecipient {
                to: msg.to,
                at: self.id,
            });
        }
        let reply_kind = match msg.kind {
            MessageKind::Learn => {
                match &self.knows_value {
                    Some(held) if *held != msg.value => return Err(Error::ValueMismatch(self.id)),
                    Some(_) => {}
                    None => self.knows_value = Some(msg.value.clone()),
                }
                MessageKind::Learnt
            }
            MessageKind::AllKnow => {
                match &self.knows_value {
                    None => {
                        return Err(Error::ProtocolOrder {
                            agent: self.id,
                            detail: "all-know received before learn",
                        })
                    }
                    Some(held) if *held != msg.value => return Err(Error::ValueMismatch(self.id)),
                    Some(_) => {}
                }
                self.knows_all_know = true;
                MessageKind::Ack
            }
            MessageKind::Learnt | MessageKind::Ack => {
                return Err(Error::UnexpectedMessage {
                    kind: msg.kind.as_str(),
                    role: "replica",
                })
            }
        };
        Ok(Some(TapMessage {
            kind: reply_kind,
            from: self.id,
            to: msg.from,
            value: msg.value.clone(),
        }))
    }
}

/// Functional form of [`ReplicaState::receive`].
pub fn replica_receive(
    mut state: ReplicaState,
    msg: &TapMessage,
) -> Result<(ReplicaState, Option<TapMessage>)> {
    let out = state.receive(msg)?;
    Ok((state, out))
}

/// One delivered message in a trace.
#[derive(Clone, Debug, PartialEq)]
pub struct LoggedMessage {
    pub sequence: u64,
    pub sent_at: f64,
    pub delivered_at: f64,
    pub kind: MessageKind,
    pub from: AgentId,
    pub to: AgentId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSummary {
    /// Messages in delivery order.
    pub log: Vec<LoggedMessage>,
    pub propagator: PropagatorState,
    pub replicas: Vec<ReplicaState>,
}

impl TraceSummary {
    pub fn message_count(&self) -> usize {
        self.log.len()
    }

    pub fn count(&self, kind: MessageKind) -> usize {
        self.log.iter().filter(|m| m.kind == kind).count()
    }

    /// The propagator concluded E²φ and every replica knows Eφ.
    pub fn e2_achieved(&self) -> bool {
        self.propagator.phase == Phase::Done && self.replicas.iter().all(|r| r.knows_all_know)
    }

    /// Delivery time of the last message.
    pub fn completion_time(&self) -> f64 {
        self.log.last().map_or(0.0, |m| m.delivered_at)
    }
}

struct InFlight {
    at: f64,
    seq: u64,
    sent_at: f64,
    msg: TapMessage,
}

impl InFlight {
    fn key(&self) -> (f64, AgentId, AgentId, u64) {
        (self.at, self.msg.from, self.msg.to, self.seq)
    }
}

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for InFlight {}

impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InFlight {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    }
}

/// Runs one propagator (id 0) against replicas `1..=replica_count` to
/// completion. `delay` gives each message's delivery latency when it is
/// sent; replies leave at the instant their trigger is delivered.
/// Simultaneous deliveries are ordered by sender id, then recipient id.
pub fn run_tap<F>(value: KnowledgeValue, replica_count: u32, mut delay: F) -> Result<TraceSummary>
where
    F: FnMut(&TapMessage) -> f64,
{
    if replica_count == 0 {
        return Err(Error::ZeroReplicas);
    }
    let ids: BTreeSet<AgentId> = (1..=replica_count).map(AgentId).collect();
    let (mut propagator, first) = propagator_start(AgentId(0), value, ids)?;
    let mut replicas: Vec<ReplicaState> = (1..=replica_count)
        .map(|i| ReplicaState::new(AgentId(i)))
        .collect();

    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    let mut send = |queue: &mut BinaryHeap<Reverse<InFlight>>, now: f64, msg: TapMessage| {
        let at = now + delay(&msg).max(0.0);
        queue.push(Reverse(InFlight {
            at,
            seq,
            sent_at: now,
            msg,
        }));
        seq += 1;
    };
    for msg in first {
        send(&mut queue, 0.0, msg);
    }

    let mut log = Vec::new();
    while let Some(Reverse(flight)) = queue.pop() {
        let InFlight {
            at, sent_at, msg, ..
        } = flight;
        log.push(LoggedMessage {
            sequence: log.len() as u64,
            sent_at,
            delivered_at: at,
            kind: msg.kind,
            from: msg.from,
            to: msg.to,
        });
        if msg.kind.is_downstream() {
            let replica = &mut replicas[(msg.to.0 - 1) as usize];
            if let Some(reply) = replica.receive(&msg)? {
                send(&mut queue, at, reply);
            }
        } else {
            for out in propagator.receive(&msg)? {
                send(&mut queue, at, out);
            }
        }
    }

    Ok(TraceSummary {
        log,
        propagator,
        replicas,
    })
}

/// [`run_tap`] with instantaneous reliable delivery.
pub fn run_tap_trace(value: KnowledgeValue, replica_count: u32) -> Result<TraceSummary> {
    run_tap(value, replica_count, |_| 0.0)
}
