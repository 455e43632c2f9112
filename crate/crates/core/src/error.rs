// SPDX-License-Identifier: Apache-2.0

use crate::tap::AgentId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("Erlang shape must be at least 1")]
    ZeroShape,
    #[error("node count must be at least 2, got {0}")]
    InvalidNodeCount(u64),
    #[error("unstable queue: arrival rate {arrival} must be below service rate {service}")]
    Unstable { arrival: f64, service: f64 },
    #[error("replica count must be at least 1")]
    ZeroReplicas,
    #[error("knowledge value needs a non-empty owner set without duplicates")]
    InvalidValue,
    #[error("replica set is empty")]
    EmptyReplicaSet,
    #[error("protocol order violation at agent {agent}: {detail}")]
    ProtocolOrder {
        agent: AgentId,
        detail: &'static str,
    },
    #[error("agent {0} received a value different from the one it holds")]
    ValueMismatch(AgentId),
    #[error("message addressed to {to} delivered to {at}")]
    WrongRecipient { to: AgentId, at: AgentId },
    #[error("agent {0} is not a replica of this propagator")]
    UnknownAgent(AgentId),
    #[error("{kind} message is not valid input for the {role}")]
    UnexpectedMessage {
        kind: &'static str,
        role: &'static str,
    },
    #[error("sample contains NaN")]
    NanSample,
    #[error("sample count must be at least 1")]
    EmptyBatch,
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("no arrivals recorded, mean sojourn is undefined")]
    NoArrivals,
    #[error("insufficient data: have {have} samples, need at least {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("confidence must lie strictly between 0 and 1, got {0}")]
    InvalidConfidence(f64),
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("grid needs at least 2 points, got {0}")]
    InvalidGridPoints(usize),
    #[error("{trials} trials give DKW epsilon {epsilon:.5}, above the limit {limit}; at least {required} trials are needed")]
    InsufficientTrials {
        trials: usize,
        epsilon: f64,
        limit: f64,
        required: usize,
    },
}
