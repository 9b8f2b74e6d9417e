use std::fmt;

use crate::agents::{AgentId, TreeLabel};
use crate::graph::{NodeId, Port};

/// What a probe concluded about one neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeOutcome {
    Empty,
    Occupied(AgentId),
    Vacated(AgentId),
}

impl fmt::Display for ProbeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeOutcome::Empty => f.write_str("empty"),
            ProbeOutcome::Occupied(a) => write!(f, "occupied:{a}"),
            ProbeOutcome::Vacated(a) => write!(f, "vacated:{a}"),
        }
    }
}

/// Semantic event emitted by agent code, or by the runtime for termination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Marker {
    Settle {
        agent: AgentId,
    },
    Vacate {
        agent: AgentId,
    },
    /// A vacate decision has completed at the head.
    Decision,
    ProbeStart {
        tree: TreeLabel,
        pool: u32,
    },
    ProbeEnd {
        tree: TreeLabel,
    },
    Probe {
        tree: TreeLabel,
        port: Port,
        remote_port: Port,
        outcome: ProbeOutcome,
    },
    Reconfigure {
        agent: AgentId,
    },
    RetraceStart {
        tree: TreeLabel,
    },
    ConstructionEnd {
        tree: TreeLabel,
    },
    Merge {
        from: TreeLabel,
        into: TreeLabel,
    },
    Lose {
        tree: TreeLabel,
    },
    Restart {
        tree: TreeLabel,
    },
    Violation(String),
    Termination,
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marker::Settle { agent } => write!(f, "settle:{agent}"),
            Marker::Vacate { agent } => write!(f, "vacate:{agent}"),
            Marker::Decision => f.write_str("decision"),
            Marker::ProbeStart { pool, .. } => write!(f, "probe-start:{pool}"),
            Marker::ProbeEnd { .. } => f.write_str("probe-end"),
            Marker::Probe { port, outcome, .. } => write!(f, "probe:{port}={outcome}"),
            Marker::Reconfigure { agent } => write!(f, "reconfigure:{agent}"),
            Marker::RetraceStart { .. } => f.write_str("retrace-start"),
            Marker::ConstructionEnd { .. } => f.write_str("construction-end"),
            Marker::Merge { from, into } => write!(f, "merge:{from}>{into}"),
            Marker::Lose { tree } => write!(f, "lose:{tree}"),
            Marker::Restart { tree } => write!(f, "restart:{tree}"),
            Marker::Violation(m) => write!(f, "violation:{}", m.replace(' ', "_")),
            Marker::Termination => f.write_str("termination"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    /// 1-based epoch the event falls in.
    pub epoch: u64,
    /// Agents that had completed a cycle in this epoch after the event.
    pub progress: u32,
    pub agent: AgentId,
    pub node_before: NodeId,
    pub node_after: NodeId,
    pub written: Vec<AgentId>,
    pub null: bool,
    pub markers: Vec<Marker>,
}

impl TraceEvent {
    /// Position in epochs, with the fractional part measured in completed cycles.
    pub fn time(&self, k: usize) -> f64 {
        (self.epoch - 1) as f64 + self.progress as f64 / k as f64
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {} ", self.seq, self.epoch, self.agent, self.node_before, self.node_after)?;
        if self.markers.is_empty() {
            return f.write_str("-");
        }
        for (i, m) in self.markers.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    #[default]
    Full,
    /// Keep only events that carry markers.
    Markers,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimulationTrace {
    pub k: usize,
    pub events: Vec<TraceEvent>,
}

impl SimulationTrace {
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn find(&self, seq: u64) -> Option<&TraceEvent> {
        self.events.binary_search_by_key(&seq, |e| e.seq).ok().map(|i| &self.events[i])
    }

    pub fn markers(&self) -> impl Iterator<Item = (&TraceEvent, &Marker)> {
        self.events.iter().flat_map(|e| e.markers.iter().map(move |m| (e, m)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntervalError {
    #[error("no event with sequence number {0}")]
    NotFound(u64),
    #[error("interval end {end} precedes start {start}")]
    Reversed { start: u64, end: u64 },
}

/// Epochs spanned by the events `start..=end`: boundaries strictly inside
/// plus the fractional ends, rounded up, and never less than one.
pub fn epochs_between(trace: &SimulationTrace, start: u64, end: u64) -> Result<u64, IntervalError> {
    let a = trace.find(start).ok_or(IntervalError::NotFound(start))?;
    let b = trace.find(end).ok_or(IntervalError::NotFound(end))?;
    if end < start {
        return Err(IntervalError::Reversed { start, end });
    }
    Ok(span(a, b, trace.k))
}

pub(crate) fn span(a: &TraceEvent, b: &TraceEvent, k: usize) -> u64 {
    // Start counts from the beginning of its cycle, so subtract one unit.
    let ta = a.time(k) - 1.0 / k as f64;
    let d = (b.time(k) - ta).ceil() as u64;
    d.max(1)
}
