use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Broadcast,
}

/// Why a broadcast was sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BroadcastKind {
    Reference,
    Snapshot,
    Parameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub round: u64,
    pub direction: Direction,
    /// Sending worker for uplinks; `None` for server broadcasts.
    pub worker: Option<usize>,
    pub broadcast: Option<BroadcastKind>,
    pub bits: u64,
}

/// Append-only record of every transmission.
#[derive(Debug, Clone, Default)]
pub struct CommLedger {
    entries: Vec<LedgerEntry>,
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uplink(&mut self, round: u64, worker: usize, bits: u64) {
        self.entries.push(LedgerEntry {
            round,
            direction: Direction::Uplink,
            worker: Some(worker),
            broadcast: None,
            bits,
        });
    }

    pub fn broadcast(&mut self, round: u64, kind: BroadcastKind, bits: u64) {
        self.entries.push(LedgerEntry {
            round,
            direction: Direction::Broadcast,
            worker: None,
            broadcast: Some(kind),
            bits,
        });
    }

    /// Drops every entry after the first `len`.
    pub(crate) fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.bits).sum()
    }

    pub fn total_by_direction(&self, direction: Direction) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.direction == direction)
            .map(|e| e.bits)
            .sum()
    }

    pub fn total_by_worker(&self, worker: usize) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.worker == Some(worker))
            .map(|e| e.bits)
            .sum()
    }

    pub fn total_for_round(&self, round: u64) -> u64 {
        self.entries.iter().filter(|e| e.round == round).map(|e| e.bits).sum()
    }
}
