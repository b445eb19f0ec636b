use serde::{Deserialize, Serialize};

/// Counters for one outer round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    /// Payload bits sent master to workers (labels plus parameters).
    pub bits_broadcast: u64,
    /// Payload bits sent workers to master (summaries plus local labels).
    pub bits_gathered: u64,
    /// Encoded frame bytes in both directions, framing included.
    pub wire_bytes: u64,
    /// Multiply-adds summed over workers.
    pub ops: u64,
    /// Largest per-worker multiply-add count.
    pub max_worker_ops: u64,
    pub em_iters: Vec<u32>,
    /// Summed worker pseudo log-likelihood after this round's EM.
    pub objective: f64,
    /// EM steps in this round whose objective fell (beyond 1e-8 relative).
    pub ascent_violations: u32,
    /// A community was empty at aggregation or lost its mass inside EM.
    pub degenerate: bool,
    pub messages: u32,
}

/// Per-round record of what a fit communicated and computed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundLedger {
    pub rounds: Vec<RoundRecord>,
}

impl RoundLedger {
    pub fn total_bits(&self) -> u64 {
        self.rounds
            .iter()
            .map(|r| r.bits_broadcast + r.bits_gathered)
            .sum()
    }

    pub fn total_ops(&self) -> u64 {
        self.rounds.iter().map(|r| r.ops).sum()
    }

    pub fn ascent_violations(&self) -> u32 {
        self.rounds.iter().map(|r| r.ascent_violations).sum()
    }

    /// Rounds whose objective dropped below the previous round's.
    pub fn non_monotone_rounds(&self) -> Vec<u32> {
        self.rounds
            .windows(2)
            .filter(|w| w[1].objective < w[0].objective)
            .map(|w| w[1].round)
            .collect()
    }

    /// CSV with columns `round,bits_broadcast,bits_gathered,ops,objective`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("round,bits_broadcast,bits_gathered,ops,objective\n");
        for r in &self.rounds {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.round, r.bits_broadcast, r.bits_gathered, r.ops, r.objective
            ));
        }
        s
    }
}
