//! Alpha-beta cost accounting.
//!
//! A message of `m` words costs `t_s + t_w * m`. Each rank keeps a
//! [`CostLedger`] of what it actually sent and how many synchronized rounds
//! each collective took; [`predicted_time`] and [`expected_counts`] give the
//! closed forms for the algorithms implemented in [`crate::groups`].
//!
//! Rounds are measured with a per-collective logical clock under a
//! single-port, full-duplex model: a rank can send one and receive one
//! message per step, and a send cannot leave before the data it depends on
//! has arrived.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bytes per accounting word.
pub const WORD_BYTES: usize = 8;

pub fn words_for(bytes: usize) -> u64 {
    bytes.div_ceil(WORD_BYTES) as u64
}

/// `⌈log₂ p⌉`, with `ceil_log2(1) == 0`.
pub fn ceil_log2(p: usize) -> u32 {
    assert!(p >= 1, "ceil_log2 of zero");
    usize::BITS - (p - 1).leading_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Reduce,
    Broadcast,
    AllReduce,
    Scan,
    Shift,
    LinearReduce,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [
        Pattern::Reduce,
        Pattern::Broadcast,
        Pattern::AllReduce,
        Pattern::Scan,
        Pattern::Shift,
        Pattern::LinearReduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Reduce => "reduce",
            Pattern::Broadcast => "broadcast",
            Pattern::AllReduce => "all_reduce",
            Pattern::Scan => "scan",
            Pattern::Shift => "shift",
            Pattern::LinearReduce => "linear_reduce",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPattern(s.to_owned()))
    }
}

/// Startup time per message and transfer time per word, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub t_s: f64,
    pub t_w: f64,
}

impl CostParams {
    pub fn new(t_s: f64, t_w: f64) -> Result<Self> {
        if !(t_s >= 0.0 && t_w >= 0.0) {
            return Err(Error::Config(format!(
                "cost parameters must be non-negative, got t_s={t_s} t_w={t_w}"
            )));
        }
        Ok(Self { t_s, t_w })
    }

    /// Time to move one message of `m` words.
    pub fn message_time(&self, m: f64) -> f64 {
        self.t_s + self.t_w * m
    }
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            t_s: 1e-5,
            t_w: 1e-9,
        }
    }
}

/// Number of synchronized steps of `pattern` on `p` processing elements.
pub fn predicted_rounds(pattern: Pattern, p: usize) -> u64 {
    assert!(p >= 1);
    if p == 1 {
        return 0;
    }
    let log = u64::from(ceil_log2(p));
    match pattern {
        Pattern::Reduce | Pattern::Broadcast | Pattern::Scan => log,
        Pattern::AllReduce => 2 * log,
        Pattern::Shift => 1,
        Pattern::LinearReduce => p as u64 - 1,
    }
}

/// Modeled parallel time of `pattern` moving `m`-word messages, where each
/// combining step costs `t_lambda`.
pub fn predicted_time(pattern: Pattern, p: usize, m: f64, params: &CostParams, t_lambda: f64) -> f64 {
    if p <= 1 {
        return 0.0;
    }
    let step = params.message_time(m) + t_lambda;
    match pattern {
        Pattern::Shift => params.message_time(m),
        _ => predicted_rounds(pattern, p) as f64 * step,
    }
}

/// Exact rounds and messages of the implemented algorithms on a group of
/// `q` members (root at local index 0).
pub fn expected_counts(pattern: Pattern, q: usize) -> (u64, u64) {
    assert!(q >= 1);
    let rounds = predicted_rounds(pattern, q);
    if q == 1 {
        return (0, 0);
    }
    let q64 = q as u64;
    let messages = match pattern {
        Pattern::Reduce | Pattern::Broadcast | Pattern::LinearReduce => q64 - 1,
        Pattern::AllReduce => 2 * (q64 - 1),
        Pattern::Shift => q64,
        Pattern::Scan => scan_messages(q),
    };
    (rounds, messages)
}

// Hypercube exchange: at stride m every rank whose partner r ^ m exists
// sends one message.
fn scan_messages(q: usize) -> u64 {
    (0..ceil_log2(q))
        .map(|i| (0..q).filter(|r| (r ^ (1 << i)) < q).count() as u64)
        .sum()
}

/// Modeled time of the blocked 2-D Floyd-Warshall on a `√p × √p` grid:
/// `n³/p` relaxations of `t_update` seconds plus, for each of the `n`
/// iterations, a row and a column broadcast of `n/√p` words among `√p`
/// processing elements.
pub fn predicted_floyd_time(n: usize, p: usize, params: &CostParams, t_update: f64) -> f64 {
    let q = (p as f64).sqrt().round() as usize;
    assert!(q * q == p, "floyd model needs a square processor count, got {p}");
    let n_f = n as f64;
    let compute = n_f.powi(3) / p as f64 * t_update;
    let bcast = predicted_time(Pattern::Broadcast, q, n_f / q as f64, params, 0.0);
    compute + n_f * 2.0 * bcast
}

/// Counters for one collective as seen by one rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRecord {
    pub pattern: Pattern,
    /// Identifies the collective instance: (group id, per-group sequence).
    pub key: (u32, u32),
    pub group_size: usize,
    pub messages: u64,
    pub words: u64,
    pub rounds: u64,
}

impl OpRecord {
    fn absorb(&mut self, other: &OpRecord) {
        self.messages += other.messages;
        self.words += other.words;
        self.rounds = self.rounds.max(other.rounds);
    }
}

/// Per-rank communication counters.
///
/// Within one rank, collectives run one after another so their rounds add.
/// [`CostLedger::merge`] combines ledgers of different ranks: message and
/// word counts add, rounds take the maximum because ranks run concurrently.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub messages_sent: u64,
    pub words_sent: u64,
    pub rounds: u64,
    pub records: Vec<OpRecord>,
}

impl CostLedger {
    pub fn record(&mut self, op: OpRecord) {
        self.messages_sent += op.messages;
        self.words_sent += op.words;
        self.rounds += op.rounds;
        self.records.push(op);
    }

    /// Combines the ledgers of concurrently running ranks. Records of the
    /// same collective instance are folded together.
    pub fn merge(&self, other: &CostLedger) -> CostLedger {
        let mut by_key: BTreeMap<(u32, u32, Pattern), OpRecord> = BTreeMap::new();
        for rec in self.records.iter().chain(&other.records) {
            by_key
                .entry((rec.key.0, rec.key.1, rec.pattern))
                .and_modify(|acc| acc.absorb(rec))
                .or_insert_with(|| rec.clone());
        }
        CostLedger {
            messages_sent: self.messages_sent + other.messages_sent,
            words_sent: self.words_sent + other.words_sent,
            rounds: self.rounds.max(other.rounds),
            records: by_key.into_values().collect(),
        }
    }

    pub fn records_of(&self, pattern: Pattern) -> impl Iterator<Item = &OpRecord> {
        self.records.iter().filter(move |r| r.pattern == pattern)
    }
}

/// Merges the per-rank ledgers of one run.
pub fn ledger_of<'a>(ledgers: impl IntoIterator<Item = &'a CostLedger>) -> CostLedger {
    ledgers
        .into_iter()
        .fold(CostLedger::default(), |acc, l| acc.merge(l))
}

/// Measured-versus-expected comparison for one collective instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub operation: Pattern,
    pub p: usize,
    pub m: f64,
    pub rounds_measured: u64,
    pub rounds_predicted: u64,
    pub messages: u64,
    pub messages_predicted: u64,
    pub words: u64,
    pub matches: bool,
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<13} p={:<4} m={:<8} rounds {}/{} messages {}/{} words {} {}",
            self.operation.name(),
            self.p,
            self.m,
            self.rounds_measured,
            self.rounds_predicted,
            self.messages,
            self.messages_predicted,
            self.words,
            if self.matches { "OK" } else { "MISMATCH" }
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub records: Vec<CheckRecord>,
}

impl CostReport {
    pub fn all_match(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.matches)
    }

    pub fn to_text(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn to_json_lines(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Checks every `pattern` collective on a group of `p` members in a merged
/// ledger against the exact counts of [`expected_counts`]. `m` is the
/// message size in words reported alongside.
pub fn check_against(ledger: &CostLedger, pattern: Pattern, p: usize, m: f64) -> CostReport {
    let (rounds_predicted, messages_predicted) = expected_counts(pattern, p);
    let records = ledger
        .records_of(pattern)
        .filter(|r| r.group_size == p)
        .map(|r| CheckRecord {
            operation: pattern,
            p,
            m,
            rounds_measured: r.rounds,
            rounds_predicted,
            messages: r.messages,
            messages_predicted,
            words: r.words,
            matches: r.rounds == rounds_predicted && r.messages == messages_predicted,
        })
        .collect();
    CostReport { records }
}
