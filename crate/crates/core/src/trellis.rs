//! Streaming two-state trellis search over the window metric, with the
//! selective-store strategy.
//!
//! The decoder keeps one survivor per node (last bit 0 / last bit 1). Each
//! incoming count extends both survivors both ways, keeps the better
//! entrant per node, and emits the longest common prefix of the two
//! survivors as final decisions. Decided statistics are kept only for the
//! most recent `l_m` 1-decided counts (the selective store), shared by both
//! survivors; 0-decided slots contribute nothing to the metric, so nothing
//! else needs to be remembered. Once the first 1-decision lands in the
//! store, every candidate hypothesis has `n_on ≥ 1` and the metric is
//! always well defined — this is what removes the error floor of blockwise
//! detection.
//!
//! Work per step is four metric evaluations (two on a cold start),
//! independent of `l_m`. The undecided tail length `d` is bounded by the
//! ongoing-buffer capacity `l`; if `d` would exceed it without a natural
//! merge, the lower-metric survivor is discarded and the better one is
//! emitted in full (a forced merge, counted in the statistics).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::metric::{log_metric, WindowStats};

/// Capacities of the decoder's two memories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrellisConfig {
    /// Selective-store capacity: number of 1-decided counts retained.
    pub l_m: usize,
    /// Ongoing-buffer capacity: maximum undecided tail length.
    pub l: usize,
}

impl TrellisConfig {
    pub const DEFAULT_ONGOING_CAPACITY: usize = 20;

    pub fn new(l_m: usize, l: usize) -> Result<Self> {
        if l_m < 1 {
            return Err(Error::ParamDomain {
                name: "l_m",
                value: l_m as f64,
                requirement: "must be >= 1",
            });
        }
        if l < 2 {
            return Err(Error::ParamDomain {
                name: "l",
                value: l as f64,
                requirement: "must be >= 2",
            });
        }
        Ok(TrellisConfig { l_m, l })
    }
}

/// FIFO of the most recent 1-decided counts, with their slot indices and a
/// running sum.
#[derive(Debug, Clone)]
struct SelectiveStore {
    entries: VecDeque<(u64, u64)>, // (slot, count)
    capacity: usize,
    sum: u64,
}

impl SelectiveStore {
    fn new(capacity: usize) -> Self {
        SelectiveStore {
            entries: VecDeque::with_capacity(capacity),
            capacity,
            sum: 0,
        }
    }

    fn push(&mut self, slot: u64, count: u64) {
        if self.entries.len() == self.capacity {
            let (_, evicted) = self.entries.pop_front().expect("capacity >= 1");
            self.sum -= evicted;
        }
        self.entries.push_back((slot, count));
        self.sum += count;
    }

    fn stats(&self) -> WindowStats {
        WindowStats::new(self.entries.len() as u64, self.sum)
    }

    fn oldest_slot(&self) -> Option<u64> {
        self.entries.front().map(|&(slot, _)| slot)
    }
}

/// One survivor path: its undecided tail and the statistics of that tail.
#[derive(Debug, Clone)]
struct Survivor {
    bits: Vec<u8>,
    stats: WindowStats,
    metric: f64,
}

/// Counters accumulated over the life of a decoder.
#[derive(Debug, Clone)]
pub struct TrellisStats {
    /// Slots consumed.
    pub steps: u64,
    /// Decisions emitted (including flushes).
    pub emitted: u64,
    /// 1-decisions emitted.
    pub ones_emitted: u64,
    /// Forced merges (buffer-overflow truncations).
    pub forced_merges: u64,
    /// Metric evaluations performed by `step` and `flush`.
    pub metric_evals: u64,
    /// Sum over steps of the post-step undecided length d.
    pub sum_depth: u64,
    /// Histogram of post-step d (index d, up to the buffer capacity).
    pub depth_hist: Vec<u64>,
    /// Sum over steps of the effective window length L' + d.
    pub sum_window: u64,
    /// Histogram of the post-step window length L' + d (last bin collects
    /// the overflow).
    pub window_hist: Vec<u64>,
}

/// Bins in [`TrellisStats::window_hist`].
pub const WINDOW_HIST_BINS: usize = 512;

impl TrellisStats {
    fn new(l: usize) -> Self {
        TrellisStats {
            steps: 0,
            emitted: 0,
            ones_emitted: 0,
            forced_merges: 0,
            metric_evals: 0,
            sum_depth: 0,
            depth_hist: vec![0; l + 1],
            sum_window: 0,
            window_hist: vec![0; WINDOW_HIST_BINS],
        }
    }

    /// Time-averaged undecided length (equals the mean decision delay).
    pub fn mean_depth(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.sum_depth as f64 / self.steps as f64
        }
    }

    /// Time-averaged effective window length L' + d.
    pub fn mean_window(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.sum_window as f64 / self.steps as f64
        }
    }
}

/// Streaming two-survivor trellis decoder.
#[derive(Debug, Clone)]
pub struct TrellisDecoder {
    config: TrellisConfig,
    n_b: f64,
    store: SelectiveStore,
    /// Survivors for node 0 and node 1; absent on a cold start and right
    /// after a flush or forced merge.
    survivors: Option<[Survivor; 2]>,
    /// Received counts of the undecided slots (oldest first).
    pending_counts: VecDeque<u64>,
    /// Global index of the next slot to be consumed.
    next_slot: u64,
    /// Global index of the most recently decided slot.
    last_decided: Option<u64>,
    stats: TrellisStats,
}

impl TrellisDecoder {
    pub fn new(config: TrellisConfig, n_b: f64) -> Result<Self> {
        if !(n_b > 0.0) || !n_b.is_finite() {
            return Err(Error::ParamDomain {
                name: "n_b",
                value: n_b,
                requirement: "must be finite and > 0",
            });
        }
        Ok(TrellisDecoder {
            config,
            n_b,
            store: SelectiveStore::new(config.l_m),
            survivors: None,
            pending_counts: VecDeque::with_capacity(config.l + 1),
            next_slot: 0,
            last_decided: None,
            stats: TrellisStats::new(config.l),
        })
    }

    pub fn config(&self) -> TrellisConfig {
        self.config
    }

    pub fn stats(&self) -> &TrellisStats {
        &self.stats
    }

    /// Current undecided tail length d.
    pub fn depth(&self) -> usize {
        self.pending_counts.len()
    }

    /// Statistics currently held in the selective store.
    pub fn store_stats(&self) -> WindowStats {
        self.store.stats()
    }

    /// Cached metrics of the node-0 and node-1 survivors.
    pub fn survivor_metrics(&self) -> Option<(f64, f64)> {
        self.survivors
            .as_ref()
            .map(|s| (s[0].metric, s[1].metric))
    }

    fn candidate_metric(&mut self, ongoing: WindowStats) -> f64 {
        self.stats.metric_evals += 1;
        log_metric(self.store.stats().merge(ongoing), self.n_b)
    }

    /// Consume one received count; append any newly final decisions to
    /// `emitted`.
    pub fn step_into(&mut self, count: u64, emitted: &mut Vec<u8>) {
        match self.survivors.take() {
            None => {
                // Two single-slot candidates, one per node.
                let zero_stats = WindowStats::EMPTY;
                let one_stats = WindowStats::new(1, count);
                let m0 = self.candidate_metric(zero_stats);
                let m1 = self.candidate_metric(one_stats);
                self.survivors = Some([
                    Survivor {
                        bits: vec![0],
                        stats: zero_stats,
                        metric: m0,
                    },
                    Survivor {
                        bits: vec![1],
                        stats: one_stats,
                        metric: m1,
                    },
                ]);
            }
            Some(parents) => {
                let next = [0u8, 1u8].map(|bit| {
                    // Extend both parents by `bit`; keep the better entrant.
                    let stats = [
                        parents[0].stats.add_slot(bit, count),
                        parents[1].stats.add_slot(bit, count),
                    ];
                    let metrics = [
                        self.candidate_metric(stats[0]),
                        self.candidate_metric(stats[1]),
                    ];
                    let winner = pick_entrant(&parents, metrics);
                    let mut bits = parents[winner].bits.clone();
                    bits.push(bit);
                    Survivor {
                        bits,
                        stats: stats[winner],
                        metric: metrics[winner],
                    }
                });
                self.survivors = Some(next);
            }
        }
        self.pending_counts.push_back(count);
        self.next_slot += 1;
        self.stats.steps += 1;

        // Emit the longest common prefix of the two survivors. Their last
        // bits always differ, so at least one undecided slot remains.
        let prefix = {
            let s = self.survivors.as_ref().expect("set above");
            s[0].bits
                .iter()
                .zip(&s[1].bits)
                .take_while(|(a, b)| a == b)
                .count()
        };
        if prefix > 0 {
            self.emit_prefix(prefix, emitted);
        }

        // Forced merge when the undecided tail would overflow the buffer.
        if self.depth() > self.config.l {
            self.stats.forced_merges += 1;
            self.merge_all(emitted);
        }

        let d = self.depth();
        self.stats.sum_depth += d as u64;
        let last_bin = self.stats.depth_hist.len() - 1;
        self.stats.depth_hist[d.min(last_bin)] += 1;
        let window = self.detected_span() + d as u64;
        self.stats.sum_window += window;
        self.stats.window_hist[(window as usize).min(WINDOW_HIST_BINS - 1)] += 1;
    }

    /// Convenience wrapper returning the emitted decisions.
    pub fn step(&mut self, count: u64) -> Vec<u8> {
        let mut out = Vec::new();
        self.step_into(count, &mut out);
        out
    }

    /// Finalize the stream: emit the better survivor's remaining tail and
    /// return to the cold-start state, keeping the selective store and the
    /// statistics.
    pub fn flush(&mut self) -> Vec<u8> {
        let mut out = Vec::new();
        if self.survivors.is_some() {
            // Refresh both metrics against the current store before
            // comparing (the cached values may predate an eviction).
            let fresh = {
                let s = self.survivors.as_ref().unwrap();
                [s[0].stats, s[1].stats]
            };
            let m0 = self.candidate_metric(fresh[0]);
            let m1 = self.candidate_metric(fresh[1]);
            let s = self.survivors.as_mut().unwrap();
            s[0].metric = m0;
            s[1].metric = m1;
            self.merge_all(&mut out);
        }
        out
    }

    /// Emit the first `prefix` bits of the (agreeing) survivors.
    fn emit_prefix(&mut self, prefix: usize, emitted: &mut Vec<u8>) {
        let survivors = self.survivors.as_mut().expect("survivors present");
        let mut removed = WindowStats::EMPTY;
        for i in 0..prefix {
            let bit = survivors[0].bits[i];
            debug_assert_eq!(bit, survivors[1].bits[i], "emitting non-common prefix");
            let count = self
                .pending_counts
                .pop_front()
                .expect("pending count per ongoing bit");
            let slot = self.next_slot - (self.pending_counts.len() as u64 + 1);
            if bit == 1 {
                self.store.push(slot, count);
                self.stats.ones_emitted += 1;
                removed = removed.merge(WindowStats::new(1, count));
            }
            self.last_decided = Some(slot);
            self.stats.emitted += 1;
            emitted.push(bit);
        }
        for s in survivors.iter_mut() {
            s.bits.drain(..prefix);
            s.stats = s.stats.remove(removed);
        }
    }

    /// Discard the worse survivor and emit the better one in full.
    fn merge_all(&mut self, emitted: &mut Vec<u8>) {
        let survivors = self.survivors.take().expect("survivors present");
        let winner = pick_winner(&survivors);
        let survivor = &survivors[winner];
        for &bit in &survivor.bits {
            let count = self
                .pending_counts
                .pop_front()
                .expect("pending count per ongoing bit");
            let slot = self.next_slot - (self.pending_counts.len() as u64 + 1);
            if bit == 1 {
                self.store.push(slot, count);
                self.stats.ones_emitted += 1;
            }
            self.last_decided = Some(slot);
            self.stats.emitted += 1;
            emitted.push(bit);
        }
        debug_assert!(self.pending_counts.is_empty());
    }

    /// Span L' of the detected part holding the stored 1-decisions.
    fn detected_span(&self) -> u64 {
        match (self.store.oldest_slot(), self.last_decided) {
            (Some(oldest), Some(last)) => last - oldest + 1,
            _ => 0,
        }
    }

    /// Time-averaged effective window length L' + d.
    pub fn mean_window(&self) -> f64 {
        self.stats.mean_window()
    }
}

/// Index of the better of two entrants into one node. Higher metric wins;
/// ties prefer the smaller ongoing n_on, then the lexicographically
/// smaller parent path.
fn pick_entrant(parents: &[Survivor; 2], metrics: [f64; 2]) -> usize {
    if metrics[0] != metrics[1] {
        return if metrics[0] >= metrics[1] { 0 } else { 1 };
    }
    if parents[0].stats.n_on != parents[1].stats.n_on {
        return if parents[0].stats.n_on < parents[1].stats.n_on {
            0
        } else {
            1
        };
    }
    if parents[0].bits <= parents[1].bits {
        0
    } else {
        1
    }
}

/// Same ordering applied to the survivors themselves (for flush and
/// forced merges).
fn pick_winner(survivors: &[Survivor; 2]) -> usize {
    if survivors[0].metric != survivors[1].metric {
        return if survivors[0].metric >= survivors[1].metric {
            0
        } else {
            1
        };
    }
    if survivors[0].stats.n_on != survivors[1].stats.n_on {
        return if survivors[0].stats.n_on < survivors[1].stats.n_on {
            0
        } else {
            1
        };
    }
    if survivors[0].bits <= survivors[1].bits {
        0
    } else {
        1
    }
}
