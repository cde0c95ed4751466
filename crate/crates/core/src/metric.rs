//! The sequence-detection decision metric and its sufficient statistics.
//!
//! For a hypothesized on-off pattern over a window, the only quantities the
//! metric depends on are `n_on` (how many slots are hypothesized "on") and
//! `r_on` (the total photon count collected over those slots). The decision
//! metric itself is evaluated in the log domain:
//!
//! ```text
//! log λ = r_on · ln(r_on / (n_on · n_b)) − r_on + n_b · n_on
//! ```
//!
//! with the conventions `0·ln 0 = 0` and `log λ = 0` when `n_on = 0` (an
//! all-off hypothesis is the noise-only hypothesis, so the likelihood ratio
//! against itself is 1). The log transform is strictly monotone, so argmax
//! comparisons between candidates are unchanged, while `λ` itself would
//! overflow once `r_on` reaches a few hundred.

/// Sufficient statistics of a hypothesized window: number of on-slots and
/// the summed count over them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WindowStats {
    /// Number of slots hypothesized to carry a 1.
    pub n_on: u64,
    /// Sum of received counts over those slots.
    pub r_on: u64,
}

impl WindowStats {
    pub const EMPTY: WindowStats = WindowStats { n_on: 0, r_on: 0 };

    pub fn new(n_on: u64, r_on: u64) -> Self {
        WindowStats { n_on, r_on }
    }

    /// Fold one slot into the statistics. A 0-bit contributes nothing.
    #[inline]
    pub fn add_slot(self, bit: u8, count: u64) -> Self {
        debug_assert!(bit <= 1, "bit must be 0 or 1");
        if bit == 1 {
            WindowStats {
                n_on: self.n_on + 1,
                r_on: self.r_on + count,
            }
        } else {
            self
        }
    }

    /// Componentwise sum; combines disjoint window segments.
    #[inline]
    pub fn merge(self, other: WindowStats) -> Self {
        WindowStats {
            n_on: self.n_on + other.n_on,
            r_on: self.r_on + other.r_on,
        }
    }

    /// Remove a previously merged segment. Panics in debug builds if the
    /// segment was never part of `self`.
    #[inline]
    pub fn remove(self, other: WindowStats) -> Self {
        debug_assert!(self.n_on >= other.n_on && self.r_on >= other.r_on);
        WindowStats {
            n_on: self.n_on - other.n_on,
            r_on: self.r_on - other.r_on,
        }
    }
}

/// Log-domain decision metric of a hypothesis with statistics `stats`
/// against mean background count `n_b`.
///
/// Returns 0 exactly for the empty hypothesis (`n_on = 0`), and applies the
/// `0·ln 0 = 0` convention when `r_on = 0`. No clamping is applied: a window
/// whose implied channel estimate `r_on / n_on` falls below `n_b` is scored
/// exactly as the formula says.
#[inline]
pub fn log_metric(stats: WindowStats, n_b: f64) -> f64 {
    assert!(n_b > 0.0, "log_metric: n_b must be positive, got {n_b}");
    if stats.n_on == 0 {
        return 0.0;
    }
    let n = stats.n_on as f64;
    let r = stats.r_on as f64;
    let ratio_term = if stats.r_on == 0 {
        0.0
    } else {
        r * (r / (n * n_b)).ln()
    };
    ratio_term - r + n_b * n
}
