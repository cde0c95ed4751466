//! Monte Carlo BER estimation: per-point simulation with early stopping,
//! deterministic parallel execution, and the semi-analytic genie bound.
//!
//! Work is carved into fixed-size units; unit `u` of point `p` draws from
//! an RNG stream derived only from `(master seed, p, u)`. Units are
//! simulated in parallel (`shards` at a time) but always aggregated in
//! unit order, so bit and error tallies are byte-identical for any shard
//! count and any thread scheduling. The stopping rule is evaluated on the
//! ordered prefix, making early stopping deterministic too.

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::VecDeque;

use crate::channel::{ChannelParams, FadingModel, GainProcess, SlotSampler};
use crate::detectors::{
    brute_force_detect, fixed_threshold_detect, genie_bep_given_h, genie_detect, msd_detect,
    BRUTE_FORCE_MAX_L,
};
use crate::error::{Error, Result};
use crate::trellis::{TrellisConfig, TrellisDecoder};

/// Default bits per work unit. Each unit runs an independent channel and
/// detector instance, so this also bounds how much simulated history a
/// streaming receiver accumulates before a cold restart.
pub const DEFAULT_UNIT_BITS: u64 = 1 << 20;

/// Which receiver to run at a sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReceiverSpec {
    /// Per-symbol ML with the true gain supplied by the harness.
    Genie,
    /// Fixed count threshold (no channel knowledge at all).
    Fixed { threshold: f64 },
    /// Sort-based block detector over blocks of `block_len` slots.
    Msd { block_len: usize },
    /// Exhaustive block search (oracle); small blocks only.
    Brute { block_len: usize },
    /// Streaming trellis search with selective store.
    Trellis { l_m: usize, l: usize },
}

impl ReceiverSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ReceiverSpec::Genie => "genie",
            ReceiverSpec::Fixed { .. } => "fixed",
            ReceiverSpec::Msd { .. } => "msd",
            ReceiverSpec::Brute { .. } => "brute",
            ReceiverSpec::Trellis { .. } => "trellis",
        }
    }

    /// Receiver parameter as printed in result rows ("" for genie).
    pub fn param_string(&self) -> String {
        match self {
            ReceiverSpec::Genie => String::new(),
            ReceiverSpec::Fixed { threshold } => format!("{threshold}"),
            ReceiverSpec::Msd { block_len } | ReceiverSpec::Brute { block_len } => {
                format!("{block_len}")
            }
            ReceiverSpec::Trellis { l_m, .. } => format!("{l_m}"),
        }
    }

    /// Bits per point must be a multiple of this.
    fn block_multiple(&self) -> u64 {
        match self {
            ReceiverSpec::Msd { block_len } | ReceiverSpec::Brute { block_len } => {
                *block_len as u64
            }
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ReceiverSpec::Genie => Ok(()),
            ReceiverSpec::Fixed { threshold } => {
                if threshold > 0.0 && threshold.is_finite() {
                    Ok(())
                } else {
                    Err(Error::ParamDomain {
                        name: "threshold",
                        value: threshold,
                        requirement: "must be finite and > 0",
                    })
                }
            }
            ReceiverSpec::Msd { block_len } => {
                if block_len >= 1 {
                    Ok(())
                } else {
                    Err(Error::SimConfig("msd block length must be >= 1".into()))
                }
            }
            ReceiverSpec::Brute { block_len } => {
                if block_len >= 1 && block_len <= BRUTE_FORCE_MAX_L {
                    Ok(())
                } else {
                    Err(Error::BlockTooLong {
                        l: block_len,
                        limit: BRUTE_FORCE_MAX_L,
                    })
                }
            }
            ReceiverSpec::Trellis { l_m, l } => TrellisConfig::new(l_m, l).map(|_| ()),
        }
    }
}

/// Early-stopping rule: halt when `errors >= min_errors` or
/// `bits >= max_bits`, whichever happens first. A zero disables that arm;
/// both zero is a configuration error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoppingRule {
    pub min_errors: u64,
    pub max_bits: u64,
}

impl StoppingRule {
    pub fn new(min_errors: u64, max_bits: u64) -> Result<Self> {
        if min_errors == 0 && max_bits == 0 {
            return Err(Error::SimConfig(
                "stopping rule needs min_errors >= 1 or max_bits >= 1".into(),
            ));
        }
        Ok(StoppingRule {
            min_errors,
            max_bits,
        })
    }

    fn satisfied(&self, errors: u64, bits: u64) -> bool {
        (self.min_errors > 0 && errors >= self.min_errors)
            || (self.max_bits > 0 && bits >= self.max_bits)
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            min_errors: 100,
            max_bits: 100_000_000,
        }
    }
}

/// Execution settings shared by every point of a run.
#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub seed: u64,
    /// Units simulated concurrently. Does not affect results.
    pub shards: usize,
    /// Bits per work unit (rounded up per receiver to a block multiple).
    pub unit_bits: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 1,
            shards: 1,
            unit_bits: DEFAULT_UNIT_BITS,
        }
    }
}

impl RunSettings {
    fn validate(&self) -> Result<()> {
        if self.shards < 1 {
            return Err(Error::SimConfig("shards must be >= 1".into()));
        }
        if self.unit_bits < 1 {
            return Err(Error::SimConfig("unit_bits must be >= 1".into()));
        }
        Ok(())
    }
}

/// A full sweep: one fading model, a grid of `n_s` values, and a set of
/// receivers measured at every grid point.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub model: FadingModel,
    /// Base channel parameters; `n_s` is replaced by each grid value.
    pub base: ChannelParams,
    pub n_s_grid: Vec<f64>,
    pub receivers: Vec<ReceiverSpec>,
    pub stopping: StoppingRule,
    pub run: RunSettings,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_s_grid.is_empty() {
            return Err(Error::SimConfig("empty n_s grid".into()));
        }
        for &v in &self.n_s_grid {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::SimConfig(format!("invalid n_s value {v}")));
            }
        }
        if self.receivers.is_empty() {
            return Err(Error::SimConfig("no receivers configured".into()));
        }
        for r in &self.receivers {
            r.validate()?;
        }
        self.run.validate()
    }
}

/// One measured operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub receiver: String,
    pub param: String,
    pub n_s: f64,
    pub n_b: f64,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Normal-approximation 95% confidence half-width.
    pub ci95: f64,
    /// Mean undecided-tail length (trellis receivers only).
    pub mean_d: Option<f64>,
    pub forced_merges: Option<u64>,
    /// Run-log extras.
    pub units: u64,
    /// 95% half-width from the between-unit error variance. Under block
    /// fading this is the honest uncertainty of the point estimate; the
    /// binomial `ci95` is valid only conditional on the gains.
    pub cluster_ci95: Option<f64>,
    pub mean_window: Option<f64>,
    pub depth_hist: Option<Vec<u64>>,
    pub window_hist: Option<Vec<u64>>,
}

/// Reported SNR axis label: `10·log10(n_s / n_b)`. The mapping is a
/// labelling convention only; nothing in the simulation depends on it.
pub fn snr_db_of(n_s: f64, n_b: f64) -> f64 {
    10.0 * (n_s / n_b).log10()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Independent stream for (seed, point, unit, lane). Lane 0 drives bits
/// and counts, lane 1 the gain process.
fn unit_rng(seed: u64, point: u64, unit: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed) ^ splitmix64(point.wrapping_add(1)));
    rng.set_stream(unit * 4 + lane);
    rng
}

#[derive(Debug, Clone, Default)]
struct TrellisUnitStats {
    steps: u64,
    sum_depth: u64,
    sum_window: u64,
    forced_merges: u64,
    depth_hist: Vec<u64>,
    window_hist: Vec<u64>,
}

#[derive(Debug, Clone)]
struct UnitResult {
    bits: u64,
    errors: u64,
    trellis: Option<TrellisUnitStats>,
}

fn simulate_unit(
    receiver: &ReceiverSpec,
    model: &FadingModel,
    params: &ChannelParams,
    unit_bits: u64,
    seed: u64,
    point: u64,
    unit: u64,
) -> Result<UnitResult> {
    let mut data_rng = unit_rng(seed, point, unit, 0);
    let mut gains = GainProcess::new(*model, params.l_c, unit_rng(seed, point, unit, 1));

    let mut errors = 0u64;
    let mut h_cur = f64::NAN;
    let mut sampler: Option<SlotSampler> = None;

    match *receiver {
        ReceiverSpec::Genie => {
            for _ in 0..unit_bits {
                let h = gains.sample_gain();
                if h != h_cur {
                    sampler = Some(SlotSampler::new(h, params)?);
                    h_cur = h;
                }
                let bit = data_rng.random::<bool>() as u8;
                let count = sampler.as_ref().unwrap().sample(bit, &mut data_rng);
                if genie_detect(count, h, params) != bit {
                    errors += 1;
                }
            }
            Ok(UnitResult {
                bits: unit_bits,
                errors,
                trellis: None,
            })
        }
        ReceiverSpec::Fixed { threshold } => {
            for _ in 0..unit_bits {
                let h = gains.sample_gain();
                if h != h_cur {
                    sampler = Some(SlotSampler::new(h, params)?);
                    h_cur = h;
                }
                let bit = data_rng.random::<bool>() as u8;
                let count = sampler.as_ref().unwrap().sample(bit, &mut data_rng);
                if fixed_threshold_detect(count, threshold) != bit {
                    errors += 1;
                }
            }
            Ok(UnitResult {
                bits: unit_bits,
                errors,
                trellis: None,
            })
        }
        ReceiverSpec::Msd { block_len } | ReceiverSpec::Brute { block_len } => {
            debug_assert_eq!(unit_bits % block_len as u64, 0);
            let exhaustive = matches!(receiver, ReceiverSpec::Brute { .. });
            let mut bits_buf = vec![0u8; block_len];
            let mut counts_buf = vec![0u64; block_len];
            let blocks = unit_bits / block_len as u64;
            for _ in 0..blocks {
                for i in 0..block_len {
                    let h = gains.sample_gain();
                    if h != h_cur {
                        sampler = Some(SlotSampler::new(h, params)?);
                        h_cur = h;
                    }
                    let bit = data_rng.random::<bool>() as u8;
                    bits_buf[i] = bit;
                    counts_buf[i] = sampler.as_ref().unwrap().sample(bit, &mut data_rng);
                }
                let decision = if exhaustive {
                    brute_force_detect(&counts_buf, params.n_b)?
                } else {
                    msd_detect(&counts_buf, params.n_b)
                };
                errors += decision
                    .bits
                    .iter()
                    .zip(&bits_buf)
                    .filter(|(a, b)| a != b)
                    .count() as u64;
            }
            Ok(UnitResult {
                bits: unit_bits,
                errors,
                trellis: None,
            })
        }
        ReceiverSpec::Trellis { l_m, l } => {
            let mut decoder = TrellisDecoder::new(TrellisConfig::new(l_m, l)?, params.n_b)?;
            let mut truth: VecDeque<u8> = VecDeque::with_capacity(l + 1);
            let mut emitted: Vec<u8> = Vec::with_capacity(l + 1);
            for _ in 0..unit_bits {
                let h = gains.sample_gain();
                if h != h_cur {
                    sampler = Some(SlotSampler::new(h, params)?);
                    h_cur = h;
                }
                let bit = data_rng.random::<bool>() as u8;
                let count = sampler.as_ref().unwrap().sample(bit, &mut data_rng);
                truth.push_back(bit);
                emitted.clear();
                decoder.step_into(count, &mut emitted);
                for &dec in &emitted {
                    let sent = truth.pop_front().expect("decision per transmitted bit");
                    if dec != sent {
                        errors += 1;
                    }
                }
            }
            for dec in decoder.flush() {
                let sent = truth.pop_front().expect("decision per transmitted bit");
                if dec != sent {
                    errors += 1;
                }
            }
            debug_assert!(truth.is_empty());
            let stats = decoder.stats();
            Ok(UnitResult {
                bits: unit_bits,
                errors,
                trellis: Some(TrellisUnitStats {
                    steps: stats.steps,
                    sum_depth: stats.sum_depth,
                    sum_window: stats.sum_window,
                    forced_merges: stats.forced_merges,
                    depth_hist: stats.depth_hist.clone(),
                    window_hist: stats.window_hist.clone(),
                }),
            })
        }
    }
}

fn round_up_to_multiple(v: u64, m: u64) -> u64 {
    v.div_ceil(m) * m
}

/// Measure one operating point. Deterministic in
/// `(seed, point_index, unit_bits)`; the shard count only sets how many
/// units run concurrently.
pub fn run_ber_point(
    receiver: &ReceiverSpec,
    model: &FadingModel,
    params: &ChannelParams,
    stopping: &StoppingRule,
    run: &RunSettings,
    point_index: u64,
) -> Result<BerPoint> {
    receiver.validate()?;
    run.validate()?;
    StoppingRule::new(stopping.min_errors, stopping.max_bits)?;

    let unit_bits = round_up_to_multiple(run.unit_bits, receiver.block_multiple());
    let mut bits = 0u64;
    let mut errors = 0u64;
    let mut units = 0u64;
    let mut err_sq_sum = 0.0f64;
    let mut trellis_acc: Option<TrellisUnitStats> = None;

    let mut next_unit = 0u64;
    'outer: loop {
        let wave: Vec<u64> = (0..run.shards as u64).map(|i| next_unit + i).collect();
        next_unit += run.shards as u64;
        let results: Vec<Result<UnitResult>> = wave
            .par_iter()
            .map(|&u| simulate_unit(receiver, model, params, unit_bits, run.seed, point_index, u))
            .collect();
        for res in results {
            let res = res?;
            bits += res.bits;
            errors += res.errors;
            units += 1;
            err_sq_sum += (res.errors as f64) * (res.errors as f64);
            if let Some(t) = res.trellis {
                match &mut trellis_acc {
                    None => trellis_acc = Some(t),
                    Some(acc) => {
                        acc.steps += t.steps;
                        acc.sum_depth += t.sum_depth;
                        acc.sum_window += t.sum_window;
                        acc.forced_merges += t.forced_merges;
                        for (a, b) in acc.depth_hist.iter_mut().zip(&t.depth_hist) {
                            *a += b;
                        }
                        for (a, b) in acc.window_hist.iter_mut().zip(&t.window_hist) {
                            *a += b;
                        }
                    }
                }
            }
            if stopping.satisfied(errors, bits) {
                break 'outer;
            }
        }
    }

    let ber = errors as f64 / bits as f64;
    let ci95 = 1.96 * (ber * (1.0 - ber) / bits as f64).sqrt();
    let cluster_ci95 = if units >= 2 {
        let u = units as f64;
        let mean_e = errors as f64 / u;
        let var_e = ((err_sq_sum - u * mean_e * mean_e) / (u - 1.0)).max(0.0);
        Some(1.96 * (var_e * u).sqrt() / bits as f64)
    } else {
        None
    };
    Ok(BerPoint {
        receiver: receiver.id().to_string(),
        param: receiver.param_string(),
        n_s: params.n_s,
        n_b: params.n_b,
        snr_db: snr_db_of(params.n_s, params.n_b),
        bits,
        errors,
        ber,
        ci95,
        mean_d: trellis_acc
            .as_ref()
            .map(|t| t.sum_depth as f64 / t.steps as f64),
        forced_merges: trellis_acc.as_ref().map(|t| t.forced_merges),
        units,
        cluster_ci95,
        mean_window: trellis_acc
            .as_ref()
            .map(|t| t.sum_window as f64 / t.steps as f64),
        depth_hist: trellis_acc.as_ref().map(|t| t.depth_hist.clone()),
        window_hist: trellis_acc.map(|t| t.window_hist),
    })
}

/// Run every receiver at every grid value. Rows are ordered by
/// (receiver, grid value).
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<BerPoint>> {
    config.validate()?;
    let grid_len = config.n_s_grid.len() as u64;
    let mut rows = Vec::with_capacity((grid_len as usize) * config.receivers.len());
    for (r_ix, receiver) in config.receivers.iter().enumerate() {
        for (g_ix, &n_s) in config.n_s_grid.iter().enumerate() {
            let params = config.base.with_n_s(n_s)?;
            let point_index = r_ix as u64 * grid_len + g_ix as u64;
            rows.push(run_ber_point(
                receiver,
                &config.model,
                &params,
                &config.stopping,
                &config.run,
                point_index,
            )?);
        }
    }
    Ok(rows)
}

/// Genie-bound bit error probability: the gain-average of the conditional
/// genie error probability. Exact for the constant model; Monte Carlo
/// over `n_gain_samples` draws otherwise, deterministic in `seed`.
pub fn genie_bep_semi_analytic(
    model: &FadingModel,
    params: &ChannelParams,
    n_gain_samples: u64,
    seed: u64,
) -> f64 {
    genie_bep_semi_analytic_with_se(model, params, n_gain_samples, seed).0
}

/// Same as [`genie_bep_semi_analytic`], also returning the standard error
/// of the gain average (zero for the constant model).
pub fn genie_bep_semi_analytic_with_se(
    model: &FadingModel,
    params: &ChannelParams,
    n_gain_samples: u64,
    seed: u64,
) -> (f64, f64) {
    assert!(n_gain_samples >= 1, "need at least one gain sample");
    if let FadingModel::Constant { h } = model {
        return (genie_bep_given_h(*h, params), 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x6765_6e69_655f_6264));
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n_gain_samples {
        let bep = genie_bep_given_h(model.sample(&mut rng), params);
        sum += bep;
        sum2 += bep * bep;
    }
    let n = n_gain_samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}
