//! Embedded end-to-end self checks, runnable from the CLI.
//!
//! Each check is a cheap, deterministic re-verification of a core
//! correctness property: the fast block search against the exhaustive
//! oracle, metric spot values, fading-sampler moments, and the genie
//! receiver against its semi-analytic error probability. The hidden fault
//! injection cripples the block search so the oracle check demonstrably
//! fails (a negative control for this harness itself).

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{si_of_gamma_gamma, ChannelParams, FadingModel};
use crate::detectors::{brute_force_detect, genie_bep_given_h, msd_detect_impl};
use crate::metric::{log_metric, WindowStats};
use crate::sim::{run_ber_point, ReceiverSpec, RunSettings, StoppingRule};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
}

impl CheckResult {
    fn new(name: &'static str, pass: bool, details: String) -> Self {
        CheckResult {
            name,
            pass,
            details,
        }
    }
}

/// Run all checks. `quick` shrinks sample sizes; `inject_fault` flips the
/// block-search internals to prove the oracle check can fail.
pub fn run_validation(quick: bool, inject_fault: bool) -> Vec<CheckResult> {
    vec![
        check_metric_spot_values(),
        check_msd_against_oracle(quick, inject_fault),
        check_fading_moments(quick),
        check_gamma_gamma_inversion(),
        check_genie_against_semi_analytic(quick),
    ]
}

fn check_metric_spot_values() -> CheckResult {
    let cases = [
        (WindowStats::new(2, 5), 1.0, 5.0 * 2.5f64.ln() - 3.0),
        (WindowStats::new(1, 0), 0.5, 0.5),
        (WindowStats::new(0, 0), 1.0, 0.0),
        (WindowStats::new(3, 3), 1.0, 0.0),
    ];
    for (stats, n_b, expect) in cases {
        let got = log_metric(stats, n_b);
        if (got - expect).abs() > 1e-12 {
            return CheckResult::new(
                "metric-spot-values",
                false,
                format!("log_metric({stats:?}, {n_b}) = {got}, expected {expect}"),
            );
        }
    }
    CheckResult::new("metric-spot-values", true, "4 fixed points exact".into())
}

fn check_msd_against_oracle(quick: bool, inject_fault: bool) -> CheckResult {
    let blocks_per_len = if quick { 500 } else { 10_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c_ac1e);
    let mut checked = 0u64;
    for &l in &[2usize, 4, 8, 12] {
        for _ in 0..blocks_per_len {
            let n_b = [0.3, 1.0, 3.0][rng.random_range(0..3)];
            let n_s: f64 = rng.random_range(0.0..25.0);
            let h = rng.random_range(-2.5..1.0f64).exp();
            let params = ChannelParams::new(n_s, n_b, 1).unwrap();
            let counts: Vec<u64> = (0..l)
                .map(|_| {
                    let bit = rng.random::<bool>() as u8;
                    crate::channel::transmit_slot(bit, h, &params, &mut rng).unwrap()
                })
                .collect();
            let fast = msd_detect_impl(&counts, n_b, inject_fault);
            let slow = brute_force_detect(&counts, n_b).unwrap();
            let tol = 1e-9 * slow.log_metric.abs().max(1.0);
            if (fast.log_metric - slow.log_metric).abs() > tol {
                return CheckResult::new(
                    "msd-equals-exhaustive",
                    false,
                    format!(
                        "metric mismatch on {counts:?} (n_b={n_b}): {} vs {}",
                        fast.log_metric, slow.log_metric
                    ),
                );
            }
            checked += 1;
        }
    }
    CheckResult::new(
        "msd-equals-exhaustive",
        true,
        format!("{checked} random blocks, L in {{2,4,8,12}}"),
    )
}

fn check_fading_moments(quick: bool) -> CheckResult {
    let n = if quick { 200_000 } else { 1_000_000 };
    let cases = [
        ("lognormal", FadingModel::lognormal_from_si(0.5).unwrap(), 0.5),
        (
            "gammagamma",
            FadingModel::gamma_gamma_from_si(1.38).unwrap(),
            1.38,
        ),
    ];
    let mut details = String::new();
    for (ix, (name, model, si_target)) in cases.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xfad_e + ix as u64);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let h = model.sample(&mut rng);
            sum += h;
            sum2 += h * h;
        }
        let mean = sum / n as f64;
        let si = (sum2 / n as f64) / (mean * mean) - 1.0;
        // Tolerances widen at the quick sample size.
        let scale = if quick { 2.5 } else { 1.0 };
        if (mean - 1.0).abs() > 0.01 * scale {
            return CheckResult::new(
                "fading-sampler-moments",
                false,
                format!("{name}: sample mean {mean} not within tolerance of 1"),
            );
        }
        if (si - si_target).abs() > 0.03 * si_target * scale {
            return CheckResult::new(
                "fading-sampler-moments",
                false,
                format!("{name}: sample S.I. {si} vs target {si_target}"),
            );
        }
        details.push_str(&format!("{name}: mean={mean:.4} si={si:.4}; "));
    }
    CheckResult::new("fading-sampler-moments", true, details)
}

fn check_gamma_gamma_inversion() -> CheckResult {
    match FadingModel::gamma_gamma_from_si(1.38).unwrap() {
        FadingModel::GammaGamma { alpha, beta } => {
            let si = si_of_gamma_gamma(alpha, beta).unwrap();
            let pass = (si - 1.38).abs() < 1e-9;
            CheckResult::new(
                "gamma-gamma-inversion",
                pass,
                format!("alpha={alpha:.6} beta={beta:.6} si={si:.12}"),
            )
        }
        _ => unreachable!(),
    }
}

fn check_genie_against_semi_analytic(quick: bool) -> CheckResult {
    let bits = if quick { 200_000 } else { 1_000_000 };
    let params = ChannelParams::new(10.0, 1.0, 1).unwrap();
    let model = FadingModel::constant(1.0).unwrap();
    let expect = genie_bep_given_h(1.0, &params);
    let point = run_ber_point(
        &ReceiverSpec::Genie,
        &model,
        &params,
        &StoppingRule::new(0, bits).unwrap(),
        &RunSettings {
            seed: 0x9e11e,
            shards: 2,
            unit_bits: bits / 4,
        },
        0,
    );
    match point {
        Ok(p) => {
            let sigma = (expect * (1.0 - expect) / p.bits as f64).sqrt();
            let pass = (p.ber - expect).abs() < 3.0 * sigma;
            CheckResult::new(
                "genie-mc-vs-semi-analytic",
                pass,
                format!(
                    "MC {:.5e} vs analytic {:.5e} over {} bits (3 sigma = {:.2e})",
                    p.ber,
                    expect,
                    p.bits,
                    3.0 * sigma
                ),
            )
        }
        Err(e) => CheckResult::new("genie-mc-vs-semi-analytic", false, e.to_string()),
    }
}
