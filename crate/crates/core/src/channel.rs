//! Fading models, block-constant gain processes and the Poisson slot channel.
//!
//! Every fading model is normalized to unit mean gain, so the signal count
//! parameter `n_s` is the mean per-slot signal count averaged over fading.
//! The channel gain is redrawn independently every `l_c` slots (the
//! coherence length) and held constant in between.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};

use crate::error::{Error, Result};

/// Parametric scintillation law for the channel gain `h`, with `E[h] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// No fading; gain is a fixed positive constant.
    Constant { h: f64 },
    /// `h = exp(2x)` with `x ~ N(mu_x, sigma_x2)` and `mu_x = -sigma_x2`,
    /// which makes the mean gain exactly 1.
    LogNormal { mu_x: f64, sigma_x2: f64 },
    /// Product of two independent unit-mean Gamma variates with shapes
    /// `alpha` (large scale) and `beta` (small scale).
    GammaGamma { alpha: f64, beta: f64 },
}

impl FadingModel {
    pub fn constant(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::ParamDomain {
                name: "h",
                value: h,
                requirement: "must be finite and > 0",
            });
        }
        Ok(FadingModel::Constant { h })
    }

    /// Log-normal model with the given scintillation index.
    ///
    /// With `h = exp(2x)`, unit mean forces `mu_x = -sigma_x2` and the
    /// scintillation index is `exp(4 sigma_x2) - 1`, so
    /// `sigma_x2 = ln(1 + si) / 4`.
    pub fn lognormal_from_si(si: f64) -> Result<Self> {
        if !(si > 0.0) || !si.is_finite() {
            return Err(Error::ParamDomain {
                name: "si",
                value: si,
                requirement: "must be finite and > 0",
            });
        }
        let sigma_x2 = (1.0 + si).ln() / 4.0;
        Ok(FadingModel::LogNormal {
            mu_x: -sigma_x2,
            sigma_x2,
        })
    }

    /// Gamma-Gamma model with explicit shape parameters.
    pub fn gamma_gamma(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ParamDomain {
                    name,
                    value: v,
                    requirement: "must be finite and > 0",
                });
            }
        }
        Ok(FadingModel::GammaGamma { alpha, beta })
    }

    /// Gamma-Gamma model with the given scintillation index.
    ///
    /// The two shapes are tied together through the standard
    /// Rytov-variance turbulence-strength parameterization (spherical-wave
    /// constants), and the strength is found by bisection on the rising
    /// branch so that the resulting scintillation index matches `si`.
    pub fn gamma_gamma_from_si(si: f64) -> Result<Self> {
        if !(si > 0.0) || !si.is_finite() {
            return Err(Error::ParamDomain {
                name: "si",
                value: si,
                requirement: "must be finite and > 0",
            });
        }
        let sigma2 = strength_for_si(si)?;
        let (alpha, beta) = shapes_from_strength(sigma2);
        Ok(FadingModel::GammaGamma { alpha, beta })
    }

    /// Analytic scintillation index `E[h^2]/E[h]^2 - 1` of the model.
    pub fn scintillation_index(&self) -> f64 {
        match *self {
            FadingModel::Constant { .. } => 0.0,
            FadingModel::LogNormal { sigma_x2, .. } => (4.0 * sigma_x2).exp_m1(),
            FadingModel::GammaGamma { alpha, beta } => {
                1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta)
            }
        }
    }

    /// Draw one gain realization.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::Constant { h } => h,
            FadingModel::LogNormal { mu_x, sigma_x2 } => {
                let x = Normal::new(mu_x, sigma_x2.sqrt())
                    .expect("validated at construction")
                    .sample(rng);
                (2.0 * x).exp()
            }
            FadingModel::GammaGamma { alpha, beta } => {
                let large = Gamma::new(alpha, 1.0 / alpha)
                    .expect("validated at construction")
                    .sample(rng);
                let small = Gamma::new(beta, 1.0 / beta)
                    .expect("validated at construction")
                    .sample(rng);
                large * small
            }
        }
    }
}

/// Scintillation index of a unit-mean Gamma-Gamma model:
/// `1/alpha + 1/beta + 1/(alpha*beta)`.
pub fn si_of_gamma_gamma(alpha: f64, beta: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::ParamDomain {
                name,
                value: v,
                requirement: "must be finite and > 0",
            });
        }
    }
    Ok(1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta))
}

/// Large- and small-scale log-irradiance variances as functions of the
/// turbulence strength `sigma2` (a Rytov-type variance, spherical-wave
/// constants), and the implied Gamma-Gamma shapes.
pub(crate) fn shapes_from_strength(sigma2: f64) -> (f64, f64) {
    let x = sigma2.powf(1.2); // sigma^(12/5)
    let var_large = 0.49 * sigma2 / (1.0 + 0.56 * x).powf(7.0 / 6.0);
    let var_small = 0.51 * sigma2 / (1.0 + 0.69 * x).powf(5.0 / 6.0);
    (1.0 / var_large.exp_m1(), 1.0 / var_small.exp_m1())
}

fn si_of_strength(sigma2: f64) -> f64 {
    let (alpha, beta) = shapes_from_strength(sigma2);
    1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta)
}

/// Invert `si_of_strength` on its rising branch by bisection.
fn strength_for_si(si: f64) -> Result<f64> {
    const LO: f64 = 1e-12;
    const HI: f64 = 1e4;

    // The scintillation index rises with strength up to a single peak and
    // then slowly decays; locate the peak by ternary search in log-space so
    // the target can be rejected or bracketed on the monotone branch.
    let mut a = LO.ln();
    let mut b = HI.ln();
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if si_of_strength(m1.exp()) < si_of_strength(m2.exp()) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let peak = ((a + b) / 2.0).exp();
    let max_si = si_of_strength(peak);
    if si > max_si {
        return Err(Error::UnattainableSi {
            si,
            searched_lo: LO,
            searched_hi: HI,
            max_si,
        });
    }

    let (mut lo, mut hi) = (LO, peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if si_of_strength(mid) < si {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-slot count parameters of the photon-counting channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Mean signal count per slot at gain 1 (photons).
    pub n_s: f64,
    /// Mean background count per slot (photons).
    pub n_b: f64,
    /// Coherence length: slots per independent gain realization.
    pub l_c: u64,
}

impl ChannelParams {
    pub fn new(n_s: f64, n_b: f64, l_c: u64) -> Result<Self> {
        if !(n_s >= 0.0) || !n_s.is_finite() {
            return Err(Error::ParamDomain {
                name: "n_s",
                value: n_s,
                requirement: "must be finite and >= 0",
            });
        }
        if !(n_b > 0.0) || !n_b.is_finite() {
            return Err(Error::ParamDomain {
                name: "n_b",
                value: n_b,
                requirement: "must be finite and > 0",
            });
        }
        if l_c < 1 {
            return Err(Error::ParamDomain {
                name: "l_c",
                value: l_c as f64,
                requirement: "must be >= 1",
            });
        }
        Ok(ChannelParams { n_s, n_b, l_c })
    }

    pub fn with_n_s(self, n_s: f64) -> Result<Self> {
        ChannelParams::new(n_s, self.n_b, self.l_c)
    }
}

/// Block-constant gain process: one draw of the fading model held for
/// exactly `l_c` consecutive slots.
#[derive(Debug, Clone)]
pub struct GainProcess<R: Rng> {
    model: FadingModel,
    l_c: u64,
    rng: R,
    current: f64,
    remaining: u64,
}

impl<R: Rng> GainProcess<R> {
    pub fn new(model: FadingModel, l_c: u64, rng: R) -> Self {
        assert!(l_c >= 1, "coherence length must be >= 1");
        GainProcess {
            model,
            l_c,
            rng,
            current: 0.0,
            remaining: 0,
        }
    }

    /// Gain for the next slot. Redraws at coherence-block boundaries.
    #[inline]
    pub fn sample_gain(&mut self) -> f64 {
        if self.remaining == 0 {
            self.current = self.model.sample(&mut self.rng);
            self.remaining = self.l_c;
        }
        self.remaining -= 1;
        self.current
    }
}

/// Draw a Poisson count with the given mean. A zero mean yields zero.
#[inline]
pub fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    debug_assert!(mean >= 0.0 && mean.is_finite());
    if mean == 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}

/// Received count for one slot: Poisson with mean `n_s·h·bit + n_b`.
///
/// Rejects unphysical configurations where the mean exceeds 1e9.
#[inline]
pub fn transmit_slot<R: Rng + ?Sized>(
    bit: u8,
    h: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<u64> {
    debug_assert!(bit <= 1, "bit must be 0 or 1");
    debug_assert!(h > 0.0);
    let mean = params.n_s * h * bit as f64 + params.n_b;
    if mean > 1e9 {
        return Err(Error::MeanOverflow { mean });
    }
    Ok(poisson_sample(mean, rng))
}

/// Slot sampler with the two per-gain Poisson laws prebuilt, for tight
/// simulation loops. Draws are identical to [`transmit_slot`] on the same
/// RNG stream.
#[derive(Debug, Clone)]
pub struct SlotSampler {
    on: Poisson<f64>,
    off: Poisson<f64>,
}

impl SlotSampler {
    pub fn new(h: f64, params: &ChannelParams) -> Result<Self> {
        let mean_on = params.n_s * h + params.n_b;
        if mean_on > 1e9 {
            return Err(Error::MeanOverflow { mean: mean_on });
        }
        Ok(SlotSampler {
            on: Poisson::new(mean_on).expect("mean_on > 0"),
            off: Poisson::new(params.n_b).expect("n_b > 0"),
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, bit: u8, rng: &mut R) -> u64 {
        let dist = if bit == 1 { &self.on } else { &self.off };
        dist.sample(rng) as u64
    }
}
