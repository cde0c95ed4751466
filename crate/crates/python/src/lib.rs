//! Python bindings for the pcfso core library.
//!
//! Exposes the fading models, channel sampling, the window metric, the
//! block detectors, the streaming trellis decoder and the Monte Carlo
//! harness. Build with `cargo build -p pcfso-py --release`; the produced
//! `libpcfso_py.so` imports as module `pcfso_py` once renamed to
//! `pcfso_py.so` (see python/smoke_test.py).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcfso::channel::{si_of_gamma_gamma, transmit_slot};
use pcfso::sim::{ReceiverSpec, RunSettings};
use pcfso::{
    brute_force_detect, fixed_threshold_detect, genie_bep_given_h, genie_detect, log_metric,
    msd_detect, run_ber_point, ChannelParams as CoreParams, FadingModel as CoreModel,
    GainProcess, StoppingRule, TrellisConfig, TrellisDecoder as CoreDecoder, WindowStats,
};

fn to_py_err(e: pcfso::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Bit vectors cross into Python as lists of 0/1 ints (a bare Vec<u8>
/// would convert to `bytes`).
fn bits_to_list(bits: &[u8]) -> Vec<u32> {
    bits.iter().map(|&b| b as u32).collect()
}

/// Unit-mean fading model (constant / log-normal / gamma-gamma).
#[pyclass(name = "FadingModel", module = "pcfso_py", from_py_object)]
#[derive(Clone)]
struct PyFadingModel {
    inner: CoreModel,
}

#[pymethods]
impl PyFadingModel {
    /// No fading: gain fixed at `h`.
    #[staticmethod]
    fn constant(h: f64) -> PyResult<Self> {
        Ok(PyFadingModel {
            inner: CoreModel::constant(h).map_err(to_py_err)?,
        })
    }

    /// Log-normal fading with the given scintillation index.
    #[staticmethod]
    fn lognormal(si: f64) -> PyResult<Self> {
        Ok(PyFadingModel {
            inner: CoreModel::lognormal_from_si(si).map_err(to_py_err)?,
        })
    }

    /// Gamma-Gamma fading with explicit shapes.
    #[staticmethod]
    fn gamma_gamma(alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(PyFadingModel {
            inner: CoreModel::gamma_gamma(alpha, beta).map_err(to_py_err)?,
        })
    }

    /// Gamma-Gamma fading with the given scintillation index.
    #[staticmethod]
    fn gamma_gamma_from_si(si: f64) -> PyResult<Self> {
        Ok(PyFadingModel {
            inner: CoreModel::gamma_gamma_from_si(si).map_err(to_py_err)?,
        })
    }

    /// Analytic scintillation index of the model.
    fn scintillation_index(&self) -> f64 {
        self.inner.scintillation_index()
    }

    /// Draw `n` gain samples with a seeded generator.
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.inner.sample(&mut rng)).collect()
    }

    /// Draw a block-constant gain sequence: `n` slots with coherence
    /// length `l_c`.
    fn sample_gain_sequence(&self, n: usize, l_c: u64, seed: u64) -> PyResult<Vec<f64>> {
        if l_c < 1 {
            return Err(PyValueError::new_err("l_c must be >= 1"));
        }
        let mut process = GainProcess::new(self.inner, l_c, ChaCha8Rng::seed_from_u64(seed));
        Ok((0..n).map(|_| process.sample_gain()).collect())
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Channel count parameters: `n_s`, `n_b`, coherence length `l_c`.
#[pyclass(name = "ChannelParams", module = "pcfso_py", from_py_object)]
#[derive(Clone)]
struct PyChannelParams {
    inner: CoreParams,
}

#[pymethods]
impl PyChannelParams {
    #[new]
    #[pyo3(signature = (n_s, n_b, l_c=10_000))]
    fn new(n_s: f64, n_b: f64, l_c: u64) -> PyResult<Self> {
        Ok(PyChannelParams {
            inner: CoreParams::new(n_s, n_b, l_c).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n_s(&self) -> f64 {
        self.inner.n_s
    }

    #[getter]
    fn n_b(&self) -> f64 {
        self.inner.n_b
    }

    #[getter]
    fn l_c(&self) -> u64 {
        self.inner.l_c
    }

    /// Simulate received counts for the given bits at a fixed gain.
    fn transmit(&self, bits: Vec<u8>, h: f64, seed: u64) -> PyResult<Vec<u64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        bits.into_iter()
            .map(|bit| {
                if bit > 1 {
                    return Err(PyValueError::new_err("bits must be 0 or 1"));
                }
                transmit_slot(bit, h, &self.inner, &mut rng).map_err(to_py_err)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Log-domain window metric from (n_on, r_on) against background n_b.
#[pyfunction(name = "log_metric")]
fn py_log_metric(n_on: u64, r_on: u64, n_b: f64) -> PyResult<f64> {
    if !(n_b > 0.0) {
        return Err(PyValueError::new_err("n_b must be > 0"));
    }
    Ok(log_metric(WindowStats::new(n_on, r_on), n_b))
}

/// Genie-aided per-symbol decision with known gain.
#[pyfunction(name = "genie_detect")]
fn py_genie_detect(count: u64, h: f64, params: &PyChannelParams) -> u8 {
    genie_detect(count, h, &params.inner)
}

/// Conditional genie bit error probability at gain `h`.
#[pyfunction(name = "genie_bep_given_h")]
fn py_genie_bep_given_h(h: f64, params: &PyChannelParams) -> f64 {
    genie_bep_given_h(h, &params.inner)
}

/// Gain-averaged genie bound for a fading model.
#[pyfunction(name = "genie_bep_semi_analytic")]
#[pyo3(signature = (model, params, n_gain_samples=1_000_000, seed=1))]
fn py_genie_bep_semi_analytic(
    model: &PyFadingModel,
    params: &PyChannelParams,
    n_gain_samples: u64,
    seed: u64,
) -> f64 {
    pcfso::genie_bep_semi_analytic(&model.inner, &params.inner, n_gain_samples, seed)
}

/// Exhaustive block search; returns (bits, log_metric).
#[pyfunction(name = "brute_force_detect")]
fn py_brute_force_detect(counts: Vec<u64>, n_b: f64) -> PyResult<(Vec<u32>, f64)> {
    let d = brute_force_detect(&counts, n_b).map_err(to_py_err)?;
    Ok((bits_to_list(&d.bits), d.log_metric))
}

/// Sort-based block detection; returns (bits, log_metric).
#[pyfunction(name = "msd_detect")]
fn py_msd_detect(counts: Vec<u64>, n_b: f64) -> PyResult<(Vec<u32>, f64)> {
    if !(n_b > 0.0) {
        return Err(PyValueError::new_err("n_b must be > 0"));
    }
    let d = msd_detect(&counts, n_b);
    Ok((bits_to_list(&d.bits), d.log_metric))
}

/// Fixed-threshold slot decision.
#[pyfunction(name = "fixed_threshold_detect")]
fn py_fixed_threshold_detect(count: u64, threshold: f64) -> PyResult<u8> {
    if !(threshold > 0.0) {
        return Err(PyValueError::new_err("threshold must be > 0"));
    }
    Ok(fixed_threshold_detect(count, threshold))
}

/// Scintillation index of a unit-mean Gamma-Gamma law.
#[pyfunction(name = "si_of_gamma_gamma")]
fn py_si_of_gamma_gamma(alpha: f64, beta: f64) -> PyResult<f64> {
    si_of_gamma_gamma(alpha, beta).map_err(to_py_err)
}

/// Streaming two-survivor trellis decoder with selective store.
#[pyclass(name = "TrellisDecoder", module = "pcfso_py")]
struct PyTrellisDecoder {
    inner: CoreDecoder,
}

#[pymethods]
impl PyTrellisDecoder {
    #[new]
    #[pyo3(signature = (n_b, l_m, l=20))]
    fn new(n_b: f64, l_m: usize, l: usize) -> PyResult<Self> {
        let config = TrellisConfig::new(l_m, l).map_err(to_py_err)?;
        Ok(PyTrellisDecoder {
            inner: CoreDecoder::new(config, n_b).map_err(to_py_err)?,
        })
    }

    /// Feed one received count; returns the newly final decisions.
    fn step(&mut self, count: u64) -> Vec<u32> {
        bits_to_list(&self.inner.step(count))
    }

    /// Feed many counts; returns all decisions they finalized.
    fn step_many(&mut self, counts: Vec<u64>) -> Vec<u32> {
        let mut out = Vec::with_capacity(counts.len());
        for c in counts {
            self.inner.step_into(c, &mut out);
        }
        bits_to_list(&out)
    }

    /// Emit the undecided tail and reset to a cold start (keeping the
    /// selective store and statistics).
    fn flush(&mut self) -> Vec<u32> {
        bits_to_list(&self.inner.flush())
    }

    /// Current undecided tail length d.
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    /// Decoder statistics as a dict.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats();
        let d = PyDict::new(py);
        d.set_item("steps", s.steps)?;
        d.set_item("emitted", s.emitted)?;
        d.set_item("ones_emitted", s.ones_emitted)?;
        d.set_item("forced_merges", s.forced_merges)?;
        d.set_item("metric_evals", s.metric_evals)?;
        d.set_item("mean_depth", s.mean_depth())?;
        d.set_item("mean_window", s.mean_window())?;
        d.set_item("depth_hist", s.depth_hist.clone())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let c = self.inner.config();
        format!(
            "TrellisDecoder(l_m={}, l={}, depth={})",
            c.l_m,
            c.l,
            self.inner.depth()
        )
    }
}

fn parse_receiver(spec: &str, l: usize) -> PyResult<ReceiverSpec> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let usize_arg = |a: Option<&str>, what: &str| {
        a.ok_or_else(|| PyValueError::new_err(format!("{what} needs a parameter")))?
            .parse::<usize>()
            .map_err(|_| PyValueError::new_err(format!("bad {what} parameter")))
    };
    match name {
        "genie" => Ok(ReceiverSpec::Genie),
        "msd" => Ok(ReceiverSpec::Msd {
            block_len: usize_arg(arg, "msd")?,
        }),
        "brute" => Ok(ReceiverSpec::Brute {
            block_len: usize_arg(arg, "brute")?,
        }),
        "trellis" => Ok(ReceiverSpec::Trellis {
            l_m: usize_arg(arg, "trellis")?,
            l,
        }),
        "fixed" => {
            let threshold = arg
                .ok_or_else(|| PyValueError::new_err("fixed needs a threshold"))?
                .parse::<f64>()
                .map_err(|_| PyValueError::new_err("bad fixed threshold"))?;
            Ok(ReceiverSpec::Fixed { threshold })
        }
        other => Err(PyValueError::new_err(format!("unknown receiver `{other}`"))),
    }
}

/// Measure one BER point. `receiver` uses the CLI syntax, e.g. "genie",
/// "msd:4", "trellis:8", "fixed:5.5". Returns a dict of the point fields.
#[pyfunction(name = "run_ber_point")]
#[pyo3(signature = (model, params, receiver, min_errors=100, max_bits=100_000_000,
                    seed=1, shards=1, unit_bits=1_048_576, l=20))]
#[allow(clippy::too_many_arguments)]
fn py_run_ber_point<'py>(
    py: Python<'py>,
    model: &PyFadingModel,
    params: &PyChannelParams,
    receiver: &str,
    min_errors: u64,
    max_bits: u64,
    seed: u64,
    shards: usize,
    unit_bits: u64,
    l: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = parse_receiver(receiver, l)?;
    let stopping = StoppingRule::new(min_errors, max_bits).map_err(to_py_err)?;
    let run = RunSettings {
        seed,
        shards,
        unit_bits,
    };
    let point = run_ber_point(&spec, &model.inner, &params.inner, &stopping, &run, 0)
        .map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("receiver", &point.receiver)?;
    d.set_item("param", &point.param)?;
    d.set_item("n_s", point.n_s)?;
    d.set_item("n_b", point.n_b)?;
    d.set_item("snr_db", point.snr_db)?;
    d.set_item("bits", point.bits)?;
    d.set_item("errors", point.errors)?;
    d.set_item("ber", point.ber)?;
    d.set_item("ci95", point.ci95)?;
    d.set_item("mean_d", point.mean_d)?;
    d.set_item("forced_merges", point.forced_merges)?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn receiver_specs_parse_like_the_cli() {
        assert_eq!(parse_receiver("genie", 20).unwrap(), ReceiverSpec::Genie);
        assert_eq!(
            parse_receiver("msd:4", 20).unwrap(),
            ReceiverSpec::Msd { block_len: 4 }
        );
        assert_eq!(
            parse_receiver("trellis:8", 12).unwrap(),
            ReceiverSpec::Trellis { l_m: 8, l: 12 }
        );
        assert_eq!(
            parse_receiver("fixed:5.5", 20).unwrap(),
            ReceiverSpec::Fixed { threshold: 5.5 }
        );
        assert!(parse_receiver("trellis", 20).is_err());
        assert!(parse_receiver("warp:1", 20).is_err());
    }

    #[test]
    fn bit_lists_are_plain_ints() {
        assert_eq!(bits_to_list(&[1, 0, 1]), vec![1u32, 0, 1]);
    }
}

#[pymodule]
fn pcfso_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyFadingModel>()?;
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PyTrellisDecoder>()?;
    m.add_function(wrap_pyfunction!(py_log_metric, m)?)?;
    m.add_function(wrap_pyfunction!(py_genie_detect, m)?)?;
    m.add_function(wrap_pyfunction!(py_genie_bep_given_h, m)?)?;
    m.add_function(wrap_pyfunction!(py_genie_bep_semi_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(py_brute_force_detect, m)?)?;
    m.add_function(wrap_pyfunction!(py_msd_detect, m)?)?;
    m.add_function(wrap_pyfunction!(py_fixed_threshold_detect, m)?)?;
    m.add_function(wrap_pyfunction!(py_si_of_gamma_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_ber_point, m)?)?;
    Ok(())
}
