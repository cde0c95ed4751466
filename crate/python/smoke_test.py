#!/usr/bin/env python3
"""Smoke test for the pcfso_py extension module.

Builds nothing itself: run `cargo build -p pcfso-py --release` (or debug)
first. The script locates the compiled cdylib under target/, exposes it as
an importable module and drives the main types end to end.

Usage: python3 python/smoke_test.py
"""

import math
import os
import shutil
import sys
import tempfile

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_extension():
    candidates = [
        os.path.join(REPO_ROOT, "target", profile, name)
        for profile in ("release", "debug")
        for name in ("libpcfso_py.so", "pcfso_py.so", "libpcfso_py.dylib")
    ]
    built = next((p for p in candidates if os.path.exists(p)), None)
    if built is None:
        sys.exit(
            "pcfso_py cdylib not found; run `cargo build -p pcfso-py --release` first"
        )
    stage = tempfile.mkdtemp(prefix="pcfso-py-")
    shutil.copy(built, os.path.join(stage, "pcfso_py.so"))
    sys.path.insert(0, stage)
    import pcfso_py

    return pcfso_py


def approx(a, b, tol):
    return abs(a - b) <= tol


def main():
    m = import_extension()
    print(f"imported pcfso_py {m.__version__}")

    # --- window metric -----------------------------------------------------
    assert approx(m.log_metric(2, 5, 1.0), 5.0 * math.log(2.5) - 3.0, 1e-12)
    assert m.log_metric(0, 0, 1.0) == 0.0
    assert m.log_metric(1, 0, 0.5) == 0.5
    print("log_metric: ok")

    # --- fading models -----------------------------------------------------
    ln = m.FadingModel.lognormal(0.5)
    assert approx(ln.scintillation_index(), 0.5, 1e-12)
    gg = m.FadingModel.gamma_gamma_from_si(1.38)
    assert approx(gg.scintillation_index(), 1.38, 1e-9)
    gains = ln.sample(200_000, seed=7)
    mean = sum(gains) / len(gains)
    assert approx(mean, 1.0, 0.02), f"lognormal mean {mean}"
    seq = ln.sample_gain_sequence(30, l_c=10, seed=3)
    assert len(set(seq[0:10])) == 1 and len(set(seq[10:20])) == 1
    assert seq[0] != seq[10] or seq[10] != seq[20]
    print("fading models: ok")

    # --- channel + genie ---------------------------------------------------
    params = m.ChannelParams(10.0, 1.0, l_c=1)
    assert m.genie_detect(4, 1.0, params) == 0
    assert m.genie_detect(5, 1.0, params) == 1
    bep = m.genie_bep_given_h(1.0, params)
    assert approx(bep, 0.0093822, 5e-7), f"genie bep {bep}"
    bound = m.genie_bep_semi_analytic(
        m.FadingModel.constant(1.0), params, n_gain_samples=10, seed=1
    )
    assert bound == bep
    counts = params.transmit([1, 0, 1, 1, 0], h=1.0, seed=5)
    assert len(counts) == 5 and all(c >= 0 for c in counts)
    print("channel + genie: ok")

    # --- block detectors ---------------------------------------------------
    bits, metric = m.brute_force_detect([9, 0, 1], 1.0)
    assert bits == [1, 0, 0]
    assert approx(metric, 9.0 * math.log(9.0) - 8.0, 1e-9)
    import random

    rng = random.Random(42)
    for _ in range(300):
        block = [rng.randrange(0, 20) for _ in range(rng.choice([2, 4, 8]))]
        nb = rng.choice([0.5, 1.0, 2.0])
        _, fast = m.msd_detect(block, nb)
        _, slow = m.brute_force_detect(block, nb)
        assert approx(fast, slow, 1e-9 * max(1.0, abs(slow))), (block, nb, fast, slow)
    print("block detectors: ok (300 random blocks against the oracle)")

    # --- trellis decoder ---------------------------------------------------
    dec = m.TrellisDecoder(n_b=1.0, l_m=8, l=20)
    sent = [rng.randrange(0, 2) for _ in range(4000)]
    params_hi = m.ChannelParams(50.0, 1.0, l_c=1)
    received = params_hi.transmit(sent, h=1.0, seed=99)
    decoded = dec.step_many(received)
    decoded += dec.flush()
    assert len(decoded) == len(sent)
    errors = sum(1 for a, b in zip(sent[10:], decoded[10:]) if a != b)
    assert errors == 0, f"clean stream decoded with {errors} errors"
    stats = dec.stats()
    assert stats["steps"] == len(sent)
    assert stats["mean_depth"] < 2.5
    print(f"trellis decoder: ok (mean depth {stats['mean_depth']:.3f})")

    # --- BER point ---------------------------------------------------------
    point = m.run_ber_point(
        m.FadingModel.constant(1.0),
        params,
        "genie",
        min_errors=0,
        max_bits=200_000,
        seed=3,
        shards=2,
        unit_bits=50_000,
    )
    sigma = math.sqrt(bep * (1 - bep) / point["bits"])
    assert approx(point["ber"], bep, 4 * sigma), point
    again = m.run_ber_point(
        m.FadingModel.constant(1.0),
        params,
        "genie",
        min_errors=0,
        max_bits=200_000,
        seed=3,
        shards=8,
        unit_bits=50_000,
    )
    assert again == point, "shard count changed the result"
    print(f"run_ber_point: ok (ber {point['ber']:.4e} over {point['bits']} bits)")

    print("smoke test passed")


if __name__ == "__main__":
    main()
