#!/usr/bin/env python3
"""Compare the compiled kernels against the numpy fallback.

Times the raw kernels (Philox word generation, pair histogram) and two
end-to-end simulations under each backend, and verifies that both
backends produce bit-identical histograms.  Backend selection happens at
import time, so each side runs in a subprocess.

    python3 benchmarks/benchmark_backends.py [--cycles N]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, time
import numpy as np
import photondiode._kernels as K
from photondiode.presets import (reference_source, reference_interferometer,
                                 reference_detector)
from photondiode.montecarlo import simulate_hom, simulate_hbt

cycles = int({cycles})
out = {{"backend": K.backend_name}}

rng = np.random.default_rng(0)
c = [rng.integers(0, 2**32, size=2_000_000, dtype=np.uint32) for _ in range(4)]
t0 = time.perf_counter()
words = K.philox4x32(123, 456, *c)
out["philox_2e6_blocks_s"] = time.perf_counter() - t0
out["philox_checksum"] = int(words[0].sum(dtype=np.uint64))

t1 = np.sort(rng.uniform(0, 2e9, 500_000))
t2 = np.sort(rng.uniform(0, 2e9, 500_000))
t0 = time.perf_counter()
h = K.pair_diff_histogram(t1, t2, -13365.0, 64.0, 417)
out["pair_hist_5e5_events_s"] = time.perf_counter() - t0
out["pair_hist_total"] = int(h.sum())

src = reference_source(background_mean=0.02)
det = reference_detector(dark_rate=2e-6)
t0 = time.perf_counter()
hom = simulate_hom(src, reference_interferometer(), det, cycles, seed=5)
out["simulate_hom_s"] = time.perf_counter() - t0
out["hom_counts"] = int(hom.counts.sum())
t0 = time.perf_counter()
hbt = simulate_hbt(src, det, cycles, seed=6)
out["simulate_hbt_s"] = time.perf_counter() - t0
out["hbt_counts"] = int(hbt.counts.sum())
print(json.dumps(out))
"""


def run_backend(name: str, cycles: int) -> dict:
    env = dict(os.environ, PHOTONDIODE_KERNELS=name)
    proc = subprocess.run(
        [sys.executable, "-c", _WORKER.format(cycles=cycles)],
        env=env, capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"{name} backend failed:\n{proc.stderr}")
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--cycles", type=int, default=200_000)
    args = ap.parse_args()

    results = []
    for name in ("python", "compiled"):
        try:
            results.append(run_backend(name, args.cycles))
        except (RuntimeError, ImportError) as exc:
            print(f"skipping {name}: {exc}")
    if len(results) < 2:
        print("only one backend available; no comparison")
        return 0

    py, cc = results
    keys = ["philox_2e6_blocks_s", "pair_hist_5e5_events_s",
            "simulate_hom_s", "simulate_hbt_s"]
    print(f"{'kernel':28s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for k in keys:
        print(f"{k:28s} {py[k]:10.4f} {cc[k]:10.4f} {py[k] / cc[k]:7.2f}x")
    same = all(py[k] == cc[k] for k in
               ("philox_checksum", "pair_hist_total", "hom_counts", "hbt_counts"))
    print(f"outputs bit-identical across backends: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
