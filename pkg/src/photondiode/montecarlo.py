"""Event-level Monte Carlo of the pulsed diode, interferometer and detectors.

Each drive cycle emits at most one signal photon (jittered packet, realized
phase trajectory) plus Poissonian background photons.  Photons traverse an
unbalanced Mach-Zehnder (random path at the input coupler, fixed delay on
the long arm).  The only arrival alignment that can interfere at the output
coupler in the device geometry (delay matched to the drive period, packets
much shorter than either) is "cycle i via long arm" against "cycle i+1 via
short arm"; such pairs are resolved as two-photon amplitude events, all
other photons route classically.  Detector efficiency, Gaussian timing blur
and dark counts are applied per event, and the histogram of all D1-D2 time
differences inside the configured span is accumulated.

Every random number is a pure function of (seed, stream, cycle, slot)
through a counter-based generator, so histograms are bit-identical for any
partition of cycles across workers or batches.

Two-photon events are sampled exactly, without rejection: writing the four
output channels of the coupler for realized wavefunctions zeta_1, zeta_2
(envelope, chirp and realized diffusion phase), the channel densities at
detection times (x, y) sum to q(x, y) = T a1(x) a2(y) + R a2(x) a1(y)
(T, R the coupler split), which is a two-component mixture of product
envelopes.  Sampling (x, y) from q and then the channel from the exact
conditional probabilities reproduces the joint amplitude-level statistics.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, _rng
from .analytic import Mode
from .core import (
    DriveWaveform,
    EmitterParams,
    GateWindow,
    JitterSpec,
    PhotonPacket,
    ValidationError,
    gated_packet,
)

# signal stream slots (per cycle); normal draws sit on even slots
_S_EMIT, _S_JIT, _S_PATH, _S_ENV, _S_DET, _S_EFF, _S_BLUR = 0, 2, 4, 5, 6, 7, 8
# meeting stream slots (per earlier cycle of the pair)
_M_COMP, _M_X, _M_Y, _M_OUT, _M_PORT = 0, 1, 2, 3, 4
_M_EFF_X, _M_EFF_Y, _M_BLUR_X, _M_BLUR_Y = 5, 6, 8, 10
# background stream: count, then an 8-slot block per photon
_B_COUNT, _B_BASE, _B_STRIDE = 0, 8, 8
_BG_CAP = 64
# dark stream: one count slot per detector, then time slots
_D_BASE, _D_DET_STRIDE = 8, 512
_DARK_CAP = 64

_BATCH = 1 << 16
_PAIR_CHUNK = 4096


@dataclass(frozen=True)
class SourceSim:
    """Pulsed source configuration.

    packet_decay / packet_dephasing override the emitter-derived envelope
    decay (radiative lifetime) and pure-dephasing rate of the emitted
    packets, for operating points where the collected packet is better
    described by its measured coherence than by the bare lifetime.
    """

    emitter: EmitterParams
    waveform: DriveWaveform
    gate: GateWindow
    jitter: JitterSpec
    emission_probability: float = 1.0
    background_mean: float = 0.0
    packet_decay: float | None = None
    packet_dephasing: float | None = None
    # trajectory nodes across the gate; linear interpolation between nodes
    # under-counts phase diffusion at sub-grid lags, bias ~ gamma * h
    phase_grid_points: int = 513

    def __post_init__(self):
        if not (0.0 <= self.emission_probability <= 1.0):
            raise ValidationError("emission_probability must be in [0, 1]")
        if self.background_mean < 0:
            raise ValidationError("background_mean must be nonnegative")
        if self.background_mean > 8:
            raise ValidationError("background_mean above 8 per cycle is not supported")
        if self.gate.t_off > self.waveform.period + 1e-9:
            raise ValidationError("gate must lie within the drive cycle")
        if self.phase_grid_points < 2:
            raise ValidationError("phase_grid_points must be at least 2")

    @property
    def decay(self) -> float:
        return self.emitter.t1_radiative if self.packet_decay is None else self.packet_decay

    @property
    def dephasing(self) -> float:
        return self.emitter.dephasing_rate if self.packet_dephasing is None else self.packet_dephasing

    def packet_template(self) -> PhotonPacket:
        """Canonical per-cycle packet, centered at 0, carrying the Stark chirp."""
        return gated_packet(self.gate, self.decay, center_time=0.0,
                            waveform=self.waveform, params=self.emitter)


@dataclass(frozen=True)
class InterferometerSim:
    """Unbalanced fibre Mach-Zehnder: input split, long-arm delay, output split."""

    delay: float
    split_a: float = 0.5
    split_b: float = 0.5
    mode: Mode = Mode.PARALLEL

    def __post_init__(self):
        if not (0.0 < self.split_a < 1.0 and 0.0 < self.split_b < 1.0):
            raise ValidationError("splitting ratios must be in (0, 1)")
        if self.delay < 0:
            raise ValidationError("delay must be nonnegative")


@dataclass(frozen=True)
class DetectorSim:
    """Detector pair and histogram configuration.

    dark_rate is per detector in counts/ps; timing_sigma the Gaussian
    timing blur per detection; span the full histogram width (defaults to
    13.5 drive periods when unset).
    """

    efficiency: float = 1.0
    dark_rate: float = 0.0
    timing_sigma: float = 200.0
    bin_width: float = 64.0
    span: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.efficiency <= 1.0):
            raise ValidationError("efficiency must be in [0, 1]")
        if self.dark_rate < 0 or self.timing_sigma < 0:
            raise ValidationError("dark_rate and timing_sigma must be nonnegative")
        if self.bin_width <= 0:
            raise ValidationError("bin_width must be positive")

    def histogram_geometry(self, period: float) -> tuple[float, int]:
        span = 13.5 * period if self.span is None else self.span
        if span < 12.0 * period:
            raise ValidationError(
                f"histogram span {span} ps too small to hold +/-6 drive periods"
            )
        nbins = int(round(span / self.bin_width))
        if nbins % 2 == 0:
            nbins += 1
        origin = -0.5 * nbins * self.bin_width
        return origin, nbins


@dataclass(frozen=True)
class CorrelationHistogram:
    """Binned D1-D2 coincidence counts, reproducible from (config, seed)."""

    bin_width: float
    origin: float
    counts: np.ndarray
    cycles_simulated: int
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def bin_starts(self) -> np.ndarray:
        return self.origin + self.bin_width * np.arange(len(self.counts))

    @property
    def bin_centers(self) -> np.ndarray:
        return self.bin_starts + 0.5 * self.bin_width

    def to_csv(self, path) -> None:
        """CSV of (bin_start_ps, counts) plus a JSON metadata sidecar."""
        path = str(path)
        with open(path, "w") as f:
            f.write("bin_start_ps,counts\n")
            for s, c in zip(self.bin_starts, self.counts):
                f.write(f"{s:.12g},{int(c)}\n")
        sidecar = {
            "seed": self.seed,
            "cycles": self.cycles_simulated,
            "bin_width": self.bin_width,
            "origin": self.origin,
            **{k: v for k, v in self.meta.items()},
        }
        with open(path.rsplit(".", 1)[0] + ".meta.json", "w") as f:
            json.dump(sidecar, f, indent=2, sort_keys=True)
            f.write("\n")


def sample_phase_trajectory(gamma_star: float, times: np.ndarray, seed: int,
                            cycle: int = 0) -> np.ndarray:
    """Wiener phase trajectory on a uniform grid, theta(times[0]) = 0.

    Increment variance is 2 * gamma_star * dt per step, the phase-diffusion
    process whose ensemble satisfies <exp(i dtheta(tau))> = exp(-gamma tau).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise ValidationError("trajectory grid needs at least two samples")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
        raise ValidationError("trajectory grid must be uniform")
    if gamma_star < 0:
        raise ValidationError("gamma_star must be nonnegative")
    n = len(times) - 1
    z = _rng.normal_stream(seed, _rng.TRAJECTORY, np.uint64(cycle), n)[0]
    out = np.empty(len(times))
    out[0] = 0.0
    np.cumsum(math.sqrt(2.0 * gamma_star * dt[0]) * z, out=out[1:])
    return out


class _SimContext:
    """Precomputed per-run constants shared by all batches."""

    def __init__(self, source: SourceSim, det: DetectorSim, cycles: int, seed: int,
                 mz: InterferometerSim | None):
        self.source = source
        self.det = det
        self.cycles = int(cycles)
        self.seed = int(seed)
        self.mz = mz
        self.period = source.waveform.period
        self.template = source.packet_template()
        self.sigma_std = source.jitter.sigma_std
        self.gamma = source.dephasing
        self.bg_cdf = _rng.poisson_cdf_table(source.background_mean, _BG_CAP)
        dark_mean = det.dark_rate * self.period
        if dark_mean > 16:
            raise ValidationError("dark_rate implies more than 16 counts per cycle")
        self.dark_cdf = _rng.poisson_cdf_table(dark_mean, _DARK_CAP)
        self.gate_len = source.gate.duration
        # two-photon resolution window: supports within ten coherence times
        self.meet_window = self.gate_len + 20.0 * source.decay
        n = source.phase_grid_points - 1
        self.traj_h = self.gate_len / n
        self.traj_n = n

    def signal_u(self, cyc, slot):
        return _rng.uniforms(self.seed, _rng.SIGNAL, cyc, slot)

    def signal_normal(self, cyc, slot0):
        return _rng.normals(self.seed, _rng.SIGNAL, cyc, slot0)


def _theta_at(ctx: _SimContext, cyc: np.ndarray, local_times: list[np.ndarray]):
    """Realized diffusion phase of each cycle's photon at packet-local times.

    Returns one array per entry of local_times.  The trajectory grid spans
    the gate; evaluation linearly interpolates between grid nodes.
    """
    n, h = ctx.traj_n, ctx.traj_h
    z = _rng.normal_stream(ctx.seed, _rng.TRAJECTORY, cyc, n)
    theta = np.zeros((len(cyc), n + 1))
    np.cumsum(math.sqrt(2.0 * ctx.gamma * h) * z, axis=1, out=theta[:, 1:])
    rows = np.arange(len(cyc))
    out = []
    for u in local_times:
        pos = np.clip(u / h, 0.0, float(n))
        idx = np.minimum(pos.astype(np.int64), n - 1)
        frac = pos - idx
        out.append(theta[rows, idx] * (1.0 - frac) + theta[rows, idx + 1] * frac)
    return out


def _resolve_pairs(ctx: _SimContext, early: np.ndarray, arr_long: np.ndarray,
                   arr_short: np.ndarray):
    """Exact amplitude-level outcome of meeting pairs at the output coupler.

    early holds the earlier cycle index of each pair (owner of the meeting
    draws); arr_long / arr_short the lab arrival times of its packet edges.
    Input 1 of the coupler is the short arm.  Returns detection times and
    detector indices, two per pair.
    """
    tpl = ctx.template
    T = ctx.mz.split_b
    R = 1.0 - T
    times = np.empty((2, len(early)))
    dets = np.empty((2, len(early)), dtype=np.int8)
    for s in range(0, len(early), _PAIR_CHUNK):
        sl = slice(s, min(s + _PAIR_CHUNK, len(early)))
        ci = early[sl]
        a1c, a2c = arr_short[sl], arr_long[sl]  # input-1 and input-2 arrival
        u_comp = _rng.uniforms(ctx.seed, _rng.MEETING, ci, _M_COMP)
        ux = _rng.uniforms(ctx.seed, _rng.MEETING, ci, _M_X)
        uy = _rng.uniforms(ctx.seed, _rng.MEETING, ci, _M_Y)
        comp = u_comp < T
        x = np.where(comp, a1c, a2c) + tpl.sample_emission_time(ux)
        y = np.where(comp, a2c, a1c) + tpl.sample_emission_time(uy)
        a1x, a2x = tpl.intensity(x - a1c), tpl.intensity(x - a2c)
        a1y, a2y = tpl.intensity(y - a1c), tpl.intensity(y - a2c)
        A = a1x * a2y
        B = a2x * a1y
        dphi_x = tpl.phase(x - a1c) - tpl.phase(x - a2c)
        dphi_y = tpl.phase(y - a1c) - tpl.phase(y - a2c)
        if ctx.gamma > 0.0:
            th1x, th1y = _theta_at(ctx, ci + np.uint64(1),
                                   [x - a1c, y - a1c])
            th2x, th2y = _theta_at(ctx, ci, [x - a2c, y - a2c])
            dphi_x = dphi_x + th1x - th2x
            dphi_y = dphi_y + th1y - th2y
        kappa = np.sqrt(a1x * a2x * a1y * a2y) * np.cos(dphi_x - dphi_y)
        q = T * A + R * B
        p_coinc = np.clip((T * T * A + R * R * B - 2.0 * T * R * kappa) / q, 0.0, 1.0)
        coinc = _rng.uniforms(ctx.seed, _rng.MEETING, ci, _M_OUT) < p_coinc
        port = (_rng.uniforms(ctx.seed, _rng.MEETING, ci, _M_PORT) >= 0.5).astype(np.int8)
        times[0, sl] = x
        times[1, sl] = y
        dets[0, sl] = np.where(coinc, 0, port)
        dets[1, sl] = np.where(coinc, 1, port)
    return times, dets


def _detect(ctx: _SimContext, cyc, times, dets, eff_slot, blur_slot, stream):
    """Apply efficiency thinning and timing blur; returns surviving events."""
    keep = _rng.uniforms(ctx.seed, stream, cyc, eff_slot) < ctx.det.efficiency
    if ctx.det.timing_sigma > 0.0:
        times = times + ctx.det.timing_sigma * _rng.normals(ctx.seed, stream, cyc, blur_slot)
    return times[keep], dets[keep]


def _dark_events(ctx: _SimContext, cyc: np.ndarray):
    """Dark counts: Poisson per detector per cycle, uniform in the cycle."""
    times, dets = [], []
    for d in range(2):
        u = _rng.uniforms(ctx.seed, _rng.DARK, cyc, d)
        count = _rng.poisson_counts(u, ctx.dark_cdf)
        for j in range(int(count.max()) if len(count) else 0):
            sel = cyc[count > j]
            ut = _rng.uniforms(ctx.seed, _rng.DARK, sel,
                               _D_BASE + _D_DET_STRIDE * d + j)
            times.append((sel.astype(np.float64) + ut) * ctx.period)
            dets.append(np.full(len(sel), d, dtype=np.int8))
    return times, dets


def _background_events(ctx: _SimContext, cyc: np.ndarray, hom: bool):
    """Background photons, uniform across the gate, classical routing."""
    times, dets = [], []
    u = _rng.uniforms(ctx.seed, _rng.BACKGROUND, cyc, _B_COUNT)
    count = _rng.poisson_counts(u, ctx.bg_cdf)
    t_on = ctx.source.gate.t_on
    for j in range(int(count.max()) if len(count) else 0):
        sel = cyc[count > j]
        base = _B_BASE + _B_STRIDE * j
        ut = _rng.uniforms(ctx.seed, _rng.BACKGROUND, sel, base)
        t = sel.astype(np.float64) * ctx.period + t_on + ut * ctx.gate_len
        if hom:
            long_path = _rng.uniforms(ctx.seed, _rng.BACKGROUND, sel, base + 1) >= ctx.mz.split_a
            t = t + np.where(long_path, ctx.mz.delay, 0.0)
            p_d1 = np.where(long_path, 1.0 - ctx.mz.split_b, ctx.mz.split_b)
        else:
            p_d1 = 0.5
        det = (_rng.uniforms(ctx.seed, _rng.BACKGROUND, sel, base + 2) >= p_d1).astype(np.int8)
        t, det = _detect(ctx, sel, t, det, base + 3, base + 4, _rng.BACKGROUND)
        times.append(t)
        dets.append(det)
    return times, dets


def _hom_batch(ctx: _SimContext, a: int, b: int):
    """Events for cycles [a, b); consults neighbor cycles for pair ownership."""
    lo = max(a - 1, 0)
    hi = min(b + 1, ctx.cycles)
    cyc = np.arange(lo, hi, dtype=np.uint64)
    exists = ctx.signal_u(cyc, _S_EMIT) < ctx.source.emission_probability
    center = (cyc.astype(np.float64) * ctx.period + ctx.source.gate.t_on
              + ctx.sigma_std * ctx.signal_normal(cyc, _S_JIT))
    long_path = ctx.signal_u(cyc, _S_PATH) >= ctx.mz.split_a

    arr_long = center[:-1] + ctx.mz.delay   # earlier cycle via long arm
    arr_short = center[1:]                  # later cycle via short arm
    meet = (exists[:-1] & exists[1:] & long_path[:-1] & ~long_path[1:]
            & (np.abs(arr_long - arr_short) <= ctx.meet_window))
    if ctx.mz.mode is not Mode.PARALLEL:
        meet &= False

    in_pair = np.zeros(len(cyc), dtype=bool)
    in_pair[:-1] |= meet
    in_pair[1:] |= meet

    own = (cyc >= a) & (cyc < b)
    times_out, dets_out = [], []

    sing = exists & ~in_pair & own
    if sing.any():
        sel = cyc[sing]
        t = (center[sing] + np.where(long_path[sing], ctx.mz.delay, 0.0)
             + ctx.template.sample_emission_time(ctx.signal_u(sel, _S_ENV)))
        p_d1 = np.where(long_path[sing], 1.0 - ctx.mz.split_b, ctx.mz.split_b)
        det = (ctx.signal_u(sel, _S_DET) >= p_d1).astype(np.int8)
        t, det = _detect(ctx, sel, t, det, _S_EFF, _S_BLUR, _rng.SIGNAL)
        times_out.append(t)
        dets_out.append(det)

    pair_own = meet & own[:-1]
    if pair_own.any():
        early = cyc[:-1][pair_own]
        ptimes, pdets = _resolve_pairs(ctx, early, arr_long[pair_own],
                                       arr_short[pair_own])
        for k, (eff_s, blur_s) in enumerate(((_M_EFF_X, _M_BLUR_X), (_M_EFF_Y, _M_BLUR_Y))):
            t, det = _detect(ctx, early, ptimes[k], pdets[k], eff_s, blur_s, _rng.MEETING)
            times_out.append(t)
            dets_out.append(det)

    own_cyc = cyc[own]
    if ctx.source.background_mean > 0:
        t, d = _background_events(ctx, own_cyc, hom=True)
        times_out += t
        dets_out += d
    if ctx.det.dark_rate > 0:
        t, d = _dark_events(ctx, own_cyc)
        times_out += t
        dets_out += d
    return times_out, dets_out


def _hbt_batch(ctx: _SimContext, a: int, b: int):
    cyc = np.arange(a, b, dtype=np.uint64)
    exists = ctx.signal_u(cyc, _S_EMIT) < ctx.source.emission_probability
    times_out, dets_out = [], []
    if exists.any():
        sel = cyc[exists]
        center = (sel.astype(np.float64) * ctx.period + ctx.source.gate.t_on
                  + ctx.sigma_std * ctx.signal_normal(sel, _S_JIT))
        t = center + ctx.template.sample_emission_time(ctx.signal_u(sel, _S_ENV))
        det = (ctx.signal_u(sel, _S_DET) >= 0.5).astype(np.int8)
        t, det = _detect(ctx, sel, t, det, _S_EFF, _S_BLUR, _rng.SIGNAL)
        times_out.append(t)
        dets_out.append(det)
    if ctx.source.background_mean > 0:
        t, d = _background_events(ctx, cyc, hom=False)
        times_out += t
        dets_out += d
    if ctx.det.dark_rate > 0:
        t, d = _dark_events(ctx, cyc)
        times_out += t
        dets_out += d
    return times_out, dets_out


def _run(ctx: _SimContext, batch_fn, workers: int, meta: dict) -> CorrelationHistogram:
    if ctx.cycles < 1:
        raise ValidationError("cycles must be at least 1")
    origin, nbins = ctx.det.histogram_geometry(ctx.period)

    def run_range(rng_lo, rng_hi):
        times, dets = [], []
        for a in range(rng_lo, rng_hi, _BATCH):
            t, d = batch_fn(ctx, a, min(a + _BATCH, rng_hi))
            times += t
            dets += d
        return times, dets

    workers = max(1, int(workers))
    bounds = np.linspace(0, ctx.cycles, workers + 1).astype(int)
    if workers == 1:
        parts = [run_range(0, ctx.cycles)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: run_range(*ab),
                                  zip(bounds[:-1], bounds[1:])))
    times = np.concatenate([t for p in parts for t in p[0]] or [np.empty(0)])
    dets = np.concatenate([d for p in parts for d in p[1]] or [np.empty(0, dtype=np.int8)])
    d1 = np.sort(times[dets == 0])
    d2 = np.sort(times[dets == 1])
    counts = _kernels.pair_diff_histogram(d1, d2, origin, ctx.det.bin_width, nbins)
    meta = dict(meta)
    meta.update(n_events_d1=int(len(d1)), n_events_d2=int(len(d2)),
                kernel_backend=_kernels.backend_name)
    return CorrelationHistogram(
        bin_width=ctx.det.bin_width,
        origin=origin,
        counts=counts,
        cycles_simulated=ctx.cycles,
        seed=ctx.seed,
        meta=meta,
    )


def _config_digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def simulate_hom(source: SourceSim, mz: InterferometerSim, det: DetectorSim,
                 cycles: int, seed: int, workers: int = 1) -> CorrelationHistogram:
    """Two-photon interference correlation through the Mach-Zehnder."""
    ctx = _SimContext(source, det, cycles, seed, mz)
    meta = {
        "experiment": "hom",
        "mode": mz.mode.value,
        "period": ctx.period,
        "delay": mz.delay,
        "config_hash": _config_digest({
            "experiment": "hom", "period": ctx.period, "delay": mz.delay,
            "mode": mz.mode.value, "split_a": mz.split_a, "split_b": mz.split_b,
            "decay": source.decay, "gamma": source.dephasing,
            "gate": [source.gate.t_on, source.gate.t_off],
            "sigma_std": source.jitter.sigma_std,
            "emission_probability": source.emission_probability,
            "background_mean": source.background_mean,
            "efficiency": det.efficiency, "dark_rate": det.dark_rate,
            "timing_sigma": det.timing_sigma, "bin_width": det.bin_width,
            "span": det.span, "cycles": int(cycles), "seed": int(seed),
        }),
    }
    return _run(ctx, _hom_batch, workers, meta)


def simulate_hbt(source: SourceSim, det: DetectorSim, cycles: int, seed: int,
                 workers: int = 1) -> CorrelationHistogram:
    """Intensity autocorrelation: one balanced splitter, two detectors."""
    ctx = _SimContext(source, det, cycles, seed, mz=None)
    meta = {
        "experiment": "hbt",
        "period": ctx.period,
        "config_hash": _config_digest({
            "experiment": "hbt", "period": ctx.period,
            "decay": source.decay, "gamma": source.dephasing,
            "gate": [source.gate.t_on, source.gate.t_off],
            "sigma_std": source.jitter.sigma_std,
            "emission_probability": source.emission_probability,
            "background_mean": source.background_mean,
            "efficiency": det.efficiency, "dark_rate": det.dark_rate,
            "timing_sigma": det.timing_sigma, "bin_width": det.bin_width,
            "span": det.span, "cycles": int(cycles), "seed": int(seed),
        }),
    }
    return _run(ctx, _hbt_batch, workers, meta)
