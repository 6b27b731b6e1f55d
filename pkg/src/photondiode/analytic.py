"""Two-photon interference by deterministic quadrature.

For two photons with normalized squared envelopes a1, a2, deterministic
phase profiles phi1, phi2 and shared pure-dephasing rate gamma, the
ensemble-averaged joint coincidence density behind a balanced splitter is

    G(t, tau) = (1/4) [ a1(t) a2(t+tau) + a2(t) a1(t+tau)
                - 2 sqrt(a1(t) a2(t) a1(t+tau) a2(t+tau))
                  * cos(dphi(t) - dphi(t+tau)) * exp(-2 gamma |tau|) ]

with dphi = phi1 - phi2.  The coincidence probability is the double
integral of G; the non-interference part integrates to 1/2 exactly, so
only the interference integral

    I = iint s(u) s(w) cos(dphi(u) - dphi(w)) exp(-2 gamma |u - w|) du dw,
    s = sqrt(a1 a2)

is computed numerically.  Expanding the cosine splits I into two
autocorrelation integrals against an exponential kernel, evaluated with
Simpson weights and FFT correlation on a refining uniform grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    EmitterParams,
    GateWindow,
    JitterSpec,
    PhotonPacket,
    QuadratureError,
    ValidationError,
    DriveWaveform,
    gated_packet,
)


class Mode(enum.Enum):
    PARALLEL = "PARALLEL"
    ORTHOGONAL = "ORTHOGONAL"


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and refinement budget for the interference integral."""

    rel_tol: float = 1e-7
    abs_tol: float = 1e-8
    max_subdivisions: int = 6
    base_points: int = 1024

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValidationError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValidationError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class PairConfig:
    """One interfering photon pair.

    relative_offset shifts packet_b rigidly (envelope and chirp) in time;
    dephasing_rate is the shared pure-dephasing rate of both photons.
    """

    packet_a: PhotonPacket
    packet_b: PhotonPacket
    relative_offset: float = 0.0
    dephasing_rate: float = 0.0
    mode: Mode = Mode.PARALLEL

    def __post_init__(self):
        if self.dephasing_rate < 0:
            raise ValidationError("dephasing_rate must be nonnegative")

    @property
    def shifted_b(self) -> PhotonPacket:
        return self.packet_b.shifted(self.relative_offset)


def _support_end(p: PhotonPacket, eps: float) -> float:
    """Upper edge of the numerically relevant envelope support.

    A gate much longer than the decay is cut at the decay tail too, so
    grids scale with the packet, not the gate.
    """
    tail = p.decay * math.log(1.0 / eps)
    if math.isinf(p.duration):
        return p.center_time + tail
    return p.center_time + min(p.duration, tail)


def _overlap_grid(cfg: PairConfig, n: int, eps: float):
    pa, pb = cfg.packet_a, cfg.shifted_b
    lo = max(pa.center_time, pb.center_time)
    hi = min(_support_end(pa, eps), _support_end(pb, eps))
    if hi <= lo:
        return None
    return np.linspace(lo, hi, n + 1)


def _interference_on_grid(cfg: PairConfig, u: np.ndarray, gamma: float) -> float:
    pa, pb = cfg.packet_a, cfg.shifted_b
    h = u[1] - u[0]
    s = np.sqrt(pa.intensity(u) * pb.intensity(u))
    dphi = pa.phase(u) - pb.phase(u)
    gc = s * np.cos(dphi)
    gs = s * np.sin(dphi)
    n = len(u) - 1
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    w *= h / 3.0
    if gamma == 0.0:
        return float(np.dot(w, gc) ** 2 + np.dot(w, gs) ** 2)
    m = 1 << int(np.ceil(np.log2(2 * n + 2)))
    corr = np.zeros(n + 1)
    for g in (gc, gs):
        fa = np.fft.rfft(w * g, m)
        fb = np.fft.rfft(g, m)
        corr += np.fft.irfft(np.conj(fa) * fb, m)[: n + 1]
    tau = np.arange(n + 1) * h
    integrand = corr * np.exp(-2.0 * gamma * tau)
    wt = np.ones(n + 1)
    wt[1:-1:2] = 4.0
    wt[2:-2:2] = 2.0
    return float(2.0 * np.dot(wt, integrand) * h / 3.0)


def interference_integral(cfg: PairConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """The integral I above; equals the pair visibility in PARALLEL mode.

    Refines the grid until successive estimates agree within tolerance,
    otherwise raises QuadratureError carrying the residual.
    """
    eps = max(min(quad.rel_tol, 1e-6) * 1e-4, 1e-14)
    probe = _overlap_grid(cfg, 2, eps)
    if probe is None:
        return 0.0
    domain = probe[-1] - probe[0]
    # initial spacing must resolve the finest of envelope decay, gate
    # duration and dephasing kernel, not just the truncated domain
    feature = min(cfg.packet_a.decay, cfg.packet_b.decay,
                  cfg.packet_a.duration, cfg.packet_b.duration)
    if cfg.dephasing_rate > 0:
        feature = min(feature, 0.5 / cfg.dephasing_rate)
    n = quad.base_points
    while n * feature < 8.0 * domain and n < (1 << 18):
        n *= 2
    prev = _interference_on_grid(cfg, _overlap_grid(cfg, n, eps), cfg.dephasing_rate)
    resid = math.inf
    for _ in range(quad.max_subdivisions):
        n *= 2
        cur = _interference_on_grid(cfg, _overlap_grid(cfg, n, eps), cfg.dephasing_rate)
        resid = abs(cur - prev)
        if resid <= max(quad.abs_tol, quad.rel_tol * abs(cur)):
            return min(max(cur, 0.0), 1.0)
        prev = cur
    raise QuadratureError("interference integral did not converge", prev, resid)


def _batch_overlap_on_grid(template: PhotonPacket, offsets: np.ndarray, n: int) -> np.ndarray:
    """Pure-envelope visibilities |integral sqrt(a(t) a(t-x)) e^{i dchi}|^2.

    Vectorized over offsets for one shared template with no dephasing.
    Each offset integrates over its own overlap window [|x|, L] in
    template-local time so the envelope edges stay on grid endpoints.
    """
    L = min(template.duration, template.decay * math.log(1e14))
    x = np.abs(offsets)  # overlap depends on |offset| by exchange symmetry
    live = x < min(template.duration, 2.0 * template.decay * math.log(1e14))
    out = np.zeros(len(offsets))
    if not live.any():
        return out
    xl = x[live]
    # the sqrt-product envelope decays with the packet rate; integrate to
    # its tail or the gate edge, whichever is nearer
    width = np.minimum(template.duration - xl, L)
    u = np.linspace(0.0, 1.0, n + 1)
    t = template.center_time + xl[:, None] + width[:, None] * u[None, :]
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    w = w * (width[:, None] / (3.0 * n))
    s = np.sqrt(template.intensity(t) * template.intensity(t - xl[:, None]))
    if template.chirp is None:
        amp2 = np.sum(w * s, axis=1) ** 2
    else:
        dchi = template.phase(t) - template.phase(t - xl[:, None])
        amp2 = (np.sum(w * s * np.cos(dchi), axis=1) ** 2
                + np.sum(w * s * np.sin(dchi), axis=1) ** 2)
    out[live] = amp2
    return out


def visibility_batch(template: PhotonPacket, offsets, dephasing_rate: float,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """pair_visibility for many relative offsets of one packet template.

    Equivalent to evaluating PairConfig(template, template, x, gamma) per
    offset, but shares grids across the batch; the pure-envelope case
    avoids the kernel correlation entirely.
    """
    offsets = np.asarray(offsets, dtype=float)
    if len(offsets) == 0:
        return np.empty(0)
    if dephasing_rate > 0.0:
        return np.array([
            interference_integral(
                PairConfig(template, template, float(x), dephasing_rate, Mode.PARALLEL),
                quad,
            )
            for x in offsets
        ])
    L = min(template.duration, template.decay * math.log(1e14))
    n = 64
    while n * template.decay < 8.0 * L and n < quad.base_points:
        n *= 2
    # converge each offset independently so a value never depends on which
    # other offsets share the batch (callers may split work arbitrarily)
    prev = _batch_overlap_on_grid(template, offsets, n)
    out = np.empty(len(offsets))
    open_idx = np.arange(len(offsets))
    resid = np.inf
    for _ in range(quad.max_subdivisions):
        n *= 2
        cur = _batch_overlap_on_grid(template, offsets[open_idx], n)
        resid = np.abs(cur - prev)
        done = resid <= np.maximum(quad.abs_tol, quad.rel_tol * np.abs(cur))
        out[open_idx[done]] = cur[done]
        open_idx = open_idx[~done]
        if len(open_idx) == 0:
            return np.clip(out, 0.0, 1.0)
        prev = cur[~done]
    raise QuadratureError("batched overlap integral did not converge",
                          float(np.max(prev)), float(np.max(resid)))


def joint_density(cfg: PairConfig, t, tau) -> np.ndarray:
    """Ensemble-averaged joint density G(t, tau); clamped nonnegative.

    Negative excursions beyond floating-point noise indicate a broken
    configuration and raise instead of being clamped silently.
    """
    pa, pb = cfg.packet_a, cfg.shifted_b
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    a1t, a2t = pa.intensity(t), pb.intensity(t)
    a1s, a2s = pa.intensity(t + tau), pb.intensity(t + tau)
    g = a1t * a2s + a2t * a1s
    if cfg.mode is Mode.PARALLEL:
        dphi_t = pa.phase(t) - pb.phase(t)
        dphi_s = pa.phase(t + tau) - pb.phase(t + tau)
        cross = np.sqrt(a1t * a2t * a1s * a2s) * np.cos(dphi_t - dphi_s)
        g = g - 2.0 * cross * np.exp(-2.0 * cfg.dephasing_rate * np.abs(tau))
    g *= 0.25
    if np.any(g < -1e-12 * max(1.0, float(np.max(np.abs(g))))):
        raise ValidationError("joint density went negative; invalid pair configuration")
    return np.maximum(g, 0.0)


def coincidence_probability(cfg: PairConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Probability that the photon pair yields one detection at each output."""
    if cfg.mode is Mode.ORTHOGONAL:
        return 0.5
    return 0.5 * (1.0 - interference_integral(cfg, quad))


def pair_visibility(cfg: PairConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Two-photon interference visibility, 1 - 2 P_c in PARALLEL mode."""
    if cfg.mode is Mode.ORTHOGONAL:
        cfg = PairConfig(cfg.packet_a, cfg.packet_b, cfg.relative_offset,
                         cfg.dephasing_rate, Mode.PARALLEL)
    return interference_integral(cfg, quad)


# ---------------------------------------------------------------------------
# dip curve: jitter-averaged central-peak area vs period mismatch


@dataclass(frozen=True)
class DipCurve:
    """Central-peak area vs drive-period mismatch, with a parameter snapshot."""

    points: tuple[tuple[float, float], ...]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for _, area in self.points:
            if not (-1e-9 <= area <= 0.5 + 1e-9):
                raise ValidationError(f"central area {area} outside [0, 0.5]")

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for d, _ in self.points])

    @property
    def areas(self) -> np.ndarray:
        return np.array([a for _, a in self.points])

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("delta_ps,central_area\n")
            for d, a in self.points:
                f.write(f"{d:.12g},{a:.12g}\n")

    @staticmethod
    def from_csv(path) -> "DipCurve":
        with open(path) as f:
            header = f.readline().strip()
            if header != "delta_ps,central_area":
                raise ValidationError(f"unexpected dip header {header!r}")
            pts = []
            for line in f:
                if line.strip():
                    d, a = line.split(",")
                    pts.append((float(d), float(a)))
        return DipCurve(points=tuple(pts))


_LEGGAUSS_CACHE: dict = {}


def _gauss_legendre_panel(lo, hi, n=24):
    if n not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    x, w = _LEGGAUSS_CACHE[n]
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


def jitter_quadrature_nodes(mean: float, pair_sigma: float,
                            span_sigmas: float = 8.0, nodes: int = 24):
    """Normal-pdf-weighted Gauss-Legendre nodes for the jitter average.

    The visibility integrand has a kink at offset 0 (envelope overlap is
    a function of |offset|), so the quadrature panels are split there.
    """
    lo, hi = mean - span_sigmas * pair_sigma, mean + span_sigmas * pair_sigma
    cuts = sorted({lo, hi, min(max(0.0, lo), hi)})
    xs, ws = [], []
    norm = 1.0 / (pair_sigma * math.sqrt(2.0 * math.pi))
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        x, w = _gauss_legendre_panel(a, b, nodes)
        xs.append(x)
        ws.append(w * norm * np.exp(-0.5 * ((x - mean) / pair_sigma) ** 2))
    return np.concatenate(xs), np.concatenate(ws)


def averaged_visibility(visibility_batch_fn, mean: float, pair_sigma: float,
                        span_sigmas: float = 8.0, nodes: int = 24) -> float:
    """E[v(x)] for x ~ Normal(mean, pair_sigma^2), v evaluated in batch."""
    if pair_sigma == 0.0:
        return float(visibility_batch_fn(np.array([mean]))[0])
    x, w = jitter_quadrature_nodes(mean, pair_sigma, span_sigmas, nodes)
    return float(np.dot(w, visibility_batch_fn(x)))


def jitter_averaged_areas(template: PhotonPacket, deltas, pair_sigma: float,
                          dephasing_rate: float,
                          quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Central-peak areas 0.5 (1 - E[V]) for many mismatches at once.

    Shares a single batched visibility evaluation across all deltas and
    their jitter quadrature nodes.
    """
    deltas = np.asarray(deltas, dtype=float)
    if pair_sigma == 0.0:
        v = visibility_batch(template, deltas, dephasing_rate, quad)
        return 0.5 * (1.0 - np.clip(v, 0.0, 1.0))
    node_x, node_w, spans = [], [], []
    for d in deltas:
        x, w = jitter_quadrature_nodes(float(d), pair_sigma)
        node_x.append(x)
        node_w.append(w)
        spans.append(len(x))
    v = visibility_batch(template, np.concatenate(node_x), dephasing_rate, quad)
    out = np.empty(len(deltas))
    pos = 0
    for i, (w, m) in enumerate(zip(node_w, spans)):
        out[i] = 0.5 * (1.0 - min(max(float(np.dot(w, v[pos:pos + m])), 0.0), 1.0))
        pos += m
    return out


def dip_curve(
    delta_list,
    emitter: EmitterParams,
    gate: GateWindow,
    jitter: JitterSpec,
    chirp_on: bool = False,
    quad: QuadratureSpec = DEFAULT_QUAD,
    *,
    waveform: DriveWaveform | None = None,
    packet_decay: float | None = None,
    dephasing_rate: float | None = None,
    mode: Mode = Mode.PARALLEL,
) -> DipCurve:
    """Central-peak area vs period mismatch.

    For each mismatch delta, the pair offset is Normal(delta, 2 sigma^2)
    (each photon's emission time jitters independently with std sigma) and

        central_area(delta) = 0.5 * (1 - E[pair_visibility(offset)]).

    packet_decay and dephasing_rate override the emitter-derived values;
    by default the packet is the radiative-lifetime exponential truncated
    to the gate and the dephasing rate is the emitter's.  chirp_on adds
    the Stark chirp across the gate (requires the drive waveform).
    """
    if chirp_on and waveform is None:
        raise ValidationError("chirp_on requires the drive waveform")
    decay = emitter.t1_radiative if packet_decay is None else packet_decay
    gamma = emitter.dephasing_rate if dephasing_rate is None else dephasing_rate
    template = gated_packet(
        gate,
        decay,
        center_time=0.0,
        waveform=waveform if chirp_on else None,
        params=emitter if chirp_on else None,
    )
    pair_sigma = math.sqrt(2.0) * jitter.sigma_std
    deltas = np.asarray(list(delta_list), dtype=float)
    if mode is Mode.ORTHOGONAL:
        areas = np.full(len(deltas), 0.5)
    else:
        areas = jitter_averaged_areas(template, deltas, pair_sigma, gamma, quad)
    points = [(float(d), float(a)) for d, a in zip(deltas, areas)]
    snapshot = {
        "t1_radiative": emitter.t1_radiative,
        "packet_decay": decay,
        "dephasing_rate": gamma,
        "gate_duration": gate.duration,
        "jitter_sigma": jitter.sigma,
        "jitter_interpretation": jitter.interpretation.value,
        "chirp_on": bool(chirp_on),
        "mode": mode.value,
    }
    return DipCurve(points=tuple(points), params=snapshot)


# ---------------------------------------------------------------------------
# closed-form scalar relations


def fixed_bias_visibility(t1: float, t2: float) -> float:
    """Interference visibility without time gating: T2 / (2 T1)."""
    if t1 <= 0 or t2 <= 0:
        raise ValidationError("lifetimes must be positive")
    if t2 > 2.0 * t1:
        raise ValidationError("coherence time above the radiative limit 2*T1")
    return t2 / (2.0 * t1)


def dephasing_time(t1: float, t2: float) -> float:
    """Pure dephasing time from 1/T2 = 1/(2 T1) + 1/T2*.

    Returns inf at the radiative limit t2 == 2 t1.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValidationError("lifetimes must be positive")
    if t2 > 2.0 * t1:
        raise ValidationError("coherence time above the radiative limit 2*T1")
    rate = 1.0 / t2 - 0.5 / t1
    if rate <= 0.0:
        return math.inf
    return 1.0 / rate


def entanglement_criterion(visibility: float, g2_zero: float) -> bool:
    """Polarization-entanglement feasibility test: visibility > 2 g2(0), strict."""
    if visibility < 0 or g2_zero < 0:
        raise ValidationError("visibility and g2(0) must be nonnegative")
    return visibility > 2.0 * g2_zero
