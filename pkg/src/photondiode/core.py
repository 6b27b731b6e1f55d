"""Domain model of the gated single-photon diode.

Units are fixed throughout the package: times in picoseconds, voltages in
volts, energies in eV (energy *shifts* in meV where stated), rates in 1/ps.

The module defines the emitter, the periodic drive waveform, the spectral
collection filter and the quantities derived from them: the within-cycle
collection gate (the interval during which the Stark-shifted emission line
sits inside the filter), the deterministic chirp phase accumulated across
the gate, and the single-photon wave packet used by both the quadrature
engine and the Monte Carlo simulator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# hbar in meV.ps, fixing the conversion between energy detuning and
# angular frequency used everywhere in the package.
HBAR_MEV_PS = 0.6582119569


class ValidationError(ValueError):
    """A domain object or configuration failed its invariants."""


class EmptyGateError(ValidationError):
    """No time within the drive cycle puts the emission line in the filter."""


class MultipleGatesError(ValidationError):
    """The filter opens more than one disjoint collection window per cycle."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to converge.

    Carries the best estimate and the residual error estimate so callers
    can decide whether to accept the value anyway.
    """

    def __init__(self, message: str, estimate: float, residual: float):
        super().__init__(f"{message} (estimate={estimate!r}, residual={residual!r})")
        self.estimate = estimate
        self.residual = residual


class Polarization(enum.Enum):
    H = "H"
    V = "V"


class JitterInterpretation(enum.Enum):
    """How the quoted Gaussian 'width' maps onto a standard deviation."""

    STD_DEV = "STD_DEV"
    FWHM = "FWHM"
    ONE_OVER_E_HALF_WIDTH = "ONE_OVER_E_HALF_WIDTH"


_FWHM_FACTOR = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class EmitterParams:
    """Physics of the photon source.

    t1_radiative:      radiative lifetime T1 (ps)
    dephasing_rate:    pure dephasing rate (1/ps); the phase-diffusion
                       rate of the emitted field
    center_energy:     emission energy at the reference bias (eV)
    stark_coefficient: linear Stark slope (meV/V)
    reference_voltage: bias at which the line sits at center_energy (V)
    """

    t1_radiative: float
    dephasing_rate: float
    center_energy: float
    stark_coefficient: float
    reference_voltage: float

    def __post_init__(self):
        if self.t1_radiative <= 0:
            raise ValidationError("t1_radiative must be positive")
        if self.dephasing_rate < 0:
            raise ValidationError("dephasing_rate must be nonnegative")
        if self.center_energy <= 0:
            raise ValidationError("center_energy must be positive")

    @property
    def coherence_time(self) -> float:
        """Field coherence time T2, with 1/T2 = 1/(2 T1) + dephasing_rate."""
        return 1.0 / (0.5 / self.t1_radiative + self.dephasing_rate)


@dataclass(frozen=True)
class DriveWaveform:
    """Periodic piecewise-constant voltage sequence.

    segments is an ordered tuple of (voltage V, duration ps); durations
    must sum to the period.
    """

    period: float
    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.period <= 0:
            raise ValidationError("waveform period must be positive")
        if not self.segments:
            raise ValidationError("waveform needs at least one segment")
        for _, dur in self.segments:
            if dur <= 0:
                raise ValidationError("segment durations must be positive")
        total = math.fsum(d for _, d in self.segments)
        if abs(total - self.period) > 1e-9 * self.period:
            raise ValidationError(
                f"segment durations sum to {total}, expected period {self.period}"
            )

    @property
    def boundaries(self) -> np.ndarray:
        """Segment edge times within one cycle, starting at 0."""
        return np.concatenate([[0.0], np.cumsum([d for _, d in self.segments])])

    def voltage_at(self, t) -> np.ndarray:
        """Voltage at time t (ps), periodic in the drive period."""
        t = np.asarray(t, dtype=float)
        tc = np.mod(t, self.period)
        edges = self.boundaries
        idx = np.clip(np.searchsorted(edges, tc, side="right") - 1, 0, len(self.segments) - 1)
        volts = np.array([v for v, _ in self.segments])
        return volts[idx]


def build_waveform(segments, period: float) -> DriveWaveform:
    """Validate and construct a drive waveform from (voltage, duration) pairs."""
    return DriveWaveform(period=float(period), segments=tuple((float(v), float(d)) for v, d in segments))


@dataclass(frozen=True)
class FilterWindow:
    """Ideal top-hat spectral collection filter."""

    center_energy: float
    full_width: float
    polarization: Polarization = Polarization.H

    def __post_init__(self):
        if self.full_width <= 0:
            raise ValidationError("filter full_width must be positive")

    def contains(self, energy) -> np.ndarray:
        half = 0.5 * self.full_width
        e = np.asarray(energy, dtype=float)
        return (e >= self.center_energy - half) & (e <= self.center_energy + half)


@dataclass(frozen=True)
class GateWindow:
    """Within-cycle interval [t_on, t_off) during which photons are collected."""

    t_on: float
    t_off: float

    def __post_init__(self):
        if not (0 <= self.t_on < self.t_off):
            raise ValidationError("gate requires 0 <= t_on < t_off")

    @property
    def duration(self) -> float:
        return self.t_off - self.t_on


@dataclass(frozen=True)
class JitterSpec:
    """Gaussian spread of the wave-packet emission time.

    sigma is the quoted width; interpretation fixes the convention that
    converts it into a standard deviation.  The source quotes a bare
    'width', so the convention is left selectable.
    """

    sigma: float
    interpretation: JitterInterpretation = JitterInterpretation.ONE_OVER_E_HALF_WIDTH

    def __post_init__(self):
        if self.sigma < 0:
            raise ValidationError("jitter sigma must be nonnegative")

    @property
    def sigma_std(self) -> float:
        """Standard deviation implied by (sigma, interpretation)."""
        if self.interpretation is JitterInterpretation.STD_DEV:
            return self.sigma
        if self.interpretation is JitterInterpretation.FWHM:
            return self.sigma / _FWHM_FACTOR
        # 1/e half width w of exp(-t^2 / (2 s^2)) is w = s * sqrt(2)
        return self.sigma / math.sqrt(2.0)


def stark_energy(voltage, params: EmitterParams) -> np.ndarray | float:
    """Emission energy (eV) under the linear Stark map.

    E(V) = center_energy + stark_coefficient * (V - reference_voltage),
    with the coefficient in meV/V.
    """
    v = np.asarray(voltage, dtype=float)
    e = params.center_energy + 1e-3 * params.stark_coefficient * (v - params.reference_voltage)
    return float(e) if np.isscalar(voltage) or e.ndim == 0 else e


def collection_gate(waveform: DriveWaveform, params: EmitterParams, filt: FilterWindow) -> GateWindow:
    """Find the unique within-cycle interval where the line is in the filter.

    The Stark map is piecewise constant in time, so candidate intervals
    are unions of whole segments and the gate boundaries always coincide
    with segment edges.  More than one disjoint in-band interval per cycle
    is rejected; wrap-around across the period boundary is not merged.
    """
    volts = np.array([v for v, _ in waveform.segments])
    in_band = filt.contains(stark_energy(volts, params))
    if not in_band.any():
        raise EmptyGateError("no segment puts the emission line inside the filter")
    edges = waveform.boundaries
    # group contiguous in-band segments
    intervals = []
    i = 0
    n = len(in_band)
    while i < n:
        if in_band[i]:
            j = i
            while j + 1 < n and in_band[j + 1]:
                j += 1
            intervals.append((edges[i], edges[j + 1]))
            i = j + 1
        else:
            i += 1
    if len(intervals) > 1:
        raise MultipleGatesError(
            f"filter opens {len(intervals)} disjoint collection windows per cycle"
        )
    t_on, t_off = intervals[0]
    return GateWindow(t_on=float(t_on), t_off=float(t_off))


@dataclass(frozen=True)
class PhaseSamples:
    """Deterministic chirp phase sampled on a uniform grid (times in ps, phase in rad)."""

    times: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.phase.shape or self.times.ndim != 1:
            raise ValidationError("times and phase must be matching 1-d arrays")
        if len(self.times) >= 2 and not np.all(np.diff(self.times) > 0):
            raise ValidationError("phase sample grid must be strictly increasing")


def chirp_phase(
    gate: GateWindow,
    waveform: DriveWaveform,
    params: EmitterParams,
    n_samples: int = 1025,
) -> PhaseSamples:
    """Integrated Stark phase across the gate.

    phase(t) = (1/hbar) * integral over [t_on, t] of the detuning
    E(V(t')) - center_energy, detuning in meV, t in ps, phase in rad.
    Exact for the piecewise-constant waveform: the cumulative integral is
    accumulated analytically over segment pieces and then sampled on the
    uniform grid.
    """
    if n_samples < 2:
        raise ValidationError("n_samples must be at least 2")
    times = np.linspace(gate.t_on, gate.t_off, n_samples)
    edges = waveform.boundaries
    # breakpoints of V(t) within the gate, plus the gate ends
    inner = edges[(edges > gate.t_on) & (edges < gate.t_off)]
    knots = np.concatenate([[gate.t_on], inner, [gate.t_off]])
    det_mev = 1e3 * (np.asarray(stark_energy(waveform.voltage_at(0.5 * (knots[:-1] + knots[1:])), params)) - params.center_energy)
    piece = det_mev * np.diff(knots) / HBAR_MEV_PS
    phi_knots = np.concatenate([[0.0], np.cumsum(piece)])
    phase = np.interp(times, knots, phi_knots)
    return PhaseSamples(times=times, phase=phase)


class EnvelopeKind(enum.Enum):
    EXPONENTIAL = "EXPONENTIAL"
    GATED_EXPONENTIAL = "GATED_EXPONENTIAL"


@dataclass(frozen=True)
class PhotonPacket:
    """One photon's temporal amplitude specification.

    The squared envelope (intensity profile) is an exponential with the
    given decay constant, either one-sided (EXPONENTIAL) or truncated to a
    window of the gate's duration (GATED_EXPONENTIAL), and is normalized
    to unit integral.  center_time anchors the rising edge in lab time;
    shifting center_time translates the whole packet rigidly, chirp
    included.  chirp, when present, is the deterministic phase profile in
    packet-local time (PhaseSamples over [0, duration]).
    """

    center_time: float
    kind: EnvelopeKind
    decay: float
    gate_duration: float | None = None
    chirp: PhaseSamples | None = None
    polarization: Polarization = Polarization.H

    def __post_init__(self):
        if self.decay <= 0:
            raise ValidationError("envelope decay must be positive")
        if self.kind is EnvelopeKind.GATED_EXPONENTIAL:
            if self.gate_duration is None or self.gate_duration <= 0:
                raise ValidationError("gated envelope needs a positive gate duration")
        if self.chirp is not None and len(self.chirp.times) < 2:
            raise ValidationError("chirp needs at least two samples")

    @property
    def duration(self) -> float:
        """Support length of the squared envelope (inf for ungated)."""
        if self.kind is EnvelopeKind.EXPONENTIAL:
            return math.inf
        return float(self.gate_duration)

    @property
    def norm(self) -> float:
        """Normalization of the squared envelope: integral of exp(-u/decay) over support."""
        if self.kind is EnvelopeKind.EXPONENTIAL:
            return self.decay
        return self.decay * (1.0 - math.exp(-self.gate_duration / self.decay))

    def intensity(self, t) -> np.ndarray:
        """Normalized squared envelope at lab time t."""
        u = np.asarray(t, dtype=float) - self.center_time
        out = np.where(u >= 0, np.exp(-np.maximum(u, 0.0) / self.decay) / self.norm, 0.0)
        if self.kind is EnvelopeKind.GATED_EXPONENTIAL:
            out = np.where(u <= self.gate_duration, out, 0.0)
        return out

    def phase(self, t) -> np.ndarray:
        """Deterministic (chirp) phase at lab time t, zero when no chirp is set."""
        u = np.asarray(t, dtype=float) - self.center_time
        if self.chirp is None:
            return np.zeros_like(u)
        return np.interp(u, self.chirp.times, self.chirp.phase)

    def sample_emission_time(self, u) -> np.ndarray:
        """Inverse CDF of the squared envelope, packet-local; u uniform in [0,1)."""
        u = np.asarray(u, dtype=float)
        if self.kind is EnvelopeKind.EXPONENTIAL:
            return -self.decay * np.log1p(-u)
        frac = 1.0 - math.exp(-self.gate_duration / self.decay)
        return -self.decay * np.log1p(-u * frac)

    def shifted(self, dt: float) -> "PhotonPacket":
        """Rigid translation of the packet (envelope and chirp) by dt."""
        return PhotonPacket(
            center_time=self.center_time + dt,
            kind=self.kind,
            decay=self.decay,
            gate_duration=self.gate_duration,
            chirp=self.chirp,
            polarization=self.polarization,
        )

    def quadrature_norm_check(self, n: int = 200001) -> float:
        """Numerical integral of the squared envelope (should be 1)."""
        if self.kind is EnvelopeKind.EXPONENTIAL:
            hi = self.center_time + 50.0 * self.decay
        else:
            hi = self.center_time + self.gate_duration
        t = np.linspace(self.center_time, hi, n)
        y = self.intensity(t)
        # Simpson needs an even interval count
        return float(_simpson(y, t[1] - t[0]))


def _simpson(y: np.ndarray, h: float) -> float:
    """Composite Simpson rule on a uniform grid (odd number of samples)."""
    n = len(y)
    if n < 3:
        return float(np.trapezoid(y, dx=h))
    if n % 2 == 0:
        # trapezoid for the last interval
        return _simpson(y[:-1], h) + 0.5 * h * (y[-2] + y[-1])
    s = y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2])
    return float(s * h / 3.0)


def gated_packet(
    gate: GateWindow,
    decay: float,
    center_time: float = 0.0,
    waveform: DriveWaveform | None = None,
    params: EmitterParams | None = None,
    chirp_samples: int = 1025,
    polarization: Polarization = Polarization.H,
) -> PhotonPacket:
    """Photon packet for one drive cycle: exponential slice across the gate.

    When waveform and params are given, the packet carries the Stark chirp
    phase across the gate (sampled on a uniform packet-local grid).
    """
    chirp = None
    if waveform is not None and params is not None:
        ph = chirp_phase(gate, waveform, params, n_samples=chirp_samples)
        chirp = PhaseSamples(times=ph.times - gate.t_on, phase=ph.phase)
    return PhotonPacket(
        center_time=center_time,
        kind=EnvelopeKind.GATED_EXPONENTIAL,
        decay=decay,
        gate_duration=gate.duration,
        chirp=chirp,
        polarization=polarization,
    )


def exponential_packet(decay: float, center_time: float = 0.0,
                       polarization: Polarization = Polarization.H) -> PhotonPacket:
    """Ungated one-sided exponential packet (Lorentzian spectrum)."""
    return PhotonPacket(center_time=center_time, kind=EnvelopeKind.EXPONENTIAL,
                        decay=decay, polarization=polarization)
