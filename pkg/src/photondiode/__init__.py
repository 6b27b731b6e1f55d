"""Simulator and analysis toolkit for an electrically gated single-photon
diode performing two-photon interference: drive-waveform gating, Lorentzian
wave packets with phase diffusion and emission-time jitter, Mach-Zehnder
coincidence histograms, peak-area analysis and dip fitting.
"""

__version__ = "0.1.0"

from .analytic import (
    DipCurve,
    Mode,
    PairConfig,
    QuadratureSpec,
    coincidence_probability,
    dephasing_time,
    dip_curve,
    entanglement_criterion,
    fixed_bias_visibility,
    interference_integral,
    joint_density,
    pair_visibility,
    visibility_batch,
)
from .analysis import (
    DegenerateHistogramError,
    PeakAreaReport,
    Visibility,
    correct_dark_counts,
    g2_zero,
    peak_areas,
    visibility_from_areas,
)
from .config import RunConfig, load_config, parse_config
from .core import (
    HBAR_MEV_PS,
    DriveWaveform,
    EmitterParams,
    EmptyGateError,
    EnvelopeKind,
    FilterWindow,
    GateWindow,
    JitterInterpretation,
    JitterSpec,
    MultipleGatesError,
    PhotonPacket,
    Polarization,
    QuadratureError,
    ValidationError,
    build_waveform,
    chirp_phase,
    collection_gate,
    exponential_packet,
    gated_packet,
    stark_energy,
)
from .fit import DipModel, FitResult, fit_dip
from .montecarlo import (
    CorrelationHistogram,
    DetectorSim,
    InterferometerSim,
    SourceSim,
    sample_phase_trajectory,
    simulate_hbt,
    simulate_hom,
)

__all__ = [name for name in dir() if not name.startswith("_")]
