"""JSON run configuration.

Units are fixed by the schema and never inferred: times in ps, voltages
in V, energies in eV, Stark slope in meV/V, rates in counts/ps.  Keys
mirror the field names of the domain types; see README for the schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .analytic import Mode
from .core import (
    DriveWaveform,
    EmitterParams,
    FilterWindow,
    GateWindow,
    JitterInterpretation,
    JitterSpec,
    Polarization,
    ValidationError,
    build_waveform,
    collection_gate,
)
from .montecarlo import DetectorSim, InterferometerSim, SourceSim


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterParams
    waveform: DriveWaveform
    filter: FilterWindow
    jitter: JitterSpec
    gate: GateWindow
    source: SourceSim
    interferometer: InterferometerSim
    detector: DetectorSim
    cycles: int
    seed: int
    workers: int
    window_half_width: float | None
    output_dir: str | None
    raw: dict


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ValidationError(f"missing key {key!r} in config section {where!r}")
    return section[key]


def parse_config(doc: dict) -> RunConfig:
    try:
        em = doc["emitter"]
        emitter = EmitterParams(
            t1_radiative=float(_require(em, "t1_radiative", "emitter")),
            dephasing_rate=float(_require(em, "dephasing_rate", "emitter")),
            center_energy=float(_require(em, "center_energy", "emitter")),
            stark_coefficient=float(_require(em, "stark_coefficient", "emitter")),
            reference_voltage=float(_require(em, "reference_voltage", "emitter")),
        )
        wf = doc["waveform"]
        waveform = build_waveform(_require(wf, "segments", "waveform"),
                                  float(_require(wf, "period", "waveform")))
        fl = doc["filter"]
        filt = FilterWindow(
            center_energy=float(_require(fl, "center_energy", "filter")),
            full_width=float(_require(fl, "full_width", "filter")),
            polarization=Polarization(fl.get("polarization", "H")),
        )
        ji = doc["jitter"]
        jitter = JitterSpec(
            sigma=float(_require(ji, "sigma", "jitter")),
            interpretation=JitterInterpretation(
                ji.get("interpretation", "ONE_OVER_E_HALF_WIDTH")),
        )
    except KeyError as exc:
        raise ValidationError(f"missing config section {exc.args[0]!r}") from exc

    gate = collection_gate(waveform, emitter, filt)

    pk = doc.get("packet", {})
    so = doc.get("source", {})
    source = SourceSim(
        emitter=emitter,
        waveform=waveform,
        gate=gate,
        jitter=jitter,
        emission_probability=float(so.get("emission_probability", 1.0)),
        background_mean=float(so.get("background_mean", 0.0)),
        packet_decay=(float(pk["decay"]) if "decay" in pk else None),
        packet_dephasing=(float(pk["dephasing_rate"]) if "dephasing_rate" in pk else None),
    )
    mz = doc.get("interferometer", {})
    interferometer = InterferometerSim(
        delay=float(mz.get("delay", waveform.period)),
        split_a=float(mz.get("split_a", 0.5)),
        split_b=float(mz.get("split_b", 0.5)),
        mode=Mode(mz.get("mode", "PARALLEL")),
    )
    de = doc.get("detector", {})
    detector = DetectorSim(
        efficiency=float(de.get("efficiency", 1.0)),
        dark_rate=float(de.get("dark_rate", 0.0)),
        timing_sigma=float(de.get("timing_sigma", 200.0)),
        bin_width=float(de.get("bin_width", 64.0)),
        span=(float(de["span"]) if "span" in de else None),
    )
    si = doc.get("simulation", {})
    an = doc.get("analysis", {})
    ou = doc.get("output", {})
    return RunConfig(
        emitter=emitter,
        waveform=waveform,
        filter=filt,
        jitter=jitter,
        gate=gate,
        source=source,
        interferometer=interferometer,
        detector=detector,
        cycles=int(si.get("cycles", 200_000)),
        seed=int(si.get("seed", 1)),
        workers=int(si.get("workers", 1)),
        window_half_width=(float(an["window_half_width"]) if "window_half_width" in an else None),
        output_dir=ou.get("directory"),
        raw=doc,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config document must be a JSON object")
    return parse_config(doc)
