"""Peak-area analysis of correlation histograms.

Correlation histograms from the pulsed source consist of peaks at integer
multiples of the drive period.  Peak areas are integrated in windows of
half-width w around n * period for n in [-6, 6], the accidental baseline
is estimated from the bins between windows, and areas are normalized so
the mean of the ten outer peaks (|n| in 2..6) is exactly one.  g2(0) and
the interference visibility then read directly off the central peak.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .core import ValidationError
from .montecarlo import CorrelationHistogram

PEAK_RANGE = range(-6, 7)
_OUTER = tuple(n for n in PEAK_RANGE if abs(n) >= 2)


class DegenerateHistogramError(ValidationError):
    """Peak normalization impossible (outer-peak mean not positive)."""


class Visibility(NamedTuple):
    value: float
    clamped: bool


@dataclass(frozen=True)
class PeakAreaReport:
    """Normalized peak areas of one correlation histogram.

    areas maps peak index n to area normalized by the ten-outer-peak mean;
    raw_counts holds the windowed counts before baseline handling and
    normalization; baseline_rate is the estimated accidental level in
    counts per bin; window_bins the number of bins integrated per peak.
    """

    period: float
    window_half_width: float
    areas: dict[int, float]
    raw_counts: dict[int, float]
    baseline_rate: float
    window_bins: dict[int, int]
    baseline_corrected: bool = False

    def to_json(self, path=None) -> str:
        payload = {
            "period": self.period,
            "window_half_width": self.window_half_width,
            "baseline_rate": self.baseline_rate,
            "baseline_corrected": self.baseline_corrected,
            "areas": {str(n): self.areas[n] for n in sorted(self.areas)},
            "raw_counts": {str(n): self.raw_counts[n] for n in sorted(self.raw_counts)},
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text

    @staticmethod
    def from_json(path) -> "PeakAreaReport":
        with open(path) as f:
            p = json.load(f)
        return PeakAreaReport(
            period=p["period"],
            window_half_width=p["window_half_width"],
            areas={int(k): v for k, v in p["areas"].items()},
            raw_counts={int(k): v for k, v in p["raw_counts"].items()},
            baseline_rate=p["baseline_rate"],
            window_bins={},
            baseline_corrected=p.get("baseline_corrected", False),
        )

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("peak_index,area,raw_counts\n")
            for n in sorted(self.areas):
                f.write(f"{n},{self.areas[n]:.12g},{self.raw_counts[n]:.12g}\n")


def _normalize(raw: dict[int, float]) -> dict[int, float]:
    outer = np.mean([raw[n] for n in _OUTER])
    if outer <= 0:
        raise DegenerateHistogramError("outer-peak mean is not positive")
    return {n: raw[n] / outer for n in raw}


def peak_areas(hist: CorrelationHistogram, period: float,
               window_half_width: float | None = None) -> PeakAreaReport:
    """Integrate peak windows and normalize to the ten-outer-peak mean.

    Bins belong to the window of peak n when their centers fall within
    n*period +/- window_half_width (default period/4).  The baseline is
    the median count of all bins outside every window.
    """
    if window_half_width is None:
        window_half_width = period / 4.0
    if not (0 < window_half_width < period / 2.0):
        raise ValidationError("window_half_width must be in (0, period/2)")
    centers = hist.bin_centers
    span_needed = 6.5 * period
    if centers[0] > -span_needed or centers[-1] < span_needed:
        raise ValidationError(
            f"histogram span [{centers[0]}, {centers[-1]}] ps does not cover "
            f"+/-{span_needed} ps"
        )
    counts = np.asarray(hist.counts, dtype=float)
    raw, nbins = {}, {}
    in_any = np.zeros(len(centers), dtype=bool)
    for n in PEAK_RANGE:
        mask = np.abs(centers - n * period) <= window_half_width
        raw[n] = float(counts[mask].sum())
        nbins[n] = int(mask.sum())
        in_any |= mask
    baseline = float(np.median(counts[~in_any])) if (~in_any).any() else 0.0
    return PeakAreaReport(
        period=period,
        window_half_width=window_half_width,
        areas=_normalize(raw),
        raw_counts=raw,
        baseline_rate=baseline,
        window_bins=nbins,
    )


def g2_zero(report: PeakAreaReport) -> float:
    """Normalized second-order correlation at zero delay: the central area."""
    return report.areas[0]


def visibility_from_areas(report: PeakAreaReport) -> Visibility:
    """Interference visibility 1 - areas[0]/0.5, clamped into [0, 1].

    The 0.5 reference is the distinguishable-photon central area; clamping
    (possible under statistical fluctuation) is flagged, not silent.
    """
    v = 1.0 - report.areas[0] / 0.5
    clamped = not (0.0 <= v <= 1.0)
    return Visibility(value=min(max(v, 0.0), 1.0), clamped=clamped)


def correct_dark_counts(report: PeakAreaReport) -> PeakAreaReport:
    """Subtract the accidental baseline from every peak and renormalize."""
    if not report.window_bins:
        raise ValidationError("report lacks window geometry; rerun peak_areas")
    corrected = {
        n: report.raw_counts[n] - report.baseline_rate * report.window_bins[n]
        for n in report.raw_counts
    }
    outer = np.mean([corrected[n] for n in _OUTER])
    if outer <= 0:
        raise DegenerateHistogramError(
            "baseline exceeds the outer peaks; cannot correct dark counts"
        )
    return replace(
        report,
        areas=_normalize(corrected),
        raw_counts=corrected,
        baseline_corrected=True,
    )
